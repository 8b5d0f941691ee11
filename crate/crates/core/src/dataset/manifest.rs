use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats::ScoreVector;

pub(crate) const MANIFEST_HEADER: [&str; 4] = ["id", "path", "score", "source"];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub score: f64,
    pub source: String,
}

/// A named list of scored stimuli. Ids are unique.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    name: String,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn scores(&self) -> ScoreVector {
        ScoreVector::new(self.ids(), self.entries.iter().map(|e| e.score).collect())
            .expect("manifest ids are unique")
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub(crate) fn map_scores(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            name: self.name.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| ManifestEntry {
                    score: f(e.score),
                    ..e.clone()
                })
                .collect(),
        }
    }

    /// Keeps the entries whose ids are listed, in manifest order.
    pub fn subset(&self, ids: &[String]) -> Self {
        let keep: HashSet<&str> = ids.iter().map(String::as_str).collect();
        Self {
            name: self.name.clone(),
            entries: self.entries.iter().filter(|e| keep.contains(e.id.as_str())).cloned().collect(),
        }
    }

    /// Parses the comma-separated form (`id,path,score,source`, `#`
    /// comments). Relative paths are resolved against `base_dir`.
    pub fn parse(name: impl Into<String>, text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
        if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(Error::Parse {
                line: header.position().map_or(1, |p| p.line()),
                message: format!("expected header `{}`", MANIFEST_HEADER.join(",")),
            });
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(&e, 0))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 4 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 4 fields, found {}", record.len()),
                });
            }
            let id = record[0].to_string();
            if id.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty id".into(),
                });
            }
            let score: f64 = record[2]
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("score `{}` is not a finite decimal number", &record[2]),
                })?;
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            let raw = PathBuf::from(&record[1]);
            let path = match base_dir {
                Some(dir) if raw.is_relative() => dir.join(raw),
                _ => raw,
            };
            entries.push(ManifestEntry {
                id,
                path,
                score,
                source: record[3].to_string(),
            });
        }
        Ok(Self {
            name: name.into(),
            entries,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER).expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                e.id.as_str(),
                &e.path.to_string_lossy(),
                &format_score(e.score),
                e.source.as_str(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 input")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

// Shortest representation that parses back to the same value.
fn format_score(v: f64) -> String {
    format!("{v:?}")
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Loads a manifest; its name is the file stem. In strict mode every image
/// path must exist.
pub fn load_manifest(path: impl AsRef<Path>, strict: bool) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(|| "manifest".into(), |s| s.to_string_lossy().into_owned());
    let m = DatasetManifest::parse(name, &text, path.parent())?;
    if strict {
        if let Some(e) = m.entries.iter().find(|e| !e.path.exists()) {
            return Err(Error::MissingImage(e.path.clone()));
        }
    }
    Ok(m)
}

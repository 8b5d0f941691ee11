use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::DatasetManifest;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Balanced assignment of ids to `fold_count` non-overlapping pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub fold_count: usize,
    /// (id, fold) in manifest order.
    pub assignments: Vec<(String, usize)>,
    pub seed: Option<u64>,
}

/// Ids playing each role in one cross-validation iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldRoles {
    pub test: Vec<String>,
    pub validation: Vec<String>,
    pub train: Vec<String>,
}

pub fn kfold_split(m: &DatasetManifest, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 3 {
        return Err(Error::contract(format!("k-fold needs k >= 3 (test, validation, training), got {k}")));
    }
    if m.len() < k {
        return Err(Error::contract(format!("{} entries cannot fill {k} folds", m.len())));
    }
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; m.len()];
    for (pos, &idx) in order.iter().enumerate() {
        fold_of[idx] = pos % k;
    }
    Ok(FoldPlan {
        fold_count: k,
        assignments: m.entries().iter().zip(fold_of).map(|(e, f)| (e.id.clone(), f)).collect(),
        seed: Some(seed),
    })
}

impl FoldPlan {
    pub fn fold(&self, f: usize) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, k)| *k == f)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for (_, f) in &self.assignments {
            sizes[*f] += 1;
        }
        sizes
    }

    /// Iteration `itr`: fold `itr` is the test piece, fold `itr + 1 (mod k)`
    /// validates, the rest train.
    pub fn roles(&self, itr: usize) -> Result<FoldRoles> {
        if itr >= self.fold_count {
            return Err(Error::contract(format!("iteration {itr} out of range for {} folds", self.fold_count)));
        }
        let val = (itr + 1) % self.fold_count;
        let mut roles = FoldRoles {
            test: Vec::new(),
            validation: Vec::new(),
            train: Vec::new(),
        };
        for (id, f) in &self.assignments {
            let bucket = if *f == itr {
                &mut roles.test
            } else if *f == val {
                &mut roles.validation
            } else {
                &mut roles.train
            };
            bucket.push(id.clone());
        }
        Ok(roles)
    }

    /// `id,fold` rows with a `# seed=` comment when the seed is known.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "fold"]).expect("in-memory write");
        for (id, f) in &self.assignments {
            w.write_record([id.as_str(), &f.to_string()]).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let seed = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix("# seed="))
            .find_map(|s| s.trim().parse().ok());
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != ["id", "fold"] {
            return Err(Error::Parse {
                line: header.position().map_or(1, |p| p.line()),
                message: "expected header `id,fold`".into(),
            });
        }
        let mut assignments = Vec::new();
        let mut seen = HashSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let fold: usize = record[1].parse().map_err(|_| Error::Parse {
                line,
                message: format!("fold `{}` is not a non-negative integer", &record[1]),
            })?;
            if !seen.insert(record[0].to_string()) {
                return Err(Error::DuplicateId(record[0].to_string()));
            }
            assignments.push((record[0].to_string(), fold));
        }
        let fold_count = assignments.iter().map(|(_, f)| f + 1).max().unwrap_or(0);
        let plan = FoldPlan {
            fold_count,
            assignments,
            seed,
        };
        let sizes = plan.fold_sizes();
        let (lo, hi) = (sizes.iter().min().copied().unwrap_or(0), sizes.iter().max().copied().unwrap_or(0));
        if fold_count < 3 || lo == 0 || hi - lo > 1 {
            return Err(Error::Parse {
                line: 0,
                message: format!("fold sizes {sizes:?} are not a balanced partition into >= 3 folds"),
            });
        }
        Ok(plan)
    }
}

/// Single train/validation/test partition by ratio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle cut by `ratios` = (train, validation, test); the ratios
/// are normalized, the training piece absorbs rounding.
pub fn ratio_split(m: &DatasetManifest, ratios: (f64, f64, f64), seed: u64) -> Result<RatioSplit> {
    let (tr, va, te) = ratios;
    let total = tr + va + te;
    if [tr, va, te].iter().any(|r| !(*r >= 0.0)) || !(total > 0.0) {
        return Err(Error::contract(format!("invalid split ratios {ratios:?}")));
    }
    let mut ids = m.ids();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len();
    let n_test = ((te / total) * n as f64).round() as usize;
    let n_val = (((va / total) * n as f64).round() as usize).min(n - n_test);
    let test = ids.split_off(n - n_test);
    let validation = ids.split_off(ids.len() - n_val);
    Ok(RatioSplit {
        train: ids,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ManifestEntry;

    fn manifest(n: usize) -> DatasetManifest {
        let entries = (0..n)
            .map(|i| ManifestEntry {
                id: format!("img{i:03}"),
                path: format!("img{i:03}.png").into(),
                score: i as f64,
                source: "synthetic".into(),
            })
            .collect();
        DatasetManifest::new("synthetic", entries).unwrap()
    }

    #[test]
    fn ten_folds_of_eighteen() {
        let plan = kfold_split(&manifest(180), 10, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![18; 10]);
        let plan = kfold_split(&manifest(10), 10, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![1; 10]);
        assert_eq!(kfold_split(&manifest(30), 10, 5).unwrap(), kfold_split(&manifest(30), 10, 5).unwrap());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kfold_split(&manifest(30), 2, 0).unwrap_err().is_contract_violation());
        assert!(kfold_split(&manifest(5), 10, 0).unwrap_err().is_contract_violation());
    }

    #[test]
    fn every_id_is_tested_once() {
        let m = manifest(47);
        let plan = kfold_split(&m, 10, 3).unwrap();
        let sizes = plan.fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut tested = Vec::new();
        for itr in 0..10 {
            let r = plan.roles(itr).unwrap();
            assert_eq!(r.validation, plan.fold((itr + 1) % 10));
            assert_eq!(r.test.len() + r.validation.len() + r.train.len(), 47);
            tested.extend(r.test);
        }
        tested.sort();
        assert_eq!(tested, m.ids());
        assert!(plan.roles(10).is_err());
    }

    #[test]
    fn fold_plan_csv_round_trip() {
        let plan = kfold_split(&manifest(23), 4, 9).unwrap();
        assert_eq!(FoldPlan::parse(&plan.to_csv()).unwrap(), plan);
        assert!(FoldPlan::parse("id,fold\na,0\nb,0\nc,0\nd,1\n").is_err());
        assert!(FoldPlan::parse("id,fold\na,x\n").is_err());
        assert!(FoldPlan::parse("id,part\n").is_err());
    }

    #[test]
    fn ratio_split_sizes() {
        let s = ratio_split(&manifest(180), (0.8, 0.1, 0.1), 4).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (144, 18, 18));
        let mut all: Vec<String> = s.train.into_iter().chain(s.validation).chain(s.test).collect();
        all.sort();
        assert_eq!(all, manifest(180).ids());
        assert!(ratio_split(&manifest(5), (-1.0, 0.0, 1.0), 0).is_err());
    }
}

//! `COLORNET1` text checkpoints.
//!
//! ```text
//! COLORNET1
//! input_channels 3
//! input_size 32
//! widths 16 32 64
//! pools 1 1 1
//! hidden 10
//! dropout 3fe8000000000000
//! output <offset bits> <scale bits>
//! init_seed 42
//! train_seed none
//! param conv0.weight 16 3 3 3
//! <values, 8 per line>
//! ...
//! end
//! ```
//!
//! Reals are stored as the hexadecimal IEEE-754 bit pattern so a round
//! trip is exact and equal models serialize to identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use super::model::{ModelConfig, OutputScale, ParamTensor, RatingModel};
use crate::error::{Error, Result};

pub const MAGIC: &str = "COLORNET1";

const MAX_BLOCKS: usize = 64;
const MAX_EXTENT: usize = 1 << 14;
const MAX_PARAMS: usize = 1 << 26;

pub fn encode_checkpoint(model: &RatingModel) -> String {
    let cfg = model.config();
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    let seed = |s: Option<u64>| s.map_or_else(|| "none".to_string(), |v| v.to_string());
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "input_channels {}", cfg.input_channels);
    let _ = writeln!(out, "input_size {}", cfg.input_size);
    let _ = writeln!(out, "widths {}", join(&mut cfg.widths.iter().map(|w| w.to_string())));
    let _ = writeln!(out, "pools {}", join(&mut cfg.pools.iter().map(|&p| u8::from(p).to_string())));
    let _ = writeln!(out, "hidden {}", cfg.hidden);
    let _ = writeln!(out, "dropout {:016x}", cfg.dropout.to_bits());
    let _ = writeln!(
        out,
        "output {:016x} {:016x}",
        cfg.output.offset.to_bits(),
        cfg.output.scale.to_bits()
    );
    let _ = writeln!(out, "init_seed {}", seed(model.init_seed()));
    let _ = writeln!(out, "train_seed {}", seed(model.train_seed()));
    for p in model.params() {
        let dims = join(&mut p.shape.iter().map(|d| d.to_string()));
        let _ = writeln!(out, "param {} {dims}", p.name);
        for row in p.data.chunks(8) {
            let _ = writeln!(out, "{}", join(&mut row.iter().map(|v| format!("{:016x}", v.to_bits()))));
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.trim_end_matches('\r')))
            }
            None => Err(Error::Checkpoint(format!("unexpected end of file after line {}, expected {what}", self.last))),
        }
    }

    fn field(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next(key)?;
        let mut words = line.split_ascii_whitespace();
        match words.next() {
            Some(k) if k == key => Ok((n, words.collect())),
            other => Err(Error::Checkpoint(format!(
                "line {n}: expected `{key}`, found `{}`",
                other.unwrap_or("")
            ))),
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Checkpoint(format!("line {line}: {msg}"))
}

fn one<'a>(line: usize, words: &[&'a str]) -> Result<&'a str> {
    match words {
        [w] => Ok(w),
        _ => Err(bad(line, format!("expected one value, found {}", words.len()))),
    }
}

fn extent(line: usize, word: &str) -> Result<usize> {
    let v: usize = word.parse().map_err(|_| bad(line, format!("`{word}` is not a count")))?;
    if v == 0 || v > MAX_EXTENT {
        return Err(bad(line, format!("extent {v} out of range")));
    }
    Ok(v)
}

fn real(line: usize, word: &str) -> Result<f64> {
    if word.len() != 16 {
        return Err(bad(line, format!("`{word}` is not a 16-digit hex real")));
    }
    let bits = u64::from_str_radix(word, 16).map_err(|_| bad(line, format!("`{word}` is not hex")))?;
    let v = f64::from_bits(bits);
    if !v.is_finite() {
        return Err(bad(line, "non-finite value"));
    }
    Ok(v)
}

fn seed(line: usize, word: &str) -> Result<Option<u64>> {
    if word == "none" {
        return Ok(None);
    }
    word.parse().map(Some).map_err(|_| bad(line, format!("`{word}` is not a seed")))
}

pub fn decode_checkpoint(text: &str) -> Result<RatingModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (_, head) = lines.next("the magic header")?;
    if head.trim() != MAGIC {
        let shown: String = head.chars().take(24).collect();
        return Err(Error::Checkpoint(format!(
            "missing `{MAGIC}` magic header (found `{}`); not a model checkpoint or an unsupported version",
            shown.escape_debug()
        )));
    }
    let (n, w) = lines.field("input_channels")?;
    let input_channels = extent(n, one(n, &w)?)?;
    let (n, w) = lines.field("input_size")?;
    let input_size = extent(n, one(n, &w)?)?;
    let (n, w) = lines.field("widths")?;
    if w.is_empty() || w.len() > MAX_BLOCKS {
        return Err(bad(n, format!("{} blocks", w.len())));
    }
    let widths = w.iter().map(|v| extent(n, v)).collect::<Result<Vec<_>>>()?;
    let (n, w) = lines.field("pools")?;
    let pools = w
        .iter()
        .map(|v| match *v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(n, format!("pool flag `{v}` must be 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let (n, w) = lines.field("hidden")?;
    let hidden = extent(n, one(n, &w)?)?;
    let (n, w) = lines.field("dropout")?;
    let dropout = real(n, one(n, &w)?)?;
    let (n, w) = lines.field("output")?;
    let output = match w[..] {
        [o, s] => OutputScale {
            offset: real(n, o)?,
            scale: real(n, s)?,
        },
        _ => return Err(bad(n, "expected offset and scale")),
    };
    let (n, w) = lines.field("init_seed")?;
    let init_seed = seed(n, one(n, &w)?)?;
    let (n, w) = lines.field("train_seed")?;
    let train_seed = seed(n, one(n, &w)?)?;

    let config = ModelConfig {
        input_channels,
        input_size,
        widths,
        pools,
        hidden,
        dropout,
        output,
    };
    config.validate().map_err(|e| Error::Checkpoint(format!("invalid configuration: {e}")))?;
    let layout = config.layout();
    let total: usize = layout.iter().map(|(_, s, _)| s.iter().product::<usize>()).sum();
    if total > MAX_PARAMS {
        return Err(Error::Checkpoint(format!("configuration implies {total} parameters")));
    }

    let mut params = Vec::with_capacity(layout.len());
    for (name, shape, group) in layout {
        let (n, w) = lines.field("param")?;
        let dims = w
            .get(1..)
            .unwrap_or_default()
            .iter()
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>();
        if w.first() != Some(&name.as_str()) || dims.as_ref().ok() != Some(&shape) {
            return Err(bad(n, format!("expected tensor {name} {shape:?}, found `{}`", w.join(" "))));
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        while data.len() < count {
            let (n, row) = lines.next(&format!("values of {name}"))?;
            let words: Vec<&str> = row.split_ascii_whitespace().collect();
            if words.is_empty() || data.len() + words.len() > count {
                return Err(bad(n, format!("wrong number of values for {name}")));
            }
            for word in words {
                data.push(real(n, word)?);
            }
        }
        params.push(ParamTensor { name, shape, group, data });
    }
    let (n, tail) = lines.next("`end`")?;
    if tail.trim() != "end" {
        return Err(bad(n, format!("expected `end`, found `{tail}`")));
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(i + 1, format!("trailing content `{extra}`")));
    }
    RatingModel::from_parts(config, params, init_seed, train_seed).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_checkpoint(model: &RatingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<RatingModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::Checkpoint(format!(
            "not UTF-8 text at byte {}; expected a `{MAGIC}` checkpoint",
            e.utf8_error().valid_up_to()
        ))
    })?;
    decode_checkpoint(&text)
}

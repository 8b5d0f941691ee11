use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Pairwise-comparison counts: `get(i, j)` is how often stimulus `i` was
/// judged more colorful than stimulus `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwcMatrix {
    ids: Vec<String>,
    counts: Vec<u64>,
}

impl PwcMatrix {
    pub fn zeros(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self {
            ids,
            counts: vec![0; n * n],
        }
    }

    /// Stimuli named `0..n`.
    pub fn anonymous(n: usize) -> Self {
        Self::zeros((0..n).map(|i| i.to_string()).collect())
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<u64>]) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::contract(format!("count matrix must be {n}x{n}")));
        }
        let counts: Vec<u64> = rows.iter().flatten().copied().collect();
        let m = Self { ids, counts };
        m.check_diagonal()?;
        Ok(m)
    }

    fn check_diagonal(&self) -> Result<()> {
        match (0..self.n()).find(|&i| self.get(i, i) != 0) {
            Some(i) => Err(Error::contract(format!("non-zero diagonal at stimulus {i}"))),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn get(&self, winner: usize, loser: usize) -> u64 {
        self.counts[winner * self.n() + loser]
    }

    pub fn record(&mut self, winner: usize, loser: usize) -> Result<()> {
        let n = self.n();
        if winner >= n || loser >= n || winner == loser {
            return Err(Error::contract(format!("invalid comparison ({winner}, {loser}) for {n} stimuli")));
        }
        self.counts[winner * n + loser] += 1;
        Ok(())
    }

    /// Number of times `i` and `j` were compared, in either direction.
    pub fn compared(&self, i: usize, j: usize) -> u64 {
        self.get(i, j) + self.get(j, i)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let mut t = Self::zeros(self.ids.clone());
        for i in 0..n {
            for j in 0..n {
                t.counts[j * n + i] = self.get(i, j);
            }
        }
        t
    }

    /// Element-wise sum of two matrices over the same stimuli.
    pub fn accumulate(&mut self, other: &PwcMatrix) -> Result<()> {
        if self.ids != other.ids {
            return Err(Error::contract("matrices cover different stimuli"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Text form: `n <count>` followed by `n` rows of `n` integers.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = format!("n {n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Parses the text form; stimuli are named `0..n` (ids live in the
    /// accompanying manifest, see [`PwcMatrix::with_ids`]).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k as u64 + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing `n <count>` header".into(),
        })?;
        let n: usize = header
            .strip_prefix("n ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `n <count>`, found `{header}`"),
            })?;

        let mut counts = Vec::new();
        let mut rows = 0;
        for (line, row) in lines {
            if rows == n {
                return Err(Error::Parse {
                    line,
                    message: format!("more than {n} rows"),
                });
            }
            let before = counts.len();
            for tok in row.split_whitespace() {
                let v: u64 = tok.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{tok}` is not a non-negative integer"),
                })?;
                counts.push(v);
            }
            if counts.len() - before != n {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {n} entries, found {}", counts.len() - before),
                });
            }
            if counts[before + rows] != 0 {
                return Err(Error::Parse {
                    line,
                    message: "diagonal entry must be 0".into(),
                });
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse {
                line: text.lines().count() as u64,
                message: format!("expected {n} rows, found {rows}"),
            });
        }
        let ids = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { ids, counts })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n() {
            return Err(Error::contract(format!("{} ids for {} stimuli", ids.len(), self.n())));
        }
        self.ids = ids;
        Ok(self)
    }
}

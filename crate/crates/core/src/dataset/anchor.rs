use std::collections::HashSet;

use super::manifest::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::stats::{linear_fit_slices, ScoreVector};

/// Name given to merged manifests.
pub const COMBINED: &str = "combined";

/// Per-dataset linear map onto the anchor scale: score ↦ a·score + b.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorTransform {
    pub source: String,
    pub a: f64,
    pub b: f64,
    pub fit_r2: f64,
}

impl AnchorTransform {
    pub fn identity(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            a: 1.0,
            b: 0.0,
            fit_r2: 1.0,
        }
    }

    pub fn apply(&self, score: f64) -> f64 {
        self.a * score + self.b
    }
}

/// Least-squares fit of anchor scores (y) against source scores (x) over
/// the ids both vectors share.
pub fn anchor_fit(source: &str, source_scores: &ScoreVector, anchor_scores: &ScoreVector) -> Result<AnchorTransform> {
    let (x, y): (Vec<f64>, Vec<f64>) = source_scores
        .iter()
        .filter_map(|(id, x)| anchor_scores.get(id).map(|y| (x, y)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientOverlap { common: x.len() });
    }
    let fit = linear_fit_slices(&x, &y)?;
    if fit.a == 0.0 {
        return Err(Error::DegenerateFit("anchor scores do not vary with source scores".into()));
    }
    Ok(AnchorTransform {
        source: source.to_string(),
        a: fit.a,
        b: fit.b,
        fit_r2: fit.r2,
    })
}

pub fn anchor_apply(m: &DatasetManifest, t: &AnchorTransform) -> Result<DatasetManifest> {
    if t.source != m.name() {
        return Err(Error::TransformMismatch {
            expected: t.source.clone(),
            found: m.name().to_string(),
        });
    }
    Ok(m.map_scores(|s| t.apply(s)))
}

/// Rewrites every id as `<manifest name>:<id>`.
pub fn prefix_ids(m: &DatasetManifest) -> DatasetManifest {
    let entries = m
        .entries()
        .iter()
        .map(|e| ManifestEntry {
            id: format!("{}:{}", m.name(), e.id),
            ..e.clone()
        })
        .collect();
    DatasetManifest::new(m.name(), entries).expect("prefixing preserves uniqueness")
}

/// Concatenates manifests into one named [`COMBINED`].
pub fn merge(manifests: &[DatasetManifest]) -> Result<DatasetManifest> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for m in manifests {
        for e in m.entries() {
            if !seen.insert(e.id.clone()) {
                return Err(Error::Collision(e.id.clone()));
            }
            entries.push(e.clone());
        }
    }
    DatasetManifest::new(COMBINED, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn synthetic(name: &str, scores: &[f64]) -> DatasetManifest {
        let entries = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| ManifestEntry {
                id: format!("{name}{i}"),
                path: PathBuf::from(format!("{name}{i}.png")),
                score: s,
                source: name.to_string(),
            })
            .collect();
        DatasetManifest::new(name, entries).unwrap()
    }

    fn ranks_of(m: &DatasetManifest) -> Vec<f64> {
        crate::stats::ranks(m.scores().values())
    }

    #[test]
    fn recovers_generating_line() {
        let x: Vec<f64> = (1..=12).map(f64::from).collect();
        let src = ScoreVector::from_values(x.clone());
        let anchor = ScoreVector::from_values(x.iter().map(|v| 0.8748 * v + 1.4350).collect());
        let t = anchor_fit("epfl", &src, &anchor).unwrap();
        assert!((t.a - 0.8748).abs() < 1e-9 && (t.b - 1.4350).abs() < 1e-9);

        let t = anchor_fit("x", &src, &src).unwrap();
        assert!((t.a - 1.0).abs() < 1e-12 && t.b.abs() < 1e-12);

        let neg = ScoreVector::from_values(x.iter().map(|v| 10.0 - v).collect());
        let t = anchor_fit("x", &src, &neg).unwrap();
        assert!((t.a + 1.0).abs() < 1e-12 && (t.b - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fit_uses_common_ids_only() {
        let src = ScoreVector::new(vec!["a".into(), "b".into(), "c".into()], vec![1., 2., 3.]).unwrap();
        let anchor = ScoreVector::new(vec!["c".into(), "z".into(), "a".into()], vec![7., 100., 3.]).unwrap();
        let t = anchor_fit("s", &src, &anchor).unwrap();
        assert!((t.a - 2.0).abs() < 1e-12 && (t.b - 1.0).abs() < 1e-12);

        let one = ScoreVector::new(vec!["a".into()], vec![4.]).unwrap();
        assert!(matches!(anchor_fit("s", &src, &one), Err(Error::InsufficientOverlap { common: 1 })));
    }

    #[test]
    fn apply_published_transforms() {
        let epfl = AnchorTransform {
            source: "epfl".into(),
            a: 0.8748,
            b: 1.4350,
            fit_r2: 1.0,
        };
        let m = anchor_apply(&synthetic("epfl", &[5.0]), &epfl).unwrap();
        assert!((m.entries()[0].score - 5.809).abs() < 1e-12);

        let ucl = AnchorTransform {
            source: "ucl".into(),
            a: 1.1388,
            b: 6.8759,
            fit_r2: 1.0,
        };
        let m = anchor_apply(&synthetic("ucl", &[0.0]), &ucl).unwrap();
        assert_eq!(m.entries()[0].score, 6.8759);
        assert_eq!(m.entries()[0].source, "ucl");

        let base = synthetic("ucl", &[0.5, 3.0]);
        assert_eq!(anchor_apply(&base, &AnchorTransform::identity("ucl")).unwrap(), base);
        assert!(matches!(anchor_apply(&base, &epfl), Err(Error::TransformMismatch { .. })));
    }

    #[test]
    fn positive_slope_preserves_order() {
        let m = synthetic("epfl", &[3.0, -1.0, 8.5, 0.0, 2.2]);
        let t = AnchorTransform {
            source: "epfl".into(),
            a: 0.8748,
            b: 1.4350,
            fit_r2: 1.0,
        };
        assert_eq!(ranks_of(&anchor_apply(&m, &t).unwrap()), ranks_of(&m));
    }

    #[test]
    fn merge_counts_and_collisions() {
        let a = synthetic("epfl", &vec![1.0; 84]);
        let b = synthetic("ucl", &vec![2.0; 96]);
        let merged = merge(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(merged.len(), 180);
        assert_eq!(merged.name(), COMBINED);

        let single = merge(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.entries(), a.entries());

        let clash = a.clone().renamed("other");
        assert!(matches!(merge(&[a.clone(), clash.clone()]), Err(Error::Collision(_))));
        assert_eq!(merge(&[prefix_ids(&a), prefix_ids(&clash)]).unwrap().len(), 168);
    }

    #[test]
    fn merge_is_associative_up_to_order() {
        let (a, b, c) = (synthetic("a", &[1., 2.]), synthetic("b", &[3.]), synthetic("c", &[4., 5.]));
        let left = merge(&[merge(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = merge(&[a, merge(&[b, c]).unwrap()]).unwrap();
        assert_eq!(left.entries(), right.entries());
    }
}

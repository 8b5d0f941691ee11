//! Correlation and least-squares primitives.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Scores keyed by stimulus id, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::contract(format!(
                "{} ids for {} scores",
                ids.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { ids, values })
    }

    /// Ids `0..n` rendered as strings; handy for anonymous data.
    pub fn from_values(values: Vec<f64>) -> Self {
        let ids = (0..values.len()).map(|i| i.to_string()).collect();
        Self { ids, values }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|i| i == id).map(|k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Reorders `y` to follow `x`'s id order; both must cover the same ids.
fn align(x: &ScoreVector, y: &ScoreVector) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} vs {} entries", x.len(), y.len())));
    }
    let index: HashMap<&str, f64> = y.iter().collect();
    x.ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Alignment(format!("id `{id}` missing from second vector")))
        })
        .collect()
}

pub fn pearson(x: &ScoreVector, y: &ScoreVector) -> Result<f64> {
    let ys = align(x, y)?;
    pearson_slices(&x.values, &ys)
}

pub fn spearman(x: &ScoreVector, y: &ScoreVector) -> Result<f64> {
    let ys = align(x, y)?;
    spearman_slices(&x.values, &ys)
}

/// Product-moment correlation of two equally long slices.
pub fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} vs {} entries", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} vs {} entries", x.len(), y.len())));
    }
    pearson_slices(&ranks(x), &ranks(y))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    out
}

/// Ordinary least-squares line y = a·x + b.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

impl LinearFit {
    pub fn apply(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

pub fn linear_fit(x: &ScoreVector, y: &ScoreVector) -> Result<LinearFit> {
    let ys = align(x, y)?;
    linear_fit_slices(&x.values, &ys)
}

pub fn linear_fit_slices(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("{} vs {} entries", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("x is constant".into()));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - (a * xi + b)).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit { a, b, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::from_values(v.to_vec())
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&sv(&[1., 2., 3.]), &sv(&[2., 4., 6.])).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&sv(&[1., 2., 3.]), &sv(&[3., 2., 1.])).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&sv(&[1., 2., 3.]), &sv(&[1., 3., 2.])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&sv(&[1., 1., 1.]), &sv(&[1., 2., 3.])),
            Err(Error::UndefinedCorrelation(_))
        ));
        let other = ScoreVector::new(vec!["a".into(), "b".into(), "c".into()], vec![1., 2., 3.]).unwrap();
        assert!(matches!(pearson(&sv(&[1., 2., 3.]), &other), Err(Error::Alignment(_))));
        assert!(pearson(&sv(&[1.]), &sv(&[1.])).is_err());
    }

    #[test]
    fn aligns_by_id() {
        let x = ScoreVector::new(vec!["a".into(), "b".into(), "c".into()], vec![1., 2., 3.]).unwrap();
        let y = ScoreVector::new(vec!["c".into(), "a".into(), "b".into()], vec![6., 2., 4.]).unwrap();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(matches!(
            ScoreVector::new(vec!["a".into(), "a".into()], vec![1., 2.]),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&sv(&[1., 5., 9.]), &sv(&[0.1, 0.2, 7.])).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&sv(&[1., 2., 3.]), &sv(&[1., 3., 2.])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ranks(&[1., 1., 2.]), vec![1.5, 1.5, 3.0]);
        assert_eq!(ranks(&[3., 1., 3., 3.]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn linear_fit_examples() {
        let f = linear_fit(&sv(&[0., 1.]), &sv(&[1., 3.])).unwrap();
        assert_eq!((f.a, f.b, f.r2), (2.0, 1.0, 1.0));
        let f = linear_fit(&sv(&[0., 1., 2.]), &sv(&[0., 1., 2.])).unwrap();
        assert_eq!((f.a, f.b), (1.0, 0.0));
        let x: Vec<f64> = (1..=12).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.8748 * v + 1.4350).collect();
        let f = linear_fit(&sv(&x), &sv(&y)).unwrap();
        assert!((f.a - 0.8748).abs() < 1e-9 && (f.b - 1.4350).abs() < 1e-9);
        assert!(matches!(linear_fit(&sv(&[2., 2.]), &sv(&[1., 3.])), Err(Error::DegenerateFit(_))));
    }

    proptest! {
        #[test]
        fn pearson_of_affine_image_is_sign(
            x in proptest::collection::vec(-1e3f64..1e3, 3..20),
            alpha in prop_oneof![-50f64..-0.01, 0.01f64..50.0],
            beta in -100f64..100.0,
        ) {
            let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - x.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            let y: Vec<f64> = x.iter().map(|v| alpha * v + beta).collect();
            let r = pearson_slices(&x, &y).unwrap();
            prop_assert!((r - alpha.signum()).abs() < 1e-9);
        }

        #[test]
        fn spearman_is_invariant_under_monotone_maps(
            x in proptest::collection::vec(-50f64..50.0, 3..20),
            y in proptest::collection::vec(-50f64..50.0, 3..20),
        ) {
            let n = x.len().min(y.len());
            let (x, y) = (&x[..n], &y[..n]);
            if let Ok(r) = spearman_slices(x, y) {
                let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let ty: Vec<f64> = y.iter().map(|v| v * v * v + 3.0 * v).collect();
                prop_assert!((spearman_slices(&tx, &ty).unwrap() - r).abs() < 1e-12);
            }
        }

        #[test]
        fn least_squares_residuals_sum_to_zero(
            pts in proptest::collection::vec((-100f64..100.0, -100f64..100.0), 2..30),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let Ok(f) = linear_fit_slices(&x, &y) {
                let resid: f64 = x.iter().zip(&y).map(|(a, b)| b - f.apply(*a)).sum();
                prop_assert!(resid.abs() < 1e-9);
                prop_assert!((0.0..=1.0).contains(&f.r2));
            }
        }
    }
}

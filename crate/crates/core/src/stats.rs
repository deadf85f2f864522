// SPDX-License-Identifier: MIT OR Apache-2.0

//! Summary statistics and correlation.

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson product-moment correlation. Needs at least 3 pairs and non-zero
/// variance on both sides.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CvError::LengthMismatch(format!(
            "pearson over {} and {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(CvError::InvalidInput(format!(
            "pearson needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // relative cutoff so constant inputs with rounding noise count as degenerate
    let scale = |m: f64, n: usize| (m * m * n as f64).max(f64::MIN_POSITIVE) * 1e-24;
    if sxx <= scale(mx, x.len()) || syy <= scale(my, y.len()) {
        return Err(CvError::Degenerate("pearson: zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Values with their mean, population standard deviation and range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Distribution {
    /// `None` for an empty list.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let m = mean(&values);
        let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64;
        Some(Self {
            mean: m,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[1.0; 4]).is_err());
        assert!(pearson(&x[..2], &x[..2]).is_err());
        assert!(pearson(&x, &x[..3]).is_err());
    }

    #[test]
    fn distribution_summary() {
        let d = Distribution::new(vec![1.0, 3.0]).unwrap();
        assert_eq!((d.mean, d.std, d.min, d.max), (2.0, 1.0, 1.0, 3.0));
        assert!(Distribution::new(vec![]).is_none());
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_bounded(v in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30)) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let (Ok(a), Ok(b)) = (pearson(&x, &y), pearson(&y, &x)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }
    }
}

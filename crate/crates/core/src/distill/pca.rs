// SPDX-License-Identifier: MIT OR Apache-2.0

//! Structural regularization of a color × shape grid of directions.
//!
//! Two categorical factors with `n_c` and `n_s` levels span at most
//! `(n_c − 1) + (n_s − 1)` centered dimensions, so the centered directions
//! are projected onto that many leading principal components, the mean is
//! added back and each result is renormalized.

use std::collections::BTreeSet;

use crate::error::{CvError, Result};
use crate::linalg::{dot, gram, symmetric_eigen, to_f64};
use crate::scene::split_label;
use crate::store::{ConceptVector, Method};

/// Eigenvalues below `RANK_TOLERANCE · λ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Regularized {
    pub vectors: Vec<ConceptVector>,
    /// Components requested (`n_c + n_s − 2`).
    pub requested: usize,
    /// Components actually used (`min(requested, rank)`).
    pub retained: usize,
    /// Set when the centered matrix has fewer than `requested` dimensions.
    pub warning: Option<String>,
}

/// Checks that `vectors` form a full `colors × shapes` grid, returning the
/// number of levels of each factor.
pub fn factor_grid(vectors: &[ConceptVector]) -> Result<(usize, usize)> {
    let mut colors = BTreeSet::new();
    let mut shapes = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    for v in vectors {
        let (c, s) = split_label(&v.label).ok_or_else(|| {
            CvError::InvalidInput(format!("{:?} is not a color|shape label", v.label))
        })?;
        colors.insert(c);
        shapes.insert(s);
        if !pairs.insert((c, s)) {
            return Err(CvError::InvalidInput(format!(
                "duplicate concept {:?}",
                v.label
            )));
        }
    }
    let (nc, ns) = (colors.len(), shapes.len());
    if nc < 2 || ns < 2 || pairs.len() != nc * ns {
        return Err(CvError::InvalidInput(format!(
            "expected a full color × shape grid, got {} vectors over {nc} colors and {ns} shapes",
            vectors.len()
        )));
    }
    Ok((nc, ns))
}

/// Projects the centered directions onto their top `n_c + n_s − 2`
/// principal components, re-adds the mean and renormalizes.
pub fn pca_regularize(vectors: &[ConceptVector]) -> Result<Regularized> {
    let (nc, ns) = factor_grid(vectors)?;
    let d = vectors[0].dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
        return Err(CvError::DimensionMismatch {
            expected: d,
            got: v.dim(),
        });
    }
    let n = vectors.len();
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| to_f64(v.direction())).collect();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x / n as f64;
        }
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let (values, vecs) = symmetric_eigen(gram(&centered));
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values
        .iter()
        .filter(|&&v| v > RANK_TOLERANCE * top && v > 0.0)
        .count();
    let requested = nc + ns - 2;
    let retained = requested.min(rank);
    let warning = (rank < requested).then(|| {
        format!("centered directions have rank {rank} < {requested}; projecting onto {retained} components")
    });
    // row space projection: C ↦ U_k U_kᵀ C
    let coeff: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| vecs[..retained].iter().map(|u| u[i] * u[j]).sum())
                .collect()
        })
        .collect();
    let out = coeff
        .iter()
        .zip(vectors)
        .map(|(w, v)| {
            let mut p = mean.clone();
            for (wj, cj) in w.iter().zip(&centered) {
                if *wj != 0.0 {
                    for (x, c) in p.iter_mut().zip(cj) {
                        *x += wj * c;
                    }
                }
            }
            ConceptVector::from_raw(&p, v.label.clone(), Method::PcaProbe, v.model_id.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Regularized {
        vectors: out,
        requested,
        retained,
        warning,
    })
}

/// Largest `|⟨v_i, w⟩|` over the outputs, for checking that a direction was
/// removed.
pub fn max_component(vectors: &[ConceptVector], w: &[f64]) -> f64 {
    vectors
        .iter()
        .map(|v| dot(&to_f64(v.direction()), w).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        let v = |l: &str| ConceptVector::new(vec![1.0, 0.0], l, Method::Probe, "m").unwrap();
        assert!(pca_regularize(&[v("a|x"), v("a|y"), v("b|x")]).is_err());
        assert!(pca_regularize(&[v("a|x"), v("a|x"), v("b|x"), v("b|y")]).is_err());
        assert!(pca_regularize(&[v("ax"), v("a|y"), v("b|x"), v("b|y")]).is_err());
    }
}

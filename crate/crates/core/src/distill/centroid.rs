// SPDX-License-Identifier: MIT OR Apache-2.0

//! Centroid distillation: mean of concept-bearing tokens minus the global
//! token mean.

use std::collections::BTreeSet;

use crate::error::{CvError, Result};
use crate::store::{ActivationSequence, ConceptVector, Method};

/// Arithmetic mean over every token of every sequence.
pub fn global_mean<'a>(
    corpus: impl IntoIterator<Item = &'a ActivationSequence>,
) -> Result<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for s in corpus {
        let acc = sum.get_or_insert_with(|| vec![0.0; s.dim()]);
        if acc.len() != s.dim() {
            return Err(CvError::DimensionMismatch {
                expected: acc.len(),
                got: s.dim(),
            });
        }
        for row in s.rows() {
            for (a, &x) in acc.iter_mut().zip(row) {
                *a += f64::from(x);
            }
        }
        count += s.len();
    }
    let mut sum =
        sum.ok_or_else(|| CvError::InvalidInput("global mean of an empty corpus".into()))?;
    sum.iter_mut().for_each(|x| *x /= count as f64);
    Ok(sum)
}

/// Raw centroid offset `mean(selected tokens) − mu_glob`.
pub fn centroid_offset<'a>(
    selection: impl IntoIterator<Item = (&'a ActivationSequence, &'a BTreeSet<usize>)>,
    mu_glob: &[f64],
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; mu_glob.len()];
    let mut count = 0usize;
    for (s, mask) in selection {
        if s.dim() != mu_glob.len() {
            return Err(CvError::DimensionMismatch {
                expected: mu_glob.len(),
                got: s.dim(),
            });
        }
        for &t in mask {
            if t >= s.len() {
                return Err(CvError::InvalidInput(format!(
                    "{}: token {t} out of range (L = {})",
                    s.stimulus_id,
                    s.len()
                )));
            }
            for (a, &x) in sum.iter_mut().zip(s.row(t)) {
                *a += f64::from(x);
            }
        }
        count += mask.len();
    }
    if count == 0 {
        return Err(CvError::InvalidInput(
            "no concept-bearing tokens selected".into(),
        ));
    }
    Ok(sum
        .iter()
        .zip(mu_glob)
        .map(|(s, m)| s / count as f64 - m)
        .collect())
}

/// Unit centroid direction for `label`. Fails with [`CvError::Degenerate`]
/// when the offset norm is below `1e-9`.
pub fn distill_centroid<'a>(
    selection: impl IntoIterator<Item = (&'a ActivationSequence, &'a BTreeSet<usize>)>,
    mu_glob: &[f64],
    label: &str,
    model_id: &str,
) -> Result<ConceptVector> {
    let raw = centroid_offset(selection, mu_glob)?;
    ConceptVector::from_raw(&raw, label, Method::Centroid, model_id)
}

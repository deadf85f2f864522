// SPDX-License-Identifier: MIT OR Apache-2.0

//! Representational geometry of concept vectors: cosine matrices,
//! shared-feature group statistics, hue similarity profiles, PCA projections
//! and RSA between models.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{cosine_f32, dot, gram, norm, symmetric_eigen, to_f64};
use crate::scene::split_label;
use crate::stats::{pearson, Distribution};
use crate::store::ConceptVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// Unit diagonal, symmetry and range, all within `1e-6`.
    pub fn check(&self) -> Result<()> {
        let n = self.labels.len();
        if self.values.len() != n || self.values.iter().any(|r| r.len() != n) {
            return Err(CvError::Invariant(format!(
                "similarity matrix is not {n} × {n}"
            )));
        }
        for i in 0..n {
            if (self.values[i][i] - 1.0).abs() > 1e-6 {
                return Err(CvError::Invariant(format!(
                    "diagonal entry {i} is {}",
                    self.values[i][i]
                )));
            }
            for j in 0..n {
                let v = self.values[i][j];
                if !(-1.0 - 1e-6..=1.0 + 1e-6).contains(&v) || (v - self.values[j][i]).abs() > 1e-6
                {
                    return Err(CvError::Invariant(format!(
                        "entry ({i}, {j}) = {v} breaks symmetry or range"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Off-diagonal upper-triangle entries, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .collect()
    }

    /// Rows and columns reordered so that entry `i` is old entry `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            labels: perm.iter().map(|&i| self.labels[i].clone()).collect(),
            values: perm
                .iter()
                .map(|&i| perm.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "label,{}", self.labels.join(","))?;
        for (l, row) in self.labels.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
            writeln!(w, "{l},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Pairwise cosines `v̂_iᵀv̂_j`. Needs at least two vectors of equal `d`.
pub fn cosine_matrix(vectors: &[ConceptVector]) -> Result<SimilarityMatrix> {
    if vectors.len() < 2 {
        return Err(CvError::InvalidInput(
            "cosine matrix needs at least 2 vectors".into(),
        ));
    }
    let d = vectors[0].dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
        return Err(CvError::DimensionMismatch {
            expected: d,
            got: v.dim(),
        });
    }
    let n = vectors.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = cosine_f32(vectors[i].direction(), vectors[j].direction());
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(SimilarityMatrix {
        labels: vectors.iter().map(|v| v.label.clone()).collect(),
        values,
    })
}

/// `(color, shape)` factors parsed from `color|shape` labels.
pub fn factors_from_labels(labels: &[String]) -> Result<Vec<(String, String)>> {
    labels
        .iter()
        .map(|l| {
            split_label(l)
                .map(|(c, s)| (c.to_owned(), s.to_owned()))
                .ok_or_else(|| CvError::InvalidInput(format!("{l:?} is not a color|shape label")))
        })
        .collect()
}

/// Off-diagonal cosines partitioned by shared feature. Pairs sharing both
/// features are counted as same-color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub same_color: Option<Distribution>,
    pub same_shape: Option<Distribution>,
    pub neither: Option<Distribution>,
}

impl GroupStats {
    pub fn sizes(&self) -> (usize, usize, usize) {
        let n = |d: &Option<Distribution>| d.as_ref().map_or(0, Distribution::len);
        (n(&self.same_color), n(&self.same_shape), n(&self.neither))
    }

    /// `min(shared) − max(neither)`; positive when the groups separate.
    pub fn separation(&self) -> Option<f64> {
        let shared_min = [&self.same_color, &self.same_shape]
            .iter()
            .filter_map(|d| d.as_ref().map(|d| d.min))
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))))?;
        Some(shared_min - self.neither.as_ref()?.max)
    }

    pub fn groups(&self) -> [(&'static str, Option<&Distribution>); 3] {
        [
            ("same_color", self.same_color.as_ref()),
            ("same_shape", self.same_shape.as_ref()),
            ("neither", self.neither.as_ref()),
        ]
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "group,n,mean,std,min,max")?;
        for (name, d) in self.groups() {
            match d {
                Some(d) => writeln!(
                    w,
                    "{name},{},{:.9},{:.9},{:.9},{:.9}",
                    d.len(),
                    d.mean,
                    d.std,
                    d.min,
                    d.max
                )?,
                None => writeln!(w, "{name},0,,,,")?,
            }
        }
        Ok(())
    }

    pub fn write_values_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "group,value")?;
        for (name, d) in self.groups() {
            for v in d.map_or(&[][..], |d| &d.values) {
                writeln!(w, "{name},{v:.9}")?;
            }
        }
        Ok(())
    }
}

pub fn group_similarity_stats(
    m: &SimilarityMatrix,
    factors: &[(String, String)],
) -> Result<GroupStats> {
    if factors.len() != m.len() {
        return Err(CvError::LengthMismatch(format!(
            "{} factor labels for {} vectors",
            factors.len(),
            m.len()
        )));
    }
    let (mut color, mut shape, mut neither) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let v = m.values[i][j];
            if factors[i].0 == factors[j].0 {
                color.push(v);
            } else if factors[i].1 == factors[j].1 {
                shape.push(v);
            } else {
                neither.push(v);
            }
        }
    }
    Ok(GroupStats {
        same_color: Distribution::new(color),
        same_shape: Distribution::new(shape),
        neither: Distribution::new(neither),
    })
}

/// `g_h(Δ)` on a uniform circular hue grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    /// Sorted hues.
    pub hues: Vec<f64>,
    /// Displacements `k · 360/n`, `k = 0..n`.
    pub deltas: Vec<f64>,
    /// `per_hue[i][k] = g_{hues[i]}(deltas[k])`.
    pub per_hue: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl SimilarityProfile {
    /// Mean curve folded onto `|Δ| ∈ [0°, 180°]`, averaging `±Δ`.
    pub fn folded_mean(&self) -> Vec<(f64, f64)> {
        let n = self.deltas.len();
        (0..=n / 2)
            .map(|k| {
                (
                    self.deltas[k],
                    (self.mean[k] + self.mean[(n - k) % n]) / 2.0,
                )
            })
            .collect()
    }

    /// Sign changes of the discrete derivative of the folded mean curve over
    /// `|Δ| > 90°`; zero for a monotone tail.
    pub fn tail_ripples(&self) -> usize {
        let tail: Vec<f64> = self
            .folded_mean()
            .into_iter()
            .filter(|&(d, _)| d > 90.0)
            .map(|(_, g)| g)
            .collect();
        let diffs: Vec<f64> = tail
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| d.abs() > 1e-12)
            .collect();
        diffs
            .windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count()
    }

    /// Per-hue second difference `g_h(+δ) + g_h(−δ) − 2` at the grid step.
    pub fn local_curvature(&self) -> Vec<f64> {
        let n = self.deltas.len();
        self.per_hue
            .iter()
            .map(|g| g[1 % n] + g[(n - 1) % n] - 2.0 * g[0])
            .collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let hues: Vec<String> = self.hues.iter().map(|h| format!("g_{h}")).collect();
        writeln!(w, "delta,mean,{}", hues.join(","))?;
        for (k, d) in self.deltas.iter().enumerate() {
            let cells: Vec<String> = self
                .per_hue
                .iter()
                .map(|g| format!("{:.9}", g[k]))
                .collect();
            writeln!(w, "{d},{:.9},{}", self.mean[k], cells.join(","))?;
        }
        Ok(())
    }
}

/// Hue of a `hue:<degrees>` label, ignoring any `|shape` suffix.
pub fn hue_of_label(label: &str) -> Option<f64> {
    let color = split_label(label).map_or(label, |(c, _)| c);
    color.strip_prefix("hue:")?.parse().ok()
}

/// Profile from `(hue, direction)` pairs. Hues must form a uniform circular
/// grid (in any order) within `1e-6` degrees.
pub fn similarity_profile(entries: &[(f64, Vec<f64>)]) -> Result<SimilarityProfile> {
    let n = entries.len();
    if n < 2 {
        return Err(CvError::InvalidInput(
            "similarity profile needs at least 2 hues".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| entries[a].0.total_cmp(&entries[b].0));
    let step = 360.0 / n as f64;
    let h0 = entries[order[0]].0;
    for (k, &i) in order.iter().enumerate() {
        let expect = h0 + k as f64 * step;
        if (entries[i].0 - expect).abs() > 1e-6 {
            return Err(CvError::InvalidInput(format!(
                "hues are not a uniform grid: position {k} holds {} instead of {expect}",
                entries[i].0
            )));
        }
    }
    let exact: Vec<&Vec<f64>> = order.iter().map(|&i| &entries[i].1).collect();
    let cos = |a: usize, b: usize| -> f64 {
        let (x, y) = (exact[a], exact[b]);
        let d = dot(x, y);
        let nn = norm(x) * norm(y);
        if nn == 0.0 {
            0.0
        } else {
            (d / nn).clamp(-1.0, 1.0)
        }
    };
    let per_hue: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| cos(i, (i + k) % n)).collect())
        .collect();
    let mean = (0..n)
        .map(|k| per_hue.iter().map(|g| g[k]).sum::<f64>() / n as f64)
        .collect();
    Ok(SimilarityProfile {
        hues: order.iter().map(|&i| entries[i].0).collect(),
        deltas: (0..n).map(|k| k as f64 * step).collect(),
        per_hue,
        mean,
    })
}

/// Profile of hue concept vectors labelled `hue:<degrees>`.
pub fn semantic_similarity_function(vectors: &[ConceptVector]) -> Result<SimilarityProfile> {
    let entries = vectors
        .iter()
        .map(|v| {
            hue_of_label(&v.label)
                .map(|h| (h, to_f64(v.direction())))
                .ok_or_else(|| CvError::InvalidInput(format!("{:?} is not a hue label", v.label)))
        })
        .collect::<Result<Vec<_>>>()?;
    similarity_profile(&entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `coords[i][j]`: row `i` on component `j`.
    pub coords: Vec<Vec<f64>>,
    /// Fraction of total variance per component, non-increasing.
    pub explained: Vec<f64>,
}

impl Projection {
    pub fn write_csv(&self, labels: &[String], mut w: impl Write) -> std::io::Result<()> {
        let k = self.explained.len();
        let heads: Vec<String> = (1..=k).map(|j| format!("pc{j}")).collect();
        writeln!(w, "label,{}", heads.join(","))?;
        for (l, row) in labels.iter().zip(&self.coords) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.9}")).collect();
            writeln!(w, "{l},{}", cells.join(","))?;
        }
        let ev: Vec<String> = self.explained.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(w, "explained_variance,{}", ev.join(","))
    }
}

/// Centers `rows` and projects them onto the top `k` principal components.
pub fn pca_project(rows: &[Vec<f64>], k: usize) -> Result<Projection> {
    let n = rows.len();
    if k == 0 || k >= n {
        return Err(CvError::InvalidInput(format!(
            "pca_project needs 0 < k < n, got k = {k}, n = {n}"
        )));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(CvError::DimensionMismatch {
            expected: d,
            got: r.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x / n as f64;
        }
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let (values, vecs) = symmetric_eigen(gram(&centered));
    let values: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Ok(Projection {
            coords: vec![vec![0.0; k]; n],
            explained: vec![0.0; k],
        });
    }
    let coords = (0..n)
        .map(|i| (0..k).map(|j| values[j].sqrt() * vecs[j][i]).collect())
        .collect();
    Ok(Projection {
        coords,
        explained: values[..k].iter().map(|v| v / total).collect(),
    })
}

/// Pearson correlation of the off-diagonal upper triangles of two matrices
/// over identical label orderings.
pub fn rsa(a: &SimilarityMatrix, b: &SimilarityMatrix) -> Result<f64> {
    if a.labels != b.labels {
        return Err(CvError::InvalidInput(
            "rsa needs identical label sets in identical order".into(),
        ));
    }
    pearson(&a.upper_triangle(), &b.upper_triangle())
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation and concept-vector containers.
//!
//! [`ActivationSet`] is the currency passed between every stage: per-image
//! `L × d` token matrices plus the metadata needed to trace them back to a
//! stimulus. [`ConceptStore`] holds unit concept directions. Both persist to
//! small binary containers with a length-prefixed JSON header (see
//! [`container`] and [`vectors`]).

pub mod container;
pub mod vectors;

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg;

pub use container::{
    decode, encode, read_activation_set, validate_container, write_activation_set, ValidationReport,
};
pub use vectors::{read_concept_store, write_concept_store};

/// Maximum deviation of a concept direction's norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// Token-grid shape of a sequence (`rows · cols = L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: u32,
    pub cols: u32,
}

impl Grid {
    pub const fn new(rows: u32, cols: u32) -> Self {
        Self { rows, cols }
    }

    pub const fn cells(self) -> usize {
        self.rows as usize * self.cols as usize
    }
}

/// One image's token embeddings, row-major (`tokens[t * d + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSequence {
    tokens: Vec<f32>,
    len: usize,
    dim: usize,
    pub stimulus_id: String,
    pub model_id: String,
    pub layer_tag: String,
    pub grid: Grid,
}

impl ActivationSequence {
    /// Builds a validated sequence. `tokens.len()` must be a multiple of `dim`.
    pub fn new(
        tokens: Vec<f32>,
        dim: usize,
        stimulus_id: impl Into<String>,
        model_id: impl Into<String>,
        layer_tag: impl Into<String>,
        grid: Grid,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(CvError::Invariant("d must be at least 1".into()));
        }
        if !tokens.len().is_multiple_of(dim) {
            return Err(CvError::Invariant(format!(
                "token buffer of {} floats is not a multiple of d = {dim}",
                tokens.len()
            )));
        }
        let seq = Self {
            len: tokens.len() / dim,
            tokens,
            dim,
            stimulus_id: stimulus_id.into(),
            model_id: model_id.into(),
            layer_tag: layer_tag.into(),
            grid,
        };
        seq.check()?;
        Ok(seq)
    }

    /// Re-checks every invariant (L ≥ 1, finite entries, grid consistency).
    pub fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(CvError::Invariant(format!(
                "{}: sequence has no tokens",
                self.stimulus_id
            )));
        }
        if self.grid.cells() != self.len {
            return Err(CvError::Invariant(format!(
                "{}: grid {}x{} does not match L = {}",
                self.stimulus_id, self.grid.rows, self.grid.cols, self.len
            )));
        }
        if let Some(pos) = self.tokens.iter().position(|x| !x.is_finite()) {
            return Err(CvError::Invariant(format!(
                "{}: non-finite entry at token {}, dim {}",
                self.stimulus_id,
                pos / self.dim,
                pos % self.dim
            )));
        }
        Ok(())
    }

    /// Sequence length L.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Hidden size d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.tokens[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.tokens.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.tokens
    }

    /// Replaces the token buffer, keeping metadata. Shape must not change.
    pub fn with_tokens(&self, tokens: Vec<f32>, layer_tag: impl Into<String>) -> Result<Self> {
        if tokens.len() != self.tokens.len() {
            return Err(CvError::DimensionMismatch {
                expected: self.tokens.len(),
                got: tokens.len(),
            });
        }
        let seq = Self {
            tokens,
            layer_tag: layer_tag.into(),
            ..self.clone_meta()
        };
        seq.check()?;
        Ok(seq)
    }

    fn clone_meta(&self) -> Self {
        Self {
            tokens: Vec::new(),
            len: self.len,
            dim: self.dim,
            stimulus_id: self.stimulus_id.clone(),
            model_id: self.model_id.clone(),
            layer_tag: self.layer_tag.clone(),
            grid: self.grid,
        }
    }

    /// Unchecked constructor for building deliberately invalid fixtures.
    #[cfg(test)]
    pub(crate) fn raw(tokens: Vec<f32>, dim: usize, stimulus_id: &str, grid: Grid) -> Self {
        Self {
            len: tokens.len() / dim,
            tokens,
            dim,
            stimulus_id: stimulus_id.into(),
            model_id: "test".into(),
            layer_tag: "raw".into(),
            grid,
        }
    }
}

/// A collection of sequences sharing `d` and `model_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub model_id: String,
    dim: usize,
    sequences: Vec<ActivationSequence>,
}

impl ActivationSet {
    pub fn new(
        model_id: impl Into<String>,
        dim: usize,
        sequences: Vec<ActivationSequence>,
    ) -> Result<Self> {
        let set = Self {
            model_id: model_id.into(),
            dim,
            sequences,
        };
        set.check()?;
        Ok(set)
    }

    pub fn empty(model_id: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new(model_id, dim, Vec::new())
    }

    pub fn check(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CvError::Invariant("d must be at least 1".into()));
        }
        for seq in &self.sequences {
            if seq.dim != self.dim {
                return Err(CvError::DimensionMismatch {
                    expected: self.dim,
                    got: seq.dim,
                });
            }
            if seq.model_id != self.model_id {
                return Err(CvError::Invariant(format!(
                    "{}: model_id {:?} differs from set model_id {:?}",
                    seq.stimulus_id, seq.model_id, self.model_id
                )));
            }
            seq.check()?;
        }
        Ok(())
    }

    pub fn push(&mut self, seq: ActivationSequence) -> Result<()> {
        if seq.dim != self.dim {
            return Err(CvError::DimensionMismatch {
                expected: self.dim,
                got: seq.dim,
            });
        }
        if seq.model_id != self.model_id {
            return Err(CvError::Invariant(format!(
                "model_id {:?} differs from set model_id {:?}",
                seq.model_id, self.model_id
            )));
        }
        seq.check()?;
        self.sequences.push(seq);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> &[ActivationSequence] {
        &self.sequences
    }

    pub fn get(&self, stimulus_id: &str) -> Option<&ActivationSequence> {
        self.sequences.iter().find(|s| s.stimulus_id == stimulus_id)
    }

    pub fn into_sequences(self) -> Vec<ActivationSequence> {
        self.sequences
    }
}

/// How a concept vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Probe,
    PcaProbe,
    Centroid,
    /// Exact direction read off the synthetic oracle.
    GroundTruth,
}

impl Method {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Probe => "probe",
            Self::PcaProbe => "pca_probe",
            Self::Centroid => "centroid",
            Self::GroundTruth => "ground_truth",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probe" => Ok(Self::Probe),
            "pca_probe" | "pca-probe" => Ok(Self::PcaProbe),
            "centroid" => Ok(Self::Centroid),
            "ground_truth" | "ground-truth" => Ok(Self::GroundTruth),
            other => Err(CvError::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

/// A unit direction in activation space tagged with its concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptVector {
    direction: Vec<f32>,
    pub label: String,
    pub method: Method,
    pub model_id: String,
}

impl ConceptVector {
    /// Wraps an already-unit direction; rejects norms off by more than 1e-5.
    pub fn new(
        direction: Vec<f32>,
        label: impl Into<String>,
        method: Method,
        model_id: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        if direction.is_empty() {
            return Err(CvError::Invariant(format!("{label}: empty direction")));
        }
        if direction.iter().any(|x| !x.is_finite()) {
            return Err(CvError::Invariant(format!("{label}: non-finite direction")));
        }
        let n = linalg::norm_f32(&direction);
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(CvError::Invariant(format!(
                "{label}: direction norm {n} is not 1"
            )));
        }
        Ok(Self {
            direction,
            label,
            method,
            model_id: model_id.into(),
        })
    }

    /// Normalizes `raw`; fails when its norm is below `1e-9`.
    pub fn from_raw(
        raw: &[f64],
        label: impl Into<String>,
        method: Method,
        model_id: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        let unit = linalg::normalized(raw, 1e-9)
            .ok_or_else(|| CvError::Degenerate(format!("{label}: direction norm below 1e-9")))?;
        Self::new(linalg::to_f32(&unit), label, method, model_id)
    }

    pub fn direction(&self) -> &[f32] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        linalg::cosine_f32(&self.direction, &other.direction)
    }
}

/// An ordered, label-addressable set of concept vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptStore {
    pub model_id: String,
    dim: usize,
    vectors: Vec<ConceptVector>,
}

impl ConceptStore {
    pub fn new(
        model_id: impl Into<String>,
        dim: usize,
        vectors: Vec<ConceptVector>,
    ) -> Result<Self> {
        let mut store = Self {
            model_id: model_id.into(),
            dim,
            vectors: Vec::with_capacity(vectors.len()),
        };
        for v in vectors {
            store.push(v)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, v: ConceptVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(CvError::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        if v.model_id != self.model_id {
            return Err(CvError::Invariant(format!(
                "{}: model_id {:?} differs from store model_id {:?}",
                v.label, v.model_id, self.model_id
            )));
        }
        self.vectors.push(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[ConceptVector] {
        &self.vectors
    }

    /// First vector with this label.
    pub fn get(&self, label: &str) -> Option<&ConceptVector> {
        self.vectors.iter().find(|v| v.label == label)
    }

    pub fn require(&self, label: &str) -> Result<&ConceptVector> {
        self.get(label)
            .ok_or_else(|| CvError::InvalidInput(format!("no concept vector labelled {label:?}")))
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Benchmark scoring: visual-search interference and similarity-task
//! confidence.

mod similarity;
mod visual_search;

pub use similarity::{
    confidence_correlation, hue_similarity, predict_choice, prediction_accuracy,
    run_similarity_oracle, run_similarity_replay, similarity_separation, HueVectorTable,
    LinearHueDecay, SimilarityFn, SimilarityReport, SimilarityRow, SIMILARITY_PROMPT_ID,
};
pub use visual_search::{
    binned_accuracy, interference_score, run_visual_search, write_records_csv, Bin, BinnedCurve,
    ConditionCurve, VisualSearchReport, DEFAULT_BINS, DEFAULT_MIN_PER_BIN,
};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::scene::{SimilarityTrial, VisualSearchTrial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trial {
    VisualSearch(VisualSearchTrial),
    Similarity(SimilarityTrial),
}

impl Trial {
    pub fn id(&self) -> &str {
        match self {
            Self::VisualSearch(t) => &t.scene.id,
            Self::Similarity(t) => &t.id,
        }
    }
}

/// One answered trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: Trial,
    pub answer: String,
    #[serde(default)]
    pub logits: IndexMap<String, f64>,
    /// Visual search only.
    #[serde(default)]
    pub correct: Option<bool>,
    #[serde(default)]
    pub interference: Option<f64>,
}

impl TrialRecord {
    pub fn check(&self) -> Result<()> {
        if matches!(self.trial, Trial::Similarity(_)) && self.logits.is_empty() {
            return Err(CvError::Invariant(format!(
                "{}: similarity record without logits",
                self.trial.id()
            )));
        }
        Ok(())
    }
}

/// Index of the first maximum.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// `l_I − mean_{i≠I} l_i` with `I` the first argmax.
pub fn logit_separation(logits: &IndexMap<String, f64>) -> Result<f64> {
    if logits.len() < 2 {
        return Err(CvError::InvalidInput(format!(
            "logit separation needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    let i = argmax(logits.values().copied()).unwrap_or(0);
    let top = logits[i];
    let rest: f64 = logits
        .values()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, v)| v)
        .sum();
    Ok(top - rest / (logits.len() - 1) as f64)
}

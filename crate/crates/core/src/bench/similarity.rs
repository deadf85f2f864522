// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashMap;
use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{argmax, logit_separation, Trial, TrialRecord};
use crate::error::{CvError, Result};
use crate::geometry::hue_of_label;
use crate::linalg::{cosine_f32, dot, norm};
use crate::oracle::OracleWorld;
use crate::scene::{circular_distance, SimilarityTrial};
use crate::stats::pearson;
use crate::steering::ReplayRecord;
use crate::store::ConceptStore;

/// Prompt identifier of similarity-task answers in replay files.
pub const SIMILARITY_PROMPT_ID: &str = "similarity";

/// Similarity `g(h1, h2)` between two hues.
pub trait SimilarityFn: Sync {
    fn name(&self) -> String;
    fn similarity(&self, h1: f64, h2: f64) -> f64;
}

/// `1 − d_circ(h1, h2)/180`.
pub fn hue_similarity(h1: f64, h2: f64) -> f64 {
    1.0 - circular_distance(h1, h2) / 180.0
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearHueDecay;

impl SimilarityFn for LinearHueDecay {
    fn name(&self) -> String {
        "hue".into()
    }

    fn similarity(&self, h1: f64, h2: f64) -> f64 {
        hue_similarity(h1, h2)
    }
}

/// Cosine between the oracle's hue directions.
impl SimilarityFn for OracleWorld {
    fn name(&self) -> String {
        format!("{}-cosine", self.model_id())
    }

    fn similarity(&self, h1: f64, h2: f64) -> f64 {
        let (a, b) = (self.hue_direction(h1), self.hue_direction(h2));
        (dot(&a, &b) / (norm(&a) * norm(&b))).clamp(-1.0, 1.0)
    }
}

/// Cosine between distilled hue vectors, each hue mapped to the nearest
/// labelled hue on the circle.
#[derive(Debug, Clone)]
pub struct HueVectorTable {
    name: String,
    hues: Vec<f64>,
    dirs: Vec<Vec<f32>>,
}

impl HueVectorTable {
    /// Uses every `hue:<degrees>` vector in the store.
    pub fn from_store(store: &ConceptStore) -> Result<Self> {
        let (hues, dirs): (Vec<f64>, Vec<Vec<f32>>) = store
            .vectors()
            .iter()
            .filter_map(|v| hue_of_label(&v.label).map(|h| (h, v.direction().to_vec())))
            .unzip();
        if hues.is_empty() {
            return Err(CvError::InvalidInput("store holds no hue vectors".into()));
        }
        Ok(Self {
            name: format!("{}-vectors", store.model_id),
            hues,
            dirs,
        })
    }

    fn nearest(&self, h: f64) -> usize {
        let mut best = 0;
        for (i, &x) in self.hues.iter().enumerate() {
            if circular_distance(x, h) < circular_distance(self.hues[best], h) {
                best = i;
            }
        }
        best
    }
}

impl SimilarityFn for HueVectorTable {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn similarity(&self, h1: f64, h2: f64) -> f64 {
        cosine_f32(&self.dirs[self.nearest(h1)], &self.dirs[self.nearest(h2)])
    }
}

/// `g(c_I, c_Q) − mean_{i≠I} g(c_i, c_Q)`.
pub fn similarity_separation(
    trial: &SimilarityTrial,
    chosen: usize,
    g: &dyn SimilarityFn,
) -> Result<f64> {
    let n = trial.setup.len();
    if chosen >= n {
        return Err(CvError::InvalidInput(format!(
            "{}: choice {chosen} out of {n} setup colors",
            trial.id
        )));
    }
    if n < 2 {
        return Err(CvError::InvalidInput(format!(
            "{}: separation needs 2 setup colors",
            trial.id
        )));
    }
    let sims: Vec<f64> = trial
        .setup
        .iter()
        .map(|s| g.similarity(s.hue, trial.query_hue))
        .collect();
    let rest: f64 = sims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != chosen)
        .map(|(_, v)| v)
        .sum();
    Ok(sims[chosen] - rest / (n - 1) as f64)
}

/// `argmax_i g(c_i, c_Q)`, lowest index on ties.
pub fn predict_choice(trial: &SimilarityTrial, g: &dyn SimilarityFn) -> Option<usize> {
    argmax(
        trial
            .setup
            .iter()
            .map(|s| g.similarity(s.hue, trial.query_hue)),
    )
}

fn setup_index(trial: &SimilarityTrial, label: &str) -> Option<usize> {
    let l = label.trim();
    trial
        .setup
        .iter()
        .position(|s| s.label.eq_ignore_ascii_case(l))
}

/// Label the model chose: its answer when it names a logit, else the top
/// logit.
fn chosen_label(r: &TrialRecord) -> Option<&str> {
    let answer = r.answer.trim();
    if let Some((k, _)) = r
        .logits
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(answer))
    {
        return Some(k);
    }
    if r.logits.is_empty() {
        return Some(answer);
    }
    argmax(r.logits.values().copied()).map(|i| r.logits.get_index(i).map(|(k, _)| k.as_str()))?
}

/// `l_c − mean_{i≠c} l_i` at label `c`.
fn logit_separation_at(logits: &IndexMap<String, f64>, label: &str) -> Result<f64> {
    let Some(i) = logits.get_index_of(label) else {
        return logit_separation(logits);
    };
    if logits.len() < 2 {
        return logit_separation(logits);
    }
    let rest: f64 = logits
        .values()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, v)| v)
        .sum();
    Ok(logits[i] - rest / (logits.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub id: String,
    pub chosen: String,
    pub predicted: String,
    pub logit_separation: f64,
    pub similarity_separation: f64,
}

fn rows(records: &[TrialRecord], g: &dyn SimilarityFn) -> Result<Vec<SimilarityRow>> {
    records
        .iter()
        .map(|r| {
            r.check()?;
            let Trial::Similarity(t) = &r.trial else {
                return Err(CvError::InvalidInput(format!(
                    "{} is not a similarity record",
                    r.trial.id()
                )));
            };
            let label = chosen_label(r).unwrap_or_default();
            let idx = setup_index(t, label).ok_or_else(|| {
                CvError::InvalidInput(format!("{}: answer {label:?} names no setup color", t.id))
            })?;
            let predicted =
                predict_choice(t, g).map_or_else(String::new, |i| t.setup[i].label.clone());
            Ok(SimilarityRow {
                id: t.id.clone(),
                chosen: t.setup[idx].label.clone(),
                predicted,
                logit_separation: logit_separation_at(&r.logits, label)?,
                similarity_separation: similarity_separation(t, idx, g)?,
            })
        })
        .collect()
}

/// Fraction of records whose chosen color equals `predict_choice`.
pub fn prediction_accuracy(records: &[TrialRecord], g: &dyn SimilarityFn) -> Result<f64> {
    let rows = rows(records, g)?;
    if rows.is_empty() {
        return Err(CvError::InvalidInput("no similarity records".into()));
    }
    Ok(rows.iter().filter(|r| r.chosen == r.predicted).count() as f64 / rows.len() as f64)
}

/// Pearson r between similarity separation and logit separation at the
/// model's chosen answer.
pub fn confidence_correlation(records: &[TrialRecord], g: &dyn SimilarityFn) -> Result<f64> {
    let rows = rows(records, g)?;
    let x: Vec<f64> = rows.iter().map(|r| r.similarity_separation).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.logit_separation).collect();
    pearson(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub simfn: String,
    pub trials: usize,
    pub prediction_accuracy: f64,
    pub confidence_r: Option<f64>,
    pub rows: Vec<SimilarityRow>,
}

impl SimilarityReport {
    pub fn new(records: &[TrialRecord], g: &dyn SimilarityFn) -> Result<Self> {
        let rows = rows(records, g)?;
        if rows.is_empty() {
            return Err(CvError::InvalidInput("no similarity records".into()));
        }
        let x: Vec<f64> = rows.iter().map(|r| r.similarity_separation).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.logit_separation).collect();
        Ok(Self {
            simfn: g.name(),
            trials: rows.len(),
            prediction_accuracy: rows.iter().filter(|r| r.chosen == r.predicted).count() as f64
                / rows.len() as f64,
            confidence_r: pearson(&x, &y).ok(),
            rows,
        })
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "id,chosen,predicted,similarity_separation,logit_separation"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.9},{:.9}",
                r.id, r.chosen, r.predicted, r.similarity_separation, r.logit_separation
            )?;
        }
        Ok(())
    }

    pub fn svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.similarity_separation, r.logit_separation))
            .collect();
        let groups: Vec<usize> = self
            .rows
            .iter()
            .map(|r| usize::from(r.chosen != r.predicted))
            .collect();
        crate::svg::scatter(
            &format!("Confidence vs similarity ({})", self.simfn),
            "similarity separation",
            "logit separation",
            &pts,
            &groups,
        )
    }
}

/// Oracle answers for every trial.
pub fn run_similarity_oracle(world: &OracleWorld, trials: &[SimilarityTrial]) -> Vec<TrialRecord> {
    trials
        .iter()
        .map(|t| {
            let setup: Vec<(String, f64)> =
                t.setup.iter().map(|s| (s.label.clone(), s.hue)).collect();
            let a = world.answer_similarity(&setup, t.query_hue);
            TrialRecord {
                trial: Trial::Similarity(t.clone()),
                answer: a.choice,
                logits: a.logits,
                correct: None,
                interference: None,
            }
        })
        .collect()
}

/// Pairs each trial with its unsteered replayed answer.
pub fn run_similarity_replay(
    replay: &[ReplayRecord],
    trials: &[SimilarityTrial],
) -> Result<Vec<TrialRecord>> {
    let by_id: HashMap<&str, &ReplayRecord> = replay
        .iter()
        .filter(|r| r.prompt_id == SIMILARITY_PROMPT_ID && !r.steered)
        .map(|r| (r.stimulus_id.as_str(), r))
        .collect();
    trials
        .iter()
        .map(|t| {
            let r = by_id.get(t.id.as_str()).ok_or_else(|| {
                CvError::InvalidInput(format!("replay has no similarity answer for {:?}", t.id))
            })?;
            let rec = TrialRecord {
                trial: Trial::Similarity(t.clone()),
                answer: r.answer.clone(),
                logits: r.logits.clone().unwrap_or_default(),
                correct: None,
                interference: None,
            };
            rec.check()?;
            Ok(rec)
        })
        .collect()
}

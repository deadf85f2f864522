// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Trial, TrialRecord};
use crate::error::{CvError, Result};
use crate::model::{parse_yes_no, VisionModel};
use crate::scene::VisualSearchTrial;
use crate::stats::pearson;
use crate::store::{ConceptStore, ConceptVector};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_MIN_PER_BIN: usize = 20;

/// `max_d cos(v_T, v_d)`.
pub fn interference_score(target: &ConceptVector, distractors: &[&ConceptVector]) -> Result<f64> {
    if distractors.is_empty() {
        return Err(CvError::InvalidInput(
            "interference score needs at least one distractor".into(),
        ));
    }
    if let Some(d) = distractors.iter().find(|d| d.dim() != target.dim()) {
        return Err(CvError::DimensionMismatch {
            expected: target.dim(),
            got: d.dim(),
        });
    }
    Ok(distractors
        .iter()
        .map(|d| target.cosine(d))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub correct: usize,
}

impl Bin {
    pub fn center(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.count as f64
    }
}

/// Equal-width bins over the observed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCurve {
    pub edges: Vec<f64>,
    pub retained: Vec<Bin>,
    /// Non-empty bins below `min_per_bin`.
    pub dropped: Vec<Bin>,
}

impl BinnedCurve {
    /// Bins `(interference, correct)` pairs. Fails when no bin reaches
    /// `min_per_bin`.
    pub fn new(points: &[(f64, bool)], bins: usize, min_per_bin: usize) -> Result<Self> {
        if bins == 0 {
            return Err(CvError::InvalidInput("bin count must be positive".into()));
        }
        if let Some(&(x, _)) = points.iter().find(|(x, _)| !x.is_finite()) {
            return Err(CvError::InvalidInput(format!(
                "interference {x} is not finite"
            )));
        }
        if points.is_empty() {
            return Err(CvError::InvalidInput("no trials to bin".into()));
        }
        let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0 / bins as f64
        };
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut all: Vec<Bin> = edges
            .windows(2)
            .map(|e| Bin {
                lo: e[0],
                hi: e[1],
                count: 0,
                correct: 0,
            })
            .collect();
        for &(x, ok) in points {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            all[k].count += 1;
            all[k].correct += usize::from(ok);
        }
        let (retained, dropped): (Vec<Bin>, Vec<Bin>) = all
            .into_iter()
            .filter(|b| b.count > 0)
            .partition(|b| b.count >= min_per_bin);
        if retained.is_empty() {
            return Err(CvError::Degenerate(format!(
                "every bin has fewer than {min_per_bin} trials ({} trials total)",
                points.len()
            )));
        }
        Ok(Self {
            edges,
            retained,
            dropped,
        })
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().map(|b| b.count).sum()
    }

    /// Pearson r between bin center and bin accuracy.
    pub fn correlation(&self) -> Result<f64> {
        let x: Vec<f64> = self.retained.iter().map(Bin::center).collect();
        let y: Vec<f64> = self.retained.iter().map(Bin::accuracy).collect();
        pearson(&x, &y)
    }
}

/// Curve and correlations for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCurve {
    pub target_present: bool,
    pub trials: usize,
    pub curve: BinnedCurve,
    /// Bin-center similarity vs bin accuracy.
    pub binned_r: Option<f64>,
    /// Per-trial interference vs correctness (point-biserial).
    pub trial_r: Option<f64>,
}

impl ConditionCurve {
    pub fn name(&self) -> &'static str {
        if self.target_present {
            "present"
        } else {
            "absent"
        }
    }
}

/// Binned accuracy per condition, present first. Conditions without any
/// records are omitted.
pub fn binned_accuracy(
    records: &[TrialRecord],
    bins: usize,
    min_per_bin: usize,
) -> Result<Vec<ConditionCurve>> {
    let mut by_cond: [Vec<(f64, bool)>; 2] = [Vec::new(), Vec::new()];
    for r in records {
        let Trial::VisualSearch(t) = &r.trial else {
            return Err(CvError::InvalidInput(format!(
                "{} is not a visual-search record",
                r.trial.id()
            )));
        };
        let (Some(i), Some(c)) = (r.interference, r.correct) else {
            return Err(CvError::InvalidInput(format!(
                "{} lacks an interference score or verdict",
                t.scene.id
            )));
        };
        by_cond[usize::from(!t.target_present)].push((i, c));
    }
    let mut out = Vec::new();
    for (k, points) in by_cond.iter().enumerate() {
        if points.is_empty() {
            continue;
        }
        let curve = BinnedCurve::new(points, bins, min_per_bin)?;
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| f64::from(u8::from(p.1))).collect();
        out.push(ConditionCurve {
            target_present: k == 0,
            trials: points.len(),
            binned_r: curve.correlation().ok(),
            trial_r: pearson(&x, &y).ok(),
            curve,
        });
    }
    Ok(out)
}

/// Embeds, queries and scores every trial. Interference uses the composite
/// vectors in `vectors`, looked up by `color|shape` label.
pub fn run_visual_search(
    model: &dyn VisionModel,
    trials: &[VisualSearchTrial],
    vectors: &ConceptStore,
) -> Result<Vec<TrialRecord>> {
    trials
        .par_iter()
        .map(|t| {
            let target = vectors.require(&t.target.label())?;
            let ds = t
                .distractors()
                .iter()
                .map(|c| vectors.require(&c.label()))
                .collect::<Result<Vec<_>>>()?;
            let interference = interference_score(target, &ds)?;
            let acts = model.embed(&t.scene)?;
            let answer = model.ask_presence(&acts, t.target)?;
            let correct = parse_yes_no(&answer.choice) == Some(t.target_present);
            Ok(TrialRecord {
                trial: Trial::VisualSearch(t.clone()),
                answer: answer.choice,
                logits: answer.logits,
                correct: Some(correct),
                interference: Some(interference),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualSearchReport {
    pub trials: usize,
    pub accuracy: f64,
    pub conditions: Vec<ConditionCurve>,
}

impl VisualSearchReport {
    pub fn new(records: &[TrialRecord], bins: usize, min_per_bin: usize) -> Result<Self> {
        let correct = records.iter().filter(|r| r.correct == Some(true)).count();
        Ok(Self {
            trials: records.len(),
            accuracy: correct as f64 / records.len().max(1) as f64,
            conditions: binned_accuracy(records, bins, min_per_bin)?,
        })
    }

    pub fn condition(&self, present: bool) -> Option<&ConditionCurve> {
        self.conditions.iter().find(|c| c.target_present == present)
    }

    pub fn write_bins_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "condition,lo,hi,center,count,accuracy,retained")?;
        for c in &self.conditions {
            let mut rows: Vec<(&Bin, bool)> = c.curve.retained.iter().map(|b| (b, true)).collect();
            rows.extend(c.curve.dropped.iter().map(|b| (b, false)));
            rows.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
            for (b, kept) in rows {
                writeln!(
                    w,
                    "{},{:.9},{:.9},{:.9},{},{:.9},{kept}",
                    c.name(),
                    b.lo,
                    b.hi,
                    b.center(),
                    b.count,
                    b.accuracy()
                )?;
            }
        }
        Ok(())
    }

    pub fn write_summary_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let f = |r: Option<f64>| r.map_or_else(String::new, |r| format!("{r:.9}"));
        writeln!(
            w,
            "condition,trials,retained,bins_retained,bins_dropped,binned_r,trial_r"
        )?;
        for c in &self.conditions {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.name(),
                c.trials,
                c.curve.retained_count(),
                c.curve.retained.len(),
                c.curve.dropped.len(),
                f(c.binned_r),
                f(c.trial_r)
            )?;
        }
        Ok(())
    }

    pub fn svg(&self) -> String {
        let series: Vec<(String, Vec<(f64, f64)>)> = self
            .conditions
            .iter()
            .map(|c| {
                (
                    c.name().to_owned(),
                    c.curve
                        .retained
                        .iter()
                        .map(|b| (b.center(), b.accuracy()))
                        .collect(),
                )
            })
            .collect();
        crate::svg::line_chart(
            "Accuracy by interference",
            "max distractor cosine",
            "accuracy",
            &series,
        )
    }
}

pub fn write_records_csv(records: &[TrialRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "id,target,present,n_dist,p_int,n_high,interference,answer,correct"
    )?;
    for r in records {
        if let Trial::VisualSearch(t) = &r.trial {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.9},{},{}",
                t.scene.id,
                t.target.label(),
                t.target_present,
                t.n_dist,
                t.p_int,
                t.n_high,
                r.interference.unwrap_or(f64::NAN),
                r.answer,
                r.correct.unwrap_or(false)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Method;
    use proptest::prelude::*;

    fn cv(v: &[f64]) -> ConceptVector {
        ConceptVector::from_raw(v, "x", Method::GroundTruth, "m").unwrap()
    }

    #[test]
    fn interference_examples() {
        let t = cv(&[1.0, 0.0, 0.0]);
        assert!(
            (interference_score(&t, &[&cv(&[1.0, 0.0, 0.0]), &cv(&[0.0, 1.0, 0.0])]).unwrap()
                - 1.0)
                .abs()
                < 1e-6
        );
        assert_eq!(
            interference_score(&t, &[&cv(&[0.0, 1.0, 0.0]), &cv(&[0.0, 0.0, 1.0])]).unwrap(),
            0.0
        );
        assert!(interference_score(&t, &[]).is_err());
    }

    #[test]
    fn uniform_binning() {
        let pts: Vec<(f64, bool)> = (0..100).map(|i| (i as f64 / 99.0, true)).collect();
        let c = BinnedCurve::new(&pts, 10, 5).unwrap();
        assert_eq!(c.retained.len(), 10);
        assert!(c
            .retained
            .iter()
            .all(|b| b.count == 10 && b.accuracy() == 1.0));
        assert!(c.edges.windows(2).all(|w| w[1] > w[0]));
        assert!(BinnedCurve::new(&pts, 10, 11).is_err());
    }

    #[test]
    fn constant_interference_single_bin() {
        let pts = vec![(0.5, true); 30];
        let c = BinnedCurve::new(&pts, 10, 20).unwrap();
        assert_eq!(c.retained.len(), 1);
        assert_eq!(c.retained_count(), 30);
    }

    proptest! {
        #[test]
        fn interference_permutation_invariant(seed in 0u64..500) {
            use rand::seq::SliceRandom;
            let mut r = crate::seed::rng(seed);
            let mk = |r: &mut rand_chacha::ChaCha8Rng| cv(&(0..4).map(|_| rand::Rng::random_range(r, -1.0..1.0)).collect::<Vec<_>>());
            let t = mk(&mut r);
            let ds: Vec<ConceptVector> = (0..5).map(|_| mk(&mut r)).collect();
            let mut refs: Vec<&ConceptVector> = ds.iter().collect();
            let a = interference_score(&t, &refs).unwrap();
            refs.shuffle(&mut r);
            prop_assert_eq!(a, interference_score(&t, &refs).unwrap());
            prop_assert!(a <= 1.0 + 1e-9);
        }

        #[test]
        fn bin_counts_sum(pts in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..300), bins in 1usize..15, min in 1usize..10) {
            if let Ok(c) = BinnedCurve::new(&pts, bins, min) {
                let dropped: usize = c.dropped.iter().map(|b| b.count).sum();
                prop_assert_eq!(c.retained_count() + dropped, pts.len());
                prop_assert!(c.retained.iter().all(|b| (0.0..=1.0).contains(&b.accuracy()) && b.count >= min));
            }
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Color-swap protocol on single-object images.
//!
//! Images the model names correctly without steering are retained. For each
//! ordered color pair `(A, B)` up to `per_pair` retained images of color A
//! are steered A → B and queried again; the operation succeeds iff the answer
//! parses to B.

use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{steer, SteeringSpec};
use crate::error::Result;
use crate::model::{parse_color, VisionModel};
use crate::scene::NamedColor;
use crate::store::{ActivationSequence, ConceptStore};

#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub acts: ActivationSequence,
    pub object_name: String,
    pub true_color: NamedColor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorSwapConfig {
    pub colors: Vec<NamedColor>,
    /// Images steered per ordered pair.
    pub per_pair: usize,
}

impl Default for ColorSwapConfig {
    fn default() -> Self {
        Self {
            colors: NamedColor::ALL.to_vec(),
            per_pair: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStat {
    pub source: NamedColor,
    pub target: NamedColor,
    pub n: usize,
    pub successes: usize,
}

impl PairStat {
    pub fn rate(&self) -> Option<f64> {
        (self.n > 0).then(|| self.successes as f64 / self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSwapReport {
    /// Images per color that passed the unsteered check.
    pub retained: IndexMap<NamedColor, usize>,
    pub pairs: Vec<PairStat>,
    /// Operations over pairs with `n > 0`.
    pub operations: usize,
    pub successes: usize,
}

impl ColorSwapReport {
    pub fn success_rate(&self) -> Option<f64> {
        (self.operations > 0).then(|| self.successes as f64 / self.operations as f64)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "source,target,n,successes,rate")?;
        let rate = |r: Option<f64>| r.map_or_else(String::new, |r| format!("{r:.6}"));
        for p in &self.pairs {
            writeln!(
                w,
                "{},{},{},{},{}",
                p.source.name(),
                p.target.name(),
                p.n,
                p.successes,
                rate(p.rate())
            )?;
        }
        writeln!(
            w,
            "all,all,{},{},{}",
            self.operations,
            self.successes,
            rate(self.success_rate())
        )
    }
}

/// Runs the protocol with color vectors labelled by color name.
pub fn run_color_swap_protocol(
    model: &dyn VisionModel,
    images: &[ColorImage],
    vectors: &ConceptStore,
    cfg: &ColorSwapConfig,
) -> Result<ColorSwapReport> {
    let mut kept: IndexMap<NamedColor, Vec<&ColorImage>> =
        cfg.colors.iter().map(|&c| (c, Vec::new())).collect();
    for img in images {
        if let Some(list) = kept.get_mut(&img.true_color) {
            let answer = model.ask_color(&img.acts, &img.object_name)?;
            if parse_color(&answer.choice) == Some(img.true_color) {
                list.push(img);
            }
        }
    }
    let mut pairs = Vec::new();
    for &a in &cfg.colors {
        for &b in &cfg.colors {
            if a == b {
                continue;
            }
            let spec = SteeringSpec::new(
                vectors.require(a.name())?.clone(),
                vectors.require(b.name())?.clone(),
            )?;
            let mut stat = PairStat {
                source: a,
                target: b,
                n: 0,
                successes: 0,
            };
            for img in kept[&a].iter().take(cfg.per_pair) {
                let answer = model.ask_color(&steer(&img.acts, &spec)?, &img.object_name)?;
                stat.n += 1;
                stat.successes += usize::from(parse_color(&answer.choice) == Some(b));
            }
            pairs.push(stat);
        }
    }
    Ok(ColorSwapReport {
        retained: kept.iter().map(|(&c, v)| (c, v.len())).collect(),
        operations: pairs.iter().map(|p| p.n).sum(),
        successes: pairs.iter().map(|p| p.successes).sum(),
        pairs,
    })
}

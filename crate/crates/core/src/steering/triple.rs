// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic A/B/C steering protocol.
//!
//! For a triple of objects sharing no color and no shape:
//!
//! 1. draw a scene holding A and C;
//! 2. unsteered, the model must report A and C present and B absent;
//! 3. the same scene with A replaced by B must yield B and C present and A
//!    absent;
//! 4. the first scene is queried again with A steered onto B. Success means
//!    B reported, A gone and C preserved.
//!
//! A failure at step 2 or 3 draws a fresh scene; after `scene_budget`
//! failed scenes the triple is excluded.

use std::io::Write;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{steer, SteeringSpec};
use crate::error::{CvError, Result};
use crate::model::{parse_yes_no, VisionModel};
use crate::scene::generate::place_scene;
use crate::scene::{
    token_owners, Concept, NamedColor, ObjectColor, SceneSpec, Shape, DEFAULT_BACKGROUND, GRID,
};
use crate::seed::{derive_indexed, derive_seed};
use crate::store::{ConceptStore, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub a: Concept,
    pub b: Concept,
    pub c: Concept,
}

impl Triple {
    /// Rejects triples in which any two objects share a color or a shape.
    pub fn new(a: Concept, b: Concept, c: Concept) -> Result<Self> {
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if x.color == y.color || x.shape == y.shape {
                return Err(CvError::InvalidInput(format!(
                    "invalid triple ({a}, {b}, {c}): {x} and {y} share a property"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn label(&self) -> String {
        format!("{}>{}/{}", self.a.label(), self.b.label(), self.c.label())
    }
}

/// Every ordered triple over `colors × shapes` with pairwise disjoint
/// properties.
pub fn valid_triples(colors: &[NamedColor], shapes: &[Shape]) -> Vec<Triple> {
    let all = Concept::grid(colors, shapes);
    let mut out = Vec::new();
    for &a in &all {
        for &b in &all {
            for &c in &all {
                if let Ok(t) = Triple::new(a, b, c) {
                    out.push(t);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripleConfig {
    /// Scenes tried per triple before exclusion.
    pub scene_budget: usize,
    /// Independent successful scenes evaluated per triple.
    pub scenes_per_triple: usize,
    pub size_range: (u32, u32),
    pub seed: u64,
}

impl Default for TripleConfig {
    fn default() -> Self {
        Self {
            scene_budget: 10,
            scenes_per_triple: 1,
            size_range: (40, 90),
            seed: 0,
        }
    }
}

/// Parsed answers for A, B and C; `None` marks an unparseable answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialAnswers {
    pub a: Option<bool>,
    pub b: Option<bool>,
    pub c: Option<bool>,
}

impl TrialAnswers {
    fn matches(&self, a: bool, b: bool, c: bool) -> bool {
        self.a == Some(a) && self.b == Some(b) && self.c == Some(c)
    }

    pub fn as_map(&self, t: &Triple) -> IndexMap<String, Option<bool>> {
        IndexMap::from([
            (t.a.label(), self.a),
            (t.b.label(), self.b),
            (t.c.label(), self.c),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleOutcome {
    pub scene_id: String,
    /// Scenes drawn for this triple up to and including this one.
    pub attempts: usize,
    pub pre_answers: TrialAnswers,
    pub post_answers: TrialAnswers,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TripleResult {
    Evaluated(Vec<TripleOutcome>),
    Excluded { attempts: usize },
}

fn ask(
    model: &dyn VisionModel,
    acts: &crate::store::ActivationSequence,
    t: &Triple,
) -> Result<TrialAnswers> {
    let q = |c: Concept| -> Result<Option<bool>> {
        Ok(parse_yes_no(&model.ask_presence(acts, c)?.choice))
    };
    Ok(TrialAnswers {
        a: q(t.a)?,
        b: q(t.b)?,
        c: q(t.c)?,
    })
}

/// True when every object owns at least one token.
fn all_visible(scene: &SceneSpec) -> Result<bool> {
    let owners = token_owners(scene, Grid::new(GRID, GRID))?;
    Ok((0..scene.objects.len()).all(|i| owners.contains(&Some(i))))
}

/// Runs the protocol for one triple with composite vectors from `vectors`.
pub fn run_triple_protocol(
    model: &dyn VisionModel,
    triple: &Triple,
    vectors: &ConceptStore,
    cfg: &TripleConfig,
    index: u64,
) -> Result<TripleResult> {
    Triple::new(triple.a, triple.b, triple.c)?;
    let spec = SteeringSpec::new(
        vectors.require(&triple.a.label())?.clone(),
        vectors.require(&triple.b.label())?.clone(),
    )?;
    let root = derive_indexed(derive_seed(cfg.seed, "steer-triples"), index);
    let mut outcomes = Vec::new();
    let mut attempt = 0usize;
    let mut failed = 0usize;
    while outcomes.len() < cfg.scenes_per_triple.max(1) {
        if failed >= cfg.scene_budget {
            return Ok(TripleResult::Excluded { attempts: attempt });
        }
        let seed = derive_indexed(root, attempt as u64);
        let id = format!("triple-{index:05}-{attempt:02}");
        attempt += 1;
        let items = [
            (ObjectColor::Named(triple.a.color), triple.a.shape),
            (ObjectColor::Named(triple.c.color), triple.c.shape),
        ];
        let original = match place_scene(&id, &items, cfg.size_range, DEFAULT_BACKGROUND, seed) {
            Ok(s) => s,
            Err(CvError::Placement { .. }) => {
                failed += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut swapped = original.clone();
        swapped.id = format!("{id}-swap");
        swapped.objects[0].color = ObjectColor::Named(triple.b.color);
        swapped.objects[0].shape = triple.b.shape;
        if swapped.check().is_err() || !all_visible(&swapped)? {
            failed += 1;
            continue;
        }
        let acts = model.embed(&original)?;
        let pre = ask(model, &acts, triple)?;
        if !pre.matches(true, false, true) {
            failed += 1;
            continue;
        }
        let swapped_acts = model.embed(&swapped)?;
        if !ask(model, &swapped_acts, triple)?.matches(false, true, true) {
            failed += 1;
            continue;
        }
        let post = ask(model, &steer(&acts, &spec)?, triple)?;
        let success = post.matches(false, true, true);
        outcomes.push(TripleOutcome {
            scene_id: original.id,
            attempts: attempt,
            pre_answers: pre,
            post_answers: post,
            success,
        });
    }
    Ok(TripleResult::Evaluated(outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleSummary {
    pub triples: usize,
    pub excluded: usize,
    pub evaluated: usize,
    pub successes: usize,
    /// `successes / evaluated`; `None` when nothing was evaluated.
    pub success_rate: Option<f64>,
    pub rows: Vec<(Triple, TripleResult)>,
}

impl TripleSummary {
    /// Runs every triple (in parallel) and aggregates.
    pub fn run(
        model: &dyn VisionModel,
        triples: &[Triple],
        vectors: &ConceptStore,
        cfg: &TripleConfig,
    ) -> Result<Self> {
        let rows = triples
            .par_iter()
            .enumerate()
            .map(|(i, t)| run_triple_protocol(model, t, vectors, cfg, i as u64).map(|r| (*t, r)))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self {
            triples: rows.len(),
            excluded: 0,
            evaluated: 0,
            successes: 0,
            success_rate: None,
            rows: Vec::new(),
        };
        for (_, r) in &rows {
            match r {
                TripleResult::Excluded { .. } => s.excluded += 1,
                TripleResult::Evaluated(o) => {
                    s.evaluated += o.len();
                    s.successes += o.iter().filter(|o| o.success).count();
                }
            }
        }
        s.success_rate = (s.evaluated > 0).then(|| s.successes as f64 / s.evaluated as f64);
        s.rows = rows;
        Ok(s)
    }

    /// One row per evaluated scene or excluded triple, then a total row.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "a,b,c,scene_id,status,pre_a,pre_b,pre_c,post_a,post_b,post_c"
        )?;
        let yn = |x: Option<bool>| match x {
            Some(true) => "yes",
            Some(false) => "no",
            None => "invalid",
        };
        for (t, r) in &self.rows {
            let (a, b, c) = (t.a.label(), t.b.label(), t.c.label());
            match r {
                TripleResult::Excluded { .. } => writeln!(w, "{a},{b},{c},,excluded,,,,,,")?,
                TripleResult::Evaluated(os) => {
                    for o in os {
                        let (p, q) = (&o.pre_answers, &o.post_answers);
                        writeln!(
                            w,
                            "{a},{b},{c},{},{},{},{},{},{},{},{}",
                            o.scene_id,
                            if o.success { "success" } else { "failure" },
                            yn(p.a),
                            yn(p.b),
                            yn(p.c),
                            yn(q.a),
                            yn(q.b),
                            yn(q.c)
                        )?;
                    }
                }
            }
        }
        writeln!(
            w,
            "total,,,,{}/{} ({} excluded),,,,,,",
            self.successes, self.evaluated, self.excluded
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_validation() {
        use NamedColor::*;
        use Shape::*;
        let c = Concept::new;
        assert!(Triple::new(c(Red, Square), c(Red, Circle), c(Blue, Star)).is_err());
        assert!(Triple::new(c(Red, Square), c(Green, Square), c(Blue, Star)).is_err());
        assert!(Triple::new(c(Red, Square), c(Green, Circle), c(Blue, Square)).is_err());
        assert!(Triple::new(c(Red, Square), c(Green, Circle), c(Blue, Star)).is_ok());
    }

    #[test]
    fn triple_count() {
        assert_eq!(
            valid_triples(&NamedColor::ALL, &Shape::ALL).len(),
            36 * 25 * 16
        );
        assert_eq!(
            valid_triples(&NamedColor::ALL[..3], &Shape::ALL[..3]).len(),
            9 * 4
        );
    }
}

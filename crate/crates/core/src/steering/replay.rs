// SPDX-License-Identifier: MIT OR Apache-2.0

//! Offline answers recorded from an external model.
//!
//! A replay file is JSON lines. An optional first line `{"header": {...}}`
//! carries free-form capture settings; every other line is a
//! [`ReplayRecord`]. Answers are looked up by stimulus, prompt and the
//! steering recorded in the activation layer tag.

use std::collections::HashMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::parse_steer_tag;
use crate::error::{CvError, Result};
use crate::jsonl::read_jsonl;
use crate::model::{color_prompt_id, presence_prompt_id, VisionModel};
use crate::oracle::Answer;
use crate::scene::{Concept, SceneSpec};
use crate::store::{ActivationSequence, ActivationSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SteeringRef {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub stimulus_id: String,
    pub prompt_id: String,
    pub steered: bool,
    #[serde(default)]
    pub steering: Option<SteeringRef>,
    pub answer: String,
    #[serde(default)]
    pub logits: Option<IndexMap<String, f64>>,
}

impl ReplayRecord {
    pub fn check(&self) -> Result<()> {
        if self.steered != self.steering.is_some() {
            return Err(CvError::Invariant(format!(
                "{}/{}: steered = {} but steering is {}",
                self.stimulus_id,
                self.prompt_id,
                self.steered,
                if self.steering.is_some() {
                    "set"
                } else {
                    "missing"
                }
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ReplayLine {
    Header {
        #[allow(dead_code)]
        header: serde_json::Value,
    },
    Record(ReplayRecord),
}

/// Reads a replay file, skipping the optional header line.
pub fn read_replay(path: impl AsRef<Path>) -> Result<Vec<ReplayRecord>> {
    let lines: Vec<ReplayLine> = read_jsonl(path)?;
    let records: Vec<ReplayRecord> = lines
        .into_iter()
        .filter_map(|l| match l {
            ReplayLine::Record(r) => Some(r),
            ReplayLine::Header { .. } => None,
        })
        .collect();
    records.iter().try_for_each(ReplayRecord::check)?;
    Ok(records)
}

type Key = (String, String, Option<SteeringRef>);

/// A [`VisionModel`] backed by captured activations and recorded answers.
#[derive(Debug, Clone)]
pub struct ReplayModel {
    acts: ActivationSet,
    answers: HashMap<Key, ReplayRecord>,
}

impl ReplayModel {
    pub fn new(acts: ActivationSet, records: Vec<ReplayRecord>) -> Result<Self> {
        let mut answers = HashMap::new();
        for r in records {
            r.check()?;
            let key = (
                r.stimulus_id.clone(),
                r.prompt_id.clone(),
                r.steering.clone(),
            );
            answers.insert(key, r);
        }
        Ok(Self { acts, answers })
    }

    pub fn load(container: impl AsRef<Path>, replay: impl AsRef<Path>) -> Result<Self> {
        Self::new(
            crate::store::read_activation_set(container)?,
            read_replay(replay)?,
        )
    }

    fn lookup(&self, acts: &ActivationSequence, prompt_id: String) -> Result<Answer> {
        let steering = parse_steer_tag(&acts.layer_tag).map(|(s, t)| SteeringRef {
            source: s.to_owned(),
            target: t.to_owned(),
        });
        let key = (acts.stimulus_id.clone(), prompt_id, steering);
        let r = self.answers.get(&key).ok_or_else(|| {
            CvError::InvalidInput(format!(
                "replay has no answer for stimulus {:?}, prompt {:?}, steering {:?}",
                key.0, key.1, key.2
            ))
        })?;
        Ok(Answer {
            choice: r.answer.clone(),
            logits: r.logits.clone().unwrap_or_default(),
        })
    }
}

impl VisionModel for ReplayModel {
    fn model_id(&self) -> String {
        self.acts.model_id.clone()
    }

    fn embed(&self, scene: &SceneSpec) -> Result<ActivationSequence> {
        self.acts.get(&scene.id).cloned().ok_or_else(|| {
            CvError::InvalidInput(format!(
                "no captured activations for stimulus {:?}",
                scene.id
            ))
        })
    }

    fn ask_presence(&self, acts: &ActivationSequence, query: Concept) -> Result<Answer> {
        self.lookup(acts, presence_prompt_id(query))
    }

    fn ask_color(&self, acts: &ActivationSequence, object_name: &str) -> Result<Answer> {
        self.lookup(acts, color_prompt_id(object_name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{NamedColor, Shape};
    use crate::steering::{steer, SteeringSpec};
    use crate::store::{ConceptVector, Grid, Method};

    #[test]
    fn replay_lookup_by_steering() {
        let seq = ActivationSequence::new(
            vec![1.0, 0.0],
            2,
            "img-1",
            "ext",
            "post-proj",
            Grid::new(1, 1),
        )
        .unwrap();
        let set = ActivationSet::new("ext", 2, vec![seq.clone()]).unwrap();
        let q = Concept::new(NamedColor::Red, Shape::Square);
        let lines = [
            r#"{"header":{"model":"ext","logit_position":"first"}}"#,
            r#"{"stimulus_id":"img-1","prompt_id":"presence:red|square","steered":false,"answer":"Yes"}"#,
            r#"{"stimulus_id":"img-1","prompt_id":"presence:red|square","steered":true,"steering":{"source":"red","target":"blue"},"answer":"no","logits":{"yes":-1.0,"no":2.0}}"#,
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        std::fs::write(&p, lines.join("\n")).unwrap();
        let model = ReplayModel::new(set, read_replay(&p).unwrap()).unwrap();
        assert_eq!(model.ask_presence(&seq, q).unwrap().choice, "Yes");
        let v = |x: Vec<f32>, l: &str| ConceptVector::new(x, l, Method::Centroid, "ext").unwrap();
        let spec = SteeringSpec::new(v(vec![1.0, 0.0], "red"), v(vec![0.0, 1.0], "blue")).unwrap();
        let steered = steer(&seq, &spec).unwrap();
        let a = model.ask_presence(&steered, q).unwrap();
        assert_eq!(a.choice, "no");
        assert_eq!(a.logits["no"], 2.0);
        assert!(model.ask_color(&seq, "ball").is_err());
    }

    #[test]
    fn inconsistent_record_rejected() {
        let r = ReplayRecord {
            stimulus_id: "x".into(),
            prompt_id: "p".into(),
            steered: true,
            steering: None,
            answer: "yes".into(),
            logits: None,
        };
        assert!(r.check().is_err());
    }
}

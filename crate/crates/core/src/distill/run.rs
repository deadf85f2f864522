// SPDX-License-Identifier: MIT OR Apache-2.0

//! Corpus-level distillation into concept stores.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rayon::prelude::*;

use super::{
    distill_centroid, global_mean, pca_regularize, train_attention_probe, ProbeData, ProbeMetrics,
    ProbeTrainConfig,
};
use crate::error::{CvError, Result};
use crate::linalg::{normalized, to_f64};
use crate::scene::{split_label, token_owners, ObjectSpec, SceneSpec};
use crate::seed::derive_seed;
use crate::store::{ActivationSequence, ConceptStore, ConceptVector, Method};

/// What a centroid groups tokens by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// `color|shape` (or `hue:<h>|shape`).
    Object,
    /// Color part only.
    Color,
}

impl Grouping {
    fn key(self, o: &ObjectSpec) -> String {
        match self {
            Self::Object => o.label(),
            Self::Color => o.color.label(),
        }
    }
}

/// One centroid per group over the tokens each object owns. Groups appear
/// in order of first occurrence.
pub fn centroid_store(
    corpus: &[(&SceneSpec, &ActivationSequence)],
    model_id: &str,
    grouping: Grouping,
) -> Result<ConceptStore> {
    let first = corpus
        .first()
        .ok_or_else(|| CvError::InvalidInput("empty corpus".into()))?;
    let mu = global_mean(corpus.iter().map(|(_, a)| *a))?;
    let mut groups: IndexMap<String, Vec<(&ActivationSequence, BTreeSet<usize>)>> = IndexMap::new();
    for &(scene, acts) in corpus {
        if scene.id != acts.stimulus_id {
            return Err(CvError::InvalidInput(format!(
                "scene {:?} paired with activations of {:?}",
                scene.id, acts.stimulus_id
            )));
        }
        let owners = token_owners(scene, acts.grid)?;
        for (i, o) in scene.objects.iter().enumerate() {
            let mask: BTreeSet<usize> = owners
                .iter()
                .enumerate()
                .filter(|(_, w)| **w == Some(i))
                .map(|(t, _)| t)
                .collect();
            if !mask.is_empty() {
                groups
                    .entry(grouping.key(o))
                    .or_default()
                    .push((acts, mask));
            }
        }
    }
    let vectors = groups
        .iter()
        .map(|(label, sel)| {
            distill_centroid(sel.iter().map(|(a, m)| (*a, m)), &mu, label, model_id)
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptStore::new(model_id, first.1.dim(), vectors)
}

/// Probe vectors with per-concept training metrics.
#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub store: ConceptStore,
    pub metrics: Vec<(String, ProbeMetrics)>,
}

/// Trains one probe per concept label. Each probe gets its own seed
/// `derive_seed(cfg.seed, label)`.
pub fn probe_store(
    acts: &[&ActivationSequence],
    labels: &[&IndexMap<String, bool>],
    concepts: &[String],
    model_id: &str,
    cfg: &ProbeTrainConfig,
) -> Result<ProbeRun> {
    if acts.len() != labels.len() {
        return Err(CvError::LengthMismatch(format!(
            "{} sequences, {} label sets",
            acts.len(),
            labels.len()
        )));
    }
    let data = ProbeData::new(acts.iter().copied())?;
    let fits = concepts
        .par_iter()
        .map(|c| {
            let y = labels
                .iter()
                .map(|l| {
                    l.get(c)
                        .copied()
                        .ok_or_else(|| CvError::InvalidInput(format!("no presence label for {c}")))
                })
                .collect::<Result<Vec<bool>>>()?;
            let cfg = ProbeTrainConfig {
                seed: derive_seed(cfg.seed, c),
                ..cfg.clone()
            };
            train_attention_probe(&data, &y, c, model_id, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = fits
        .iter()
        .map(|f| (f.vector.label.clone(), f.metrics.clone()))
        .collect();
    let store = ConceptStore::new(
        model_id,
        data.dim(),
        fits.into_iter().map(|f| f.vector).collect(),
    )?;
    Ok(ProbeRun { store, metrics })
}

/// Probe vectors projected onto the factor subspace.
pub fn regularize_store(store: &ConceptStore) -> Result<(ConceptStore, Option<String>)> {
    let r = pca_regularize(store.vectors())?;
    Ok((
        ConceptStore::new(store.model_id.clone(), store.dim(), r.vectors)?,
        r.warning,
    ))
}

/// Per-color directions: normalized mean of the composite vectors sharing
/// each color.
pub fn color_store(composites: &ConceptStore) -> Result<ConceptStore> {
    let mut sums: IndexMap<&str, (Vec<f64>, Method)> = IndexMap::new();
    for v in composites.vectors() {
        let (c, _) = split_label(&v.label).ok_or_else(|| {
            CvError::InvalidInput(format!("{:?} is not a color|shape label", v.label))
        })?;
        let e = sums
            .entry(c)
            .or_insert_with(|| (vec![0.0; composites.dim()], v.method));
        for (s, x) in e.0.iter_mut().zip(to_f64(v.direction())) {
            *s += x;
        }
    }
    let vectors = sums
        .into_iter()
        .map(|(c, (sum, method))| {
            let unit = normalized(&sum, 1e-9)
                .ok_or_else(|| CvError::Degenerate(format!("{c}: shape vectors cancel")))?;
            ConceptVector::from_raw(&unit, c, method, composites.model_id.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptStore::new(composites.model_id.clone(), composites.dim(), vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{OracleWorld, WorldSpec};
    use crate::scene::{gen_distillation_corpus, Concept, DistillationParams, NamedColor, Shape};

    #[test]
    fn oracle_centroids_and_colors() {
        let w = OracleWorld::new(WorldSpec::default()).unwrap();
        let p = DistillationParams {
            positions_per_concept: 2,
            ..DistillationParams::default()
        };
        let scenes = gen_distillation_corpus(&p, 1).unwrap();
        let acts: Vec<_> = scenes.iter().map(|s| w.embed(s).unwrap()).collect();
        let pairs: Vec<_> = scenes.iter().zip(&acts).collect();
        let store = centroid_store(&pairs, &w.model_id(), Grouping::Object).unwrap();
        assert_eq!(store.len(), 36);
        let labels: Vec<String> = Concept::grid(&NamedColor::ALL, &Shape::ALL)
            .iter()
            .map(|c| c.label())
            .collect();
        assert_eq!(
            store
                .vectors()
                .iter()
                .map(|v| v.label.clone())
                .collect::<Vec<_>>(),
            labels
        );
        let colors = color_store(&store).unwrap();
        assert_eq!(colors.len(), 6);
        assert_eq!(colors.vectors()[0].label, "red");
        let direct = centroid_store(&pairs, &w.model_id(), Grouping::Color).unwrap();
        assert_eq!(direct.len(), 6);
        // token-weighted vs per-shape-weighted averages of the same directions
        assert!(
            direct
                .require("red")
                .unwrap()
                .cosine(colors.require("red").unwrap())
                > 0.95
        );
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Projection-scaled steering and the two evaluation protocols.
//!
//! Every token is rewritten as `h' = h − (hᵀv̂_A)v̂_A + (hᵀv̂_A)v̂_B`: the
//! component along the source direction is moved onto the target direction
//! with its own magnitude, so no global scale is involved.

pub mod color_swap;
pub mod replay;
pub mod triple;

use crate::error::{CvError, Result};
use crate::linalg::to_f64;
use crate::store::{ActivationSequence, ConceptVector};

pub use color_swap::{
    run_color_swap_protocol, ColorImage, ColorSwapConfig, ColorSwapReport, PairStat,
};
pub use replay::{ReplayModel, ReplayRecord, SteeringRef};
pub use triple::{
    run_triple_protocol, valid_triples, TrialAnswers, Triple, TripleConfig, TripleOutcome,
    TripleResult, TripleSummary,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSpec {
    source: ConceptVector,
    target: ConceptVector,
}

impl SteeringSpec {
    pub fn new(source: ConceptVector, target: ConceptVector) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(CvError::DimensionMismatch {
                expected: source.dim(),
                got: target.dim(),
            });
        }
        if source.model_id != target.model_id {
            return Err(CvError::Invariant(format!(
                "steering between models {:?} and {:?}",
                source.model_id, target.model_id
            )));
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &ConceptVector {
        &self.source
    }

    pub fn target(&self) -> &ConceptVector {
        &self.target
    }

    /// Layer-tag suffix recording the intervention.
    pub fn tag(&self) -> String {
        format!("+steer({}->{})", self.source.label, self.target.label)
    }
}

/// Source and target labels of the last intervention recorded in a layer
/// tag.
pub fn parse_steer_tag(layer_tag: &str) -> Option<(&str, &str)> {
    let start = layer_tag.rfind("+steer(")? + "+steer(".len();
    let inner = layer_tag[start..].strip_suffix(')')?;
    inner.split_once("->")
}

/// Applies the steering transform to every token in place.
pub fn steer_tokens(tokens: &mut [f32], d: usize, source: &[f64], target: &[f64]) -> Result<()> {
    if source.len() != d || target.len() != d {
        return Err(CvError::DimensionMismatch {
            expected: d,
            got: if source.len() != d {
                source.len()
            } else {
                target.len()
            },
        });
    }
    if d == 0 || !tokens.len().is_multiple_of(d) {
        return Err(CvError::LengthMismatch(format!(
            "{} token values do not divide into rows of {d}",
            tokens.len()
        )));
    }
    let delta: Vec<f64> = target.iter().zip(source).map(|(b, a)| b - a).collect();
    for h in tokens.chunks_exact_mut(d) {
        let p: f64 = h.iter().zip(source).map(|(&x, a)| f64::from(x) * a).sum();
        for (x, dl) in h.iter_mut().zip(&delta) {
            *x = (f64::from(*x) + p * dl) as f32;
        }
    }
    Ok(())
}

/// Steered copy of `acts`; the layer tag records the intervention.
pub fn steer(acts: &ActivationSequence, spec: &SteeringSpec) -> Result<ActivationSequence> {
    if acts.dim() != spec.source.dim() {
        return Err(CvError::DimensionMismatch {
            expected: spec.source.dim(),
            got: acts.dim(),
        });
    }
    let mut tokens = acts.as_slice().to_vec();
    steer_tokens(
        &mut tokens,
        acts.dim(),
        &to_f64(spec.source.direction()),
        &to_f64(spec.target.direction()),
    )?;
    acts.with_tokens(tokens, format!("{}{}", acts.layer_tag, spec.tag()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Grid, Method};
    use proptest::prelude::*;

    fn cv(v: &[f32], label: &str) -> ConceptVector {
        ConceptVector::new(v.to_vec(), label, Method::GroundTruth, "m").unwrap()
    }

    fn acts(rows: &[&[f32]]) -> ActivationSequence {
        let d = rows[0].len();
        ActivationSequence::new(
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
            d,
            "s",
            "m",
            "base",
            Grid::new(1, rows.len() as u32),
        )
        .unwrap()
    }

    #[test]
    fn hand_examples() {
        let spec = SteeringSpec::new(cv(&[1.0, 0.0, 0.0], "a"), cv(&[0.0, 1.0, 0.0], "b")).unwrap();
        let out = steer(&acts(&[&[1.0, 0.0, 0.0]]), &spec).unwrap();
        assert_eq!(out.row(0), &[0.0, 1.0, 0.0]);
        let spec = SteeringSpec::new(cv(&[1.0, 0.0, 0.0], "a"), cv(&[0.0, 0.0, 1.0], "b")).unwrap();
        let out = steer(&acts(&[&[2.0, 3.0, 0.0]]), &spec).unwrap();
        assert_eq!(out.row(0), &[0.0, 3.0, 2.0]);
        assert_eq!(out.layer_tag, "base+steer(a->b)");
        assert_eq!(parse_steer_tag(&out.layer_tag), Some(("a", "b")));
    }

    #[test]
    fn mismatches_rejected() {
        assert!(SteeringSpec::new(cv(&[1.0, 0.0], "a"), cv(&[0.0, 1.0, 0.0], "b")).is_err());
        let other = ConceptVector::new(vec![0.0, 1.0], "b", Method::GroundTruth, "other").unwrap();
        assert!(SteeringSpec::new(cv(&[1.0, 0.0], "a"), other).is_err());
        let spec = SteeringSpec::new(cv(&[1.0, 0.0], "a"), cv(&[0.0, 1.0], "b")).unwrap();
        assert!(steer(&acts(&[&[1.0, 2.0, 3.0]]), &spec).is_err());
    }

    #[test]
    fn tag_parsing() {
        assert_eq!(parse_steer_tag("oracle"), None);
        assert_eq!(
            parse_steer_tag("x+steer(red->blue)+steer(blue|star->red|heart)"),
            Some(("blue|star", "red|heart"))
        );
    }

    fn unit(v: Vec<f64>) -> Option<Vec<f32>> {
        let n = crate::linalg::norm(&v);
        (n > 1e-3).then(|| v.iter().map(|x| (x / n) as f32).collect())
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 3)
    }

    proptest! {
        #[test]
        fn identity_steering_is_exact(h in vec3(), a in vec3()) {
            let Some(a) = unit(a) else { return Ok(()) };
            let hf: Vec<f32> = h.iter().map(|&x| x as f32).collect();
            let v = cv(&a, "a");
            let spec = SteeringSpec::new(v.clone(), v).unwrap();
            let out = steer(&acts(&[&hf]), &spec).unwrap();
            prop_assert_eq!(out.row(0), hf.as_slice());
        }

        #[test]
        fn algebraic_properties(h in vec3(), a in vec3(), b in vec3()) {
            let (Some(a), Some(b)) = (unit(a), unit(b)) else { return Ok(()) };
            let hf: Vec<f32> = h.iter().map(|&x| x as f32).collect();
            let (va, vb) = (to_f64(&a), to_f64(&b));
            let spec = SteeringSpec::new(cv(&a, "a"), cv(&b, "b")).unwrap();
            let out = to_f64(steer(&acts(&[&hf]), &spec).unwrap().row(0));
            let h64 = to_f64(&hf);
            let dot = crate::linalg::dot;
            let p = dot(&h64, &va);
            // new A-component is p·(v̂_Bᵀv̂_A)
            prop_assert!((dot(&out, &va) - p * dot(&vb, &va)).abs() < 1e-5 * (1.0 + p.abs()));
            let moved: f64 = out.iter().zip(&h64).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(moved <= 2.0 * p.abs() + 1e-5);
        }

        #[test]
        fn orthogonal_round_trip(h in vec3(), theta in 0.0f64..std::f64::consts::TAU) {
            // exact only for tokens without a prior B-component
            let a = [theta.cos() as f32, theta.sin() as f32, 0.0];
            let b = [0.0, 0.0, 1.0];
            let hf: Vec<f32> = vec![h[0] as f32, h[1] as f32, 0.0];
            let there = SteeringSpec::new(cv(&a, "a"), cv(&b, "b")).unwrap();
            let back = SteeringSpec::new(cv(&b, "b"), cv(&a, "a")).unwrap();
            let out = steer(&steer(&acts(&[&hf]), &there).unwrap(), &back).unwrap();
            let pa = |v: &[f32]| crate::linalg::dot_f32(v, &a);
            prop_assert!((pa(out.row(0)) - pa(&hf)).abs() < 1e-5);
        }

        #[test]
        fn orthogonal_tokens_unchanged(x in -3.0f32..3.0, y in -3.0f32..3.0) {
            let spec = SteeringSpec::new(cv(&[0.0, 0.0, 1.0], "a"), cv(&[1.0, 0.0, 0.0], "b")).unwrap();
            let out = steer(&acts(&[&[x, y, 0.0]]), &spec).unwrap();
            prop_assert_eq!(out.row(0), &[x, y, 0.0]);
        }
    }
}

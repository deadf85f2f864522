// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic vision-language model with known additive geometry.
//!
//! A token owned by an object of color `c` and shape `s` embeds as
//! `mu + a·κ_c + a·σ_s + ε`; hue-valued objects replace `κ_c` by
//! `cos h·p₁ + sin h·p₂`. Unowned tokens embed as `mu + ε`.
//!
//! Feature directions are seeded Gaussians made orthonormal by Gram–Schmidt
//! (colors, shapes, hue plane, then the global mean direction). Optional
//! [`Interference`] entries then rotate a feature toward another one so that
//! their cosine equals a chosen value.

use indexmap::IndexMap;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{dot, norm, normalized};
use crate::scene::{token_owners, Concept, NamedColor, ObjectColor, SceneSpec, Shape, GRID};
use crate::seed::{derive_indexed, derive_seed, fnv1a64, rng, splitmix64};
use crate::store::{ActivationSequence, Grid};

/// Layer tag of unsteered oracle activations.
pub const ORACLE_LAYER: &str = "oracle";

/// Rotate feature `feature` toward `toward` until their cosine is `cosine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interference {
    pub feature: String,
    pub toward: String,
    pub cosine: f64,
}

/// Reproducible description of an oracle world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub d: usize,
    pub seed: u64,
    /// Feature gain `a`.
    pub feature_gain: f64,
    /// Std of the i.i.d. per-entry token noise.
    pub noise_sigma: f64,
    pub answer_temperature: f64,
    /// Norm of the global mean, in units of `a`.
    pub mu_scale: f64,
    /// Decoding-noise gain for crowded presence judgements (0 disables).
    pub crowding_gain: f64,
    pub interference: Vec<Interference>,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            d: 64,
            seed: 0,
            feature_gain: 1.0,
            noise_sigma: 0.0,
            answer_temperature: 1.0,
            mu_scale: 1.0,
            crowding_gain: 0.0,
            interference: Vec::new(),
        }
    }
}

impl WorldSpec {
    /// A world where similar distractors hurt: each color and shape pair
    /// (orange/red, purple/blue, yellow/green, cross/square, heart/circle,
    /// star/triangle) is rotated to cosine `cosine`, and presence answers get
    /// noise scaled by `crowding_gain` times the strongest competing token.
    pub fn crowded(seed: u64, cosine: f64, crowding_gain: f64) -> Self {
        let pairs = [
            ("orange", "red"),
            ("purple", "blue"),
            ("yellow", "green"),
            ("cross", "square"),
            ("heart", "circle"),
            ("star", "triangle"),
        ];
        Self {
            seed,
            crowding_gain,
            interference: pairs
                .iter()
                .map(|(f, t)| Interference {
                    feature: (*f).to_owned(),
                    toward: (*t).to_owned(),
                    cosine,
                })
                .collect(),
            ..Self::default()
        }
    }
}

/// Minimum dimension: 6 colors, 6 shapes, 2 hue axes and the mean.
pub const MIN_DIM: usize = 15;

/// An answer token with the logits it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub choice: String,
    /// Empty when the source recorded no logits.
    #[serde(default)]
    pub logits: IndexMap<String, f64>,
}

impl Answer {
    /// Argmax of `logits`, lowest index on ties.
    pub fn from_logits(logits: IndexMap<String, f64>) -> Self {
        let mut best: Option<(&String, f64)> = None;
        for (k, &v) in &logits {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        let choice = best.map(|(k, _)| k.clone()).unwrap_or_default();
        Self { choice, logits }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorldSpec", into = "WorldSpec")]
pub struct OracleWorld {
    spec: WorldSpec,
    mu: Vec<f64>,
    colors: IndexMap<NamedColor, Vec<f64>>,
    shapes: IndexMap<Shape, Vec<f64>>,
    hue_plane: [Vec<f64>; 2],
}

impl TryFrom<WorldSpec> for OracleWorld {
    type Error = CvError;

    fn try_from(spec: WorldSpec) -> Result<Self> {
        Self::new(spec)
    }
}

impl From<OracleWorld> for WorldSpec {
    fn from(w: OracleWorld) -> Self {
        w.spec
    }
}

fn gram_schmidt(mut vs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    for i in 0..vs.len() {
        for _ in 0..2 {
            for j in 0..i {
                let p = dot(&vs[i], &vs[j]);
                let (head, tail) = vs.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= p * y;
                }
            }
        }
        vs[i] = normalized(&vs[i], 1e-9)
            .ok_or_else(|| CvError::Degenerate("Gram–Schmidt produced a zero vector".into()))?;
    }
    Ok(vs)
}

impl OracleWorld {
    pub fn new(spec: WorldSpec) -> Result<Self> {
        if spec.d < MIN_DIM {
            return Err(CvError::Config(format!(
                "oracle d must be at least {MIN_DIM}, got {}",
                spec.d
            )));
        }
        for (name, v) in [
            ("feature_gain", spec.feature_gain),
            ("answer_temperature", spec.answer_temperature),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CvError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("noise_sigma", spec.noise_sigma),
            ("mu_scale", spec.mu_scale),
            ("crowding_gain", spec.crowding_gain),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CvError::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        let mut r = rng(derive_seed(spec.seed, "oracle-world"));
        let raw: Vec<Vec<f64>> = (0..MIN_DIM)
            .map(|_| (0..spec.d).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect();
        let mut basis = gram_schmidt(raw)?.into_iter();
        let colors: IndexMap<_, _> = NamedColor::ALL
            .iter()
            .map(|&c| (c, basis.next().unwrap()))
            .collect();
        let shapes: IndexMap<_, _> = Shape::ALL
            .iter()
            .map(|&s| (s, basis.next().unwrap()))
            .collect();
        let hue_plane = [basis.next().unwrap(), basis.next().unwrap()];
        let mu_scale = spec.mu_scale * spec.feature_gain;
        let mu = basis.next().unwrap().iter().map(|x| x * mu_scale).collect();
        let mut w = Self {
            spec,
            mu,
            colors,
            shapes,
            hue_plane,
        };
        for i in w.spec.interference.clone() {
            w.apply_interference(&i)?;
        }
        Ok(w)
    }

    fn apply_interference(&mut self, i: &Interference) -> Result<()> {
        if !(-1.0..=1.0).contains(&i.cosine) {
            return Err(CvError::Config(format!(
                "interference cosine {} outside [-1, 1]",
                i.cosine
            )));
        }
        let y = self.feature(&i.toward)?.to_vec();
        let x = self.feature(&i.feature)?.to_vec();
        let along = dot(&x, &y);
        let perp: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - along * b).collect();
        let perp = normalized(&perp, 1e-9)
            .ok_or_else(|| CvError::Config(format!("cannot rotate {} toward itself", i.feature)))?;
        let s = (1.0 - i.cosine * i.cosine).sqrt();
        let rotated: Vec<f64> = y
            .iter()
            .zip(&perp)
            .map(|(a, b)| i.cosine * a + s * b)
            .collect();
        *self.feature_mut(&i.feature)? = rotated;
        Ok(())
    }

    fn feature_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        if let Some(c) = NamedColor::parse(name) {
            return Ok(&mut self.colors[&c]);
        }
        if let Some(s) = Shape::parse(name) {
            return Ok(&mut self.shapes[&s]);
        }
        Err(CvError::Config(format!("unknown oracle feature {name:?}")))
    }

    /// Unit direction of a named color or shape.
    pub fn feature(&self, name: &str) -> Result<&[f64]> {
        if let Some(c) = NamedColor::parse(name) {
            return Ok(&self.colors[&c]);
        }
        if let Some(s) = Shape::parse(name) {
            return Ok(&self.shapes[&s]);
        }
        Err(CvError::InvalidInput(format!(
            "unknown oracle feature {name:?}"
        )))
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn gain(&self) -> f64 {
        self.spec.feature_gain
    }

    pub fn model_id(&self) -> String {
        format!("oracle-{}", self.spec.seed)
    }

    /// True when no interference was injected.
    pub fn is_orthogonal(&self) -> bool {
        self.spec.interference.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn color_dir(&self, c: NamedColor) -> &[f64] {
        &self.colors[&c]
    }

    pub fn shape_dir(&self, s: Shape) -> &[f64] {
        &self.shapes[&s]
    }

    pub fn hue_plane(&self) -> [&[f64]; 2] {
        [&self.hue_plane[0], &self.hue_plane[1]]
    }

    /// Unit color term of an object color.
    pub fn color_term(&self, c: ObjectColor) -> Vec<f64> {
        match c {
            ObjectColor::Named(n) => self.colors[&n].clone(),
            ObjectColor::Hue(h) => {
                let (s, c) = h.to_radians().sin_cos();
                self.hue_plane[0]
                    .iter()
                    .zip(&self.hue_plane[1])
                    .map(|(p, q)| c * p + s * q)
                    .collect()
            }
        }
    }

    /// Unit direction of the planar hue embedding.
    pub fn hue_direction(&self, hue: f64) -> Vec<f64> {
        self.color_term(ObjectColor::Hue(hue))
    }

    /// `(κ_c + σ_s)/‖κ_c + σ_s‖`.
    pub fn composite_direction(&self, c: Concept) -> Vec<f64> {
        let v: Vec<f64> = self.colors[&c.color]
            .iter()
            .zip(&self.shapes[&c.shape])
            .map(|(a, b)| a + b)
            .collect();
        normalized(&v, 1e-12).expect("features are not antipodal")
    }

    /// Noise-free embedding of one object token.
    pub fn object_signal(&self, color: ObjectColor, shape: Shape) -> Vec<f64> {
        let a = self.spec.feature_gain;
        self.color_term(color)
            .iter()
            .zip(&self.shapes[&shape])
            .zip(&self.mu)
            .map(|((k, s), m)| m + a * (k + s))
            .collect()
    }

    /// Activation sequence for `scene` on the 16 × 16 token grid.
    pub fn embed(&self, scene: &SceneSpec) -> Result<ActivationSequence> {
        let grid = Grid::new(GRID, GRID);
        let owners = token_owners(scene, grid)?;
        let signals: Vec<Vec<f64>> = scene
            .objects
            .iter()
            .map(|o| self.object_signal(o.color, o.shape))
            .collect();
        let d = self.spec.d;
        let mut tokens = Vec::with_capacity(owners.len() * d);
        let noise_root = derive_indexed(derive_seed(self.spec.seed, "oracle-noise"), scene.seed);
        for (t, owner) in owners.iter().enumerate() {
            let base = owner.map_or(&self.mu, |i| &signals[i]);
            if self.spec.noise_sigma > 0.0 {
                let mut r = rng(derive_indexed(noise_root, t as u64));
                for &b in base {
                    let e: f64 = StandardNormal.sample(&mut r);
                    tokens.push((b + self.spec.noise_sigma * e) as f32);
                }
            } else {
                tokens.extend(base.iter().map(|&b| b as f32));
            }
        }
        ActivationSequence::new(
            tokens,
            d,
            scene.id.clone(),
            self.model_id(),
            ORACLE_LAYER,
            grid,
        )
    }

    fn check_dim(&self, acts: &ActivationSequence) -> Result<()> {
        if acts.dim() != self.spec.d {
            return Err(CvError::DimensionMismatch {
                expected: self.spec.d,
                got: acts.dim(),
            });
        }
        Ok(())
    }

    fn deviations(&self, acts: &ActivationSequence) -> Vec<Vec<f64>> {
        acts.rows()
            .map(|row| {
                row.iter()
                    .zip(&self.mu)
                    .map(|(&h, m)| f64::from(h) - m)
                    .collect()
            })
            .collect()
    }

    /// Presence decision threshold `θ = a·√2·0.5`.
    pub fn presence_threshold(&self) -> f64 {
        self.spec.feature_gain * std::f64::consts::SQRT_2 * 0.5
    }

    /// Yes/no answer to "is there a `query` in the image?".
    pub fn answer_presence(&self, acts: &ActivationSequence, query: Concept) -> Result<Answer> {
        self.check_dim(acts)?;
        let dir = self.composite_direction(query);
        let dev = self.deviations(acts);
        let proj: Vec<f64> = dev.iter().map(|d| dot(d, &dir)).collect();
        let (t_star, &score) =
            proj.iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, (t, p)| {
                    if *p > *best.1 {
                        (t, p)
                    } else {
                        best
                    }
                });
        let mut score = score;
        if self.spec.crowding_gain > 0.0 {
            let full = self.spec.feature_gain * std::f64::consts::SQRT_2;
            let anchor = &dev[t_star];
            let anchor_norm = norm(anchor);
            let crowd = dev
                .iter()
                .zip(&proj)
                .filter(|(d, _)| {
                    let n = norm(d) * anchor_norm;
                    n > 0.0 && dot(d, anchor) / n < 0.95
                })
                .map(|(_, &p)| p)
                .fold(0.0f64, f64::max)
                / full;
            if crowd > 0.0 {
                let key = splitmix64(
                    derive_seed(self.spec.seed, "oracle-crowding")
                        ^ fnv1a64(acts.stimulus_id.as_bytes()),
                ) ^ fnv1a64(query.label().as_bytes());
                let e: f64 = StandardNormal.sample(&mut rng(key));
                score += e * self.spec.crowding_gain * full * crowd;
            }
        }
        let t = self.spec.answer_temperature;
        let logits = IndexMap::from([
            ("yes".to_owned(), score / t),
            ("no".to_owned(), self.presence_threshold() / t),
        ]);
        Ok(Answer::from_logits(logits))
    }

    /// Color-name answer: the color whose direction the strongest token
    /// carries.
    pub fn answer_color(&self, acts: &ActivationSequence) -> Result<Answer> {
        self.check_dim(acts)?;
        let dev = self.deviations(acts);
        let t = self.spec.answer_temperature;
        let logits = self
            .colors
            .iter()
            .map(|(c, k)| {
                let best = dev
                    .iter()
                    .map(|d| dot(d, k))
                    .fold(f64::NEG_INFINITY, f64::max);
                (c.name().to_owned(), best / t)
            })
            .collect();
        Ok(Answer::from_logits(logits))
    }

    /// Letter whose hue is most similar to the query under the planar
    /// embedding: `l_i = cos(Δ_i)/T`.
    pub fn answer_similarity(&self, setup: &[(String, f64)], query_hue: f64) -> Answer {
        let t = self.spec.answer_temperature;
        let logits = setup
            .iter()
            .map(|(label, h)| {
                let delta = crate::scene::generate::circular_distance(*h, query_hue);
                (label.clone(), delta.to_radians().cos() / t)
            })
            .collect();
        Answer::from_logits(logits)
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Attention-pooling presence probe.
//!
//! ```text
//! p_t = h_tᵀu        α = softmax(p + b_att)
//! z   = Σ α_t p_t    ŷ = σ(z·w_out + b_out)
//! ```
//!
//! `u` starts along the positive-minus-negative mean token (or a random draw)
//! and is trained with full-batch gradient descent on binary cross-entropy in
//! `f64`, keeping the parameters with the lowest held-out loss.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};
use crate::linalg::{dot, norm, normalized};
use crate::seed::{derive_seed, rng};
use crate::store::{ActivationSequence, ConceptVector, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionProbe {
    pub u: Vec<f64>,
    pub b_att: f64,
    pub w_out: f64,
    pub b_out: f64,
}

impl AttentionProbe {
    pub fn zeros(d: usize) -> Self {
        Self {
            u: vec![0.0; d],
            b_att: 0.0,
            w_out: 0.0,
            b_out: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|x| x.is_finite())
            && [self.b_att, self.w_out, self.b_out]
                .iter()
                .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Examples per gradient step; 0 means the full training split.
    pub batch_size: usize,
    /// Norm of the initial `u` (random init: per-coordinate scale times
    /// `√d`).
    pub init_scale: f64,
    /// Start `u` along the difference of mean tokens between positive and
    /// negative training sequences instead of a random draw.
    pub warm_start: bool,
    pub seed: u64,
    /// Epochs without held-out improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub holdout_fraction: f64,
}

impl Default for ProbeTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5.0,
            epochs: 500,
            batch_size: 0,
            init_scale: 1.0,
            warm_start: true,
            seed: 0,
            early_stop_patience: 50,
            holdout_fraction: 0.25,
        }
    }
}

impl ProbeTrainConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(CvError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(CvError::Config("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(CvError::Config(format!(
                "holdout_fraction must lie in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(CvError::Config(format!(
                "init_scale must be non-negative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Token matrices converted to `f64` once, shared across concepts.
#[derive(Debug, Clone)]
pub struct ProbeData {
    d: usize,
    seqs: Vec<Vec<f64>>,
}

impl ProbeData {
    pub fn new<'a>(seqs: impl IntoIterator<Item = &'a ActivationSequence>) -> Result<Self> {
        let mut d = None;
        let mut out = Vec::new();
        for s in seqs {
            match d {
                None => d = Some(s.dim()),
                Some(d) if d != s.dim() => {
                    return Err(CvError::DimensionMismatch {
                        expected: d,
                        got: s.dim(),
                    })
                }
                _ => {}
            }
            out.push(s.as_slice().iter().map(|&x| f64::from(x)).collect());
        }
        let d = d.ok_or_else(|| CvError::InvalidInput("probe corpus is empty".into()))?;
        Ok(Self { d, seqs: out })
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

struct Pass {
    y_hat: f64,
    z: f64,
    alpha: Vec<f64>,
    p: Vec<f64>,
}

fn forward_tokens(probe: &AttentionProbe, tokens: &[f64], d: usize) -> Pass {
    let p: Vec<f64> = tokens.chunks_exact(d).map(|h| dot(h, &probe.u)).collect();
    let m = p.iter().copied().fold(f64::NEG_INFINITY, f64::max) + probe.b_att;
    let mut alpha: Vec<f64> = p.iter().map(|&x| (x + probe.b_att - m).exp()).collect();
    let s: f64 = alpha.iter().sum();
    alpha.iter_mut().for_each(|a| *a /= s);
    let z: f64 = alpha.iter().zip(&p).map(|(a, p)| a * p).sum();
    let y_hat = sigmoid(z * probe.w_out + probe.b_out);
    Pass { y_hat, z, alpha, p }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Returns `(ŷ, α)`.
pub fn probe_forward(probe: &AttentionProbe, acts: &ActivationSequence) -> Result<(f64, Vec<f64>)> {
    if acts.dim() != probe.u.len() {
        return Err(CvError::DimensionMismatch {
            expected: probe.u.len(),
            got: acts.dim(),
        });
    }
    let tokens: Vec<f64> = acts.as_slice().iter().map(|&x| f64::from(x)).collect();
    let pass = forward_tokens(probe, &tokens, acts.dim());
    Ok((pass.y_hat, pass.alpha))
}

/// Gradient of the summed loss with respect to `(u, b_att, w_out, b_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGradient {
    pub u: Vec<f64>,
    pub b_att: f64,
    pub w_out: f64,
    pub b_out: f64,
}

/// Mean binary cross-entropy over `idx` and, optionally, its gradient.
fn loss_and_grad(
    probe: &AttentionProbe,
    data: &ProbeData,
    labels: &[bool],
    idx: &[usize],
    want_grad: bool,
) -> (f64, Option<ProbeGradient>) {
    let d = data.d;
    let mut loss = 0.0;
    let mut g = ProbeGradient {
        u: vec![0.0; d],
        b_att: 0.0,
        w_out: 0.0,
        b_out: 0.0,
    };
    for &i in idx {
        let tokens = &data.seqs[i];
        let pass = forward_tokens(probe, tokens, d);
        let logit = pass.z * probe.w_out + probe.b_out;
        let y = if labels[i] { 1.0 } else { 0.0 };
        // BCE(σ(x), y) = softplus(x) − y·x
        loss += softplus(logit) - y * logit;
        if want_grad {
            let r = pass.y_hat - y;
            g.b_out += r;
            g.w_out += r * pass.z;
            let k = r * probe.w_out;
            if k != 0.0 {
                for ((h, &a), &p) in tokens.chunks_exact(d).zip(&pass.alpha).zip(&pass.p) {
                    let c = k * a * (1.0 + p - pass.z);
                    if c != 0.0 {
                        for (gu, &x) in g.u.iter_mut().zip(h) {
                            *gu += c * x;
                        }
                    }
                }
            }
            // the softmax is shift-invariant, so b_att has no gradient
        }
    }
    let n = idx.len().max(1) as f64;
    if want_grad {
        g.u.iter_mut().for_each(|x| *x /= n);
        g.w_out /= n;
        g.b_out /= n;
        (loss / n, Some(g))
    } else {
        (loss / n, None)
    }
}

/// Mean loss and analytic gradient over the whole corpus.
pub fn probe_loss_gradient(
    probe: &AttentionProbe,
    data: &ProbeData,
    labels: &[bool],
) -> (f64, ProbeGradient) {
    let idx: Vec<usize> = (0..data.len()).collect();
    let (l, g) = loss_and_grad(probe, data, labels, &idx, true);
    (l, g.expect("gradient requested"))
}

/// Mean loss over the whole corpus.
pub fn probe_loss(probe: &AttentionProbe, data: &ProbeData, labels: &[bool]) -> f64 {
    let idx: Vec<usize> = (0..data.len()).collect();
    loss_and_grad(probe, data, labels, &idx, false).0
}

/// Area under the ROC curve (Mann–Whitney, ties count one half).
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMetrics {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub holdout_accuracy: f64,
    /// `None` when the held-out split lacks one class.
    pub holdout_auc: Option<f64>,
    pub train_auc: Option<f64>,
    /// Training loss at the start of every epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProbeFit {
    pub vector: ConceptVector,
    pub probe: AttentionProbe,
    pub metrics: ProbeMetrics,
}

/// Deterministic train/held-out split stratified by label.
fn split(labels: &[bool], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut r = rng(derive_seed(seed, "probe-split"));
    let mut train = Vec::new();
    let mut hold = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut r);
        let k = (idx.len() as f64 * fraction).round() as usize;
        let k = if fraction > 0.0 && idx.len() > 1 {
            k.clamp(1, idx.len() - 1)
        } else {
            0
        };
        hold.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}

/// Mean token of positive minus mean token of negative sequences in `idx`.
fn class_mean_difference(data: &ProbeData, labels: &[bool], idx: &[usize]) -> Option<Vec<f64>> {
    let d = data.d;
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for &i in idx {
        let k = usize::from(!labels[i]);
        let seq = &data.seqs[i];
        let l = (seq.len() / d).max(1) as f64;
        for h in seq.chunks_exact(d) {
            for (s, x) in sums[k].iter_mut().zip(h) {
                *s += x / l;
            }
        }
        counts[k] += 1;
    }
    if counts.contains(&0) {
        return None;
    }
    Some(
        sums[0]
            .iter()
            .zip(&sums[1])
            .map(|(p, n)| p / counts[0] as f64 - n / counts[1] as f64)
            .collect(),
    )
}

/// Trains one probe for `label` on `data` with presence `labels`.
pub fn train_attention_probe(
    data: &ProbeData,
    labels: &[bool],
    label: &str,
    model_id: &str,
    cfg: &ProbeTrainConfig,
) -> Result<ProbeFit> {
    cfg.check()?;
    if labels.len() != data.len() {
        return Err(CvError::LengthMismatch(format!(
            "{} labels for {} sequences",
            labels.len(),
            data.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(CvError::InvalidInput(format!(
            "{label}: probe corpus needs both positive and negative examples ({positives} of {})",
            labels.len()
        )));
    }
    let d = data.d;
    let (train, hold) = split(labels, cfg.holdout_fraction, cfg.seed);
    let mut r = rng(derive_seed(cfg.seed, "probe-init"));
    let init = Normal::new(0.0, cfg.init_scale / (d as f64).sqrt())
        .map_err(|e| CvError::Config(e.to_string()))?;
    let random: Vec<f64> = (0..d).map(|_| init.sample(&mut r)).collect();
    let u = if cfg.warm_start {
        class_mean_difference(data, labels, &train)
            .and_then(|v| normalized(&v, 1e-12))
            .map_or(random, |v| v.iter().map(|x| x * cfg.init_scale).collect())
    } else {
        random
    };
    let mut probe = AttentionProbe {
        u,
        ..AttentionProbe::zeros(d)
    };
    let eval_idx = if hold.is_empty() { &train } else { &hold };
    let mut best = (probe.clone(), f64::INFINITY, 0usize);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order = train.clone();
    let batch = if cfg.batch_size == 0 {
        train.len()
    } else {
        cfg.batch_size.min(train.len())
    };
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        let held = loss_and_grad(&probe, data, labels, eval_idx, false).0;
        if !held.is_finite() {
            return Err(CvError::Diverged {
                epoch,
                config: format!("{cfg:?}"),
            });
        }
        if held < best.1 {
            best = (probe.clone(), held, epoch);
        } else if cfg.early_stop_patience > 0 && epoch - best.2 >= cfg.early_stop_patience {
            break;
        }
        if batch < train.len() {
            order.shuffle(&mut r);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (l, g) = loss_and_grad(&probe, data, labels, chunk, true);
            let g = g.expect("gradient requested");
            epoch_loss += l * chunk.len() as f64;
            let lr = cfg.learning_rate;
            for (u, gu) in probe.u.iter_mut().zip(&g.u) {
                *u -= lr * gu;
            }
            probe.w_out -= lr * g.w_out;
            probe.b_out -= lr * g.b_out;
        }
        epoch_loss /= train.len() as f64;
        if !epoch_loss.is_finite() || !probe.is_finite() {
            return Err(CvError::Diverged {
                epoch,
                config: format!("{cfg:?}"),
            });
        }
        history.push(epoch_loss);
        epochs_run = epoch + 1;
    }
    let held = loss_and_grad(&probe, data, labels, eval_idx, false).0;
    if held < best.1 {
        best = (probe.clone(), held, epochs_run);
    }
    let (probe, holdout_loss, best_epoch) = best;
    let scores = |idx: &[usize]| -> (Vec<f64>, Vec<bool>) {
        idx.iter()
            .map(|&i| (forward_tokens(&probe, &data.seqs[i], d).y_hat, labels[i]))
            .unzip()
    };
    let (hs, hl) = scores(eval_idx);
    let (ts, tl) = scores(&train);
    let holdout_accuracy =
        hs.iter().zip(&hl).filter(|(&s, &l)| (s > 0.5) == l).count() as f64 / hs.len() as f64;
    let n = norm(&probe.u);
    if n < 1e-12 {
        return Err(CvError::Degenerate(format!(
            "{label}: probe direction vanished"
        )));
    }
    let sign = if probe.w_out < 0.0 { -1.0 } else { 1.0 };
    let dir: Vec<f64> = probe.u.iter().map(|x| sign * x / n).collect();
    let vector = ConceptVector::from_raw(&dir, label, Method::Probe, model_id)?;
    let train_idx: Vec<usize> = train.clone();
    Ok(ProbeFit {
        vector,
        metrics: ProbeMetrics {
            epochs_run,
            best_epoch,
            train_loss: loss_and_grad(&probe, data, labels, &train_idx, false).0,
            holdout_loss,
            holdout_accuracy,
            holdout_auc: auc(&hs, &hl),
            train_auc: auc(&ts, &tl),
            loss_history: history,
        },
        probe,
    })
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Concept-vector extraction: attention probes, centroids and PCA
//! regularization of a color × shape grid.

pub mod centroid;
pub mod pca;
pub mod probe;
pub mod run;

pub use centroid::{centroid_offset, distill_centroid, global_mean};
pub use pca::{factor_grid, pca_regularize, Regularized};
pub use probe::{
    auc, probe_forward, probe_loss, probe_loss_gradient, train_attention_probe, AttentionProbe,
    ProbeData, ProbeFit, ProbeGradient, ProbeMetrics, ProbeTrainConfig,
};
pub use run::{centroid_store, color_store, probe_store, regularize_store, Grouping, ProbeRun};

// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod bench;
pub mod cli;
pub mod config;
pub mod distill;
pub mod error;
pub mod geometry;
pub mod jsonl;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod scene;
pub mod seed;
pub mod stats;
pub mod steering;
pub mod store;
pub mod svg;

pub use error::{CvError, Result};

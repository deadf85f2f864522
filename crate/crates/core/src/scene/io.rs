// SPDX-License-Identifier: MIT OR Apache-2.0

//! Corpus directories: `<dir>/manifest.jsonl` plus one PNG per scene.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{render_scene, Palette, ProbeScene, SceneSpec, SimilarityTrial, VisualSearchTrial};
use crate::error::{CvError, Result};
use crate::jsonl::{read_jsonl, write_jsonl};

pub const MANIFEST: &str = "manifest.jsonl";

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusRecord {
    Scene { scene: SceneSpec },
    Probe(ProbeScene),
    VisualSearch(VisualSearchTrial),
    Similarity(SimilarityTrial),
}

impl CorpusRecord {
    /// Scenes carried by this record, in rendering order.
    pub fn scenes(&self) -> Vec<&SceneSpec> {
        match self {
            Self::Scene { scene } => vec![scene],
            Self::Probe(p) => vec![&p.scene],
            Self::VisualSearch(t) => vec![&t.scene],
            Self::Similarity(t) => vec![&t.setup_scene, &t.query_scene],
        }
    }

    pub fn presence_labels(&self) -> Option<&IndexMap<String, bool>> {
        match self {
            Self::Probe(p) => Some(&p.labels),
            _ => None,
        }
    }
}

impl From<SceneSpec> for CorpusRecord {
    fn from(scene: SceneSpec) -> Self {
        Self::Scene { scene }
    }
}

/// Writes the manifest and, when `png` is set, every scene raster.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    records: &[CorpusRecord],
    palette: &Palette,
    png: bool,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| CvError::io(dir, e))?;
    if png {
        for s in records.iter().flat_map(CorpusRecord::scenes) {
            render_scene(s, palette)?.save_png(dir.join(format!("{}.png", s.id)))?;
        }
    }
    let manifest = dir.join(MANIFEST);
    write_jsonl(&manifest, records)?;
    Ok(manifest)
}

/// Reads a manifest file, or `<dir>/manifest.jsonl` when given a directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    if path.is_dir() {
        read_jsonl(path.join(MANIFEST))
    } else {
        read_jsonl(path)
    }
}

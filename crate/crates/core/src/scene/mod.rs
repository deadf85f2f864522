// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic stimuli: declarative scenes, an aliased rasterizer, token-grid
//! masks and the experiment corpora.

pub mod generate;
mod hsv;
pub mod io;
pub mod raster;

use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};

pub use generate::{
    circular_distance, gen_distillation_corpus, gen_hue_sweep, gen_hue_sweep_with,
    gen_probe_corpus, gen_similarity_trials, gen_visual_search_trials, place_scene, round_half_up,
    DistillationParams, HueSweepParams, LabeledHue, ProbeCorpusParams, ProbeScene,
    SimilarityParams, SimilarityTrial, VisualSearchBatch, VisualSearchParams, VisualSearchTrial,
};
pub use hsv::hsv_to_rgb;
pub use raster::{render_scene, token_mask, token_owners, Raster, COVERAGE_THRESHOLD};

/// Canvas side in pixels.
pub const CANVAS: u32 = 448;
/// Token grid side (16 × 16 = 256 tokens).
pub const GRID: u32 = 16;

pub type Rgb = [u8; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedColor {
    Red,
    Green,
    Blue,
    Yellow,
    Orange,
    Purple,
}

impl NamedColor {
    pub const ALL: [Self; 6] = [
        Self::Red,
        Self::Green,
        Self::Blue,
        Self::Yellow,
        Self::Orange,
        Self::Purple,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Self::Red => "red",
            Self::Green => "green",
            Self::Blue => "blue",
            Self::Yellow => "yellow",
            Self::Orange => "orange",
            Self::Purple => "purple",
        }
    }

    /// Case-insensitive exact match on the six names.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
    Star,
    Heart,
    Cross,
}

impl Shape {
    pub const ALL: [Self; 6] = [
        Self::Circle,
        Self::Square,
        Self::Triangle,
        Self::Star,
        Self::Heart,
        Self::Cross,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Self::Circle => "circle",
            Self::Square => "square",
            Self::Triangle => "triangle",
            Self::Star => "star",
            Self::Heart => "heart",
            Self::Cross => "cross",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

/// An object's color: one of the named palette colors or a free hue (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectColor {
    Named(NamedColor),
    Hue(f64),
}

impl ObjectColor {
    pub fn label(self) -> String {
        match self {
            Self::Named(c) => c.name().to_owned(),
            Self::Hue(h) => hue_label(h),
        }
    }
}

/// Label used for hue-valued concepts, e.g. `hue:3.6`.
pub fn hue_label(h: f64) -> String {
    format!("hue:{h}")
}

/// Composite concept label, e.g. `red|square`.
pub fn composite_label(color: &str, shape: Shape) -> String {
    format!("{color}|{}", shape.name())
}

/// Splits a composite label into `(color, shape)`.
pub fn split_label(label: &str) -> Option<(&str, &str)> {
    label.split_once('|')
}

/// A named (color, shape) conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Concept {
    pub color: NamedColor,
    pub shape: Shape,
}

impl Concept {
    pub const fn new(color: NamedColor, shape: Shape) -> Self {
        Self { color, shape }
    }

    pub fn label(self) -> String {
        composite_label(self.color.name(), self.shape)
    }

    /// Number of features (0, 1 or 2) shared with `other`.
    pub fn shared_features(self, other: Self) -> u8 {
        u8::from(self.color == other.color) + u8::from(self.shape == other.shape)
    }

    /// All `colors × shapes` conjunctions, color-major.
    pub fn grid(colors: &[NamedColor], shapes: &[Shape]) -> Vec<Self> {
        colors
            .iter()
            .flat_map(|&c| shapes.iter().map(move |&s| Self::new(c, s)))
            .collect()
    }
}

impl std::fmt::Display for Concept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.color.name(), self.shape.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub color: ObjectColor,
    pub shape: Shape,
    /// Center in pixels.
    pub center: (f64, f64),
    /// Bounding-box side in pixels.
    pub size: f64,
}

impl ObjectSpec {
    pub fn label(&self) -> String {
        composite_label(&self.color.label(), self.shape)
    }

    pub fn concept(&self) -> Option<Concept> {
        match self.color {
            ObjectColor::Named(c) => Some(Concept::new(c, self.shape)),
            ObjectColor::Hue(_) => None,
        }
    }

    /// Bounding box `(x0, y0, x1, y1)` in pixel coordinates.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let r = self.size / 2.0;
        (
            self.center.0 - r,
            self.center.1 - r,
            self.center.0 + r,
            self.center.1 + r,
        )
    }

    pub fn inside(&self, canvas: (u32, u32)) -> bool {
        let (x0, y0, x1, y1) = self.bbox();
        self.size > 0.0
            && x0 >= 0.0
            && y0 >= 0.0
            && x1 <= f64::from(canvas.0)
            && y1 <= f64::from(canvas.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Stimulus identifier; links the scene to its activation sequence.
    pub id: String,
    pub canvas: (u32, u32),
    pub objects: Vec<ObjectSpec>,
    pub background: Rgb,
    pub seed: u64,
}

pub const DEFAULT_BACKGROUND: Rgb = [255, 255, 255];

impl SceneSpec {
    pub fn new(id: impl Into<String>, objects: Vec<ObjectSpec>, seed: u64) -> Self {
        Self {
            id: id.into(),
            canvas: (CANVAS, CANVAS),
            objects,
            background: DEFAULT_BACKGROUND,
            seed,
        }
    }

    /// Checks bounding boxes and pixel-level disjointness.
    pub fn check(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if !o.inside(self.canvas) {
                return Err(CvError::Invariant(format!(
                    "{}: object {i} bounding box leaves the canvas",
                    self.id
                )));
            }
            if let ObjectColor::Hue(h) = o.color {
                if !(0.0..360.0).contains(&h) {
                    return Err(CvError::Invariant(format!(
                        "{}: hue {h} outside [0, 360)",
                        self.id
                    )));
                }
            }
        }
        raster::occupancy(self).map(|_| ())
    }
}

/// Fill colors for the named palette entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub red: Rgb,
    pub green: Rgb,
    pub blue: Rgb,
    pub yellow: Rgb,
    pub orange: Rgb,
    pub purple: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            red: [255, 0, 0],
            green: [0, 200, 0],
            blue: [0, 0, 255],
            yellow: [255, 220, 0],
            orange: [255, 140, 0],
            purple: [150, 0, 200],
        }
    }
}

impl Palette {
    pub fn named(&self, c: NamedColor) -> Rgb {
        match c {
            NamedColor::Red => self.red,
            NamedColor::Green => self.green,
            NamedColor::Blue => self.blue,
            NamedColor::Yellow => self.yellow,
            NamedColor::Orange => self.orange,
            NamedColor::Purple => self.purple,
        }
    }

    /// Fill for an object color; hues render at full saturation and value.
    pub fn fill(&self, c: ObjectColor) -> Result<Rgb> {
        match c {
            ObjectColor::Named(n) => Ok(self.named(n)),
            ObjectColor::Hue(h) => hsv_to_rgb(h, 1.0, 1.0),
        }
    }
}

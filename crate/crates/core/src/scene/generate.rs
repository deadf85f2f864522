// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment corpora. Every generator is a pure function of `(params, seed)`.
//!
//! Placement draws object centers uniformly inside the canvas (bounding box
//! fully inside) and keeps a candidate only if its pixels are disjoint from
//! every placed object and it owns at least one token cell without taking
//! the last cell of an earlier object. Each object gets
//! [`PLACEMENT_DRAWS`] candidate positions; a scene is restarted up to
//! [`PLACEMENT_RETRY_BUDGET`] times before it is reported as a failure.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::raster::{cell_coverage, for_each_pixel, CellGeometry};
use super::{
    Concept, NamedColor, ObjectColor, ObjectSpec, Rgb, SceneSpec, Shape, CANVAS,
    DEFAULT_BACKGROUND, GRID,
};
use crate::error::{CvError, Result};
use crate::seed::{derive_indexed, rng};
use crate::store::Grid;

/// Scene restarts before a placement failure is reported.
pub const PLACEMENT_RETRY_BUDGET: usize = 100;
/// Candidate positions per object within one scene attempt.
pub const PLACEMENT_DRAWS: usize = 100;

/// `round(x)` with ties going up.
pub fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

struct Placer {
    canvas: (u32, u32),
    geom: CellGeometry,
    occupied: Vec<bool>,
    /// Best `(pixels, object)` per cell among objects passing the threshold.
    best: Vec<(u32, usize)>,
    owned: Vec<u32>,
    objects: Vec<ObjectSpec>,
}

impl Placer {
    fn new(canvas: (u32, u32)) -> Self {
        let geom =
            CellGeometry::new(canvas, Grid::new(GRID, GRID)).expect("canvas divisible by grid");
        Self {
            canvas,
            geom,
            occupied: vec![false; canvas.0 as usize * canvas.1 as usize],
            best: vec![(0, usize::MAX); geom.cells],
            owned: Vec::new(),
            objects: Vec::new(),
        }
    }

    /// Tries to add `o` (center already set). Returns false without side
    /// effects when it collides or would leave some object without a token.
    fn try_add(&mut self, o: &ObjectSpec) -> bool {
        if !o.inside(self.canvas) {
            return false;
        }
        let w = self.canvas.0;
        let mut clash = false;
        for_each_pixel(o, self.canvas, |x, y| {
            clash |= self.occupied[(y * w + x) as usize]
        });
        if clash {
            return false;
        }
        let cov = cell_coverage(o, self.canvas, &self.geom);
        let won: Vec<(usize, u32)> = cov
            .into_iter()
            .filter(|&(c, n)| n >= self.geom.min_pixels && n > self.best[c].0)
            .collect();
        if won.is_empty() {
            return false;
        }
        let mut lost = vec![0u32; self.objects.len()];
        for &(c, _) in &won {
            let prev = self.best[c].1;
            if prev != usize::MAX {
                lost[prev] += 1;
            }
        }
        if lost
            .iter()
            .zip(&self.owned)
            .any(|(&l, &have)| l > 0 && l >= have)
        {
            return false;
        }
        let idx = self.objects.len();
        for (l, have) in lost.iter().zip(self.owned.iter_mut()) {
            *have -= l;
        }
        for &(c, n) in &won {
            self.best[c] = (n, idx);
        }
        self.owned.push(won.len() as u32);
        for_each_pixel(o, self.canvas, |x, y| {
            self.occupied[(y * w + x) as usize] = true
        });
        self.objects.push(o.clone());
        true
    }

    fn place(&mut self, color: ObjectColor, shape: Shape, size: f64, rng: &mut ChaCha8Rng) -> bool {
        let r = size / 2.0;
        let (w, h) = (f64::from(self.canvas.0), f64::from(self.canvas.1));
        if size > w || size > h {
            return false;
        }
        for _ in 0..PLACEMENT_DRAWS {
            let o = ObjectSpec {
                color,
                shape,
                center: (rng.random_range(r..=w - r), rng.random_range(r..=h - r)),
                size,
            };
            if self.try_add(&o) {
                return true;
            }
        }
        false
    }
}

fn draw_size(range: (u32, u32), rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.random_range(range.0..=range.1.max(range.0)))
}

/// Places `items` in order; restarts the whole scene on failure.
pub fn place_scene(
    id: &str,
    items: &[(ObjectColor, Shape)],
    size_range: (u32, u32),
    background: Rgb,
    seed: u64,
) -> Result<SceneSpec> {
    let mut r = rng(seed);
    for _ in 0..PLACEMENT_RETRY_BUDGET {
        let mut placer = Placer::new((CANVAS, CANVAS));
        let ok = items.iter().all(|&(c, s)| {
            let size = draw_size(size_range, &mut r);
            placer.place(c, s, size, &mut r)
        });
        if ok {
            return Ok(SceneSpec {
                id: id.to_owned(),
                canvas: (CANVAS, CANVAS),
                objects: placer.objects,
                background,
                seed,
            });
        }
    }
    Err(CvError::Placement {
        stimulus_id: id.to_owned(),
        attempts: PLACEMENT_RETRY_BUDGET,
    })
}

fn check_size_range(range: (u32, u32)) -> Result<()> {
    if range.0 == 0 || range.0 > range.1 || range.1 > CANVAS {
        return Err(CvError::InvalidInput(format!(
            "invalid size range {range:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillationParams {
    pub colors: Vec<NamedColor>,
    pub shapes: Vec<Shape>,
    pub positions_per_concept: usize,
    pub size_range: (u32, u32),
    pub background: Rgb,
}

impl Default for DistillationParams {
    fn default() -> Self {
        Self {
            colors: NamedColor::ALL.to_vec(),
            shapes: Shape::ALL.to_vec(),
            positions_per_concept: 10,
            size_range: (40, 90),
            background: DEFAULT_BACKGROUND,
        }
    }
}

/// One single-object scene per (color, shape, position), color-major.
pub fn gen_distillation_corpus(params: &DistillationParams, seed: u64) -> Result<Vec<SceneSpec>> {
    if params.positions_per_concept == 0 {
        return Err(CvError::InvalidInput(
            "positions_per_concept must be at least 1".into(),
        ));
    }
    check_size_range(params.size_range)?;
    let mut out = Vec::new();
    for concept in Concept::grid(&params.colors, &params.shapes) {
        for _ in 0..params.positions_per_concept {
            let i = out.len();
            let id = format!("distill-{i:05}");
            let item = [(ObjectColor::Named(concept.color), concept.shape)];
            out.push(place_scene(
                &id,
                &item,
                params.size_range,
                params.background,
                derive_indexed(seed, i as u64),
            )?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HueSweepParams {
    pub count: usize,
    pub shape: Shape,
    pub size_range: (u32, u32),
    pub background: Rgb,
}

impl Default for HueSweepParams {
    fn default() -> Self {
        Self {
            count: 100,
            shape: Shape::Square,
            size_range: (40, 90),
            background: DEFAULT_BACKGROUND,
        }
    }
}

/// `count` single-square scenes with hues `360 · i / count`.
pub fn gen_hue_sweep(count: usize, seed: u64) -> Result<Vec<SceneSpec>> {
    gen_hue_sweep_with(
        &HueSweepParams {
            count,
            ..HueSweepParams::default()
        },
        seed,
    )
}

pub fn gen_hue_sweep_with(params: &HueSweepParams, seed: u64) -> Result<Vec<SceneSpec>> {
    if params.count < 2 {
        return Err(CvError::InvalidInput(
            "hue sweep needs at least 2 hues".into(),
        ));
    }
    check_size_range(params.size_range)?;
    (0..params.count)
        .map(|i| {
            let hue = 360.0 * i as f64 / params.count as f64;
            let id = format!("hue-{i:05}");
            place_scene(
                &id,
                &[(ObjectColor::Hue(hue), params.shape)],
                params.size_range,
                params.background,
                derive_indexed(seed, i as u64),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeCorpusParams {
    pub scenes: usize,
    pub colors: Vec<NamedColor>,
    pub shapes: Vec<Shape>,
    /// Inclusive bounds on distinct objects per scene.
    pub objects_per_scene: (usize, usize),
    /// Target fraction of scenes containing each concept.
    pub presence_rate: f64,
    pub balance_tolerance: f64,
    pub size_range: (u32, u32),
    pub background: Rgb,
}

impl Default for ProbeCorpusParams {
    fn default() -> Self {
        Self {
            scenes: 200,
            colors: NamedColor::ALL.to_vec(),
            shapes: Shape::ALL.to_vec(),
            objects_per_scene: (12, 24),
            presence_rate: 0.5,
            balance_tolerance: 0.1,
            size_range: (32, 48),
            background: DEFAULT_BACKGROUND,
        }
    }
}

/// A multi-object scene with presence labels for every composite concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeScene {
    pub scene: SceneSpec,
    pub labels: IndexMap<String, bool>,
}

/// Presence labels of `scene` over `concepts`.
pub fn presence_labels(scene: &SceneSpec, concepts: &[Concept]) -> IndexMap<String, bool> {
    let present: BTreeSet<Concept> = scene
        .objects
        .iter()
        .filter_map(ObjectSpec::concept)
        .collect();
    concepts
        .iter()
        .map(|c| (c.label(), present.contains(c)))
        .collect()
}

/// Every concept is present in exactly `round(presence_rate · scenes)`
/// scenes. Columns of the scene × concept incidence matrix start as shuffled
/// blocks of ones; rows outside `objects_per_scene` are then repaired by
/// moving ones within a column, which keeps every concept's count fixed.
pub fn gen_probe_corpus(params: &ProbeCorpusParams, seed: u64) -> Result<Vec<ProbeScene>> {
    let concepts = Concept::grid(&params.colors, &params.shapes);
    let (lo, hi) = params.objects_per_scene;
    let n = params.scenes;
    if n == 0 || lo > hi || hi > concepts.len() || !(0.0..=1.0).contains(&params.presence_rate) {
        return Err(CvError::InvalidInput(format!(
            "infeasible probe corpus request: {params:?}"
        )));
    }
    check_size_range(params.size_range)?;
    let k = round_half_up(params.presence_rate * n as f64) as usize;
    let realized = k as f64 / n as f64;
    if (realized - params.presence_rate).abs() > params.balance_tolerance {
        return Err(CvError::InvalidInput(format!(
            "infeasible balance: {n} scenes cannot realize presence rate {} within {}",
            params.presence_rate, params.balance_tolerance
        )));
    }
    let total = k * concepts.len();
    if total < lo * n || total > hi * n {
        return Err(CvError::InvalidInput(format!(
            "infeasible balance: {k} of {n} scenes per concept implies {:.1} objects per scene, outside {lo}..={hi}",
            total as f64 / n as f64
        )));
    }
    let incidence = balanced_incidence(
        n,
        concepts.len(),
        k,
        (lo, hi),
        derive_indexed(seed, u64::MAX),
    );
    let mut out = Vec::with_capacity(n);
    for (i, row) in incidence.iter().enumerate() {
        let items: Vec<_> = concepts
            .iter()
            .zip(row)
            .filter(|(_, &on)| on)
            .map(|(c, _)| (ObjectColor::Named(c.color), c.shape))
            .collect();
        let scene_seed = derive_indexed(seed, i as u64);
        let scene = place_scene(
            &format!("probe-{i:05}"),
            &items,
            params.size_range,
            params.background,
            scene_seed,
        )?;
        let labels = presence_labels(&scene, &concepts);
        out.push(ProbeScene { scene, labels });
    }
    Ok(out)
}

/// `rows × cols` boolean matrix with exactly `k` ones per column and row sums
/// within `bounds`. Requires `bounds.0 · rows ≤ k · cols ≤ bounds.1 · rows`.
fn balanced_incidence(
    rows: usize,
    cols: usize,
    k: usize,
    bounds: (usize, usize),
    seed: u64,
) -> Vec<Vec<bool>> {
    use rand::seq::SliceRandom;
    let mut r = rng(seed);
    let mut m = vec![vec![false; cols]; rows];
    let mut order: Vec<usize> = (0..rows).collect();
    #[allow(clippy::needless_range_loop)]
    for c in 0..cols {
        order.shuffle(&mut r);
        for &row in &order[..k] {
            m[row][c] = true;
        }
    }
    let sum = |m: &Vec<Vec<bool>>, i: usize| m[i].iter().filter(|&&b| b).count();
    loop {
        let sums: Vec<usize> = (0..rows).map(|i| sum(&m, i)).collect();
        // a row above the upper bound gives to the lightest row, a row below
        // the lower bound takes from the heaviest
        let fix = sums
            .iter()
            .position(|&s| s > bounds.1)
            .map(|over| (over, (0..rows).min_by_key(|&j| sums[j]).unwrap()))
            .or_else(|| {
                sums.iter()
                    .position(|&s| s < bounds.0)
                    .map(|under| ((0..rows).max_by_key(|&j| sums[j]).unwrap(), under))
            });
        let Some((from, to)) = fix else { break };
        let cols_movable: Vec<usize> = (0..cols).filter(|&c| m[from][c] && !m[to][c]).collect();
        let &c = cols_movable
            .choose(&mut r)
            .expect("heavier row has a column the lighter row lacks");
        m[from][c] = false;
        m[to][c] = true;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualSearchParams {
    pub n_dist_values: Vec<u32>,
    pub p_int_values: Vec<f64>,
    /// Trials per (n_dist, p_int, present) cell.
    pub trials_per_cell: usize,
    pub colors: Vec<NamedColor>,
    pub shapes: Vec<Shape>,
    pub size_range: (u32, u32),
    pub background: Rgb,
}

impl Default for VisualSearchParams {
    fn default() -> Self {
        Self {
            n_dist_values: vec![4, 10, 20, 30, 40],
            p_int_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            trials_per_cell: 40,
            colors: NamedColor::ALL.to_vec(),
            shapes: Shape::ALL.to_vec(),
            size_range: (36, 52),
            background: DEFAULT_BACKGROUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualSearchTrial {
    pub scene: SceneSpec,
    pub target: Concept,
    pub target_present: bool,
    pub n_dist: u32,
    pub p_int: f64,
    /// Distractors sharing exactly one feature with the target.
    pub n_high: u32,
}

impl VisualSearchTrial {
    /// Distractor concepts (every object except one target instance).
    pub fn distractors(&self) -> Vec<Concept> {
        let mut skipped = !self.target_present;
        self.scene
            .objects
            .iter()
            .filter_map(ObjectSpec::concept)
            .filter(|&c| {
                if !skipped && c == self.target {
                    skipped = true;
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    /// Verifies the composition rule and target multiplicity.
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(CvError::Invariant(format!("{}: {m}", self.scene.id)));
        let concepts: Vec<Concept> = self
            .scene
            .objects
            .iter()
            .filter_map(ObjectSpec::concept)
            .collect();
        if concepts.len() != self.scene.objects.len() {
            return fail("visual-search objects must use named colors".into());
        }
        let targets = concepts.iter().filter(|&&c| c == self.target).count();
        if targets != usize::from(self.target_present) {
            return fail(format!(
                "{targets} target instances, present = {}",
                self.target_present
            ));
        }
        let d = self.distractors();
        if d.len() != self.n_dist as usize {
            return fail(format!("{} distractors, expected {}", d.len(), self.n_dist));
        }
        let high = d
            .iter()
            .filter(|c| c.shared_features(self.target) == 1)
            .count() as u32;
        let low = d
            .iter()
            .filter(|c| c.shared_features(self.target) == 0)
            .count() as u32;
        let k = round_half_up(f64::from(self.n_dist) * self.p_int);
        if high != k || low != self.n_dist - k || self.n_high != k {
            return fail(format!(
                "composition ({high}, {low}) != ({k}, {})",
                self.n_dist - k
            ));
        }
        Ok(())
    }
}

/// Generated trials plus the stimulus ids whose placement failed.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualSearchBatch {
    pub trials: Vec<VisualSearchTrial>,
    pub failures: Vec<String>,
}

pub fn gen_visual_search_trials(
    params: &VisualSearchParams,
    seed: u64,
) -> Result<VisualSearchBatch> {
    check_size_range(params.size_range)?;
    if params.colors.len() < 2 || params.shapes.len() < 2 {
        return Err(CvError::InvalidInput(
            "visual search needs at least 2 colors and 2 shapes".into(),
        ));
    }
    for &n in &params.n_dist_values {
        if !(4..=40).contains(&n) {
            return Err(CvError::InvalidInput(format!("n_dist {n} outside [4, 40]")));
        }
    }
    for &p in &params.p_int_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(CvError::InvalidInput(format!("p_int {p} outside [0, 1]")));
        }
    }
    let all = Concept::grid(&params.colors, &params.shapes);
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    let mut index = 0u64;
    for &n_dist in &params.n_dist_values {
        for &p_int in &params.p_int_values {
            for present in [true, false] {
                for _ in 0..params.trials_per_cell {
                    let id = format!("vsearch-{index:05}");
                    let scene_seed = derive_indexed(seed, index);
                    index += 1;
                    let mut r = rng(scene_seed ^ 0x7673);
                    let target = *all.choose(&mut r).expect("non-empty concept grid");
                    let high: Vec<Concept> = all
                        .iter()
                        .copied()
                        .filter(|c| c.shared_features(target) == 1)
                        .collect();
                    let low: Vec<Concept> = all
                        .iter()
                        .copied()
                        .filter(|c| c.shared_features(target) == 0)
                        .collect();
                    let k = round_half_up(f64::from(n_dist) * p_int);
                    let mut items: Vec<Concept> =
                        (0..k).map(|_| *high.choose(&mut r).unwrap()).collect();
                    items.extend((k..n_dist).map(|_| *low.choose(&mut r).unwrap()));
                    if present {
                        let at = r.random_range(0..=items.len());
                        items.insert(at, target);
                    }
                    let items: Vec<_> = items
                        .iter()
                        .map(|c| (ObjectColor::Named(c.color), c.shape))
                        .collect();
                    match place_scene(
                        &id,
                        &items,
                        params.size_range,
                        params.background,
                        scene_seed,
                    ) {
                        Ok(scene) => trials.push(VisualSearchTrial {
                            scene,
                            target,
                            target_present: present,
                            n_dist,
                            p_int,
                            n_high: k,
                        }),
                        Err(CvError::Placement { stimulus_id, .. }) => failures.push(stimulus_id),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(VisualSearchBatch { trials, failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityParams {
    pub trials: usize,
    /// Inclusive bounds on labelled setup squares.
    pub setup_size: (usize, usize),
    /// Minimum circular distance between setup hues, degrees.
    pub min_sep: f64,
    pub square_size: u32,
    pub query_size: u32,
    pub background: Rgb,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            trials: 200,
            setup_size: (4, 12),
            min_sep: 10.0,
            square_size: 56,
            query_size: 112,
            background: DEFAULT_BACKGROUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledHue {
    pub label: String,
    pub hue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTrial {
    pub id: String,
    pub setup: Vec<LabeledHue>,
    pub query_hue: f64,
    pub setup_scene: SceneSpec,
    pub query_scene: SceneSpec,
}

impl SimilarityTrial {
    pub fn check(&self) -> Result<()> {
        let n = self.setup.len();
        if !(4..=12).contains(&n) {
            return Err(CvError::Invariant(format!(
                "{}: setup size {n} outside [4, 12]",
                self.id
            )));
        }
        let labels: BTreeSet<&str> = self.setup.iter().map(|l| l.label.as_str()).collect();
        if labels.len() != n {
            return Err(CvError::Invariant(format!(
                "{}: duplicate setup labels",
                self.id
            )));
        }
        Ok(())
    }
}

/// Circular hue distance in degrees, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn letter(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

pub fn gen_similarity_trials(params: &SimilarityParams, seed: u64) -> Result<Vec<SimilarityTrial>> {
    let (lo, hi) = params.setup_size;
    if lo < 4 || hi > 12 || lo > hi {
        return Err(CvError::InvalidInput(format!(
            "setup size {lo}..={hi} outside [4, 12]"
        )));
    }
    if params.min_sep * hi as f64 > 360.0 {
        return Err(CvError::InvalidInput(format!(
            "min_sep {} too large for {hi} setup hues",
            params.min_sep
        )));
    }
    let size = (params.square_size, params.square_size);
    (0..params.trials)
        .map(|i| {
            let trial_seed = derive_indexed(seed, i as u64);
            let mut r = rng(trial_seed ^ 0x73_696d);
            let n = r.random_range(lo..=hi);
            let mut hues: Vec<f64> = Vec::with_capacity(n);
            let mut guard = 0;
            while hues.len() < n {
                let h = r.random_range(0.0..360.0);
                if hues
                    .iter()
                    .all(|&o| circular_distance(o, h) >= params.min_sep)
                {
                    hues.push(h);
                }
                guard += 1;
                if guard > 100_000 {
                    return Err(CvError::InvalidInput(
                        "could not sample separated hues".into(),
                    ));
                }
            }
            let query_hue = r.random_range(0.0..360.0);
            let items: Vec<_> = hues
                .iter()
                .map(|&h| (ObjectColor::Hue(h), Shape::Square))
                .collect();
            let id = format!("sim-{i:05}");
            let setup_scene = place_scene(
                &format!("{id}-setup"),
                &items,
                size,
                params.background,
                trial_seed,
            )?;
            let q = f64::from(params.query_size);
            let query_scene = SceneSpec {
                id: format!("{id}-query"),
                canvas: (CANVAS, CANVAS),
                objects: vec![ObjectSpec {
                    color: ObjectColor::Hue(query_hue),
                    shape: Shape::Square,
                    center: (f64::from(CANVAS) / 2.0, f64::from(CANVAS) / 2.0),
                    size: q,
                }],
                background: params.background,
                seed: trial_seed,
            };
            // letters follow placement order
            let setup = setup_scene
                .objects
                .iter()
                .enumerate()
                .map(|(k, o)| LabeledHue {
                    label: letter(k),
                    hue: match o.color {
                        ObjectColor::Hue(h) => h,
                        ObjectColor::Named(_) => unreachable!("setup squares are hue-valued"),
                    },
                })
                .collect();
            Ok(SimilarityTrial {
                id,
                setup,
                query_hue,
                setup_scene,
                query_scene,
            })
        })
        .collect()
}

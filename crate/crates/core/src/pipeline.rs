// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end oracle run: generate → embed → distill → steering, geometry,
//! visual search and similarity → `report.txt`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::bench::{
    run_similarity_oracle, run_visual_search, write_records_csv, HueVectorTable, LinearHueDecay,
    SimilarityFn, SimilarityReport, VisualSearchReport,
};
use crate::config::ExperimentConfig;
use crate::distill::{
    centroid_store, color_store, probe_store, regularize_store, Grouping, ProbeRun,
};
use crate::error::{CvError, Result};
use crate::geometry::{
    cosine_matrix, factors_from_labels, group_similarity_stats, pca_project, rsa,
    semantic_similarity_function, similarity_profile,
};
use crate::linalg::to_f64;
use crate::oracle::OracleWorld;
use crate::scene::{
    gen_distillation_corpus, gen_hue_sweep_with, gen_probe_corpus, gen_similarity_trials,
    gen_visual_search_trials, hsv_to_rgb, Concept, DistillationParams, ObjectColor, SceneSpec,
};
use crate::steering::{
    run_color_swap_protocol, steer, valid_triples, ColorImage, SteeringSpec, TripleSummary,
};
use crate::store::{
    decode, encode, write_activation_set, write_concept_store, ActivationSequence, ActivationSet,
    ConceptStore, ConceptVector, Method,
};

/// Ordered `key = value` report lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: IndexMap<String, String>,
}

impl Report {
    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.insert(key.to_owned(), value.to_string());
    }

    fn num(&mut self, key: &str, v: f64) {
        self.set(key, format!("{v:.9}"));
    }

    fn opt(&mut self, key: &str, v: Option<f64>) {
        match v {
            Some(v) => self.num(key, v),
            None => self.set(key, "n/a"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Run outcome: the report and the directory it was written to.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub dir: PathBuf,
    pub report: Report,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CvError::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| CvError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CvError::io(path, e))
}

pub fn embed_all(world: &OracleWorld, scenes: &[SceneSpec]) -> Result<Vec<ActivationSequence>> {
    scenes.par_iter().map(|s| world.embed(s)).collect()
}

/// Unit `(κ_c + σ_s)` directions for every concept of the grid.
pub fn ground_truth_store(world: &OracleWorld, concepts: &[Concept]) -> Result<ConceptStore> {
    let vectors = concepts
        .iter()
        .map(|&c| {
            ConceptVector::from_raw(
                &world.composite_direction(c),
                c.label(),
                Method::GroundTruth,
                world.model_id(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptStore::new(world.model_id(), world.d(), vectors)
}

/// Unit color directions `κ_c`.
pub fn ground_truth_colors(
    world: &OracleWorld,
    colors: &[crate::scene::NamedColor],
) -> Result<ConceptStore> {
    let vectors = colors
        .iter()
        .map(|&c| {
            ConceptVector::from_raw(
                world.color_dir(c),
                c.name(),
                Method::GroundTruth,
                world.model_id(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptStore::new(world.model_id(), world.d(), vectors)
}

fn min_mean(values: &[f64]) -> (f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (min, values.iter().sum::<f64>() / values.len().max(1) as f64)
}

fn cosine_to(v: &ConceptVector, truth: &[f64]) -> f64 {
    crate::linalg::cosine_f32(v.direction(), &crate::linalg::to_f32(truth))
}

/// Single-object named-color scenes paired with their activations, as
/// color-swap inputs.
pub fn color_images(scenes: &[SceneSpec], acts: &[ActivationSequence]) -> Vec<ColorImage> {
    scenes
        .iter()
        .zip(acts)
        .filter_map(|(s, a)| match s.objects.as_slice() {
            [o] => match o.color {
                ObjectColor::Named(c) => Some(ColorImage {
                    acts: a.clone(),
                    object_name: o.shape.name().to_owned(),
                    true_color: c,
                }),
                ObjectColor::Hue(_) => None,
            },
            _ => None,
        })
        .collect()
}

/// The dedicated visual-search world with centroid vectors distilled in it
/// over the generator's colors and shapes; `None` when the stage shares the
/// main world.
pub fn visual_search_setup(cfg: &ExperimentConfig) -> Result<Option<(OracleWorld, ConceptStore)>> {
    let stage = &cfg.visual_search;
    let Some(spec) = &stage.world else {
        return Ok(None);
    };
    let world = OracleWorld::new(spec.clone())?;
    let params = DistillationParams {
        colors: stage.generator.colors.clone(),
        shapes: stage.generator.shapes.clone(),
        ..cfg.distill.clone()
    };
    let scenes = gen_distillation_corpus(&params, cfg.stage_seed("visual-search-corpus"))?;
    let acts = embed_all(&world, &scenes)?;
    let pairs: Vec<_> = scenes.iter().zip(&acts).collect();
    let store = centroid_store(&pairs, &world.model_id(), Grouping::Object)?;
    Ok(Some((world, store)))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    world: OracleWorld,
    concepts: Vec<Concept>,
    report: Report,
}

/// Runs every enabled stage and writes artifacts plus `report.txt` under
/// `dir` (or the configured output directory).
pub fn full_pipeline(config: &ExperimentConfig, dir: Option<&Path>) -> Result<PipelineRun> {
    let cfg = config.resolved();
    cfg.check()?;
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CvError::Config("no output directory given".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| CvError::io(&dir, e))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml()?)?;
    let world = OracleWorld::new(cfg.world.clone()).map_err(|e| e.in_stage("world"))?;
    let mut ctx = Ctx {
        cfg: &cfg,
        dir: &dir,
        concepts: Concept::grid(&cfg.distill.colors, &cfg.distill.shapes),
        world,
        report: Report::default(),
    };
    ctx.report.set("seed", cfg.seed);
    ctx.report.set("model_id", ctx.world.model_id());
    ctx.report.set("method", cfg.method.as_str());
    let (scenes, acts) = ctx.generate_and_embed().map_err(|e| e.in_stage("embed"))?;
    let vectors = ctx
        .distill(&scenes, &acts)
        .map_err(|e| e.in_stage("distill"))?;
    ctx.checks(&acts).map_err(|e| e.in_stage("checks"))?;
    if cfg.steering.enabled {
        ctx.steering(&scenes, &acts, &vectors)
            .map_err(|e| e.in_stage("steering"))?;
    }
    let mut hue_table = None;
    if cfg.geometry.enabled {
        hue_table = Some(ctx.geometry(&vectors).map_err(|e| e.in_stage("geometry"))?);
    }
    if cfg.visual_search.enabled {
        ctx.visual_search(&vectors)
            .map_err(|e| e.in_stage("visual_search"))?;
    }
    if cfg.similarity.enabled {
        ctx.similarity(hue_table.as_ref())
            .map_err(|e| e.in_stage("similarity"))?;
    }
    let report = ctx.report;
    write_text(&dir.join("report.txt"), &report.render())?;
    Ok(PipelineRun { dir, report })
}

impl Ctx<'_> {
    fn generate_and_embed(&mut self) -> Result<(Vec<SceneSpec>, Vec<ActivationSequence>)> {
        let scenes =
            gen_distillation_corpus(&self.cfg.distill, self.cfg.stage_seed("distill-corpus"))?;
        let acts = embed_all(&self.world, &scenes)?;
        let set = ActivationSet::new(self.world.model_id(), self.world.d(), acts.clone())?;
        write_activation_set(&set, self.dir.join("activations.cva"))?;
        self.report.set("corpus.scenes", scenes.len());
        Ok((scenes, acts))
    }

    fn distill(
        &mut self,
        scenes: &[SceneSpec],
        acts: &[ActivationSequence],
    ) -> Result<ConceptStore> {
        let model_id = self.world.model_id();
        let store = match self.cfg.method {
            Method::Centroid => {
                let pairs: Vec<_> = scenes.iter().zip(acts).collect();
                centroid_store(&pairs, &model_id, Grouping::Object)?
            }
            Method::Probe | Method::PcaProbe => {
                let run = self.train_probes()?;
                if self.cfg.method == Method::PcaProbe {
                    let (s, warning) = regularize_store(&run.store)?;
                    if let Some(w) = warning {
                        self.report.set("distill.pca_warning", w);
                    }
                    s
                } else {
                    run.store
                }
            }
            Method::GroundTruth => {
                return Err(CvError::Config(
                    "ground-truth vectors are not distilled".into(),
                ))
            }
        };
        // keep grid order
        let ordered = self
            .concepts
            .iter()
            .map(|c| store.require(&c.label()).cloned())
            .collect::<Result<Vec<_>>>()?;
        let store = ConceptStore::new(model_id, store.dim(), ordered)?;
        write_concept_store(&store, self.dir.join("vectors.cvv"))?;
        let cos: Vec<f64> = self
            .concepts
            .iter()
            .zip(store.vectors())
            .map(|(&c, v)| cosine_to(v, &self.world.composite_direction(c)))
            .collect();
        let (min, mean) = min_mean(&cos);
        self.report.set("distill.vectors", store.len());
        self.report.num("distill.min_cos_vs_truth", min);
        self.report.num("distill.mean_cos_vs_truth", mean);
        Ok(store)
    }

    fn train_probes(&mut self) -> Result<ProbeRun> {
        let corpus = gen_probe_corpus(&self.cfg.probe_corpus, self.cfg.stage_seed("probe-corpus"))?;
        let scenes: Vec<SceneSpec> = corpus.iter().map(|p| p.scene.clone()).collect();
        let acts = embed_all(&self.world, &scenes)?;
        let labels: Vec<&IndexMap<String, bool>> = corpus.iter().map(|p| &p.labels).collect();
        let concepts: Vec<String> = self.concepts.iter().map(|c| c.label()).collect();
        let refs: Vec<&ActivationSequence> = acts.iter().collect();
        let run = probe_store(
            &refs,
            &labels,
            &concepts,
            &self.world.model_id(),
            &self.cfg.probe,
        )?;
        write_with(&self.dir.join("probe_metrics.csv"), |w| {
            writeln!(
                w,
                "label,epochs_run,best_epoch,train_loss,holdout_loss,holdout_accuracy,holdout_auc"
            )?;
            for (l, m) in &run.metrics {
                writeln!(
                    w,
                    "{l},{},{},{:.9},{:.9},{:.9},{}",
                    m.epochs_run,
                    m.best_epoch,
                    m.train_loss,
                    m.holdout_loss,
                    m.holdout_accuracy,
                    m.holdout_auc
                        .map_or_else(String::new, |a| format!("{a:.9}"))
                )?;
            }
            Ok(())
        })?;
        let aucs: Vec<f64> = run
            .metrics
            .iter()
            .filter_map(|(_, m)| m.holdout_auc)
            .collect();
        self.report.set("probe.corpus_scenes", corpus.len());
        self.report.opt(
            "probe.min_holdout_auc",
            (!aucs.is_empty()).then(|| min_mean(&aucs).0),
        );
        Ok(run)
    }

    /// Format and transform checks that need no extra corpus.
    fn checks(&mut self, acts: &[ActivationSequence]) -> Result<()> {
        let set = ActivationSet::new(
            self.world.model_id(),
            self.world.d(),
            acts[..acts.len().min(8)].to_vec(),
        )?;
        let bytes = encode(&set)?;
        let back = decode(&bytes)?;
        self.report.set(
            "format.roundtrip_bit_exact",
            encode(&back)? == bytes && back == set,
        );
        let truth = ground_truth_store(&self.world, &self.concepts)?;
        let reg = regularize_store(&truth)?.0;
        let dev = truth
            .vectors()
            .iter()
            .zip(reg.vectors())
            .flat_map(|(a, b)| {
                a.direction()
                    .iter()
                    .zip(b.direction())
                    .map(|(x, y)| f64::from((x - y).abs()))
            })
            .fold(0.0, f64::max);
        self.report.num("checks.pca_exact_max_deviation", dev);
        let v = truth.vectors()[0].clone();
        let spec = SteeringSpec::new(v.clone(), v)?;
        let mut worst = 0.0f64;
        for a in acts.iter().take(8) {
            let s = steer(a, &spec)?;
            for (x, y) in a.as_slice().iter().zip(s.as_slice()) {
                worst = worst.max(f64::from((x - y).abs()) / f64::from(x.abs()).max(1.0));
            }
        }
        self.report
            .num("checks.identity_steer_max_relative_change", worst);
        Ok(())
    }

    fn steering(
        &mut self,
        scenes: &[SceneSpec],
        acts: &[ActivationSequence],
        vectors: &ConceptStore,
    ) -> Result<()> {
        let stage = &self.cfg.steering;
        let mut triples = valid_triples(&self.cfg.distill.colors, &self.cfg.distill.shapes);
        if stage.max_triples > 0 {
            triples.truncate(stage.max_triples);
        }
        let summary = TripleSummary::run(&self.world, &triples, vectors, &stage.triples)?;
        write_with(&self.dir.join("triples.csv"), |w| summary.write_csv(w))?;
        self.report.set("steering.triples", summary.triples);
        self.report
            .set("steering.triples_excluded", summary.excluded);
        self.report
            .set("steering.triples_evaluated", summary.evaluated);
        self.report
            .opt("steering.triple_success_rate", summary.success_rate);
        let images = color_images(scenes, acts);
        let colors = color_store(vectors)?;
        write_concept_store(&colors, self.dir.join("color_vectors.cvv"))?;
        let swap = run_color_swap_protocol(&self.world, &images, &colors, &stage.color_swap)?;
        write_with(&self.dir.join("color_swap.csv"), |w| swap.write_csv(w))?;
        self.report
            .set("steering.color_swap_operations", swap.operations);
        self.report
            .opt("steering.color_swap_success_rate", swap.success_rate());
        Ok(())
    }

    fn geometry(&mut self, vectors: &ConceptStore) -> Result<HueVectorTable> {
        let m = cosine_matrix(vectors.vectors())?;
        m.check()?;
        write_with(&self.dir.join("similarity_matrix.csv"), |w| m.write_csv(w))?;
        write_text(
            &self.dir.join("similarity_matrix.svg"),
            &crate::svg::heatmap("Concept cosine similarity", &m.labels, &m.values),
        )?;
        let groups = group_similarity_stats(&m, &factors_from_labels(&m.labels)?)?;
        write_with(&self.dir.join("group_stats.csv"), |w| groups.write_csv(w))?;
        write_with(&self.dir.join("group_values.csv"), |w| {
            groups.write_values_csv(w)
        })?;
        let strips: Vec<(String, Vec<f64>)> = groups
            .groups()
            .iter()
            .map(|(n, d)| {
                (
                    (*n).to_owned(),
                    d.map(|d| d.values.clone()).unwrap_or_default(),
                )
            })
            .collect();
        write_text(
            &self.dir.join("group_values.svg"),
            &crate::svg::strip("Cosine by shared feature", "cosine", &strips),
        )?;
        for (name, d) in groups.groups() {
            self.report
                .opt(&format!("geometry.{name}_mean"), d.map(|d| d.mean));
        }
        self.report.opt("geometry.separation", groups.separation());
        self.report.opt("geometry.rsa_self", rsa(&m, &m).ok());
        let truth = cosine_matrix(ground_truth_store(&self.world, &self.concepts)?.vectors())?;
        self.report
            .opt("geometry.rsa_vs_truth", rsa(&m, &truth).ok());

        let params = &self.cfg.geometry.hue_sweep;
        let scenes = gen_hue_sweep_with(params, self.cfg.stage_seed("hue-sweep"))?;
        let acts = embed_all(&self.world, &scenes)?;
        let pairs: Vec<_> = scenes.iter().zip(&acts).collect();
        let hue_vectors = centroid_store(&pairs, &self.world.model_id(), Grouping::Object)?;
        write_concept_store(&hue_vectors, self.dir.join("hue_vectors.cvv"))?;
        let profile = semantic_similarity_function(hue_vectors.vectors())?;
        write_with(&self.dir.join("hue_profile.csv"), |w| profile.write_csv(w))?;
        let planar: Vec<(f64, Vec<f64>)> = profile
            .hues
            .iter()
            .map(|&h| (h, self.world.hue_direction(h)))
            .collect();
        let planar = similarity_profile(&planar)?;
        let dev = planar
            .per_hue
            .iter()
            .flat_map(|g| {
                g.iter()
                    .zip(&planar.deltas)
                    .map(|(v, d)| (v - d.to_radians().cos()).abs())
            })
            .fold(0.0, f64::max);
        self.report
            .num("geometry.planar_profile_max_deviation", dev);
        self.report
            .set("geometry.hue_tail_ripples", profile.tail_ripples());
        let series = vec![
            ("distilled".to_owned(), profile.folded_mean()),
            ("planar".to_owned(), planar.folded_mean()),
        ];
        write_text(
            &self.dir.join("hue_profile.svg"),
            &crate::svg::line_chart("Hue similarity g(Δ)", "Δ (degrees)", "cosine", &series),
        )?;
        let rows: Vec<Vec<f64>> = hue_vectors
            .vectors()
            .iter()
            .map(|v| to_f64(v.direction()))
            .collect();
        let k = self.cfg.geometry.pca_components;
        let proj = pca_project(&rows, k)?;
        let labels: Vec<String> = hue_vectors
            .vectors()
            .iter()
            .map(|v| v.label.clone())
            .collect();
        write_with(&self.dir.join("hue_pca.csv"), |w| {
            proj.write_csv(&labels, w)
        })?;
        let fills: Vec<String> = profile
            .hues
            .iter()
            .map(|&h| {
                let [r, g, b] = hsv_to_rgb(h, 1.0, 1.0)?;
                Ok(format!("rgb({r},{g},{b})"))
            })
            .collect::<Result<_>>()?;
        let pts: Vec<(f64, f64)> = proj
            .coords
            .iter()
            .map(|c| (c[0], c.get(1).copied().unwrap_or(0.0)))
            .collect();
        write_text(
            &self.dir.join("hue_pca.svg"),
            &crate::svg::scatter_colored("Hue vectors, PC1 vs PC2", "PC1", "PC2", &pts, &fills),
        )?;
        self.report.num(
            "geometry.hue_pca_top2_explained",
            proj.explained.iter().take(2).sum(),
        );
        HueVectorTable::from_store(&hue_vectors)
    }

    fn visual_search(&mut self, vectors: &ConceptStore) -> Result<()> {
        let stage = &self.cfg.visual_search;
        let separate = visual_search_setup(self.cfg)?;
        let (world, store) = match &separate {
            Some((w, s)) => (w, s),
            None => (&self.world, vectors),
        };
        let batch =
            gen_visual_search_trials(&stage.generator, self.cfg.stage_seed("visual-search"))?;
        let records = run_visual_search(world, &batch.trials, store)?;
        let report = VisualSearchReport::new(&records, stage.bins, stage.min_per_bin)?;
        write_with(&self.dir.join("visual_search_trials.csv"), |w| {
            write_records_csv(&records, w)
        })?;
        write_with(&self.dir.join("visual_search_bins.csv"), |w| {
            report.write_bins_csv(w)
        })?;
        write_with(&self.dir.join("visual_search_summary.csv"), |w| {
            report.write_summary_csv(w)
        })?;
        write_text(&self.dir.join("visual_search.svg"), &report.svg())?;
        self.report.set("visual_search.trials", report.trials);
        self.report
            .set("visual_search.placement_failures", batch.failures.len());
        self.report.num("visual_search.accuracy", report.accuracy);
        for present in [true, false] {
            let c = report.condition(present);
            let name = if present { "present" } else { "absent" };
            self.report.opt(
                &format!("visual_search.{name}_binned_r"),
                c.and_then(|c| c.binned_r),
            );
            self.report.opt(
                &format!("visual_search.{name}_trial_r"),
                c.and_then(|c| c.trial_r),
            );
        }
        Ok(())
    }

    fn similarity(&mut self, hue_table: Option<&HueVectorTable>) -> Result<()> {
        let trials = gen_similarity_trials(
            &self.cfg.similarity.generator,
            self.cfg.stage_seed("similarity"),
        )?;
        let records = run_similarity_oracle(&self.world, &trials);
        let mut fns: Vec<(&str, &dyn SimilarityFn)> =
            vec![("oracle", &self.world), ("hue", &LinearHueDecay)];
        if let Some(t) = hue_table {
            fns.push(("vectors", t));
        }
        self.report.set("similarity.trials", records.len());
        let mut svg = None;
        for (key, g) in fns {
            let r = SimilarityReport::new(&records, g)?;
            write_with(&self.dir.join(format!("similarity_{key}.csv")), |w| {
                r.write_csv(w)
            })?;
            self.report.num(
                &format!("similarity.{key}_prediction_accuracy"),
                r.prediction_accuracy,
            );
            self.report
                .opt(&format!("similarity.{key}_confidence_r"), r.confidence_r);
            svg.get_or_insert_with(|| r.svg());
        }
        if let Some(svg) = svg {
            write_text(&self.dir.join("similarity.svg"), &svg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{NamedColor, Shape};

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.distill.colors = NamedColor::ALL[..3].to_vec();
        c.distill.shapes = Shape::ALL[..3].to_vec();
        c.distill.positions_per_concept = 2;
        c.steering.max_triples = 6;
        c.steering.color_swap.colors = c.distill.colors.clone();
        c.steering.color_swap.per_pair = 2;
        c.geometry.hue_sweep.count = 12;
        c.visual_search.generator.colors = NamedColor::ALL.to_vec();
        c.visual_search.generator.n_dist_values = vec![4];
        c.visual_search.generator.p_int_values = vec![0.0, 1.0];
        c.visual_search.generator.trials_per_cell = 10;
        c.visual_search.min_per_bin = 1;
        c.similarity.generator.trials = 10;
        c
    }

    #[test]
    fn small_run_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = full_pipeline(&small(), Some(&dir.path().join("a"))).unwrap();
        let b = full_pipeline(&small(), Some(&dir.path().join("b"))).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.get("format.roundtrip_bit_exact"), Some("true"));
        assert_eq!(a.report.get_f64("steering.triple_success_rate"), Some(1.0));
        for f in [
            "triples.csv",
            "similarity_matrix.csv",
            "hue_profile.csv",
            "visual_search_bins.csv",
            "similarity_hue.csv",
        ] {
            let x = std::fs::read(a.dir.join(f)).unwrap();
            assert_eq!(x, std::fs::read(b.dir.join(f)).unwrap(), "{f}");
        }
        assert!(a.dir.join("config.toml").exists() && a.dir.join("report.txt").exists());
    }

    #[test]
    fn heavy_noise_degrades_steering_without_failing() {
        let mut c = small();
        c.world.noise_sigma = 0.8;
        c.geometry.enabled = false;
        c.visual_search.enabled = false;
        c.distill.positions_per_concept = 10;
        c.steering.color_swap.per_pair = 10;
        let dir = tempfile::tempdir().unwrap();
        let run = full_pipeline(&c, Some(dir.path())).unwrap();
        // unsteered baselines fail first, so triples may all be excluded
        assert!(run.report.get("steering.triple_success_rate").is_some());
        let rate = run
            .report
            .get_f64("steering.color_swap_success_rate")
            .unwrap();
        assert!(rate < 1.0, "{rate}");
    }

    #[test]
    fn stage_errors_are_named() {
        let mut c = small();
        c.visual_search.min_per_bin = 10_000;
        let dir = tempfile::tempdir().unwrap();
        let e = full_pipeline(&c, Some(dir.path())).unwrap_err();
        assert!(
            matches!(
                e,
                CvError::Stage {
                    stage: "visual_search",
                    ..
                }
            ),
            "{e}"
        );
    }
}

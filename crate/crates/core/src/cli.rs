// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end. [`run`] parses `argv`, executes one subcommand and
//! returns the process exit code: 0 on success, 2 for usage or
//! configuration errors, 1 for anything else.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    run_similarity_oracle, run_similarity_replay, run_visual_search, write_records_csv,
    HueVectorTable, LinearHueDecay, SimilarityFn, SimilarityReport, TrialRecord,
    VisualSearchReport,
};
use crate::config::ExperimentConfig;
use crate::distill::{centroid_store, color_store, probe_store, regularize_store, Grouping};
use crate::error::{CvError, Result};
use crate::geometry::{
    cosine_matrix, factors_from_labels, group_similarity_stats, pca_project, rsa,
    semantic_similarity_function,
};
use crate::linalg::to_f64;
use crate::model::VisionModel;
use crate::oracle::OracleWorld;
use crate::pipeline::{color_images, embed_all, full_pipeline, visual_search_setup};
use crate::scene::io::{read_manifest, write_corpus, CorpusRecord};
use crate::scene::{
    gen_distillation_corpus, gen_hue_sweep_with, gen_probe_corpus, gen_similarity_trials,
    gen_visual_search_trials, split_label, Palette, SceneSpec, SimilarityTrial, VisualSearchTrial,
};
use crate::steering::replay::read_replay;
use crate::steering::{run_color_swap_protocol, valid_triples, ReplayModel, TripleSummary};
use crate::store::{
    read_activation_set, read_concept_store, validate_container, write_activation_set,
    write_concept_store, ActivationSequence, ActivationSet, ConceptStore, Method,
};

#[derive(Debug, Parser)]
#[command(
    name = "cvkit",
    version,
    about = "Concept vectors for vision-language activations"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file, for `embed` and `distill`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate stimulus corpora.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Capture activations.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Distill concept vectors from activations.
    Distill(DistillArgs),
    /// Steering protocols.
    #[command(subcommand)]
    Steer(SteerCmd),
    /// Representational geometry.
    #[command(subcommand)]
    Geometry(GeometryCmd),
    /// Behavioral benchmarks.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// End-to-end runs.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Check activation containers.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Distill,
    HueSweep,
    Probe,
    VisualSearch,
    Similarity,
}

#[derive(Debug, Subcommand)]
enum GenCmd {
    Stimuli {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Positions per concept, hues, probe scenes, trials per cell or
        /// similarity trials, by kind.
        #[arg(long)]
        count: Option<usize>,
        /// Also render every scene to PNG.
        #[arg(long)]
        png: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WorldChoice {
    Main,
    VisualSearch,
}

#[derive(Debug, Subcommand)]
enum EmbedCmd {
    Oracle {
        /// Corpus directory or manifest.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "main")]
        world: WorldChoice,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Probe,
    PcaProbe,
    Centroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupingArg {
    Object,
    Color,
}

#[derive(Debug, Args)]
struct DistillArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Activation container.
    #[arg(long)]
    acts: PathBuf,
    /// Corpus the activations were captured from; defaults to the container
    /// path without its extension.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "object")]
    grouping: GroupingArg,
}

/// Model selection: the configured oracle unless a capture is supplied.
#[derive(Debug, Args)]
struct ModelArgs {
    /// Captured activations; requires `--replay`.
    #[arg(long, requires = "replay")]
    acts: Option<PathBuf>,
    /// Recorded answers for the captured activations.
    #[arg(long, requires = "acts")]
    replay: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SteerCmd {
    EvalTriples {
        #[arg(long)]
        vectors: PathBuf,
        /// Evaluate only the first N valid triples.
        #[arg(long)]
        max_triples: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
    },
    EvalColorSwap {
        /// Composite `color|shape` vectors or plain color vectors.
        #[arg(long)]
        vectors: PathBuf,
        /// Single-object corpus; defaults to a fresh distillation corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug, Subcommand)]
enum GeometryCmd {
    Matrix {
        #[arg(long)]
        vectors: PathBuf,
    },
    Profile {
        /// Vectors labelled `hue:<degrees>|<shape>`.
        #[arg(long)]
        vectors: PathBuf,
    },
    Rsa {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        other: PathBuf,
    },
    Pca {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value_t = 3)]
        components: usize,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCmd {
    VisualSearch {
        /// Composite vectors for interference scores; distilled on the fly
        /// when omitted.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Visual-search corpus for replay runs.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    Similarity {
        /// Hue vectors for an additional vector-based similarity function.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Similarity corpus for replay runs.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Recorded answers.
        #[arg(long, requires = "corpus")]
        replay: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum PipelineCmd {
    Run,
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CvError::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = g.threads {
        cfg.threads = t;
    }
    let cfg = cfg.resolved();
    cfg.check()?;
    Ok(cfg)
}

fn out_path(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.out
        .as_deref()
        .ok_or_else(|| CvError::Config("--out is required".into()))
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = out_path(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| CvError::io(dir, e))?;
    Ok(dir)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CvError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| CvError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CvError::io(path, e))
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    if cfg.threads > 0 {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    match cli.command {
        Command::Gen(GenCmd::Stimuli { kind, count, png }) => gen_stimuli(&cfg, kind, count, png),
        Command::Embed(EmbedCmd::Oracle { corpus, world }) => embed_oracle(&cfg, &corpus, world),
        Command::Distill(a) => distill(&cfg, &a),
        Command::Steer(c) => steer(&cfg, c),
        Command::Geometry(c) => geometry(&cfg, c),
        Command::Bench(c) => bench(&cfg, c),
        Command::Pipeline(PipelineCmd::Run) => {
            let run = full_pipeline(&cfg, None)?;
            print!("{}", run.report.render());
            Ok(())
        }
        Command::Validate { files } => validate(&files),
    }
}

fn gen_stimuli(cfg: &ExperimentConfig, kind: Kind, count: Option<usize>, png: bool) -> Result<()> {
    let dir = out_dir(cfg)?;
    let records: Vec<CorpusRecord> = match kind {
        Kind::Distill => {
            let mut p = cfg.distill.clone();
            p.positions_per_concept = count.unwrap_or(p.positions_per_concept);
            let scenes = gen_distillation_corpus(&p, cfg.stage_seed("distill-corpus"))?;
            scenes.into_iter().map(Into::into).collect()
        }
        Kind::HueSweep => {
            let mut p = cfg.geometry.hue_sweep.clone();
            p.count = count.unwrap_or(p.count);
            let scenes = gen_hue_sweep_with(&p, cfg.stage_seed("hue-sweep"))?;
            scenes.into_iter().map(Into::into).collect()
        }
        Kind::Probe => {
            let mut p = cfg.probe_corpus.clone();
            p.scenes = count.unwrap_or(p.scenes);
            let scenes = gen_probe_corpus(&p, cfg.stage_seed("probe-corpus"))?;
            scenes.into_iter().map(CorpusRecord::Probe).collect()
        }
        Kind::VisualSearch => {
            let mut p = cfg.visual_search.generator.clone();
            p.trials_per_cell = count.unwrap_or(p.trials_per_cell);
            let batch = gen_visual_search_trials(&p, cfg.stage_seed("visual-search"))?;
            for f in &batch.failures {
                eprintln!("placement failure: {f}");
            }
            batch
                .trials
                .into_iter()
                .map(CorpusRecord::VisualSearch)
                .collect()
        }
        Kind::Similarity => {
            let mut p = cfg.similarity.generator.clone();
            p.trials = count.unwrap_or(p.trials);
            let trials = gen_similarity_trials(&p, cfg.stage_seed("similarity"))?;
            trials.into_iter().map(CorpusRecord::Similarity).collect()
        }
    };
    let manifest = write_corpus(dir, &records, &Palette::default(), png)?;
    println!("{} records -> {}", records.len(), manifest.display());
    Ok(())
}

fn corpus_scenes(records: &[CorpusRecord]) -> Vec<SceneSpec> {
    records
        .iter()
        .flat_map(CorpusRecord::scenes)
        .cloned()
        .collect()
}

fn world_for(cfg: &ExperimentConfig, choice: WorldChoice) -> Result<OracleWorld> {
    match (choice, &cfg.visual_search.world) {
        (WorldChoice::VisualSearch, Some(spec)) => OracleWorld::new(spec.clone()),
        _ => OracleWorld::new(cfg.world.clone()),
    }
}

fn embed_oracle(cfg: &ExperimentConfig, corpus: &Path, choice: WorldChoice) -> Result<()> {
    let out = out_path(cfg)?;
    let world = world_for(cfg, choice)?;
    let scenes = corpus_scenes(&read_manifest(corpus)?);
    let acts = embed_all(&world, &scenes)?;
    let set = ActivationSet::new(world.model_id(), world.d(), acts)?;
    write_activation_set(&set, out)?;
    println!(
        "{} sequences (d = {}) -> {}",
        set.len(),
        set.dim(),
        out.display()
    );
    Ok(())
}

fn default_corpus(acts: &Path) -> PathBuf {
    acts.with_extension("")
}

/// Activations for every scene of the corpus, matched by stimulus id.
fn paired<'a>(
    scenes: &'a [SceneSpec],
    set: &'a ActivationSet,
) -> Result<Vec<&'a ActivationSequence>> {
    scenes
        .iter()
        .map(|s| {
            set.get(&s.id).ok_or_else(|| {
                CvError::InvalidInput(format!("no activations for stimulus {:?}", s.id))
            })
        })
        .collect()
}

fn distill(cfg: &ExperimentConfig, a: &DistillArgs) -> Result<()> {
    let out = out_path(cfg)?;
    let method = match a.method {
        Some(MethodArg::Probe) => Method::Probe,
        Some(MethodArg::PcaProbe) => Method::PcaProbe,
        Some(MethodArg::Centroid) => Method::Centroid,
        None => cfg.method,
    };
    let set = read_activation_set(&a.acts)?;
    let corpus = a.corpus.clone().unwrap_or_else(|| default_corpus(&a.acts));
    let records = read_manifest(&corpus)?;
    let store = match method {
        Method::Centroid => {
            let grouping = match a.grouping {
                GroupingArg::Object => Grouping::Object,
                GroupingArg::Color => Grouping::Color,
            };
            let scenes = corpus_scenes(&records);
            let acts = paired(&scenes, &set)?;
            let pairs: Vec<_> = scenes.iter().zip(acts).collect();
            centroid_store(&pairs, &set.model_id, grouping)?
        }
        Method::Probe | Method::PcaProbe => {
            let mut scenes = Vec::new();
            let mut labels = Vec::new();
            for r in &records {
                let l = r.presence_labels().ok_or_else(|| {
                    CvError::InvalidInput("probe training needs a probe corpus".into())
                })?;
                scenes.extend(r.scenes().into_iter().cloned());
                labels.push(l);
            }
            let concepts: Vec<String> = labels
                .first()
                .map(|l| l.keys().cloned().collect())
                .unwrap_or_default();
            let acts = paired(&scenes, &set)?;
            let run = probe_store(&acts, &labels, &concepts, &set.model_id, &cfg.probe)?;
            for (label, m) in &run.metrics {
                let auc = m
                    .holdout_auc
                    .map_or("n/a".to_owned(), |x| format!("{x:.4}"));
                eprintln!("{label}: held-out AUC {auc}, {} epochs", m.epochs_run);
            }
            if method == Method::PcaProbe {
                let (s, warning) = regularize_store(&run.store)?;
                if let Some(w) = warning {
                    eprintln!("warning: {w}");
                }
                s
            } else {
                run.store
            }
        }
        Method::GroundTruth => unreachable!("not a command-line method"),
    };
    write_concept_store(&store, out)?;
    println!("{} vectors -> {}", store.len(), out.display());
    Ok(())
}

/// The configured oracle, or a replay model when a capture is given.
enum Model {
    Oracle(OracleWorld),
    Replay(ReplayModel),
}

impl Model {
    fn new(cfg: &ExperimentConfig, m: &ModelArgs, choice: WorldChoice) -> Result<Self> {
        match (&m.acts, &m.replay) {
            (Some(a), Some(r)) => Ok(Self::Replay(ReplayModel::load(a, r)?)),
            _ => Ok(Self::Oracle(world_for(cfg, choice)?)),
        }
    }

    fn as_dyn(&self) -> &dyn VisionModel {
        match self {
            Self::Oracle(w) => w,
            Self::Replay(r) => r,
        }
    }
}

fn steer(cfg: &ExperimentConfig, c: SteerCmd) -> Result<()> {
    let dir = out_dir(cfg)?;
    match c {
        SteerCmd::EvalTriples {
            vectors,
            max_triples,
            model,
        } => {
            let vectors = read_concept_store(vectors)?;
            let model = Model::new(cfg, &model, WorldChoice::Main)?;
            let mut triples = valid_triples(&cfg.distill.colors, &cfg.distill.shapes);
            let max = max_triples.unwrap_or(cfg.steering.max_triples);
            if max > 0 {
                triples.truncate(max);
            }
            let s = TripleSummary::run(model.as_dyn(), &triples, &vectors, &cfg.steering.triples)?;
            write_file(&dir.join("triples.csv"), |w| s.write_csv(w))?;
            let rate = s.success_rate.map_or("n/a".into(), |r| format!("{r:.6}"));
            println!(
                "triples {} excluded {} evaluated {} success_rate {rate}",
                s.triples, s.excluded, s.evaluated
            );
        }
        SteerCmd::EvalColorSwap {
            vectors,
            corpus,
            model,
        } => {
            let vectors = read_concept_store(vectors)?;
            let colors = if vectors
                .vectors()
                .iter()
                .all(|v| split_label(&v.label).is_some())
            {
                color_store(&vectors)?
            } else {
                vectors
            };
            let model = Model::new(cfg, &model, WorldChoice::Main)?;
            let scenes = match &corpus {
                Some(c) => corpus_scenes(&read_manifest(c)?),
                None => gen_distillation_corpus(&cfg.distill, cfg.stage_seed("distill-corpus"))?,
            };
            let acts = scenes
                .iter()
                .map(|s| model.as_dyn().embed(s))
                .collect::<Result<Vec<_>>>()?;
            let images = color_images(&scenes, &acts);
            let r = run_color_swap_protocol(
                model.as_dyn(),
                &images,
                &colors,
                &cfg.steering.color_swap,
            )?;
            write_file(&dir.join("color_swap.csv"), |w| r.write_csv(w))?;
            let rate = r.success_rate().map_or("n/a".into(), |x| format!("{x:.6}"));
            println!("operations {} success_rate {rate}", r.operations);
        }
    }
    Ok(())
}

fn geometry(cfg: &ExperimentConfig, c: GeometryCmd) -> Result<()> {
    match c {
        GeometryCmd::Matrix { vectors } => {
            let dir = out_dir(cfg)?;
            let store = read_concept_store(vectors)?;
            let m = cosine_matrix(store.vectors())?;
            write_file(&dir.join("similarity_matrix.csv"), |w| m.write_csv(w))?;
            let svg = crate::svg::heatmap("Concept cosine similarity", &m.labels, &m.values);
            write_text(&dir.join("similarity_matrix.svg"), &svg)?;
            if let Ok(f) = factors_from_labels(&m.labels) {
                let g = group_similarity_stats(&m, &f)?;
                write_file(&dir.join("group_stats.csv"), |w| g.write_csv(w))?;
                for (name, d) in g.groups() {
                    if let Some(d) = d {
                        println!("{name} mean {:.6} n {}", d.mean, d.values.len());
                    }
                }
                if let Some(s) = g.separation() {
                    println!("separation {s:.6}");
                }
            }
        }
        GeometryCmd::Profile { vectors } => {
            let dir = out_dir(cfg)?;
            let store = read_concept_store(vectors)?;
            let p = semantic_similarity_function(store.vectors())?;
            write_file(&dir.join("hue_profile.csv"), |w| p.write_csv(w))?;
            let series = vec![("g".to_owned(), p.folded_mean())];
            let svg =
                crate::svg::line_chart("Hue similarity g(Δ)", "Δ (degrees)", "cosine", &series);
            write_text(&dir.join("hue_profile.svg"), &svg)?;
            println!("hues {} tail_ripples {}", p.hues.len(), p.tail_ripples());
        }
        GeometryCmd::Rsa { vectors, other } => {
            let a = cosine_matrix(read_concept_store(vectors)?.vectors())?;
            let b = cosine_matrix(read_concept_store(other)?.vectors())?;
            println!("rsa {:.9}", rsa(&a, &b)?);
        }
        GeometryCmd::Pca {
            vectors,
            components,
        } => {
            let dir = out_dir(cfg)?;
            let store = read_concept_store(vectors)?;
            let rows: Vec<Vec<f64>> = store
                .vectors()
                .iter()
                .map(|v| to_f64(v.direction()))
                .collect();
            let labels: Vec<String> = store.vectors().iter().map(|v| v.label.clone()).collect();
            let p = pca_project(&rows, components)?;
            write_file(&dir.join("pca.csv"), |w| p.write_csv(&labels, w))?;
            let ev: Vec<String> = p.explained.iter().map(|e| format!("{e:.6}")).collect();
            println!("explained {}", ev.join(" "));
        }
    }
    Ok(())
}

fn bench(cfg: &ExperimentConfig, c: BenchCmd) -> Result<()> {
    let dir = out_dir(cfg)?;
    match c {
        BenchCmd::VisualSearch {
            vectors,
            corpus,
            model,
        } => {
            let stage = &cfg.visual_search;
            let trials: Vec<VisualSearchTrial> = match &corpus {
                Some(c) => read_manifest(c)?
                    .into_iter()
                    .filter_map(|r| match r {
                        CorpusRecord::VisualSearch(t) => Some(t),
                        _ => None,
                    })
                    .collect(),
                None => {
                    gen_visual_search_trials(&stage.generator, cfg.stage_seed("visual-search"))?
                        .trials
                }
            };
            let model = Model::new(cfg, &model, WorldChoice::VisualSearch)?;
            let store: ConceptStore = match vectors {
                Some(v) => read_concept_store(v)?,
                None => match visual_search_setup(cfg)? {
                    Some((_, s)) => s,
                    None => {
                        return Err(CvError::Config(
                            "--vectors is required when visual search shares the main world".into(),
                        ))
                    }
                },
            };
            let records = run_visual_search(model.as_dyn(), &trials, &store)?;
            let r = VisualSearchReport::new(&records, stage.bins, stage.min_per_bin)?;
            write_file(&dir.join("visual_search_trials.csv"), |w| {
                write_records_csv(&records, w)
            })?;
            write_file(&dir.join("visual_search_bins.csv"), |w| r.write_bins_csv(w))?;
            write_file(&dir.join("visual_search_summary.csv"), |w| {
                r.write_summary_csv(w)
            })?;
            write_text(&dir.join("visual_search.svg"), &r.svg())?;
            println!("trials {} accuracy {:.6}", r.trials, r.accuracy);
            for present in [true, false] {
                if let Some(c) = r.condition(present) {
                    let fmt = |x: Option<f64>| x.map_or("n/a".into(), |x| format!("{x:.6}"));
                    println!(
                        "target_present {present} binned_r {} trial_r {}",
                        fmt(c.binned_r),
                        fmt(c.trial_r)
                    );
                }
            }
        }
        BenchCmd::Similarity {
            vectors,
            corpus,
            replay,
        } => {
            let world = OracleWorld::new(cfg.world.clone())?;
            let trials: Vec<SimilarityTrial> = match &corpus {
                Some(c) => read_manifest(c)?
                    .into_iter()
                    .filter_map(|r| match r {
                        CorpusRecord::Similarity(t) => Some(t),
                        _ => None,
                    })
                    .collect(),
                None => {
                    gen_similarity_trials(&cfg.similarity.generator, cfg.stage_seed("similarity"))?
                }
            };
            let records: Vec<TrialRecord> = match &replay {
                Some(r) => run_similarity_replay(&read_replay(r)?, &trials)?,
                None => run_similarity_oracle(&world, &trials),
            };
            let table = vectors
                .map(|v| read_concept_store(v).and_then(|s| HueVectorTable::from_store(&s)))
                .transpose()?;
            let mut fns: Vec<(&str, &dyn SimilarityFn)> = vec![("hue", &LinearHueDecay)];
            if replay.is_none() {
                fns.insert(0, ("oracle", &world));
            }
            if let Some(t) = &table {
                fns.push(("vectors", t));
            }
            for (key, g) in fns {
                let r = SimilarityReport::new(&records, g)?;
                write_file(&dir.join(format!("similarity_{key}.csv")), |w| {
                    r.write_csv(w)
                })?;
                if key == "hue" {
                    write_text(&dir.join("similarity.svg"), &r.svg())?;
                }
                let cr = r.confidence_r.map_or("n/a".into(), |x| format!("{x:.6}"));
                println!(
                    "{key}: prediction_accuracy {:.6} confidence_r {cr}",
                    r.prediction_accuracy
                );
            }
        }
    }
    Ok(())
}

fn is_vector_file(path: &Path) -> bool {
    use std::io::Read as _;
    let mut magic = [0u8; 4];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .is_ok_and(|()| &magic == b"CVV1")
}

fn validate(files: &[PathBuf]) -> Result<()> {
    let mut bad = 0;
    for f in files {
        if is_vector_file(f) {
            match read_concept_store(f) {
                Ok(s) => println!(
                    "{}: ok\n  model_id={} d={} vectors={}",
                    f.display(),
                    s.model_id,
                    s.dim(),
                    s.len()
                ),
                Err(e) => {
                    println!("{}: INVALID\n  issue: {e}", f.display());
                    bad += 1;
                }
            }
            continue;
        }
        let r = validate_container(f);
        print!("{r}");
        if !r.ok {
            bad += 1;
        }
    }
    if bad > 0 {
        return Err(CvError::InvalidInput(format!("{bad} invalid container(s)")));
    }
    Ok(())
}

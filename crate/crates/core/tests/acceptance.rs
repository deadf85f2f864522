// SPDX-License-Identifier: MIT OR Apache-2.0

//! Oracle acceptance suite. Runs every criterion sequentially, prints one
//! PASS/FAIL line each and exits non-zero if any fails.

use std::time::{Duration, Instant};

use cvkit::bench::{
    confidence_correlation, prediction_accuracy, run_similarity_oracle, run_visual_search,
    LinearHueDecay, VisualSearchReport,
};
use cvkit::config::ExperimentConfig;
use cvkit::distill::{
    centroid_store, pca_regularize, probe_loss, probe_loss_gradient, probe_store, AttentionProbe,
    Grouping, ProbeData, ProbeTrainConfig,
};
use cvkit::geometry::{
    cosine_matrix, factors_from_labels, group_similarity_stats, rsa, similarity_profile,
};
use cvkit::linalg::{dot, normalized, to_f64};
use cvkit::model::{parse_color, parse_yes_no, VisionModel};
use cvkit::oracle::{OracleWorld, WorldSpec};
use cvkit::pipeline::{
    color_images, embed_all, ground_truth_colors, ground_truth_store, visual_search_setup,
};
use cvkit::scene::{
    gen_distillation_corpus, gen_hue_sweep, gen_probe_corpus, gen_similarity_trials,
    gen_visual_search_trials, Concept, DistillationParams, NamedColor, ProbeCorpusParams, Shape,
    SimilarityParams,
};
use cvkit::seed::rng;
use cvkit::steering::{
    run_color_swap_protocol, steer, valid_triples, ColorSwapConfig, SteeringSpec, TripleConfig,
    TripleSummary,
};
use cvkit::store::{decode, encode, ActivationSet, ConceptStore, ConceptVector, Method};
use rand::Rng;

// Pinned tolerances.
const C1_COS_NOISELESS: f64 = 0.999;
const C1_COS_NOISY: f64 = 0.95;
const C1_BUDGET: Duration = Duration::from_secs(30);
const C2_TOL: f64 = 1e-6;
const C3_FD_REL: f64 = 1e-4;
const C3_AUC: f64 = 0.99;
const C3_MAX_EPOCHS: usize = 500;
const C4_IDENTITY_REL: f64 = 1e-6;
const C5_PROFILE_TOL: f64 = 1e-6;
const C5_RSA_TOL: f64 = 1e-9;
const C5_GROUP_TOL: f64 = 1e-6;
const C6_R_MAX: f64 = -0.5;
const C6_BUDGET: Duration = Duration::from_secs(120);
const C6_TRIALS: usize = 2000;
const C7_R_TOL: f64 = 1e-9;
const C8_BUDGET: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn world() -> OracleWorld {
    OracleWorld::new(WorldSpec::default()).unwrap()
}

fn grid() -> Vec<Concept> {
    Concept::grid(&NamedColor::ALL, &Shape::ALL)
}

fn min_cos_vs_truth(w: &OracleWorld, store: &ConceptStore) -> f64 {
    grid()
        .iter()
        .map(|&c| {
            let v = store.require(&c.label()).unwrap();
            dot(&to_f64(v.direction()), &w.composite_direction(c))
        })
        .fold(f64::INFINITY, f64::min)
}

fn distill_centroids(w: &OracleWorld, positions: usize, seed: u64) -> ConceptStore {
    let p = DistillationParams {
        positions_per_concept: positions,
        ..DistillationParams::default()
    };
    let scenes = gen_distillation_corpus(&p, seed).unwrap();
    let acts = embed_all(w, &scenes).unwrap();
    let pairs: Vec<_> = scenes.iter().zip(&acts).collect();
    centroid_store(&pairs, &w.model_id(), Grouping::Object).unwrap()
}

fn c1_ground_truth_recovery() -> Outcome {
    let t = Instant::now();
    let w = world();
    assert_eq!(w.d(), 64);
    let clean = min_cos_vs_truth(&w, &distill_centroids(&w, 10, 1));
    let noisy_world = OracleWorld::new(WorldSpec {
        noise_sigma: 0.1 * WorldSpec::default().feature_gain,
        ..WorldSpec::default()
    })
    .unwrap();
    let noisy = min_cos_vs_truth(&noisy_world, &distill_centroids(&noisy_world, 100, 2));
    let el = t.elapsed();
    outcome(
        clean >= C1_COS_NOISELESS && noisy >= C1_COS_NOISY && el < C1_BUDGET,
        format!(
            "min cos noiseless {clean:.6} (>= {C1_COS_NOISELESS}), noisy {noisy:.6} (>= {C1_COS_NOISY}), {:.1}s (< {}s)",
            el.as_secs_f64(),
            C1_BUDGET.as_secs()
        ),
    )
}

/// Unit vector orthogonal to every feature direction and the mean.
fn complement_direction(w: &OracleWorld) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut feats: Vec<Vec<f64>> = NamedColor::ALL
        .iter()
        .map(|&c| w.color_dir(c).to_vec())
        .collect();
    feats.extend(Shape::ALL.iter().map(|&s| w.shape_dir(s).to_vec()));
    feats.extend(w.hue_plane().iter().map(|p| p.to_vec()));
    feats.push(w.mu().to_vec());
    for f in feats {
        let mut v = f;
        for b in &basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        if let Some(u) = normalized(&v, 1e-9) {
            basis.push(u);
        }
    }
    let mut r = rng(99);
    let mut v: Vec<f64> = (0..w.d()).map(|_| r.random_range(-1.0..1.0)).collect();
    for _ in 0..2 {
        for b in &basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    normalized(&v, 1e-9).unwrap()
}

fn c2_pca_exactness() -> Outcome {
    let w = world();
    let truth = ground_truth_store(&w, &grid()).unwrap();
    let reg = pca_regularize(truth.vectors()).unwrap();
    let exact = truth
        .vectors()
        .iter()
        .zip(&reg.vectors)
        .flat_map(|(a, b)| {
            a.direction()
                .iter()
                .zip(b.direction())
                .map(|(x, y)| f64::from((x - y).abs()))
        })
        .fold(0.0, f64::max);
    // Interaction-pattern plant: zero mean over every row and column, so it
    // is uncorrelated with both factors and leaves all norms equal.
    let wdir = complement_direction(&w);
    let eps = 0.1;
    let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let planted: Vec<ConceptVector> = grid()
        .iter()
        .map(|&c| {
            let ci = NamedColor::ALL.iter().position(|&x| x == c.color).unwrap();
            let si = Shape::ALL.iter().position(|&x| x == c.shape).unwrap();
            let s = sign(ci) * sign(si) * eps;
            let raw: Vec<f64> = w
                .composite_direction(c)
                .iter()
                .zip(&wdir)
                .map(|(x, y)| x + s * y)
                .collect();
            ConceptVector::from_raw(&raw, c.label(), Method::GroundTruth, w.model_id()).unwrap()
        })
        .collect();
    let before = planted
        .iter()
        .map(|v| dot(&to_f64(v.direction()), &wdir).abs())
        .fold(0.0, f64::max);
    let cleaned = pca_regularize(&planted).unwrap();
    let after = cleaned
        .vectors
        .iter()
        .map(|v| dot(&to_f64(v.direction()), &wdir).abs())
        .fold(0.0, f64::max);
    outcome(
        reg.retained == 10 && exact <= C2_TOL && after <= C2_TOL,
        format!(
            "{} components, additive max deviation {exact:.2e}, planted component {before:.3} -> {after:.2e} (<= {C2_TOL:e})",
            reg.retained
        ),
    )
}

fn relative_fd_error(probe: &AttentionProbe, data: &ProbeData, y: &[bool]) -> f64 {
    let (_, g) = probe_loss_gradient(probe, data, y);
    let mut analytic = g.u.clone();
    analytic.extend([g.b_att, g.w_out, g.b_out]);
    let h = 1e-5;
    let n = probe.u.len();
    let numeric: Vec<f64> = (0..n + 3)
        .map(|k| {
            let at = |delta: f64| {
                let mut p = probe.clone();
                match k {
                    k if k < n => p.u[k] += delta,
                    k if k == n => p.b_att += delta,
                    k if k == n + 1 => p.w_out += delta,
                    _ => p.b_out += delta,
                }
                probe_loss(&p, data, y)
            };
            (at(h) - at(-h)) / (2.0 * h)
        })
        .collect();
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = dot(&analytic, &analytic)
        .sqrt()
        .max(dot(&numeric, &numeric).sqrt());
    diff / scale.max(1e-12)
}

fn c3_probe_correctness() -> Outcome {
    let w = world();
    let corpus = gen_probe_corpus(&ProbeCorpusParams::default(), 3).unwrap();
    let scenes: Vec<_> = corpus.iter().map(|p| p.scene.clone()).collect();
    let acts = embed_all(&w, &scenes).unwrap();

    let small = ProbeData::new(acts.iter().take(24)).unwrap();
    let label = grid()[0].label();
    let y: Vec<bool> = corpus.iter().take(24).map(|p| p.labels[&label]).collect();
    let mut r = rng(7);
    let worst_fd = (0..10)
        .map(|_| {
            let p = AttentionProbe {
                u: (0..w.d()).map(|_| r.random_range(-0.5..0.5)).collect(),
                b_att: r.random_range(-0.5..0.5),
                w_out: r.random_range(-2.0..2.0),
                b_out: r.random_range(-1.0..1.0),
            };
            relative_fd_error(&p, &small, &y)
        })
        .fold(0.0, f64::max);

    let cfg = ProbeTrainConfig {
        epochs: C3_MAX_EPOCHS,
        ..ProbeTrainConfig::default()
    };
    let labels: Vec<_> = corpus.iter().map(|p| &p.labels).collect();
    let concepts: Vec<String> = grid().into_iter().map(Concept::label).collect();
    let refs: Vec<_> = acts.iter().collect();
    let run = probe_store(&refs, &labels, &concepts, &w.model_id(), &cfg).unwrap();
    let aucs: Vec<f64> = run
        .metrics
        .iter()
        .filter_map(|(_, m)| m.holdout_auc)
        .collect();
    let min_auc = aucs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_epochs = run
        .metrics
        .iter()
        .map(|(_, m)| m.epochs_run)
        .max()
        .unwrap_or(0);
    outcome(
        worst_fd <= C3_FD_REL && aucs.len() == concepts.len() && min_auc >= C3_AUC && max_epochs <= C3_MAX_EPOCHS,
        format!(
            "gradient vs central differences max rel {worst_fd:.2e} (<= {C3_FD_REL:e}) at 10 points; min held-out AUC {min_auc:.4} over {} probes (>= {C3_AUC}), <= {max_epochs} epochs",
            aucs.len()
        ),
    )
}

fn c4_steering_causality() -> Outcome {
    let w = world();
    let truth = ground_truth_store(&w, &grid()).unwrap();
    let triples = valid_triples(&NamedColor::ALL, &Shape::ALL);
    let summary = TripleSummary::run(&w, &triples, &truth, &TripleConfig::default()).unwrap();

    let scenes = gen_distillation_corpus(&DistillationParams::default(), 4).unwrap();
    let acts = embed_all(&w, &scenes).unwrap();
    let images = color_images(&scenes, &acts);
    let colors = ground_truth_colors(&w, &NamedColor::ALL).unwrap();
    let swap = run_color_swap_protocol(&w, &images, &colors, &ColorSwapConfig::default()).unwrap();

    let mut worst = 0.0f64;
    let mut flips = 0;
    for (img, v) in images.iter().step_by(6).zip(truth.vectors().iter().cycle()) {
        let spec = SteeringSpec::new(v.clone(), v.clone()).unwrap();
        let s = steer(&img.acts, &spec).unwrap();
        for (x, y) in img.acts.as_slice().iter().zip(s.as_slice()) {
            worst = worst.max(f64::from((x - y).abs()) / f64::from(x.abs()).max(1.0));
        }
        let before = w.ask_color(&img.acts, &img.object_name).unwrap();
        let after = w.ask_color(&s, &img.object_name).unwrap();
        flips += usize::from(parse_color(&before.choice) != parse_color(&after.choice));
        for q in grid().into_iter().step_by(5) {
            let b = w.ask_presence(&img.acts, q).unwrap();
            let a = w.ask_presence(&s, q).unwrap();
            flips += usize::from(parse_yes_no(&b.choice) != parse_yes_no(&a.choice));
        }
    }
    let triple_rate = summary.success_rate.unwrap_or(0.0);
    let swap_rate = swap.success_rate().unwrap_or(0.0);
    outcome(
        summary.evaluated == triples.len()
            && triple_rate == 1.0
            && swap.operations == 300
            && swap_rate == 1.0
            && flips == 0
            && worst <= C4_IDENTITY_REL,
        format!(
            "triples {}/{} evaluated, success {:.4}; color swap {} ops, success {:.4}; identity: {flips} answer changes, max rel change {worst:.2e} (<= {C4_IDENTITY_REL:e})",
            summary.evaluated,
            triples.len(),
            triple_rate,
            swap.operations,
            swap_rate
        ),
    )
}

fn c5_geometry() -> Outcome {
    let w = world();
    let scenes = gen_hue_sweep(100, 5).unwrap();
    let hues: Vec<(f64, Vec<f64>)> = scenes
        .iter()
        .map(|s| {
            let h = match s.objects[0].color {
                cvkit::scene::ObjectColor::Hue(h) => h,
                cvkit::scene::ObjectColor::Named(_) => unreachable!(),
            };
            (h, w.hue_direction(h))
        })
        .collect();
    let profile = similarity_profile(&hues).unwrap();
    let dev = profile
        .per_hue
        .iter()
        .flat_map(|g| {
            g.iter()
                .zip(&profile.deltas)
                .map(|(v, d)| (v - d.to_radians().cos()).abs())
        })
        .fold(0.0, f64::max);

    let truth = cosine_matrix(ground_truth_store(&w, &grid()).unwrap().vectors()).unwrap();
    let distilled = cosine_matrix(distill_centroids(&w, 10, 5).vectors()).unwrap();
    let self_r = rsa(&truth, &truth).unwrap();
    let asym = (rsa(&truth, &distilled).unwrap() - rsa(&distilled, &truth).unwrap()).abs();
    let g = group_similarity_stats(&truth, &factors_from_labels(&truth.labels).unwrap()).unwrap();
    let mean = |d: Option<&cvkit::stats::Distribution>| d.map_or(f64::NAN, |d| d.mean);
    let (sc, ss, ne) = (
        mean(g.same_color.as_ref()),
        mean(g.same_shape.as_ref()),
        mean(g.neither.as_ref()),
    );
    let sep = g.separation().unwrap_or(f64::NAN);
    outcome(
        profile.hues.len() == 100
            && dev <= C5_PROFILE_TOL
            && (self_r - 1.0).abs() <= C5_RSA_TOL
            && asym <= C5_RSA_TOL
            && (sc - 0.5).abs() <= C5_GROUP_TOL
            && (ss - 0.5).abs() <= C5_GROUP_TOL
            && ne.abs() <= C5_GROUP_TOL
            && sep > 0.0,
        format!(
            "g(Δ) vs cos Δ max dev {dev:.2e} over {} hues; rsa(M,M) {self_r:.12}, asymmetry {asym:.1e}; same-color {sc:.6}, same-shape {ss:.6}, neither {ne:.6}, separation {sep:.4}",
            profile.hues.len()
        ),
    )
}

fn c6_interference() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::default().resolved();
    let stage = &cfg.visual_search;
    let (world, store) = visual_search_setup(&cfg).unwrap().expect("dedicated world");
    let batch =
        gen_visual_search_trials(&stage.generator, cfg.stage_seed("visual-search")).unwrap();
    let records = run_visual_search(&world, &batch.trials, &store).unwrap();
    let report = VisualSearchReport::new(&records, stage.bins, stage.min_per_bin).unwrap();
    let el = t.elapsed();
    let r = |present| {
        report
            .condition(present)
            .and_then(|c| c.binned_r)
            .unwrap_or(f64::NAN)
    };
    let (rp, ra) = (r(true), r(false));
    outcome(
        records.len() == C6_TRIALS && rp <= C6_R_MAX && ra <= C6_R_MAX && el < C6_BUDGET,
        format!(
            "{} trials, binned r present {rp:.3}, absent {ra:.3} (<= {C6_R_MAX}), {:.1}s (< {}s)",
            records.len(),
            el.as_secs_f64(),
            C6_BUDGET.as_secs()
        ),
    )
}

fn c7_similarity() -> Outcome {
    let w = world();
    let trials = gen_similarity_trials(&SimilarityParams::default(), 7).unwrap();
    let records = run_similarity_oracle(&w, &trials);
    let r = confidence_correlation(&records, &w).unwrap();
    let agree = prediction_accuracy(&records, &w).unwrap();
    let hue_agree = prediction_accuracy(&records, &LinearHueDecay).unwrap();
    outcome(
        (r - 1.0).abs() <= C7_R_TOL && agree == 1.0 && hue_agree == 1.0,
        format!(
            "{} trials, oracle-cosine r {r:.12} (1 ± {C7_R_TOL:e}), agreement {:.1}%, hue agreement {:.1}%",
            records.len(),
            100.0 * agree,
            100.0 * hue_agree
        ),
    )
}

fn c8_formats(suite_start: Instant) -> Outcome {
    let w = world();
    let scenes = gen_distillation_corpus(&DistillationParams::default(), 8).unwrap();
    let set = ActivationSet::new(w.model_id(), w.d(), embed_all(&w, &scenes).unwrap()).unwrap();
    let bytes = encode(&set).unwrap();
    let back = decode(&bytes).unwrap();
    let roundtrip = back == set && encode(&back).unwrap() == bytes;

    let fixture = include_bytes!("fixtures/tiny.cva");
    let header_ok = fixture[..12] == [0x43, 0x56, 0x41, 0x31, 1, 0, 0, 0, 0xcb, 0, 0, 0];
    let parsed = decode(fixture).unwrap();
    let fixture_ok = header_ok
        && parsed.model_id == "fixture-model"
        && parsed.dim() == 4
        && parsed.len() == 2
        && parsed.sequences()[0].row(0) == [0.5, -1.25, 2.0, 0.0]
        && parsed.sequences()[0].row(3) == [4.0, -3.0, 0.0625, 1.0]
        && parsed.sequences()[1].as_slice() == [1.0, 2.0, 3.0, 4.0]
        && encode(&parsed).unwrap() == fixture;
    let el = suite_start.elapsed();
    outcome(
        roundtrip && fixture_ok && el < C8_BUDGET,
        format!(
            "round trip of {} sequences bit-exact: {roundtrip}; fixture parses identically: {fixture_ok}; suite {:.1}s (< {}s)",
            set.len(),
            el.as_secs_f64(),
            C8_BUDGET.as_secs()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: [(&str, &dyn Fn() -> Outcome); 8] = [
        ("1 ground-truth recovery", &c1_ground_truth_recovery),
        ("2 PCA exactness", &c2_pca_exactness),
        ("3 probe correctness", &c3_probe_correctness),
        ("4 steering causality", &c4_steering_causality),
        ("5 geometry analytics", &c5_geometry),
        ("6 interference-error link", &c6_interference),
        ("7 similarity consistency", &c7_similarity),
        ("8 format integrity", &|| c8_formats(start)),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use approx::assert_abs_diff_eq;
use cvkit::distill::{
    centroid_store, pca_regularize, probe_loss, probe_loss_gradient, train_attention_probe,
    AttentionProbe, Grouping, ProbeData, ProbeTrainConfig,
};
use cvkit::geometry::pca_project;
use cvkit::linalg::{dot, to_f64};
use cvkit::oracle::{OracleWorld, WorldSpec};
use cvkit::pipeline::{embed_all, ground_truth_store};
use cvkit::scene::{
    gen_distillation_corpus, gen_probe_corpus, Concept, DistillationParams, NamedColor,
    ProbeCorpusParams, Shape,
};
use cvkit::seed::rng;
use rand::Rng;

fn world() -> OracleWorld {
    OracleWorld::new(WorldSpec::default()).unwrap()
}

#[test]
fn centroids_recover_composite_directions() {
    let w = world();
    let p = DistillationParams {
        positions_per_concept: 3,
        ..DistillationParams::default()
    };
    let scenes = gen_distillation_corpus(&p, 11).unwrap();
    let acts = embed_all(&w, &scenes).unwrap();
    let pairs: Vec<_> = scenes.iter().zip(&acts).collect();
    let store = centroid_store(&pairs, &w.model_id(), Grouping::Object).unwrap();
    for c in Concept::grid(&NamedColor::ALL, &Shape::ALL) {
        let v = store.require(&c.label()).unwrap();
        let cos = dot(&to_f64(v.direction()), &w.composite_direction(c));
        assert!(cos >= 0.999, "{}: {cos}", c.label());
    }
}

fn probe_fixture(n: usize) -> (ProbeData, Vec<bool>) {
    let w = world();
    let corpus = gen_probe_corpus(
        &ProbeCorpusParams {
            scenes: n,
            ..ProbeCorpusParams::default()
        },
        5,
    )
    .unwrap();
    let scenes: Vec<_> = corpus.iter().map(|p| p.scene.clone()).collect();
    let acts = embed_all(&w, &scenes).unwrap();
    let label = "blue|star";
    let y = corpus.iter().map(|p| p.labels[label]).collect();
    (ProbeData::new(acts.iter()).unwrap(), y)
}

#[test]
fn probe_gradient_matches_finite_differences() {
    let (data, y) = probe_fixture(16);
    let mut r = rng(1);
    for _ in 0..10 {
        let p = AttentionProbe {
            u: (0..data.dim()).map(|_| r.random_range(-0.5..0.5)).collect(),
            b_att: r.random_range(-0.5..0.5),
            w_out: r.random_range(-2.0..2.0),
            b_out: r.random_range(-1.0..1.0),
        };
        let (_, g) = probe_loss_gradient(&p, &data, &y);
        let h = 1e-5;
        for k in [0, 7, data.dim() - 1] {
            let mut a = p.clone();
            let mut b = p.clone();
            a.u[k] += h;
            b.u[k] -= h;
            let fd = (probe_loss(&a, &data, &y) - probe_loss(&b, &data, &y)) / (2.0 * h);
            assert!(
                (fd - g.u[k]).abs() <= 1e-4 * fd.abs().max(g.u[k].abs()).max(1e-6),
                "u[{k}]"
            );
        }
        for (field, analytic) in [(0, g.b_att), (1, g.w_out), (2, g.b_out)] {
            let shifted = |d: f64| {
                let mut q = p.clone();
                *[&mut q.b_att, &mut q.w_out, &mut q.b_out][field] += d;
                probe_loss(&q, &data, &y)
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            assert!((fd - analytic).abs() <= 1e-4 * fd.abs().max(analytic.abs()).max(1e-6));
        }
    }
}

#[test]
fn full_batch_loss_is_monotone_at_small_rate() {
    let (data, y) = probe_fixture(40);
    let cfg = ProbeTrainConfig {
        learning_rate: 1e-3,
        epochs: 40,
        early_stop_patience: 0,
        ..ProbeTrainConfig::default()
    };
    let fit = train_attention_probe(&data, &y, "blue|star", "m", &cfg).unwrap();
    let h = &fit.metrics.loss_history;
    assert!(h.len() > 10);
    for w in h.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn pca_reproduces_additive_grid() {
    let w = world();
    let truth = ground_truth_store(&w, &Concept::grid(&NamedColor::ALL, &Shape::ALL)).unwrap();
    let r = pca_regularize(truth.vectors()).unwrap();
    assert_eq!((r.requested, r.retained), (10, 10));
    for (a, b) in truth.vectors().iter().zip(&r.vectors) {
        for (x, y) in a.direction().iter().zip(b.direction()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-6);
        }
    }
}

#[test]
fn projection_finds_planted_axis() {
    let mut r = rng(4);
    let axis: Vec<f64> = (0..20).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| {
            let t = (i as f64 - 14.5) / 5.0;
            axis.iter()
                .map(|a| 10.0 * t * a + r.random_range(-0.01..0.01))
                .collect()
        })
        .collect();
    let p = pca_project(&rows, 2).unwrap();
    assert!(p.explained[0] > 0.999, "{:?}", p.explained);
}

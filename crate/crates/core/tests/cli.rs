// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn cvkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvkit"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = cvkit(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let o = cvkit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn config_errors_exit_2_and_pipeline_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[world]\nd = \"many\"\n").unwrap();
    assert_eq!(
        cvkit(&["--config", s(&bad), "pipeline", "run"])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("missing.cva");
    assert_eq!(cvkit(&["validate", s(&missing)]).status.code(), Some(1));
}

#[test]
fn hue_sweep_generate_embed_distill() {
    let dir = tempfile::tempdir().unwrap();
    let hues = dir.path().join("hues");
    let acts = dir.path().join("hues.cva");
    let vecs = dir.path().join("vecs.cvv");
    ok(&[
        "gen",
        "stimuli",
        "--kind",
        "hue-sweep",
        "--count",
        "100",
        "--seed",
        "7",
        "--out",
        s(&hues),
    ]);
    let manifest = std::fs::read_to_string(hues.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 100);
    ok(&["embed", "oracle", "--corpus", s(&hues), "--out", s(&acts)]);
    assert!(ok(&["validate", s(&acts)]).contains("ok"));
    let out = ok(&[
        "distill",
        "--method",
        "centroid",
        "--acts",
        s(&acts),
        "--out",
        s(&vecs),
    ]);
    assert!(out.starts_with("100 vectors"), "{out}");
    let out = ok(&[
        "geometry",
        "profile",
        "--vectors",
        s(&vecs),
        "--out",
        s(dir.path()),
    ]);
    assert!(out.starts_with("hues 100"));
    assert!(ok(&[
        "geometry",
        "rsa",
        "--vectors",
        s(&vecs),
        "--other",
        s(&vecs)
    ])
    .contains("rsa 1.000000000"));
}

#[test]
fn steering_commands_report_full_success() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("dc");
    let acts = dir.path().join("dc.cva");
    let vecs = dir.path().join("dc.cvv");
    ok(&[
        "gen",
        "stimuli",
        "--kind",
        "distill",
        "--count",
        "2",
        "--out",
        s(&corpus),
    ]);
    ok(&["embed", "oracle", "--corpus", s(&corpus), "--out", s(&acts)]);
    ok(&["distill", "--acts", s(&acts), "--out", s(&vecs)]);
    let out = ok(&[
        "steer",
        "eval-triples",
        "--vectors",
        s(&vecs),
        "--max-triples",
        "40",
        "--out",
        s(dir.path()),
    ]);
    assert!(out.contains("evaluated 40 success_rate 1.000000"), "{out}");
    let out = ok(&[
        "steer",
        "eval-color-swap",
        "--vectors",
        s(&vecs),
        "--corpus",
        s(&corpus),
        "--out",
        s(dir.path()),
    ]);
    assert!(out.contains("success_rate 1.000000"), "{out}");
    assert!(dir.path().join("triples.csv").exists() && dir.path().join("color_swap.csv").exists());
}

#[test]
fn identical_argv_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["bench", "similarity", "--seed", "5", "--out", s(&out)]);
        std::fs::read(out.join("similarity_hue.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use cvkit::oracle::{OracleWorld, WorldSpec};
use cvkit::pipeline::{embed_all, ground_truth_store};
use cvkit::scene::{gen_hue_sweep, Concept, NamedColor, Shape};
use cvkit::steering::replay::read_replay;
use cvkit::store::{
    decode, encode, read_activation_set, read_concept_store, validate_container,
    write_activation_set, write_concept_store, ActivationSet,
};

const FIXTURE: &[u8] = include_bytes!("fixtures/tiny.cva");

#[test]
fn fixture_header_bytes() {
    assert_eq!(&FIXTURE[..4], b"CVA1");
    assert_eq!(u32::from_le_bytes(FIXTURE[4..8].try_into().unwrap()), 1);
    let header_len = u32::from_le_bytes(FIXTURE[8..12].try_into().unwrap()) as usize;
    assert_eq!(header_len, 203);
    let header = std::str::from_utf8(&FIXTURE[12..12 + header_len]).unwrap();
    assert!(header.starts_with(r#"{"model_id":"fixture-model","d":4,"sequences":["#));
    assert_eq!(FIXTURE.len() - 12 - header_len, 20 * 4);
}

#[test]
fn fixture_decodes_and_reencodes() {
    let set = decode(FIXTURE).unwrap();
    assert_eq!((set.len(), set.dim()), (2, 4));
    let a = &set.sequences()[0];
    assert_eq!(a.stimulus_id, "img-a");
    assert_eq!(a.layer_tag, "visual");
    assert_eq!((a.grid.rows, a.grid.cols, a.len()), (2, 2, 4));
    assert_eq!(a.row(2), [-2.0, 0.125, 1.5, -0.75]);
    assert_eq!(set.get("img-b").unwrap().as_slice(), [1.0, 2.0, 3.0, 4.0]);
    assert_eq!(encode(&set).unwrap(), FIXTURE);
}

#[test]
fn truncated_and_corrupt_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    for (name, bytes) in [
        ("short.cva", &FIXTURE[..FIXTURE.len() - 3]),
        (
            "magic.cva",
            &[b"XXXX".as_slice(), &FIXTURE[4..]].concat()[..],
        ),
        ("empty.cva", &[][..]),
    ] {
        let p = dir.path().join(name);
        std::fs::write(&p, bytes).unwrap();
        assert!(decode(bytes).is_err(), "{name}");
        let r = validate_container(&p);
        assert!(!r.ok && !r.issues.is_empty(), "{name}");
    }
}

#[test]
fn oracle_activations_round_trip_through_files() {
    let w = OracleWorld::new(WorldSpec::default()).unwrap();
    let scenes = gen_hue_sweep(5, 3).unwrap();
    let set = ActivationSet::new(w.model_id(), w.d(), embed_all(&w, &scenes).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.cva");
    write_activation_set(&set, &p).unwrap();
    assert_eq!(read_activation_set(&p).unwrap(), set);
    assert_eq!(std::fs::read(&p).unwrap(), encode(&set).unwrap());
    let r = validate_container(&p);
    assert!(r.ok, "{r}");
    assert_eq!((r.d, r.sequences.len()), (Some(64), 5));
}

#[test]
fn vector_store_round_trip() {
    let w = OracleWorld::new(WorldSpec::default()).unwrap();
    let store = ground_truth_store(&w, &Concept::grid(&NamedColor::ALL, &Shape::ALL)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.cvv");
    write_concept_store(&store, &p).unwrap();
    assert_eq!(read_concept_store(&p).unwrap(), store);
}

#[test]
fn replay_lines_parse() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.jsonl");
    std::fs::write(
        &p,
        concat!(
            r#"{"stimulus_id":"s1","prompt_id":"similarity","steered":false,"answer":"A","logits":{"A":2.0,"B":0.5}}"#,
            "\n",
            r#"{"stimulus_id":"s1","prompt_id":"color:circle","steered":true,"steering":{"source":"red","target":"blue"},"answer":"blue"}"#,
            "\n"
        ),
    )
    .unwrap();
    let r = read_replay(&p).unwrap();
    assert_eq!(r.len(), 2);
    assert_eq!(r[1].steering.as_ref().unwrap().target, "blue");
    std::fs::write(
        &p,
        r#"{"stimulus_id":"s1","prompt_id":"x","steered":true,"answer":"yes"}"#,
    )
    .unwrap();
    assert!(read_replay(&p).is_err());
}

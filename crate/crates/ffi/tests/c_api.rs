// SPDX-License-Identifier: MIT OR Apache-2.0

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use cvkit::oracle::{OracleWorld, WorldSpec};
use cvkit::pipeline::{embed_all, ground_truth_store};
use cvkit::scene::{gen_hue_sweep, Concept, NamedColor, Shape};
use cvkit::store::{write_activation_set, write_concept_store, ActivationSet};
use cvkit_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = cvk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn fixtures(dir: &Path) -> (ActivationSet, std::path::PathBuf, std::path::PathBuf) {
    let w = OracleWorld::new(WorldSpec::default()).unwrap();
    let set = ActivationSet::new(
        w.model_id(),
        w.d(),
        embed_all(&w, &gen_hue_sweep(3, 1).unwrap()).unwrap(),
    )
    .unwrap();
    let acts = dir.join("a.cva");
    write_activation_set(&set, &acts).unwrap();
    let store = ground_truth_store(&w, &Concept::grid(&NamedColor::ALL, &Shape::ALL)).unwrap();
    let vecs = dir.join("v.cvv");
    write_concept_store(&store, &vecs).unwrap();
    (set, acts, vecs)
}

#[test]
fn activation_set_handle() {
    let dir = tempfile::tempdir().unwrap();
    let (set, acts, _) = fixtures(dir.path());
    let path = cstr(&acts);
    assert_eq!(
        unsafe { cvk_validate_container(path.as_ptr()) },
        CvkStatus::Ok
    );
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { cvk_activation_set_open(path.as_ptr(), &mut h) },
        CvkStatus::Ok
    );
    unsafe {
        assert_eq!(
            (cvk_activation_set_len(h), cvk_activation_set_dim(h)),
            (3, 64)
        );
        let mut len = 0;
        assert_eq!(
            cvk_activation_set_sequence_len(h, 1, &mut len),
            CvkStatus::Ok
        );
        assert_eq!(len, set.sequences()[1].len());
        let mut buf = vec![0.0f32; len * 64];
        assert_eq!(
            cvk_activation_set_copy_tokens(h, 1, buf.as_mut_ptr(), buf.len()),
            CvkStatus::Ok
        );
        assert_eq!(buf, set.sequences()[1].as_slice());
        assert_eq!(
            cvk_activation_set_copy_tokens(h, 1, buf.as_mut_ptr(), buf.len() - 1),
            CvkStatus::BufferTooSmall
        );
        assert_eq!(
            cvk_activation_set_sequence_len(h, 9, &mut len),
            CvkStatus::NotFound
        );
        let copy = cstr(&dir.path().join("b.cva"));
        assert_eq!(cvk_activation_set_save(h, copy.as_ptr()), CvkStatus::Ok);
        cvk_activation_set_free(h);
        cvk_activation_set_free(ptr::null_mut());
    }
    assert_eq!(
        std::fs::read(&acts).unwrap(),
        std::fs::read(dir.path().join("b.cva")).unwrap()
    );
}

#[test]
fn errors_carry_status_and_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cva");
    std::fs::write(&bad, b"CVA1\x01\x00\x00\x00\xff\x00\x00\x00{}").unwrap();
    let p = cstr(&bad);
    assert_eq!(
        unsafe { cvk_validate_container(p.as_ptr()) },
        CvkStatus::Format
    );
    assert!(last_error().contains("truncated"), "{}", last_error());
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { cvk_activation_set_open(p.as_ptr(), &mut h) },
        CvkStatus::Format
    );
    assert!(h.is_null());
    let missing = cstr(&dir.path().join("none.cva"));
    assert_eq!(
        unsafe { cvk_activation_set_open(missing.as_ptr(), &mut h) },
        CvkStatus::Io
    );
    assert_eq!(
        unsafe { cvk_activation_set_open(ptr::null(), &mut h) },
        CvkStatus::NullPointer
    );
    assert_eq!(
        unsafe { cvk_activation_set_open(p.as_ptr(), ptr::null_mut()) },
        CvkStatus::NullPointer
    );
}

#[test]
fn store_lookup_and_steering() {
    let dir = tempfile::tempdir().unwrap();
    let (set, _, vecs) = fixtures(dir.path());
    let path = cstr(&vecs);
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { cvk_concept_store_open(path.as_ptr(), &mut s) },
        CvkStatus::Ok
    );
    let d = unsafe { cvk_concept_store_dim(s) };
    assert_eq!((unsafe { cvk_concept_store_len(s) }, d), (36, 64));
    let get = |label: &str| {
        let l = CString::new(label).unwrap();
        let mut v = vec![0.0f32; d];
        let st = unsafe { cvk_concept_store_copy_vector(s, l.as_ptr(), v.as_mut_ptr(), d) };
        (st, v)
    };
    let (st, red) = get("red|circle");
    assert_eq!(st, CvkStatus::Ok);
    let (_, blue) = get("blue|circle");
    assert_eq!(get("teal|circle").0, CvkStatus::NotFound);

    let mut cos = 0.0;
    assert_eq!(
        unsafe { cvk_cosine(red.as_ptr(), red.as_ptr(), d, &mut cos) },
        CvkStatus::Ok
    );
    assert!((cos - 1.0).abs() < 1e-6);
    assert_eq!(
        unsafe { cvk_cosine(red.as_ptr(), blue.as_ptr(), d, &mut cos) },
        CvkStatus::Ok
    );
    assert!((cos - 0.5).abs() < 1e-6, "{cos}");

    // a token lying on the source direction ends on the target
    let mut tok = red.clone();
    assert_eq!(
        unsafe { cvk_steer_tokens(tok.as_mut_ptr(), 1, d, red.as_ptr(), blue.as_ptr()) },
        CvkStatus::Ok
    );
    for (x, y) in tok.iter().zip(&blue) {
        assert!((x - y).abs() < 1e-5);
    }
    // identity steering leaves real activations untouched
    let mut toks = set.sequences()[0].as_slice().to_vec();
    let n = toks.len() / d;
    assert_eq!(
        unsafe { cvk_steer_tokens(toks.as_mut_ptr(), n, d, red.as_ptr(), red.as_ptr()) },
        CvkStatus::Ok
    );
    for (x, y) in toks.iter().zip(set.sequences()[0].as_slice()) {
        assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
    }
    let zero = vec![0.0f32; d];
    assert_eq!(
        unsafe { cvk_steer_tokens(toks.as_mut_ptr(), n, d, zero.as_ptr(), red.as_ptr()) },
        CvkStatus::InvalidArgument
    );
    unsafe { cvk_concept_store_free(s) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cvk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

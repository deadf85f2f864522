// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over the activation container, the concept-vector store and the
//! steering transform.
//!
//! Every fallible call returns a [`CvkStatus`]; on failure a message is kept
//! per thread and can be read with [`cvk_last_error`]. Handles are opaque,
//! created by `*_open` and released by `*_free`. Panics never cross the
//! boundary: they surface as [`CvkStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cvkit::linalg::normalized;
use cvkit::store::{
    read_activation_set, read_concept_store, validate_container, write_activation_set,
    ActivationSet, ConceptStore,
};
use cvkit::CvError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque activation set loaded from a `.cva` container.
pub struct CvkActivationSet(ActivationSet);

/// Opaque concept-vector store loaded from a `.cvv` file.
pub struct CvkConceptStore(ConceptStore);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &CvError) -> CvkStatus {
    match e {
        CvError::Io { .. } => CvkStatus::Io,
        CvError::BadMagic { .. }
        | CvError::VersionMismatch { .. }
        | CvError::Truncated { .. }
        | CvError::LengthMismatch(_)
        | CvError::Header(_)
        | CvError::Serde(_) => CvkStatus::Format,
        CvError::DimensionMismatch { .. } => CvkStatus::DimensionMismatch,
        CvError::Stage { source, .. } => status_of(source),
        _ => CvkStatus::InvalidArgument,
    }
}

fn fail(status: CvkStatus, msg: impl Into<String>) -> CvkStatus {
    set_error(msg);
    status
}

/// Runs `f`, recording errors and containing panics.
fn guard(f: impl FnOnce() -> Result<(), CvkStatus>) -> CvkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(CvkStatus::Panic, "internal panic"),
    }
}

fn check(r: cvkit::Result<()>) -> Result<(), CvkStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, CvkStatus> {
    Ok(PathBuf::from(str_arg(p, "path")?))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CvkStatus> {
    if p.is_null() {
        return Err(fail(CvkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CvkStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, CvkStatus> {
    p.as_ref()
        .ok_or_else(|| fail(CvkStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, CvkStatus> {
    p.as_mut()
        .ok_or_else(|| fail(CvkStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], CvkStatus> {
    if p.is_null() {
        return Err(fail(CvkStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn copy_out(src: &[f32], out: *mut f32, capacity: usize) -> Result<(), CvkStatus> {
    if out.is_null() {
        return Err(fail(CvkStatus::NullPointer, "output buffer is null"));
    }
    if capacity < src.len() {
        return Err(fail(
            CvkStatus::BufferTooSmall,
            format!("need {} floats, buffer holds {capacity}", src.len()),
        ));
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cvk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static and NUL-terminated.
#[no_mangle]
pub extern "C" fn cvk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Checks a `.cva` file. Returns `Ok` when valid; otherwise `Format` (or
/// `Io`) with every issue in the last-error message.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cvk_validate_container(path: *const c_char) -> CvkStatus {
    guard(|| {
        let path = path_arg(path)?;
        let r = validate_container(&path);
        if r.ok {
            Ok(())
        } else {
            let status = if path.exists() {
                CvkStatus::Format
            } else {
                CvkStatus::Io
            };
            Err(fail(status, r.issues.join("; ")))
        }
    })
}

/// Loads a `.cva` container.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_open(
    path: *const c_char,
    out: *mut *mut CvkActivationSet,
) -> CvkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let set =
            read_activation_set(path_arg(path)?).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(CvkActivationSet(set)));
        Ok(())
    })
}

/// Writes the set back to a `.cva` container.
///
/// # Safety
/// `set` must come from [`cvk_activation_set_open`]; `path` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_save(
    set: *const CvkActivationSet,
    path: *const c_char,
) -> CvkStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        check(write_activation_set(&set.0, path_arg(path)?))
    })
}

/// Releases a set. Null is ignored.
///
/// # Safety
/// `set` must come from [`cvk_activation_set_open`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_free(set: *mut CvkActivationSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of sequences, or 0 for null.
///
/// # Safety
/// `set` must be null or come from [`cvk_activation_set_open`].
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_len(set: *const CvkActivationSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Token dimension `d`, or 0 for null.
///
/// # Safety
/// `set` must be null or come from [`cvk_activation_set_open`].
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_dim(set: *const CvkActivationSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

/// Token count of sequence `index`.
///
/// # Safety
/// `set` must come from [`cvk_activation_set_open`]; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_sequence_len(
    set: *const CvkActivationSet,
    index: usize,
    out_len: *mut usize,
) -> CvkStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let out = out_arg(out_len, "out_len")?;
        *out = sequence(set, index)?.len();
        Ok(())
    })
}

fn sequence(
    set: &CvkActivationSet,
    index: usize,
) -> Result<&cvkit::store::ActivationSequence, CvkStatus> {
    set.0.sequences().get(index).ok_or_else(|| {
        fail(
            CvkStatus::NotFound,
            format!("sequence {index} out of range ({} sequences)", set.0.len()),
        )
    })
}

/// Copies the `len × d` tokens of sequence `index` into `out`.
///
/// # Safety
/// `set` must come from [`cvk_activation_set_open`]; `out` must hold
/// `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn cvk_activation_set_copy_tokens(
    set: *const CvkActivationSet,
    index: usize,
    out: *mut f32,
    capacity: usize,
) -> CvkStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        copy_out(sequence(set, index)?.as_slice(), out, capacity)
    })
}

/// Loads a `.cvv` vector store.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cvk_concept_store_open(
    path: *const c_char,
    out: *mut *mut CvkConceptStore,
) -> CvkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let store =
            read_concept_store(path_arg(path)?).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(CvkConceptStore(store)));
        Ok(())
    })
}

/// Releases a store. Null is ignored.
///
/// # Safety
/// `store` must come from [`cvk_concept_store_open`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cvk_concept_store_free(store: *mut CvkConceptStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Number of vectors, or 0 for null.
///
/// # Safety
/// `store` must be null or come from [`cvk_concept_store_open`].
#[no_mangle]
pub unsafe extern "C" fn cvk_concept_store_len(store: *const CvkConceptStore) -> usize {
    store.as_ref().map_or(0, |s| s.0.len())
}

/// Vector dimension, or 0 for null.
///
/// # Safety
/// `store` must be null or come from [`cvk_concept_store_open`].
#[no_mangle]
pub unsafe extern "C" fn cvk_concept_store_dim(store: *const CvkConceptStore) -> usize {
    store.as_ref().map_or(0, |s| s.0.dim())
}

/// Copies the unit vector labelled `label` (e.g. `"red|circle"`) into `out`.
///
/// # Safety
/// `store` must come from [`cvk_concept_store_open`]; `label` must be a
/// NUL-terminated string; `out` must hold `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn cvk_concept_store_copy_vector(
    store: *const CvkConceptStore,
    label: *const c_char,
    out: *mut f32,
    capacity: usize,
) -> CvkStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        let label = str_arg(label, "label")?;
        let v = store
            .0
            .get(label)
            .ok_or_else(|| fail(CvkStatus::NotFound, format!("no vector labelled {label:?}")))?;
        copy_out(v.direction(), out, capacity)
    })
}

/// Steers `n_tokens` rows of `d` floats in place:
/// `h ← h + (h·â)(b̂ − â)`. `source` and `target` are normalized first.
///
/// # Safety
/// `tokens` must hold `n_tokens · d` floats; `source` and `target` `d` each.
#[no_mangle]
pub unsafe extern "C" fn cvk_steer_tokens(
    tokens: *mut f32,
    n_tokens: usize,
    d: usize,
    source: *const f32,
    target: *const f32,
) -> CvkStatus {
    guard(|| {
        if d == 0 {
            return Err(fail(CvkStatus::InvalidArgument, "d must be positive"));
        }
        let n = n_tokens
            .checked_mul(d)
            .ok_or_else(|| fail(CvkStatus::InvalidArgument, "n_tokens · d overflows"))?;
        let unit = |p: *const f32, what: &str| -> Result<Vec<f64>, CvkStatus> {
            let s = slice_arg(p, d, what)?;
            let v: Vec<f64> = s.iter().map(|&x| f64::from(x)).collect();
            normalized(&v, 1e-12)
                .ok_or_else(|| fail(CvkStatus::InvalidArgument, format!("{what} has zero norm")))
        };
        let (a, b) = (unit(source, "source")?, unit(target, "target")?);
        if n == 0 {
            return Ok(());
        }
        if tokens.is_null() {
            return Err(fail(CvkStatus::NullPointer, "tokens is null"));
        }
        let tokens = std::slice::from_raw_parts_mut(tokens, n);
        check(cvkit::steering::steer_tokens(tokens, d, &a, &b))
    })
}

/// Cosine similarity of two length-`d` vectors.
///
/// # Safety
/// `a` and `b` must hold `d` floats; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cvk_cosine(
    a: *const f32,
    b: *const f32,
    d: usize,
    out: *mut f64,
) -> CvkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let (a, b) = (slice_arg(a, d, "a")?, slice_arg(b, d, "b")?);
        let na = cvkit::linalg::norm_f32(a);
        let nb = cvkit::linalg::norm_f32(b);
        if d == 0 || na == 0.0 || nb == 0.0 {
            return Err(fail(
                CvkStatus::InvalidArgument,
                "cosine of an empty or zero vector",
            ));
        }
        *out = cvkit::linalg::dot_f32(a, b) / (na * nb);
        Ok(())
    })
}

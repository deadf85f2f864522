// SPDX-License-Identifier: MIT OR Apache-2.0

//! Concept-vector container (`*.cvv`).
//!
//! Same framing as the activation container with magic `"CVV1"`; the JSON
//! header is `{"model_id":..,"d":..,"vectors":[{"label":..,"method":..}]}` and
//! the payload is the packed `n × d` matrix of little-endian `f32`s.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{parse_prefix, FORMAT_VERSION};
use super::{ConceptStore, ConceptVector, Method};
use crate::error::{CvError, Result};

pub const MAGIC: [u8; 4] = *b"CVV1";

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    label: String,
    method: Method,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model_id: String,
    d: usize,
    vectors: Vec<Entry>,
}

pub fn encode(store: &ConceptStore) -> Vec<u8> {
    let header = Header {
        model_id: store.model_id.clone(),
        d: store.dim(),
        vectors: store
            .vectors()
            .iter()
            .map(|v| Entry {
                label: v.label.clone(),
                method: v.method,
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(12 + header.len() + store.len() * store.dim() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in store.vectors() {
        for x in v.direction() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ConceptStore> {
    let (header, payload): (Header, _) = parse_prefix(bytes, MAGIC)?;
    let d = header.d;
    if d == 0 {
        return Err(CvError::Header("d must be at least 1".into()));
    }
    let expected = header.vectors.len() * d * 4;
    if payload.len() < expected {
        return Err(CvError::Truncated {
            needed: expected,
            available: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(CvError::LengthMismatch(format!(
            "payload has {} bytes, header describes {}",
            payload.len(),
            expected
        )));
    }
    let vectors = header
        .vectors
        .into_iter()
        .zip(payload.chunks_exact(d * 4))
        .map(|(e, chunk)| {
            let dir = chunk
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ConceptVector::new(dir, e.label, e.method, header.model_id.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ConceptStore::new(header.model_id, d, vectors)
}

pub fn write_concept_store(store: &ConceptStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(store)).map_err(|e| CvError::io(path, e))
}

pub fn read_concept_store(path: impl AsRef<Path>) -> Result<ConceptStore> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CvError::io(path, e))?;
    decode(&bytes)
}

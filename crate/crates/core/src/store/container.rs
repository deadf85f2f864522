// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation container (`*.cva`).
//!
//! ```text
//! "CVA1" | version: u32 LE | header_len: u32 LE | header (UTF-8 JSON) | payload
//! ```
//!
//! The header is compact JSON:
//! `{"model_id":..,"d":..,"sequences":[{"stimulus_id":..,"layer_tag":..,"len":..,"grid":[rows,cols],"offset":..}]}`
//! where `offset` is the byte offset of the sequence inside the payload. The
//! payload concatenates every sequence's `len · d` little-endian `f32`s,
//! token-major. Concurrent writers to one path are not supported.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ActivationSequence, ActivationSet, Grid};
use crate::error::{CvError, Result};

pub const MAGIC: [u8; 4] = *b"CVA1";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct SequenceRecord {
    pub stimulus_id: String,
    pub layer_tag: String,
    pub len: usize,
    pub grid: (u32, u32),
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct Header {
    pub model_id: String,
    pub d: usize,
    pub sequences: Vec<SequenceRecord>,
}

/// Serializes a validated set to bytes.
pub fn encode(set: &ActivationSet) -> Result<Vec<u8>> {
    set.check()?;
    Ok(encode_unchecked(set))
}

fn encode_unchecked(set: &ActivationSet) -> Vec<u8> {
    let mut offset = 0;
    let sequences = set
        .sequences()
        .iter()
        .map(|s| {
            let rec = SequenceRecord {
                stimulus_id: s.stimulus_id.clone(),
                layer_tag: s.layer_tag.clone(),
                len: s.len(),
                grid: (s.grid.rows, s.grid.cols),
                offset,
            };
            offset += s.as_slice().len() * 4;
            rec
        })
        .collect();
    let header = Header {
        model_id: set.model_id.clone(),
        d: set.dim(),
        sequences,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len() + offset);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for s in set.sequences() {
        for x in s.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Writes `set` to `path`, rejecting invalid sets before touching the file.
pub fn write_activation_set(set: &ActivationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(set)?;
    std::fs::write(path, bytes).map_err(|e| CvError::io(path, e))
}

/// Header and payload split out of a container, with structural checks done
/// but no numeric validation.
pub(crate) struct Parsed<'a> {
    pub header: Header,
    pub payload: &'a [u8],
}

pub(crate) fn parse_prefix<H: serde::de::DeserializeOwned>(
    bytes: &[u8],
    magic: [u8; 4],
) -> Result<(H, &[u8])> {
    if bytes.len() < PREFIX_LEN {
        if bytes.len() >= 4 && bytes[..4] != magic {
            return Err(CvError::BadMagic {
                expected: magic,
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(CvError::Truncated {
            needed: PREFIX_LEN,
            available: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(CvError::BadMagic {
            expected: magic,
            found,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CvError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_end = PREFIX_LEN + header_len;
    if bytes.len() < header_end {
        return Err(CvError::Truncated {
            needed: header_end,
            available: bytes.len(),
        });
    }
    let text = std::str::from_utf8(&bytes[PREFIX_LEN..header_end])
        .map_err(|e| CvError::Header(format!("header is not UTF-8: {e}")))?;
    let header = serde_json::from_str(text).map_err(|e| CvError::Header(e.to_string()))?;
    Ok((header, &bytes[header_end..]))
}

pub(crate) fn parse(bytes: &[u8]) -> Result<Parsed<'_>> {
    let (header, payload): (Header, _) = parse_prefix(bytes, MAGIC)?;
    if header.d == 0 {
        return Err(CvError::Header("d must be at least 1".into()));
    }
    let mut expected = 0usize;
    for rec in &header.sequences {
        if rec.offset != expected {
            return Err(CvError::LengthMismatch(format!(
                "{}: header offset {} but sequences before it occupy {} bytes",
                rec.stimulus_id, rec.offset, expected
            )));
        }
        expected += rec.len * header.d * 4;
    }
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
    Ok(Parsed { header, payload })
}

fn floats(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

/// Decodes and validates a container from bytes.
pub fn decode(bytes: &[u8]) -> Result<ActivationSet> {
    let Parsed { header, payload } = parse(bytes)?;
    let d = header.d;
    let sequences = header
        .sequences
        .into_iter()
        .map(|rec| {
            let n = rec.len * d * 4;
            let tokens = floats(&payload[rec.offset..rec.offset + n]);
            ActivationSequence::new(
                tokens,
                d,
                rec.stimulus_id,
                header.model_id.clone(),
                rec.layer_tag,
                Grid::new(rec.grid.0, rec.grid.1),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ActivationSet::new(header.model_id, d, sequences)
}

pub fn read_activation_set(path: impl AsRef<Path>) -> Result<ActivationSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| CvError::io(path, e))?;
    decode(&bytes)
}

/// Per-sequence validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceCheck {
    pub index: usize,
    pub stimulus_id: String,
    pub len: usize,
    pub d: usize,
    pub grid: (u32, u32),
    pub grid_consistent: bool,
    pub finite: bool,
    /// `(token, dim)` of the first non-finite entry.
    pub first_non_finite: Option<(usize, usize)>,
}

impl SequenceCheck {
    pub fn ok(&self) -> bool {
        self.grid_consistent && self.finite && self.len >= 1
    }
}

/// Result of [`validate_container`]. Problems are entries, never errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub path: PathBuf,
    pub ok: bool,
    pub model_id: Option<String>,
    pub d: Option<usize>,
    pub sequences: Vec<SequenceCheck>,
    pub issues: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.path.display(),
            if self.ok { "ok" } else { "INVALID" }
        )?;
        if let (Some(m), Some(d)) = (&self.model_id, self.d) {
            writeln!(f, "  model_id={m} d={d} sequences={}", self.sequences.len())?;
        }
        for s in &self.sequences {
            if !s.ok() {
                write!(
                    f,
                    "  [{}] {} L={} grid={}x{}",
                    s.index, s.stimulus_id, s.len, s.grid.0, s.grid.1
                )?;
                if !s.grid_consistent {
                    write!(f, " grid-inconsistent")?;
                }
                if let Some((t, i)) = s.first_non_finite {
                    write!(f, " non-finite at token {t} dim {i}")?;
                }
                writeln!(f)?;
            }
        }
        for issue in &self.issues {
            writeln!(f, "  issue: {issue}")?;
        }
        Ok(())
    }
}

/// Checks a container file without failing on content problems.
pub fn validate_container(path: impl AsRef<Path>) -> ValidationReport {
    let path = path.as_ref();
    let mut report = ValidationReport {
        path: path.to_path_buf(),
        ok: false,
        model_id: None,
        d: None,
        sequences: Vec::new(),
        issues: Vec::new(),
    };
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            report.issues.push(format!("cannot read file: {e}"));
            return report;
        }
    };
    let Parsed { header, payload } = match parse(&bytes) {
        Ok(p) => p,
        Err(e) => {
            report.issues.push(e.to_string());
            return report;
        }
    };
    let d = header.d;
    report.model_id = Some(header.model_id.clone());
    report.d = Some(d);
    for (index, rec) in header.sequences.iter().enumerate() {
        let n = rec.len * d * 4;
        let tokens = floats(&payload[rec.offset..rec.offset + n]);
        let first_non_finite = tokens
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| (p / d, p % d));
        report.sequences.push(SequenceCheck {
            index,
            stimulus_id: rec.stimulus_id.clone(),
            len: rec.len,
            d,
            grid: rec.grid,
            grid_consistent: rec.grid.0 as usize * rec.grid.1 as usize == rec.len,
            finite: first_non_finite.is_none(),
            first_non_finite,
        });
        if rec.len == 0 {
            report
                .issues
                .push(format!("{}: empty sequence", rec.stimulus_id));
        }
    }
    report.ok = report.issues.is_empty() && report.sequences.iter().all(SequenceCheck::ok);
    report
}

#[cfg(test)]
pub(crate) fn encode_for_test(set: &ActivationSet) -> Vec<u8> {
    encode_unchecked(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ActivationSequence;

    fn seq(id: &str, len: usize, d: usize, fill: f32) -> ActivationSequence {
        ActivationSequence::new(
            vec![fill; len * d],
            d,
            id,
            "m",
            "post_proj",
            Grid::new(len as u32, 1),
        )
        .unwrap()
    }

    #[test]
    fn zero_matrix_payload_size() {
        let set = ActivationSet::new("m", 3, vec![seq("a", 4, 3, 0.0)]).unwrap();
        let bytes = encode(&set).unwrap();
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(bytes.len() - 12 - header_len, 4 * 3 * 4);
        assert!(bytes[12 + header_len..].iter().all(|&b| b == 0));
    }

    #[test]
    fn bad_magic() {
        let set = ActivationSet::new("m", 3, vec![seq("a", 4, 3, 1.0)]).unwrap();
        let mut bytes = encode(&set).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bytes), Err(CvError::BadMagic { .. })));
    }

    #[test]
    fn version_mismatch() {
        let set = ActivationSet::new("m", 3, vec![seq("a", 4, 3, 1.0)]).unwrap();
        let mut bytes = encode(&set).unwrap();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(CvError::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn truncated_payload() {
        let set = ActivationSet::new("m", 3, vec![seq("a", 4, 3, 1.0)]).unwrap();
        let bytes = encode(&set).unwrap();
        let err = decode(&bytes[..bytes.len() - 4]).unwrap_err();
        assert!(matches!(err, CvError::Truncated { .. }), "{err}");
    }

    #[test]
    fn trailing_bytes_are_a_length_mismatch() {
        let set = ActivationSet::new("m", 3, vec![seq("a", 4, 3, 1.0)]).unwrap();
        let mut bytes = encode(&set).unwrap();
        bytes.extend_from_slice(&[0; 4]);
        assert!(matches!(decode(&bytes), Err(CvError::LengthMismatch(_))));
    }

    #[test]
    fn nan_rejected_before_write() {
        let mut good = seq("a", 4, 3, 1.0);
        assert!(ActivationSet::new("m", 3, vec![good.clone()]).is_ok());
        let mut t = good.as_slice().to_vec();
        t[0] = f32::NAN;
        good = ActivationSequence::raw(t, 3, "a", Grid::new(4, 1));
        let set = ActivationSet {
            model_id: "test".into(),
            dim: 3,
            sequences: vec![good],
        };
        assert!(matches!(encode(&set), Err(CvError::Invariant(_))));
    }

    #[test]
    fn validate_reports_grid_and_inf() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = vec![0.5f32; 256 * 2];
        t[3 * 2 + 1] = f32::INFINITY;
        let bad_grid = ActivationSequence::raw(vec![0.0; 256 * 2], 2, "grid", Grid::new(15, 17));
        let bad_inf = ActivationSequence::raw(t, 2, "inf", Grid::new(16, 16));
        let set = ActivationSet {
            model_id: "test".into(),
            dim: 2,
            sequences: vec![bad_grid, bad_inf],
        };
        let path = dir.path().join("bad.cva");
        std::fs::write(&path, encode_for_test(&set)).unwrap();
        let report = validate_container(&path);
        assert!(!report.ok);
        assert!(!report.sequences[0].grid_consistent);
        assert!(report.sequences[0].finite);
        assert!(report.sequences[1].grid_consistent);
        assert_eq!(report.sequences[1].first_non_finite, Some((3, 1)));
        let text = report.to_string();
        assert!(text.contains("grid-inconsistent") && text.contains("token 3"));
    }

    #[test]
    fn validate_reports_structural_problems() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.cva");
        std::fs::write(&path, b"XXXXjunkjunkjunk").unwrap();
        let report = validate_container(&path);
        assert!(!report.ok);
        assert!(report.issues[0].contains("bad magic"));
    }
}

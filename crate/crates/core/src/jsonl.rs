// SPDX-License-Identifier: MIT OR Apache-2.0

//! One JSON record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CvError, Result};

pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| CvError::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n").map_err(|e| CvError::io(path, e))?;
    }
    w.flush().map_err(|e| CvError::io(path, e))
}

/// Reads every non-blank line; errors name the offending line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path).map_err(|e| CvError::io(path, e))?);
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CvError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| CvError::Serde(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        write_jsonl(&p, [vec![1, 2], vec![3]]).unwrap();
        let back: Vec<Vec<i32>> = read_jsonl(&p).unwrap();
        assert_eq!(back, vec![vec![1, 2], vec![3]]);
        std::fs::write(&p, "[1]\n\n{oops\n").unwrap();
        let err = read_jsonl::<Vec<i32>>(&p).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
    }
}

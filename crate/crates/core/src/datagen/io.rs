//! Binary dataset files.
//!
//! Layout (little-endian):
//!
//! ```text
//! "DPHC" | version u8 = 1 | header_len u32 | header JSON (UTF-8)
//! payload: per sample 8 × f32 features, then u16 label
//! ```
//!
//! The header carries the payload CRC32. A `.meta.json` sidecar duplicates it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, GenSpec, Sample, Split, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::qchannel::NoiseKind;

pub const MAGIC: &[u8; 4] = b"DPHC";
pub const FORMAT_VERSION: u8 = 1;

const RECORD_BYTES: usize = FEATURE_DIM * 4 + 2;
const PREAMBLE_BYTES: usize = 4 + 1 + 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub kind: NoiseKind,
    pub class_values: Vec<f64>,
    pub class_names: Vec<String>,
    pub split: Split,
    pub sample_count: usize,
    pub feature_dim: usize,
    pub crc32: u32,
    pub spec: Option<GenSpec>,
}

/// `train.dphc` → `train.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn encode_payload(ds: &Dataset) -> Vec<u8> {
    let mut payload = Vec::with_capacity(ds.len() * RECORD_BYTES);
    for s in &ds.samples {
        for x in s.x {
            payload.extend_from_slice(&(x as f32).to_le_bytes());
        }
        payload.extend_from_slice(&s.label.to_le_bytes());
    }
    payload
}

/// Serializes `ds` to bytes; features are stored as binary32.
pub fn to_bytes(ds: &Dataset) -> Result<(Vec<u8>, DatasetHeader)> {
    let payload = encode_payload(ds);
    let header = DatasetHeader {
        kind: ds.kind,
        class_values: ds.class_values.clone(),
        class_names: ds.class_names.clone(),
        split: ds.split,
        sample_count: ds.len(),
        feature_dim: FEATURE_DIM,
        crc32: crc32fast::hash(&payload),
        spec: ds.spec.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len())
        .map_err(|_| Error::MalformedHeader("header larger than 4 GiB".into()))?;
    let mut out = Vec::with_capacity(PREAMBLE_BYTES + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok((out, header))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < PREAMBLE_BYTES {
        return Err(Error::TruncatedFile {
            expected: PREAMBLE_BYTES,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader("bad magic".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let json_len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let payload_start = PREAMBLE_BYTES + json_len;
    if bytes.len() < payload_start {
        return Err(Error::TruncatedFile {
            expected: payload_start,
            found: bytes.len(),
        });
    }
    let header: DatasetHeader = serde_json::from_slice(&bytes[PREAMBLE_BYTES..payload_start])
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.feature_dim != FEATURE_DIM {
        return Err(Error::MalformedHeader(format!(
            "feature_dim {} (expected {FEATURE_DIM})",
            header.feature_dim
        )));
    }
    if header.class_names.len() < 2 {
        return Err(Error::MalformedHeader("fewer than two classes".into()));
    }
    let expected = payload_start + header.sample_count * RECORD_BYTES;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after {} samples",
            bytes.len() - expected,
            header.sample_count
        )));
    }
    let payload = &bytes[payload_start..];
    let found = crc32fast::hash(payload);
    if found != header.crc32 {
        return Err(Error::ChecksumMismatch {
            expected: header.crc32,
            found,
        });
    }
    let m = header.class_names.len();
    let mut samples = Vec::with_capacity(header.sample_count);
    for record in payload.chunks_exact(RECORD_BYTES) {
        let mut x = [0.0; FEATURE_DIM];
        for (i, xi) in x.iter_mut().enumerate() {
            let b = &record[4 * i..4 * i + 4];
            *xi = f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64;
        }
        let label = u16::from_le_bytes([record[RECORD_BYTES - 2], record[RECORD_BYTES - 1]]);
        if label as usize >= m {
            return Err(Error::MalformedHeader(format!(
                "header declares {m} classes but payload holds label {label}"
            )));
        }
        samples.push(Sample {
            x,
            label,
            provenance: None,
        });
    }
    Ok(Dataset {
        kind: header.kind,
        class_values: header.class_values,
        class_names: header.class_names,
        split: header.split,
        spec: header.spec,
        samples,
    })
}

/// Writes the dataset and its `.meta.json` sidecar.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let (bytes, header) = to_bytes(ds)?;
    fs::write(path, bytes)?;
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&header)? + "\n",
    )?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    from_bytes(&fs::read(path)?)
}

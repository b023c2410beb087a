//! Bit-exact readers and writers for the `fvecs`/`ivecs` vector file
//! formats used by the common ANN benchmark datasets.
//!
//! Both formats are a bare sequence of records with no header or padding:
//! each record is a little-endian `i32` dimension `d` followed by `d`
//! little-endian payload values (`f32` for fvecs, `i32` for ivecs). Every
//! record in a file must have the same dimension, and fvecs payloads must
//! be finite.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use fastdco_core::{Dataset, GroundTruth};
use thiserror::Error;

/// Failures while reading or writing vector files.
#[derive(Debug, Error)]
pub enum VecioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("record {record} has dimension {got}, expected {expected}")]
    DimMismatch {
        record: usize,
        expected: usize,
        got: usize,
    },
    #[error("file truncated in record {record}")]
    Truncated { record: usize },
    #[error("record {record} declares non-positive dimension {dim}")]
    BadDim { record: usize, dim: i32 },
    #[error("record {record} holds a non-finite value")]
    NonFinite { record: usize },
}

/// Reads the `i32` record header, distinguishing clean end-of-file from a
/// mid-record truncation.
fn read_record_dim(
    r: &mut impl Read,
    record: usize,
) -> Result<Option<i32>, VecioError> {
    match r.read_i32::<LittleEndian>() {
        Ok(d) => Ok(Some(d)),
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => {
            if record == 0 {
                // An empty file has no first record to return.
                Err(VecioError::Truncated { record: 0 })
            } else {
                Ok(None)
            }
        }
        Err(e) => Err(e.into()),
    }
}

fn check_dim(record: usize, expected: usize, d: i32) -> Result<usize, VecioError> {
    if d <= 0 {
        return Err(VecioError::BadDim { record, dim: d });
    }
    let d = d as usize;
    if record > 0 && d != expected {
        return Err(VecioError::DimMismatch {
            record,
            expected,
            got: d,
        });
    }
    Ok(d)
}

/// Reads an entire fvecs file into a [`Dataset`]. The dimension is taken
/// from the first record; later records must match it. Non-finite values
/// are rejected.
pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Dataset, VecioError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut dim = 0usize;
    let mut data: Vec<f32> = Vec::new();
    let mut buf: Vec<f32> = Vec::new();
    let mut record = 0usize;
    while let Some(d) = read_record_dim(&mut r, record)? {
        dim = check_dim(record, dim, d)?;
        buf.resize(dim, 0.0);
        r.read_f32_into::<LittleEndian>(&mut buf).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                VecioError::Truncated { record }
            } else {
                VecioError::Io(e)
            }
        })?;
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(VecioError::NonFinite { record });
        }
        data.extend_from_slice(&buf);
        record += 1;
    }
    Ok(Dataset::from_vec(dim, data))
}

/// Writes a [`Dataset`] as fvecs; `read_fvecs` returns it bit-exactly.
pub fn write_fvecs(path: impl AsRef<Path>, data: &Dataset) -> Result<(), VecioError> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in data.rows() {
        w.write_i32::<LittleEndian>(data.dim() as i32)?;
        for &v in row {
            w.write_f32::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an ivecs file; returns the per-record dimension and the row-major
/// payload.
pub fn read_ivecs(path: impl AsRef<Path>) -> Result<(usize, Vec<i32>), VecioError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut dim = 0usize;
    let mut data: Vec<i32> = Vec::new();
    let mut buf: Vec<i32> = Vec::new();
    let mut record = 0usize;
    while let Some(d) = read_record_dim(&mut r, record)? {
        dim = check_dim(record, dim, d)?;
        buf.resize(dim, 0);
        r.read_i32_into::<LittleEndian>(&mut buf).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                VecioError::Truncated { record }
            } else {
                VecioError::Io(e)
            }
        })?;
        data.extend_from_slice(&buf);
        record += 1;
    }
    Ok((dim, data))
}

/// Writes row-major `i32` records of width `dim` as ivecs.
pub fn write_ivecs(path: impl AsRef<Path>, dim: usize, data: &[i32]) -> Result<(), VecioError> {
    assert!(dim > 0, "record dimension must be positive");
    assert_eq!(data.len() % dim, 0, "payload is not a whole number of records");
    let mut w = BufWriter::new(File::create(path)?);
    for row in data.chunks_exact(dim) {
        w.write_i32::<LittleEndian>(dim as i32)?;
        for &v in row {
            w.write_i32::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes ground truth as a file pair: `<stem>.ivecs` holds the neighbor
/// ids, `<stem>.fvecs` the squared distances, row per query.
pub fn write_ground_truth(stem: impl AsRef<Path>, gt: &GroundTruth) -> Result<(), VecioError> {
    let stem = stem.as_ref();
    let ids: Vec<i32> = (0..gt.len())
        .flat_map(|q| gt.ids_row(q).iter().map(|&id| id as i32))
        .collect();
    write_ivecs(stem.with_extension("ivecs"), gt.k(), &ids)?;
    let dists: Vec<f32> = (0..gt.len())
        .flat_map(|q| gt.dists_row(q).iter().copied())
        .collect();
    write_fvecs(
        stem.with_extension("fvecs"),
        &Dataset::from_vec(gt.k(), dists),
    )
}

/// Reads a ground-truth file pair written by [`write_ground_truth`].
pub fn read_ground_truth(stem: impl AsRef<Path>) -> Result<GroundTruth, VecioError> {
    let stem = stem.as_ref();
    let (k, ids) = read_ivecs(stem.with_extension("ivecs"))?;
    let dists = read_fvecs(stem.with_extension("fvecs"))?;
    assert_eq!(dists.dim(), k, "ground-truth file pair disagrees on K");
    let ids: Vec<u32> = ids.into_iter().map(|v| v as u32).collect();
    Ok(GroundTruth::new(k, ids, dists.into_vec()))
}

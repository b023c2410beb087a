//! On-disk formats for every build artifact: rotors, codebooks, learned
//! classifiers and cascades, and the two index types.
//!
//! Binary artifacts are little-endian throughout and carry a 4-byte magic
//! plus a format version so a wrong file is rejected up front, not parsed
//! into garbage. Learned classifiers are stored as plain text: one record
//! per line, floats in Rust's shortest round-trip notation, so the files
//! are diffable and still reload bit-exactly.
//!
//! Layouts (after the magic + `u32` version):
//!
//! * rotor (`FDRT`): `i32` D, `i32` kind (0 = pca, 1 = random,
//!   2 = identity), `f32` mean\[D\], `f32` R\[D×D\] row-major, `f32`
//!   sigma2\[D\].
//! * codebook (`FDCB`): `i32` dim, `i32` num_subspaces, `i32` nbits, `i32`
//!   has_rotation, optional `f32` rotation\[dim×dim\], `f32` centroids
//!   (num_subspaces · 2^nbits · dim/num_subspaces values).
//! * IVF index (`FDIV`): embedded rotor, `i32` nlist, `f32`
//!   centroids\[nlist×D\], per bucket `u32` len + `u32` ids, `i64` n, `f32`
//!   rotated\[n×D\], `f32` norms\[n\], `u8` has_codes, then an embedded
//!   codebook, `u32` byte count + packed code bytes, `f32` residuals\[n\].
//! * HNSW index (`FDHN`): embedded rotor, `i32` M, `i32` ef_construction,
//!   `u32` entry, `i32` max_level, `i64` n, `u8` levels\[n\], per node and
//!   per layer `u32` len + `u32` ids, `f32` rotated\[n×D\], `f32`
//!   norms\[n\].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use fastdco_core::learn::{Cascade, LinearClassifier};
use fastdco_core::quant::{Codebook, PackedCodes};
use fastdco_core::transform::{Rotor, RotorKind};
use fastdco_core::{Dataset, HnswIndex, IvfIndex, QuantPayload};
use thiserror::Error;

const VERSION: u32 = 1;
const MAGIC_ROTOR: &[u8; 4] = b"FDRT";
const MAGIC_CODEBOOK: &[u8; 4] = b"FDCB";
const MAGIC_IVF: &[u8; 4] = b"FDIV";
const MAGIC_HNSW: &[u8; 4] = b"FDHN";

/// Failures while loading or saving artifacts.
#[derive(Debug, Error)]
pub enum SerialError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {expected}, found {found}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("invalid field: {0}")]
    Invalid(&'static str),
    #[error("text artifact parse error on line {line}: {what}")]
    Text { line: usize, what: &'static str },
}

fn write_magic(w: &mut impl Write, magic: &[u8; 4]) -> Result<(), SerialError> {
    w.write_all(magic)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    Ok(())
}

fn read_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<(), SerialError> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(SerialError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&found).into_owned(),
        });
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(SerialError::BadVersion(version));
    }
    Ok(())
}

fn write_f32s(w: &mut impl Write, vals: &[f32]) -> Result<(), SerialError> {
    for &v in vals {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f32>, SerialError> {
    let mut v = vec![0.0f32; n];
    r.read_f32_into::<LittleEndian>(&mut v)?;
    Ok(v)
}

fn read_len(r: &mut impl Read, what: &'static str) -> Result<usize, SerialError> {
    let v = r.read_i32::<LittleEndian>()?;
    if v < 0 {
        return Err(SerialError::Invalid(what));
    }
    Ok(v as usize)
}

// ---------------------------------------------------------------- rotor --

fn rotor_kind_tag(kind: RotorKind) -> i32 {
    match kind {
        RotorKind::Pca => 0,
        RotorKind::Random => 1,
        RotorKind::Identity => 2,
    }
}

fn rotor_kind_from_tag(tag: i32) -> Result<RotorKind, SerialError> {
    match tag {
        0 => Ok(RotorKind::Pca),
        1 => Ok(RotorKind::Random),
        2 => Ok(RotorKind::Identity),
        _ => Err(SerialError::Invalid("rotor kind tag")),
    }
}

fn write_rotor_into(w: &mut impl Write, rotor: &Rotor) -> Result<(), SerialError> {
    write_magic(w, MAGIC_ROTOR)?;
    w.write_i32::<LittleEndian>(rotor.dim() as i32)?;
    w.write_i32::<LittleEndian>(rotor_kind_tag(rotor.kind()))?;
    write_f32s(w, rotor.mean())?;
    write_f32s(w, rotor.matrix())?;
    write_f32s(w, rotor.sigma2())?;
    Ok(())
}

fn read_rotor_from(r: &mut impl Read) -> Result<Rotor, SerialError> {
    read_magic(r, MAGIC_ROTOR)?;
    let dim = read_len(r, "rotor dimension")?;
    if dim == 0 {
        return Err(SerialError::Invalid("rotor dimension"));
    }
    let kind = rotor_kind_from_tag(r.read_i32::<LittleEndian>()?)?;
    let mean = read_f32s(r, dim)?;
    let matrix = read_f32s(r, dim * dim)?;
    let sigma2 = read_f32s(r, dim)?;
    Ok(Rotor::from_parts(dim, kind, matrix, mean, sigma2))
}

/// Saves a rotor to `path`; [`load_rotor`] restores it bit-exactly.
pub fn save_rotor(path: impl AsRef<Path>, rotor: &Rotor) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_rotor_into(&mut w, rotor)?;
    w.flush()?;
    Ok(())
}

pub fn load_rotor(path: impl AsRef<Path>) -> Result<Rotor, SerialError> {
    read_rotor_from(&mut BufReader::new(File::open(path)?))
}

// ------------------------------------------------------------- codebook --

fn write_codebook_into(w: &mut impl Write, cb: &Codebook) -> Result<(), SerialError> {
    write_magic(w, MAGIC_CODEBOOK)?;
    w.write_i32::<LittleEndian>(cb.dim() as i32)?;
    w.write_i32::<LittleEndian>(cb.num_subspaces() as i32)?;
    w.write_i32::<LittleEndian>(cb.nbits() as i32)?;
    match cb.rotation() {
        Some(rot) => {
            w.write_i32::<LittleEndian>(1)?;
            write_f32s(w, rot)?;
        }
        None => w.write_i32::<LittleEndian>(0)?,
    }
    write_f32s(w, cb.centroids())?;
    Ok(())
}

fn read_codebook_from(r: &mut impl Read) -> Result<Codebook, SerialError> {
    read_magic(r, MAGIC_CODEBOOK)?;
    let dim = read_len(r, "codebook dimension")?;
    let num_subspaces = read_len(r, "codebook subspaces")?;
    let nbits = read_len(r, "codebook nbits")?;
    if dim == 0
        || num_subspaces == 0
        || dim % num_subspaces != 0
        || nbits == 0
        || nbits > 16
    {
        return Err(SerialError::Invalid("codebook geometry"));
    }
    let has_rotation = r.read_i32::<LittleEndian>()?;
    let rotation = match has_rotation {
        0 => None,
        1 => Some(read_f32s(r, dim * dim)?),
        _ => return Err(SerialError::Invalid("codebook rotation flag")),
    };
    let centroids = read_f32s(r, num_subspaces * (1usize << nbits) * (dim / num_subspaces))?;
    Ok(Codebook::from_parts(
        dim,
        num_subspaces,
        nbits as u8,
        rotation,
        centroids,
    ))
}

/// Saves a PQ/OPQ codebook; [`load_codebook`] restores it bit-exactly.
pub fn save_codebook(path: impl AsRef<Path>, cb: &Codebook) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_codebook_into(&mut w, cb)?;
    w.flush()?;
    Ok(())
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook, SerialError> {
    read_codebook_from(&mut BufReader::new(File::open(path)?))
}

// ------------------------------------------------- classifier / cascade --

/// One classifier as a text line: `m1 beta w0 w1 ...`. Rust's float
/// formatting prints the shortest string that parses back to the same bits,
/// so the text round-trip is exact.
fn classifier_line(clf: &LinearClassifier) -> String {
    let mut line = format!("{} {}", clf.m1, clf.beta);
    for &w in &clf.extra_weights {
        line.push(' ');
        line.push_str(&w.to_string());
    }
    line
}

fn parse_f32(tok: Option<&str>, line: usize) -> Result<f32, SerialError> {
    tok.and_then(|t| t.parse::<f32>().ok())
        .ok_or(SerialError::Text {
            line,
            what: "expected a float",
        })
}

fn parse_classifier_line(s: &str, line: usize) -> Result<LinearClassifier, SerialError> {
    let mut toks = s.split_whitespace();
    let m1 = parse_f32(toks.next(), line)?;
    let beta = parse_f32(toks.next(), line)?;
    let mut extra_weights = Vec::new();
    for t in toks {
        extra_weights.push(parse_f32(Some(t), line)?);
    }
    Ok(LinearClassifier {
        m1,
        extra_weights,
        beta,
    })
}

/// Saves a single learned classifier as text (`classifier` header line,
/// then the weight line).
pub fn save_classifier(
    path: impl AsRef<Path>,
    clf: &LinearClassifier,
) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "classifier")?;
    writeln!(w, "{}", classifier_line(clf))?;
    w.flush()?;
    Ok(())
}

pub fn load_classifier(path: impl AsRef<Path>) -> Result<LinearClassifier, SerialError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("classifier") {
        return Err(SerialError::Text {
            line: 1,
            what: "expected `classifier` header",
        });
    }
    parse_classifier_line(
        lines.next().ok_or(SerialError::Text {
            line: 2,
            what: "missing weight line",
        })?,
        2,
    )
}

/// Saves a cascade as text: a header carrying the stride, target recall and
/// stage count, then one `checkpoint stage_recall m1 beta [extras...]` line
/// per stage.
pub fn save_cascade(path: impl AsRef<Path>, cascade: &Cascade) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "cascade {} {} {}",
        cascade.delta_d,
        cascade.target_recall,
        cascade.stages.len()
    )?;
    for ((d, clf), &r) in cascade.stages.iter().zip(&cascade.stage_recalls) {
        writeln!(w, "{} {} {}", d, r, classifier_line(clf))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_cascade(path: impl AsRef<Path>) -> Result<Cascade, SerialError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SerialError::Text {
        line: 1,
        what: "empty file",
    })?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("cascade") {
        return Err(SerialError::Text {
            line: 1,
            what: "expected `cascade` header",
        });
    }
    let delta_d = toks
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or(SerialError::Text {
            line: 1,
            what: "bad delta_d",
        })?;
    let target_recall = parse_f32(toks.next(), 1)?;
    let n_stages = toks
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or(SerialError::Text {
            line: 1,
            what: "bad stage count",
        })?;
    let mut stages = Vec::with_capacity(n_stages);
    let mut stage_recalls = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let (idx, line) = lines.next().ok_or(SerialError::Text {
            line: n_stages + 1,
            what: "missing stage line",
        })?;
        let lineno = idx + 1;
        let mut toks = line.split_whitespace();
        let d = toks
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or(SerialError::Text {
                line: lineno,
                what: "bad checkpoint",
            })?;
        let r = parse_f32(toks.next(), lineno)?;
        let rest: Vec<&str> = toks.collect();
        let clf = parse_classifier_line(&rest.join(" "), lineno)?;
        stages.push((d, clf));
        stage_recalls.push(r);
    }
    Ok(Cascade {
        stages,
        delta_d,
        target_recall,
        stage_recalls,
    })
}

// ---------------------------------------------------------------- index --

fn write_dataset_into(w: &mut impl Write, data: &Dataset) -> Result<(), SerialError> {
    w.write_i64::<LittleEndian>(data.len() as i64)?;
    w.write_i32::<LittleEndian>(data.dim() as i32)?;
    write_f32s(w, data.as_slice())?;
    Ok(())
}

fn read_dataset_from(r: &mut impl Read) -> Result<Dataset, SerialError> {
    let n = r.read_i64::<LittleEndian>()?;
    if n < 0 {
        return Err(SerialError::Invalid("dataset length"));
    }
    let dim = read_len(r, "dataset dimension")?;
    if dim == 0 {
        return Err(SerialError::Invalid("dataset dimension"));
    }
    let data = read_f32s(r, n as usize * dim)?;
    Ok(Dataset::from_vec(dim, data))
}

fn write_ids(w: &mut impl Write, ids: &[u32]) -> Result<(), SerialError> {
    w.write_u32::<LittleEndian>(ids.len() as u32)?;
    for &id in ids {
        w.write_u32::<LittleEndian>(id)?;
    }
    Ok(())
}

fn read_ids(r: &mut impl Read) -> Result<Vec<u32>, SerialError> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut ids = vec![0u32; len];
    r.read_u32_into::<LittleEndian>(&mut ids)?;
    Ok(ids)
}

fn write_quant_into(w: &mut impl Write, quant: Option<&QuantPayload>) -> Result<(), SerialError> {
    match quant {
        None => w.write_u8(0)?,
        Some(q) => {
            w.write_u8(1)?;
            write_codebook_into(w, &q.codebook)?;
            let bytes = q.codes.as_bytes();
            w.write_u32::<LittleEndian>(bytes.len() as u32)?;
            w.write_all(bytes)?;
            write_f32s(w, &q.residuals)?;
        }
    }
    Ok(())
}

fn read_quant_from(r: &mut impl Read, n: usize) -> Result<Option<QuantPayload>, SerialError> {
    match r.read_u8()? {
        0 => Ok(None),
        1 => {
            let codebook = read_codebook_from(r)?;
            let byte_len = r.read_u32::<LittleEndian>()? as usize;
            let expected = (n * codebook.num_subspaces() * codebook.nbits() as usize).div_ceil(8);
            if byte_len != expected {
                return Err(SerialError::Invalid("packed code length"));
            }
            let mut bytes = vec![0u8; byte_len];
            r.read_exact(&mut bytes)?;
            let codes =
                PackedCodes::from_parts(n, codebook.num_subspaces(), codebook.nbits(), bytes);
            let residuals = read_f32s(r, n)?;
            Ok(Some(QuantPayload {
                codebook,
                codes,
                residuals,
            }))
        }
        _ => Err(SerialError::Invalid("quant payload flag")),
    }
}

/// Saves an IVF index (rotor and optional quantization payload embedded).
pub fn save_ivf(path: impl AsRef<Path>, idx: &IvfIndex) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, MAGIC_IVF)?;
    write_rotor_into(&mut w, idx.rotor())?;
    w.write_i32::<LittleEndian>(idx.nlist() as i32)?;
    write_f32s(&mut w, idx.centroids())?;
    for bucket in idx.buckets() {
        write_ids(&mut w, bucket)?;
    }
    write_dataset_into(&mut w, idx.rotated())?;
    write_f32s(&mut w, idx.norms())?;
    write_quant_into(&mut w, idx.quant())?;
    w.flush()?;
    Ok(())
}

pub fn load_ivf(path: impl AsRef<Path>) -> Result<IvfIndex, SerialError> {
    let mut r = BufReader::new(File::open(path)?);
    read_magic(&mut r, MAGIC_IVF)?;
    let rotor = read_rotor_from(&mut r)?;
    let nlist = read_len(&mut r, "nlist")?;
    let centroids = read_f32s(&mut r, nlist * rotor.dim())?;
    let mut buckets = Vec::with_capacity(nlist);
    for _ in 0..nlist {
        buckets.push(read_ids(&mut r)?);
    }
    let rotated = read_dataset_from(&mut r)?;
    if rotated.dim() != rotor.dim() {
        return Err(SerialError::Invalid("rotated matrix dimension"));
    }
    let norms = read_f32s(&mut r, rotated.len())?;
    let quant = read_quant_from(&mut r, rotated.len())?;
    Ok(IvfIndex::from_parts(
        rotor, centroids, buckets, rotated, norms, quant,
    ))
}

/// Saves an HNSW index (rotor embedded, full layered adjacency).
pub fn save_hnsw(path: impl AsRef<Path>, idx: &HnswIndex) -> Result<(), SerialError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, MAGIC_HNSW)?;
    write_rotor_into(&mut w, idx.rotor())?;
    w.write_i32::<LittleEndian>(idx.m() as i32)?;
    w.write_i32::<LittleEndian>(idx.ef_construction() as i32)?;
    w.write_u32::<LittleEndian>(idx.entry())?;
    w.write_i32::<LittleEndian>(idx.max_level() as i32)?;
    w.write_i64::<LittleEndian>(idx.len() as i64)?;
    w.write_all(idx.levels())?;
    for layers in idx.adjacency() {
        for nbs in layers {
            write_ids(&mut w, nbs)?;
        }
    }
    write_dataset_into(&mut w, idx.rotated())?;
    write_f32s(&mut w, idx.norms())?;
    w.flush()?;
    Ok(())
}

pub fn load_hnsw(path: impl AsRef<Path>) -> Result<HnswIndex, SerialError> {
    let mut r = BufReader::new(File::open(path)?);
    read_magic(&mut r, MAGIC_HNSW)?;
    let rotor = read_rotor_from(&mut r)?;
    let m = read_len(&mut r, "M")?;
    let ef_construction = read_len(&mut r, "ef_construction")?;
    let entry = r.read_u32::<LittleEndian>()?;
    let max_level = read_len(&mut r, "max level")?;
    let n = r.read_i64::<LittleEndian>()?;
    if n <= 0 {
        return Err(SerialError::Invalid("node count"));
    }
    let n = n as usize;
    let mut levels = vec![0u8; n];
    r.read_exact(&mut levels)?;
    let mut adjacency = Vec::with_capacity(n);
    for &l in &levels {
        let mut layers = Vec::with_capacity(l as usize + 1);
        for _ in 0..=l {
            layers.push(read_ids(&mut r)?);
        }
        adjacency.push(layers);
    }
    let rotated = read_dataset_from(&mut r)?;
    if rotated.dim() != rotor.dim() || rotated.len() != n {
        return Err(SerialError::Invalid("rotated matrix shape"));
    }
    let norms = read_f32s(&mut r, n)?;
    Ok(HnswIndex::from_parts(
        rotor,
        m,
        ef_construction,
        entry,
        max_level,
        levels,
        adjacency,
        rotated,
        norms,
    ))
}

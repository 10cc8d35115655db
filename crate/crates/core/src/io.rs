// SPDX-License-Identifier: Apache-2.0

//! File formats: a little-endian binary container and CSV matrices.
//!
//! Container layout (all integers little-endian):
//!
//! | offset | size        | field                                   |
//! |--------|-------------|-----------------------------------------|
//! | 0      | 4           | magic `LDLA`                            |
//! | 4      | 2           | format version (currently 1)            |
//! | 6      | 1           | payload kind ([`ContainerKind`])        |
//! | 7      | 1           | element type ([`DType`])                |
//! | 8      | 4           | number of dimensions `d`                |
//! | 12     | 8·d         | dimensions (u64 each)                   |
//! | …      | 4           | metadata length `l`                     |
//! | …      | l           | metadata, UTF-8 JSON (may be empty)     |
//! | …      | 8           | payload length `p` in bytes             |
//! | …      | p           | raw payload                             |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde_json::{json, Value};

use crate::codebook::{Codebook, EncodedMatrix};
use crate::error::{Result, VqError};
use crate::lut::{LutStorage, PsumTable};
use crate::matrix::Matrix;

pub const MAGIC: [u8; 4] = *b"LDLA";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ContainerKind {
    Matrix = 1,
    Codebook = 2,
    PsumTable = 3,
    Encoded = 4,
    Checkpoint = 5,
}

impl TryFrom<u8> for ContainerKind {
    type Error = VqError;

    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            1 => ContainerKind::Matrix,
            2 => ContainerKind::Codebook,
            3 => ContainerKind::PsumTable,
            4 => ContainerKind::Encoded,
            5 => ContainerKind::Checkpoint,
            other => return Err(format_err(format!("unknown container kind {other}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Bytes = 0,
    F64 = 1,
    F32 = 2,
    I8 = 3,
    U32 = 4,
}

impl TryFrom<u8> for DType {
    type Error = VqError;

    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            0 => DType::Bytes,
            1 => DType::F64,
            2 => DType::F32,
            3 => DType::I8,
            4 => DType::U32,
            other => return Err(format_err(format!("unknown element type {other}"))),
        })
    }
}

fn format_err(msg: impl Into<String>) -> VqError {
    VqError::Format(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: ContainerKind,
    pub dtype: DType,
    pub dims: Vec<u64>,
    pub meta: Value,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_u16::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u8(self.kind as u8)?;
        w.write_u8(self.dtype as u8)?;
        w.write_u32::<LittleEndian>(self.dims.len() as u32)?;
        for d in &self.dims {
            w.write_u64::<LittleEndian>(*d)?;
        }
        let meta = if self.meta.is_null() { Vec::new() } else { serde_json::to_vec(&self.meta).map_err(|e| format_err(e.to_string()))? };
        w.write_u32::<LittleEndian>(meta.len() as u32)?;
        w.write_all(&meta)?;
        w.write_u64::<LittleEndian>(self.payload.len() as u64)?;
        w.write_all(&self.payload)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(format_err("bad magic bytes"));
        }
        let version = r.read_u16::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(format_err(format!("unsupported container version {version}")));
        }
        let kind = ContainerKind::try_from(r.read_u8()?)?;
        let dtype = DType::try_from(r.read_u8()?)?;
        let ndims = r.read_u32::<LittleEndian>()? as usize;
        if ndims > 16 {
            return Err(format_err(format!("implausible dimension count {ndims}")));
        }
        let dims = (0..ndims).map(|_| r.read_u64::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
        let meta_len = r.read_u32::<LittleEndian>()? as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta = if meta.is_empty() { Value::Null } else { serde_json::from_slice(&meta).map_err(|e| format_err(e.to_string()))? };
        let payload_len = r.read_u64::<LittleEndian>()? as usize;
        let mut payload = Vec::new();
        r.take(payload_len as u64).read_to_end(&mut payload)?;
        if payload.len() != payload_len {
            return Err(format_err("truncated payload"));
        }
        Ok(Self { kind, dtype, dims, meta, payload })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    fn expect(&self, kind: ContainerKind, dtype: DType, ndims: usize) -> Result<()> {
        if self.kind != kind || self.dtype != dtype || self.dims.len() != ndims {
            return Err(format_err(format!(
                "expected {kind:?}/{dtype:?} with {ndims} dims, found {:?}/{:?} with {}",
                self.kind,
                self.dtype,
                self.dims.len()
            )));
        }
        Ok(())
    }

    fn dim(&self, i: usize) -> usize {
        self.dims[i] as usize
    }
}

pub fn f64_bytes(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn f64_from_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(format_err("f64 payload length not a multiple of 8"));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl From<&Matrix> for Container {
    fn from(m: &Matrix) -> Self {
        Container {
            kind: ContainerKind::Matrix,
            dtype: DType::F64,
            dims: vec![m.rows() as u64, m.cols() as u64],
            meta: Value::Null,
            payload: f64_bytes(m.as_slice()),
        }
    }
}

impl TryFrom<&Container> for Matrix {
    type Error = VqError;

    fn try_from(c: &Container) -> Result<Self> {
        c.expect(ContainerKind::Matrix, DType::F64, 2)?;
        Matrix::from_vec(c.dim(0), c.dim(1), f64_from_bytes(&c.payload)?)
    }
}

impl From<&Codebook> for Container {
    fn from(cb: &Codebook) -> Self {
        let flat: Vec<f64> = cb.blocks().iter().flat_map(|z| z.as_slice().iter().copied()).collect();
        Container {
            kind: ContainerKind::Codebook,
            dtype: DType::F64,
            dims: vec![cb.subspaces() as u64, cb.c() as u64, cb.v() as u64],
            meta: json!({ "k": cb.k() }),
            payload: f64_bytes(&flat),
        }
    }
}

impl TryFrom<&Container> for Codebook {
    type Error = VqError;

    fn try_from(c: &Container) -> Result<Self> {
        c.expect(ContainerKind::Codebook, DType::F64, 3)?;
        let (n_c, cc, v) = (c.dim(0), c.dim(1), c.dim(2));
        let k = c.meta.get("k").and_then(Value::as_u64).ok_or_else(|| format_err("codebook metadata lacks `k`"))? as usize;
        let flat = f64_from_bytes(&c.payload)?;
        if flat.len() != n_c * cc * v {
            return Err(format_err("codebook payload size mismatch"));
        }
        let blocks = flat
            .chunks_exact((cc * v).max(1))
            .map(|chunk| Matrix::from_vec(cc, v, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Codebook::new(k, v, blocks)
    }
}

impl From<&EncodedMatrix> for Container {
    fn from(e: &EncodedMatrix) -> Self {
        let payload = e.as_slice().iter().flat_map(|i| i.to_le_bytes()).collect();
        Container {
            kind: ContainerKind::Encoded,
            dtype: DType::U32,
            dims: vec![e.rows() as u64, e.subspaces() as u64],
            meta: Value::Null,
            payload,
        }
    }
}

impl TryFrom<&Container> for EncodedMatrix {
    type Error = VqError;

    fn try_from(c: &Container) -> Result<Self> {
        c.expect(ContainerKind::Encoded, DType::U32, 2)?;
        if !c.payload.len().is_multiple_of(4) {
            return Err(format_err("index payload length not a multiple of 4"));
        }
        let idx = c.payload.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect();
        EncodedMatrix::new(c.dim(0), c.dim(1), idx)
    }
}

/// FP32 tables store raw f32 entries. INT8 tables store the i8 entries
/// followed by one f64 scale per (subspace, scale tile).
impl From<&PsumTable> for Container {
    fn from(t: &PsumTable) -> Self {
        let (dtype, payload) = match t.storage() {
            LutStorage::Fp32(v) => (DType::F32, v.iter().flat_map(|x| x.to_le_bytes()).collect()),
            LutStorage::Int8 { values, scales } => {
                let mut p: Vec<u8> = values.iter().map(|q| *q as u8).collect();
                p.extend(f64_bytes(scales));
                (DType::I8, p)
            }
        };
        Container {
            kind: ContainerKind::PsumTable,
            dtype,
            dims: vec![t.subspaces() as u64, t.centroids() as u64, t.cols() as u64],
            meta: json!({ "scale_tile": t.scale_tile() }),
            payload,
        }
    }
}

impl TryFrom<&Container> for PsumTable {
    type Error = VqError;

    fn try_from(c: &Container) -> Result<Self> {
        if c.kind != ContainerKind::PsumTable || c.dims.len() != 3 {
            return Err(format_err("not a PSum table container"));
        }
        let (n_c, cc, n) = (c.dim(0), c.dim(1), c.dim(2));
        let tile = c.meta.get("scale_tile").and_then(Value::as_u64).ok_or_else(|| format_err("missing scale_tile"))? as usize;
        let len = n_c * cc * n;
        let storage = match c.dtype {
            DType::F32 => {
                if c.payload.len() != len * 4 {
                    return Err(format_err("table payload size mismatch"));
                }
                LutStorage::Fp32(c.payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
            }
            DType::I8 => {
                if c.payload.len() < len {
                    return Err(format_err("table payload truncated"));
                }
                let values = c.payload[..len].iter().map(|b| *b as i8).collect();
                LutStorage::Int8 { values, scales: f64_from_bytes(&c.payload[len..])? }
            }
            other => return Err(format_err(format!("unsupported table element type {other:?}"))),
        };
        PsumTable::from_parts(n_c, cc, n, tile, storage)
    }
}

/// Reads a headerless numeric CSV; lines starting with `#` are skipped.
pub fn read_csv_matrix(r: impl Read) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| format_err(format!("line {}: `{f}`: {e}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

pub fn write_csv_matrix(m: &Matrix, w: impl Write) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in 0..m.rows() {
        writer.write_record(m.row(r).iter().map(|x| format!("{x:?}"))).map_err(|e| format_err(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a matrix from `.csv` or from the binary container (any other extension).
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv_matrix(BufReader::new(File::open(path)?))
    } else {
        Matrix::try_from(&Container::load(path)?)
    }
}

pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv_matrix(m, BufWriter::new(File::create(path)?))
    } else {
        Container::from(m).save(path)
    }
}

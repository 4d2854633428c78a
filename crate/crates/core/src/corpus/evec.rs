//! EVEC: the binary embedding-matrix format.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes   | content                      |
//! |---------|------------------------------|
//! | 0..4    | magic `b"EVEC"`              |
//! | 4..8    | `u32` version, currently 1   |
//! | 8..12   | `u32` row count              |
//! | 12..16  | `u32` column count           |
//! | 16..    | `rows * cols` `f32`, row-major |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EVEC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Row-major matrix of finite `f32` embedding coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::InvalidInput(format!(
                "matrix data has {} values, expected {rows}x{dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i / dim.max(1),
                col: i % dim.max(1),
            });
        }
        Ok(Self { rows, dim, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f32]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            crate::error::check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

pub fn encode_matrix(matrix: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(matrix.rows)
        .map_err(|_| Error::InvalidInput("row count exceeds u32".into()))?;
    let cols = u32::try_from(matrix.dim)
        .map_err(|_| Error::InvalidInput("column count exceeds u32".into()))?;
    if let Some(i) = matrix.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i / matrix.dim.max(1),
            col: i % matrix.dim.max(1),
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.data.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in &matrix.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = word(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = HEADER_LEN as u64 + rows as u64 * cols as u64 * 4;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes(found - expected));
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(rows, cols, data)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

pub fn write_matrix(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_matrix(matrix)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

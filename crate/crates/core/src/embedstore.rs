//! EMBD: id-addressed dense f32 matrices.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EMBD"
//! 4       4     u32 version = 1
//! 8       1     u8 dtype = 1 (f32 LE)
//! 9       1     u8 normalized flag (0 or 1)
//! 10      2     u16 reserved = 0
//! 12      8     u64 row count n
//! 20      4     u32 dim d
//! 24      ...   n id records: u16 byte length + UTF-8 bytes
//! ...     4nd   n*d f32 values, row-major
//! end-8   8     u64 checksum: wrapping sum of every byte between the
//!               24-byte header and the checksum (id records and values)
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EMBD";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 1;
const HEADER_LEN: usize = 24;
const TRAILER_LEN: usize = 8;

/// Row norms must be within this of 1 for a matrix flagged normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;
/// Rows with a smaller norm cannot be normalized.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EmbdError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u8),
    #[error("invalid normalized flag {0}")]
    BadFlag(u8),
    #[error("reserved header field is {0}, expected 0")]
    ReservedNonZero(u16),
    #[error("truncated payload: need {expected} bytes, file has {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(u64),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("non-finite value in row {id:?}, column {column}")]
    NonFinite { id: String, column: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("id record {index} is not valid UTF-8")]
    InvalidUtf8Id { index: usize },
    #[error("id {0:?} exceeds 65535 bytes")]
    IdTooLong(String),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("data length {data} does not match {rows} rows of dim {dim}")]
    ShapeMismatch { rows: usize, dim: usize, data: usize },
    #[error("row {id:?} has zero norm")]
    ZeroNorm { id: String },
    #[error("row {id:?} is flagged normalized but has norm {norm}")]
    NotUnitNorm { id: String, norm: f64 },
}

/// Row-major f32 matrix with one unique id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    /// Validates shape, id uniqueness, finiteness and (if flagged) unit norms.
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>, normalized: bool) -> Result<Self, EmbdError> {
        if dim == 0 {
            return Err(EmbdError::ZeroDim);
        }
        if data.len() != ids.len() * dim {
            return Err(EmbdError::ShapeMismatch {
                rows: ids.len(),
                dim,
                data: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.len() > u16::MAX as usize {
                return Err(EmbdError::IdTooLong(id.clone()));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(EmbdError::DuplicateId(id.clone()));
            }
        }
        let m = Self {
            ids,
            dim,
            data,
            normalized,
            index,
        };
        for (i, row) in m.rows().enumerate() {
            if let Some(column) = row.iter().position(|v| !v.is_finite()) {
                return Err(EmbdError::NonFinite {
                    id: m.ids[i].clone(),
                    column,
                });
            }
            if normalized {
                let norm = l2_norm(row);
                if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                    return Err(EmbdError::NotUnitNorm {
                        id: m.ids[i].clone(),
                        norm,
                    });
                }
            }
        }
        Ok(m)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    /// Sub-matrix with rows in the order of `ids`. Missing ids are returned
    /// as the error value.
    pub fn select<'a, I>(&self, ids: I) -> Result<EmbeddingMatrix, Vec<String>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out_ids = Vec::new();
        let mut data = Vec::new();
        let mut missing = Vec::new();
        for id in ids {
            match self.row_by_id(id) {
                Some(row) => {
                    out_ids.push(id.to_string());
                    data.extend_from_slice(row);
                }
                None => missing.push(id.to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(missing);
        }
        let index = out_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(EmbeddingMatrix {
            ids: out_ids,
            dim: self.dim,
            data,
            normalized: self.normalized,
            index,
        })
    }

    /// Serialized EMBD bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let ids_len: usize = self.ids.iter().map(|id| 2 + id.len()).sum();
        let mut buf = Vec::with_capacity(HEADER_LEN + ids_len + 4 * self.data.len() + TRAILER_LEN);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(DTYPE_F32);
        buf.push(u8::from(self.normalized));
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for id in &self.ids {
            buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let checksum = byte_sum(&buf[HEADER_LEN..]);
        buf.extend_from_slice(&checksum.to_le_bytes());
        buf
    }

    /// Parses EMBD bytes, validating every header field and the checksum.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbdError> {
        let actual = bytes.len() as u64;
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && &bytes[..4] != MAGIC {
                return Err(EmbdError::BadMagic(bytes[..4].try_into().expect("4 bytes")));
            }
            return Err(EmbdError::TruncatedPayload {
                expected: (HEADER_LEN + TRAILER_LEN) as u64,
                actual,
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
        if &magic != MAGIC {
            return Err(EmbdError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(EmbdError::UnsupportedVersion(version));
        }
        if bytes[8] != DTYPE_F32 {
            return Err(EmbdError::UnsupportedDtype(bytes[8]));
        }
        let normalized = match bytes[9] {
            0 => false,
            1 => true,
            other => return Err(EmbdError::BadFlag(other)),
        };
        let reserved = u16::from_le_bytes(bytes[10..12].try_into().expect("2 bytes"));
        if reserved != 0 {
            return Err(EmbdError::ReservedNonZero(reserved));
        }
        let n = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let dim = u32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes")) as usize;
        if dim == 0 {
            return Err(EmbdError::ZeroDim);
        }

        // Minimum possible size given n; catches absurd counts before allocating.
        let min_size = (HEADER_LEN as u64)
            .saturating_add(n.saturating_mul(2 + 4 * dim as u64))
            .saturating_add(TRAILER_LEN as u64);
        if actual < min_size {
            return Err(EmbdError::TruncatedPayload {
                expected: min_size,
                actual,
            });
        }
        let n = n as usize;
        let mut pos = HEADER_LEN;
        let mut ids = Vec::with_capacity(n);
        for index in 0..n {
            let truncated = |need: usize| EmbdError::TruncatedPayload {
                expected: need as u64,
                actual,
            };
            if pos + 2 > bytes.len() {
                return Err(truncated(pos + 2));
            }
            let len = u16::from_le_bytes([bytes[pos], bytes[pos + 1]]) as usize;
            pos += 2;
            if pos + len > bytes.len() {
                return Err(truncated(pos + len));
            }
            let id = std::str::from_utf8(&bytes[pos..pos + len]).map_err(|_| EmbdError::InvalidUtf8Id { index })?;
            ids.push(id.to_string());
            pos += len;
        }
        let values_end = pos + 4 * n * dim;
        let expected = values_end + TRAILER_LEN;
        if bytes.len() < expected {
            return Err(EmbdError::TruncatedPayload {
                expected: expected as u64,
                actual,
            });
        }
        if bytes.len() > expected {
            return Err(EmbdError::TrailingBytes((bytes.len() - expected) as u64));
        }
        let stored = u64::from_le_bytes(bytes[values_end..expected].try_into().expect("8 bytes"));
        let computed = byte_sum(&bytes[HEADER_LEN..values_end]);
        if stored != computed {
            return Err(EmbdError::ChecksumMismatch { stored, computed });
        }
        let data: Vec<f32> = bytes[pos..values_end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        EmbeddingMatrix::new(ids, dim, data, normalized)
    }

    /// Scales every row to unit L2 norm.
    pub fn l2_normalize(&self) -> Result<EmbeddingMatrix, EmbdError> {
        let mut data = self.data.clone();
        for (i, row) in data.chunks_exact_mut(self.dim).enumerate() {
            let norm = l2_norm(row);
            if norm < MIN_NORM {
                return Err(EmbdError::ZeroNorm {
                    id: self.ids[i].clone(),
                });
            }
            for v in row.iter_mut() {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
        Ok(EmbeddingMatrix {
            ids: self.ids.clone(),
            dim: self.dim,
            data,
            normalized: true,
            index: self.index.clone(),
        })
    }
}

/// Euclidean norm accumulated in f64.
pub fn l2_norm(row: &[f32]) -> f64 {
    row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
}

fn byte_sum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| acc.wrapping_add(u64::from(b)))
}

pub fn write_embeddings(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<(), EmbdError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&matrix.to_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, EmbdError> {
    EmbeddingMatrix::from_bytes(&std::fs::read(path)?)
}

pub fn l2_normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix, EmbdError> {
    matrix.l2_normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m23() -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            vec!["a".into(), "b".into()],
            3,
            vec![1.0, -2.5, 0.0, 3.25, 1e-30, -0.0],
            false,
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_and_layout() {
        let m = m23();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"EMBD");
        assert_eq!(bytes.len(), 24 + 2 * 3 + 6 * 4 + 8);
        let back = EmbeddingMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn empty_matrix_roundtrips() {
        let m = EmbeddingMatrix::new(vec![], 4, vec![], false).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 32);
        assert_eq!(EmbeddingMatrix::from_bytes(&bytes).unwrap().len(), 0);
    }

    #[test]
    fn duplicate_id_refused() {
        let e = EmbeddingMatrix::new(vec!["a".into(), "a".into()], 1, vec![1.0, 2.0], false).unwrap_err();
        assert!(matches!(e, EmbdError::DuplicateId(_)));
    }

    #[test]
    fn non_finite_refused() {
        let e = EmbeddingMatrix::new(vec!["a".into()], 2, vec![1.0, f32::NAN], false).unwrap_err();
        assert!(matches!(e, EmbdError::NonFinite { column: 1, .. }));
    }

    #[test]
    fn corrupted_headers_have_distinct_errors() {
        let good = m23().to_bytes();
        let mut b = good.clone();
        b[0] ^= 0xff;
        assert!(matches!(EmbeddingMatrix::from_bytes(&b), Err(EmbdError::BadMagic(_))));
        let mut b = good.clone();
        b[4] = 2;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::UnsupportedVersion(2))
        ));
        let mut b = good.clone();
        b[8] = 7;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::UnsupportedDtype(7))
        ));
        let mut b = good.clone();
        b[10] = 1;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::ReservedNonZero(1))
        ));
        let mut b = good.clone();
        b[12] = 3;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::TruncatedPayload { .. })
        ));
        let mut b = good.clone();
        b.truncate(b.len() - 1);
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::TruncatedPayload { .. })
        ));
        let mut b = good.clone();
        b.push(0);
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::TrailingBytes(1))
        ));
        let mut b = good.clone();
        b[30] ^= 0x01;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&b),
            Err(EmbdError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn normalize_basic() {
        let m = EmbeddingMatrix::new(vec!["x".into()], 2, vec![3.0, 4.0], false).unwrap();
        let n = m.l2_normalize().unwrap();
        assert!(n.is_normalized());
        assert!((n.row(0)[0] - 0.6).abs() < 1e-7);
        assert!((n.row(0)[1] - 0.8).abs() < 1e-7);
        let z = EmbeddingMatrix::new(vec!["z".into()], 2, vec![0.0, 0.0], false).unwrap();
        assert!(matches!(z.l2_normalize(), Err(EmbdError::ZeroNorm { id }) if id == "z"));
    }

    #[test]
    fn select_reorders_and_reports_missing() {
        let m = m23();
        let s = m.select(["b", "a"]).unwrap();
        assert_eq!(s.ids(), &["b".to_string(), "a".to_string()]);
        assert_eq!(s.row(0), m.row(1));
        assert_eq!(m.select(["a", "q"]).unwrap_err(), vec!["q".to_string()]);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(rows in prop::collection::vec(prop::collection::vec(-100.0f32..100.0, 5), 1..20)) {
            let n = rows.len();
            let data: Vec<f32> = rows.into_iter().flatten().collect();
            prop_assume!(data.chunks(5).all(|r| l2_norm(r) > 1e-3));
            let ids = (0..n).map(|i| i.to_string()).collect();
            let m = EmbeddingMatrix::new(ids, 5, data, false).unwrap();
            let once = m.l2_normalize().unwrap();
            let twice = once.l2_normalize().unwrap();
            for row in once.rows() {
                prop_assert!((l2_norm(row) - 1.0).abs() < 1e-5);
            }
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn documented_file_bytes() {
        let hex = "454d42440100000001010000020000000000000002000000010061020062630000803f\
                   0000000000000000000080bf2703000000000000";
        let want: Vec<u8> = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap())
            .collect();
        let m = EmbeddingMatrix::new(vec!["a".into(), "bc".into()], 2, vec![1.0, 0.0, 0.0, -1.0], true).unwrap();
        assert_eq!(m.to_bytes(), want);
        assert_eq!(EmbeddingMatrix::from_bytes(&want).unwrap(), m);
    }
}

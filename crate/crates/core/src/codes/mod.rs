//! Quasi-cyclic LDPC codes for reconciliation.
//!
//! A [`QcCode`] couples a sparse parity-check matrix with a systematic encoder.
//! Codes are exchanged as alist files ([`alist`]), lifted from base matrices
//! ([`qc`]), decoded with belief propagation ([`decoder`]) and rate-adapted by
//! puncturing ([`puncture`]). Reconciled frames are confirmed with a CRC-32 tag
//! ([`crc`]).
//!
//! Bits are stored one per `u8` with values `0` or `1`.

pub mod alist;
pub mod bundled;
pub mod crc;
pub mod decoder;
pub mod encoder;
pub mod puncture;
pub mod qc;

use std::path::Path;

use thiserror::Error;

pub use bundled::Bundled;
pub use crc::{crc_tag, crc_verify, CrcTag};
pub use decoder::{decode, DecodeOutcome, Decoder, DecoderKind};
pub use encoder::Encoder;
pub use puncture::{make_puncture_plan, puncture_count, PunctureMode, PunctureSource, PuncturePlan, SetPattern};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parity-check matrix has full column rank; no information bits")]
    NoInformationBits,
    #[error("circulant size {z} does not divide the matrix dimensions {rows}x{cols}")]
    BadCirculant { z: usize, rows: usize, cols: usize },
    #[error("expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite LLR at position {0}")]
    NonFiniteLlr(usize),
    #[error("maximum iteration count must be at least 1")]
    ZeroIterations,
    #[error("target rate {target} outside [{base}, 1)")]
    UnreachableRate { base: f64, target: f64 },
    #[error("set pattern has length {got}, code length is {expected}")]
    PatternLength { expected: usize, got: usize },
    #[error("invalid base matrix: {0}")]
    BaseMatrix(String),
}

/// Sparse binary matrix stored by rows and by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrix {
    rows: usize,
    cols: usize,
    row_adj: Vec<Vec<u32>>,
    col_adj: Vec<Vec<u32>>,
}

impl ParityMatrix {
    /// Builds the matrix from its row lists. Column indices are sorted and
    /// must be distinct within a row.
    pub fn from_rows(cols: usize, mut row_adj: Vec<Vec<u32>>) -> Self {
        let rows = row_adj.len();
        let mut col_adj = vec![Vec::new(); cols];
        for (r, row) in row_adj.iter_mut().enumerate() {
            row.sort_unstable();
            assert!(row.windows(2).all(|w| w[0] != w[1]), "row {r} has a repeated column");
            for &c in row.iter() {
                assert!((c as usize) < cols, "column {c} out of range");
                col_adj[c as usize].push(r as u32);
            }
        }
        ParityMatrix { rows, cols, row_adj, col_adj }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_adj[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.col_adj[c]
    }

    pub fn num_edges(&self) -> usize {
        self.row_adj.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row_adj[r].binary_search(&(c as u32)).is_ok()
    }

    /// True when every check is satisfied by `bits`.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        assert_eq!(bits.len(), self.cols);
        self.row_adj
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c as usize]) == 0)
    }

    /// Largest `z` such that the matrix is made of `z×z` circulant blocks.
    pub fn detect_circulant_size(&self) -> usize {
        let g = gcd(self.rows, self.cols);
        let mut candidates: Vec<usize> = (1..=g).filter(|z| g.is_multiple_of(*z)).collect();
        candidates.reverse();
        candidates.into_iter().find(|&z| self.is_quasi_cyclic(z)).unwrap_or(1)
    }

    fn is_quasi_cyclic(&self, z: usize) -> bool {
        if z == 1 {
            return true;
        }
        self.row_adj.iter().enumerate().all(|(r, row)| {
            let rs = (r / z) * z + (r % z + 1) % z;
            row.iter().all(|&c| {
                let c = c as usize;
                let cs = (c / z) * z + (c % z + 1) % z;
                self.contains(rs, cs)
            })
        })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A quasi-cyclic LDPC code with its systematic encoder.
#[derive(Debug, Clone)]
pub struct QcCode {
    h: ParityMatrix,
    circulant: usize,
    encoder: Encoder,
}

impl QcCode {
    /// Builds a code from its parity-check matrix.
    ///
    /// `circulant` is detected from the matrix structure when `None`.
    /// Fails when the matrix leaves no information bits.
    pub fn from_parity(h: ParityMatrix, circulant: Option<usize>) -> Result<Self, CodeError> {
        let circulant = match circulant {
            Some(z) => {
                if z == 0 || !h.rows().is_multiple_of(z) || !h.cols().is_multiple_of(z) {
                    return Err(CodeError::BadCirculant { z, rows: h.rows(), cols: h.cols() });
                }
                z
            }
            None => h.detect_circulant_size(),
        };
        let encoder = Encoder::new(&h)?;
        Ok(QcCode { h, circulant, encoder })
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self, CodeError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_parity(alist::parse(&text)?, None)
    }

    pub fn save_alist(&self, path: impl AsRef<Path>) -> Result<(), CodeError> {
        std::fs::write(path, alist::write(&self.h))?;
        Ok(())
    }

    /// Codeword length `N`.
    pub fn n(&self) -> usize {
        self.h.cols()
    }

    /// Information length `K`.
    pub fn k(&self) -> usize {
        self.encoder.info_positions().len()
    }

    /// Number of parity checks (rows of `H`).
    pub fn m(&self) -> usize {
        self.h.rows()
    }

    /// `K/N`.
    pub fn base_rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn circulant_size(&self) -> usize {
        self.circulant
    }

    pub fn parity(&self) -> &ParityMatrix {
        &self.h
    }

    /// Codeword positions carrying the information bits, ascending.
    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, CodeError> {
        self.encoder.encode(&self.h, info)
    }

    /// Reads the information bits out of a codeword.
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions().iter().map(|&p| codeword[p]).collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.h.is_codeword(bits)
    }

    /// Stable 64-bit fingerprint of the parity-check matrix (FNV-1a over the
    /// dimensions and row lists). Used to check that two parties hold the
    /// same code.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        feed(self.h.rows() as u64);
        feed(self.h.cols() as u64);
        for r in 0..self.h.rows() {
            feed(u64::MAX);
            for &c in self.h.row(r) {
                feed(c as u64);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ParityMatrix {
        // Hamming(7,4)
        ParityMatrix::from_rows(7, vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 1, 3, 6]])
    }

    #[test]
    fn column_lists_follow_rows() {
        let h = small();
        assert_eq!(h.col(1), &[0, 1, 2]);
        assert_eq!(h.num_edges(), 12);
        assert!(h.contains(2, 6));
        assert!(!h.contains(2, 5));
    }

    #[test]
    fn circulant_detection() {
        // two 2x2 circulant blocks: I and shift-1
        let h = ParityMatrix::from_rows(4, vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(h.detect_circulant_size(), 2);
        assert_eq!(small().detect_circulant_size(), 1);
    }

    #[test]
    fn code_dimensions() {
        let code = QcCode::from_parity(small(), None).unwrap();
        assert_eq!((code.n(), code.k(), code.m()), (7, 4, 3));
        assert!((code.base_rate() - 4.0 / 7.0).abs() < 1e-15);
        assert!(matches!(
            QcCode::from_parity(small(), Some(2)),
            Err(CodeError::BadCirculant { .. })
        ));
    }
}

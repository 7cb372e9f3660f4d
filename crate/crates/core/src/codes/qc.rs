//! Quasi-cyclic expansion of base matrices.
//!
//! A base matrix entry `s ≥ 0` becomes the `Z×Z` identity cyclically shifted
//! by `s` (row `r` of the block has its one in column `(r + s) mod Z`); `−1`
//! becomes the zero block.

use rand::Rng;

use super::{CodeError, ParityMatrix};

/// Base matrix of circulant shifts; `None` marks a zero block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    shifts: Vec<Option<u32>>,
}

impl BaseMatrix {
    pub fn new(rows: usize, cols: usize, shifts: Vec<Option<u32>>) -> Result<Self, CodeError> {
        if rows == 0 || cols == 0 || shifts.len() != rows * cols {
            return Err(CodeError::BaseMatrix(format!(
                "{} entries for a {rows}x{cols} base matrix",
                shifts.len()
            )));
        }
        Ok(BaseMatrix { rows, cols, shifts })
    }

    /// Parses whitespace-separated rows of shifts, `-1` for zero blocks.
    pub fn parse(text: &str) -> Result<Self, CodeError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| match tok.parse::<i64>() {
                    Ok(-1) => Ok(None),
                    Ok(v) if v >= 0 && v <= u32::MAX as i64 => Ok(Some(v as u32)),
                    _ => Err(CodeError::BaseMatrix(format!("line {}: bad entry {tok:?}", i + 1))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CodeError::BaseMatrix("rows have different lengths".into()));
        }
        let n_rows = rows.len();
        Self::new(n_rows, cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Option<u32> {
        self.shifts[r * self.cols + c]
    }

    /// Expands to a `rows·Z × cols·Z` parity-check matrix.
    pub fn lift(&self, z: usize) -> Result<ParityMatrix, CodeError> {
        if z == 0 {
            return Err(CodeError::BaseMatrix("circulant size must be positive".into()));
        }
        if let Some(s) = self.shifts.iter().flatten().find(|&&s| s as usize >= z) {
            return Err(CodeError::BaseMatrix(format!("shift {s} not below circulant size {z}")));
        }
        let mut row_adj = Vec::with_capacity(self.rows * z);
        for br in 0..self.rows {
            for r in 0..z {
                let row = (0..self.cols)
                    .filter_map(|bc| self.get(br, bc).map(|s| (bc * z + (r + s as usize) % z) as u32))
                    .collect();
                row_adj.push(row);
            }
        }
        Ok(ParityMatrix::from_rows(self.cols * z, row_adj))
    }
}

/// Assigns circulant shifts to the ones of `mask` (row-major, `rows×cols`).
///
/// Entries are filled in order; each receives the candidate shift that closes
/// the fewest length-4 cycles, then the fewest length-6 cycles, among
/// `candidates` random draws. Entries listed in `fixed` keep their shift.
pub fn choose_shifts<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    mask: &[bool],
    fixed: &[(usize, usize, u32)],
    z: usize,
    candidates: usize,
    rng: &mut R,
) -> Result<BaseMatrix, CodeError> {
    if mask.len() != rows * cols {
        return Err(CodeError::BaseMatrix("mask size does not match dimensions".into()));
    }
    let mut shifts: Vec<Option<u32>> = vec![None; rows * cols];
    for &(r, c, s) in fixed {
        if !mask[r * cols + c] || s as usize >= z {
            return Err(CodeError::BaseMatrix(format!("fixed entry ({r},{c}) invalid")));
        }
        shifts[r * cols + c] = Some(s);
    }
    for r in 0..rows {
        for c in 0..cols {
            if !mask[r * cols + c] || shifts[r * cols + c].is_some() {
                continue;
            }
            let mut best: Option<((usize, usize), u32)> = None;
            for _ in 0..candidates.max(1) {
                let s = rng.random_range(0..z as u32);
                shifts[r * cols + c] = Some(s);
                let score = cycles_through(&shifts, rows, cols, r, c, z);
                if best.is_none_or(|(b, _)| score < b) {
                    best = Some((score, s));
                }
                if score == (0, 0) {
                    break;
                }
            }
            shifts[r * cols + c] = best.map(|(_, s)| s);
        }
    }
    BaseMatrix::new(rows, cols, shifts)
}

/// Number of (length-4, length-6) lifted cycle classes through entry `(r, c)`.
fn cycles_through(shifts: &[Option<u32>], rows: usize, cols: usize, r: usize, c: usize, z: usize) -> (usize, usize) {
    let at = |i: usize, j: usize| shifts[i * cols + j].map(|s| s as i64);
    let z = z as i64;
    let s0 = at(r, c).expect("entry assigned");
    let mut c4 = 0;
    let mut c6 = 0;
    for c2 in (0..cols).filter(|&j| j != c) {
        let Some(s1) = at(r, c2) else { continue };
        for r2 in (0..rows).filter(|&i| i != r) {
            let (Some(s2), Some(s3)) = (at(r2, c2), at(r2, c)) else { continue };
            // r,c -> r,c2 -> r2,c2 -> r2,c -> back
            if (s0 - s1 + s2 - s3).rem_euclid(z) == 0 {
                c4 += 1;
            }
            // six-cycles: r,c -> r,c2 -> r2,c2 -> r2,c3 -> r3,c3 -> r3,c -> back
            for c3 in (0..cols).filter(|&j| j != c && j != c2) {
                let Some(s4) = at(r2, c3) else { continue };
                for r3 in (0..rows).filter(|&i| i != r && i != r2) {
                    let (Some(s5), Some(s6)) = (at(r3, c3), at(r3, c)) else { continue };
                    if (s0 - s1 + s2 - s4 + s5 - s6).rem_euclid(z) == 0 {
                        c6 += 1;
                    }
                }
            }
        }
    }
    (c4, c6)
}

/// Number of length-4 cycles in the Tanner graph of `h` (each counted once).
pub fn count_four_cycles(h: &ParityMatrix) -> usize {
    let mut count = 0;
    let mut seen = vec![0u32; h.rows()];
    for r in 0..h.rows() {
        // rows sharing at least two columns with r, counted once per pair
        let mut touched = Vec::new();
        for &c in h.row(r) {
            for &r2 in h.col(c as usize) {
                let r2 = r2 as usize;
                if r2 > r {
                    if seen[r2] == 0 {
                        touched.push(r2);
                    }
                    seen[r2] += 1;
                }
            }
        }
        for r2 in touched {
            let k = seen[r2] as usize;
            count += k * (k - 1) / 2;
            seen[r2] = 0;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    #[test]
    fn lifting_places_shifted_identities() {
        let base = BaseMatrix::parse("0 1 -1\n-1 2 0\n").unwrap();
        let h = base.lift(3).unwrap();
        assert_eq!((h.rows(), h.cols()), (6, 9));
        assert_eq!(h.row(0), &[0, 4]);
        assert_eq!(h.row(2), &[2, 3]);
        assert_eq!(h.row(3), &[5, 6]);
        assert_eq!(h.detect_circulant_size(), 3);
        assert!(base.lift(2).is_err());
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(BaseMatrix::parse("0 1\n2\n").is_err());
        assert!(BaseMatrix::parse("0 x\n").is_err());
    }

    #[test]
    fn chosen_shifts_avoid_four_cycles() {
        let (rows, cols) = (3, 8);
        let mask = vec![true; rows * cols];
        let base = choose_shifts(rows, cols, &mask, &[], 31, 64, &mut rng_for(9, &[])).unwrap();
        let h = base.lift(31).unwrap();
        assert_eq!(count_four_cycles(&h), 0);
        // an all-zero-shift base matrix is full of them
        let flat = BaseMatrix::new(rows, cols, vec![Some(0); rows * cols]).unwrap();
        assert!(count_four_cycles(&flat.lift(31).unwrap()) > 0);
    }
}

//! Systematic encoding.
//!
//! Two strategies are tried in order:
//!
//! 1. **Peeling schedule.** Take the first `N − M` columns as information bits
//!    and the last `M` as parity. If the parity bits can be resolved one check
//!    at a time (each step finds a check with a single unknown bit), the order
//!    of those steps is recorded and encoding costs one pass over the edges.
//!    Staircase and other triangular parity parts take this path.
//! 2. **Dense elimination.** Otherwise `H` is brought to reduced row-echelon
//!    form over GF(2) with bit-packed rows, choosing pivots from the right. The
//!    non-pivot columns carry the information bits and every pivot bit is
//!    stored as a dense parity of the information bits.

use super::{CodeError, ParityMatrix};

#[derive(Debug, Clone)]
enum Strategy {
    /// `(check, resolved column)` in resolution order.
    Peel(Vec<(u32, u32)>),
    Dense {
        /// `(pivot column, packed dependence on the information bits)`.
        rows: Vec<(usize, Vec<u64>)>,
    },
}

#[derive(Debug, Clone)]
pub struct Encoder {
    info_positions: Vec<usize>,
    strategy: Strategy,
}

impl Encoder {
    pub fn new(h: &ParityMatrix) -> Result<Self, CodeError> {
        if let Some(schedule) = peel_schedule(h) {
            let k = h.cols() - h.rows();
            if k == 0 {
                return Err(CodeError::NoInformationBits);
            }
            return Ok(Encoder { info_positions: (0..k).collect(), strategy: Strategy::Peel(schedule) });
        }
        dense(h)
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn uses_peeling(&self) -> bool {
        matches!(self.strategy, Strategy::Peel(_))
    }

    pub fn encode(&self, h: &ParityMatrix, info: &[u8]) -> Result<Vec<u8>, CodeError> {
        let k = self.info_positions.len();
        if info.len() != k {
            return Err(CodeError::Length { expected: k, got: info.len() });
        }
        let mut c = vec![0u8; h.cols()];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            c[pos] = b & 1;
        }
        match &self.strategy {
            Strategy::Peel(schedule) => {
                for &(row, col) in schedule {
                    let v = h.row(row as usize).iter().filter(|&&x| x != col).fold(0u8, |a, &x| a ^ c[x as usize]);
                    c[col as usize] = v;
                }
            }
            Strategy::Dense { rows } => {
                let packed = pack(info);
                for (pivot, dep) in rows {
                    let ones: u32 = dep.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                    c[*pivot] = (ones & 1) as u8;
                }
            }
        }
        Ok(c)
    }
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

fn peel_schedule(h: &ParityMatrix) -> Option<Vec<(u32, u32)>> {
    let (m, n) = (h.rows(), h.cols());
    if m >= n {
        return None;
    }
    let k = n - m;
    let mut unknown = vec![false; n];
    for u in unknown.iter_mut().skip(k) {
        *u = true;
    }
    let mut pending: Vec<usize> = (0..m).map(|r| h.row(r).iter().filter(|&&c| unknown[c as usize]).count()).collect();
    let mut stack: Vec<usize> = (0..m).filter(|&r| pending[r] == 1).collect();
    let mut used = vec![false; m];
    let mut schedule = Vec::with_capacity(m);
    while let Some(r) = stack.pop() {
        if used[r] || pending[r] != 1 {
            continue;
        }
        let col = *h.row(r).iter().find(|&&c| unknown[c as usize])?;
        used[r] = true;
        unknown[col as usize] = false;
        schedule.push((r as u32, col));
        for &r2 in h.col(col as usize) {
            let r2 = r2 as usize;
            pending[r2] -= 1;
            if pending[r2] == 1 && !used[r2] {
                stack.push(r2);
            }
        }
    }
    if schedule.len() != m {
        return None;
    }
    // every unused check must already be satisfied by construction; with all
    // parity columns resolved there are none left
    Some(schedule)
}

fn dense(h: &ParityMatrix) -> Result<Encoder, CodeError> {
    let (m, n) = (h.rows(), h.cols());
    let words = n.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = (0..m)
        .map(|r| {
            let mut v = vec![0u64; words];
            for &c in h.row(r) {
                v[c as usize / 64] |= 1 << (c % 64);
            }
            v
        })
        .collect();

    // Gauss-Jordan, pivot columns scanned from the right.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut next_row = 0;
    for col in (0..n).rev() {
        if next_row == m {
            break;
        }
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(found) = (next_row..m).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(next_row, found);
        let pivot = rows[next_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next_row && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
    }

    let mut is_pivot = vec![false; n];
    for &(_, c) in &pivots {
        is_pivot[c] = true;
    }
    let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    if info_positions.is_empty() {
        return Err(CodeError::NoInformationBits);
    }
    let info_words = info_positions.len().div_ceil(64);
    let dense_rows = pivots
        .iter()
        .map(|&(r, pc)| {
            let mut dep = vec![0u64; info_words];
            for (j, &c) in info_positions.iter().enumerate() {
                if rows[r][c / 64] & (1 << (c % 64)) != 0 {
                    dep[j / 64] |= 1 << (j % 64);
                }
            }
            (pc, dep)
        })
        .collect();
    Ok(Encoder { info_positions, strategy: Strategy::Dense { rows: dense_rows } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_takes_peeling_path() {
        // info column 0, staircase parity on columns 1..4
        let h = ParityMatrix::from_rows(4, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2, 3]]);
        let enc = Encoder::new(&h).unwrap();
        assert!(enc.uses_peeling());
        let c = enc.encode(&h, &[1]).unwrap();
        assert!(h.is_codeword(&c));
        assert_eq!(c, vec![1, 1, 0, 1]);
    }

    #[test]
    fn dense_path_handles_redundant_rows() {
        // third row is the sum of the first two
        let h = ParityMatrix::from_rows(5, vec![vec![0, 1, 4], vec![1, 2, 3], vec![0, 2, 3, 4]]);
        let enc = Encoder::new(&h).unwrap();
        assert!(!enc.uses_peeling());
        assert_eq!(enc.info_positions().len(), 3);
        for s in 0..8u8 {
            let info = [s & 1, (s >> 1) & 1, (s >> 2) & 1];
            let c = enc.encode(&h, &info).unwrap();
            assert!(h.is_codeword(&c));
            let read: Vec<u8> = enc.info_positions().iter().map(|&p| c[p]).collect();
            assert_eq!(read, info);
        }
    }

    #[test]
    fn wrong_length_is_an_error() {
        let h = ParityMatrix::from_rows(4, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2, 3]]);
        let enc = Encoder::new(&h).unwrap();
        assert!(matches!(enc.encode(&h, &[1, 0]), Err(CodeError::Length { expected: 1, got: 2 })));
    }
}

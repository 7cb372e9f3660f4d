//! Rate adaptation by puncturing.
//!
//! Puncturing `p` of the `N` code bits raises the rate from `K/N` to
//! `K/(N − p)`. The count is the largest `p` with `K/(N − p) ≤ R_t`:
//!
//! ```text
//! p = ⌊N − K/R_t⌋
//! ```
//!
//! The receiver assigns zero LLR to every punctured position.

use rand::Rng;

use super::{CodeError, QcCode};

/// Absolute slack applied before the floor so that exactly representable
/// targets (for example `K/R_t` an integer) are not pushed one step down by
/// rounding error.
const FLOOR_SLACK: f64 = 1e-9;

/// How the punctured positions of a frame are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PunctureMode {
    /// `p` distinct positions drawn uniformly for every frame.
    Random,
    /// The first `p` entries of a pre-shared permutation.
    SetPattern,
}

/// A pre-shared permutation `v` of `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPattern(Vec<u32>);

impl SetPattern {
    pub fn new(order: Vec<u32>) -> Result<Self, CodeError> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(CodeError::PatternLength { expected: n, got: i });
            }
            seen[i] = true;
        }
        Ok(SetPattern(order))
    }

    /// A uniformly random permutation of `0..n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut v: Vec<u32> = (0..n as u32).collect();
        v.shuffle(rng);
        SetPattern(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

/// Where the positions of a new plan come from.
pub enum PunctureSource<'a, R: Rng + ?Sized> {
    Random(&'a mut R),
    Pattern(&'a SetPattern),
}

/// Punctured positions of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePlan {
    n: usize,
    mode: PunctureMode,
    positions: Vec<u32>,
    mask: Vec<bool>,
}

impl PuncturePlan {
    /// The empty plan for a length-`n` code.
    pub fn none(n: usize) -> Self {
        PuncturePlan { n, mode: PunctureMode::Random, positions: Vec::new(), mask: vec![false; n] }
    }

    /// Rebuilds a plan from explicit positions, as received over the wire.
    pub fn from_positions(n: usize, mode: PunctureMode, positions: Vec<u32>) -> Result<Self, CodeError> {
        let mut mask = vec![false; n];
        for &p in &positions {
            let p = p as usize;
            if p >= n || mask[p] {
                return Err(CodeError::PatternLength { expected: n, got: p });
            }
            mask[p] = true;
        }
        Ok(PuncturePlan { n, mode, positions, mask })
    }

    /// The first `p` positions of a shared pattern.
    pub fn from_pattern(pattern: &SetPattern, p: usize) -> Result<Self, CodeError> {
        if p > pattern.len() {
            return Err(CodeError::PatternLength { expected: pattern.len(), got: p });
        }
        Self::from_positions(pattern.len(), PunctureMode::SetPattern, pattern.as_slice()[..p].to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of punctured bits `p`.
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn mode(&self) -> PunctureMode {
        self.mode
    }

    /// Punctured positions in selection order.
    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn is_punctured(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// Transmitted positions, ascending.
    pub fn kept(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.mask[i]).collect()
    }

    /// `K/(N − p)`.
    pub fn effective_rate(&self, k: usize) -> f64 {
        k as f64 / (self.n - self.count()) as f64
    }

    /// Expands `values` given for the transmitted positions to length `N`,
    /// writing zero at punctured positions.
    pub fn expand_llr(&self, values: &[f64]) -> Result<Vec<f64>, CodeError> {
        let kept = self.n - self.count();
        if values.len() != kept {
            return Err(CodeError::Length { expected: kept, got: values.len() });
        }
        let mut it = values.iter();
        Ok(self.mask.iter().map(|&punct| if punct { 0.0 } else { *it.next().unwrap() }).collect())
    }

    /// Drops the punctured entries of a length-`N` sequence.
    pub fn select<T: Copy>(&self, full: &[T]) -> Vec<T> {
        assert_eq!(full.len(), self.n);
        full.iter().zip(&self.mask).filter(|(_, &m)| !m).map(|(&v, _)| v).collect()
    }
}

/// `p = ⌊N − R_b·N/R_t⌋`, requiring `R_b ≤ R_t < 1`.
pub fn puncture_count(n: usize, base_rate: f64, target_rate: f64) -> Result<usize, CodeError> {
    if !(target_rate >= base_rate && target_rate < 1.0) || !(base_rate > 0.0) {
        return Err(CodeError::UnreachableRate { base: base_rate, target: target_rate });
    }
    let n_f = n as f64;
    let p = (n_f - base_rate * n_f / target_rate + FLOOR_SLACK).floor();
    Ok(p.clamp(0.0, n_f) as usize)
}

/// Builds the puncturing plan that brings `code` to `target_rate`.
pub fn make_puncture_plan<R: Rng + ?Sized>(
    code: &QcCode,
    target_rate: f64,
    source: PunctureSource<'_, R>,
) -> Result<PuncturePlan, CodeError> {
    let n = code.n();
    let p = puncture_count(n, code.base_rate(), target_rate)?;
    match source {
        PunctureSource::Random(rng) => {
            let mut positions: Vec<u32> = rand::seq::index::sample(rng, n, p).into_iter().map(|i| i as u32).collect();
            positions.sort_unstable();
            PuncturePlan::from_positions(n, PunctureMode::Random, positions)
        }
        PunctureSource::Pattern(pattern) => {
            if pattern.len() != n {
                return Err(CodeError::PatternLength { expected: n, got: pattern.len() });
            }
            PuncturePlan::from_pattern(pattern, p)
        }
    }
}

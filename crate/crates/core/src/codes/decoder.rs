//! Belief-propagation decoding.
//!
//! Layered (row-serial) schedule: checks are processed one at a time and each
//! update is folded into the variable posteriors immediately, which roughly
//! halves the iteration count of a flooding schedule. One iteration visits
//! every check once.
//!
//! LLR convention: positive values favour bit `0`. A posterior of exactly zero
//! is an erasure; a frame with erased positions never counts as converged.

use super::{CodeError, ParityMatrix, QcCode};

/// Check-node products are kept inside `±(1 − TANH_CLAMP)` so that `atanh`
/// stays finite; this caps check messages at about 35.
const TANH_CLAMP: f64 = 1e-15;

const MIN_SUM_SCALE: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoderKind {
    /// Exact sum-product (tanh rule).
    #[default]
    SumProduct,
    /// Min-sum with messages scaled by 0.75; faster, slightly weaker.
    ScaledMinSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    /// All checks satisfied by `bits`.
    pub converged: bool,
    /// Completed iterations; zero when the channel decisions already form a
    /// codeword.
    pub iterations: usize,
}

/// Decoder for one parity-check matrix, with the graph flattened for speed.
#[derive(Debug, Clone)]
pub struct Decoder {
    kind: DecoderKind,
    n: usize,
    row_start: Vec<u32>,
    edge_var: Vec<u32>,
}

impl Decoder {
    pub fn new(h: &ParityMatrix, kind: DecoderKind) -> Self {
        let mut row_start = Vec::with_capacity(h.rows() + 1);
        let mut edge_var = Vec::with_capacity(h.num_edges());
        row_start.push(0);
        for r in 0..h.rows() {
            edge_var.extend_from_slice(h.row(r));
            row_start.push(edge_var.len() as u32);
        }
        Decoder { kind, n: h.cols(), row_start, edge_var }
    }

    pub fn kind(&self) -> DecoderKind {
        self.kind
    }

    pub fn decode(&self, llr: &[f64], max_iter: usize) -> Result<DecodeOutcome, CodeError> {
        if llr.len() != self.n {
            return Err(CodeError::Length { expected: self.n, got: llr.len() });
        }
        if max_iter == 0 {
            return Err(CodeError::ZeroIterations);
        }
        if let Some(i) = llr.iter().position(|v| !v.is_finite()) {
            return Err(CodeError::NonFiniteLlr(i));
        }

        let mut post = llr.to_vec();
        let mut bits = vec![0u8; self.n];
        if self.decide(&post, &mut bits) {
            return Ok(DecodeOutcome { bits, converged: true, iterations: 0 });
        }

        let max_deg = self.row_start.windows(2).map(|w| (w[1] - w[0]) as usize).max().unwrap_or(0);
        let mut msg = vec![0.0f64; self.edge_var.len()];
        let mut ext = vec![0.0f64; max_deg];
        let mut fwd = vec![0.0f64; max_deg];

        for iter in 1..=max_iter {
            for w in self.row_start.windows(2) {
                let (s, e) = (w[0] as usize, w[1] as usize);
                let vars = &self.edge_var[s..e];
                let old = &mut msg[s..e];
                let deg = vars.len();
                for j in 0..deg {
                    ext[j] = post[vars[j] as usize] - old[j];
                }
                match self.kind {
                    DecoderKind::SumProduct => sum_product_row(&mut ext[..deg], &mut fwd[..deg]),
                    DecoderKind::ScaledMinSum => min_sum_row(&mut ext[..deg]),
                }
                // ext now holds outgoing check messages
                for ((&v, o), &m) in vars.iter().zip(old.iter_mut()).zip(&ext[..deg]) {
                    post[v as usize] += m - *o;
                    *o = m;
                }
            }
            if self.decide(&post, &mut bits) {
                return Ok(DecodeOutcome { bits, converged: true, iterations: iter });
            }
        }
        Ok(DecodeOutcome { bits, converged: false, iterations: max_iter })
    }

    /// Hard decisions into `bits`; true when none is erased and all checks hold.
    fn decide(&self, post: &[f64], bits: &mut [u8]) -> bool {
        let mut erased = false;
        for (b, &p) in bits.iter_mut().zip(post) {
            *b = u8::from(p < 0.0);
            erased |= p == 0.0;
        }
        !erased && self.syndrome_ok(bits)
    }

    fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.row_start.windows(2).all(|w| {
            self.edge_var[w[0] as usize..w[1] as usize].iter().fold(0u8, |a, &v| a ^ bits[v as usize]) == 0
        })
    }
}

/// Replaces incoming messages `t` by the tanh-rule outgoing messages.
///
/// `tanh(x/2)` and `2·atanh(p)` are evaluated through `exp` and `ln`, which
/// is markedly cheaper than the library hyperbolic functions.
fn sum_product_row(t: &mut [f64], fwd: &mut [f64]) {
    let deg = t.len();
    for x in t.iter_mut() {
        *x = 1.0 - 2.0 / (x.exp() + 1.0);
    }
    // prefix products exclude the own edge
    let mut acc = 1.0;
    for j in 0..deg {
        fwd[j] = acc;
        acc *= t[j];
    }
    let lim = 1.0 - TANH_CLAMP;
    let mut back = 1.0;
    for j in (0..deg).rev() {
        let prod = (fwd[j] * back).clamp(-lim, lim);
        back *= t[j];
        t[j] = ((1.0 + prod) / (1.0 - prod)).ln();
    }
}

fn min_sum_row(t: &mut [f64]) {
    let mut sign = false;
    let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, 0usize);
    for (j, &x) in t.iter().enumerate() {
        sign ^= x < 0.0;
        let a = x.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            arg = j;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (j, x) in t.iter_mut().enumerate() {
        let mag = if j == arg { min2 } else { min1 };
        let s = sign ^ (*x < 0.0);
        *x = if s { -MIN_SUM_SCALE * mag } else { MIN_SUM_SCALE * mag };
    }
}

/// Sum-product decoding of `llr` with `code`.
pub fn decode(code: &QcCode, llr: &[f64], max_iter: usize) -> Result<DecodeOutcome, CodeError> {
    Decoder::new(code.parity(), DecoderKind::SumProduct).decode(llr, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> QcCode {
        QcCode::from_parity(
            ParityMatrix::from_rows(7, vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 1, 3, 6]]),
            None,
        )
        .unwrap()
    }

    fn bpsk(c: &[u8], mag: f64) -> Vec<f64> {
        c.iter().map(|&b| if b == 0 { mag } else { -mag }).collect()
    }

    #[test]
    fn noiseless_input_is_returned() {
        let code = hamming();
        let c = code.encode(&[1, 0, 1, 1]).unwrap();
        let out = decode(&code, &bpsk(&c, 20.0), 50).unwrap();
        assert!(out.converged && out.iterations <= 2);
        assert_eq!(out.bits, c);
    }

    #[test]
    fn corrects_a_weak_error() {
        let code = hamming();
        let c = code.encode(&[0, 1, 1, 0]).unwrap();
        let mut llr = bpsk(&c, 4.0);
        llr[2] = -llr[2] * 0.25;
        for kind in [DecoderKind::SumProduct, DecoderKind::ScaledMinSum] {
            let out = Decoder::new(code.parity(), kind).decode(&llr, 20).unwrap();
            assert!(out.converged, "{kind:?}");
            assert_eq!(out.bits, c);
        }
    }

    #[test]
    fn erased_input_never_converges() {
        let code = hamming();
        let out = decode(&code, &[0.0; 7], 5).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 5);
    }

    #[test]
    fn punctured_position_is_recovered() {
        let code = hamming();
        let c = code.encode(&[1, 1, 0, 1]).unwrap();
        let mut llr = bpsk(&c, 5.0);
        llr[1] = 0.0;
        let out = decode(&code, &llr, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.bits, c);
    }

    #[test]
    fn rejects_bad_input() {
        let code = hamming();
        assert!(matches!(decode(&code, &[0.0; 6], 5), Err(CodeError::Length { .. })));
        assert!(matches!(decode(&code, &[0.0; 7], 0), Err(CodeError::ZeroIterations)));
        let mut llr = [1.0; 7];
        llr[3] = f64::NAN;
        assert!(matches!(decode(&code, &llr, 5), Err(CodeError::NonFiniteLlr(3))));
    }
}

//! Reverse reconciliation over a virtual BPSK channel.
//!
//! Bob holds the received quadratures `y` and the BPSK image `u ∈ {±1}` of his
//! codeword. He sends Alice a message that lets her turn her transmitted
//! quadratures `x` into a noisy copy of `u`:
//!
//! - **Algebra mode** (`d ∈ {1, 2, 4, 8}`): `m_j = u_j · y_j` as
//!   Cayley-Dickson numbers. Alice computes `r_j = m_j / x_j`, which equals
//!   `u_j + (u_j·z_j)/x_j`, and uses `σ_j² = d·σ_z²/(2‖x_j‖²)`.
//! - **Matrix mode** (any `d`): with a Haar-random `Q_j`, Bob builds the
//!   Householder reflection `S_j` taking `Q_j y_j` to `u_j·A_j`,
//!   `A_j = √(‖y_j‖²/d)`, and discloses `R_j = S_j Q_j` together with
//!   `‖y_j‖²`. Alice computes `r_j = R_j x_j` and uses
//!   `σ_j² = (σ_z²/2)·√(d/‖y_j‖²)`.
//!
//! In both modes the LLR is `2·r/σ_j²`. For matrix mode this equals
//! `4·A_j·r/σ_z²`, the exact posterior log-ratio for Gaussian modulation:
//! given `y`, `R_j x_j ~ N(u_j A_j/(1+σ_z²), σ_z²/(2(1+σ_z²)))`.
//!
//! Punctured code bits carry no quantum symbol. The frame therefore holds
//! `N − p` quadratures, cut into blocks of `d`; a shorter tail is split into
//! power-of-two blocks in algebra mode and mapped by a single smaller matrix
//! in matrix mode.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::cdalgebra::{div_slices, haar_orthogonal, is_algebra_dim, mul_slices, AlgebraError, Reflection, RotationMatrix};
use crate::codes::{CodeError, CrcTag, PuncturePlan};
use crate::rng::rng_for;

/// Largest supported block dimension.
pub const MAX_DIM: usize = 512;

/// Squared block norms below this are rejected. Only zero and subnormal
/// norms qualify: tiny Gaussian draws are legitimate samples and must not
/// be dropped.
pub const MIN_BLOCK_NORM_SQR: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("invalid reconciliation configuration: {0}")]
    Config(String),
    #[error("{what} has length {got}, expected {expected}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error("BPSK symbol at position {0} is not ±1")]
    BadSymbol(usize),
    #[error("block {block} has (near) zero norm")]
    ZeroNorm { block: usize },
    #[error("payload does not match the configured mode")]
    ModeMismatch,
    #[error("noise variance must be positive, got {0}")]
    BadNoise(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconMode {
    Algebra,
    Matrix,
}

/// How the Haar matrices `Q_j` are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QPolicy {
    /// Independent `Q_j` for every block.
    #[default]
    FreshPerBlock,
    /// One `Q` per block size and frame; faster, for simulation only.
    OnePerCodeword,
}

/// How matrix-mode mappings are represented in the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayloadForm {
    /// Seed of `Q_j` plus the unit reflection normal.
    #[default]
    Compressed,
    /// The full `d×d` matrix `R_j`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconConfig {
    pub d: usize,
    pub mode: ReconMode,
    pub q_policy: QPolicy,
    pub form: PayloadForm,
}

impl ReconConfig {
    pub fn algebra(d: usize) -> Result<Self, ReconError> {
        let cfg = ReconConfig { d, mode: ReconMode::Algebra, q_policy: QPolicy::default(), form: PayloadForm::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn matrix(d: usize) -> Result<Self, ReconError> {
        let cfg = ReconConfig { d, mode: ReconMode::Matrix, q_policy: QPolicy::default(), form: PayloadForm::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Algebra mode up to `d = 8`, matrix mode above.
    pub fn natural(d: usize) -> Result<Self, ReconError> {
        if d <= 8 {
            Self::algebra(d)
        } else {
            Self::matrix(d)
        }
    }

    pub fn with_q_policy(mut self, q: QPolicy) -> Self {
        self.q_policy = q;
        self
    }

    pub fn with_form(mut self, form: PayloadForm) -> Self {
        self.form = form;
        self
    }

    pub fn validate(&self) -> Result<(), ReconError> {
        if !self.d.is_power_of_two() || self.d > MAX_DIM {
            return Err(ReconError::Config(format!("d = {} is not a power of two in 1..={MAX_DIM}", self.d)));
        }
        if self.mode == ReconMode::Algebra && !is_algebra_dim(self.d) {
            return Err(ReconError::Config(format!("algebra mode needs d in {{1, 2, 4, 8}}, got {}", self.d)));
        }
        Ok(())
    }

    /// Block sizes covering `len` quadratures.
    pub fn block_sizes(&self, len: usize) -> Vec<usize> {
        let mut sizes = vec![self.d; len / self.d];
        let tail = len % self.d;
        match self.mode {
            ReconMode::Matrix if tail > 0 => sizes.push(tail),
            ReconMode::Matrix => {}
            ReconMode::Algebra => {
                let mut b = self.d;
                while b > 0 {
                    if tail & b != 0 {
                        sizes.push(b);
                    }
                    b >>= 1;
                }
            }
        }
        sizes
    }

    /// Checks that a code of length `n` fits this configuration under `plan`.
    ///
    /// Without puncturing `n` must be a multiple of `d`; punctured frames may
    /// end in a shorter tail block.
    pub fn check_frame(&self, n: usize, plan: &PuncturePlan) -> Result<(), ReconError> {
        self.validate()?;
        if plan.n() != n {
            return Err(ReconError::Length { what: "puncture plan", expected: n, got: plan.n() });
        }
        if plan.count() == 0 && !n.is_multiple_of(self.d) {
            return Err(ReconError::Config(format!("code length {n} not divisible by d = {}", self.d)));
        }
        Ok(())
    }
}

/// Matrix-mode disclosure for one block.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    /// Seed regenerating `Q_j` and the unit normal of `S_j` (`None`: identity).
    Compressed { seed: u64, normal: Option<Vec<f64>> },
    /// The mapping matrix `R_j = S_j Q_j`.
    Full(RotationMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayloadBody {
    /// `m` values for the transmitted positions.
    Algebra { m: Vec<f64> },
    /// One mapping and one squared norm `‖y_j‖²` per block.
    Matrix { mappings: Vec<Mapping>, block_norms: Vec<f64> },
}

/// Bob's reconciliation message for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconPayload {
    pub body: PayloadBody,
    pub puncture: PuncturePlan,
    pub crc: CrcTag,
}

/// Normalised virtual-channel noise of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualNoiseSample {
    pub values: Vec<f64>,
}

/// BPSK image `u = 1 − 2c` of code bits.
pub fn bpsk(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b & 1 == 0 { 1 } else { -1 }).collect()
}

/// `Q` of size `b` for `seed`.
pub fn q_from_seed(seed: u64, b: usize) -> RotationMatrix {
    haar_orthogonal(b, &mut rng_for(seed, &[b as u64]))
}

fn norm_sqr(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn mat_vec(q: &RotationMatrix, v: &[f64]) -> Vec<f64> {
    let prod = q.as_matrix() * DVector::from_column_slice(v);
    prod.as_slice().to_vec()
}

/// Regenerates `Q` matrices, reusing the last one while the seed repeats.
struct QCache {
    key: Option<(u64, usize)>,
    q: RotationMatrix,
}

impl QCache {
    fn new() -> Self {
        QCache { key: None, q: RotationMatrix::identity(1) }
    }

    fn get(&mut self, seed: u64, b: usize) -> &RotationMatrix {
        if self.key != Some((seed, b)) {
            self.q = q_from_seed(seed, b);
            self.key = Some((seed, b));
        }
        &self.q
    }
}

/// Builds Bob's message.
///
/// `u` has one entry per code bit; `y` has one quadrature per transmitted
/// (non-punctured) bit, in ascending bit order.
pub fn bob_encode<R: Rng + ?Sized>(
    u: &[i8],
    y: &[f64],
    plan: &PuncturePlan,
    cfg: &ReconConfig,
    crc: CrcTag,
    rng: &mut R,
) -> Result<ReconPayload, ReconError> {
    cfg.check_frame(u.len(), plan)?;
    if let Some(i) = u.iter().position(|&v| v != 1 && v != -1) {
        return Err(ReconError::BadSymbol(i));
    }
    let u_kept: Vec<f64> = plan.select(u).into_iter().map(f64::from).collect();
    if y.len() != u_kept.len() {
        return Err(ReconError::Length { what: "received quadratures", expected: u_kept.len(), got: y.len() });
    }
    let sizes = cfg.block_sizes(y.len());
    let body = match cfg.mode {
        ReconMode::Algebra => {
            let mut m = vec![0.0; y.len()];
            let mut start = 0;
            for (j, &b) in sizes.iter().enumerate() {
                let yj = &y[start..start + b];
                if norm_sqr(yj) < MIN_BLOCK_NORM_SQR {
                    return Err(ReconError::ZeroNorm { block: j });
                }
                mul_slices(&u_kept[start..start + b], yj, &mut m[start..start + b]);
                start += b;
            }
            PayloadBody::Algebra { m }
        }
        ReconMode::Matrix => {
            let frame_seed = rng.next_u64();
            let mut cache = QCache::new();
            let mut mappings = Vec::with_capacity(sizes.len());
            let mut block_norms = Vec::with_capacity(sizes.len());
            let mut start = 0;
            for (j, &b) in sizes.iter().enumerate() {
                let yj = &y[start..start + b];
                let uj = &u_kept[start..start + b];
                let ny = norm_sqr(yj);
                if ny < MIN_BLOCK_NORM_SQR {
                    return Err(ReconError::ZeroNorm { block: j });
                }
                let seed = match cfg.q_policy {
                    QPolicy::FreshPerBlock => rng.next_u64(),
                    QPolicy::OnePerCodeword => frame_seed,
                };
                let q = cache.get(seed, b);
                let qy = mat_vec(q, yj);
                let amp = (ny / b as f64).sqrt();
                let target: Vec<f64> = uj.iter().map(|v| v * amp).collect();
                let s = Reflection::between(&qy, &target)?;
                mappings.push(match cfg.form {
                    PayloadForm::Compressed => Mapping::Compressed { seed, normal: s.normal().map(<[f64]>::to_vec) },
                    PayloadForm::Full => Mapping::Full(reflect_columns(&s, q)),
                });
                block_norms.push(ny);
                start += b;
            }
            PayloadBody::Matrix { mappings, block_norms }
        }
    };
    Ok(ReconPayload { body, puncture: plan.clone(), crc })
}

/// `S·Q` without forming `S`.
fn reflect_columns(s: &Reflection, q: &RotationMatrix) -> RotationMatrix {
    let mut m: DMatrix<f64> = q.as_matrix().clone();
    for mut col in m.column_iter_mut() {
        s.apply_in_place(col.as_mut_slice());
    }
    RotationMatrix::from_matrix(m)
}

/// Alice's soft values `r` and the per-position LLR scale `2/σ_j²`.
fn alice_soft(payload: &ReconPayload, x: &[f64], sigma_z2: f64, cfg: &ReconConfig) -> Result<(Vec<f64>, Vec<f64>), ReconError> {
    cfg.check_frame(payload.puncture.n(), &payload.puncture)?;
    if !(sigma_z2 > 0.0 && sigma_z2.is_finite()) {
        return Err(ReconError::BadNoise(sigma_z2));
    }
    let kept = payload.puncture.n() - payload.puncture.count();
    if x.len() != kept {
        return Err(ReconError::Length { what: "transmitted quadratures", expected: kept, got: x.len() });
    }
    let sizes = cfg.block_sizes(kept);
    let mut r = vec![0.0; kept];
    let mut scale = vec![0.0; kept];
    match (&payload.body, cfg.mode) {
        (PayloadBody::Algebra { m }, ReconMode::Algebra) => {
            if m.len() != kept {
                return Err(ReconError::Length { what: "m values", expected: kept, got: m.len() });
            }
            let mut start = 0;
            for (j, &b) in sizes.iter().enumerate() {
                let xj = &x[start..start + b];
                let nx = norm_sqr(xj);
                if nx < MIN_BLOCK_NORM_SQR {
                    return Err(ReconError::ZeroNorm { block: j });
                }
                div_slices(&m[start..start + b], xj, &mut r[start..start + b])?;
                let sigma2 = b as f64 * sigma_z2 / (2.0 * nx);
                scale[start..start + b].fill(2.0 / sigma2);
                start += b;
            }
        }
        (PayloadBody::Matrix { mappings, block_norms }, ReconMode::Matrix) => {
            if mappings.len() != sizes.len() || block_norms.len() != sizes.len() {
                return Err(ReconError::Length { what: "block mappings", expected: sizes.len(), got: mappings.len().min(block_norms.len()) });
            }
            let mut cache = QCache::new();
            let mut start = 0;
            for (j, (&b, (mapping, &ny))) in sizes.iter().zip(mappings.iter().zip(block_norms)).enumerate() {
                let xj = &x[start..start + b];
                if norm_sqr(xj) < MIN_BLOCK_NORM_SQR || !(ny >= MIN_BLOCK_NORM_SQR) {
                    return Err(ReconError::ZeroNorm { block: j });
                }
                let rj = match mapping {
                    Mapping::Compressed { seed, normal } => {
                        let mut v = mat_vec(cache.get(*seed, b), xj);
                        if let Some(a) = normal {
                            if a.len() != b {
                                return Err(ReconError::Length { what: "reflection normal", expected: b, got: a.len() });
                            }
                            Reflection::from_normal(a).apply_in_place(&mut v);
                        }
                        v
                    }
                    Mapping::Full(m) => {
                        if m.dim() != b {
                            return Err(ReconError::Length { what: "mapping matrix", expected: b, got: m.dim() });
                        }
                        mat_vec(m, xj)
                    }
                };
                r[start..start + b].copy_from_slice(&rj);
                let sigma2 = 0.5 * sigma_z2 * (b as f64 / ny).sqrt();
                scale[start..start + b].fill(2.0 / sigma2);
                start += b;
            }
        }
        _ => return Err(ReconError::ModeMismatch),
    }
    Ok((r, scale))
}

/// Alice's LLRs for all `N` code bits; punctured positions get zero.
pub fn alice_llr(payload: &ReconPayload, x: &[f64], sigma_z2: f64, cfg: &ReconConfig) -> Result<Vec<f64>, ReconError> {
    let (r, scale) = alice_soft(payload, x, sigma_z2, cfg)?;
    let llr: Vec<f64> = r.iter().zip(&scale).map(|(a, s)| a * s).collect();
    Ok(payload.puncture.expand_llr(&llr)?)
}

/// Normalised virtual noise `n_j = r_j/A_j − u_j` for the transmitted
/// positions (`A_j = 1` in algebra mode).
///
/// In algebra mode `n_j = (u_j·z_j)/x_j`; in matrix mode `n_j = −R_j z_j/A_j`.
pub fn virtual_noise(
    x: &[f64],
    y: &[f64],
    u: &[i8],
    payload: &ReconPayload,
    cfg: &ReconConfig,
) -> Result<VirtualNoiseSample, ReconError> {
    if x.len() != y.len() {
        return Err(ReconError::Length { what: "received quadratures", expected: x.len(), got: y.len() });
    }
    // unit noise variance: only r is used here
    let (r, _) = alice_soft(payload, x, 1.0, cfg)?;
    let u_kept = payload.puncture.select(u);
    let sizes = cfg.block_sizes(x.len());
    let mut values = Vec::with_capacity(x.len());
    let mut start = 0;
    for &b in &sizes {
        let amp = match cfg.mode {
            ReconMode::Algebra => 1.0,
            ReconMode::Matrix => (norm_sqr(&y[start..start + b]) / b as f64).sqrt(),
        };
        for i in start..start + b {
            values.push(r[i] / amp - f64::from(u_kept[i]));
        }
        start += b;
    }
    Ok(VirtualNoiseSample { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::PunctureMode;
    use crate::modem::{awgn_channel, draw_states, Constellation};
    use crate::rng::rng_for;

    fn random_u(n: usize, seed: u64) -> Vec<i8> {
        let mut rng = rng_for(seed, &[]);
        (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
    }

    #[test]
    fn config_validation() {
        assert!(ReconConfig::algebra(16).is_err());
        assert!(ReconConfig::matrix(12).is_err());
        assert!(ReconConfig::matrix(1024).is_err());
        assert_eq!(ReconConfig::natural(8).unwrap().mode, ReconMode::Algebra);
        assert_eq!(ReconConfig::natural(64).unwrap().mode, ReconMode::Matrix);
        let cfg = ReconConfig::algebra(8).unwrap();
        assert!(cfg.check_frame(100, &PuncturePlan::none(100)).is_err());
        let plan = PuncturePlan::from_positions(100, PunctureMode::Random, vec![3]).unwrap();
        assert!(cfg.check_frame(100, &plan).is_ok());
    }

    #[test]
    fn tail_blocks() {
        assert_eq!(ReconConfig::algebra(8).unwrap().block_sizes(21), vec![8, 8, 4, 1]);
        assert_eq!(ReconConfig::matrix(16).unwrap().block_sizes(37), vec![16, 16, 5]);
    }

    #[test]
    fn scalar_message_is_signed_y() {
        let u = vec![1, -1, 1, -1];
        let y = vec![0.5, 0.25, -1.0, 2.0];
        let p = bob_encode(&u, &y, &PuncturePlan::none(4), &ReconConfig::algebra(1).unwrap(), CrcTag(0), &mut rng_for(0, &[])).unwrap();
        assert_eq!(p.body, PayloadBody::Algebra { m: vec![0.5, -0.25, -1.0, -2.0] });
    }

    #[test]
    fn scalar_llr_direct_evaluation() {
        let payload = ReconPayload { body: PayloadBody::Algebra { m: vec![2.0] }, puncture: PuncturePlan::none(1), crc: CrcTag(0) };
        let llr = alice_llr(&payload, &[0.5], 0.1, &ReconConfig::algebra(1).unwrap()).unwrap();
        assert!((llr[0] - 40.0).abs() < 1e-12);
    }

    #[test]
    fn mapping_hits_scaled_bpsk_point() {
        let n = 256;
        let u = random_u(n, 1);
        let y: Vec<f64> = draw_states(&Constellation::gaussian(), n, &mut rng_for(2, &[])).unwrap();
        for form in [PayloadForm::Full, PayloadForm::Compressed] {
            let cfg = ReconConfig::matrix(64).unwrap().with_form(form);
            let p = bob_encode(&u, &y, &PuncturePlan::none(n), &cfg, CrcTag(0), &mut rng_for(3, &[])).unwrap();
            let PayloadBody::Matrix { mappings, block_norms } = &p.body else { panic!() };
            for (j, (m, ny)) in mappings.iter().zip(block_norms).enumerate() {
                let r = match m {
                    Mapping::Full(r) => r.clone(),
                    Mapping::Compressed { seed, normal } => {
                        let q = q_from_seed(*seed, 64);
                        let s = normal.as_deref().map_or(Reflection::identity(64), Reflection::from_normal);
                        s.to_matrix().compose(&q)
                    }
                };
                assert!(r.orthogonality_error() < 1e-10);
                let ry = r.apply(&y[j * 64..(j + 1) * 64]);
                let amp = (ny / 64.0).sqrt();
                for (a, &ui) in ry.iter().zip(&u[j * 64..(j + 1) * 64]) {
                    assert!((a - f64::from(ui) * amp).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn noiseless_signs_match_in_every_mode() {
        let n = 512;
        let u = random_u(n, 4);
        for c in [Constellation::gaussian(), Constellation::qpsk(), Constellation::qam(64, 0.3).unwrap()] {
            let x = draw_states(&c, n, &mut rng_for(5, &[])).unwrap();
            for cfg in [ReconConfig::algebra(1), ReconConfig::algebra(8), ReconConfig::matrix(32), ReconConfig::matrix(128)] {
                let cfg = cfg.unwrap();
                let p = bob_encode(&u, &x, &PuncturePlan::none(n), &cfg, CrcTag(0), &mut rng_for(6, &[])).unwrap();
                let llr = alice_llr(&p, &x, 0.1, &cfg).unwrap();
                assert!(llr.iter().zip(&u).all(|(l, &ui)| l.signum() == f64::from(ui)), "{cfg:?}");
            }
        }
    }

    #[test]
    fn octonion_round_trip_recovers_u() {
        let n = 64;
        let u = random_u(n, 7);
        let y = draw_states(&Constellation::gaussian(), n, &mut rng_for(8, &[])).unwrap();
        let cfg = ReconConfig::algebra(8).unwrap();
        let p = bob_encode(&u, &y, &PuncturePlan::none(n), &cfg, CrcTag(0), &mut rng_for(0, &[])).unwrap();
        let noise = virtual_noise(&y, &y, &u, &p, &cfg).unwrap();
        assert!(noise.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn algebra_noise_identity() {
        // r − u = (u·z)/x with z = y − x
        let n = 64;
        let u = random_u(n, 9);
        let x = draw_states(&Constellation::gaussian(), n, &mut rng_for(10, &[])).unwrap();
        let f = awgn_channel(&x, 0.3, &mut rng_for(11, &[])).unwrap();
        let cfg = ReconConfig::algebra(4).unwrap();
        let p = bob_encode(&u, &f.y, &PuncturePlan::none(n), &cfg, CrcTag(0), &mut rng_for(0, &[])).unwrap();
        let noise = virtual_noise(&f.x, &f.y, &u, &p, &cfg).unwrap();
        for j in 0..n / 4 {
            let s = j * 4..(j + 1) * 4;
            let z: Vec<f64> = f.y[s.clone()].iter().zip(&f.x[s.clone()]).map(|(a, b)| a - b).collect();
            let uf: Vec<f64> = u[s.clone()].iter().map(|&v| f64::from(v)).collect();
            let mut uz = [0.0; 4];
            mul_slices(&uf, &z, &mut uz);
            let mut expect = [0.0; 4];
            div_slices(&uz, &f.x[s.clone()], &mut expect).unwrap();
            for (a, b) in noise.values[s].iter().zip(&expect) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn matrix_llr_scales_with_block_amplitude() {
        let x = vec![0.3, -0.2, 0.5, 0.1];
        let mk = |ny: f64| ReconPayload {
            body: PayloadBody::Matrix { mappings: vec![Mapping::Full(RotationMatrix::identity(4))], block_norms: vec![ny] },
            puncture: PuncturePlan::none(4),
            crc: CrcTag(0),
        };
        let cfg = ReconConfig::matrix(4).unwrap();
        let a = alice_llr(&mk(1.0), &x, 0.2, &cfg).unwrap();
        let b = alice_llr(&mk(4.0), &x, 0.2, &cfg).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((q / p - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn punctured_positions_get_zero_llr() {
        let n = 40;
        let u = random_u(n, 12);
        let plan = PuncturePlan::from_positions(n, PunctureMode::Random, vec![0, 7, 13, 21, 30, 39]).unwrap();
        let x = draw_states(&Constellation::gaussian(), 34, &mut rng_for(13, &[])).unwrap();
        for cfg in [ReconConfig::algebra(8).unwrap(), ReconConfig::matrix(16).unwrap()] {
            let p = bob_encode(&u, &x, &plan, &cfg, CrcTag(0), &mut rng_for(14, &[])).unwrap();
            let llr = alice_llr(&p, &x, 0.1, &cfg).unwrap();
            for i in 0..n {
                if plan.is_punctured(i) {
                    assert_eq!(llr[i], 0.0);
                } else {
                    assert_eq!(llr[i].signum(), f64::from(u[i]));
                }
            }
        }
    }

    #[test]
    fn input_errors() {
        let cfg = ReconConfig::algebra(2).unwrap();
        let plan = PuncturePlan::none(2);
        let mut rng = rng_for(0, &[]);
        assert!(matches!(bob_encode(&[1, 0], &[1.0, 1.0], &plan, &cfg, CrcTag(0), &mut rng), Err(ReconError::BadSymbol(1))));
        assert!(matches!(bob_encode(&[1, 1], &[0.0, 0.0], &plan, &cfg, CrcTag(0), &mut rng), Err(ReconError::ZeroNorm { block: 0 })));
        let p = bob_encode(&[1, 1], &[1.0, 0.0], &plan, &cfg, CrcTag(0), &mut rng).unwrap();
        assert!(matches!(alice_llr(&p, &[0.0, 0.0], 0.1, &cfg), Err(ReconError::ZeroNorm { .. })));
        assert!(matches!(alice_llr(&p, &[1.0, 0.0], 0.1, &ReconConfig::matrix(2).unwrap()), Err(ReconError::ModeMismatch)));
    }
}

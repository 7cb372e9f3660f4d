//! Quantum-state sources and channels.
//!
//! Symbols are complex amplitudes normalised to unit mean energy,
//! `E[|x|²] = 1`, so each real quadrature carries mean-square `1/2`. Frames
//! store quadratures interleaved: `[x₁ᴵ, x₁Q, x₂ᴵ, x₂Q, …]`.
//!
//! The AWGN channel adds `N(0, σ_z²/2)` to every quadrature, `σ_z² = 1/SNR`.
//! The FSO channel additionally scales each coherence block by `√T_k`.

use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModemError {
    #[error("unsupported QAM order {0}; expected 4, 16, 64 or 256")]
    UnsupportedOrder(usize),
    #[error("shaping parameter must be finite and non-negative, got {0}")]
    BadShaping(f64),
    #[error("entropy {target} bits not reachable for order {order}")]
    UnreachableEntropy { order: usize, target: f64 },
    #[error("symbol count {0} is odd; quadratures come in pairs")]
    OddLength(usize),
    #[error("SNR must be positive, got {0}")]
    BadSnr(f64),
    #[error("invalid FSO parameters: {0}")]
    BadFso(String),
    #[error("constellation file line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    /// Continuous circular Gaussian modulation.
    Gaussian,
    /// A finite point set with probabilities.
    Discrete,
}

/// A source of quantum states with unit mean energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<(f64, f64)>,
    probs: Vec<f64>,
    nu: f64,
}

impl Constellation {
    /// Gaussian modulation, `N(0, 1/2)` per quadrature.
    pub fn gaussian() -> Self {
        Constellation { kind: ConstellationKind::Gaussian, points: Vec::new(), probs: Vec::new(), nu: 0.0 }
    }

    pub fn qpsk() -> Self {
        Self::qam(4, 0.0).expect("order 4 is supported")
    }

    /// Square `order`-QAM with Maxwell-Boltzmann probabilities
    /// `∝ exp(−nu·|p|²)`.
    ///
    /// `|p|²` is measured on the grid scaled to unit energy under the uniform
    /// distribution, so `nu` has the same meaning for every order. After
    /// shaping the amplitudes are rescaled to unit energy again.
    pub fn qam(order: usize, nu: f64) -> Result<Self, ModemError> {
        let side = match order {
            4 => 2,
            16 => 4,
            64 => 8,
            256 => 16,
            _ => return Err(ModemError::UnsupportedOrder(order)),
        };
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(ModemError::BadShaping(nu));
        }
        let levels: Vec<f64> = (0..side).map(|i| (2 * i) as f64 - (side - 1) as f64).collect();
        let uniform_energy = 2.0 * levels.iter().map(|l| l * l).sum::<f64>() / side as f64;
        let unit = 1.0 / uniform_energy.sqrt();
        let mut points = Vec::with_capacity(order);
        for &i in &levels {
            for &q in &levels {
                points.push((i * unit, q * unit));
            }
        }
        let weights: Vec<f64> = points.iter().map(|&(i, q)| (-nu * (i * i + q * q)).exp()).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let energy: f64 = points.iter().zip(&probs).map(|(&(i, q), p)| p * (i * i + q * q)).sum();
        let scale = 1.0 / energy.sqrt();
        let points = points.into_iter().map(|(i, q)| (i * scale, q * scale)).collect();
        Ok(Constellation { kind: ConstellationKind::Discrete, points, probs, nu })
    }

    /// Builds a discrete constellation from explicit points and
    /// probabilities, rescaled to unit energy. Probabilities must sum to one
    /// within `1e-9` and are renormalised exactly.
    pub fn from_table(points: Vec<(f64, f64)>, probs: Vec<f64>) -> Result<Self, ModemError> {
        let bad = |msg: &str| ModemError::Table { line: 0, msg: msg.into() };
        if points.is_empty() || points.len() != probs.len() {
            return Err(bad("points and probabilities must be non-empty and equally long"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(bad("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad("probabilities must sum to one"));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let energy: f64 = points.iter().zip(&probs).map(|(&(i, q), p)| p * (i * i + q * q)).sum();
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(bad("constellation has zero energy"));
        }
        let s = 1.0 / energy.sqrt();
        let points = points.into_iter().map(|(i, q)| (i * s, q * s)).collect();
        Ok(Constellation { kind: ConstellationKind::Discrete, points, probs, nu: f64::NAN })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    /// Points of a discrete constellation; empty for Gaussian modulation.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Maxwell-Boltzmann parameter; NaN for tables loaded from a file.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `Σ p·|x|²`, one for every constellation.
    pub fn energy(&self) -> f64 {
        match self.kind {
            ConstellationKind::Gaussian => 1.0,
            ConstellationKind::Discrete => {
                self.points.iter().zip(&self.probs).map(|(&(i, q), p)| p * (i * i + q * q)).sum()
            }
        }
    }

    /// Source entropy in bits per symbol (discrete only).
    pub fn entropy_bits(&self) -> f64 {
        self.probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
    }

    /// Writes one `I Q prob` row per point.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<(), ModemError> {
        writeln!(out, "# I Q prob")?;
        for (&(i, q), p) in self.points.iter().zip(&self.probs) {
            writeln!(out, "{i:.17e} {q:.17e} {p:.17e}")?;
        }
        Ok(())
    }

    /// Reads rows of `I Q prob`; `#` starts a comment.
    pub fn read_table<R: BufRead>(input: R) -> Result<Self, ModemError> {
        let mut points = Vec::new();
        let mut probs = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let vals: Vec<f64> = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| ModemError::Table { line: idx + 1, msg: e.to_string() })?;
            if vals.len() != 3 {
                return Err(ModemError::Table { line: idx + 1, msg: format!("expected 3 columns, found {}", vals.len()) });
            }
            points.push((vals[0], vals[1]));
            probs.push(vals[2]);
        }
        Self::from_table(points, probs)
    }
}

/// Maxwell-Boltzmann parameter giving `order`-QAM an entropy of `bits`.
pub fn nu_for_entropy(order: usize, bits: f64) -> Result<f64, ModemError> {
    let entropy = |nu: f64| Constellation::qam(order, nu).map(|c| c.entropy_bits());
    let max = entropy(0.0)?;
    if !(bits > 0.0 && bits <= max) {
        return Err(ModemError::UnreachableEntropy { order, target: bits });
    }
    if (bits - max).abs() < 1e-12 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while entropy(hi)? > bits {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(ModemError::UnreachableEntropy { order, target: bits });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid)? > bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws `n / 2` i.i.d. symbols as `n` interleaved quadratures.
pub fn draw_states<R: Rng + ?Sized>(c: &Constellation, n: usize, rng: &mut R) -> Result<Vec<f64>, ModemError> {
    if !n.is_multiple_of(2) {
        return Err(ModemError::OddLength(n));
    }
    let mut out = Vec::with_capacity(n);
    match c.kind {
        ConstellationKind::Gaussian => {
            let sd = std::f64::consts::FRAC_1_SQRT_2;
            out.extend((0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)));
        }
        ConstellationKind::Discrete => {
            let pick = WeightedIndex::new(&c.probs).expect("validated probabilities");
            for _ in 0..n / 2 {
                let (i, q) = c.points[pick.sample(rng)];
                out.push(i);
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// Transmitted and received quadratures of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumFrame {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Total noise variance over both quadratures of a symbol.
    pub sigma_z2: f64,
    /// Quadratures per fading block; equals the frame length without fading.
    pub coherence_len: usize,
    /// Power transmittance applied to each fading block.
    pub transmittance: Vec<f64>,
}

impl QuantumFrame {
    /// Empirical `E[|x|²]/E[|y − x|²]`, both per symbol.
    pub fn empirical_snr(&self) -> f64 {
        let sig: f64 = self.x.iter().map(|v| v * v).sum();
        let noise: f64 = self.x.iter().zip(&self.y).map(|(a, b)| (b - a) * (b - a)).sum();
        sig / noise
    }

    /// Writes `block,start,len,transmittance` rows.
    pub fn write_transmittance_csv<W: Write>(&self, mut out: W) -> Result<(), ModemError> {
        writeln!(out, "block,start,len,transmittance")?;
        for (k, t) in self.transmittance.iter().enumerate() {
            let start = k * self.coherence_len;
            let len = self.coherence_len.min(self.x.len() - start);
            writeln!(out, "{k},{start},{len},{t}")?;
        }
        Ok(())
    }
}

fn noise_sd(sigma_z2: f64) -> f64 {
    (0.5 * sigma_z2).sqrt()
}

/// `y = x + z` with `σ_z² = 1/snr`; `snr = ∞` gives `y = x`.
pub fn awgn_channel<R: Rng + ?Sized>(x: &[f64], snr: f64, rng: &mut R) -> Result<QuantumFrame, ModemError> {
    if !(snr > 0.0) {
        return Err(ModemError::BadSnr(snr));
    }
    let sigma_z2 = 1.0 / snr;
    let y = add_noise(x.iter().copied(), sigma_z2, rng);
    Ok(QuantumFrame { x: x.to_vec(), y, sigma_z2, coherence_len: x.len(), transmittance: vec![1.0] })
}

fn add_noise<R: Rng + ?Sized>(x: impl Iterator<Item = f64>, sigma_z2: f64, rng: &mut R) -> Vec<f64> {
    if sigma_z2 == 0.0 {
        return x.collect();
    }
    let sd = noise_sd(sigma_z2);
    x.map(|v| v + sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Weak-turbulence free-space link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsoParams {
    /// Scintillation index `σ_I = Var(I)/E[I]²`.
    pub scint_index: f64,
    /// Shape `β` of the `Beta(β, 1)` pointing factor; `∞` disables pointing loss.
    pub pointing_jitter: f64,
    /// Mean channel transmittance `T̄` before fading.
    pub mean_transmittance: f64,
    /// Quadratures sharing one fading realisation.
    pub coherence_len: usize,
}

impl FsoParams {
    pub fn validate(&self) -> Result<(), ModemError> {
        if !(self.scint_index >= 0.0 && self.scint_index.is_finite()) {
            return Err(ModemError::BadFso(format!("scintillation index {}", self.scint_index)));
        }
        if !(self.pointing_jitter > 0.0) {
            return Err(ModemError::BadFso(format!("pointing jitter {}", self.pointing_jitter)));
        }
        if !(self.mean_transmittance > 0.0 && self.mean_transmittance <= 1.0) {
            return Err(ModemError::BadFso(format!("mean transmittance {}", self.mean_transmittance)));
        }
        if self.coherence_len == 0 || !self.coherence_len.is_multiple_of(2) {
            return Err(ModemError::BadFso(format!("coherence length {}", self.coherence_len)));
        }
        Ok(())
    }

    /// True when neither scintillation nor pointing loss is active.
    pub fn is_static(&self) -> bool {
        self.scint_index == 0.0 && self.pointing_jitter == f64::INFINITY
    }

    /// Draws one block transmittance `T̄·I·P`.
    ///
    /// `ln I ~ N(−s²/2, s²)` with `s² = ln(1 + σ_I)`, which gives `E[I] = 1`
    /// and `Var(I) = σ_I`. `P = U^{1/β}` is `Beta(β, 1)` distributed.
    pub fn draw_transmittance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut t = self.mean_transmittance;
        if self.scint_index > 0.0 {
            let s2 = self.scint_index.ln_1p();
            let ln_i = Normal::new(-0.5 * s2, s2.sqrt()).expect("finite").sample(rng);
            t *= ln_i.exp();
        }
        if self.pointing_jitter.is_finite() {
            let u: f64 = rng.random();
            t *= u.powf(1.0 / self.pointing_jitter);
        }
        t
    }
}

/// `y = √T_k·x + z` per coherence block, with `σ_z² = T̄/snr_at_mean_t`.
///
/// All block gains are drawn before any noise, and none are drawn for a static
/// link, so a static link with `T̄ = 1` reproduces [`awgn_channel`] exactly.
pub fn fso_channel<R: Rng + ?Sized>(
    x: &[f64],
    fso: &FsoParams,
    snr_at_mean_t: f64,
    rng: &mut R,
) -> Result<QuantumFrame, ModemError> {
    fso.validate()?;
    if !(snr_at_mean_t > 0.0) {
        return Err(ModemError::BadSnr(snr_at_mean_t));
    }
    let sigma_z2 = fso.mean_transmittance / snr_at_mean_t;
    let blocks = x.len().div_ceil(fso.coherence_len).max(1);
    let transmittance: Vec<f64> = if fso.is_static() {
        vec![fso.mean_transmittance; blocks]
    } else {
        (0..blocks).map(|_| fso.draw_transmittance(rng)).collect()
    };
    let gains: Vec<f64> = transmittance.iter().map(|t| t.sqrt()).collect();
    let scaled = x.iter().enumerate().map(|(i, &v)| {
        let g = gains[i / fso.coherence_len];
        if g == 1.0 {
            v
        } else {
            g * v
        }
    });
    let y = add_noise(scaled, sigma_z2, rng);
    Ok(QuantumFrame { x: x.to_vec(), y, sigma_z2, coherence_len: fso.coherence_len, transmittance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    #[test]
    fn qpsk_is_equal_power() {
        let c = Constellation::qpsk();
        assert_eq!(c.points().len(), 4);
        for (&(i, q), &p) in c.points().iter().zip(c.probs()) {
            assert!((i * i + q * q - 1.0).abs() < 1e-12);
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn unshaped_qam_is_uniform() {
        let c = Constellation::qam(16, 0.0).unwrap();
        assert!(c.probs().iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-15));
        assert!((c.energy() - 1.0).abs() < 1e-12);
        assert!(matches!(Constellation::qam(32, 0.0), Err(ModemError::UnsupportedOrder(32))));
        assert!(matches!(Constellation::qam(16, -1.0), Err(ModemError::BadShaping(_))));
    }

    #[test]
    fn shaped_probabilities_fall_with_ring_energy() {
        // nu such that the shaped energy on the unit-uniform grid halves
        let grid = Constellation::qam(256, 0.0).unwrap();
        let energy_at = |nu: f64| {
            let w: Vec<f64> = grid.points().iter().map(|&(i, q)| (-nu * (i * i + q * q)).exp()).collect();
            let z: f64 = w.iter().sum();
            grid.points().iter().zip(&w).map(|(&(i, q), w)| w / z * (i * i + q * q)).sum::<f64>()
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if energy_at(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = Constellation::qam(256, lo).unwrap();
        assert!((c.energy() - 1.0).abs() < 1e-9);
        let mut rings: Vec<(f64, f64)> =
            c.points().iter().zip(c.probs()).map(|(&(i, q), &p)| (i * i + q * q, p)).collect();
        rings.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in rings.windows(2) {
            if w[1].0 > w[0].0 + 1e-12 {
                assert!(w[1].1 < w[0].1);
            }
        }
    }

    #[test]
    fn entropy_helper_inverts() {
        let nu = nu_for_entropy(64, 5.0).unwrap();
        let c = Constellation::qam(64, nu).unwrap();
        assert!((c.entropy_bits() - 5.0).abs() < 1e-9);
        assert_eq!(nu_for_entropy(64, 6.0).unwrap(), 0.0);
        assert!(nu_for_entropy(64, 6.5).is_err());
    }

    #[test]
    fn qpsk_states_have_unit_energy_pairs() {
        let x = draw_states(&Constellation::qpsk(), 1000, &mut rng_for(1, &[])).unwrap();
        for pair in x.chunks(2) {
            assert!((pair[0] * pair[0] + pair[1] * pair[1] - 1.0).abs() < 1e-12);
        }
        assert!(matches!(draw_states(&Constellation::qpsk(), 3, &mut rng_for(1, &[])), Err(ModemError::OddLength(3))));
    }

    #[test]
    fn table_round_trip() {
        let c = Constellation::qam(16, 0.7).unwrap();
        let mut buf = Vec::new();
        c.write_table(&mut buf).unwrap();
        let back = Constellation::read_table(buf.as_slice()).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        assert!(Constellation::read_table("1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn infinite_snr_is_noiseless() {
        let x = draw_states(&Constellation::gaussian(), 100, &mut rng_for(2, &[])).unwrap();
        let f = awgn_channel(&x, f64::INFINITY, &mut rng_for(3, &[])).unwrap();
        assert_eq!(f.x, f.y);
        assert_eq!(f.sigma_z2, 0.0);
        assert!(awgn_channel(&x, 0.0, &mut rng_for(3, &[])).is_err());
    }

    #[test]
    fn static_fso_matches_awgn() {
        let x = draw_states(&Constellation::gaussian(), 1000, &mut rng_for(4, &[])).unwrap();
        let fso = FsoParams { scint_index: 0.0, pointing_jitter: f64::INFINITY, mean_transmittance: 1.0, coherence_len: 100 };
        let a = awgn_channel(&x, 0.5, &mut rng_for(5, &[])).unwrap();
        let b = fso_channel(&x, &fso, 0.5, &mut rng_for(5, &[])).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(b.transmittance, vec![1.0; 10]);
    }

    #[test]
    fn pointing_mean() {
        let fso = FsoParams { scint_index: 0.0, pointing_jitter: 123.8, mean_transmittance: 1.0, coherence_len: 2 };
        let mut rng = rng_for(6, &[]);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| fso.draw_transmittance(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 123.8 / 124.8).abs() < 2e-4, "{mean}");
    }

    #[test]
    fn transmittance_csv_schema() {
        let fso = FsoParams { scint_index: 0.01, pointing_jitter: 3.0, mean_transmittance: 0.5, coherence_len: 4 };
        let f = fso_channel(&[0.1; 10], &fso, 1.0, &mut rng_for(7, &[])).unwrap();
        let mut buf = Vec::new();
        f.write_transmittance_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "block,start,len,transmittance");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,8,2,"));
    }
}

//! Parameter estimation and secret-key-rate accounting.
//!
//! All rates are in bits per quadrature use; multiply by twice the symbol
//! rate for bits per second.
//!
//! Units follow the shot-noise convention (vacuum variance 1 per quadrature)
//! for heterodyne detection with trusted detector noise. Simulation data with
//! unit symbol energy map to SNU through a [`Calibration`]:
//! `x_snu = √(2V_A)·x` and `y_snu = √(η·V_A)·y`, so that
//! `y_snu = √(ηT/2)·x_snu + noise` with per-quadrature noise variance
//! `vacuum + v_el + ξ_Bob`. Here `ξ_Bob = ηTξ/2` is the excess noise seen at
//! Bob's detector and `ξ` the channel-referred excess noise.

use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SecrecyError {
    #[error("need at least {min} disclosed samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("disclosed sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("covariance matrix is not physical (symplectic eigenvalue {0} < 1)")]
    Unphysical(f64),
    #[error("FER table line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Smallest disclosed sample count accepted by [`estimate_block`].
pub const MIN_DISCLOSED: usize = 10_000;

/// Default worst-case confidence multiplier, in standard errors.
pub const DEFAULT_CONFIDENCE: f64 = 6.5;

/// Tolerance on symplectic eigenvalues below one.
const PHYSICAL_TOLERANCE: f64 = 1e-9;

/// Detector and modulation calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Modulation variance `V_A` per quadrature (SNU).
    pub v_mod: f64,
    /// Detector efficiency `η`.
    pub eta: f64,
    /// Electronic noise per quadrature (SNU).
    pub v_el: f64,
    /// Vacuum noise per quadrature; 1 in SNU, 0 for an idealised noiseless
    /// detector.
    pub vacuum: f64,
}

impl Calibration {
    pub fn heterodyne(v_mod: f64, eta: f64, v_el: f64) -> Self {
        Calibration { v_mod, eta, v_el, vacuum: 1.0 }
    }

    /// Ideal detector without shot or electronic noise.
    pub fn noiseless(v_mod: f64) -> Self {
        Calibration { v_mod, eta: 1.0, v_el: 0.0, vacuum: 0.0 }
    }

    pub fn validate(&self) -> Result<(), SecrecyError> {
        if !(self.v_mod > 0.0 && self.eta > 0.0 && self.eta <= 1.0 && self.v_el >= 0.0 && self.vacuum >= 0.0) {
            return Err(SecrecyError::Parameter(format!("calibration {self:?}")));
        }
        Ok(())
    }

    /// Maps simulation quadratures (unit symbol energy) to SNU.
    pub fn to_snu(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let sx = (2.0 * self.v_mod).sqrt();
        let sy = (self.eta * self.v_mod).sqrt();
        (x.iter().map(|v| v * sx).collect(), y.iter().map(|v| v * sy).collect())
    }

    /// Simulation noise variance `σ_z²` (two quadratures, unit symbol energy)
    /// that realises a Bob-referred excess noise `xi_bob`.
    pub fn sigma_z2_for(&self, xi_bob: f64) -> f64 {
        2.0 * (self.vacuum + self.v_el + xi_bob) / (self.eta * self.v_mod)
    }

    /// Signal-to-noise ratio `ηTV_A / (2(vacuum + v_el + ξ_Bob))`.
    pub fn snr(&self, t: f64, xi_bob: f64) -> f64 {
        self.eta * t * self.v_mod / (2.0 * (self.vacuum + self.v_el + xi_bob))
    }
}

/// Result of parameter estimation on one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEstimate {
    /// `I_AB` from the worst-case SNR.
    pub i_ab: f64,
    /// Holevo bound from the worst-case parameters; NaN when not physical.
    pub chi_be: f64,
    /// Point estimate of the SNR.
    pub snr_hat: f64,
    /// Point estimate of the transmittance.
    pub t_hat: f64,
    /// Point estimate of `ξ_Bob`.
    pub xi_hat: f64,
    /// Worst-case (lower) transmittance.
    pub t_worst: f64,
    /// Worst-case (upper) channel-referred excess noise.
    pub xi_worst: f64,
    pub block_size: usize,
    /// False when the worst-case transmittance is not positive or the state
    /// is unphysical.
    pub physical: bool,
}

/// Estimates channel parameters from disclosed SNU samples.
///
/// `g = Σxy/Σx²` estimates `√(ηT/2)`; the residual variance estimates
/// `vacuum + v_el + ξ_Bob`. Both are moved `confidence` standard errors
/// towards the pessimistic side before `I_AB` and `χ_BE` are evaluated.
pub fn estimate_block(x: &[f64], y: &[f64], cal: &Calibration, confidence: f64) -> Result<BlockEstimate, SecrecyError> {
    cal.validate()?;
    if x.len() != y.len() {
        return Err(SecrecyError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < MIN_DISCLOSED {
        return Err(SecrecyError::TooFewSamples { min: MIN_DISCLOSED, got: x.len() });
    }
    let m = x.len() as f64;
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let g = sxy / sxx;
    let resid: f64 = x.iter().zip(y).map(|(a, b)| (b - g * a).powi(2)).sum::<f64>() / (m - 1.0);

    let t_hat = 2.0 * g * g / cal.eta;
    let xi_hat = resid - cal.vacuum - cal.v_el;
    let snr_hat = g * g * cal.v_mod / resid;

    let g_low = g - confidence * (resid / sxx).sqrt();
    let resid_high = resid * (1.0 + confidence * (2.0 / (m - 1.0)).sqrt());
    let t_worst = if g_low > 0.0 { 2.0 * g_low * g_low / cal.eta } else { 0.0 };
    let xi_bob_worst = (resid_high - cal.vacuum - cal.v_el).max(0.0);
    let snr_worst = g_low.max(0.0).powi(2) * cal.v_mod / resid_high;
    let i_ab = mutual_info(snr_worst);

    let (chi_be, physical, xi_worst) = if t_worst > 0.0 {
        let xi = 2.0 * xi_bob_worst / (cal.eta * t_worst);
        match holevo_bound(t_worst.min(1.0), xi, cal.v_mod, cal.eta, cal.v_el) {
            Ok(chi) => (chi, true, xi),
            Err(_) => (f64::NAN, false, xi),
        }
    } else {
        (f64::NAN, false, f64::INFINITY)
    };
    Ok(BlockEstimate { i_ab, chi_be, snr_hat, t_hat, xi_hat, t_worst, xi_worst, block_size: x.len(), physical })
}

/// Gaussian-channel mutual information per real quadrature, `½·log2(1 + snr)`.
pub fn mutual_info(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

/// Von Neumann entropy of a thermal state with symplectic eigenvalue `nu`.
fn g_entropy(nu: f64) -> f64 {
    let x = 0.5 * (nu - 1.0);
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

fn checked_pair(a: f64, b: f64) -> Result<(f64, f64), SecrecyError> {
    let disc = (a * a - 4.0 * b).max(0.0).sqrt();
    let hi = (0.5 * (a + disc)).sqrt();
    let lo = (0.5 * (a - disc)).max(0.0).sqrt();
    if !(lo >= 1.0 - PHYSICAL_TOLERANCE) || !hi.is_finite() {
        return Err(SecrecyError::Unphysical(lo));
    }
    Ok((hi, lo))
}

/// Holevo bound `χ_BE` under collective attacks for reverse reconciliation
/// with heterodyne detection and trusted detector noise, per quadrature.
///
/// `t` is the channel transmittance, `xi` the channel-referred excess noise,
/// `v_mod` the modulation variance, `eta` the detector efficiency and `v_el`
/// the electronic noise per quadrature, all in SNU.
pub fn holevo_bound(t: f64, xi: f64, v_mod: f64, eta: f64, v_el: f64) -> Result<f64, SecrecyError> {
    if !(t > 0.0 && t <= 1.0 && xi >= 0.0 && v_mod > 0.0 && eta > 0.0 && eta <= 1.0 && v_el >= 0.0) {
        return Err(SecrecyError::Parameter(format!("t={t} xi={xi} v_mod={v_mod} eta={eta} v_el={v_el}")));
    }
    let v = v_mod + 1.0;
    let chi_line = 1.0 / t - 1.0 + xi;
    let chi_het = (2.0 - eta + 2.0 * v_el) / eta;
    let chi_tot = chi_line + chi_het / t;

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = (t * (v * chi_line + 1.0)).powi(2);
    let (l1, l2) = checked_pair(a, b)?;

    let denom = (t * (v + chi_tot)).powi(2);
    let c = (a * chi_het * chi_het
        + b
        + 1.0
        + 2.0 * chi_het * (v * b.sqrt() + t * (v + chi_line))
        + 2.0 * t * (v * v - 1.0))
        / denom;
    let d = (v + b.sqrt() * chi_het).powi(2) / denom;
    let (l3, l4) = checked_pair(c, d)?;

    let chi = g_entropy(l1) + g_entropy(l2) - g_entropy(l3) - g_entropy(l4);
    Ok(0.5 * chi.max(0.0))
}

/// `Δ = 7·√(log2(2/ε)/N_privacy)`.
pub fn finite_size_delta(epsilon: f64, n_privacy: f64) -> f64 {
    7.0 * ((2.0 / epsilon).log2() / n_privacy).sqrt()
}

/// One measured point of the efficiency/FER trade-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerPoint {
    pub beta: f64,
    pub fer: f64,
    pub frames: u64,
    pub errors: u64,
}

/// FER as a function of reconciliation efficiency for one code, dimension
/// and modulation. `β` strictly increases and FER never decreases.
#[derive(Debug, Clone, PartialEq)]
pub struct FerTable {
    points: Vec<FerPoint>,
}

impl FerTable {
    pub fn new(points: Vec<FerPoint>) -> Result<Self, SecrecyError> {
        if points.is_empty() {
            return Err(SecrecyError::Parameter("FER table is empty".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.beta > 0.0 && (0.0..=1.0).contains(&p.fer)) {
                return Err(SecrecyError::Table { line: i + 2, msg: format!("invalid point {p:?}") });
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].beta <= w[0].beta {
                return Err(SecrecyError::Table { line: i + 3, msg: "beta must strictly increase".into() });
            }
            if w[1].fer < w[0].fer {
                return Err(SecrecyError::Table { line: i + 3, msg: "FER must not decrease with beta".into() });
            }
        }
        Ok(FerTable { points })
    }

    /// Builds a table from raw measurements, replacing each FER by the
    /// running maximum so the result is monotone (a conservative envelope).
    pub fn monotone_envelope(mut points: Vec<FerPoint>) -> Result<Self, SecrecyError> {
        let mut running: f64 = 0.0;
        for p in points.iter_mut() {
            running = running.max(p.fer);
            p.fer = running;
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[FerPoint] {
        &self.points
    }

    /// The point measured at exactly `beta`.
    pub fn at(&self, beta: f64) -> Option<&FerPoint> {
        self.points.iter().find(|p| p.beta == beta)
    }

    /// Writes the `beta,fer,frames,errors` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), SecrecyError> {
        writeln!(out, "beta,fer,frames,errors")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.beta, p.fer, p.frames, p.errors)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, SecrecyError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "beta,fer,frames,errors" {
            return Err(SecrecyError::Table { line: 1, msg: format!("unexpected header {header:?}") });
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| SecrecyError::Table { line: i + 2, msg };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad(e.to_string()));
            points.push(FerPoint { beta: num(f[0])?, fer: num(f[1])?, frames: int(f[2])?, errors: int(f[3])? });
        }
        Self::new(points)
    }
}

/// Range of code rates reachable by puncturing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRange {
    pub min: f64,
    pub max: f64,
}

impl RateRange {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkrParams {
    pub epsilon: f64,
    pub n_privacy: f64,
    pub fer_table: FerTable,
}

impl SkrParams {
    pub fn validate(&self) -> Result<(), SecrecyError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 && self.n_privacy > 0.0) {
            return Err(SecrecyError::Parameter(format!("epsilon={} n_privacy={}", self.epsilon, self.n_privacy)));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        finite_size_delta(self.epsilon, self.n_privacy)
    }
}

/// Key-rate outcome for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkrReport {
    /// Chosen efficiency; NaN when no table entry is achievable.
    pub beta: f64,
    pub fer: f64,
    pub iab: f64,
    pub chibe: f64,
    pub delta: f64,
    /// `(1 − FER)(β·I_AB − χ_BE − Δ)` in bits per quadrature use.
    pub skr: f64,
    pub feasible: bool,
}

impl SkrReport {
    /// Key rate in bits per second at `symbol_rate` symbols per second.
    pub fn bits_per_second(&self, symbol_rate: f64) -> f64 {
        2.0 * symbol_rate * self.skr
    }

    /// Report for a block where no code rate is usable: nothing is
    /// reconciled, so no key is produced.
    fn unreachable(est: &BlockEstimate, delta: f64) -> Self {
        SkrReport { beta: f64::NAN, fer: 1.0, iab: est.i_ab, chibe: est.chi_be, delta, skr: 0.0, feasible: false }
    }
}

/// `(1 − fer)(β·I_AB − χ_BE − Δ)`.
pub fn skr(fer: f64, beta: f64, est: &BlockEstimate, delta: f64) -> SkrReport {
    let value = if fer >= 1.0 { 0.0 } else { (1.0 - fer) * (beta * est.i_ab - est.chi_be - delta) };
    SkrReport { beta, fer, iab: est.i_ab, chibe: est.chi_be, delta, skr: value, feasible: value > 0.0 }
}

fn achievable(est: &BlockEstimate, beta: f64, rates: RateRange) -> bool {
    est.physical && rates.contains(beta * est.i_ab)
}

/// Best table entry for this block among those whose rate `β·I_AB` lies in
/// `rates`. When no entry gives a positive rate the best (non-positive) one
/// is returned with `feasible = false`.
pub fn optimize_beta(est: &BlockEstimate, params: &SkrParams, rates: RateRange) -> SkrReport {
    let delta = params.delta();
    params
        .fer_table
        .points()
        .iter()
        .filter(|p| achievable(est, p.beta, rates))
        .map(|p| skr(p.fer, p.beta, est, delta))
        .max_by(|a, b| a.skr.total_cmp(&b.skr))
        .unwrap_or_else(|| SkrReport::unreachable(est, delta))
}

/// Report for a fixed efficiency taken from the table.
pub fn fixed_beta(est: &BlockEstimate, params: &SkrParams, beta: f64, rates: RateRange) -> Result<SkrReport, SecrecyError> {
    let point = params
        .fer_table
        .at(beta)
        .ok_or_else(|| SecrecyError::Parameter(format!("beta {beta} is not a table entry")))?;
    let delta = params.delta();
    if !achievable(est, beta, rates) {
        return Ok(SkrReport::unreachable(est, delta));
    }
    Ok(skr(point.fer, beta, est, delta))
}

/// Writes `block,beta,fer,iab,chibe,delta,skr,feasible` rows.
pub fn write_reports_csv<W: Write>(reports: &[SkrReport], mut out: W) -> Result<(), SecrecyError> {
    writeln!(out, "block,beta,fer,iab,chibe,delta,skr,feasible")?;
    for (i, r) in reports.iter().enumerate() {
        writeln!(out, "{i},{},{},{},{},{},{},{}", r.beta, r.fer, r.iab, r.chibe, r.delta, r.skr, r.feasible)?;
    }
    Ok(())
}

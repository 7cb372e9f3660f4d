//! Normality diagnostics of the virtual channel noise.
//!
//! Bob maps BPSK symbols through his measurements; the normalised noise
//! `n_j = r_j/A_j − u_j` Alice sees is collected per dimension and compared
//! with a fitted normal law. Symbols are all `+1` (the all-zero codeword)
//! unless `all_zero` is off.
//!
//! In matrix mode the mapping is built from `y = x + z`, so `n` carries a
//! component along `u`: for Gaussian states `E[u·n] = −1/(1 + snr)`. With
//! the all-zero codeword this is a constant shift; with random symbols `n`
//! becomes a two-point mixture. The residual `n − E[u·n]·u` is the noise of
//! the virtual BI-AWGN channel at its actual gain and is reported alongside.
//! Algebra mode has unit gain by construction, so no correction is applied
//! there.

use std::io::Write;

use cvqkd_core::codes::{CrcTag, PuncturePlan};
use cvqkd_core::modem::{awgn_channel, draw_states};
use cvqkd_core::pipeline::{frame_seed, Stream};
use cvqkd_core::recon::{bob_encode, virtual_noise, QPolicy, ReconConfig, ReconMode};
use cvqkd_core::rng::derive_seed;
use rand::Rng;
use rayon::prelude::*;

use crate::stats::{excess_kurtosis, histogram, ks_to_fitted_normal, mean_var};
use crate::sweep::Workers;
use crate::{HarnessError, Modulation};

/// Smallest sample count accepted per dimension.
pub const MIN_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub ds: Vec<usize>,
    pub modulation: Modulation,
    pub snr: f64,
    /// Samples per dimension.
    pub samples: usize,
    /// Quadratures per simulated frame.
    pub frame_len: usize,
    pub q_policy: QPolicy,
    /// Send the all-zero codeword instead of random symbols.
    pub all_zero: bool,
    /// Histogram of the standardised noise over `[−range, range)`.
    pub bins: usize,
    pub range: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(ds: Vec<usize>, modulation: Modulation, snr: f64, samples: usize, seed: u64) -> Self {
        NoiseSpec { ds, modulation, snr, samples, frame_len: 8192, q_policy: QPolicy::FreshPerBlock, all_zero: true, bins: 120, range: 6.0, seed }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples < MIN_SAMPLES {
            return Err(HarnessError::Config(format!("need at least {MIN_SAMPLES} samples, got {}", self.samples)));
        }
        if !(self.snr > 0.0) || self.frame_len == 0 || self.bins == 0 || !(self.range > 0.0) || self.ds.is_empty() {
            return Err(HarnessError::Config(format!("invalid noise specification {self:?}")));
        }
        for &d in &self.ds {
            ReconConfig::natural(d).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Shape of a noise sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub variance: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov-Smirnov distance to the normal law with the sample mean
    /// and variance.
    pub ks: f64,
}

impl Shape {
    fn of(values: &[f64]) -> Self {
        Shape { variance: mean_var(values).1, excess_kurtosis: excess_kurtosis(values), ks: ks_to_fitted_normal(values) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    pub d: usize,
    pub samples: usize,
    pub mean: f64,
    /// The normalised noise `n`.
    pub noise: Shape,
    /// `E[u·n]`; zero in algebra mode.
    pub symbol_bias: f64,
    /// `n − symbol_bias·u`.
    pub residual: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub stats: Vec<NoiseStats>,
    /// `(d, bin centre, density)` of the standardised noise.
    pub histogram: Vec<(usize, f64, f64)>,
}

impl NoiseReport {
    pub fn for_d(&self, d: usize) -> Option<&NoiseStats> {
        self.stats.iter().find(|s| s.d == d)
    }

    pub fn write_stats_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "d,samples,mean,variance,excess_kurtosis,ks,symbol_bias,residual_variance,residual_excess_kurtosis,residual_ks")?;
        for s in &self.stats {
            let (n, r) = (&s.noise, &s.residual);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.d, s.samples, s.mean, n.variance, n.excess_kurtosis, n.ks, s.symbol_bias, r.variance, r.excess_kurtosis, r.ks
            )?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "d,bin_centre,density")?;
        for (d, c, p) in &self.histogram {
            writeln!(out, "{d},{c},{p}")?;
        }
        Ok(())
    }
}

/// Virtual noise of one frame with the BPSK symbols it was measured on.
/// Normalised noise values of one frame with the symbols they carried.
type FrameNoise = (Vec<f64>, Vec<i8>);

fn frame_noise(spec: &NoiseSpec, cfg: &ReconConfig, len: usize, seed: u64) -> Result<FrameNoise, HarnessError> {
    let x = draw_states(spec.modulation.constellation(), len, &mut Stream::States.rng(seed))?;
    let y = awgn_channel(&x, spec.snr, &mut Stream::Noise.rng(seed))?.y;
    let u: Vec<i8> = if spec.all_zero {
        vec![1; len]
    } else {
        let mut bits = Stream::Info.rng(seed);
        (0..len).map(|_| if bits.random::<bool>() { 1 } else { -1 }).collect()
    };
    let plan = PuncturePlan::none(len);
    let payload = bob_encode(&u, &y, &plan, cfg, CrcTag(0), &mut Stream::Mapping.rng(seed))?;
    Ok((virtual_noise(&x, &y, &u, &payload, cfg)?.values, u))
}

/// Noise statistics and histograms for every dimension in `spec.ds`.
pub fn noise_histogram(spec: &NoiseSpec, workers: &Workers) -> Result<NoiseReport, HarnessError> {
    spec.validate()?;
    let mut report = NoiseReport { stats: Vec::new(), histogram: Vec::new() };
    for &d in &spec.ds {
        let cfg = ReconConfig::natural(d).map_err(|e| HarnessError::Config(e.to_string()))?.with_q_policy(spec.q_policy);
        // whole blocks per frame keep the tail rule out of the statistics
        let len = (spec.frame_len / d).max(1) * d;
        let frames = spec.samples.div_ceil(len) as u64;
        let base = derive_seed(spec.seed, &[d as u64]);
        let chunks: Vec<Result<FrameNoise, HarnessError>> = workers.install(|| {
            (0..frames).into_par_iter().map(|f| frame_noise(spec, &cfg, len, frame_seed(base, f))).collect()
        });
        let mut values = Vec::with_capacity(frames as usize * len);
        let mut symbols = Vec::with_capacity(frames as usize * len);
        for c in chunks {
            let (v, u) = c?;
            values.extend(v);
            symbols.extend(u.into_iter().map(f64::from));
        }
        values.truncate(spec.samples);
        symbols.truncate(spec.samples);

        let (mean, variance) = mean_var(&values);
        let sd = variance.sqrt();
        let standard: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
        report.histogram.extend(histogram(&standard, -spec.range, spec.range, spec.bins).into_iter().map(|(c, p)| (d, c, p)));
        let symbol_bias = match cfg.mode {
            ReconMode::Algebra => 0.0,
            ReconMode::Matrix => values.iter().zip(&symbols).map(|(n, u)| n * u).sum::<f64>() / values.len() as f64,
        };
        let residual: Vec<f64> = values.iter().zip(&symbols).map(|(n, u)| n - symbol_bias * u).collect();
        report.stats.push(NoiseStats {
            d,
            samples: values.len(),
            mean,
            noise: Shape::of(&values),
            symbol_bias,
            residual: Shape::of(&residual),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_noise_is_gaussian_for_every_d() {
        // with constant-modulus states every division is an isometry
        let spec = NoiseSpec::new(vec![1, 4], Modulation::qpsk(), 1.0, MIN_SAMPLES, 3);
        let report = noise_histogram(&spec, &Workers::new(1).unwrap()).unwrap();
        for s in &report.stats {
            assert!(s.noise.ks < 0.01 && s.noise.excess_kurtosis.abs() < 0.1, "{s:?}");
            // |u|²/|x|² = 2 doubles the per-quadrature variance σ_z²/2 to 1/snr
            assert!((s.noise.variance - 1.0).abs() < 0.02, "{s:?}");
            assert_eq!(s.residual, s.noise);
        }
        assert_eq!(report.histogram.len(), 2 * spec.bins);
    }

    #[test]
    fn matrix_mode_noise_splits_into_bias_and_gaussian_residual() {
        // conditioning on y: n = −u/(1+snr) + Gaussian of variance snr/(1+snr)²
        let snr = 0.5;
        let spec = NoiseSpec { all_zero: false, ..NoiseSpec::new(vec![128], Modulation::gaussian(), snr, MIN_SAMPLES, 9) };
        let s = *noise_histogram(&spec, &Workers::new(1).unwrap()).unwrap().for_d(128).unwrap();
        assert!((s.symbol_bias + 1.0 / (1.0 + snr)).abs() < 0.01, "{s:?}");
        assert!((s.noise.variance - 1.0 / (1.0 + snr)).abs() < 0.01, "{s:?}");
        assert!((s.residual.variance - snr / (1.0 + snr).powi(2)).abs() < 0.01, "{s:?}");
        assert!(s.noise.excess_kurtosis < -0.5, "{s:?}");
        assert!(s.residual.excess_kurtosis.abs() < 0.1 && s.residual.ks < 0.01, "{s:?}");

        // the all-zero codeword turns the mixture into a shift
        let zero = NoiseSpec { all_zero: true, ..spec };
        let z = *noise_histogram(&zero, &Workers::new(1).unwrap()).unwrap().for_d(128).unwrap();
        assert!((z.mean + 1.0 / (1.0 + snr)).abs() < 0.01, "{z:?}");
        assert!(z.noise.excess_kurtosis.abs() < 0.1 && z.noise.ks < 0.01, "{z:?}");
    }

    #[test]
    fn rejects_small_runs() {
        let spec = NoiseSpec::new(vec![1], Modulation::gaussian(), 0.3, 10, 0);
        assert!(matches!(noise_histogram(&spec, &Workers::new(1).unwrap()), Err(HarnessError::Config(_))));
    }
}

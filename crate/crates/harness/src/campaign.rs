//! Per-block key rates over a fading free-space link.
//!
//! Each block holds one transmittance draw for all of its `N_p` symbols.
//! Bob estimates the channel from the block in shot-noise units, then two
//! arms are scored against the same FER table: a fixed efficiency and the
//! per-block optimum. Optionally a few frames are decoded at the optimised
//! rate to check the table against the realised FER.
//!
//! The mean key rate counts blocks without key as zero; infeasible blocks
//! are counted and listed, and their raw (non-positive) rates stay in the
//! report.

use std::io::Write;

use cvqkd_core::codes::{Decoder, DecoderKind, QcCode};
use cvqkd_core::modem::{awgn_channel, draw_states, Constellation, FsoParams};
use cvqkd_core::pipeline::{ChannelModel, FrameRunner, FrameSpec, PunctureSpec};
use cvqkd_core::recon::{QPolicy, ReconConfig};
use cvqkd_core::rng::{derive_seed, rng_for};
use cvqkd_core::secrecy::{
    estimate_block, fixed_beta, optimize_beta, BlockEstimate, Calibration, FerPoint, FerTable, RateRange, SkrParams, SkrReport,
};
use rayon::prelude::*;

use crate::sweep::{Bench, CellTemplate, Workers};
use crate::{HarnessError, Modulation};

/// Symbols generated per step while filling a block.
const CHUNK: usize = 1 << 16;

/// Frames decoded per block to measure the realised FER.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeCheck {
    pub frames_per_block: usize,
    pub d: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    /// Turbulence; `coherence_len` is ignored, one draw covers a block.
    pub fso: FsoParams,
    pub blocks: usize,
    /// Symbols `N_p` per block used for estimation.
    pub block_symbols: usize,
    pub calibration: Calibration,
    /// Excess noise at Bob's detector (SNU).
    pub xi_bob: f64,
    /// Worst-case margin in standard errors.
    pub confidence: f64,
    pub skr: SkrParams,
    /// Efficiency of the baseline arm; must be a table entry.
    pub fixed_beta: f64,
    pub rates: RateRange,
    pub decode: Option<DecodeCheck>,
    pub seed: u64,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if self.blocks == 0 {
            return cfg("blocks must be at least 1".into());
        }
        // coherence length plays no role here
        FsoParams { coherence_len: 2, ..self.fso }.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.calibration.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.skr.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.skr.fer_table.at(self.fixed_beta).is_none() {
            return cfg(format!("fixed beta {} is not in the FER table", self.fixed_beta));
        }
        if !(self.xi_bob >= 0.0 && self.confidence >= 0.0 && self.rates.min > 0.0 && self.rates.min <= self.rates.max && self.rates.max < 1.0) {
            return cfg(format!("invalid noise, confidence or rate range in {self:?}"));
        }
        Ok(())
    }
}

/// Outcome of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub block: usize,
    pub transmittance: f64,
    /// True SNR of the block (before estimation).
    pub snr: f64,
    pub estimate: BlockEstimate,
    pub fixed: SkrReport,
    pub optimized: SkrReport,
    pub decoded_frames: u64,
    pub decoded_errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignSummary {
    pub blocks: usize,
    /// Mean over blocks of `max(skr, 0)`.
    pub mean_skr_fixed: f64,
    pub mean_skr_optimized: f64,
    /// `mean_optimized / mean_fixed − 1`; infinite when the fixed arm yields
    /// no key at all.
    pub gain: f64,
    pub infeasible_fixed: usize,
    pub infeasible_optimized: usize,
    /// Realised FER over all decoded frames; NaN without a decode check.
    pub realised_fer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub blocks: Vec<BlockReport>,
    pub summary: CampaignSummary,
}

impl CampaignReport {
    /// Blocks where the optimised arm produces no key.
    pub fn infeasible_blocks(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| !b.optimized.feasible).map(|b| b.block).collect()
    }

    pub fn write_blocks_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "block,transmittance,snr,t_hat,xi_hat,iab,chibe,fixed_beta,fixed_fer,fixed_skr,fixed_feasible,opt_beta,opt_fer,opt_skr,opt_feasible,decoded_frames,decoded_errors"
        )?;
        for b in &self.blocks {
            let (e, f, o) = (&b.estimate, &b.fixed, &b.optimized);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                b.block, b.transmittance, b.snr, e.t_hat, e.xi_hat, e.i_ab, e.chi_be, f.beta, f.fer, f.skr, f.feasible, o.beta, o.fer, o.skr,
                o.feasible, b.decoded_frames, b.decoded_errors
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let s = &self.summary;
        writeln!(out, "blocks,mean_skr_fixed,mean_skr_optimized,gain,infeasible_fixed,infeasible_optimized,realised_fer")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.blocks, s.mean_skr_fixed, s.mean_skr_optimized, s.gain, s.infeasible_fixed, s.infeasible_optimized, s.realised_fer
        )
    }
}

/// Disclosed block in SNU, generated chunk by chunk to bound memory.
fn simulate_block(spec: &CampaignSpec, t: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let gaussian = Constellation::gaussian();
    let snr_unit_gain = 1.0 / spec.calibration.sigma_z2_for(spec.xi_bob);
    let gain = t.sqrt();
    let (mut xs, mut ys) = (Vec::with_capacity(spec.block_symbols), Vec::with_capacity(spec.block_symbols));
    let mut done = 0;
    for c in 0.. {
        if done >= spec.block_symbols {
            break;
        }
        let len = CHUNK.min(spec.block_symbols - done);
        let x = draw_states(&gaussian, len + len % 2, &mut rng_for(seed, &[c, 0]))?;
        let x = &x[..len];
        // y = √T·x + z: fading scales the signal, never the detector noise
        let faded: Vec<f64> = x.iter().map(|v| gain * v).collect();
        let y = awgn_channel(&faded, snr_unit_gain, &mut rng_for(seed, &[c, 1]))?.y;
        let (xs_c, ys_c) = spec.calibration.to_snu(x, &y);
        xs.extend(xs_c);
        ys.extend(ys_c);
        done += len;
    }
    Ok((xs, ys))
}

fn run_block(spec: &CampaignSpec, bench: Option<&Bench<'_>>, block: usize) -> Result<BlockReport, HarnessError> {
    let seed = derive_seed(spec.seed, &[block as u64]);
    let t = if spec.fso.is_static() { spec.fso.mean_transmittance } else { spec.fso.draw_transmittance(&mut rng_for(seed, &[0])) };
    let snr = spec.calibration.snr(t, spec.xi_bob);
    let (x, y) = simulate_block(spec, t, derive_seed(seed, &[1]))?;
    let estimate = estimate_block(&x, &y, &spec.calibration, spec.confidence)?;
    drop((x, y));
    let optimized = optimize_beta(&estimate, &spec.skr, spec.rates);
    let fixed = fixed_beta(&estimate, &spec.skr, spec.fixed_beta, spec.rates)?;

    let (mut decoded_frames, mut decoded_errors) = (0, 0);
    if let (Some(check), Some(bench), true) = (&spec.decode, bench, optimized.beta.is_finite()) {
        let frame = FrameSpec {
            constellation: Constellation::gaussian(),
            recon: ReconConfig::natural(check.d).map_err(|e| HarnessError::Config(e.to_string()))?.with_q_policy(QPolicy::OnePerCodeword),
            puncture: PunctureSpec::Random { target_rate: optimized.beta * estimate.i_ab },
            channel: ChannelModel::Awgn { snr },
            all_zero: false,
            max_iter: check.max_iter,
        };
        let runner = FrameRunner::new(bench.code, bench.decoder.clone(), frame)?;
        for f in 0..check.frames_per_block {
            decoded_frames += 1;
            if runner.run(derive_seed(seed, &[2, f as u64]))?.is_error() {
                decoded_errors += 1;
            }
        }
    }
    Ok(BlockReport { block, transmittance: t, snr, estimate, fixed, optimized, decoded_frames, decoded_errors })
}

/// Runs every block and summarises both arms.
pub fn fso_campaign(spec: &CampaignSpec, code: Option<&QcCode>, workers: &Workers) -> Result<CampaignReport, HarnessError> {
    spec.validate()?;
    if spec.decode.is_some() && code.is_none() {
        return Err(HarnessError::Config("a decode check needs a code".into()));
    }
    let bench = code.map(|c| Bench { code: c, decoder: Decoder::new(c.parity(), DecoderKind::SumProduct) });
    let results: Vec<Result<BlockReport, HarnessError>> =
        workers.install(|| (0..spec.blocks).into_par_iter().map(|b| run_block(spec, bench.as_ref(), b)).collect());
    let blocks = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mean = |f: &dyn Fn(&BlockReport) -> f64| blocks.iter().map(|b| f(b).max(0.0)).sum::<f64>() / blocks.len() as f64;
    let mean_skr_fixed = mean(&|b| b.fixed.skr);
    let mean_skr_optimized = mean(&|b| b.optimized.skr);
    let gain = if mean_skr_fixed > 0.0 {
        mean_skr_optimized / mean_skr_fixed - 1.0
    } else if mean_skr_optimized > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let frames: u64 = blocks.iter().map(|b| b.decoded_frames).sum();
    let errors: u64 = blocks.iter().map(|b| b.decoded_errors).sum();
    let summary = CampaignSummary {
        blocks: blocks.len(),
        mean_skr_fixed,
        mean_skr_optimized,
        gain,
        infeasible_fixed: blocks.iter().filter(|b| !b.fixed.feasible).count(),
        infeasible_optimized: blocks.iter().filter(|b| !b.optimized.feasible).count(),
        realised_fer: if frames == 0 { f64::NAN } else { errors as f64 / frames as f64 },
    };
    Ok(CampaignReport { blocks, summary })
}

/// FER table for one code, dimension and modulation at a fixed rate,
/// replaced by its running maximum so that it is monotone.
pub fn gen_fer_table(
    bench: &Bench<'_>,
    workers: &Workers,
    template: &CellTemplate,
    d: usize,
    modulation: &Modulation,
    betas: &[f64],
    seed: u64,
) -> Result<FerTable, HarnessError> {
    let mut points = Vec::new();
    for &beta in betas {
        let row = bench.run(workers, template, d, modulation, beta, seed)?;
        if row.skipped {
            return Err(HarnessError::Config(format!("rate {:?} is not reachable with this code", template.rate)));
        }
        points.push(FerPoint { beta, fer: row.fer, frames: row.frames, errors: row.errors });
    }
    Ok(FerTable::monotone_envelope(points)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvqkd_core::secrecy::DEFAULT_CONFIDENCE;

    fn table() -> FerTable {
        let p = |beta: f64, fer: f64| FerPoint { beta, fer, frames: 1000, errors: (fer * 1000.0) as u64 };
        FerTable::new(vec![p(0.80, 0.0), p(0.85, 0.01), p(0.90, 0.05), p(0.93, 0.2), p(0.96, 0.6)]).unwrap()
    }

    fn spec(fso: FsoParams, blocks: usize) -> CampaignSpec {
        CampaignSpec {
            fso,
            blocks,
            block_symbols: 200_000,
            calibration: Calibration::heterodyne(7.44, 0.4, 0.1),
            xi_bob: 0.002,
            confidence: DEFAULT_CONFIDENCE,
            skr: SkrParams { epsilon: 1e-10, n_privacy: 6.8e6, fer_table: table() },
            fixed_beta: 0.90,
            rates: RateRange { min: 0.05, max: 0.6 },
            decode: None,
            seed: 5,
        }
    }

    fn fso(scint_index: f64, pointing_jitter: f64) -> FsoParams {
        FsoParams { scint_index, pointing_jitter, mean_transmittance: 0.41, coherence_len: 1 }
    }

    #[test]
    fn optimized_arm_never_loses() {
        let report = fso_campaign(&spec(fso(0.009, 8.6), 12), None, &Workers::new(1).unwrap()).unwrap();
        for b in &report.blocks {
            assert!(b.optimized.skr >= b.fixed.skr - 1e-15, "{b:?}");
        }
        assert!(report.summary.mean_skr_optimized >= report.summary.mean_skr_fixed);
        assert!(report.summary.realised_fer.is_nan());
    }

    #[test]
    fn static_link_blocks_agree() {
        let report = fso_campaign(&spec(fso(0.0, f64::INFINITY), 3), None, &Workers::new(1).unwrap()).unwrap();
        assert!(report.blocks.iter().all(|b| b.transmittance == 0.41));
        let t: Vec<f64> = report.blocks.iter().map(|b| b.estimate.t_hat).collect();
        assert!(t.iter().all(|v| (v - 0.41).abs() < 0.01), "{t:?}");
        let s = spec(fso(0.0, f64::INFINITY), 1);
        let snr = s.calibration.snr(0.41, s.xi_bob);
        for b in &report.blocks {
            assert!((b.snr - snr).abs() < 1e-12);
            assert!((b.estimate.snr_hat / snr - 1.0).abs() < 0.02, "{b:?}");
            // residual standard error is about 1.1·√(2/2e5) ≈ 0.0035
            assert!((b.estimate.xi_hat - s.xi_bob).abs() < 0.02, "{b:?}");
        }
    }

    #[test]
    fn fixed_beta_must_be_tabulated() {
        let mut s = spec(fso(0.0, f64::INFINITY), 1);
        s.fixed_beta = 0.91;
        assert!(matches!(fso_campaign(&s, None, &Workers::new(1).unwrap()), Err(HarnessError::Config(_))));
    }
}

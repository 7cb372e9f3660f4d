//! FER sweeps and efficiency read-offs.
//!
//! A cell is one `(d, modulation, β)` point at a fixed code rate. The channel
//! SNR of a cell follows from inverting `β = R/(½·log2(1 + snr))` at the
//! realised rate `R = K/(N − p)`. Frames run in parallel chunks, but results
//! are consumed in frame order and the stop rule is applied at the exact
//! frame where it fires, so a cell's counts never depend on the number of
//! workers.

use std::io::Write;

use cvqkd_core::codes::{puncture_count, Decoder, DecoderKind, QcCode, SetPattern};
use cvqkd_core::pipeline::{frame_seed, snr_for_beta, ChannelModel, FrameRunner, FrameSpec, PunctureSpec, DEFAULT_MAX_ITER};
use cvqkd_core::recon::{QPolicy, ReconConfig};
use cvqkd_core::rng::derive_seed;
use cvqkd_core::secrecy::mutual_info;
use rayon::prelude::*;

use crate::stats::clopper_pearson;
use crate::{HarnessError, Modulation};

/// FER at which efficiencies are read off.
pub const TARGET_FER: f64 = 0.1;

/// Stop a cell once `min_errors` frame errors or `max_frames` frames have
/// been seen, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_frames: u64,
}

impl StopRule {
    /// Desk-scale default.
    pub const DESK: StopRule = StopRule { min_errors: 50, max_frames: 20_000 };

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.min_errors == 0 || self.max_frames == 0 {
            return Err(HarnessError::Config(format!("stop rule {self:?} needs min_errors and max_frames of at least 1")));
        }
        Ok(())
    }

    fn done(&self, c: &CellCount) -> bool {
        c.errors >= self.min_errors || c.frames >= self.max_frames
    }
}

/// Thread pool running the frames of a cell.
#[derive(Debug)]
pub struct Workers {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl Workers {
    pub fn new(threads: usize) -> Result<Self, HarnessError> {
        let threads = threads.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;
        Ok(Workers { pool, threads })
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Runs `op` inside the pool.
    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }

    /// Frames evaluated per parallel step. Only affects wasted work past the
    /// stopping frame, never the result.
    fn chunk(&self) -> u64 {
        if self.threads == 1 {
            1
        } else {
            2 * self.threads as u64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCount {
    pub frames: u64,
    pub errors: u64,
}

impl CellCount {
    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.errors as f64 / self.frames as f64
    }

    /// Two-sided 95% Clopper-Pearson interval.
    pub fn interval(&self) -> (f64, f64) {
        clopper_pearson(self.errors, self.frames, 0.05)
    }
}

/// Runs frames `0, 1, …` of a cell until `rule` fires. `trial` maps a frame
/// seed to "frame failed".
pub fn run_cell<F>(workers: &Workers, cell_seed: u64, rule: StopRule, trial: F) -> Result<CellCount, HarnessError>
where
    F: Fn(u64) -> Result<bool, HarnessError> + Sync,
{
    rule.validate()?;
    let mut count = CellCount::default();
    let mut next = 0u64;
    while !rule.done(&count) {
        let end = (next + workers.chunk()).min(rule.max_frames);
        let outcomes: Vec<Result<bool, HarnessError>> =
            workers.pool.install(|| (next..end).into_par_iter().map(|i| trial(frame_seed(cell_seed, i))).collect());
        for failed in outcomes {
            count.frames += 1;
            if failed? {
                count.errors += 1;
            }
            if rule.done(&count) {
                break;
            }
        }
        next = end;
    }
    Ok(count)
}

/// How punctured positions are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PunctureStyle {
    Random,
    Pattern(SetPattern),
}

/// Settings shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTemplate {
    /// Target code rate; `None` runs the mother code.
    pub rate: Option<f64>,
    pub puncture: PunctureStyle,
    pub all_zero: bool,
    pub q_policy: QPolicy,
    pub max_iter: usize,
    pub stop: StopRule,
}

impl Default for CellTemplate {
    fn default() -> Self {
        CellTemplate {
            rate: None,
            puncture: PunctureStyle::Random,
            all_zero: true,
            q_policy: QPolicy::OnePerCodeword,
            max_iter: DEFAULT_MAX_ITER,
            stop: StopRule::DESK,
        }
    }
}

/// One row of a FER table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub modulation: String,
    pub beta: f64,
    /// Realised rate `K/(N − p)`; NaN when skipped.
    pub rate: f64,
    pub snr: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The requested rate is not reachable with this code.
    pub skipped: bool,
}

impl SweepRow {
    pub fn count(&self) -> CellCount {
        CellCount { frames: self.frames, errors: self.errors }
    }
}

pub const SWEEP_HEADER: &str = "d,modulation,beta,rate,snr,frames,errors,fer,ci_low,ci_high,skipped";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.d, r.modulation, r.beta, r.rate, r.snr, r.frames, r.errors, r.fer, r.ci_low, r.ci_high, r.skipped
        )?;
    }
    Ok(())
}

/// A code with the decoder used for every cell.
#[derive(Debug, Clone)]
pub struct Bench<'a> {
    pub code: &'a QcCode,
    pub decoder: Decoder,
}

impl<'a> Bench<'a> {
    pub fn sum_product(code: &'a QcCode) -> Self {
        Bench { code, decoder: Decoder::new(code.parity(), DecoderKind::SumProduct) }
    }

    /// Realised rate for `target`, or `None` when puncturing cannot reach it.
    pub fn realised_rate(&self, target: Option<f64>) -> Option<f64> {
        let (n, k) = (self.code.n(), self.code.k());
        match target {
            None => Some(self.code.base_rate()),
            Some(t) => puncture_count(n, self.code.base_rate(), t).ok().filter(|&p| p < n - k).map(|p| k as f64 / (n - p) as f64),
        }
    }

    fn frame_spec(&self, tmpl: &CellTemplate, d: usize, modulation: &Modulation, snr: f64) -> Result<FrameSpec, HarnessError> {
        let recon = ReconConfig::natural(d)
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .with_q_policy(tmpl.q_policy);
        let puncture = match (tmpl.rate, &tmpl.puncture) {
            (None, _) => PunctureSpec::None,
            (Some(target_rate), PunctureStyle::Random) => PunctureSpec::Random { target_rate },
            (Some(target_rate), PunctureStyle::Pattern(p)) => PunctureSpec::Pattern { target_rate, pattern: p.clone() },
        };
        Ok(FrameSpec {
            constellation: modulation.constellation().clone(),
            recon,
            puncture,
            channel: ChannelModel::Awgn { snr },
            all_zero: tmpl.all_zero,
            max_iter: tmpl.max_iter,
        })
    }

    /// Runs one cell. Rows whose rate is unreachable come back skipped.
    pub fn run(
        &self,
        workers: &Workers,
        tmpl: &CellTemplate,
        d: usize,
        modulation: &Modulation,
        beta: f64,
        seed: u64,
    ) -> Result<SweepRow, HarnessError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(HarnessError::Config(format!("beta {beta} must be positive")));
        }
        let mut row = SweepRow {
            d,
            modulation: modulation.label().to_string(),
            beta,
            rate: f64::NAN,
            snr: f64::NAN,
            frames: 0,
            errors: 0,
            fer: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            skipped: true,
        };
        let Some(rate) = self.realised_rate(tmpl.rate) else {
            return Ok(row);
        };
        let snr = snr_for_beta(rate, beta);
        let runner = FrameRunner::new(self.code, self.decoder.clone(), self.frame_spec(tmpl, d, modulation, snr)?)?;
        let cell_seed = derive_seed(seed, &[d as u64, modulation.id(), beta.to_bits(), rate.to_bits()]);
        let count = run_cell(workers, cell_seed, tmpl.stop, |s| Ok(runner.run(s)?.is_error()))?;
        let (ci_low, ci_high) = count.interval();
        row.rate = rate;
        row.snr = snr;
        row.frames = count.frames;
        row.errors = count.errors;
        row.fer = count.fer();
        row.ci_low = ci_low;
        row.ci_high = ci_high;
        row.skipped = false;
        Ok(row)
    }
}

/// A FER-versus-efficiency sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub template: CellTemplate,
    pub ds: Vec<usize>,
    pub modulations: Vec<Modulation>,
    /// Ascending efficiencies.
    pub betas: Vec<f64>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.template.stop.validate()?;
        if self.ds.is_empty() || self.modulations.is_empty() || self.betas.is_empty() {
            return Err(HarnessError::Config("d, modulation and beta lists must be non-empty".into()));
        }
        if !self.betas.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::Config("beta grid must be strictly ascending".into()));
        }
        for &d in &self.ds {
            ReconConfig::natural(d).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Every `(d, modulation, β)` cell, in that nesting order.
pub fn fer_sweep(bench: &Bench<'_>, spec: &SweepSpec, workers: &Workers) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &d in &spec.ds {
        for m in &spec.modulations {
            for &beta in &spec.betas {
                rows.push(bench.run(workers, &spec.template, d, m, beta, spec.seed)?);
            }
        }
    }
    Ok(rows)
}

/// Bracket-and-bisect search for the efficiency where the FER crosses a
/// target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub target_fer: f64,
    /// Initial bracket guess.
    pub lo: f64,
    pub hi: f64,
    /// Bisection steps after bracketing.
    pub refinements: usize,
    /// How often the bracket may be widened by its initial width.
    pub max_widen: usize,
}

impl BetaSearch {
    pub fn new(lo: f64, hi: f64) -> Self {
        BetaSearch { target_fer: TARGET_FER, lo, hi, refinements: 4, max_widen: 4 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0 < self.lo && self.lo < self.hi && self.target_fer > 0.0 && self.target_fer < 1.0) {
            return Err(HarnessError::Config(format!("invalid efficiency search {self:?}")));
        }
        if self.refinements < 3 {
            return Err(HarnessError::Config("at least 3 bisection refinements are required".into()));
        }
        Ok(())
    }
}

/// Where the FER curve crosses the target, with every probed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub beta: f64,
    /// Probes in evaluation order.
    pub probes: Vec<(f64, CellCount)>,
}

/// Locates `β` with `FER(β) = target` on a non-decreasing curve.
///
/// The bracket `[lo, hi]` is widened until `FER(lo) < target ≤ FER(hi)`, then
/// halved `refinements` times; the answer interpolates linearly between the
/// final bracket ends.
pub fn beta_at_fer<F>(search: &BetaSearch, mut probe: F) -> Result<Crossing, HarnessError>
where
    F: FnMut(f64) -> Result<CellCount, HarnessError>,
{
    search.validate()?;
    let target = search.target_fer;
    let width = search.hi - search.lo;
    let mut probes = Vec::new();
    let mut eval = |b: f64, probes: &mut Vec<(f64, CellCount)>| -> Result<f64, HarnessError> {
        let c = probe(b)?;
        probes.push((b, c));
        Ok(c.fer())
    };

    let (mut lo, mut hi) = (search.lo, search.hi);
    let mut f_lo = eval(lo, &mut probes)?;
    let mut widen = 0;
    while f_lo >= target {
        if widen == search.max_widen || lo - width <= 0.0 {
            return Err(HarnessError::Runtime(format!("FER {f_lo} ≥ {target} down to β = {lo}")));
        }
        (hi, lo) = (lo, lo - width);
        f_lo = eval(lo, &mut probes)?;
        widen += 1;
    }
    let mut f_hi = if hi == search.hi { eval(hi, &mut probes)? } else { probes[probes.len() - 2].1.fer() };
    widen = 0;
    while f_hi < target {
        if widen == search.max_widen {
            return Err(HarnessError::Runtime(format!("FER {f_hi} < {target} up to β = {hi}")));
        }
        (lo, f_lo, hi) = (hi, f_hi, hi + width);
        f_hi = eval(hi, &mut probes)?;
        widen += 1;
    }
    for _ in 0..search.refinements {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid, &mut probes)?;
        if f < target {
            (lo, f_lo) = (mid, f);
        } else {
            (hi, f_hi) = (mid, f);
        }
    }
    let beta = lo + (target - f_lo) / (f_hi - f_lo) * (hi - lo);
    Ok(Crossing { beta, probes })
}

/// One rate of a puncturing sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureRow {
    pub target_rate: f64,
    pub rate: f64,
    /// `rate / base rate`.
    pub relative_rate: f64,
    pub beta_at_target: f64,
    /// `β(base rate) − β(rate)`.
    pub penalty: f64,
    pub probes: usize,
}

pub const PUNCTURE_HEADER: &str = "target_rate,rate,relative_rate,beta_at_fer10,penalty,probes";

pub fn write_puncture_csv<W: Write>(rows: &[PunctureRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PUNCTURE_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.target_rate, r.rate, r.relative_rate, r.beta_at_target, r.penalty, r.probes)?;
    }
    Ok(())
}

/// Efficiency at the target FER for each rate in `rates`, which must lie in
/// `[R_b, 2R_b]`. The mother code is always measured first and is the
/// reference for the penalty.
#[allow(clippy::too_many_arguments)]
pub fn puncture_sweep(
    bench: &Bench<'_>,
    workers: &Workers,
    template: &CellTemplate,
    rates: &[f64],
    d: usize,
    modulation: &Modulation,
    search: &BetaSearch,
    seed: u64,
) -> Result<Vec<PunctureRow>, HarnessError> {
    let base = bench.code.base_rate();
    if let Some(r) = rates.iter().find(|&&r| !(r >= base - 1e-12 && r <= 2.0 * base + 1e-12)) {
        return Err(HarnessError::Config(format!("rate {r} outside [{base}, {}]", 2.0 * base)));
    }
    let mut targets = vec![base];
    targets.extend(rates.iter().copied().filter(|&r| (r - base).abs() > 1e-12));

    let mut rows: Vec<PunctureRow> = Vec::new();
    for target in targets {
        let tmpl = CellTemplate { rate: ((target - base).abs() > 1e-12).then_some(target), ..template.clone() };
        let rate = bench
            .realised_rate(tmpl.rate)
            .ok_or_else(|| HarnessError::Config(format!("rate {target} is not reachable")))?;
        let crossing = beta_at_fer(search, |b| Ok(bench.run(workers, &tmpl, d, modulation, b, seed)?.count()))?;
        let reference = rows.first().map_or(crossing.beta, |r| r.beta_at_target);
        rows.push(PunctureRow {
            target_rate: target,
            rate,
            relative_rate: rate / base,
            beta_at_target: crossing.beta,
            penalty: reference - crossing.beta,
            probes: crossing.probes.len(),
        });
    }
    Ok(rows)
}

/// `R / I_AB(snr)`, the efficiency bookkeeping of a sweep row.
pub fn efficiency(rate: f64, snr: f64) -> f64 {
    rate / mutual_info(snr)
}

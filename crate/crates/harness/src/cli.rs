//! Subcommand drivers: configuration in, CSV out.
//!
//! Every subcommand reads a [`KvConfig`]; unknown keys are rejected. The
//! keys of each subcommand are listed in its `KEYS` constant.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};

use cvqkd_core::codes::{Decoder, DecoderKind, QcCode, SetPattern};
use cvqkd_core::modem::FsoParams;
use cvqkd_core::pipeline::{ChannelModel, FrameSpec, PunctureSpec, DEFAULT_MAX_ITER};
use cvqkd_core::recon::{PayloadForm, QPolicy, ReconConfig};
use cvqkd_core::rng::rng_for;
use cvqkd_core::secrecy::{Calibration, FerTable, RateRange, SkrParams, DEFAULT_CONFIDENCE};
use cvqkd_link::{run_alice, run_bob, CodeRef, Role, SessionConfig, SimulatedSource, Transcript};

use crate::campaign::{fso_campaign, gen_fer_table, CampaignSpec, DecodeCheck};
use crate::noise::{noise_histogram, NoiseSpec};
use crate::sweep::{
    fer_sweep, puncture_sweep, write_puncture_csv, write_sweep_csv, Bench, BetaSearch, CellTemplate, PunctureStyle, StopRule, SweepSpec,
    Workers,
};
use crate::{CodeSource, HarnessError, KvConfig, Modulation};

/// Opens `out`, or stdout when absent.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| HarnessError::Runtime(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn code(cfg: &KvConfig) -> Result<QcCode, HarnessError> {
    cfg.get_or("code", "bundled:r1_5".to_string())?.parse::<CodeSource>().map_err(config_err)?.load()
}

fn q_policy(cfg: &KvConfig) -> Result<QPolicy, HarnessError> {
    match cfg.get_or("q_policy", "one_per_codeword".to_string())?.as_str() {
        "fresh" => Ok(QPolicy::FreshPerBlock),
        "one_per_codeword" => Ok(QPolicy::OnePerCodeword),
        other => Err(HarnessError::Config(format!("q_policy must be fresh or one_per_codeword, got {other:?}"))),
    }
}

fn stop_rule(cfg: &KvConfig) -> Result<StopRule, HarnessError> {
    let rule = StopRule {
        min_errors: cfg.get_or("min_errors", StopRule::DESK.min_errors)?,
        max_frames: cfg.get_or("max_frames", StopRule::DESK.max_frames)?,
    };
    rule.validate()?;
    Ok(rule)
}

/// Puncturing style; the set pattern is drawn from `pattern_seed`.
fn puncture_style(cfg: &KvConfig, n: usize) -> Result<PunctureStyle, HarnessError> {
    match cfg.get_or("puncture", "random".to_string())?.as_str() {
        "random" => Ok(PunctureStyle::Random),
        "pattern" => Ok(PunctureStyle::Pattern(SetPattern::random(n, &mut rng_for(cfg.get_or("pattern_seed", 0u64)?, &[])))),
        other => Err(HarnessError::Config(format!("puncture must be random or pattern, got {other:?}"))),
    }
}

fn template(cfg: &KvConfig, code: &QcCode) -> Result<CellTemplate, HarnessError> {
    Ok(CellTemplate {
        rate: cfg.get("rate")?,
        puncture: puncture_style(cfg, code.n())?,
        all_zero: cfg.get_or("all_zero", true)?,
        q_policy: q_policy(cfg)?,
        max_iter: cfg.get_or("max_iter", DEFAULT_MAX_ITER)?,
        stop: stop_rule(cfg)?,
    })
}

const CELL_KEYS: &[&str] = &["seed", "code", "rate", "puncture", "pattern_seed", "all_zero", "q_policy", "max_iter", "min_errors", "max_frames"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    CELL_KEYS.iter().chain(extra).copied().collect()
}

pub const FER_SWEEP_KEYS: &[&str] = &["d", "modulation", "beta"];

pub fn fer_sweep_cmd(cfg: &KvConfig, workers: &Workers, out: Option<&Path>) -> Result<(), HarnessError> {
    cfg.check_keys(&keys(FER_SWEEP_KEYS))?;
    let code = code(cfg)?;
    let spec = SweepSpec {
        template: template(cfg, &code)?,
        ds: cfg.require_list("d")?,
        modulations: cfg.list("modulation")?.unwrap_or_else(|| vec![Modulation::gaussian()]),
        betas: cfg.require_list("beta")?,
        seed: cfg.get_or("seed", 1)?,
    };
    let rows = fer_sweep(&Bench::sum_product(&code), &spec, workers)?;
    write_sweep_csv(&rows, sink(out)?)?;
    Ok(())
}

pub const PUNCTURE_SWEEP_KEYS: &[&str] = &["rates", "d", "modulation", "beta_lo", "beta_hi", "refinements"];

pub fn puncture_sweep_cmd(cfg: &KvConfig, workers: &Workers, out: Option<&Path>) -> Result<(), HarnessError> {
    cfg.check_keys(&keys(PUNCTURE_SWEEP_KEYS))?;
    let code = code(cfg)?;
    let tmpl = template(cfg, &code)?;
    let search = BetaSearch { refinements: cfg.get_or("refinements", 4)?, ..BetaSearch::new(cfg.require("beta_lo")?, cfg.require("beta_hi")?) };
    let rows = puncture_sweep(
        &Bench::sum_product(&code),
        workers,
        &tmpl,
        &cfg.require_list::<f64>("rates")?,
        cfg.get_or("d", 128)?,
        &cfg.get_or("modulation", Modulation::gaussian())?,
        &search,
        cfg.get_or("seed", 1)?,
    )?;
    write_puncture_csv(&rows, sink(out)?)?;
    Ok(())
}

pub const NOISE_KEYS: &[&str] = &["seed", "d", "modulation", "snr_db", "samples", "frame_len", "q_policy", "all_zero", "bins", "range", "histogram"];

/// Writes the statistics to `out` and the histogram to the `histogram` key.
pub fn noise_hist_cmd(cfg: &KvConfig, workers: &Workers, out: Option<&Path>) -> Result<(), HarnessError> {
    cfg.check_keys(NOISE_KEYS)?;
    let snr_db: f64 = cfg.get_or("snr_db", -4.7)?;
    let mut spec = NoiseSpec::new(
        cfg.list("d")?.unwrap_or_else(|| vec![1, 2, 4, 8, 128]),
        cfg.get_or("modulation", Modulation::gaussian())?,
        10f64.powf(snr_db / 10.0),
        cfg.get_or("samples", 1_000_000)?,
        cfg.get_or("seed", 1)?,
    );
    spec.frame_len = cfg.get_or("frame_len", spec.frame_len)?;
    spec.bins = cfg.get_or("bins", spec.bins)?;
    spec.range = cfg.get_or("range", spec.range)?;
    spec.all_zero = cfg.get_or("all_zero", spec.all_zero)?;
    if cfg.raw("q_policy").is_some() {
        spec.q_policy = q_policy(cfg)?;
    }
    let report = noise_histogram(&spec, workers)?;
    report.write_stats_csv(sink(out)?)?;
    if let Some(path) = cfg.get::<PathBuf>("histogram")? {
        report.write_histogram_csv(sink(Some(&path))?)?;
    }
    Ok(())
}

pub const FER_TABLE_KEYS: &[&str] = &["d", "modulation", "beta"];

pub fn gen_fer_table_cmd(cfg: &KvConfig, workers: &Workers, out: Option<&Path>) -> Result<(), HarnessError> {
    cfg.check_keys(&keys(FER_TABLE_KEYS))?;
    let code = code(cfg)?;
    let table = gen_fer_table(
        &Bench::sum_product(&code),
        workers,
        &template(cfg, &code)?,
        cfg.get_or("d", 8)?,
        &cfg.get_or("modulation", Modulation::gaussian())?,
        &cfg.require_list::<f64>("beta")?,
        cfg.get_or("seed", 1)?,
    )?;
    table.write_csv(sink(out)?)?;
    Ok(())
}

pub const CAMPAIGN_KEYS: &[&str] = &[
    "seed",
    "code",
    "fer_table",
    "fixed_beta",
    "blocks",
    "block_symbols",
    "v_mod",
    "eta",
    "v_el",
    "xi_bob",
    "mean_transmittance",
    "scint_index",
    "pointing_jitter",
    "confidence",
    "epsilon",
    "n_privacy",
    "rate_min",
    "rate_max",
    "decode_frames",
    "d",
    "max_iter",
    "summary",
];

/// Builds a campaign from configuration; `fer_table` names a CSV file.
pub fn campaign_spec(cfg: &KvConfig, code: Option<&QcCode>) -> Result<CampaignSpec, HarnessError> {
    cfg.check_keys(CAMPAIGN_KEYS)?;
    let table_path: PathBuf = cfg.require("fer_table")?;
    let file = File::open(&table_path).map_err(|e| HarnessError::Config(format!("{}: {e}", table_path.display())))?;
    let fer_table = FerTable::read_csv(BufReader::new(file)).map_err(config_err)?;
    let (rate_min, rate_max) = match code {
        Some(c) => (c.base_rate(), 2.0 * c.base_rate()),
        None => (f64::MIN_POSITIVE, 0.999),
    };
    let decode_frames: usize = cfg.get_or("decode_frames", 0)?;
    let decode = if decode_frames > 0 {
        Some(DecodeCheck { frames_per_block: decode_frames, d: cfg.get_or("d", 8)?, max_iter: cfg.get_or("max_iter", DEFAULT_MAX_ITER)? })
    } else {
        None
    };
    Ok(CampaignSpec {
        fso: FsoParams {
            scint_index: cfg.get_or("scint_index", 0.009)?,
            pointing_jitter: cfg.get_or("pointing_jitter", 8.6)?,
            mean_transmittance: cfg.get_or("mean_transmittance", 0.85)?,
            coherence_len: 2,
        },
        blocks: cfg.get_or("blocks", 120)?,
        block_symbols: cfg.get_or("block_symbols", 10_000_000)?,
        calibration: Calibration::heterodyne(cfg.get_or("v_mod", 4.0)?, cfg.get_or("eta", 0.4)?, cfg.get_or("v_el", 0.1)?),
        xi_bob: cfg.get_or("xi_bob", 0.0045)?,
        confidence: cfg.get_or("confidence", DEFAULT_CONFIDENCE)?,
        skr: SkrParams { epsilon: cfg.get_or("epsilon", 1e-10)?, n_privacy: cfg.get_or("n_privacy", 6.8e6)?, fer_table },
        fixed_beta: cfg.require("fixed_beta")?,
        rates: RateRange { min: cfg.get_or("rate_min", rate_min)?, max: cfg.get_or("rate_max", rate_max.min(0.999))? },
        decode,
        seed: cfg.get_or("seed", 1)?,
    })
}

/// Writes the per-block table to `out` and the summary to the `summary`
/// key (or stderr).
pub fn fso_campaign_cmd(cfg: &KvConfig, workers: &Workers, out: Option<&Path>) -> Result<(), HarnessError> {
    let code = code(cfg)?;
    let spec = campaign_spec(cfg, Some(&code))?;
    let report = fso_campaign(&spec, Some(&code), workers)?;
    report.write_blocks_csv(sink(out)?)?;
    match cfg.get::<PathBuf>("summary")? {
        Some(p) => report.write_summary_csv(sink(Some(&p))?)?,
        None => report.write_summary_csv(io::stderr())?,
    }
    Ok(())
}

pub const SERVE_KEYS: &[&str] = &[
    "seed", "code", "addr", "frames", "d", "mode", "form", "modulation", "rate", "snr", "all_zero", "max_iter", "puncture", "pattern_seed",
];

/// Session settings shared by both roles.
pub fn session_config(cfg: &KvConfig, role: Role, code: &QcCode) -> Result<SessionConfig, HarnessError> {
    cfg.check_keys(SERVE_KEYS)?;
    let d: usize = cfg.get_or("d", 8)?;
    let recon = match cfg.get_or("mode", "natural".to_string())?.as_str() {
        "natural" => ReconConfig::natural(d),
        "algebra" => ReconConfig::algebra(d),
        "matrix" => ReconConfig::matrix(d),
        other => return Err(HarnessError::Config(format!("mode must be natural, algebra or matrix, got {other:?}"))),
    }
    .map_err(config_err)?;
    let recon = match cfg.get_or("form", "compressed".to_string())?.as_str() {
        "compressed" => recon,
        "full" => recon.with_form(PayloadForm::Full),
        other => return Err(HarnessError::Config(format!("form must be compressed or full, got {other:?}"))),
    };
    let puncture = match (cfg.get::<f64>("rate")?, puncture_style(cfg, code.n())?) {
        (None, _) => PunctureSpec::None,
        (Some(target_rate), PunctureStyle::Random) => PunctureSpec::Random { target_rate },
        (Some(target_rate), PunctureStyle::Pattern(pattern)) => PunctureSpec::Pattern { target_rate, pattern },
    };
    let name = cfg.get_or("code", "bundled:r1_5".to_string())?;
    Ok(SessionConfig {
        role,
        code_ref: CodeRef::of(name, code),
        frame: FrameSpec {
            constellation: cfg.get_or("modulation", Modulation::gaussian())?.constellation().clone(),
            recon,
            puncture,
            channel: ChannelModel::Awgn { snr: cfg.require("snr")? },
            all_zero: cfg.get_or("all_zero", false)?,
            max_iter: cfg.get_or("max_iter", DEFAULT_MAX_ITER)?,
        },
        seed: cfg.get_or("seed", 1)?,
        frames: cfg.get_or("frames", 10)?,
    })
}

pub fn write_transcript_csv<W: Write>(t: &Transcript, mut out: W) -> io::Result<()> {
    writeln!(out, "frame,crc_ok,converged,iterations")?;
    for r in &t.records {
        writeln!(out, "{},{},{},{}", r.frame, r.crc_ok, r.converged, r.iterations)?;
    }
    Ok(())
}

/// Bob may start before Alice listens; retry for about two seconds.
fn connect_with_retry(addr: &str) -> Result<TcpStream, HarnessError> {
    let mut attempt = 0;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if attempt == 20 => return Err(HarnessError::Runtime(format!("connect {addr}: {e}"))),
            Err(_) => {
                attempt += 1;
                std::thread::sleep(std::time::Duration::from_millis(100));
            }
        }
    }
}

/// Runs one side of a simulated session over TCP: Alice listens on `addr`,
/// Bob connects to it.
pub fn serve_cmd(cfg: &KvConfig, role: Role, out: Option<&Path>) -> Result<(), HarnessError> {
    let code = code(cfg)?;
    let session = session_config(cfg, role, &code)?;
    let addr: String = cfg.get_or("addr", "127.0.0.1:7700".to_string())?;
    let source = SimulatedSource::new(&code, &session);
    let transcript = match role {
        Role::Alice => {
            let inputs = (0..session.frames).map(|f| source.alice(f)).collect::<Result<Vec<_>, _>>()?;
            let listener = TcpListener::bind(&addr).map_err(|e| HarnessError::Runtime(format!("bind {addr}: {e}")))?;
            let (stream, _) = listener.accept()?;
            let decoder = Decoder::new(code.parity(), DecoderKind::SumProduct);
            run_alice(&session, &code, &decoder, stream, inputs)?
        }
        Role::Bob => {
            let inputs = (0..session.frames).map(|f| source.bob(f)).collect::<Result<Vec<_>, _>>()?;
            let stream = connect_with_retry(&addr)?;
            run_bob(&session, &code, stream, inputs)?
        }
    };
    write_transcript_csv(&transcript, sink(out)?)?;
    eprintln!("{:?}: {} frames, FER {}, {} bytes sent", role, transcript.records.len(), transcript.fer(), transcript.bytes_sent);
    Ok(())
}

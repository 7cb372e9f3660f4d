//! One reconciliation frame end to end.
//!
//! A frame is a pure function of its seed. The seed is split into independent
//! streams (puncturing, states, channel noise, information bits, Bob's
//! mapping randomness), so the Bob-side and Alice-side halves can run in
//! different processes and still reproduce the in-process result exactly.

use rand::Rng;
use thiserror::Error;

use crate::codes::{crc_tag, crc_verify, make_puncture_plan, CodeError, Decoder, PunctureSource, PuncturePlan, QcCode, SetPattern};
use crate::modem::{awgn_channel, draw_states, fso_channel, Constellation, FsoParams, ModemError, QuantumFrame};
use crate::recon::{alice_llr, bob_encode, bpsk, ReconConfig, ReconError, ReconPayload};
use crate::rng::{derive_seed, rng_for, SimRng};

/// Decoder iteration cap used unless a caller overrides it.
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Modem(#[from] ModemError),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error("invalid frame specification: {0}")]
    Spec(String),
}

/// Random streams carved out of a frame seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Puncture = 1,
    States = 2,
    Noise = 3,
    Info = 4,
    Mapping = 5,
}

impl Stream {
    pub fn rng(self, frame_seed: u64) -> SimRng {
        rng_for(frame_seed, &[self as u64])
    }
}

/// Seed of frame `index` under `base`.
pub fn frame_seed(base: u64, index: u64) -> u64 {
    derive_seed(base, &[index])
}

/// How a frame is brought to its target rate.
#[derive(Debug, Clone, PartialEq)]
pub enum PunctureSpec {
    None,
    /// Fresh uniform positions per frame.
    Random { target_rate: f64 },
    /// Prefix of a pre-shared permutation.
    Pattern { target_rate: f64, pattern: SetPattern },
}

impl PunctureSpec {
    /// Rate requested from the code, `None` meaning the base rate.
    pub fn target_rate(&self) -> Option<f64> {
        match self {
            PunctureSpec::None => None,
            PunctureSpec::Random { target_rate } | PunctureSpec::Pattern { target_rate, .. } => Some(*target_rate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Awgn { snr: f64 },
    Fso { params: FsoParams, snr_at_mean: f64 },
}

/// Everything that fixes the statistics of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub constellation: Constellation,
    pub recon: ReconConfig,
    pub puncture: PunctureSpec,
    pub channel: ChannelModel,
    /// Skip encoding and transmit the all-zero codeword.
    pub all_zero: bool,
    pub max_iter: usize,
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.recon.validate()?;
        if self.max_iter == 0 {
            return Err(PipelineError::Spec("max_iter must be at least 1".into()));
        }
        match self.channel {
            ChannelModel::Awgn { snr } if !(snr > 0.0) => Err(ModemError::BadSnr(snr).into()),
            ChannelModel::Fso { params, snr_at_mean } => {
                params.validate()?;
                if !(snr_at_mean > 0.0) {
                    return Err(ModemError::BadSnr(snr_at_mean).into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Channel SNR at which a code of rate `rate` runs at efficiency `beta`,
/// inverting `β = R / (½·log2(1 + snr))`.
pub fn snr_for_beta(rate: f64, beta: f64) -> f64 {
    (2.0 * rate / beta).exp2() - 1.0
}

/// The frame's puncturing plan, drawn from the puncture stream.
pub fn puncture_plan(code: &QcCode, spec: &PunctureSpec, seed: u64) -> Result<PuncturePlan, PipelineError> {
    let plan = match spec {
        PunctureSpec::None => PuncturePlan::none(code.n()),
        PunctureSpec::Random { target_rate } => {
            let mut rng = Stream::Puncture.rng(seed);
            make_puncture_plan(code, *target_rate, PunctureSource::Random(&mut rng))?
        }
        PunctureSpec::Pattern { target_rate, pattern } => {
            make_puncture_plan::<SimRng>(code, *target_rate, PunctureSource::Pattern(pattern))?
        }
    };
    Ok(plan)
}

/// Alice's states and Bob's measurements for `len` transmitted code bits.
pub fn quantum_frame(spec: &FrameSpec, len: usize, seed: u64) -> Result<QuantumFrame, PipelineError> {
    let mut x = draw_states(&spec.constellation, len + len % 2, &mut Stream::States.rng(seed))?;
    x.truncate(len);
    let mut noise = Stream::Noise.rng(seed);
    let frame = match spec.channel {
        ChannelModel::Awgn { snr } => awgn_channel(&x, snr, &mut noise)?,
        ChannelModel::Fso { params, snr_at_mean } => fso_channel(&x, &params, snr_at_mean, &mut noise)?,
    };
    Ok(frame)
}

/// Alice's states scaled by the per-block amplitude gain `√T_k`, the
/// reference she reconciles against once the transmittance is known.
pub fn effective_states(frame: &QuantumFrame) -> Vec<f64> {
    let len = frame.coherence_len.max(1);
    frame.x.iter().enumerate().map(|(i, &v)| v * frame.transmittance[i / len].sqrt()).collect()
}

/// Bob's half of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BobFrame {
    pub info: Vec<u8>,
    pub payload: ReconPayload,
}

/// Draws Bob's information bits, encodes them and builds the reconciliation
/// message for the received quadratures `y`.
pub fn bob_prepare(code: &QcCode, spec: &FrameSpec, seed: u64, y: &[f64]) -> Result<BobFrame, PipelineError> {
    let plan = puncture_plan(code, &spec.puncture, seed)?;
    let (info, codeword) = if spec.all_zero {
        (vec![0u8; code.k()], vec![0u8; code.n()])
    } else {
        let mut rng = Stream::Info.rng(seed);
        let info: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.random::<bool>())).collect();
        let codeword = code.encode(&info)?;
        (info, codeword)
    };
    let u = bpsk(&codeword);
    let payload = bob_encode(&u, y, &plan, &spec.recon, crc_tag(&info), &mut Stream::Mapping.rng(seed))?;
    Ok(BobFrame { info, payload })
}

/// Alice's half of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceFrame {
    pub info: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    pub crc_ok: bool,
}

impl AliceFrame {
    /// The frame yields key material only when decoding converged and the
    /// tag matched; every other frame is discarded.
    pub fn accepted(&self) -> bool {
        self.converged && self.crc_ok
    }
}

/// Decodes Bob's message against the reference states `x`.
pub fn alice_recover(
    code: &QcCode,
    decoder: &Decoder,
    spec: &FrameSpec,
    payload: &ReconPayload,
    x: &[f64],
    sigma_z2: f64,
) -> Result<AliceFrame, PipelineError> {
    let llr = alice_llr(payload, x, sigma_z2, &spec.recon)?;
    let out = decoder.decode(&llr, spec.max_iter)?;
    let info = code.extract_info(&out.bits);
    let crc_ok = crc_verify(&info, payload.crc);
    Ok(AliceFrame { info, converged: out.converged, iterations: out.iterations, crc_ok })
}

/// Result of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameResult {
    pub converged: bool,
    pub crc_ok: bool,
    pub iterations: usize,
    /// Decoded information differs from Bob's (including undetected errors).
    pub info_mismatch: bool,
    /// Quadratures sent over the quantum channel.
    pub symbols: usize,
}

impl FrameResult {
    pub fn is_error(&self) -> bool {
        !(self.converged && self.crc_ok)
    }
}

/// Runs frames of one fixed specification.
#[derive(Debug, Clone)]
pub struct FrameRunner<'a> {
    code: &'a QcCode,
    decoder: Decoder,
    spec: FrameSpec,
}

impl<'a> FrameRunner<'a> {
    pub fn new(code: &'a QcCode, decoder: Decoder, spec: FrameSpec) -> Result<Self, PipelineError> {
        spec.validate()?;
        Ok(FrameRunner { code, decoder, spec })
    }

    pub fn code(&self) -> &QcCode {
        self.code
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Transmitted quadratures per frame under this specification.
    pub fn frame_symbols(&self) -> Result<usize, PipelineError> {
        let plan = puncture_plan(self.code, &self.spec.puncture, 0)?;
        Ok(self.code.n() - plan.count())
    }

    /// The frame with seed `seed`, both halves in process.
    pub fn run(&self, seed: u64) -> Result<FrameResult, PipelineError> {
        let len = self.frame_symbols()?;
        let frame = quantum_frame(&self.spec, len, seed)?;
        let bob = bob_prepare(self.code, &self.spec, seed, &frame.y)?;
        let x = effective_states(&frame);
        let alice = alice_recover(self.code, &self.decoder, &self.spec, &bob.payload, &x, frame.sigma_z2)?;
        Ok(FrameResult {
            converged: alice.converged,
            crc_ok: alice.crc_ok,
            iterations: alice.iterations,
            info_mismatch: alice.info != bob.info,
            symbols: len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::DecoderKind;
    use crate::codes::qc::BaseMatrix;
    use crate::modem::Constellation;

    fn small_code() -> QcCode {
        let base = BaseMatrix::parse("0 1 0 -1\n2 -1 0 0\n").unwrap();
        QcCode::from_parity(base.lift(8).unwrap(), Some(8)).unwrap()
    }

    fn spec(snr: f64, all_zero: bool) -> FrameSpec {
        FrameSpec {
            constellation: Constellation::gaussian(),
            recon: ReconConfig::algebra(8).unwrap(),
            puncture: PunctureSpec::None,
            channel: ChannelModel::Awgn { snr },
            all_zero,
            max_iter: 50,
        }
    }

    #[test]
    fn beta_inversion_round_trips() {
        let snr = snr_for_beta(0.2, 0.9);
        assert!((0.2 / (0.5 * (1.0 + snr).log2()) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn clean_frames_are_accepted() {
        let code = small_code();
        let dec = Decoder::new(code.parity(), DecoderKind::SumProduct);
        for all_zero in [false, true] {
            let runner = FrameRunner::new(&code, dec.clone(), spec(1e6, all_zero)).unwrap();
            for f in 0..5 {
                let r = runner.run(frame_seed(11, f)).unwrap();
                assert!(!r.is_error() && !r.info_mismatch, "frame {f}");
            }
        }
    }

    #[test]
    fn frames_are_reproducible() {
        let code = small_code();
        let dec = Decoder::new(code.parity(), DecoderKind::SumProduct);
        let runner = FrameRunner::new(&code, dec, spec(0.8, false)).unwrap();
        let a: Vec<_> = (0..10).map(|f| runner.run(frame_seed(3, f)).unwrap()).collect();
        let b: Vec<_> = (0..10).map(|f| runner.run(frame_seed(3, f)).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn split_halves_match_the_runner() {
        let code = small_code();
        let dec = Decoder::new(code.parity(), DecoderKind::SumProduct);
        let mut s = spec(2.0, false);
        s.puncture = PunctureSpec::Random { target_rate: 0.6 };
        s.recon = ReconConfig::matrix(4).unwrap();
        let runner = FrameRunner::new(&code, dec.clone(), s.clone()).unwrap();
        let seed = frame_seed(5, 2);
        let len = runner.frame_symbols().unwrap();
        assert!(len < code.n());
        let qf = quantum_frame(&s, len, seed).unwrap();
        let bob = bob_prepare(&code, &s, seed, &qf.y).unwrap();
        let alice = alice_recover(&code, &dec, &s, &bob.payload, &qf.x, qf.sigma_z2).unwrap();
        let r = runner.run(seed).unwrap();
        assert_eq!((r.converged, r.crc_ok, r.iterations), (alice.converged, alice.crc_ok, alice.iterations));
    }

    #[test]
    fn rejects_zero_iterations() {
        let code = small_code();
        let dec = Decoder::new(code.parity(), DecoderKind::SumProduct);
        let mut s = spec(1.0, true);
        s.max_iter = 0;
        assert!(matches!(FrameRunner::new(&code, dec, s), Err(PipelineError::Spec(_))));
    }
}

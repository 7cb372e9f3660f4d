//! Bob and Alice session loops.

use std::io::{Read, Write};

use cvqkd_core::codes::{Decoder, PunctureMode, QcCode, SetPattern};
use cvqkd_core::pipeline::{alice_recover, bob_prepare, effective_states, frame_seed, puncture_plan, quantum_frame, FrameSpec, PipelineError, PunctureSpec};
use cvqkd_core::recon::ReconError;

use crate::wire::{self, AbortReason, CrcResult, Params, Tag, PROTOCOL_VERSION};
use crate::{LinkError, Metered, ProtocolViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

/// Names the code both parties must hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeRef {
    pub name: String,
    pub checksum: u64,
}

impl CodeRef {
    pub fn of(name: impl Into<String>, code: &QcCode) -> Self {
        CodeRef { name: name.into(), checksum: code.checksum() }
    }

    /// Fails unless `code` is the referenced one.
    pub fn verify(&self, code: &QcCode) -> Result<(), LinkError> {
        let local = code.checksum();
        if local != self.checksum {
            return Err(LinkError::CodeMismatch { local, remote: self.checksum });
        }
        Ok(())
    }
}

/// One party's view of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub role: Role,
    pub code_ref: CodeRef,
    /// Frame statistics; both parties must agree on the reconciliation and
    /// puncturing settings.
    pub frame: FrameSpec,
    /// Base seed; frame `f` uses `frame_seed(seed, f)`.
    pub seed: u64,
    pub frames: u64,
}

impl SessionConfig {
    fn pattern(&self) -> Option<&SetPattern> {
        match &self.frame.puncture {
            PunctureSpec::Pattern { pattern, .. } => Some(pattern),
            _ => None,
        }
    }

    fn puncture_mode(&self) -> PunctureMode {
        match self.frame.puncture {
            PunctureSpec::Pattern { .. } => PunctureMode::SetPattern,
            _ => PunctureMode::Random,
        }
    }
}

/// Bob's measurement record for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BobInput {
    pub frame: u64,
    pub y: Vec<f64>,
}

/// Alice's reference states and noise variance for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceInput {
    pub frame: u64,
    pub x: Vec<f64>,
    pub sigma_z2: f64,
}

/// Simulated quantum transmission shared by both parties through a seed.
#[derive(Debug, Clone)]
pub struct SimulatedSource<'a> {
    code: &'a QcCode,
    spec: &'a FrameSpec,
    seed: u64,
}

impl<'a> SimulatedSource<'a> {
    pub fn new(code: &'a QcCode, cfg: &'a SessionConfig) -> Self {
        SimulatedSource { code, spec: &cfg.frame, seed: cfg.seed }
    }

    fn frame(&self, f: u64) -> Result<cvqkd_core::modem::QuantumFrame, LinkError> {
        let seed = frame_seed(self.seed, f);
        let plan = puncture_plan(self.code, &self.spec.puncture, seed)?;
        Ok(quantum_frame(self.spec, self.code.n() - plan.count(), seed)?)
    }

    pub fn bob(&self, f: u64) -> Result<BobInput, LinkError> {
        Ok(BobInput { frame: f, y: self.frame(f)?.y })
    }

    pub fn alice(&self, f: u64) -> Result<AliceInput, LinkError> {
        let qf = self.frame(f)?;
        Ok(AliceInput { frame: f, x: effective_states(&qf), sigma_z2: qf.sigma_z2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRecord {
    pub frame: u64,
    pub crc_ok: bool,
    pub converged: bool,
    pub iterations: u32,
}

impl FrameRecord {
    pub fn is_error(&self) -> bool {
        !(self.crc_ok && self.converged)
    }
}

/// What a party saw during a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub role: Role,
    pub records: Vec<FrameRecord>,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub sent_digest: u64,
    pub received_digest: u64,
}

impl Transcript {
    fn new<T>(role: Role, records: Vec<FrameRecord>, io: &Metered<T>) -> Self {
        Transcript {
            role,
            records,
            bytes_sent: io.bytes_sent(),
            bytes_received: io.bytes_received(),
            sent_digest: io.sent_digest(),
            received_digest: io.received_digest(),
        }
    }

    pub fn frame_errors(&self) -> usize {
        self.records.iter().filter(|r| r.is_error()).count()
    }

    pub fn fer(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.frame_errors() as f64 / self.records.len() as f64
    }
}

/// Sends `ABORT` on a best-effort basis and returns `err`.
fn abort<T: Write>(io: &mut T, reason: AbortReason, err: LinkError) -> LinkError {
    let _ = wire::write_frame(io, Tag::Abort, &wire::encode_abort(reason, &err.to_string()));
    err
}

fn reason_for(err: &LinkError) -> AbortReason {
    match err {
        LinkError::Protocol(_) => AbortReason::Protocol,
        LinkError::CodeMismatch { .. } => AbortReason::CodeMismatch,
        LinkError::Version { .. } | LinkError::Config(_) | LinkError::MissingPattern => AbortReason::Config,
        _ => AbortReason::Internal,
    }
}

/// Next frame, turning `ABORT` into an error and end of stream into a
/// truncation violation.
fn next_frame<T: Read>(io: &mut T) -> Result<wire::Frame, LinkError> {
    match wire::read_frame(io)? {
        None => Err(ProtocolViolation::Truncated.into()),
        Some(f) if f.tag == Tag::Abort => {
            let (reason, message) = wire::decode_abort(&f.body);
            Err(LinkError::RemoteAbort { reason, message })
        }
        Some(f) => Ok(f),
    }
}

/// Writes one frame. If the peer hung up, a queued `ABORT` from it explains
/// the failure better than the broken pipe does.
fn send<T: Read + Write>(io: &mut T, tag: Tag, body: &[u8]) -> Result<(), LinkError> {
    wire::write_frame(io, tag, body).map_err(|e| match e {
        LinkError::Io(_) => match next_frame(io) {
            Err(remote @ LinkError::RemoteAbort { .. }) => remote,
            _ => e,
        },
        e => e,
    })
}

/// Runs Bob's side: one `PARAMS`/`PAYLOAD` exchange per input frame.
pub fn run_bob<T: Read + Write>(
    cfg: &SessionConfig,
    code: &QcCode,
    transport: T,
    inputs: impl IntoIterator<Item = BobInput>,
) -> Result<Transcript, LinkError> {
    let mut io = Metered::new(transport);
    let records = bob_loop(cfg, code, &mut io, inputs).map_err(|e| match e {
        e @ LinkError::RemoteAbort { .. } => e,
        e => abort(&mut io, reason_for(&e), e),
    })?;
    Ok(Transcript::new(Role::Bob, records, &io))
}

fn bob_loop<T: Read + Write>(
    cfg: &SessionConfig,
    code: &QcCode,
    io: &mut T,
    inputs: impl IntoIterator<Item = BobInput>,
) -> Result<Vec<FrameRecord>, LinkError> {
    cfg.code_ref.verify(code)?;
    cfg.frame.validate()?;
    let mut records = Vec::new();
    for input in inputs {
        let params = Params {
            version: PROTOCOL_VERSION,
            code_checksum: code.checksum(),
            frame: input.frame,
            recon: cfg.frame.recon,
            puncture_mode: cfg.puncture_mode(),
            all_zero: cfg.frame.all_zero,
        };
        send(io, Tag::Params, &params.encode())?;
        let bob = bob_prepare(code, &cfg.frame, frame_seed(cfg.seed, input.frame), &input.y)?;
        let (tag, body) = wire::encode_payload(input.frame, &bob.payload);
        send(io, tag, &body)?;

        let reply = next_frame(io)?;
        if reply.tag != Tag::CrcResult {
            return Err(ProtocolViolation::Unexpected { expected: "CRC_RESULT", got: reply.tag }.into());
        }
        let result = CrcResult::decode(&reply.body)?;
        if result.frame != input.frame {
            return Err(ProtocolViolation::FrameIndex { expected: input.frame, got: result.frame }.into());
        }
        records.push(FrameRecord { frame: result.frame, crc_ok: result.crc_ok, converged: result.converged, iterations: result.iterations });
    }
    Ok(records)
}

/// Runs Alice's side: decodes each payload and reports the CRC outcome.
pub fn run_alice<T: Read + Write>(
    cfg: &SessionConfig,
    code: &QcCode,
    decoder: &Decoder,
    transport: T,
    inputs: impl IntoIterator<Item = AliceInput>,
) -> Result<Transcript, LinkError> {
    let mut io = Metered::new(transport);
    let records = alice_loop(cfg, code, decoder, &mut io, inputs).map_err(|e| match e {
        e @ LinkError::RemoteAbort { .. } => e,
        e => abort(&mut io, reason_for(&e), e),
    })?;
    Ok(Transcript::new(Role::Alice, records, &io))
}

fn alice_loop<T: Read + Write>(
    cfg: &SessionConfig,
    code: &QcCode,
    decoder: &Decoder,
    io: &mut T,
    inputs: impl IntoIterator<Item = AliceInput>,
) -> Result<Vec<FrameRecord>, LinkError> {
    cfg.code_ref.verify(code)?;
    cfg.frame.validate()?;
    let mut records = Vec::new();
    for input in inputs {
        let f = next_frame(io)?;
        if f.tag != Tag::Params {
            return Err(ProtocolViolation::Unexpected { expected: "PARAMS", got: f.tag }.into());
        }
        let params = Params::decode(&f.body)?;
        check_params(cfg, code, &params, input.frame)?;

        let f = next_frame(io)?;
        if f.tag != Tag::Payload && f.tag != Tag::PayloadFull {
            return Err(ProtocolViolation::Unexpected { expected: "PAYLOAD", got: f.tag }.into());
        }
        let (frame, payload) = wire::decode_payload(f.tag, &f.body, cfg.pattern())?;
        if frame != input.frame {
            return Err(ProtocolViolation::FrameIndex { expected: input.frame, got: frame }.into());
        }
        let record = match alice_recover(code, decoder, &cfg.frame, &payload, &input.x, input.sigma_z2) {
            Ok(a) => FrameRecord { frame, crc_ok: a.crc_ok, converged: a.converged, iterations: a.iterations as u32 },
            // a degenerate block rejects the frame, not the session
            Err(PipelineError::Recon(ReconError::ZeroNorm { .. })) => FrameRecord { frame, crc_ok: false, converged: false, iterations: 0 },
            Err(e) => return Err(e.into()),
        };
        let reply = CrcResult { frame, crc_ok: record.crc_ok, converged: record.converged, iterations: record.iterations };
        send(io, Tag::CrcResult, &reply.encode())?;
        records.push(record);
    }
    Ok(records)
}

fn check_params(cfg: &SessionConfig, code: &QcCode, p: &Params, frame: u64) -> Result<(), LinkError> {
    if p.version != PROTOCOL_VERSION {
        return Err(LinkError::Version { local: PROTOCOL_VERSION, remote: p.version });
    }
    if p.code_checksum != code.checksum() {
        return Err(LinkError::CodeMismatch { local: code.checksum(), remote: p.code_checksum });
    }
    if p.frame != frame {
        return Err(ProtocolViolation::FrameIndex { expected: frame, got: p.frame }.into());
    }
    if p.recon != cfg.frame.recon || p.puncture_mode != cfg.puncture_mode() || p.all_zero != cfg.frame.all_zero {
        return Err(LinkError::Config(format!("peer settings {p:?} differ from local ones")));
    }
    Ok(())
}

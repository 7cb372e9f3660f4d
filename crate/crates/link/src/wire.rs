//! Framed wire format.
//!
//! ```text
//! +--------+----------------+-----------------+
//! | tag u8 | length u32 LE  | body (length B) |
//! +--------+----------------+-----------------+
//! ```
//!
//! Integers are little-endian and reals are IEEE-754 binary64 little-endian.
//! Bodies have fixed layouts documented on each message type. No message
//! carries Bob's information bits or codeword.

use std::io::{self, Read, Write};

use cvqkd_core::cdalgebra::RotationMatrix;
use cvqkd_core::codes::{CrcTag, PunctureMode, PuncturePlan, SetPattern};
use cvqkd_core::recon::{Mapping, PayloadBody, PayloadForm, QPolicy, ReconConfig, ReconMode, ReconPayload};

use crate::{LinkError, ProtocolViolation};

/// Wire format revision carried in every `PARAMS` message.
pub const PROTOCOL_VERSION: u8 = 1;

/// Bodies above this size are rejected before allocation.
pub const MAX_BODY: u32 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    Params = 0x01,
    Payload = 0x02,
    CrcResult = 0x03,
    /// Matrix-mode payload carrying full `R_j` matrices.
    PayloadFull = 0x04,
    Abort = 0x0F,
}

impl TryFrom<u8> for Tag {
    type Error = ProtocolViolation;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Ok(match v {
            0x01 => Tag::Params,
            0x02 => Tag::Payload,
            0x03 => Tag::CrcResult,
            0x04 => Tag::PayloadFull,
            0x0F => Tag::Abort,
            other => return Err(ProtocolViolation::UnknownTag(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub body: Vec<u8>,
}

pub fn write_frame<W: Write + ?Sized>(out: &mut W, tag: Tag, body: &[u8]) -> Result<(), LinkError> {
    let len = u32::try_from(body.len()).ok().filter(|&l| l <= MAX_BODY).ok_or(ProtocolViolation::Oversize(u32::MAX))?;
    let mut head = [0u8; 5];
    head[0] = tag as u8;
    head[1..].copy_from_slice(&len.to_le_bytes());
    out.write_all(&head)?;
    out.write_all(body)?;
    out.flush()?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end of stream before the header.
pub fn read_frame<R: Read + ?Sized>(input: &mut R) -> Result<Option<Frame>, LinkError> {
    let mut head = [0u8; 5];
    let mut got = 0;
    while got < head.len() {
        match input.read(&mut head[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(LinkError::Io(io::ErrorKind::UnexpectedEof.into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let tag = Tag::try_from(head[0])?;
    let len = u32::from_le_bytes([head[1], head[2], head[3], head[4]]);
    if len > MAX_BODY {
        return Err(ProtocolViolation::Oversize(len).into());
    }
    let mut body = vec![0u8; len as usize];
    input.read_exact(&mut body)?;
    Ok(Some(Frame { tag, body }))
}

struct Writer(Vec<u8>);

impl Writer {
    fn new() -> Self {
        Writer(Vec::new())
    }
    fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }
    fn u16(&mut self, v: u16) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn f64s(&mut self, v: &[f64]) -> &mut Self {
        for &x in v {
            self.f64(x);
        }
        self
    }
    fn len(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &'static str) -> Self {
        Reader { buf, what }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolViolation> {
        if self.buf.len() < n {
            return Err(ProtocolViolation::Malformed(format!("{} body truncated", self.what)));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, ProtocolViolation> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ProtocolViolation> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, ProtocolViolation> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ProtocolViolation> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, ProtocolViolation> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// A length prefix, checked against the bytes that remain.
    fn len(&mut self, elem: usize) -> Result<usize, ProtocolViolation> {
        let n = self.u32()? as usize;
        if n.saturating_mul(elem) > self.buf.len() {
            return Err(ProtocolViolation::Malformed(format!("{} length {n} exceeds body", self.what)));
        }
        Ok(n)
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ProtocolViolation> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn finish(self) -> Result<(), ProtocolViolation> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(ProtocolViolation::Malformed(format!("{} has {} trailing bytes", self.what, self.buf.len())))
        }
    }
}

fn bad(what: &str, v: u8) -> ProtocolViolation {
    ProtocolViolation::Malformed(format!("invalid {what} code {v}"))
}

/// `PARAMS` body (24 bytes): version u8, code checksum u64, frame index u64,
/// d u16, mode u8, payload form u8, Q policy u8, puncture mode u8, all-zero
/// flag u8.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub version: u8,
    pub code_checksum: u64,
    pub frame: u64,
    pub recon: ReconConfig,
    pub puncture_mode: PunctureMode,
    pub all_zero: bool,
}

impl Params {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.version)
            .u64(self.code_checksum)
            .u64(self.frame)
            .u16(self.recon.d as u16)
            .u8(match self.recon.mode {
                ReconMode::Algebra => 0,
                ReconMode::Matrix => 1,
            })
            .u8(match self.recon.form {
                PayloadForm::Compressed => 0,
                PayloadForm::Full => 1,
            })
            .u8(match self.recon.q_policy {
                QPolicy::FreshPerBlock => 0,
                QPolicy::OnePerCodeword => 1,
            })
            .u8(puncture_code(self.puncture_mode))
            .u8(u8::from(self.all_zero));
        w.0
    }

    pub fn decode(body: &[u8]) -> Result<Self, ProtocolViolation> {
        let mut r = Reader::new(body, "PARAMS");
        let version = r.u8()?;
        let code_checksum = r.u64()?;
        let frame = r.u64()?;
        let d = r.u16()? as usize;
        let mode = match r.u8()? {
            0 => ReconMode::Algebra,
            1 => ReconMode::Matrix,
            v => return Err(bad("mode", v)),
        };
        let form = match r.u8()? {
            0 => PayloadForm::Compressed,
            1 => PayloadForm::Full,
            v => return Err(bad("payload form", v)),
        };
        let q_policy = match r.u8()? {
            0 => QPolicy::FreshPerBlock,
            1 => QPolicy::OnePerCodeword,
            v => return Err(bad("Q policy", v)),
        };
        let puncture_mode = puncture_mode(r.u8()?)?;
        let all_zero = match r.u8()? {
            0 => false,
            1 => true,
            v => return Err(bad("all-zero flag", v)),
        };
        r.finish()?;
        let recon = ReconConfig { d, mode, q_policy, form };
        Ok(Params { version, code_checksum, frame, recon, puncture_mode, all_zero })
    }
}

fn puncture_code(m: PunctureMode) -> u8 {
    match m {
        PunctureMode::Random => 0,
        PunctureMode::SetPattern => 1,
    }
}

fn puncture_mode(v: u8) -> Result<PunctureMode, ProtocolViolation> {
    match v {
        0 => Ok(PunctureMode::Random),
        1 => Ok(PunctureMode::SetPattern),
        v => Err(bad("puncture mode", v)),
    }
}

/// Encodes a payload and returns the tag it travels under.
///
/// Layout: frame index u64, code length u32, puncture mode u8, then either
/// the position list (random: count u32, positions u32 each) or just the
/// count `p` (set pattern: u32), CRC tag u32, body kind u8, and the body:
///
/// - kind 0, algebra: count u32, `m` values.
/// - kind 1, compressed matrix: blocks u32; per block the squared norm f64,
///   the Q seed u64, a normal flag u8 and, if set, the block size u32
///   followed by the unit normal.
/// - kind 2, full matrix (tag `PAYLOAD_FULL`): blocks u32; per block the
///   squared norm f64, the size u32 and the row-major matrix.
pub fn encode_payload(frame: u64, payload: &ReconPayload) -> (Tag, Vec<u8>) {
    let mut w = Writer::new();
    let plan = &payload.puncture;
    w.u64(frame).len(plan.n()).u8(puncture_code(plan.mode()));
    match plan.mode() {
        PunctureMode::Random => {
            w.len(plan.count());
            for &p in plan.positions() {
                w.u32(p);
            }
        }
        PunctureMode::SetPattern => {
            w.len(plan.count());
        }
    }
    w.u32(payload.crc.value());
    let mut tag = Tag::Payload;
    match &payload.body {
        PayloadBody::Algebra { m } => {
            w.u8(0).len(m.len()).f64s(m);
        }
        PayloadBody::Matrix { mappings, block_norms } => {
            let full = mappings.iter().any(|m| matches!(m, Mapping::Full(_)));
            w.u8(if full { 2 } else { 1 }).len(mappings.len());
            if full {
                tag = Tag::PayloadFull;
            }
            for (mapping, &norm) in mappings.iter().zip(block_norms) {
                w.f64(norm);
                match mapping {
                    Mapping::Compressed { seed, normal } => {
                        w.u64(*seed);
                        match normal {
                            Some(a) => {
                                w.u8(1).len(a.len()).f64s(a);
                            }
                            None => {
                                w.u8(0);
                            }
                        }
                    }
                    Mapping::Full(r) => {
                        w.len(r.dim()).f64s(&r.to_row_major());
                    }
                }
            }
        }
    }
    (tag, w.0)
}

/// Decodes a payload; set-pattern plans are rebuilt from the shared
/// `pattern`.
pub fn decode_payload(tag: Tag, body: &[u8], pattern: Option<&SetPattern>) -> Result<(u64, ReconPayload), LinkError> {
    let mut r = Reader::new(body, "PAYLOAD");
    let frame = r.u64()?;
    let n = r.u32()? as usize;
    let plan = match puncture_mode(r.u8()?)? {
        PunctureMode::Random => {
            let count = r.len(4)?;
            let positions = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            PuncturePlan::from_positions(n, PunctureMode::Random, positions)
                .map_err(|e| ProtocolViolation::Malformed(e.to_string()))?
        }
        PunctureMode::SetPattern => {
            let p = r.u32()? as usize;
            let pattern = pattern.ok_or(LinkError::MissingPattern)?;
            if pattern.len() != n {
                return Err(LinkError::Config(format!("set pattern has length {}, code has {n}", pattern.len())));
            }
            PuncturePlan::from_pattern(pattern, p).map_err(|e| ProtocolViolation::Malformed(e.to_string()))?
        }
    };
    let crc = CrcTag(r.u32()?);
    let kind = r.u8()?;
    let expected_tag = if kind == 2 { Tag::PayloadFull } else { Tag::Payload };
    if tag != expected_tag {
        return Err(ProtocolViolation::Malformed(format!("payload kind {kind} sent under tag {tag:?}")).into());
    }
    let body = match kind {
        0 => {
            let count = r.len(8)?;
            PayloadBody::Algebra { m: r.f64s(count)? }
        }
        1 | 2 => {
            let blocks = r.len(8)?;
            let mut mappings = Vec::with_capacity(blocks);
            let mut block_norms = Vec::with_capacity(blocks);
            for _ in 0..blocks {
                block_norms.push(r.f64()?);
                if kind == 1 {
                    let seed = r.u64()?;
                    let normal = match r.u8()? {
                        0 => None,
                        1 => {
                            let b = r.len(8)?;
                            Some(r.f64s(b)?)
                        }
                        v => return Err(bad("normal flag", v).into()),
                    };
                    mappings.push(Mapping::Compressed { seed, normal });
                } else {
                    let b = r.u32()? as usize;
                    if b.saturating_mul(b).saturating_mul(8) > r.buf.len() {
                        return Err(ProtocolViolation::Malformed(format!("matrix size {b} exceeds body")).into());
                    }
                    let entries = r.f64s(b * b)?;
                    mappings.push(Mapping::Full(RotationMatrix::from_row_major(b, &entries)));
                }
            }
            PayloadBody::Matrix { mappings, block_norms }
        }
        v => return Err(bad("payload kind", v).into()),
    };
    r.finish()?;
    Ok((frame, ReconPayload { body, puncture: plan, crc }))
}

/// `CRC_RESULT` body (14 bytes): frame index u64, tag match u8, decoder
/// converged u8, iterations u32.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcResult {
    pub frame: u64,
    pub crc_ok: bool,
    pub converged: bool,
    pub iterations: u32,
}

impl CrcResult {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.frame).u8(u8::from(self.crc_ok)).u8(u8::from(self.converged)).u32(self.iterations);
        w.0
    }

    pub fn decode(body: &[u8]) -> Result<Self, ProtocolViolation> {
        let mut r = Reader::new(body, "CRC_RESULT");
        let frame = r.u64()?;
        let flag = |v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(bad("flag", v)),
        };
        let crc_ok = flag(r.u8()?)?;
        let converged = flag(r.u8()?)?;
        let iterations = r.u32()?;
        r.finish()?;
        Ok(CrcResult { frame, crc_ok, converged, iterations })
    }
}

/// Why a party gave up; carried in `ABORT` as a reason code u8 followed by
/// a UTF-8 message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum AbortReason {
    Protocol = 1,
    CodeMismatch = 2,
    Config = 3,
    Internal = 4,
}

pub fn encode_abort(reason: AbortReason, msg: &str) -> Vec<u8> {
    let mut body = vec![reason as u8];
    body.extend_from_slice(msg.as_bytes());
    body
}

pub fn decode_abort(body: &[u8]) -> (u8, String) {
    match body.split_first() {
        Some((&code, rest)) => (code, String::from_utf8_lossy(rest).into_owned()),
        None => (0, String::new()),
    }
}

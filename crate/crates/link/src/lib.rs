//! Two-party reconciliation sessions.
//!
//! Bob (the key-defining side) and Alice (the decoding side) exchange framed
//! messages over any reliable byte stream: TCP or an in-memory pipe. The
//! classical channel is assumed error-free; authentication is not modelled.
//!
//! Per frame, Bob sends `PARAMS` then `PAYLOAD` (or `PAYLOAD_FULL` for full
//! mapping matrices) and waits for Alice's `CRC_RESULT`. Either side answers
//! a violation with `ABORT` and ends the session with a typed error.

use thiserror::Error;

use cvqkd_core::pipeline::PipelineError;

pub mod session;
pub mod transport;
pub mod wire;

pub use session::{run_alice, run_bob, AliceInput, BobInput, CodeRef, FrameRecord, Role, SessionConfig, SimulatedSource, Transcript};
pub use transport::{memory_pipe, Metered, PipeEnd};
pub use wire::{Tag, PROTOCOL_VERSION};

/// A message that breaks the wire format or the session order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolViolation {
    #[error("unknown frame tag 0x{0:02X}")]
    UnknownTag(u8),
    #[error("expected {expected}, received {got:?}")]
    Unexpected { expected: &'static str, got: Tag },
    #[error("message for frame {got}, expected frame {expected}")]
    FrameIndex { expected: u64, got: u64 },
    #[error("frame body of {0} bytes exceeds the limit")]
    Oversize(u32),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("peer closed the stream mid-session")]
    Truncated,
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("transport failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Protocol(#[from] ProtocolViolation),
    #[error("code checksum mismatch: local {local:016x}, peer {remote:016x}")]
    CodeMismatch { local: u64, remote: u64 },
    #[error("protocol version mismatch: local {local}, peer {remote}")]
    Version { local: u8, remote: u8 },
    #[error("session configuration: {0}")]
    Config(String),
    #[error("set-pattern puncturing needs the shared pattern")]
    MissingPattern,
    #[error("peer aborted (reason {reason}): {message}")]
    RemoteAbort { reason: u8, message: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

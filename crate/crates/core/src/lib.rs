//! Reconciliation toolkit for continuous-variable QKD.
//!
//! The crate is organised bottom-up:
//!
//! - [`cdalgebra`]: Cayley-Dickson arithmetic for `d <= 8` and the Haar/Householder
//!   machinery used to build mapping matrices for `d > 8`.
//! - [`codes`]: quasi-cyclic LDPC codes, alist I/O, systematic encoding,
//!   sum-product decoding, puncturing and CRC tags.
//! - [`modem`]: constellations, the AWGN quantum channel and the FSO fading channel.
//! - [`recon`]: the reverse-reconciliation virtual channel (Bob's message, Alice's LLRs).
//! - [`secrecy`]: parameter estimation, Holevo bound, finite-size penalty, key rate
//!   and per-block efficiency optimisation.
//! - [`pipeline`]: one reconciliation frame end to end, shared by the session runner
//!   and the Monte-Carlo harness.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdalgebra;
pub mod codes;
pub mod modem;
pub mod pipeline;
pub mod recon;
pub mod rng;
pub mod secrecy;

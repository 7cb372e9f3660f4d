//! Monte-Carlo campaigns for the CV-QKD reconciliation toolkit.
//!
//! - [`sweep`]: FER against reconciliation efficiency, and the efficiency
//!   reached at 10% FER as a function of the punctured rate.
//! - [`noise`]: normality diagnostics of the virtual channel noise.
//! - [`campaign`]: per-block key rates over a fading free-space link, with
//!   and without per-block efficiency optimisation.
//!
//! Every table cell is a pure function of its specification and seed; the
//! number of worker threads never changes a result.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod cli;
pub mod config;
pub mod noise;
pub mod stats;
pub mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvqkd_core::codes::{Bundled, CodeError, QcCode};
use cvqkd_core::modem::{Constellation, ModemError};
use cvqkd_core::pipeline::PipelineError;
use cvqkd_core::recon::ReconError;
use cvqkd_core::secrecy::SecrecyError;
use thiserror::Error;

pub use config::KvConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// The run was misconfigured; nothing was simulated.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(PipelineError, CodeError, ModemError, ReconError, SecrecyError, std::io::Error, cvqkd_link::LinkError);

/// A state source named in a configuration file: `gaussian`, `qpsk`, or
/// `qam<order>[@<nu>]` for probabilistically shaped square QAM.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    label: String,
    constellation: Constellation,
}

impl Modulation {
    pub fn gaussian() -> Self {
        "gaussian".parse().expect("known modulation")
    }

    pub fn qpsk() -> Self {
        "qpsk".parse().expect("known modulation")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Stable identifier used in seed derivation.
    pub fn id(&self) -> u64 {
        self.label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
    }
}

impl FromStr for Modulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = s.trim().to_ascii_lowercase();
        let constellation = match label.as_str() {
            "gaussian" => Constellation::gaussian(),
            "qpsk" => Constellation::qpsk(),
            other => {
                let rest = other.strip_prefix("qam").ok_or_else(|| format!("unknown modulation {s:?}"))?;
                let (order, nu) = rest.split_once('@').unwrap_or((rest, "0"));
                let order: usize = order.parse().map_err(|_| format!("bad QAM order in {s:?}"))?;
                let nu: f64 = nu.parse().map_err(|_| format!("bad shaping parameter in {s:?}"))?;
                Constellation::qam(order, nu).map_err(|e| e.to_string())?
            }
        };
        Ok(Modulation { label, constellation })
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Where a code comes from: `bundled:<name>` or an alist path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSource {
    Bundled(Bundled),
    Alist(PathBuf),
}

impl CodeSource {
    pub fn load(&self) -> Result<QcCode, HarnessError> {
        match self {
            CodeSource::Bundled(b) => Ok(b.code()),
            CodeSource::Alist(p) => QcCode::load_alist(p).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display()))),
        }
    }
}

impl FromStr for CodeSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().strip_prefix("bundled:") {
            Some(name) => Bundled::from_name(name)
                .map(CodeSource::Bundled)
                .ok_or_else(|| format!("no bundled code named {name:?}")),
            None => Ok(CodeSource::Alist(PathBuf::from(s.trim()))),
        }
    }
}

impl fmt::Display for CodeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeSource::Bundled(b) => write!(f, "bundled:{}", b.name()),
            CodeSource::Alist(p) => write!(f, "{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulation_labels() {
        assert_eq!(Modulation::qpsk().constellation().points().len(), 4);
        let m: Modulation = "QAM256@0.05".parse().unwrap();
        assert_eq!(m.label(), "qam256@0.05");
        assert_eq!(m.constellation().points().len(), 256);
        assert!("qam3".parse::<Modulation>().is_err());
        assert!("psk8".parse::<Modulation>().is_err());
        assert_ne!(Modulation::qpsk().id(), Modulation::gaussian().id());
    }

    #[test]
    fn code_sources() {
        assert_eq!("bundled:r1_5".parse::<CodeSource>().unwrap(), CodeSource::Bundled(Bundled::R1_5));
        assert!("bundled:nope".parse::<CodeSource>().is_err());
        assert_eq!("codes/x.alist".parse::<CodeSource>().unwrap().to_string(), "codes/x.alist");
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
    }
}

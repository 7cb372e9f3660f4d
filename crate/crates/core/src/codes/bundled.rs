//! Desk-scale fixture codes shipped with the crate.
//!
//! Each code lives under `assets/codes/` as three files:
//!
//! - `<name>.mask`: the protograph, one row of `0`/`1` per base row;
//! - `<name>.base`: circulant shifts assigned by [`choose_shifts`] with
//!   [`DESIGN_SEED`] and [`DESIGN_CANDIDATES`];
//! - `<name>.alist`: the lifted parity-check matrix.
//!
//! The base matrices are compiled in; the alist files are the exchange format
//! for other tools.

use std::path::PathBuf;

use super::qc::{choose_shifts, BaseMatrix};
use super::{CodeError, QcCode};
use crate::rng::rng_for;

/// Circulant size of every bundled code.
pub const LIFT: usize = 512;
pub const DESIGN_SEED: u64 = 7;
pub const DESIGN_CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bundled {
    /// Rate 1/5, `N = 10240`, `K = 2048`.
    R1_5,
    /// Rate 1/20, `N = 10240`, `K = 512`.
    R1_20,
}

impl Bundled {
    pub const ALL: [Bundled; 2] = [Bundled::R1_5, Bundled::R1_20];

    pub fn name(self) -> &'static str {
        match self {
            Bundled::R1_5 => "r1_5",
            Bundled::R1_20 => "r1_20",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn mask_text(self) -> &'static str {
        match self {
            Bundled::R1_5 => include_str!("../../assets/codes/r1_5.mask"),
            Bundled::R1_20 => include_str!("../../assets/codes/r1_20.mask"),
        }
    }

    pub fn base_text(self) -> &'static str {
        match self {
            Bundled::R1_5 => include_str!("../../assets/codes/r1_5.base"),
            Bundled::R1_20 => include_str!("../../assets/codes/r1_20.base"),
        }
    }

    pub fn base(self) -> BaseMatrix {
        BaseMatrix::parse(self.base_text()).expect("bundled base matrix is well formed")
    }

    /// Lifts the compiled-in base matrix.
    pub fn code(self) -> QcCode {
        let h = self.base().lift(LIFT).expect("bundled base matrix lifts");
        QcCode::from_parity(h, Some(LIFT)).expect("bundled code has information bits")
    }

    /// Path of the alist fixture inside the source tree.
    pub fn alist_path(self) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/codes").join(format!("{}.alist", self.name()))
    }

    /// Re-runs the shift assignment from the mask.
    pub fn regenerate_base(self) -> Result<BaseMatrix, CodeError> {
        let rows: Vec<Vec<bool>> = self
            .mask_text()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(|t| t != "0").collect())
            .collect();
        let (m, n) = (rows.len(), rows[0].len());
        let mask: Vec<bool> = rows.into_iter().flatten().collect();
        choose_shifts(m, n, &mask, &[], LIFT, DESIGN_CANDIDATES, &mut rng_for(DESIGN_SEED, &[]))
    }
}

//! `arpsim` — chirped two-photon adiabatic rapid passage in a three-level
//! ladder atom.
//!
//! The crate simulates population transfer from a ground state `g` to a
//! Rydberg state `r` through a far-detuned intermediate state `i`, driven by
//! a pump and a Stokes field whose frequencies may be linearly chirped.
//! Three model tiers are available:
//!
//! * [`dynamics::RhsKind::Schrodinger`] — the full three-level amplitude
//!   equations in the rotating frame,
//! * [`dynamics::RhsKind::Lindblad`] — the same Hamiltonian with spontaneous
//!   decay of the intermediate and Rydberg states,
//! * [`dynamics::RhsKind::Effective`] — the adiabatically eliminated
//!   two-level model with Stark-shifted detuning and a two-photon Rabi
//!   coupling.
//!
//! Quantities are entered in plain MHz / MHz·µs⁻¹; the
//! [`units::UnitConvention`] of a scheme states which of them are interpreted
//! as ordinary frequencies (× 2π to angular) and which as already-angular
//! rates.
//!
//! # Quick start
//!
//! ```
//! use arpsim::dynamics::{propagate, InitialState, PropagateOptions, RhsKind};
//! use arpsim::experiments::preset_case1_with_rabi;
//!
//! let scheme = preset_case1_with_rabi(100.0);
//! let opts = PropagateOptions { rel_tol: 1e-6, abs_tol: 1e-9, ..Default::default() };
//! let traj = propagate(RhsKind::Schrodinger, &scheme, &InitialState::Ground, &opts).unwrap();
//! let (_p_g, _p_i, p_r) = traj.final_populations();
//! assert!(p_r > 0.99);
//! ```

// `!(a < b)` is used instead of `a >= b` where NaN must fail the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod model;
pub mod ode;
pub mod units;

pub use dynamics::{propagate, InitialState, PropagateOptions, RhsKind, Trajectory};
pub use error::{ArpError, Result};
pub use experiments::{preset_by_name, run_sweep, SweepSpec, SweptParameter};
pub use model::{AtomSpec, CaseTag, FieldSpec, PulseShape, SchemeSpec};
pub use units::UnitConvention;

/// Every fenced Rust block in the book is compiled and run with the crate's
/// doc tests, keeping the guide in sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! doc_check {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(dead_code)]
            struct $name;
        };
    }

    doc_check!(Introduction, "../../../book/src/introduction.md");
    doc_check!(Units, "../../../book/src/units-and-conventions.md");
    doc_check!(LadderModel, "../../../book/src/ladder-model.md");
    doc_check!(DressedStates, "../../../book/src/dressed-states.md");
    doc_check!(OpenSystem, "../../../book/src/open-system.md");
    doc_check!(Presets, "../../../book/src/presets-and-sweeps.md");
    doc_check!(CliUsage, "../../../book/src/cli.md");
}

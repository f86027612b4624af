//! Physical input types and time-dependent field/detuning evaluation.
//!
//! A [`SchemeSpec`] bundles the pump and Stokes fields, the static atomic
//! detunings and decay rates, the integration window, and the case tag for
//! one complete excitation scheme. All quantities are plain MHz / µs; see
//! [`crate::units`] for how they are converted before propagation.

use serde::{Deserialize, Serialize};

use crate::error::{ArpError, Result};
use crate::units::UnitConvention;

/// Envelope shape of a laser field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Gaussian,
    ConstantCw,
}

/// One laser field: envelope, peak Rabi frequency, pulse timing, and chirp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub shape: PulseShape,
    /// Peak Rabi frequency (plain MHz).
    pub peak_rabi_mhz: f64,
    /// Pulse center t_p / t_S (µs). Ignored for CW fields.
    pub center_time_us: f64,
    /// Gaussian 1/e^(1/2) half-width τ (µs). Ignored for CW fields.
    pub width_us: f64,
    /// Linear chirp rate (MHz/µs); zero or negative allowed.
    pub chirp_rate_mhz_per_us: f64,
    /// Common chirp reference time t₀ (µs).
    pub chirp_center_us: f64,
}

impl FieldSpec {
    pub fn gaussian(peak_rabi_mhz: f64, center_time_us: f64, width_us: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            peak_rabi_mhz,
            center_time_us,
            width_us,
            chirp_rate_mhz_per_us: 0.0,
            chirp_center_us: 0.0,
        }
    }

    pub fn cw(peak_rabi_mhz: f64) -> Self {
        Self {
            shape: PulseShape::ConstantCw,
            peak_rabi_mhz,
            center_time_us: 0.0,
            width_us: 0.0,
            chirp_rate_mhz_per_us: 0.0,
            chirp_center_us: 0.0,
        }
    }

    pub fn with_chirp(mut self, rate_mhz_per_us: f64, center_us: f64) -> Self {
        self.chirp_rate_mhz_per_us = rate_mhz_per_us;
        self.chirp_center_us = center_us;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.peak_rabi_mhz.is_finite() || self.peak_rabi_mhz < 0.0 {
            return Err(ArpError::InvalidSpec(format!(
                "peak_rabi_mhz must be finite and >= 0, got {}",
                self.peak_rabi_mhz
            )));
        }
        if self.shape == PulseShape::Gaussian && !(self.width_us > 0.0) {
            return Err(ArpError::InvalidSpec(format!(
                "width_us must be > 0 for a Gaussian field, got {}",
                self.width_us
            )));
        }
        if !self.chirp_rate_mhz_per_us.is_finite() {
            return Err(ArpError::InvalidSpec(
                "chirp_rate_mhz_per_us must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Instantaneous Rabi frequency Ω(t) in plain MHz.
    ///
    /// Gaussian: Ω⁰·exp(−(t−t_c)²/2τ²); CW: Ω⁰ for all t.
    pub fn rabi_at(&self, t_us: f64) -> f64 {
        match self.shape {
            PulseShape::ConstantCw => self.peak_rabi_mhz,
            PulseShape::Gaussian => {
                let x = (t_us - self.center_time_us) / self.width_us;
                self.peak_rabi_mhz * (-0.5 * x * x).exp()
            }
        }
    }

    pub fn is_chirped(&self) -> bool {
        self.chirp_rate_mhz_per_us != 0.0
    }
}

/// Static detunings and radiative decay rates of the ladder system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    /// Static one-photon detuning Δ⁰ = ω_ig − ω_p⁰ (plain MHz).
    pub delta0_mhz: f64,
    /// Static two-photon detuning δ⁰ at t = t₀ (plain MHz).
    #[serde(default)]
    pub small_delta0_mhz: f64,
    /// Population decay rate of the intermediate state, i → g channel (MHz).
    pub gamma_ig_mhz: f64,
    /// Population decay rate of the Rydberg state, r → i channel (MHz).
    pub gamma_ri_mhz: f64,
}

impl AtomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_ig_mhz < 0.0 || self.gamma_ri_mhz < 0.0 {
            return Err(ArpError::InvalidSpec("decay rates must be >= 0".into()));
        }
        // delta0 == 0 is rejected at the effective-model boundary, not here:
        // the full three-level propagators are well defined on resonance.
        Ok(())
    }
}

/// Which of the three excitation schemes a [`SchemeSpec`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// Case 1: both fields pulsed and chirped.
    BothChirped,
    /// Case 2: both fields pulsed, only the pump chirped.
    PumpOnlyChirped,
    /// Case 3: pump pulsed and chirped, Stokes CW and unchirped.
    PumpChirpedStokesCw,
}

/// A complete experiment: fields, atom, window, case tag, and units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub pump: FieldSpec,
    pub stokes: FieldSpec,
    pub atom: AtomSpec,
    pub t_start_us: f64,
    pub t_end_us: f64,
    pub case_tag: CaseTag,
    #[serde(default = "UnitConvention::calibrated")]
    pub units: UnitConvention,
}

impl SchemeSpec {
    /// Validates field/atom invariants and case-tag consistency.
    pub fn new(
        pump: FieldSpec,
        stokes: FieldSpec,
        atom: AtomSpec,
        t_start_us: f64,
        t_end_us: f64,
        case_tag: CaseTag,
        units: UnitConvention,
    ) -> Result<Self> {
        let scheme = Self {
            pump,
            stokes,
            atom,
            t_start_us,
            t_end_us,
            case_tag,
            units,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Field, atom, and window checks without case-tag semantics; propagation
    /// accepts any physically valid scheme (reduced test configurations do
    /// not always fit one of the three named cases).
    pub fn validate_physics(&self) -> Result<()> {
        self.pump.validate()?;
        self.stokes.validate()?;
        self.atom.validate()?;
        if !(self.t_start_us < self.t_end_us) {
            return Err(ArpError::InvalidSpec(format!(
                "t_start_us ({}) must be < t_end_us ({})",
                self.t_start_us, self.t_end_us
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_physics()?;
        let tag_ok = match self.case_tag {
            CaseTag::BothChirped => {
                self.pump.shape == PulseShape::Gaussian
                    && self.stokes.shape == PulseShape::Gaussian
                    && self.pump.is_chirped()
                    && self.stokes.is_chirped()
            }
            CaseTag::PumpOnlyChirped => {
                self.pump.shape == PulseShape::Gaussian
                    && self.stokes.shape == PulseShape::Gaussian
                    && self.pump.is_chirped()
                    && !self.stokes.is_chirped()
            }
            CaseTag::PumpChirpedStokesCw => {
                self.pump.shape == PulseShape::Gaussian
                    && self.pump.is_chirped()
                    && self.stokes.shape == PulseShape::ConstantCw
                    && !self.stokes.is_chirped()
            }
        };
        if !tag_ok {
            return Err(ArpError::InvalidSpec(format!(
                "field specs are inconsistent with case_tag {:?}",
                self.case_tag
            )));
        }
        Ok(())
    }

    /// Non-fatal diagnostics; currently warns when the window does not cover
    /// center ± 5τ for a Gaussian field.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, f) in [("pump", &self.pump), ("stokes", &self.stokes)] {
            if f.shape == PulseShape::Gaussian {
                let lo = f.center_time_us - 5.0 * f.width_us;
                let hi = f.center_time_us + 5.0 * f.width_us;
                if self.t_start_us > lo || self.t_end_us < hi {
                    out.push(format!(
                        "integration window [{}, {}] does not cover {name} pulse center ± 5τ = [{lo}, {hi}]",
                        self.t_start_us, self.t_end_us
                    ));
                }
            }
        }
        out
    }

    /// Instantaneous one- and two-photon detunings (Δ(t), δ(t)) in plain MHz:
    /// Δ(t) = Δ⁰ − α(t−t₀), δ(t) = δ⁰ − (α+β)(t−t₀).
    pub fn detunings_at(&self, t_us: f64) -> (f64, f64) {
        let a = self.pump.chirp_rate_mhz_per_us;
        let b = self.stokes.chirp_rate_mhz_per_us;
        let dt_p = t_us - self.pump.chirp_center_us;
        let dt_s = t_us - self.stokes.chirp_center_us;
        let delta = self.atom.delta0_mhz - a * dt_p;
        let small = self.atom.small_delta0_mhz - a * dt_p - b * dt_s;
        (delta, small)
    }

    /// Angular one-photon detuning Δ(t) in rad/µs under the scheme's units.
    pub fn delta_ang(&self, t_us: f64) -> f64 {
        let u = &self.units;
        u.rabi_to_angular(self.atom.delta0_mhz)
            - u.chirp_to_angular(self.pump.chirp_rate_mhz_per_us)
                * (t_us - self.pump.chirp_center_us)
    }

    /// Angular two-photon detuning δ(t) in rad/µs under the scheme's units.
    pub fn small_delta_ang(&self, t_us: f64) -> f64 {
        let u = &self.units;
        u.rabi_to_angular(self.atom.small_delta0_mhz)
            - u.chirp_to_angular(self.pump.chirp_rate_mhz_per_us)
                * (t_us - self.pump.chirp_center_us)
            - u.chirp_to_angular(self.stokes.chirp_rate_mhz_per_us)
                * (t_us - self.stokes.chirp_center_us)
    }

    /// Angular pump and Stokes Rabi frequencies at `t` (rad/µs).
    pub fn rabi_ang(&self, t_us: f64) -> (f64, f64) {
        (
            self.units.rabi_to_angular(self.pump.rabi_at(t_us)),
            self.units.rabi_to_angular(self.stokes.rabi_at(t_us)),
        )
    }

    /// Angular decay rates (Γ_gi, Γ_ir) in 1/µs.
    pub fn decay_ang(&self) -> (f64, f64) {
        (
            self.units.decay_to_angular(self.atom.gamma_ig_mhz),
            self.units.decay_to_angular(self.atom.gamma_ri_mhz),
        )
    }
}

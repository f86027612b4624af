//! Built-in presets for the three excitation schemes and the sweep engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, InitialState, PropagateOptions, RhsKind, Trajectory};
use crate::effective::adiabaticity_report;
use crate::error::{ArpError, Result};
use crate::model::{AtomSpec, CaseTag, FieldSpec, PulseShape, SchemeSpec};
use crate::units::UnitConvention;

/// Rb ladder atom data shared by the presets: Δ⁰ = 1.5 GHz, intermediate
/// 5P₃/₂ decay 6 MHz, Rydberg decay 3·10⁻³ MHz.
fn rb_atom() -> AtomSpec {
    AtomSpec {
        delta0_mhz: 1500.0,
        small_delta0_mhz: 0.0,
        gamma_ig_mhz: 6.0,
        gamma_ri_mhz: 3e-3,
    }
}

/// Case 1: both fields Gaussian (τ = 1 µs) and chirped (α = β = 4.2 MHz/µs),
/// window [−5, 5] µs. Peak Rabi frequency is the usual sweep variable; the
/// default is 100 MHz.
pub fn preset_case1() -> SchemeSpec {
    preset_case1_with_rabi(100.0)
}

pub fn preset_case1_with_rabi(peak_rabi_mhz: f64) -> SchemeSpec {
    SchemeSpec::new(
        FieldSpec::gaussian(peak_rabi_mhz, 0.0, 1.0).with_chirp(4.2, 0.0),
        FieldSpec::gaussian(peak_rabi_mhz, 0.0, 1.0).with_chirp(4.2, 0.0),
        rb_atom(),
        -5.0,
        5.0,
        CaseTag::BothChirped,
        UnitConvention::calibrated(),
    )
    .expect("case-1 preset is valid")
}

/// Case 2: both fields Gaussian pulses (Ω⁰ = 25 MHz, τ = 0.45 µs, centers 0),
/// only the pump chirped (α = 2 MHz/µs, t₀ = 0).
pub fn preset_case2() -> SchemeSpec {
    SchemeSpec::new(
        FieldSpec::gaussian(25.0, 0.0, 0.45).with_chirp(2.0, 0.0),
        FieldSpec::gaussian(25.0, 0.0, 0.45),
        rb_atom(),
        -2.5,
        2.5,
        CaseTag::PumpOnlyChirped,
        UnitConvention::calibrated(),
    )
    .expect("case-2 preset is valid")
}

/// Case 3: pump Gaussian and chirped (Ω_p⁰ = 35 MHz, τ_p = 0.34 µs,
/// α = 2 MHz/µs, t₀ = −0.26 µs), Stokes CW at 17 MHz.
pub fn preset_case3() -> SchemeSpec {
    SchemeSpec::new(
        FieldSpec::gaussian(35.0, 0.0, 0.34).with_chirp(2.0, -0.26),
        FieldSpec::cw(17.0),
        rb_atom(),
        -2.0,
        2.0,
        CaseTag::PumpChirpedStokesCw,
        UnitConvention::calibrated(),
    )
    .expect("case-3 preset is valid")
}

pub fn preset_by_name(name: &str) -> Result<SchemeSpec> {
    match name {
        "case1" => Ok(preset_case1()),
        "case2" => Ok(preset_case2()),
        "case3" => Ok(preset_case3()),
        other => Err(ArpError::Config(format!(
            "unknown preset '{other}' (expected case1|case2|case3)"
        ))),
    }
}

/// Which scheme parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    /// Pump and Stokes peak Rabi frequencies, set equal (MHz).
    EqualPeakRabi,
    /// Ω_p/Ω_S with Ω_S fixed at `stokes_ref_mhz`.
    PumpToStokesRatio,
    /// Chirp rate applied to every chirped field (MHz/µs).
    ChirpRate,
    /// Gaussian width applied to every pulsed field (µs).
    PulseWidth,
}

/// A one-dimensional parameter sweep over a scheme template.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub template: SchemeSpec,
    pub parameter: SweptParameter,
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
    /// Fixed Stokes peak Rabi frequency for ratio sweeps (MHz).
    pub stokes_ref_mhz: Option<f64>,
    pub model: RhsKind,
    pub options: PropagateOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(ArpError::InvalidSpec(format!(
                "sweep range must have lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.n_points < 2 {
            return Err(ArpError::InvalidSpec(
                "sweep needs at least 2 points".into(),
            ));
        }
        if self.parameter == SweptParameter::PumpToStokesRatio && self.stokes_ref_mhz.is_none() {
            return Err(ArpError::InvalidSpec(
                "ratio sweep requires a bound Stokes reference value".into(),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.n_points - 1) as f64)
            .collect()
    }

    /// The scheme at one grid point.
    pub fn instantiate(&self, value: f64) -> Result<SchemeSpec> {
        let mut s = self.template;
        match self.parameter {
            SweptParameter::EqualPeakRabi => {
                s.pump.peak_rabi_mhz = value;
                s.stokes.peak_rabi_mhz = value;
            }
            SweptParameter::PumpToStokesRatio => {
                let stokes = self.stokes_ref_mhz.ok_or_else(|| {
                    ArpError::InvalidSpec("ratio sweep requires stokes_ref_mhz".into())
                })?;
                s.stokes.peak_rabi_mhz = stokes;
                s.pump.peak_rabi_mhz = value * stokes;
            }
            SweptParameter::ChirpRate => {
                if s.pump.is_chirped() {
                    s.pump.chirp_rate_mhz_per_us = value;
                }
                if s.stokes.is_chirped() {
                    s.stokes.chirp_rate_mhz_per_us = value;
                }
            }
            SweptParameter::PulseWidth => {
                if s.pump.shape == PulseShape::Gaussian {
                    s.pump.width_us = value;
                }
                if s.stokes.shape == PulseShape::Gaussian {
                    s.stokes.width_us = value;
                }
            }
        }
        s.validate_physics()?;
        Ok(s)
    }
}

/// One sweep grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub p_g_final: f64,
    pub p_i_final: f64,
    pub p_r_final: f64,
    pub p_i_peak: f64,
    pub lz_probability: f64,
    /// Set when propagation failed at this grid point; populations are NaN.
    pub error: Option<String>,
}

/// Ordered sweep table plus the bindings that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweptParameter,
    pub model: RhsKind,
    pub stokes_ref_mhz: Option<f64>,
    pub rows: Vec<SweepRow>,
}

fn eval_point(spec: &SweepSpec, value: f64) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let scheme = spec.instantiate(value)?;
        let report = adiabaticity_report(&scheme, 801)?;
        let traj = propagate(spec.model, &scheme, &InitialState::Ground, &spec.options)?;
        let (p_g, p_i, p_r) = traj.final_populations();
        Ok(SweepRow {
            value,
            p_g_final: p_g,
            p_i_final: p_i,
            p_r_final: p_r,
            p_i_peak: traj.peak_p_i(),
            lz_probability: report.lz_probability,
            error: None,
        })
    };
    run().unwrap_or_else(|e| SweepRow {
        value,
        p_g_final: f64::NAN,
        p_i_final: f64::NAN,
        p_r_final: f64::NAN,
        p_i_peak: f64::NAN,
        lz_probability: f64::NAN,
        error: Some(e.to_string()),
    })
}

/// Run the sweep; grid points are independent and evaluated in parallel, and
/// the result table is assembled in grid order so the output is deterministic.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, true)
}

/// `parallel = false` forces strictly sequential evaluation (the tables must
/// be identical either way).
pub fn run_sweep_with(spec: &SweepSpec, parallel: bool) -> Result<SweepResult> {
    spec.validate()?;
    let values = spec.values();
    let rows: Vec<SweepRow> = if parallel {
        values.par_iter().map(|&v| eval_point(spec, v)).collect()
    } else {
        values.iter().map(|&v| eval_point(spec, v)).collect()
    };
    Ok(SweepResult {
        parameter: spec.parameter,
        model: spec.model,
        stokes_ref_mhz: spec.stokes_ref_mhz,
        rows,
    })
}

/// Final populations plus the peak intermediate population, the quantity the
/// far-detuned design is meant to minimize.
pub fn final_populations(traj: &Trajectory) -> ((f64, f64, f64), f64) {
    (traj.final_populations(), traj.peak_p_i())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn case1_preset_fields() {
        let s = preset_case1();
        assert_eq!(s.pump.width_us, 1.0);
        assert_eq!(s.stokes.width_us, 1.0);
        assert_relative_eq!(
            s.pump.chirp_rate_mhz_per_us + s.stokes.chirp_rate_mhz_per_us,
            8.4,
            max_relative = 1e-12
        );
        assert_eq!(s.case_tag, CaseTag::BothChirped);
        assert_eq!(s.atom.delta0_mhz, 1500.0);
        assert_eq!(s.pump.peak_rabi_mhz, 100.0);
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn case2_preset_fields() {
        let s = preset_case2();
        assert_eq!(s.pump.peak_rabi_mhz, 25.0);
        assert_eq!(s.stokes.peak_rabi_mhz, 25.0);
        assert_eq!(s.pump.width_us, 0.45);
        assert_eq!(s.pump.chirp_rate_mhz_per_us, 2.0);
        assert_eq!(s.stokes.chirp_rate_mhz_per_us, 0.0);
        assert_eq!(s.case_tag, CaseTag::PumpOnlyChirped);
        assert_eq!(s.atom.gamma_ig_mhz, 6.0);
        assert_eq!(s.atom.gamma_ri_mhz, 3e-3);
    }

    #[test]
    fn case3_preset_fields() {
        let s = preset_case3();
        assert_eq!(s.pump.peak_rabi_mhz, 35.0);
        assert_eq!(s.stokes.peak_rabi_mhz, 17.0);
        assert_eq!(s.pump.width_us, 0.34);
        assert_eq!(s.pump.chirp_center_us, -0.26);
        assert_eq!(s.stokes.shape, PulseShape::ConstantCw);
        assert_eq!(s.case_tag, CaseTag::PumpChirpedStokesCw);
        // Ratio 35/17 ~ 2.06.
        assert_relative_eq!(
            s.pump.peak_rabi_mhz / s.stokes.peak_rabi_mhz,
            2.06,
            max_relative = 1e-2
        );
    }

    #[test]
    fn sweep_validation() {
        let mut spec = SweepSpec {
            template: preset_case1(),
            parameter: SweptParameter::PumpToStokesRatio,
            lo: 0.3,
            hi: 2.0,
            n_points: 10,
            stokes_ref_mhz: None,
            model: RhsKind::Schrodinger,
            options: PropagateOptions::default(),
        };
        assert!(spec.validate().is_err());
        spec.stokes_ref_mhz = Some(70.0);
        assert!(spec.validate().is_ok());
        spec.hi = 0.1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sweep_instantiation() {
        let spec = SweepSpec {
            template: preset_case1(),
            parameter: SweptParameter::EqualPeakRabi,
            lo: 0.0,
            hi: 120.0,
            n_points: 61,
            stokes_ref_mhz: None,
            model: RhsKind::Schrodinger,
            options: PropagateOptions::default(),
        };
        let vals = spec.values();
        assert_eq!(vals.len(), 61);
        assert_eq!(vals[0], 0.0);
        assert_eq!(*vals.last().unwrap(), 120.0);
        let s = spec.instantiate(80.0).unwrap();
        assert_eq!(s.pump.peak_rabi_mhz, 80.0);
        assert_eq!(s.stokes.peak_rabi_mhz, 80.0);

        let ratio = SweepSpec {
            parameter: SweptParameter::PumpToStokesRatio,
            stokes_ref_mhz: Some(70.0),
            ..spec
        };
        let s = ratio.instantiate(1.5).unwrap();
        assert_eq!(s.stokes.peak_rabi_mhz, 70.0);
        assert_eq!(s.pump.peak_rabi_mhz, 105.0);
    }

    #[test]
    fn zero_rabi_point_has_no_transfer() {
        let spec = SweepSpec {
            template: preset_case1(),
            parameter: SweptParameter::EqualPeakRabi,
            lo: 0.0,
            hi: 10.0,
            n_points: 2,
            stokes_ref_mhz: None,
            model: RhsKind::Schrodinger,
            options: PropagateOptions {
                rel_tol: 1e-6,
                abs_tol: 1e-9,
                n_samples: 64,
                record_coherences: false,
            },
        };
        let res = run_sweep(&spec).unwrap();
        assert!(
            res.rows[0].error.is_none(),
            "row error: {:?}",
            res.rows[0].error
        );
        assert_relative_eq!(res.rows[0].p_r_final, 0.0, epsilon = 1e-9);
        assert_relative_eq!(res.rows[0].p_g_final, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sweeps_are_deterministic_and_order_independent() {
        let spec = SweepSpec {
            template: preset_case1(),
            parameter: SweptParameter::EqualPeakRabi,
            lo: 0.0,
            hi: 30.0,
            n_points: 4,
            stokes_ref_mhz: None,
            model: RhsKind::Schrodinger,
            options: PropagateOptions {
                rel_tol: 1e-6,
                abs_tol: 1e-9,
                n_samples: 64,
                record_coherences: false,
            },
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        let c = run_sweep_with(&spec, false).unwrap();
        for ((ra, rb), rc) in a.rows.iter().zip(&b.rows).zip(&c.rows) {
            assert_eq!(ra.p_r_final.to_bits(), rb.p_r_final.to_bits());
            assert_eq!(ra.p_r_final.to_bits(), rc.p_r_final.to_bits());
            assert_eq!(ra.p_i_peak.to_bits(), rc.p_i_peak.to_bits());
        }
    }

    #[test]
    fn failed_point_is_flagged_not_fatal() {
        let mut template = preset_case1();
        template.atom.delta0_mhz = 100.0; // breaks the elimination precondition
        let spec = SweepSpec {
            template,
            parameter: SweptParameter::EqualPeakRabi,
            lo: 50.0,
            hi: 100.0,
            n_points: 2,
            stokes_ref_mhz: None,
            model: RhsKind::Effective,
            options: PropagateOptions {
                rel_tol: 1e-6,
                abs_tol: 1e-9,
                n_samples: 64,
                record_coherences: false,
            },
        };
        let res = run_sweep(&spec).unwrap();
        assert!(res.rows.iter().any(|r| r.error.is_some()));
    }
}

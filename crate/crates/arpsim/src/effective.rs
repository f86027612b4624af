//! The adiabatically eliminated two-level description.
//!
//! With the intermediate state removed, the ground and Rydberg amplitudes see
//! Stark shifts Δ_g = Ω_p²/4Δ and Δ_r = Ω_S²/4Δ, an effective two-photon Rabi
//! frequency Ω̃ = Ω_pΩ_S/2Δ, and an effective detuning
//! Δ̃ = δ − (Ω_S² − Ω_p²)/4Δ. The instantaneous eigenstates ("dressed
//! states") of the resulting 2×2 Hamiltonian are parameterized by a mixing
//! angle θ with tan θ = (√(Ω̃²+Δ̃²) − Δ̃)/Ω̃.
//!
//! All functions here take and return plain MHz; the formulas are
//! scale-covariant so the same expressions hold in angular units.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{ArpError, Result};
use crate::model::SchemeSpec;

/// Effective two-photon Rabi frequency Ω̃ = Ω_p·Ω_S/2Δ.
pub fn effective_rabi(omega_p: f64, omega_s: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(ArpError::Domain(
            "effective_rabi: zero one-photon detuning (elimination invalid)".into(),
        ));
    }
    Ok(omega_p * omega_s / (2.0 * delta))
}

/// Stark shifts (Δ_g, Δ_r) = (Ω_p²/4Δ, Ω_S²/4Δ).
pub fn stark_shifts(omega_p: f64, omega_s: f64, delta: f64) -> Result<(f64, f64)> {
    if delta == 0.0 {
        return Err(ArpError::Domain(
            "stark_shifts: zero one-photon detuning".into(),
        ));
    }
    Ok((
        omega_p * omega_p / (4.0 * delta),
        omega_s * omega_s / (4.0 * delta),
    ))
}

/// Effective two-photon detuning Δ̃ = δ − (Ω_S² − Ω_p²)/4Δ.
pub fn effective_detuning(small_delta: f64, omega_p: f64, omega_s: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(ArpError::Domain(
            "effective_detuning: zero one-photon detuning".into(),
        ));
    }
    Ok(small_delta - (omega_s * omega_s - omega_p * omega_p) / (4.0 * delta))
}

/// Dressed-state energies
/// λ± = −Δ_g + (δ−Δ_r+Δ_g)/2 ± √(((δ−Δ_r+Δ_g)/2)² + (Ω̃/2)²).
pub fn dressed_energies(
    delta_g: f64,
    delta_r: f64,
    small_delta: f64,
    omega_eff: f64,
) -> (f64, f64) {
    let m = 0.5 * (small_delta - delta_r + delta_g);
    let root = (m * m + 0.25 * omega_eff * omega_eff).sqrt();
    (-delta_g + m + root, -delta_g + m - root)
}

/// Mixing angle θ ∈ [0, π/2] with tan θ = (√(Ω̃²+Δ̃²) − Δ̃)/Ω̃.
///
/// Evaluated in a cancellation-free form: for Δ̃ ≥ 0 the identity
/// (r − Δ̃)/Ω̃ = Ω̃/(r + Δ̃) is used. The Ω̃ → 0 limits are θ → 0 (Δ̃ > 0)
/// and θ → π/2 (Δ̃ < 0).
pub fn mixing_angle(omega_eff: f64, delta_eff: f64) -> Result<f64> {
    let w = omega_eff.abs();
    if w == 0.0 && delta_eff == 0.0 {
        return Err(ArpError::Domain(
            "mixing_angle: undefined at omega_eff = delta_eff = 0".into(),
        ));
    }
    let r = w.hypot(delta_eff);
    let theta = if delta_eff >= 0.0 {
        (w / (r + delta_eff)).atan()
    } else {
        ((r - delta_eff) / w).atan()
    };
    Ok(theta.clamp(0.0, FRAC_PI_2))
}

/// Dressed coefficients (c_g₊, c_r₊, c_g₋, c_r₋) from the rotation matrix:
/// |+⟩ = sin θ|g⟩ − cos θ|r⟩, |−⟩ = cos θ|g⟩ + sin θ|r⟩.
pub fn dressed_coefficients(theta: f64) -> (f64, f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    (s, -c, c, s)
}

/// Instantaneous effective-model quantities at one time point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DressedSnapshot {
    pub t_us: f64,
    pub omega_eff_mhz: f64,
    pub stark_g_mhz: f64,
    pub stark_r_mhz: f64,
    pub delta_eff_mhz: f64,
    pub lambda_plus_mhz: f64,
    pub lambda_minus_mhz: f64,
    pub theta_rad: f64,
    /// (c_g₊, c_r₊, c_g₋, c_r₋)
    pub coeffs: (f64, f64, f64, f64),
}

/// Evaluates the full chain field → Ω̃, shifts, Δ̃, λ±, θ, coefficients.
pub fn snapshot(scheme: &SchemeSpec, t_us: f64) -> Result<DressedSnapshot> {
    let omega_p = scheme.pump.rabi_at(t_us);
    let omega_s = scheme.stokes.rabi_at(t_us);
    let (delta, small_delta) = scheme.detunings_at(t_us);
    let omega_eff = effective_rabi(omega_p, omega_s, delta)?;
    let (stark_g, stark_r) = stark_shifts(omega_p, omega_s, delta)?;
    let delta_eff = effective_detuning(small_delta, omega_p, omega_s, delta)?;
    let (lp, lm) = dressed_energies(stark_g, stark_r, small_delta, omega_eff);
    let theta = mixing_angle(omega_eff, delta_eff)?;
    Ok(DressedSnapshot {
        t_us,
        omega_eff_mhz: omega_eff,
        stark_g_mhz: stark_g,
        stark_r_mhz: stark_r,
        delta_eff_mhz: delta_eff,
        lambda_plus_mhz: lp,
        lambda_minus_mhz: lm,
        theta_rad: theta,
        coeffs: dressed_coefficients(theta),
    })
}

/// Adiabaticity diagnostics for a scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdiabaticityReport {
    /// ατ_p² (dimensionless, plain chirp rate).
    pub alpha_tau_p_sq: f64,
    /// βτ_S² (None when the Stokes field is CW).
    pub beta_tau_s_sq: Option<f64>,
    /// Peak |Ω̃| over the window (plain MHz).
    pub omega_eff_peak_mhz: f64,
    /// Two-photon sweep rate α_eff = α+β (plain MHz/µs).
    pub alpha_eff_mhz_per_us: f64,
    /// |α_eff|/Ω̃_peak² with both in plain units.
    pub sweep_ratio_plain: f64,
    /// |α_eff|/Ω̃_peak² with both in angular units (scheme convention).
    pub sweep_ratio_angular: f64,
    /// max over the grid of |dΔ̃/dt|/Ω̃(t)², angular, restricted to times
    /// where Ω̃(t) ≥ 1% of peak.
    pub max_local_ratio: f64,
    /// Landau–Zener diabatic probability exp(−πΩ̃_peak²/2|α_eff|), angular.
    pub lz_probability: f64,
    /// Both chirp rates are zero: no frequency sweep, ARP inapplicable.
    pub no_sweep: bool,
}

/// Evaluates the adiabaticity conditions ατ² ≫ 1 and α ≪ Ω̃² and the
/// Landau–Zener estimate on an `n_grid`-point uniform grid.
pub fn adiabaticity_report(scheme: &SchemeSpec, n_grid: usize) -> Result<AdiabaticityReport> {
    if n_grid < 2 {
        return Err(ArpError::InvalidSpec(
            "adiabaticity_report: n_grid must be >= 2".into(),
        ));
    }
    let a = scheme.pump.chirp_rate_mhz_per_us;
    let b = scheme.stokes.chirp_rate_mhz_per_us;
    let alpha_eff = a + b;
    let no_sweep = a == 0.0 && b == 0.0;

    let span = scheme.t_end_us - scheme.t_start_us;
    let dt = span / (n_grid - 1) as f64;
    // Only Ω̃(t) is needed pointwise; the full dressed snapshot would be
    // undefined at an exact Ω̃ = Δ̃ = 0 crossing.
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| scheme.t_start_us + k as f64 * dt)
        .collect();
    let peaks: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let (delta, _) = scheme.detunings_at(t);
            effective_rabi(scheme.pump.rabi_at(t), scheme.stokes.rabi_at(t), delta).map(|w| w.abs())
        })
        .collect::<Result<_>>()?;
    let peak = peaks.iter().copied().fold(0.0, f64::max);

    // Angular effective quantities under the scheme's convention. Ω̃ and Δ̃
    // are built from Rabi frequencies and detunings, so they scale with the
    // Rabi factor; the chirp contribution to dΔ̃/dt scales with the chirp
    // factor. Differentiate the angular Δ̃ numerically on the grid.
    let u = scheme.units;
    let delta_eff_ang = |t: f64| -> Result<f64> {
        let (op, os) = scheme.rabi_ang(t);
        let d = scheme.delta_ang(t);
        let sd = scheme.small_delta_ang(t);
        effective_detuning(sd, op, os, d)
    };
    let mut max_local_ratio: f64 = 0.0;
    if peak > 0.0 {
        for k in 0..n_grid {
            let t = grid[k];
            let w = peaks[k];
            if w < 0.01 * peak {
                continue;
            }
            let h = dt.min(1e-3);
            let slope = (delta_eff_ang(t + h)? - delta_eff_ang(t - h)?) / (2.0 * h);
            let (op, os) = scheme.rabi_ang(t);
            let w_ang = effective_rabi(op, os, scheme.delta_ang(t))?.abs();
            if w_ang > 0.0 {
                max_local_ratio = max_local_ratio.max(slope.abs() / (w_ang * w_ang));
            }
        }
    }

    // Peak angular Ω̃ for the Landau-Zener estimate.
    let peak_ang = grid
        .iter()
        .map(|&t| {
            let (op, os) = scheme.rabi_ang(t);
            effective_rabi(op, os, scheme.delta_ang(t))
                .map(|w| w.abs())
                .unwrap_or(0.0)
        })
        .fold(0.0, f64::max);
    let alpha_eff_ang = u.chirp_to_angular(alpha_eff);
    let lz_probability = if no_sweep {
        1.0
    } else {
        (-std::f64::consts::PI * peak_ang * peak_ang / (2.0 * alpha_eff_ang.abs())).exp()
    };

    Ok(AdiabaticityReport {
        alpha_tau_p_sq: a * scheme.pump.width_us * scheme.pump.width_us,
        beta_tau_s_sq: match scheme.stokes.shape {
            crate::model::PulseShape::Gaussian => {
                Some(b * scheme.stokes.width_us * scheme.stokes.width_us)
            }
            crate::model::PulseShape::ConstantCw => None,
        },
        omega_eff_peak_mhz: peak,
        alpha_eff_mhz_per_us: alpha_eff,
        sweep_ratio_plain: if peak > 0.0 {
            alpha_eff.abs() / (peak * peak)
        } else {
            f64::INFINITY
        },
        sweep_ratio_angular: if peak_ang > 0.0 {
            alpha_eff_ang.abs() / (peak_ang * peak_ang)
        } else {
            f64::INFINITY
        },
        max_local_ratio,
        lz_probability,
        no_sweep,
    })
}

//! Time propagation of the three-level ladder system.
//!
//! Three right-hand sides over a shared adaptive integrator:
//!
//! * full Schrödinger amplitudes in the rotating frame,
//!   i ċ_g = −(Ω_p/2)c_i, i ċ_i = Δc_i − (Ω_p/2)c_g − (Ω_S/2)c_r,
//!   i ċ_r = δc_r − (Ω_S/2)c_i;
//! * the open-system density matrix dρ/dt = −i[H,ρ] + 𝓛ρ with two
//!   trace-preserving jump channels r→i (Γ_ir) and i→g (Γ_gi);
//! * the adiabatically eliminated two-level model
//!   i ċ_g = −Δ_g c_g − (Ω̃/2)c_r, i ċ_r = (δ−Δ_r)c_r − (Ω̃/2)c_g.
//!
//! All coefficients are evaluated in angular units under the scheme's
//! [`crate::units::UnitConvention`].

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::effective;
use crate::error::{ArpError, Result};
use crate::model::SchemeSpec;
use crate::ode::{self, OdeOptions, OdeStats};

/// Three complex rotating-frame amplitudes (c_g, c_i, c_r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub c_g: C64,
    pub c_i: C64,
    pub c_r: C64,
}

impl AmplitudeState {
    pub fn ground() -> Self {
        Self {
            c_g: C64::new(1.0, 0.0),
            c_i: C64::ZERO,
            c_r: C64::ZERO,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_i.norm_sqr() + self.c_r.norm_sqr()
    }

    pub fn populations(&self) -> (f64, f64, f64) {
        (
            self.c_g.norm_sqr(),
            self.c_i.norm_sqr(),
            self.c_r.norm_sqr(),
        )
    }
}

/// 3×3 density matrix over the basis (g, i, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    pub m: [[C64; 3]; 3],
}

impl DensityMatrix3 {
    pub fn ground() -> Self {
        let mut m = [[C64::ZERO; 3]; 3];
        m[0][0] = C64::new(1.0, 0.0);
        Self { m }
    }

    pub fn from_pure(state: &AmplitudeState) -> Self {
        let c = [state.c_g, state.c_i, state.c_r];
        let mut m = [[C64::ZERO; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                m[k][l] = c[k] * c[l].conj();
            }
        }
        Self { m }
    }

    pub fn trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1] + self.m[2][2]).re
    }

    pub fn populations(&self) -> (f64, f64, f64) {
        (self.m[0][0].re, self.m[1][1].re, self.m[2][2].re)
    }

    /// max |ρ_kl − ρ_lk*| over all elements.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                e = e.max((self.m[k][l] - self.m[l][k].conj()).norm());
            }
        }
        e
    }

    /// Eigenvalues of the Hermitian part, ascending (closed-form 3×3).
    #[allow(clippy::needless_range_loop)] // index pairs mirror the math
    pub fn eigenvalues(&self) -> [f64; 3] {
        // Symmetrize first; the formula assumes exact Hermiticity.
        let mut a = [[C64::ZERO; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                a[k][l] = 0.5 * (self.m[k][l] + self.m[l][k].conj());
            }
        }
        let p1 = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
        let q = (a[0][0].re + a[1][1].re + a[2][2].re) / 3.0;
        let p2 = (a[0][0].re - q).powi(2)
            + (a[1][1].re - q).powi(2)
            + (a[2][2].re - q).powi(2)
            + 2.0 * p1;
        if p2 <= 0.0 {
            return [q, q, q];
        }
        let p = (p2 / 6.0).sqrt();
        let b = |k: usize, l: usize| -> C64 {
            let d = if k == l { C64::new(q, 0.0) } else { C64::ZERO };
            (a[k][l] - d) / p
        };
        let det_b = (b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0)))
        .re;
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut out = [e1, e2, e3];
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }
}

/// Which equation of motion to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsKind {
    Schrodinger,
    Lindblad,
    Effective,
}

/// Rotating-frame Schrödinger right-hand side, Eq.-of-motion form.
pub fn schrodinger_rhs(state: &AmplitudeState, scheme: &SchemeSpec, t_us: f64) -> AmplitudeState {
    let mut y = [state.c_g, state.c_i, state.c_r];
    let mut dy = [C64::ZERO; 3];
    schrodinger_rhs_flat(scheme, t_us, &y, &mut dy);
    y = dy;
    AmplitudeState {
        c_g: y[0],
        c_i: y[1],
        c_r: y[2],
    }
}

fn schrodinger_rhs_flat(scheme: &SchemeSpec, t: f64, y: &[C64], dy: &mut [C64]) {
    let (op, os) = scheme.rabi_ang(t);
    let delta = scheme.delta_ang(t);
    let small = scheme.small_delta_ang(t);
    let i = C64::i();
    // i dc/dt = H c  =>  dc/dt = -i H c
    dy[0] = -i * (-0.5 * op * y[1]);
    dy[1] = -i * (delta * y[1] - 0.5 * op * y[0] - 0.5 * os * y[2]);
    dy[2] = -i * (small * y[2] - 0.5 * os * y[1]);
}

/// Lindblad right-hand side dρ/dt at time `t`.
pub fn lindblad_rhs(rho: &DensityMatrix3, scheme: &SchemeSpec, t_us: f64) -> DensityMatrix3 {
    let mut y = [C64::ZERO; 9];
    for k in 0..3 {
        for l in 0..3 {
            y[3 * k + l] = rho.m[k][l];
        }
    }
    let mut dy = [C64::ZERO; 9];
    lindblad_rhs_flat(scheme, t_us, &y, &mut dy);
    let mut m = [[C64::ZERO; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            m[k][l] = dy[3 * k + l];
        }
    }
    DensityMatrix3 { m }
}

#[allow(clippy::needless_range_loop)] // index pairs mirror the math
fn lindblad_rhs_flat(scheme: &SchemeSpec, t: f64, y: &[C64], dy: &mut [C64]) {
    let (op, os) = scheme.rabi_ang(t);
    let delta = scheme.delta_ang(t);
    let small = scheme.small_delta_ang(t);
    let (gamma_gi, gamma_ir) = scheme.decay_ang();

    let h = [
        [C64::ZERO, C64::new(-0.5 * op, 0.0), C64::ZERO],
        [
            C64::new(-0.5 * op, 0.0),
            C64::new(delta, 0.0),
            C64::new(-0.5 * os, 0.0),
        ],
        [C64::ZERO, C64::new(-0.5 * os, 0.0), C64::new(small, 0.0)],
    ];
    let rho = |k: usize, l: usize| y[3 * k + l];

    // Total decay width out of each state.
    let width = [0.0, gamma_gi, gamma_ir];
    let i = C64::i();
    for k in 0..3 {
        for l in 0..3 {
            let mut comm = C64::ZERO;
            for n in 0..3 {
                comm += h[k][n] * rho(n, l) - rho(k, n) * h[n][l];
            }
            let mut d = -i * comm - 0.5 * (width[k] + width[l]) * rho(k, l);
            // Recycling terms: sigma rho sigma^dagger.
            if k == 0 && l == 0 {
                d += gamma_gi * rho(1, 1); // i -> g
            }
            if k == 1 && l == 1 {
                d += gamma_ir * rho(2, 2); // r -> i
            }
            dy[3 * k + l] = d;
        }
    }
}

/// Effective two-level right-hand side for (c_g, c_r).
pub fn effective_rhs(c: &[C64; 2], scheme: &SchemeSpec, t_us: f64) -> Result<[C64; 2]> {
    check_elimination_validity(scheme, t_us)?;
    let mut dy = [C64::ZERO; 2];
    effective_rhs_flat(scheme, t_us, c, &mut dy);
    Ok(dy)
}

fn effective_rhs_flat(scheme: &SchemeSpec, t: f64, y: &[C64], dy: &mut [C64]) {
    let (op, os) = scheme.rabi_ang(t);
    let delta = scheme.delta_ang(t);
    let small = scheme.small_delta_ang(t);
    let stark_g = op * op / (4.0 * delta);
    let stark_r = os * os / (4.0 * delta);
    // Elimination of c_i = (Omega_p c_g + Omega_S c_r)/2Delta yields a g-r
    // coupling of Omega_eff/2 = Omega_p Omega_S/4Delta.
    let half_coupling = op * os / (4.0 * delta);
    let i = C64::i();
    dy[0] = -i * (-stark_g * y[0] - half_coupling * y[1]);
    dy[1] = -i * ((small - stark_r) * y[1] - half_coupling * y[0]);
}

fn check_elimination_validity(scheme: &SchemeSpec, t: f64) -> Result<()> {
    let (op, os) = scheme.rabi_ang(t);
    let delta = scheme.delta_ang(t).abs();
    let peak = op.abs().max(os.abs());
    if delta <= 10.0 * peak {
        return Err(ArpError::Domain(format!(
            "adiabatic elimination invalid at t = {t} us: |Delta| = {delta:.3} rad/us \
             is not > 10x the Rabi frequency {peak:.3} rad/us"
        )));
    }
    Ok(())
}

/// Final state of a propagation, matching the model that produced it.
#[derive(Debug, Clone)]
pub enum FinalState {
    Pure3(AmplitudeState),
    Pure2([C64; 2]),
    Density(DensityMatrix3),
}

/// Sampled populations over the integration window plus metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: RhsKind,
    pub scheme: SchemeSpec,
    pub times_us: Vec<f64>,
    pub p_g: Vec<f64>,
    pub p_i: Vec<f64>,
    pub p_r: Vec<f64>,
    /// Per-sample coherence magnitudes (|ρ_gi|, |ρ_gr|, |ρ_ir|), when requested.
    pub coherences: Option<Vec<[f64; 3]>>,
    pub final_state: FinalState,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn final_populations(&self) -> (f64, f64, f64) {
        let n = self.times_us.len() - 1;
        (self.p_g[n], self.p_i[n], self.p_r[n])
    }

    pub fn peak_p_i(&self) -> f64 {
        self.p_i.iter().copied().fold(0.0, f64::max)
    }
}

/// Propagation controls.
#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub n_samples: usize,
    pub record_coherences: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            n_samples: 2000,
            record_coherences: false,
        }
    }
}

/// Initial condition for [`propagate`]; defaults to the pure ground state.
#[derive(Debug, Clone)]
pub enum InitialState {
    Ground,
    Pure(AmplitudeState),
    Density(DensityMatrix3),
}

/// Propagate the chosen equation of motion over the scheme's window.
pub fn propagate(
    kind: RhsKind,
    scheme: &SchemeSpec,
    initial: &InitialState,
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    scheme.validate_physics()?;
    if opts.n_samples < 2 {
        return Err(ArpError::InvalidSpec("n_samples must be >= 2".into()));
    }
    let (t0, t1) = (scheme.t_start_us, scheme.t_end_us);
    let times: Vec<f64> = (0..opts.n_samples)
        .map(|k| t0 + (t1 - t0) * k as f64 / (opts.n_samples - 1) as f64)
        .collect();
    let ode_opts = OdeOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        ..Default::default()
    };

    if kind == RhsKind::Effective {
        // The elimination precondition must hold across the whole window.
        for k in 0..=256 {
            let t = t0 + (t1 - t0) * k as f64 / 256.0;
            check_elimination_validity(scheme, t)?;
        }
    }

    let y0: Vec<C64> = match (kind, initial) {
        (RhsKind::Schrodinger, InitialState::Ground) => {
            let s = AmplitudeState::ground();
            vec![s.c_g, s.c_i, s.c_r]
        }
        (RhsKind::Schrodinger, InitialState::Pure(s)) => vec![s.c_g, s.c_i, s.c_r],
        (RhsKind::Schrodinger, InitialState::Density(_)) => {
            return Err(ArpError::InvalidSpec(
                "Schrodinger propagation requires a pure initial state".into(),
            ))
        }
        (RhsKind::Effective, InitialState::Ground) => vec![C64::new(1.0, 0.0), C64::ZERO],
        (RhsKind::Effective, InitialState::Pure(s)) => {
            if s.c_i.norm() > 0.0 {
                return Err(ArpError::InvalidSpec(
                    "effective model has no intermediate-state amplitude".into(),
                ));
            }
            vec![s.c_g, s.c_r]
        }
        (RhsKind::Effective, InitialState::Density(_)) => {
            return Err(ArpError::InvalidSpec(
                "effective propagation requires a pure initial state".into(),
            ))
        }
        (RhsKind::Lindblad, InitialState::Ground) => flatten(&DensityMatrix3::ground()),
        (RhsKind::Lindblad, InitialState::Pure(s)) => flatten(&DensityMatrix3::from_pure(s)),
        (RhsKind::Lindblad, InitialState::Density(rho)) => {
            if rho.hermiticity_error() > 1e-10 {
                return Err(ArpError::InvalidSpec(
                    "initial density matrix is not Hermitian".into(),
                ));
            }
            if (rho.trace() - 1.0).abs() > 1e-8 {
                return Err(ArpError::InvalidSpec(
                    "initial density matrix trace != 1".into(),
                ));
            }
            flatten(rho)
        }
    };

    let mut p_g = Vec::with_capacity(opts.n_samples);
    let mut p_i = Vec::with_capacity(opts.n_samples);
    let mut p_r = Vec::with_capacity(opts.n_samples);
    let mut coh: Option<Vec<[f64; 3]>> = if opts.record_coherences {
        Some(Vec::with_capacity(opts.n_samples))
    } else {
        None
    };
    let mut sample_ts = Vec::with_capacity(opts.n_samples);
    let invariant_tol = 100.0 * opts.rel_tol;
    let mut invariant_violation: Option<(f64, f64)> = None;

    let record = |t: f64,
                  y: &[C64],
                  p_g: &mut Vec<f64>,
                  p_i: &mut Vec<f64>,
                  p_r: &mut Vec<f64>,
                  coh: &mut Option<Vec<[f64; 3]>>,
                  violation: &mut Option<(f64, f64)>| {
        match kind {
            RhsKind::Schrodinger => {
                p_g.push(y[0].norm_sqr());
                p_i.push(y[1].norm_sqr());
                p_r.push(y[2].norm_sqr());
                if let Some(c) = coh {
                    c.push([
                        (y[0] * y[1].conj()).norm(),
                        (y[0] * y[2].conj()).norm(),
                        (y[1] * y[2].conj()).norm(),
                    ]);
                }
                let drift = (y[0].norm_sqr() + y[1].norm_sqr() + y[2].norm_sqr() - 1.0).abs();
                if drift > invariant_tol && violation.is_none() {
                    *violation = Some((t, drift));
                }
            }
            RhsKind::Effective => {
                p_g.push(y[0].norm_sqr());
                p_i.push(0.0);
                p_r.push(y[1].norm_sqr());
                if let Some(c) = coh {
                    c.push([0.0, (y[0] * y[1].conj()).norm(), 0.0]);
                }
                let drift = (y[0].norm_sqr() + y[1].norm_sqr() - 1.0).abs();
                if drift > invariant_tol && violation.is_none() {
                    *violation = Some((t, drift));
                }
            }
            RhsKind::Lindblad => {
                p_g.push(y[0].re);
                p_i.push(y[4].re);
                p_r.push(y[8].re);
                if let Some(c) = coh {
                    c.push([y[1].norm(), y[2].norm(), y[5].norm()]);
                }
                let drift = (y[0].re + y[4].re + y[8].re - 1.0).abs();
                if drift > invariant_tol && violation.is_none() {
                    *violation = Some((t, drift));
                }
            }
        }
    };

    let (y_final, stats) = ode::integrate(
        |t, y, dy| match kind {
            RhsKind::Schrodinger => schrodinger_rhs_flat(scheme, t, y, dy),
            RhsKind::Lindblad => lindblad_rhs_flat(scheme, t, y, dy),
            RhsKind::Effective => effective_rhs_flat(scheme, t, y, dy),
        },
        t0,
        t1,
        &y0,
        &times,
        &ode_opts,
        |t, y| {
            sample_ts.push(t);
            record(
                t,
                y,
                &mut p_g,
                &mut p_i,
                &mut p_r,
                &mut coh,
                &mut invariant_violation,
            );
        },
    )?;

    if let Some((t, drift)) = invariant_violation {
        return Err(ArpError::Numerics {
            t,
            message: format!(
                "norm/trace drift {drift:.3e} exceeds 100x rel_tol ({invariant_tol:.3e})"
            ),
        });
    }

    let final_state = match kind {
        RhsKind::Schrodinger => FinalState::Pure3(AmplitudeState {
            c_g: y_final[0],
            c_i: y_final[1],
            c_r: y_final[2],
        }),
        RhsKind::Effective => FinalState::Pure2([y_final[0], y_final[1]]),
        RhsKind::Lindblad => {
            let mut m = [[C64::ZERO; 3]; 3];
            for k in 0..3 {
                for l in 0..3 {
                    m[k][l] = y_final[3 * k + l];
                }
            }
            FinalState::Density(DensityMatrix3 { m })
        }
    };

    Ok(Trajectory {
        kind,
        scheme: *scheme,
        times_us: sample_ts,
        p_g,
        p_i,
        p_r,
        coherences: coh,
        final_state,
        stats,
    })
}

/// Convenience: dressed-state snapshot chain shared with `effective`.
pub fn snapshot_series(scheme: &SchemeSpec, n: usize) -> Result<Vec<effective::DressedSnapshot>> {
    (0..n)
        .map(|k| {
            let t = scheme.t_start_us
                + (scheme.t_end_us - scheme.t_start_us) * k as f64 / (n - 1) as f64;
            effective::snapshot(scheme, t)
        })
        .collect()
}

fn flatten(rho: &DensityMatrix3) -> Vec<C64> {
    let mut y = Vec::with_capacity(9);
    for k in 0..3 {
        for l in 0..3 {
            y.push(rho.m[k][l]);
        }
    }
    y
}

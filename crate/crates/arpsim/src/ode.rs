//! Adaptive embedded Runge-Kutta integration.
//!
//! A Dormand-Prince 5(4) pair with proportional-integral step-size control,
//! operating on flat complex state vectors. Output samples are hit exactly by
//! clipping the step, so no dense-output interpolation error enters the
//! recorded trajectories.

use num_complex::Complex64 as C64;

use crate::error::{ArpError, Result};

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(ArpError::InvalidSpec(format!(
                    "{name} must be in (0, 1e-3], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Work counters and a (conservative) accumulated local-error estimate.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Sum of accepted local error norms scaled by the tolerance; an upper
    /// estimate of the accumulated truncation error in the state components.
    pub error_estimate: f64,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// b5 - b4 (error coefficients)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1`, invoking `on_sample` at each
/// requested time (strictly increasing, within `[t0, t1]`). Returns the final
/// state and integrator statistics.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[C64],
    sample_times: &[f64],
    opts: &OdeOptions,
    mut on_sample: S,
) -> Result<(Vec<C64>, OdeStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]),
{
    opts.validate()?;
    let n = y0.len();
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(ArpError::InvalidSpec("integrate: t1 must be > t0".into()));
    }

    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::ZERO; n]);
    let mut y_stage = vec![C64::ZERO; n];
    let mut y_new = vec![C64::ZERO; n];

    let mut samples = sample_times.iter().copied().peekable();
    while let Some(&ts) = samples.peek() {
        if ts <= t0 {
            on_sample(t0, &y);
            samples.next();
        } else {
            break;
        }
    }

    // k[0] = f(t0, y0); FSAL thereafter.
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut h = initial_step(&mut f, t, &y, &k[0].clone(), span, opts, &mut stats);

    // PI controller state (Hairer DOPRI5 defaults).
    let beta = 0.04_f64;
    let expo1 = 0.2 - 0.75 * beta;
    let safe = 0.9_f64;
    let mut facold = 1e-4_f64;
    let mut last_rejected = false;

    while t < t1 {
        if stats.steps + stats.rejected > opts.max_steps {
            return Err(ArpError::Numerics {
                t,
                message: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        if h < 1e-14 * span.max(t.abs()) {
            return Err(ArpError::Numerics {
                t,
                message: "step size underflow (problem too stiff at this time)".into(),
            });
        }

        // Clip to the end of the window and to the next sample time.
        let mut h_try = h.min(t1 - t);
        let next_sample = samples.peek().copied();
        if let Some(ts) = next_sample {
            if ts > t && ts - t < h_try {
                h_try = ts - t;
            }
        }

        // Stages 2..7 (k[0] holds f(t, y)).
        for s in 1..7 {
            for i in 0..n {
                let mut acc = C64::ZERO;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h_try * acc;
            }
            f(t + C[s] * h_try, &y_stage, &mut k[s]);
            stats.rhs_evals += 1;
        }

        // 5th-order solution and embedded error.
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut acc = C64::ZERO;
            let mut e = C64::ZERO;
            for s in 0..7 {
                acc += B5[s] * k[s][i];
                e += E[s] * k[s][i];
            }
            y_new[i] = y[i] + h_try * acc;
            let scale = opts.abs_tol + opts.rel_tol * y[i].norm().max(y_new[i].norm());
            let r = (h_try * e).norm() / scale;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            // Accept.
            stats.steps += 1;
            stats.error_estimate += err * opts.rel_tol;
            t += h_try;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: k7 is f(t_new, y_new).
            k.swap(0, 6);

            if let Some(ts) = next_sample {
                if (t - ts).abs() <= 1e-12 * span {
                    on_sample(t, &y);
                    samples.next();
                }
            }

            let fac = ((err.powf(expo1) / facold.powf(beta)) / safe).clamp(0.2, 10.0);
            let fac = if last_rejected { fac.max(1.0) } else { fac };
            let h_new = h_try / fac;
            // A step clipped to a sample time must not collapse the
            // controller's step size.
            h = if h_try < h { h.max(h_new) } else { h_new };
            facold = err.max(1e-4);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = ((err.powf(expo1) / facold.powf(beta)) / safe).clamp(0.2, 10.0);
            h = h_try / fac.max(1.0 / safe);
            last_rejected = true;
        }
    }

    // Flush any samples at exactly t1 that were missed by roundoff.
    for ts in samples {
        if (ts - t1).abs() <= 1e-9 * span {
            on_sample(t1, &y);
        }
    }

    Ok((y, stats))
}

/// Rough version of the standard starting-step heuristic.
fn initial_step<F>(
    f: &mut F,
    t0: f64,
    y0: &[C64],
    f0: &[C64],
    span: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let scale: Vec<f64> = y0
        .iter()
        .map(|y| opts.abs_tol + opts.rel_tol * y.norm())
        .collect();
    let d0 = rms(y0, &scale);
    let d1 = rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * (d0 / d1)
    };

    // One explicit Euler step to probe the second derivative.
    let y1: Vec<C64> = y0.iter().zip(f0).map(|(y, k)| y + h0 * k).collect();
    let mut f1 = vec![C64::ZERO; n];
    f(t0 + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let d2 = {
        let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        rms(&diff, &scale) / h0
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

fn rms(v: &[C64], scale: &[f64]) -> f64 {
    let s: f64 = v
        .iter()
        .zip(scale)
        .map(|(x, sc)| (x.norm() / sc).powi(2))
        .sum();
    (s / v.len() as f64).sqrt()
}

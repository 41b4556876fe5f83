//! Moment equations and a fixed-step RK4 integrator.
//!
//! From the Heisenberg equations `ȧ1 = χb†`, `ḃ = χa1† − θa2`, `ȧ2 = θb`,
//! differentiating the six moments gives the closed linear system
//!
//! ```text
//! Ȧ = 2χC                 Ḃ = 2χC + 2θD          Ė = −2θD
//! Ċ = χ(1 + A + B) − θF   Ḋ = θ(E − B) − χF      Ḟ = θC − χD
//! ```
//!
//! (for example `d<a1†b†>/dt = χ<b b†> + <a1†(χa1 − θa2†)> = χ(1 + B + A) − θF`).
//! The same system follows from substituting the Gaussian ansatz into the
//! evolution equation of the characteristic function and matching the
//! coefficients of `|μ|²`, `|ν|²`, `|ζ|²`, `μν`, `νζ*` and `μζ`.

use super::GaussianCoeffs;
use crate::error::{domain, Error, Result};
use crate::optomech::{Couplings, ThermalOccupation};

/// Relative step-doubling tolerance, measured against `max(1, max|y|)`.
pub const STEP_DOUBLING_TOL: f64 = 1e-10;

/// Right-hand side of the moment system for `y = [A, B, C, D, E, F]`.
pub fn moment_derivatives(cp: &Couplings, y: &[f64; 6]) -> [f64; 6] {
    let (chi, th) = (cp.chi, cp.theta);
    let [a, b, c, d, e, f] = *y;
    [
        2.0 * chi * c,
        2.0 * chi * c + 2.0 * th * d,
        chi * (1.0 + a + b) - th * f,
        th * (e - b) - chi * f,
        -2.0 * th * d,
        th * c - chi * d,
    ]
}

/// One classic fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let shifted = |base: &[f64; N], k: &[f64; N], scale: f64| -> [f64; N] {
        let mut out = *base;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += scale * ki;
        }
        out
    };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &shifted(y, &k1, 0.5 * h));
    let k3 = rhs(t + 0.5 * h, &shifted(y, &k2, 0.5 * h));
    let k4 = rhs(t + h, &shifted(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from `t0` to `t1` in `steps` equal steps.
pub fn rk4_integrate<const N: usize, F>(
    rhs: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    steps: usize,
) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if steps == 0 {
        return y0;
    }
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        y = rk4_step(rhs, t0 + i as f64 * h, &y, h);
    }
    y
}

fn integrate_through(
    cp: &Couplings,
    y0: [f64; 6],
    times: &[f64],
    dt_max: f64,
    refine: usize,
) -> Vec<[f64; 6]> {
    let rhs = |_t: f64, y: &[f64; 6]| moment_derivatives(cp, y);
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut y) = (0.0, y0);
    for &target in times {
        let steps = ((target - t) / dt_max).ceil() as usize * refine;
        y = rk4_integrate(&rhs, t, y, target, steps);
        t = target;
        out.push(y);
    }
    out
}

fn check_times(times: &[f64], dt_max: f64) -> Result<()> {
    if !(dt_max.is_finite() && dt_max > 0.0) {
        return Err(domain(format!("dt_max must be > 0 (got {dt_max})")));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(domain(
                "sample times must be finite, >= 0 and non-decreasing",
            ));
        }
        prev = t;
    }
    Ok(())
}

/// RK4 solution of the moment system at each of the ascending `times`.
///
/// The whole trajectory is integrated twice, with steps of at most
/// `dt_max` and with half that; the finer run is returned if the two agree
/// within [`STEP_DOUBLING_TOL`] relative to the trajectory scale.
pub fn coeffs_ode_trajectory(
    cp: &Couplings,
    nbar: ThermalOccupation,
    times: &[f64],
    dt_max: f64,
) -> Result<Vec<GaussianCoeffs>> {
    check_times(times, dt_max)?;
    let n = nbar.value();
    let y0 = [0.0, n, 0.0, 0.0, 0.0, 0.0];
    let coarse = integrate_through(cp, y0, times, dt_max, 1);
    let fine = integrate_through(cp, y0, times, dt_max, 2);

    let mut defect = 0.0_f64;
    let mut scale = 1.0_f64;
    for (yc, yf) in coarse.iter().zip(&fine) {
        for (p, q) in yc.iter().zip(yf) {
            defect = defect.max((p - q).abs());
            scale = scale.max(q.abs());
        }
    }
    if !(defect <= STEP_DOUBLING_TOL * scale) {
        return Err(Error::Integration {
            step: dt_max,
            defect,
            tolerance: STEP_DOUBLING_TOL * scale,
            scale,
        });
    }
    Ok(times
        .iter()
        .zip(fine)
        .map(|(&t, y)| GaussianCoeffs::from_raw(t, n, y))
        .collect())
}

/// RK4 solution of the moment system at a single time.
pub fn coeffs_ode(
    cp: &Couplings,
    nbar: ThermalOccupation,
    t: f64,
    dt_max: f64,
) -> Result<GaussianCoeffs> {
    Ok(coeffs_ode_trajectory(cp, nbar, &[t], dt_max)?.remove(0))
}

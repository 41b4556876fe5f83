//! Time evolution of the Stokes mode `a1`, the acoustic mode `b` and the
//! anti-Stokes mode `a2` under the effective Hamiltonian
//! `H = −iħχ(a1 b − a1† b†) − iħθ(a2 b† − a2† b)`.
//!
//! The initial state is vacuum ⊗ thermal(n̄) ⊗ vacuum and stays Gaussian.
//! Its normally ordered characteristic function is
//!
//! ```text
//! Φ = exp[−A|μ|² − B|ν|² − E|ζ|² + C(μν + μ*ν*) + F(μζ + μ*ζ*) + D(νζ* + ν*ζ)]
//! ```
//!
//! and the six coefficients are the second moments
//! `A = <a1†a1>`, `B = <b†b>`, `E = <a2†a2>`, `C = <a1†b†>`,
//! `D = −<b†a2>`, `F = <a1†a2†>`.
//!
//! Three independent routes compute them: the closed form
//! ([`coeffs_analytic`]), moments of the Heisenberg propagator
//! ([`coeffs_from_propagator`]), and RK4 integration of the moment
//! equations ([`coeffs_ode`]).

mod ode;

pub use ode::{coeffs_ode, coeffs_ode_trajectory, moment_derivatives, rk4_integrate, rk4_step};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{domain, Result};
use crate::gaussian::PropagatorMatrix;
use crate::optomech::{Couplings, ThermalOccupation};

/// Heterodyne-conditioned combinations of the coefficients.
///
/// These are the O(1) quantities the protocol needs. When the couplings are
/// nearly degenerate (`χ/Θ ≫ 1`) the raw coefficients grow like `(χ/Θ)⁴`
/// and these combinations cancel to many digits, so the closed-form route
/// fills them in directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedMoments {
    /// `A − F²/(E+1)`
    pub stokes: f64,
    /// `B − D²/(E+1)`
    pub mirror: f64,
    /// `C + FD/(E+1)`
    pub cross: f64,
    /// `1 + A + B + 2C − (F−D)²/(E+1)`, the effective occupation after
    /// Alice's measurements.
    pub added_noise: f64,
    /// `1 + A + B + 2C`, the same with the anti-Stokes mode traced out.
    pub added_noise_traced: f64,
}

impl ConditionedMoments {
    /// Schur-complement formulas evaluated on the raw coefficients.
    fn from_raw(k: &[f64; 6]) -> Self {
        let [a, b, c, d, e, f] = *k;
        let e1 = e + 1.0;
        Self {
            stokes: a - f * f / e1,
            mirror: b - d * d / e1,
            cross: c + f * d / e1,
            added_noise: 1.0 + a + b + 2.0 * c - (f - d) * (f - d) / e1,
            added_noise_traced: 1.0 + a + b + 2.0 * c,
        }
    }
}

/// The six coefficients of the three-mode Gaussian state at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    f: f64,
    t: f64,
    nbar: f64,
    conditioned: ConditionedMoments,
}

impl GaussianCoeffs {
    /// Coefficients `[A, B, C, D, E, F]` from any source; the conditioned
    /// block is formed from them directly.
    pub fn from_raw(t: f64, nbar: f64, coeffs: [f64; 6]) -> Self {
        Self::assemble(t, nbar, coeffs, ConditionedMoments::from_raw(&coeffs))
    }

    fn assemble(t: f64, nbar: f64, k: [f64; 6], conditioned: ConditionedMoments) -> Self {
        let [a, b, c, d, e, f] = k;
        Self {
            a,
            b,
            c,
            d,
            e,
            f,
            t,
            nbar,
            conditioned,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn e(&self) -> f64 {
        self.e
    }
    pub fn f(&self) -> f64 {
        self.f
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// `[A, B, C, D, E, F]`
    pub fn as_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn conditioned(&self) -> &ConditionedMoments {
        &self.conditioned
    }

    /// Largest coefficient magnitude, at least 1.
    pub fn scale(&self) -> f64 {
        self.as_array().iter().fold(1.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Trigonometric building blocks shared by the closed forms.
struct Phase {
    s: f64,
    c: f64,
    /// `1 − cos Θt`, as `2 sin²(Θt/2)`.
    u: f64,
    /// `χ/Θ`
    k: f64,
    /// `θ/Θ`
    r: f64,
}

impl Phase {
    fn new(cp: &Couplings, t: f64) -> Self {
        let x = cp.big_theta * t;
        let (s, c) = x.sin_cos();
        let h = (0.5 * x).sin();
        Self {
            s,
            c,
            u: 2.0 * h * h,
            k: cp.chi / cp.big_theta,
            r: cp.theta / cp.big_theta,
        }
    }
}

/// Closed-form coefficients at time `t`.
///
/// The expressions are regrouped so every (1 − cos) appears as 2 sin² and
/// `A`, `B`, `E` are sums of non-negative terms; no step subtracts two
/// quantities of order `(χ/Θ)⁴`.
pub fn coeffs_analytic(cp: &Couplings, nbar: ThermalOccupation, t: f64) -> Result<GaussianCoeffs> {
    cp.require_oscillatory()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("time must be finite and >= 0 (got {t})")));
    }
    let n = nbar.value();
    let Phase { s, c, u, k, r } = Phase::new(cp, t);
    let k2 = k * k;
    let growth = 1.0 + k2 * u;

    let a = k2 * u * (2.0 + k2 * u) + n * k2 * s * s;
    let b = k2 * s * s + n * c * c;
    let cc = k * s * growth + n * k * s * c;
    let d = -r * s * (k2 * u + n * c);
    let e = k2 * r * r * u * u + n * r * r * s * s;
    let f = k * r * (u * growth + n * s * s);

    let w = n + 1.0;
    let e1 = 1.0 + e;
    let ks = k * s;
    let traced_x = ks + c;
    let traced_p = r * (k * u + s);
    let conditioned = ConditionedMoments {
        stokes: w * ks * ks / e1,
        mirror: w * growth * growth / e1 - 1.0,
        cross: w * ks * growth / e1,
        added_noise: w * (ks + growth) * (ks + growth) / e1,
        added_noise_traced: w * traced_x * traced_x + traced_p * traced_p,
    };
    Ok(GaussianCoeffs::assemble(
        t,
        n,
        [a, b, cc, d, e, f],
        conditioned,
    ))
}

/// Heisenberg propagator of `(a1, b†, a2†)`:
/// `M(t) = I + K sin(Θt)/Θ + K² (1 − cos Θt)/Θ²` with
/// `K = [[0, χ, 0], [χ, 0, −θ], [0, θ, 0]]`.
pub fn propagator(cp: &Couplings, t: f64) -> Result<PropagatorMatrix> {
    cp.require_oscillatory()?;
    let Phase { s, c, u, k, r } = Phase::new(cp, t);
    #[rustfmt::skip]
    let m = Matrix3::new(
        1.0 + k * k * u, k * s,   -k * r * u,
        k * s,           c,       -r * s,
        k * r * u,       r * s,   1.0 - r * r * u,
    );
    Ok(PropagatorMatrix { m, t })
}

/// Signs relating `(C, D, F)` to `(<a1†b†>, <b†a2>, <a1†a2†>)`.
pub const CROSS_MOMENT_SIGNS: [f64; 3] = [1.0, -1.0, 1.0];

/// Raw second moments `[<a1†a1>, <b†b>, <a2†a2>, <a1†b†>, <b†a2>, <a1†a2†>]`
/// of the evolved state.
pub fn propagated_moments(m: &PropagatorMatrix, nbar: ThermalOccupation) -> [f64; 6] {
    let n = nbar.value();
    // <v_i† v_j> and <v_i v_j†> at t = 0 for v = (a1, b†, a2†); both diagonal.
    let normal = [0.0, n + 1.0, 1.0];
    let anti = [1.0, n, 0.0];
    let [r1, r2, r3] = [m.row(0), m.row(1), m.row(2)];
    let dot = |x: &[f64; 3], y: &[f64; 3], wt: &[f64; 3]| -> f64 {
        (0..3).map(|i| x[i] * y[i] * wt[i]).sum()
    };
    [
        dot(&r1, &r1, &normal),
        dot(&r2, &r2, &normal) - 1.0,
        dot(&r3, &r3, &normal) - 1.0,
        dot(&r1, &r2, &normal),
        dot(&r2, &r3, &anti),
        dot(&r1, &r3, &normal),
    ]
}

/// Re-derives [`CROSS_MOMENT_SIGNS`] by comparing propagated cross moments
/// with the closed-form `C, D, F` at `ε = 10⁻³/Θ`, where all three are
/// already nonzero (n̄ = 1 is used so `D` has a first-order term).
pub fn derive_cross_moment_signs(cp: &Couplings) -> Result<[f64; 3]> {
    let eps = 1e-3 / cp.big_theta;
    let nbar = ThermalOccupation(1.0);
    let g = coeffs_analytic(cp, nbar, eps)?;
    let mom = propagated_moments(&propagator(cp, eps)?, nbar);
    let pairs = [(g.c, mom[3]), (g.d, mom[4]), (g.f, mom[5])];
    let mut signs = [0.0; 3];
    for (slot, (closed, raw)) in signs.iter_mut().zip(pairs) {
        if closed == 0.0 || raw == 0.0 {
            return Err(domain("cross moments vanish at the matching time"));
        }
        *slot = (closed * raw).signum();
    }
    Ok(signs)
}

/// Coefficients from the second moments of a propagated initial state.
pub fn coeffs_from_propagator(m: &PropagatorMatrix, nbar: ThermalOccupation) -> GaussianCoeffs {
    let [a, b, e, c_raw, d_raw, f_raw] = propagated_moments(m, nbar);
    let [sc, sd, sf] = CROSS_MOMENT_SIGNS;
    GaussianCoeffs::from_raw(
        m.t,
        nbar.value(),
        [a, b, sc * c_raw, sd * d_raw, e, sf * f_raw],
    )
}

/// Revival period `2π/Θ` of the dynamics, in seconds.
pub fn period(cp: &Couplings) -> Result<f64> {
    cp.require_oscillatory()?;
    Ok(TAU / cp.big_theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn moderate() -> Couplings {
        Couplings::new(1.0, 1.5).unwrap()
    }

    /// Closed form exactly as printed: sin² substitutions only.
    fn printed_form(cp: &Couplings, n: f64, t: f64) -> [f64; 6] {
        let (chi, th, bt) = (cp.chi, cp.theta, cp.big_theta);
        let x = bt * t;
        let cos1m = -2.0 * (0.5 * x).sin().powi(2); // cos x − 1
        let cos2m = -2.0 * x.sin().powi(2); // cos 2x − 1
        let (b2, b3, b4) = (bt.powi(2), bt.powi(3), bt.powi(4));
        let a = chi.powi(4) / (2.0 * b4) * cos2m
            - 2.0 * chi * chi * th * th / b4 * cos1m
            - n * chi * chi / (2.0 * b2) * cos2m;
        let b = -chi * chi / (2.0 * b2) * cos2m + n / 2.0 * (2.0 + cos2m);
        let c = -chi.powi(3) / (2.0 * b3) * (2.0 * x).sin()
            + chi * th * th / b3 * x.sin()
            + n * chi / (2.0 * bt) * (2.0 * x).sin();
        let d = chi * chi * th / (2.0 * b3) * (2.0 * x).sin()
            - chi * chi * th / b3 * x.sin()
            - n * th / (2.0 * bt) * (2.0 * x).sin();
        let e = chi * chi * th * th / (2.0 * b4) * cos2m
            - 2.0 * chi * chi * th * th / b4 * cos1m
            - n * th * th / (2.0 * b2) * cos2m;
        let f = chi.powi(3) * th / (2.0 * b4) * cos2m
            - chi * th / b4 * (chi * chi + th * th) * cos1m
            - n * chi * th / (2.0 * b2) * cos2m;
        [a, b, c, d, e, f]
    }

    #[test]
    fn initial_condition() {
        for n in [0.0, 3.0, 1000.0] {
            let g = coeffs_analytic(&moderate(), ThermalOccupation(n), 0.0).unwrap();
            assert_eq!(g.as_array(), [0.0, n, 0.0, 0.0, 0.0, 0.0]);
            assert_eq!(g.conditioned().added_noise, n + 1.0);
        }
    }

    #[test]
    fn regrouped_matches_printed_form() {
        let cp = moderate();
        for n in [0.0, 1.0, 7.5] {
            for i in 0..50 {
                let t = 0.13 * i as f64;
                let g = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap();
                let p = printed_form(&cp, n, t);
                for (x, y) in g.as_array().iter().zip(p) {
                    assert_abs_diff_eq!(*x, y, epsilon = 1e-12 * (1.0 + y.abs()));
                }
            }
        }
    }

    #[test]
    fn conditioned_block_matches_schur_when_well_conditioned() {
        let cp = moderate();
        for n in [0.0, 2.0, 40.0] {
            for i in 0..40 {
                let g = coeffs_analytic(&cp, ThermalOccupation(n), 0.21 * i as f64).unwrap();
                let generic = GaussianCoeffs::from_raw(g.t(), n, g.as_array());
                let (x, y) = (g.conditioned(), generic.conditioned());
                for (p, q) in [
                    (x.stokes, y.stokes),
                    (x.mirror, y.mirror),
                    (x.cross, y.cross),
                    (x.added_noise, y.added_noise),
                    (x.added_noise_traced, y.added_noise_traced),
                ] {
                    assert_abs_diff_eq!(p, q, epsilon = 1e-11 * (1.0 + n));
                }
            }
        }
    }

    #[test]
    fn propagator_starts_at_identity() {
        let m = propagator(&moderate(), 0.0).unwrap();
        assert_eq!(m.m, Matrix3::identity());
    }

    #[test]
    fn frozen_signs_rederive() {
        for cp in [moderate(), Couplings::new(3.0, 3.1).unwrap()] {
            assert_eq!(derive_cross_moment_signs(&cp).unwrap(), CROSS_MOMENT_SIGNS);
        }
    }

    #[test]
    fn degenerate_couplings_rejected() {
        let cp = Couplings::from_parts_unchecked(1.0, 1.0, 0.0);
        assert!(coeffs_analytic(&cp, ThermalOccupation(0.0), 1.0).is_err());
        assert!(propagator(&cp, 1.0).is_err());
        assert!(period(&cp).is_err());
    }

    #[test]
    fn period_of_unit_frequency() {
        let cp = Couplings::from_parts_unchecked(0.0, TAU, TAU);
        assert_abs_diff_eq!(period(&cp).unwrap(), 1.0, epsilon = 1e-15);
    }
}

//! Heterodyne-conditioned channel state, teleportation of Gaussian inputs,
//! fidelity, and Bob's corrective displacement.
//!
//! Alice projects the anti-Stokes mode onto a coherent state `|α>`. The
//! remaining Stokes–mirror state has the correlation matrix returned by
//! [`conditional_correlation`]; `α` only shifts its means, so every variance
//! and fidelity below is independent of the measurement outcome. The
//! normalisation of the conditioned state cancels everywhere and is not
//! tracked.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{SQRT_2, TAU};

use crate::dynamics::{coeffs_analytic, period, GaussianCoeffs};
use crate::error::{Error, Result};
use crate::gaussian::{physicality_defect, CorrelationMatrix4, CovMatrix2, VACUUM_VARIANCE};
use crate::optomech::{Couplings, ThermalOccupation};

/// Best coherent-state fidelity reachable without entanglement.
pub const CLASSICAL_FIDELITY_BOUND: f64 = 0.5;

/// Largest physicality violation tolerated in a conditioned state.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Smallest negative effective occupation attributed to rounding.
pub const NEGATIVE_NOISE_TOL: f64 = 1e-10;

/// Default number of grid points per period for maximisation.
pub const DEFAULT_GRID: usize = 2000;

/// What Alice does with the anti-Stokes mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Heterodyne measurement; its outcome conditions the channel.
    Heterodyne,
    /// The mode is discarded.
    TracedOut,
}

/// Alice's measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub x_plus: f64,
    pub p_minus: f64,
    pub alpha: Complex64,
}

/// Shift Bob applies to the mirror quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCommand {
    pub dx: f64,
    pub dp: f64,
}

/// Intensity and phase of the bichromatic drive realising a displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationSetting {
    /// Direction of the displacement in the `(X_b, P_b)` plane, in `[0, 2π)`;
    /// zero displaces along `+X_b`.
    pub phase: f64,
    /// Displacement length in quadrature units.
    pub strength: f64,
}

impl ActuationSetting {
    /// Relative phase `φ` between the two drive tones.
    ///
    /// `H ∝ b e^{−iφ} + b† e^{iφ}` acting for a time `τ` with rate `κ` maps
    /// `b → b − iκτ e^{iφ}`, i.e. it displaces along direction `φ − π/2`.
    pub fn drive_relative_phase(&self) -> f64 {
        (self.phase + 0.25 * TAU).rem_euclid(TAU)
    }

    /// Mean `(X_b, P_b)` after the displacement.
    pub fn apply(&self, mean: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.phase.sin_cos();
        (mean.0 + self.strength * c, mean.1 + self.strength * s)
    }
}

/// Correlation matrix over `(X_a1, P_a1, X_b, P_b)` after the heterodyne
/// projection of the anti-Stokes mode.
pub fn conditional_correlation(g: &GaussianCoeffs) -> Result<CorrelationMatrix4> {
    let k = g.conditioned();
    let a = k.stokes + VACUUM_VARIANCE;
    let b = k.mirror + VACUUM_VARIANCE;
    let c = k.cross;
    let gamma = CorrelationMatrix4::from_rows([
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, -c],
        [c, 0.0, b, 0.0],
        [0.0, -c, 0.0, b],
    ])?;
    let defect = physicality_defect(&gamma);
    if defect > PHYSICALITY_TOL {
        return Err(Error::Consistency(format!(
            "conditioned state at t = {} violates the uncertainty principle by {defect:e}",
            g.t()
        )));
    }
    Ok(gamma)
}

/// Output covariance for input covariance `gin` sent through the channel `g`.
pub fn teleport_covariance(g: &CorrelationMatrix4, gin: &CovMatrix2) -> Result<CovMatrix2> {
    let added_xx = g.get(1, 1) + 2.0 * g.get(1, 3) + g.get(3, 3);
    let added_xp = g.get(1, 4) - g.get(1, 2) + g.get(3, 4) - g.get(2, 3);
    let added_pp = g.get(2, 2) - 2.0 * g.get(2, 4) + g.get(4, 4);
    CovMatrix2::new(
        gin.xx() + added_xx,
        gin.xp() + added_xp,
        gin.pp() + added_pp,
    )
}

/// Overlap fidelity of a coherent input with a Gaussian output of equal mean.
pub fn fidelity_from_covariances(gin: &CovMatrix2, gout: &CovMatrix2) -> f64 {
    let sum = CovMatrix2::new(
        gin.xx() + gout.xx(),
        gin.xp() + gout.xp(),
        gin.pp() + gout.pp(),
    )
    .map(|m| m.det())
    .unwrap_or(f64::NAN);
    1.0 / sum.sqrt()
}

/// Effective thermal occupation of the mirror after Alice's measurements,
/// `1 + A + B + 2C − (F − D)²/(E + 1)`.
pub fn effective_occupation(g: &GaussianCoeffs) -> Result<f64> {
    let n = g.conditioned().added_noise;
    if n.is_nan() || n < -NEGATIVE_NOISE_TOL {
        return Err(Error::Consistency(format!(
            "negative effective occupation {n:e} at t = {}",
            g.t()
        )));
    }
    Ok(n)
}

/// Teleportation fidelity for coherent inputs, `1/(1 + n̄_eff)`.
pub fn fidelity_coherent(g: &GaussianCoeffs) -> Result<f64> {
    effective_occupation(g).map(|n| 1.0 / (1.0 + n))
}

/// Fidelity when the anti-Stokes mode is discarded: `1/(2 + A + B + 2C)`.
pub fn fidelity_no_heterodyne(g: &GaussianCoeffs) -> f64 {
    1.0 / (1.0 + g.conditioned().added_noise_traced)
}

pub fn fidelity(g: &GaussianCoeffs, scheme: Scheme) -> Result<f64> {
    match scheme {
        Scheme::Heterodyne => fidelity_coherent(g),
        Scheme::TracedOut => Ok(fidelity_no_heterodyne(g)),
    }
}

/// Location and value of the fidelity maximum within one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTime {
    /// Interaction time, s.
    pub t: f64,
    /// The same time in units of `1/Θ`.
    pub theta_t: f64,
    pub fidelity: f64,
}

/// Grid actually scanned for a requested density: never coarser than eight
/// points per fidelity feature. Features are `1/χ` wide when `χ ≫ Θ`, and
/// narrower by `√(1 + n̄)` once the anti-Stokes mode is discarded.
pub fn scan_points(
    cp: &Couplings,
    nbar: ThermalOccupation,
    scheme: Scheme,
    grid_points: usize,
) -> Result<usize> {
    let narrowing = match scheme {
        Scheme::Heterodyne => 1.0,
        Scheme::TracedOut => (1.0 + nbar.value()).sqrt(),
    };
    let per_feature = (8.0 * cp.chi * narrowing * period(cp)?).ceil();
    Ok(grid_points.max(per_feature as usize))
}

fn fidelity_at(cp: &Couplings, nbar: ThermalOccupation, scheme: Scheme, t: f64) -> Result<f64> {
    fidelity(&coeffs_analytic(cp, nbar, t)?, scheme)
}

fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Maximum of the coherent-state fidelity over one period.
pub fn optimal_time(
    cp: &Couplings,
    nbar: ThermalOccupation,
    grid_points: usize,
) -> Result<OptimalTime> {
    optimal_time_for(cp, nbar, grid_points, Scheme::Heterodyne)
}

/// Maximum over one period: uniform scan, then golden-section refinement of
/// the best few local maxima of the scan.
pub fn optimal_time_for(
    cp: &Couplings,
    nbar: ThermalOccupation,
    grid_points: usize,
    scheme: Scheme,
) -> Result<OptimalTime> {
    if grid_points < 100 {
        return Err(crate::error::domain(format!(
            "at least 100 grid points required (got {grid_points})"
        )));
    }
    let tp = period(cp)?;
    let n = scan_points(cp, nbar, scheme, grid_points)?;
    let h = tp / n as f64;
    let values = (0..=n)
        .map(|i| fidelity_at(cp, nbar, scheme, i as f64 * h))
        .collect::<Result<Vec<_>>>()?;

    let mut peaks: Vec<usize> = (0..=n)
        .filter(|&i| {
            let left = if i == 0 {
                f64::NEG_INFINITY
            } else {
                values[i - 1]
            };
            let right = if i == n {
                f64::NEG_INFINITY
            } else {
                values[i + 1]
            };
            values[i] >= left && values[i] >= right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    peaks.truncate(4);

    let tol = 1e-12 * tp;
    let f = |t: f64| fidelity_at(cp, nbar, scheme, t);
    let mut best = (0.0, values[0]);
    for i in peaks {
        let lo = (i as f64 - 1.0).max(0.0) * h;
        let hi = (i as f64 + 1.0).min(n as f64) * h;
        let (t, v) = golden_section_max(f, lo, hi, tol)?;
        let candidate = if v >= values[i] {
            (t, v)
        } else {
            (i as f64 * h, values[i])
        };
        if candidate.1 > best.1 {
            best = candidate;
        }
    }
    Ok(OptimalTime {
        t: best.0,
        theta_t: best.0 * cp.big_theta,
        fidelity: best.1,
    })
}

/// Measure, in units of `Θt` over one period, of the times at which the
/// fidelity beats the classical bound. Crossings are located by bisection.
pub fn useful_window(
    cp: &Couplings,
    nbar: ThermalOccupation,
    scheme: Scheme,
    grid_points: usize,
) -> Result<f64> {
    let tp = period(cp)?;
    let n = scan_points(cp, nbar, scheme, grid_points)?;
    let h = tp / n as f64;
    let inside = |t: f64| -> Result<bool> {
        Ok(fidelity_at(cp, nbar, scheme, t)? > CLASSICAL_FIDELITY_BOUND)
    };
    let crossing = |mut out_t: f64, mut in_t: f64| -> Result<f64> {
        for _ in 0..80 {
            let mid = 0.5 * (out_t + in_t);
            if inside(mid)? {
                in_t = mid;
            } else {
                out_t = mid;
            }
        }
        Ok(0.5 * (out_t + in_t))
    };

    let mut total = 0.0;
    let mut prev_in = inside(0.0)?;
    let mut entered = if prev_in { Some(0.0) } else { None };
    for i in 1..=n {
        let (t0, t1) = ((i - 1) as f64 * h, i as f64 * h);
        let now_in = inside(t1)?;
        match (prev_in, now_in) {
            (false, true) => entered = Some(crossing(t0, t1)?),
            (true, false) => {
                let exit = crossing(t1, t0)?;
                total += exit - entered.take().unwrap_or(t0);
            }
            _ => {}
        }
        prev_in = now_in;
    }
    if let Some(start) = entered {
        total += tp - start;
    }
    Ok(total * cp.big_theta)
}

/// Bob's displacement for Alice's outcomes:
/// `dX = √2 X₊ + √2 Re(α)(F − D)/(E + 1)`, `dP = −√2 P₋ + √2 Im(α)(F + D)/(E + 1)`.
pub fn bob_displacement(r: &MeasurementRecord, g: &GaussianCoeffs) -> DisplacementCommand {
    let e1 = g.e() + 1.0;
    DisplacementCommand {
        dx: SQRT_2 * r.x_plus + SQRT_2 * r.alpha.re * (g.f() - g.d()) / e1,
        dp: -SQRT_2 * r.p_minus + SQRT_2 * r.alpha.im * (g.f() + g.d()) / e1,
    }
}

/// Drive setting producing the requested displacement.
pub fn actuation_setting(d: &DisplacementCommand) -> ActuationSetting {
    let strength = d.dx.hypot(d.dp);
    let phase = if strength == 0.0 {
        0.0
    } else {
        d.dp.atan2(d.dx).rem_euclid(TAU)
    };
    ActuationSetting { phase, strength }
}

/// Conditioned Stokes–mirror state: covariance plus the outcome-dependent
/// means over `(X_a1, P_a1, X_b, P_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedState {
    pub correlation: CorrelationMatrix4,
    pub mean: [f64; 4],
}

impl ConditionedState {
    /// State after the heterodyne outcome `alpha`: `<a1> = α* F/(E+1)`,
    /// `<b> = −α D/(E+1)`.
    pub fn new(g: &GaussianCoeffs, alpha: Complex64) -> Result<Self> {
        let correlation = conditional_correlation(g)?;
        let e1 = g.e() + 1.0;
        let a1 = alpha.conj() * (g.f() / e1);
        let b = -alpha * (g.d() / e1);
        Ok(Self {
            correlation,
            mean: [SQRT_2 * a1.re, SQRT_2 * a1.im, SQRT_2 * b.re, SQRT_2 * b.im],
        })
    }

    /// Applies Bob's displacement to the mirror quadratures.
    pub fn displaced(&self, d: &DisplacementCommand) -> Self {
        let mut mean = self.mean;
        mean[2] += d.dx;
        mean[3] += d.dp;
        Self { mean, ..*self }
    }

    /// Coherent-state teleportation fidelity through this channel.
    pub fn fidelity(&self) -> Result<f64> {
        let gin = CovMatrix2::coherent();
        let gout = teleport_covariance(&self.correlation, &gin)?;
        Ok(fidelity_from_covariances(&gin, &gout))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn moderate() -> Couplings {
        Couplings::new(1.0, 1.5).unwrap()
    }

    fn at(n: f64, t: f64) -> GaussianCoeffs {
        coeffs_analytic(&moderate(), ThermalOccupation(n), t).unwrap()
    }

    #[test]
    fn vacuum_channel() {
        let g = conditional_correlation(&at(0.0, 0.0)).unwrap();
        assert_eq!(g, CorrelationMatrix4::vacuum());
        let out = teleport_covariance(&g, &CovMatrix2::coherent()).unwrap();
        assert_eq!((out.xx(), out.xp(), out.pp()), (1.5, 0.0, 1.5));
        assert_eq!(fidelity_coherent(&at(0.0, 0.0)).unwrap(), 0.5);
        assert_eq!(fidelity_no_heterodyne(&at(0.0, 0.0)), 0.5);
    }

    #[test]
    fn thermal_mirror_at_start() {
        let g = conditional_correlation(&at(3.0, 0.0)).unwrap();
        let diag: Vec<f64> = (1..=4).map(|i| g.get(i, i)).collect();
        assert_eq!(diag, vec![0.5, 0.5, 3.5, 3.5]);
        for n in [0.0, 1.0, 10.0, 1000.0] {
            assert_abs_diff_eq!(
                fidelity_coherent(&at(n, 0.0)).unwrap(),
                1.0 / (2.0 + n),
                epsilon = 1e-15
            );
            assert_eq!(effective_occupation(&at(n, 0.0)).unwrap(), n + 1.0);
        }
    }

    #[test]
    fn bob_zero_record() {
        let r = MeasurementRecord {
            x_plus: 0.0,
            p_minus: 0.0,
            alpha: Complex64::new(0.0, 0.0),
        };
        assert_eq!(
            bob_displacement(&r, &at(1.0, 0.4)),
            DisplacementCommand { dx: 0.0, dp: 0.0 }
        );
        let r = MeasurementRecord {
            x_plus: 1.0,
            p_minus: 1.0,
            alpha: Complex64::new(0.0, 0.0),
        };
        let d = bob_displacement(&r, &at(2.0, 1.1));
        assert_eq!((d.dx, d.dp), (SQRT_2, -SQRT_2));
    }

    #[test]
    fn actuation_convention() {
        let s = actuation_setting(&DisplacementCommand { dx: 0.0, dp: 0.0 });
        assert_eq!((s.strength, s.phase), (0.0, 0.0));
        let s = actuation_setting(&DisplacementCommand { dx: 1.0, dp: 0.0 });
        assert_eq!((s.strength, s.phase), (1.0, 0.0));
        let s = actuation_setting(&DisplacementCommand { dx: 0.0, dp: 1.0 });
        assert_eq!(s.strength, 1.0);
        assert_abs_diff_eq!(s.phase, FRAC_PI_2, epsilon = 1e-15);
        let (x, p) = s.apply((0.3, -0.2));
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.8, epsilon = 1e-15);
        let s = actuation_setting(&DisplacementCommand { dx: 0.0, dp: -2.0 });
        assert_abs_diff_eq!(s.phase, 3.0 * FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.drive_relative_phase(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn displacement_leaves_fidelity_unchanged() {
        let g = at(2.0, 0.9);
        let state = ConditionedState::new(&g, Complex64::new(0.4, -1.3)).unwrap();
        let r = MeasurementRecord {
            x_plus: 0.7,
            p_minus: -0.2,
            alpha: Complex64::new(0.4, -1.3),
        };
        let moved = state.displaced(&bob_displacement(&r, &g));
        assert_ne!(moved.mean, state.mean);
        assert_eq!(moved.fidelity().unwrap(), state.fidelity().unwrap());
        assert_abs_diff_eq!(
            state.fidelity().unwrap(),
            fidelity_coherent(&g).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn unphysical_channel_is_reported() {
        // Squeezing correlations beyond the Heisenberg limit.
        let g = GaussianCoeffs::from_raw(0.0, 0.0, [0.0, 0.0, -5.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            conditional_correlation(&g),
            Err(Error::Consistency(_))
        ));
        assert!(matches!(
            effective_occupation(&g),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn grid_must_have_a_hundred_points() {
        assert!(optimal_time(&moderate(), ThermalOccupation(0.0), 99).is_err());
    }

    #[test]
    fn window_of_vacuum_channel_moderate_couplings() {
        let w0 = useful_window(
            &moderate(),
            ThermalOccupation(0.0),
            Scheme::Heterodyne,
            4000,
        )
        .unwrap();
        let w5 = useful_window(
            &moderate(),
            ThermalOccupation(5.0),
            Scheme::Heterodyne,
            4000,
        )
        .unwrap();
        assert!(w0 > w5, "{w0} vs {w5}");
    }
}

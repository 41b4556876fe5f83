//! Reading the mirror state back out through the back-scattered light.
//!
//! A second pulse drives the same interaction; the combination
//! `Z(t) = a1(t) − a2†(t)` is measured heterodyne. Expressed through the
//! operators at the start of the pulse,
//! `Z(t) = w_a1 a1(0) + w_b b†(0) + w_a2 a2†(0)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::optomech::{Couplings, ThermalOccupation};

/// Smallest `Q_r` reported as a faithful readout.
pub const QUALITY_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    pub w_b: f64,
    pub w_a1: f64,
    pub w_a2: f64,
    pub t: f64,
}

impl ReadoutWeights {
    /// `|w_b| / max(|w_a1|, |w_a2|)`: how strongly the mirror dominates `Z`.
    pub fn b_dominance(&self) -> f64 {
        self.w_b.abs() / self.w_a1.abs().max(self.w_a2.abs())
    }
}

/// Weights of `Z(t)`, the difference of rows one and three of the propagator.
///
/// With `u = 1 − cos Θt`:
/// `w_b = (χ − θ) sin Θt / Θ`, `w_a1 = 1 − χ(θ − χ)u/Θ²`,
/// `w_a2 = −1 + θ(θ − χ)u/Θ²`.
pub fn readout_weights(cp: &Couplings, t: f64) -> Result<ReadoutWeights> {
    cp.require_oscillatory()?;
    if !t.is_finite() {
        return Err(domain(format!("time must be finite (got {t})")));
    }
    let (chi, th, big) = (cp.chi, cp.theta, cp.big_theta);
    let half = 0.5 * big * t;
    let u = 2.0 * half.sin().powi(2);
    let gap = th - chi;
    Ok(ReadoutWeights {
        w_b: -gap * (big * t).sin() / big,
        w_a1: 1.0 - chi * gap * u / (big * big),
        w_a2: -1.0 + th * gap * u / (big * big),
        t,
    })
}

/// `t_k = (2k + 1)π/(2Θ)` for `k = 0 .. k_max − 1`, where `cos Θt = 0`.
pub fn readout_times(cp: &Couplings, k_max: usize) -> Result<Vec<f64>> {
    cp.require_oscillatory()?;
    Ok((0..k_max)
        .map(|k| (2 * k + 1) as f64 * PI / (2.0 * cp.big_theta))
        .collect())
}

/// `Q_r = Θ(θ + χ) / (θ(θ − χ))`.
pub fn readout_quality(cp: &Couplings) -> Result<f64> {
    if !(cp.theta > cp.chi) {
        return Err(domain(format!(
            "readout quality needs θ > χ (θ = {}, χ = {})",
            cp.theta, cp.chi
        )));
    }
    Ok(cp.big_theta * (cp.theta + cp.chi) / (cp.theta * (cp.theta - cp.chi)))
}

/// Time `1/(γ_m n̄)` before the mirror rethermalises; infinite when `n̄ = 0`.
pub fn decoherence_window(gamma_m: f64, nbar: ThermalOccupation) -> Result<f64> {
    if !(gamma_m.is_finite() && gamma_m > 0.0) {
        return Err(domain(format!("γ_m must be > 0 (got {gamma_m})")));
    }
    let n = nbar.value();
    if n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (gamma_m * n))
}

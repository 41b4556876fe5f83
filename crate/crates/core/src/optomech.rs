//! Physical mirror/laser parameters and the effective optomechanical couplings.
//!
//! The laser frequency `ω₀` and the acoustic frequency `Ω` are angular
//! frequencies (rad/s). The detection and mode bandwidths `Δν_det`, `Δν_mode`
//! are ordinary frequencies (Hz); they only enter the couplings through
//! their ratio, so any shared 2π convention cancels.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{domain, Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Driving laser power, W.
    pub power: f64,
    /// Driving laser angular frequency, rad/s.
    pub omega0: f64,
    /// Acoustic mode angular frequency, rad/s.
    pub omega_mech: f64,
    /// Detection bandwidth, Hz.
    pub dnu_det: f64,
    /// Sideband-mode bandwidth, Hz.
    pub dnu_mode: f64,
    /// Effective mass of the acoustic mode, kg.
    pub mass: f64,
    /// Incidence angle of the driving beam, rad.
    pub phi0: f64,
    /// Mirror temperature, K.
    pub temperature: f64,
    /// Mechanical damping rate, Hz.
    pub gamma_m: f64,
}

impl PhysicalParams {
    /// Parameter set of the reference configuration: 10 W at 2e15 rad/s on
    /// a 1e-10 kg acoustic mode at 5e8 rad/s, normal incidence, T = 0.
    pub fn reference() -> Self {
        Self {
            power: 10.0,
            omega0: 2e15,
            omega_mech: 5e8,
            dnu_det: 1e7,
            dnu_mode: 1e3,
            mass: 1e-10,
            phi0: 0.0,
            temperature: 0.0,
            gamma_m: 1.0,
        }
    }

    /// Checks every domain restriction and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("power", self.power),
            ("omega0", self.omega0),
            ("omega_mech", self.omega_mech),
            ("dnu_det", self.dnu_det),
            ("dnu_mode", self.dnu_mode),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and > 0 (got {v})")));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(domain(format!(
                "temperature must be >= 0 K (got {})",
                self.temperature
            )));
        }
        if !(self.gamma_m.is_finite() && self.gamma_m >= 0.0) {
            return Err(domain(format!(
                "gamma_m must be >= 0 (got {})",
                self.gamma_m
            )));
        }
        if !(self.phi0.is_finite() && (0.0..FRAC_PI_2).contains(&self.phi0)) {
            return Err(domain(format!(
                "phi0 must lie in [0, pi/2) (got {})",
                self.phi0
            )));
        }
        if self.omega0 <= self.omega_mech {
            return Err(domain(format!(
                "requires omega0 > omega_mech (got omega0 = {}, omega_mech = {})",
                self.omega0, self.omega_mech
            )));
        }
        Ok(())
    }
}

/// Interaction rates of the effective Hamiltonian, all in rad/s.
///
/// `chi` drives the parametric (Stokes–mirror) term, `theta` the
/// beam-splitter (anti-Stokes–mirror) term, and `big_theta = √(θ² − χ²)`
/// is the oscillation frequency of the joint dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub chi: f64,
    pub theta: f64,
    pub big_theta: f64,
}

impl Couplings {
    /// Couplings from the two rates; requires `θ > χ ≥ 0`.
    pub fn new(chi: f64, theta: f64) -> Result<Self> {
        if !(chi.is_finite() && theta.is_finite() && chi >= 0.0 && theta > chi) {
            return Err(domain(format!(
                "couplings require theta > chi >= 0 (got chi = {chi}, theta = {theta})"
            )));
        }
        // θ² − χ² = (θ − χ)(θ + χ) keeps the small difference exact-ish.
        let big_theta = ((theta - chi) * (theta + chi)).sqrt();
        Ok(Self {
            chi,
            theta,
            big_theta,
        })
    }

    /// Stores the three rates verbatim, without enforcing
    /// `Θ = √(θ² − χ²)`. Use [`Couplings::invariant_defect`] to check them.
    pub fn from_parts_unchecked(chi: f64, theta: f64, big_theta: f64) -> Self {
        Self {
            chi,
            theta,
            big_theta,
        }
    }

    /// Relative defect of `Θ² + χ² = θ²`.
    pub fn invariant_defect(&self) -> f64 {
        let lhs = self.big_theta * self.big_theta + self.chi * self.chi;
        let rhs = self.theta * self.theta;
        (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE)
    }

    pub(crate) fn require_oscillatory(&self) -> Result<()> {
        if self.big_theta.is_finite() && self.big_theta > 0.0 {
            Ok(())
        } else {
            Err(domain(format!(
                "closed-form dynamics require Theta > 0 (got {})",
                self.big_theta
            )))
        }
    }
}

/// Effective couplings for the given mirror/laser parameters.
pub fn compute_couplings(p: &PhysicalParams) -> Result<Couplings> {
    p.validate()?;
    let detuned = p.omega0 - p.omega_mech;
    let chi = p.phi0.cos()
        * (p.power * p.dnu_det * p.dnu_det * detuned
            / (2.0 * p.mass * p.omega_mech * C_LIGHT * C_LIGHT * p.dnu_mode))
            .sqrt();
    let theta = chi * ((p.omega0 + p.omega_mech) / detuned).sqrt();
    // √(θ² − χ²) = χ √(2Ω / (ω₀ − Ω)) without the catastrophic subtraction.
    let big_theta = chi * (2.0 * p.omega_mech / detuned).sqrt();
    Ok(Couplings {
        chi,
        theta,
        big_theta,
    })
}

/// Mean thermal phonon number of the acoustic mode.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ThermalOccupation(pub f64);

impl ThermalOccupation {
    pub fn new(nbar: f64) -> Result<Self> {
        if nbar.is_finite() && nbar >= 0.0 {
            Ok(Self(nbar))
        } else {
            Err(domain(format!(
                "mean occupation must be finite and >= 0 (got {nbar})"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Bose–Einstein occupation `[coth(ħΩ/2k_BT) − 1]/2 = 1/(exp(ħΩ/k_BT) − 1)`.
pub fn thermal_occupation(temperature: f64, omega_mech: f64) -> Result<ThermalOccupation> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(domain(format!(
            "temperature must be >= 0 K (got {temperature})"
        )));
    }
    if !(omega_mech.is_finite() && omega_mech > 0.0) {
        return Err(domain(format!("omega_mech must be > 0 (got {omega_mech})")));
    }
    if temperature == 0.0 {
        return Ok(ThermalOccupation(0.0));
    }
    let x = HBAR * omega_mech / (K_B * temperature);
    Ok(ThermalOccupation(1.0 / x.exp_m1()))
}

/// Stokes (`ω₀ − Ω`) and anti-Stokes (`ω₀ + Ω`) sideband frequencies, rad/s.
pub fn sideband_frequencies(p: &PhysicalParams) -> Result<(f64, f64)> {
    if !(p.omega_mech >= 0.0 && p.omega0 > p.omega_mech) {
        return Err(domain(format!(
            "requires omega0 > omega_mech >= 0 (got omega0 = {}, omega_mech = {})",
            p.omega0, p.omega_mech
        )));
    }
    Ok((p.omega0 - p.omega_mech, p.omega0 + p.omega_mech))
}

/// A violated modelling assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeWarning {
    /// `Ω τ < 10` with `1/τ = Δν_det`: rotating-wave averaging is not justified.
    RotatingWave,
    /// `γ_m > Θ/10`: damping competes with the coherent dynamics.
    Damping,
    /// `θ ≤ χ`: no oscillatory regime, the closed form does not apply.
    NotOscillatory,
    /// `Ω = 0`: the two sidebands coincide with the drive.
    DegenerateSidebands,
    /// Parameters outside their domain; couplings could not be formed.
    InvalidParameters,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            Self::RotatingWave => "rotating-wave approximation: omega_mech / dnu_det < 10",
            Self::Damping => "mechanical damping: gamma_m > Theta / 10",
            Self::NotOscillatory => "no oscillatory regime: theta <= chi",
            Self::DegenerateSidebands => "degenerate sidebands: omega_mech = 0",
            Self::InvalidParameters => "parameters outside their physical domain",
        };
        f.write_str(msg)
    }
}

/// Ratio `Ω τ` below which the rotating-wave averaging is flagged.
pub const RWA_MIN_RATIO: f64 = 10.0;
/// Damping must stay below `Θ` by this factor.
pub const DAMPING_MARGIN: f64 = 10.0;

/// Lists every regime assumption the parameters violate. Empty means the
/// model applies as stated.
pub fn validate_regime(p: &PhysicalParams) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    if p.omega_mech == 0.0 {
        out.push(RegimeWarning::DegenerateSidebands);
    }
    if p.omega_mech < RWA_MIN_RATIO * p.dnu_det {
        out.push(RegimeWarning::RotatingWave);
    }
    match compute_couplings(p) {
        Ok(c) => {
            if c.theta <= c.chi {
                out.push(RegimeWarning::NotOscillatory);
            }
            if p.gamma_m > c.big_theta / DAMPING_MARGIN {
                out.push(RegimeWarning::Damping);
            }
        }
        Err(Error::Domain(_)) if p.omega_mech == 0.0 => {}
        Err(_) => out.push(RegimeWarning::InvalidParameters),
    }
    out
}

/// Angular frequency for a frequency given in Hz.
pub fn angular(hz: f64) -> f64 {
    TAU * hz
}

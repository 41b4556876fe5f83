//! Run configuration, read from JSON with unit-bearing field names.

use std::path::{Path, PathBuf};

use mirrorport::optomech::{compute_couplings, thermal_occupation};
use mirrorport::protocol::DEFAULT_GRID;
use mirrorport::{Couplings, PhysicalParams, ThermalOccupation};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub power_watts: f64,
    pub omega0_rad_per_s: f64,
    pub omega_mech_rad_per_s: f64,
    pub dnu_det_hz: f64,
    pub dnu_mode_hz: f64,
    pub mass_kg: f64,
    pub phi0_rad: f64,
    pub temperature_kelvin: f64,
    pub gamma_m_hz: f64,
}

impl PhysicalConfig {
    pub fn to_params(&self) -> PhysicalParams {
        PhysicalParams {
            power: self.power_watts,
            omega0: self.omega0_rad_per_s,
            omega_mech: self.omega_mech_rad_per_s,
            dnu_det: self.dnu_det_hz,
            dnu_mode: self.dnu_mode_hz,
            mass: self.mass_kg,
            phi0: self.phi0_rad,
            temperature: self.temperature_kelvin,
            gamma_m: self.gamma_m_hz,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("physical.power_watts", self.power_watts),
            ("physical.omega0_rad_per_s", self.omega0_rad_per_s),
            ("physical.omega_mech_rad_per_s", self.omega_mech_rad_per_s),
            ("physical.dnu_det_hz", self.dnu_det_hz),
            ("physical.dnu_mode_hz", self.dnu_mode_hz),
            ("physical.mass_kg", self.mass_kg),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(format!(
                    "{name} must be finite and > 0 (got {v})"
                )));
            }
        }
        let non_negative = [
            ("physical.temperature_kelvin", self.temperature_kelvin),
            ("physical.gamma_m_hz", self.gamma_m_hz),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::config(format!(
                    "{name} must be finite and >= 0 (got {v})"
                )));
            }
        }
        if !(self.phi0_rad.is_finite()
            && (0.0..std::f64::consts::FRAC_PI_2).contains(&self.phi0_rad))
        {
            return Err(CliError::config(format!(
                "physical.phi0_rad must lie in [0, pi/2) (got {})",
                self.phi0_rad
            )));
        }
        if self.omega_mech_rad_per_s >= self.omega0_rad_per_s {
            return Err(CliError::config(
                "physical.omega_mech_rad_per_s must be below physical.omega0_rad_per_s",
            ));
        }
        Ok(())
    }
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_periods() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Thermal occupations to sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<Vec<f64>>,
    /// Alternatively, temperatures converted with the configured Ω.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures_kelvin: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_periods")]
    pub periods: u32,
}

/// Couplings used instead of the ones derived from the physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsOverride {
    pub chi_rad_per_s: f64,
    pub theta_rad_per_s: f64,
    /// Defaults to `√(θ² − χ²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_theta_rad_per_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyTolerances {
    pub couplings_invariant: f64,
    pub ode_vs_closed_form: f64,
    pub ode_residual: f64,
    pub metric: f64,
    pub group: f64,
    pub physicality: f64,
    pub fidelity_identity: f64,
    pub classical_anchor: f64,
    /// Random times drawn for the propagator checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            couplings_invariant: 1e-12,
            ode_vs_closed_form: 1e-8,
            ode_residual: 1e-6,
            metric: 1e-10,
            group: 1e-10,
            physicality: 1e-10,
            fidelity_identity: 1e-12,
            classical_anchor: 1e-12,
            samples: 100,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physical: PhysicalConfig,
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings_override: Option<CouplingsOverride>,
    #[serde(default)]
    pub verify: VerifyTolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One sweep entry; `temperature_kelvin` is set when it came from a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub nbar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_kelvin: Option<f64>,
}

impl Occupation {
    pub fn thermal(&self) -> ThermalOccupation {
        ThermalOccupation(self.nbar)
    }
}

/// A validated configuration with everything derived that commands need.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub params: PhysicalParams,
    /// Couplings as configured; may violate `Θ² = θ² − χ²` if overridden.
    pub raw_couplings: Couplings,
    /// Couplings satisfying `Θ² = θ² − χ²`; differs from `raw_couplings`
    /// only for an inconsistent override.
    pub couplings: Couplings,
    pub occupations: Vec<Occupation>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        self.physical.validate()?;
        let params = self.physical.to_params();
        params
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;

        let raw_couplings = match self.couplings_override {
            None => compute_couplings(&params).map_err(|e| CliError::config(e.to_string()))?,
            Some(o) => {
                let fresh = Couplings::new(o.chi_rad_per_s, o.theta_rad_per_s)
                    .map_err(|e| CliError::config(format!("couplings_override: {e}")))?;
                match o.big_theta_rad_per_s {
                    Some(big) if big.is_finite() && big > 0.0 => {
                        Couplings::from_parts_unchecked(fresh.chi, fresh.theta, big)
                    }
                    Some(big) => {
                        return Err(CliError::config(format!(
                            "couplings_override.big_theta_rad_per_s must be > 0 (got {big})"
                        )))
                    }
                    None => fresh,
                }
            }
        };
        let couplings = match self.couplings_override {
            None => raw_couplings,
            Some(_) => Couplings::new(raw_couplings.chi, raw_couplings.theta)
                .map_err(|e| CliError::config(e.to_string()))?,
        };

        let occupations = match (&self.sweep.nbar, &self.sweep.temperatures_kelvin) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "sweep: give either nbar or temperatures_kelvin, not both",
                ))
            }
            (None, None) => {
                return Err(CliError::config(
                    "sweep: missing field `nbar` (or `temperatures_kelvin`)",
                ))
            }
            (Some(list), None) => list
                .iter()
                .map(|&n| {
                    ThermalOccupation::new(n)
                        .map(|_| Occupation {
                            nbar: n,
                            temperature_kelvin: None,
                        })
                        .map_err(|e| CliError::config(format!("sweep.nbar: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(list)) => list
                .iter()
                .map(|&t| {
                    thermal_occupation(t, params.omega_mech)
                        .map(|n| Occupation {
                            nbar: n.value(),
                            temperature_kelvin: Some(t),
                        })
                        .map_err(|e| CliError::config(format!("sweep.temperatures_kelvin: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        if occupations.is_empty() {
            return Err(CliError::config("sweep: the occupation list is empty"));
        }
        if self.sweep.grid_points < 100 {
            return Err(CliError::config(format!(
                "sweep.grid_points must be >= 100 (got {})",
                self.sweep.grid_points
            )));
        }
        if self.sweep.periods == 0 {
            return Err(CliError::config("sweep.periods must be >= 1"));
        }
        Ok(Resolved {
            config: self,
            params,
            raw_couplings,
            couplings,
            occupations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = include_str!("../../../configs/fig2.json");

    #[test]
    fn bundled_config_resolves() {
        let r = RunConfig::from_json(FIG2).unwrap().resolve().unwrap();
        let nbar: Vec<f64> = r.occupations.iter().map(|o| o.nbar).collect();
        assert_eq!(nbar, vec![0.0, 1.0, 10.0, 1000.0]);
        assert_eq!(r.config.sweep.grid_points, 2000);
        assert_eq!(r.couplings, r.raw_couplings);
    }

    #[test]
    fn missing_mass_is_named() {
        let text = FIG2.replace("\"mass_kg\": 1e-10,", "");
        let err = RunConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("mass_kg"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn negative_mass_is_named() {
        let text = FIG2.replace("\"mass_kg\": 1e-10", "\"mass_kg\": -1e-10");
        let err = RunConfig::from_json(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("mass_kg"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = FIG2.replace("\"mass_kg\"", "\"mass\": 1.0, \"mass_kg\"");
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn temperatures_convert_through_mechanical_frequency() {
        let mut c = RunConfig::from_json(FIG2).unwrap();
        c.sweep.nbar = None;
        c.sweep.temperatures_kelvin = Some(vec![0.0, 1.0]);
        let r = c.resolve().unwrap();
        assert_eq!(r.occupations[0].nbar, 0.0);
        let want = thermal_occupation(1.0, 5e8).unwrap().value();
        assert_eq!(r.occupations[1].nbar, want);
        assert_eq!(r.occupations[1].temperature_kelvin, Some(1.0));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let mut c = RunConfig::from_json(FIG2).unwrap();
        c.sweep.nbar = Some(vec![]);
        assert!(c.resolve().is_err());
    }
}

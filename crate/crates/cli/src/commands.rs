use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mirrorport::dynamics::{moment_derivatives, propagator};
use mirrorport::gaussian::{physicality_defect, relative_symplectic_defect, CovMatrix2};
use mirrorport::optomech::{sideband_frequencies, thermal_occupation};
use mirrorport::protocol::{
    effective_occupation, fidelity, optimal_time_for, useful_window, Scheme,
};
use mirrorport::readout::{ReadoutWeights, QUALITY_THRESHOLD};
use mirrorport::{
    coeffs_analytic, coeffs_ode_trajectory, conditional_correlation, decoherence_window,
    fidelity_coherent, fidelity_no_heterodyne, period, readout_quality, readout_times,
    readout_weights, teleport_covariance, validate_regime, Couplings, Error, ThermalOccupation,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::config::{Occupation, Resolved};
use crate::error::CliError;
use crate::format::sig12;

fn core_err(e: Error) -> CliError {
    CliError::config(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

/// Writes `run_meta.json`, the only output carrying run-specific data.
pub fn write_run_meta(out: &Path, command: &str) -> Result<(), CliError> {
    let unix_time_s = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time_s": unix_time_s,
    });
    write_json(&out.join("run_meta.json"), &meta)
}

fn warnings(r: &Resolved) -> Vec<String> {
    validate_regime(&r.params)
        .iter()
        .map(|w| w.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingsReport {
    pub chi_rad_per_s: f64,
    pub theta_rad_per_s: f64,
    pub big_theta_rad_per_s: f64,
    pub period_s: f64,
    pub invariant_defect: f64,
    pub stokes_rad_per_s: f64,
    pub anti_stokes_rad_per_s: f64,
    pub temperature_kelvin: f64,
    pub nbar_at_temperature: f64,
    pub regime_warnings: Vec<String>,
}

impl CouplingsReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "chi          {:.9e} rad/s", self.chi_rad_per_s);
        let _ = writeln!(s, "theta        {:.9e} rad/s", self.theta_rad_per_s);
        let _ = writeln!(s, "Theta        {:.9e} rad/s", self.big_theta_rad_per_s);
        let _ = writeln!(s, "period       {:.9e} s", self.period_s);
        let _ = writeln!(s, "invariant    {:.3e}", self.invariant_defect);
        let _ = writeln!(s, "stokes       {:.9e} rad/s", self.stokes_rad_per_s);
        let _ = writeln!(s, "anti-stokes  {:.9e} rad/s", self.anti_stokes_rad_per_s);
        let _ = writeln!(
            s,
            "nbar(T)      {} at T = {} K",
            sig12(self.nbar_at_temperature),
            self.temperature_kelvin
        );
        if self.regime_warnings.is_empty() {
            let _ = writeln!(s, "regime       ok");
        }
        for w in &self.regime_warnings {
            let _ = writeln!(s, "warning      {w}");
        }
        s
    }
}

pub fn cmd_couplings(r: &Resolved, out: &Path) -> Result<CouplingsReport, CliError> {
    let cp = r.raw_couplings;
    let (stokes, anti) = sideband_frequencies(&r.params).map_err(core_err)?;
    let nbar = thermal_occupation(r.params.temperature, r.params.omega_mech).map_err(core_err)?;
    let report = CouplingsReport {
        chi_rad_per_s: cp.chi,
        theta_rad_per_s: cp.theta,
        big_theta_rad_per_s: cp.big_theta,
        period_s: std::f64::consts::TAU / cp.big_theta,
        invariant_defect: cp.invariant_defect(),
        stokes_rad_per_s: stokes,
        anti_stokes_rad_per_s: anti,
        temperature_kelvin: r.params.temperature,
        nbar_at_temperature: nbar.value(),
        regime_warnings: warnings(r),
    };
    write_json(&out.join("couplings.json"), &report)?;
    write_run_meta(out, "couplings")?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationSummary {
    pub nbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_kelvin: Option<f64>,
    pub f_max: f64,
    pub t_star_s: f64,
    pub theta_t_star: f64,
    pub n_eff_min: f64,
    pub f_max_no_heterodyne: f64,
    pub theta_t_star_no_heterodyne: f64,
    /// Measure of `{Θt ∈ [0, 2π) : F > 1/2}`.
    pub useful_window_theta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub curve_scheme: Scheme,
    pub chi_rad_per_s: f64,
    pub theta_rad_per_s: f64,
    pub big_theta_rad_per_s: f64,
    pub period_s: f64,
    pub grid_points: usize,
    pub periods: u32,
    pub occupations: Vec<OccupationSummary>,
    pub regime_warnings: Vec<String>,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>12}  {:>10}  {:>12}  {:>10}  {:>10}  {:>12}",
            "nbar", "F_max", "Theta t*", "nbar_eff", "F_max(nh)", "window"
        );
        for o in &self.occupations {
            let _ = writeln!(
                s,
                "{:>12}  {:>10.6}  {:>12.8}  {:>10.6}  {:>10.6}  {:>12.6e}",
                sig12(o.nbar),
                o.f_max,
                o.theta_t_star,
                o.n_eff_min,
                o.f_max_no_heterodyne,
                o.useful_window_theta_t
            );
        }
        for w in &self.regime_warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Tabulated fidelity over the configured window.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub header: Vec<String>,
    pub theta_t: Vec<f64>,
    /// One column per occupation.
    pub columns: Vec<Vec<f64>>,
}

impl FidelityCurve {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for (i, x) in self.theta_t.iter().enumerate() {
            s.push_str(&sig12(*x));
            for col in &self.columns {
                s.push(',');
                s.push_str(&sig12(col[i]));
            }
            s.push('\n');
        }
        s
    }
}

pub fn fidelity_curve(
    cp: &Couplings,
    occupations: &[Occupation],
    grid_points: usize,
    periods: u32,
    scheme: Scheme,
) -> Result<FidelityCurve, CliError> {
    let tp = period(cp).map_err(core_err)?;
    let rows = grid_points * periods as usize + 1;
    let times: Vec<f64> = (0..rows)
        .map(|i| i as f64 * tp / grid_points as f64)
        .collect();
    let mut header = vec!["theta_t".to_string()];
    header.extend(occupations.iter().map(|o| format!("F_nbar_{}", o.nbar)));
    let columns = occupations
        .iter()
        .map(|o| {
            times
                .iter()
                .map(|&t| fidelity(&coeffs_analytic(cp, o.thermal(), t)?, scheme))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(core_err)?;
    Ok(FidelityCurve {
        header,
        theta_t: times.iter().map(|t| t * cp.big_theta).collect(),
        columns,
    })
}

pub fn summarize(r: &Resolved, scheme: Scheme) -> Result<Summary, CliError> {
    let cp = r.couplings;
    let grid = r.config.sweep.grid_points;
    let occupations = r
        .occupations
        .iter()
        .map(|o| {
            let het = optimal_time_for(&cp, o.thermal(), grid, Scheme::Heterodyne)?;
            let nh = optimal_time_for(&cp, o.thermal(), grid, Scheme::TracedOut)?;
            let n_eff = effective_occupation(&coeffs_analytic(&cp, o.thermal(), het.t)?)?;
            Ok(OccupationSummary {
                nbar: o.nbar,
                temperature_kelvin: o.temperature_kelvin,
                f_max: het.fidelity,
                t_star_s: het.t,
                theta_t_star: het.theta_t,
                n_eff_min: n_eff,
                f_max_no_heterodyne: nh.fidelity,
                theta_t_star_no_heterodyne: nh.theta_t,
                useful_window_theta_t: useful_window(&cp, o.thermal(), Scheme::Heterodyne, grid)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(core_err)?;
    Ok(Summary {
        curve_scheme: scheme,
        chi_rad_per_s: cp.chi,
        theta_rad_per_s: cp.theta,
        big_theta_rad_per_s: cp.big_theta,
        period_s: period(&cp).map_err(core_err)?,
        grid_points: grid,
        periods: r.config.sweep.periods,
        occupations,
        regime_warnings: warnings(r),
    })
}

/// Writes `curve.csv`, `summary.json` and `run_meta.json` into `out`.
pub fn cmd_curve(r: &Resolved, out: &Path, scheme: Scheme) -> Result<Summary, CliError> {
    let sweep = &r.config.sweep;
    let curve = fidelity_curve(
        &r.couplings,
        &r.occupations,
        sweep.grid_points,
        sweep.periods,
        scheme,
    )?;
    let summary = summarize(r, scheme)?;
    write_file(&out.join("curve.csv"), &curve.to_csv())?;
    write_json(&out.join("summary.json"), &summary)?;
    write_run_meta(out, "curve")?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Gate {
    fn new(name: &str, defect: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            defect,
            tolerance,
            passed: defect <= tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} {:<24} defect {:.3e}  tol {:.1e}",
            self.name, self.defect, self.tolerance
        );
        if !self.detail.is_empty() {
            s.push_str("  ");
            s.push_str(&self.detail);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub gates: Vec<Gate>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn render(&self) -> String {
        let mut s: String = self.gates.iter().map(|g| g.line() + "\n").collect();
        let failed: Vec<&str> = self
            .gates
            .iter()
            .filter(|g| !g.passed)
            .map(|g| g.name.as_str())
            .collect();
        if failed.is_empty() {
            s.push_str("all gates passed\n");
        } else {
            let _ = writeln!(s, "failed gates: {}", failed.join(", "));
        }
        s
    }
}

fn max_abs(a: [f64; 6], b: [f64; 6]) -> f64 {
    a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn gate_ode(cp: &Couplings, tol: f64) -> Result<Gate, Error> {
    let tp = period(cp)?;
    let times: Vec<f64> = (0..=1000).map(|i| tp * i as f64 / 1000.0).collect();
    let dt_max = (2e-3 / cp.theta).min(tp / 1000.0);
    let mut worst = 0.0_f64;
    let mut details = Vec::new();
    for n in [0.0, 10.0] {
        let nbar = ThermalOccupation(n);
        match coeffs_ode_trajectory(cp, nbar, &times, dt_max) {
            Ok(traj) => {
                for g in traj {
                    worst = worst.max(max_abs(
                        g.as_array(),
                        coeffs_analytic(cp, nbar, g.t())?.as_array(),
                    ));
                }
            }
            Err(Error::Integration { defect, .. }) => {
                worst = worst.max(defect);
                details.push(format!("nbar {n}: step doubling failed"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Gate::new(
        "ode_vs_closed_form",
        worst,
        tol,
        details.join("; "),
    ))
}

fn gate_residual(cp: &Couplings, occupations: &[Occupation], tol: f64) -> Result<Gate, Error> {
    let tp = period(cp)?;
    let h = 1e-3 / cp.theta;
    let mut worst = 0.0_f64;
    for o in occupations {
        for i in 1..200 {
            let t = tp * i as f64 / 200.0;
            let mid = coeffs_analytic(cp, o.thermal(), t)?;
            let plus = coeffs_analytic(cp, o.thermal(), t + h)?.as_array();
            let minus = coeffs_analytic(cp, o.thermal(), t - h)?.as_array();
            let rhs = moment_derivatives(cp, &mid.as_array());
            let scale = cp.theta * mid.scale();
            for k in 0..6 {
                worst = worst.max(((plus[k] - minus[k]) / (2.0 * h) - rhs[k]).abs() / scale);
            }
        }
    }
    Ok(Gate::new(
        "ode_residual",
        worst,
        tol,
        "relative to theta * max|coeff|".into(),
    ))
}

fn gate_propagator(cp: &Couplings, r: &Resolved) -> Result<(Gate, Gate), Error> {
    let tol = &r.config.verify;
    let tp = period(cp)?;
    let mut rng = StdRng::seed_from_u64(tol.seed);
    let (mut metric, mut group) = (0.0_f64, 0.0_f64);
    for _ in 0..tol.samples {
        let t1 = rng.random_range(0.0..tp);
        let t2 = rng.random_range(0.0..tp);
        let (m1, m2) = (propagator(cp, t1)?, propagator(cp, t2)?);
        let joint = propagator(cp, t1 + t2)?;
        metric = metric.max(relative_symplectic_defect(&m1));
        let scale = (m1.max_abs_entry() * m2.max_abs_entry()).max(1.0);
        group = group.max((joint.m - m1.compose(&m2).m).amax() / scale);
    }
    Ok((
        Gate::new(
            "metric_preservation",
            metric,
            tol.metric,
            "relative to max(1, max|M|^2)".into(),
        ),
        Gate::new(
            "group_property",
            group,
            tol.group,
            "relative to max(1, |M1||M2|)".into(),
        ),
    ))
}

fn state_gates(cp: &Couplings, r: &Resolved) -> Result<Vec<Gate>, Error> {
    let tol = &r.config.verify;
    let tp = period(cp)?;
    let grid = r.config.sweep.grid_points;
    let (mut phys, mut identity, mut anchor, mut bound) =
        (0.0_f64, 0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    let gin = CovMatrix2::coherent();
    for o in &r.occupations {
        let n = o.thermal();
        let mut times: Vec<f64> = (0..grid).map(|i| tp * i as f64 / grid as f64).collect();
        times.push(optimal_time_for(cp, n, grid, Scheme::Heterodyne)?.t);
        times.push(optimal_time_for(cp, n, grid, Scheme::TracedOut)?.t);
        for t in times {
            let g = coeffs_analytic(cp, n, t)?;
            let gamma = conditional_correlation(&g)?;
            phys = phys.max(physicality_defect(&gamma));
            let n_eff = effective_occupation(&g)?;
            let f = fidelity_coherent(&g)?;
            identity = identity.max((f - 1.0 / (1.0 + n_eff)).abs());
            let gout = teleport_covariance(&gamma, &gin)?;
            let added = (gout.xx() - gin.xx()).max(gout.pp() - gin.pp());
            identity = identity.max((added - n_eff).abs() / (1.0 + n_eff));
            bound = bound.max(fidelity_no_heterodyne(&g) - f);
        }
        let f0 = fidelity_coherent(&coeffs_analytic(cp, n, 0.0)?)?;
        anchor = anchor.max((f0 - 1.0 / (2.0 + o.nbar)).abs());
    }
    Ok(vec![
        Gate::new("physicality", phys, tol.physicality, String::new()),
        Gate::new(
            "fidelity_identity",
            identity,
            tol.fidelity_identity,
            String::new(),
        ),
        Gate::new(
            "classical_anchor",
            anchor,
            tol.classical_anchor,
            String::new(),
        ),
        Gate::new(
            "no_heterodyne_bound",
            bound.max(0.0),
            tol.fidelity_identity,
            String::new(),
        ),
    ])
}

/// Runs every tolerance gate and writes `verify.txt` into `out`.
pub fn cmd_verify(r: &Resolved, out: &Path) -> Result<VerifyReport, CliError> {
    let tol = &r.config.verify;
    let cp = r.couplings;
    let mut gates = vec![Gate::new(
        "couplings_invariant",
        r.raw_couplings.invariant_defect(),
        tol.couplings_invariant,
        "|Theta^2 + chi^2 - theta^2| / theta^2".into(),
    )];
    gates.push(gate_ode(&cp, tol.ode_vs_closed_form).map_err(core_err)?);
    gates.push(gate_residual(&cp, &r.occupations, tol.ode_residual).map_err(core_err)?);
    let (metric, group) = gate_propagator(&cp, r).map_err(core_err)?;
    gates.push(metric);
    gates.push(group);
    match state_gates(&cp, r) {
        Ok(g) => gates.extend(g),
        Err(e) => gates.push(Gate::new("state_checks", f64::INFINITY, 0.0, e.to_string())),
    }
    let report = VerifyReport { gates };
    write_file(&out.join("verify.txt"), &report.render())?;
    write_run_meta(out, "verify")?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRow {
    pub k: usize,
    pub theta_t: f64,
    pub weights: ReadoutWeights,
    pub b_dominance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub nbar: f64,
    /// `None` when the mirror does not heat up (`n̄ = 0`).
    pub decoherence_window_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub readout_quality: f64,
    pub quality_threshold: f64,
    pub quality_passed: bool,
    pub times: Vec<ReadoutRow>,
    pub gamma_m_hz: f64,
    pub windows: Vec<WindowRow>,
}

impl ReadoutReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let status = if self.quality_passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "Q_r = {:.6e} ({status}, threshold {})",
            self.readout_quality, self.quality_threshold
        );
        let _ = writeln!(
            s,
            "{:>3}  {:>14}  {:>10}  {:>14}  {:>14}  {:>14}  {:>12}",
            "k", "t (s)", "Theta t", "w_b", "w_a1", "w_a2", "|w_b|/max"
        );
        for row in &self.times {
            let w = &row.weights;
            let _ = writeln!(
                s,
                "{:>3}  {:>14.6e}  {:>10.6}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {:>12.6e}",
                row.k, w.t, row.theta_t, w.w_b, w.w_a1, w.w_a2, row.b_dominance
            );
        }
        let _ = writeln!(
            s,
            "decoherence windows at gamma_m = {} Hz:",
            self.gamma_m_hz
        );
        for w in &self.windows {
            let window = w
                .decoherence_window_s
                .map_or("unbounded".to_string(), |x| format!("{x:.6e} s"));
            let _ = writeln!(s, "  nbar {:>12}  {window}", sig12(w.nbar));
        }
        s
    }
}

/// Number of readout times listed.
pub const READOUT_TIMES: usize = 4;

pub fn cmd_readout(r: &Resolved, out: &Path) -> Result<ReadoutReport, CliError> {
    let cp = r.couplings;
    let q = readout_quality(&cp).map_err(core_err)?;
    let times = readout_times(&cp, READOUT_TIMES)
        .map_err(core_err)?
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let weights = readout_weights(&cp, t)?;
            Ok(ReadoutRow {
                k,
                theta_t: t * cp.big_theta,
                b_dominance: weights.b_dominance(),
                weights,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(core_err)?;
    let gamma_m = r.params.gamma_m;
    let windows = if gamma_m > 0.0 {
        r.occupations
            .iter()
            .map(|o| {
                let w = decoherence_window(gamma_m, o.thermal())?;
                Ok(WindowRow {
                    nbar: o.nbar,
                    decoherence_window_s: w.is_finite().then_some(w),
                })
            })
            .collect::<Result<Vec<_>, Error>>()
            .map_err(core_err)?
    } else {
        Vec::new()
    };
    let report = ReadoutReport {
        readout_quality: q,
        quality_threshold: QUALITY_THRESHOLD,
        quality_passed: q >= QUALITY_THRESHOLD,
        times,
        gamma_m_hz: gamma_m,
        windows,
    };
    write_json(&out.join("readout.json"), &report)?;
    write_run_meta(out, "readout")?;
    Ok(report)
}

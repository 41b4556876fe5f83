//! Python bindings for the `mirrorport` simulation library.

use mirrorport::dynamics;
use mirrorport::gaussian::{CorrelationMatrix4, CovMatrix2};
use mirrorport::optomech::{self, PhysicalParams};
use mirrorport::protocol::{self, MeasurementRecord, Scheme};
use mirrorport::{readout, Error, ThermalOccupation};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn occupation(n: f64) -> PyResult<ThermalOccupation> {
    ThermalOccupation::new(n).map_err(to_py)
}

/// Interaction rates χ, θ and Θ = √(θ² − χ²), in rad/s.
#[pyclass(frozen, skip_from_py_object, name = "Couplings", module = "mirrorport")]
#[derive(Clone, Copy)]
struct PyCouplings(mirrorport::Couplings);

#[pymethods]
impl PyCouplings {
    #[new]
    fn new(chi: f64, theta: f64) -> PyResult<Self> {
        mirrorport::Couplings::new(chi, theta)
            .map(Self)
            .map_err(to_py)
    }

    /// Couplings for mirror and laser parameters (SI units, angular frequencies in rad/s).
    #[staticmethod]
    #[pyo3(signature = (power, omega0, omega_mech, dnu_det, dnu_mode, mass, phi0 = 0.0))]
    fn from_physical(
        power: f64,
        omega0: f64,
        omega_mech: f64,
        dnu_det: f64,
        dnu_mode: f64,
        mass: f64,
        phi0: f64,
    ) -> PyResult<Self> {
        let p = PhysicalParams {
            power,
            omega0,
            omega_mech,
            dnu_det,
            dnu_mode,
            mass,
            phi0,
            temperature: 0.0,
            gamma_m: 0.0,
        };
        optomech::compute_couplings(&p).map(Self).map_err(to_py)
    }

    /// Couplings of the reference mirror (10 W, Ω = 5e8 rad/s, M = 1e-10 kg).
    #[staticmethod]
    fn reference() -> PyResult<Self> {
        optomech::compute_couplings(&PhysicalParams::reference())
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.0.chi
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn big_theta(&self) -> f64 {
        self.0.big_theta
    }

    fn period(&self) -> PyResult<f64> {
        dynamics::period(&self.0).map_err(to_py)
    }

    fn invariant_defect(&self) -> f64 {
        self.0.invariant_defect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Couplings(chi={:e}, theta={:e}, big_theta={:e})",
            self.0.chi, self.0.theta, self.0.big_theta
        )
    }
}

/// Coefficients A..F of the three-mode Gaussian state at one time.
#[pyclass(frozen, name = "GaussianCoeffs", module = "mirrorport")]
struct PyCoeffs(mirrorport::GaussianCoeffs);

#[pymethods]
impl PyCoeffs {
    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }
    #[getter]
    fn c(&self) -> f64 {
        self.0.c()
    }
    #[getter]
    fn d(&self) -> f64 {
        self.0.d()
    }
    #[getter]
    fn e(&self) -> f64 {
        self.0.e()
    }
    #[getter]
    fn f(&self) -> f64 {
        self.0.f()
    }
    #[getter]
    fn t(&self) -> f64 {
        self.0.t()
    }
    #[getter]
    fn nbar(&self) -> f64 {
        self.0.nbar()
    }

    fn as_list(&self) -> Vec<f64> {
        self.0.as_array().to_vec()
    }

    fn effective_occupation(&self) -> PyResult<f64> {
        protocol::effective_occupation(&self.0).map_err(to_py)
    }

    fn fidelity(&self) -> PyResult<f64> {
        protocol::fidelity_coherent(&self.0).map_err(to_py)
    }

    fn fidelity_no_heterodyne(&self) -> f64 {
        protocol::fidelity_no_heterodyne(&self.0)
    }

    /// 4×4 correlation matrix over (X_a1, P_a1, X_b, P_b) after the heterodyne step.
    fn conditional_correlation(&self) -> PyResult<[[f64; 4]; 4]> {
        protocol::conditional_correlation(&self.0)
            .map(|g| g.rows())
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d, e, f] = self.0.as_array();
        format!(
            "GaussianCoeffs(t={:e}, A={a:e}, B={b:e}, C={c:e}, D={d:e}, E={e:e}, F={f:e})",
            self.0.t()
        )
    }
}

#[pyfunction]
fn thermal_occupation(temperature: f64, omega_mech: f64) -> PyResult<f64> {
    optomech::thermal_occupation(temperature, omega_mech)
        .map(|n| n.value())
        .map_err(to_py)
}

#[pyfunction]
fn coeffs_analytic(c: PyRef<'_, PyCouplings>, nbar: f64, t: f64) -> PyResult<PyCoeffs> {
    dynamics::coeffs_analytic(&c.0, occupation(nbar)?, t)
        .map(PyCoeffs)
        .map_err(to_py)
}

#[pyfunction]
fn coeffs_ode(c: PyRef<'_, PyCouplings>, nbar: f64, t: f64, dt_max: f64) -> PyResult<PyCoeffs> {
    dynamics::coeffs_ode(&c.0, occupation(nbar)?, t, dt_max)
        .map(PyCoeffs)
        .map_err(to_py)
}

/// 3×3 map of (a1, b†, a2†) from time 0 to `t`.
#[pyfunction]
fn propagator(c: PyRef<'_, PyCouplings>, t: f64) -> PyResult<[[f64; 3]; 3]> {
    let m = dynamics::propagator(&c.0, t).map_err(to_py)?;
    Ok([m.row(0), m.row(1), m.row(2)])
}

/// Returns `(t, theta_t, fidelity)` at the fidelity maximum within one period.
#[pyfunction]
#[pyo3(signature = (c, nbar, grid_points = protocol::DEFAULT_GRID, heterodyne = true))]
fn optimal_time(
    c: PyRef<'_, PyCouplings>,
    nbar: f64,
    grid_points: usize,
    heterodyne: bool,
) -> PyResult<(f64, f64, f64)> {
    let scheme = if heterodyne {
        Scheme::Heterodyne
    } else {
        Scheme::TracedOut
    };
    let best =
        protocol::optimal_time_for(&c.0, occupation(nbar)?, grid_points, scheme).map_err(to_py)?;
    Ok((best.t, best.theta_t, best.fidelity))
}

/// Measure in Θt of the times within one period where the fidelity beats 1/2.
#[pyfunction]
#[pyo3(signature = (c, nbar, grid_points = protocol::DEFAULT_GRID))]
fn useful_window(c: PyRef<'_, PyCouplings>, nbar: f64, grid_points: usize) -> PyResult<f64> {
    protocol::useful_window(&c.0, occupation(nbar)?, Scheme::Heterodyne, grid_points).map_err(to_py)
}

/// Output covariance `[[xx, xp], [xp, pp]]` for a channel and an input covariance.
#[pyfunction]
fn teleport_covariance(channel: [[f64; 4]; 4], input: [[f64; 2]; 2]) -> PyResult<[[f64; 2]; 2]> {
    let g = CorrelationMatrix4::from_rows(channel).map_err(to_py)?;
    let gin = CovMatrix2::from_rows(input).map_err(to_py)?;
    let out = protocol::teleport_covariance(&g, &gin).map_err(to_py)?;
    Ok([[out.xx(), out.xp()], [out.xp(), out.pp()]])
}

/// Bob's displacement `(dx, dp)` for Alice's outcomes.
#[pyfunction]
fn bob_displacement(
    x_plus: f64,
    p_minus: f64,
    alpha: Complex64,
    coeffs: PyRef<'_, PyCoeffs>,
) -> (f64, f64) {
    let r = MeasurementRecord {
        x_plus,
        p_minus,
        alpha,
    };
    let d = protocol::bob_displacement(&r, &coeffs.0);
    (d.dx, d.dp)
}

/// Drive `(phase, strength)` realising a displacement; phase 0 shifts +X.
#[pyfunction]
fn actuation_setting(dx: f64, dp: f64) -> (f64, f64) {
    let s = protocol::actuation_setting(&protocol::DisplacementCommand { dx, dp });
    (s.phase, s.strength)
}

/// Weights `(w_b, w_a1, w_a2)` of the readout combination at time `t`.
#[pyfunction]
fn readout_weights(c: PyRef<'_, PyCouplings>, t: f64) -> PyResult<(f64, f64, f64)> {
    let w = readout::readout_weights(&c.0, t).map_err(to_py)?;
    Ok((w.w_b, w.w_a1, w.w_a2))
}

#[pyfunction]
fn readout_times(c: PyRef<'_, PyCouplings>, k_max: usize) -> PyResult<Vec<f64>> {
    readout::readout_times(&c.0, k_max).map_err(to_py)
}

#[pyfunction]
fn readout_quality(c: PyRef<'_, PyCouplings>) -> PyResult<f64> {
    readout::readout_quality(&c.0).map_err(to_py)
}

#[pyfunction]
fn decoherence_window(gamma_m: f64, nbar: f64) -> PyResult<f64> {
    readout::decoherence_window(gamma_m, occupation(nbar)?).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "mirrorport")]
fn mirrorport_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCouplings>()?;
    m.add_class::<PyCoeffs>()?;
    m.add(
        "CLASSICAL_FIDELITY_BOUND",
        protocol::CLASSICAL_FIDELITY_BOUND,
    )?;
    m.add_function(wrap_pyfunction!(thermal_occupation, m)?)?;
    m.add_function(wrap_pyfunction!(coeffs_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(coeffs_ode, m)?)?;
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_time, m)?)?;
    m.add_function(wrap_pyfunction!(useful_window, m)?)?;
    m.add_function(wrap_pyfunction!(teleport_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(bob_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(actuation_setting, m)?)?;
    m.add_function(wrap_pyfunction!(readout_weights, m)?)?;
    m.add_function(wrap_pyfunction!(readout_times, m)?)?;
    m.add_function(wrap_pyfunction!(readout_quality, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence_window, m)?)?;
    Ok(())
}

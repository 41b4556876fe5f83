//! Radiation-pressure teleportation of a light state onto a mirror's
//! acoustic mode.
//!
//! The pipeline runs from laser and mirror parameters ([`optomech`]) through
//! the three-mode Gaussian dynamics ([`dynamics`]) to the heterodyne
//! conditioned channel and its fidelity ([`protocol`]) and the optical
//! readout of the mirror ([`readout`]).

pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod optomech;
pub mod protocol;
pub mod readout;

pub use dynamics::{
    coeffs_analytic, coeffs_from_propagator, coeffs_ode, coeffs_ode_trajectory, period, propagator,
    ConditionedMoments, GaussianCoeffs,
};
pub use error::{Error, Result};
pub use gaussian::{CorrelationMatrix4, CovMatrix2, PropagatorMatrix};
pub use optomech::{
    compute_couplings, thermal_occupation, validate_regime, Couplings, PhysicalParams,
    RegimeWarning, ThermalOccupation,
};
pub use protocol::{
    bob_displacement, conditional_correlation, fidelity_coherent, fidelity_no_heterodyne,
    optimal_time, teleport_covariance, ActuationSetting, DisplacementCommand, MeasurementRecord,
    OptimalTime, Scheme,
};
pub use readout::{
    decoherence_window, readout_quality, readout_times, readout_weights, ReadoutWeights,
};

//! Small dense matrices over quadratures and mode operators.
//!
//! Variance convention: the vacuum has quadrature variance 1/2, with
//! `X = (a + a†)/√2`, `P = (a − a†)/(i√2)` and `[X, P] = i`. Every
//! covariance in this crate uses the symmetrized second moments
//! `Γ_ij = <v_i v_j + v_j v_i>/2`.

use nalgebra::{Matrix2, Matrix3, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Quadrature variance of the vacuum state.
pub const VACUUM_VARIANCE: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-12;

fn asymmetry<const N: usize>(rows: &[[f64; N]; N]) -> (f64, f64) {
    let mut worst = 0.0_f64;
    let mut scale = 1.0_f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((rows[i][j] - rows[j][i]).abs());
            scale = scale.max(rows[i][j].abs());
        }
    }
    (worst, scale)
}

/// Single-mode covariance matrix over `(X, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix2 {
    xx: f64,
    xp: f64,
    pp: f64,
}

impl CovMatrix2 {
    /// Builds the matrix from its upper triangle; rejects indefinite input.
    pub fn new(xx: f64, xp: f64, pp: f64) -> Result<Self> {
        if !(xx.is_finite() && xp.is_finite() && pp.is_finite()) {
            return Err(domain("covariance entries must be finite"));
        }
        let m = Self { xx, xp, pp };
        if m.min_eigenvalue() < -SYMMETRY_TOL * xx.abs().max(pp.abs()).max(1.0) {
            return Err(domain(format!(
                "covariance [[{xx}, {xp}], [{xp}, {pp}]] is not positive semidefinite"
            )));
        }
        Ok(m)
    }

    /// Coherent states (and the vacuum) share the covariance `I/2`.
    pub fn coherent() -> Self {
        Self {
            xx: VACUUM_VARIANCE,
            xp: 0.0,
            pp: VACUUM_VARIANCE,
        }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        let (worst, scale) = asymmetry(&rows);
        if worst > SYMMETRY_TOL * scale {
            return Err(domain(format!(
                "covariance is not symmetric (|m12 - m21| = {worst:e})"
            )));
        }
        Self::new(rows[0][0], rows[0][1], rows[1][1])
    }

    pub fn xx(&self) -> f64 {
        self.xx
    }

    pub fn xp(&self) -> f64 {
        self.xp
    }

    pub fn pp(&self) -> f64 {
        self.pp
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.xx, self.xp, self.xp, self.pp)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let half_trace = 0.5 * (self.xx + self.pp);
        let half_gap = (0.5 * (self.xx - self.pp)).hypot(self.xp);
        half_trace - half_gap
    }
}

/// Symmetric 4×4 correlation matrix over `(X_a1, P_a1, X_b, P_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix4 {
    m: Matrix4<f64>,
}

impl CorrelationMatrix4 {
    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(domain("correlation matrix entries must be finite"));
        }
        let (worst, scale) = asymmetry(&rows);
        if worst > SYMMETRY_TOL * scale {
            return Err(domain(format!(
                "correlation matrix is not symmetric (max asymmetry {worst:e})"
            )));
        }
        let mut m = Matrix4::from_fn(|i, j| rows[i][j]);
        // Store an exactly symmetric matrix.
        m = (m + m.transpose()) * 0.5;
        Ok(Self { m })
    }

    /// Two-mode vacuum, `I/2`.
    pub fn vacuum() -> Self {
        Self {
            m: Matrix4::identity() * VACUUM_VARIANCE,
        }
    }

    /// Entry with 1-based indices, matching the usual `Γ_ij` notation.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i - 1, j - 1)]
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[(i, j)];
            }
        }
        out
    }

    /// Congruence `S Γ Sᵀ` by a real 4×4 matrix.
    pub fn transformed(&self, s: &Matrix4<f64>) -> Self {
        let m = s * self.m * s.transpose();
        Self {
            m: (m + m.transpose()) * 0.5,
        }
    }
}

/// Two-mode symplectic form for `(X1, P1, X2, P2)`: `[v_i, v_j] = i J_ij`.
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Eigenvalues of the Hermitian matrix `Γ + (i/2) J`, ascending.
pub fn uncertainty_spectrum(g: &CorrelationMatrix4) -> [f64; 4] {
    let j = symplectic_form();
    let h = Matrix4::<Complex64>::from_fn(|r, c| Complex64::new(g.m[(r, c)], 0.5 * j[(r, c)]));
    let ev = h.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(f64::total_cmp);
    out
}

/// Violation of the uncertainty principle: `max(0, −λ_min(Γ + (i/2)J))`.
/// Zero means `Γ` describes a physical state.
pub fn physicality_defect(g: &CorrelationMatrix4) -> f64 {
    (-uncertainty_spectrum(g)[0]).max(0.0)
}

/// Metric `η = diag(+1, −1, −1)` of the operator vector `(a1, b†, a2†)`.
pub fn mode_metric() -> Matrix3<f64> {
    Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, -1.0))
}

/// Linear map of `(a1, b†, a2†)` from time 0 to time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorMatrix {
    pub m: Matrix3<f64>,
    /// Elapsed time in seconds.
    pub t: f64,
}

impl PropagatorMatrix {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
            t: 0.0,
        }
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        [self.m[(i, 0)], self.m[(i, 1)], self.m[(i, 2)]]
    }

    /// Composition `self · other`; the elapsed times add.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            m: self.m * other.m,
            t: self.t + other.t,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

/// Max-abs entry of `M η Mᵀ − η`: zero iff the commutators of the mode
/// operators are preserved.
pub fn symplectic_defect(p: &PropagatorMatrix) -> f64 {
    let eta = mode_metric();
    (p.m * eta * p.m.transpose() - eta).amax()
}

/// [`symplectic_defect`] divided by `max(1, max|M_ij|²)`.
///
/// With strongly amplifying dynamics the entries of `M η Mᵀ` are of order
/// `max|M_ij|²` and their f64 rounding alone exceeds any fixed absolute
/// threshold, so this is the meaningful test in that regime.
pub fn relative_symplectic_defect(p: &PropagatorMatrix) -> f64 {
    let scale = p.max_abs_entry().powi(2).max(1.0);
    symplectic_defect(p) / scale
}

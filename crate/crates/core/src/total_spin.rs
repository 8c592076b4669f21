//! Permutation-invariant eigenproblem `S² ρ = λ ρ`.
//!
//! A permutation-invariant operator in the invariant span is
//! `ρ = 2^{-N} Σ_m a_m A_m`, where `A_m` sums all products of `m` disjoint
//! scalar products. `S² = (3N + 2 A_1)/4` and `A_1` acts tridiagonally on the
//! `A_m`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{realize_dense, InvariantOperator};
use crate::dense::{DenseLimit, DenseOperator};
use crate::error::{Error, Result};
use crate::multiindex::BasisCatalog;
use crate::oracle::{spectrum_of_matrix, total_spin_squared};

/// `ρ = 2^{-N} Σ_m a_m A_m` with `a_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricInvariantOperator {
    n_spins: usize,
    coeffs: Vec<f64>,
}

impl SymmetricInvariantOperator {
    pub fn new(n_spins: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != n_spins / 2 + 1 {
            return Err(Error::DimensionMismatch { expected: n_spins / 2 + 1, actual: coeffs.len() });
        }
        if coeffs[0] != 1.0 {
            return Err(Error::InvalidArgument(format!("a_0 must be 1, got {}", coeffs[0])));
        }
        Ok(SymmetricInvariantOperator { n_spins, coeffs })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `a_0, a_1, …, a_{⌊N/2⌋}`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Spreads `a_m` over every multi-index with `m` pairs.
    pub fn to_invariant(&self, catalog: Arc<BasisCatalog>) -> Result<InvariantOperator> {
        if catalog.n_spins() != self.n_spins {
            return Err(Error::DimensionMismatch { expected: self.n_spins, actual: catalog.n_spins() });
        }
        let v = DVector::from_iterator(catalog.len(), catalog.entries().iter().map(|m| self.coeffs[m.len()]));
        InvariantOperator::new(catalog, v)
    }

    pub fn to_dense(&self, limit: DenseLimit) -> Result<DenseOperator> {
        limit.check(self.n_spins)?;
        let catalog = Arc::new(BasisCatalog::enumerate(self.n_spins)?);
        realize_dense(&self.to_invariant(catalog)?, limit)
    }
}

fn theta(x: i64) -> f64 {
    if x > 0 {
        1.0
    } else {
        0.0
    }
}

/// Coefficients of `A_1 A_m = α A_{m-1} + β A_m + γ A_{m+1}`.
fn a1_action(n: usize, m: usize) -> (f64, f64, f64) {
    let (n, m) = (n as i64, m as i64);
    if m == 0 {
        return (0.0, 0.0, 1.0);
    }
    let alpha = ((n - 2 * m + 2) * (n - 2 * m + 1)) as f64 * (1.5 + (m - 1) as f64 * theta(n - 2 * m + 1));
    let beta = 2.0 * m as f64 * ((n - 2 * m) as f64 * theta(n - 2 * m) - 1.0);
    let gamma = (m + 1) as f64 * theta(n - 2 * m - 1);
    (alpha, beta, gamma)
}

/// Matrix of `S²` on coefficient vectors `(a_0, …, a_{⌊N/2⌋})`: column `m`
/// holds the expansion of `S² A_m`.
pub fn tridiagonal_s2_matrix(n_spins: usize) -> Result<DMatrix<f64>> {
    if n_spins == 0 {
        return Err(Error::InvalidArgument("need at least one spin".into()));
    }
    let size = n_spins / 2 + 1;
    let mut t = DMatrix::zeros(size, size);
    for m in 0..size {
        let (alpha, beta, gamma) = a1_action(n_spins, m);
        if m > 0 {
            t[(m - 1, m)] = alpha;
        }
        t[(m, m)] = beta;
        if m + 1 < size {
            t[(m + 1, m)] = gamma;
        }
    }
    Ok((DMatrix::identity(size, size) * (3.0 * n_spins as f64) + t * 2.0) * 0.25)
}

/// Allowed total spins `N/2, N/2 - 1, …` down to 0 or 1/2.
pub fn spin_ladder(n_spins: usize) -> Vec<f64> {
    (0..=n_spins / 2).map(|k| n_spins as f64 / 2.0 - k as f64).collect()
}

fn check_spin(n_spins: usize, spin: f64) -> Result<()> {
    let twice = 2.0 * spin;
    let ok = spin.is_finite()
        && twice >= 0.0
        && twice <= n_spins as f64
        && twice.fract() == 0.0
        && (twice as usize) % 2 == n_spins % 2;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSpin { spin, n_spins })
    }
}

/// Solves the three-term recursion for `a_m` at `λ = S(S+1)`.
pub fn coefficients_for_spin(n_spins: usize, spin: f64) -> Result<SymmetricInvariantOperator> {
    if n_spins == 0 {
        return Err(Error::InvalidArgument("need at least one spin".into()));
    }
    check_spin(n_spins, spin)?;
    let lambda = spin * (spin + 1.0);
    let n = n_spins as f64;
    let top = n_spins / 2;
    let mut a = vec![0.0; top + 1];
    a[0] = 1.0;
    for m in 1..=top {
        let mf = m as f64;
        let prev2 = if m >= 2 { a[m - 2] } else { 0.0 };
        let numer = (4.0 * lambda - (4.0 * mf - 1.0) * n + 8.0 * mf * mf - 12.0 * mf + 4.0) * a[m - 1]
            - 2.0 * (mf - 1.0) * prev2;
        // N - 2m + 1 ≥ 1 for m ≤ ⌊N/2⌋, so the denominator never vanishes here
        let denom = (n - 2.0 * mf + 2.0) * (n - 2.0 * mf + 1.0) * (2.0 * mf + 1.0);
        a[m] = numer / denom;
    }
    SymmetricInvariantOperator::new(n_spins, a)
}

/// `‖T a - S(S+1) a‖_∞` for the tridiagonal `S²` matrix.
pub fn eigen_residual(op: &SymmetricInvariantOperator, spin: f64) -> Result<f64> {
    let t = tridiagonal_s2_matrix(op.n_spins)?;
    let a = DVector::from_column_slice(op.coeffs());
    Ok((t * &a - &a * (spin * (spin + 1.0))).amax())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorCheck {
    /// Trace of the dense spin-`S` eigenprojector.
    pub trace: f64,
    pub rank: usize,
    /// `‖(tρ)² - tρ‖_F`.
    pub idempotency_error: f64,
    /// `‖tρ - P_S‖_F` against the projector from diagonalizing dense `S²`.
    pub projector_error: f64,
}

/// Dense projector `P_S` from the eigendecomposition of `S²`.
pub fn dense_spin_projector(n_spins: usize, spin: f64, limit: DenseLimit) -> Result<DenseOperator> {
    check_spin(n_spins, spin)?;
    let s2 = total_spin_squared(n_spins, limit)?;
    let spec = spectrum_of_matrix(s2.matrix(), 1e-8);
    let lambda = spin * (spin + 1.0);
    let level = spec
        .levels
        .iter()
        .find(|l| (l.energy - lambda).abs() < 1e-6)
        .ok_or_else(|| Error::Numerical(format!("S(S+1) = {lambda} not found in the dense S² spectrum")))?;
    DenseOperator::new(n_spins, level.projector.clone())
}

pub fn projector_check(op: &SymmetricInvariantOperator, spin: f64, limit: DenseLimit) -> Result<ProjectorCheck> {
    limit.check(op.n_spins)?;
    let projector = dense_spin_projector(op.n_spins, spin, limit)?;
    let t = projector.trace().re;
    let rho = op.to_dense(limit)?.scale(Complex64::new(t, 0.0));
    let idempotency_error = rho.mul(&rho).sub(&rho).frobenius_norm();
    let rank = rho
        .matrix()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|v| v.abs() > 1e-8)
        .count();
    Ok(ProjectorCheck {
        trace: t,
        rank,
        idempotency_error,
        projector_error: rho.sub(&projector).frobenius_norm(),
    })
}

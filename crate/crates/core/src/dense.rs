//! Dense `2^N × 2^N` complex operators.
//!
//! The computational basis is ordered as the tensor product
//! `spin 1 ⊗ spin 2 ⊗ ... ⊗ spin N`, so spin `k` (1-based) is bit `N - k` of
//! the basis index, and bit value 0 is the `σᶻ = +1` state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Environment variable that overrides [`DenseLimit::default`].
pub const DENSE_LIMIT_ENV: &str = "SPINRHO_DENSE_LIMIT";

/// Largest spin count for which dense `2^N` matrices may be built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLimit(pub usize);

impl Default for DenseLimit {
    fn default() -> Self {
        DenseLimit(12)
    }
}

impl DenseLimit {
    /// Reads [`DENSE_LIMIT_ENV`], falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DENSE_LIMIT_ENV) {
            Ok(raw) => raw.trim().parse::<usize>().map(DenseLimit).map_err(|_| {
                Error::InvalidArgument(format!("{DENSE_LIMIT_ENV}={raw:?} is not a non-negative integer"))
            }),
            Err(_) => Ok(DenseLimit::default()),
        }
    }

    pub fn check(self, n_spins: usize) -> Result<()> {
        if n_spins > self.0 {
            Err(Error::DenseLimitExceeded { n_spins, limit: self.0 })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_spins: usize,
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(n_spins: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_spins;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(DenseOperator { n_spins, matrix })
    }

    pub fn zeros(n_spins: usize) -> Self {
        let dim = 1usize << n_spins;
        DenseOperator { n_spins, matrix: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(n_spins: usize) -> Self {
        let dim = 1usize << n_spins;
        DenseOperator { n_spins, matrix: DMatrix::identity(dim, dim) }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { n_spins: self.n_spins, matrix: self.matrix.adjoint() }
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_spins: self.n_spins, matrix: &self.matrix * &other.matrix }
    }

    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        DenseOperator { n_spins: self.n_spins, matrix: ab - ba }
    }

    pub fn scale(&self, factor: Complex64) -> DenseOperator {
        DenseOperator { n_spins: self.n_spins, matrix: &self.matrix * factor }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_spins: self.n_spins, matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator { n_spins: self.n_spins, matrix: &self.matrix - &other.matrix }
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> Complex64 {
        let a = &self.matrix;
        let b = &other.matrix;
        let dim = a.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for k in 0..dim {
                acc += a[(i, k)] * b[(k, i)];
            }
        }
        acc
    }
}

/// Bit position of 1-based spin `site` in a basis index.
#[inline]
pub(crate) fn site_bit(site: usize, n_spins: usize) -> usize {
    n_spins - site
}

/// Applies the transposition of spins `i` and `j` to a basis index.
#[inline]
pub(crate) fn swap_sites(state: usize, i: usize, j: usize, n_spins: usize) -> usize {
    let bi = site_bit(i, n_spins);
    let bj = site_bit(j, n_spins);
    let x = ((state >> bi) ^ (state >> bj)) & 1;
    state ^ ((x << bi) | (x << bj))
}

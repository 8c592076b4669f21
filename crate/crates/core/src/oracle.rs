//! Brute-force dense ground truth.
//!
//! Everything here is built from explicit Kronecker products of Pauli
//! matrices and full Hermitian eigendecompositions, independent of the
//! reduced-space machinery it is used to check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dense::{DenseLimit, DenseOperator};
use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::system::SpinSystem;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Standard convention with `σᶻ = diag(1, -1)`.
    pub fn matrix(self) -> DMatrix<Complex64> {
        match self {
            Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

/// Tensor product with the given single-site factors and identities elsewhere.
pub fn pauli_string(factors: &[(usize, Pauli)], n_spins: usize) -> DenseOperator {
    let mut m = DMatrix::from_element(1, 1, ONE);
    for site in 1..=n_spins {
        let local = factors
            .iter()
            .filter(|(s, _)| *s == site)
            .fold(DMatrix::identity(2, 2), |acc, (_, p)| acc * p.matrix());
        m = m.kronecker(&local);
    }
    DenseOperator::new(n_spins, m).expect("dimension 2^N by construction")
}

/// `σ_i · σ_j`.
pub fn scalar_product_dense(i: usize, j: usize, n_spins: usize) -> DenseOperator {
    Pauli::ALL.iter().fold(DenseOperator::zeros(n_spins), |acc, &p| {
        acc.add(&pauli_string(&[(i, p), (j, p)], n_spins))
    })
}

/// `A_A = Π_p σ_{i_p}·σ_{j_p}`, without the `2^{-N}` prefactor.
pub fn multi_index_dense(index: &MultiIndex, n_spins: usize) -> DenseOperator {
    index
        .pairs()
        .iter()
        .fold(DenseOperator::identity(n_spins), |acc, &(i, j)| acc.mul(&scalar_product_dense(i, j, n_spins)))
}

/// Mixed product `σ_a · (σ_b × σ_c)`.
pub fn mixed_product_dense(triple: [usize; 3], n_spins: usize) -> DenseOperator {
    let [a, b, c] = triple;
    let mut acc = DenseOperator::zeros(n_spins);
    for (x, y, z, sign) in [
        (Pauli::X, Pauli::Y, Pauli::Z, 1.0),
        (Pauli::Y, Pauli::Z, Pauli::X, 1.0),
        (Pauli::Z, Pauli::X, Pauli::Y, 1.0),
        (Pauli::X, Pauli::Z, Pauli::Y, -1.0),
        (Pauli::Z, Pauli::Y, Pauli::X, -1.0),
        (Pauli::Y, Pauli::X, Pauli::Z, -1.0),
    ] {
        let term = pauli_string(&[(a, x), (b, y), (c, z)], n_spins);
        acc = acc.add(&term.scale(Complex64::new(sign, 0.0)));
    }
    acc
}

/// `Σ_i σ_i^axis`, twice the total spin component.
pub fn total_spin_component(axis: Pauli, n_spins: usize) -> DenseOperator {
    (1..=n_spins).fold(DenseOperator::zeros(n_spins), |acc, i| acc.add(&pauli_string(&[(i, axis)], n_spins)))
}

/// Total spin squared `S² = (Σ_i σ_i / 2)²`.
pub fn total_spin_squared(n_spins: usize, limit: DenseLimit) -> Result<DenseOperator> {
    limit.check(n_spins)?;
    let mut acc = DenseOperator::zeros(n_spins);
    for axis in Pauli::ALL {
        let s = total_spin_component(axis, n_spins);
        acc = acc.add(&s.mul(&s));
    }
    Ok(acc.scale(Complex64::new(0.25, 0.0)))
}

/// Dense Hamiltonian `Σ_{i<j} J_ij σ_i·σ_j + Σ_i h_i·σ_i`.
pub fn build_hamiltonian(sys: &SpinSystem, limit: DenseLimit) -> Result<DenseOperator> {
    let n = sys.n_spins();
    limit.check(n)?;
    let mut h = DenseOperator::zeros(n);
    for (i, j, jij) in sys.bonds() {
        h = h.add(&scalar_product_dense(i, j, n).scale(Complex64::new(jij, 0.0)));
    }
    if sys.fields().is_some() {
        for site in 1..=n {
            for (axis, &component) in Pauli::ALL.iter().zip(sys.field(site).iter()) {
                if component != 0.0 {
                    h = h.add(&pauli_string(&[(site, *axis)], n).scale(Complex64::new(component, 0.0)));
                }
            }
        }
    }
    Ok(h)
}

/// One distinct eigenvalue with its multiplicity and eigenprojector.
#[derive(Debug, Clone)]
pub struct DenseLevel {
    pub energy: f64,
    pub multiplicity: usize,
    pub projector: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns match `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
    pub levels: Vec<DenseLevel>,
}

impl DenseSpectrum {
    pub fn distinct_energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// Sorted eigendecomposition of a Hermitian matrix.
fn sorted_eigen(matrix: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Diagonalizes a Hermitian matrix and groups eigenvalues closer than
/// `cluster_tol · (E_max - E_min)` into levels.
pub fn spectrum_of_matrix(matrix: &DMatrix<Complex64>, cluster_tol: f64) -> DenseSpectrum {
    let (eigenvalues, eigenvectors) = sorted_eigen(matrix);
    let range = eigenvalues.last().copied().unwrap_or(0.0) - eigenvalues.first().copied().unwrap_or(0.0);
    let gap = cluster_tol * range.max(f64::MIN_POSITIVE);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &e) in eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if e - eigenvalues[*g.last().unwrap()] <= gap => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let dim = matrix.nrows();
    let levels = groups
        .into_iter()
        .map(|g| {
            let cols = DMatrix::from_fn(dim, g.len(), |r, c| eigenvectors[(r, g[c])]);
            let energy = g.iter().map(|&k| eigenvalues[k]).sum::<f64>() / g.len() as f64;
            DenseLevel { energy, multiplicity: g.len(), projector: &cols * cols.adjoint() }
        })
        .collect();
    DenseSpectrum { eigenvalues, eigenvectors, levels }
}

pub fn eigenprojectors(h: &DenseOperator, cluster_tol: f64) -> DenseSpectrum {
    spectrum_of_matrix(h.matrix(), cluster_tol)
}

/// `V diag(weights) V†` in the eigenbasis of `h`, normalized to unit trace.
pub fn diagonal_state(h: &DenseOperator, weights: &[f64]) -> Result<DenseOperator> {
    if weights.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), actual: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be non-negative with positive sum".into()));
    }
    let (_, vectors) = sorted_eigen(h.matrix());
    let diag = DVector::from_iterator(weights.len(), weights.iter().map(|w| Complex64::new(w / total, 0.0)));
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * diag[c]);
    DenseOperator::new(h.n_spins(), &scaled * vectors.adjoint())
}

/// Gibbs state `exp(-βH) / tr exp(-βH)`, with energies shifted by the
/// ground-state energy before exponentiation.
pub fn thermal_state(h: &DenseOperator, beta: f64) -> Result<DenseOperator> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("inverse temperature {beta} must be finite and non-negative")));
    }
    let (values, vectors) = sorted_eigen(h.matrix());
    let e0 = values.first().copied().unwrap_or(0.0);
    let w: Vec<f64> = values.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * (w[c] / z));
    DenseOperator::new(h.n_spins(), &scaled * vectors.adjoint())
}

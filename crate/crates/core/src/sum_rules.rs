//! Thermal sum rules `⟨[H, O]⟩_β = 0` and the spin-torque form
//! `⟨(h_i + Σ_j J_ij σ_j) × σ_i⟩_β = 0`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dense::{DenseLimit, DenseOperator};
use crate::error::{Error, Result};
use crate::oracle::{build_hamiltonian, pauli_string, thermal_state, Pauli};
use crate::system::SpinSystem;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SumRuleReport {
    pub beta: f64,
    pub observable: String,
    /// Real parts for the torque form; `|tr([H, O] ρ)|` for a general `O`.
    pub components: Vec<f64>,
    /// Largest absolute component.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SumRuleReport {
    fn new(beta: f64, observable: String, components: Vec<f64>, tolerance: f64) -> Self {
        let residual = components.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        SumRuleReport { beta, observable, components, residual, tolerance, pass: residual <= tolerance }
    }
}

/// `c` in `[H, σ_i^a] = c ((h_i + Σ_j J_ij σ_j) × σ_i)^a`, read off from
/// `[σ^y, σ^x] = c (e_y × σ)^x = c σ^z`.
pub fn torque_constant() -> Complex64 {
    static C: OnceLock<Complex64> = OnceLock::new();
    *C.get_or_init(|| {
        let (x, y, z) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix());
        let comm = &y * &x - &x * &y;
        (&z * comm).trace() / (&z * &z).trace()
    })
}

/// `tr([H, O] ρ)` and `-tr([H, ρ] O)`, equal by cyclicity of the trace.
pub fn commutator_expectations(h: &DenseOperator, o: &DenseOperator, rho: &DenseOperator) -> (Complex64, Complex64) {
    let direct = h.commutator(o).trace_product(rho);
    let moved = -h.commutator(rho).trace_product(o);
    (direct, moved)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be finite and non-negative, got {beta}")))
    }
}

/// `|⟨[H, O]⟩_β|` for an arbitrary observable.
pub fn general_sum_rule(sys: &SpinSystem, o: &DenseOperator, beta: f64, limit: DenseLimit) -> Result<SumRuleReport> {
    check_beta(beta)?;
    limit.check(sys.n_spins())?;
    if o.n_spins() != sys.n_spins() {
        return Err(Error::DimensionMismatch { expected: sys.n_spins(), actual: o.n_spins() });
    }
    let h = build_hamiltonian(sys, limit)?;
    let rho = thermal_state(&h, beta)?;
    let (value, _) = commutator_expectations(&h, o, &rho);
    Ok(SumRuleReport::new(beta, "O".into(), vec![value.norm()], DEFAULT_TOLERANCE))
}

/// The three operators `((h_i + Σ_j J_ij σ_j) × σ_i)^a`, `a = x, y, z`.
pub fn torque_operators(sys: &SpinSystem, site: usize) -> Result<[DenseOperator; 3]> {
    let n = sys.n_spins();
    if site == 0 || site > n {
        return Err(Error::IndexOutOfRange { index: site, n_spins: n });
    }
    let h = sys.field(site);
    let comp = |a: usize| {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        // (v × σ_i)^a = v^b σ_i^c - v^c σ_i^b
        let mut op = DenseOperator::zeros(n);
        let mut add = |coeff: f64, factors: &[(usize, Pauli)]| {
            if coeff != 0.0 {
                op = op.add(&pauli_string(factors, n).scale(Complex64::new(coeff, 0.0)));
            }
        };
        add(h[b], &[(site, Pauli::ALL[c])]);
        add(-h[c], &[(site, Pauli::ALL[b])]);
        for j in (1..=n).filter(|&j| j != site) {
            let jij = sys.coupling(site, j);
            add(jij, &[(j, Pauli::ALL[b]), (site, Pauli::ALL[c])]);
            add(-jij, &[(j, Pauli::ALL[c]), (site, Pauli::ALL[b])]);
        }
        op
    };
    Ok([comp(0), comp(1), comp(2)])
}

/// `⟨(h_i + Σ_j J_ij σ_j) × σ_i⟩` in an arbitrary state `ρ`.
pub fn torque_expectation(sys: &SpinSystem, site: usize, rho: &DenseOperator) -> Result<[f64; 3]> {
    if rho.n_spins() != sys.n_spins() {
        return Err(Error::DimensionMismatch { expected: sys.n_spins(), actual: rho.n_spins() });
    }
    let ops = torque_operators(sys, site)?;
    Ok([0, 1, 2].map(|a| ops[a].trace_product(rho).re))
}

pub fn torque_sum_rule(sys: &SpinSystem, site: usize, beta: f64, limit: DenseLimit) -> Result<SumRuleReport> {
    check_beta(beta)?;
    limit.check(sys.n_spins())?;
    let h = build_hamiltonian(sys, limit)?;
    let rho = thermal_state(&h, beta)?;
    let t = torque_expectation(sys, site, &rho)?;
    Ok(SumRuleReport::new(beta, format!("torque at site {site}"), t.to_vec(), DEFAULT_TOLERANCE))
}

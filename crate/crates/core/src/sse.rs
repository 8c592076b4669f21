//! Reduced form of `H ρ = E ρ` for Heisenberg clusters.
//!
//! With `ρ = 2^{-N} Σ_A a_A A_A`, the Hermitian part of `H ρ` stays in the
//! invariant span and gives `E a = M a`. The anti-Hermitian part `[H, ρ]/2`
//! lands on T-odd operators `T_r = σ_i·(σ_j×σ_k) A_B` (one per constraint row
//! `r = (B; i<j<k)`), with `[H, ρ] = 2i Σ_r (C a)_r T_r`.
//!
//! The `T_r` are linearly dependent from `N = 5` on, so individual rows of
//! `C a` need not vanish on genuine solutions. The constraint is therefore
//! measured as the norm of `Σ_r (C a)_r T_r`, using the Gram matrix of the
//! `T_r` (see [`ConstraintMetric`]).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{apply_rewrite_rules, InvariantOperator};
use crate::dense::{DenseLimit, DenseOperator};
use crate::error::{Error, Result};
use crate::multiindex::{BasisCatalog, MultiIndex};
use crate::oracle::build_hamiltonian;
use crate::permutation::{swap_expansion, PermSum};
use crate::system::SpinSystem;

/// Label of one anti-Hermitian equation: the base multi-index and a triple
/// of free sites `i < j < k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintRow {
    pub base: MultiIndex,
    pub triple: [usize; 3],
}

/// Gram matrix `Γ_rs = tr(T_r T_s) / 2^N` of the T-odd operators, block
/// diagonal by support.
#[derive(Debug, Clone)]
pub struct ConstraintMetric {
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
    /// Per block `R` with `Γ = R Rᵀ`, so norms never go through `cᵀ Γ c`.
    factors: Vec<DMatrix<f64>>,
}

impl ConstraintMetric {
    fn build(rows: &[ConstraintRow]) -> Self {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (k, r) in rows.iter().enumerate() {
            let mask = r.triple.iter().fold(r.base.support(), |m, &s| m | (1 << (s - 1)));
            groups.entry(mask).or_default().push(k);
        }
        let blocks = groups
            .into_iter()
            .map(|(mask, members)| {
                let sites: Vec<usize> = (1..=64).filter(|s| mask & (1u64 << (s - 1)) != 0).collect();
                let local = |s: usize| sites.iter().position(|&x| x == s).unwrap();
                let len = sites.len();
                let ops: Vec<PermSum> = members
                    .iter()
                    .map(|&k| {
                        let r = &rows[k];
                        let [i, j, l] = r.triple;
                        r.base.pairs().iter().fold(
                            PermSum::cyclic_difference(len, local(i), local(j), local(l)),
                            |acc, &(a, b)| acc.mul(&PermSum::scalar_product(len, local(a), local(b))),
                        )
                    })
                    .collect();
                let n = members.len();
                let mut g = DMatrix::zeros(n, n);
                for a in 0..n {
                    for b in a..n {
                        // T = 2i (P_c - P_c⁻¹) ..., so T_r T_s carries (2i)² = -4
                        let v = -4.0 * ops[a].normalized_trace_product(&ops[b]);
                        g[(a, b)] = v;
                        g[(b, a)] = v;
                    }
                }
                (members, g)
            })
            .collect::<Vec<_>>();
        let factors = blocks.iter().map(|(_, g)| psd_factor(g)).collect();
        ConstraintMetric { blocks, factors }
    }

    /// `‖Rᵀ c‖ = sqrt(cᵀ Γ c)`, accurate down to rounding in `c`.
    pub fn norm(&self, c: &DVector<f64>) -> f64 {
        self.whiten(&DMatrix::from_column_slice(c.len(), 1, c.as_slice())).norm()
    }

    /// Stacked `Rᵀ K` over the blocks; `(Rᵀ K)ᵀ (Rᵀ K) = Kᵀ Γ K`.
    pub fn whiten(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let rows: usize = self.factors.iter().map(|r| r.ncols()).sum();
        let mut out = DMatrix::zeros(rows, k.ncols());
        let mut at = 0;
        for ((idx, _), r) in self.blocks.iter().zip(&self.factors) {
            let local = DMatrix::from_fn(idx.len(), k.ncols(), |a, c| k[(idx[a], c)]);
            out.rows_mut(at, r.ncols()).copy_from(&(r.transpose() * local));
            at += r.ncols();
        }
        out
    }

    /// `cᵀ Γ c`.
    pub fn quadratic_form(&self, c: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|(idx, g)| {
                let local = DVector::from_iterator(idx.len(), idx.iter().map(|&k| c[k]));
                local.dot(&(g * &local))
            })
            .sum()
    }

    /// `Kᵀ Γ K` for a matrix whose rows are indexed like the constraints.
    pub fn gram_of_columns(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(k.ncols(), k.ncols());
        for (idx, g) in &self.blocks {
            let local = DMatrix::from_fn(idx.len(), k.ncols(), |r, c| k[(idx[r], c)]);
            q += local.transpose() * (g * &local);
        }
        q
    }

    pub fn to_dense(&self, n_rows: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n_rows, n_rows);
        for (idx, g) in &self.blocks {
            for (a, &ra) in idx.iter().enumerate() {
                for (b, &rb) in idx.iter().enumerate() {
                    out[(ra, rb)] = g[(a, b)];
                }
            }
        }
        out
    }
}

fn psd_factor(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = g.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..g.nrows()).filter(|&k| eig.eigenvalues[k] > 1e-12 * max).collect();
    DMatrix::from_fn(g.nrows(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] * eig.eigenvalues[keep[c]].sqrt())
}

/// Reduced matrix `M` plus the anti-Hermitian constraint rows `C`.
#[derive(Debug, Clone)]
pub struct ReducedEigenproblem {
    catalog: Arc<BasisCatalog>,
    matrix: DMatrix<f64>,
    rows: Vec<ConstraintRow>,
    // sparse rows of C: (column, value)
    constraints: Vec<Vec<(usize, f64)>>,
    metric: ConstraintMetric,
}

impl ReducedEigenproblem {
    fn assemble(
        catalog: Arc<BasisCatalog>,
        matrix: DMatrix<f64>,
        rows: Vec<ConstraintRow>,
        constraints: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let metric = ConstraintMetric::build(&rows);
        ReducedEigenproblem { catalog, matrix, rows, constraints, metric }
    }

    pub fn catalog(&self) -> &Arc<BasisCatalog> {
        &self.catalog
    }

    pub fn n_spins(&self) -> usize {
        self.catalog.n_spins()
    }

    /// `M`, acting on coefficient vectors: `(M a)_A` is the coefficient of
    /// `A_A` in the Hermitian part of `H ρ`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn constraint_rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn constraint_metric(&self) -> &ConstraintMetric {
        &self.metric
    }

    /// Dense copy of `C` (rows × catalog).
    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.rows.len(), self.catalog.len());
        for (r, row) in self.constraints.iter().enumerate() {
            for &(col, v) in row {
                c[(r, col)] += v;
            }
        }
        c
    }

    /// `C v`.
    pub fn apply_constraints(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.constraints.iter().map(|row| row.iter().map(|&(c, x)| x * v[c]).sum::<f64>()),
        )
    }

    fn apply_constraints_to_columns(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut k = DMatrix::zeros(self.rows.len(), u.ncols());
        for (r, row) in self.constraints.iter().enumerate() {
            for &(col, x) in row {
                for c in 0..u.ncols() {
                    k[(r, c)] += x * u[(col, c)];
                }
            }
        }
        k
    }

    /// `‖[H, ρ]‖_F / (2 ‖ρ‖_F)` for `ρ` with coefficients `v`.
    pub fn constraint_residual(&self, v: &DVector<f64>) -> f64 {
        let norm = self.catalog.gram().norm(v);
        if norm == 0.0 {
            return 0.0;
        }
        let c = self.apply_constraints(v);
        self.metric.norm(&c) / norm
    }

    /// Largest row-wise `|(C v)_r| / ‖v‖_G`, i.e. the plain row residual
    /// without the T-odd Gram metric.
    pub fn raw_constraint_residual(&self, v: &DVector<f64>) -> f64 {
        let norm = self.catalog.gram().norm(v);
        if norm == 0.0 {
            return 0.0;
        }
        self.apply_constraints(v).amax() / norm
    }

    /// `‖M v - E v‖_G / ‖v‖_G`.
    pub fn eigen_residual(&self, v: &DVector<f64>, energy: f64) -> f64 {
        let gram = self.catalog.gram();
        let norm = gram.norm(v);
        if norm == 0.0 {
            return 0.0;
        }
        gram.norm(&(&self.matrix * v - v * energy)) / norm
    }

    /// `Lᵀ M P` where `G = L Lᵀ` and `Lᵀ P = 1`: the matrix of `M` in
    /// Hilbert-Schmidt-orthonormal coordinates of the operator span. It is
    /// symmetric because `M` is self-adjoint in that metric; its size is the
    /// rank of `G`.
    pub fn symmetrized_matrix(&self) -> DMatrix<f64> {
        let (l, p) = self.catalog.gram().factors();
        l.transpose() * (&self.matrix * p)
    }
}

fn check_system(sys: &SpinSystem) -> Result<()> {
    if let Some(site) = sys.first_field_site() {
        return Err(Error::FieldsNotSupported { site });
    }
    if sys.n_spins() < 2 {
        return Err(Error::InvalidArgument("the reduced problem needs at least two spins".into()));
    }
    Ok(())
}

fn enumerate_constraint_rows(catalog: &BasisCatalog) -> Vec<ConstraintRow> {
    let n = catalog.n_spins();
    let mut rows = Vec::new();
    for base in catalog.entries() {
        let free = base.free_sites(n);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate().skip(a + 1) {
                for &k in free.iter().skip(b + 1) {
                    rows.push(ConstraintRow { base: base.clone(), triple: [i, j, k] });
                }
            }
        }
    }
    rows
}

/// Assembles `M` and `C` from the closed-form coefficient equations.
pub fn build_reduced_matrix(sys: &SpinSystem) -> Result<ReducedEigenproblem> {
    check_system(sys)?;
    let n = sys.n_spins();
    let catalog = Arc::new(BasisCatalog::enumerate(n)?);
    let size = catalog.len();
    let j = |a: usize, b: usize| sys.coupling(a, b);
    let column = |pairs: Vec<(usize, usize)>| catalog.lookup(&MultiIndex::canonicalize_unchecked(pairs)).unwrap();

    let mut m = DMatrix::zeros(size, size);
    for (row, a) in catalog.entries().iter().enumerate() {
        let pairs = a.pairs();
        let len = pairs.len();
        let free = a.free_sites(n);
        let without = |skip: &[usize]| -> Vec<(usize, usize)> {
            (0..len).filter(|k| !skip.contains(k)).map(|k| pairs[k]).collect()
        };
        let with = |mut base: Vec<(usize, usize)>, add: &[(usize, usize)]| {
            base.extend_from_slice(add);
            base
        };

        // pair exchanges between two pairs of A
        for l in 0..len {
            for mm in l + 1..len {
                let (il, jl) = pairs[l];
                let (im, jm) = pairs[mm];
                let rest = without(&[l, mm]);
                m[(row, column(with(rest.clone(), &[(il, im), (jl, jm)])))] +=
                    j(im, jl) + j(il, jm) - j(il, jl) - j(im, jm);
                m[(row, column(with(rest, &[(il, jm), (jl, im)])))] +=
                    j(il, im) + j(jl, jm) - j(il, jl) - j(im, jm);
            }
        }

        // pair creation on two free sites and the recouplings through them
        for (x, &p) in free.iter().enumerate() {
            for &q in free.iter().skip(x + 1) {
                let jpq = j(p, q);
                m[(row, column(with(pairs.to_vec(), &[(p, q)])))] += 3.0 * jpq;
                for k in 0..len {
                    let (im, jm) = pairs[k];
                    m[(row, column(with(without(&[k]), &[(im, p), (q, jm)])))] += jpq;
                    m[(row, column(with(without(&[k]), &[(q, im), (jm, p)])))] += jpq;
                }
            }
        }

        // one free site swapped into a pair
        for &p in &free {
            for k in 0..len {
                let (im, jm) = pairs[k];
                m[(row, column(with(without(&[k]), &[(p, im)])))] += j(p, jm);
                m[(row, column(with(without(&[k]), &[(p, jm)])))] += j(p, im);
            }
        }

        // contraction and diagonal terms
        for k in 0..len {
            let (im, jm) = pairs[k];
            m[(row, column(without(&[k])))] += j(im, jm);
            m[(row, row)] -= 2.0 * j(im, jm);
        }
    }

    let rows = enumerate_constraint_rows(&catalog);
    let constraints = rows
        .iter()
        .map(|r| {
            let [i, jj, k] = r.triple;
            let base = r.base.pairs().to_vec();
            let mut entries = Vec::new();
            let mut push = |add: &[(usize, usize)], v: f64| {
                if v != 0.0 {
                    entries.push((column(with_pairs(&base, add)), v));
                }
            };
            for p in r.base.free_sites(n).into_iter().filter(|p| !r.triple.contains(p)) {
                push(&[(i, jj), (p, k)], j(p, jj) - j(p, i));
                push(&[(i, p), (jj, k)], j(p, k) - j(p, jj));
                push(&[(i, k), (p, jj)], j(p, i) - j(p, k));
            }
            push(&[(i, jj)], -(j(i, k) - j(jj, k)));
            push(&[(i, k)], -(j(jj, k) - j(i, jj)));
            push(&[(jj, k)], -(j(i, jj) - j(i, k)));
            entries
        })
        .collect();

    Ok(ReducedEigenproblem::assemble(catalog, m, rows, constraints))
}

fn with_pairs(base: &[(usize, usize)], add: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut v = base.to_vec();
    v.extend_from_slice(add);
    v
}

/// Assembles `M` and `C` by expanding `H A_B` for every basis element with
/// the pairwise rewrite rules.
pub fn build_reduced_matrix_rewrite(sys: &SpinSystem) -> Result<ReducedEigenproblem> {
    check_system(sys)?;
    let n = sys.n_spins();
    let catalog = Arc::new(BasisCatalog::enumerate(n)?);
    let rows = enumerate_constraint_rows(&catalog);
    let row_of: HashMap<(&MultiIndex, [usize; 3]), usize> =
        rows.iter().enumerate().map(|(k, r)| ((&r.base, r.triple), k)).collect();

    let size = catalog.len();
    let mut m = DMatrix::zeros(size, size);
    let mut c: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); rows.len()];
    let bonds: Vec<(usize, usize, f64)> = sys.bonds().collect();
    for (col, b) in catalog.entries().iter().enumerate() {
        for &(x, y, jxy) in &bonds {
            let e = apply_rewrite_rules((x, y), b, n)?;
            for (coeff, idx) in e.even {
                m[(catalog.lookup(&idx).unwrap(), col)] += jxy * coeff;
            }
            for t in e.odd {
                let r = row_of[&(&t.rest, t.triple)];
                *c[r].entry(col).or_insert(0.0) += jxy * t.coeff;
            }
        }
    }
    let constraints = c.into_iter().map(|row| row.into_iter().filter(|(_, v)| *v != 0.0).collect()).collect();
    Ok(ReducedEigenproblem::assemble(catalog, m, rows, constraints))
}

/// Dense-trace route to `M`: the Hermitian part of `H A_A` is projected back
/// onto the basis through the Gram matrix,
/// `M = G⁻¹ T` with `T_BA = tr(A_B (H A_A + A_A H)/2) / 2^N`.
///
/// The constraint rows come from the rewrite-rule expansion.
pub fn build_reduced_matrix_oracle(sys: &SpinSystem, limit: DenseLimit) -> Result<ReducedEigenproblem> {
    check_system(sys)?;
    let n = sys.n_spins();
    limit.check(n)?;
    let h = build_hamiltonian(sys, limit)?;
    let symbolic = build_reduced_matrix_rewrite(sys)?;
    let catalog = symbolic.catalog().clone();
    let t = jordan_traces(&h, &catalog);
    let gram = catalog.gram();
    let mut m = DMatrix::zeros(catalog.len(), catalog.len());
    for a in 0..catalog.len() {
        let col = gram.solve(&t.column(a).into_owned());
        m.set_column(a, &col);
    }
    Ok(ReducedEigenproblem::assemble(catalog, m, symbolic.rows, symbolic.constraints))
}

/// `T_BA = tr(A_B (H A_A + A_A H)/2) / 2^N` from dense `H`, using
/// `tr(P_π H P_τ) = Σ_s H[π(s), τ(s)]` for involutions `π, τ`.
fn jordan_traces(h: &DenseOperator, catalog: &BasisCatalog) -> DMatrix<f64> {
    let n = catalog.n_spins();
    let dim = 1usize << n;
    let images: Vec<Vec<usize>> = catalog
        .entries()
        .iter()
        .map(|m| {
            (0..dim)
                .map(|s| m.pairs().iter().fold(s, |st, &(i, j)| crate::dense::swap_sites(st, i, j, n)))
                .collect()
        })
        .collect();
    let hm = h.matrix();
    let size = catalog.len();
    let mut g = DMatrix::<f64>::zeros(size, size);
    for p in 0..size {
        for q in 0..size {
            let (ip, iq) = (&images[p], &images[q]);
            g[(p, q)] = (0..dim).map(|s| hm[(ip[s], iq[s])].re).sum();
        }
    }
    let expansions: Vec<Vec<(usize, f64)>> = catalog
        .entries()
        .iter()
        .map(|m| swap_expansion(m).into_iter().map(|(sub, w)| (catalog.lookup(&sub).unwrap(), w)).collect())
        .collect();
    let norm = 1.0 / dim as f64;
    DMatrix::from_fn(size, size, |b, a| {
        let mut acc = 0.0;
        for &(p, wp) in &expansions[b] {
            for &(q, wq) in &expansions[a] {
                // tr(P_p H P_q) + tr(P_p P_q H) = g(p, q) + g(q, p)
                acc += wp * wq * 0.5 * (g[(p, q)] + g[(q, p)]);
            }
        }
        acc * norm
    })
}

/// Clustering and constraint tolerances, both relative to the spectral
/// radius of `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveTolerances {
    pub cluster: f64,
    pub constraint: f64,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        SolveTolerances { cluster: 1e-8, constraint: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct SseSolution {
    pub energy: f64,
    /// Normalized to `a_0 = 1` unless `traceless`, in which case it has unit
    /// Hilbert-Schmidt norm in the `2^N`-scaled metric.
    pub operator: InvariantOperator,
    pub constraint_residual: f64,
    pub traceless: bool,
    pub g_invariant: bool,
}

impl SseSolution {
    pub fn coeffs(&self) -> &DVector<f64> {
        self.operator.coeffs()
    }
}

/// Accepted eigenvalue of the reduced problem.
#[derive(Debug, Clone)]
pub struct SolvedLevel {
    pub energy: f64,
    /// Number of `M` eigenvalues in the cluster.
    pub cluster_size: usize,
    /// Dimension of the cluster eigenspace that satisfies `[H, ρ] = 0`.
    pub family_dimension: usize,
    /// The G-invariant member first (when it exists), then traceless
    /// directions completing a basis of the solution family.
    pub solutions: Vec<SseSolution>,
}

impl SolvedLevel {
    pub fn g_invariant(&self) -> Option<&SseSolution> {
        self.solutions.iter().find(|s| s.g_invariant)
    }

    /// Degeneracy `d_E` recovered from the purity of the G-invariant state:
    /// `tr ρ_G² = 1 / d_E`.
    pub fn dense_dimension(&self) -> Option<f64> {
        let g = self.g_invariant()?;
        let purity = g.operator.hs_inner(&g.operator);
        Some(1.0 / purity)
    }
}

/// Eigenvalue cluster of `M` with no constraint-satisfying direction.
#[derive(Debug, Clone)]
pub struct RejectedCluster {
    pub energy: f64,
    pub cluster_size: usize,
    /// Smallest constraint residual over the cluster eigenspace.
    pub min_constraint_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub levels: Vec<SolvedLevel>,
    pub rejected: Vec<RejectedCluster>,
    /// Spectral radius of `M`, the scale for both tolerances.
    pub scale: f64,
}

impl SolveOutcome {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// Solves the reduced problem: eigendecomposition of the symmetrized `M`,
/// degeneracy clustering, then intersection of each cluster eigenspace with
/// the kernel of the constraints.
pub fn solve(prob: &ReducedEigenproblem, tol: SolveTolerances) -> Result<SolveOutcome> {
    if !(tol.cluster > 0.0) || !(tol.constraint > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let catalog = prob.catalog().clone();
    let size = catalog.len();
    let (_, p) = catalog.gram().factors();

    let s = prob.symmetrized_matrix();
    let s = (&s + s.transpose()) * 0.5;
    let rank = s.nrows();
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let y = DMatrix::from_fn(rank, rank, |r, c| eig.eigenvectors[(r, order[c])]);
    // G-orthonormal eigenvectors of M, free of Gram-kernel components
    let vectors = p * y;

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let gap = tol.cluster * scale;
    let kernel_cut = tol.constraint * scale;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &e) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if e - values[*c.last().unwrap()] <= gap => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let mut levels = Vec::new();
    let mut rejected = Vec::new();
    for cluster in clusters {
        let energy = cluster.iter().map(|&k| values[k]).sum::<f64>() / cluster.len() as f64;
        let u = DMatrix::from_fn(size, cluster.len(), |r, c| vectors[(r, cluster[c])]);
        let k = prob.apply_constraints_to_columns(&u);
        // singular values of Rᵀ K are the constraint residuals of the
        // G-orthonormal directions; pad to square so V is complete
        let wk = prob.metric.whiten(&k);
        let m = cluster.len();
        let padded = DMatrix::from_fn(wk.nrows().max(m), m, |r, c| if r < wk.nrows() { wk[(r, c)] } else { 0.0 });
        let svd = padded.svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let kernel: Vec<usize> = (0..m).filter(|&c| svd.singular_values[c] <= kernel_cut).collect();
        if kernel.is_empty() {
            let min = svd.singular_values.iter().fold(f64::INFINITY, |a, &v| a.min(v));
            rejected.push(RejectedCluster { energy, cluster_size: cluster.len(), min_constraint_residual: min });
            continue;
        }
        let w = DMatrix::from_fn(m, kernel.len(), |r, c| vt[(kernel[c], r)]);
        let family = &u * w;
        let directions: Vec<DVector<f64>> = (0..family.ncols()).map(|c| family.column(c).into_owned()).collect();
        let solutions = solution_basis(prob, energy, &directions)?;
        levels.push(SolvedLevel { energy, cluster_size: cluster.len(), family_dimension: kernel.len(), solutions });
    }
    Ok(SolveOutcome { levels, rejected, scale })
}

fn make_solution(
    prob: &ReducedEigenproblem,
    energy: f64,
    v: DVector<f64>,
    g_invariant: bool,
) -> Result<SseSolution> {
    let traceless = !g_invariant;
    let constraint_residual = prob.constraint_residual(&v);
    Ok(SseSolution {
        energy,
        operator: InvariantOperator::new(prob.catalog().clone(), v)?,
        constraint_residual,
        traceless,
        g_invariant,
    })
}

/// G-orthonormal basis of the span of `vectors` (modified Gram-Schmidt).
fn orthonormalize(prob: &ReducedEigenproblem, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let gram = prob.catalog().gram();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let proj = gram.inner(b, &w);
            w -= b * proj;
        }
        let norm = gram.norm(&w);
        if norm > 1e-10 * gram.norm(v).max(f64::MIN_POSITIVE) {
            basis.push(w / norm);
        }
    }
    basis
}

fn solution_basis(prob: &ReducedEigenproblem, energy: f64, directions: &[DVector<f64>]) -> Result<Vec<SseSolution>> {
    let basis = orthonormalize(prob, directions);
    let r = basis.len();
    // overlap of each direction with the identity: ⟨A_0, v⟩_G = v_0
    let z = DVector::from_iterator(r, basis.iter().map(|v| v[0]));
    let znorm = z.norm();
    let mut out = Vec::with_capacity(r);
    let mut complements: Vec<DVector<f64>> = Vec::new();
    if znorm > 1e-10 {
        let zhat = &z / znorm;
        let g = basis.iter().zip(zhat.iter()).fold(DVector::zeros(prob.catalog().len()), |acc, (v, &c)| acc + v * c);
        let a = &g / g[0];
        out.push(make_solution(prob, energy, a, true)?);
        // directions of R^r orthogonal to z give traceless members
        let mut frame = vec![zhat];
        for k in 0..r {
            if frame.len() == r {
                break;
            }
            let mut e = DVector::zeros(r);
            e[k] = 1.0;
            for f in &frame {
                let p = f.dot(&e);
                e -= f * p;
            }
            let n = e.norm();
            if n > 1e-8 {
                frame.push(e / n);
            }
        }
        for f in frame.into_iter().skip(1) {
            complements.push(basis.iter().zip(f.iter()).fold(DVector::zeros(prob.catalog().len()), |acc, (v, &c)| acc + v * c));
        }
    } else {
        complements = basis;
    }
    for mut v in complements {
        v[0] = 0.0;
        out.push(make_solution(prob, energy, v, false)?);
    }
    Ok(out)
}

/// The G-invariant member of a degenerate solution family: the Hilbert-Schmidt
/// projection of the identity onto the family, normalized to unit trace.
/// Its dense form is `P_E / d_E`.
pub fn g_invariant_solution(prob: &ReducedEigenproblem, family: &[SseSolution]) -> Result<SseSolution> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty solution family".into()))?;
    let energy = family.iter().map(|s| s.energy).sum::<f64>() / family.len() as f64;
    let vectors: Vec<DVector<f64>> = family.iter().map(|s| s.coeffs().clone()).collect();
    let basis = orthonormalize(prob, &vectors);
    let g = basis.iter().fold(DVector::zeros(first.coeffs().len()), |acc, v| acc + v * v[0]);
    if g[0].abs() <= 1e-12 {
        return Err(Error::Numerical("the solution family is traceless; no density matrix exists".into()));
    }
    let a = &g / g[0];
    make_solution(prob, energy, a, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{project_dense, realize_dense};
    use crate::oracle::eigenprojectors;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn three_spin(j12: f64, j23: f64, j13: f64) -> SpinSystem {
        SpinSystem::new(3)
            .unwrap()
            .with_coupling(1, 2, j12)
            .unwrap()
            .with_coupling(2, 3, j23)
            .unwrap()
            .with_coupling(1, 3, j13)
            .unwrap()
    }

    fn random_system(n: usize, rng: &mut impl Rng) -> SpinSystem {
        let mut sys = SpinSystem::new(n).unwrap();
        for i in 1..=n {
            for j in i + 1..=n {
                sys.set_coupling(i, j, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        sys
    }

    #[test]
    fn two_spin_matrix() {
        let prob = build_reduced_matrix(&SpinSystem::uniform(2, 1.0).unwrap()).unwrap();
        assert_eq!(prob.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 1.0, -2.0]));
        assert!(prob.constraint_rows().is_empty());
        let oracle = build_reduced_matrix_oracle(&SpinSystem::uniform(2, 1.0).unwrap(), DenseLimit::default()).unwrap();
        assert!((oracle.matrix() - prob.matrix()).amax() < 1e-12);
    }

    #[test]
    fn three_spin_constraint_row() {
        let (a, b, c) = (0.3, -0.7, 1.1);
        let prob = build_reduced_matrix(&three_spin(a, b, c)).unwrap();
        let cm = prob.constraint_matrix();
        assert_eq!(cm.nrows(), 1);
        // catalog order: 0, (1,2), (1,3), (2,3)
        let want = [0.0, b - c, a - b, c - a];
        for k in 0..4 {
            assert!((cm[(0, k)] - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn fields_are_rejected() {
        let sys = SpinSystem::uniform(3, 1.0).unwrap().with_field(2, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(build_reduced_matrix(&sys).unwrap_err(), Error::FieldsNotSupported { site: 2 });
    }

    #[test]
    fn three_routes_agree() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in 2..=6 {
            let sys = random_system(n, &mut rng);
            let formula = build_reduced_matrix(&sys).unwrap();
            let rewrite = build_reduced_matrix_rewrite(&sys).unwrap();
            let dense = build_reduced_matrix_oracle(&sys, DenseLimit::default()).unwrap();
            assert!((formula.matrix() - rewrite.matrix()).amax() < 1e-12, "N={n}");
            assert!((formula.matrix() - dense.matrix()).amax() < 1e-10, "N={n}");
            assert!((formula.constraint_matrix() - rewrite.constraint_matrix()).amax() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn constraint_expansion_reproduces_commutator() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in 3..=5 {
            let sys = random_system(n, &mut rng);
            let prob = build_reduced_matrix(&sys).unwrap();
            let catalog = prob.catalog().clone();
            let v = DVector::from_fn(catalog.len(), |_, _| rng.random_range(-1.0..1.0));
            let rho = realize_dense(&InvariantOperator::new(catalog.clone(), v.clone()).unwrap(), DenseLimit::default()).unwrap();
            let h = build_hamiltonian(&sys, DenseLimit::default()).unwrap();
            let comm = h.commutator(&rho);
            // [H, ρ] = 2i Σ_r (C a)_r T_r with a = 2^N × (coefficients of ρ); here ρ carries 2^{-N}
            let c = prob.apply_constraints(&v);
            let mut sum = DenseOperator::zeros(n);
            for (r, row) in prob.constraint_rows().iter().enumerate() {
                let t = crate::oracle::mixed_product_dense(row.triple, n)
                    .mul(&crate::oracle::multi_index_dense(&row.base, n));
                sum = sum.add(&t.scale(Complex64::new(c[r], 0.0)));
            }
            let scale = Complex64::new(0.0, 2.0 / 2f64.powi(n as i32));
            assert!(comm.sub(&sum.scale(scale)).frobenius_norm() < 1e-10, "N={n}");
            // the metric norm equals the commutator norm
            let via_metric = prob.constraint_residual(&v);
            let direct = comm.frobenius_norm() / (2.0 * rho.frobenius_norm());
            assert!((via_metric - direct).abs() < 1e-10 * direct.max(1.0), "N={n}");
        }
    }

    #[test]
    fn factored_norms_match_quadratic_forms() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        for n in 3..=6 {
            let prob = build_reduced_matrix(&random_system(n, &mut rng)).unwrap();
            let v = DVector::from_fn(prob.catalog().len(), |_, _| rng.random_range(-1.0..1.0));
            let gram = prob.catalog().gram();
            assert!((gram.norm(&v).powi(2) - gram.inner(&v, &v)).abs() < 1e-10 * gram.inner(&v, &v));
            let c = prob.apply_constraints(&v);
            let q = prob.constraint_metric().quadratic_form(&c);
            assert!((prob.constraint_metric().norm(&c).powi(2) - q).abs() < 1e-10 * q.max(1.0), "N={n}");
        }
    }

    #[test]
    fn symmetrization_is_exact() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for n in 2..=6 {
            let prob = build_reduced_matrix(&random_system(n, &mut rng)).unwrap();
            let s = prob.symmetrized_matrix();
            assert!((&s - s.transpose()).amax() < 1e-10, "N={n}");
        }
    }

    #[test]
    fn diagonal_similarity_symmetrizes_only_small_clusters() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for n in 2..=5 {
            let prob = build_reduced_matrix(&random_system(n, &mut rng)).unwrap();
            let d: Vec<f64> = prob.catalog().entries().iter().map(|m| 3f64.powf(m.len() as f64 / 2.0)).collect();
            let m = prob.matrix();
            let s = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| d[r] * m[(r, c)] / d[c]);
            let asym = (&s - s.transpose()).amax();
            if n <= 3 {
                assert!(asym < 1e-12);
            } else {
                assert!(asym > 1e-3, "N={n}: {asym}");
            }
        }
    }

    #[test]
    fn uniform_three_spin_solutions() {
        let prob = build_reduced_matrix(&SpinSystem::uniform(3, 1.0).unwrap()).unwrap();
        let out = solve(&prob, SolveTolerances::default()).unwrap();
        assert_eq!(out.levels.len(), 2);
        assert!(out.rejected.is_empty());
        let low = &out.levels[0];
        let high = &out.levels[1];
        assert!((low.energy + 3.0).abs() < 1e-12 && (high.energy - 3.0).abs() < 1e-12);

        assert_eq!(high.family_dimension, 1);
        let a = high.g_invariant().unwrap().coeffs();
        for (k, want) in [1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0].iter().enumerate() {
            assert!((a[k] - want).abs() < 1e-12);
        }

        assert_eq!(low.family_dimension, 3);
        let g = low.g_invariant().unwrap().coeffs();
        for (k, want) in [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0].iter().enumerate() {
            assert!((g[k] - want).abs() < 1e-12);
        }
        // the family is {a_0 = 1, a12 + a13 + a23 = -1}: the traceless
        // directions have zero coefficient sum
        for s in low.solutions.iter().filter(|s| s.traceless) {
            let c = s.coeffs();
            assert!(c[0].abs() < 1e-14);
            assert!((c[1] + c[2] + c[3]).abs() < 1e-12);
        }
        assert!((low.dense_dimension().unwrap() - 4.0).abs() < 1e-9);
        assert!((high.dense_dimension().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn two_spin_levels() {
        let prob = build_reduced_matrix(&SpinSystem::uniform(2, 1.0).unwrap()).unwrap();
        let out = solve(&prob, SolveTolerances::default()).unwrap();
        let g: Vec<(f64, Vec<f64>)> = out
            .levels
            .iter()
            .map(|l| (l.energy, l.g_invariant().unwrap().coeffs().iter().copied().collect()))
            .collect();
        assert!((g[0].0 + 3.0).abs() < 1e-12 && (g[0].1[1] + 1.0).abs() < 1e-12);
        assert!((g[1].0 - 1.0).abs() < 1e-12 && (g[1].1[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn generic_three_spin_has_one_spurious_value() {
        let sys = three_spin(0.9, -0.35, 0.2);
        let out = solve(&build_reduced_matrix(&sys).unwrap(), SolveTolerances::default()).unwrap();
        assert_eq!(out.levels.len(), 3);
        assert_eq!(out.rejected.len(), 1);
        let h = build_hamiltonian(&sys, DenseLimit::default()).unwrap();
        let dense = eigenprojectors(&h, 1e-8).distinct_energies();
        for (a, b) in out.energies().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
        // the spurious value is the mean of the two doublet energies
        let spurious = out.rejected[0].energy;
        let doublets: Vec<f64> = out.levels.iter().map(|l| l.energy).filter(|e| (e - (0.9 - 0.35 + 0.2)).abs() > 1e-9).collect();
        assert!((spurious - 0.5 * (doublets[0] + doublets[1])).abs() < 1e-10);
    }

    #[test]
    fn g_invariant_from_family_matches_solver() {
        let prob = build_reduced_matrix(&SpinSystem::uniform(3, 1.0).unwrap()).unwrap();
        let out = solve(&prob, SolveTolerances::default()).unwrap();
        let low = &out.levels[0];
        // any spanning set of the family gives the same representative
        let mixed: Vec<SseSolution> = low
            .solutions
            .iter()
            .rev()
            .map(|s| {
                let mut t = s.clone();
                t.operator = InvariantOperator::new(prob.catalog().clone(), s.coeffs() * 2.5 + low.solutions[0].coeffs()).unwrap();
                t
            })
            .collect();
        let g = g_invariant_solution(&prob, &mixed).unwrap();
        assert!((g.coeffs() - low.g_invariant().unwrap().coeffs()).amax() < 1e-12);
    }

    #[test]
    fn nondegenerate_level_is_pure_projector() {
        let sys = three_spin(0.9, -0.35, 0.2);
        let prob = build_reduced_matrix(&sys).unwrap();
        let out = solve(&prob, SolveTolerances::default()).unwrap();
        let h = build_hamiltonian(&sys, DenseLimit::default()).unwrap();
        let spec = eigenprojectors(&h, 1e-8);
        for (level, dense) in out.levels.iter().zip(&spec.levels) {
            let d = dense.multiplicity as f64;
            let target = DenseOperator::new(3, dense.projector.clone()).unwrap().scale(Complex64::new(1.0 / d, 0.0));
            let p = project_dense(&target, prob.catalog()).unwrap();
            assert!((p.operator.coeffs() - level.g_invariant().unwrap().coeffs()).amax() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_tolerances() {
        let prob = build_reduced_matrix(&SpinSystem::uniform(2, 1.0).unwrap()).unwrap();
        assert!(solve(&prob, SolveTolerances { cluster: 0.0, constraint: 1e-8 }).is_err());
    }
}

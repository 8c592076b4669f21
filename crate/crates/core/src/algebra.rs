//! SU(2)- and T-invariant operators as coefficient vectors over the `A_A`
//! basis.
//!
//! An [`InvariantOperator`] with coefficients `a` stands for
//! `2^{-N} Σ_A a_A A_A`, the normalization used for density-matrix
//! candidates, so its trace is `a_0`.
//!
//! The basis is not trace-orthogonal once `N ≥ 4`: `tr(A_A A_B) / 2^N` equals
//! `3^c` when `A` and `B` cover the same sites and their union splits into
//! `c` alternating cycles, and zero otherwise. [`Gram`] stores this matrix in
//! blocks of equal support, and projections go through it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dense::{swap_sites, DenseLimit, DenseOperator};
use crate::error::{Error, Result};
use crate::multiindex::{BasisCatalog, MultiIndex};
use crate::permutation::swap_expansion;

/// Real coefficient vector over a [`BasisCatalog`].
#[derive(Debug, Clone)]
pub struct InvariantOperator {
    catalog: Arc<BasisCatalog>,
    coeffs: DVector<f64>,
}

impl InvariantOperator {
    pub fn new(catalog: Arc<BasisCatalog>, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != catalog.len() {
            return Err(Error::DimensionMismatch { expected: catalog.len(), actual: coeffs.len() });
        }
        Ok(InvariantOperator { catalog, coeffs })
    }

    pub fn zeros(catalog: Arc<BasisCatalog>) -> Self {
        let coeffs = DVector::zeros(catalog.len());
        InvariantOperator { catalog, coeffs }
    }

    /// The maximally mixed state `1 / 2^N`.
    pub fn maximally_mixed(catalog: Arc<BasisCatalog>) -> Self {
        let mut op = InvariantOperator::zeros(catalog);
        op.coeffs[0] = 1.0;
        op
    }

    pub fn catalog(&self) -> &Arc<BasisCatalog> {
        &self.catalog
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn n_spins(&self) -> usize {
        self.catalog.n_spins()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> Option<f64> {
        self.catalog.lookup(index).map(|k| self.coeffs[k])
    }

    /// Trace of the represented operator, equal to `a_0`.
    pub fn trace(&self) -> f64 {
        self.coeffs[0]
    }

    /// Hilbert-Schmidt inner product `tr(self · other)`.
    pub fn hs_inner(&self, other: &InvariantOperator) -> f64 {
        let scale = 2f64.powi(-(self.n_spins() as i32));
        scale * self.catalog.gram().inner(&self.coeffs, &other.coeffs)
    }

    /// Rescales so that `a_0 = 1`. Returns `None` for traceless operators.
    pub fn normalized(&self, tol: f64) -> Option<InvariantOperator> {
        let a0 = self.coeffs[0];
        if a0.abs() <= tol * self.coeffs.amax().max(f64::MIN_POSITIVE) {
            return None;
        }
        Some(InvariantOperator { catalog: self.catalog.clone(), coeffs: &self.coeffs / a0 })
    }
}

/// Gram matrix `G_AB = tr(A_A A_B) / 2^N`, block diagonal by support.
///
/// From `N = 8` on the `A_A` are linearly dependent (105 perfect matchings of
/// eight sites span only 91 dimensions), so `G` is singular there. Each block
/// keeps its eigendecomposition; eigenvalues below `RANK_TOL` times the
/// block maximum count as kernel.
#[derive(Debug, Clone)]
pub struct Gram {
    dim: usize,
    rank: usize,
    blocks: Vec<GramBlock>,
}

#[derive(Debug, Clone)]
struct GramBlock {
    indices: Vec<usize>,
    matrix: DMatrix<f64>,
    // columns span the range of the block
    range: DMatrix<f64>,
    values: DVector<f64>,
}

const RANK_TOL: f64 = 1e-10;

impl Gram {
    fn build(catalog: &BasisCatalog) -> Self {
        let mut groups: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
        for (k, m) in catalog.entries().iter().enumerate() {
            groups.entry(m.support()).or_default().push(k);
        }
        let entries = catalog.entries();
        let blocks: Vec<GramBlock> = groups
            .into_values()
            .map(|indices| {
                let n = indices.len();
                let matrix = DMatrix::from_fn(n, n, |r, c| {
                    matching_overlap(&entries[indices[r]], &entries[indices[c]])
                });
                let eig = matrix.clone().symmetric_eigen();
                let top = eig.eigenvalues.amax();
                let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > RANK_TOL * top).collect();
                let range = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
                let values = DVector::from_iterator(keep.len(), keep.iter().map(|&k| eig.eigenvalues[k]));
                GramBlock { indices, matrix, range, values }
            })
            .collect();
        let rank = blocks.iter().map(|b| b.values.len()).sum();
        Gram { dim: catalog.len(), rank, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the operator span; equals `dim` for `N < 8`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim
    }

    /// `G v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&k| v[k]));
            let prod = &b.matrix * local;
            for (r, &k) in b.indices.iter().enumerate() {
                out[k] = prod[r];
            }
        }
        out
    }

    /// Minimum-norm solution of `G x = t` (the pseudo-inverse when `G` is
    /// singular).
    pub fn solve(&self, t: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&k| t[k]));
            let mut y = b.range.transpose() * local;
            y.component_div_assign(&b.values);
            let x = &b.range * y;
            for (r, &k) in b.indices.iter().enumerate() {
                out[k] = x[r];
            }
        }
        out
    }

    /// Orthogonal projector onto the range of `G` applied to `v`: the
    /// canonical representative of the operator `v` realizes.
    pub fn canonical(&self, v: &DVector<f64>) -> DVector<f64> {
        self.solve(&self.apply(v))
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.apply(v))
    }

    /// `‖Lᵀ v‖`, which equals `sqrt(vᵀ G v)` but keeps full relative
    /// accuracy for small residual vectors.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        let mut sq = 0.0;
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&k| v[k]));
            let y = b.range.transpose() * local;
            sq += y.iter().zip(b.values.iter()).map(|(y, l)| y * y * l).sum::<f64>();
        }
        sq.sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (r, &kr) in b.indices.iter().enumerate() {
                for (c, &kc) in b.indices.iter().enumerate() {
                    g[(kr, kc)] = b.matrix[(r, c)];
                }
            }
        }
        g
    }

    /// `(L, P)` with `G = L Lᵀ`, `Lᵀ P = 1`, both `dim × rank`; `P` maps
    /// orthonormal coordinates of the span back to minimum-norm coefficients.
    pub fn factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut l = DMatrix::zeros(self.dim, self.rank);
        let mut p = DMatrix::zeros(self.dim, self.rank);
        let mut col = 0;
        for b in &self.blocks {
            for c in 0..b.values.len() {
                let s = b.values[c].sqrt();
                for (r, &k) in b.indices.iter().enumerate() {
                    l[(k, col)] = b.range[(r, c)] * s;
                    p[(k, col)] = b.range[(r, c)] / s;
                }
                col += 1;
            }
        }
        (l, p)
    }
}

impl BasisCatalog {
    /// Gram matrix of the basis, built on first use.
    pub fn gram(&self) -> &Gram {
        self.gram.get_or_init(|| Gram::build(self))
    }
}

/// `tr(A_A A_B) / 2^N` from the alternating-cycle structure of the two
/// matchings.
pub fn matching_overlap(a: &MultiIndex, b: &MultiIndex) -> f64 {
    if a.support() != b.support() {
        return 0.0;
    }
    let sites: Vec<usize> = a.pairs().iter().flat_map(|&(i, j)| [i, j]).collect();
    let mut visited = vec![false; sites.iter().max().map_or(0, |m| m + 1)];
    let mut cycles = 0;
    for &start in &sites {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        loop {
            visited[x] = true;
            let (_, y) = a.partner(x).expect("site in support");
            visited[y] = true;
            let (_, z) = b.partner(y).expect("site in support");
            if z == start {
                break;
            }
            x = z;
        }
    }
    3f64.powi(cycles)
}

/// Weights of every involution (catalog entry) in the permutation expansion
/// of `Σ_A a_A A_A`.
fn involution_weights(catalog: &BasisCatalog, coeffs: &DVector<f64>) -> Vec<f64> {
    let mut weights = vec![0.0; catalog.len()];
    for (k, m) in catalog.entries().iter().enumerate() {
        let a = coeffs[k];
        if a == 0.0 {
            continue;
        }
        for (subset, w) in swap_expansion(m) {
            let pos = catalog.lookup(&subset).expect("subsets of catalog entries are catalog entries");
            weights[pos] += a * w;
        }
    }
    weights
}

fn apply_involution(state: usize, index: &MultiIndex, n_spins: usize) -> usize {
    index.pairs().iter().fold(state, |s, &(i, j)| swap_sites(s, i, j, n_spins))
}

/// Builds the dense `2^N × 2^N` matrix of `2^{-N} Σ_A a_A A_A`.
pub fn realize_dense(op: &InvariantOperator, limit: DenseLimit) -> Result<DenseOperator> {
    let catalog = op.catalog();
    let n = catalog.n_spins();
    limit.check(n)?;
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let weights = involution_weights(catalog, op.coeffs());
    let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, m) in catalog.entries().iter().enumerate() {
        let w = weights[k];
        if w == 0.0 {
            continue;
        }
        for s in 0..dim {
            let t = apply_involution(s, m, n);
            matrix[(t, s)] += Complex64::new(w * scale, 0.0);
        }
    }
    DenseOperator::new(n, matrix)
}

/// Result of [`project_dense`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub operator: InvariantOperator,
    /// Frobenius norm of the part of the input outside the invariant span.
    pub residual_norm: f64,
}

/// `tr(A_B X)` for every catalog entry `B` (real parts).
pub fn basis_traces(dense: &DenseOperator, catalog: &BasisCatalog) -> Result<DVector<f64>> {
    let n = catalog.n_spins();
    if dense.n_spins() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: dense.n_spins() });
    }
    let dim = dense.dim();
    let x = dense.matrix();
    // tr(P_π X) for each involution π
    let perm_traces: Vec<f64> = catalog
        .entries()
        .iter()
        .map(|m| (0..dim).map(|s| x[(apply_involution(s, m, n), s)].re).sum())
        .collect();
    let traces = catalog
        .entries()
        .iter()
        .map(|m| {
            swap_expansion(m)
                .into_iter()
                .map(|(subset, w)| w * perm_traces[catalog.lookup(&subset).expect("catalog subset")])
                .sum()
        })
        .collect::<Vec<f64>>();
    Ok(DVector::from_vec(traces))
}

/// Projects a dense operator onto the invariant span in the Hilbert-Schmidt
/// metric and reports the norm of what is left over.
pub fn project_dense(dense: &DenseOperator, catalog: &Arc<BasisCatalog>) -> Result<Projection> {
    let traces = basis_traces(dense, catalog)?;
    let coeffs = catalog.gram().solve(&traces);
    let operator = InvariantOperator::new(catalog.clone(), coeffs)?;
    let realized = realize_dense(&operator, DenseLimit(catalog.n_spins()))?;
    let residual_norm = dense.sub(&realized).frobenius_norm();
    Ok(Projection { operator, residual_norm })
}

/// T-odd term `i · coeff · (σ_a·(σ_b×σ_c)) · A_rest` with `a < b < c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedTerm {
    pub coeff: f64,
    pub triple: [usize; 3],
    pub rest: MultiIndex,
}

/// Expansion of a product `(σ_i·σ_j) A_B` in invariant basis terms plus
/// T-odd mixed-product terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expansion {
    pub even: Vec<(f64, MultiIndex)>,
    pub odd: Vec<MixedTerm>,
}

impl Expansion {
    pub fn has_t_odd(&self) -> bool {
        !self.odd.is_empty()
    }

    fn push_mixed(&mut self, coeff: f64, a: usize, b: usize, c: usize, rest: MultiIndex) {
        let (triple, sign) = sort_triple([a, b, c]);
        self.odd.push(MixedTerm { coeff: coeff * sign, triple, rest });
    }
}

/// Sorts a triple of distinct sites, returning the permutation sign.
pub(crate) fn sort_triple(mut t: [usize; 3]) -> ([usize; 3], f64) {
    let mut sign = 1.0;
    for i in 0..3 {
        for j in 0..2 - i {
            if t[j] > t[j + 1] {
                t.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (t, sign)
}

/// Expands `(σ_i·σ_j) · A_right` using `(σ_a·σ_b)² = 3 - 2 σ_a·σ_b`,
/// `(σ_a·σ_b)(σ_b·σ_c) = σ_a·σ_c - i σ_a·(σ_b×σ_c)` and the corresponding
/// four-site identity.
pub fn apply_rewrite_rules(left: (usize, usize), right: &MultiIndex, n_spins: usize) -> Result<Expansion> {
    let (i, j) = left;
    for idx in [i, j] {
        if idx == 0 || idx > n_spins {
            return Err(Error::IndexOutOfRange { index: idx, n_spins });
        }
    }
    if i == j {
        return Err(Error::RepeatedIndex { index: i });
    }
    right.validate(n_spins)?;

    let without = |positions: &[usize]| -> Vec<(usize, usize)> {
        right
            .pairs()
            .iter()
            .enumerate()
            .filter(|(k, _)| !positions.contains(k))
            .map(|(_, &p)| p)
            .collect()
    };
    let build = |mut base: Vec<(usize, usize)>, add: &[(usize, usize)]| {
        base.extend_from_slice(add);
        MultiIndex::canonicalize_unchecked(base)
    };

    let mut out = Expansion::default();
    match (right.partner(i), right.partner(j)) {
        (None, None) => {
            out.even.push((1.0, build(without(&[]), &[(i, j)])));
        }
        (Some((k, u)), Some(_)) if u == j => {
            out.even.push((3.0, build(without(&[k]), &[])));
            out.even.push((-2.0, right.clone()));
        }
        (Some((k, u)), None) | (None, Some((k, u))) => {
            // (f p)(p u) with p paired to u and f free
            let (free, paired) = if right.contains(i) { (j, i) } else { (i, j) };
            let rest = without(&[k]);
            out.even.push((1.0, build(rest.clone(), &[(free, u)])));
            out.push_mixed(-1.0, free, paired, u, MultiIndex::canonicalize_unchecked(rest));
        }
        (Some((k, u)), Some((l, v))) => {
            let rest = without(&[k, l]);
            out.even.push((1.0, build(rest.clone(), &[(u, v)])));
            out.even.push((-1.0, build(rest.clone(), &[(i, j), (u, v)])));
            out.even.push((1.0, build(rest.clone(), &[(i, v), (u, j)])));
            let rest = MultiIndex::canonicalize_unchecked(rest);
            out.push_mixed(1.0, u, v, j, rest.clone());
            out.push_mixed(1.0, v, u, i, rest);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{mixed_product_dense, multi_index_dense};
    use proptest::prelude::*;

    fn cat(n: usize) -> Arc<BasisCatalog> {
        Arc::new(BasisCatalog::enumerate(n).unwrap())
    }

    fn mi(p: &[(usize, usize)], n: usize) -> MultiIndex {
        MultiIndex::canonicalize(p, n).unwrap()
    }

    fn eigenvalues(op: &DenseOperator) -> Vec<f64> {
        let mut ev: Vec<f64> = op.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn triplet_projector_realization() {
        let c = cat(2);
        let op = InvariantOperator::new(c, DVector::from_vec(vec![1.0, 1.0 / 3.0])).unwrap();
        let d = realize_dense(&op, DenseLimit::default()).unwrap();
        assert!((d.trace().re - 1.0).abs() < 1e-14);
        let ev = eigenvalues(&d);
        for (got, want) in ev.iter().zip([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn single_spin_identity() {
        let d = realize_dense(&InvariantOperator::maximally_mixed(cat(1)), DenseLimit::default()).unwrap();
        assert_eq!(d.matrix()[(0, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(d.matrix()[(1, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(d.matrix()[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn three_spin_quartet_state() {
        let op = InvariantOperator::new(cat(3), DVector::from_vec(vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])).unwrap();
        let ev = eigenvalues(&realize_dense(&op, DenseLimit::default()).unwrap());
        for (k, e) in ev.iter().enumerate() {
            let want = if k < 4 { 0.0 } else { 0.25 };
            assert!((e - want).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn dense_limit_is_enforced() {
        let op = InvariantOperator::maximally_mixed(cat(5));
        assert_eq!(
            realize_dense(&op, DenseLimit(4)).unwrap_err(),
            Error::DenseLimitExceeded { n_spins: 5, limit: 4 }
        );
    }

    #[test]
    fn realization_matches_kronecker_products() {
        for n in 1..=5 {
            let c = cat(n);
            for (k, m) in c.entries().iter().enumerate() {
                let mut coeffs = DVector::zeros(c.len());
                coeffs[k] = 2f64.powi(n as i32);
                let fast = realize_dense(&InvariantOperator::new(c.clone(), coeffs).unwrap(), DenseLimit::default()).unwrap();
                let slow = multi_index_dense(m, n);
                assert!(fast.sub(&slow).frobenius_norm() < 1e-10, "N={n} {m}");
            }
        }
    }

    #[test]
    fn gram_formula_matches_dense_traces() {
        for n in 1..=5 {
            let c = cat(n);
            let dense: Vec<DenseOperator> = c.entries().iter().map(|m| multi_index_dense(m, n)).collect();
            let g = c.gram().to_dense();
            for a in 0..c.len() {
                for b in 0..c.len() {
                    let t = dense[a].trace_product(&dense[b]).re / 2f64.powi(n as i32);
                    assert!((t - g[(a, b)]).abs() < 1e-10, "N={n} {} {}", c.entries()[a], c.entries()[b]);
                }
            }
        }
    }

    #[test]
    fn basis_becomes_dependent_at_eight_spins() {
        for n in 1..=7 {
            assert!(cat(n).gram().is_full_rank(), "N={n}");
        }
        let c = cat(8);
        let g = c.gram();
        assert_eq!(g.dim(), 764);
        let full = g.blocks.iter().find(|b| b.indices.len() == 105).unwrap();
        assert_eq!(full.range.ncols(), 91);
        // every kernel vector realizes the zero operator
        let dense = g.to_dense();
        let v = DVector::from_fn(c.len(), |i, _| ((i * 7919) % 13) as f64 - 6.0);
        let k = &v - g.canonical(&v);
        assert!(k.norm() > 1e-3);
        assert!((&dense * &k).amax() < 1e-9);
    }

    #[test]
    fn four_spin_overlap_is_not_orthogonal() {
        let a = mi(&[(1, 2), (3, 4)], 4);
        let b = mi(&[(1, 3), (2, 4)], 4);
        assert_eq!(matching_overlap(&a, &b), 3.0);
        assert_eq!(matching_overlap(&a, &a), 9.0);
        assert_eq!(matching_overlap(&a, &mi(&[(1, 2)], 4)), 0.0);
    }

    #[test]
    fn projection_of_simple_operators() {
        let c = cat(2);
        // σ1ᶻ: traceless and outside the span
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        for s in 0..4 {
            m[(s, s)] = Complex64::new(if s < 2 { 1.0 } else { -1.0 }, 0.0);
        }
        let p = project_dense(&DenseOperator::new(2, m).unwrap(), &c).unwrap();
        assert!(p.operator.coeffs().amax() < 1e-14);
        assert!((p.residual_norm - 2.0).abs() < 1e-12);

        let c4 = cat(4);
        let mixed = DenseOperator::identity(4).scale(Complex64::new(1.0 / 16.0, 0.0));
        let p = project_dense(&mixed, &c4).unwrap();
        assert!((p.operator.coeffs()[0] - 1.0).abs() < 1e-14);
        assert!(p.operator.coeffs().rows(1, c4.len() - 1).amax() < 1e-14);
        assert!(p.residual_norm < 1e-14);
    }

    #[test]
    fn mixed_products_are_outside_the_span() {
        let c = cat(4);
        let t = mixed_product_dense([1, 2, 3], 4);
        let p = project_dense(&t, &c).unwrap();
        assert!(p.operator.coeffs().amax() < 1e-12);
        assert!((p.residual_norm - t.frobenius_norm()).abs() < 1e-10);
    }

    #[test]
    fn rewrite_rules_examples() {
        let sq = apply_rewrite_rules((1, 2), &mi(&[(1, 2)], 3), 3).unwrap();
        assert_eq!(sq.even, vec![(3.0, MultiIndex::identity()), (-2.0, mi(&[(1, 2)], 3))]);
        assert!(!sq.has_t_odd());

        let chain = apply_rewrite_rules((1, 2), &mi(&[(2, 3)], 3), 3).unwrap();
        assert_eq!(chain.even, vec![(1.0, mi(&[(1, 3)], 3))]);
        assert_eq!(chain.odd, vec![MixedTerm { coeff: -1.0, triple: [1, 2, 3], rest: MultiIndex::identity() }]);

        let disjoint = apply_rewrite_rules((1, 2), &mi(&[(3, 4)], 4), 4).unwrap();
        assert_eq!(disjoint.even, vec![(1.0, mi(&[(1, 2), (3, 4)], 4))]);
        assert!(!disjoint.has_t_odd());
    }

    fn expansion_dense(e: &Expansion, n: usize) -> DenseOperator {
        let mut acc = DenseOperator::zeros(n);
        for (c, m) in &e.even {
            acc = acc.add(&multi_index_dense(m, n).scale(Complex64::new(*c, 0.0)));
        }
        for t in &e.odd {
            let term = mixed_product_dense(t.triple, n).mul(&multi_index_dense(&t.rest, n));
            acc = acc.add(&term.scale(Complex64::new(0.0, t.coeff)));
        }
        acc
    }

    #[test]
    fn rewrite_rules_match_dense_products_exhaustively() {
        for n in 2..=5 {
            let c = cat(n);
            for right in c.entries() {
                let rd = multi_index_dense(right, n);
                for i in 1..=n {
                    for j in i + 1..=n {
                        let e = apply_rewrite_rules((i, j), right, n).unwrap();
                        let want = multi_index_dense(&mi(&[(i, j)], n), n).mul(&rd);
                        let got = expansion_dense(&e, n);
                        assert!(want.sub(&got).frobenius_norm() < 1e-10, "({i},{j})·{right}");
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn realize_then_project_is_identity(n in 1usize..=6, seed in proptest::collection::vec(-1.0f64..1.0, 76)) {
            let c = cat(n);
            let coeffs = DVector::from_iterator(c.len(), seed.iter().copied().take(c.len()));
            let op = InvariantOperator::new(c.clone(), coeffs.clone()).unwrap();
            let d = realize_dense(&op, DenseLimit::default()).unwrap();
            let p = project_dense(&d, &c).unwrap();
            prop_assert!((p.operator.coeffs() - &coeffs).amax() < 1e-12);
            prop_assert!(p.residual_norm < 1e-12);
            prop_assert!(d.hermiticity_error() < 1e-14);
            prop_assert!((d.trace().re - coeffs[0]).abs() < 1e-12);
        }

        #[test]
        fn realization_is_linear(n in 2usize..=5, x in proptest::collection::vec(-1.0f64..1.0, 26),
                                 y in proptest::collection::vec(-1.0f64..1.0, 26), s in -2.0f64..2.0) {
            let c = cat(n);
            let vx = DVector::from_iterator(c.len(), x.iter().copied().take(c.len()));
            let vy = DVector::from_iterator(c.len(), y.iter().copied().take(c.len()));
            let lim = DenseLimit::default();
            let dx = realize_dense(&InvariantOperator::new(c.clone(), vx.clone()).unwrap(), lim).unwrap();
            let dy = realize_dense(&InvariantOperator::new(c.clone(), vy.clone()).unwrap(), lim).unwrap();
            let dxy = realize_dense(&InvariantOperator::new(c.clone(), vx * s + vy).unwrap(), lim).unwrap();
            let comb = dx.scale(Complex64::new(s, 0.0)).add(&dy);
            prop_assert!(dxy.sub(&comb).frobenius_norm() < 1e-12);
        }

        #[test]
        fn realizations_commute_with_global_rotations(n in 2usize..=6, seed in proptest::collection::vec(-1.0f64..1.0, 76)) {
            let c = cat(n);
            let coeffs = DVector::from_iterator(c.len(), seed.iter().copied().take(c.len()));
            let d = realize_dense(&InvariantOperator::new(c, coeffs).unwrap(), DenseLimit::default()).unwrap();
            for axis in crate::oracle::Pauli::ALL {
                let total = crate::oracle::total_spin_component(axis, n);
                prop_assert!(d.commutator(&total).frobenius_norm() < 1e-10);
            }
        }
    }
}

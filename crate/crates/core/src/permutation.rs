//! Site permutations and the permutation form of invariant operators.
//!
//! Every SU(2)-invariant operator on spins 1/2 is a combination of site
//! permutation operators, with `σ_i·σ_j = 2 P_ij - 1`. Traces follow from
//! cycle counts: `tr P_π = 2^{cycles(π)}`.

use crate::multiindex::MultiIndex;

/// A permutation of `0..len`, stored as images.
pub(crate) type Perm = Vec<u8>;

pub(crate) fn identity(len: usize) -> Perm {
    (0..len as u8).collect()
}

/// `(a ∘ b)(x) = a[b[x]]`.
pub(crate) fn compose(a: &[u8], b: &[u8]) -> Perm {
    b.iter().map(|&x| a[x as usize]).collect()
}

pub(crate) fn transposition(len: usize, i: usize, j: usize) -> Perm {
    let mut p = identity(len);
    p.swap(i, j);
    p
}

pub(crate) fn cycle_count(p: &[u8]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x] as usize;
        }
    }
    cycles
}

/// Subsets of the pairs of `index` with their weights in
/// `A = Π_p (2 P_p - 1) = Σ_S 2^{|S|} (-1)^{|A|-|S|} P_S`.
///
/// Each subset is returned as the multi-index of the chosen pairs.
pub(crate) fn swap_expansion(index: &MultiIndex) -> Vec<(MultiIndex, f64)> {
    let pairs = index.pairs();
    let m = pairs.len();
    (0..1u32 << m)
        .map(|mask| {
            let chosen: Vec<(usize, usize)> =
                (0..m).filter(|k| mask & (1 << k) != 0).map(|k| pairs[k]).collect();
            let size = chosen.len();
            let weight = (1u64 << size) as f64 * if (m - size) % 2 == 0 { 1.0 } else { -1.0 };
            (MultiIndex::canonicalize_unchecked(chosen), weight)
        })
        .collect()
}

/// A real combination of permutations on a local set of sites.
#[derive(Debug, Clone, Default)]
pub(crate) struct PermSum {
    pub terms: Vec<(Perm, f64)>,
}

impl PermSum {
    #[cfg(test)]
    pub fn unit(len: usize) -> Self {
        PermSum { terms: vec![(identity(len), 1.0)] }
    }

    pub fn mul(&self, other: &PermSum) -> PermSum {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                terms.push((compose(a, b), x * y));
            }
        }
        PermSum { terms }
    }

    /// `2 P_ij - 1` on local sites `i`, `j`.
    pub fn scalar_product(len: usize, i: usize, j: usize) -> Self {
        PermSum { terms: vec![(transposition(len, i, j), 2.0), (identity(len), -1.0)] }
    }

    /// `P_ij P_jk - P_jk P_ij`; the mixed product `σ_i·(σ_j×σ_k)` equals
    /// `2i` times this.
    pub fn cyclic_difference(len: usize, i: usize, j: usize, k: usize) -> Self {
        let pij = transposition(len, i, j);
        let pjk = transposition(len, j, k);
        PermSum { terms: vec![(compose(&pij, &pjk), 1.0), (compose(&pjk, &pij), -1.0)] }
    }

    /// `tr(self · other) / 2^len`.
    pub fn normalized_trace_product(&self, other: &PermSum) -> f64 {
        let len = self.terms.first().map_or(0, |(p, _)| p.len()) as i32;
        let mut acc = 0.0;
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let c = cycle_count(&compose(a, b)) as i32;
                acc += x * y * 2f64.powi(c - len);
            }
        }
        acc
    }
}

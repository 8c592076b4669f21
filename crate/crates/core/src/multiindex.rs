//! Multi-index labels for the SU(2)- and T-invariant operator basis.
//!
//! A [`MultiIndex`] is a set of disjoint spin pairs `(i, j)` with `i < j`,
//! stored with pairs sorted by their first element. It labels the operator
//! `A = (σ_{i1}·σ_{j1}) (σ_{i2}·σ_{j2}) ...`; the empty multi-index labels the
//! identity. All spin indices are 1-based.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical set of disjoint spin pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    pairs: Vec<(usize, usize)>,
}

impl MultiIndex {
    /// The empty multi-index, labelling `A_0 = 1`.
    pub fn identity() -> Self {
        MultiIndex { pairs: Vec::new() }
    }

    /// Builds the canonical multi-index from unordered pairs.
    ///
    /// Each pair is sorted internally and the pairs are sorted by their first
    /// element. Fails if any index repeats or falls outside `1..=n_spins`.
    pub fn canonicalize(pairs: &[(usize, usize)], n_spins: usize) -> Result<Self> {
        let mut seen = vec![false; n_spins + 1];
        let mut out = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            for idx in [a, b] {
                if idx == 0 || idx > n_spins {
                    return Err(Error::IndexOutOfRange { index: idx, n_spins });
                }
                if seen[idx] {
                    return Err(Error::RepeatedIndex { index: idx });
                }
                seen[idx] = true;
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        Ok(MultiIndex { pairs: out })
    }

    /// Sorts already-valid pairs without checking disjointness.
    pub(crate) fn canonicalize_unchecked(mut pairs: Vec<(usize, usize)>) -> Self {
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        MultiIndex { pairs }
    }

    /// Drops the pairs at the given 1-based positions and adds new pairs.
    ///
    /// This is the `(i_l, j_m)(j_l, i_m) A^{l̄,m̄}` style of relabelling used
    /// throughout the coefficient equations.
    pub fn derive(&self, drop: &[usize], add: &[(usize, usize)], n_spins: usize) -> Result<Self> {
        for &pos in drop {
            if pos == 0 || pos > self.pairs.len() {
                return Err(Error::InvalidPosition { position: pos, len: self.pairs.len() });
            }
        }
        let mut pairs: Vec<(usize, usize)> = self
            .pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(&(k + 1)))
            .map(|(_, &p)| p)
            .collect();
        pairs.extend_from_slice(add);
        MultiIndex::canonicalize(&pairs, n_spins)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of pairs, `|A|`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.pairs.iter().any(|&(i, j)| i == site || j == site)
    }

    /// Partner of `site` if it is paired, along with the pair position (0-based).
    pub fn partner(&self, site: usize) -> Option<(usize, usize)> {
        self.pairs.iter().enumerate().find_map(|(k, &(i, j))| {
            if i == site {
                Some((k, j))
            } else if j == site {
                Some((k, i))
            } else {
                None
            }
        })
    }

    /// Bit mask of covered sites; bit `k - 1` stands for spin `k`.
    pub fn support(&self) -> u64 {
        self.pairs
            .iter()
            .fold(0u64, |m, &(i, j)| m | (1 << (i - 1)) | (1 << (j - 1)))
    }

    /// Sites not covered by any pair, ascending.
    pub fn free_sites(&self, n_spins: usize) -> Vec<usize> {
        let mask = self.support();
        (1..=n_spins).filter(|&k| mask & (1 << (k - 1)) == 0).collect()
    }

    /// Checks the ordering and disjointness invariants against `n_spins`.
    pub fn validate(&self, n_spins: usize) -> Result<()> {
        let canonical = MultiIndex::canonicalize(&self.pairs, n_spins)?;
        if canonical != *self {
            return Err(Error::InvalidArgument(format!("{self} is not in canonical order")));
        }
        Ok(())
    }

    fn flattened(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().flat_map(|&(i, j)| [i, j])
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return write!(f, "0");
        }
        for &(i, j) in &self.pairs {
            write!(f, "({i},{j})")?;
        }
        Ok(())
    }
}

/// All multi-indices for `n_spins` spins in a fixed order: ascending `|A|`,
/// then lexicographic on the flattened pair list. `A_0` comes first.
#[derive(Debug, Clone)]
pub struct BasisCatalog {
    n_spins: usize,
    entries: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
    pub(crate) gram: OnceLock<crate::algebra::Gram>,
}

impl BasisCatalog {
    pub fn enumerate(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidArgument("at least one spin is required".into()));
        }
        if n_spins > 64 {
            return Err(Error::InvalidArgument("at most 64 spins are supported".into()));
        }
        let mut entries = Vec::new();
        let mut current = Vec::new();
        collect_matchings(1, n_spins, 0, &mut current, &mut entries);
        entries.sort_by(|a: &MultiIndex, b: &MultiIndex| {
            a.len().cmp(&b.len()).then_with(|| a.flattened().cmp(b.flattened()))
        });
        let positions = entries.iter().enumerate().map(|(k, m)| (m.clone(), k)).collect();
        Ok(BasisCatalog { n_spins, entries, positions, gram: OnceLock::new() })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn get(&self, position: usize) -> Option<&MultiIndex> {
        self.entries.get(position)
    }

    pub fn lookup(&self, index: &MultiIndex) -> Option<usize> {
        self.positions.get(index).copied()
    }

    /// Canonicalizes `pairs` and returns the catalog position.
    pub fn position_of(&self, pairs: &[(usize, usize)]) -> Result<usize> {
        let m = MultiIndex::canonicalize(pairs, self.n_spins)?;
        Ok(self.positions[&m])
    }
}

fn collect_matchings(
    start: usize,
    n: usize,
    used: u64,
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<MultiIndex>,
) {
    out.push(MultiIndex { pairs: current.clone() });
    for i in start..=n {
        if used & (1 << (i - 1)) != 0 {
            continue;
        }
        for j in i + 1..=n {
            if used & (1 << (j - 1)) != 0 {
                continue;
            }
            current.push((i, j));
            collect_matchings(i + 1, n, used | (1 << (i - 1)) | (1 << (j - 1)), current, out);
            current.pop();
        }
    }
}

//! System files (TOML) and spectrum reports (JSON).
//!
//! A system file:
//!
//! ```toml
//! n = 3
//! couplings = [
//!     { i = 1, j = 2, J = 1.0 },
//!     { i = 2, j = 3, J = 1.0 },
//! ]
//! # optional, one 3-vector per spin
//! fields = [[0.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
//! ```

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::realize_dense;
use crate::dense::DenseLimit;
use crate::error::{Error, Result};
use crate::oracle::{build_hamiltonian, eigenprojectors};
use crate::sse::{build_reduced_matrix, solve, SolveOutcome, SolveTolerances};
use crate::system::SpinSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<[f64; 3]>>,
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSystem(e.to_string().trim_end().to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        SystemFile::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("system files always serialize")
    }

    pub fn from_system(sys: &SpinSystem) -> Self {
        SystemFile {
            n: sys.n_spins(),
            couplings: sys.bonds().map(|(i, j, value)| CouplingEntry { i, j, value }).collect(),
            fields: sys.fields().map(|f| f.to_vec()),
        }
    }

    /// Validates and builds the system; diagnostics name the offending entry.
    pub fn to_system(&self) -> Result<SpinSystem> {
        let mut sys = SpinSystem::new(self.n)?;
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, c) in self.couplings.iter().enumerate() {
            if !(1 <= c.i && c.i < c.j && c.j <= self.n) {
                return Err(Error::InvalidSystem(format!(
                    "couplings[{k}]: need 1 <= i < j <= {}, got i = {}, j = {}",
                    self.n, c.i, c.j
                )));
            }
            if let Some(first) = seen.insert((c.i, c.j), k) {
                return Err(Error::InvalidSystem(format!(
                    "couplings[{k}]: duplicate pair ({}, {}) already given in couplings[{first}]",
                    c.i, c.j
                )));
            }
            sys.set_coupling(c.i, c.j, c.value)
                .map_err(|e| Error::InvalidSystem(format!("couplings[{k}]: {e}")))?;
        }
        if let Some(fields) = &self.fields {
            if fields.len() != self.n {
                return Err(Error::InvalidSystem(format!(
                    "fields: expected {} vectors, got {}",
                    self.n,
                    fields.len()
                )));
            }
            for (k, h) in fields.iter().enumerate() {
                sys.set_field(k + 1, *h).map_err(|e| Error::InvalidSystem(format!("fields[{k}]: {e}")))?;
            }
        }
        Ok(sys)
    }
}

pub fn read_system(path: &Path) -> Result<SpinSystem> {
    SystemFile::read(path)?.to_system()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    /// Basis label as a list of pairs; empty for the identity.
    pub label: Vec<[usize; 2]>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub g_invariant: bool,
    pub traceless: bool,
    pub constraint_residual: f64,
    /// `a_0` first, in basis-catalog order.
    pub coeffs: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub dense_energy: f64,
    pub dense_multiplicity: usize,
    pub spectrum_match_error: f64,
    /// Smallest eigenvalue of the dense realization of the G-invariant member.
    pub positivity_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub energy: f64,
    pub multiplicity_in_reduced_space: usize,
    pub family_dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_dimension_estimate: Option<f64>,
    pub solutions: Vec<SolutionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub energy: f64,
    pub multiplicity_in_reduced_space: usize,
    pub min_constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n_spins: usize,
    pub basis_size: usize,
    pub tolerance: f64,
    pub levels: Vec<LevelRecord>,
    pub rejected: Vec<RejectedRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracle_messages: Vec<String>,
}

impl SpectrumReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad report: {e}")))
    }
}

fn solution_record(s: &crate::sse::SseSolution) -> SolutionRecord {
    let catalog = s.operator.catalog();
    SolutionRecord {
        g_invariant: s.g_invariant,
        traceless: s.traceless,
        constraint_residual: s.constraint_residual,
        coeffs: catalog
            .entries()
            .iter()
            .zip(s.coeffs().iter())
            .map(|(m, &value)| Coefficient {
                label: m.pairs().iter().map(|&(i, j)| [i, j]).collect(),
                value: if value == 0.0 { 0.0 } else { value },
            })
            .collect(),
    }
}

fn base_report(outcome: &SolveOutcome, n_spins: usize, basis_size: usize, tol: f64) -> SpectrumReport {
    SpectrumReport {
        n_spins,
        basis_size,
        tolerance: tol,
        levels: outcome
            .levels
            .iter()
            .map(|l| LevelRecord {
                energy: l.energy,
                multiplicity_in_reduced_space: l.cluster_size,
                family_dimension: l.family_dimension,
                dense_dimension_estimate: l.dense_dimension(),
                solutions: l.solutions.iter().map(solution_record).collect(),
                oracle: None,
            })
            .collect(),
        rejected: outcome
            .rejected
            .iter()
            .map(|r| RejectedRecord {
                energy: r.energy,
                multiplicity_in_reduced_space: r.cluster_size,
                min_constraint_residual: r.min_constraint_residual,
            })
            .collect(),
        oracle_ok: None,
        oracle_messages: Vec::new(),
    }
}

/// Solves the reduced problem and, with `oracle`, cross-checks every level
/// against dense diagonalization.
pub fn spectrum_report(sys: &SpinSystem, tol: f64, oracle: Option<DenseLimit>) -> Result<SpectrumReport> {
    if let Some(limit) = oracle {
        limit.check(sys.n_spins())?;
    }
    let prob = build_reduced_matrix(sys)?;
    let outcome = solve(&prob, SolveTolerances { cluster: tol, constraint: tol })?;
    let mut report = base_report(&outcome, sys.n_spins(), prob.catalog().len(), tol);
    let Some(limit) = oracle else {
        return Ok(report);
    };
    let h = build_hamiltonian(sys, limit)?;
    let scale = outcome.scale.max(1.0);
    let spec = eigenprojectors(&h, tol);
    let mut messages = Vec::new();
    if spec.levels.len() != outcome.levels.len() {
        messages.push(format!(
            "{} reduced levels but {} distinct dense energies",
            outcome.levels.len(),
            spec.levels.len()
        ));
    }
    for (k, (record, level)) in report.levels.iter_mut().zip(&outcome.levels).enumerate() {
        let dense = spec
            .levels
            .iter()
            .min_by(|a, b| (a.energy - level.energy).abs().total_cmp(&(b.energy - level.energy).abs()))
            .expect("dense spectrum is never empty");
        let err = (dense.energy - level.energy).abs();
        let min_eig = match level.g_invariant() {
            Some(g) => {
                let d = realize_dense(&g.operator, limit)?;
                d.matrix().clone().symmetric_eigen().eigenvalues.min()
            }
            None => f64::NAN,
        };
        if err > 1e-8 * scale {
            messages.push(format!("level {k}: energy {} vs dense {}", level.energy, dense.energy));
        }
        if !(min_eig >= -1e-9) {
            messages.push(format!("level {k}: G-invariant state is not positive (min eigenvalue {min_eig})"));
        }
        if let Some(d) = level.dense_dimension() {
            if (d - dense.multiplicity as f64).abs() > 1e-6 {
                messages.push(format!("level {k}: purity gives d_E = {d}, dense multiplicity {}", dense.multiplicity));
            }
        }
        record.oracle = Some(OracleRecord {
            dense_energy: dense.energy,
            dense_multiplicity: dense.multiplicity,
            spectrum_match_error: err,
            positivity_min_eigenvalue: min_eig,
        });
    }
    report.oracle_ok = Some(messages.is_empty());
    report.oracle_messages = messages;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let f = SystemFile::parse("n = 3\ncouplings = [{ i = 1, j = 2, J = 0.5 }, { i = 2, j = 3, J = -1 }]\n").unwrap();
        let sys = f.to_system().unwrap();
        assert_eq!(sys.coupling(2, 1), 0.5);
        assert_eq!(sys.coupling(3, 2), -1.0);
        assert_eq!(sys.coupling(1, 3), 0.0);
        assert_eq!(SystemFile::from_system(&sys).to_system().unwrap(), sys);
    }

    #[test]
    fn duplicate_pair_is_named() {
        let f = SystemFile::parse("n = 3\ncouplings = [{ i = 1, j = 2, J = 1 }, { i = 1, j = 2, J = 2 }]\n").unwrap();
        let err = f.to_system().unwrap_err().to_string();
        assert!(err.contains("duplicate pair (1, 2)"), "{err}");
        assert!(err.contains("couplings[1]"), "{err}");
    }

    #[test]
    fn bad_entries() {
        let reversed = SystemFile::parse("n = 3\ncouplings = [{ i = 2, j = 1, J = 1 }]\n").unwrap();
        assert!(reversed.to_system().is_err());
        let short = SystemFile::parse("n = 2\nfields = [[0.0, 0.0, 1.0]]\n").unwrap();
        assert!(short.to_system().unwrap_err().to_string().contains("fields"));
        let err = SystemFile::parse("n = 2\ncouplings = [{ i = 1, j = 2 }]\n").unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        assert!(SystemFile::parse("n = 2\nextra = 1\n").is_err());
    }

    #[test]
    fn report_round_trip() {
        let sys = SpinSystem::uniform(3, 1.0).unwrap();
        let report = spectrum_report(&sys, 1e-8, Some(DenseLimit::default())).unwrap();
        assert_eq!(report.oracle_ok, Some(true));
        let text = report.to_json();
        let back = SpectrumReport::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(report.levels[0].solutions[0].coeffs[0].label, Vec::<[usize; 2]>::new());
        assert!(report.levels.windows(2).all(|w| w[0].energy < w[1].energy));
    }
}

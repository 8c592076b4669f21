use crate::error::{Error, Result};

/// `N` spins 1/2 with Heisenberg couplings `J_ij` and optional local fields.
///
/// The Hamiltonian is `H = Σ_{i<j} J_ij σ_i·σ_j + Σ_i h_i·σ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    n_spins: usize,
    // row-major n×n, symmetric, zero diagonal
    couplings: Vec<f64>,
    fields: Option<Vec<[f64; 3]>>,
}

impl SpinSystem {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidSystem("a spin system needs at least one spin".into()));
        }
        Ok(SpinSystem { n_spins, couplings: vec![0.0; n_spins * n_spins], fields: None })
    }

    /// Every pair coupled with the same `j`.
    pub fn uniform(n_spins: usize, j: f64) -> Result<Self> {
        let mut sys = SpinSystem::new(n_spins)?;
        for a in 1..=n_spins {
            for b in a + 1..=n_spins {
                sys.set_coupling(a, b, j)?;
            }
        }
        Ok(sys)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_spins {
            Err(Error::IndexOutOfRange { index: site, n_spins: self.n_spins })
        } else {
            Ok(())
        }
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::InvalidSystem(format!("self-coupling J_{i}{i} is not allowed")));
        }
        if !value.is_finite() {
            return Err(Error::InvalidSystem(format!("J_{i}{j} = {value} is not finite")));
        }
        let n = self.n_spins;
        self.couplings[(i - 1) * n + (j - 1)] = value;
        self.couplings[(j - 1) * n + (i - 1)] = value;
        Ok(())
    }

    pub fn with_coupling(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.set_coupling(i, j, value)?;
        Ok(self)
    }

    /// `J_ij` with 1-based sites; zero on the diagonal.
    ///
    /// Panics if a site is out of range.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i - 1) * self.n_spins + (j - 1)]
    }

    /// Nonzero couplings as `(i, j, J_ij)` with `i < j`.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_spins;
        (1..=n)
            .flat_map(move |i| (i + 1..=n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.coupling(i, j)))
            .filter(|&(_, _, v)| v != 0.0)
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn set_field(&mut self, site: usize, h: [f64; 3]) -> Result<()> {
        self.check_site(site)?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem(format!("field at site {site} is not finite")));
        }
        let n = self.n_spins;
        self.fields.get_or_insert_with(|| vec![[0.0; 3]; n])[site - 1] = h;
        Ok(())
    }

    pub fn with_field(mut self, site: usize, h: [f64; 3]) -> Result<Self> {
        self.set_field(site, h)?;
        Ok(self)
    }

    pub fn fields(&self) -> Option<&[[f64; 3]]> {
        self.fields.as_deref()
    }

    pub fn field(&self, site: usize) -> [f64; 3] {
        self.fields.as_ref().map_or([0.0; 3], |f| f[site - 1])
    }

    /// First site carrying a nonzero field, if any.
    pub fn first_field_site(&self) -> Option<usize> {
        self.fields
            .as_ref()?
            .iter()
            .position(|h| h.iter().any(|&v| v != 0.0))
            .map(|k| k + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couplings_are_symmetric() {
        let sys = SpinSystem::new(3).unwrap().with_coupling(3, 1, 0.5).unwrap();
        assert_eq!(sys.coupling(1, 3), 0.5);
        assert_eq!(sys.coupling(3, 1), 0.5);
        assert_eq!(sys.coupling(2, 2), 0.0);
        assert_eq!(sys.bonds().collect::<Vec<_>>(), vec![(1, 3, 0.5)]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(SpinSystem::new(0).is_err());
        let mut sys = SpinSystem::new(2).unwrap();
        assert!(sys.set_coupling(1, 1, 1.0).is_err());
        assert!(sys.set_coupling(1, 3, 1.0).is_err());
        assert!(sys.set_coupling(1, 2, f64::NAN).is_err());
        assert!(sys.set_field(3, [0.0; 3]).is_err());
    }

    #[test]
    fn zero_fields_do_not_count() {
        let mut sys = SpinSystem::uniform(2, 1.0).unwrap();
        sys.set_field(1, [0.0; 3]).unwrap();
        assert_eq!(sys.first_field_site(), None);
        sys.set_field(2, [0.0, 0.0, 0.1]).unwrap();
        assert_eq!(sys.first_field_site(), Some(2));
    }
}

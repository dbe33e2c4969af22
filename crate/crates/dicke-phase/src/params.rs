//! Physical parameters and the truncated product basis.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Physical couplings, pseudospin size, and Fock cutoff of one Dicke-model
/// instance; the single source of truth for a run.
///
/// The Hamiltonian is
/// H = ω a†a + ω₀ J_z + (λ/√(2j)) (a† + a)(J₊ + J₋),
/// acting on the field Fock space (truncated at `n_cut`) tensored with the
/// spin-j multiplet. 2j is stored as an integer so half-integer j is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    /// Field frequency ω (energy units).
    pub omega: f64,
    /// Level splitting ω₀.
    pub omega0: f64,
    /// Coupling strength λ.
    pub lambda: f64,
    /// Twice the pseudospin quantum number, 2j ≥ 1.
    pub two_j: u32,
    /// Fock cutoff n_c ≥ 0: photon numbers 0..=n_cut are kept.
    pub n_cut: usize,
}

impl DickeParams {
    /// Construct and validate in one step.
    pub fn new(omega: f64, omega0: f64, lambda: f64, two_j: u32, n_cut: usize) -> Result<Self> {
        let p = Self {
            omega,
            omega0,
            lambda,
            two_j,
            n_cut,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check all invariants: positive finite frequencies, λ ≥ 0, 2j ≥ 1.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega must be positive and finite, got {}",
                self.omega
            )));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega0 must be positive and finite, got {}",
                self.omega0
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be non-negative and finite, got {}",
                self.lambda
            )));
        }
        if self.two_j == 0 {
            return Err(Error::InvalidParams("two_j must be at least 1".into()));
        }
        Ok(())
    }

    /// Pseudospin quantum number j = two_j / 2.
    #[inline]
    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// Critical coupling λ_c = √(ω ω₀)/2 separating the normal (λ < λ_c) and
    /// superradiant (λ > λ_c) phases.
    #[inline]
    pub fn critical_coupling(&self) -> f64 {
        0.5 * (self.omega * self.omega0).sqrt()
    }

    /// A copy with a different coupling (sweeps vary λ only).
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }

    /// A copy with a different Fock cutoff.
    pub fn with_n_cut(&self, n_cut: usize) -> Self {
        Self { n_cut, ..*self }
    }
}

/// Critical coupling λ_c = √(ω ω₀)/2 of a validated parameter set.
pub fn critical_coupling(params: &DickeParams) -> f64 {
    params.critical_coupling()
}

/// One product basis vector |n⟩ ⊗ |j, m⟩, addressed by the photon number and
/// the ladder index m_index = j + m ∈ 0..=2j (so m = m_index − j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub n: usize,
    pub m_index: usize,
}

/// Parity sign e^{iπ(n + m + j)} = (−1)^{n + m_index} of a basis state.
///
/// The Hamiltonian commutes with this parity, so the matrix is block-diagonal
/// in it and the ground state lives in the even block.
#[inline]
pub fn parity_sign(n: usize, m_index: usize) -> i8 {
    if (n + m_index).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Enumerate the truncated basis in lexicographic order: n ascending, then
/// m_index ascending. The position of (n, m_index) in this list is
/// n·(2j+1) + m_index; `basis_index` is the inverse map.
pub fn build_basis(params: &DickeParams) -> Vec<BasisState> {
    let span = params.two_j as usize + 1;
    let mut basis = Vec::with_capacity((params.n_cut + 1) * span);
    for n in 0..=params.n_cut {
        for m_index in 0..span {
            basis.push(BasisState { n, m_index });
        }
    }
    basis
}

/// Flat index of (n, m_index) in the `build_basis` ordering.
#[inline]
pub fn basis_index(params: &DickeParams, n: usize, m_index: usize) -> usize {
    n * (params.two_j as usize + 1) + m_index
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_coupling_closed_form() {
        let p = DickeParams::new(1.0, 1.0, 0.3, 20, 10).unwrap();
        assert_eq!(p.critical_coupling(), 0.5);
        let p = DickeParams::new(4.0, 1.0, 0.3, 20, 10).unwrap();
        assert_eq!(p.critical_coupling(), 1.0);
    }

    #[test]
    fn degenerate_frequencies_rejected() {
        assert!(DickeParams::new(1.0, 0.0, 0.3, 20, 10).is_err());
        assert!(DickeParams::new(0.0, 1.0, 0.3, 20, 10).is_err());
        assert!(DickeParams::new(1.0, 1.0, -0.1, 20, 10).is_err());
        assert!(DickeParams::new(1.0, 1.0, 0.1, 0, 10).is_err());
        assert!(DickeParams::new(1.0, f64::NAN, 0.1, 2, 10).is_err());
    }

    #[test]
    fn basis_enumeration_order_and_length() {
        // j = 1/2, n_cut = 1: four states in lexicographic order.
        let p = DickeParams::new(1.0, 1.0, 0.0, 1, 1).unwrap();
        let b = build_basis(&p);
        let expect = [(0, 0), (0, 1), (1, 0), (1, 1)];
        assert_eq!(b.len(), 4);
        for (state, &(n, m)) in b.iter().zip(&expect) {
            assert_eq!((state.n, state.m_index), (n, m));
        }

        // j = 10, n_cut = 40 → 41 · 21 states.
        let p = DickeParams::new(1.0, 1.0, 0.0, 20, 40).unwrap();
        assert_eq!(build_basis(&p).len(), 861);

        // j = 5, n_cut = 0 → 11 states.
        let p = DickeParams::new(1.0, 1.0, 0.0, 10, 0).unwrap();
        assert_eq!(build_basis(&p).len(), 11);
    }

    #[test]
    fn basis_index_is_inverse_of_enumeration() {
        let p = DickeParams::new(1.0, 1.0, 0.0, 5, 7).unwrap();
        for (i, s) in build_basis(&p).iter().enumerate() {
            assert_eq!(basis_index(&p, s.n, s.m_index), i);
        }
    }

    #[test]
    fn parity_sign_small_cases() {
        assert_eq!(parity_sign(0, 0), 1);
        assert_eq!(parity_sign(1, 0), -1);
        assert_eq!(parity_sign(1, 1), 1);
        assert_eq!(parity_sign(2, 3), -1);
    }

    #[test]
    fn half_integer_j_supported() {
        let p = DickeParams::new(1.0, 1.0, 0.2, 3, 4).unwrap();
        assert_eq!(p.j(), 1.5);
        assert_eq!(build_basis(&p).len(), 20);
    }
}

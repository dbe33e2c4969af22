//! Hamiltonian assembly on the truncated product basis and its parity-even
//! block.
//!
//! H = ω a†a + ω₀ J_z + (λ/√(2j)) (a† + a)(J₊ + J₋) couples |n, m_index⟩ only
//! to |n±1, m_index±1⟩, so it conserves the parity (−1)^{n+m_index} and is
//! block-diagonal in it. The ground state lives in the even block, which is
//! the only block assembled for production solves.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::params::{parity_sign, BasisState, DickeParams};
use crate::Result;

/// Default cap on the truncated Hilbert-space dimension. (n_cut+1)(2j+1)
/// beyond this is almost certainly a mistyped parameter, and the dense
/// embedding of such a state would not fit in memory anyway.
pub const DIM_CAP: usize = 8_000_000;

/// Matrix element ⟨bra|H|ket⟩ on the product basis.
///
/// Diagonal: nω + mω₀ with m = m_index − j. Off-diagonal: the coupling term
/// connects states with |Δn| = 1 and |Δm_index| = 1 and carries
/// (λ/√(2j)) · √(boson factor) · √((2j − k)(k + 1)) where k is the smaller of
/// the two m_index values.
pub fn matrix_element(bra: &BasisState, ket: &BasisState, params: &DickeParams) -> f64 {
    let two_j = params.two_j as usize;
    assert!(
        bra.m_index <= two_j && ket.m_index <= two_j,
        "m_index out of range"
    );
    assert!(
        bra.n <= params.n_cut && ket.n <= params.n_cut,
        "photon number out of range"
    );
    if bra == ket {
        let m = ket.m_index as f64 - params.j();
        return ket.n as f64 * params.omega + m * params.omega0;
    }
    let dn = bra.n.abs_diff(ket.n);
    let dm = bra.m_index.abs_diff(ket.m_index);
    if dn != 1 || dm != 1 {
        return 0.0;
    }
    let boson = (bra.n.max(ket.n) as f64).sqrt();
    let k = bra.m_index.min(ket.m_index) as f64;
    let spin = ((params.two_j as f64 - k) * (k + 1.0)).sqrt();
    params.lambda / (params.two_j as f64).sqrt() * boson * spin
}

/// The parity-even block of the Hamiltonian in a sparse symmetric layout:
/// a diagonal plus a list of strictly-upper couplings.
#[derive(Debug, Clone)]
pub struct EvenBlock {
    pub params: DickeParams,
    /// Block basis in lexicographic (n, m_index) order; all states even.
    pub states: Vec<BasisState>,
    /// Diagonal entries, one per block state.
    pub diag: Vec<f64>,
    /// Strictly-upper symmetric couplings (row < col in block indices).
    pub offdiag: Vec<(u32, u32, f64)>,
}

impl EvenBlock {
    /// Assemble the even block, guarding the full-basis dimension at `DIM_CAP`.
    pub fn assemble(params: &DickeParams) -> Result<Self> {
        Self::assemble_with_cap(params, DIM_CAP)
    }

    /// Assemble with an explicit dimension cap.
    pub fn assemble_with_cap(params: &DickeParams, cap: usize) -> Result<Self> {
        params.validate()?;
        let span = params.two_j as usize + 1;
        let full_dim = (params.n_cut + 1) * span;
        if full_dim > cap {
            return Err(Error::DimensionTooLarge { dim: full_dim, cap });
        }

        // Pass 1: enumerate even states and the (n, m_index) -> block-index map.
        let mut states = Vec::with_capacity(full_dim / 2 + span);
        let mut block_index = vec![u32::MAX; full_dim];
        for n in 0..=params.n_cut {
            for m_index in 0..span {
                if parity_sign(n, m_index) == 1 {
                    block_index[n * span + m_index] = states.len() as u32;
                    states.push(BasisState { n, m_index });
                }
            }
        }

        // Pass 2: fill the diagonal and the upper couplings toward (n+1, m±1),
        // which stay inside the even block by parity conservation.
        let mut diag = Vec::with_capacity(states.len());
        let mut offdiag = Vec::new();
        for (row, s) in states.iter().enumerate() {
            diag.push(matrix_element(s, s, params));
            if s.n < params.n_cut {
                for target_m in [s.m_index.wrapping_sub(1), s.m_index + 1] {
                    if target_m < span {
                        let t = BasisState {
                            n: s.n + 1,
                            m_index: target_m,
                        };
                        let col = block_index[t.n * span + t.m_index];
                        debug_assert_ne!(col, u32::MAX, "coupling left the parity block");
                        let v = matrix_element(s, &t, params);
                        if v != 0.0 {
                            offdiag.push((row as u32, col, v));
                        }
                    }
                }
            }
        }
        Ok(Self {
            params: *params,
            states,
            diag,
            offdiag,
        })
    }

    /// Block dimension.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// y = H x restricted to the block. Deterministic accumulation order.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (yi, (di, xi)) in y.iter_mut().zip(self.diag.iter().zip(x)) {
            *yi = di * xi;
        }
        for &(a, b, v) in &self.offdiag {
            let (a, b) = (a as usize, b as usize);
            y[a] += v * x[b];
            y[b] += v * x[a];
        }
    }

    /// A crude upper bound on ‖H‖ used to scale convergence thresholds.
    pub fn norm_scale(&self) -> f64 {
        let dmax = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let omax = self
            .offdiag
            .iter()
            .fold(0.0f64, |m, &(_, _, v)| m.max(v.abs()));
        // Each row holds at most 4 couplings.
        dmax + 4.0 * omax
    }

    /// Dense symmetric copy of the block (for small-dimension fallbacks and
    /// reference solves).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in self.diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        for &(a, b, v) in &self.offdiag {
            m[(a as usize, b as usize)] = v;
            m[(b as usize, a as usize)] = v;
        }
        m
    }
}

/// Dense Hamiltonian on the *full* product basis (both parity blocks), used
/// by tests to verify the block structure against the raw matrix elements.
pub fn assemble_dense_full(params: &DickeParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let basis = crate::params::build_basis(params);
    let dim = basis.len();
    if dim > 4000 {
        return Err(Error::DimensionTooLarge { dim, cap: 4000 });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (i, bra) in basis.iter().enumerate() {
        for (k, ket) in basis.iter().enumerate() {
            m[(i, k)] = matrix_element(bra, ket, params);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::build_basis;
    use approx::assert_relative_eq;

    fn params(lambda: f64, two_j: u32, n_cut: usize) -> DickeParams {
        DickeParams::new(1.0, 1.0, lambda, two_j, n_cut).unwrap()
    }

    #[test]
    fn diagonal_element_is_n_omega_plus_m_omega0() {
        // n=3, m=−2 (j=5 → m_index=3), ω=ω₀=1 → 3 − 2 = 1.
        let p = params(0.7, 10, 5);
        let s = BasisState { n: 3, m_index: 3 };
        assert_relative_eq!(matrix_element(&s, &s, &p), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn lowest_ladder_coupling_equals_lambda() {
        // ⟨1; m_index=1 | H | 0; m_index=0⟩ = λ for every j: the spin factor
        // √(2j·1) cancels the 1/√(2j) in the coupling.
        for two_j in [1u32, 2, 7, 20, 101] {
            let p = params(0.37, two_j, 4);
            let bra = BasisState { n: 1, m_index: 1 };
            let ket = BasisState { n: 0, m_index: 0 };
            assert_relative_eq!(matrix_element(&bra, &ket, &p), 0.37, max_relative = 1e-14);
        }
    }

    #[test]
    fn coupling_requires_single_photon_and_spin_step() {
        let p = params(0.9, 6, 6);
        let ket = BasisState { n: 0, m_index: 2 };
        for bra in [
            BasisState { n: 2, m_index: 2 }, // |Δn| = 2
            BasisState { n: 2, m_index: 3 },
            BasisState { n: 1, m_index: 2 }, // |Δm| = 0
            BasisState { n: 0, m_index: 3 }, // |Δn| = 0
            BasisState { n: 1, m_index: 4 }, // |Δm| = 2
        ] {
            assert_eq!(matrix_element(&bra, &ket, &p), 0.0);
        }
    }

    #[test]
    fn full_matrix_is_symmetric_and_parity_block_diagonal() {
        let p = params(0.8, 3, 4);
        let h = assemble_dense_full(&p).unwrap();
        let basis = build_basis(&p);
        for i in 0..h.nrows() {
            for k in 0..h.ncols() {
                assert_relative_eq!(h[(i, k)], h[(k, i)], epsilon = 1e-15);
                let pi = parity_sign(basis[i].n, basis[i].m_index);
                let pk = parity_sign(basis[k].n, basis[k].m_index);
                if pi != pk {
                    assert_eq!(h[(i, k)], 0.0, "parity blocks must not couple");
                }
            }
        }
    }

    #[test]
    fn hamiltonian_commutes_with_parity_flip() {
        // Compare Π(Hv) with H(Πv) on the full basis for a pseudorandom v.
        let p = params(0.65, 4, 5);
        let h = assemble_dense_full(&p).unwrap();
        let basis = build_basis(&p);
        let dim = basis.len();
        let v: Vec<f64> = (0..dim)
            .map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let hv: Vec<f64> = (0..dim)
            .map(|i| (0..dim).map(|k| h[(i, k)] * v[k]).sum())
            .collect();
        let pv: Vec<f64> = (0..dim)
            .map(|i| f64::from(parity_sign(basis[i].n, basis[i].m_index)) * v[i])
            .collect();
        let hpv: Vec<f64> = (0..dim)
            .map(|i| (0..dim).map(|k| h[(i, k)] * pv[k]).sum())
            .collect();
        for i in 0..dim {
            let phv = f64::from(parity_sign(basis[i].n, basis[i].m_index)) * hv[i];
            assert_relative_eq!(phv, hpv[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let p = params(0.0, 5, 6);
        let block = EvenBlock::assemble(&p).unwrap();
        assert!(block.offdiag.is_empty());
        for (s, d) in block.states.iter().zip(&block.diag) {
            let expect = s.n as f64 + (s.m_index as f64 - p.j());
            assert_relative_eq!(*d, expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn even_block_matches_dense_restriction() {
        let p = params(0.5, 20, 40);
        let block = EvenBlock::assemble(&p).unwrap();
        // Sparsity census: at most 1 diagonal + 4 couplings per row.
        assert!(block.offdiag.len() * 2 + block.dim() <= block.dim() * 5);
        // The block matrix reproduces matrix_element on its states.
        let dense = block.to_dense();
        for (i, si) in block.states.iter().enumerate().step_by(7) {
            for (k, sk) in block.states.iter().enumerate().step_by(11) {
                assert_relative_eq!(dense[(i, k)], matrix_element(si, sk, &p), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let p = params(0.9, 5, 8);
        let block = EvenBlock::assemble(&p).unwrap();
        let dense = block.to_dense();
        let dim = block.dim();
        let x: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; dim];
        block.apply(&x, &mut y);
        for i in 0..dim {
            let expect: f64 = (0..dim).map(|k| dense[(i, k)] * x[k]).sum();
            assert_relative_eq!(y[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_cap_guards_assembly() {
        let p = params(0.5, 1000, 100_000);
        match EvenBlock::assemble(&p) {
            Err(Error::DimensionTooLarge { .. }) => {}
            other => panic!("expected dimension cap error, got {other:?}"),
        }
    }
}

//! Lowest-eigenpair solvers for the even parity block.
//!
//! The production path is Lanczos with full reorthogonalization and a
//! deterministic start vector; for small blocks a dense symmetric solve is
//! available both as a fallback and as a reference.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Error;
use crate::model::EvenBlock;
use crate::Result;

/// Options for the Lanczos iteration.
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Hard cap on the Krylov dimension.
    pub max_iter: usize,
    /// Residual tolerance: accept when |β_k · s_last| ≤ tol · max(1, |θ|).
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 600,
            tol: 1e-10,
        }
    }
}

/// Largest block dimension for which the dense fallback is attempted.
pub const DENSE_FALLBACK_DIM: usize = 2000;

/// Deterministic pseudorandom start vector (SplitMix64 stream), normalized.
fn start_vector(dim: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let mut v: Vec<f64> = (0..dim)
        .map(|_| (next() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest Ritz pair of the tridiagonal (α, β) via a dense symmetric solve.
fn tridiag_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).iter().copied().collect(),
    )
}

/// Fix the overall sign so the largest-magnitude component is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Lanczos iteration for the lowest eigenpair of a symmetric operator given
/// through its matrix-vector product. Full reorthogonalization keeps the
/// Krylov basis orthonormal to machine precision, so no ghost eigenvalues
/// appear.
pub fn lanczos_lowest<F>(
    dim: usize,
    scale: f64,
    mut apply: F,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::InvalidParams("empty operator".into()));
    }
    if dim == 1 {
        let mut y = vec![0.0];
        apply(&[1.0], &mut y);
        return Ok((y[0], vec![1.0]));
    }
    let max_iter = opts.max_iter.min(dim);
    let mut basis: Vec<Vec<f64>> = vec![start_vector(dim)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;

    for k in 0..max_iter {
        apply(&basis[k], &mut w);
        if k > 0 {
            let b = betas[k - 1];
            let prev = &basis[k - 1];
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        let a = dot(&basis[k], &w);
        alphas.push(a);
        for (wi, vi) in w.iter_mut().zip(&basis[k]) {
            *wi -= a * vi;
        }
        // Full reorthogonalization, repeated once if cancellation was severe.
        for _pass in 0..2 {
            let before = dot(&w, &w).sqrt();
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
            if dot(&w, &w).sqrt() > 0.5 * before {
                break;
            }
        }
        let b = dot(&w, &w).sqrt();

        let krylov_exhausted = b <= 1e-14 * scale.max(1.0);
        let check_now = krylov_exhausted || k + 1 == max_iter || (k + 1) % 10 == 0;
        if check_now {
            let (theta, s) = tridiag_lowest(&alphas, &betas);
            last_residual = b * s[s.len() - 1].abs();
            if krylov_exhausted || last_residual <= opts.tol * theta.abs().max(1.0) {
                let mut vec = vec![0.0; dim];
                for (coef, v) in s.iter().zip(&basis) {
                    for (xi, vi) in vec.iter_mut().zip(v) {
                        *xi += coef * vi;
                    }
                }
                let norm = dot(&vec, &vec).sqrt();
                for x in &mut vec {
                    *x /= norm;
                }
                canonical_sign(&mut vec);
                return Ok((theta, vec));
            }
        }
        if k + 1 < max_iter {
            betas.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
    Err(Error::EigenNotConverged {
        iterations: max_iter,
        residual: last_residual,
        tol: opts.tol,
    })
}

/// Lowest eigenpair of a dense symmetric matrix.
pub fn dense_lowest(mat: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(mat.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    canonical_sign(&mut v);
    (eig.eigenvalues[best], v)
}

/// Lowest eigenpair of the even block: Lanczos first, dense fallback for
/// small blocks if the iteration stalls.
pub fn lowest_eigenpair(block: &EvenBlock, tol: f64) -> Result<(f64, Vec<f64>)> {
    let opts = LanczosOptions {
        tol,
        ..LanczosOptions::default()
    };
    let scale = block.norm_scale();
    match lanczos_lowest(block.dim(), scale, |x, y| block.apply(x, y), &opts) {
        Ok(pair) => Ok(pair),
        Err(err) => {
            if block.dim() <= DENSE_FALLBACK_DIM {
                Ok(dense_lowest(&block.to_dense()))
            } else {
                Err(err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DickeParams;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_coupling_block() {
        // [[0, λ], [λ, 1]] has lowest eigenvalue (1 − √(1 + 4λ²))/2.
        for lambda in [0.1, 0.5, 1.3] {
            let m = DMatrix::from_row_slice(2, 2, &[0.0, lambda, lambda, 1.0]);
            let apply = |x: &[f64], y: &mut [f64]| {
                y[0] = lambda * x[1];
                y[1] = lambda * x[0] + x[1];
            };
            let expect = 0.5 * (1.0 - (1.0 + 4.0 * lambda * lambda).sqrt());
            let (e_dense, _) = dense_lowest(&m);
            let (e_lcz, v) = lanczos_lowest(2, 2.0, apply, &LanczosOptions::default()).unwrap();
            assert_relative_eq!(e_dense, expect, epsilon = 1e-12);
            assert_relative_eq!(e_lcz, expect, epsilon = 1e-10);
            // Residual check on the returned vector.
            let mut hv = vec![0.0; 2];
            apply(&v, &mut hv);
            for i in 0..2 {
                assert_relative_eq!(hv[i], e_lcz * v[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_operator_picks_smallest_entry() {
        let d = [3.0, 1.0, 2.0, 7.5];
        let (e, v) = lanczos_lowest(
            4,
            7.5,
            |x, y| {
                for i in 0..4 {
                    y[i] = d[i] * x[i];
                }
            },
            &LanczosOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(e, 1.0, epsilon = 1e-10);
        assert_relative_eq!(v[1].abs(), 1.0, epsilon = 1e-8);
        // Canonical sign: dominant component positive.
        assert!(v[1] > 0.0);
    }

    #[test]
    fn lanczos_matches_dense_on_even_blocks() {
        for (lambda, two_j, n_cut) in [(0.3, 5, 12), (0.8, 8, 20), (1.5, 4, 30)] {
            let p = DickeParams::new(1.0, 1.0, lambda, two_j, n_cut).unwrap();
            let block = EvenBlock::assemble(&p).unwrap();
            let (e_dense, v_dense) = dense_lowest(&block.to_dense());
            let (e_lcz, v_lcz) = lowest_eigenpair(&block, 1e-11).unwrap();
            assert_relative_eq!(e_lcz, e_dense, epsilon = 1e-9);
            let overlap: f64 = v_dense.iter().zip(&v_lcz).map(|(a, b)| a * b).sum();
            assert!(
                overlap.abs() > 1.0 - 1e-9,
                "eigenvector overlap {overlap} too small"
            );
        }
    }

    #[test]
    fn returned_vector_is_normalized_eigenvector() {
        let p = DickeParams::new(1.0, 1.0, 1.0, 10, 40).unwrap();
        let block = EvenBlock::assemble(&p).unwrap();
        let (e, v) = lowest_eigenpair(&block, 1e-11).unwrap();
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        let mut hv = vec![0.0; block.dim()];
        block.apply(&v, &mut hv);
        let mut resid = 0.0f64;
        for i in 0..block.dim() {
            resid += (hv[i] - e * v[i]).powi(2);
        }
        assert!(resid.sqrt() < 1e-8, "residual {} too large", resid.sqrt());
    }

    #[test]
    fn deterministic_across_calls() {
        let p = DickeParams::new(1.0, 1.0, 0.7, 6, 25).unwrap();
        let block = EvenBlock::assemble(&p).unwrap();
        let (e1, v1) = lowest_eigenpair(&block, 1e-11).unwrap();
        let (e2, v2) = lowest_eigenpair(&block, 1e-11).unwrap();
        assert_eq!(e1.to_bits(), e2.to_bits());
        for (a, b) in v1.iter().zip(&v2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn reports_nonconvergence_with_residual() {
        // One iteration cannot converge a coupled 50-dim operator.
        let opts = LanczosOptions {
            max_iter: 1,
            tol: 1e-12,
        };
        let p = DickeParams::new(1.0, 1.0, 0.9, 7, 20).unwrap();
        let block = EvenBlock::assemble(&p).unwrap();
        match lanczos_lowest(
            block.dim(),
            block.norm_scale(),
            |x, y| block.apply(x, y),
            &opts,
        ) {
            Err(Error::EigenNotConverged {
                iterations,
                residual,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}

//! Gaussian-smeared configuration-space densities of the ground state.
//!
//! At resonance (ω = ω₀) with smearing variance σ² = 1/(2ω), the smeared
//! position density coincides, up to fixed coordinate and normalization
//! factors, with the position-pair Husimi marginal, and the smeared momentum
//! density with the momentum-pair marginal:
//!
//!   ξ(x, y)  = (ω/2π) Φ₁(√(ω/2) x, √(ω/2) y),         ∫ξ = 1,
//!   ξ̃(k_x, k_y) = (2π/ω) Φ₂(k_x/√(2ω), k_y/√(2ω)),    ∫ξ̃ = (2π)²,
//!
//! where ξ̃ uses the e^{−ikx} transform convention (no 1/√(2π)), so its
//! total mass is (2π)². Both densities are evaluated exactly from the
//! ground-state coefficients through the smeared Hermite-pair overlaps
//!
//!   I_{nn'}(x) = ∫ ĥ_n(t) ĥ_{n'}(t) G_σ(x − t) dt
//!              = e^{−y²/2}/(√E π^{1/4}) Σ_k C(n,k) C(n',k) k!
//!                · E^{k−(n+n')/2} √(d!/(n! n'!)) ĥ_d(y),
//!
//! with E = 2σ² + 1, y = x/√E, d = n + n' − 2k, assembled in log space.

use ndarray::Array2;

use crate::error::Error;
use crate::ground::GroundState;
use crate::measures::{plane_reduce, PlaneMeasures};
use crate::quad::{Axis1D, QuadratureSpec};
use crate::special::{hermite_functions, sum_signed_exp, LnFactorial};
use crate::Result;

use std::f64::consts::PI;

/// Smeared overlap matrix I_{nn'}(x), n, n' ≤ n_max, for unit-frequency
/// oscillator functions and smearing variance `sigma_sq`.
pub fn smear_overlap_matrix(n_max: usize, sigma_sq: f64, x: f64) -> Array2<f64> {
    assert!(sigma_sq > 0.0, "smearing variance must be positive");
    let e = 2.0 * sigma_sq + 1.0;
    let ln_e = e.ln();
    let y = x / e.sqrt();
    let h = hermite_functions(2 * n_max, y);
    let lf = LnFactorial::new(2 * n_max);
    // e^{−y²} total envelope: half here, half inside each ĥ_d(y).
    let pref = (-0.5 * y * y).exp() / (e.sqrt() * PI.powf(0.25));
    let mut out = Array2::zeros((n_max + 1, n_max + 1));
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for n in 0..=n_max {
        for np in 0..=n {
            terms.clear();
            for k in 0..=np {
                let d = n + np - 2 * k;
                if h[d] == 0.0 {
                    continue;
                }
                let ln = lf.ln_binomial(n, k)
                    + lf.ln_binomial(np, k)
                    + lf.ln_fact(k)
                    + (k as f64 - 0.5 * (n + np) as f64) * ln_e
                    + 0.5 * (lf.ln_fact(d) - lf.ln_fact(n) - lf.ln_fact(np))
                    + h[d].abs().ln();
                terms.push((h[d].signum(), ln));
            }
            let val = if terms.is_empty() {
                0.0
            } else {
                pref * sum_signed_exp(&terms)
            };
            out[(n, np)] = val;
            out[(np, n)] = val;
        }
    }
    out
}

/// Ground state prepared for exact smeared-density evaluation.
#[derive(Debug)]
pub struct SmearedState {
    omega: f64,
    /// Position coefficients c_{nk}.
    coeffs: Array2<f64>,
    /// Momentum coefficients (−1)^{(n+k)/2} c_{nk} (parity-even states).
    momentum_coeffs: Array2<f64>,
}

impl SmearedState {
    /// Requires resonance ω = ω₀ (the marginal identities hold only there)
    /// and a parity-even coefficient matrix.
    pub fn new(gs: &GroundState) -> Result<Self> {
        let p = gs.params;
        if (p.omega - p.omega0).abs() > 1e-12 * p.omega.abs() {
            return Err(Error::ResonanceRequired {
                omega: p.omega,
                omega0: p.omega0,
            });
        }
        let mut momentum_coeffs = gs.coeffs.clone();
        for ((n, k), v) in momentum_coeffs.indexed_iter_mut() {
            match (n + k) % 4 {
                0 => {}
                2 => *v = -*v,
                _ => {
                    if v.abs() > 1e-14 {
                        return Err(Error::MeasureDomain(
                            "smeared momentum density requires a parity-even state".into(),
                        ));
                    }
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            omega: p.omega,
            coeffs: gs.coeffs.clone(),
            momentum_coeffs,
        })
    }

    /// Matched smearing variance σ² = 1/(2ω).
    pub fn sigma_sq(&self) -> f64 {
        1.0 / (2.0 * self.omega)
    }

    fn boson_dim(&self) -> usize {
        self.coeffs.nrows()
    }

    fn spin_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// ξ(x, y): the exact |ψ|² ⊛ G_σ ⊗ G_σ at one point.
    pub fn position_density(&self, x: f64, y: f64) -> f64 {
        self.point(&self.coeffs, self.omega.sqrt(), self.omega, x, y)
    }

    /// ξ̃(k_x, k_y): the smeared momentum density, e^{−ikx} convention.
    pub fn momentum_density(&self, kx: f64, ky: f64) -> f64 {
        let pref = (2.0 * PI) * (2.0 * PI) / self.omega;
        self.point(&self.momentum_coeffs, 1.0 / self.omega.sqrt(), pref, kx, ky)
    }

    fn point(&self, mat: &Array2<f64>, arg_scale: f64, pref: f64, a: f64, b: f64) -> f64 {
        let ia = smear_overlap_matrix(self.boson_dim() - 1, 0.5, arg_scale * a);
        let ib = smear_overlap_matrix(self.spin_dim() - 1, 0.5, arg_scale * b);
        let sandwich = mat.dot(&ib).dot(&mat.t());
        pref * (&ia * &sandwich).sum()
    }

    /// ξ on a product grid, as one matrix product over flattened overlap
    /// matrices: ξ(x_i, y_j) = Σ_{nn'} I_{nn'}(x_i) [C I(y_j) Cᵀ]_{nn'}.
    pub fn position_grid(&self, xs: &[f64], ys: &[f64]) -> Array2<f64> {
        self.grid(&self.coeffs, self.omega.sqrt(), self.omega, xs, ys)
    }

    /// ξ̃ on a product grid.
    pub fn momentum_grid(&self, ks: &[f64], ls: &[f64]) -> Array2<f64> {
        let pref = (2.0 * PI) * (2.0 * PI) / self.omega;
        self.grid(&self.momentum_coeffs, 1.0 / self.omega.sqrt(), pref, ks, ls)
    }

    fn grid(
        &self,
        mat: &Array2<f64>,
        arg_scale: f64,
        pref: f64,
        xs: &[f64],
        ys: &[f64],
    ) -> Array2<f64> {
        let nb = self.boson_dim();
        let mut left = Array2::zeros((xs.len(), nb * nb));
        for (row, &x) in xs.iter().enumerate() {
            let ia = smear_overlap_matrix(nb - 1, 0.5, arg_scale * x);
            left.row_mut(row)
                .iter_mut()
                .zip(ia.iter())
                .for_each(|(dst, src)| *dst = *src);
        }
        let mut right = Array2::zeros((nb * nb, ys.len()));
        for (col, &y) in ys.iter().enumerate() {
            let ib = smear_overlap_matrix(self.spin_dim() - 1, 0.5, arg_scale * y);
            let sandwich = mat.dot(&ib).dot(&mat.t());
            right
                .column_mut(col)
                .iter_mut()
                .zip(sandwich.iter())
                .for_each(|(dst, src)| *dst = *src);
        }
        pref * left.dot(&right)
    }
}

/// Quadrature axes for the smeared measures: the α-plane trapezoid grids
/// mapped through x = 2σ α₁ (position axes follow the lobe displacement)
/// and k = α₂/σ (momentum axes are centered).
pub fn default_smearing_axes(gs: &GroundState) -> Result<[Axis1D; 4]> {
    let st_sigma = 1.0 / (2.0 * gs.params.omega).sqrt();
    let eq = crate::variational::equilibrium(&gs.params);
    let ax_a = QuadratureSpec::trapezoid_for_displacement(eq.alpha_e.abs()).axis()?;
    let ax_b = QuadratureSpec::trapezoid_for_displacement(eq.beta_e.abs()).axis()?;
    let ax_0 = QuadratureSpec::trapezoid_for_displacement(0.0).axis()?;
    Ok([
        scale_axis(&ax_a, 2.0 * st_sigma),
        scale_axis(&ax_b, 2.0 * st_sigma),
        scale_axis(&ax_0, 1.0 / st_sigma),
        scale_axis(&ax_0, 1.0 / st_sigma),
    ])
}

fn scale_axis(axis: &Axis1D, s: f64) -> Axis1D {
    Axis1D {
        points: axis.points.iter().map(|p| p * s).collect(),
        weights: axis.weights.iter().map(|w| w * s).collect(),
    }
}

/// Raw and converted measures of the smeared densities.
#[derive(Debug, Clone)]
pub struct SmearedReport {
    /// Raw ∫ξ, ∫ξ², −∫ξ ln ξ of the position density (unit divisor).
    pub position: PlaneMeasures,
    /// Raw measures of the momentum density (total mass (2π)²).
    pub momentum: PlaneMeasures,
    /// Marginal-convention values recovered through the exact identities:
    /// P₁ = (2π/ω)·∫ξ², W₁ = −∫ξ ln ξ − ln(2π/ω),
    /// P₂ = 2πω·∫ξ̃²/(∫ξ̃)², W₂ = −⟨ln ξ̃⟩ + ln(2π/ω).
    pub p1: f64,
    pub w1: f64,
    pub p2: f64,
    pub w2: f64,
}

/// Evaluate both smeared densities on matched grids and convert their
/// measures to the Husimi-marginal convention.
pub fn smeared_measures(gs: &GroundState) -> Result<SmearedReport> {
    let st = SmearedState::new(gs)?;
    let [x_axis, y_axis, kx_axis, ky_axis] = default_smearing_axes(gs)?;
    let pos = st.position_grid(&x_axis.points, &y_axis.points);
    let mom = st.momentum_grid(&kx_axis.points, &ky_axis.points);
    let position = plane_reduce(&pos, &x_axis, &y_axis, 1.0, &[]);
    let momentum = plane_reduce(&mom, &kx_axis, &ky_axis, 1.0, &[]);
    let ratio = 2.0 * PI / gs.params.omega;
    let (nx, nk) = (position.norm, momentum.norm);
    let report = SmearedReport {
        p1: ratio * position.p / (nx * nx),
        w1: position.w / nx - ratio.ln(),
        p2: 2.0 * PI * gs.params.omega * momentum.p / (nk * nk),
        w2: momentum.w / nk + ratio.ln(),
        position,
        momentum,
    };
    Ok(report)
}

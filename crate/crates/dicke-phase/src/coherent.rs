//! Coherent-state amplitudes and Husimi densities of numeric ground states.
//!
//! Two coherent-state families appear:
//!
//! * the field Glauber family |α⟩ with ⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!;
//! * the spin family |z⟩ with ⟨j, m|z⟩ = √C(2j, k) z^k / (1+|z|²)^j, where
//!   k = m + j is the ladder index.
//!
//! The joint Husimi density of a state with coefficients c_{nk} is
//! Φ(α, z) = |Σ c_{nk} ⟨α|n⟩⟨z|k⟩|². In the flat (contracted) description the
//! spin label is replaced by a second Glauber variable β, giving
//! Φ(α, β) = |Σ c_{nk} φ̄_n(α) φ̄_k(β)|², normalized to ∫ Φ d²α d²β/π² = 1 up
//! to the spin-contraction error, which vanishes as j grows.

use num_complex::Complex64;

use crate::ground::GroundState;

/// A point of the flat four-coordinate phase space: α = α₁ + iα₂ for the
/// field, β = β₁ + iβ₂ for the contracted spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl PhasePoint {
    pub fn new(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            beta1,
            beta2,
        }
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha1, self.alpha2)
    }

    pub fn beta(&self) -> Complex64 {
        Complex64::new(self.beta1, self.beta2)
    }
}

/// ⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!, evaluated in log-magnitude/phase form so huge
/// n and |α| stay finite.
pub fn glauber_amplitude(n: usize, alpha: Complex64) -> Complex64 {
    let r = alpha.norm();
    if n == 0 {
        return Complex64::new((-0.5 * r * r).exp(), 0.0);
    }
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut ln_fact = 0.0;
    for i in 1..=n {
        ln_fact += (i as f64).ln();
    }
    let ln_mag = n as f64 * r.ln() - 0.5 * ln_fact - 0.5 * r * r;
    Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
}

/// ⟨j, m|z⟩ = √C(2j, k) z^k / (1+|z|²)^j with k = m_index.
pub fn spin_amplitude(m_index: usize, z: Complex64, two_j: u32) -> Complex64 {
    let k = m_index;
    assert!(k <= two_j as usize, "m_index beyond the ladder");
    let u = z.norm_sqr();
    let j = two_j as f64 / 2.0;
    let mut ln_binom = 0.0;
    for i in 0..k {
        ln_binom += ((two_j as usize - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    if k == 0 {
        return Complex64::new((-j * u.ln_1p()).exp(), 0.0);
    }
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ln_mag = 0.5 * ln_binom + k as f64 * z.norm().ln() - j * u.ln_1p();
    Complex64::from_polar(ln_mag.exp(), k as f64 * z.arg())
}

/// Table of conjugated Glauber amplitudes φ̄_n(α) for n = 0..=n_max at each
/// point, built by the stable recurrence φ̄_{n+1} = φ̄_n ᾱ/√(n+1). Row-major:
/// `out[p * (n_max + 1) + n]`.
pub fn glauber_table(points: &[Complex64], n_max: usize) -> Vec<Complex64> {
    let cols = n_max + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); points.len() * cols];
    for (p, alpha) in points.iter().enumerate() {
        let row = &mut out[p * cols..(p + 1) * cols];
        row[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        let conj = alpha.conj();
        for n in 0..n_max {
            row[n + 1] = row[n] * conj / ((n + 1) as f64).sqrt();
        }
    }
    out
}

/// Joint Husimi density in the exact spin description, Φ(α, z).
pub fn husimi_exact(gs: &GroundState, alpha: Complex64, z: Complex64) -> f64 {
    let n_cut = gs.params.n_cut;
    let two_j = gs.params.two_j;
    let field: Vec<Complex64> = (0..=n_cut)
        .map(|n| glauber_amplitude(n, alpha).conj())
        .collect();
    let spin: Vec<Complex64> = (0..=two_j as usize)
        .map(|k| spin_amplitude(k, z, two_j).conj())
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, f) in field.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (k, s) in spin.iter().enumerate() {
            row += gs.coeffs[(n, k)] * s;
        }
        acc += f * row;
    }
    acc.norm_sqr()
}

/// Joint Husimi density in the flat contracted description, Φ(α, β).
pub fn husimi_flat(gs: &GroundState, p: &PhasePoint) -> f64 {
    let n_cut = gs.params.n_cut;
    let span = gs.params.two_j as usize + 1;
    let fa = glauber_table(&[p.alpha()], n_cut);
    let fb = glauber_table(&[p.beta()], span - 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, f) in fa.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (k, b) in fb.iter().enumerate() {
            row += gs.coeffs[(n, k)] * b;
        }
        acc += f * row;
    }
    acc.norm_sqr()
}

/// ∫ Φ d²α d²β / π² of the flat Husimi density, via the measure engine.
pub fn check_normalization(
    gs: &GroundState,
    quad: &crate::quad::QuadratureSpec,
) -> crate::Result<f64> {
    crate::measures::husimi_norm(gs, quad)
}

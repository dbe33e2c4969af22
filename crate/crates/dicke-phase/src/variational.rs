//! Variational channel: parity-symmetrized products of field and spin
//! coherent states, their energy surfaces, equilibrium configuration, and
//! the closed-form Husimi distribution, marginals, moments, wavefunctions,
//! and Husimi zero lines of the even (cat) state.
//!
//! The mean-field energy surface over a product |α⟩⊗|z⟩ is
//!
//!   ℋ(α, z) = ω|α|² + jω₀(|z|²−1)/(|z|²+1) + λ√(2j)(α+ᾱ)(z+z̄)/(1+|z|²),
//!
//! minimized on the real slice by (α_e, z_e): below the critical coupling
//! λ_c = √(ωω₀)/2 the minimum sits at the origin; above it,
//!
//!   z_e = √((μ−1/μ)/(μ+1/μ)),  μ = λ/λ_c,
//!   α_e = −2λ√(2j) z_e / (ω(1+z_e²)),  β_e = √(2j) z_e,
//!
//! where β_e is the flat (contracted) spin displacement. The two degenerate
//! minima ±(α_e, z_e) are superposed into parity eigenstates
//! |ψ±⟩ ∝ |α_e, z_e⟩ ± |−α_e, −z_e⟩, and every observable of the even state
//! has a closed form in ρ = α_e² + β_e².

use num_complex::Complex64;
use serde::Serialize;

use crate::coherent::PhasePoint;
use crate::error::Error;
use crate::measures::{MarginalPair, SlabDensity};
use crate::params::DickeParams;
use crate::special::LnFactorial;
use crate::Result;

use std::f64::consts::PI;

/// Ground-state phase of the model at given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Normal,
    Superradiant,
}

/// Stationary point of the mean-field energy surface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquilibriumConfig {
    /// Field displacement (real; ≤ 0 by the sign convention of the minimum).
    pub alpha_e: f64,
    /// Spin stereographic coordinate (real, in [0, 1)).
    pub z_e: f64,
    /// Flat spin displacement β_e = √(2j) z_e.
    pub beta_e: f64,
    pub phase: Phase,
}

impl EquilibriumConfig {
    /// ρ = α_e² + β_e², the single parameter of every cat closed form.
    pub fn rho(&self) -> f64 {
        self.alpha_e * self.alpha_e + self.beta_e * self.beta_e
    }
}

/// Minimize the mean-field surface: origin below λ_c, the displaced pair
/// above it.
pub fn equilibrium(params: &DickeParams) -> EquilibriumConfig {
    let mu = params.lambda / params.critical_coupling();
    if mu <= 1.0 {
        return EquilibriumConfig {
            alpha_e: 0.0,
            z_e: 0.0,
            beta_e: 0.0,
            phase: Phase::Normal,
        };
    }
    let z_e = ((mu - 1.0 / mu) / (mu + 1.0 / mu)).sqrt();
    let sqrt_2j = (params.two_j as f64).sqrt();
    let alpha_e = -2.0 * params.lambda * sqrt_2j * z_e / (params.omega * (1.0 + z_e * z_e));
    EquilibriumConfig {
        alpha_e,
        z_e,
        beta_e: sqrt_2j * z_e,
        phase: Phase::Superradiant,
    }
}

/// Mean-field energy surface over the product coherent state |α⟩⊗|z⟩.
pub fn energy_surface(params: &DickeParams, alpha: Complex64, z: Complex64) -> f64 {
    let j = params.j();
    let u = z.norm_sqr();
    let field = params.omega * alpha.norm_sqr();
    let spin = j * params.omega0 * (u - 1.0) / (u + 1.0);
    let coupling =
        params.lambda * (params.two_j as f64).sqrt() * (2.0 * alpha.re) * (2.0 * z.re) / (1.0 + u);
    field + spin + coupling
}

/// Parity branch of the symmetrized ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityBranch {
    Even,
    Odd,
}

impl ParityBranch {
    fn sign(self) -> f64 {
        match self {
            ParityBranch::Even => 1.0,
            ParityBranch::Odd => -1.0,
        }
    }
}

/// ⟨α, z|(−α, −z)⟩: the overlap of the two superposed branches.
fn branch_overlap(params: &DickeParams, alpha: Complex64, z: Complex64) -> f64 {
    let u = z.norm_sqr();
    let r = (1.0 - u) / (1.0 + u);
    (-2.0 * alpha.norm_sqr()).exp() * r.powi(params.two_j as i32)
}

/// Energy of the parity-projected ansatz,
/// ℋ_± = (ℋ(α, z) ± 𝒞(α, z)) / (1 ± ⟨α, z|−α, −z⟩),
/// where 𝒞 is the real cross matrix element between the two branches.
pub fn energy_surface_pm(
    params: &DickeParams,
    alpha: Complex64,
    z: Complex64,
    branch: ParityBranch,
) -> Result<f64> {
    let j = params.j();
    let u = z.norm_sqr();
    let r = (1.0 - u) / (1.0 + u);
    let two_j = params.two_j as i32;
    // 𝒞 = ⟨α,z|H|−α,−z⟩ expressed through r-powers so |z| → 1 stays finite:
    //   e^{−2|α|²} [ −ω|α|² r^{2j} − jω₀ r^{2j−1}
    //                − 4λ√(2j) Im(α) Im(z) r^{2j−1}/(1+u) ].
    let gauss = (-2.0 * alpha.norm_sqr()).exp();
    let r_pow = r.powi(two_j);
    let r_pow_m1 = r.powi(two_j - 1);
    let cross = gauss
        * (-params.omega * alpha.norm_sqr() * r_pow
            - j * params.omega0 * r_pow_m1
            - 4.0 * params.lambda * (params.two_j as f64).sqrt() * alpha.im * z.im * r_pow_m1
                / (1.0 + u));
    let overlap = gauss * r_pow;
    let s = branch.sign();
    let denom = 1.0 + s * overlap;
    if denom.abs() < 1e-14 {
        return Err(Error::DegenerateAnsatz(format!(
            "branch norm vanishes at α = {alpha}, z = {z}"
        )));
    }
    Ok((energy_surface(params, alpha, z) + s * cross) / denom)
}

/// Residual ‖∇ℋ‖₂ at the equilibrium, by central differences over all four
/// real coordinates (α₁, α₂, z₁, z₂).
pub fn equilibrium_gradient_check(params: &DickeParams, h: f64) -> f64 {
    let eq = equilibrium(params);
    let f = |da1: f64, da2: f64, dz1: f64, dz2: f64| {
        energy_surface(
            params,
            Complex64::new(eq.alpha_e + da1, da2),
            Complex64::new(eq.z_e + dz1, dz2),
        )
    };
    let g = [
        (f(h, 0.0, 0.0, 0.0) - f(-h, 0.0, 0.0, 0.0)) / (2.0 * h),
        (f(0.0, h, 0.0, 0.0) - f(0.0, -h, 0.0, 0.0)) / (2.0 * h),
        (f(0.0, 0.0, h, 0.0) - f(0.0, 0.0, -h, 0.0)) / (2.0 * h),
        (f(0.0, 0.0, 0.0, h) - f(0.0, 0.0, 0.0, -h)) / (2.0 * h),
    ];
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Polish the even-branch energy on the real slice (α₂ = z₂ = 0) by
/// coordinate descent with golden-section line searches, starting from the
/// closed-form equilibrium. Returns (α₁, z₁, ℋ₊).
pub fn refine_equilibrium(params: &DickeParams, rounds: usize) -> (f64, f64, f64) {
    let eq = equilibrium(params);
    let value = |a: f64, z: f64| {
        energy_surface_pm(
            params,
            Complex64::new(a, 0.0),
            Complex64::new(z, 0.0),
            ParityBranch::Even,
        )
        .unwrap_or(f64::INFINITY)
    };
    let mut a = eq.alpha_e;
    let mut z = eq.z_e;
    let mut radius = 0.1 * (1.0 + a.abs().max(z.abs()));
    for _ in 0..rounds {
        a = golden_min(|t| value(t, z), a - radius, a + radius, 60);
        z = golden_min(|t| value(a, t), z - radius, z + radius, 60);
        radius *= 0.5;
    }
    (a, z, value(a, z))
}

// ---------------------------------------------------------------------------
// The even/odd cat state and its closed forms
// ---------------------------------------------------------------------------

/// A parity-projected coherent-product ansatz state at the equilibrium
/// configuration of the given parameters.
#[derive(Debug, Clone, Copy)]
pub struct AnsatzState {
    pub params: DickeParams,
    pub eq: EquilibriumConfig,
    pub branch: ParityBranch,
}

impl AnsatzState {
    pub fn new(params: &DickeParams, branch: ParityBranch) -> Result<Self> {
        params.validate()?;
        let eq = equilibrium(params);
        if branch == ParityBranch::Odd && eq.phase == Phase::Normal {
            return Err(Error::DegenerateAnsatz(
                "odd projection of the origin configuration has zero norm".into(),
            ));
        }
        Ok(Self {
            params: *params,
            eq,
            branch,
        })
    }

    pub fn even(params: &DickeParams) -> Result<Self> {
        Self::new(params, ParityBranch::Even)
    }

    pub fn rho(&self) -> f64 {
        self.eq.rho()
    }

    /// Squared norm 𝒩±² = 2(1 ± e^{−2ρ}) of the flat superposition.
    fn flat_norm_sq(&self) -> f64 {
        2.0 * (1.0 + self.branch.sign() * (-2.0 * self.rho()).exp())
    }
}

/// Flat-description Husimi density of the cat state:
/// Φ±(α, β) = [G₋ + G₊ ± 2 e^{−|α|²−|β|²−ρ} cos(2(α₂ α_e + β₂ β_e))] / 𝒩±²
/// with G∓ = e^{−(α₁∓α_e)²−α₂²−(β₁∓β_e)²−β₂²}.
pub fn ansatz_husimi_flat(st: &AnsatzState, p: &PhasePoint) -> f64 {
    let (ae, be) = (st.eq.alpha_e, st.eq.beta_e);
    let g_minus =
        (-(p.alpha1 - ae).powi(2) - p.alpha2.powi(2) - (p.beta1 - be).powi(2) - p.beta2.powi(2))
            .exp();
    let g_plus =
        (-(p.alpha1 + ae).powi(2) - p.alpha2.powi(2) - (p.beta1 + be).powi(2) - p.beta2.powi(2))
            .exp();
    let interference = 2.0
        * (-p.alpha1.powi(2) - p.alpha2.powi(2) - p.beta1.powi(2) - p.beta2.powi(2) - st.rho())
            .exp()
        * (2.0 * (p.alpha2 * ae + p.beta2 * be)).cos();
    ((g_minus + g_plus + st.branch.sign() * interference) / st.flat_norm_sq()).max(0.0)
}

/// Exact-description Husimi density Ψ±(α, z) of the cat state, from the
/// product coherent-state overlaps (no contraction).
pub fn ansatz_husimi_exact(st: &AnsatzState, alpha: Complex64, z: Complex64) -> f64 {
    let params = &st.params;
    let (ae, ze) = (st.eq.alpha_e, st.eq.z_e);
    let two_j = params.two_j as i32;
    // ⟨α|±α_e⟩ = exp(−|α|²/2 − α_e²/2 ± ᾱα_e).
    let field =
        |sign: f64| ((-0.5 * alpha.norm_sqr() - 0.5 * ae * ae) + alpha.conj() * (sign * ae)).exp();
    // ⟨z|±z_e⟩ = (1 ± z̄ z_e)^{2j} / ((1+|z|²)^j (1+z_e²)^j).
    let spin_den = ((1.0 + z.norm_sqr()) * (1.0 + ze * ze)).powf(params.j());
    let spin =
        |sign: f64| (Complex64::new(1.0, 0.0) + z.conj() * (sign * ze)).powi(two_j) / spin_den;
    let overlap = branch_overlap(params, Complex64::new(ae, 0.0), Complex64::new(ze, 0.0));
    let norm_sq = 2.0 * (1.0 + st.branch.sign() * overlap);
    let amp = field(1.0) * spin(1.0) + st.branch.sign() * field(-1.0) * spin(-1.0);
    amp.norm_sqr() / norm_sq
}

/// Closed-form participation ratio of the even cat state:
/// P = (1 + sech² ρ)/8.
pub fn analytic_ipr(params: &DickeParams) -> f64 {
    let rho = equilibrium(params).rho();
    (1.0 + rho.cosh().powi(-2)) / 8.0
}

/// Closed-form marginal participation ratios (P₁, P₂) of the even cat state,
/// written in decaying exponentials so arbitrarily large ρ stays finite:
/// with ζ = e^ρ,
/// P₁ = (2 + 4ζ^{3/2} + ζ² + ζ⁴)/(4(1+ζ²)²),
/// P₂ = (1 + ζ² + 4ζ^{5/2} + 2ζ⁴)/(4(1+ζ²)²).
pub fn analytic_marginal_ipr(params: &DickeParams) -> (f64, f64) {
    let rho = equilibrium(params).rho();
    let e2 = (-2.0 * rho).exp();
    let den = 4.0 * (1.0 + e2) * (1.0 + e2);
    let p1 = (2.0 * (-4.0 * rho).exp() + 4.0 * (-2.5 * rho).exp() + e2 + 1.0) / den;
    let p2 = ((-4.0 * rho).exp() + e2 + 4.0 * (-1.5 * rho).exp() + 2.0) / den;
    (p1, p2)
}

/// Closed-form marginals of the even cat state:
/// Φ₁(a, b) = [e^{−a²−b²−2ρ} + (G₋ + G₊)/2]/(1 + e^{−2ρ}) with
/// G∓ = e^{−(a∓α_e)²−(b∓β_e)²} (the cosh form, assembled from decaying
/// exponentials), and
/// Φ₂(a, b) = e^{−a²−b²}[1 + e^{−ρ} cos(2(aα_e + bβ_e))]/(1 + e^{−2ρ}).
pub fn analytic_marginal_husimi(st: &AnsatzState, pair: MarginalPair, a: f64, b: f64) -> f64 {
    assert_eq!(
        st.branch,
        ParityBranch::Even,
        "closed-form marginals are derived for the even branch"
    );
    let (ae, be) = (st.eq.alpha_e, st.eq.beta_e);
    let rho = st.rho();
    let den = 1.0 + (-2.0 * rho).exp();
    match pair {
        MarginalPair::Position => {
            let g_minus = (-(a - ae).powi(2) - (b - be).powi(2)).exp();
            let g_plus = (-(a + ae).powi(2) - (b + be).powi(2)).exp();
            (((-a * a - b * b - 2.0 * rho).exp() + 0.5 * (g_minus + g_plus)) / den).max(0.0)
        }
        MarginalPair::Momentum => {
            let osc = (-rho).exp() * (2.0 * (a * ae + b * be)).cos();
            ((-a * a - b * b).exp() * (1.0 + osc) / den).max(0.0)
        }
    }
}

/// Exact joint moment M_ν (integer ν ≥ 1) of the even cat state:
/// M_ν = ν^{−2} 𝒩^{−ν} Σ_{a+b+k=ν} ν!/(a!b!k!) Σ_{i≤k} C(k,i)
///        · exp(ρ[((a−b)² − (k−2i)²)/ν − ν]),
/// 𝒩 = 2(1 + e^{−2ρ}). Every exponent is ≤ 0, so any ρ is safe.
pub fn cat_moment(nu: u32, rho: f64) -> f64 {
    assert!(nu >= 1, "moment order must be at least 1");
    let nu_us = nu as usize;
    let nu_f = nu as f64;
    let lf = LnFactorial::new(nu_us);
    let mut ln_terms: Vec<(f64, f64)> = Vec::new();
    for a in 0..=nu_us {
        for b in 0..=(nu_us - a) {
            let k = nu_us - a - b;
            let ln_mult = lf.ln_fact(nu_us) - lf.ln_fact(a) - lf.ln_fact(b) - lf.ln_fact(k);
            let diff = (a as f64 - b as f64).powi(2);
            for i in 0..=k {
                let osc = (k as f64 - 2.0 * i as f64).powi(2);
                let ln = ln_mult + lf.ln_binomial(k, i) + rho * ((diff - osc) / nu_f - nu_f);
                ln_terms.push((1.0, ln));
            }
        }
    }
    let ln_norm = std::f64::consts::LN_2 + (-2.0 * rho).exp().ln_1p();
    crate::special::sum_signed_exp(&ln_terms) * (-nu_f * ln_norm - 2.0 * nu_f.ln()).exp()
}

/// Exact marginal moments of the even cat state (integer ν ≥ 1):
/// position pair:
///   M⁽¹⁾_ν = ν^{−1} (1+e^{−2ρ})^{−ν} Σ_{a+b+k=ν} ν!/(a!b!k!) 2^{−(a+b)}
///             · exp(−(a+b)ρ − 2kρ + (a−b)²ρ/ν),
/// momentum pair:
///   M⁽²⁾_ν = ν^{−1} (1+e^{−2ρ})^{−ν} Σ_k C(ν,k) 2^{−k} e^{−kρ}
///             Σ_{i≤k} C(k,i) e^{−(k−2i)²ρ/ν}.
pub fn cat_moment_marginal(pair: MarginalPair, nu: u32, rho: f64) -> f64 {
    assert!(nu >= 1, "moment order must be at least 1");
    let nu_us = nu as usize;
    let nu_f = nu as f64;
    let lf = LnFactorial::new(nu_us);
    let ln2 = std::f64::consts::LN_2;
    let mut ln_terms: Vec<(f64, f64)> = Vec::new();
    match pair {
        MarginalPair::Position => {
            for a in 0..=nu_us {
                for b in 0..=(nu_us - a) {
                    let k = nu_us - a - b;
                    let ln_mult = lf.ln_fact(nu_us) - lf.ln_fact(a) - lf.ln_fact(b) - lf.ln_fact(k);
                    let diff = (a as f64 - b as f64).powi(2);
                    let ln = ln_mult - (a + b) as f64 * ln2
                        + rho * (-((a + b) as f64) - 2.0 * k as f64 + diff / nu_f);
                    ln_terms.push((1.0, ln));
                }
            }
        }
        MarginalPair::Momentum => {
            for k in 0..=nu_us {
                let base = lf.ln_binomial(nu_us, k) - k as f64 * ln2 - k as f64 * rho;
                for i in 0..=k {
                    let osc = (k as f64 - 2.0 * i as f64).powi(2);
                    ln_terms.push((1.0, base + lf.ln_binomial(k, i) - osc * rho / nu_f));
                }
            }
        }
    }
    let ln_den = (-2.0 * rho).exp().ln_1p();
    crate::special::sum_signed_exp(&ln_terms) * (-nu_f * ln_den - nu_f.ln()).exp()
}

/// Thermodynamic-limit joint moment: ν^{−2} in the normal phase,
/// 2^{1−ν} ν^{−2} deep in the superradiant phase.
pub fn thermo_joint_moment(nu: f64, phase: Phase) -> f64 {
    match phase {
        Phase::Normal => nu.powi(-2),
        Phase::Superradiant => (2.0f64).powf(1.0 - nu) * nu.powi(-2),
    }
}

/// Thermodynamic-limit marginal moment.
pub fn thermo_marginal_moment(pair: MarginalPair, nu: f64, phase: Phase) -> f64 {
    match (pair, phase) {
        (MarginalPair::Position, Phase::Normal) => 1.0 / nu,
        (MarginalPair::Position, Phase::Superradiant) => (2.0f64).powf(1.0 - nu) / nu,
        (MarginalPair::Momentum, _) => 1.0 / nu,
    }
}

/// Thermodynamic-limit Wehrl entropy of the joint density: 2 in the normal
/// phase, 2 + ln 2 deep in the superradiant phase.
pub fn thermo_joint_wehrl(phase: Phase) -> f64 {
    match phase {
        Phase::Normal => 2.0,
        Phase::Superradiant => 2.0 + std::f64::consts::LN_2,
    }
}

/// Thermodynamic-limit Wehrl entropy of a marginal.
pub fn thermo_marginal_wehrl(pair: MarginalPair, phase: Phase) -> f64 {
    match (pair, phase) {
        (MarginalPair::Position, Phase::Normal) => 1.0,
        (MarginalPair::Position, Phase::Superradiant) => 1.0 + std::f64::consts::LN_2,
        (MarginalPair::Momentum, _) => 1.0,
    }
}

// ---------------------------------------------------------------------------
// Configuration-space wavefunctions of the even cat state
// ---------------------------------------------------------------------------

/// Position-space wavefunction of the even cat state:
/// ψ(x, y) = N [e^{−ω(x−x₀)²/2 − ω₀(y−y₀)²/2} + (x₀,y₀ → −x₀,−y₀)],
/// x₀ = √(2/ω) α_e, y₀ = √(2/ω₀) β_e,
/// N = (ωω₀)^{1/4} / (√π √(2(1+e^{−2ρ}))).
pub fn ansatz_wavefunction_position(st: &AnsatzState, x: f64, y: f64) -> Result<f64> {
    even_only(st)?;
    let p = &st.params;
    let x0 = (2.0 / p.omega).sqrt() * st.eq.alpha_e;
    let y0 = (2.0 / p.omega0).sqrt() * st.eq.beta_e;
    let norm = (p.omega * p.omega0).powf(0.25) / (PI.sqrt() * st.flat_norm_sq().sqrt());
    let lobe = |sx: f64| {
        (-0.5 * p.omega * (x - sx * x0).powi(2) - 0.5 * p.omega0 * (y - sx * y0).powi(2)).exp()
    };
    Ok(norm * (lobe(1.0) + lobe(-1.0)))
}

/// Momentum-space wavefunction of the even cat state:
/// ψ̃(p_x, p_y) = 2N (ωω₀)^{−1/2} e^{−p_x²/(2ω) − p_y²/(2ω₀)} cos(x₀p_x + y₀p_y).
/// Real and oscillatory: its nodes are the interference fringes.
pub fn ansatz_wavefunction_momentum(st: &AnsatzState, px: f64, py: f64) -> Result<f64> {
    even_only(st)?;
    let p = &st.params;
    let x0 = (2.0 / p.omega).sqrt() * st.eq.alpha_e;
    let y0 = (2.0 / p.omega0).sqrt() * st.eq.beta_e;
    let norm = (p.omega * p.omega0).powf(0.25) / (PI.sqrt() * st.flat_norm_sq().sqrt());
    Ok(2.0 * norm / (p.omega * p.omega0).sqrt()
        * (-0.5 * px * px / p.omega - 0.5 * py * py / p.omega0).exp()
        * (x0 * px + y0 * py).cos())
}

fn even_only(st: &AnsatzState) -> Result<()> {
    if st.branch != ParityBranch::Even {
        return Err(Error::DegenerateAnsatz(
            "closed-form wavefunctions are implemented for the even branch".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Husimi zero lines
// ---------------------------------------------------------------------------

/// A rectangular window [a_lo, a_hi] × [b_lo, b_hi] in one marginal plane,
/// a = α-coordinate, b = β-coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
}

impl Cell {
    pub fn new(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> Result<Self> {
        if !(a_hi > a_lo && b_hi > b_lo) || ![a_lo, a_hi, b_lo, b_hi].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidParams(format!(
                "degenerate cell [{a_lo}, {a_hi}] × [{b_lo}, {b_hi}]"
            )));
        }
        Ok(Self {
            a_lo,
            a_hi,
            b_lo,
            b_hi,
        })
    }

    /// The symmetric unit window [−1, 1]².
    pub fn unit() -> Self {
        Self {
            a_lo: -1.0,
            a_hi: 1.0,
            b_lo: -1.0,
            b_hi: 1.0,
        }
    }
}

/// One exact zero line of the even cat Husimi distribution, clipped to a
/// cell: a(b) = slope · b + intercept for b in the stored segment.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLine {
    pub space: MarginalPair,
    /// Fringe index l (0 for the single position-plane line).
    pub fringe_index: i64,
    pub slope: f64,
    pub intercept: f64,
    /// Endpoints (a, b), ordered by ascending b.
    pub segment: [(f64, f64); 2],
}

/// Clip the line a = slope·b + intercept to the closed cell; `None` when the
/// intersection is empty or a single point.
fn clip_line(slope: f64, intercept: f64, cell: &Cell) -> Option<[(f64, f64); 2]> {
    let (mut b_lo, mut b_hi) = (cell.b_lo, cell.b_hi);
    if slope == 0.0 {
        if intercept < cell.a_lo || intercept > cell.a_hi {
            return None;
        }
    } else {
        let t1 = (cell.a_lo - intercept) / slope;
        let t2 = (cell.a_hi - intercept) / slope;
        b_lo = b_lo.max(t1.min(t2));
        b_hi = b_hi.min(t1.max(t2));
    }
    // IEEE min/max absorb NaN above, so the comparison is total here.
    if b_hi <= b_lo {
        return None;
    }
    Some([
        (slope * b_lo + intercept, b_lo),
        (slope * b_hi + intercept, b_hi),
    ])
}

/// Exact zero lines of the even cat state inside a plane cell.
///
/// The flat amplitude is ∝ e^{…} cosh(ᾱα_e + β̄β_e); it vanishes where the
/// real part α₁α_e + β₁β_e = 0 *and* the imaginary part
/// α₂α_e + β₂β_e = −π(l + 1/2). In the position plane this is the single
/// line α₁ = −(β_e/α_e)β₁; in the momentum plane it is the fringe family
/// α₂ = −(β_e/α_e)β₂ − π(2l+1)/(2α_e), l ∈ ℤ. The normal phase has no zeros.
pub fn husimi_zero_lines(params: &DickeParams, cell: &Cell, space: MarginalPair) -> Vec<ZeroLine> {
    let eq = equilibrium(params);
    if eq.phase == Phase::Normal || eq.alpha_e == 0.0 {
        return Vec::new();
    }
    let slope = -eq.beta_e / eq.alpha_e;
    match space {
        MarginalPair::Position => clip_line(slope, 0.0, cell)
            .map(|segment| ZeroLine {
                space,
                fringe_index: 0,
                slope,
                intercept: 0.0,
                segment,
            })
            .into_iter()
            .collect(),
        MarginalPair::Momentum => {
            // Intercept range over the cell: c = a − slope·b at the corners.
            let c_corners = [
                cell.a_lo - slope * cell.b_lo,
                cell.a_lo - slope * cell.b_hi,
                cell.a_hi - slope * cell.b_lo,
                cell.a_hi - slope * cell.b_hi,
            ];
            let c_min = c_corners.iter().cloned().fold(f64::INFINITY, f64::min);
            let c_max = c_corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // c_l = −π(2l+1)/(2α_e) monotone in l; map the range back to l.
            let t_of_c = |c: f64| (-2.0 * eq.alpha_e * c / PI - 1.0) / 2.0;
            let (t1, t2) = (t_of_c(c_min), t_of_c(c_max));
            let l_lo = t1.min(t2).ceil() as i64;
            let l_hi = t1.max(t2).floor() as i64;
            let mut lines = Vec::new();
            for l in l_lo..=l_hi {
                let intercept = -PI * (2 * l + 1) as f64 / (2.0 * eq.alpha_e);
                if let Some(segment) = clip_line(slope, intercept, cell) {
                    lines.push(ZeroLine {
                        space,
                        fringe_index: l,
                        slope,
                        intercept,
                        segment,
                    });
                }
            }
            lines
        }
    }
}

/// Render zero lines in the tabular layout used by the command-line tool.
pub fn zero_lines_csv(lines: &[ZeroLine]) -> String {
    let mut out = String::from("space,l,slope,intercept,seg_a_lo,seg_b_lo,seg_a_hi,seg_b_hi\n");
    for line in lines {
        let space = match line.space {
            MarginalPair::Position => "position",
            MarginalPair::Momentum => "momentum",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            space,
            line.fringe_index,
            crate::measures::fmt_f64(line.slope),
            crate::measures::fmt_f64(line.intercept),
            crate::measures::fmt_f64(line.segment[0].0),
            crate::measures::fmt_f64(line.segment[0].1),
            crate::measures::fmt_f64(line.segment[1].0),
            crate::measures::fmt_f64(line.segment[1].1),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Slab source for the quadrature engine
// ---------------------------------------------------------------------------

/// The even cat Husimi density as a slab-evaluable grid source, with the
/// per-axis factors of the closed form hoisted out of the inner loop.
pub struct VariationalDensity {
    alpha_e: f64,
    beta_e: f64,
    rho: f64,
    norm_sq: f64,
}

impl VariationalDensity {
    pub fn new(st: &AnsatzState) -> Result<Self> {
        even_only(st)?;
        Ok(Self {
            alpha_e: st.eq.alpha_e,
            beta_e: st.eq.beta_e,
            rho: st.rho(),
            norm_sq: st.flat_norm_sq(),
        })
    }
}

impl SlabDensity for VariationalDensity {
    fn displacement(&self) -> (f64, f64) {
        (self.alpha_e.abs(), self.beta_e.abs())
    }

    fn fill_slab(&self, _i1: usize, a1: f64, a2: &[f64], b1: &[f64], b2: &[f64], out: &mut [f64]) {
        let n2 = a2.len();
        let n3 = b1.len();
        let n4 = b2.len();
        let (ae, be) = (self.alpha_e, self.beta_e);
        let exp_m_rho = (-self.rho).exp();
        let inv_norm = 1.0 / self.norm_sq;

        // α-plane factors at fixed α₁ = a1.
        let ea_minus = -(a1 - ae) * (a1 - ae);
        let ea_plus = -(a1 + ae) * (a1 + ae);
        let ea_center = -a1 * a1;
        let mut xm = vec![0.0; n2];
        let mut xp = vec![0.0; n2];
        let mut xg = vec![0.0; n2];
        let mut ca = vec![0.0; n2];
        let mut sa = vec![0.0; n2];
        for (i, &t) in a2.iter().enumerate() {
            let e = -t * t;
            xm[i] = (ea_minus + e).exp();
            xp[i] = (ea_plus + e).exp();
            xg[i] = (ea_center + e).exp();
            let (s, c) = (2.0 * t * ae).sin_cos();
            ca[i] = c;
            sa[i] = s;
        }
        // β₂ factors.
        let mut eb2 = vec![0.0; n4];
        let mut cb = vec![0.0; n4];
        let mut sb = vec![0.0; n4];
        for (i, &t) in b2.iter().enumerate() {
            eb2[i] = (-t * t).exp();
            let (s, c) = (2.0 * t * be).sin_cos();
            cb[i] = c;
            sb[i] = s;
        }

        for (i2, _) in a2.iter().enumerate() {
            for (i3, &y1) in b1.iter().enumerate() {
                let em1 = (-(y1 - be) * (y1 - be)).exp();
                let ep1 = (-(y1 + be) * (y1 + be)).exp();
                let eg1 = (-y1 * y1).exp();
                // Lobes are β₂-independent apart from the shared e^{−β₂²}.
                let lobes = xm[i2] * em1 + xp[i2] * ep1;
                let osc = 2.0 * exp_m_rho * xg[i2] * eg1;
                let osc_c = osc * ca[i2];
                let osc_s = osc * sa[i2];
                let row = &mut out[(i2 * n3 + i3) * n4..(i2 * n3 + i3 + 1) * n4];
                for i4 in 0..n4 {
                    let v = eb2[i4] * (lobes + osc_c * cb[i4] - osc_s * sb[i4]) * inv_norm;
                    row[i4] = if v > 0.0 { v } else { 0.0 };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{density_measures, plane_measures};
    use crate::quad::QuadratureSpec;
    use approx::assert_relative_eq;

    fn params(lambda: f64, two_j: u32) -> DickeParams {
        DickeParams::new(1.0, 1.0, lambda, two_j, 10).unwrap()
    }

    #[test]
    fn equilibrium_below_critical_is_origin() {
        for lambda in [0.0, 0.2, 0.5] {
            let eq = equilibrium(&params(lambda, 20));
            assert_eq!(eq.alpha_e, 0.0);
            assert_eq!(eq.beta_e, 0.0);
            assert_eq!(eq.phase, Phase::Normal);
        }
    }

    #[test]
    fn equilibrium_reference_configuration() {
        // ω = ω₀ = 1 → λ_c = 1/2; λ = 1 → μ = 2: z_e² = 3/5,
        // β_e = √20·√0.6 = √12, α_e = −2·√20·√0.6/1.6 = −√75/2.
        let eq = equilibrium(&params(1.0, 20));
        assert_eq!(eq.phase, Phase::Superradiant);
        assert_relative_eq!(eq.z_e, (0.6f64).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(eq.beta_e, (12.0f64).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(eq.alpha_e, -4.330127018922193, epsilon = 1e-12);
        assert_relative_eq!(eq.rho(), 30.75, epsilon = 1e-12);
    }

    #[test]
    fn surface_minimum_has_known_depth() {
        // At the equilibrium the surface equals −jω₀(μ² + μ^{−2})/2.
        for (lambda, two_j) in [(1.0, 20), (0.75, 10), (2.0, 14)] {
            let p = params(lambda, two_j);
            let eq = equilibrium(&p);
            let val = energy_surface(
                &p,
                Complex64::new(eq.alpha_e, 0.0),
                Complex64::new(eq.z_e, 0.0),
            );
            let mu = p.lambda / p.critical_coupling();
            let expect = -p.j() * p.omega0 * (mu * mu + 1.0 / (mu * mu)) / 2.0;
            assert_relative_eq!(val, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_equilibrium() {
        for (lambda, two_j) in [(0.3, 20), (0.75, 20), (1.0, 20), (1.5, 8)] {
            let g = equilibrium_gradient_check(&params(lambda, two_j), 1e-4);
            assert!(g < 1e-6, "gradient {g} at λ = {lambda}");
        }
    }

    #[test]
    fn origin_projected_energy_matches_reference() {
        // ℋ(0, 0) = −jω₀ and the even projection leaves it unchanged.
        let p = params(0.4, 20);
        let origin_a = Complex64::new(0.0, 0.0);
        assert_relative_eq!(energy_surface(&p, origin_a, origin_a), -10.0);
        let even = energy_surface_pm(&p, origin_a, origin_a, ParityBranch::Even).unwrap();
        assert_relative_eq!(even, -10.0, epsilon = 1e-12);
        // The odd projection is singular at the origin.
        match energy_surface_pm(&p, origin_a, origin_a, ParityBranch::Odd) {
            Err(Error::DegenerateAnsatz(_)) => {}
            other => panic!("expected degenerate odd branch, got {other:?}"),
        }
    }

    #[test]
    fn projection_splits_branches_near_threshold() {
        // Where the lobes still overlap, the even branch digs deeper than
        // both the product surface and the odd branch.
        let p = params(0.55, 10);
        let eq = equilibrium(&p);
        let alpha = Complex64::new(eq.alpha_e, 0.0);
        let z = Complex64::new(eq.z_e, 0.0);
        let plain = energy_surface(&p, alpha, z);
        let even = energy_surface_pm(&p, alpha, z, ParityBranch::Even).unwrap();
        let odd = energy_surface_pm(&p, alpha, z, ParityBranch::Odd).unwrap();
        assert!(even < plain, "even {even} not below product {plain}");
        assert!(plain < odd, "product {plain} not below odd {odd}");
    }

    #[test]
    fn refinement_does_not_move_far_from_closed_form() {
        let p = params(0.8, 20);
        let eq = equilibrium(&p);
        let (a, z, e_ref) = refine_equilibrium(&p, 8);
        let e_eq = energy_surface_pm(
            &p,
            Complex64::new(eq.alpha_e, 0.0),
            Complex64::new(eq.z_e, 0.0),
            ParityBranch::Even,
        )
        .unwrap();
        assert!(e_ref <= e_eq + 1e-12);
        assert!(
            (a - eq.alpha_e).abs() < 0.05,
            "α moved to {a} from {}",
            eq.alpha_e
        );
        assert!((z - eq.z_e).abs() < 0.05, "z moved to {z} from {}", eq.z_e);
    }

    #[test]
    fn flat_density_normalizes_and_matches_closed_forms() {
        let p = params(0.8, 10);
        let st = AnsatzState::even(&p).unwrap();
        let density = VariationalDensity::new(&st).unwrap();
        // Halved spacing: the Φ⁴ integrand is the narrowest feature and sets
        // the truncation floor of the default grid.
        let quad =
            QuadratureSpec::trapezoid_for_displacement(st.eq.alpha_e.abs().max(st.eq.beta_e.abs()))
                .doubled();
        let m = density_measures(&density, &quad, &[2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(m.norm, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m.p, analytic_ipr(&p), max_relative = 1e-8);
        let (p1, p2) = analytic_marginal_ipr(&p);
        assert_relative_eq!(m.p1, p1, max_relative = 1e-8);
        assert_relative_eq!(m.p2, p2, max_relative = 1e-8);
        let rho = st.rho();
        assert_relative_eq!(
            m.moment(3.0).unwrap(),
            cat_moment(3, rho),
            max_relative = 1e-7
        );
        assert_relative_eq!(
            m.moment(4.0).unwrap(),
            cat_moment(4, rho),
            max_relative = 1e-7
        );
    }

    #[test]
    fn closed_form_marginals_match_grid_marginals() {
        let p = params(0.55, 4);
        let st = AnsatzState::even(&p).unwrap();
        let density = VariationalDensity::new(&st).unwrap();
        let quad = QuadratureSpec::trapezoid_for_displacement(1.0);
        let m = density_measures(&density, &quad, &[2.0]).unwrap();
        let g1 = &m.marginal1;
        for (ia, &a) in g1.axis_a.points.iter().enumerate().step_by(5) {
            for (ib, &b) in g1.axis_b.points.iter().enumerate().step_by(7) {
                assert_relative_eq!(
                    g1.values[(ia, ib)],
                    analytic_marginal_husimi(&st, MarginalPair::Position, a, b),
                    epsilon = 1e-9
                );
            }
        }
        let g2 = &m.marginal2;
        for (ia, &a) in g2.axis_a.points.iter().enumerate().step_by(6) {
            for (ib, &b) in g2.axis_b.points.iter().enumerate().step_by(6) {
                assert_relative_eq!(
                    g2.values[(ia, ib)],
                    analytic_marginal_husimi(&st, MarginalPair::Momentum, a, b),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn closed_form_marginal_measures_match_quadrature() {
        let p = params(0.55, 4);
        let st = AnsatzState::even(&p).unwrap();
        let axis = QuadratureSpec::trapezoid_for_displacement(1.0)
            .doubled()
            .axis()
            .unwrap();
        let rho = st.rho();
        for (pair, which) in [
            (MarginalPair::Position, 0usize),
            (MarginalPair::Momentum, 1),
        ] {
            let pm = plane_measures(
                |a, b| analytic_marginal_husimi(&st, pair, a, b),
                &axis,
                &axis,
                PI,
                &[2.0, 3.0],
            );
            assert_relative_eq!(pm.norm, 1.0, epsilon = 1e-10);
            let (p1, p2) = analytic_marginal_ipr(&p);
            let expect_p = if which == 0 { p1 } else { p2 };
            assert_relative_eq!(pm.p, expect_p, max_relative = 1e-9);
            assert_relative_eq!(
                pm.moments[0].1,
                cat_moment_marginal(pair, 2, rho),
                max_relative = 1e-9
            );
            assert_relative_eq!(
                pm.moments[1].1,
                cat_moment_marginal(pair, 3, rho),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn cat_moment_reference_values() {
        // Frozen against direct 4-D quadrature of the closed-form density.
        assert_relative_eq!(cat_moment(2, 1.3), 0.1571791496, max_relative = 1e-8);
        assert_relative_eq!(cat_moment(3, 1.3), 0.0420830095, max_relative = 1e-8);
        assert_relative_eq!(cat_moment(4, 1.3), 0.0139355693, max_relative = 1e-8);
        assert_relative_eq!(cat_moment(2, 3.46), 0.1254929406, max_relative = 1e-8);
        assert_relative_eq!(cat_moment(3, 3.46), 0.0278868992, max_relative = 1e-8);
        assert_relative_eq!(cat_moment(4, 3.46), 0.0078476642, max_relative = 1e-8);
    }

    #[test]
    fn cat_moments_interpolate_between_limits() {
        for nu in [2u32, 3, 4] {
            let nuf = nu as f64;
            assert_relative_eq!(cat_moment(nu, 0.0), nuf.powi(-2), max_relative = 1e-12);
            assert_relative_eq!(
                cat_moment(nu, 4000.0),
                thermo_joint_moment(nuf, Phase::Superradiant),
                max_relative = 1e-12
            );
            assert_relative_eq!(cat_moment(1, 2.7), 1.0, max_relative = 1e-12);
            for pair in [MarginalPair::Position, MarginalPair::Momentum] {
                assert_relative_eq!(
                    cat_moment_marginal(pair, nu, 0.0),
                    1.0 / nuf,
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    cat_moment_marginal(pair, nu, 4000.0),
                    thermo_marginal_moment(pair, nuf, Phase::Superradiant),
                    max_relative = 1e-12
                );
                assert_relative_eq!(cat_moment_marginal(pair, 1, 1.9), 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn deep_superradiant_ipr_limits() {
        let p = params(3.0, 200);
        let (p1, p2) = analytic_marginal_ipr(&p);
        assert_relative_eq!(analytic_ipr(&p), 0.125, max_relative = 1e-10);
        assert_relative_eq!(p1, 0.25, max_relative = 1e-10);
        assert_relative_eq!(p2, 0.5, max_relative = 1e-10);
        // And at λ = 0 the Gaussian values.
        let p0 = params(0.2, 200);
        let (q1, q2) = analytic_marginal_ipr(&p0);
        assert_relative_eq!(analytic_ipr(&p0), 0.25, max_relative = 1e-12);
        assert_relative_eq!(q1, 0.5, max_relative = 1e-12);
        assert_relative_eq!(q2, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn exact_and_flat_descriptions_agree_for_large_spin() {
        // The contraction error at fixed z√(2j) shrinks with j.
        let p = DickeParams::new(1.0, 1.0, 0.6, 100, 10).unwrap();
        let st = AnsatzState::even(&p).unwrap();
        let sqrt2j = (p.two_j as f64).sqrt();
        let mut worst: f64 = 0.0;
        for (a1, a2, z1, z2) in [
            (st.eq.alpha_e, 0.0, st.eq.z_e, 0.0),
            (st.eq.alpha_e + 0.3, 0.2, st.eq.z_e + 0.01, 0.015),
            (0.0, 0.5, 0.02, -0.01),
        ] {
            let z = Complex64::new(z1, z2);
            let beta = sqrt2j * z;
            let exact = ansatz_husimi_exact(&st, Complex64::new(a1, a2), z);
            let flat = ansatz_husimi_flat(&st, &PhasePoint::new(a1, a2, beta.re, beta.im));
            worst = worst.max((exact - flat).abs());
        }
        assert!(worst < 0.02, "contraction gap {worst} too large at j = 50");
    }

    #[test]
    fn odd_branch_of_normal_phase_is_rejected() {
        match AnsatzState::new(&params(0.3, 20), ParityBranch::Odd) {
            Err(Error::DegenerateAnsatz(_)) => {}
            other => panic!("expected degenerate ansatz, got {other:?}"),
        }
    }

    #[test]
    fn wavefunctions_are_normalized_and_fourier_paired() {
        use crate::special::gauss_hermite;
        let p = DickeParams::new(1.0, 2.0, 0.9, 12, 10).unwrap();
        let st = AnsatzState::even(&p).unwrap();
        let (nodes, weights) = gauss_hermite(90);
        // Scale each axis to unit frequency so the folded rule matches the
        // Gaussian decay of the integrand on both axes.
        let (sx, sy) = (p.omega.sqrt().recip(), p.omega0.sqrt().recip());
        let mut pos = 0.0;
        let mut mom = 0.0;
        for (x, wx) in nodes.iter().zip(&weights) {
            for (y, wy) in nodes.iter().zip(&weights) {
                let psi = ansatz_wavefunction_position(&st, sx * x, sy * y).unwrap();
                pos += wx * wy * psi * psi * sx * sy;
                let ft = ansatz_wavefunction_momentum(&st, x / sx, y / sy).unwrap();
                mom += wx * wy * ft * ft / (sx * sy);
            }
        }
        assert_relative_eq!(pos, 1.0, epsilon = 1e-6);
        assert_relative_eq!(mom, 1.0, epsilon = 1e-6);
        // Nodes of the momentum wavefunction sit at x₀p_x + y₀p_y = π/2 + lπ.
        let x0 = (2.0 / p.omega).sqrt() * st.eq.alpha_e;
        let px_node = (PI / 2.0) / x0;
        let at_node = ansatz_wavefunction_momentum(&st, px_node, 0.0).unwrap();
        assert!(at_node.abs() < 1e-14, "fringe node not a zero: {at_node}");
    }

    #[test]
    fn zero_line_counts_in_the_unit_window() {
        let cases = [
            (0.6, 20u32, 2usize),
            (0.6, 200, 8),
            (10.0, 20, 32),
            (10.0, 200, 100),
        ];
        for (lambda, two_j, expect) in cases {
            let p = DickeParams::new(1.0, 1.0, lambda, two_j, 10).unwrap();
            let lines = husimi_zero_lines(&p, &Cell::unit(), MarginalPair::Momentum);
            assert_eq!(
                lines.len(),
                expect,
                "momentum fringe count at λ = {lambda}, 2j = {two_j}"
            );
            // Fringe indices are sorted and contiguous.
            for w in lines.windows(2) {
                assert_eq!(w[1].fringe_index, w[0].fringe_index + 1);
            }
            let pos = husimi_zero_lines(&p, &Cell::unit(), MarginalPair::Position);
            assert_eq!(pos.len(), 1);
            assert_eq!(pos[0].intercept, 0.0);
        }
        // Normal phase: no zeros anywhere.
        let p = params(0.3, 20);
        assert!(husimi_zero_lines(&p, &Cell::unit(), MarginalPair::Momentum).is_empty());
        assert!(husimi_zero_lines(&p, &Cell::unit(), MarginalPair::Position).is_empty());
    }

    #[test]
    fn sampled_zero_lines_annihilate_the_flat_density() {
        let p = params(1.0, 20);
        let st = AnsatzState::even(&p).unwrap();
        let cell = Cell::unit();
        // Momentum-plane fringes, sampled at the position-plane zero point
        // (α₁, β₁) = (0, 0).
        for line in husimi_zero_lines(&p, &cell, MarginalPair::Momentum) {
            for t in [0.0, 0.33, 0.8, 1.0] {
                let b = line.segment[0].1 + t * (line.segment[1].1 - line.segment[0].1);
                let a = line.slope * b + line.intercept;
                let v = ansatz_husimi_flat(&st, &PhasePoint::new(0.0, a, 0.0, b));
                assert!(v < 1e-12, "Φ₊ = {v} on a momentum fringe");
            }
        }
        // Position-plane line, sampled with (α₂, β₂) on the l = 0 fringe.
        let fringe_a2 = -PI / (2.0 * st.eq.alpha_e);
        for line in husimi_zero_lines(&p, &cell, MarginalPair::Position) {
            for t in [0.1, 0.5, 0.92] {
                let b = line.segment[0].1 + t * (line.segment[1].1 - line.segment[0].1);
                let a = line.slope * b + line.intercept;
                let v = ansatz_husimi_flat(&st, &PhasePoint::new(a, fringe_a2, b, 0.0));
                assert!(v < 1e-12, "Φ₊ = {v} on the position-plane line");
            }
        }
    }

    #[test]
    fn zero_line_csv_layout() {
        let p = params(1.0, 20);
        let lines = husimi_zero_lines(&p, &Cell::unit(), MarginalPair::Momentum);
        let csv = zero_lines_csv(&lines);
        let mut rows = csv.lines();
        assert_eq!(
            rows.next().unwrap(),
            "space,l,slope,intercept,seg_a_lo,seg_b_lo,seg_a_hi,seg_b_hi"
        );
        assert_eq!(rows.count(), lines.len());
        assert!(csv.contains("momentum"));
    }

    #[test]
    fn clipping_respects_the_closed_cell_convention() {
        let cell = Cell::unit();
        // A line through a corner only: single-point intersection => None.
        assert!(clip_line(1.0, 2.0, &cell).is_none());
        // A horizontal line along the top edge: full-width segment.
        let seg = clip_line(0.0, 1.0, &cell).unwrap();
        assert_eq!(seg[0], (1.0, -1.0));
        assert_eq!(seg[1], (1.0, 1.0));
        // A generic diagonal is clipped to positive length.
        let seg = clip_line(2.0, 0.5, &cell).unwrap();
        assert!(seg[1].1 > seg[0].1);
        assert!(seg
            .iter()
            .all(|(a, b)| (-1.0..=1.0).contains(a) && (-1.0..=1.0).contains(b)));
    }
}

//! Numerical primitives shared across the crate: log-factorials, orthonormal
//! Hermite functions, Gauss–Hermite and Gauss–Legendre nodes, compensated
//! summation, and signed log-sum-exp.

/// Cumulative table of ln(n!).
///
/// Factorials enter every coherent-state amplitude and binomial weight; the
/// photon cutoff and 2j both reach into the hundreds, so everything downstream
/// works with logarithms.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    /// Build the table for arguments `0..=n_max`.
    pub fn new(n_max: usize) -> Self {
        let mut table = Vec::with_capacity(n_max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for n in 1..=n_max {
            acc += (n as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    /// ln(n!). Panics if `n` exceeds the table size chosen at construction.
    #[inline]
    pub fn ln_fact(&self, n: usize) -> f64 {
        self.table[n]
    }

    /// ln C(n, k) for 0 ≤ k ≤ n.
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }

    /// Largest argument covered by the table.
    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }
}

/// Orthonormal Hermite functions ĥ₀(t), ..., ĥ_k_max(t).
///
/// ĥ_k(t) = (2^k k! √π)^{-1/2} H_k(t) e^{-t²/2} with ∫ ĥ_a ĥ_b dt = δ_ab.
/// The three-term recurrence on the *functions* (not the polynomials) keeps
/// every intermediate bounded by O(1), so degrees in the hundreds are stable.
pub fn hermite_functions(k_max: usize, t: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(k_max + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    h.push(h0);
    if k_max == 0 {
        return h;
    }
    h.push(std::f64::consts::SQRT_2 * t * h0);
    for k in 1..k_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// Gauss–Hermite nodes with *plain-measure* weights.
///
/// Returns `(x, w)` such that Σ w_i f(x_i) ≈ ∫ f(x) dx for integrands that
/// decay like a Gaussian. The classical Hermite weights (for weight function
/// e^{-x²}) are folded with e^{+x_i²} in log space, which stays finite for
/// n ≲ 350 in f64.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        // Standard initial guesses for the i-th largest root, then Newton.
        z = match i {
            0 => {
                let a = (2 * n + 1) as f64;
                a.sqrt() - 1.85575 * a.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // Orthonormal Hermite-polynomial recurrence (weight e^{-x²}).
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        // Classical weight 2/pp² folded with e^{+z²}, evaluated in log space.
        let lw = std::f64::consts::LN_2 - 2.0 * pp.abs().ln() + z * z;
        w[i] = lw.exp();
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // Nodes were filled from the largest down; return in ascending order.
    x.reverse();
    w.reverse();
    (x, w)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Kahan (compensated) accumulator.
///
/// Reductions over quadrature grids must be reproducible across worker counts,
/// so every reduction in the crate is an ordered Kahan sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    /// Fold another compensated sum in (ordered merge of partial sums).
    #[inline]
    pub fn merge(&mut self, other: KahanSum) {
        self.add(other.sum);
        self.add(-other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Σ sign_i · exp(ln_i) evaluated with a max-shift so that no intermediate
/// overflows; the terms may have mixed signs.
pub fn sum_signed_exp(terms: &[(f64, f64)]) -> f64 {
    let max_ln = terms
        .iter()
        .map(|&(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_ln == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    for &(sign, ln) in terms {
        acc.add(sign * (ln - max_ln).exp());
    }
    acc.value() * max_ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_factorial_matches_direct_products() {
        let lf = LnFactorial::new(20);
        let mut fact = 1.0f64;
        for n in 1..=20usize {
            fact *= n as f64;
            assert_relative_eq!(lf.ln_fact(n), fact.ln(), max_relative = 1e-14);
        }
        assert_eq!(lf.ln_fact(0), 0.0);
    }

    #[test]
    fn ln_binomial_matches_pascal() {
        let lf = LnFactorial::new(30);
        assert_relative_eq!(
            lf.ln_binomial(30, 15).exp(),
            155117520.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(lf.ln_binomial(5, 2).exp(), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn hermite_functions_low_orders() {
        // ĥ₀(t) = π^{-1/4} e^{-t²/2}, ĥ₁(t) = √2 t ĥ₀, ĥ₂ = (2t²-1)/√2 · ĥ₀.
        for &t in &[0.0, 0.7, -1.3, 2.4] {
            let h = hermite_functions(2, t);
            let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
            assert_relative_eq!(h[0], h0, max_relative = 1e-14);
            assert_relative_eq!(h[1], std::f64::consts::SQRT_2 * t * h0, epsilon = 1e-14);
            assert_relative_eq!(
                h[2],
                (2.0 * t * t - 1.0) / std::f64::consts::SQRT_2 * h0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn hermite_functions_orthonormal_under_gauss_hermite() {
        let (x, w) = gauss_hermite(60);
        for a in [0usize, 3, 7, 11] {
            for b in [0usize, 3, 7, 11] {
                let mut acc = KahanSum::new();
                for (xi, wi) in x.iter().zip(&w) {
                    let h = hermite_functions(11, *xi);
                    acc.add(wi * h[a] * h[b]);
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(acc.value(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gauss_hermite_two_points_analytic() {
        // For n=2 the e^{-x²} rule has nodes ±1/√2 and weights √π/2; folded
        // with e^{+x²} the plain-measure weights are (√π/2)·e^{1/2}.
        let (x, w) = gauss_hermite(2);
        assert_relative_eq!(x[0], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(x[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        let expect = 0.5 * std::f64::consts::PI.sqrt() * 0.5f64.exp();
        assert_relative_eq!(w[0], expect, max_relative = 1e-12);
        assert_relative_eq!(w[1], expect, max_relative = 1e-12);
    }

    #[test]
    fn gauss_hermite_integrates_gaussians() {
        let (x, w) = gauss_hermite(40);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        // ∫ e^{-x²} dx = √π
        let mut s0 = KahanSum::new();
        // ∫ x² e^{-x²} dx = √π/2
        let mut s2 = KahanSum::new();
        // Displaced packet: ∫ e^{-(x-1)²} dx = √π
        let mut sd = KahanSum::new();
        for (xi, wi) in x.iter().zip(&w) {
            s0.add(wi * (-xi * xi).exp());
            s2.add(wi * xi * xi * (-xi * xi).exp());
            sd.add(wi * (-(xi - 1.0) * (xi - 1.0)).exp());
        }
        assert_relative_eq!(s0.value(), sqrt_pi, max_relative = 1e-13);
        assert_relative_eq!(s2.value(), 0.5 * sqrt_pi, max_relative = 1e-12);
        assert_relative_eq!(sd.value(), sqrt_pi, max_relative = 1e-10);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(8);
        let mut s4 = KahanSum::new();
        let mut s9 = KahanSum::new();
        for (xi, wi) in x.iter().zip(&w) {
            s4.add(wi * xi.powi(4));
            s9.add(wi * xi.powi(9));
        }
        assert_relative_eq!(s4.value(), 2.0 / 5.0, max_relative = 1e-13);
        assert_relative_eq!(s9.value(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
    }

    #[test]
    fn kahan_recovers_cancellation_losses() {
        // 1 + 1e-16 added 10^7 times: naive f64 loses the small increments.
        let mut kahan = KahanSum::new();
        kahan.add(1.0);
        for _ in 0..10_000_000 {
            kahan.add(1e-16);
        }
        assert_relative_eq!(kahan.value(), 1.0 + 1e-9, max_relative = 1e-12);
    }

    #[test]
    fn signed_exp_sum_handles_mixed_signs_and_scale() {
        // e^{500}(1 - 1 + e^{-1}) with large shared scale.
        let terms = [(1.0, 500.0), (-1.0, 500.0), (1.0, 499.0)];
        let got = sum_signed_exp(&terms);
        assert_relative_eq!(got, 499.0f64.exp(), max_relative = 1e-13);
        assert_eq!(sum_signed_exp(&[]), 0.0);
    }
}

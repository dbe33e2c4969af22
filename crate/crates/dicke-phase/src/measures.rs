//! Phase-space measures: norms, moments, Rényi–Wehrl and Wehrl entropies,
//! marginal densities, and their factorization gaps.
//!
//! The joint density lives on a four-dimensional grid that is never
//! materialized: the engine streams one (α₂, β₁, β₂) slab per α₁ node,
//! reduces it on the spot, and merges the per-slab partials in a fixed
//! order. Numeric Husimi slabs are produced by dense matrix products over
//! the coherent-amplitude tables; closed-form densities fill slabs
//! pointwise. All reductions use compensated summation in a deterministic
//! order, so results are bit-identical for any worker count.

use ndarray::Array2;
use rayon::prelude::*;
use serde_json::json;

use crate::coherent::glauber_table;
use crate::error::Error;
use crate::ground::GroundState;
use crate::quad::{Axis1D, QuadratureSpec};
use crate::special::KahanSum;
use crate::Result;

use num_complex::Complex64;
use std::f64::consts::PI;

/// Default Rényi orders reported by sweeps.
pub const DEFAULT_NU: [f64; 5] = [0.5, 1.5, 2.0, 3.0, 4.0];
/// Densities below this threshold contribute exactly zero to Φ ln Φ.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Φ^ν with cheap paths for the common orders.
#[inline]
pub fn density_power(v: f64, nu: f64) -> f64 {
    if nu == 2.0 {
        v * v
    } else if nu == 1.0 {
        v
    } else if nu == 3.0 {
        v * v * v
    } else if nu == 4.0 {
        let s = v * v;
        s * s
    } else if nu == 0.5 {
        v.sqrt()
    } else if nu == 1.5 {
        v * v.sqrt()
    } else {
        v.powf(nu)
    }
}

/// −v ln v with the zero floor.
#[inline]
fn neg_v_ln_v(v: f64) -> f64 {
    if v > ENTROPY_FLOOR {
        -v * v.ln()
    } else {
        0.0
    }
}

/// A density the streaming engine can evaluate slab-by-slab.
pub trait SlabDensity: Sync {
    /// Largest packet-center magnitudes along the (α₁/α₂, β₁/β₂) axes; used
    /// to validate grid coverage before any work is done.
    fn displacement(&self) -> (f64, f64);

    /// Fill `out[(i2·n3 + i3)·n4 + i4] = Φ(a1, a2[i2], b1[i3], b2[i4])`
    /// for the slab at α₁-node index `i1`.
    fn fill_slab(&self, i1: usize, a1: f64, a2: &[f64], b1: &[f64], b2: &[f64], out: &mut [f64]);
}

/// Which coordinate pair a marginal keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalPair {
    /// Φ₁(α₁, β₁): the position-like quadratures survive.
    Position,
    /// Φ₂(α₂, β₂): the momentum-like quadratures survive.
    Momentum,
}

/// A marginal density sampled on its quadrature grid.
#[derive(Debug, Clone)]
pub struct MarginalGrid {
    pub axis_a: Axis1D,
    pub axis_b: Axis1D,
    /// values[(i_a, i_b)] = Φ_κ(a_i, b_i).
    pub values: Array2<f64>,
}

/// Scalar measures of a 2-D density under ∫ da db / divisor.
#[derive(Debug, Clone)]
pub struct PlaneMeasures {
    pub norm: f64,
    pub p: f64,
    pub w: f64,
    pub moments: Vec<(f64, f64)>,
}

/// Full measure set of one joint density.
#[derive(Debug, Clone)]
pub struct Measures {
    pub quad: QuadratureSpec,
    /// ∫ Φ d²α d²β / π² (the M₁ gate value).
    pub norm: f64,
    /// Requested (ν, M_ν) pairs, in request order.
    pub moments: Vec<(f64, f64)>,
    /// Participation ratio M₂.
    pub p: f64,
    /// Wehrl entropy −∫ Φ ln Φ / π².
    pub w: f64,
    pub marginal1: MarginalGrid,
    pub marginal2: MarginalGrid,
    pub p1: f64,
    pub w1: f64,
    pub p2: f64,
    pub w2: f64,
    pub m1_moments: Vec<(f64, f64)>,
    pub m2_moments: Vec<(f64, f64)>,
    /// Fraction of the total mass on each grid boundary
    /// (alpha1, alpha2, beta1, beta2).
    pub edge_fractions: [f64; 4],
}

impl Measures {
    /// Requested joint moment, if ν was in the request list (ν = 2 always is).
    pub fn moment(&self, nu: f64) -> Option<f64> {
        if nu == 2.0 {
            return Some(self.p);
        }
        self.moments.iter().find(|(q, _)| *q == nu).map(|(_, m)| *m)
    }

    /// Rényi–Wehrl entropy ln M_ν / (1 − ν) for a requested order.
    pub fn renyi(&self, nu: f64) -> Result<f64> {
        renyi_from_moment(
            nu,
            self.moment(nu).ok_or_else(|| {
                Error::MeasureDomain(format!("moment of order {nu} was not requested"))
            })?,
        )
    }

    /// (P − P₁P₂, W − W₁ − W₂): both vanish iff the marginals factorize.
    pub fn factorization_gap(&self) -> (f64, f64) {
        (self.p - self.p1 * self.p2, self.w - self.w1 - self.w2)
    }
}

/// ln M_ν / (1 − ν), guarding the ν → 1 pole and nonpositive orders.
pub fn renyi_from_moment(nu: f64, m_nu: f64) -> Result<f64> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::MeasureDomain(format!(
            "Rényi order must be positive, got {nu}"
        )));
    }
    if (nu - 1.0).abs() < 1e-9 {
        return Err(Error::MeasureDomain(
            "Rényi order 1 is the Wehrl limit; use the entropy directly".into(),
        ));
    }
    if m_nu.is_nan() || m_nu <= 0.0 {
        return Err(Error::MeasureDomain(format!(
            "moment M_{nu} = {m_nu} is not positive"
        )));
    }
    Ok(m_nu.ln() / (1.0 - nu))
}

// ---------------------------------------------------------------------------
// Streaming engine
// ---------------------------------------------------------------------------

struct SlabPartial {
    norm: f64,
    wehrl: f64,
    moments: Vec<f64>,
    phi1_row: Vec<f64>,
    phi2_part: Vec<f64>,
    edge_a2: f64,
    edge_b1: f64,
    edge_b2: f64,
}

/// Evaluate every measure of a slab-evaluable density on the given grid.
pub fn density_measures(
    density: &dyn SlabDensity,
    quad: &QuadratureSpec,
    nu_list: &[f64],
) -> Result<Measures> {
    quad.validate()?;
    let (disp_a, disp_b) = density.displacement();
    quad.validate_coverage(disp_a)?;
    quad.validate_coverage(disp_b)?;
    for &nu in nu_list {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::MeasureDomain(format!(
                "moment order {nu} must be positive and finite"
            )));
        }
    }

    let axis = quad.axis()?;
    let n = axis.len();
    let pts = &axis.points;
    let wts = &axis.weights;

    let partials: Vec<SlabPartial> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let mut slab = vec![0.0f64; n * n * n];
            density.fill_slab(i1, pts[i1], pts, pts, pts, &mut slab);
            reduce_slab(&slab, n, wts, nu_list)
        })
        .collect();

    // Ordered merge with compensated sums.
    let mut norm_k = KahanSum::new();
    let mut wehrl_k = KahanSum::new();
    let mut moment_k: Vec<KahanSum> = nu_list.iter().map(|_| KahanSum::new()).collect();
    let mut phi1 = Array2::zeros((n, n));
    let mut phi2_k: Vec<KahanSum> = vec![KahanSum::new(); n * n];
    let mut edge = [KahanSum::new(); 4];
    for (i1, part) in partials.iter().enumerate() {
        let w1 = wts[i1];
        norm_k.add(w1 * part.norm);
        wehrl_k.add(w1 * part.wehrl);
        for (acc, m) in moment_k.iter_mut().zip(&part.moments) {
            acc.add(w1 * m);
        }
        for i3 in 0..n {
            phi1[(i1, i3)] = part.phi1_row[i3] / PI;
        }
        for (acc, v) in phi2_k.iter_mut().zip(&part.phi2_part) {
            acc.add(w1 * v);
        }
        if i1 == 0 || i1 == n - 1 {
            edge[0].add(w1 * part.norm);
        }
        edge[1].add(w1 * part.edge_a2);
        edge[2].add(w1 * part.edge_b1);
        edge[3].add(w1 * part.edge_b2);
    }

    let total = norm_k.value();
    let norm = total / (PI * PI);
    let axis_names = ["alpha1", "alpha2", "beta1", "beta2"];
    let mut edge_fractions = [0.0; 4];
    for (i, e) in edge.iter().enumerate() {
        edge_fractions[i] = e.value() / total;
        let leaked = edge_fractions[i].abs();
        if leaked.is_nan() || leaked > quad.target_tol {
            return Err(Error::InsufficientCoverage {
                axis: axis_names[i],
                edge_fraction: edge_fractions[i],
                threshold: quad.target_tol,
            });
        }
    }
    let drift = (norm - 1.0).abs();
    if drift.is_nan() || drift > quad.target_tol {
        return Err(Error::NormGate {
            norm,
            tol: quad.target_tol,
        });
    }

    let mut phi2 = Array2::zeros((n, n));
    for i2 in 0..n {
        for i4 in 0..n {
            phi2[(i2, i4)] = phi2_k[i2 * n + i4].value() / PI;
        }
    }

    let moments: Vec<(f64, f64)> = nu_list
        .iter()
        .zip(&moment_k)
        .map(|(nu, m)| (*nu, m.value() / (PI * PI)))
        .collect();
    let p = match moments.iter().find(|(nu, _)| *nu == 2.0) {
        Some((_, m)) => *m,
        None => {
            // ν = 2 was not requested: one extra targeted pass is cheaper to
            // reason about than special-casing the hot loop; reuse Φ₂ logic.
            let extra = density_moment_only(density, &axis, 2.0);
            extra / (PI * PI)
        }
    };
    let w = wehrl_k.value() / (PI * PI);

    let pm1 = plane_reduce(&phi1, &axis, &axis, PI, nu_list);
    let pm2 = plane_reduce(&phi2, &axis, &axis, PI, nu_list);

    Ok(Measures {
        quad: *quad,
        norm,
        moments,
        p,
        w,
        marginal1: MarginalGrid {
            axis_a: axis.clone(),
            axis_b: axis.clone(),
            values: phi1,
        },
        marginal2: MarginalGrid {
            axis_a: axis.clone(),
            axis_b: axis.clone(),
            values: phi2,
        },
        p1: pm1.p,
        w1: pm1.w,
        p2: pm2.p,
        w2: pm2.w,
        m1_moments: pm1.moments,
        m2_moments: pm2.moments,
        edge_fractions,
    })
}

fn reduce_slab(slab: &[f64], n: usize, wts: &[f64], nu_list: &[f64]) -> SlabPartial {
    let mut norm_k = KahanSum::new();
    let mut wehrl_k = KahanSum::new();
    let mut moment_k: Vec<KahanSum> = nu_list.iter().map(|_| KahanSum::new()).collect();
    let mut phi1_row = vec![KahanSum::new(); n];
    let mut phi2_part = vec![0.0f64; n * n];
    let mut edge_a2 = KahanSum::new();
    let mut edge_b1 = KahanSum::new();
    let mut edge_b2 = KahanSum::new();
    let mut row_moments = vec![0.0f64; nu_list.len()];

    for i2 in 0..n {
        let w2 = wts[i2];
        for i3 in 0..n {
            let w3 = wts[i3];
            let w23 = w2 * w3;
            let row = &slab[(i2 * n + i3) * n..(i2 * n + i3 + 1) * n];
            // Plain per-row accumulation (length n), compensated at row level.
            let mut r_norm = 0.0;
            let mut r_wehrl = 0.0;
            row_moments.iter_mut().for_each(|m| *m = 0.0);
            let mut r_phi1 = 0.0;
            for (i4, (&v, &w4)) in row.iter().zip(wts).enumerate() {
                let wv = w4 * v;
                r_norm += wv;
                r_wehrl += w4 * neg_v_ln_v(v);
                for (m, nu) in row_moments.iter_mut().zip(nu_list) {
                    *m += w4 * density_power(v, *nu);
                }
                r_phi1 += wv;
                phi2_part[i2 * n + i4] += w3 * v;
                if i4 == 0 || i4 == n - 1 {
                    edge_b2.add(w23 * wv);
                }
            }
            norm_k.add(w23 * r_norm);
            wehrl_k.add(w23 * r_wehrl);
            for (acc, m) in moment_k.iter_mut().zip(&row_moments) {
                acc.add(w23 * m);
            }
            phi1_row[i3].add(w2 * r_phi1);
            if i2 == 0 || i2 == n - 1 {
                edge_a2.add(w23 * r_norm);
            }
            if i3 == 0 || i3 == n - 1 {
                edge_b1.add(w23 * r_norm);
            }
        }
    }
    SlabPartial {
        norm: norm_k.value(),
        wehrl: wehrl_k.value(),
        moments: moment_k.iter().map(KahanSum::value).collect(),
        phi1_row: phi1_row.iter().map(KahanSum::value).collect(),
        phi2_part,
        edge_a2: edge_a2.value(),
        edge_b1: edge_b1.value(),
        edge_b2: edge_b2.value(),
    }
}

/// Σ over the full grid of Φ² (unnormalized), for the rare case where ν = 2
/// is not in the requested list.
fn density_moment_only(density: &dyn SlabDensity, axis: &Axis1D, nu: f64) -> f64 {
    let n = axis.len();
    let pts = &axis.points;
    let wts = &axis.weights;
    let parts: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let mut slab = vec![0.0f64; n * n * n];
            density.fill_slab(i1, pts[i1], pts, pts, pts, &mut slab);
            let mut acc = KahanSum::new();
            for i2 in 0..n {
                for i3 in 0..n {
                    let w23 = wts[i2] * wts[i3];
                    let row = &slab[(i2 * n + i3) * n..(i2 * n + i3 + 1) * n];
                    let mut r = 0.0;
                    for (&v, &w4) in row.iter().zip(wts) {
                        r += w4 * density_power(v, nu);
                    }
                    acc.add(w23 * r);
                }
            }
            acc.value()
        })
        .collect();
    let mut total = KahanSum::new();
    for (part, w1) in parts.iter().zip(wts) {
        total.add(w1 * part);
    }
    total.value()
}

/// Reduce a sampled 2-D density under ∫ da db / divisor.
pub(crate) fn plane_reduce(
    values: &Array2<f64>,
    axis_a: &Axis1D,
    axis_b: &Axis1D,
    divisor: f64,
    nu_list: &[f64],
) -> PlaneMeasures {
    let mut norm_k = KahanSum::new();
    let mut p_k = KahanSum::new();
    let mut w_k = KahanSum::new();
    let mut m_k: Vec<KahanSum> = nu_list.iter().map(|_| KahanSum::new()).collect();
    for (ia, (_, &wa)) in axis_a.points.iter().zip(&axis_a.weights).enumerate() {
        for (ib, &wb) in axis_b.weights.iter().enumerate() {
            let v = values[(ia, ib)];
            let w = wa * wb;
            norm_k.add(w * v);
            p_k.add(w * v * v);
            w_k.add(w * neg_v_ln_v(v));
            for (acc, nu) in m_k.iter_mut().zip(nu_list) {
                acc.add(w * density_power(v, *nu));
            }
        }
    }
    PlaneMeasures {
        norm: norm_k.value() / divisor,
        p: p_k.value() / divisor,
        w: w_k.value() / divisor,
        moments: nu_list
            .iter()
            .zip(&m_k)
            .map(|(nu, m)| (*nu, m.value() / divisor))
            .collect(),
    }
}

/// Scalar measures of an arbitrary 2-D density function on explicit axes
/// (used for smeared densities and closed-form marginals).
pub fn plane_measures<F>(
    f: F,
    axis_a: &Axis1D,
    axis_b: &Axis1D,
    divisor: f64,
    nu_list: &[f64],
) -> PlaneMeasures
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rows: Vec<Vec<f64>> = axis_a
        .points
        .par_iter()
        .map(|&a| axis_b.points.iter().map(|&b| f(a, b)).collect())
        .collect();
    let mut values = Array2::zeros((axis_a.len(), axis_b.len()));
    for (ia, row) in rows.iter().enumerate() {
        for (ib, v) in row.iter().enumerate() {
            values[(ia, ib)] = *v;
        }
    }
    plane_reduce(&values, axis_a, axis_b, divisor, nu_list)
}

// ---------------------------------------------------------------------------
// Numeric Husimi density as a slab source
// ---------------------------------------------------------------------------

/// Precomputed coherent-amplitude tables turning the numeric Husimi density
/// into dense matrix products: for the slab at α₁ = a1,
/// A = F_slab · (C · Gᵀ) and Φ = |A|², where F and G hold the conjugated
/// field amplitudes on the α and β planes.
pub struct NumericHusimi {
    /// (|α-plane| × (n_cut+1)) amplitude tables, split into re/im.
    f_re: Array2<f64>,
    f_im: Array2<f64>,
    /// ((n_cut+1) × |β-plane|) contracted tables K = C · Gᵀ, split re/im.
    k_re: Array2<f64>,
    k_im: Array2<f64>,
    n_axis: usize,
    displacement: (f64, f64),
}

impl NumericHusimi {
    /// Build the tables for a shared four-axis grid.
    pub fn prepare(gs: &GroundState, axis: &Axis1D) -> Self {
        let n = axis.len();
        let n_cut = gs.params.n_cut;
        let span = gs.params.two_j as usize + 1;

        // Both planes use the same grid of complex points.
        let plane_pts: Vec<Complex64> = (0..n * n)
            .map(|p| Complex64::new(axis.points[p / n], axis.points[p % n]))
            .collect();
        let f_tab = glauber_table(&plane_pts, n_cut);
        let mut f_re = Array2::zeros((n * n, n_cut + 1));
        let mut f_im = Array2::zeros((n * n, n_cut + 1));
        for p in 0..n * n {
            for q in 0..=n_cut {
                let c = f_tab[p * (n_cut + 1) + q];
                f_re[(p, q)] = c.re;
                f_im[(p, q)] = c.im;
            }
        }

        let g_tab = glauber_table(&plane_pts, span - 1);
        let mut g_re = Array2::zeros((span, n * n));
        let mut g_im = Array2::zeros((span, n * n));
        for p in 0..n * n {
            for q in 0..span {
                let c = g_tab[p * span + q];
                g_re[(q, p)] = c.re;
                g_im[(q, p)] = c.im;
            }
        }
        let k_re = gs.coeffs.dot(&g_re);
        let k_im = gs.coeffs.dot(&g_im);

        let eq = crate::variational::equilibrium(&gs.params);
        Self {
            f_re,
            f_im,
            k_re,
            k_im,
            n_axis: n,
            displacement: (eq.alpha_e.abs(), eq.beta_e.abs()),
        }
    }
}

impl SlabDensity for NumericHusimi {
    fn displacement(&self) -> (f64, f64) {
        self.displacement
    }

    fn fill_slab(
        &self,
        i1: usize,
        _a1: f64,
        a2: &[f64],
        _b1: &[f64],
        _b2: &[f64],
        out: &mut [f64],
    ) {
        let n = self.n_axis;
        debug_assert_eq!(a2.len(), n);
        debug_assert_eq!(out.len(), n * n * n);
        let rows = i1 * n..(i1 + 1) * n;
        let f_re = self.f_re.slice(ndarray::s![rows.clone(), ..]);
        let f_im = self.f_im.slice(ndarray::s![rows, ..]);
        // Complex product through four real GEMMs.
        let a_re = f_re.dot(&self.k_re) - f_im.dot(&self.k_im);
        let a_im = f_re.dot(&self.k_im) + f_im.dot(&self.k_re);
        // Both products are standard-layout (i2, i3·i4) matrices matching
        // the slab layout exactly.
        let ar = a_re.as_slice().expect("gemm output is contiguous");
        let ai = a_im.as_slice().expect("gemm output is contiguous");
        for (o, (r, i)) in out.iter_mut().zip(ar.iter().zip(ai)) {
            *o = r * r + i * i;
        }
    }
}

/// All measures of the numeric (contracted) Husimi density of a ground state.
pub fn husimi_measures(
    gs: &GroundState,
    quad: &QuadratureSpec,
    nu_list: &[f64],
) -> Result<Measures> {
    let axis = quad.axis()?;
    let density = NumericHusimi::prepare(gs, &axis);
    density_measures(&density, quad, nu_list)
}

/// ∫ Φ d²α d²β / π² only (the normalization check). ν = 2 rides along so the
/// engine does not schedule a second pass for the participation ratio.
pub fn husimi_norm(gs: &GroundState, quad: &QuadratureSpec) -> Result<f64> {
    Ok(husimi_measures(gs, quad, &[2.0])?.norm)
}

/// Joint moment M_ν of the numeric density.
pub fn moment_nu(gs: &GroundState, quad: &QuadratureSpec, nu: f64) -> Result<f64> {
    let m = husimi_measures(gs, quad, &[nu])?;
    Ok(m.moment(nu).expect("requested order present"))
}

/// Participation ratio P = M₂.
pub fn participation_ratio(gs: &GroundState, quad: &QuadratureSpec) -> Result<f64> {
    moment_nu(gs, quad, 2.0)
}

/// Rényi–Wehrl entropy of order ν.
pub fn renyi_wehrl(gs: &GroundState, quad: &QuadratureSpec, nu: f64) -> Result<f64> {
    if nu.is_nan() || nu <= 0.0 || (nu - 1.0).abs() < 1e-9 {
        // Reject before paying for the quadrature.
        renyi_from_moment(nu, 1.0)?;
    }
    renyi_from_moment(nu, moment_nu(gs, quad, nu)?)
}

/// Wehrl entropy −∫ Φ ln Φ / π².
pub fn wehrl_entropy(gs: &GroundState, quad: &QuadratureSpec) -> Result<f64> {
    Ok(husimi_measures(gs, quad, &[2.0])?.w)
}

/// Marginal density Φ_κ at a single point, by direct 2-D integration of the
/// amplitude over the complementary coordinate pair.
pub fn marginal_husimi(
    gs: &GroundState,
    pair: MarginalPair,
    a: f64,
    b: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    let axis = quad.axis()?;
    let n = axis.len();
    let n_cut = gs.params.n_cut;
    let span = gs.params.two_j as usize + 1;
    let make_point = |t: f64, fixed_first: bool| -> Complex64 {
        match (pair, fixed_first) {
            (MarginalPair::Position, true) => Complex64::new(a, t),
            (MarginalPair::Position, false) => Complex64::new(b, t),
            (MarginalPair::Momentum, true) => Complex64::new(t, a),
            (MarginalPair::Momentum, false) => Complex64::new(t, b),
        }
    };
    let alphas: Vec<Complex64> = axis.points.iter().map(|&t| make_point(t, true)).collect();
    let betas: Vec<Complex64> = axis.points.iter().map(|&t| make_point(t, false)).collect();
    let fa = glauber_table(&alphas, n_cut);
    let gb = glauber_table(&betas, span - 1);
    let mut acc = KahanSum::new();
    for ia in 0..n {
        let fa_row = &fa[ia * (n_cut + 1)..(ia + 1) * (n_cut + 1)];
        let mut inner = 0.0;
        for ib in 0..n {
            let gb_row = &gb[ib * span..(ib + 1) * span];
            let mut amp = Complex64::new(0.0, 0.0);
            for (nq, f) in fa_row.iter().enumerate() {
                let mut srow = Complex64::new(0.0, 0.0);
                for (k, g) in gb_row.iter().enumerate() {
                    srow += gs.coeffs[(nq, k)] * g;
                }
                amp += f * srow;
            }
            inner += axis.weights[ib] * amp.norm_sqr();
        }
        acc.add(axis.weights[ia] * inner);
    }
    Ok(acc.value() / PI)
}

/// Exact participation ratio of any coefficient matrix, through the
/// factorial convolution identity: with C_s[n][k] = c_{nk}/√(n! k!) and
/// T = C_s ⋆ C_s (2-D polynomial self-convolution),
/// M₂ = Σ_{N,M} T[N][M]² · N! M! / 2^{N+M+2}.
/// Every cell is assembled in log-magnitude form, so deep factorials never
/// overflow or underflow.
pub fn m2_exact(gs: &GroundState) -> f64 {
    let n_cut = gs.params.n_cut;
    let span = gs.params.two_j as usize + 1;
    let lf = crate::special::LnFactorial::new(2 * (n_cut + span) + 2);
    let ln2 = std::f64::consts::LN_2;
    let mut total = KahanSum::new();
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for big_n in 0..=(2 * n_cut) {
        for big_m in 0..=(2 * (span - 1)) {
            // T[N][M] = Σ c_{nk} c_{n'k'} e^{−(ln n! + ln k! + ln n'! + ln k'!)/2},
            // summed with a max-shift so the scale factor is explicit.
            let mut max_ln = f64::NEG_INFINITY;
            terms.clear();
            let n_lo = big_n.saturating_sub(n_cut);
            let n_hi = big_n.min(n_cut);
            for nq in n_lo..=n_hi {
                let np = big_n - nq;
                let k_lo = big_m.saturating_sub(span - 1);
                let k_hi = big_m.min(span - 1);
                for k in k_lo..=k_hi {
                    let kp = big_m - k;
                    let c = gs.coeffs[(nq, k)] * gs.coeffs[(np, kp)];
                    if c == 0.0 {
                        continue;
                    }
                    let ln_scale =
                        -0.5 * (lf.ln_fact(nq) + lf.ln_fact(k) + lf.ln_fact(np) + lf.ln_fact(kp));
                    let ln_mag = c.abs().ln() + ln_scale;
                    max_ln = max_ln.max(ln_mag);
                    terms.push((c.signum(), ln_mag));
                }
            }
            if terms.is_empty() {
                continue;
            }
            let mut t_scaled = 0.0;
            for (sign, ln_mag) in &terms {
                t_scaled += sign * (ln_mag - max_ln).exp();
            }
            if t_scaled == 0.0 {
                continue;
            }
            let ln_term =
                2.0 * (t_scaled.abs().ln() + max_ln) + lf.ln_fact(big_n) + lf.ln_fact(big_m)
                    - (big_n + big_m + 2) as f64 * ln2;
            total.add(ln_term.exp());
        }
    }
    total.value()
}

// ---------------------------------------------------------------------------
// Sweep rows
// ---------------------------------------------------------------------------

/// One output row of a sweep: all scalar measures of one channel at one λ.
#[derive(Debug, Clone)]
pub struct MeasureReport {
    /// "numeric", "variational", or "error".
    pub channel: String,
    pub lambda: f64,
    pub two_j: u32,
    pub n_cut: usize,
    pub norm: f64,
    pub p: f64,
    pub w: f64,
    pub p1: f64,
    pub p2: f64,
    pub w1: f64,
    pub w2: f64,
    /// (ν, M_ν) in request order.
    pub moments: Vec<(f64, f64)>,
    /// Failure description for error rows.
    pub note: Option<String>,
}

impl MeasureReport {
    /// Error placeholder row: numeric fields NaN, moments NaN at the
    /// requested orders.
    pub fn error_row(lambda: f64, two_j: u32, nu_list: &[f64], note: String) -> Self {
        Self {
            channel: "error".into(),
            lambda,
            two_j,
            n_cut: 0,
            norm: f64::NAN,
            p: f64::NAN,
            w: f64::NAN,
            p1: f64::NAN,
            p2: f64::NAN,
            w1: f64::NAN,
            w2: f64::NAN,
            moments: nu_list.iter().map(|&nu| (nu, f64::NAN)).collect(),
            note: Some(note),
        }
    }

    /// CSV header matching `to_csv_row` for the given moment orders.
    pub fn csv_header(nu_list: &[f64]) -> String {
        let mut h = String::from("channel,lambda,two_j,n_cut,norm,P,W,P1,P2,W1,W2");
        for nu in nu_list {
            h.push_str(&format!(",M_{nu}"));
        }
        h
    }

    pub fn to_csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.channel,
            fmt_f64(self.lambda),
            self.two_j,
            self.n_cut,
            fmt_f64(self.norm),
            fmt_f64(self.p),
            fmt_f64(self.w),
            fmt_f64(self.p1),
            fmt_f64(self.p2),
            fmt_f64(self.w1),
            fmt_f64(self.w2)
        );
        for (_, m) in &self.moments {
            row.push(',');
            row.push_str(&fmt_f64(*m));
        }
        row
    }

    /// JSON object keyed like the CSV columns (`M_0.5`, `M_2`, …), with NaN
    /// rendered as null and the failure note, when present, under "error".
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("channel".into(), json!(self.channel));
        obj.insert("lambda".into(), json_f64(self.lambda));
        obj.insert("two_j".into(), json!(self.two_j));
        obj.insert("n_cut".into(), json!(self.n_cut));
        obj.insert("norm".into(), json_f64(self.norm));
        obj.insert("P".into(), json_f64(self.p));
        obj.insert("W".into(), json_f64(self.w));
        obj.insert("P1".into(), json_f64(self.p1));
        obj.insert("P2".into(), json_f64(self.p2));
        obj.insert("W1".into(), json_f64(self.w1));
        obj.insert("W2".into(), json_f64(self.w2));
        for (nu, m) in &self.moments {
            obj.insert(format!("M_{nu}"), json_f64(*m));
        }
        if let Some(note) = &self.note {
            obj.insert("error".into(), json!(note));
        }
        serde_json::Value::Object(obj)
    }
}

/// Shortest-roundtrip decimal, with NaN spelled `nan` for CSV.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn json_f64(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

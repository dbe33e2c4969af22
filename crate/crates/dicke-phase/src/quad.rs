//! Quadrature grids for the phase-space integrals.
//!
//! Two interchangeable schemes share one axis abstraction:
//!
//! * trapezoid on a symmetric box — the default. The integrands are entire
//!   Gaussian-enveloped functions, so the periodic trapezoid rule converges
//!   geometrically in the node spacing once the box covers the support; a
//!   spacing of 0.4 and a margin of 7 beyond the displaced packet centers
//!   hold every target quantity (including the entropies, whose |Φ ln Φ|
//!   integrands have integrable log-singularities along Husimi zero lines)
//!   well below 1e−6.
//! * Gauss–Hermite with the weight folded back into the nodes — exact for
//!   polynomially-enveloped Gaussians centered at the origin; useful as an
//!   independent cross-check at moderate displacements.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::special::gauss_hermite;
use crate::Result;

/// Default trapezoid node spacing.
pub const DEFAULT_SPACING: f64 = 0.4;
/// Default margin beyond the largest packet displacement.
pub const DEFAULT_MARGIN: f64 = 7.0;
/// Minimum acceptable margin between a packet center and the box edge.
pub const MIN_MARGIN: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussHermite,
    TrapezoidOnBox,
}

/// A complete quadrature prescription: one axis recipe applied to every
/// phase-space coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Nodes per coordinate axis (≥ 8).
    pub nodes_per_axis: usize,
    /// Half-width of the integration box (trapezoid) or the coverage radius
    /// the Gauss–Hermite nodes are required to reach.
    pub box_halfwidth: f64,
    /// Tolerance the grid is expected to deliver; also used as the norm-gate
    /// and edge-mass threshold downstream.
    pub target_tol: f64,
}

impl QuadratureSpec {
    /// Default trapezoid grid for a density whose packets sit at most
    /// `displacement` from the origin along any axis.
    pub fn trapezoid_for_displacement(displacement: f64) -> Self {
        let halfwidth = displacement.abs() + DEFAULT_MARGIN;
        let nodes = (2.0 * halfwidth / DEFAULT_SPACING).ceil() as usize + 1;
        Self {
            scheme: Scheme::TrapezoidOnBox,
            nodes_per_axis: nodes.max(8),
            box_halfwidth: halfwidth,
            target_tol: 1e-6,
        }
    }

    /// Gauss–Hermite grid with the given node count.
    pub fn gauss_hermite(nodes_per_axis: usize) -> Self {
        // Node range grows like √(2n); record the reach it provides.
        let reach = (2.0 * nodes_per_axis as f64).sqrt();
        Self {
            scheme: Scheme::GaussHermite,
            nodes_per_axis,
            box_halfwidth: reach,
            target_tol: 1e-6,
        }
    }

    /// Same scheme with twice the resolution (for convergence checks).
    pub fn doubled(&self) -> Self {
        Self {
            nodes_per_axis: self.nodes_per_axis * 2,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 8 {
            return Err(Error::InvalidQuadrature(format!(
                "nodes_per_axis = {} < 8",
                self.nodes_per_axis
            )));
        }
        if !(self.box_halfwidth.is_finite() && self.box_halfwidth > 0.0) {
            return Err(Error::InvalidQuadrature(format!(
                "box_halfwidth = {} must be positive",
                self.box_halfwidth
            )));
        }
        if !(self.target_tol.is_finite() && self.target_tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!(
                "target_tol = {} must be positive",
                self.target_tol
            )));
        }
        Ok(())
    }

    /// Verify the grid reaches at least `MIN_MARGIN` beyond a packet center
    /// at ±`displacement` on this axis.
    pub fn validate_coverage(&self, displacement: f64) -> Result<()> {
        self.validate()?;
        let reach = match self.scheme {
            Scheme::TrapezoidOnBox => self.box_halfwidth,
            Scheme::GaussHermite => {
                // Largest Gauss–Hermite node ≈ √(2n + 1) − O(n^{−1/6}).
                (2.0 * self.nodes_per_axis as f64 + 1.0).sqrt() - 2.0
            }
        };
        if reach < displacement.abs() + MIN_MARGIN {
            return Err(Error::InvalidQuadrature(format!(
                "axis reach {reach:.2} does not cover displacement {:.2} plus margin {MIN_MARGIN}",
                displacement.abs()
            )));
        }
        Ok(())
    }

    /// Materialize the 1-D axis: nodes and plain integration weights
    /// (∫ f(t) dt ≈ Σ w_i f(t_i) for Gaussian-enveloped f).
    pub fn axis(&self) -> Result<Axis1D> {
        self.validate()?;
        match self.scheme {
            Scheme::TrapezoidOnBox => {
                let n = self.nodes_per_axis;
                let hw = self.box_halfwidth;
                let points: Vec<f64> = (0..n)
                    .map(|i| -hw + 2.0 * hw * i as f64 / (n - 1) as f64)
                    .collect();
                // Weights from the actual node spacing (not the nominal one):
                // half-interval at each end, full interval inside.
                let mut weights = vec![0.0; n];
                for i in 0..n - 1 {
                    let h = points[i + 1] - points[i];
                    weights[i] += 0.5 * h;
                    weights[i + 1] += 0.5 * h;
                }
                Ok(Axis1D { points, weights })
            }
            Scheme::GaussHermite => {
                let (points, folded) = gauss_hermite(self.nodes_per_axis);
                // Folded weights already contain e^{+x²}: Σ w̃ f(x) ≈ ∫ f.
                Ok(Axis1D {
                    points,
                    weights: folded,
                })
            }
        }
    }
}

/// Nodes and weights of a single coordinate axis.
#[derive(Debug, Clone)]
pub struct Axis1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Plain trapezoid axis over [lo, hi] with n nodes (for custom grids).
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(Error::InvalidQuadrature(format!(
                "invalid linear axis: [{lo}, {hi}] with {n} nodes"
            )));
        }
        let points: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = points[i + 1] - points[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Ok(Self { points, weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_axis_integrates_displaced_gaussian() {
        let spec = QuadratureSpec::trapezoid_for_displacement(3.0);
        let ax = spec.axis().unwrap();
        let total: f64 = ax
            .points
            .iter()
            .zip(&ax.weights)
            .map(|(t, w)| w * (-(t - 3.0) * (t - 3.0)).exp())
            .sum();
        assert_relative_eq!(total, PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn weights_sum_to_box_length() {
        let spec = QuadratureSpec {
            scheme: Scheme::TrapezoidOnBox,
            nodes_per_axis: 33,
            box_halfwidth: 5.0,
            target_tol: 1e-6,
        };
        let ax = spec.axis().unwrap();
        let total: f64 = ax.weights.iter().sum();
        assert_relative_eq!(total, 10.0, epsilon = 1e-12);
        // End weights are half of the interior ones.
        assert_relative_eq!(ax.weights[0] * 2.0, ax.weights[1], epsilon = 1e-12);
    }

    #[test]
    fn gauss_hermite_axis_matches_trapezoid_on_smooth_integrand() {
        let gh = QuadratureSpec::gauss_hermite(48).axis().unwrap();
        let tr = QuadratureSpec::trapezoid_for_displacement(1.0)
            .axis()
            .unwrap();
        let f = |t: f64| (-(t * t)).exp() * (1.0 + t * t + (1.3 * t).cos());
        let a: f64 = gh
            .points
            .iter()
            .zip(&gh.weights)
            .map(|(t, w)| w * f(*t))
            .sum();
        let b: f64 = tr
            .points
            .iter()
            .zip(&tr.weights)
            .map(|(t, w)| w * f(*t))
            .sum();
        assert_relative_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn default_constructor_sizes_follow_displacement() {
        let spec = QuadratureSpec::trapezoid_for_displacement(8.93);
        assert_relative_eq!(spec.box_halfwidth, 15.93, epsilon = 1e-12);
        assert_eq!(spec.nodes_per_axis, 81);
        spec.validate_coverage(8.93).unwrap();
    }

    #[test]
    fn coverage_validation_rejects_clipped_packets() {
        let spec = QuadratureSpec {
            scheme: Scheme::TrapezoidOnBox,
            nodes_per_axis: 41,
            box_halfwidth: 6.0,
            target_tol: 1e-6,
        };
        assert!(spec.validate_coverage(1.0).is_ok());
        match spec.validate_coverage(4.0) {
            Err(Error::InvalidQuadrature(msg)) => assert!(msg.contains("displacement")),
            other => panic!("expected coverage failure, got {other:?}"),
        }
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = QuadratureSpec::trapezoid_for_displacement(0.0);
        spec.nodes_per_axis = 4;
        assert!(spec.validate().is_err());
        spec = QuadratureSpec::trapezoid_for_displacement(0.0);
        spec.box_halfwidth = -1.0;
        assert!(spec.validate().is_err());
        spec = QuadratureSpec::trapezoid_for_displacement(0.0);
        spec.target_tol = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_serde_round_trip_uses_kebab_names() {
        let spec = QuadratureSpec::trapezoid_for_displacement(2.0);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("trapezoid-on-box"));
        let back: QuadratureSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn linear_axis_integrates_polynomials() {
        let ax = Axis1D::linear(-1.0, 2.0, 2001).unwrap();
        let val: f64 = ax
            .points
            .iter()
            .zip(&ax.weights)
            .map(|(t, w)| w * t * t)
            .sum();
        assert_relative_eq!(val, 3.0, epsilon = 1e-5);
    }
}

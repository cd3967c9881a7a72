//! Adaptive quadrature on radial domains and grid representations of radial
//! functions.
//!
//! Area integrals over the disc are written in the radial variable
//! `s = |z|^2`: `\int_disc f(|z|^2) dx dy = pi * \int_0^{s_max} f(s) ds`.
//! Integrating in `s` keeps monomial moments polynomial and makes the Beta
//! closed forms exact for the weights used throughout the crate.

pub mod fd;
pub mod gauss;
pub mod spline;

use crate::error::{Error, Result};
use gauss::GaussRule;

/// Clustering transform applied near the outer boundary `s_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMap {
    /// No transform; the integrand is regular up to the boundary.
    None,
    /// Algebraic substitution `s = s_max (1 - (1 - sigma)^{1/(1+alpha)})`
    /// restoring polynomial behavior for integrands with a factor
    /// `(s_max - s)^alpha`, `alpha` in (-1, 0).
    Algebraic(f64),
}

/// Panel layout and precision targets for [`integrate_disc`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Initial number of equal panels (>= 1).
    pub panels: usize,
    /// Gauss points per panel (>= 2).
    pub points_per_panel: usize,
    /// Boundary clustering transform.
    pub boundary_map: BoundaryMap,
    /// Target relative error of the adaptive refinement.
    pub rel_tol: f64,
    /// Budget on the total number of nodes (refinement stops here).
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 64,
            points_per_panel: 16,
            boundary_map: BoundaryMap::None,
            rel_tol: 1e-12,
            max_nodes: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn with_boundary(mut self, map: BoundaryMap) -> Self {
        self.boundary_map = map;
        self
    }

    fn validate(&self) {
        assert!(self.panels >= 1, "panels must be >= 1");
        assert!(self.points_per_panel >= 2, "points_per_panel must be >= 2");
        assert!(self.rel_tol > 0.0);
    }
}

/// Result of an adaptive quadrature: value plus an error estimate and the
/// number of nodes actually spent.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
}

/// Sampled radial function on strictly increasing nodes starting at 0.
///
/// `boundary_exponent` records the known leading power of `(s_max - s)` in
/// the represented integrand (0 for a regular function).
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    values: Vec<f64>,
    pub boundary_exponent: f64,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, boundary_exponent: f64) -> Result<Self> {
        assert_eq!(nodes.len(), values.len(), "nodes/values length mismatch");
        assert!(nodes.len() >= 2, "grid needs at least two nodes");
        assert_eq!(nodes[0], 0.0, "first node must be 0");
        for w in nodes.windows(2) {
            assert!(w[1] > w[0], "nodes must be strictly increasing");
        }
        for (&s, &v) in nodes.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::NonFinite { s });
            }
        }
        Ok(RadialGrid {
            nodes,
            values,
            boundary_exponent,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrate `pi * \int_0^{s_max} f(s) ds`, the disc area integral of the
/// radial integrand `f(|z|^2)`.
///
/// Adaptive bisection of an initial uniform panel layout; each panel error is
/// estimated against its own two-half refinement. Fails with
/// [`Error::NonFinite`] if the integrand produces NaN/inf at a node and with
/// [`Error::BudgetExceeded`] if the node budget is exhausted before the
/// relative tolerance is met.
pub fn integrate_disc<F>(f: F, spec: &QuadratureSpec, s_max: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    spec.validate();
    assert!(s_max > 0.0, "s_max must be positive");

    // Apply the boundary map by integrating a transformed integrand over the
    // unit sigma-interval.
    match spec.boundary_map {
        BoundaryMap::None => adaptive(&f, spec, 0.0, s_max, std::f64::consts::PI),
        BoundaryMap::Algebraic(alpha) => {
            assert!(
                alpha > -1.0,
                "algebraic boundary map requires exponent > -1"
            );
            let p = 1.0 / (1.0 + alpha);
            let g = |sigma: f64| {
                let one_minus = (1.0 - sigma).max(0.0);
                let s = s_max * (1.0 - one_minus.powf(p));
                let jac = s_max * p * one_minus.powf(p - 1.0);
                f(s) * jac
            };
            adaptive(&g, spec, 0.0, 1.0, std::f64::consts::PI)
        }
    }
}

fn adaptive<F>(f: &F, spec: &QuadratureSpec, a: f64, b: f64, scale: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    let rule = GaussRule::new(spec.points_per_panel);
    let eval = |lo: f64, hi: f64| -> Result<f64> {
        let mut bad: Option<f64> = None;
        let v = rule.integrate(lo, hi, |s| {
            let y = f(s);
            if !y.is_finite() && bad.is_none() {
                bad = Some(s);
            }
            y
        });
        match bad {
            Some(s) => Err(Error::NonFinite { s }),
            None => Ok(v),
        }
    };

    let mut nodes_used = 0usize;
    let width = (b - a) / spec.panels as f64;
    let mut panels: Vec<Panel> = Vec::with_capacity(2 * spec.panels);
    for i in 0..spec.panels {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == spec.panels { b } else { lo + width };
        let coarse = eval(lo, hi)?;
        let mid = 0.5 * (lo + hi);
        let fine = eval(lo, mid)? + eval(mid, hi)?;
        nodes_used += 3 * spec.points_per_panel;
        panels.push(Panel {
            a: lo,
            b: hi,
            value: fine,
            error: (fine - coarse).abs(),
        });
    }

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = spec.rel_tol * total.abs().max(f64::MIN_POSITIVE);
        if err <= target {
            return Ok(Quadrature {
                value: scale * total,
                error_estimate: scale * err,
                nodes_used,
            });
        }
        if nodes_used + 4 * spec.points_per_panel > spec.max_nodes {
            return Err(Error::BudgetExceeded {
                nodes: nodes_used,
                error_estimate: scale * err,
            });
        }
        // Split the worst panel.
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a: lo, b: hi, .. } = panels[worst];
        let mid = 0.5 * (lo + hi);
        let split = |l: f64, h: f64| -> Result<Panel> {
            let coarse = eval(l, h)?;
            let m = 0.5 * (l + h);
            let fine = eval(l, m)? + eval(m, h)?;
            Ok(Panel {
                a: l,
                b: h,
                value: fine,
                error: (fine - coarse).abs(),
            })
        };
        let left = split(lo, mid)?;
        let right = split(mid, hi)?;
        nodes_used += 4 * spec.points_per_panel;
        panels[worst] = left;
        panels.push(right);
    }
}

/// Natural logarithm of the Beta function `B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_disc_area() {
        let q = integrate_disc(|_| 1.0, &QuadratureSpec::default(), 1.0).unwrap();
        assert!((q.value - PI).abs() < 1e-13 * PI);
    }

    #[test]
    fn beta_weight_k3() {
        // f(s) = (1-s)^{2k-2}, k = 3: pi * B(1, 2k-1) = pi / 5.
        let q = integrate_disc(|s| (1.0 - s).powi(4), &QuadratureSpec::default(), 1.0).unwrap();
        assert!((q.value - PI / 5.0).abs() < 1e-13 * PI);
    }

    #[test]
    fn inverse_sqrt_endpoint_singularity() {
        // f(s) = (1-s)^{-1/2}: pi * 2 = 2 pi, needs the clustering map.
        let spec = QuadratureSpec::default().with_boundary(BoundaryMap::Algebraic(-0.5));
        let q = integrate_disc(|s| (1.0 - s).max(f64::MIN_POSITIVE).powf(-0.5), &spec, 1.0)
            .unwrap();
        assert!((q.value - 2.0 * PI).abs() < 1e-11 * PI, "got {}", q.value);
    }

    #[test]
    fn linearity() {
        let spec = QuadratureSpec::default();
        let f = |s: f64| (3.0 * s).sin() + 0.5;
        let g = |s: f64| (-2.0 * s).exp();
        let (a, b) = (2.5, -1.25);
        let lhs = integrate_disc(|s| a * f(s) + b * g(s), &spec, 1.0).unwrap().value;
        let fi = integrate_disc(f, &spec, 1.0).unwrap().value;
        let gi = integrate_disc(g, &spec, 1.0).unwrap().value;
        let rhs = a * fi + b * gi;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn refinement_convergence_for_smooth_integrand() {
        let f = |s: f64| (10.0 * s).cos() * (1.0 + s * s);
        let base = QuadratureSpec::default();
        let fine = QuadratureSpec {
            panels: 128,
            ..base
        };
        let q0 = integrate_disc(f, &base, 1.0).unwrap();
        let q1 = integrate_disc(f, &fine, 1.0).unwrap();
        assert!((q1.value - q0.value).abs() <= q0.error_estimate.max(1e-14));
    }

    #[test]
    fn gauss_contract_polynomial_exactness() {
        // Degree <= 2 * points_per_panel - 1 is exact per panel.
        let spec = QuadratureSpec {
            panels: 4,
            points_per_panel: 8,
            ..QuadratureSpec::default()
        };
        let deg = 15;
        let q = integrate_disc(|s| s.powi(deg), &spec, 1.0).unwrap();
        let exact = PI / (deg as f64 + 1.0);
        assert!((q.value - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn non_finite_integrand_reported() {
        let r = integrate_disc(
            |s| if s > 0.3 { f64::NAN } else { 1.0 },
            &QuadratureSpec::default(),
            1.0,
        );
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn budget_exhaustion_reported() {
        let spec = QuadratureSpec {
            max_nodes: 256,
            ..QuadratureSpec::default()
        };
        let r = integrate_disc(
            |s| (1.0 - s).max(f64::MIN_POSITIVE).powf(-0.5),
            &QuadratureSpec {
                boundary_map: BoundaryMap::None,
                ..spec
            },
            1.0,
        );
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn radial_grid_rejects_non_finite_values() {
        let r = RadialGrid::new(vec![0.0, 0.5, 1.0], vec![1.0, f64::NAN, 2.0], 0.0);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn ln_beta_matches_small_integers() {
        // B(3, 4) = 2! 3! / 6! = 1/60.
        assert!((beta(3.0, 4.0) - 1.0 / 60.0).abs() < 1e-16);
    }
}

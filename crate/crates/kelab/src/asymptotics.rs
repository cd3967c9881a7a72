//! Laplace approximation engine and the Bergman-expansion verifier.
//!
//! For a phase `f <= 0` with a nondegenerate interior maximum at `x0` and an
//! amplitude `u`,
//!
//! `\int u e^{lambda f} dx ~ (2 pi / lambda)^{m/2} e^{lambda f(x0)}
//!   det(-H_f)^{-1/2} (L0 u + L1 u / lambda + ...)`
//!
//! with `L0 u = u(x0)` and the explicit second coefficient
//!
//! `L1 u = 1/2 [ u { -f_ikl f_jrs (1/4 f^ij f^kl f^rs + 1/6 f^ij f^ks f^rl)
//!   + 1/4 f^ij f^kl f_ijkl } + f^sq f^rp f_srq u_p - Tr(H_u H_f^{-1}) ]`,
//!
//! `f^{ij}` the inverse Hessian. At a maximum the Hessian is negative
//! definite, so the prefactor uses `det(-H_f)`, which is positive for any
//! dimension.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bergman::{SpaceOptions, WeightedSpace};
use crate::error::{Error, Result};
use crate::geometry::MAInstance;
use crate::numerics::fd::{mixed_partial, Accuracy};
use crate::numerics::gauss::GaussRule;
use crate::tsuji::{fmt_f64, rate_fit, RateModel};

/// Derivative data of the phase (to order four) and amplitude (to order two)
/// at the critical point.
#[derive(Debug, Clone)]
pub struct LaplaceJet {
    pub dim: usize,
    /// Phase value at the critical point.
    pub f0: f64,
    pub hess_f: DMatrix<f64>,
    /// `f_{ijk}`, fully symmetric.
    pub d3_f: Vec<Vec<Vec<f64>>>,
    /// `f_{ijkl}`, fully symmetric.
    pub d4_f: Vec<Vec<Vec<Vec<f64>>>>,
    pub u0: f64,
    pub grad_u: Vec<f64>,
    pub hess_u: DMatrix<f64>,
}

impl LaplaceJet {
    /// Validate symmetry, the vanishing gradient and negative definiteness.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        f0: f64,
        grad_f: Vec<f64>,
        hess_f: DMatrix<f64>,
        d3_f: Vec<Vec<Vec<f64>>>,
        d4_f: Vec<Vec<Vec<Vec<f64>>>>,
        u0: f64,
        grad_u: Vec<f64>,
        hess_u: DMatrix<f64>,
    ) -> Result<Self> {
        Self::with_grad_tolerance(
            dim, f0, grad_f, hess_f, d3_f, d4_f, u0, grad_u, hess_u, 1e-12,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_grad_tolerance(
        dim: usize,
        f0: f64,
        grad_f: Vec<f64>,
        hess_f: DMatrix<f64>,
        d3_f: Vec<Vec<Vec<f64>>>,
        d4_f: Vec<Vec<Vec<Vec<f64>>>>,
        u0: f64,
        grad_u: Vec<f64>,
        hess_u: DMatrix<f64>,
        grad_tolerance: f64,
    ) -> Result<Self> {
        assert!((1..=3).contains(&dim), "Laplace engine is desk-scale: m <= 3");
        let gnorm = grad_f.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm > grad_tolerance {
            return Err(Error::NotCritical {
                gradient_norm: gnorm,
                tolerance: grad_tolerance,
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                assert!(
                    (hess_f[(i, j)] - hess_f[(j, i)]).abs() < 1e-9,
                    "phase Hessian not symmetric"
                );
                for k in 0..dim {
                    let t = d3_f[i][j][k];
                    for &u in &[d3_f[j][i][k], d3_f[i][k][j]] {
                        assert!((t - u).abs() < 1e-9, "third tensor not symmetric");
                    }
                    for l in 0..dim {
                        let q = d4_f[i][j][k][l];
                        for &u in &[d4_f[j][i][k][l], d4_f[i][k][j][l], d4_f[i][j][l][k]] {
                            assert!((q - u).abs() < 1e-9, "fourth tensor not symmetric");
                        }
                    }
                }
            }
        }
        // Negative definiteness of the Hessian.
        let eig = hess_f.clone().symmetric_eigenvalues();
        let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
        if max_eig >= -1e-12 {
            return Err(Error::SingularHessian { pivot: max_eig });
        }
        Ok(LaplaceJet {
            dim,
            f0,
            hess_f,
            d3_f,
            d4_f,
            u0,
            grad_u,
            hess_u,
        })
    }

    fn inverse_hessian(&self) -> Result<DMatrix<f64>> {
        self.hess_f
            .clone()
            .try_inverse()
            .ok_or(Error::SingularHessian { pivot: 0.0 })
    }
}

/// The second Laplace coefficient `L1 u` at the critical point.
pub fn laplace_l1(jet: &LaplaceJet) -> Result<f64> {
    let m = jet.dim;
    let inv = jet.inverse_hessian()?;
    let f3 = &jet.d3_f;
    let f4 = &jet.d4_f;

    let mut cubic = 0.0;
    for i in 0..m {
        for k in 0..m {
            for l in 0..m {
                for j in 0..m {
                    for r in 0..m {
                        for s in 0..m {
                            cubic += f3[i][k][l]
                                * f3[j][r][s]
                                * (0.25 * inv[(i, j)] * inv[(k, l)] * inv[(r, s)]
                                    + inv[(i, j)] * inv[(k, s)] * inv[(r, l)] / 6.0);
                        }
                    }
                }
            }
        }
    }
    let mut quartic = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    quartic += inv[(i, j)] * inv[(k, l)] * f4[i][j][k][l];
                }
            }
        }
    }
    let mut drift = 0.0;
    for s in 0..m {
        for q in 0..m {
            for r in 0..m {
                for p in 0..m {
                    drift += inv[(s, q)] * inv[(r, p)] * f3[s][r][q] * jet.grad_u[p];
                }
            }
        }
    }
    let trace = (&jet.hess_u * &inv).trace();
    Ok(0.5 * (jet.u0 * (-cubic + 0.25 * quartic) + drift - trace))
}

/// Two-term Laplace value
/// `(2 pi / lambda)^{m/2} e^{lambda f0} det(-H_f)^{-1/2} (u0 + L1 u / lambda)`.
pub fn laplace_expand(jet: &LaplaceJet, lambda: f64) -> Result<f64> {
    assert!(lambda > 0.0);
    let det = (-&jet.hess_f).determinant();
    if det <= 0.0 {
        return Err(Error::SingularHessian { pivot: det });
    }
    let l1 = laplace_l1(jet)?;
    let pre = (2.0 * std::f64::consts::PI / lambda).powf(jet.dim as f64 / 2.0)
        * (lambda * jet.f0).exp()
        / det.sqrt();
    Ok(pre * (jet.u0 + l1 / lambda))
}

/// Numerical ground truth `\int_box u e^{lambda f} dx` by tensor-product
/// composite Gauss quadrature (`m <= 3`).
pub fn laplace_oracle<F, U>(
    f: &F,
    u: &U,
    lambda: f64,
    lo: &[f64],
    hi: &[f64],
    panels: usize,
    points: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    U: Fn(&[f64]) -> f64,
{
    let m = lo.len();
    assert!(m == hi.len() && (1..=3).contains(&m));
    let total = (panels * points).pow(m as u32);
    if total > 1 << 24 {
        return Err(Error::BudgetExceeded {
            nodes: total,
            error_estimate: f64::NAN,
        });
    }
    let rule = GaussRule::new(points);
    // Per-axis node/weight lists.
    let mut axis_nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(m);
    for d in 0..m {
        let mut nodes = Vec::with_capacity(panels * points);
        let width = (hi[d] - lo[d]) / panels as f64;
        for p in 0..panels {
            let a = lo[d] + p as f64 * width;
            let half = 0.5 * width;
            let mid = a + half;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push((mid + half * x, w * half));
            }
        }
        axis_nodes.push(nodes);
    }
    let per_axis = panels * points;
    let mut sum = 0.0;
    let mut idx = vec![0usize; m];
    let mut x = vec![0.0; m];
    loop {
        let mut w = 1.0;
        for d in 0..m {
            let (xi, wi) = axis_nodes[d][idx[d]];
            x[d] = xi;
            w *= wi;
        }
        let val = u(&x) * (lambda * f(&x)).exp();
        if !val.is_finite() {
            return Err(Error::NonFinite { s: x[0] });
        }
        sum += w * val;
        let mut d = 0;
        loop {
            if d == m {
                return Ok(sum);
            }
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Extract a [`LaplaceJet`] from callables by fourth-order central finite
/// differences (derivative orders up to four for the phase, two for the
/// amplitude).
pub fn jet_from_callables<F, U>(f: &F, u: &U, x0: &[f64], h: f64) -> Result<LaplaceJet>
where
    F: Fn(&[f64]) -> f64,
    U: Fn(&[f64]) -> f64,
{
    let m = x0.len();
    let acc = Accuracy::Fourth;
    let deriv = |func: &dyn Fn(&[f64]) -> f64, orders: &[usize]| {
        mixed_partial(&func, x0, orders, h, acc)
    };
    let mut orders = vec![0usize; m];
    let mut grad_f = vec![0.0; m];
    let mut grad_u = vec![0.0; m];
    let mut hess_f = DMatrix::zeros(m, m);
    let mut hess_u = DMatrix::zeros(m, m);
    for i in 0..m {
        orders.fill(0);
        orders[i] = 1;
        grad_f[i] = deriv(f, &orders);
        grad_u[i] = deriv(u, &orders);
        for j in 0..m {
            orders.fill(0);
            orders[i] += 1;
            orders[j] += 1;
            hess_f[(i, j)] = deriv(f, &orders);
            hess_u[(i, j)] = deriv(u, &orders);
        }
    }
    let mut d3 = vec![vec![vec![0.0; m]; m]; m];
    let mut d4 = vec![vec![vec![vec![0.0; m]; m]; m]; m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                orders.fill(0);
                orders[i] += 1;
                orders[j] += 1;
                orders[k] += 1;
                d3[i][j][k] = deriv(f, &orders);
                for l in 0..m {
                    orders.fill(0);
                    orders[i] += 1;
                    orders[j] += 1;
                    orders[k] += 1;
                    orders[l] += 1;
                    d4[i][j][k][l] = deriv(f, &orders);
                }
            }
        }
    }
    // Symmetrise the FD tensors exactly.
    let mut d3s = d3.clone();
    let mut d4s = d4.clone();
    for i in 0..m {
        for j in 0..m {
            let sym = 0.5 * (hess_f[(i, j)] + hess_f[(j, i)]);
            hess_f[(i, j)] = sym;
            hess_f[(j, i)] = sym;
            let syu = 0.5 * (hess_u[(i, j)] + hess_u[(j, i)]);
            hess_u[(i, j)] = syu;
            hess_u[(j, i)] = syu;
            for k in 0..m {
                let s3 = (d3[i][j][k]
                    + d3[i][k][j]
                    + d3[j][i][k]
                    + d3[j][k][i]
                    + d3[k][i][j]
                    + d3[k][j][i])
                    / 6.0;
                d3s[i][j][k] = s3;
                for l in 0..m {
                    let s4 = (d4[i][j][k][l]
                        + d4[j][i][k][l]
                        + d4[k][j][i][l]
                        + d4[l][j][k][i]
                        + d4[i][k][j][l]
                        + d4[i][l][k][j]
                        + d4[i][j][l][k]
                        + d4[j][k][i][l])
                        / 8.0;
                    d4s[i][j][k][l] = s4;
                }
            }
        }
    }
    LaplaceJet::with_grad_tolerance(
        m,
        f(x0),
        grad_f,
        hess_f,
        d3s,
        d4s,
        u(x0),
        grad_u,
        hess_u,
        1e-8,
    )
}

/// One `(k, point)` record of the expansion verification.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub k: u32,
    pub s: f64,
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// Comparison of the measured Bergman function against the two-term
/// prediction `(k/c_conv)^n (1 + S/(2k))` over a `(k, point)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
    /// Max |residual| per k.
    pub max_residual: Vec<(u32, f64)>,
    /// `(C, alpha, rms)` of the fit `max_residual ~ C k^{-alpha}`, when
    /// enough k values are present.
    pub fit: Option<(f64, f64, f64)>,
    pub c_conv: f64,
}

impl ExpansionReport {
    /// CSV columns: `k, s, B_measured, B_predicted, residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,s,B_measured,B_predicted,residual\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k,
                fmt_f64(r.s),
                fmt_f64(r.measured),
                fmt_f64(r.predicted),
                fmt_f64(r.residual),
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "c_conv": self.c_conv,
            "k_values": self.max_residual.iter().map(|r| r.0).collect::<Vec<_>>(),
            "max_residual": self.max_residual.iter().map(|r| r.1).collect::<Vec<_>>(),
            "fit": self.fit.map(|(c, alpha, rms)| serde_json::json!({
                "constant": c, "order": alpha, "rms": rms,
            })),
        })
    }
}

/// Verify the Bergman expansion on an instance: the weight is the exact
/// solution `phi_inf` and the measure is `mu_{phi_inf}`, which equals the
/// metric volume density at the Monge–Ampère solution.
pub fn expansion_check(
    instance: &MAInstance,
    c_conv: f64,
    k_list: &[u32],
    points: &[f64],
    opts: &SpaceOptions,
) -> Result<ExpansionReport> {
    let mut rows = Vec::new();
    let mut max_residual = Vec::new();
    for &k in k_list {
        assert!(k >= 2);
        let space = WeightedSpace::build(&instance.background, &instance.phi_inf, k, opts)?;
        let mut worst: f64 = 0.0;
        for &s in points {
            let measured = space.bergman_function(s)?;
            let scal = instance.scalar_curvature(s)?;
            let predicted = (k as f64 / c_conv) * (1.0 + scal / (2.0 * k as f64));
            let residual = measured - predicted;
            worst = worst.max(residual.abs());
            rows.push(ExpansionRow {
                k,
                s,
                measured,
                predicted,
                residual,
            });
        }
        max_residual.push((k, worst));
    }
    let fit = rate_fit(&max_residual, RateModel::InverseK).ok();
    Ok(ExpansionReport {
        rows,
        max_residual,
        fit,
        c_conv,
    })
}

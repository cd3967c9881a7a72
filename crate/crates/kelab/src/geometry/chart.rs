//! Normal-coordinate normalisation of a Kähler potential jet.
//!
//! Given the mixed derivative tensors of a potential at a chart centre with
//! `phi_{i jbar}(0) = delta_{ij}`, a polynomial coordinate change
//!
//! `z^i = w^i + A^i_{kl} w^k w^l + B^i_{mnp} w^m w^n w^p`
//!
//! makes the pulled-back potential satisfy `phi_{i jbar k}(0) = 0` and
//! `phi_{i jbar k l}(0) = 0`. The quadratic coefficient is
//! `A^b_{ac} = -phi_{a bbar c}(0) / 2`; the cubic one absorbs the fourth
//! mixed derivative together with the A-induced correction term.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::fd::wirtinger_partial;

/// `T[i][k][l] = T^i_{kl}`, symmetric in the lower indices.
pub type Tensor3 = Vec<Vec<Vec<Complex64>>>;
/// `T[i][m][n][p] = T^i_{mnp}`, symmetric in the lower indices.
pub type Tensor4 = Vec<Vec<Vec<Vec<Complex64>>>>;

/// Mixed derivative tensors of a potential at a chart centre.
///
/// Index conventions: `g2[i][j] = phi_{i jbar}(0)`,
/// `g3[a][b][c] = phi_{a bbar c}(0)` (symmetric in `a, c`),
/// `g4[a][b][c][d] = phi_{a bbar c d}(0)` (symmetric in `a, c, d`).
#[derive(Debug, Clone)]
pub struct ChartJet {
    pub dim: usize,
    pub g2: Vec<Vec<Complex64>>,
    pub g3: Tensor3,
    pub g4: Tensor4,
}

impl ChartJet {
    pub fn new(g2: Vec<Vec<Complex64>>, g3: Tensor3, g4: Tensor4) -> Self {
        let n = g2.len();
        assert!(n == 1 || n == 2, "chart normalisation implemented for n in {{1, 2}}");
        // Hermitian symmetry of the metric tensor.
        for i in 0..n {
            for j in 0..n {
                let dev = (g2[i][j] - g2[j][i].conj()).norm();
                assert!(dev < 1e-9, "g2 not Hermitian: deviation {dev}");
            }
        }
        // Symmetry in the unbarred indices.
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    assert!(
                        (g3[a][b][c] - g3[c][b][a]).norm() < 1e-9,
                        "g3 not symmetric in unbarred indices"
                    );
                    for d in 0..n {
                        let t = g4[a][b][c][d];
                        for &u in &[g4[c][b][a][d], g4[d][b][c][a], g4[a][b][d][c]] {
                            assert!((t - u).norm() < 1e-9, "g4 not symmetric in unbarred indices");
                        }
                    }
                }
            }
        }
        ChartJet { dim: n, g2, g3, g4 }
    }

    /// Jet of a potential callable, extracted with fourth-order Wirtinger
    /// finite differences at the origin.
    pub fn from_potential<F>(f: &F, dim: usize, h: f64) -> Self
    where
        F: Fn(&[Complex64]) -> f64,
    {
        let n = dim;
        let z0 = vec![Complex64::new(0.0, 0.0); n];
        let deriv = |holo: &[usize], anti: &[usize]| wirtinger_partial(f, &z0, holo, anti, h);
        let mut g2 = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let mut g3 = vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n];
        let mut g4 = vec![vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n]; n];
        let unit = |i: usize| {
            let mut v = vec![0usize; n];
            v[i] += 1;
            v
        };
        let add = |x: &[usize], y: &[usize]| -> Vec<usize> {
            x.iter().zip(y).map(|(a, b)| a + b).collect()
        };
        for i in 0..n {
            for j in 0..n {
                g2[i][j] = deriv(&unit(i), &unit(j));
                for k in 0..n {
                    g3[i][j][k] = deriv(&add(&unit(i), &unit(k)), &unit(j));
                    for l in 0..n {
                        g4[i][j][k][l] =
                            deriv(&add(&add(&unit(i), &unit(k)), &unit(l)), &unit(j));
                    }
                }
            }
        }
        // Exact symmetrisation before validation.
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let sym = (g3[a][b][c] + g3[c][b][a]) / 2.0;
                    g3[a][b][c] = sym;
                    g3[c][b][a] = sym;
                }
            }
        }
        ChartJet::new(g2, g3, g4)
    }
}

/// Linearly change coordinates so the metric tensor becomes the identity,
/// via a Cholesky factorisation `g2 = L L^*` and the map `z = L^{-*} w`.
///
/// Returns the transformed jet together with the linear map `T` (as a dense
/// column-major matrix `T[i][a]`, `z^i = T[i][a] w^a`).
pub fn prenormalize_chart(jet: &ChartJet) -> Result<(ChartJet, Vec<Vec<Complex64>>)> {
    let n = jet.dim;
    // Hand-rolled Cholesky for n <= 2.
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = jet.g2[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.im.abs() > 1e-12 {
                    return Err(Error::SingularHessian { pivot: sum.re });
                }
                l[i][j] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // T = (L^*)^{-1}: upper triangular; solve L^* T = I.
    let mut t = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for col in 0..n {
        // Back substitution on the upper-triangular L^* (entries conj(L[j][i])).
        for i in (0..n).rev() {
            let mut rhs = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for j in i + 1..n {
                rhs -= l[j][i].conj() * t[j][col];
            }
            t[i][col] = rhs / l[i][i].conj();
        }
    }

    let tf = |i: usize, a: usize| t[i][a];
    let mut g2 = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut g3 = vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n];
    let mut g4 = vec![vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for i in 0..n {
                for j in 0..n {
                    g2[a][b] += jet.g2[i][j] * tf(i, a) * tf(j, b).conj();
                }
            }
            for c in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            g3[a][b][c] +=
                                jet.g3[i][j][k] * tf(i, a) * tf(j, b).conj() * tf(k, c);
                        }
                    }
                }
                for d in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                for m in 0..n {
                                    g4[a][b][c][d] += jet.g4[i][j][k][m]
                                        * tf(i, a)
                                        * tf(j, b).conj()
                                        * tf(k, c)
                                        * tf(m, d);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((ChartJet::new(g2, g3, g4), t))
}

/// Coefficients `(A, B)` of the cubic coordinate change that kills the third
/// and fourth mixed derivatives of the potential at the origin.
///
/// Requires `phi_{i jbar}(0) = delta_{ij}` (use [`prenormalize_chart`] first).
pub fn normalize_chart(jet: &ChartJet) -> Result<(Tensor3, Tensor4)> {
    let n = jet.dim;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((jet.g2[i][j] - Complex64::new(id, 0.0)).norm());
        }
    }
    if dev > 1e-10 {
        return Err(Error::NotNormalized { deviation: dev });
    }

    // A^k_{cd} = -phi_{c kbar d}(0) / 2.
    let mut a = vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n];
    for k in 0..n {
        for c in 0..n {
            for d in 0..n {
                a[k][c][d] = -0.5 * jet.g3[c][k][d];
            }
        }
    }

    // Fourth derivative of the potential composed with the quadratic part:
    // phi_{a bbar c d} + 2 phi_{a bbar k} A^k_{cd}
    //                  + 2 phi_{i bbar c} A^i_{ad} + 2 phi_{i bbar d} A^i_{ac},
    // cancelled by the cubic term contribution 6 B^b_{acd}.
    let mut b = vec![vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; n]; n];
    for bb in 0..n {
        for aa in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut corr = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        corr += 2.0 * jet.g3[aa][bb][k] * a[k][c][d];
                        corr += 2.0 * jet.g3[k][bb][c] * a[k][aa][d];
                        corr += 2.0 * jet.g3[k][bb][d] * a[k][aa][c];
                    }
                    b[bb][aa][c][d] = -(jet.g4[aa][bb][c][d] + corr) / 6.0;
                }
            }
        }
    }
    // The construction is symmetric in (a, c, d); symmetrise away roundoff.
    for bb in 0..n {
        for aa in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let sym = (b[bb][aa][c][d]
                        + b[bb][c][aa][d]
                        + b[bb][d][c][aa]
                        + b[bb][aa][d][c]
                        + b[bb][c][d][aa]
                        + b[bb][d][aa][c])
                        / 6.0;
                    b[bb][aa][c][d] = sym;
                }
            }
        }
    }
    Ok((a, b))
}

/// Apply the normalising coordinate change:
/// `z^i = w^i + A^i_{kl} w^k w^l + B^i_{mnp} w^m w^n w^p`.
pub fn apply_chart_map(a: &Tensor3, b: &Tensor4, w: &[Complex64]) -> Vec<Complex64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let mut z = w[i];
            for k in 0..n {
                for l in 0..n {
                    z += a[i][k][l] * w[k] * w[l];
                }
            }
            for m in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        z += b[i][m][p][q] * w[m] * w[p] * w[q];
                    }
                }
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Max modulus of the composed potential's third and fourth mixed
    /// derivatives at the origin, by finite differences.
    fn composed_mixed_deviation<F>(f: &F, a: &Tensor3, b: &Tensor4, n: usize) -> f64
    where
        F: Fn(&[Complex64]) -> f64,
    {
        let comp = |w: &[Complex64]| f(&apply_chart_map(a, b, w));
        let jet = ChartJet::from_potential(&comp, n, 1e-3);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(jet.g3[i][j][k].norm());
                    for l in 0..n {
                        worst = worst.max(jet.g4[i][j][k][l].norm());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn already_normal_potential_needs_no_change() {
        let f = |z: &[Complex64]| (z[0] * z[0].conj()).re;
        let jet = ChartJet::from_potential(&f, 1, 1e-3);
        let (a, b) = normalize_chart(&jet).unwrap();
        assert!(a[0][0][0].norm() < 1e-9);
        assert!(b[0][0][0][0].norm() < 1e-9);
    }

    #[test]
    fn cubic_term_fixture() {
        // phi = |z|^2 + z^2 zbar + zbar^2 z: phi_{1 1bar 1}(0) = 2, so A = -1.
        let f = |z: &[Complex64]| {
            let w = z[0];
            (w * w.conj() + w * w * w.conj() + w.conj() * w.conj() * w).re
        };
        let jet = ChartJet::from_potential(&f, 1, 1e-3);
        assert!((jet.g3[0][0][0] - c(2.0)).norm() < 1e-8);
        let (a, b) = normalize_chart(&jet).unwrap();
        assert!((a[0][0][0] - c(-1.0)).norm() < 1e-8);
        let dev = composed_mixed_deviation(&f, &a, &b, 1);
        assert!(dev <= 1e-7, "composed deviation {dev}");
    }

    #[test]
    fn quartic_term_fixture() {
        // phi = |z|^2 + z^3 zbar + zbar^3 z: phi_{1 1bar 1 1}(0) = 6, B = -1.
        let f = |z: &[Complex64]| {
            let w = z[0];
            (w * w.conj() + w * w * w * w.conj() + w.conj() * w.conj() * w.conj() * w).re
        };
        let jet = ChartJet::from_potential(&f, 1, 1e-3);
        assert!((jet.g4[0][0][0][0] - c(6.0)).norm() < 1e-6);
        let (a, b) = normalize_chart(&jet).unwrap();
        assert!(a[0][0][0].norm() < 1e-8);
        assert!((b[0][0][0][0] - c(-1.0)).norm() < 1e-6);
        let dev = composed_mixed_deviation(&f, &a, &b, 1);
        assert!(dev <= 1e-7, "composed deviation {dev}");
    }

    #[test]
    fn two_dimensional_fixture() {
        let f = |z: &[Complex64]| {
            let (u, v) = (z[0], z[1]);
            (u * u.conj() + v * v.conj() + u * v * u.conj() + u.conj() * v.conj() * u).re
        };
        let jet = ChartJet::from_potential(&f, 2, 1e-3);
        let (a, b) = normalize_chart(&jet).unwrap();
        // ||A|| <= max |phi_{a bbar c}| / 2.
        let mut max_g3: f64 = 0.0;
        let mut max_a: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    max_g3 = max_g3.max(jet.g3[i][j][k].norm());
                    max_a = max_a.max(a[i][j][k].norm());
                }
            }
        }
        assert!(max_a <= 0.5 * max_g3 + 1e-12);
        let dev = composed_mixed_deviation(&f, &a, &b, 2);
        assert!(dev <= 1e-6, "composed deviation {dev}");
    }

    #[test]
    fn unnormalized_metric_rejected() {
        let f = |z: &[Complex64]| 2.0 * (z[0] * z[0].conj()).re;
        let jet = ChartJet::from_potential(&f, 1, 1e-3);
        assert!(matches!(
            normalize_chart(&jet),
            Err(Error::NotNormalized { .. })
        ));
        // Prenormalisation via the Cholesky helper fixes it.
        let (jet2, t) = prenormalize_chart(&jet).unwrap();
        assert!((jet2.g2[0][0] - c(1.0)).norm() < 1e-9);
        assert!((t[0][0] - c(1.0 / 2.0_f64.sqrt())).norm() < 1e-9);
        assert!(normalize_chart(&jet2).is_ok());
    }
}

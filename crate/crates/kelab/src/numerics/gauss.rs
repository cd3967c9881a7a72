//! Gauss–Legendre nodes and weights on [-1, 1].
//!
//! Nodes are computed by Newton iteration on the Legendre recurrence and
//! cached per degree; rules up to a few hundred points converge to machine
//! precision in a handful of iterations.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::sync::Arc;

/// A Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Rule with `n` points (exact for polynomials of degree 2n-1).
    pub fn new(n: usize) -> Arc<GaussRule> {
        assert!(n >= 1, "Gauss rule needs at least one point");
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(compute_rule(n)))
            .clone()
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
}

/// Legendre polynomial value and derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_rule(n: usize) -> GaussRule {
    if n == 1 {
        return GaussRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root in (0, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    GaussRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_rules_match_tables() {
        let r = GaussRule::new(2);
        let x = 1.0 / 3.0_f64.sqrt();
        assert!((r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);

        let r3 = GaussRule::new(3);
        assert!((r3.nodes[2] - (0.6_f64).sqrt()).abs() < 1e-15);
        assert!((r3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_exactness() {
        // Degree 2n-1 is integrated exactly.
        for n in [4usize, 9, 16, 32] {
            let rule = GaussRule::new(n);
            let deg = 2 * n - 1;
            let exact = 2.0 / (deg as f64 + 1.0) * if deg % 2 == 0 { 1.0 } else { 0.0 }
                + if deg % 2 == 0 { 0.0 } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!(
                (got - exact).abs() < 1e-13,
                "degree {deg} with {n} points: {got} vs {exact}"
            );
            let even = 2 * n - 2;
            let exact_even = 2.0 / (even as f64 + 1.0);
            let got_even = rule.integrate(-1.0, 1.0, |x| x.powi(even as i32));
            assert!((got_even - exact_even).abs() < 1e-13 * exact_even.abs().max(1.0));
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1usize, 5, 20, 61, 128] {
            let r = GaussRule::new(n);
            let total: f64 = r.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}: {total}");
        }
    }
}

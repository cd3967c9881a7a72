//! Cubic spline interpolation with not-a-knot end conditions.
//!
//! Outside the node range the spline is extended by its boundary VALUE
//! (constant extension, zero slope). Iteration weights are represented as
//! "singular part + bounded spline"; the constant extension keeps the bounded
//! part bounded on the whole domain.

use super::RadialGrid;

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Interpolating spline through `(x_i, y_i)`; `x` strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2, "spline needs at least two nodes");
        for w in x.windows(2) {
            assert!(w[1] > w[0], "spline nodes must be strictly increasing");
        }
        let n = x.len();
        let m = if n == 2 {
            vec![0.0, 0.0]
        } else if n == 3 {
            // Single parabola through three points.
            let h0 = x[1] - x[0];
            let h1 = x[2] - x[1];
            let d0 = (y[1] - y[0]) / h0;
            let d1 = (y[2] - y[1]) / h1;
            let m = 2.0 * (d1 - d0) / (h0 + h1);
            vec![m, m, m]
        } else {
            not_a_knot_second_derivatives(&x, &y)
        };
        CubicSpline { x, y, m }
    }

    pub fn from_grid(grid: &RadialGrid) -> Self {
        CubicSpline::new(grid.nodes().to_vec(), grid.values().to_vec())
    }

    /// Sample `f` on the given nodes and interpolate.
    pub fn from_fn<F: Fn(f64) -> f64>(nodes: &[f64], f: F) -> Self {
        let y: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
        CubicSpline::new(nodes.to_vec(), y)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    fn segment(&self, s: f64) -> usize {
        // Index i with x[i] <= s < x[i+1], clamped to valid segments.
        let n = self.x.len();
        match self.x.partition_point(|&t| t <= s) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let n = self.x.len();
        if s <= self.x[0] {
            return self.y[0];
        }
        if s >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.segment(s);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn d1(&self, s: f64) -> f64 {
        let n = self.x.len();
        if s <= self.x[0] || s >= self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn d2(&self, s: f64) -> f64 {
        let n = self.x.len();
        if s <= self.x[0] || s >= self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        a * self.m[i] + b * self.m[i + 1]
    }
}

/// Second derivatives for the not-a-knot spline, n >= 4.
fn not_a_knot_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    // Unknowns M_1..M_{n-2}; the end values follow from third-derivative
    // continuity at x_1 and x_{n-2}.
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut lower = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];

    for (row, i) in (1..n - 1).enumerate() {
        rhs[row] = 6.0 * (slope[i] - slope[i - 1]);
        if row > 0 {
            lower[row] = h[i - 1];
        }
        diag[row] = 2.0 * (h[i - 1] + h[i]);
        if row + 1 < k {
            upper[row] = h[i];
        }
    }
    // Fold the left end condition  h1 M0 - (h0+h1) M1 + h0 M2 = 0  into row 0.
    let (h0, h1) = (h[0], h[1]);
    diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
    if k > 1 {
        upper[0] = (h1 * h1 - h0 * h0) / h1;
    }
    // Fold the right end condition into the last row.
    let (ha, hb) = (h[n - 3], h[n - 2]);
    diag[k - 1] = (hb + ha) * (ha + 2.0 * hb) / ha;
    if k > 1 {
        lower[k - 1] = (ha * ha - hb * hb) / ha;
    }

    // Thomas solve.
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..k {
        let w = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < k { upper[i] / w } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / w;
    }
    let mut mm = vec![0.0; k];
    mm[k - 1] = d[k - 1];
    for i in (0..k - 1).rev() {
        mm[i] = d[i] - c[i] * mm[i + 1];
    }

    let mut m = vec![0.0; n];
    m[1..=k].copy_from_slice(&mm);
    m[0] = m[1] + h0 / h1 * (m[1] - m[2]);
    m[n - 1] = m[n - 2] + hb / ha * (m[n - 2] - m[n - 3]);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chebyshev_nodes(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
            .collect()
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |s: f64| 1.0 - 2.0 * s + 3.0 * s * s - 0.5 * s * s * s;
        let nodes: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let sp = CubicSpline::from_fn(&nodes, f);
        for i in 0..100 {
            let s = i as f64 / 99.0;
            assert!((sp.value(s) - f(s)).abs() < 1e-13, "s = {s}");
        }
        // First and second derivatives of the cubic are also exact (interior).
        assert!((sp.d1(0.37) - (-2.0 + 6.0 * 0.37 - 1.5 * 0.37 * 0.37)).abs() < 1e-12);
        assert!((sp.d2(0.61) - (6.0 - 3.0 * 0.61)).abs() < 1e-11);
    }

    #[test]
    fn smooth_function_accuracy() {
        let f = |s: f64| (2.5 * s).sin() * (-s).exp();
        let nodes = chebyshev_nodes(200, 0.0, 1.0);
        let sp = CubicSpline::from_fn(&nodes, f);
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let s = i as f64 / 999.0;
            worst = worst.max((sp.value(s) - f(s)).abs());
        }
        assert!(worst < 1e-9, "max interpolation error {worst}");
    }

    #[test]
    fn constant_extension_beyond_range() {
        let nodes: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let sp = CubicSpline::from_fn(&nodes, |s| 2.0 + s);
        assert_eq!(sp.value(1.5), 3.0);
        assert_eq!(sp.d1(1.5), 0.0);
        assert_eq!(sp.d2(1.5), 0.0);
    }
}

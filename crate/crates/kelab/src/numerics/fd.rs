//! Central finite-difference stencils, real tensor partials and Wirtinger
//! (complex) mixed partials.

use num_complex::Complex64;

/// Accuracy order of the central stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accuracy {
    Second,
    Fourth,
}

/// Offsets and coefficients of the 1-D central stencil for the given
/// derivative order (coefficients still to be divided by `h^order`).
pub fn stencil(order: usize, accuracy: Accuracy) -> (Vec<i64>, Vec<f64>) {
    match (order, accuracy) {
        (0, _) => (vec![0], vec![1.0]),
        (1, Accuracy::Second) => (vec![-1, 1], vec![-0.5, 0.5]),
        (2, Accuracy::Second) => (vec![-1, 0, 1], vec![1.0, -2.0, 1.0]),
        (3, Accuracy::Second) => (vec![-2, -1, 1, 2], vec![-0.5, 1.0, -1.0, 0.5]),
        (4, Accuracy::Second) => (vec![-2, -1, 0, 1, 2], vec![1.0, -4.0, 6.0, -4.0, 1.0]),
        (1, Accuracy::Fourth) => (
            vec![-2, -1, 1, 2],
            vec![1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0],
        ),
        (2, Accuracy::Fourth) => (
            vec![-2, -1, 0, 1, 2],
            vec![-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
        ),
        (3, Accuracy::Fourth) => (
            vec![-3, -2, -1, 1, 2, 3],
            vec![0.125, -1.0, 1.625, -1.625, 1.0, -0.125],
        ),
        (4, Accuracy::Fourth) => (
            vec![-3, -2, -1, 0, 1, 2, 3],
            vec![
                -1.0 / 6.0,
                2.0,
                -6.5,
                28.0 / 3.0,
                -6.5,
                2.0,
                -1.0 / 6.0,
            ],
        ),
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// Mixed partial `d^{orders} f / dx^{orders}` at `x0` by tensor-product
/// central stencils with uniform step `h`.
pub fn mixed_partial<F>(f: &F, x0: &[f64], orders: &[usize], h: f64, accuracy: Accuracy) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x0.len(), orders.len());
    let stencils: Vec<(Vec<i64>, Vec<f64>)> =
        orders.iter().map(|&o| stencil(o, accuracy)).collect();
    let total_order: usize = orders.iter().sum();
    // Subtracting the centre value keeps the stencil exactly zero on
    // functions constant along the differentiated axes; the coefficient sums
    // only cancel to roundoff otherwise, which matters after the 1/h^order.
    let base = if total_order > 0 { f(x0) } else { 0.0 };
    let mut sum = 0.0;
    let mut idx = vec![0usize; x0.len()];
    let mut point = vec![0.0; x0.len()];
    loop {
        let mut coeff = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            coeff *= stencils[axis].1[i];
            point[axis] = x0[axis] + stencils[axis].0[i] as f64 * h;
        }
        sum += coeff * (f(&point) - base);
        // Advance the multi-index.
        let mut axis = 0;
        loop {
            if axis == x0.len() {
                return sum / h.powi(total_order as i32);
            }
            idx[axis] += 1;
            if idx[axis] < stencils[axis].0.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Wirtinger mixed partial of a real-valued function of `n` complex
/// variables:
///
/// `prod_j d^{holo_j}/dz_j^{holo_j}  d^{anti_j}/dzbar_j^{anti_j}  f`  at `z0`.
///
/// Each Wirtinger factor is expanded into real partials
/// (`d/dz = (d/dx - i d/dy)/2`, `d/dzbar = (d/dx + i d/dy)/2`) and the real
/// partials are evaluated with fourth-order central stencils.
pub fn wirtinger_partial<F>(f: &F, z0: &[Complex64], holo: &[usize], anti: &[usize], h: f64) -> Complex64
where
    F: Fn(&[Complex64]) -> f64,
{
    let n = z0.len();
    assert_eq!(holo.len(), n);
    assert_eq!(anti.len(), n);

    // Per complex axis: the list of ((x-order, y-order), complex coefficient)
    // terms of (d/dz)^a (d/dzbar)^b.
    let per_axis: Vec<Vec<((usize, usize), Complex64)>> = (0..n)
        .map(|j| expand_axis(holo[j], anti[j]))
        .collect();

    let x0: Vec<f64> = z0.iter().flat_map(|z| [z.re, z.im]).collect();
    let freal = |x: &[f64]| {
        let zs: Vec<Complex64> = (0..n).map(|j| Complex64::new(x[2 * j], x[2 * j + 1])).collect();
        f(&zs)
    };

    let mut total = Complex64::new(0.0, 0.0);
    let mut term = vec![0usize; n];
    loop {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut orders = vec![0usize; 2 * n];
        for (j, &t) in term.iter().enumerate() {
            let ((ox, oy), c) = per_axis[j][t];
            coeff *= c;
            orders[2 * j] = ox;
            orders[2 * j + 1] = oy;
        }
        total += coeff * mixed_partial(&freal, &x0, &orders, h, Accuracy::Fourth);
        let mut axis = 0;
        loop {
            if axis == n {
                return total;
            }
            term[axis] += 1;
            if term[axis] < per_axis[axis].len() {
                break;
            }
            term[axis] = 0;
            axis += 1;
        }
    }
}

/// Expand `(d/dz)^a (d/dzbar)^b` into real partials on one complex axis.
fn expand_axis(a: usize, b: usize) -> Vec<((usize, usize), Complex64)> {
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let mut out = Vec::new();
    for p in 0..=a {
        for q in 0..=b {
            let coeff = half.powu((a + b) as u32)
                * binomial(a, p)
                * binomial(b, q)
                * (-i).powu((a - p) as u32)
                * i.powu((b - q) as u32);
            out.push(((p + q, (a - p) + (b - q)), coeff));
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for j in 0..k {
        v *= (n - j) as f64 / (j + 1) as f64;
    }
    v
}

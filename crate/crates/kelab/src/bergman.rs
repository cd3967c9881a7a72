//! Weighted Bergman spaces on radial domains.
//!
//! For a radial weight the monomials `z^j` are orthogonal, so the space is
//! described by its diagonal Gram data: the moments
//! `m_j = ||z^j||^2 = pi * \int_0^{s_max} s^j m(s) ds` of the measure density
//! `m(s) = e^{-(k-1) phi(s) - phi_L(s)} V(s)`. The kernel on the diagonal is
//! `K(s) = sum_j s^j / m_j` and the Bergman function is `B = K e^{-k phi}`.
//!
//! Moments are computed in log space on a shared node set: substituting
//! `sigma = 1 - e^{-v}` turns every moment integrand into a bump of uniform
//! width `~(beta+1)^{-1/2}` in `v`, so one panelised Gauss rule serves all
//! `j` at once. Sharing nodes also makes the exact kernel identities (shift
//! equivariance, domination) hold to machine precision, since they become
//! node-wise algebraic identities of the quadrature sums.



use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Background, RadialPotential};
use crate::numerics::gauss::GaussRule;
use crate::numerics::ln_beta;

/// Default fraction of `s_max` up to which kernels are evaluated.
pub const DEFAULT_EVAL_CAP: f64 = 0.99;

/// Tuning knobs for moment computation and kernel evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SpaceOptions {
    /// Kernel evaluation radius as a fraction of `s_max`.
    pub eval_cap_frac: f64,
    /// Truncation target: grow `J` until `tail <= target_tail * K` at the cap.
    pub target_tail: f64,
    /// Hard failure threshold of `tail / K` for kernel evaluation.
    pub tail_fail: f64,
    /// Cap on the truncation order `J`.
    pub j_cap: usize,
    /// Gauss points per `v`-panel of the moment quadrature.
    pub points_per_panel: usize,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        SpaceOptions {
            eval_cap_frac: DEFAULT_EVAL_CAP,
            target_tail: 1e-13,
            tail_fail: 1e-6,
            j_cap: 1 << 17,
            points_per_panel: 20,
        }
    }
}

impl SpaceOptions {
    pub fn with_eval_cap(mut self, frac: f64) -> Self {
        self.eval_cap_frac = frac;
        self
    }
}

/// Density against `dx dy` of the weighted measure `e^{-k phi} d mu_phi`
/// with `mu_phi = e^{phi - phi_L} Omega` (dimension one):
/// `m(s) = e^{-(k-1) phi(s) - phi_L(s)} V(s)`.
pub fn measure_density(
    phi: &RadialPotential,
    background: &Background,
    k: u32,
    s: f64,
) -> Result<f64> {
    if !(0.0..phi.s_max()).contains(&s) {
        return Err(Error::OutOfDomain {
            s,
            s_max: phi.s_max(),
        });
    }
    let parts = WeightParts::new(phi, background, k);
    Ok((parts.beta * (phi.s_max() - s).ln() + parts.ln_h(s)).exp())
}

/// Decomposition of the measure density as
/// `(s_max - s)^beta * exp(ln_h(s))` with `ln_h` bounded up to the boundary.
struct WeightParts<'a> {
    phi: &'a RadialPotential,
    background: &'a Background,
    k: u32,
    beta: f64,
}

impl<'a> WeightParts<'a> {
    fn new(phi: &'a RadialPotential, background: &'a Background, k: u32) -> Self {
        let beta = (k as f64 - 1.0) * phi.log_coeff()
            + background.phi_l.log_coeff()
            + background.omega.boundary_exponent;
        WeightParts {
            phi,
            background,
            k,
            beta,
        }
    }

    fn ln_h(&self, s: f64) -> f64 {
        -(self.k as f64 - 1.0) * self.phi.bounded_part(s)
            - self.background.phi_l.bounded_part(s)
            + self.background.omega.ln_bounded(s)
    }
}

/// Diagonal Gram data `m_j = ||z^j||^2` of a weighted space, stored in log
/// form so deep truncations do not underflow.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    s_max: f64,
    /// Absolute radius where the truncation target was enforced.
    eval_cap: f64,
    ln_m: Vec<f64>,
    /// Additive bound on `sum_{j > J} s^j / m_j` at `eval_cap`.
    pub tail_bound: f64,
    tail_fail: f64,
}

impl MomentSequence {
    /// Construct directly from log-moments (used by oracles and tests).
    pub fn from_ln_moments(ln_m: Vec<f64>, s_max: f64, eval_cap: f64, tail_fail: f64) -> Self {
        assert!(ln_m.len() >= 2);
        let mut seq = MomentSequence {
            s_max,
            eval_cap,
            ln_m,
            tail_bound: f64::INFINITY,
            tail_fail,
        };
        seq.tail_bound = seq
            .tail_ln(eval_cap)
            .map(f64::exp)
            .unwrap_or(f64::INFINITY);
        seq
    }

    pub fn truncation(&self) -> usize {
        self.ln_m.len() - 1
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn eval_cap(&self) -> f64 {
        self.eval_cap
    }

    pub fn ln_moment(&self, j: usize) -> f64 {
        self.ln_m[j]
    }

    pub fn moment(&self, j: usize) -> f64 {
        self.ln_m[j].exp()
    }

    /// Moments as plain values (tiny high-order entries may underflow to 0;
    /// use [`Self::ln_moment`] for those).
    pub fn moment_values(&self) -> Vec<f64> {
        self.ln_m.iter().map(|&l| l.exp()).collect()
    }

    /// Geometric tail bound `ln(sum_{j>J} s^j/m_j)` from the last moment
    /// ratio; valid because the ratios `m_{j+1}/m_j` increase in `j`
    /// (log-convexity), so `q = s * m_{J-1}/m_J` dominates all later ratios.
    fn tail_ln(&self, s: f64) -> Option<f64> {
        let jj = self.ln_m.len() - 1;
        let q = s.ln() + self.ln_m[jj - 1] - self.ln_m[jj];
        if q >= 0.0 {
            return None;
        }
        let t_last = jj as f64 * s.ln() - self.ln_m[jj];
        Some(t_last + q - (-q.exp_m1()).ln())
    }

    fn term(&self, j: usize, ln_s: f64) -> f64 {
        j as f64 * ln_s - self.ln_m[j]
    }

    /// Index of the largest term `s^j / m_j`. The increments
    /// `ln s - (ln m_j - ln m_{j-1})` decrease in `j` (log-convex moments),
    /// so the peak is found by bisection on their sign.
    fn peak_index(&self, ln_s: f64) -> usize {
        let jj = self.ln_m.len() - 1;
        let rising = |j: usize| ln_s - (self.ln_m[j] - self.ln_m[j - 1]) > 0.0;
        let (mut lo, mut hi) = (1usize, jj + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if rising(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo - 1
    }

    /// `ln K(s) = ln sum_j s^j / m_j`, summed around the (unique) peak term.
    pub fn kernel_ln(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.eval_cap * (1.0 + 1e-12)).contains(&s) {
            return Err(Error::OutOfDomain {
                s,
                s_max: self.eval_cap,
            });
        }
        if s == 0.0 {
            return Ok(-self.ln_m[0]);
        }
        let ln_s = s.ln();
        let jj = self.ln_m.len() - 1;
        let peak = self.peak_index(ln_s);
        let t_peak = self.term(peak, ln_s);
        let mut sum = 1.0;
        let mut j = peak;
        while j > 0 {
            j -= 1;
            let dt = self.term(j, ln_s) - t_peak;
            if dt < -46.0 {
                break;
            }
            sum += dt.exp();
        }
        j = peak;
        while j < jj {
            j += 1;
            let dt = self.term(j, ln_s) - t_peak;
            if dt < -46.0 {
                break;
            }
            sum += dt.exp();
        }
        let ln_k = t_peak + sum.ln();
        if let Some(tail) = self.tail_ln(s) {
            let rel = (tail - ln_k).exp();
            if rel > self.tail_fail {
                return Err(Error::TailDominates {
                    s,
                    tail: tail.exp(),
                    limit: self.tail_fail * ln_k.exp(),
                });
            }
        } else {
            return Err(Error::TailDominates {
                s,
                tail: f64::INFINITY,
                limit: self.tail_fail,
            });
        }
        Ok(ln_k)
    }

    /// `K(s) = sum_{j<=J} s^j / m_j` (may overflow to `inf` for very deep
    /// weights; prefer [`Self::kernel_ln`] in that regime).
    pub fn kernel_eval(&self, s: f64) -> Result<f64> {
        Ok(self.kernel_ln(s)?.exp())
    }

    /// Peak term index and the index window carrying the kernel mass at `s`.
    fn kernel_window(&self, s: f64) -> (usize, usize) {
        let jj = self.ln_m.len() - 1;
        if s == 0.0 {
            return (0, 0);
        }
        let ln_s = s.ln();
        let peak = self.peak_index(ln_s);
        let t_peak = self.term(peak, ln_s);
        let mut lo = peak;
        while lo > 0 && self.term(lo - 1, ln_s) - t_peak >= -46.0 {
            lo -= 1;
        }
        let mut hi = peak;
        while hi < jj && self.term(hi + 1, ln_s) - t_peak >= -46.0 {
            hi += 1;
        }
        (lo, hi)
    }
}

/// Shared `v`-panel node set of the moment quadrature. The layout depends
/// only on `(beta, J, s_max)`, never on the bounded weight factor, so two
/// weights with the same boundary exponent are integrated on identical nodes.
struct MomentNodes {
    /// `ln sigma_i` at the nodes (`sigma = s / s_max`).
    ln_sigma: Vec<f64>,
    /// `-(beta+1) v_i + ln(gauss weight * half width)` at the nodes.
    base: Vec<f64>,
    /// Node position `s_i` (absolute).
    s: Vec<f64>,
}

fn moment_nodes(beta: f64, j_max: usize, s_max: f64, points: usize) -> MomentNodes {
    // Fine panels (a few per bump width ~(beta+1)^{-1/2}) cover every moment
    // peak location v <= ln(J/(beta+1)); past the last peak all integrands
    // decay like e^{-(beta+1)v}, which wide panels resolve at the same Gauss
    // accuracy, so the tail out to e^{-45} costs only a handful of panels.
    let fine = (12.0 / (beta + 1.0)).min(0.1);
    let wide = 12.0 / (beta + 1.0);
    let v_cut = ((j_max as f64 + beta + 2.0) / (beta + 1.0)).ln() + 2.0;
    let v_max = v_cut + 45.0 / (beta + 1.0);
    let rule = GaussRule::new(points);
    let mut breaks = Vec::new();
    let mut v = 0.0;
    while v < v_cut {
        breaks.push(v);
        v += fine;
    }
    while v < v_max {
        breaks.push(v);
        v += wide;
    }
    breaks.push(v);
    let n = (breaks.len() - 1) * points;
    let mut ln_sigma = Vec::with_capacity(n);
    let mut base = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for w in breaks.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = w[0] + half;
        for (&x, &gw) in rule.nodes.iter().zip(&rule.weights) {
            let v = mid + half * x;
            let sigma = -(-v).exp_m1(); // 1 - e^{-v}, stable
            ln_sigma.push(sigma.ln());
            base.push(-(beta + 1.0) * v + (gw * half).ln());
            s.push(s_max * sigma);
        }
    }
    MomentNodes { ln_sigma, base, s }
}

/// Compute `m_0 .. m_J` of the weight `e^{-(k-1)phi - phi_L} V` in log form.
pub fn compute_moments(
    background: &Background,
    phi: &RadialPotential,
    k: u32,
    j_max: usize,
    opts: &SpaceOptions,
) -> Result<MomentSequence> {
    let parts = WeightParts::new(phi, background, k);
    if parts.beta <= -1.0 {
        return Err(Error::NonIntegrable {
            exponent: parts.beta,
        });
    }
    let s_max = phi.s_max();
    let nodes = moment_nodes(parts.beta, j_max, s_max, opts.points_per_panel);
    // ln h at the nodes, evaluated once and reused for every moment.
    let mut ln_w = Vec::with_capacity(nodes.base.len());
    for (i, &b) in nodes.base.iter().enumerate() {
        let lh = parts.ln_h(nodes.s[i]);
        if !lh.is_finite() {
            return Err(Error::NonFinite { s: nodes.s[i] });
        }
        ln_w.push(b + lh);
    }

    let ln_scale = std::f64::consts::PI.ln() + (parts.beta + 1.0) * s_max.ln();
    let n = ln_w.len();
    let mut ln_m = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let jf = j as f64;
        let mut peak = f64::NEG_INFINITY;
        for i in 0..n {
            let t = ln_w[i] + jf * nodes.ln_sigma[i];
            if t > peak {
                peak = t;
            }
        }
        let mut sum = 0.0;
        for i in 0..n {
            let t = ln_w[i] + jf * nodes.ln_sigma[i] - peak;
            if t >= -46.0 {
                sum += t.exp();
            }
        }
        ln_m.push(ln_scale + jf * s_max.ln() + peak + sum.ln());
    }
    Ok(MomentSequence::from_ln_moments(
        ln_m,
        s_max,
        opts.eval_cap_frac * s_max,
        opts.tail_fail,
    ))
}

/// A weighted Bergman space: the iterate weight `phi` at order `k` over an
/// instance, with moments truncated deep enough for the evaluation cap.
#[derive(Debug, Clone)]
pub struct WeightedSpace {
    pub k: u32,
    pub phi: RadialPotential,
    pub background: Background,
    pub moments: MomentSequence,
}

impl WeightedSpace {
    /// Build the space, growing the truncation until the geometric tail at
    /// the evaluation cap is below `opts.target_tail` times the kernel.
    pub fn build(
        background: &Background,
        phi: &RadialPotential,
        k: u32,
        opts: &SpaceOptions,
    ) -> Result<WeightedSpace> {
        assert!(k >= 1, "weight order must be >= 1");
        let parts = WeightParts::new(phi, background, k);
        if parts.beta <= -1.0 {
            return Err(Error::NonIntegrable {
                exponent: parts.beta,
            });
        }
        let sigma = opts.eval_cap_frac;
        let mut j = (2.0 * (parts.beta + 1.0) * sigma / (1.0 - sigma))
            .ceil()
            .max(64.0) as usize;
        loop {
            let j_run = j.min(opts.j_cap);
            let moments = compute_moments(background, phi, k, j_run, opts)?;
            let cap = moments.eval_cap();
            let ok = match (moments.tail_ln(cap), moments.kernel_ln(cap)) {
                (Some(tail), Ok(ln_k)) => (tail - ln_k).exp() <= opts.target_tail,
                _ => false,
            };
            if ok || j_run == opts.j_cap {
                return Ok(WeightedSpace {
                    k,
                    phi: phi.clone(),
                    background: background.clone(),
                    moments,
                });
            }
            j *= 2;
        }
    }

    /// Boundary exponent of the weighted measure density.
    pub fn boundary_exponent(&self) -> f64 {
        WeightParts::new(&self.phi, &self.background, self.k).beta
    }

    pub fn kernel_ln(&self, s: f64) -> Result<f64> {
        self.moments.kernel_ln(s)
    }

    pub fn kernel_eval(&self, s: f64) -> Result<f64> {
        self.moments.kernel_eval(s)
    }

    /// Bergman function `B(s) = K(s) e^{-k phi(s)}`.
    pub fn bergman_function(&self, s: f64) -> Result<f64> {
        let ln_k = self.moments.kernel_ln(s)?;
        let phi = self.phi.value(s)?;
        Ok((ln_k - self.k as f64 * phi).exp())
    }
}

/// Kernel evaluator backed by a dense Gram matrix, built by 2-D quadrature
/// over the disc. Independent of the diagonal moment path; for radial
/// weights the two must agree.
pub struct GramKernel {
    /// Lower Cholesky factor of the Gram matrix.
    chol: DMatrix<Complex<f64>>,
    /// Estimated condition number of the Gram matrix.
    pub condition: f64,
    /// Largest `|G_ij| / sqrt(G_ii G_jj)` over `i != j`.
    pub max_offdiag_ratio: f64,
}

impl GramKernel {
    /// `K(z) = v(z)^H G^{-1} v(z)` with `v = (1, z, ..., z^J)`.
    pub fn eval(&self, z: Complex64) -> f64 {
        let n = self.chol.nrows();
        let mut v = DVector::from_element(n, Complex::new(0.0, 0.0));
        let mut p = Complex64::new(1.0, 0.0);
        for a in 0..n {
            v[a] = Complex::new(p.re, p.im);
            p *= z;
        }
        // Forward substitution y = L^{-1} v; K = ||y||^2.
        let mut y = v;
        for i in 0..n {
            for k in 0..i {
                let yk = y[k];
                y[i] -= self.chol[(i, k)] * yk;
            }
            y[i] /= self.chol[(i, i)];
        }
        y.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Evaluate at the real point with `|z|^2 = s`.
    pub fn eval_radial(&self, s: f64) -> f64 {
        self.eval(Complex64::new(s.sqrt(), 0.0))
    }
}

/// Build the dense Gram kernel oracle for a weight density `w(x, y)` on the
/// disc of radius `sqrt(s_max)`, with monomial basis `1, z, ..., z^{basis}`.
///
/// Radial quadrature uses boundary-clustered Gauss panels; the angular
/// integral uses the trapezoid rule, which is exact for the trigonometric
/// polynomials appearing here once `n_theta > 2 * basis`.
pub fn gram_oracle<W>(
    weight: &W,
    s_max: f64,
    basis: usize,
    n_theta: usize,
) -> Result<GramKernel>
where
    W: Fn(f64, f64) -> f64,
{
    assert!(basis <= 64, "dense Gram oracle is desk-scale: basis <= 64");
    assert!(n_theta > 2 * basis + 1, "angular rule too coarse");
    let radius = s_max.sqrt();
    let n = basis + 1;

    // Radial nodes: uniform panels plus geometric refinement toward the rim.
    let rule = GaussRule::new(16);
    let mut breaks = Vec::new();
    for i in 0..=24 {
        breaks.push(radius * 0.9 * i as f64 / 24.0);
    }
    let mut gap = 0.1 * radius;
    for _ in 0..18 {
        gap *= 0.55;
        breaks.push(radius - gap);
    }
    breaks.push(radius);
    let mut r_nodes = Vec::new();
    let mut r_weights = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (&x, &gw) in rule.nodes.iter().zip(&rule.weights) {
            r_nodes.push(mid + half * x);
            r_weights.push(gw * half);
        }
    }

    let mut gram = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    // Radial power sums per angle: I_p(theta) = \int r^{p+1} w dr.
    let mut powers = vec![0.0; 2 * basis + 1];
    for t in 0..n_theta {
        let theta = t as f64 * dtheta;
        let (sin_t, cos_t) = theta.sin_cos();
        for p in powers.iter_mut() {
            *p = 0.0;
        }
        for (&r, &rw) in r_nodes.iter().zip(&r_weights) {
            let wv = weight(r * cos_t, r * sin_t);
            if !wv.is_finite() {
                return Err(Error::NonFinite { s: r * r });
            }
            let mut rp = r * rw * wv;
            for p in powers.iter_mut() {
                *p += rp;
                rp *= r;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let phase = (a as f64 - b as f64) * theta;
                let e = Complex::new(phase.cos(), phase.sin());
                gram[(a, b)] += e * Complex::new(powers[a + b] * dtheta, 0.0);
            }
        }
    }

    // Hermitise away angular roundoff before factorising.
    let mut max_offdiag_ratio: f64 = 0.0;
    for a in 0..n {
        for b in 0..a {
            let sym = (gram[(a, b)] + gram[(b, a)].conj()) * Complex::new(0.5, 0.0);
            gram[(a, b)] = sym;
            gram[(b, a)] = sym.conj();
            let scale = (gram[(a, a)].re * gram[(b, b)].re).sqrt();
            max_offdiag_ratio = max_offdiag_ratio.max(sym.norm() / scale);
        }
    }

    let eig = gram.clone().symmetric_eigenvalues();
    let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min_eig = eig.iter().cloned().fold(f64::MAX, f64::min);
    let condition = if min_eig > 0.0 {
        max_eig / min_eig
    } else {
        f64::INFINITY
    };
    if condition > 1e12 {
        return Err(Error::IllConditioned { cond: condition });
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::IllConditioned { cond: condition })?
        .l();
    Ok(GramKernel {
        chol,
        condition,
        max_offdiag_ratio,
    })
}

/// Outcome of the extremal-characterisation check at one point.
#[derive(Debug, Clone)]
pub struct ExtremalReport {
    pub s: f64,
    pub trials: usize,
    /// Largest `|s(x)|^2 e^{-k phi(x)} / B(x)` over the random sections.
    pub max_random_ratio: f64,
    /// Ratio attained by the explicit extremal section.
    pub extremal_ratio: f64,
}

/// Ratio `|s(x)|^2 e^{-k phi(x)} / B(x)` of the section with orthonormal
/// coefficients `coeffs` (re/im interleaved) on the kernel window at `s`.
pub fn section_ratio(space: &WeightedSpace, s: f64, coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 2 || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidSection {
            reason: "coefficients must be finite".into(),
        });
    }
    let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidSection {
            reason: "zero section".into(),
        });
    }
    let moments = &space.moments;
    let (lo, hi) = moments.kernel_window(s);
    let ln_s = if s == 0.0 { f64::NEG_INFINITY } else { s.ln() };
    let t_peak = if s == 0.0 {
        -moments.ln_moment(0)
    } else {
        (lo..=hi)
            .map(|j| moments.term(j, ln_s))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // Section sum_j a_j z^j / sqrt(m_j) with ||a|| = 1; its normalised value
    // against the kernel partial sum is Cauchy–Schwarz-bounded by 1.
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in lo..=hi {
        let idx = 2 * (j - lo);
        if idx + 1 >= coeffs.len() {
            break;
        }
        let a = Complex64::new(coeffs[idx], coeffs[idx + 1]);
        let dt = if s == 0.0 && j > 0 {
            f64::NEG_INFINITY
        } else if s == 0.0 {
            0.0
        } else {
            moments.term(j, ln_s) - t_peak
        };
        if dt.is_finite() {
            num += a * (0.5 * dt).exp();
            den += dt.exp();
        }
    }
    Ok(num.norm_sqr() / (norm_sq * den))
}

/// Sample random unit-norm sections and verify the extremal characterisation
/// of the Bergman function: every ratio is `<= 1 + 1e-9` and the explicit
/// extremal section attains `1` to `1e-9`.
pub fn extremal_check(
    space: &WeightedSpace,
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<ExtremalReport> {
    let moments = &space.moments;
    let (lo, hi) = moments.kernel_window(s);
    let dim = hi - lo + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let mut coeffs = vec![0.0; 2 * dim];
        for c in coeffs.iter_mut() {
            *c = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let ratio = section_ratio(space, s, &coeffs)?;
        if ratio > 1.0 + 1e-9 {
            return Err(Error::ExtremalViolation {
                ratio,
                s,
                coefficients: coeffs,
            });
        }
        max_ratio = max_ratio.max(ratio);
    }

    // Explicit extremal section: a_j proportional to x^j / sqrt(m_j).
    let ln_s = if s == 0.0 { f64::NEG_INFINITY } else { s.ln() };
    let mut coeffs = vec![0.0; 2 * dim];
    let t_peak = if s == 0.0 {
        -moments.ln_moment(0)
    } else {
        (lo..=hi)
            .map(|j| moments.term(j, ln_s))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    for j in lo..=hi {
        let dt = if s == 0.0 {
            if j == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            moments.term(j, ln_s) - t_peak
        };
        coeffs[2 * (j - lo)] = (0.5 * dt).exp();
    }
    let extremal_ratio = section_ratio(space, s, &coeffs)?;
    if extremal_ratio < 1.0 - 1e-9 || extremal_ratio > 1.0 + 1e-9 {
        return Err(Error::ExtremalViolation {
            ratio: extremal_ratio,
            s,
            coefficients: coeffs,
        });
    }
    Ok(ExtremalReport {
        s,
        trials,
        max_random_ratio: max_ratio,
        extremal_ratio,
    })
}

/// Log-moments of the Poincaré-weighted space in closed form:
/// `m_j = 2^{-(k-1)} pi B(j+1, 2k-1)` on the unit disc.
pub fn poincare_ln_moment(k: u32, j: usize) -> f64 {
    -(k as f64 - 1.0) * 2.0_f64.ln()
        + std::f64::consts::PI.ln()
        + ln_beta(j as f64 + 1.0, 2.0 * k as f64 - 1.0)
}

//! The Bergman-kernel fixed-point iteration `phi_{k+1} = beta_k(phi_k)` with
//! `beta_k(phi) = (log K_{k phi, mu_phi} - log d_k) / k`, its normalisation
//! schedules, convergence diagnostics against exact references, and the
//! key-lemma sandwich check.
//!
//! Convention note: under `dd^c = (i/2) d d-bar` the exact disc computation
//! forces the leading Bergman constant `(k/pi)^n`, so the schedules default
//! to `c_conv = pi`; the constant is configurable and the disc fixed point is
//! the calibration authority.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::bergman::{SpaceOptions, WeightedSpace};
use crate::error::{Error, Result};
use crate::geometry::{chebyshev_grid, MAInstance, RadialPotential};
use crate::numerics::spline::CubicSpline;

/// Normalisation schedule family.
#[derive(Clone)]
pub enum ScheduleKind {
    /// `d_k = (k / c_conv)^n`.
    Generic,
    /// `d_k = (k / c_conv)^n * max(1/2, 1 - n/(2k))`; the clamp is active
    /// only for `k <= n`.
    KahlerEinstein,
    /// Arbitrary user-supplied positive sequence.
    Custom(Arc<dyn Fn(u32) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleKind::Generic => write!(f, "generic"),
            ScheduleKind::KahlerEinstein => write!(f, "kahler_einstein"),
            ScheduleKind::Custom(_) => write!(f, "custom"),
        }
    }
}

/// The `d_k` schedule with its dimension and convention constant.
#[derive(Debug, Clone)]
pub struct DkSchedule {
    pub kind: ScheduleKind,
    pub dimension: u32,
    pub c_conv: f64,
}

impl DkSchedule {
    pub fn generic(dimension: u32) -> Self {
        DkSchedule {
            kind: ScheduleKind::Generic,
            dimension,
            c_conv: std::f64::consts::PI,
        }
    }

    pub fn kahler_einstein(dimension: u32) -> Self {
        DkSchedule {
            kind: ScheduleKind::KahlerEinstein,
            dimension,
            c_conv: std::f64::consts::PI,
        }
    }

    pub fn custom(f: Arc<dyn Fn(u32) -> f64 + Send + Sync>) -> Self {
        DkSchedule {
            kind: ScheduleKind::Custom(f),
            dimension: 1,
            c_conv: std::f64::consts::PI,
        }
    }

    pub fn with_c_conv(mut self, c_conv: f64) -> Self {
        assert!(c_conv > 0.0);
        self.c_conv = c_conv;
        self
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::Generic => "generic",
            ScheduleKind::KahlerEinstein => "kahler_einstein",
            ScheduleKind::Custom(_) => "custom",
        }
    }
}

/// Schedule value `d_k`.
pub fn d_k(schedule: &DkSchedule, k: u32) -> f64 {
    assert!(k >= 1);
    let n = schedule.dimension as f64;
    let lead = (k as f64 / schedule.c_conv).powf(n);
    match &schedule.kind {
        ScheduleKind::Generic => lead,
        ScheduleKind::KahlerEinstein => lead * (0.5_f64).max(1.0 - n / (2.0 * k as f64)),
        ScheduleKind::Custom(f) => f(k),
    }
}

/// Measurement and representation grids of the iteration.
#[derive(Debug, Clone)]
pub struct IterateOptions {
    /// First iteration index (the `k = 1` step is degenerate; start at 2).
    pub k_start: u32,
    /// Number of sup-norm grid points.
    pub sup_points: usize,
    /// Sup norms are taken over `[0, sup_cap * s_max]`.
    pub sup_cap: f64,
    /// Iterates are represented as splines over `[0, rep_cap * s_max]` and
    /// extended by their boundary value beyond; `rep_cap > sup_cap` so the
    /// kernels at the sup grid integrate an accurately represented weight.
    pub rep_cap: f64,
    /// Space/truncation options (the evaluation cap must reach `rep_cap`).
    pub space: SpaceOptions,
    /// Record the fixed-point defect `eps_k` at every step (costs a second
    /// space build per step; traces that only need `e_k` can skip it, the
    /// column is then NaN).
    pub record_defect: bool,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            k_start: 2,
            sup_points: 512,
            sup_cap: 0.99,
            rep_cap: 0.995,
            space: SpaceOptions::default().with_eval_cap(0.995),
            record_defect: true,
        }
    }
}

impl IterateOptions {
    /// Chebyshev sup-norm grid in absolute `s`.
    pub fn sup_grid(&self, s_max: f64) -> Vec<f64> {
        chebyshev_grid(self.sup_points, 0.0, self.sup_cap * s_max)
    }

    /// Spline representation grid: uniform over the bulk, geometrically
    /// clustered toward the cap.
    fn rep_grid(&self, s_max: f64) -> Vec<f64> {
        let mut nodes: Vec<f64> = (0..=180)
            .map(|i| 0.9 * s_max * i as f64 / 180.0)
            .collect();
        let mut gap = 0.1;
        let target = 1.0 - self.rep_cap;
        while gap > target * 1.0001 {
            gap = (gap * 0.93).max(target);
            nodes.push(s_max * (1.0 - gap));
        }
        nodes
    }
}

/// `beta_k` evaluated pointwise (no spline fitting):
/// `(ln K_{k phi}(s) - ln d_k) / k`.
pub fn beta_k_values(
    space: &WeightedSpace,
    schedule: &DkSchedule,
    points: &[f64],
) -> Result<Vec<f64>> {
    let k = space.k;
    let ln_dk = d_k(schedule, k).ln();
    points
        .iter()
        .map(|&s| Ok((space.kernel_ln(s)? - ln_dk) / k as f64))
        .collect()
}

/// One iteration step: returns `beta_k(phi)` as a new radial potential,
/// represented as the shared logarithmic boundary part plus a bounded spline.
pub fn beta_k(
    phi: &RadialPotential,
    k: u32,
    instance: &MAInstance,
    schedule: &DkSchedule,
    opts: &IterateOptions,
) -> Result<RadialPotential> {
    assert!(k >= 2, "the k = 1 step is degenerate; start at k = 2");
    let space = WeightedSpace::build(&instance.background, phi, k, &opts.space)?;
    beta_k_from_space(&space, instance, schedule, opts)
}

fn beta_k_from_space(
    space: &WeightedSpace,
    instance: &MAInstance,
    schedule: &DkSchedule,
    opts: &IterateOptions,
) -> Result<RadialPotential> {
    let k = space.k;
    let s_max = instance.s_max();
    let ln_dk = d_k(schedule, k).ln();
    // The kernel grows like (s_max - s)^{-(beta + 2)}, so the iterate's
    // logarithmic coefficient is (beta + 2) / k; identically 2 on the
    // Poincaré family.
    let c_out = (space.boundary_exponent() + 2.0) / k as f64;
    let nodes = opts.rep_grid(s_max);
    let mut values = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        let b = (space.kernel_ln(s)? - ln_dk) / k as f64 + c_out * (s_max - s).ln();
        values.push(b);
    }
    let spline = CubicSpline::new(nodes, values);
    let out = RadialPotential::new(
        s_max,
        c_out,
        Arc::new(spline),
        format!("beta_{k}({})", space.phi.description()),
    );
    // Log-kernels are psh, so the output density must be nonnegative up to
    // representation error.
    for &s in &opts.sup_grid(s_max) {
        let g = out.density(s)?;
        if g < -1e-8 {
            return Err(Error::NonPositiveMetric { s, density: g });
        }
    }
    Ok(out)
}

/// `phi(s) - psi(s)` evaluated stably through the bounded parts; finite even
/// at the boundary when the logarithmic coefficients agree.
pub fn weight_difference(phi: &RadialPotential, psi: &RadialPotential, s: f64) -> f64 {
    let dc = phi.log_coeff() - psi.log_coeff();
    let log_part = if dc == 0.0 {
        0.0
    } else {
        -dc * (phi.s_max() - s).ln()
    };
    log_part + phi.bounded_part(s) - psi.bounded_part(s)
}

/// Sup over the grid of `|phi - psi|`.
pub fn sup_difference(phi: &RadialPotential, psi: &RadialPotential, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&s| weight_difference(phi, psi, s).abs())
        .fold(0.0, f64::max)
}

/// Fixed-point defect `eps_k = sup | beta_k(phi_inf) - phi_inf |` over the
/// sup grid, by direct kernel evaluation at the grid points.
pub fn fixed_point_defect(
    instance: &MAInstance,
    schedule: &DkSchedule,
    k: u32,
    opts: &IterateOptions,
) -> Result<f64> {
    let grid = opts.sup_grid(instance.s_max());
    let space = WeightedSpace::build(&instance.background, &instance.phi_inf, k, &opts.space)?;
    let beta = beta_k_values(&space, schedule, &grid)?;
    let mut sup: f64 = 0.0;
    for (&s, &b) in grid.iter().zip(&beta) {
        sup = sup.max((b - instance.phi_inf.value(s)?).abs());
    }
    Ok(sup)
}

/// Per-step record of an iteration run.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub k: u32,
    /// `sup | phi_k - phi_inf |` over the measurement grid.
    pub sup_error: f64,
    /// `sup | beta_k(phi_inf) - phi_inf |` measured on the same instance.
    pub eps_k: f64,
    /// Truncation order of the iterate's space at this step.
    pub truncation: usize,
    /// Wall time of the step.
    pub seconds: f64,
}

/// Full iteration trace with its configuration snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
    pub instance: String,
    pub schedule: String,
    pub dimension: u32,
    pub c_conv: f64,
    pub grid_points: usize,
    pub sup_cap: f64,
    pub seed: u64,
}

impl IterationTrace {
    fn validate(&self) {
        let mut prev = 0;
        for r in &self.records {
            assert!(r.k > prev, "trace k values must be strictly increasing");
            assert!(r.sup_error >= 0.0 && !(r.eps_k < 0.0));
            prev = r.k;
        }
    }

    /// CSV with the columns `k,sup_error,eps_k,truncation_J,seconds`,
    /// rendered at fixed 17-significant-digit precision.
    ///
    /// `deterministic_timing` zeroes the seconds column so identical configs
    /// produce byte-identical files; measured timings stay available in the
    /// JSON manifest.
    pub fn to_csv(&self, deterministic_timing: bool) -> String {
        let mut out = String::from("k,sup_error,eps_k,truncation_J,seconds\n");
        for r in &self.records {
            let secs = if deterministic_timing { 0.0 } else { r.seconds };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k,
                fmt_f64(r.sup_error),
                fmt_f64(r.eps_k),
                r.truncation,
                fmt_f64(secs),
            ));
        }
        out
    }

    /// JSON manifest describing the run configuration and timings.
    pub fn manifest_json(&self) -> serde_json::Value {
        serde_json::json!({
            "instance": self.instance,
            "schedule": self.schedule,
            "dimension": self.dimension,
            "c_conv": self.c_conv,
            "grid": {"points": self.grid_points, "sup_cap": self.sup_cap},
            "seed": self.seed,
            "steps": self.records.len(),
            "total_seconds": self.records.iter().map(|r| r.seconds).sum::<f64>(),
        })
    }
}

/// 17-significant-digit scientific rendering (byte-stable across runs).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Run the iteration `phi_{j+1} = beta_j(phi_j)` for `j = k_start .. k_max`,
/// recording the sup error and the fixed-point defect at every step.
pub fn iterate(
    phi_1: &RadialPotential,
    instance: &MAInstance,
    schedule: &DkSchedule,
    k_max: u32,
    opts: &IterateOptions,
) -> Result<IterationTrace> {
    assert!(opts.k_start >= 2, "iteration starts at k >= 2");
    assert!(k_max >= opts.k_start);
    let grid = opts.sup_grid(instance.s_max());
    let mut phi = phi_1.clone();
    let mut records = Vec::new();
    let mut initial_error = f64::NAN;
    for k in opts.k_start..=k_max {
        let started = Instant::now();
        let sup_error = sup_difference(&phi, &instance.phi_inf, &grid);
        if k == opts.k_start {
            initial_error = sup_error;
        } else if sup_error > 10.0 * initial_error.max(1e-12) {
            return Err(Error::DivergenceDetected {
                k,
                error: sup_error,
                initial: initial_error,
            });
        }
        let eps_k = if opts.record_defect {
            fixed_point_defect(instance, schedule, k, opts)?
        } else {
            f64::NAN
        };
        let space = WeightedSpace::build(&instance.background, &phi, k, &opts.space)?;
        let truncation = space.moments.truncation();
        phi = beta_k_from_space(&space, instance, schedule, opts)?;
        records.push(TraceRecord {
            k,
            sup_error,
            eps_k,
            truncation,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let trace = IterationTrace {
        records,
        instance: instance.description().to_string(),
        schedule: schedule.kind_name().to_string(),
        dimension: schedule.dimension,
        c_conv: schedule.c_conv,
        grid_points: opts.sup_points,
        sup_cap: opts.sup_cap,
        seed: 0,
    };
    trace.validate();
    Ok(trace)
}

/// Outcome of the key-lemma sandwich check
/// `((k-1)/k) C1 - eps_k <= beta_k(phi) - phi_inf <= ((k-1)/k) C2 + eps_k`.
#[derive(Debug, Clone, Serialize)]
pub struct KeyLemmaReport {
    pub k: u32,
    /// Global lower bound of `phi - phi_inf`.
    pub c1: f64,
    /// Global upper bound of `phi - phi_inf`.
    pub c2: f64,
    /// Measured fixed-point defect of the instance at this `k`.
    pub eps_k: f64,
    /// Min over the grid of `beta_k(phi) - phi_inf - lower bound`.
    pub margin_low: f64,
    /// Min over the grid of `upper bound - (beta_k(phi) - phi_inf)`.
    pub margin_high: f64,
    pub pass: bool,
}

/// Check both key-lemma inequalities with the measured defect `eps_k`.
///
/// The bounds `C1, C2` are taken over a dense grid of the whole domain
/// (including the boundary value of the bounded parts): the lemma needs
/// global constants, and a sup capped at the measurement radius can be
/// exceeded by the kernel average near the rim.
pub fn lemma_key_check(
    phi: &RadialPotential,
    k: u32,
    instance: &MAInstance,
    schedule: &DkSchedule,
    opts: &IterateOptions,
) -> Result<KeyLemmaReport> {
    let eps_k = fixed_point_defect(instance, schedule, k, opts)?;
    lemma_key_check_with_defect(phi, k, instance, schedule, eps_k, opts)
}

/// Like [`lemma_key_check`] but reusing an already-measured defect `eps_k`
/// (it depends only on the instance, schedule and `k`, not on `phi`).
pub fn lemma_key_check_with_defect(
    phi: &RadialPotential,
    k: u32,
    instance: &MAInstance,
    schedule: &DkSchedule,
    eps_k: f64,
    opts: &IterateOptions,
) -> Result<KeyLemmaReport> {
    let s_max = instance.s_max();
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::NEG_INFINITY;
    let dense = 4096;
    for i in 0..=dense {
        let s = s_max * i as f64 / dense as f64;
        let d = weight_difference(phi, &instance.phi_inf, s);
        c1 = c1.min(d);
        c2 = c2.max(d);
    }

    let grid = opts.sup_grid(s_max);
    let space = WeightedSpace::build(&instance.background, phi, k, &opts.space)?;
    let beta = beta_k_values(&space, schedule, &grid)?;
    let frac = (k as f64 - 1.0) / k as f64;
    let mut margin_low = f64::INFINITY;
    let mut margin_high = f64::INFINITY;
    for (&s, &b) in grid.iter().zip(&beta) {
        let dev = b - instance.phi_inf.value(s)?;
        margin_low = margin_low.min(dev - (frac * c1 - eps_k));
        margin_high = margin_high.min((frac * c2 + eps_k) - dev);
    }
    let pass = margin_low >= -1e-10 && margin_high >= -1e-10;
    Ok(KeyLemmaReport {
        k,
        c1,
        c2,
        eps_k,
        margin_low,
        margin_high,
        pass,
    })
}

/// Decay model fitted to an error sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateModel {
    /// `e_k = C k^{-alpha}`.
    InverseK,
    /// `e_k = C ln(k) k^{-alpha}` (fit of `ln e - ln ln k` against `ln k`).
    LogKOverK,
}

/// Least-squares fit of the error decay; returns `(C, alpha, rms residual)`.
pub fn rate_fit(points: &[(u32, f64)], model: RateModel) -> Result<(f64, f64, f64)> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, e)| *e > 1e-12 && *k >= 2)
        .map(|&(k, e)| {
            let kf = k as f64;
            let y = match model {
                RateModel::InverseK => e.ln(),
                RateModel::LogKOverK => e.ln() - kf.ln().ln(),
            };
            (kf.ln(), y)
        })
        .collect();
    if usable.len() < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mut ss = 0.0;
    for &(x, y) in &usable {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    Ok(((intercept).exp(), -slope, (ss / n).sqrt()))
}

/// Fit a window `k_lo..=k_hi` of a trace's sup errors.
pub fn rate_fit_trace(
    trace: &IterationTrace,
    model: RateModel,
    k_lo: u32,
    k_hi: u32,
) -> Result<(f64, f64, f64)> {
    let pts: Vec<(u32, f64)> = trace
        .records
        .iter()
        .filter(|r| r.k >= k_lo && r.k <= k_hi)
        .map(|r| (r.k, r.sup_error))
        .collect();
    rate_fit(&pts, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{manufacture_instance, poincare_instance, PolyFn};
    use std::f64::consts::PI;

    #[test]
    fn schedule_values() {
        let g = DkSchedule::generic(1);
        assert!((d_k(&g, 4) - 4.0 / PI).abs() < 1e-15);
        let ke = DkSchedule::kahler_einstein(1);
        assert!((d_k(&ke, 1) - 0.5 / PI).abs() < 1e-15);
        assert!((d_k(&ke, 10) - 10.0 / PI * (19.0 / 20.0)).abs() < 1e-15);
    }

    #[test]
    fn ke_schedule_fixed_point_is_exact() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions::default();
        for k in [2u32, 5, 17] {
            let eps = fixed_point_defect(&inst, &schedule, k, &opts).unwrap();
            assert!(eps <= 1e-10, "k = {k}: eps = {eps}");
        }
    }

    #[test]
    fn generic_schedule_defect_closed_form() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::generic(1);
        let opts = IterateOptions::default();
        for k in [3u32, 5, 12, 33] {
            let eps = fixed_point_defect(&inst, &schedule, k, &opts).unwrap();
            let exact = ((1.0 - 1.0 / (2.0 * k as f64)).ln() / k as f64).abs();
            assert!((eps - exact).abs() <= 1e-10, "k = {k}: {eps} vs {exact}");
        }
    }

    #[test]
    fn beta_value_at_k5_generic() {
        // beta_5(phi_KE) - phi_KE = ln(1 - 1/10) / 5 ~ -0.021072.
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::generic(1);
        let opts = IterateOptions::default();
        let space =
            WeightedSpace::build(&inst.background, &inst.phi_inf, 5, &opts.space).unwrap();
        let vals = beta_k_values(&space, &schedule, &[0.3]).unwrap();
        let dev = vals[0] - inst.phi_inf.value(0.3).unwrap();
        assert!((dev - 0.9_f64.ln() / 5.0).abs() < 1e-10, "{dev}");
    }

    #[test]
    fn beta_shift_identity() {
        // beta_k(phi + c) = beta_k(phi) + ((k-1)/k) c exactly.
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions::default();
        let k = 7;
        let grid = opts.sup_grid(1.0);
        let base =
            WeightedSpace::build(&inst.background, &inst.phi_inf, k, &opts.space).unwrap();
        let b0 = beta_k_values(&base, &schedule, &grid).unwrap();
        for c in [-0.6, 1.3] {
            let shifted = inst.phi_inf.shifted(c);
            let sp = WeightedSpace::build(&inst.background, &shifted, k, &opts.space).unwrap();
            let b1 = beta_k_values(&sp, &schedule, &grid).unwrap();
            let expect = (k as f64 - 1.0) / k as f64 * c;
            for (a, b) in b0.iter().zip(&b1) {
                assert!((b - a - expect).abs() <= 1e-11, "c = {c}");
            }
        }
    }

    #[test]
    fn beta_monotone_in_weight() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::generic(1);
        let opts = IterateOptions::default();
        let k = 6;
        let grid = opts.sup_grid(1.0);
        let low = inst.phi_inf.clone();
        let high = inst
            .phi_inf
            .perturbed(Arc::new(PolyFn::new(vec![0.0, 0.2])), "phi + 0.2 s");
        let s_low = WeightedSpace::build(&inst.background, &low, k, &opts.space).unwrap();
        let s_high = WeightedSpace::build(&inst.background, &high, k, &opts.space).unwrap();
        let b_low = beta_k_values(&s_low, &schedule, &grid).unwrap();
        let b_high = beta_k_values(&s_high, &schedule, &grid).unwrap();
        for (a, b) in b_low.iter().zip(&b_high) {
            assert!(b >= &(a - 1e-9));
        }
    }

    #[test]
    fn constant_shift_iteration_telescopes() {
        // With the KE schedule each step multiplies a constant shift by
        // (k-1)/k, so from k0 = 2: e_k = (k0 - 1)/(k - 1).
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions::default();
        let phi_1 = inst.phi_inf.shifted(1.0);
        let trace = iterate(&phi_1, &inst, &schedule, 10, &opts).unwrap();
        assert_eq!(trace.records.len(), 9);
        for r in &trace.records {
            let expect = 1.0 / (r.k as f64 - 1.0);
            assert!(
                (r.sup_error - expect).abs() <= 1e-9,
                "k = {}: {} vs {expect}",
                r.k,
                r.sup_error
            );
        }
    }

    #[test]
    fn exact_fixed_point_stays_fixed() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions::default();
        let trace = iterate(&inst.phi_inf, &inst, &schedule, 8, &opts).unwrap();
        for r in &trace.records {
            assert!(r.sup_error <= 1e-9, "k = {}: {}", r.k, r.sup_error);
        }
    }

    #[test]
    fn recurrence_bound_holds_stepwise() {
        let base = poincare_instance(1.0);
        let w = PolyFn::new(vec![0.0, 0.05, -0.05]);
        let inst = manufacture_instance(Arc::new(w), &base).unwrap();
        let schedule = DkSchedule::generic(1);
        let opts = IterateOptions::default();
        let phi_1 = inst.phi_inf.perturbed(
            Arc::new(PolyFn::new(vec![0.3, -0.1])),
            "phi_inf + 0.3 - 0.1 s",
        );
        let trace = iterate(&phi_1, &inst, &schedule, 12, &opts).unwrap();
        for pair in trace.records.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let bound = (prev.k as f64 - 1.0) / prev.k as f64 * prev.sup_error + prev.eps_k;
            assert!(
                next.sup_error <= bound + 1e-9,
                "k = {}: {} vs bound {}",
                next.k,
                next.sup_error,
                bound
            );
        }
    }

    #[test]
    fn sandwich_tight_for_constant_shift() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions::default();
        let phi = inst.phi_inf.shifted(0.4);
        let report = lemma_key_check(&phi, 8, &inst, &schedule, &opts).unwrap();
        assert!(report.pass);
        // Equality case: both margins collapse to ~0.
        assert!(report.margin_low.abs() <= 1e-10 + 2.0 * report.eps_k);
        assert!(report.margin_high.abs() <= 1e-10 + 2.0 * report.eps_k);
        assert!((report.c1 - 0.4).abs() < 1e-12 && (report.c2 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn sandwich_holds_for_slope_perturbations() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::generic(1);
        let opts = IterateOptions::default();
        let up = inst
            .phi_inf
            .perturbed(Arc::new(PolyFn::new(vec![0.0, 0.1])), "phi + 0.1 s");
        let report = lemma_key_check(&up, 8, &inst, &schedule, &opts).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.margin_low > 0.0 && report.margin_high > 0.0);
        let down = inst.phi_inf.perturbed(
            Arc::new(PolyFn::new(vec![-0.3, 0.3])),
            "phi - 0.3 (1 - s)",
        );
        for k in [4u32, 16, 32] {
            let report = lemma_key_check(&down, k, &inst, &schedule, &opts).unwrap();
            assert!(report.pass, "k = {k}: {report:?}");
        }
    }

    #[test]
    fn rate_fit_exact_models() {
        let inv: Vec<(u32, f64)> = (4..40).map(|k| (k, 3.0 / k as f64)).collect();
        let (c, alpha, res) = rate_fit(&inv, RateModel::InverseK).unwrap();
        assert!((c - 3.0).abs() < 1e-10 && (alpha - 1.0).abs() < 1e-12 && res < 1e-10);

        let logk: Vec<(u32, f64)> = (4..40)
            .map(|k| (k, 2.0 * (k as f64).ln() / k as f64))
            .collect();
        let (c, alpha, res) = rate_fit(&logk, RateModel::LogKOverK).unwrap();
        assert!((c - 2.0).abs() < 1e-10 && (alpha - 1.0).abs() < 1e-12 && res < 1e-10);
    }

    #[test]
    fn rate_fit_needs_enough_points() {
        let few: Vec<(u32, f64)> = (4..8).map(|k| (k, 1.0 / k as f64)).collect();
        assert!(matches!(
            rate_fit(&few, RateModel::InverseK),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn constant_shift_trace_fits_inverse_k() {
        // Telescoping sequence fitted over the rate window k in [10, 50].
        let pts: Vec<(u32, f64)> = (10..=50).map(|k| (k, 1.0 / (k as f64 - 1.0))).collect();
        let (_, alpha, _) = rate_fit(&pts, RateModel::InverseK).unwrap();
        assert!(alpha > 0.95 && alpha < 1.05, "alpha = {alpha}");
    }

    #[test]
    fn trace_csv_shape() {
        let inst = poincare_instance(1.0);
        let schedule = DkSchedule::kahler_einstein(1);
        let opts = IterateOptions {
            sup_points: 64,
            ..IterateOptions::default()
        };
        let trace = iterate(&inst.phi_inf.shifted(0.5), &inst, &schedule, 4, &opts).unwrap();
        let csv = trace.to_csv(true);
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines[0], "k,sup_error,eps_k,truncation_J,seconds");
        assert_eq!(lines.len(), 1 + 3);
        let manifest = trace.manifest_json();
        assert_eq!(manifest["schedule"], "kahler_einstein");
    }
}

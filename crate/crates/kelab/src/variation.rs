//! Families of discs `{(t, z) : |z| < r(t)}` over a parameter disc, with
//! fiberwise canonical potentials, finite-difference Levi forms and
//! plurisubharmonicity scans.
//!
//! The total space is pseudoconvex exactly when `-log r` is subharmonic;
//! on pseudoconvex families the glued fiberwise potentials (exact
//! Kähler–Einstein weights, or fiberwise Bergman log-kernels) should carry a
//! positive semidefinite Levi form in `(t, z)` away from the fiber boundary.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bergman::{MomentSequence, SpaceOptions};
use crate::error::{Error, Result};
use crate::geometry::{Background, RadialPotential};
use crate::numerics::fd::wirtinger_partial;
use crate::tsuji::fmt_f64;

/// Fiberwise potential glued over the family.
#[derive(Clone)]
pub enum PotentialKind {
    /// Exact fiberwise Kähler–Einstein weight
    /// `log(2 r(t)^2 / (r(t)^2 - |z|^2)^2)`.
    KeGlued,
    /// Log of the fiberwise Bergman kernel of the unweighted fiber at the
    /// given order (order one is the classical relative Bergman metric).
    BergmanLog { k: u32 },
    /// Arbitrary potential callable on `(t, z)`.
    Custom(Arc<dyn Fn(Complex64, Complex64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialKind::KeGlued => write!(f, "ke_glued"),
            PotentialKind::BergmanLog { k } => write!(f, "bergman_log(k={k})"),
            PotentialKind::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Expected scan outcome, recorded with the fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PshExpectation {
    Yes,
    No,
    Boundary,
}

/// A family of discs of radius `r(t)` over the parameter disc `|t| < rho`.
#[derive(Clone)]
pub struct DiscFamily {
    radius: Arc<dyn Fn(Complex64) -> f64 + Send + Sync>,
    pub rho: f64,
    pub potential: PotentialKind,
    pub pseudoconvex_expected: PshExpectation,
    description: String,
}

impl std::fmt::Debug for DiscFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscFamily")
            .field("rho", &self.rho)
            .field("potential", &self.potential)
            .field("pseudoconvex_expected", &self.pseudoconvex_expected)
            .field("description", &self.description)
            .finish()
    }
}

impl DiscFamily {
    pub fn new(
        radius: Arc<dyn Fn(Complex64) -> f64 + Send + Sync>,
        rho: f64,
        potential: PotentialKind,
        pseudoconvex_expected: PshExpectation,
        description: impl Into<String>,
    ) -> Self {
        assert!(rho > 0.0);
        // Radius must be positive and finite on the (almost) closed disc.
        for i in 0..16 {
            for j in 0..8 {
                let arg = std::f64::consts::TAU * i as f64 / 16.0;
                let rad = 0.99 * rho * j as f64 / 7.0;
                let t = Complex64::from_polar(rad, arg);
                let r = radius(t);
                assert!(
                    r.is_finite() && r > 0.0,
                    "fiber radius must be positive on the parameter disc"
                );
            }
        }
        DiscFamily {
            radius,
            rho,
            potential,
            pseudoconvex_expected,
            description: description.into(),
        }
    }

    /// Fiber radius over the parameter `t`.
    pub fn radius(&self, t: Complex64) -> f64 {
        (self.radius)(t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `r(t) = e^{-|t|^2}`: `-log r = |t|^2` is subharmonic, the total space
    /// is pseudoconvex.
    pub fn shrinking_gaussian(rho: f64, potential: PotentialKind) -> Self {
        DiscFamily::new(
            Arc::new(|t: Complex64| (-t.norm_sqr()).exp()),
            rho,
            potential,
            PshExpectation::Yes,
            "r(t) = exp(-|t|^2)",
        )
    }

    /// `r(t) = e^{+|t|^2}`: anti-pseudoconvex total space.
    pub fn growing_gaussian(rho: f64, potential: PotentialKind) -> Self {
        DiscFamily::new(
            Arc::new(|t: Complex64| t.norm_sqr().exp()),
            rho,
            potential,
            PshExpectation::No,
            "r(t) = exp(+|t|^2)",
        )
    }

    /// Constant-radius product family (degenerate but semi-positive).
    pub fn constant(rho: f64, radius: f64, potential: PotentialKind) -> Self {
        DiscFamily::new(
            Arc::new(move |_| radius),
            rho,
            potential,
            PshExpectation::Boundary,
            format!("r(t) = {radius}"),
        )
    }
}

/// Exact glued Kähler–Einstein potential
/// `Phi(t, z) = log(2 r(t)^2 / (r(t)^2 - |z|^2)^2)`.
pub fn glued_ke_potential(family: &DiscFamily, t: Complex64, z: Complex64) -> Result<f64> {
    let r = family.radius(t);
    let abs_z = z.norm();
    if abs_z >= 0.999 * r {
        return Err(Error::OutsideFiber { abs_z, radius: r });
    }
    let r2 = r * r;
    let s = z.norm_sqr();
    Ok((2.0 * r2).ln() - 2.0 * (r2 - s).ln())
}

/// Weight data assigned to a fiber of radius `r`: the iterate weight and the
/// (phi_L, Omega) background of that fiber.
pub type FiberWeights = dyn Fn(f64) -> (RadialPotential, Background) + Send + Sync;

/// Unweighted fibers: zero weight, Lebesgue measure.
pub fn unweighted_fibers() -> Box<FiberWeights> {
    Box::new(|r: f64| {
        let s_max = r * r;
        (RadialPotential::zero(s_max), Background::unweighted(s_max))
    })
}

/// Concurrent per-fiber moment cache keyed by the fiber radius bits.
#[derive(Default)]
pub struct FiberCache {
    map: RwLock<HashMap<u64, Arc<MomentSequence>>>,
}

impl FiberCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_build<F>(&self, r: f64, build: F) -> Result<Arc<MomentSequence>>
    where
        F: FnOnce() -> Result<MomentSequence>,
    {
        let key = r.to_bits();
        if let Some(hit) = self.map.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let fresh = Arc::new(build()?);
        self.map.write().unwrap().insert(key, fresh.clone());
        Ok(fresh)
    }
}

/// Log of the fiberwise Bergman kernel at `(t, z)`: the fiber is the disc of
/// radius `r(t)`, its weighted space is built from the supplied fiberwise
/// weights, and the value is `ln K(|z|^2)`.
pub fn relative_bergman_log(
    family: &DiscFamily,
    k: u32,
    weights: &FiberWeights,
    t: Complex64,
    z: Complex64,
    cache: &FiberCache,
) -> Result<f64> {
    let r = family.radius(t);
    let abs_z = z.norm();
    if abs_z >= 0.999 * r {
        return Err(Error::OutsideFiber { abs_z, radius: r });
    }
    let moments = cache.get_or_build(r, || {
        let (phi, background) = weights(r);
        // Truncation driven by the scan radius: fibers are probed well inside.
        let space = crate::bergman::WeightedSpace::build(
            &background,
            &phi,
            k,
            &SpaceOptions::default(),
        )?;
        Ok(space.moments)
    })?;
    moments.kernel_ln(z.norm_sqr())
}

/// Evaluate the family's glued potential at `(t, z)`.
pub fn family_potential(
    family: &DiscFamily,
    t: Complex64,
    z: Complex64,
    cache: &FiberCache,
) -> Result<f64> {
    match &family.potential {
        PotentialKind::KeGlued => glued_ke_potential(family, t, z),
        PotentialKind::BergmanLog { k } => {
            relative_bergman_log(family, *k, &*unweighted_fibers(), t, z, cache)
        }
        PotentialKind::Custom(f) => Ok(f(t, z)),
    }
}

/// The 2x2 Hermitian Levi form `[[P_ttbar, P_tzbar], [conj, P_zzbar]]`.
#[derive(Debug, Clone, Copy)]
pub struct LeviForm {
    pub tt: f64,
    pub tz: Complex64,
    pub zz: f64,
}

impl LeviForm {
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.tt + self.zz);
        let disc = (0.25 * (self.tt - self.zz).powi(2) + self.tz.norm_sqr()).sqrt();
        (mean - disc, mean + disc)
    }
}

/// Levi form of `Phi` at `(t, z)` by fourth-order central complex-stencil
/// differences with uniform step `h`.
pub fn levi_form_fd<P>(phi: &P, t: Complex64, z: Complex64, h: f64) -> Result<LeviForm>
where
    P: Fn(Complex64, Complex64) -> Result<f64>,
{
    // Pre-flight: the full stencil must stay inside the domain.
    let reach = 3.0 * h;
    for dt in [-reach, 0.0, reach] {
        for dti in [-reach, 0.0, reach] {
            for dz in [-reach, 0.0, reach] {
                for dzi in [-reach, 0.0, reach] {
                    let tp = t + Complex64::new(dt, dti);
                    let zp = z + Complex64::new(dz, dzi);
                    if phi(tp, zp).is_err() {
                        return Err(Error::StencilOutsideDomain { h });
                    }
                }
            }
        }
    }
    let f = |w: &[Complex64]| phi(w[0], w[1]).unwrap_or(f64::NAN);
    let w0 = [t, z];
    let tt = wirtinger_partial(&f, &w0, &[1, 0], &[1, 0], h);
    let zz = wirtinger_partial(&f, &w0, &[0, 1], &[0, 1], h);
    let tz = wirtinger_partial(&f, &w0, &[1, 0], &[0, 1], h);
    let zt = wirtinger_partial(&f, &w0, &[0, 1], &[1, 0], h);
    for v in [tt, zz, tz, zt] {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::StencilOutsideDomain { h });
        }
    }
    // Hermitian symmetrisation: the diagonal is real, the off-diagonal pair
    // are conjugates of each other for a real-valued potential.
    let off = 0.5 * (tz + zt.conj());
    Ok(LeviForm {
        tt: tt.re,
        tz: off,
        zz: zz.re,
    })
}

/// Levi form at the halved step together with a Richardson error estimate
/// (fourth-order contract: the estimate is `|L(h) - L(h/2)| / 15`).
pub fn levi_form_with_estimate<P>(
    phi: &P,
    t: Complex64,
    z: Complex64,
    h: f64,
) -> Result<(LeviForm, f64)>
where
    P: Fn(Complex64, Complex64) -> Result<f64>,
{
    let coarse = levi_form_fd(phi, t, z, h)?;
    let fine = levi_form_fd(phi, t, z, 0.5 * h)?;
    let diff = (coarse.tt - fine.tt)
        .abs()
        .max((coarse.zz - fine.zz).abs())
        .max((coarse.tz - fine.tz).norm());
    Ok((fine, diff / 15.0))
}

/// One sample of a plurisubharmonicity scan.
#[derive(Debug, Clone, Serialize)]
pub struct LeviSample {
    pub t_re: f64,
    pub t_im: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub eig_min: f64,
    pub eig_max: f64,
}

/// Scan verdict.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum PshVerdict {
    PshConfirmed,
    Violation {
        t_re: f64,
        t_im: f64,
        z_re: f64,
        z_im: f64,
        eig_min: f64,
    },
}

/// Grid description of a scan: `t_points x t_points` samples of the
/// parameter square within `|t| <= t_cap * rho`, times `z_points` real
/// z-samples per fiber in `[0, z_cap * r(t)]`.
#[derive(Debug, Clone, Copy)]
pub struct ScanGrid {
    pub t_points: usize,
    pub z_points: usize,
    pub t_cap: f64,
    pub z_cap: f64,
    /// Tolerance on the minimal eigenvalue for PSH_CONFIRMED.
    pub tolerance: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            t_points: 9,
            z_points: 9,
            t_cap: 0.9,
            z_cap: 0.9,
            tolerance: 1e-6,
        }
    }
}

/// Full scan report.
#[derive(Debug, Clone, Serialize)]
pub struct LeviReport {
    pub samples: Vec<LeviSample>,
    pub min_eigenvalue: f64,
    pub verdict: PshVerdict,
    pub tolerance: f64,
    pub family: String,
}

impl LeviReport {
    /// CSV columns: `t_re,t_im,z_re,z_im,eig_min,eig_max`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_re,t_im,z_re,z_im,eig_min,eig_max\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(s.t_re),
                fmt_f64(s.t_im),
                fmt_f64(s.z_re),
                fmt_f64(s.z_im),
                fmt_f64(s.eig_min),
                fmt_f64(s.eig_max),
            ));
        }
        out
    }

    pub fn verdict_json(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "verdict": match &self.verdict {
                PshVerdict::PshConfirmed => "PSH_CONFIRMED".to_string(),
                PshVerdict::Violation { .. } => "VIOLATION".to_string(),
            },
            "min_eigenvalue": self.min_eigenvalue,
            "tolerance": self.tolerance,
            "samples": self.samples.len(),
        })
    }
}

/// Scan the Levi form of the family potential over the grid; the verdict is
/// `PSH_CONFIRMED` when the minimal eigenvalue stays above `-tolerance`.
pub fn psh_scan(family: &DiscFamily, grid: &ScanGrid) -> Result<LeviReport> {
    assert!(grid.z_cap <= 0.95, "scan must avoid the fiber boundary");
    let cache = FiberCache::new();
    let mut points = Vec::new();
    let half = grid.t_cap * family.rho;
    for i in 0..grid.t_points {
        for j in 0..grid.t_points {
            let frac = |idx: usize, n: usize| {
                if n == 1 {
                    0.0
                } else {
                    2.0 * idx as f64 / (n - 1) as f64 - 1.0
                }
            };
            let t = Complex64::new(half * frac(i, grid.t_points), half * frac(j, grid.t_points));
            if t.norm() > half * 1.0001 {
                continue;
            }
            for m in 0..grid.z_points {
                let r = family.radius(t);
                let z = Complex64::new(
                    grid.z_cap * r * m as f64 / (grid.z_points.max(2) - 1) as f64,
                    0.0,
                );
                points.push((t, z));
            }
        }
    }
    let samples: Vec<LeviSample> = points
        .par_iter()
        .map(|&(t, z)| {
            let r = family.radius(t);
            let h = 1e-3 * (r - z.norm()).min(1.0);
            let phi = |tt: Complex64, zz: Complex64| family_potential(family, tt, zz, &cache);
            let levi = levi_form_fd(&phi, t, z, h)?;
            let (lo, hi) = levi.eigenvalues();
            Ok(LeviSample {
                t_re: t.re,
                t_im: t.im,
                z_re: z.re,
                z_im: z.im,
                eig_min: lo,
                eig_max: hi,
            })
        })
        .collect::<Result<_>>()?;
    let worst = samples
        .iter()
        .min_by(|a, b| a.eig_min.total_cmp(&b.eig_min))
        .expect("scan grid is nonempty");
    let verdict = if worst.eig_min >= -grid.tolerance {
        PshVerdict::PshConfirmed
    } else {
        PshVerdict::Violation {
            t_re: worst.t_re,
            t_im: worst.t_im,
            z_re: worst.z_re,
            z_im: worst.z_im,
            eig_min: worst.eig_min,
        }
    };
    Ok(LeviReport {
        min_eigenvalue: worst.eig_min,
        verdict,
        tolerance: grid.tolerance,
        family: family.description().to_string(),
        samples,
    })
}

/// Per-fiber record of the uniform-bound check.
#[derive(Debug, Clone, Serialize)]
pub struct FiberBound {
    pub t_re: f64,
    pub t_im: f64,
    /// Fiberwise value of `u_t = Phi(t, .) - phi_{D,t}` (constant per fiber).
    pub value: f64,
    /// Oscillation of `u_t` over the sampled fiber points.
    pub oscillation: f64,
}

/// Uniform fiberwise bound report for the glued KE family.
#[derive(Debug, Clone, Serialize)]
pub struct FiberBoundReport {
    pub fibers: Vec<FiberBound>,
    /// `sup_t sup_fiber |u_t|` over the sampled parameter set.
    pub sup_bound: f64,
}

/// Compare the glued KE potential against the defining-function potential
/// `phi_{D,t}(z) = -2 log(r(t)^2 - |z|^2)`: the difference
/// `u_t = log(2 r(t)^2)` is constant on every fiber and locally uniformly
/// bounded over the parameter set.
pub fn fiber_uniform_bound_check(
    family: &DiscFamily,
    t_samples: &[Complex64],
) -> Result<FiberBoundReport> {
    assert!(
        matches!(family.potential, PotentialKind::KeGlued),
        "uniform-bound check is defined for the glued KE potential"
    );
    let mut fibers = Vec::with_capacity(t_samples.len());
    let mut sup_bound: f64 = 0.0;
    for &t in t_samples {
        let r = family.radius(t);
        let r2 = r * r;
        let mut min_u = f64::INFINITY;
        let mut max_u = f64::NEG_INFINITY;
        for m in 0..32 {
            let s = (0.95 * r2) * m as f64 / 31.0;
            let z = Complex64::new(s.sqrt(), 0.0);
            let phi = glued_ke_potential(family, t, z)?;
            let defining = -2.0 * (r2 - s).ln();
            let u = phi - defining;
            min_u = min_u.min(u);
            max_u = max_u.max(u);
        }
        let value = 0.5 * (min_u + max_u);
        sup_bound = sup_bound.max(value.abs());
        fibers.push(FiberBound {
            t_re: t.re,
            t_im: t.im,
            value,
            oscillation: max_u - min_u,
        });
    }
    Ok(FiberBoundReport { fibers, sup_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn glued_potential_values() {
        let fam = DiscFamily::constant(1.0, 1.0, PotentialKind::KeGlued);
        let v = glued_ke_potential(&fam, c(0.2, 0.1), c(0.0, 0.0)).unwrap();
        assert!((v - 2.0_f64.ln()).abs() < 1e-15);

        // Scaling identity Phi(t, z) = Phi_unit(z / r) - 2 log r.
        let shrink = DiscFamily::shrinking_gaussian(1.0, PotentialKind::KeGlued);
        let t = c(0.5, 0.0);
        let r = shrink.radius(t);
        let z = c(0.2, -0.1);
        let lhs = glued_ke_potential(&shrink, t, z).unwrap();
        let unit = DiscFamily::constant(1.0, 1.0, PotentialKind::KeGlued);
        let rhs = glued_ke_potential(&unit, c(0.0, 0.0), z / r).unwrap() - 2.0 * r.ln();
        assert!((lhs - rhs).abs() < 1e-13);

        // r(t) = e^{-|t|^2}, t = 0.5, z = 0: through the scaling identity
        // Phi(t, 0) = Phi_unit(0) - 2 log r(t) = log 2 + 2 |t|^2.
        let v0 = glued_ke_potential(&shrink, c(0.5, 0.0), c(0.0, 0.0)).unwrap();
        assert!((v0 - (2.0_f64.ln() + 0.5)).abs() < 1e-14, "{v0}");
    }

    #[test]
    fn outside_fiber_rejected() {
        let fam = DiscFamily::constant(1.0, 0.5, PotentialKind::KeGlued);
        assert!(matches!(
            glued_ke_potential(&fam, c(0.0, 0.0), c(0.51, 0.0)),
            Err(Error::OutsideFiber { .. })
        ));
    }

    #[test]
    fn relative_bergman_log_closed_form() {
        // Unweighted fiber of radius r: K(s) = r^2 / (pi (r^2 - s)^2).
        let fam = DiscFamily::constant(1.0, 0.8, PotentialKind::BergmanLog { k: 1 });
        let cache = FiberCache::new();
        let t = c(0.3, -0.2);
        let r: f64 = 0.8;
        for zr in [0.0, 0.3, 0.6] {
            let z = c(zr, 0.0);
            let got =
                relative_bergman_log(&fam, 1, &*unweighted_fibers(), t, z, &cache).unwrap();
            let s = zr * zr;
            let exact = (r * r / (PI * (r * r - s).powi(2))).ln();
            assert!((got - exact).abs() < 1e-10, "zr = {zr}: {got} vs {exact}");
        }
        // At z = 0: K(0) = 1 / (pi r^2).
        let got = relative_bergman_log(&fam, 1, &*unweighted_fibers(), t, c(0.0, 0.0), &cache)
            .unwrap();
        assert!((got.exp() - 1.0 / (PI * r * r)).abs() < 1e-12);
    }

    #[test]
    fn relative_bergman_shift_identity() {
        // Shifting the fiber weight by a constant adds (k-1) c to log K.
        let fam = DiscFamily::constant(1.0, 1.0, PotentialKind::BergmanLog { k: 4 });
        let k = 4;
        let ccst = 0.7;
        let base_weights = |r: f64| {
            let inst = crate::geometry::poincare_instance(r);
            (inst.phi_inf.clone(), inst.background)
        };
        let shifted_weights = move |r: f64| {
            let inst = crate::geometry::poincare_instance(r);
            (inst.phi_inf.shifted(ccst), inst.background)
        };
        let t = c(0.0, 0.0);
        let z = c(0.4, 0.2);
        let cache_a = FiberCache::new();
        let cache_b = FiberCache::new();
        let a = relative_bergman_log(&fam, k, &base_weights, t, z, &cache_a).unwrap();
        let b = relative_bergman_log(&fam, k, &shifted_weights, t, z, &cache_b).unwrap();
        assert!((b - a - (k as f64 - 1.0) * ccst).abs() < 1e-11);
    }

    #[test]
    fn levi_form_quadratic_model() {
        let phi = |t: Complex64, z: Complex64| Ok(t.norm_sqr() + z.norm_sqr());
        let levi = levi_form_fd(&phi, c(0.3, -0.1), c(0.2, 0.4), 1e-3).unwrap();
        assert!((levi.tt - 1.0).abs() < 1e-9);
        assert!((levi.zz - 1.0).abs() < 1e-9);
        assert!(levi.tz.norm() < 1e-9);
    }

    #[test]
    fn levi_form_constant_family_degenerate_direction() {
        let fam = DiscFamily::constant(1.0, 1.0, PotentialKind::KeGlued);
        let cache = FiberCache::new();
        let phi = |t: Complex64, z: Complex64| family_potential(&fam, t, z, &cache);
        let z = c(0.3, 0.0);
        let levi = levi_form_fd(&phi, c(0.2, 0.2), z, 1e-4).unwrap();
        assert!(levi.tt.abs() < 1e-9);
        assert!(levi.tz.norm() < 1e-9);
        let fiber_density = 2.0 / (1.0 - z.norm_sqr()).powi(2);
        assert!((levi.zz - fiber_density).abs() < 1e-6 * fiber_density);
    }

    #[test]
    fn levi_form_glued_ke_point_check() {
        let fam = DiscFamily::shrinking_gaussian(1.0, PotentialKind::KeGlued);
        let cache = FiberCache::new();
        let phi = |t: Complex64, z: Complex64| family_potential(&fam, t, z, &cache);
        let levi = levi_form_fd(&phi, c(0.3, 0.0), c(0.2, 0.0), 1e-4).unwrap();
        let (lo, _) = levi.eigenvalues();
        assert!(lo >= -1e-7, "min eigenvalue {lo}");
    }

    #[test]
    fn stencil_outside_domain_detected() {
        let fam = DiscFamily::constant(1.0, 0.5, PotentialKind::KeGlued);
        let cache = FiberCache::new();
        let phi = |t: Complex64, z: Complex64| family_potential(&fam, t, z, &cache);
        assert!(matches!(
            levi_form_fd(&phi, c(0.0, 0.0), c(0.4995, 0.0), 1e-2),
            Err(Error::StencilOutsideDomain { .. })
        ));
    }

    #[test]
    fn stencil_fourth_order_contract() {
        let fam = DiscFamily::shrinking_gaussian(1.0, PotentialKind::KeGlued);
        let cache = FiberCache::new();
        let phi = |t: Complex64, z: Complex64| family_potential(&fam, t, z, &cache);
        let (t, z) = (c(0.25, -0.35), c(0.3, 0.1));
        let h = 2e-3;
        let (_, est_h) = levi_form_with_estimate(&phi, t, z, h).unwrap();
        let (fine_half, est_half) = levi_form_with_estimate(&phi, t, z, 0.5 * h).unwrap();
        let (fine_h, _) = levi_form_with_estimate(&phi, t, z, h).unwrap();
        // Halving h changes entries by at most 16x the reported estimate.
        let change = (fine_h.tt - fine_half.tt)
            .abs()
            .max((fine_h.zz - fine_half.zz).abs())
            .max((fine_h.tz - fine_half.tz).norm());
        assert!(
            change <= 16.0 * est_half.max(1e-14),
            "change {change} vs estimate {est_half}"
        );
        // And the estimates themselves contract at fourth order-ish.
        assert!(est_half <= est_h.max(1e-14));
    }

    #[test]
    fn psh_scan_dichotomy_smoke() {
        let grid = ScanGrid {
            t_points: 5,
            z_points: 5,
            ..ScanGrid::default()
        };
        let convex = DiscFamily::shrinking_gaussian(0.8, PotentialKind::KeGlued);
        let report = psh_scan(&convex, &grid).unwrap();
        assert_eq!(report.verdict, PshVerdict::PshConfirmed, "{report:?}");

        let concave = DiscFamily::growing_gaussian(0.8, PotentialKind::KeGlued);
        let report = psh_scan(&concave, &grid).unwrap();
        assert!(matches!(report.verdict, PshVerdict::Violation { .. }));
        assert!(report.min_eigenvalue <= -1e-3);

        let product = DiscFamily::constant(0.8, 1.0, PotentialKind::KeGlued);
        let report = psh_scan(&product, &grid).unwrap();
        assert_eq!(report.verdict, PshVerdict::PshConfirmed);
        assert!(report.min_eigenvalue.abs() <= 1e-9, "{}", report.min_eigenvalue);
    }

    #[test]
    fn fiberwise_levi_entry_positive_even_without_pseudoconvexity() {
        let fam = DiscFamily::growing_gaussian(0.8, PotentialKind::KeGlued);
        let cache = FiberCache::new();
        let phi = |t: Complex64, z: Complex64| family_potential(&fam, t, z, &cache);
        for (tr, zr) in [(0.0, 0.0), (0.4, 0.3), (0.6, 0.5)] {
            let t = c(tr, 0.1);
            let z = c(zr, 0.0);
            let r = fam.radius(t);
            let levi = levi_form_fd(&phi, t, z, 1e-4).unwrap();
            let r2 = r * r;
            let expected = 2.0 * r2 / (r2 - z.norm_sqr()).powi(2);
            assert!(levi.zz > 0.0);
            assert!(
                (levi.zz - expected).abs() < 1e-6 * expected,
                "t = {t}, z = {z}"
            );
        }
    }

    #[test]
    fn fiber_bound_constant_family() {
        let fam = DiscFamily::constant(1.0, 1.0, PotentialKind::KeGlued);
        let report =
            fiber_uniform_bound_check(&fam, &[c(0.0, 0.0), c(0.3, 0.2)]).unwrap();
        for fiber in &report.fibers {
            assert!((fiber.value - 2.0_f64.ln()).abs() < 1e-12);
            assert!(fiber.oscillation <= 1e-10);
        }
        assert!((report.sup_bound - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fiber_bound_gaussian_family() {
        let fam = DiscFamily::shrinking_gaussian(1.0, PotentialKind::KeGlued);
        let ts: Vec<Complex64> = (0..9)
            .map(|i| Complex64::from_polar(0.8 * i as f64 / 8.0, 0.7 * i as f64))
            .collect();
        let report = fiber_uniform_bound_check(&fam, &ts).unwrap();
        // u_t = log 2 - 2 |t|^2: extremes log 2 (t = 0) and log 2 - 1.28.
        let expected = 2.0_f64.ln().max(1.28 - 2.0_f64.ln());
        assert!((report.sup_bound - expected).abs() < 1e-12, "{}", report.sup_bound);
        for fiber in &report.fibers {
            assert!(fiber.oscillation <= 1e-10);
        }
    }

    #[test]
    fn report_csv_shape() {
        let fam = DiscFamily::constant(0.5, 1.0, PotentialKind::KeGlued);
        let grid = ScanGrid {
            t_points: 3,
            z_points: 3,
            ..ScanGrid::default()
        };
        let report = psh_scan(&fam, &grid).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("t_re,t_im,z_re,z_im,eig_min,eig_max\n"));
        let v = report.verdict_json();
        assert_eq!(v["verdict"], "PSH_CONFIRMED");
    }
}

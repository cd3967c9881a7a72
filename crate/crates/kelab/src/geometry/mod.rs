//! Radial Kähler metrics on the disc, curvature operators, exact
//! Kähler–Einstein references and manufactured Monge–Ampère instances.
//!
//! Conventions: `dd^c = (i/2) d d-bar`, all densities are against `dx dy`.
//! A radial potential `u(s)` of `s = |z|^2` has `dd^c u = (u' + s u'') dx dy`.
//! Kähler–Einstein normalisation is `Ric = -omega`; on the disc of radius `R`
//! the reference solution is the Poincaré potential
//! `phi(s) = log(2 R^2 / (R^2 - s)^2)`.

pub mod chart;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::spline::CubicSpline;

pub use chart::{apply_chart_map, normalize_chart, prenormalize_chart, ChartJet, Tensor3, Tensor4};

/// Radial function of `s = |z|^2` with first and second derivative access.
pub trait RadialFn: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;
}

/// Radial function with derivative access up to order four (needed when a
/// perturbation enters the density whose own curvature is differentiated).
pub trait Smooth4: RadialFn {
    fn d3(&self, s: f64) -> f64;
    fn d4(&self, s: f64) -> f64;
}

/// Polynomial in `s` with analytic derivatives of every order.
#[derive(Debug, Clone)]
pub struct PolyFn {
    coeffs: Vec<f64>,
}

impl PolyFn {
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolyFn { coeffs }
    }

    pub fn zero() -> Self {
        PolyFn { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        PolyFn { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn derivative_value(&self, s: f64, order: usize) -> f64 {
        // Horner on the coefficient array of the `order`-th derivative.
        let mut acc = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(order).rev() {
            let mut f = 1.0;
            for t in 0..order {
                f *= (j - t) as f64;
            }
            acc = acc * s + c * f;
        }
        acc
    }
}

impl RadialFn for PolyFn {
    fn value(&self, s: f64) -> f64 {
        self.derivative_value(s, 0)
    }
    fn d1(&self, s: f64) -> f64 {
        self.derivative_value(s, 1)
    }
    fn d2(&self, s: f64) -> f64 {
        self.derivative_value(s, 2)
    }
}

impl Smooth4 for PolyFn {
    fn d3(&self, s: f64) -> f64 {
        self.derivative_value(s, 3)
    }
    fn d4(&self, s: f64) -> f64 {
        self.derivative_value(s, 4)
    }
}

/// Radial function from explicit closures for the value and derivatives.
pub struct ClosureFn {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RadialFn for ClosureFn {
    fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (self.df)(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (self.d2f)(s)
    }
}

/// Closure-backed function with four derivatives.
pub struct Closure4 {
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d2f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d3f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub d4f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RadialFn for Closure4 {
    fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (self.df)(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (self.d2f)(s)
    }
}

impl Smooth4 for Closure4 {
    fn d3(&self, s: f64) -> f64 {
        (self.d3f)(s)
    }
    fn d4(&self, s: f64) -> f64 {
        (self.d4f)(s)
    }
}

impl RadialFn for CubicSpline {
    fn value(&self, s: f64) -> f64 {
        CubicSpline::value(self, s)
    }
    fn d1(&self, s: f64) -> f64 {
        CubicSpline::d1(self, s)
    }
    fn d2(&self, s: f64) -> f64 {
        CubicSpline::d2(self, s)
    }
}

struct SumFn(Arc<dyn RadialFn>, Arc<dyn RadialFn>);

impl RadialFn for SumFn {
    fn value(&self, s: f64) -> f64 {
        self.0.value(s) + self.1.value(s)
    }
    fn d1(&self, s: f64) -> f64 {
        self.0.d1(s) + self.1.d1(s)
    }
    fn d2(&self, s: f64) -> f64 {
        self.0.d2(s) + self.1.d2(s)
    }
}

/// Weight / Hermitian metric as a radial potential of `s = |z|^2` on
/// `[0, s_max)`, stored as
///
/// `u(s) = -log_coeff * ln(s_max - s) + bounded(s)`.
///
/// Splitting the logarithmic boundary behavior off additively keeps the
/// represented part bounded; the iteration weights all share the Poincaré
/// boundary growth (`log_coeff = 2`) so their differences live entirely in
/// the bounded part.
#[derive(Clone)]
pub struct RadialPotential {
    s_max: f64,
    log_coeff: f64,
    bounded: Arc<dyn RadialFn>,
    description: String,
}

impl fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotential")
            .field("s_max", &self.s_max)
            .field("log_coeff", &self.log_coeff)
            .field("description", &self.description)
            .finish()
    }
}

impl RadialPotential {
    pub fn new(
        s_max: f64,
        log_coeff: f64,
        bounded: Arc<dyn RadialFn>,
        description: impl Into<String>,
    ) -> Self {
        assert!(s_max > 0.0);
        RadialPotential {
            s_max,
            log_coeff,
            bounded,
            description: description.into(),
        }
    }

    /// The flat potential `u(s) = s` on `[0, s_max)`.
    pub fn flat(s_max: f64) -> Self {
        RadialPotential::new(
            s_max,
            0.0,
            Arc::new(PolyFn::new(vec![0.0, 1.0])),
            "flat |z|^2",
        )
    }

    /// The zero potential.
    pub fn zero(s_max: f64) -> Self {
        RadialPotential::new(s_max, 0.0, Arc::new(PolyFn::zero()), "zero")
    }

    /// Poincaré potential `log(2R^2 / (R^2 - s)^2)` on the disc of radius `R`.
    pub fn poincare(radius: f64) -> Self {
        assert!(radius > 0.0);
        let s_max = radius * radius;
        RadialPotential::new(
            s_max,
            2.0,
            Arc::new(PolyFn::constant((2.0 * s_max).ln())),
            format!("poincare R={radius}"),
        )
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn log_coeff(&self) -> f64 {
        self.log_coeff
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if !(0.0..self.s_max).contains(&s) {
            return Err(Error::OutOfDomain {
                s,
                s_max: self.s_max,
            });
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(-self.log_coeff * (self.s_max - s).ln() + self.bounded.value(s))
    }

    pub fn d1(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(self.log_coeff / (self.s_max - s) + self.bounded.d1(s))
    }

    pub fn d2(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let d = self.s_max - s;
        Ok(self.log_coeff / (d * d) + self.bounded.d2(s))
    }

    /// Bounded part, defined up to and including `s = s_max`.
    pub fn bounded_part(&self, s: f64) -> f64 {
        self.bounded.value(s)
    }

    /// Density of `dd^c u` against `dx dy`: `u' + s u''`.
    pub fn density(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let d = self.s_max - s;
        let b = &self.bounded;
        Ok(self.log_coeff * self.s_max / (d * d) + b.d1(s) + s * b.d2(s))
    }

    /// The potential shifted by a constant.
    pub fn shifted(&self, c: f64) -> Self {
        self.perturbed(Arc::new(PolyFn::constant(c)), format!("{} + {c}", self.description))
    }

    /// The potential plus a bounded radial perturbation.
    pub fn perturbed(&self, w: Arc<dyn RadialFn>, description: impl Into<String>) -> Self {
        RadialPotential {
            s_max: self.s_max,
            log_coeff: self.log_coeff,
            bounded: Arc::new(SumFn(self.bounded.clone(), w)),
            description: description.into(),
        }
    }
}

/// Density of the reference measure `Omega` against `dx dy`, stored as
/// `(s_max - s)^{boundary_exponent} * bounded(s)` with `bounded > 0`.
#[derive(Clone)]
pub struct OmegaDensity {
    pub s_max: f64,
    pub boundary_exponent: f64,
    bounded: Arc<dyn RadialFn>,
}

impl OmegaDensity {
    pub fn new(s_max: f64, boundary_exponent: f64, bounded: Arc<dyn RadialFn>) -> Self {
        OmegaDensity {
            s_max,
            boundary_exponent,
            bounded,
        }
    }

    /// Lebesgue density on the disc.
    pub fn value(&self, s: f64) -> f64 {
        (self.s_max - s).powf(self.boundary_exponent) * self.bounded.value(s)
    }

    /// `ln` of the bounded factor (the full log density is
    /// `boundary_exponent * ln(s_max - s) + ln_bounded(s)`).
    pub fn ln_bounded(&self, s: f64) -> f64 {
        self.bounded.value(s).ln()
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        struct Scaled(Arc<dyn RadialFn>, f64);
        impl RadialFn for Scaled {
            fn value(&self, s: f64) -> f64 {
                self.1 * self.0.value(s)
            }
            fn d1(&self, s: f64) -> f64 {
                self.1 * self.0.d1(s)
            }
            fn d2(&self, s: f64) -> f64 {
                self.1 * self.0.d2(s)
            }
        }
        OmegaDensity {
            s_max: self.s_max,
            boundary_exponent: self.boundary_exponent,
            bounded: Arc::new(Scaled(self.bounded.clone(), c)),
        }
    }
}

/// The pair `(phi_L, Omega)` against which weighted norms are taken: the
/// measure of the weight `phi` at order `k` has density
/// `e^{-(k-1) phi - phi_L} V` with `V` the Lebesgue density of `Omega`.
#[derive(Debug, Clone)]
pub struct Background {
    pub phi_l: RadialPotential,
    pub omega: OmegaDensity,
}

impl Background {
    pub fn new(phi_l: RadialPotential, omega: OmegaDensity) -> Self {
        assert_eq!(phi_l.s_max(), omega.s_max, "domain mismatch");
        Background { phi_l, omega }
    }

    pub fn s_max(&self) -> f64 {
        self.phi_l.s_max()
    }

    /// Unweighted disc: `phi_L = 0`, `Omega` Lebesgue.
    pub fn unweighted(s_max: f64) -> Self {
        Background {
            phi_l: RadialPotential::zero(s_max),
            omega: OmegaDensity::new(s_max, 0.0, Arc::new(PolyFn::constant(1.0))),
        }
    }
}

impl fmt::Debug for OmegaDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmegaDensity")
            .field("s_max", &self.s_max)
            .field("boundary_exponent", &self.boundary_exponent)
            .finish()
    }
}

/// Whether an instance is a Kähler–Einstein one (`Omega = omega_{phi_inf}`)
/// or a generic Monge–Ampère fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Generic,
    KahlerEinstein,
}

/// One Monge–Ampère problem `omega_{phi_inf} = e^{phi_inf - phi_L} Omega`
/// (dimension one) with its exact solution attached.
#[derive(Clone)]
pub struct MAInstance {
    pub background: Background,
    pub phi_inf: RadialPotential,
    pub kind: InstanceKind,
    /// Density of `omega_{phi_inf}` with two derivatives, for curvature.
    density_inf: Arc<dyn RadialFn>,
    description: String,
}

impl fmt::Debug for MAInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MAInstance")
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

impl MAInstance {
    pub fn s_max(&self) -> f64 {
        self.phi_inf.s_max()
    }

    pub fn phi_l(&self) -> &RadialPotential {
        &self.background.phi_l
    }

    pub fn omega(&self) -> &OmegaDensity {
        &self.background.omega
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Density of the exact solution metric, with derivative access.
    pub fn density_inf(&self) -> &Arc<dyn RadialFn> {
        &self.density_inf
    }

    /// Scalar curvature of the solution metric at `s`.
    pub fn scalar_curvature(&self, s: f64) -> Result<f64> {
        ricci_scalar(self.density_inf.as_ref(), s)
    }

    /// Monge–Ampère residual `density(phi_inf) - e^{phi_inf - phi_L} V` at `s`.
    pub fn residual(&self, s: f64) -> Result<f64> {
        let g = self.phi_inf.density(s)?;
        // Combine all logarithmic boundary factors before exponentiating.
        let ln_rhs = (self.phi_l().log_coeff() - self.phi_inf.log_coeff()
            + self.omega().boundary_exponent)
            * (self.s_max() - s).ln()
            + self.phi_inf.bounded_part(s)
            - self.phi_l().bounded_part(s)
            + self.omega().ln_bounded(s);
        Ok(g - ln_rhs.exp())
    }

    /// Max residual over a Chebyshev verification grid on `[0, hi * s_max]`.
    pub fn max_residual(&self, points: usize, hi: f64) -> f64 {
        let grid = chebyshev_grid(points, 0.0, hi * self.s_max());
        grid.iter()
            .map(|&s| self.residual(s).unwrap().abs())
            .fold(0.0, f64::max)
    }
}

/// Chebyshev–Lobatto points on `[lo, hi]` (both endpoints included).
pub fn chebyshev_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * 0.5 * (1.0 - (PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Density of `dd^c phi` against `dx dy` at `s`.
pub fn kahler_density(phi: &RadialPotential, s: f64) -> Result<f64> {
    phi.density(s)
}

/// Scalar curvature `S = -(L' + s L'') / g` with `L = ln g` of a radial
/// metric density `g` (two derivatives required).
pub fn ricci_scalar(g: &dyn RadialFn, s: f64) -> Result<f64> {
    let v = g.value(s);
    if !(v > 0.0) {
        return Err(Error::NonPositiveMetric { s, density: v });
    }
    let g1 = g.d1(s);
    let g2 = g.d2(s);
    let l1 = g1 / v;
    let l2 = g2 / v - l1 * l1;
    Ok(-(l1 + s * l2) / v)
}

/// Exact Kähler–Einstein instance on the disc of radius `R`:
/// `phi_inf = phi_L` is the Poincaré potential and `Omega = omega_{phi_inf}`,
/// so the Monge–Ampère equation holds identically and the induced measure is
/// `mu_phi = e^{phi} dx dy`.
pub fn poincare_instance(radius: f64) -> MAInstance {
    let phi = RadialPotential::poincare(radius);
    let s_max = phi.s_max();
    // density = 2 R^2 / (R^2 - s)^2 = e^{phi}.
    let omega = OmegaDensity::new(s_max, -2.0, Arc::new(PolyFn::constant(2.0 * s_max)));
    let density_inf: Arc<dyn RadialFn> = Arc::new(ClosureFn {
        f: Box::new(move |s| 2.0 * s_max / (s_max - s).powi(2)),
        df: Box::new(move |s| 4.0 * s_max / (s_max - s).powi(3)),
        d2f: Box::new(move |s| 12.0 * s_max / (s_max - s).powi(4)),
    });
    MAInstance {
        background: Background::new(phi.clone(), omega),
        phi_inf: phi,
        kind: InstanceKind::KahlerEinstein,
        density_inf,
        description: format!("poincare R={radius}"),
    }
}

/// Manufactured instance: perturb the exact solution by a bounded radial `w`
/// and redefine the measure so the Monge–Ampère residual vanishes identically:
/// `V' = density(phi_inf + w) e^{phi_L - phi_inf - w}`.
pub fn manufacture_instance(w: Arc<dyn Smooth4>, base: &MAInstance) -> Result<MAInstance> {
    let s_max = base.s_max();
    let phi_inf = base
        .phi_inf
        .perturbed(w.clone() as Arc<dyn RadialFn>, format!("{} + w", base.phi_inf.description()));

    // Positivity of the perturbed density on the verification grid.
    for &s in &chebyshev_grid(512, 0.0, 0.999 * s_max) {
        let g = phi_inf.density(s)?;
        if g <= 0.0 {
            return Err(Error::MetricDegenerate { s, density: g });
        }
    }

    // Boundary structure of the new measure:
    // density(phi_inf') = c s_max / (s_max - s)^2 + (b' + s b''), and
    // e^{phi_L - phi_inf'} = (s_max - s)^{c' - c_L} e^{bL - b'}, so with the
    // shared log coefficient the new exponent is  -2 + c_inf - c_L  and the
    // bounded factor stays smooth and positive up to the boundary.
    let c_inf = phi_inf.log_coeff();
    let c_l = base.phi_l().log_coeff();
    let exponent = -2.0 + c_inf - c_l;
    let phi_inf_b = phi_inf.clone();
    let phi_l_b = base.phi_l().clone();
    let bounded: Arc<dyn RadialFn> = Arc::new(ClosureFn {
        f: Box::new(move |s| {
            let d = phi_inf_b.s_max() - s;
            let dens_scaled =
                c_inf * phi_inf_b.s_max() + d * d * (bounded_density(&phi_inf_b, s));
            dens_scaled * (phi_l_b.bounded_part(s) - phi_inf_b.bounded_part(s)).exp()
        }),
        df: Box::new(|_| f64::NAN),
        d2f: Box::new(|_| f64::NAN),
    });
    let omega = OmegaDensity::new(s_max, exponent, bounded);

    // Density of the perturbed metric with derivatives, from the base density
    // and the first four derivatives of w:
    // g = g_base + (w' + s w''), g' = g_base' + (2 w'' + s w'''), ...
    let base_density = base.density_inf.clone();
    let w2 = w.clone();
    let density_inf: Arc<dyn RadialFn> = Arc::new(ClosureFn {
        f: Box::new({
            let (g0, w) = (base_density.clone(), w2.clone());
            move |s| g0.value(s) + w.d1(s) + s * w.d2(s)
        }),
        df: Box::new({
            let (g0, w) = (base_density.clone(), w2.clone());
            move |s| g0.d1(s) + 2.0 * w.d2(s) + s * w.d3(s)
        }),
        d2f: Box::new({
            let (g0, w) = (base_density.clone(), w2.clone());
            move |s| g0.d2(s) + 3.0 * w.d3(s) + s * w.d4(s)
        }),
    });

    Ok(MAInstance {
        background: Background::new(base.phi_l().clone(), omega),
        phi_inf,
        kind: InstanceKind::Generic,
        density_inf,
        description: format!("{} (manufactured)", base.description()),
    })
}

/// `(b' + s b'')` of the bounded part of a potential.
fn bounded_density(phi: &RadialPotential, s: f64) -> f64 {
    phi.bounded.d1(s) + s * phi.bounded.d2(s)
}

/// Cusp model density `2 / (s ln^2 s)` on the punctured disc, with
/// derivatives; complete with `Ric = -omega`.
pub fn cusp_density() -> impl RadialFn {
    ClosureFn {
        f: Box::new(|s: f64| 2.0 / (s * s.ln().powi(2))),
        df: Box::new(|s: f64| {
            let l = s.ln();
            -2.0 / (s * s * l * l) * (1.0 + 2.0 / l)
        }),
        d2f: Box::new(|s: f64| {
            let l = s.ln();
            4.0 / (s * s * s) * (1.0 / (l * l) + 3.0 / (l * l * l) + 3.0 / (l * l * l * l))
        }),
    }
}

/// Quasi-coordinate chart data of a bounded-geometry structure: chart radius,
/// metric equivalence constant, derivative bounds and order.
#[derive(Debug, Clone)]
pub struct BoundedGeometryParams {
    pub radius: f64,
    pub equivalence: f64,
    pub derivative_bounds: Vec<f64>,
    pub order: u32,
}

impl BoundedGeometryParams {
    pub fn new(radius: f64, equivalence: f64, derivative_bounds: Vec<f64>, order: u32) -> Self {
        assert!(radius > 0.0, "chart radius must be positive");
        assert!(equivalence >= 1.0, "equivalence constant must be >= 1");
        assert!(
            derivative_bounds.iter().all(|&a| a > 0.0),
            "derivative bounds must be positive"
        );
        BoundedGeometryParams {
            radius,
            equivalence,
            derivative_bounds,
            order,
        }
    }

    /// Whether the order suffices for the expansion and iteration theorems.
    pub fn admissible_for_main_theorems(&self) -> bool {
        self.order >= 5
    }
}

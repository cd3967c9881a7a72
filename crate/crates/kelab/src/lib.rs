//! Numerical laboratory for the Bergman-kernel fixed-point iteration on
//! radial disc models.
//!
//! The library is organised around one production chain:
//!
//! * [`numerics`] — adaptive quadrature on radial domains, cubic splines and
//!   finite-difference stencils shared by everything else;
//! * [`geometry`] — radial Kähler potentials on the disc, curvature
//!   operators, exact Poincaré/Kähler–Einstein references and manufactured
//!   Monge–Ampère instances, plus the normal-coordinate chart normalisation;
//! * [`bergman`] — weighted Bergman spaces on radial domains: moments,
//!   kernel and Bergman-function evaluation, with an independent dense
//!   Gram-matrix oracle;
//! * [`tsuji`] — the iteration `phi_{k+1} = beta_k(phi_k)`, both `d_k`
//!   schedules, convergence traces and the key-lemma sandwich check;
//! * [`asymptotics`] — the Laplace approximation engine with the explicit
//!   second-order coefficient, and the Bergman-expansion verifier;
//! * [`variation`] — families of discs with fiberwise canonical potentials,
//!   finite-difference Levi forms and plurisubharmonicity scans.
//!
//! All floating point work is `f64`; kernels are evaluated in log space so
//! large weight orders do not overflow.

pub mod asymptotics;
pub mod bergman;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod tsuji;
pub mod variation;

pub use error::{Error, Result};

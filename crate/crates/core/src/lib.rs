//! Discrete nonlocal calculus on a one-dimensional interaction domain.
//!
//! The crate samples functions and kernels on a uniform grid covering `Ω ∪ Γ`
//! (an interval plus its interaction collar), applies nonlocal gradient,
//! divergence, Laplacian and p-Laplacian operators, evaluates double-integral
//! energies and their Euler–Lagrange residuals, minimizes those energies, and
//! solves semilinear equations `L_μ[u] = f0(x, u)` by a convolution fixed point.

pub mod checks;
pub mod error;
pub mod functional;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod minimize;
pub mod operators;
mod par;
pub mod presets;
pub mod report;
pub mod semilinear;

pub use error::{Error, Result};
pub use functional::Integrand;
pub use grid::{Domain, GridFunction, Region, RegionSelector};
pub use kernel::{KernelSpec, KernelTable};
pub use operators::TwoPointField;
pub use report::DiagnosticReport;

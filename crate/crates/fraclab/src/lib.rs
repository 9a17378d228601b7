//! Spectral laboratory for boundary observability and null control of the
//! one-dimensional integral fractional Laplacian `(-Δ)^s` on an interval.
//!
//! The crate builds, end to end, the constructive chain
//!
//! 1. [`operator`] — conforming P1 Galerkin discretization of `(-Δ)^s` with
//!    zero exterior condition, plus an independent pointwise principal-value
//!    quadrature oracle;
//! 2. [`spectral`] — the generalized symmetric eigenproblem, mass-normalized
//!    eigenfunctions and their fractional boundary traces `φ_j/ρ^s`;
//! 3. [`wave`] — exact modal propagation of the fractional wave equation,
//!    multiplier (Pohozaev) and equipartition identities, boundary
//!    observability Gramians and the empirical minimal time `T0(J)`;
//! 4. [`heat`] — modal heat flow, heat observability Gramians and constants,
//!    and the transposition propagator for boundary-controlled trajectories;
//! 5. [`transmute`] — the Gevrey-2 transmutation kernel mapping heat
//!    trajectories to wave trajectories, with certified series residuals;
//! 6. [`control`] — HUM synthesis of low-frequency boundary null controls and
//!    the Lebeau–Robbiano frequency-wise iteration with cost accounting.
//!
//! Everything is desk scale: dense matrices, `n ≤ 2048` mesh nodes, `J ≤ 16`
//! observed modes. All operations are deterministic given their inputs.

pub mod control;
pub mod dd;
pub mod error;
pub mod heat;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod quad;
pub mod spectral;
pub mod transmute;
pub mod wave;

pub use error::{Error, Result};
pub use operator::{FracOrder, IntervalDomain, Mesh, OperatorPair};
pub use spectral::{SpectralBasis, SpectralModel, TraceSet};

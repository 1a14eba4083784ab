//! Forward and partial-inverse spectral solvers for the integro-differential
//! Dirac system
//!
//! ```text
//!     B y' + ∫₀ˣ M(x − t) y(t) dt = λ y,   0 < x < π,   y₁(0) = y₁(π) = 0,
//! ```
//!
//! with `B = [[0, 1], [−1, 0]]` and the convolution kernel
//! `M = [[p, q], [−q, p]]`.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds an
//! FFT fast path for grid convolutions.
//!
//! Module map:
//!
//! * [`gridfn`]: uniform grids, sampled functions and the trapezoidal
//!   convolution algebra.
//! * [`forward`]: initial-value solver, characteristic function `Δ(λ)` and
//!   eigenvalue search ([`roots`] holds the generic zero finder).
//! * [`wtransform`]: the transform pair `(w₁, w₂)` with
//!   `Δ(λ) = sin λπ + ∫₀^π (w₁ sin λt + w₂ cos λt) dt`, and the E-values.
//! * [`basis`]: the trigonometric vector system attached to a subspectrum and
//!   reconstruction of `(w₁, w₂)` on `(0, b)` from E-values.
//! * [`inverse`]: main equations and the reconstruction of the kernel on
//!   `(a, π)` from the kernel on `(0, a)` and a subspectrum.
//! * [`oracle`]: an independent Chebyshev-collocation spectral solver used for
//!   cross-validation.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod basis;
mod error;
pub mod families;
pub mod forward;
pub mod gridfn;
pub mod inverse;
mod linalg;
pub mod oracle;
pub mod quad;
pub mod roots;
pub mod spectrum;
pub mod wtransform;

pub use error::{Error, Result, Stage};
pub use num_complex::Complex64 as C64;

pub use basis::{BasisSystem, HeadOptions, HeadRepresentation, Subspectrum};
pub use forward::{char_fn, char_fn_derivative, eigenvalues, eigenvalues_at, solve_ivp, StateVector};
pub use gridfn::{convolve, conv_power, Grid, GridFunction, WeightedGridFunction};
pub use inverse::{algorithm1, KnownPart, Reconstruction};
pub use spectrum::{Spectrum, SpectrumEntry};
pub use wtransform::{EValues, WPair};

pub use families::KernelPair;

/// Imports shared by every module so that the crate builds identically with
/// and without `std`.
pub(crate) mod prelude {
    pub use alloc::format;
    pub use alloc::string::{String, ToString};
    pub use alloc::vec;
    pub use alloc::vec::Vec;
    pub use core::f64::consts::PI;
    #[cfg(not(feature = "std"))]
    pub use num_traits::Float;

    pub use crate::error::{Error, Result};
    pub use num_complex::Complex64 as C64;

    pub const I: C64 = C64::new(0.0, 1.0);
}

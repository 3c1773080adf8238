//! Fourier-spectral laboratory for the doubly damped σ-evolution equation
//!
//! ```text
//! u_tt + (-Δ)^σ u + u_t + (-Δ)^σ u_t = |u|^p
//! ```
//!
//! on periodic boxes in one to three dimensions. The crate provides the exact
//! linear propagator, the anomalous diffusion profile with its moment
//! expansion, discrete norms and decay-rate regression, an exponential
//! integrator for the semilinear problem, and the experiment harness that
//! checks predicted decay, profile, and lifespan exponents.

// `!(x > 0.0)` is the idiom here for rejecting NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod norms;
pub mod par;
pub mod propagator;
pub mod semilinear;

pub use error::{Error, Result};
pub use grid::{make_grid, to_physical, to_spectral, Field, GridSpec, SpectralField};

//! Fractional-order calculus on the unit interval and square, the r-order
//! total variation semi-norm `TV^r_{ℓp}`, a TV^r-regularised denoiser with
//! an order-search harness, and a suite of numerical property checks.
//!
//! Functions are sampled on uniform node grids that include both endpoints.
//! All fractional operators are Grünwald–Letnikov discretisations acting on
//! the zero extension of the sampled function, which makes every operator a
//! lower-triangular Toeplitz matrix along each axis with an exact transpose.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod error;
pub mod exec;
pub mod frac1d;
pub mod fracnd;
pub mod grid;
pub mod io;
pub mod special;
pub mod toeplitz;
pub mod tvr;
pub mod verify;

pub use denoise::{denoise, order_search, Dataset, DenoiseConfig, DenoiseReport, LossSpec, OrderSearchReport};
pub use error::{Error, Result};
pub use frac1d::{GLWeights, Side};
pub use grid::{Field2D, FracOrder, Grid1D, Grid2D, GridFunction, LpIndex, Signal1D, TensorField};
pub use special::gamma;
pub use tvr::{tv_dual_estimate, tv_primal, tvr_loss, TVMethod, TVResult};

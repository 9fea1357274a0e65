//! Local mixture models of natural exponential families.
//!
//! A local mixture model of order `r` perturbs a base density `f(x; mu)` by a
//! linear combination of its mean-parameter derivatives,
//! `g(x; mu, lambda) = f(x; mu) + sum_{i=2}^r lambda_i f^(i)(x; mu)`.
//! This crate provides the exact derivative and moment machinery for the
//! binomial, Poisson and unit-variance normal families, the hard-boundary
//! geometry of the `lambda` parameter space, the convex-hull characterization
//! of which models arise from genuine mixing, concave likelihood maximization
//! on fibers, integrated likelihood over mixing classes, and numerical rate
//! checks for the underlying asymptotic expansions.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI live
//! in the companion `locmix` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod deriv;
pub mod error;
pub mod family;
pub mod fiber;
pub mod lmm;
pub mod lp;
pub mod marginal;
pub mod mixing;
pub mod poly;
pub mod quad;
pub mod rates;
pub mod region;
pub mod rng;

pub use deriv::{derivative_polys, DerivPoly};
pub use error::Error;
pub use family::{Family, Support};
pub use fiber::{FiberProblem, FitOutcome, ProfileFit, Sample};
pub use lmm::{hard_boundary, HalfSpace, HalfSpaceSystem, LocalMixtureModel, Positivity};
pub use marginal::{
    integrated_likelihood, integrated_likelihood_at, MarginalOptions, MarginalPoint,
};
pub use mixing::{DispersionMixing, DiscreteMixing};
pub use rates::{rate_check_discrete, rate_check_laplace, RateCheck};
pub use region::{LambdaRegion, MomentCurve, TrueMixtureVerdict};

/// Highest supported local mixture order; coefficient growth degrades
/// double-precision conditioning beyond this.
pub const MAX_ORDER: usize = 8;

/// Highest supported raw-moment index (including mu-derivatives).
pub const MAX_MOMENT: usize = 16;

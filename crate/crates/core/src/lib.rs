//! Convergence-to-quasi-stationarity certificates for finite absorbing Markov chains.
//!
//! The crate computes the quasi-stationary distribution of an absorbing
//! chain, its Doob transform, spectral and log-Sobolev constants of the
//! transformed chain, and explicit `C·e^{-ρt}` total-variation bounds, and
//! checks all of them against exact transient evolution and simulation.
//!
//! Total variation follows the analyst's convention `‖m‖ = Σ|m(x)|`, twice the
//! probabilist one; see [`bounds::to_probabilist_tv`].
//!
//! ```
//! use qsd_core::{models, spectral};
//!
//! let chain = models::bd_uniform(4).unwrap().into();
//! let p = spectral::perron(&chain).unwrap();
//! let expected = 2.0 * (1.0 - (std::f64::consts::PI / 8.0).cos());
//! assert!((p.lambda1 - expected).abs() < 1e-12);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain;
pub mod doob;
pub mod error;
pub mod evolution;
pub mod funineq;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod spectral;
pub mod verify;

pub use chain::{parse_model, serialize_model, AbsorbingChain, ContinuousChain, DiscreteChain, ProbDist, StateSpace};
pub use error::{QsdError, Result};

// The guide's code blocks run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/chains.md")]
    struct Chains;
    #[doc = include_str!("../../../book/src/perron.md")]
    struct Perron;
    #[doc = include_str!("../../../book/src/doob.md")]
    struct Doob;
    #[doc = include_str!("../../../book/src/inequalities.md")]
    struct Inequalities;
    #[doc = include_str!("../../../book/src/bounds.md")]
    struct Bounds;
    #[doc = include_str!("../../../book/src/evolution.md")]
    struct Evolution;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
    #[doc = include_str!("../../../book/src/verification.md")]
    struct Verification;
}

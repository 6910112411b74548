//! Simulation and verification toolkit for evolution equations driven by
//! canonical α-stable cylindrical Lévy noise.
//!
//! The crate samples truncated cylindrical noise, evaluates the explicit
//! constants of the tail and moment estimates, integrates step integrands
//! against the noise, runs the Picard scheme for the mild solution of a
//! diagonal semilinear equation and packages each quantitative claim as a
//! reproducible experiment.
//!
//! ```
//! use cylstable::sampling::{generate_noise_path, uniform_grid};
//!
//! let grid = uniform_grid(1.0, 10);
//! let path = generate_noise_path(1.5, 3, &grid, 7).unwrap();
//! assert_eq!(path.steps(), 10);
//! assert_eq!(path.dim(), 3);
//! ```

// `!(x > 0.0)` checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod integral;
pub mod picard;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/noise.md")]
    struct Noise;
    #[doc = include_str!("../../../book/src/constants.md")]
    struct Constants;
    #[doc = include_str!("../../../book/src/integral.md")]
    struct Integral;
    #[doc = include_str!("../../../book/src/spde.md")]
    struct Spde;
    #[doc = include_str!("../../../book/src/gronwall.md")]
    struct Gronwall;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}

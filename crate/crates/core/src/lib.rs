//! Spectral flow and Maslov index for families of linear Hamiltonian
//! boundary-value problems.
//!
//! Layers, bottom up:
//!
//! - [`symplectic`]: forms, Lagrangian subspaces, splittings and graph unitaries.
//! - [`flow`]: spectral flow of sampled Hermitian or unitary families.
//! - [`maslov`]: the Maslov index of Lagrangian pair paths.
//! - [`odebvp`]: first- and second-order problems on an interval, by shooting
//!   and by transported Cauchy data.
//! - [`harness`]: scenarios, dual-route verification and property sweeps.
//! - [`cli`]: the `maslovflow` binary.
//!
//! ```
//! use maslovflow::harness::{builtin, run_scenario};
//!
//! let report = run_scenario(&builtin("S1").unwrap());
//! assert_eq!((report.sf, report.mas), (Some(1), Some(1)));
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod flow;
pub mod harness;
pub mod linalg;
pub mod maslov;
pub mod odebvp;
pub mod symplectic;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symplectic.md")]
    mod symplectic {}
    #[doc = include_str!("../../../book/src/spectral-flow.md")]
    mod spectral_flow {}
    #[doc = include_str!("../../../book/src/maslov.md")]
    mod maslov {}
    #[doc = include_str!("../../../book/src/boundary-value.md")]
    mod boundary_value {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

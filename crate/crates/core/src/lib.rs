//! Worst-case spectral risk measures of a loss `L(X, Y)` when only the
//! marginal laws of `X` and `Y` are known.
//!
//! Everything here works on finite supports: marginals are probability
//! vectors, the loss is a matrix over the product of supports, and the
//! worst case over all couplings is a linear program. The crate carries its
//! own revised simplex solver so that every optimum comes with a dual
//! certificate that can be checked independently.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, the command line front end and thread-level
//! parallelism live in the companion `riskbound` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// NaN-rejecting `!(x > 0.0)` checks and index loops over several arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod math;

pub mod asymptotics;
pub mod bounds;
pub mod domain;
pub mod linalg;
pub mod losses;
pub mod lp;
pub mod riskmeasures;
pub mod rng;
pub mod spectrum;
pub mod stability;

pub use error::{Error, Result};

pub use bounds::{
    brute_force_mes, solve_mes, solve_msp, verify_duality, DualCertificate, GapReport,
    MesSolution, MspSolution, SolutionRef,
};
pub use domain::{validate_marginal, Coupling, Instance, LossMatrix, ProbabilityVector};
pub use riskmeasures::DiscreteLaw;
pub use spectrum::{discretize_spectrum, SpectralFunction, SpectralGrid};

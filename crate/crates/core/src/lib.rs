//! Periodic orbits of a nonresident computer-virus model with
//! ω-periodic coefficients: susceptible `S`, latent `L` and breaking-out
//! `A` computers.
//!
//! The crate checks the existence hypothesis, computes the a priori box that
//! confines any positive periodic orbit in log coordinates, locates orbits by
//! Newton shooting on the period map, and certifies them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod error;
pub mod integrate;
pub mod model;
pub mod periodic;
pub mod solver;

pub use bounds::{check_hypothesis, compute_bounds, AprioriBounds, D1Variant, HypothesisReport};
pub use certify::{certify, Certificate, CertifyConfig, Verdict};
pub use error::{Error, Result};
pub use integrate::{IntegratorConfig, Method, Trajectory};
pub use model::{ADecay, LogState, Model, State, SystemKind};
pub use periodic::{Coefficient, CoefficientSet, PeriodicFn, Rates};
pub use solver::{find_periodic, shoot, PeriodicOrbit, ShootingConfig};

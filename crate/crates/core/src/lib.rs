//! Numerical laboratory for partially volume expanding solenoids on the solid
//! torus.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cocycle;
pub mod error;
pub mod harness;
pub mod measure;
pub mod model;
pub mod par;
pub mod rng;
pub mod sum;

pub use error::{Error, Result};
pub use model::{SolenoidModel, SolidTorusPoint};

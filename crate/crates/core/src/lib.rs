//! Lower bounds on the mean square error of quantum parameter estimation.
//!
//! The crate is organised as a small linear-algebra kernel ([`matcore`]),
//! parametric state models ([`models`]), bound evaluators ([`bounds`]) and
//! estimator evaluation and simulation ([`estimators`]), figure data
//! ([`reproduce`]) and the self-check suite ([`validation`]).

// Guards are written `!(x > 0.0)` so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod matcore;
pub mod models;
pub mod reproduce;
pub mod validation;

pub use error::{Error, Result};

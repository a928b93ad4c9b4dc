#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod energy;
pub mod error;
pub mod history;
pub mod integrator;
pub mod operator;
pub mod quadrature;
pub mod schedule;
pub mod sequence;

pub use error::{Error, Result};

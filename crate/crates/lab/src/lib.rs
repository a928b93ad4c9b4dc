#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod presets;
pub mod report;
pub mod scenario;

pub use error::{LabError, LabResult};
pub use scenario::{load_scenario, Resolved, Scenario};

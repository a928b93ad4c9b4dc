//! Closed-form contraction constants, series classification and the
//! stability theorem checks.

pub mod constants;
pub mod observability;
pub mod series;
pub mod theorem;

pub use constants::{c_hat_linear, c_tilde, d_hat};
pub use observability::{estimate_observability_constant, ObservabilityEstimate};
pub use series::{series_verdict, Outcome, Verdict};
pub use theorem::{check_theorem, CriteriaInputs, Theorem, TheoremCheck};

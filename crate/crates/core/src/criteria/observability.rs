//! Empirical observability constants.
//!
//! On an even interval `[t_{2n}, t_{2n+1})` only the undelayed damping acts,
//! so `E_S(t_{2n+1}) ≤ d̂_n E_S(t_{2n})` with `d̂_n = d_n/(d_n + 1)` whenever
//! the observability inequality holds with constant `d_n`. Running the
//! damped-only system from random initial data gives the largest observed
//! ratio, which is a lower bound for `d̂_n`, never a proof of the inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::energy_standard;
use crate::error::{Error, Result};
use crate::integrator::{run, RunConfig, DEFAULT_SAFETY};
use crate::operator::{PowerNonlinearity, SpectralOperator, SystemState};
use crate::schedule::{DampingSchedule, FeedbackMode};

/// Ratios within this distance of 1 count as no energy loss.
pub const CONSERVATION_TOL: f64 = 1e-9;

fn default_amplitude() -> f64 {
    1.0
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}

/// Trial setup for [`estimate_observability_constant`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityConfig {
    /// Index `n` of the even interval to probe.
    pub interval: usize,
    pub trials: usize,
    pub seed: u64,
    pub dt: f64,
    /// Mode `k` of the initial data is drawn from `U(−a/k, a/k)`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

impl ObservabilityConfig {
    pub fn new(interval: usize, trials: usize, seed: u64, dt: f64) -> Self {
        Self {
            interval,
            trials,
            seed,
            dt,
            amplitude: 1.0,
            safety: DEFAULT_SAFETY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityEstimate {
    pub interval: usize,
    pub start: f64,
    pub end: f64,
    /// `E_S(t_{2n+1}) / E_S(t_{2n})` per trial.
    pub ratios: Vec<f64>,
    /// Largest observed ratio.
    pub d_hat: f64,
    /// `d̂/(1 − d̂)`; `None` when the interval is not observable.
    pub d: Option<f64>,
    /// Some trial lost no energy (up to [`CONSERVATION_TOL`]).
    pub non_observable: bool,
}

/// Initial data of trial `trial`: every trial draws from its own ChaCha
/// stream of the master seed, so trial `k` is the same for any trial count.
pub fn trial_state(seed: u64, trial: usize, modes: usize, amplitude: f64, time: f64) -> SystemState {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut draw = |k: usize| amplitude / (k + 1) as f64 * rng.random_range(-1.0..1.0);
    let position: Vec<f64> = (0..modes).map(&mut draw).collect();
    let velocity: Vec<f64> = (0..modes).map(&mut draw).collect();
    SystemState::new(time, position, velocity)
}

/// Estimates `d̂_n` on the even interval `config.interval`.
pub fn estimate_observability_constant(
    op: &SpectralOperator,
    schedule: &DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    config: &ObservabilityConfig,
) -> Result<ObservabilityEstimate> {
    let n = config.interval;
    if n % 2 == 1 || n < schedule.first_index || n - schedule.first_index >= schedule.interval_count() {
        return Err(Error::InvalidSchedule(format!(
            "interval {n} is not an even interval of the schedule"
        )));
    }
    if config.trials == 0 {
        return Err(Error::NonPositive {
            name: "trials",
            value: 0.0,
        });
    }
    let (start, end) = schedule.interval_bounds(n - schedule.first_index);
    let mut damped = schedule.clone();
    damped.mode = FeedbackMode::Negative;
    damped.b2 = None;
    let run_config = RunConfig {
        safety: config.safety,
        ..RunConfig::new(config.dt, end - start)
    };

    let ratios = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let initial = trial_state(config.seed, trial, op.mode_count(), config.amplitude, start);
            let e0 = energy_standard(op, &initial, nonlinearity)?;
            if e0 == 0.0 {
                return Err(Error::DegenerateTrial { trial });
            }
            let traj = run(op, &damped, nonlinearity, &initial, &run_config)?;
            let last = traj.last().expect("trajectory has samples");
            Ok(energy_standard(op, last, nonlinearity)? / e0)
        })
        .collect::<Result<Vec<f64>>>()?;

    let d_hat = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let non_observable = d_hat >= 1.0 - CONSERVATION_TOL;
    let d = (!non_observable).then(|| d_hat / (1.0 - d_hat));
    Ok(ObservabilityEstimate {
        interval: n,
        start,
        end,
        ratios,
        d_hat,
        d,
        non_observable,
    })
}

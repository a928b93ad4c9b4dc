//! Fixed-step classical Runge–Kutta integration of the modal system
//!
//! `a″ + Λa + b1(t) K_ω g(a′) + b2(t) K_ω̃ a′(t − τ) − b3(t) K_ω̃ a′ = f(a)`
//!
//! by the method of steps. The delayed velocity is read from a
//! [`HistoryBuffer`] whose slot spacing is an integer multiple of `dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{init_history, HistoryBuffer, HistoryRule, Side};
use crate::operator::{PowerNonlinearity, RegionOperator, SpectralOperator, SystemState};
use crate::schedule::{DampingSchedule, FeedbackMode};

/// Identifier recorded in trajectory metadata.
pub const SCHEME: &str = "rk4-method-of-steps";

/// Default fraction of the explicit stability limit `2/√λ_max`.
pub const DEFAULT_SAFETY: f64 = 0.5;

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}

fn default_stride() -> usize {
    1
}

fn default_divisions() -> usize {
    1
}

/// Run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Record every `stride`-th step.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// History divisor `M`: slot spacing is `τ/M`.
    #[serde(default = "default_divisions")]
    pub history_divisions: usize,
    #[serde(default)]
    pub history: HistoryRule,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

impl RunConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            stride: 1,
            history_divisions: 1,
            history: HistoryRule::Zero,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_history(mut self, rule: HistoryRule, divisions: usize) -> Self {
        self.history = rule;
        self.history_divisions = divisions;
        self
    }

    /// Number of steps, requiring `horizon` to be a multiple of `dt`.
    pub fn step_count(&self) -> Result<usize> {
        let k = (self.horizon / self.dt).round();
        if !(self.horizon >= 0.0) || (k * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(self.dt) {
            return Err(Error::HorizonAlignment {
                horizon: self.horizon,
                dt: self.dt,
            });
        }
        Ok(k as usize)
    }
}

/// Recorded samples of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<SystemState>,
    pub dt: f64,
    pub stride: usize,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_hash: Option<String>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time)
    }

    pub fn last(&self) -> Option<&SystemState> {
        self.samples.last()
    }
}

struct Scratch {
    ka: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
    a: Vec<f64>,
    v: Vec<f64>,
    delayed: Vec<f64>,
    op_grid: Vec<f64>,
    region_grid: Vec<f64>,
    force: Vec<f64>,
}

impl Scratch {
    fn new(modes: usize, op_grid: usize, region_grid: usize) -> Self {
        let z = || vec![0.0; modes];
        Self {
            ka: [z(), z(), z(), z()],
            kv: [z(), z(), z(), z()],
            a: z(),
            v: z(),
            delayed: z(),
            op_grid: vec![0.0; op_grid],
            region_grid: vec![0.0; region_grid],
            force: z(),
        }
    }
}

/// One-step integrator bound to an operator and a schedule.
pub struct Integrator<'a> {
    op: &'a SpectralOperator,
    schedule: &'a DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    damping: RegionOperator,
    feedback: RegionOperator,
    dt: f64,
    scratch: Scratch,
}

impl<'a> Integrator<'a> {
    /// Checks the stability guard `|dt| < safety · 2/√λ_max` and prepares
    /// the region operators.
    pub fn new(
        op: &'a SpectralOperator,
        schedule: &'a DampingSchedule,
        nonlinearity: Option<PowerNonlinearity>,
        dt: f64,
        safety: f64,
    ) -> Result<Self> {
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::InvalidStep(dt));
        }
        let limit = safety * 2.0 / op.lambda_max().sqrt();
        if dt.abs() >= limit {
            return Err(Error::StabilityGuard { dt, limit });
        }
        let damping = op.region_operator(&schedule.geometry.damping_region())?;
        let feedback = op.region_operator(&schedule.geometry.feedback_region())?;
        let op_grid = match (nonlinearity, op.geometry()) {
            (Some(_), None) => return Err(Error::MissingGeometry),
            (Some(_), Some(g)) => g.grid().len(),
            (None, _) => 0,
        };
        let region_grid = damping.grid().map_or(0, |g| g.len());
        Ok(Self {
            op,
            schedule,
            nonlinearity,
            damping,
            feedback,
            dt,
            scratch: Scratch::new(op.mode_count(), op_grid, region_grid),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn damping_operator(&self) -> &RegionOperator {
        &self.damping
    }

    pub fn feedback_operator(&self) -> &RegionOperator {
        &self.feedback
    }

    /// True when the dynamics read the delayed velocity.
    pub fn needs_history(&self) -> bool {
        self.schedule.mode == FeedbackMode::Delayed && self.schedule.tau > 0.0
    }

    /// Builds the history buffer for a run starting from `initial`, checking
    /// that `dt` divides the slot spacing `τ/M`.
    pub fn prepare_history(
        &mut self,
        rule: &HistoryRule,
        divisions: usize,
        initial: &SystemState,
    ) -> Result<HistoryBuffer> {
        let tau = self.schedule.tau;
        let mut history = init_history(rule, self.op.mode_count(), tau, divisions)?;
        let spacing = history.spacing();
        let r = (spacing / self.dt).round();
        if r < 1.0 || (r * self.dt - spacing).abs() > 1e-9 * spacing {
            return Err(Error::DelayAlignment { dt: self.dt, spacing });
        }
        history.substeps = r as usize;
        history.phase = 0;
        history.anchor(initial.time);
        let pos = self.position_for_step(initial.time)?;
        let mut dv = vec![0.0; self.op.mode_count()];
        self.acceleration_with_history(
            initial.time,
            pos,
            &initial.position,
            &initial.velocity,
            &history,
            Side::Right,
            &mut dv,
        )?;
        history.set_newest_right(&initial.velocity, &dv);
        Ok(history)
    }

    /// Interval position used for the step starting at `t`.
    fn position_for_step(&self, t: f64) -> Result<usize> {
        self.schedule.position_at(t + 0.5 * self.dt)
    }

    /// `out = −Λa − b1 K_ω g(v) ∓ b2 K_ω̃ v_* + f(a)`.
    fn acceleration(
        &mut self,
        t: f64,
        pos: usize,
        a: &[f64],
        v: &[f64],
        delayed: Option<&[f64]>,
        out: &mut [f64],
    ) -> Result<()> {
        for ((o, l), x) in out.iter_mut().zip(self.op.eigenvalues()).zip(a) {
            *o = -l * x;
        }
        let b1 = self.schedule.b1_on(pos, t);
        if b1 != 0.0 {
            match self.schedule.g {
                Some(g) if !g.is_linear() => match self.damping.grid() {
                    Some(grid) => {
                        let values = &mut self.scratch.region_grid;
                        grid.synthesize(v, values);
                        values.iter_mut().for_each(|x| *x = g.eval(*x));
                        grid.project_add(values, -b1, out);
                    }
                    None => {
                        for (o, x) in out.iter_mut().zip(v) {
                            *o -= b1 * g.eval(*x);
                        }
                    }
                },
                Some(g) => self.damping.apply_add(v, -b1 * g.lower(), out),
                None => self.damping.apply_add(v, -b1, out),
            }
        }
        let b2 = self.schedule.b2_on(pos, t);
        if b2 != 0.0 {
            match self.schedule.mode {
                FeedbackMode::Delayed => {
                    let w = if self.schedule.tau > 0.0 {
                        delayed.ok_or(Error::HistoryGap {
                            start: t - self.schedule.tau,
                            end: t - self.schedule.tau,
                            have_start: f64::NAN,
                            have_end: f64::NAN,
                        })?
                    } else {
                        v
                    };
                    self.feedback.apply_add(w, -b2, out);
                }
                FeedbackMode::Negative => self.feedback.apply_add(v, b2, out),
            }
        }
        if let Some(nl) = self.nonlinearity {
            let force = &mut self.scratch.force;
            self.op
                .nonlinear_force_into(a, nl.p, &mut self.scratch.op_grid, force)?;
            for (o, f) in out.iter_mut().zip(force.iter()) {
                *o += f;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn acceleration_with_history(
        &mut self,
        t: f64,
        pos: usize,
        a: &[f64],
        v: &[f64],
        history: &HistoryBuffer,
        side: Side,
        out: &mut [f64],
    ) -> Result<()> {
        let mut delayed = std::mem::take(&mut self.scratch.delayed);
        let need = self.needs_history() && self.schedule.b2_on(pos, t) != 0.0;
        let result = (|| {
            if need {
                history.lookup_into(t - self.schedule.tau, side, &mut delayed)?;
            }
            self.acceleration(t, pos, a, v, need.then_some(delayed.as_slice()), out)
        })();
        self.scratch.delayed = delayed;
        result
    }

    fn stage(&mut self, t: f64, pos: usize, history: Option<&HistoryBuffer>, stage: usize) -> Result<()> {
        let mut a = std::mem::take(&mut self.scratch.a);
        let mut v = std::mem::take(&mut self.scratch.v);
        let mut out = std::mem::take(&mut self.scratch.kv[stage]);
        // the last stage sits at the right end of the step and reads left limits
        let side = if stage == 3 { Side::Left } else { Side::Right };
        let result = match history {
            Some(h) => self.acceleration_with_history(t, pos, &a, &v, h, side, &mut out),
            None => {
                let need = self.needs_history() && self.schedule.b2_on(pos, t) != 0.0;
                if need {
                    Err(Error::HistoryGap {
                        start: t - self.schedule.tau,
                        end: t - self.schedule.tau,
                        have_start: f64::NAN,
                        have_end: f64::NAN,
                    })
                } else {
                    self.acceleration(t, pos, &a, &v, None, &mut out)
                }
            }
        };
        self.scratch.ka[stage].copy_from_slice(&v);
        std::mem::swap(&mut self.scratch.a, &mut a);
        std::mem::swap(&mut self.scratch.v, &mut v);
        self.scratch.kv[stage] = out;
        result
    }

    /// Advances `state` by one step, rotating the history when a slot
    /// boundary is reached.
    pub fn step(&mut self, state: &SystemState, history: Option<&mut HistoryBuffer>) -> Result<SystemState> {
        self.op.check_dim(&state.position)?;
        self.op.check_dim(&state.velocity)?;
        if history.is_some() && self.dt < 0.0 {
            return Err(Error::InvalidStep(self.dt));
        }
        let dt = self.dt;
        let t = state.time;
        let pos = self.position_for_step(t)?;
        let offsets = [0.0, 0.5, 0.5, 1.0];
        for (s, offset) in offsets.into_iter().enumerate() {
            let c = offset * dt;
            if s == 0 {
                self.scratch.a.copy_from_slice(&state.position);
                self.scratch.v.copy_from_slice(&state.velocity);
            } else {
                for k in 0..state.dim() {
                    self.scratch.a[k] = state.position[k] + c * self.scratch.ka[s - 1][k];
                    self.scratch.v[k] = state.velocity[k] + c * self.scratch.kv[s - 1][k];
                }
            }
            self.stage(t + c, pos, history.as_deref(), s)?;
        }
        let sc = &self.scratch;
        let mut next = SystemState::new(t + dt, state.position.clone(), state.velocity.clone());
        for k in 0..state.dim() {
            next.position[k] += dt / 6.0 * (sc.ka[0][k] + 2.0 * sc.ka[1][k] + 2.0 * sc.ka[2][k] + sc.ka[3][k]);
            next.velocity[k] += dt / 6.0 * (sc.kv[0][k] + 2.0 * sc.kv[1][k] + 2.0 * sc.kv[2][k] + sc.kv[3][k]);
        }
        if let Some(h) = history {
            h.phase += 1;
            if h.phase == h.substeps {
                h.phase = 0;
                self.rotate(h, pos, &next)?;
            }
        }
        Ok(next)
    }

    /// Appends the slot at `next.time`, with one-sided derivatives taken in
    /// the intervals on either side of it.
    fn rotate(&mut self, history: &mut HistoryBuffer, pos: usize, next: &SystemState) -> Result<()> {
        let modes = self.op.mode_count();
        let mut left = vec![0.0; modes];
        self.acceleration_with_history(
            next.time,
            pos,
            &next.position,
            &next.velocity,
            history,
            Side::Left,
            &mut left,
        )?;
        let right_pos = self.position_for_step(next.time).unwrap_or(pos);
        let right = if right_pos == pos {
            left.clone()
        } else {
            let mut right = vec![0.0; modes];
            self.acceleration_with_history(
                next.time,
                right_pos,
                &next.position,
                &next.velocity,
                history,
                Side::Right,
                &mut right,
            )?;
            right
        };
        history.push(&next.velocity, &left, &right);
        history.anchor(next.time);
        Ok(())
    }
}

/// Integrates from `initial` over `config.horizon`, calling `observer`
/// after every step (and once for the initial state) with the step index,
/// the state and the history buffer, and recording every `stride`-th state.
pub fn run_with_observer<F>(
    op: &SpectralOperator,
    schedule: &DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    initial: &SystemState,
    config: &RunConfig,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(usize, &SystemState, Option<&HistoryBuffer>) -> Result<()>,
{
    op.check_dim(&initial.position)?;
    op.check_dim(&initial.velocity)?;
    let steps = config.step_count()?;
    let end = initial.time + config.horizon;
    if end > schedule.horizon() * (1.0 + 1e-12) {
        return Err(Error::OutOfHorizon {
            t: end,
            start: schedule.switch_times.first().copied().unwrap_or(0.0),
            end: schedule.horizon(),
        });
    }
    let stride = config.stride.max(1);
    let mut integrator = Integrator::new(op, schedule, nonlinearity, config.dt, config.safety)?;
    let mut history = if integrator.needs_history() {
        Some(integrator.prepare_history(&config.history, config.history_divisions, initial)?)
    } else {
        None
    };
    let mut state = initial.clone();
    let mut samples = Vec::with_capacity(steps / stride + 1);
    samples.push(state.clone());
    observer(0, &state, history.as_ref())?;
    for k in 1..=steps {
        let mut next = integrator.step(&state, history.as_mut())?;
        next.time = initial.time + k as f64 * config.dt;
        state = next;
        observer(k, &state, history.as_ref())?;
        if k % stride == 0 {
            samples.push(state.clone());
        }
    }
    Ok(Trajectory {
        samples,
        dt: config.dt,
        stride,
        scheme: SCHEME.to_string(),
        scenario_hash: None,
    })
}

/// [`run_with_observer`] without an observer.
pub fn run(
    op: &SpectralOperator,
    schedule: &DampingSchedule,
    nonlinearity: Option<PowerNonlinearity>,
    initial: &SystemState,
    config: &RunConfig,
) -> Result<Trajectory> {
    run_with_observer(op, schedule, nonlinearity, initial, config, |_, _, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{EvenRecord, OddRecord};

    fn single_mode() -> SpectralOperator {
        SpectralOperator::custom(vec![1.0]).unwrap()
    }

    #[test]
    fn harmonic_quarter_period() {
        let op = single_mode();
        let schedule = DampingSchedule::new(vec![0.0, 10.0]);
        let n = 1000;
        let dt = std::f64::consts::FRAC_PI_2 / n as f64;
        let mut integ = Integrator::new(&op, &schedule, None, dt, DEFAULT_SAFETY).unwrap();
        let mut s = SystemState::new(0.0, vec![1.0], vec![0.0]);
        for _ in 0..n {
            s = integ.step(&s, None).unwrap();
        }
        assert!(s.position[0].abs() < 1e-8);
        assert!((s.velocity[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn critically_damped() {
        let op = single_mode();
        let schedule = DampingSchedule::new(vec![0.0, 10.0]).with_even(vec![EvenRecord::constant(2.0)]);
        let cfg = RunConfig::new(1e-3, 1.0);
        let traj = run(&op, &schedule, None, &SystemState::new(0.0, vec![1.0], vec![0.0]), &cfg).unwrap();
        let a = traj.last().unwrap().position[0];
        assert!((a - 2.0 / std::f64::consts::E).abs() < 1e-8);
        assert_eq!(traj.samples.len(), 1001);
        assert_eq!(traj.samples[0].time, 0.0);
    }

    #[test]
    fn guard_and_alignment() {
        let op = SpectralOperator::custom(vec![1.0, 10000.0]).unwrap();
        let schedule = DampingSchedule::new(vec![0.0, 10.0]);
        assert!(matches!(
            Integrator::new(&op, &schedule, None, 0.01, DEFAULT_SAFETY),
            Err(Error::StabilityGuard { .. })
        ));
        let op = single_mode();
        let schedule = DampingSchedule::new(vec![0.0, 10.0])
            .with_delay(1.0)
            .with_even(vec![EvenRecord::constant(1.0)]);
        let mut integ = Integrator::new(&op, &schedule, None, 0.3, DEFAULT_SAFETY).unwrap();
        assert!(matches!(
            integ.prepare_history(&HistoryRule::Zero, 1, &SystemState::zero(1)),
            Err(Error::DelayAlignment { .. })
        ));
        assert!(matches!(
            RunConfig::new(0.3, 1.0).step_count(),
            Err(Error::HorizonAlignment { .. })
        ));
    }

    #[test]
    fn constant_history_delay_term() {
        // a″ + a + 0.5 a′(t−1) with constant pre-history v̄ = 1: on [0, 1] the
        // delayed term is the constant 0.5, so a(t) = −0.5 + 1.5 cos t.
        let op = single_mode();
        let mut schedule = DampingSchedule::new(vec![0.0, 5.0])
            .with_delay(1.0)
            .with_odd(vec![OddRecord::constant(0.5)]);
        schedule.first_index = 1;
        let cfg = RunConfig::new(1e-3, 1.0).with_history(HistoryRule::Constant(vec![1.0]), 4);
        let traj = run(&op, &schedule, None, &SystemState::new(0.0, vec![1.0], vec![0.0]), &cfg).unwrap();
        let a = traj.last().unwrap().position[0];
        assert!((a - (-0.5 + 1.5 * 1f64.cos())).abs() < 1e-10, "{a}");
    }

    #[test]
    fn history_window_tracks_time() {
        let op = single_mode();
        let mut schedule = DampingSchedule::new(vec![0.0, 5.0])
            .with_delay(1.0)
            .with_odd(vec![OddRecord::constant(0.5)]);
        schedule.first_index = 1;
        let cfg = RunConfig::new(0.01, 2.5).with_history(HistoryRule::Zero, 5);
        let mut last_window = (0.0, 0.0);
        run_with_observer(
            &op,
            &schedule,
            None,
            &SystemState::new(0.0, vec![1.0], vec![0.0]),
            &cfg,
            |k, s, h| {
                let h = h.unwrap();
                if k % 20 == 0 {
                    let (a, b) = h.window();
                    assert!((b - s.time).abs() < 1e-12);
                    assert!((b - a - 1.0).abs() < 1e-12);
                }
                last_window = h.window();
                Ok(())
            },
        )
        .unwrap();
        assert!((last_window.1 - 2.4).abs() < 1e-12);
    }
}

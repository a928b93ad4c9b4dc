//! Past velocities over the delay window `[t − τ, t]`.
//!
//! The buffer keeps `M + 1` slots spaced `τ/M` apart. Each slot stores the
//! velocity together with its one-sided time derivatives, so that values
//! between slots come from a cubic Hermite interpolant and values at slot
//! times are exact reads.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which one-sided limit to read when a lookup hits a slot time exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// How to fill the buffer before `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistoryRule {
    #[default]
    Zero,
    /// The same velocity vector at every past time.
    Constant(Vec<f64>),
    /// `M + 1` velocity vectors at times `−τ, −τ + τ/M, …, 0`.
    Samples(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    time: f64,
    /// limit from the left
    velocity_left: Vec<f64>,
    /// value from the slot time on
    velocity: Vec<f64>,
    /// derivative approaching from the left
    dv_left: Vec<f64>,
    /// derivative leaving to the right
    dv_right: Vec<f64>,
}

/// Ring of `M + 1` timestamped velocity slots.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    spacing: f64,
    slots: VecDeque<Slot>,
    /// integrator steps per slot spacing
    pub(crate) substeps: usize,
    /// steps taken since the newest slot
    pub(crate) phase: usize,
    /// the slot dropped by the last push, one spacing before the oldest
    retired: Option<Slot>,
}

/// Fills a buffer anchored at `t = 0`.
pub fn init_history(rule: &HistoryRule, modes: usize, tau: f64, m: usize) -> Result<HistoryBuffer> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NonPositiveDelay(tau));
    }
    if m == 0 {
        return Err(Error::EmptyHistory);
    }
    let spacing = tau / m as f64;
    let time = |j: usize| -tau + j as f64 * spacing;
    let zero = vec![0.0; modes];
    let slots: VecDeque<Slot> = match rule {
        HistoryRule::Zero => (0..=m)
            .map(|j| Slot {
                time: time(j),
                velocity_left: zero.clone(),
                velocity: zero.clone(),
                dv_left: zero.clone(),
                dv_right: zero.clone(),
            })
            .collect(),
        HistoryRule::Constant(v) => {
            if v.len() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: v.len(),
                });
            }
            (0..=m)
                .map(|j| Slot {
                    time: time(j),
                    velocity_left: v.clone(),
                    velocity: v.clone(),
                    dv_left: zero.clone(),
                    dv_right: zero.clone(),
                })
                .collect()
        }
        HistoryRule::Samples(samples) => {
            if samples.len() != m + 1 {
                return Err(Error::HistorySamples {
                    expected: m + 1,
                    found: samples.len(),
                });
            }
            if let Some(bad) = samples.iter().find(|s| s.len() != modes) {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: bad.len(),
                });
            }
            (0..=m)
                .map(|j| {
                    let d = sample_derivative(samples, j, spacing);
                    Slot {
                        time: time(j),
                        velocity_left: samples[j].clone(),
                        velocity: samples[j].clone(),
                        dv_left: d.clone(),
                        dv_right: d,
                    }
                })
                .collect()
        }
    };
    Ok(HistoryBuffer {
        spacing,
        slots,
        substeps: 1,
        phase: 0,
        retired: None,
    })
}

/// Finite-difference derivative of uniformly spaced samples (central in
/// the interior, second-order one-sided at the ends).
fn sample_derivative(samples: &[Vec<f64>], j: usize, h: f64) -> Vec<f64> {
    let last = samples.len() - 1;
    let modes = samples[0].len();
    if last == 0 {
        return vec![0.0; modes];
    }
    (0..modes)
        .map(|k| {
            let s = |i: usize| samples[i][k];
            if last == 1 {
                (s(1) - s(0)) / h
            } else if j == 0 {
                (-3.0 * s(0) + 4.0 * s(1) - s(2)) / (2.0 * h)
            } else if j == last {
                (3.0 * s(last) - 4.0 * s(last - 1) + s(last - 2)) / (2.0 * h)
            } else {
                (s(j + 1) - s(j - 1)) / (2.0 * h)
            }
        })
        .collect()
}

impl HistoryBuffer {
    /// Slot spacing `τ/M`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of slot intervals `M`.
    pub fn divisions(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn delay(&self) -> f64 {
        self.spacing * self.divisions() as f64
    }

    /// Time span `[oldest, newest]` covered by the slots.
    pub fn window(&self) -> (f64, f64) {
        (
            self.slots.front().map_or(0.0, |s| s.time),
            self.slots.back().map_or(0.0, |s| s.time),
        )
    }

    /// Earliest time a lookup can reach: the oldest slot, or the slot
    /// retired by the last push.
    pub fn coverage_start(&self) -> f64 {
        self.retired.as_ref().map_or_else(|| self.window().0, |s| s.time)
    }

    /// Time and right-limit velocity of the newest slot.
    pub fn newest(&self) -> (f64, &[f64]) {
        let s = self.slots.back().expect("buffer has slots");
        (s.time, &s.velocity)
    }

    fn slot(&self, j: usize) -> &Slot {
        match &self.retired {
            Some(r) if j == 0 => r,
            Some(_) => &self.slots[j - 1],
            None => &self.slots[j],
        }
    }

    fn slot_count(&self) -> usize {
        self.slots.len() + usize::from(self.retired.is_some())
    }

    /// Slot timestamps, oldest first.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().map(|s| s.time)
    }

    /// Slot velocities, oldest first.
    pub fn velocities(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.slots.iter().map(|s| s.velocity.as_slice())
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.spacing
    }

    /// Velocity at time `t` inside the window (right limit at slot times).
    pub fn lookup(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.slots[0].velocity.len()];
        self.lookup_into(t, Side::Right, &mut out)?;
        Ok(out)
    }

    /// Velocity at time `t`: an exact slot read at slot times, cubic
    /// Hermite interpolation in between. The two limits differ only where
    /// the pre-history meets the initial velocity.
    pub fn lookup_into(&self, t: f64, side: Side, out: &mut [f64]) -> Result<()> {
        let (start, end) = (self.coverage_start(), self.window().1);
        let tol = self.tolerance();
        if t < start - tol || t > end + tol {
            return Err(Error::HistoryGap {
                start: t,
                end: t,
                have_start: start,
                have_end: end,
            });
        }
        let x = (t - start) / self.spacing;
        let last = self.slot_count() - 1;
        let nearest = x.round().clamp(0.0, last as f64) as usize;
        if (t - self.slot(nearest).time).abs() <= tol {
            let slot = self.slot(nearest);
            out.copy_from_slice(match side {
                Side::Left => &slot.velocity_left,
                Side::Right => &slot.velocity,
            });
            return Ok(());
        }
        let j = (x.floor().max(0.0) as usize).min(last - 1);
        let (a, b) = (self.slot(j), self.slot(j + 1));
        let h = b.time - a.time;
        let s = (t - a.time) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        for (k, o) in out.iter_mut().enumerate() {
            *o = h00 * a.velocity[k] + h10 * h * a.dv_right[k] + h01 * b.velocity_left[k] + h11 * h * b.dv_left[k];
        }
        Ok(())
    }

    /// Sets the right limit of the newest slot (the initial state at `t = 0`),
    /// keeping the pre-history as the left limit.
    pub(crate) fn set_newest_right(&mut self, velocity: &[f64], dv_right: &[f64]) {
        let slot = self.slots.back_mut().expect("buffer has slots");
        slot.velocity.copy_from_slice(velocity);
        slot.dv_right.copy_from_slice(dv_right);
    }

    /// Appends a slot one spacing after the newest and drops the oldest.
    pub(crate) fn push(&mut self, velocity: &[f64], dv_left: &[f64], dv_right: &[f64]) {
        let time = self.slots.back().map_or(0.0, |s| s.time) + self.spacing;
        let oldest = self.slots.pop_front().expect("buffer has slots");
        let mut slot = self.retired.replace(oldest).unwrap_or_else(|| self.slots[0].clone());
        slot.time = time;
        slot.velocity_left.copy_from_slice(velocity);
        slot.velocity.copy_from_slice(velocity);
        slot.dv_left.copy_from_slice(dv_left);
        slot.dv_right.copy_from_slice(dv_right);
        self.slots.push_back(slot);
    }

    /// Re-anchors slot times to `newest − jτ/M` so that long runs do not
    /// accumulate rounding drift.
    pub(crate) fn anchor(&mut self, newest: f64) {
        let last = self.slots.len() - 1;
        for (j, slot) in self.slots.iter_mut().enumerate() {
            slot.time = newest - (last - j) as f64 * self.spacing;
        }
        if let Some(r) = &mut self.retired {
            r.time = newest - (last + 1) as f64 * self.spacing;
        }
    }
}

//! Built-in scenarios.

use std::f64::consts::PI;

use idl_core::criteria::Theorem;
use idl_core::history::HistoryRule;
use idl_core::operator::{OperatorSpec, QuadratureConfig, Region};
use idl_core::schedule::{DampingGeometry, DampingSchedule, FeedbackMode, OddRecord, ScheduleRule};
use idl_core::sequence::SequenceSpec;

use crate::scenario::{
    CriteriaSpec, GeneratorSpec, InitialData, IntegratorSpec, NonlinearitySpec, OutputSpec, Scenario,
};

pub const PRESET_NAMES: [&str; 5] = [
    "conservative",
    "distributed_wave",
    "localized_wave",
    "posneg_wave",
    "datko_delay",
];

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "conservative" => Some(conservative()),
        "distributed_wave" => Some(distributed_wave()),
        "localized_wave" => Some(localized_wave()),
        "posneg_wave" => Some(posneg_wave()),
        "datko_delay" => Some(datko_delay()),
        _ => None,
    }
}

fn string_on_pi(modes: usize) -> OperatorSpec {
    OperatorSpec::Dirichlet1d {
        modes,
        length: PI,
        quadrature: QuadratureConfig::default(),
    }
}

fn integrator(dt: f64, stride: usize, history_divisions: usize) -> IntegratorSpec {
    IntegratorSpec {
        dt,
        horizon: None,
        stride,
        history_divisions,
        history: HistoryRule::Zero,
        safety: idl_core::integrator::DEFAULT_SAFETY,
        energy_refine: 4,
    }
}

fn base(name: &str, operator: OperatorSpec, schedule: DampingSchedule, integrator: IntegratorSpec) -> Scenario {
    Scenario {
        name: name.into(),
        operator,
        nonlinearity: None,
        schedule,
        generator: None,
        integrator,
        initial: InitialData::Mode {
            k: 1,
            amplitude: 1.0,
            velocity: 0.0,
        },
        criteria: CriteriaSpec::default(),
        outputs: OutputSpec::default(),
        seed: 0,
    }
}

/// Undamped, linear string with eight modes over `t ∈ [0, 100]`.
fn conservative() -> Scenario {
    base(
        "conservative",
        string_on_pi(8),
        DampingSchedule::new(vec![0.0, 100.0]),
        integrator(1e-3, 100, 1),
    )
}

/// `u_tt − u_xx + b1 u_t + b2 u_t(t − τ) = −|u|²u` on `(0, π)`: unit damping
/// for unit time, then delayed feedback of level `0.1/(n+1)²` for half a unit.
fn distributed_wave() -> Scenario {
    let mut s = base(
        "distributed_wave",
        string_on_pi(8),
        DampingSchedule::new(Vec::new()).with_delay(0.5),
        integrator(1e-3, 10, 5),
    );
    s.nonlinearity = Some(NonlinearitySpec { enabled: true, p: 2.0 });
    s.generator = Some(GeneratorSpec {
        rule: ScheduleRule {
            b2_upper: SequenceSpec::power_law(0.1, 2.0),
            ..ScheduleRule::periodic(1.0, 0.5, 1.0, 0.0)
        },
        pairs: 50,
    });
    s.initial = InitialData::Plucked {
        amplitude: 0.5,
        apex: 0.3,
    };
    s.criteria.theorems = vec![Theorem::First];
    s
}

/// Damping on `ω = (0.4, 2.6)`, delayed feedback on `ω̃ = (0.8, 2.0) ⊂ ω`.
fn localized_wave() -> Scenario {
    let schedule = DampingSchedule::new(Vec::new())
        .with_delay(0.5)
        .with_geometry(DampingGeometry::Localized {
            omega: Region::Interval { start: 0.4, end: 2.6 },
            omega_tilde: Region::Interval { start: 0.8, end: 2.0 },
        });
    let mut s = base("localized_wave", string_on_pi(8), schedule, integrator(1e-3, 10, 5));
    s.nonlinearity = Some(NonlinearitySpec { enabled: true, p: 2.0 });
    s.generator = Some(GeneratorSpec {
        rule: ScheduleRule {
            b2_upper: SequenceSpec::power_law(0.2, 2.0),
            ..ScheduleRule::periodic(2.0, 0.5, 2.0, 0.0)
        },
        pairs: 20,
    });
    s.initial = InitialData::Plucked {
        amplitude: 0.5,
        apex: 0.3,
    };
    s.criteria.theorems = vec![Theorem::Stab2Cris5];
    s.criteria.embedding_c = Some(1.0);
    s
}

/// Positive damping on `ω = (0.3, 1.7)` alternating with negative damping on
/// the disjoint `ω̃ = (2.0, 2.9)`, no delay.
fn posneg_wave() -> Scenario {
    let schedule = DampingSchedule::new(Vec::new())
        .with_mode(FeedbackMode::Negative)
        .with_geometry(DampingGeometry::Localized {
            omega: Region::Interval { start: 0.3, end: 1.7 },
            omega_tilde: Region::Interval { start: 2.0, end: 2.9 },
        });
    let mut s = base("posneg_wave", string_on_pi(8), schedule, integrator(1e-3, 10, 1));
    s.generator = Some(GeneratorSpec {
        rule: ScheduleRule::periodic(2.0, 0.5, 2.0, 0.05),
        pairs: 20,
    });
    s.initial = InitialData::Plucked {
        amplitude: 0.5,
        apex: 0.3,
    };
    s.criteria.theorems = vec![Theorem::Posneg];
    s.criteria.c3 = Some(1.0);
    s
}

/// `a″ + a + 0.1·a′(t − π) = 0`: delayed feedback alone destabilizes.
fn datko_delay() -> Scenario {
    let mut schedule = DampingSchedule::new(vec![0.0, 64.0 * PI])
        .with_delay(PI)
        .with_odd(vec![OddRecord::constant(0.1)]);
    schedule.first_index = 1;
    base(
        "datko_delay",
        OperatorSpec::Custom { eigenvalues: vec![1.0] },
        schedule,
        integrator(PI / 2048.0, 64, 64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in PRESET_NAMES {
            let s = preset(name).unwrap();
            assert_eq!(s.name, name);
            s.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn conservative_has_no_feedback() {
        let r = conservative().resolve().unwrap();
        assert!(r.nonlinearity.is_none());
        assert!(r.schedule.even_intervals.is_empty() && r.schedule.odd_intervals.is_empty());
        assert_eq!(r.operator.mode_count(), 8);
        assert_eq!(r.config.horizon, 100.0);
    }

    #[test]
    fn datko_parameters() {
        let r = datko_delay().resolve().unwrap();
        assert_eq!(r.schedule.tau, PI);
        assert!(r.schedule.even_intervals.is_empty());
        assert_eq!(r.schedule.b2_at(1.0), 0.1);
        assert_eq!(r.schedule.coefficients_at(0.0).unwrap().interval_index, 1);
    }
}

//! Single-tone delay probe inside the time-domain simulation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ac::{Direction, End};
use crate::error::{require_positive, Error, Result};
use crate::signal::tone_phasor;

use super::circuit::simulate_loop;
use super::KljnConfig;

const SETTLING_PERIODS: f64 = 10.0;
const MEASURED_PERIODS: f64 = 20.0;

/// Smallest phase the sampled simulation resolves. The start-up transient
/// of the stiff cable mode leaves a bias of about 2e-10 rad in the lock-in;
/// below this floor the bias exceeds 2% of the reading.
pub const PROBE_PHASE_RESOLUTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayMeasurement {
    pub direction: Direction,
    pub probe_frequency: f64,
    pub resistance_alice: f64,
    pub resistance_bob: f64,
    /// arg(U_bob / U_alice) at the probe frequency, radians.
    pub phase: f64,
    /// |phase| / ω.
    pub delay: f64,
    /// L_c / R_far.
    pub expected_delay: f64,
    /// 2πf·D / |phase|; a steady-state quantity, not a signal velocity.
    pub equivalent_velocity: f64,
}

impl DelayMeasurement {
    pub fn relative_error(&self) -> f64 {
        (self.delay - self.expected_delay).abs() / self.expected_delay
    }
}

/// Drives a 1 V tone from the end selected by `direction` and measures the
/// far-end phase lag after [`SETTLING_PERIODS`] periods.
///
/// The probe runs on the lossless counterpart of the configured cable: the
/// delay law concerns the reactive part only.
pub fn delay_probe(
    config: &KljnConfig,
    r_alice: f64,
    r_bob: f64,
    direction: Direction,
    probe_frequency: f64,
) -> Result<DelayMeasurement> {
    config.validate()?;
    require_positive("resistance_alice", r_alice)?;
    require_positive("resistance_bob", r_bob)?;
    require_positive("probe_frequency", probe_frequency)?;
    let cable = config.cable.lossless();
    let f_min = cable.min_wave_frequency();
    if probe_frequency > 0.01 * f_min {
        return Err(Error::invalid(
            "probe_frequency",
            format!("{probe_frequency} Hz exceeds 0.01·f_min = {} Hz", 0.01 * f_min),
        ));
    }
    let fs = config.sample_rate;
    if fs < 20.0 * probe_frequency {
        return Err(Error::invalid("probe_frequency", "sample_rate must be at least 20× the probe frequency"));
    }

    let per_period = fs / probe_frequency;
    let settle = (SETTLING_PERIODS * per_period).ceil() as usize;
    let window = (MEASURED_PERIODS * per_period).round() as usize;
    let n = settle + window;
    let omega = 2.0 * PI * probe_frequency;
    let tone: Vec<f64> = (0..n).map(|k| (omega * k as f64 / fs).sin()).collect();
    let silent = vec![0.0; n];
    let (u_a, u_b) = match direction.drive_end() {
        End::Alice => (&tone, &silent),
        End::Bob => (&silent, &tone),
    };
    let traces = simulate_loop(&cable, r_alice, r_bob, u_a, u_b, fs)?;
    let dt = 1.0 / fs;
    let va = tone_phasor(&traces.u_alice_end, dt, probe_frequency, settle);
    let vb = tone_phasor(&traces.u_bob_end, dt, probe_frequency, settle);
    if va.norm() == 0.0 || vb.norm() == 0.0 {
        return Err(Error::Unmeasurable("probe tone absent at one end".into()));
    }
    let phase = (vb / va).arg();
    if phase.abs() < PROBE_PHASE_RESOLUTION {
        return Err(Error::Unmeasurable(format!(
            "phase {phase:e} rad below the probe resolution {PROBE_PHASE_RESOLUTION:e} rad"
        )));
    }
    let r_far = match direction {
        Direction::TowardBob => r_bob,
        Direction::TowardAlice => r_alice,
    };
    let delay = phase.abs() / omega;
    Ok(DelayMeasurement {
        direction,
        probe_frequency,
        resistance_alice: r_alice,
        resistance_bob: r_bob,
        phase,
        delay,
        expected_delay: cable.total_inductance() / r_far,
        equivalent_velocity: cable.length / delay,
    })
}

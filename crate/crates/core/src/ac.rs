//! Steady-state phasor analysis of lumped cable models between two resistive
//! terminations.
//!
//! Every topology is a cascade of series impedances and shunt admittances
//! running from Alice's end to Bob's end. The generator sits in series with
//! the resistor at the driven end; the resistor at the other end shunts the
//! far node to ground. The cascade is solved exactly by a backward sweep from
//! the far end and then checked against Kirchhoff's current law at every node.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cable::CableSpec;
use crate::constants::SPEED_OF_LIGHT;
use crate::error::{require_positive, Error, Result};

/// Relative KCL residual above which a solution is rejected.
const KCL_TOLERANCE: f64 = 1e-9;

/// Smallest phase (rad) an `arg` of a near-unity ratio resolves in f64.
pub const PHASE_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Series inductance only.
    LosslessL,
    /// Series resistance plus inductance.
    LossyRL,
    /// Series R + L with half the capacitance at each end.
    PiRLC,
    /// `segment_count` series-then-shunt sections.
    LadderN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub topology: Topology,
    pub segment_count: usize,
}

impl NetworkModel {
    pub const LOSSLESS_L: NetworkModel = NetworkModel {
        topology: Topology::LosslessL,
        segment_count: 1,
    };
    pub const LOSSY_RL: NetworkModel = NetworkModel {
        topology: Topology::LossyRL,
        segment_count: 1,
    };
    pub const PI_RLC: NetworkModel = NetworkModel {
        topology: Topology::PiRLC,
        segment_count: 1,
    };

    pub fn ladder(segment_count: usize) -> Result<Self> {
        if segment_count == 0 {
            return Err(Error::invalid("segment_count", "ladder needs at least one segment"));
        }
        Ok(NetworkModel {
            topology: Topology::LadderN,
            segment_count,
        })
    }

    fn elements(&self, cable: &CableSpec, frequency: f64) -> Vec<Element> {
        let omega = 2.0 * PI * frequency;
        let l = cable.total_inductance();
        let c = cable.total_capacitance();
        let r = cable.total_resistance();
        match self.topology {
            Topology::LosslessL => vec![Element::Series(Complex64::new(0.0, omega * l))],
            Topology::LossyRL => vec![Element::Series(Complex64::new(r, omega * l))],
            Topology::PiRLC => vec![
                Element::Shunt(Complex64::new(0.0, omega * c / 2.0)),
                Element::Series(Complex64::new(r, omega * l)),
                Element::Shunt(Complex64::new(0.0, omega * c / 2.0)),
            ],
            Topology::LadderN => {
                let n = self.segment_count.max(1) as f64;
                let z = Complex64::new(r / n, omega * l / n);
                let y = Complex64::new(0.0, omega * c / n);
                (0..self.segment_count.max(1))
                    .flat_map(|_| [Element::Series(z), Element::Shunt(y)])
                    .collect()
            }
        }
    }
}

impl std::fmt::Display for NetworkModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.topology {
            Topology::LosslessL => write!(f, "lossless"),
            Topology::LossyRL => write!(f, "lossy"),
            Topology::PiRLC => write!(f, "pi"),
            Topology::LadderN => write!(f, "ladder:{}", self.segment_count),
        }
    }
}

impl std::str::FromStr for NetworkModel {
    type Err = Error;

    /// `lossless`, `lossy`, `pi` or `ladder:N`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lossless" => Ok(Self::LOSSLESS_L),
            "lossy" => Ok(Self::LOSSY_RL),
            "pi" => Ok(Self::PI_RLC),
            other => {
                let n = other
                    .strip_prefix("ladder:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::invalid("model", format!("expected lossless|lossy|pi|ladder:N, got {other:?}")))?;
                Self::ladder(n)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Element {
    Series(Complex64),
    Shunt(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Alice,
    Bob,
}

/// Direction of "propagation": from the driven end toward the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TowardBob,
    TowardAlice,
}

impl Direction {
    pub fn drive_end(self) -> End {
        match self {
            Direction::TowardBob => End::Alice,
            Direction::TowardAlice => End::Bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub resistance_alice: f64,
    pub resistance_bob: f64,
    pub drive_end: End,
    pub drive_amplitude: f64,
}

impl Termination {
    /// 1 V generator at Alice's end.
    pub fn new(resistance_alice: f64, resistance_bob: f64) -> Self {
        Termination {
            resistance_alice,
            resistance_bob,
            drive_end: End::Alice,
            drive_amplitude: 1.0,
        }
    }

    pub fn matched(cable: &CableSpec) -> Self {
        let r = cable.wave_impedance();
        Self::new(r, r)
    }

    pub fn driven_from(mut self, end: End) -> Self {
        self.drive_end = end;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.drive_amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("resistance_alice", self.resistance_alice)?;
        require_positive("resistance_bob", self.resistance_bob)?;
        if !self.drive_amplitude.is_finite() {
            return Err(Error::invalid("drive_amplitude", "must be finite"));
        }
        Ok(())
    }

    /// Resistance at the end opposite to the generator.
    pub fn far_resistance(&self) -> f64 {
        match self.drive_end {
            End::Alice => self.resistance_bob,
            End::Bob => self.resistance_alice,
        }
    }

    pub fn near_resistance(&self) -> f64 {
        match self.drive_end {
            End::Alice => self.resistance_alice,
            End::Bob => self.resistance_bob,
        }
    }

    pub fn loop_resistance(&self) -> f64 {
        self.resistance_alice + self.resistance_bob
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasorSolution {
    pub frequency: f64,
    pub voltage_alice_end: Complex64,
    pub voltage_bob_end: Complex64,
    /// `voltage_alice_end - voltage_bob_end`, summed over the series drops.
    pub drop_u_ab: Complex64,
    /// Current delivered by the generator through the driven-end resistor.
    pub loop_current: Complex64,
    /// Current entering the far-end resistor.
    pub far_end_current: Complex64,
    /// Largest KCL imbalance relative to the largest branch current.
    pub kcl_residual: f64,
}

pub fn solve_phasor(
    model: NetworkModel,
    cable: &CableSpec,
    term: &Termination,
    frequency: f64,
) -> Result<PhasorSolution> {
    cable.validate()?;
    term.validate()?;
    require_positive("frequency", frequency)?;
    if model.topology == Topology::LadderN && model.segment_count == 0 {
        return Err(Error::invalid("segment_count", "ladder needs at least one segment"));
    }

    let mut elements = model.elements(cable, frequency);
    if term.drive_end == End::Bob {
        elements.reverse();
    }
    let r_near = term.near_resistance();
    let r_far = term.far_resistance();

    // Backward sweep with a unit far-end voltage. `nodes[0]` is the driven end.
    let mut v = Complex64::new(1.0, 0.0);
    let mut i = v / r_far;
    let mut node_voltages = vec![v];
    let mut drop = Complex64::new(0.0, 0.0);
    for element in elements.iter().rev() {
        match *element {
            Element::Shunt(y) => i += y * v,
            Element::Series(z) => {
                let dv = z * i;
                drop += dv;
                v += dv;
                node_voltages.push(v);
            }
        }
    }
    node_voltages.reverse();
    let source_unit = v + i * r_near;
    if !(source_unit.norm().is_finite()) || source_unit.norm() == 0.0 {
        return Err(Error::SingularSystem { frequency });
    }
    let scale = term.drive_amplitude / source_unit;
    for node in node_voltages.iter_mut() {
        *node *= scale;
    }
    let drop = drop * scale;
    let loop_current = i * scale;
    let far_end_current = scale / r_far;

    let kcl_residual = kcl_residual(&elements, &node_voltages, term.drive_amplitude, r_near, r_far);
    if !(kcl_residual <= KCL_TOLERANCE) {
        return Err(Error::SingularSystem { frequency });
    }

    let v_near = node_voltages[0];
    let v_far = *node_voltages.last().expect("at least one node");
    let (voltage_alice_end, voltage_bob_end, drop_u_ab) = match term.drive_end {
        End::Alice => (v_near, v_far, drop),
        End::Bob => (v_far, v_near, -drop),
    };
    Ok(PhasorSolution {
        frequency,
        voltage_alice_end,
        voltage_bob_end,
        drop_u_ab,
        loop_current,
        far_end_current,
        kcl_residual,
    })
}

/// Independently evaluates the current balance at each node of the cascade.
///
/// Each node's imbalance is taken relative to the sum of `|V|·|Y|` over its
/// branches, the scale at which rounding in the voltage differences shows up.
fn kcl_residual(
    elements: &[Element],
    nodes: &[Complex64],
    source: f64,
    r_near: f64,
    r_far: f64,
) -> f64 {
    let mut imbalance = vec![Complex64::new(0.0, 0.0); nodes.len()];
    let mut scale = vec![0.0f64; nodes.len()];
    let mut node = 0usize;

    imbalance[0] += (source - nodes[0]) / r_near;
    scale[0] += (source.abs() + nodes[0].norm()) / r_near;

    for element in elements {
        match *element {
            Element::Shunt(y) => {
                imbalance[node] -= y * nodes[node];
                scale[node] += nodes[node].norm() * y.norm();
            }
            Element::Series(z) => {
                let through = (nodes[node] - nodes[node + 1]) / z;
                let magnitude = (nodes[node].norm() + nodes[node + 1].norm()) / z.norm();
                imbalance[node] -= through;
                imbalance[node + 1] += through;
                scale[node] += magnitude;
                scale[node + 1] += magnitude;
                node += 1;
            }
        }
    }
    let last = nodes.len() - 1;
    imbalance[last] -= nodes[last] / r_far;
    scale[last] += nodes[last].norm() / r_far;

    imbalance
        .iter()
        .zip(&scale)
        .map(|(c, &s)| if s > 0.0 { c.norm() / s } else { c.norm() })
        .fold(0.0, f64::max)
}

/// Phase (rad) of the voltage at Bob's end relative to the voltage at
/// Alice's end, with the generator at the end `direction` starts from.
///
/// Driving toward Bob yields a lag (negative phase); driving toward Alice
/// yields a lead of Bob's end over Alice's end (positive phase). The small
/// angle limit of the lossless model is `∓2πf·L_c / R_far`.
pub fn phase_shift(
    model: NetworkModel,
    cable: &CableSpec,
    term: &Termination,
    frequency: f64,
    direction: Direction,
) -> Result<f64> {
    if frequency > cable.min_wave_frequency() / 10.0 {
        log::warn!(
            "phase shift requested at {frequency} Hz, above f_min/10 = {} Hz; lumped model outside its range",
            cable.min_wave_frequency() / 10.0
        );
    }
    let term = term.driven_from(direction.drive_end());
    let sol = solve_phasor(model, cable, &term, frequency)?;
    Ok((sol.voltage_bob_end / sol.voltage_alice_end).arg())
}

/// Lossless quasi-static delay `L_c / R_far`.
pub fn time_delay(cable: &CableSpec, term: &Termination, direction: Direction) -> Result<f64> {
    cable.validate()?;
    term.validate()?;
    let r_far = term.driven_from(direction.drive_end()).far_resistance();
    Ok(cable.total_inductance() / r_far)
}

/// `2πf·D / |phase|` from the measured end-to-end phase shift.
pub fn equivalent_phase_velocity(
    model: NetworkModel,
    cable: &CableSpec,
    term: &Termination,
    frequency: f64,
    direction: Direction,
) -> Result<f64> {
    let phase = phase_shift(model, cable, term, frequency, direction)?;
    if phase.abs() < PHASE_FLOOR {
        return Err(Error::Unmeasurable(format!(
            "phase shift {phase:e} rad below the numeric floor {PHASE_FLOOR:e} rad"
        )));
    }
    Ok(2.0 * PI * frequency * cable.length / phase.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVelocityCell {
    pub r_ohm: f64,
    pub f_hz: f64,
    pub v_m_per_s: f64,
    /// A steady-state phase velocity of a driven impedance network, not a
    /// signal velocity; it may exceed the speed of light.
    pub exceeds_light_speed: bool,
}

pub const TABLE_RESISTANCES: [f64; 5] = [10.0, 20.0, 50.0, 1e3, 10e3];
pub const TABLE_FREQUENCIES: [f64; 2] = [1e3, 5e3];

/// Toward-Bob equivalent phase velocity on the lossless model for each
/// far-end resistance and drive frequency (row-major in resistance). Alice's
/// resistor is the wave impedance.
pub fn phase_velocity_table(
    cable: &CableSpec,
    resistances: &[f64],
    frequencies: &[f64],
) -> Result<Vec<PhaseVelocityCell>> {
    let mut cells = Vec::with_capacity(resistances.len() * frequencies.len());
    for &r in resistances {
        let term = Termination::new(cable.wave_impedance(), r);
        for &f in frequencies {
            let v = equivalent_phase_velocity(
                NetworkModel::LOSSLESS_L,
                cable,
                &term,
                f,
                Direction::TowardBob,
            )?;
            cells.push(PhaseVelocityCell {
                r_ohm: r,
                f_hz: f,
                v_m_per_s: v,
                exceeds_light_speed: v > SPEED_OF_LIGHT,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub freq_hz: f64,
    pub mag_uab_v: f64,
    /// Phase of `U_AB` relative to the Alice-end voltage, in (−180°, 180°].
    pub phase_deg: f64,
    pub phase_unwrapped_deg: f64,
}

pub const DEFAULT_SWEEP_START: f64 = 100.0;
pub const DEFAULT_SWEEP_STOP: f64 = 10e6;
pub const DEFAULT_POINTS_PER_DECADE: usize = 20;

/// Logarithmic grid from `f_start` to `f_stop` inclusive.
pub fn log_frequencies(f_start: f64, f_stop: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    require_positive("f_start", f_start)?;
    require_positive("f_stop", f_stop)?;
    if f_stop <= f_start {
        return Err(Error::invalid("f_stop", "must exceed f_start"));
    }
    if points_per_decade == 0 {
        return Err(Error::invalid("points_per_decade", "must be >= 1"));
    }
    let steps = (f_stop / f_start).log10() * points_per_decade as f64;
    let whole = (steps + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=whole)
        .map(|k| f_start * 10f64.powf(k as f64 / points_per_decade as f64))
        .collect();
    let last = *out.last().expect("non-empty");
    if (last - f_stop).abs() <= 1e-9 * f_stop {
        *out.last_mut().expect("non-empty") = f_stop;
    } else {
        out.push(f_stop);
    }
    Ok(out)
}

pub fn ac_sweep(
    model: NetworkModel,
    cable: &CableSpec,
    term: &Termination,
    f_start: f64,
    f_stop: f64,
    points_per_decade: usize,
) -> Result<Vec<SweepRow>> {
    let freqs = log_frequencies(f_start, f_stop, points_per_decade)?;
    let phases: Vec<(f64, f64, f64)> = freqs
        .par_iter()
        .map(|&f| {
            let sol = solve_phasor(model, cable, term, f)?;
            let rel = sol.drop_u_ab / sol.voltage_alice_end;
            Ok((f, sol.drop_u_ab.norm(), rel.arg()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(phases.len());
    let mut unwrapped = 0.0;
    let mut previous: Option<f64> = None;
    for (f, mag, phase) in phases {
        unwrapped = match previous {
            None => phase,
            Some(prev) => {
                let mut step = phase - prev;
                while step > PI {
                    step -= 2.0 * PI;
                }
                while step <= -PI {
                    step += 2.0 * PI;
                }
                unwrapped + step
            }
        };
        previous = Some(phase);
        rows.push(SweepRow {
            freq_hz: f,
            mag_uab_v: mag,
            phase_deg: wrap_degrees(phase.to_degrees()),
            phase_unwrapped_deg: unwrapped.to_degrees(),
        });
    }
    Ok(rows)
}

fn wrap_degrees(deg: f64) -> f64 {
    if deg <= -180.0 {
        deg + 360.0
    } else {
        deg
    }
}

/// Least-squares slope of `log10|U_AB|` against `log10 f`.
pub fn log_log_slope(rows: &[SweepRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.freq_hz.log10()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mag_uab_v.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Minimum number of periods of the slowest component a waveform must span.
pub const MIN_WAVEFORM_PERIODS: f64 = 10.0;

/// Compares the simulated drop over a lossless cable with the scaled time
/// derivative of the generator voltage, `L_c/(R_A+R_B) · dU_gen/dt`.
///
/// The drop is produced by trapezoidal integration of the series loop
/// `L_c·di/dt = u_gen − (R_A+R_B)·i`, started from the DC operating point.
/// Samples before the integrator's stiff transient has decayed to 1e-12 are
/// excluded. Returns the RMS difference normalized by the RMS reference.
pub fn derivative_response_check(
    cable: &CableSpec,
    term: &Termination,
    waveform: &[f64],
    sample_interval: f64,
) -> Result<f64> {
    cable.validate()?;
    term.validate()?;
    require_positive("sample_interval", sample_interval)?;
    if waveform.len() < 3 {
        return Err(Error::WaveformTooShort {
            periods: 0.0,
            required: MIN_WAVEFORM_PERIODS,
        });
    }
    if waveform.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("waveform", "samples must be finite"));
    }
    let duration = waveform.len() as f64 * sample_interval;
    if let Some(f_low) = crate::signal::lowest_spectral_peak(waveform, sample_interval, 0.01) {
        let periods = duration * f_low;
        if periods < MIN_WAVEFORM_PERIODS {
            return Err(Error::WaveformTooShort {
                periods,
                required: MIN_WAVEFORM_PERIODS,
            });
        }
    }

    let l = cable.total_inductance();
    let r = term.loop_resistance();
    let sign = match term.drive_end {
        End::Alice => 1.0,
        End::Bob => -1.0,
    };
    let h = sample_interval;

    let a = l / h + r / 2.0;
    let b = l / h - r / 2.0;
    let mut current = waveform[0] / r;
    let mut drop = Vec::with_capacity(waveform.len());
    drop.push(sign * (waveform[0] - r * current));
    for k in 1..waveform.len() {
        current = (b * current + 0.5 * (waveform[k] + waveform[k - 1])) / a;
        drop.push(sign * (waveform[k] - r * current));
    }

    let decay = (b / a).abs();
    let settle = if decay < 1e-12 {
        1
    } else {
        ((1e-12f64).ln() / decay.ln()).ceil() as usize + 1
    };
    let n = waveform.len();
    if settle + 2 >= n {
        return Err(Error::WaveformTooShort {
            periods: 0.0,
            required: MIN_WAVEFORM_PERIODS,
        });
    }

    let gain = sign * l / r;
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for k in settle.max(1)..n - 1 {
        let derivative = (waveform[k + 1] - waveform[k - 1]) / (2.0 * h);
        let reference = gain * derivative;
        err2 += (drop[k] - reference).powi(2);
        ref2 += reference.powi(2);
    }
    if ref2 == 0.0 {
        return Ok(err2.sqrt());
    }
    Ok((err2 / ref2).sqrt())
}

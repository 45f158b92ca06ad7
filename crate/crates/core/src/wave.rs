//! Exact solution of the lossless telegrapher equations on a finite line.
//!
//! A uniform lossless line of length `D` relates the voltage and current at
//! its two ends through the chain (ABCD) matrix
//!
//! ```text
//! [V1]   [ cos βD        j·R_w·sin βD ] [V2]
//! [I1] = [ j·sin βD/R_w  cos βD       ] [I2]      β = 2πf / v
//! ```
//!
//! with `I2` flowing out of port 2 into the load. This is the wave-picture
//! ground truth: it contains every standing-wave resonance, and below the
//! lowest one it must collapse onto the lumped models in [`crate::ac`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ac::Termination;
use crate::cable::{CableSpec, DEFAULT_QUASI_STATIC_MARGIN};
use crate::error::{require_positive, Error, Result};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineTwoPort {
    pub frequency: f64,
    /// `βD`, rad.
    pub electrical_length: f64,
    /// Row-major `[[A, B], [C, D]]`.
    pub chain_matrix: [[Complex64; 2]; 2],
}

impl LineTwoPort {
    pub fn a(&self) -> Complex64 {
        self.chain_matrix[0][0]
    }
    pub fn b(&self) -> Complex64 {
        self.chain_matrix[0][1]
    }
    pub fn c(&self) -> Complex64 {
        self.chain_matrix[1][0]
    }
    pub fn d(&self) -> Complex64 {
        self.chain_matrix[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.a() * self.d() - self.b() * self.c()
    }
}

fn require_lossless(cable: &CableSpec) -> Result<()> {
    cable.validate()?;
    if !cable.is_lossless() {
        return Err(Error::LossyCable(cable.resistance_per_meter));
    }
    Ok(())
}

pub fn line_two_port(cable: &CableSpec, frequency: f64) -> Result<LineTwoPort> {
    require_lossless(cable)?;
    require_positive("frequency", frequency)?;
    let bd = 2.0 * PI * frequency * cable.length / cable.wave_velocity();
    let rw = cable.wave_impedance();
    let (s, c) = bd.sin_cos();
    Ok(LineTwoPort {
        frequency,
        electrical_length: bd,
        chain_matrix: [
            [Complex64::new(c, 0.0), J * (rw * s)],
            [J * (s / rw), Complex64::new(c, 0.0)],
        ],
    })
}

/// Input impedance of the line closed by a complex load.
pub fn input_impedance_complex(cable: &CableSpec, load: Complex64, frequency: f64) -> Result<Complex64> {
    let tp = line_two_port(cable, frequency)?;
    Ok((tp.a() * load + tp.b()) / (tp.c() * load + tp.d()))
}

/// Input impedance of the line closed by a resistive load. `f64::INFINITY`
/// is an open end.
pub fn input_impedance(cable: &CableSpec, load: f64, frequency: f64) -> Result<Complex64> {
    if load.is_nan() || load < 0.0 {
        return Err(Error::invalid("load", format!("must be >= 0 or +inf, got {load}")));
    }
    if load.is_infinite() {
        let tp = line_two_port(cable, frequency)?;
        return Ok(tp.a() / tp.c());
    }
    input_impedance_complex(cable, Complex64::new(load, 0.0), frequency)
}

/// Exact `U_far / U_near`, where "near" is the end carrying the generator.
pub fn exact_transfer(cable: &CableSpec, term: &Termination, frequency: f64) -> Result<Complex64> {
    term.validate()?;
    let tp = line_two_port(cable, frequency)?;
    Ok(1.0 / (tp.a() + tp.b() / term.far_resistance()))
}

/// Exact `U_far / U_generator`, including the near-end resistor.
pub fn exact_source_transfer(cable: &CableSpec, term: &Termination, frequency: f64) -> Result<Complex64> {
    term.validate()?;
    let tp = line_two_port(cable, frequency)?;
    let r_far = term.far_resistance();
    let v_near = tp.a() + tp.b() / r_far;
    let i_near = tp.c() + tp.d() / r_far;
    Ok(1.0 / (v_near + i_near * term.near_resistance()))
}

/// Evaluates `u₊(t − x/v) + u₋(t + x/v)`: a right-moving and a left-moving
/// waveform sharing one propagation velocity.
pub fn dalembert_field<P, M>(u_plus: P, u_minus: M, position: f64, time: f64, velocity: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    require_positive("velocity", velocity)?;
    let shift = position / velocity;
    Ok(u_plus(time - shift) + u_minus(time + shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForbiddenBandReport {
    pub f_c: f64,
    pub f_min: f64,
    pub ratio: f64,
    /// Wave eigenmodes at or below `f_c`.
    pub mode_count_below_f_c: u64,
    /// `f_c` within the default quasi-static margin of `f_min`.
    pub quasi_static: bool,
}

pub fn forbidden_band_report(cable: &CableSpec, f_c: f64) -> Result<ForbiddenBandReport> {
    cable.validate()?;
    require_positive("f_c", f_c)?;
    let f_min = cable.min_wave_frequency();
    let ratio = f_c / f_min;
    Ok(ForbiddenBandReport {
        f_c,
        f_min,
        ratio,
        mode_count_below_f_c: ratio.floor() as u64,
        quasi_static: ratio <= DEFAULT_QUASI_STATIC_MARGIN,
    })
}

/// Relative bracket width at which resonance bisection stops.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

/// Resonances of the short-circuited line up to `f_max`: the zeros of
/// `Im Z_in`, found by scanning for sign changes and bisecting each bracket.
/// Sign changes caused by poles of `Im Z_in` are discarded.
pub fn shorted_line_resonances(cable: &CableSpec, f_max: f64) -> Result<Vec<f64>> {
    require_lossless(cable)?;
    require_positive("f_max", f_max)?;
    let f_min = cable.min_wave_frequency();
    let rw = cable.wave_impedance();
    let im = |f: f64| -> Result<f64> { Ok(input_impedance(cable, 0.0, f)?.im) };

    let step = f_min / 16.0;
    let mut roots = Vec::new();
    let mut lo = f_min / 32.0;
    let mut f_lo = im(lo)?;
    while lo < f_max {
        let hi = lo + step;
        let f_hi = im(hi)?;
        if f_lo.signum() != f_hi.signum() {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            while (b - a) > RESONANCE_TOLERANCE * a {
                let mid = 0.5 * (a + b);
                let fm = im(mid)?;
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            if im(root)?.abs() < rw && root <= f_max {
                roots.push(root);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleVelocityFit {
    pub velocity: f64,
    /// Common delay `D / velocity` the fit assigns to both directions.
    pub delay: f64,
    /// Largest mismatch between the fitted and the measured delays.
    pub residual: f64,
}

/// Best single-velocity description of two directional delays over a line of
/// `length`. The minimax optimum puts the common delay at the midpoint, so
/// the residual is half the delay difference and vanishes only for equal
/// delays.
pub fn fit_single_velocity(length: f64, tau_ab: f64, tau_ba: f64) -> Result<SingleVelocityFit> {
    require_positive("length", length)?;
    require_positive("tau_ab", tau_ab)?;
    require_positive("tau_ba", tau_ba)?;
    let delay = 0.5 * (tau_ab + tau_ba);
    Ok(SingleVelocityFit {
        velocity: length / delay,
        delay,
        residual: (tau_ab - delay).abs().max((tau_ba - delay).abs()),
    })
}

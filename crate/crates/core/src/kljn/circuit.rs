//! Trapezoidal time stepping of the KLJN loop over a π-model cable.
//!
//! ```text
//!  u_A ─ R_A ─┬─── R_c + L_c ───┬─ R_B ─ u_B
//!            C/2               C/2
//!             ⏚                 ⏚
//! ```
//!
//! State: Alice-node voltage, Bob-node voltage, cable current (A → B).
//! The trapezoidal rule is the bilinear map of the continuous system, so the
//! stored energy obeys a discrete balance with midpoint powers exactly; the
//! integrator reports how far the computed trajectory departs from it.

use serde::{Deserialize, Serialize};

use crate::cable::CableSpec;
use crate::error::{require_positive, Error, Result};

/// Largest admissible relative energy-balance residual of one record.
pub const ENERGY_RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub sample_rate: f64,
    pub u_alice_end: Vec<f64>,
    pub u_bob_end: Vec<f64>,
    /// Current through the cable from Alice's end toward Bob's end.
    pub loop_current: Vec<f64>,
    /// `|ΔE − Σ h·(P_in − P_loss)| / Σ h·|P_in|` over the record.
    pub energy_residual: f64,
}

impl Traces {
    pub fn len(&self) -> usize {
        self.u_alice_end.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_alice_end.is_empty()
    }

    /// Mean electric energy stored in the two half capacitances.
    pub fn mean_electric_energy(&self, cable: &CableSpec) -> f64 {
        let half = cable.total_capacitance() / 2.0;
        let sum: f64 = self
            .u_alice_end
            .iter()
            .zip(&self.u_bob_end)
            .map(|(a, b)| 0.5 * half * (a * a + b * b))
            .sum();
        sum / self.len() as f64
    }

    pub fn mean_magnetic_energy(&self, cable: &CableSpec) -> f64 {
        let l = cable.total_inductance();
        self.loop_current.iter().map(|i| 0.5 * l * i * i).sum::<f64>() / self.len() as f64
    }
}

type Mat3 = [[f64; 3]; 3];

fn solve3(mut a: Mat3, mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Precomputed one-step map `x⁺ = P·x + Q·(u + u⁺)`.
struct Stepper {
    p: Mat3,
    q: [[f64; 2]; 3],
}

impl Stepper {
    fn new(cable: &CableSpec, r_alice: f64, r_bob: f64, h: f64) -> Result<Self> {
        let c1 = cable.total_capacitance() / 2.0;
        let c2 = c1;
        let l = cable.total_inductance();
        let rc = cable.total_resistance();
        // Current is carried in volts (scaled by R_w) to balance the matrix.
        let s = cable.wave_impedance();
        let a: Mat3 = [
            [-1.0 / (r_alice * c1), 0.0, -1.0 / (s * c1)],
            [0.0, -1.0 / (r_bob * c2), 1.0 / (s * c2)],
            [s / l, -s / l, -rc / l],
        ];
        let b = [[1.0 / (r_alice * c1), 0.0], [0.0, 1.0 / (r_bob * c2)], [0.0, 0.0]];

        let mut lhs = [[0.0; 3]; 3];
        let mut rhs = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                lhs[i][j] = delta - 0.5 * h * a[i][j];
                rhs[i][j] = delta + 0.5 * h * a[i][j];
            }
        }
        let singular = || Error::IntegratorUnstable("singular trapezoidal step matrix".into());
        let mut p = [[0.0; 3]; 3];
        for j in 0..3 {
            let col = solve3(lhs, [rhs[0][j], rhs[1][j], rhs[2][j]]).ok_or_else(singular)?;
            for i in 0..3 {
                p[i][j] = col[i];
            }
        }
        let mut q = [[0.0; 2]; 3];
        for j in 0..2 {
            let col = solve3(lhs, [0.5 * h * b[0][j], 0.5 * h * b[1][j], 0.5 * h * b[2][j]])
                .ok_or_else(singular)?;
            for i in 0..3 {
                q[i][j] = col[i];
            }
        }
        Ok(Stepper { p, q })
    }

    #[inline]
    fn step(&self, x: [f64; 3], u_sum: [f64; 2]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.p[i][0] * x[0]
                + self.p[i][1] * x[1]
                + self.p[i][2] * x[2]
                + self.q[i][0] * u_sum[0]
                + self.q[i][1] * u_sum[1];
        }
        out
    }
}

/// Integrates the loop driven by the two generator records. Both records
/// must have equal length.
///
/// The state starts at the DC operating point of the first input sample.
/// Starting from rest instead would excite the stiff RC modes, which the
/// trapezoidal rule maps close to z = −1 and barely damps.
pub fn simulate_loop(
    cable: &CableSpec,
    r_alice: f64,
    r_bob: f64,
    u_alice: &[f64],
    u_bob: &[f64],
    sample_rate: f64,
) -> Result<Traces> {
    cable.validate()?;
    require_positive("resistance_alice", r_alice)?;
    require_positive("resistance_bob", r_bob)?;
    require_positive("sample_rate", sample_rate)?;
    if u_alice.len() != u_bob.len() {
        return Err(Error::invalid("u_bob", "generator records differ in length"));
    }
    let n = u_alice.len();
    if n == 0 {
        return Err(Error::invalid("u_alice", "empty generator record"));
    }
    let h = 1.0 / sample_rate;
    let stepper = Stepper::new(cable, r_alice, r_bob, h)?;
    let scale = cable.wave_impedance();
    let c_half = cable.total_capacitance() / 2.0;
    let l = cable.total_inductance();
    let rc = cable.total_resistance();
    let energy = |x: &[f64; 3]| {
        let i = x[2] / scale;
        0.5 * c_half * (x[0] * x[0] + x[1] * x[1]) + 0.5 * l * i * i
    };

    let i0 = (u_alice[0] - u_bob[0]) / (r_alice + r_bob + rc);
    let mut x = [u_alice[0] - r_alice * i0, u_bob[0] + r_bob * i0, i0 * scale];

    let mut u_a = Vec::with_capacity(n);
    let mut u_b = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    u_a.push(x[0]);
    u_b.push(x[1]);
    current.push(i0);

    let mut imbalance = 0.0;
    let mut supplied = 0.0;
    let e0 = energy(&x);
    for k in 1..n {
        let next = stepper.step(x, [u_alice[k - 1] + u_alice[k], u_bob[k - 1] + u_bob[k]]);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegratorUnstable(format!("state diverged at sample {k}")));
        }
        let mid = [0.5 * (x[0] + next[0]), 0.5 * (x[1] + next[1]), 0.5 * (x[2] + next[2])];
        let ua = 0.5 * (u_alice[k - 1] + u_alice[k]);
        let ub = 0.5 * (u_bob[k - 1] + u_bob[k]);
        let ia = (ua - mid[0]) / r_alice;
        let ib = (ub - mid[1]) / r_bob;
        let ic = mid[2] / scale;
        let p_in = ua * ia + ub * ib;
        let p_loss = r_alice * ia * ia + r_bob * ib * ib + rc * ic * ic;
        imbalance += h * (p_in - p_loss);
        supplied += h * (ua * ia).abs() + h * (ub * ib).abs();
        x = next;
        u_a.push(x[0]);
        u_b.push(x[1]);
        current.push(x[2] / scale);
    }
    let stored = energy(&x) - e0;
    let energy_residual = if supplied > 0.0 {
        (stored - imbalance).abs() / supplied
    } else {
        0.0
    };
    if !(energy_residual <= ENERGY_RESIDUAL_LIMIT) {
        return Err(Error::IntegratorUnstable(format!(
            "energy balance residual {energy_residual:e} exceeds {ENERGY_RESIDUAL_LIMIT:e}"
        )));
    }
    Ok(Traces {
        sample_rate,
        u_alice_end: u_a,
        u_bob_end: u_b,
        loop_current: current,
        energy_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ac::{solve_phasor, NetworkModel, Termination};
    use crate::signal::tone_phasor;
    use std::f64::consts::PI;

    #[test]
    fn zero_drive_stays_at_rest() {
        let c = CableSpec::reference();
        let z = vec![0.0; 1000];
        let t = simulate_loop(&c, 1e3, 1e4, &z, &z, 1e5).unwrap();
        assert!(t.u_alice_end.iter().chain(&t.u_bob_end).chain(&t.loop_current).all(|&v| v == 0.0));
        assert_eq!(t.energy_residual, 0.0);
    }

    #[test]
    fn sinusoidal_steady_state_matches_phasor_solution() {
        let c = CableSpec::reference();
        let fs = 1e5;
        let f = 1e3;
        let n = 3000;
        let drive: Vec<f64> = (0..n).map(|k| (2.0 * PI * f * k as f64 / fs).cos()).collect();
        let zero = vec![0.0; n];
        for (ra, rb) in [(50.0, 50.0), (10.0, 1e4), (1e3, 10.0)] {
            let t = simulate_loop(&c, ra, rb, &drive, &zero, fs).unwrap();
            let settle = 1000;
            let va = tone_phasor(&t.u_alice_end, 1.0 / fs, f, settle);
            let vb = tone_phasor(&t.u_bob_end, 1.0 / fs, f, settle);
            let sol = solve_phasor(NetworkModel::PI_RLC, &c, &Termination::new(ra, rb), f).unwrap();
            assert!((va - sol.voltage_alice_end).norm() <= 0.01 * sol.voltage_alice_end.norm());
            assert!((vb - sol.voltage_bob_end).norm() <= 0.01 * sol.voltage_bob_end.norm());
            let sim_phase = (vb / va).arg();
            let ref_phase = (sol.voltage_bob_end / sol.voltage_alice_end).arg();
            assert!((sim_phase - ref_phase).abs() <= 0.01 * ref_phase.abs(), "{ra}/{rb}: {sim_phase} vs {ref_phase}");
            assert!(t.energy_residual <= ENERGY_RESIDUAL_LIMIT);
        }
    }

    #[test]
    fn mismatched_records_are_rejected() {
        let c = CableSpec::reference();
        assert!(simulate_loop(&c, 1.0, 1.0, &[0.0; 3], &[0.0; 4], 1e5).is_err());
        assert!(simulate_loop(&c, 0.0, 1.0, &[0.0; 3], &[0.0; 3], 1e5).is_err());
    }

    #[test]
    fn solve3_pivots() {
        let x = solve3([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]], [2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, [3.0, 2.0, 2.0]);
        assert!(solve3([[0.0; 3]; 3], [1.0; 3]).is_none());
    }
}

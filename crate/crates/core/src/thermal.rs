//! Johnson–Nyquist thermal-energy budget of a short cable.
//!
//! Two resistors at temperature `T` close the cable; their band-limited
//! (`0..f_c`) noise sets the voltage across the cable capacitance and the
//! current through the cable inductance. The capacitance sees the one-sided
//! density `4kT·R_par` shaped by the Lorentzian with corner
//! `f_0C = 1/(2π·C_c·R_par)`, and the inductance sees `4kT/(R_A+R_B)` with
//! corner `f_0L = (R_A+R_B)/(2π·L_c)`. Integrating a Lorentzian up to `f_c`
//! gives `f_0·atan(f_c/f_0)` exactly, which is the closed form used here; the
//! linearized value (valid for `f_c ≪ f_0`) is carried separately.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cable::CableSpec;
use crate::constants::{BOLTZMANN, PLANCK, SPEED_OF_LIGHT};
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThermalTermination {
    /// Both ends closed by the wave impedance.
    Matched,
    Resistors { resistance_alice: f64, resistance_bob: f64 },
}

impl ThermalTermination {
    fn resistances(&self, cable: &CableSpec) -> Result<(f64, f64)> {
        match *self {
            ThermalTermination::Matched => {
                let r = cable.wave_impedance();
                Ok((r, r))
            }
            ThermalTermination::Resistors {
                resistance_alice,
                resistance_bob,
            } => Ok((
                positive_or_open("resistance_alice", resistance_alice)?,
                positive_or_open("resistance_bob", resistance_bob)?,
            )),
        }
    }

    /// Parallel combination seen by the cable capacitance.
    pub fn parallel_resistance(&self, cable: &CableSpec) -> Result<f64> {
        let (a, b) = self.resistances(cable)?;
        Ok(match *self {
            ThermalTermination::Matched => a / 2.0,
            _ => {
                if a.is_infinite() {
                    b
                } else if b.is_infinite() {
                    a
                } else {
                    a * b / (a + b)
                }
            }
        })
    }

    /// Series loop resistance seen by the cable inductance.
    pub fn loop_resistance(&self, cable: &CableSpec) -> Result<f64> {
        let (a, b) = self.resistances(cable)?;
        Ok(a + b)
    }
}

/// Positive resistance; `+inf` stands for an open end.
fn positive_or_open(field: &'static str, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::invalid(field, format!("must be > 0, got {r}")));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    /// K.
    pub temperature: f64,
    /// Upper band edge of the resistor noise, Hz.
    pub noise_cutoff: f64,
    pub termination: ThermalTermination,
}

impl ThermalConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("temperature", self.temperature)?;
        require_positive("noise_cutoff", self.noise_cutoff)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMethod {
    ClosedForm,
    NumericIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerFrequencies {
    pub electric: f64,
    pub magnetic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    /// Mean electric energy in the cable capacitance, J.
    pub electric_energy: f64,
    /// Mean magnetic energy in the cable inductance, J.
    pub magnetic_energy: f64,
    /// Equipartition share of one quadratic degree of freedom, `kT/2`.
    pub per_mode_quota: f64,
    pub deficit_electric: f64,
    pub deficit_magnetic: f64,
    pub corner_electric: f64,
    pub corner_magnetic: f64,
    /// Flat-spectrum (`f_c ≪ f_0`) approximations, for comparison only.
    pub linearized_electric: f64,
    pub linearized_magnetic: f64,
    pub method: IntegrationMethod,
}

impl EnergyBudget {
    pub fn total(&self) -> f64 {
        self.electric_energy + self.magnetic_energy
    }
}

pub fn corner_frequencies(cable: &CableSpec, term: &ThermalTermination) -> Result<CornerFrequencies> {
    cable.validate()?;
    let r_par = term.parallel_resistance(cable)?;
    let r_loop = term.loop_resistance(cable)?;
    Ok(CornerFrequencies {
        electric: 1.0 / (2.0 * PI * cable.total_capacitance() * r_par),
        magnetic: r_loop / (2.0 * PI * cable.total_inductance()),
    })
}

pub fn thermal_energies(
    cable: &CableSpec,
    config: &ThermalConfig,
    method: IntegrationMethod,
) -> Result<EnergyBudget> {
    config.validate()?;
    let corners = corner_frequencies(cable, &config.termination)?;
    let r_par = config.termination.parallel_resistance(cable)?;
    let r_loop = config.termination.loop_resistance(cable)?;
    let kt = BOLTZMANN * config.temperature;
    let f_c = config.noise_cutoff;

    let voltage_density = 4.0 * kt * r_par;
    let current_density = 4.0 * kt / r_loop;
    let (mean_square_voltage, mean_square_current) = match method {
        IntegrationMethod::ClosedForm => (
            voltage_density * lorentzian_integral(corners.electric, f_c),
            current_density * lorentzian_integral(corners.magnetic, f_c),
        ),
        IntegrationMethod::NumericIntegral => (
            voltage_density * numeric_lorentzian_integral(corners.electric, f_c)?,
            current_density * numeric_lorentzian_integral(corners.magnetic, f_c)?,
        ),
    };

    let c = cable.total_capacitance();
    let l = cable.total_inductance();
    let quota = kt / 2.0;
    let electric_energy = 0.5 * c * mean_square_voltage;
    let magnetic_energy = 0.5 * l * mean_square_current;
    Ok(EnergyBudget {
        electric_energy,
        magnetic_energy,
        per_mode_quota: quota,
        deficit_electric: electric_energy / quota,
        deficit_magnetic: magnetic_energy / quota,
        corner_electric: corners.electric,
        corner_magnetic: corners.magnetic,
        linearized_electric: 0.5 * c * voltage_density * f_c,
        linearized_magnetic: 0.5 * l * current_density * f_c,
        method,
    })
}

/// `∫₀^{f_c} df / (1 + f²/f₀²) = f₀·atan(f_c/f₀)`.
fn lorentzian_integral(corner: f64, f_c: f64) -> f64 {
    if corner.is_infinite() {
        return f_c;
    }
    corner * (f_c / corner).atan()
}

const QUADRATURE_RELATIVE_TOLERANCE: f64 = 1e-13;
const QUADRATURE_MAX_DEPTH: u32 = 48;

fn numeric_lorentzian_integral(corner: f64, f_c: f64) -> Result<f64> {
    adaptive_simpson(|f| 1.0 / (1.0 + (f / corner).powi(2)), 0.0, f_c, QUADRATURE_RELATIVE_TOLERANCE)
}

/// Adaptive Simpson quadrature to a relative tolerance. Fails rather than
/// returning a truncated estimate when the depth limit is reached.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        worst: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 {
            *worst = worst.max(delta.abs());
            return left + right + delta / 15.0;
        }
        if delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, worst)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, worst)
    }

    if a == b {
        return Ok(0.0);
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Absolute target from a coarse magnitude estimate.
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    let mut worst = 0.0;
    let value = recurse(&f, a, b, fa, fm, fb, whole, rel_tol * scale, QUADRATURE_MAX_DEPTH, &mut worst);
    if !value.is_finite() || worst > 0.0 {
        return Err(Error::QuadratureNotConverged {
            estimated_error: if worst > 0.0 { worst } else { f64::INFINITY },
        });
    }
    Ok(value)
}

/// Energy fractions `(E_e/(kT/2), E_m/(kT/2))`.
pub fn equipartition_deficit(budget: &EnergyBudget) -> (f64, f64) {
    (
        budget.electric_energy / budget.per_mode_quota,
        budget.magnetic_energy / budget.per_mode_quota,
    )
}

/// Ratio of electric to magnetic energy in a quasi-static cable loaded by
/// `load_resistance`, `(C_c/L_c)·R²`, equivalently `(R/R_w)²`.
pub fn instantaneous_energy_ratio(cable: &CableSpec, load_resistance: f64) -> Result<f64> {
    cable.validate()?;
    if load_resistance.is_nan() || load_resistance < 0.0 || load_resistance.is_infinite() {
        return Err(Error::invalid("load_resistance", format!("must be finite and >= 0, got {load_resistance}")));
    }
    let x = load_resistance / cable.wave_impedance();
    Ok(x * x)
}

/// Spectral intensity per polarization, `4πhf³/c² · 1/(e^{hf/kT} − 1)`.
pub fn planck_intensity(frequency: f64, temperature: f64) -> Result<f64> {
    require_positive("frequency", frequency)?;
    require_positive("temperature", temperature)?;
    let x = PLANCK * frequency / (BOLTZMANN * temperature);
    let prefactor = 4.0 * PI * PLANCK * frequency.powi(3) / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    Ok(prefactor / x.exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn matched(f_c: f64, t: f64) -> ThermalConfig {
        ThermalConfig {
            temperature: t,
            noise_cutoff: f_c,
            termination: ThermalTermination::Matched,
        }
    }

    #[test]
    fn matched_corners_equal_two_over_pi_f_min() {
        let c = CableSpec::reference();
        let k = corner_frequencies(&c, &ThermalTermination::Matched).unwrap();
        let want = 2.0 / PI * c.min_wave_frequency();
        assert_relative_eq!(k.electric, want, max_relative = 1e-12);
        assert_relative_eq!(k.magnetic, want, max_relative = 1e-12);
        assert_relative_eq!(want, 4.244e7, max_relative = 1e-3);
    }

    #[test]
    fn doubled_resistors_move_corners_apart() {
        let c = CableSpec::reference();
        let m = corner_frequencies(&c, &ThermalTermination::Matched).unwrap();
        let r = 2.0 * c.wave_impedance();
        let d = corner_frequencies(
            &c,
            &ThermalTermination::Resistors {
                resistance_alice: r,
                resistance_bob: r,
            },
        )
        .unwrap();
        assert_relative_eq!(d.electric, m.electric / 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.magnetic, m.magnetic * 2.0, max_relative = 1e-12);

        let open = corner_frequencies(
            &c,
            &ThermalTermination::Resistors {
                resistance_alice: f64::INFINITY,
                resistance_bob: 50.0,
            },
        )
        .unwrap();
        assert!(open.magnetic.is_infinite());
        assert_relative_eq!(open.electric, 1.0 / (2.0 * PI * 150e-12 * 50.0), max_relative = 1e-12);
    }

    #[test]
    fn matched_budget_at_one_percent_of_f_min() {
        let c = CableSpec::reference();
        let f_c = c.min_wave_frequency() / 100.0;
        let b = thermal_energies(&c, &matched(f_c, 300.0), IntegrationMethod::ClosedForm).unwrap();
        let kt2 = BOLTZMANN * 300.0 / 2.0;
        assert_relative_eq!(b.electric_energy, b.magnetic_energy, max_relative = 1e-12);
        assert_relative_eq!(b.electric_energy, kt2 / 100.0, max_relative = 1e-3);
        assert_relative_eq!(b.electric_energy, 2.07e-23, max_relative = 1e-3);
        assert_relative_eq!(b.linearized_electric, kt2 / 100.0, max_relative = 1e-12);
        let (de, dm) = equipartition_deficit(&b);
        assert_relative_eq!(de, 0.01, max_relative = 1e-3);
        assert_relative_eq!(dm, 0.01, max_relative = 1e-3);
    }

    #[test]
    fn deficit_at_the_corner_is_one_half() {
        let c = CableSpec::reference();
        let f0 = 2.0 / PI * c.min_wave_frequency();
        let b = thermal_energies(&c, &matched(f0, 300.0), IntegrationMethod::ClosedForm).unwrap();
        let (de, dm) = equipartition_deficit(&b);
        assert_relative_eq!(de, 0.5, max_relative = 1e-12);
        assert_relative_eq!(dm, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn deficit_is_temperature_independent() {
        let c = CableSpec::reference();
        let f_c = 5e3;
        let a = thermal_energies(&c, &matched(f_c, 300.0), IntegrationMethod::ClosedForm).unwrap();
        let b = thermal_energies(&c, &matched(f_c, 600.0), IntegrationMethod::ClosedForm).unwrap();
        assert_relative_eq!(a.deficit_electric, b.deficit_electric, max_relative = 1e-12);
        assert_relative_eq!(a.deficit_magnetic, b.deficit_magnetic, max_relative = 1e-12);
    }

    #[test]
    fn empty_band_limit() {
        let c = CableSpec::reference();
        let b = thermal_energies(&c, &matched(1e-9, 300.0), IntegrationMethod::NumericIntegral).unwrap();
        assert!(b.total() < 1e-12 * BOLTZMANN * 300.0 / 2.0);
        assert!(thermal_energies(&c, &matched(0.0, 300.0), IntegrationMethod::ClosedForm).is_err());
        assert!(thermal_energies(&c, &matched(1e3, 0.0), IntegrationMethod::ClosedForm).is_err());
    }

    #[test]
    fn energy_ratio_examples() {
        let c = CableSpec::reference();
        assert_eq!(instantaneous_energy_ratio(&c, c.wave_impedance()).unwrap(), 1.0);
        assert_relative_eq!(instantaneous_energy_ratio(&c, 100.0).unwrap(), 4.0, max_relative = 1e-15);
        assert_eq!(instantaneous_energy_ratio(&c, 0.0).unwrap(), 0.0);
        assert!(instantaneous_energy_ratio(&c, -1.0).is_err());
        // Cross-check against the per-unit-length form.
        let direct = c.total_capacitance() / c.total_inductance() * 100.0f64.powi(2);
        assert_relative_eq!(direct, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn planck_limits() {
        let t = 300.0;
        let kt = BOLTZMANN * t;
        for x in [1e-6, 1e-3, 0.02] {
            let f = x * kt / PLANCK;
            let rj = 4.0 * PI * f * f * kt / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
            let i = planck_intensity(f, t).unwrap();
            assert!((i - rj).abs() / rj <= 0.01, "x = {x}");
        }
        let f = 30.0 * kt / PLANCK;
        let prefactor = 4.0 * PI * PLANCK * f.powi(3) / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
        assert_relative_eq!(planck_intensity(f, t).unwrap(), prefactor * (-30.0f64).exp(), max_relative = 1e-9);

        let low = 1e6;
        assert_relative_eq!(
            planck_intensity(low, 2.0 * t).unwrap(),
            2.0 * planck_intensity(low, t).unwrap(),
            max_relative = 1e-6
        );
        assert!(planck_intensity(0.0, t).is_err());
        assert!(planck_intensity(1.0, 0.0).is_err());
        assert!(planck_intensity(1e20, 1.0).unwrap() == 0.0);
    }

    #[test]
    fn simpson_reports_non_convergence() {
        let err = adaptive_simpson(|x| if x > 0.5 { 1.0 } else { 0.0 }, 0.0, 1.0 / 3.0 * 2.0, 1e-300).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
        let ok = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert_relative_eq!(ok, 9.0, max_relative = 1e-12);
    }

    fn arb_termination() -> impl Strategy<Value = ThermalTermination> {
        prop_oneof![
            Just(ThermalTermination::Matched),
            (0.1f64..1e6, 0.1f64..1e6).prop_map(|(a, b)| ThermalTermination::Resistors {
                resistance_alice: a,
                resistance_bob: b
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn closed_form_matches_quadrature(term in arb_termination(), frac in 1e-5f64..3.0, t in 1.0f64..1e16) {
            let c = CableSpec::reference();
            let cfg = ThermalConfig { temperature: t, noise_cutoff: frac * c.min_wave_frequency(), termination: term };
            let a = thermal_energies(&c, &cfg, IntegrationMethod::ClosedForm).unwrap();
            let b = thermal_energies(&c, &cfg, IntegrationMethod::NumericIntegral).unwrap();
            prop_assert!((a.electric_energy - b.electric_energy).abs() <= 1e-9 * a.electric_energy);
            prop_assert!((a.magnetic_energy - b.magnetic_energy).abs() <= 1e-9 * a.magnetic_energy);
        }

        #[test]
        fn no_wave_energy_bound(term in arb_termination(), frac in 1e-6f64..0.02, t in 1.0f64..1e16) {
            let c = CableSpec::reference();
            let cfg = ThermalConfig { temperature: t, noise_cutoff: frac * c.min_wave_frequency(), termination: term };
            let b = thermal_energies(&c, &cfg, IntegrationMethod::ClosedForm).unwrap();
            prop_assert!(b.total() < b.per_mode_quota);
            prop_assert!(b.electric_energy >= 0.0 && b.magnetic_energy >= 0.0);
        }

        #[test]
        fn matched_symmetry(frac in 1e-6f64..5.0, l in 1e-8f64..1e-5, cu in 1e-12f64..1e-9, d in 0.1f64..100.0) {
            let c = CableSpec::new(l, cu, 0.0, d).unwrap();
            let b = thermal_energies(&c, &matched(frac * c.min_wave_frequency(), 300.0), IntegrationMethod::ClosedForm).unwrap();
            prop_assert!((b.electric_energy - b.magnetic_energy).abs() <= 1e-12 * b.electric_energy);
        }

        #[test]
        fn generalized_corners_converge_to_matched(eps in -1e-6f64..1e-6) {
            let c = CableSpec::reference();
            let r = c.wave_impedance() * (1.0 + eps);
            let g = corner_frequencies(&c, &ThermalTermination::Resistors { resistance_alice: r, resistance_bob: r }).unwrap();
            let m = corner_frequencies(&c, &ThermalTermination::Matched).unwrap();
            prop_assert!((g.electric - m.electric).abs() <= 2e-6 * m.electric);
            prop_assert!((g.magnetic - m.magnetic).abs() <= 2e-6 * m.magnetic);
        }

        #[test]
        fn linearization_quality(frac in 1e-6f64..0.1) {
            let c = CableSpec::reference();
            let f0 = 2.0 / PI * c.min_wave_frequency();
            let b = thermal_energies(&c, &matched(frac * f0, 300.0), IntegrationMethod::ClosedForm).unwrap();
            let quota_form = b.per_mode_quota * frac * f0 / c.min_wave_frequency();
            prop_assert!((b.electric_energy - quota_form).abs() / b.electric_energy <= 0.01);
        }
    }
}

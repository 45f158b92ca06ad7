//! Uniform two-conductor cable described by its per-unit-length parameters.
//!
//! Everything else in the crate derives its characteristic constants from a
//! [`CableSpec`]: the total series inductance, shunt capacitance and series
//! resistance of the whole cable, the wave velocity `1/sqrt(L'C')`, the wave
//! impedance `sqrt(L'/C')`, and the lowest frequency at which a standing wave
//! fits between the two ends, `f_min = v / 2D`. Below `f_min` the cable has no
//! wave eigenstates at all and behaves as a lumped impedance network.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Default fraction of `f_min` below which a frequency counts as quasi-static.
pub const DEFAULT_QUASI_STATIC_MARGIN: f64 = 0.01;

/// Name of the shipped reference cable preset.
pub const REFERENCE_PRESET: &str = "rg58-1m5";

/// Per-unit-length cable parameters plus physical length (strict SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableSpec {
    /// Series inductance per meter, H/m.
    #[serde(rename = "l_per_m")]
    pub inductance_per_meter: f64,
    /// Shunt capacitance per meter, F/m.
    #[serde(rename = "c_per_m")]
    pub capacitance_per_meter: f64,
    /// Series resistance per meter, Ω/m. Zero means lossless.
    #[serde(rename = "r_per_m", default)]
    pub resistance_per_meter: f64,
    /// Physical length, m.
    #[serde(rename = "length_m")]
    pub length: f64,
}

/// Constants derived from a [`CableSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableDerived {
    pub total_inductance: f64,
    pub total_capacitance: f64,
    pub total_resistance: f64,
    pub wave_velocity: f64,
    pub wave_impedance: f64,
    pub min_wave_frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Admissible,
    ForbiddenForKljn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiStaticVerdict {
    pub regime: Regime,
    /// `frequency / f_min`.
    pub ratio: f64,
}

impl QuasiStaticVerdict {
    pub fn is_admissible(&self) -> bool {
        self.regime == Regime::Admissible
    }
}

impl CableSpec {
    pub fn new(
        inductance_per_meter: f64,
        capacitance_per_meter: f64,
        resistance_per_meter: f64,
        length: f64,
    ) -> Result<Self> {
        let spec = CableSpec {
            inductance_per_meter,
            capacitance_per_meter,
            resistance_per_meter,
            length,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 1.5 m coaxial cable, 50 Ω, 150 pF total, 0.0315 Ω total series loss.
    pub fn reference() -> Self {
        CableSpec {
            inductance_per_meter: 250e-9,
            capacitance_per_meter: 100e-12,
            resistance_per_meter: 0.0315 / 1.5,
            length: 1.5,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            REFERENCE_PRESET => Some(Self::reference()),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[REFERENCE_PRESET]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CableSpec = serde_json::from_str(text)
            .map_err(|e| Error::invalid("cable", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("l_per_m", self.inductance_per_meter)?;
        require_positive("c_per_m", self.capacitance_per_meter)?;
        require_non_negative("r_per_m", self.resistance_per_meter)?;
        require_positive("length_m", self.length)?;
        Ok(())
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    /// Same cable with the series loss removed.
    pub fn lossless(mut self) -> Self {
        self.resistance_per_meter = 0.0;
        self
    }

    pub fn is_lossless(&self) -> bool {
        self.resistance_per_meter == 0.0
    }

    pub fn total_inductance(&self) -> f64 {
        self.inductance_per_meter * self.length
    }

    pub fn total_capacitance(&self) -> f64 {
        self.capacitance_per_meter * self.length
    }

    pub fn total_resistance(&self) -> f64 {
        self.resistance_per_meter * self.length
    }

    pub fn wave_velocity(&self) -> f64 {
        1.0 / (self.inductance_per_meter * self.capacitance_per_meter).sqrt()
    }

    pub fn wave_impedance(&self) -> f64 {
        (self.inductance_per_meter / self.capacitance_per_meter).sqrt()
    }

    /// Lowest standing-wave frequency: half a wavelength spans the cable.
    pub fn min_wave_frequency(&self) -> f64 {
        self.wave_velocity() / (2.0 * self.length)
    }

    pub fn derive(&self) -> Result<CableDerived> {
        self.validate()?;
        Ok(CableDerived {
            total_inductance: self.total_inductance(),
            total_capacitance: self.total_capacitance(),
            total_resistance: self.total_resistance(),
            wave_velocity: self.wave_velocity(),
            wave_impedance: self.wave_impedance(),
            min_wave_frequency: self.min_wave_frequency(),
        })
    }

    /// Classifies `frequency` against `margin · f_min`.
    pub fn quasi_static_verdict(&self, frequency: f64, margin: f64) -> Result<QuasiStaticVerdict> {
        self.validate()?;
        require_non_negative("frequency", frequency)?;
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::invalid("margin", format!("must lie in (0, 1), got {margin}")));
        }
        let f_min = self.min_wave_frequency();
        let regime = if frequency <= margin * f_min {
            Regime::Admissible
        } else {
            Regime::ForbiddenForKljn
        };
        Ok(QuasiStaticVerdict {
            regime,
            ratio: frequency / f_min,
        })
    }

    /// Standing-wave eigenfrequencies `n · v / 2D` for `n = 1..=n_max`.
    pub fn mode_frequencies(&self, n_max: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if n_max == 0 {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        let f_min = self.min_wave_frequency();
        Ok((1..=n_max).map(|n| n as f64 * f_min).collect())
    }

    /// First-order series impedance of the whole cable, `R_c + jωL_c`.
    pub fn series_impedance(&self, frequency: f64, include_loss: bool) -> Result<Complex64> {
        require_non_negative("frequency", frequency)?;
        let re = if include_loss {
            self.total_resistance()
        } else {
            0.0
        };
        Ok(Complex64::new(re, 2.0 * PI * frequency * self.total_inductance()))
    }

    /// Frequency where the inductive reactance equals the series loss.
    pub fn loss_crossover_frequency(&self) -> f64 {
        self.total_resistance() / (2.0 * PI * self.total_inductance())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_cable_constants() {
        let d = CableSpec::reference().derive().unwrap();
        assert_relative_eq!(d.wave_velocity, 2.0e8, max_relative = 1e-14);
        assert_relative_eq!(d.wave_impedance, 50.0, max_relative = 1e-14);
        assert_relative_eq!(d.min_wave_frequency, 2.0e8 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(d.total_capacitance, 150e-12, max_relative = 1e-14);
        assert_relative_eq!(d.total_resistance, 0.0315, max_relative = 1e-14);
        assert_relative_eq!(d.total_inductance, 0.375e-6, max_relative = 1e-14);
    }

    #[test]
    fn unit_cable() {
        let d = CableSpec::new(1.0, 1.0, 0.0, 4.0).unwrap().derive().unwrap();
        assert_eq!(d.wave_velocity, 1.0);
        assert_eq!(d.wave_impedance, 1.0);
        assert_eq!(d.min_wave_frequency, 1.0 / 8.0);
    }

    #[test]
    fn doubling_length_halves_f_min() {
        let a = CableSpec::reference();
        let b = a.with_length(2.0 * a.length);
        assert_relative_eq!(b.min_wave_frequency(), a.min_wave_frequency() / 2.0, max_relative = 1e-15);
        assert_eq!(b.wave_impedance(), a.wave_impedance());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CableSpec::new(0.0, 1e-10, 0.0, 1.0).is_err());
        assert!(CableSpec::new(1e-7, -1e-10, 0.0, 1.0).is_err());
        assert!(CableSpec::new(1e-7, 1e-10, -0.1, 1.0).is_err());
        assert!(CableSpec::new(1e-7, 1e-10, 0.0, f64::NAN).is_err());
        assert!(CableSpec::new(f64::INFINITY, 1e-10, 0.0, 1.0).is_err());
        assert!(CableSpec::new(1e-7, 1e-10, 0.0, 1.0).is_ok());
    }

    #[test]
    fn verdicts() {
        let c = CableSpec::reference();
        let v = c.quasi_static_verdict(5e3, 0.01).unwrap();
        assert!(v.is_admissible());
        assert_relative_eq!(v.ratio, 7.5e-5, max_relative = 1e-12);

        let f_min = c.min_wave_frequency();
        for margin in [0.01, 0.5, 0.999] {
            assert!(!c.quasi_static_verdict(f_min, margin).unwrap().is_admissible());
        }
        let zero = c.quasi_static_verdict(0.0, 0.01).unwrap();
        assert!(zero.is_admissible());
        assert_eq!(zero.ratio, 0.0);

        assert!(c.quasi_static_verdict(1.0, 0.0).is_err());
        assert!(c.quasi_static_verdict(1.0, 1.0).is_err());
        assert!(c.quasi_static_verdict(-1.0, 0.5).is_err());
    }

    #[test]
    fn modes() {
        let c = CableSpec::reference();
        let m = c.mode_frequencies(3).unwrap();
        let expected = [66.666_666_666_666_67e6, 133.333_333_333_333_3e6, 200e6];
        for (got, want) in m.iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
        assert_eq!(c.mode_frequencies(1).unwrap(), vec![c.min_wave_frequency()]);
        let long = c.with_length(3.0).mode_frequencies(3).unwrap();
        for (a, b) in long.iter().zip(&m) {
            assert_relative_eq!(*a, b / 2.0, max_relative = 1e-14);
        }
        assert!(c.mode_frequencies(0).is_err());
    }

    #[test]
    fn series_impedance_cases() {
        let c = CableSpec::reference();
        let dc = c.series_impedance(0.0, true).unwrap();
        assert_eq!(dc, Complex64::new(0.0315, 0.0));

        let z = c.series_impedance(c.loss_crossover_frequency(), true).unwrap();
        assert_relative_eq!(z.im, z.re, max_relative = 1e-12);
        assert_relative_eq!(c.loss_crossover_frequency(), 13_369.015, max_relative = 1e-6);

        let lossless = c.series_impedance(1e3, false).unwrap();
        assert_eq!(lossless.re, 0.0);
        assert_relative_eq!(lossless.im, 2.356_194_490e-3, max_relative = 1e-9);
    }

    #[test]
    fn json_keys_and_preset() {
        let c = CableSpec::from_json(
            r#"{"l_per_m": 2.5e-7, "c_per_m": 1e-10, "r_per_m": 0.021, "length_m": 1.5}"#,
        )
        .unwrap();
        assert_relative_eq!(c.total_resistance(), 0.0315, max_relative = 1e-14);
        assert_eq!(CableSpec::preset("rg58-1m5"), Some(CableSpec::reference()));
        assert!(CableSpec::preset("rg59").is_none());
        assert!(CableSpec::from_json(r#"{"l_per_m": 0, "c_per_m": 1e-10, "length_m": 1}"#).is_err());
    }

    proptest! {
        #[test]
        fn f_min_cross_check(l in 1e-8f64..1e-5, c in 1e-12f64..1e-9, d in 0.01f64..1e4) {
            let spec = CableSpec::new(l, c, 0.0, d).unwrap();
            let dd = spec.derive().unwrap();
            let product = dd.min_wave_frequency * 2.0 * d * (l * c).sqrt();
            prop_assert!((product - 1.0).abs() < 1e-13);
            let identity = dd.wave_impedance.powi(2) * dd.total_capacitance / dd.total_inductance;
            prop_assert!((identity - 1.0).abs() < 1e-13);
        }
    }
}

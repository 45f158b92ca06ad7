//! Small signal-processing helpers shared by the time-domain analyses.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Frequency of the lowest local maximum of the Hann-windowed amplitude
/// spectrum reaching `rel_threshold` of the global maximum. The mean is
/// removed first; `None` for a constant record.
pub fn lowest_spectral_peak(samples: &[f64], dt: f64, rel_threshold: f64) -> Option<f64> {
    let n = samples.len();
    if n < 4 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    let peak = mags[1..].iter().cloned().fold(0.0, f64::max);
    let scale = samples.iter().fold(0.0f64, |m, x| m.max(x.abs())) * n as f64;
    if peak <= 1e-12 * scale || peak == 0.0 {
        return None;
    }
    (1..mags.len())
        .find(|&k| {
            let left = mags[k - 1];
            let right = mags.get(k + 1).copied().unwrap_or(0.0);
            mags[k] >= rel_threshold * peak && mags[k] >= left && mags[k] >= right
        })
        .map(|k| k as f64 / (n as f64 * dt))
}

/// Complex amplitude of the tone at `frequency`, by projection over
/// `samples[start..]`. The caller picks a window holding whole periods.
pub fn tone_phasor(samples: &[f64], dt: f64, frequency: f64, start: usize) -> Complex64 {
    let omega = 2.0 * PI * frequency;
    let window = &samples[start..];
    let acc: Complex64 = window
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = (start + i) as f64 * dt;
            x * Complex64::from_polar(1.0, -omega * t)
        })
        .sum();
    acc * (2.0 / window.len() as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn mean_square(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Normalized cross-correlation at lag zero.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Two-sided Welch t-test p-value for equal means.
///
/// Returns `None` when either sample has fewer than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let se2 = va + vb;
    let diff = mean(a) - mean(b);
    if se2 == 0.0 {
        return Some(if diff == 0.0 { 1.0 } else { 0.0 });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn peak_of_pure_tone() {
        let dt = 1e-5;
        let x: Vec<f64> = (0..10_000).map(|i| (2.0 * PI * 1e3 * i as f64 * dt).sin()).collect();
        let f = lowest_spectral_peak(&x, dt, 0.01).unwrap();
        assert_relative_eq!(f, 1e3, max_relative = 1e-9);
        assert!(lowest_spectral_peak(&[3.0; 64], dt, 0.01).is_none());
    }

    #[test]
    fn phasor_recovers_amplitude_and_phase() {
        let dt = 1e-6;
        let x: Vec<f64> = (0..20_000)
            .map(|i| 0.7 * (2.0 * PI * 500.0 * i as f64 * dt + 0.3).cos())
            .collect();
        let p = tone_phasor(&x, dt, 500.0, 0);
        assert_relative_eq!(p.norm(), 0.7, max_relative = 1e-12);
        assert_relative_eq!(p.arg(), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn welch_p_values() {
        let a: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let b = a.clone();
        assert_relative_eq!(welch_t_test(&a, &b).unwrap(), 1.0, max_relative = 1e-12);
        let c: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert!(welch_t_test(&a, &c).unwrap() < 1e-12);
        assert!(welch_t_test(&a[..1], &c).is_none());
    }

    #[test]
    fn welch_matches_reference_value() {
        // scipy.stats.ttest_ind([1,2,3,4,5], [2,4,6,8,10], equal_var=False) -> p = 0.10753119
        let p = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert_relative_eq!(p, 0.107_531_194_930_627, max_relative = 1e-8);
    }
}

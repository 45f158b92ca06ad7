//! Band-limited Johnson–Nyquist noise by spectral synthesis.
//!
//! Every DFT bin in `(0, f_c]` gets the same amplitude and an independent
//! uniform phase; all other bins are empty. The record is therefore periodic
//! over its own length, has an exact band edge, and its mean square equals
//! `4kTR·f_c` to rounding.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::constants::BOLTZMANN;
use crate::error::{require_positive, Error, Result};

/// Upper bound on samples per generated record.
pub const MAX_SAMPLES: usize = 1 << 31;

/// Number of samples covering `duration` at `sample_rate`.
pub fn sample_count(duration: f64, sample_rate: f64) -> Result<usize> {
    require_positive("duration", duration)?;
    require_positive("sample_rate", sample_rate)?;
    let n = (duration * sample_rate).round();
    if !n.is_finite() || n > MAX_SAMPLES as f64 {
        return Err(Error::invalid(
            "duration",
            format!("duration × sample_rate = {n:e} samples exceeds the limit of {MAX_SAMPLES}"),
        ));
    }
    if n < 4.0 {
        return Err(Error::invalid("duration", "record shorter than four samples"));
    }
    Ok(n as usize)
}

/// Seeded generator for one independent substream.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Johnson noise of `resistance` at `temperature`, flat to `cutoff`.
pub fn generate_band_limited_noise(
    resistance: f64,
    temperature: f64,
    cutoff: f64,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = substream(seed, 0);
    johnson_noise(&mut rng, resistance, temperature, cutoff, duration, sample_rate)
}

pub fn johnson_noise<R: Rng>(
    rng: &mut R,
    resistance: f64,
    temperature: f64,
    cutoff: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<Vec<f64>> {
    require_positive("resistance", resistance)?;
    require_positive("temperature", temperature)?;
    let density = 4.0 * BOLTZMANN * temperature * resistance;
    flat_band_noise(rng, density, cutoff, duration, sample_rate)
}

/// Zero-mean record whose one-sided density is `density` (V²/Hz) on
/// `(0, cutoff]`.
pub fn flat_band_noise<R: Rng>(
    rng: &mut R,
    density: f64,
    cutoff: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<Vec<f64>> {
    require_positive("density", density)?;
    require_positive("cutoff", cutoff)?;
    let n = sample_count(duration, sample_rate)?;
    if cutoff >= sample_rate / 2.0 {
        return Err(Error::invalid("cutoff", "must lie below the Nyquist frequency"));
    }
    let bin_width = sample_rate / n as f64;
    let bins = ((cutoff / bin_width) * (1.0 + 1e-12)).floor() as usize;
    if bins == 0 {
        return Err(Error::invalid(
            "duration",
            format!("record of {duration} s cannot resolve a {cutoff} Hz band"),
        ));
    }
    // Σ A²/2 over `bins` bins = density · cutoff
    let amplitude = (2.0 * density * cutoff / bins as f64).sqrt();

    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=bins {
        let phase = rng.random::<f64>() * 2.0 * PI;
        let c = Complex64::from_polar(amplitude / 2.0, phase);
        spectrum[k] = c;
        spectrum[n - k] = c.conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    Ok(spectrum.into_iter().map(|c| c.re).collect())
}

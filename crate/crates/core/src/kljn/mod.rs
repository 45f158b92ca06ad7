//! Time-domain KLJN bit exchange over the π-model cable.
//!
//! Each bit period draws fresh resistor choices for Alice and Bob, drives the
//! loop with their band-limited Johnson noise, and lets each party infer the
//! other's choice from the mean-square voltage at its own end. Eve sees only
//! the loop current and estimates `R_A + R_B` from it.
//!
//! Randomness: one ChaCha8 seed, split into substreams. Stream 0 draws the
//! choices, stream `2b + 1` Alice's noise for bit `b`, stream `2b + 2` Bob's.
//! Bits are therefore independent and run in parallel without affecting the
//! result.

pub mod circuit;
pub mod noise;
pub mod probe;
pub mod trace;

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ac::Direction;
use crate::cable::CableSpec;
use crate::constants::BOLTZMANN;
use crate::error::{require_positive, Error, Result};
use crate::signal::{mean_square, welch_t_test};

pub use circuit::{simulate_loop, Traces, ENERGY_RESIDUAL_LIMIT};
pub use noise::generate_band_limited_noise;
pub use probe::{delay_probe, DelayMeasurement};

/// Relative half-width of the no-decision zone around each threshold.
pub const DECISION_GUARD: f64 = 0.02;

/// Minimum noise oversampling, `sample_rate / noise_cutoff`.
pub const MIN_OVERSAMPLING: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KljnConfig {
    pub r_low: f64,
    pub r_high: f64,
    /// Effective noise temperature of the emulated generators, K.
    pub noise_temperature: f64,
    pub noise_cutoff: f64,
    pub cable: CableSpec,
    pub bit_period: f64,
    pub sample_rate: f64,
    pub rng_seed: u64,
    pub bit_count: usize,
    /// Tone used for the delay probes of [`run_exchange`].
    #[serde(default = "default_probe_frequency")]
    pub probe_frequency: f64,
}

fn default_probe_frequency() -> f64 {
    1e3
}

impl Default for KljnConfig {
    fn default() -> Self {
        let f_c = 5e3;
        KljnConfig {
            r_low: 1e3,
            r_high: 10e3,
            noise_temperature: 1e15,
            noise_cutoff: f_c,
            cable: CableSpec::reference(),
            bit_period: 2000.0 / f_c,
            sample_rate: MIN_OVERSAMPLING * f_c,
            rng_seed: 42,
            bit_count: 1000,
            probe_frequency: default_probe_frequency(),
        }
    }
}

impl KljnConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("r_low", self.r_low)?;
        require_positive("r_high", self.r_high)?;
        if self.r_low == self.r_high {
            return Err(Error::invalid("r_high", "must differ from r_low"));
        }
        require_positive("noise_temperature", self.noise_temperature)?;
        require_positive("noise_cutoff", self.noise_cutoff)?;
        self.cable.validate()?;
        let limit = 0.01 * self.cable.min_wave_frequency();
        if self.noise_cutoff > limit {
            return Err(Error::invalid(
                "noise_cutoff",
                format!("{} Hz exceeds 0.01·f_min = {limit} Hz", self.noise_cutoff),
            ));
        }
        require_positive("sample_rate", self.sample_rate)?;
        if self.sample_rate < MIN_OVERSAMPLING * self.noise_cutoff {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be at least {MIN_OVERSAMPLING}·noise_cutoff"),
            ));
        }
        require_positive("bit_period", self.bit_period)?;
        noise::sample_count(self.bit_period, self.sample_rate)?;
        if self.bit_period * self.noise_cutoff < 1.0 {
            return Err(Error::invalid("bit_period", "shorter than one period of noise_cutoff"));
        }
        if self.bit_count == 0 {
            return Err(Error::invalid("bit_count", "must be at least 1"));
        }
        require_positive("probe_frequency", self.probe_frequency)?;
        Ok(())
    }

    pub fn resistance(&self, choice: Choice) -> f64 {
        match choice {
            Choice::L => self.r_low,
            Choice::H => self.r_high,
        }
    }

    /// Expected mean-square voltage at either end: `4kT·f_c·R_A‖R_B`.
    pub fn expected_mean_square_voltage(&self, alice: Choice, bob: Choice) -> f64 {
        let (ra, rb) = (self.resistance(alice), self.resistance(bob));
        4.0 * BOLTZMANN * self.noise_temperature * self.noise_cutoff * ra * rb / (ra + rb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    L,
    H,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::L => "L",
            Choice::H => "H",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    L,
    H,
    #[serde(rename = "undecided")]
    Undecided,
}

impl Decoded {
    pub fn is(self, choice: Choice) -> bool {
        matches!((self, choice), (Decoded::L, Choice::L) | (Decoded::H, Choice::H))
    }
}

impl From<Choice> for Decoded {
    fn from(c: Choice) -> Self {
        match c {
            Choice::L => Decoded::L,
            Choice::H => Decoded::H,
        }
    }
}

impl fmt::Display for Decoded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decoded::L => "L",
            Decoded::H => "H",
            Decoded::Undecided => "undecided",
        })
    }
}

/// Traces for bit 0 of the configured seed.
pub fn simulate_bit_period(config: &KljnConfig, alice: Choice, bob: Choice) -> Result<Traces> {
    simulate_bit(config, 0, alice, bob)
}

/// Traces for bit `index`, using that bit's noise substreams.
pub fn simulate_bit(config: &KljnConfig, index: u64, alice: Choice, bob: Choice) -> Result<Traces> {
    config.validate()?;
    let (ra, rb) = (config.resistance(alice), config.resistance(bob));
    let noise_for = |stream: u64, r: f64| {
        let mut rng = noise::substream(config.rng_seed, stream);
        noise::johnson_noise(
            &mut rng,
            r,
            config.noise_temperature,
            config.noise_cutoff,
            config.bit_period,
            config.sample_rate,
        )
    };
    let u_alice = noise_for(2 * index + 1, ra)?;
    let u_bob = noise_for(2 * index + 2, rb)?;
    simulate_loop(&config.cable, ra, rb, &u_alice, &u_bob, config.sample_rate)
}

/// Infers the far end's choice from the mean-square voltage at one's own end.
///
/// Thresholds sit at the geometric means of adjacent expected levels. A
/// reading within [`DECISION_GUARD`] of a threshold, or one that only the
/// opposite own choice could produce, is undecided.
pub fn decode_bit(
    own_choice: Choice,
    own_resistance: f64,
    config: &KljnConfig,
    measured_mean_square_voltage: f64,
) -> Result<Decoded> {
    if own_resistance != config.resistance(own_choice) {
        return Err(Error::invalid(
            "own_resistance",
            format!("{own_resistance} Ω does not match choice {own_choice}"),
        ));
    }
    let msv = measured_mean_square_voltage;
    if !msv.is_finite() || msv < 0.0 {
        return Err(Error::invalid("mean_square_voltage", format!("got {msv}")));
    }
    let ll = config.expected_mean_square_voltage(Choice::L, Choice::L);
    let mixed = config.expected_mean_square_voltage(Choice::L, Choice::H);
    let hh = config.expected_mean_square_voltage(Choice::H, Choice::H);
    let lower = (ll * mixed).sqrt();
    let upper = (mixed * hh).sqrt();
    let near = |threshold: f64| (msv / threshold - 1.0).abs() < DECISION_GUARD;
    if near(lower) || near(upper) {
        return Ok(Decoded::Undecided);
    }
    let level = if msv < lower {
        (Choice::L, Choice::L)
    } else if msv < upper {
        (Choice::L, Choice::H)
    } else {
        (Choice::H, Choice::H)
    };
    Ok(match (own_choice, level) {
        (Choice::L, (Choice::L, Choice::L)) => Decoded::L,
        (Choice::L, (Choice::L, Choice::H)) => Decoded::H,
        (Choice::H, (Choice::L, Choice::H)) => Decoded::L,
        (Choice::H, (Choice::H, Choice::H)) => Decoded::H,
        _ => Decoded::Undecided,
    })
}

/// Eve's estimate of `R_A + R_B` from the loop current:
/// `⟨I²⟩ = 4kT·f_c / (R_A + R_B)`.
pub fn eve_loop_statistic(config: &KljnConfig, traces: &Traces) -> Result<f64> {
    let msc = mean_square(&traces.loop_current);
    if !(msc > 0.0) {
        return Err(Error::Degenerate("loop current is identically zero".into()));
    }
    Ok(4.0 * BOLTZMANN * config.noise_temperature * config.noise_cutoff / msc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitExchange {
    pub index: u64,
    pub alice_choice: Choice,
    pub bob_choice: Choice,
    pub alice_decoded_bob: Decoded,
    pub bob_decoded_alice: Decoded,
    pub secure: bool,
    /// At Alice's end.
    pub mean_square_voltage: f64,
    pub mean_square_voltage_bob: f64,
    pub mean_square_current: f64,
    pub eve_loop_resistance: f64,
    pub energy_residual: f64,
}

impl BitExchange {
    pub fn decoded_ok(&self) -> bool {
        self.alice_decoded_bob.is(self.bob_choice) && self.bob_decoded_alice.is(self.alice_choice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub exchanges: Vec<BitExchange>,
    pub legit_error_rate: f64,
    pub secure_fraction: f64,
    /// Welch test of Eve's statistic, HL bits vs LH bits. `None` when either
    /// class has fewer than two bits.
    pub eve_hl_lh_pvalue: Option<f64>,
    pub eve_ll_hh_pvalue: Option<f64>,
    /// Probes in the HL state, `R_A = r_low`, `R_B = r_high`.
    pub delay_toward_bob: f64,
    pub delay_toward_alice: f64,
    pub probes: [DelayMeasurement; 2],
    pub max_energy_residual: f64,
}

fn bit_exchange(config: &KljnConfig, index: u64, alice: Choice, bob: Choice) -> Result<BitExchange> {
    let traces = simulate_bit(config, index, alice, bob)?;
    let msv_a = mean_square(&traces.u_alice_end);
    let msv_b = mean_square(&traces.u_bob_end);
    Ok(BitExchange {
        index,
        alice_choice: alice,
        bob_choice: bob,
        alice_decoded_bob: decode_bit(alice, config.resistance(alice), config, msv_a)?,
        bob_decoded_alice: decode_bit(bob, config.resistance(bob), config, msv_b)?,
        secure: alice != bob,
        mean_square_voltage: msv_a,
        mean_square_voltage_bob: msv_b,
        mean_square_current: mean_square(&traces.loop_current),
        eve_loop_resistance: eve_loop_statistic(config, &traces)?,
        energy_residual: traces.energy_residual,
    })
}

/// Fair-coin choices for every bit, from substream 0.
pub fn draw_choices(config: &KljnConfig) -> Vec<(Choice, Choice)> {
    let mut rng = noise::substream(config.rng_seed, 0);
    let mut coin = || if rng.random::<bool>() { Choice::H } else { Choice::L };
    (0..config.bit_count).map(|_| (coin(), coin())).collect()
}

pub fn run_exchange(config: &KljnConfig) -> Result<ExchangeReport> {
    config.validate()?;
    let choices = draw_choices(config);
    let exchanges: Vec<BitExchange> = choices
        .par_iter()
        .enumerate()
        .map(|(i, &(a, b))| bit_exchange(config, i as u64, a, b))
        .collect::<Result<_>>()?;

    let n = exchanges.len() as f64;
    let errors = exchanges.iter().filter(|x| !x.decoded_ok()).count();
    let secure = exchanges.iter().filter(|x| x.secure).count();
    let eve = |a: Choice, b: Choice| -> Vec<f64> {
        exchanges
            .iter()
            .filter(|x| x.alice_choice == a && x.bob_choice == b)
            .map(|x| x.eve_loop_resistance)
            .collect()
    };
    let eve_hl_lh_pvalue = welch_t_test(&eve(Choice::H, Choice::L), &eve(Choice::L, Choice::H));
    let eve_ll_hh_pvalue = welch_t_test(&eve(Choice::L, Choice::L), &eve(Choice::H, Choice::H));
    let max_energy_residual = exchanges.iter().map(|x| x.energy_residual).fold(0.0, f64::max);

    let (ra, rb) = (config.r_low, config.r_high);
    let toward_bob = delay_probe(config, ra, rb, Direction::TowardBob, config.probe_frequency)?;
    let toward_alice = delay_probe(config, ra, rb, Direction::TowardAlice, config.probe_frequency)?;
    log::info!(
        "{} bits: {secure} secure, {errors} decoding errors, HL/LH p = {eve_hl_lh_pvalue:?}",
        exchanges.len()
    );
    Ok(ExchangeReport {
        legit_error_rate: errors as f64 / n,
        secure_fraction: secure as f64 / n,
        eve_hl_lh_pvalue,
        eve_ll_hh_pvalue,
        delay_toward_bob: toward_bob.delay,
        delay_toward_alice: toward_alice.delay,
        probes: [toward_bob, toward_alice],
        max_energy_residual,
        exchanges,
    })
}

/// Column contract of [`write_exchanges_csv`].
pub const EXCHANGE_CSV_HEADER: &str = "bit,alice,bob,secure,msv_v2,msc_a2,decoded_ok";

pub fn write_exchanges_csv<W: Write>(mut out: W, exchanges: &[BitExchange]) -> io::Result<()> {
    writeln!(out, "{EXCHANGE_CSV_HEADER}")?;
    for x in exchanges {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            x.index,
            x.alice_choice,
            x.bob_choice,
            x.secure,
            x.mean_square_voltage,
            x.mean_square_current,
            x.decoded_ok()
        )?;
    }
    out.flush()
}

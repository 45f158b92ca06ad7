//! `kljn`: command-line access to the cable, wave, thermal and KLJN
//! analyses. Exit codes: 0 success, 2 invalid input, 3 numeric failure,
//! 1 i/o error.

mod config;
mod eng;
mod error;
mod job;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use kljn_core::kljn::KljnConfig;
use kljn_core::thermal::{IntegrationMethod, ThermalConfig, ThermalTermination};
use kljn_core::{CableSpec, Direction, End};

use error::CliError;
use job::{Format, Job};

fn eng(s: &str) -> Result<f64, String> {
    eng::parse_eng(s)
}

#[derive(Parser, Debug)]
#[command(name = "kljn", version, about = "Quasi-static cable analysis and KLJN key-exchange simulation")]
struct Cli {
    /// Write outputs and manifest.json here instead of stdout/stderr.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Output format; tables default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// RNG seed for commands that use randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived constants of a cable.
    CableInfo(CableInfoArgs),
    /// Wave modes below a noise bandwidth (the forbidden band).
    WaveCheck(WaveCheckArgs),
    /// |U_AB| and its phase over a log frequency grid.
    AcSweep(AcSweepArgs),
    /// Equivalent phase velocity for R ∈ {10, 20, 50, 1k, 10k} Ω × f ∈ {1, 5} kHz.
    PhaseVelocityTable(TableArgs),
    /// Johnson–Nyquist electric and magnetic energy of the cable.
    ThermalBudget(ThermalArgs),
    /// Simulate a KLJN bit exchange.
    KljnRun(KljnRunArgs),
    /// Measure the directional delay with a single-tone probe.
    DelayProbe(DelayProbeArgs),
    /// Re-run the job recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct CableArgs {
    /// Named cable preset (default: rg58-1m5).
    #[arg(long, conflicts_with = "cable_file")]
    preset: Option<String>,
    /// JSON cable: a preset name or {l_per_m, c_per_m, r_per_m, length_m}.
    #[arg(long, value_name = "FILE")]
    cable_file: Option<PathBuf>,
    /// Inductance per meter, H/m.
    #[arg(long, value_parser = eng)]
    l_per_m: Option<f64>,
    /// Capacitance per meter, F/m.
    #[arg(long, value_parser = eng)]
    c_per_m: Option<f64>,
    /// Resistance per meter, Ω/m.
    #[arg(long, value_parser = eng)]
    r_per_m: Option<f64>,
    /// Cable length, m.
    #[arg(long, value_parser = eng)]
    length: Option<f64>,
}

impl CableArgs {
    fn resolve(&self) -> Result<CableSpec, CliError> {
        let mut cable = match (&self.preset, &self.cable_file) {
            (_, Some(path)) => config::cable_from_json(&read(path)?)?,
            (Some(name), None) => config::preset(name)?,
            (None, None) => CableSpec::reference(),
        };
        if let Some(v) = self.l_per_m {
            cable.inductance_per_meter = v;
        }
        if let Some(v) = self.c_per_m {
            cable.capacitance_per_meter = v;
        }
        if let Some(v) = self.r_per_m {
            cable.resistance_per_meter = v;
        }
        if let Some(v) = self.length {
            cable.length = v;
        }
        cable.validate()?;
        Ok(cable)
    }
}

#[derive(Args, Debug)]
#[command(group(
    ArgGroup::new("source")
        .required(true)
        .multiple(true)
        .args(["preset", "cable_file", "l_per_m", "c_per_m", "r_per_m", "length"])
))]
struct CableInfoArgs {
    #[command(flatten)]
    cable: CableArgs,
}

#[derive(Args, Debug)]
struct WaveCheckArgs {
    #[command(flatten)]
    cable: CableArgs,
    /// Noise bandwidth, Hz.
    #[arg(long, value_parser = eng)]
    fc: f64,
}

#[derive(Args, Debug)]
struct AcSweepArgs {
    #[command(flatten)]
    cable: CableArgs,
    /// lossless | lossy | pi | ladder:N
    #[arg(long, default_value = "lossless")]
    model: String,
    /// Alice's resistor, Ω (default: the wave impedance).
    #[arg(long, value_parser = eng)]
    ra: Option<f64>,
    /// Bob's resistor, Ω (default: the wave impedance).
    #[arg(long, value_parser = eng)]
    rb: Option<f64>,
    /// End carrying the generator.
    #[arg(long, value_enum, default_value = "alice")]
    drive: Party,
    /// Generator amplitude, V.
    #[arg(long, value_parser = eng, default_value = "1")]
    amplitude: f64,
    #[arg(long, value_parser = eng, default_value = "100")]
    f_start: f64,
    #[arg(long, value_parser = eng, default_value = "10M")]
    f_stop: f64,
    #[arg(long, default_value_t = 20)]
    points_per_decade: usize,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    cable: CableArgs,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("termination").required(true).multiple(true).args(["matched", "ra", "rb"])))]
struct ThermalArgs {
    #[command(flatten)]
    cable: CableArgs,
    /// Both ends closed by the wave impedance.
    #[arg(long, conflicts_with_all = ["ra", "rb"])]
    matched: bool,
    #[arg(long, value_parser = eng, requires = "rb")]
    ra: Option<f64>,
    #[arg(long, value_parser = eng, requires = "ra")]
    rb: Option<f64>,
    /// Temperature, K.
    #[arg(long = "T", visible_alias = "temperature", value_parser = eng, default_value = "300")]
    temperature: f64,
    /// Noise bandwidth, Hz.
    #[arg(long, value_parser = eng)]
    fc: f64,
    #[arg(long, value_enum, default_value = "closed-form")]
    method: Method,
}

#[derive(Args, Debug)]
struct KljnRunArgs {
    /// JSON KLJN configuration; omitted fields take defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override bit_count.
    #[arg(long)]
    bits: Option<usize>,
    /// Also write exchanges.csv.
    #[arg(long)]
    per_bit_csv: bool,
    /// Dump the raw traces of this bit (repeatable).
    #[arg(long = "dump-trace", value_name = "BIT")]
    dump_trace: Vec<u64>,
}

#[derive(Args, Debug)]
struct DelayProbeArgs {
    /// JSON KLJN configuration supplying cable and sample rate.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// End the tone travels toward.
    #[arg(long, value_enum)]
    direction: Party,
    /// Alice's resistor, Ω (default: r_low).
    #[arg(long, value_parser = eng)]
    ra: Option<f64>,
    /// Bob's resistor, Ω (default: r_high).
    #[arg(long, value_parser = eng)]
    rb: Option<f64>,
    #[arg(long, value_parser = eng, default_value = "1k")]
    probe_freq: f64,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Party {
    #[value(alias = "toward-alice")]
    Alice,
    #[value(alias = "toward-bob")]
    Bob,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    ClosedForm,
    Numeric,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{field}: must be finite, got {v}")))
    }
}

fn kljn_config(path: Option<&Path>, seed: Option<u64>) -> Result<KljnConfig, CliError> {
    let mut config = match path {
        Some(p) => config::kljn_config_from_json(&read(p)?)?,
        None => KljnConfig::default(),
    };
    if let Some(s) = seed {
        config.rng_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn resolve(command: &Command, seed: Option<u64>) -> Result<Job, CliError> {
    Ok(match command {
        Command::CableInfo(a) => Job::CableInfo { cable: a.cable.resolve()? },
        Command::WaveCheck(a) => Job::WaveCheck {
            cable: a.cable.resolve()?,
            f_c: finite("fc", a.fc)?,
        },
        Command::AcSweep(a) => {
            let cable = a.cable.resolve()?;
            let model: kljn_core::NetworkModel = a.model.parse()?;
            let rw = cable.wave_impedance();
            Job::AcSweep {
                cable,
                model: model.to_string(),
                resistance_alice: finite("ra", a.ra.unwrap_or(rw))?,
                resistance_bob: finite("rb", a.rb.unwrap_or(rw))?,
                drive_end: match a.drive {
                    Party::Alice => End::Alice,
                    Party::Bob => End::Bob,
                },
                drive_amplitude: finite("amplitude", a.amplitude)?,
                f_start: a.f_start,
                f_stop: a.f_stop,
                points_per_decade: a.points_per_decade,
            }
        }
        Command::PhaseVelocityTable(a) => Job::PhaseVelocityTable { cable: a.cable.resolve()? },
        Command::ThermalBudget(a) => {
            let termination = match (a.ra, a.rb) {
                (Some(ra), Some(rb)) => ThermalTermination::Resistors {
                    // JSON has no infinity, and the manifest must round-trip.
                    resistance_alice: finite("ra", ra)?,
                    resistance_bob: finite("rb", rb)?,
                },
                _ => ThermalTermination::Matched,
            };
            let config = ThermalConfig {
                temperature: finite("T", a.temperature)?,
                noise_cutoff: finite("fc", a.fc)?,
                termination,
            };
            config.validate()?;
            Job::ThermalBudget {
                cable: a.cable.resolve()?,
                config,
                method: match a.method {
                    Method::ClosedForm => IntegrationMethod::ClosedForm,
                    Method::Numeric => IntegrationMethod::NumericIntegral,
                },
            }
        }
        Command::KljnRun(a) => {
            let mut config = kljn_config(a.config.as_deref(), seed)?;
            if let Some(bits) = a.bits {
                config.bit_count = bits;
                config.validate()?;
            }
            Job::KljnRun {
                config,
                per_bit_csv: a.per_bit_csv,
                trace_bits: a.dump_trace.clone(),
            }
        }
        Command::DelayProbe(a) => {
            let config = kljn_config(a.config.as_deref(), seed)?;
            Job::DelayProbe {
                resistance_alice: finite("ra", a.ra.unwrap_or(config.r_low))?,
                resistance_bob: finite("rb", a.rb.unwrap_or(config.r_high))?,
                direction: match a.direction {
                    Party::Alice => Direction::TowardAlice,
                    Party::Bob => Direction::TowardBob,
                },
                probe_frequency: finite("probe-freq", a.probe_freq)?,
                config,
            }
        }
        Command::Replay(_) => return Err(CliError::Validation("replay carries its own job".into())),
    })
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (job, format) = match &cli.command {
        Command::Replay(a) => {
            let manifest = output::RunManifest::load(&a.manifest)?;
            if manifest.version != env!("CARGO_PKG_VERSION") {
                log::warn!(
                    "manifest written by version {}, replaying with {}",
                    manifest.version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            (manifest.parameters, cli.format.unwrap_or(manifest.format))
        }
        command => {
            let job = resolve(command, cli.seed)?;
            let format = cli.format.unwrap_or_else(|| job.default_format());
            (job, format)
        }
    };
    log::debug!("running {}", job.name());
    let artifacts = job.run(format)?;
    output::emit(&job, format, artifacts, cli.output_dir.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kljn: {e}");
            e.exit_code()
        }
    }
}

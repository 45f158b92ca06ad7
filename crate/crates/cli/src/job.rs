//! Fully resolved commands. A manifest stores the [`Job`]; replaying it
//! runs the identical computation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use kljn_core::ac::{ac_sweep, phase_velocity_table, TABLE_FREQUENCIES, TABLE_RESISTANCES};
use kljn_core::kljn::trace::write_traces;
use kljn_core::kljn::{delay_probe, run_exchange, simulate_bit, write_exchanges_csv, KljnConfig};
use kljn_core::thermal::{thermal_energies, IntegrationMethod, ThermalConfig};
use kljn_core::wave::forbidden_band_report;
use kljn_core::{CableSpec, Direction, End, NetworkModel, Termination};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    CableInfo {
        cable: CableSpec,
    },
    WaveCheck {
        cable: CableSpec,
        f_c: f64,
    },
    AcSweep {
        cable: CableSpec,
        model: String,
        resistance_alice: f64,
        resistance_bob: f64,
        drive_end: End,
        drive_amplitude: f64,
        f_start: f64,
        f_stop: f64,
        points_per_decade: usize,
    },
    PhaseVelocityTable {
        cable: CableSpec,
    },
    ThermalBudget {
        cable: CableSpec,
        config: ThermalConfig,
        method: IntegrationMethod,
    },
    KljnRun {
        config: KljnConfig,
        per_bit_csv: bool,
        trace_bits: Vec<u64>,
    },
    DelayProbe {
        config: KljnConfig,
        resistance_alice: f64,
        resistance_bob: f64,
        direction: Direction,
        probe_frequency: f64,
    },
}

/// One output file. The primary artifact goes to stdout when no output
/// directory is given.
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
    pub primary: bool,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::CableInfo { .. } => "cable-info",
            Job::WaveCheck { .. } => "wave-check",
            Job::AcSweep { .. } => "ac-sweep",
            Job::PhaseVelocityTable { .. } => "phase-velocity-table",
            Job::ThermalBudget { .. } => "thermal-budget",
            Job::KljnRun { .. } => "kljn-run",
            Job::DelayProbe { .. } => "delay-probe",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Job::AcSweep { .. } | Job::PhaseVelocityTable { .. } => Format::Csv,
            _ => Format::Json,
        }
    }

    pub fn rng_seed(&self) -> Option<u64> {
        match self {
            Job::KljnRun { config, .. } | Job::DelayProbe { config, .. } => Some(config.rng_seed),
            _ => None,
        }
    }

    pub fn run(&self, format: Format) -> Result<Vec<Artifact>, CliError> {
        let stem = self.name();
        match self {
            Job::CableInfo { cable } => single(stem, format, &cable.derive()?),
            Job::WaveCheck { cable, f_c } => single(stem, format, &forbidden_band_report(cable, *f_c)?),
            Job::AcSweep {
                cable,
                model,
                resistance_alice,
                resistance_bob,
                drive_end,
                drive_amplitude,
                f_start,
                f_stop,
                points_per_decade,
            } => {
                let model: NetworkModel = model.parse()?;
                let term = Termination::new(*resistance_alice, *resistance_bob)
                    .driven_from(*drive_end)
                    .with_amplitude(*drive_amplitude);
                let rows = ac_sweep(model, cable, &term, *f_start, *f_stop, *points_per_decade)?;
                table(stem, format, &rows)
            }
            Job::PhaseVelocityTable { cable } => {
                let cells = phase_velocity_table(cable, &TABLE_RESISTANCES, &TABLE_FREQUENCIES)?;
                table(stem, format, &cells)
            }
            Job::ThermalBudget { cable, config, method } => {
                single(stem, format, &thermal_energies(cable, config, *method)?)
            }
            Job::DelayProbe {
                config,
                resistance_alice,
                resistance_bob,
                direction,
                probe_frequency,
            } => single(
                stem,
                format,
                &delay_probe(config, *resistance_alice, *resistance_bob, *direction, *probe_frequency)?,
            ),
            Job::KljnRun {
                config,
                per_bit_csv,
                trace_bits,
            } => kljn_run(config, *per_bit_csv, trace_bits, format),
        }
    }
}

fn kljn_run(config: &KljnConfig, per_bit_csv: bool, trace_bits: &[u64], format: Format) -> Result<Vec<Artifact>, CliError> {
    for &bit in trace_bits {
        if bit >= config.bit_count as u64 {
            return Err(CliError::Validation(format!(
                "dump-trace: bit {bit} outside 0..{}",
                config.bit_count
            )));
        }
    }
    let report = run_exchange(config)?;
    let mut out = vec![Artifact {
        file_name: "report.json".into(),
        bytes: json_bytes(&report)?,
        primary: format == Format::Json,
    }];
    if per_bit_csv || format == Format::Csv {
        let mut bytes = Vec::new();
        write_exchanges_csv(&mut bytes, &report.exchanges)?;
        out.push(Artifact {
            file_name: "exchanges.csv".into(),
            bytes,
            primary: format == Format::Csv,
        });
    }
    for &bit in trace_bits {
        let x = &report.exchanges[bit as usize];
        let traces = simulate_bit(config, bit, x.alice_choice, x.bob_choice)?;
        let mut bytes = Vec::new();
        write_traces(
            &mut bytes,
            traces.sample_rate,
            &[&traces.u_alice_end, &traces.u_bob_end, &traces.loop_current],
        )?;
        out.push(Artifact {
            file_name: format!("trace-bit{bit}.bin"),
            bytes,
            primary: false,
        });
    }
    Ok(out)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// A single record: JSON object, or `field,value` rows with nested keys
/// joined by dots.
fn single<T: Serialize>(stem: &str, format: Format, value: &T) -> Result<Vec<Artifact>, CliError> {
    let bytes = match format {
        Format::Json => json_bytes(value)?,
        Format::Csv => {
            let v = serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
            let mut rows = Vec::new();
            flatten("", &v, &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["field", "value"]).map_err(csv_error)?;
            for (k, v) in rows {
                w.write_record([k, v]).map_err(csv_error)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))?
        }
    };
    Ok(vec![artifact(stem, format, bytes)])
}

fn table<T: Serialize>(stem: &str, format: Format, rows: &[T]) -> Result<Vec<Artifact>, CliError> {
    let bytes = match format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(csv_error)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))?
        }
    };
    Ok(vec![artifact(stem, format, bytes)])
}

fn artifact(stem: &str, format: Format, bytes: Vec<u8>) -> Artifact {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    Artifact {
        file_name: format!("{stem}.{ext}"),
        bytes,
        primary: true,
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), child, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

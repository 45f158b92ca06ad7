//! JSON inputs with engineering-suffix strings.
//!
//! Numeric fields may be given as numbers or as strings such as `"4.7k"`.
//! A cable may be a preset name or an object of per-meter parameters.
//! Omitted KLJN fields take their defaults.

use serde_json::{Map, Value};

use kljn_core::kljn::KljnConfig;
use kljn_core::CableSpec;

use crate::eng::parse_eng;
use crate::error::CliError;

const CABLE_FIELDS: [&str; 4] = ["l_per_m", "c_per_m", "r_per_m", "length_m"];
const KLJN_REAL_FIELDS: [&str; 7] = [
    "r_low",
    "r_high",
    "noise_temperature",
    "noise_cutoff",
    "bit_period",
    "sample_rate",
    "probe_frequency",
];
const KLJN_INTEGER_FIELDS: [&str; 2] = ["rng_seed", "bit_count"];

fn real(path: &str, v: &Value) -> Result<Value, CliError> {
    match v {
        Value::Number(_) => Ok(v.clone()),
        Value::String(s) => {
            let x = parse_eng(s).map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .ok_or_else(|| CliError::Validation(format!("{path}: {s:?} is not finite")))
        }
        other => Err(CliError::Validation(format!("{path}: expected a number, got {other}"))),
    }
}

fn integer(path: &str, v: &Value) -> Result<Value, CliError> {
    if v.is_u64() {
        return Ok(v.clone());
    }
    let x = match real(path, v)? {
        Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
        _ => f64::NAN,
    };
    if x.fract() != 0.0 || x < 0.0 || x > u64::MAX as f64 {
        return Err(CliError::Validation(format!("{path}: expected a non-negative integer, got {v}")));
    }
    Ok(Value::from(x as u64))
}

fn object<'a>(path: &str, v: &'a Value) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object()
        .ok_or_else(|| CliError::Validation(format!("{path}: expected a JSON object")))
}

pub fn cable_from_value(path: &str, v: &Value) -> Result<CableSpec, CliError> {
    if let Value::String(name) = v {
        return preset(name);
    }
    let mut out = Map::new();
    for (key, val) in object(path, v)? {
        if !CABLE_FIELDS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!(
                "{path}.{key}: unknown field, expected one of {}",
                CABLE_FIELDS.join(", ")
            )));
        }
        out.insert(key.clone(), real(&format!("{path}.{key}"), val)?);
    }
    let spec: CableSpec = serde_json::from_value(Value::Object(out))
        .map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

pub fn preset(name: &str) -> Result<CableSpec, CliError> {
    CableSpec::preset(name).ok_or_else(|| {
        CliError::Validation(format!(
            "cable: unknown preset {name:?}, available: {}",
            CableSpec::preset_names().join(", ")
        ))
    })
}

pub fn cable_from_json(text: &str) -> Result<CableSpec, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("cable file: {e}")))?;
    cable_from_value("cable", &v)
}

pub fn kljn_config_from_json(text: &str) -> Result<KljnConfig, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    let mut merged = serde_json::to_value(KljnConfig::default())
        .map_err(|e| CliError::Validation(format!("config: {e}")))?;
    let target = merged
        .as_object_mut()
        .ok_or_else(|| CliError::Validation("config: default is not an object".into()))?;
    for (key, val) in object("config", &v)? {
        let k = key.as_str();
        let resolved = if KLJN_REAL_FIELDS.contains(&k) {
            real(key, val)?
        } else if KLJN_INTEGER_FIELDS.contains(&k) {
            integer(key, val)?
        } else if k == "cable" {
            serde_json::to_value(cable_from_value("cable", val)?)
                .map_err(|e| CliError::Validation(format!("cable: {e}")))?
        } else {
            return Err(CliError::Validation(format!("{key}: unknown field")));
        };
        target.insert(key.clone(), resolved);
    }
    let config: KljnConfig =
        serde_json::from_value(merged).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_strings_and_presets() {
        let cfg = kljn_config_from_json(
            r#"{"r_low": "1k", "r_high": "10k", "noise_cutoff": "5k", "cable": "rg58-1m5", "bit_count": "2k"}"#,
        )
        .unwrap();
        assert_eq!(cfg.r_low, 1e3);
        assert_eq!(cfg.bit_count, 2000);
        assert_eq!(cfg.cable, CableSpec::reference());
        let custom = kljn_config_from_json(
            r#"{"cable": {"l_per_m": "250n", "c_per_m": "100p", "length_m": 3}}"#,
        )
        .unwrap();
        assert_eq!(custom.cable.length, 3.0);
        assert_eq!(custom.cable.resistance_per_meter, 0.0);
    }

    #[test]
    fn field_level_diagnostics() {
        let cases = [
            (r#"{"r_lo": 1}"#, "r_lo"),
            (r#"{"r_low": "abc"}"#, "r_low"),
            (r#"{"bit_count": 1.5}"#, "bit_count"),
            (r#"{"cable": "rg-nothing"}"#, "cable"),
            (r#"{"cable": {"l_per_m": 1, "c_per_m": 1, "length_m": 1, "colour": 2}}"#, "cable.colour"),
            (r#"{"r_high": "1k"}"#, "r_high"),
            (r#"[1, 2]"#, "config"),
        ];
        for (text, field) in cases {
            match kljn_config_from_json(text) {
                Err(CliError::Validation(msg)) => assert!(msg.contains(field), "{text}: {msg}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}

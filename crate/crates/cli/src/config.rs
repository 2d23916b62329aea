//! Config files, environment overrides and unit handling.
//!
//! A config file is TOML. Keys live in three sections, `mc`, `thz` and
//! `backhaul`, written either as tables or as dotted keys
//! (`mc.ring_radius = "45 nm"`); the top-level `seed` sets the master seed.
//! Absent keys keep their defaults. Quantities accept a unit suffix
//! (`"400 us"`, `"3.5 GHz"`); bare numbers are SI.
//!
//! Environment variables `NANOLINK_<SECTION>__<KEY>` override file values,
//! e.g. `NANOLINK_MC__RING_RADIUS=45nm`; `NANOLINK_SEED` overrides the seed.

use std::collections::BTreeMap;
use std::path::Path;

use nanolink::thz::ThzLinkConfig;
use nanolink::units::{parse_quantity, Dimension};
use nanolink::ArchitectureConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value as Json;
use thiserror::Error;

pub const ENV_PREFIX: &str = "NANOLINK_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] nanolink::SimError),
}

fn value_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// How a key's raw value is interpreted.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Quantity(Dimension),
    /// A length that may also be `"none"`.
    OptionalLength,
    Count,
    Real,
    Choice,
}

fn kind_of(key: &str) -> Kind {
    use Dimension::*;
    match key {
        "mc.ring_radius" | "mc.receiver_radius" | "thz.distance" | "backhaul.d_hop1" | "backhaul.d_hop2" => {
            Kind::Quantity(Length)
        }
        "mc.escape_radius" => Kind::OptionalLength,
        "mc.bit_duration" | "mc.time_step" | "thz.pulse_duration" => Kind::Quantity(Time),
        "thz.f_low" | "thz.f_high" | "thz.bandwidth" | "backhaul.carrier_freq" | "backhaul.bandwidth" => {
            Kind::Quantity(Frequency)
        }
        "backhaul.avg_snr_db_at_ref" => Kind::Quantity(Decibel),
        "mc.n_sensors" | "mc.molecules_per_impulse" | "mc.samples_per_bit" | "mc.sequence_length"
        | "mc.n_realizations" | "mc.csk_levels" | "mc.retire_after_bits" | "mc.pilot_frames"
        | "thz.n_symbols" | "backhaul.n_tx_handheld" | "backhaul.n_rx_gateway" | "backhaul.n_rx_endpoint"
        | "backhaul.n_fading_samples" | "backhaul.fading_chains" => Kind::Count,
        "mc.receiver_mode" | "mc.modulation" | "mc.sensor_mode" | "backhaul.relay_transmit" => Kind::Choice,
        _ => Kind::Real,
    }
}

/// A raw value from a file or the environment.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RawValue {
    fn from_toml(key: &str, v: &toml::Value) -> Result<RawValue, ConfigError> {
        match v {
            toml::Value::Integer(i) => Ok(RawValue::Int(*i)),
            toml::Value::Float(f) => Ok(RawValue::Float(*f)),
            toml::Value::String(s) => Ok(RawValue::Text(s.clone())),
            other => Err(value_err(key, format!("unsupported value type {}", other.type_str()))),
        }
    }

    fn as_real(&self, key: &str, dim: Dimension) -> Result<f64, ConfigError> {
        match self {
            RawValue::Int(i) => Ok(*i as f64),
            RawValue::Float(f) => Ok(*f),
            RawValue::Text(s) => parse_quantity(s, dim).map_err(|e| value_err(key, e.to_string())),
        }
    }
}

fn convert(key: &str, raw: &RawValue) -> Result<Json, ConfigError> {
    let number = |v: f64| {
        serde_json::Number::from_f64(v)
            .map(Json::Number)
            .ok_or_else(|| value_err(key, format!("{v} is not a finite number")))
    };
    match kind_of(key) {
        Kind::Quantity(dim) => {
            let v = raw.as_real(key, dim)?;
            // -inf dB is a legitimate silent transmitter; JSON cannot carry it
            if v == f64::NEG_INFINITY && dim == Dimension::Decibel {
                return Ok(Json::String("-inf".into()));
            }
            number(v)
        }
        Kind::Real => number(raw.as_real(key, Dimension::Dimensionless)?),
        Kind::OptionalLength => match raw {
            RawValue::Text(s) if s.trim().eq_ignore_ascii_case("none") => Ok(Json::Null),
            _ => number(raw.as_real(key, Dimension::Length)?),
        },
        Kind::Count => {
            let v = raw.as_real(key, Dimension::Dimensionless)?;
            if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                return Err(value_err(key, format!("expected a nonnegative integer, got {v}")));
            }
            Ok(Json::from(v as u64))
        }
        Kind::Choice => match raw {
            RawValue::Text(s) => Ok(Json::String(s.trim().to_ascii_lowercase().replace('-', "_"))),
            _ => Err(value_err(key, "expected a string")),
        },
    }
}

/// Overwrite fields of `target` from `(field, value)` pairs via its serde form.
fn patch<T: Serialize + DeserializeOwned>(
    section: &str,
    target: &T,
    values: &BTreeMap<String, RawValue>,
) -> Result<T, ConfigError> {
    let mut json = serde_json::to_value(target).expect("configs serialize");
    let map = json.as_object_mut().expect("configs are structs");
    for (field, raw) in values {
        let key = format!("{section}.{field}");
        if !map.contains_key(field) {
            return Err(ConfigError::UnknownKey(key));
        }
        let mut v = convert(&key, raw)?;
        if v == Json::String("-inf".into()) {
            // handled after deserialization
            v = Json::from(0.0);
        }
        map.insert(field.clone(), v);
    }
    serde_json::from_value(json).map_err(|e| value_err(section, e.to_string()))
}

/// Flat view of a config source: `section.key` → raw value.
pub type FlatConfig = BTreeMap<String, RawValue>;

fn flatten(prefix: &str, table: &toml::Table, out: &mut FlatConfig) -> Result<(), ConfigError> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                out.insert(key.clone(), RawValue::from_toml(&key, other)?);
            }
        }
    }
    Ok(())
}

pub fn parse_config_str(text: &str) -> Result<FlatConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut flat = FlatConfig::new();
    flatten("", &table, &mut flat)?;
    Ok(flat)
}

/// Variables `NANOLINK_<SECTION>__<KEY>` and `NANOLINK_SEED` as flat keys.
pub fn env_overrides<I>(vars: I) -> FlatConfig
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut flat = FlatConfig::new();
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let key = if rest == "SEED" {
            "seed".to_string()
        } else if let Some((section, field)) = rest.split_once("__") {
            format!("{}.{}", section.to_ascii_lowercase(), field.to_ascii_lowercase())
        } else {
            continue;
        };
        flat.insert(key, RawValue::Text(value));
    }
    flat
}

/// Apply flat keys on top of `base`. Unknown keys are rejected; the result is
/// validated.
pub fn resolve(base: &ArchitectureConfig, flat: &FlatConfig) -> Result<ArchitectureConfig, ConfigError> {
    let mut sections: BTreeMap<&str, BTreeMap<String, RawValue>> = BTreeMap::new();
    let mut cfg = base.clone();
    for (key, raw) in flat {
        if key == "seed" {
            cfg.master_seed = match raw {
                RawValue::Int(i) if *i >= 0 => *i as u64,
                RawValue::Text(s) => s.trim().parse().map_err(|_| value_err(key, "expected an unsigned integer"))?,
                _ => return Err(value_err(key, "expected an unsigned integer")),
            };
            continue;
        }
        let Some((section, field)) = key.split_once('.') else {
            return Err(ConfigError::UnknownKey(key.clone()));
        };
        match section {
            "mc" | "thz" | "backhaul" => {
                sections.entry(section).or_default().insert(field.to_string(), raw.clone());
            }
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }

    if let Some(mut thz) = sections.remove("thz") {
        if let Some(preset) = thz.remove("preset") {
            cfg.thz = match preset {
                RawValue::Text(s) if s.eq_ignore_ascii_case("tissue") => ThzLinkConfig::tissue_preset(),
                RawValue::Text(s) if s.eq_ignore_ascii_case("default") => ThzLinkConfig::default(),
                _ => return Err(value_err("thz.preset", "expected \"default\" or \"tissue\"")),
            };
        }
        let band_given = thz.contains_key("f_low") || thz.contains_key("f_high");
        cfg.thz = patch("thz", &cfg.thz, &thz)?;
        if band_given && !thz.contains_key("bandwidth") {
            cfg.thz.bandwidth = cfg.thz.f_high - cfg.thz.f_low;
        }
    }
    if let Some(mc) = sections.remove("mc") {
        cfg.mc = patch("mc", &cfg.mc, &mc)?;
    }
    if let Some(bh) = sections.remove("backhaul") {
        let silent = matches!(
            bh.get("avg_snr_db_at_ref").map(|r| convert("backhaul.avg_snr_db_at_ref", r)),
            Some(Ok(Json::String(_)))
        );
        cfg.backhaul = patch("backhaul", &cfg.backhaul, &bh)?;
        if silent {
            cfg.backhaul.avg_snr_db_at_ref = f64::NEG_INFINITY;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Defaults, then the file at `path`, then the process environment.
pub fn parse_config(path: &Path) -> Result<ArchitectureConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut flat = parse_config_str(&text)?;
    flat.extend(env_overrides(std::env::vars()));
    resolve(&ArchitectureConfig::default(), &flat)
}

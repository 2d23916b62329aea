//! Fixed unit table.
//!
//! Internally everything is SI: meters, seconds, hertz, bits/second.
//! Decibel quantities stay in dB.

use std::fmt;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Frequency,
    Decibel,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Decibel => "decibel",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

const SUFFIXES: &[(&str, Dimension, f64)] = &[
    ("nm", Dimension::Length, 1e-9),
    ("um", Dimension::Length, 1e-6),
    ("μm", Dimension::Length, 1e-6),
    ("mm", Dimension::Length, 1e-3),
    ("m", Dimension::Length, 1.0),
    ("km", Dimension::Length, 1e3),
    ("fs", Dimension::Time, 1e-15),
    ("ps", Dimension::Time, 1e-12),
    ("ns", Dimension::Time, 1e-9),
    ("us", Dimension::Time, 1e-6),
    ("μs", Dimension::Time, 1e-6),
    ("ms", Dimension::Time, 1e-3),
    ("s", Dimension::Time, 1.0),
    ("Hz", Dimension::Frequency, 1.0),
    ("kHz", Dimension::Frequency, 1e3),
    ("MHz", Dimension::Frequency, 1e6),
    ("GHz", Dimension::Frequency, 1e9),
    ("THz", Dimension::Frequency, 1e12),
    ("dB", Dimension::Decibel, 1.0),
];

/// Scale factor to SI for a unit suffix.
pub fn unit_scale(suffix: &str) -> Option<(Dimension, f64)> {
    SUFFIXES
        .iter()
        .find(|(s, _, _)| *s == suffix)
        .map(|&(_, d, k)| (d, k))
}

/// Parse `"45 nm"`, `"400us"`, `"1e-6"` into an SI value of the given dimension.
///
/// A bare number is taken to already be in SI units.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let text = text.trim();
    if let Some(v) = parse_number(text) {
        return Ok(v);
    }
    let (number, suffix) = split_suffix(text);
    let value = parse_number(number).ok_or_else(|| {
        SimError::parameter(text, format!("`{number}` is not a number"))
    })?;
    if suffix.is_empty() {
        return Ok(value);
    }
    match unit_scale(suffix) {
        Some((dim, scale)) if dim == expected => Ok(value * scale),
        Some((dim, _)) => Err(SimError::parameter(
            text,
            format!("unit `{suffix}` is a {dim} unit, expected {expected}"),
        )),
        None => Err(SimError::parameter(text, format!("unknown unit `{suffix}`"))),
    }
}

fn split_suffix(text: &str) -> (&str, &str) {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if !c.is_alphabetic() {
            continue;
        }
        let is_exponent = matches!(c, 'e' | 'E')
            && k > 0
            && chars[k - 1].1.is_ascii_digit()
            && chars.get(k + 1).is_some_and(|&(_, n)| {
                n.is_ascii_digit() || ((n == '-' || n == '+') && chars.get(k + 2).is_some_and(|&(_, d)| d.is_ascii_digit()))
            });
        if !is_exponent {
            return (text[..i].trim(), text[i..].trim());
        }
    }
    (text, "")
}

fn parse_number(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

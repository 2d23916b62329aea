use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

/// Link segment a rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Segment {
    Mc,
    Thz,
    Hop1,
    Hop2,
    E2e,
}

impl Segment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Segment::Mc => "MC",
            Segment::Thz => "THZ",
            Segment::Hop1 => "HOP1",
            Segment::Hop2 => "HOP2",
            Segment::E2e => "E2E",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Achievable information rate of one segment, with the provenance needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub segment: Segment,
    pub rate_bps: f64,
    /// Mutual information per channel use. For the RF hops this is the
    /// ergodic spectral efficiency in b/s/Hz.
    pub mi_bits_per_use: f64,
    pub n_realizations: u64,
    pub config_digest: String,
    pub seed: u64,
}

impl RateResult {
    /// Build a result, checking `rate_bps >= 0` and
    /// `0 <= mi <= log2(alphabet)` when the input alphabet is finite.
    pub fn new(
        segment: Segment,
        rate_bps: f64,
        mi_bits_per_use: f64,
        alphabet: Option<usize>,
        n_realizations: u64,
        config_digest: String,
        seed: u64,
    ) -> Result<Self> {
        if !(rate_bps >= 0.0) {
            return Err(SimError::parameter("rate_bps", format!("must be >= 0, got {rate_bps}")));
        }
        if !(mi_bits_per_use >= 0.0) {
            return Err(SimError::parameter(
                "mi_bits_per_use",
                format!("must be >= 0, got {mi_bits_per_use}"),
            ));
        }
        if let Some(levels) = alphabet {
            let cap = (levels as f64).log2();
            if mi_bits_per_use > cap + 1e-12 {
                return Err(SimError::parameter(
                    "mi_bits_per_use",
                    format!("{mi_bits_per_use} exceeds log2({levels}) = {cap}"),
                ));
            }
        }
        Ok(RateResult {
            segment,
            rate_bps,
            mi_bits_per_use,
            n_realizations,
            config_digest,
            seed,
        })
    }
}

/// SHA-256 over the canonical JSON encoding of a config, as lowercase hex.
///
/// Field order is fixed by the struct definition, so the digest does not
/// depend on how the values were laid out in the source file.
pub fn config_digest<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config types serialize infallibly");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

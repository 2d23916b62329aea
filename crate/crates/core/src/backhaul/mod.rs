//! Two-hop RF backhaul: handheld → gateway → endpoint.
//!
//! Each hop sees UMi pathloss relative to a 1 km reference, time-correlated
//! Rayleigh fading and a zero-forcing receiver. The end-to-end rate of the
//! decode-and-forward relay is the smaller of the two ergodic hop rates.

mod fading;
mod pathloss;
mod rate;
mod zf;

use serde::{Deserialize, Serialize};

pub use fading::{cscg_matrix, doppler_correlation, rayleigh_sequence, ChannelMatrix, GaussMarkovChannel};
pub use pathloss::{umi_pathloss_db, REFERENCE_DISTANCE};
pub use rate::{backhaul_rate, backhaul_rates, hop_ergodic_rate, BackhaulGains, BackhaulRates, HopGains};
pub use zf::{zf_combiner, zf_detect, zf_equalize};

use crate::error::{Result, SimError};
use crate::result::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Hop {
    Hop1,
    Hop2,
}

impl Hop {
    pub fn segment(self) -> Segment {
        match self {
            Hop::Hop1 => Segment::Hop1,
            Hop::Hop2 => Segment::Hop2,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.segment().as_str()
    }
}

impl std::str::FromStr for Hop {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HOP1" | "1" => Ok(Hop::Hop1),
            "HOP2" | "2" => Ok(Hop::Hop2),
            _ => Err(SimError::parameter("hop", format!("expected HOP1 or HOP2, got `{s}`"))),
        }
    }
}

/// How the gateway forwards the handheld's streams to the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayTransmit {
    /// Stream `k` leaves gateway antenna `k`; the endpoint sees an
    /// `n_rx_endpoint × n_streams` channel.
    SingleAntenna,
    /// The gateway precodes along the dominant right singular vectors of the
    /// full `n_rx_endpoint × n_rx_gateway` channel with its whole array.
    Beamforming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulConfig {
    pub n_tx_handheld: usize,
    pub n_rx_gateway: usize,
    pub n_rx_endpoint: usize,
    /// Normalized Doppler, cycles per fading sample.
    pub fd_norm: f64,
    /// Hz
    pub carrier_freq: f64,
    /// Hz
    pub bandwidth: f64,
    /// m
    pub d_hop1: f64,
    /// m
    pub d_hop2: f64,
    /// Per-hop average SNR at the 1 km reference distance, dB.
    pub avg_snr_db_at_ref: f64,
    /// Total fading samples per ergodic average.
    pub n_fading_samples: usize,
    /// The samples are split evenly over this many independent Gauss-Markov
    /// chains.
    pub fading_chains: usize,
    pub relay_transmit: RelayTransmit,
}

impl Default for BackhaulConfig {
    fn default() -> Self {
        BackhaulConfig {
            n_tx_handheld: 1,
            n_rx_gateway: 16,
            n_rx_endpoint: 8,
            fd_norm: 0.01,
            carrier_freq: 3.5e9,
            bandwidth: 20e6,
            d_hop1: 1000.0,
            d_hop2: 1000.0,
            avg_snr_db_at_ref: 45.0,
            n_fading_samples: 10_000,
            fading_chains: 100,
            relay_transmit: RelayTransmit::Beamforming,
        }
    }
}

impl BackhaulConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_tx_handheld", self.n_tx_handheld),
            ("n_rx_gateway", self.n_rx_gateway),
            ("n_rx_endpoint", self.n_rx_endpoint),
            ("n_fading_samples", self.n_fading_samples),
            ("fading_chains", self.fading_chains),
        ] {
            if n == 0 {
                return Err(SimError::parameter(name, "must be >= 1"));
            }
        }
        let streams = self.n_tx_handheld;
        for (name, n) in [("n_rx_gateway", self.n_rx_gateway), ("n_rx_endpoint", self.n_rx_endpoint)] {
            if n < streams {
                return Err(SimError::parameter(
                    name,
                    format!("{name} ({n}) must be >= n_tx_handheld ({streams}) for zero forcing"),
                ));
            }
        }
        if self.relay_transmit == RelayTransmit::SingleAntenna && self.n_rx_gateway < streams {
            return Err(SimError::parameter("n_rx_gateway", "not enough gateway antennas to relay"));
        }
        if !(0.0..0.5).contains(&self.fd_norm) {
            return Err(SimError::parameter(
                "fd_norm",
                format!("normalized Doppler must lie in [0, 0.5), got {}", self.fd_norm),
            ));
        }
        for (name, v) in [
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("d_hop1", self.d_hop1),
            ("d_hop2", self.d_hop2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::parameter(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.avg_snr_db_at_ref.is_nan() || self.avg_snr_db_at_ref == f64::INFINITY {
            return Err(SimError::parameter("avg_snr_db_at_ref", "must be a number below +inf"));
        }
        Ok(())
    }

    pub fn hop_distance(&self, hop: Hop) -> f64 {
        match hop {
            Hop::Hop1 => self.d_hop1,
            Hop::Hop2 => self.d_hop2,
        }
    }

    /// Fading samples per chain; the total is rounded up to a whole number of
    /// chains.
    pub fn samples_per_chain(&self) -> usize {
        self.n_fading_samples.div_ceil(self.fading_chains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        BackhaulConfig::default().validate().unwrap();
        assert_eq!(BackhaulConfig::default().samples_per_chain(), 100);
    }

    #[test]
    fn zf_needs_enough_receive_antennas() {
        let cfg = BackhaulConfig {
            n_tx_handheld: 9,
            ..BackhaulConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("n_rx_endpoint"), "{msg}");
    }

    #[test]
    fn doppler_range() {
        for fd in [-0.1, 0.5, f64::NAN] {
            let cfg = BackhaulConfig {
                fd_norm: fd,
                ..BackhaulConfig::default()
            };
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn hop_parsing() {
        assert_eq!("hop1".parse::<Hop>().unwrap(), Hop::Hop1);
        assert_eq!("HOP2".parse::<Hop>().unwrap(), Hop::Hop2);
        assert!("hop3".parse::<Hop>().is_err());
    }
}

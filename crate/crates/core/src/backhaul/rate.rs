use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fading::{ChannelMatrix, GaussMarkovChannel};
use super::pathloss::{umi_pathloss_db, REFERENCE_DISTANCE};
use super::zf::zf_detect;
use super::{BackhaulConfig, Hop, RelayTransmit};
use crate::error::Result;
use crate::result::{config_digest, RateResult, Segment};
use crate::rng::RandomSource;
use crate::units::db_to_linear;

/// Post-ZF gains of one hop over its fading ensemble, normalized to unit
/// transmit SNR. Computing them once and re-weighting by SNR keeps sweeps on
/// common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct HopGains {
    pub hop: Hop,
    pub streams: usize,
    /// `samples × streams`, row-major.
    pub gains: Vec<f64>,
}

impl HopGains {
    /// Chain `c` of the ensemble draws from `rng.child(c)`.
    pub fn simulate(cfg: &BackhaulConfig, hop: Hop, rng: &RandomSource) -> Result<HopGains> {
        cfg.validate()?;
        let streams = cfg.n_tx_handheld;
        let per_chain = cfg.samples_per_chain();
        let shape = match (hop, cfg.relay_transmit) {
            (Hop::Hop1, _) => (cfg.n_rx_gateway, streams),
            (Hop::Hop2, RelayTransmit::SingleAntenna) => (cfg.n_rx_endpoint, streams),
            (Hop::Hop2, RelayTransmit::Beamforming) => (cfg.n_rx_endpoint, cfg.n_rx_gateway),
        };
        let precode = hop == Hop::Hop2 && cfg.relay_transmit == RelayTransmit::Beamforming;
        let chunks: Vec<Vec<f64>> = (0..cfg.fading_chains as u64)
            .into_par_iter()
            .map(|c| -> Result<Vec<f64>> {
                let chain = GaussMarkovChannel::new(shape, cfg.fd_norm, rng.child(c))?;
                let mut out = Vec::with_capacity(per_chain * streams);
                for h in chain.take(per_chain) {
                    let h_eff = if precode { beamformed(&h, streams) } else { h };
                    out.extend(zf_detect(&h_eff, 1.0)?);
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(HopGains {
            hop,
            streams,
            gains: chunks.concat(),
        })
    }

    pub fn n_samples(&self) -> usize {
        self.gains.len() / self.streams
    }

    /// Ergodic spectral efficiency `E[Σ_k log2(1 + snr/n_s · g_k)]`, b/s/Hz.
    pub fn spectral_efficiency(&self, snr_linear: f64) -> f64 {
        if snr_linear <= 0.0 {
            return 0.0;
        }
        let per_stream = snr_linear / self.streams as f64;
        let total: f64 = self.gains.iter().map(|g| (per_stream * g).ln_1p()).sum();
        total / std::f64::consts::LN_2 / self.n_samples() as f64
    }

    /// Rate of this hop at distance `d` for a reference-distance SNR of
    /// `snr_db`.
    pub fn rate(&self, cfg: &BackhaulConfig, snr_db: f64, d: f64, seed: u64) -> Result<RateResult> {
        let snr = db_to_linear(hop_snr_db(cfg, snr_db, d)?);
        let se = self.spectral_efficiency(snr);
        RateResult::new(
            self.hop.segment(),
            cfg.bandwidth * se,
            se,
            None,
            self.n_samples() as u64,
            config_digest(cfg),
            seed,
        )
    }
}

/// Average SNR of a hop of length `d`: the reference SNR minus the extra UMi
/// pathloss beyond 1 km.
fn hop_snr_db(cfg: &BackhaulConfig, snr_db: f64, d: f64) -> Result<f64> {
    let extra = umi_pathloss_db(d, cfg.carrier_freq)? - umi_pathloss_db(REFERENCE_DISTANCE, cfg.carrier_freq)?;
    Ok(snr_db - extra)
}

/// `H·V` with `V` the `streams` dominant right singular vectors of `H`.
fn beamformed(h: &ChannelMatrix, streams: usize) -> ChannelMatrix {
    let svd = h.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let v = ChannelMatrix::from_fn(h.ncols(), streams, |r, c| v_t[(order[c], r)].conj());
    h * v
}

/// Ergodic rate of one hop; the fading ensemble is drawn from `rng`.
pub fn hop_ergodic_rate(
    cfg: &BackhaulConfig,
    hop: Hop,
    snr_db: f64,
    d: f64,
    rng: &RandomSource,
) -> Result<RateResult> {
    HopGains::simulate(cfg, hop, rng)?.rate(cfg, snr_db, d, rng.master_seed())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulRates {
    pub hop1: RateResult,
    pub hop2: RateResult,
    pub e2e: RateResult,
}

impl BackhaulRates {
    pub fn bottleneck(&self) -> Hop {
        if self.hop1.rate_bps <= self.hop2.rate_bps {
            Hop::Hop1
        } else {
            Hop::Hop2
        }
    }
}

/// Fading ensembles of both hops: hop 1 on `rng.child(1)`, hop 2 on
/// `rng.child(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackhaulGains {
    pub hop1: HopGains,
    pub hop2: HopGains,
}

impl BackhaulGains {
    pub fn simulate(cfg: &BackhaulConfig, rng: &RandomSource) -> Result<BackhaulGains> {
        Ok(BackhaulGains {
            hop1: HopGains::simulate(cfg, Hop::Hop1, &rng.child(1))?,
            hop2: HopGains::simulate(cfg, Hop::Hop2, &rng.child(2))?,
        })
    }

    /// Decode-and-forward rates with hops of length `d1` and `d2`.
    pub fn rates(
        &self,
        cfg: &BackhaulConfig,
        snr_db: f64,
        d1: f64,
        d2: f64,
        seed: u64,
    ) -> Result<BackhaulRates> {
        let hop1 = self.hop1.rate(cfg, snr_db, d1, seed)?;
        let hop2 = self.hop2.rate(cfg, snr_db, d2, seed)?;
        let e2e_bps = hop1.rate_bps.min(hop2.rate_bps);
        let e2e = RateResult::new(
            Segment::E2e,
            e2e_bps,
            e2e_bps / cfg.bandwidth,
            None,
            hop1.n_realizations.min(hop2.n_realizations),
            config_digest(cfg),
            seed,
        )?;
        Ok(BackhaulRates { hop1, hop2, e2e })
    }
}

/// Both hop rates and the end-to-end rate at the configured distances.
pub fn backhaul_rates(cfg: &BackhaulConfig, snr_db: f64, rng: &RandomSource) -> Result<BackhaulRates> {
    BackhaulGains::simulate(cfg, rng)?.rates(cfg, snr_db, cfg.d_hop1, cfg.d_hop2, rng.master_seed())
}

/// End-to-end decode-and-forward rate `min(hop 1, hop 2)`.
pub fn backhaul_rate(cfg: &BackhaulConfig, snr_db: f64, rng: &RandomSource) -> Result<RateResult> {
    Ok(backhaul_rates(cfg, snr_db, rng)?.e2e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use proptest::prelude::*;

    fn quick() -> BackhaulConfig {
        BackhaulConfig {
            n_fading_samples: 2_000,
            fading_chains: 50,
            ..BackhaulConfig::default()
        }
    }

    #[test]
    fn silent_transmitter_has_zero_rate() {
        let r = hop_ergodic_rate(&quick(), Hop::Hop1, f64::NEG_INFINITY, 1000.0, &derive_stream(1, 0)).unwrap();
        assert_eq!(r.rate_bps, 0.0);
    }

    #[test]
    fn rate_scales_with_bandwidth() {
        let cfg = quick();
        let wide = BackhaulConfig {
            bandwidth: 40e6,
            ..cfg.clone()
        };
        let a = hop_ergodic_rate(&cfg, Hop::Hop2, 20.0, 1000.0, &derive_stream(2, 0)).unwrap();
        let b = hop_ergodic_rate(&wide, Hop::Hop2, 20.0, 1000.0, &derive_stream(2, 0)).unwrap();
        assert!((b.rate_bps / a.rate_bps - 2.0).abs() < 1e-12);
    }

    #[test]
    fn beamformed_gain_is_top_singular_value() {
        let mut rng = derive_stream(3, 0);
        let h = crate::backhaul::cscg_matrix(8, 16, &mut rng);
        let g = zf_detect(&beamformed(&h, 1), 1.0).unwrap()[0];
        let top = h.singular_values().max();
        assert!((g - top * top).abs() < 1e-9 * g);
    }

    #[test]
    fn single_antenna_relay_makes_hop2_the_bottleneck() {
        let cfg = BackhaulConfig {
            relay_transmit: RelayTransmit::SingleAntenna,
            ..quick()
        };
        let r = backhaul_rates(&cfg, 45.0, &derive_stream(4, 0)).unwrap();
        assert_eq!(r.bottleneck(), Hop::Hop2);
        assert_eq!(r.e2e.rate_bps, r.hop2.rate_bps);
    }

    #[test]
    fn long_first_hop_is_the_bottleneck() {
        for relay in [RelayTransmit::SingleAntenna, RelayTransmit::Beamforming] {
            let cfg = BackhaulConfig {
                d_hop1: 8000.0,
                d_hop2: 500.0,
                relay_transmit: relay,
                ..quick()
            };
            let r = backhaul_rates(&cfg, 15.0, &derive_stream(5, 0)).unwrap();
            assert_eq!(r.bottleneck(), Hop::Hop1, "{relay:?}");
        }
    }

    #[test]
    fn multi_stream_rate_splits_power() {
        let cfg = BackhaulConfig {
            n_tx_handheld: 2,
            ..quick()
        };
        let r = backhaul_rates(&cfg, 30.0, &derive_stream(6, 0)).unwrap();
        assert!(r.e2e.rate_bps > 0.0);
        let g = HopGains::simulate(&cfg, Hop::Hop1, &derive_stream(6, 1)).unwrap();
        assert_eq!(g.gains.len(), 2 * g.n_samples());
    }

    #[test]
    fn too_close_is_out_of_validity() {
        assert!(hop_ergodic_rate(&quick(), Hop::Hop1, 10.0, 5.0, &derive_stream(1, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_snr_and_distance(
            s1 in -10.0f64..60.0, ds in 0.0f64..20.0,
            d1 in 10.0f64..20_000.0, dd in 0.0f64..5000.0,
        ) {
            let cfg = BackhaulConfig { n_fading_samples: 400, fading_chains: 20, ..BackhaulConfig::default() };
            let gains = BackhaulGains::simulate(&cfg, &derive_stream(7, 0)).unwrap();
            let lo = gains.rates(&cfg, s1, 1000.0, 1000.0, 7).unwrap().e2e.rate_bps;
            let hi = gains.rates(&cfg, s1 + ds, 1000.0, 1000.0, 7).unwrap().e2e.rate_bps;
            prop_assert!(hi >= lo);
            let near = gains.rates(&cfg, 15.0, d1, d1, 7).unwrap();
            let far1 = gains.rates(&cfg, 15.0, d1 + dd, d1, 7).unwrap();
            let far2 = gains.rates(&cfg, 15.0, d1, d1 + dd, 7).unwrap();
            prop_assert!(far1.e2e.rate_bps <= near.e2e.rate_bps);
            prop_assert!(far2.e2e.rate_bps <= near.e2e.rate_bps);
        }
    }
}

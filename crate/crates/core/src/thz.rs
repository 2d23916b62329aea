//! Terahertz hop: spreading plus molecular-absorption pathloss and time-spread
//! on-off keying with an energy detector.
//!
//! A pulse is modelled as an energy quantum. The channel is evaluated at the
//! band-center frequency with a frequency-flat absorption coefficient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::result::{config_digest, RateResult, Segment};
use crate::rng::RandomSource;
use crate::stats::{estimate_mi, ChannelStats};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Body temperature used for the default noise floor, K.
pub const BODY_TEMPERATURE: f64 = 310.0;

/// Pathloss the tissue preset is calibrated to, dB.
pub const TISSUE_PATHLOSS_DB: f64 = 120.0;

const SYMBOLS_PER_CHUNK: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThzLinkConfig {
    /// Hz
    pub f_low: f64,
    /// Hz
    pub f_high: f64,
    /// Hz
    pub bandwidth: f64,
    /// s
    pub pulse_duration: f64,
    /// Symbol spacing over pulse duration.
    pub spread_ratio_beta: f64,
    /// m
    pub distance: f64,
    /// 1/m, flat over the band.
    pub absorption_coeff: f64,
    /// J
    pub tx_pulse_energy: f64,
    /// W/Hz
    pub noise_psd: f64,
    /// Symbols simulated for the rate estimate.
    pub n_symbols: usize,
}

impl Default for ThzLinkConfig {
    fn default() -> Self {
        ThzLinkConfig {
            f_low: 0.5e12,
            f_high: 1.5e12,
            bandwidth: 1e12,
            pulse_duration: 100e-15,
            spread_ratio_beta: 100.0,
            distance: 5e-3,
            absorption_coeff: 120.0,
            tx_pulse_energy: 1e-12,
            noise_psd: BOLTZMANN * BODY_TEMPERATURE,
            n_symbols: 100_000,
        }
    }
}

impl ThzLinkConfig {
    /// Defaults with the absorption coefficient chosen so that the total
    /// pathloss at band center and the default distance is 120 dB.
    pub fn tissue_preset() -> Self {
        let mut cfg = ThzLinkConfig::default();
        cfg.absorption_coeff = calibrate_absorption(&cfg, TISSUE_PATHLOSS_DB)
            .expect("spreading loss of the default geometry is below 120 dB");
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::parameter(name, format!("must be finite and > 0, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::parameter(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        positive("f_low", self.f_low)?;
        positive("f_high", self.f_high)?;
        positive("bandwidth", self.bandwidth)?;
        positive("pulse_duration", self.pulse_duration)?;
        positive("distance", self.distance)?;
        nonneg("absorption_coeff", self.absorption_coeff)?;
        nonneg("tx_pulse_energy", self.tx_pulse_energy)?;
        nonneg("noise_psd", self.noise_psd)?;
        if self.f_high <= self.f_low {
            return Err(SimError::parameter("f_high", "must exceed f_low"));
        }
        let span = self.f_high - self.f_low;
        if (span - self.bandwidth).abs() > 1e-9 * self.bandwidth {
            return Err(SimError::parameter(
                "bandwidth",
                format!("bandwidth ({} Hz) must equal f_high - f_low ({span} Hz)", self.bandwidth),
            ));
        }
        if !(self.spread_ratio_beta >= 1.0) || !self.spread_ratio_beta.is_finite() {
            return Err(SimError::parameter(
                "spread_ratio_beta",
                format!("must be >= 1, got {}", self.spread_ratio_beta),
            ));
        }
        if self.n_symbols == 0 {
            return Err(SimError::parameter("n_symbols", "must be >= 1"));
        }
        Ok(())
    }

    pub fn center_frequency(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }

    /// Time between symbol starts, s.
    pub fn symbol_spacing(&self) -> f64 {
        self.spread_ratio_beta * self.pulse_duration
    }

    /// Received energy of a `1` pulse at band center, J.
    pub fn received_pulse_energy(&self) -> Result<f64> {
        let pl = total_pathloss_db(self, self.center_frequency(), self.distance)?;
        Ok(self.tx_pulse_energy * 10f64.powf(-pl / 10.0))
    }

    /// Mean noise energy collected in one pulse slot, J.
    pub fn noise_energy(&self) -> f64 {
        self.noise_psd * self.bandwidth * self.pulse_duration
    }
}

/// Free-space spreading loss `20·log10(4π·d·f/c)`.
pub fn spreading_loss_db(f: f64, d: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(SimError::parameter("f", format!("frequency must be > 0, got {f}")));
    }
    if !(d > 0.0) {
        return Err(SimError::parameter("d", format!("distance must be > 0, got {d}")));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * d * f / SPEED_OF_LIGHT).log10())
}

/// Beer-Lambert absorption loss `10·log10(e^{k·d})`.
pub fn absorption_loss_db(k: f64, d: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(SimError::parameter("k", format!("absorption coefficient must be >= 0, got {k}")));
    }
    if !(d >= 0.0) {
        return Err(SimError::parameter("d", format!("distance must be >= 0, got {d}")));
    }
    Ok(10.0 * k * d * std::f64::consts::LOG10_E)
}

/// Spreading plus absorption loss at frequency `f` inside the configured band.
pub fn total_pathloss_db(cfg: &ThzLinkConfig, f: f64, d: f64) -> Result<f64> {
    if !(f >= cfg.f_low && f <= cfg.f_high) {
        return Err(SimError::OutOfValidity {
            name: "f".into(),
            value: f,
            range: format!("[{}, {}] Hz", cfg.f_low, cfg.f_high),
        });
    }
    Ok(spreading_loss_db(f, d)? + absorption_loss_db(cfg.absorption_coeff, d)?)
}

/// Absorption coefficient that brings the band-center pathloss at
/// `cfg.distance` to `target_db`.
pub fn calibrate_absorption(cfg: &ThzLinkConfig, target_db: f64) -> Result<f64> {
    let spreading = spreading_loss_db(cfg.center_frequency(), cfg.distance)?;
    if target_db < spreading {
        return Err(SimError::parameter(
            "target_db",
            format!("{target_db} dB is below the spreading loss alone ({spreading:.2} dB)"),
        ));
    }
    Ok((target_db - spreading) / (10.0 * cfg.distance * std::f64::consts::LOG10_E))
}

/// On-off pulse train: symbol `k` starts at `k·β·Tp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pub symbol_times: Vec<f64>,
    pub amplitudes: Vec<u8>,
}

impl PulseTrain {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

pub fn tsook_modulate(bits: &[u8], cfg: &ThzLinkConfig) -> PulseTrain {
    let spacing = cfg.symbol_spacing();
    PulseTrain {
        symbol_times: (0..bits.len()).map(|k| k as f64 * spacing).collect(),
        amplitudes: bits.iter().map(|&b| (b != 0) as u8).collect(),
    }
}

/// Energy collected in each symbol slot: attenuated pulse energy plus a noise
/// energy `w²` with `w ~ N(0, N0·B·Tp)`, so the mean noise energy is
/// `N0·B·Tp`.
pub fn thz_receive(train: &PulseTrain, cfg: &ThzLinkConfig, rng: &mut RandomSource) -> Result<Vec<f64>> {
    let signal = cfg.received_pulse_energy()?;
    let sigma = cfg.noise_energy().sqrt();
    Ok(train
        .amplitudes
        .iter()
        .map(|&a| {
            let noise = if sigma > 0.0 {
                let w = sigma * rng.standard_normal();
                w * w
            } else {
                0.0
            };
            a as f64 * signal + noise
        })
        .collect())
}

/// Energy detector: `1` iff the slot energy exceeds half the noiseless
/// received pulse energy.
pub fn thz_detect(energies: &[f64], cfg: &ThzLinkConfig) -> Result<Vec<u8>> {
    let threshold = 0.5 * cfg.received_pulse_energy()?;
    Ok(energies.iter().map(|&e| (e > threshold) as u8).collect())
}

/// Symbol SNR: received pulse energy over mean noise energy. Infinite when
/// the noise density is zero.
pub fn thz_snr(cfg: &ThzLinkConfig) -> Result<f64> {
    let signal = cfg.received_pulse_energy()?;
    let noise = cfg.noise_energy();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / noise)
}

/// Rate of the hop for a given mutual information per symbol.
pub fn thz_rate(cfg: &ThzLinkConfig, mi_bits: f64) -> Result<RateResult> {
    thz_result(cfg, mi_bits, 0, 0)
}

fn thz_result(cfg: &ThzLinkConfig, mi_bits: f64, n: u64, seed: u64) -> Result<RateResult> {
    RateResult::new(
        Segment::Thz,
        mi_bits / cfg.symbol_spacing(),
        mi_bits,
        Some(2),
        n,
        config_digest(cfg),
        seed,
    )
}

/// Monte-Carlo TS-OOK run over `n_symbols` uniformly random bits; returns the
/// joint statistics of sent and detected bits.
///
/// Symbols are drawn in chunks of 10⁴, chunk `c` from `rng.child(c)`.
pub fn simulate_thz(cfg: &ThzLinkConfig, rng: &RandomSource) -> Result<ChannelStats> {
    cfg.validate()?;
    let n = cfg.n_symbols;
    let chunks = n.div_ceil(SYMBOLS_PER_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = SYMBOLS_PER_CHUNK.min(n - c * SYMBOLS_PER_CHUNK);
            let mut r = rng.child(c as u64);
            let bits: Vec<u8> = (0..len).map(|_| r.bit()).collect();
            let energies = thz_receive(&tsook_modulate(&bits, cfg), cfg, &mut r)?;
            let detected = thz_detect(&energies, cfg)?;
            let mut stats = ChannelStats::new(2);
            stats.record_all(&bits, &detected);
            Ok(stats)
        })
        .try_reduce(|| ChannelStats::new(2), |a, b| Ok(a.merge(&b)))
}

/// Information rate of the THz hop from a Monte-Carlo MI estimate.
pub fn thz_information_rate(cfg: &ThzLinkConfig, rng: &RandomSource) -> Result<RateResult> {
    let stats = simulate_thz(cfg, rng)?;
    let mi = estimate_mi(&stats)?;
    thz_result(cfg, mi, stats.total(), rng.master_seed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spreading_at_one_millimeter() {
        let got = spreading_loss_db(1e12, 1e-3).unwrap();
        let want = 20.0 * (4.0 * std::f64::consts::PI * 1e-3 * 1e12 / 2.998e8).log10();
        assert!(close(got, want, 1e-3), "{got}");
        assert!(close(got, 32.4, 0.05));
    }

    #[test]
    fn spreading_doubles_by_six_db() {
        let base = spreading_loss_db(1e12, 1e-3).unwrap();
        let six = 20.0 * 2f64.log10();
        assert!(close(spreading_loss_db(1e12, 2e-3).unwrap() - base, six, 1e-12));
        assert!(close(spreading_loss_db(2e12, 1e-3).unwrap() - base, six, 1e-12));
    }

    #[test]
    fn spreading_rejects_nonpositive_inputs() {
        assert!(spreading_loss_db(0.0, 1.0).is_err());
        assert!(spreading_loss_db(1e12, -1.0).is_err());
    }

    #[test]
    fn absorption_values() {
        assert_eq!(absorption_loss_db(0.0, 1.0).unwrap(), 0.0);
        let got = absorption_loss_db(120.0, 5e-3).unwrap();
        assert!(close(got, 10.0 * 0.6f64.exp().log10(), 1e-12));
        assert!(close(got, 2.61, 0.005));
        let twice = absorption_loss_db(120.0, 1e-2).unwrap();
        assert!(close(twice, 2.0 * got, 1e-12));
        assert!(absorption_loss_db(-1.0, 1.0).is_err());
        assert!(absorption_loss_db(1.0, -1.0).is_err());
    }

    #[test]
    fn total_is_sum_of_terms() {
        let cfg = ThzLinkConfig::default();
        let f = 0.8e12;
        let total = total_pathloss_db(&cfg, f, 4e-3).unwrap();
        let parts = spreading_loss_db(f, 4e-3).unwrap() + absorption_loss_db(120.0, 4e-3).unwrap();
        assert_eq!(total, parts);
        let lossless = ThzLinkConfig {
            absorption_coeff: 0.0,
            ..cfg.clone()
        };
        assert_eq!(total_pathloss_db(&lossless, f, 1e-6).unwrap(), spreading_loss_db(f, 1e-6).unwrap());
    }

    #[test]
    fn frequency_outside_band_rejected() {
        let cfg = ThzLinkConfig::default();
        assert!(matches!(
            total_pathloss_db(&cfg, 2e12, 1e-3),
            Err(SimError::OutOfValidity { .. })
        ));
        assert!(total_pathloss_db(&cfg, 0.4e12, 1e-3).is_err());
    }

    #[test]
    fn tissue_preset_reaches_target() {
        let cfg = ThzLinkConfig::tissue_preset();
        let pl = total_pathloss_db(&cfg, 1e12, cfg.distance).unwrap();
        assert!(close(pl, 120.0, 1e-9), "{pl}");
        assert!((100.0..=140.0).contains(&pl));
        assert!(calibrate_absorption(&cfg, 10.0).is_err());
    }

    #[test]
    fn pathloss_monotone_in_distance() {
        let cfg = ThzLinkConfig::tissue_preset();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=50 {
            let pl = total_pathloss_db(&cfg, 1e12, k as f64 * 2e-4).unwrap();
            assert!(pl > prev);
            prev = pl;
        }
    }

    #[test]
    fn modulation_timing() {
        let cfg = ThzLinkConfig::default();
        let train = tsook_modulate(&[1, 0, 1], &cfg);
        assert_eq!(train.amplitudes, vec![1, 0, 1]);
        let want = [0.0, 10e-12, 20e-12];
        for (t, w) in train.symbol_times.iter().zip(want) {
            assert!(close(*t, w, 1e-24));
        }
        assert!(tsook_modulate(&[], &cfg).is_empty());
        assert!(tsook_modulate(&[0; 8], &cfg).amplitudes.iter().all(|&a| a == 0));
    }

    #[test]
    fn noiseless_energies_are_exact() {
        let cfg = ThzLinkConfig {
            noise_psd: 0.0,
            ..ThzLinkConfig::default()
        };
        let e = thz_receive(&tsook_modulate(&[0, 1], &cfg), &cfg, &mut derive_stream(1, 0)).unwrap();
        let pl = total_pathloss_db(&cfg, 1e12, 5e-3).unwrap();
        assert_eq!(e[0], 0.0);
        assert_eq!(e[1], 1e-12 * 10f64.powf(-pl / 10.0));
        assert_eq!(thz_snr(&cfg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn measured_snr_matches_formula() {
        let cfg = ThzLinkConfig::default();
        let n = 100_000;
        let e = thz_receive(&tsook_modulate(&vec![0; n], &cfg), &cfg, &mut derive_stream(2, 0)).unwrap();
        let mean_noise = e.iter().sum::<f64>() / n as f64;
        let measured = cfg.received_pulse_energy().unwrap() / mean_noise;
        let want = thz_snr(&cfg).unwrap();
        assert!((measured / want - 1.0).abs() < 0.02, "{measured} vs {want}");
    }

    #[test]
    fn snr_scaling() {
        let cfg = ThzLinkConfig::default();
        let base = thz_snr(&cfg).unwrap();
        assert!(base > 1e3, "{base}");
        let k_extra = 10.0 / (10.0 * cfg.distance * std::f64::consts::LOG10_E);
        let lossier = ThzLinkConfig {
            absorption_coeff: cfg.absorption_coeff + k_extra,
            ..cfg.clone()
        };
        assert!(close(thz_snr(&lossier).unwrap() / base, 0.1, 1e-9));
        let wider = ThzLinkConfig {
            f_low: 0.25e12,
            f_high: 1.75e12,
            bandwidth: 1.5e12,
            ..cfg.clone()
        };
        // same center frequency, 1.5x the bandwidth
        assert!(close(thz_snr(&wider).unwrap() / base, 1.0 / 1.5, 1e-9));
        let doubled = ThzLinkConfig {
            f_low: 0.0 + 1e6,
            f_high: 2e12 + 1e6,
            bandwidth: 2e12,
            ..cfg.clone()
        };
        let pl_shift = total_pathloss_db(&doubled, doubled.center_frequency(), cfg.distance).unwrap()
            - total_pathloss_db(&cfg, 1e12, cfg.distance).unwrap();
        let want = 0.5 * 10f64.powf(-pl_shift / 10.0);
        assert!(close(thz_snr(&doubled).unwrap() / base, want, 1e-9));
    }

    #[test]
    fn rate_formula() {
        let cfg = ThzLinkConfig::default();
        let r = thz_rate(&cfg, 1.0).unwrap();
        assert!(close(r.rate_bps, 1e11, 1.0));
        assert_eq!(r.segment, Segment::Thz);
        assert_eq!(thz_rate(&cfg, 0.0).unwrap().rate_bps, 0.0);
        let slow = ThzLinkConfig {
            spread_ratio_beta: 200.0,
            ..cfg.clone()
        };
        assert!(close(thz_rate(&slow, 1.0).unwrap().rate_bps, 0.5e11, 1.0));
        assert!(thz_rate(&cfg, 1.5).is_err());
    }

    #[test]
    fn default_link_is_error_free() {
        let cfg = ThzLinkConfig {
            n_symbols: 20_000,
            ..ThzLinkConfig::default()
        };
        let r = thz_information_rate(&cfg, &derive_stream(3, 0)).unwrap();
        assert!(r.mi_bits_per_use > 0.99);
        assert!(r.rate_bps <= 1.0 / cfg.symbol_spacing());
    }

    #[test]
    fn ber_nonincreasing_in_pulse_energy() {
        // noise floor raised so that errors are frequent at the lowest energy
        let base = ThzLinkConfig {
            noise_psd: 1e-15,
            ..ThzLinkConfig::default()
        };
        let mut bers = Vec::new();
        for scale in [1.0, 2.0, 4.0] {
            let cfg = ThzLinkConfig {
                tx_pulse_energy: base.tx_pulse_energy * scale,
                ..base.clone()
            };
            let stats = simulate_thz(&cfg, &derive_stream(4, 0)).unwrap();
            bers.push((stats.error_rate(), stats.total() as f64));
        }
        for w in bers.windows(2) {
            let ((p0, n0), (p1, n1)) = (w[0], w[1]);
            let se = (p0 * (1.0 - p0) / n0 + p1 * (1.0 - p1) / n1).sqrt();
            assert!(p1 <= p0 + 3.0 * se, "{bers:?}");
        }
        assert!(bers[0].0 > 0.01, "{bers:?}");
    }

    #[test]
    fn band_mismatch_rejected() {
        let cfg = ThzLinkConfig {
            bandwidth: 2e12,
            ..ThzLinkConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ThzLinkConfig {
            spread_ratio_beta: 0.5,
            ..ThzLinkConfig::default()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(bits in proptest::collection::vec(0u8..2, 0..200)) {
            let cfg = ThzLinkConfig { noise_psd: 0.0, ..ThzLinkConfig::tissue_preset() };
            let e = thz_receive(&tsook_modulate(&bits, &cfg), &cfg, &mut derive_stream(5, 0)).unwrap();
            prop_assert_eq!(thz_detect(&e, &cfg).unwrap(), bits);
        }
    }
}

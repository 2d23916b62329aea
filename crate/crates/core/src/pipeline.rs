//! The three segments composed into the monitoring chain.
//!
//! Segment runs draw from fixed streams of the master seed: molecular hop on
//! stream 1, terahertz hop on stream 2, backhaul on stream 3. Sweeps reuse the
//! backhaul stream, so a sweep point and a pipeline run at the same operating
//! point agree exactly.

use serde::{Deserialize, Serialize};

use crate::backhaul::{BackhaulConfig, BackhaulGains, Hop, HopGains, REFERENCE_DISTANCE};
use crate::error::Result;
use crate::mc::{mc_information_rate, McLinkConfig};
use crate::result::{config_digest, RateResult, Segment};
use crate::rng::{derive_stream, RandomSource};
use crate::thz::{thz_information_rate, ThzLinkConfig};

/// Reference-distance SNR held fixed during distance sweeps, dB.
pub const DISTANCE_SWEEP_SNR_DB: f64 = 15.0;

const MC_STREAM: u64 = 1;
const THZ_STREAM: u64 = 2;
const BACKHAUL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub mc: McLinkConfig,
    pub thz: ThzLinkConfig,
    pub backhaul: BackhaulConfig,
    pub master_seed: u64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            mc: McLinkConfig::default(),
            thz: ThzLinkConfig::default(),
            backhaul: BackhaulConfig::default(),
            master_seed: 42,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<()> {
        self.mc.validate().map_err(|e| e.in_segment(Segment::Mc))?;
        self.thz.validate().map_err(|e| e.in_segment(Segment::Thz))?;
        self.backhaul.validate().map_err(|e| e.in_segment(Segment::E2e))?;
        Ok(())
    }

    pub fn digest(&self) -> String {
        config_digest(self)
    }

    fn stream(&self, id: u64) -> RandomSource {
        derive_stream(self.master_seed, id)
    }

    fn backhaul_gains(&self) -> Result<BackhaulGains> {
        let rng = self.stream(BACKHAUL_STREAM);
        let bh = &self.backhaul;
        Ok(BackhaulGains {
            hop1: HopGains::simulate(bh, Hop::Hop1, &rng.child(1)).map_err(|e| e.in_segment(Segment::Hop1))?,
            hop2: HopGains::simulate(bh, Hop::Hop2, &rng.child(2)).map_err(|e| e.in_segment(Segment::Hop2))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config_digest: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    /// MC, THZ, HOP1, HOP2 in that order.
    pub per_segment: Vec<RateResult>,
    pub backhaul_e2e: RateResult,
    /// The slowest segment of the alert path.
    pub alert_bottleneck: RateResult,
    pub metadata: ReportMetadata,
}

impl PipelineReport {
    pub fn segment(&self, segment: Segment) -> Option<&RateResult> {
        self.per_segment.iter().find(|r| r.segment == segment)
    }
}

/// Run every segment and assemble the report. The backhaul is evaluated at
/// its configured reference SNR and hop distances.
pub fn run_pipeline(cfg: &ArchitectureConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let (mc, (thz, gains)) = rayon::join(
        || mc_information_rate(&cfg.mc, &cfg.stream(MC_STREAM)).map_err(|e| e.in_segment(Segment::Mc)),
        || {
            (
                thz_information_rate(&cfg.thz, &cfg.stream(THZ_STREAM))
                    .map_err(|e| e.in_segment(Segment::Thz)),
                cfg.backhaul_gains(),
            )
        },
    );
    let (mc, thz, gains) = (mc?, thz?, gains?);
    let bh = &cfg.backhaul;
    let rates = gains
        .rates(bh, bh.avg_snr_db_at_ref, bh.d_hop1, bh.d_hop2, cfg.master_seed)
        .map_err(|e| e.in_segment(Segment::E2e))?;

    let per_segment = vec![mc, thz, rates.hop1, rates.hop2];
    let alert_bottleneck = per_segment
        .iter()
        .min_by(|a, b| a.rate_bps.total_cmp(&b.rate_bps))
        .cloned()
        .expect("four segments");
    Ok(PipelineReport {
        per_segment,
        backhaul_e2e: rates.e2e,
        alert_bottleneck,
        metadata: ReportMetadata {
            config_digest: cfg.digest(),
            master_seed: cfg.master_seed,
        },
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Swept value: SNR in dB or distance in m.
    pub x: f64,
    pub rate_bps: f64,
    pub segment: Segment,
    pub n_realizations: u64,
    pub seed: u64,
}

impl SweepRow {
    fn from_result(x: f64, r: &RateResult) -> Self {
        SweepRow {
            x,
            rate_bps: r.rate_bps,
            segment: r.segment,
            n_realizations: r.n_realizations,
            seed: r.seed,
        }
    }
}

/// Backhaul end-to-end rate at each reference SNR of `snr_grid`, with the
/// hops at their configured lengths (1 km each by default).
pub fn sweep_snr(cfg: &ArchitectureConfig, snr_grid: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.backhaul.validate().map_err(|e| e.in_segment(Segment::E2e))?;
    let gains = cfg.backhaul_gains()?;
    let bh = &cfg.backhaul;
    snr_grid
        .iter()
        .map(|&snr| {
            let r = gains.rates(bh, snr, bh.d_hop1, bh.d_hop2, cfg.master_seed)?;
            Ok(SweepRow::from_result(snr, &r.e2e))
        })
        .collect()
}

/// Backhaul end-to-end rate as one hop's length follows `d_grid`; the other
/// hop stays at 1 km and the reference SNR at 15 dB.
pub fn sweep_distance(cfg: &ArchitectureConfig, hop: Hop, d_grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_distance_at(cfg, hop, d_grid, DISTANCE_SWEEP_SNR_DB)
}

/// [`sweep_distance`] at an arbitrary reference SNR.
pub fn sweep_distance_at(
    cfg: &ArchitectureConfig,
    hop: Hop,
    d_grid: &[f64],
    snr_db: f64,
) -> Result<Vec<SweepRow>> {
    cfg.backhaul.validate().map_err(|e| e.in_segment(Segment::E2e))?;
    let gains = cfg.backhaul_gains()?;
    d_grid
        .iter()
        .map(|&d| {
            let (d1, d2) = match hop {
                Hop::Hop1 => (d, REFERENCE_DISTANCE),
                Hop::Hop2 => (REFERENCE_DISTANCE, d),
            };
            let r = gains
                .rates(&cfg.backhaul, snr_db, d1, d2, cfg.master_seed)
                .map_err(|e| e.in_segment(hop.segment()))?;
            Ok(SweepRow::from_result(d, &r.e2e))
        })
        .collect()
}

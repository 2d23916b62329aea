//! Bit-level simulation of the molecular hop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::sample_hit_time;
use super::particles::{brownian_step, passive_count, ParticleEnsemble};
use super::{McLinkConfig, ReceiverMode, SensorMode};
use crate::error::{Result, SimError};
use crate::result::{config_digest, RateResult, Segment};
use crate::rng::RandomSource;
use crate::stats::{estimate_mi, ChannelStats};
use crate::vec3::Vec3;

const PILOT_STREAM: u64 = u64::MAX;

/// Sensor `k` of `n` sits at angle `2πk/n` on the ring in the `z = 0` plane.
pub fn place_sensors(cfg: &McLinkConfig) -> Vec<Vec3> {
    let n = cfg.n_sensors;
    (0..n)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Vec3::new(cfg.ring_radius * phi.cos(), cfg.ring_radius * phi.sin(), 0.0)
        })
        .collect()
}

/// Receiver output: one count per sample instant, `sequence_length` rows of
/// `samples_per_bit` columns.
///
/// For an absorbing receiver entry `(i, j)` is the number of molecules
/// absorbed during sample interval `j` of bit `i`; for a passive receiver it
/// is the number inside the sphere at the end of that interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMatrix {
    pub sequence_length: usize,
    pub samples_per_bit: usize,
    pub mode: ReceiverMode,
    pub counts: Vec<u64>,
}

impl SampleMatrix {
    pub fn zeros(sequence_length: usize, samples_per_bit: usize, mode: ReceiverMode) -> Self {
        SampleMatrix {
            sequence_length,
            samples_per_bit,
            mode,
            counts: vec![0; sequence_length * samples_per_bit],
        }
    }

    pub fn get(&self, bit: usize, sample: usize) -> u64 {
        self.counts[bit * self.samples_per_bit + sample]
    }

    pub fn row(&self, bit: usize) -> &[u64] {
        let s = self.samples_per_bit;
        &self.counts[bit * s..(bit + 1) * s]
    }

    /// Detection statistic of bit `i`: sum of its samples.
    pub fn bit_total(&self, bit: usize) -> u64 {
        self.row(bit).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Molecule bookkeeping for one transmission.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Tally {
    pub emitted: u64,
    pub absorbed: u64,
    /// Handed to the first-passage sampler and scheduled to hit later.
    pub scheduled: u64,
    /// Handed to the first-passage sampler and never absorbed.
    pub escaped: u64,
    pub retired: u64,
}

/// Transmit one symbol sequence. In redundant mode every sensor sends
/// `symbols`; in independent mode sensor 0 sends `symbols` and the remaining
/// sensors send sequences drawn from `rng`.
pub fn transmit_sequence(
    symbols: &[u8],
    cfg: &McLinkConfig,
    rng: &mut RandomSource,
) -> Result<SampleMatrix> {
    if symbols.len() != cfg.sequence_length {
        return Err(SimError::parameter(
            "bits",
            format!(
                "sequence has {} symbols, sequence_length is {}",
                symbols.len(),
                cfg.sequence_length
            ),
        ));
    }
    let per_sensor = sensor_sequences(symbols, cfg, rng);
    transmit_frames(&per_sensor, cfg, rng)
}

fn sensor_sequences(symbols: &[u8], cfg: &McLinkConfig, rng: &mut RandomSource) -> Vec<Vec<u8>> {
    match cfg.sensor_mode {
        SensorMode::Redundant => vec![symbols.to_vec(); cfg.n_sensors],
        SensorMode::Independent => {
            let levels = cfg.levels() as u64;
            let mut seqs = Vec::with_capacity(cfg.n_sensors);
            seqs.push(symbols.to_vec());
            for _ in 1..cfg.n_sensors {
                seqs.push((0..symbols.len()).map(|_| rng.below(levels) as u8).collect());
            }
            seqs
        }
    }
}

/// Transmit one sequence per sensor and record the receiver samples.
pub fn transmit_frames(
    per_sensor: &[Vec<u8>],
    cfg: &McLinkConfig,
    rng: &mut RandomSource,
) -> Result<SampleMatrix> {
    let mut tally = Tally::default();
    run_transport(per_sensor, cfg, rng, &mut tally)
}

pub(crate) fn run_transport(
    per_sensor: &[Vec<u8>],
    cfg: &McLinkConfig,
    rng: &mut RandomSource,
    tally: &mut Tally,
) -> Result<SampleMatrix> {
    cfg.validate()?;
    if per_sensor.len() != cfg.n_sensors {
        return Err(SimError::parameter(
            "per_sensor",
            format!("{} sequences for {} sensors", per_sensor.len(), cfg.n_sensors),
        ));
    }
    let len = per_sensor[0].len();
    let max_level = (cfg.levels() - 1) as u8;
    for seq in per_sensor {
        if seq.len() != len {
            return Err(SimError::parameter("per_sensor", "sequences differ in length"));
        }
        if let Some(&bad) = seq.iter().find(|&&s| s > max_level) {
            return Err(SimError::parameter(
                "bits",
                format!("symbol {bad} exceeds the highest level {max_level}"),
            ));
        }
    }

    let sensors = place_sensors(cfg);
    let spb = cfg.samples_per_bit;
    let interval = cfg.sample_interval();
    let mut samples = SampleMatrix::zeros(len, spb, cfg.receiver_mode);
    let mut ens = ParticleEnsemble::new();

    for bit in 0..len {
        retire(&mut ens, bit, cfg.retire_after_bits, tally);
        for (pos, seq) in sensors.iter().zip(per_sensor) {
            let n = cfg.molecules_for(seq[bit]);
            ens.emit(*pos, n, bit as u32);
            tally.emitted += n;
        }
        for j in 0..spb {
            let bin = bit * spb + j;
            if ens.is_empty() {
                continue;
            }
            match cfg.receiver_mode {
                ReceiverMode::FullyAbsorbing => {
                    absorbing_interval(&mut ens, bin, interval, cfg, rng, &mut samples, tally)?;
                }
                ReceiverMode::Passive => {
                    // free diffusion has no boundary here, so one Gaussian
                    // jump per sample interval is exact
                    brownian_step(&mut ens, interval, cfg.diffusion_coeff, rng)?;
                    samples.counts[bin] = passive_count(&ens, cfg.receiver_radius);
                }
            }
            debug_assert_eq!(
                ens.len() as u64 + tally.absorbed + tally.scheduled + tally.escaped + tally.retired,
                tally.emitted
            );
        }
    }
    Ok(samples)
}

fn retire(ens: &mut ParticleEnsemble, bit: usize, after: usize, tally: &mut Tally) {
    if bit < after {
        return;
    }
    let cutoff = (bit - after) as u32;
    let mut n = 0;
    for (alive, &born) in ens.alive.iter_mut().zip(&ens.birth_bit) {
        if *alive && born <= cutoff {
            *alive = false;
            n += 1;
        }
    }
    if n > 0 {
        tally.retired += n;
        ens.compact();
    }
}

fn absorbing_interval(
    ens: &mut ParticleEnsemble,
    bin: usize,
    interval: f64,
    cfg: &McLinkConfig,
    rng: &mut RandomSource,
    samples: &mut SampleMatrix,
    tally: &mut Tally,
) -> Result<()> {
    let steps = cfg.steps_per_sample();
    let dt = interval / steps as f64;
    let sigma = (2.0 * cfg.diffusion_coeff * dt).sqrt();
    let a2 = cfg.receiver_radius * cfg.receiver_radius;
    let escape2 = cfg.escape_radius.map_or(f64::INFINITY, |r| r * r);
    let t0 = bin as f64 * interval;
    let n_bins = samples.counts.len();

    // Molecules are independent, so each one is walked through the whole
    // interval before the next; this is the same process as stepping the
    // ensemble in lockstep, with post-step absorption checks.
    let mut keep = 0;
    for idx in 0..ens.positions.len() {
        if !ens.alive[idx] {
            continue;
        }
        let mut p = ens.positions[idx];
        let born = ens.birth_bit[idx];
        let mut gone = false;
        for k in 0..steps {
            p.x += sigma * rng.standard_normal();
            p.y += sigma * rng.standard_normal();
            p.z += sigma * rng.standard_normal();
            let r2 = p.norm_squared();
            if r2 <= a2 {
                samples.counts[bin] += 1;
                tally.absorbed += 1;
                gone = true;
                break;
            }
            if r2 > escape2 {
                let now = t0 + (k + 1) as f64 * dt;
                let deadline = (born as usize + cfg.retire_after_bits) as f64 * cfg.bit_duration;
                match escape_hit_time(r2.sqrt(), now, deadline, cfg, rng) {
                    Some(t) => {
                        let target = ((t / interval).ceil() as usize).saturating_sub(1).max(bin);
                        if target < n_bins {
                            samples.counts[target] += 1;
                        }
                        tally.scheduled += 1;
                    }
                    None => tally.escaped += 1,
                }
                gone = true;
                break;
            }
        }
        if !gone {
            ens.positions[keep] = p;
            ens.birth_bit[keep] = born;
            keep += 1;
        }
    }
    ens.positions.truncate(keep);
    ens.birth_bit.truncate(keep);
    ens.alive.clear();
    ens.alive.resize(keep, true);
    Ok(())
}

/// A molecule beyond the escape radius finishes its walk analytically: the
/// first-passage law gives whether and when it reaches the receiver. Hits
/// after the molecule's retirement deadline are discarded.
fn escape_hit_time(
    rho: f64,
    now: f64,
    deadline: f64,
    cfg: &McLinkConfig,
    rng: &mut RandomSource,
) -> Option<f64> {
    sample_hit_time(cfg.receiver_radius, rho, cfg.diffusion_coeff, rng.uniform())
        .map(|tau| now + tau)
        .filter(|&t| t <= deadline)
}

/// Symbol decision on one per-bit total.
///
/// Decision boundaries sit at `(2s + 1)·threshold`, i.e. nearest level on a
/// grid of `2·threshold` molecules. With two levels this is plain on-off
/// keying: `1` iff `count >= threshold`.
#[inline]
pub(crate) fn decide(count: u64, threshold: u64, levels: usize) -> u8 {
    let top = (levels - 1) as u64;
    if threshold == 0 {
        return top as u8;
    }
    let crossed = if count < threshold {
        0
    } else {
        (count - threshold) / (2 * threshold) + 1
    };
    crossed.min(top) as u8
}

/// Decide every bit of `samples` from its summed count.
pub fn detect(samples: &SampleMatrix, threshold: u64, levels: usize) -> Vec<u8> {
    (0..samples.sequence_length)
        .map(|i| decide(samples.bit_total(i), threshold, levels))
        .collect()
}

/// Pick the detection threshold that maximizes the empirical mutual
/// information over pilot frames. Each pilot frame is a single isolated
/// symbol period; `pilot_frames` frames are sent per level.
///
/// Ties are broken by taking the median of all maximizing thresholds.
pub fn calibrate_threshold(cfg: &McLinkConfig, rng: &RandomSource) -> Result<u64> {
    cfg.validate()?;
    if cfg.molecules_per_impulse == 0 {
        log::warn!("molecules_per_impulse is 0; threshold calibration is degenerate, using 1");
        return Ok(1);
    }
    let levels = cfg.levels();
    let pilot_cfg = McLinkConfig {
        sequence_length: 1,
        ..cfg.clone()
    };
    let mut pilot: Vec<(u8, u64)> = Vec::with_capacity(levels * cfg.pilot_frames);
    for level in 0..levels as u8 {
        for f in 0..cfg.pilot_frames {
            let mut frame_rng = rng.child((level as usize * cfg.pilot_frames + f) as u64);
            let per_sensor: Vec<Vec<u8>> = (0..cfg.n_sensors)
                .map(|k| match cfg.sensor_mode {
                    SensorMode::Independent if k > 0 => vec![0],
                    _ => vec![level],
                })
                .collect();
            let samples = transmit_frames(&per_sensor, &pilot_cfg, &mut frame_rng)?;
            pilot.push((level, samples.bit_total(0)));
        }
    }
    Ok(best_threshold(&pilot, levels))
}

fn best_threshold(pilot: &[(u8, u64)], levels: usize) -> u64 {
    // decisions only change where t passes c / (2s + 1)
    let mut breaks: Vec<u64> = vec![1];
    for &(_, c) in pilot {
        for s in 0..levels as u64 - 1 {
            breaks.push(c / (2 * s + 1) + 1);
        }
    }
    breaks.sort_unstable();
    breaks.dedup();

    let score = |t: u64| {
        let mut stats = ChannelStats::new(levels);
        for &(x, c) in pilot {
            stats.record(x, decide(c, t, levels));
        }
        estimate_mi(&stats).unwrap_or(0.0)
    };
    let scores: Vec<f64> = breaks.iter().map(|&t| score(t)).collect();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // integer thresholds achieving the maximum, as [lo, hi) runs
    let mut runs: Vec<(u64, u64)> = Vec::new();
    for (k, &t) in breaks.iter().enumerate() {
        if scores[k] >= best - 1e-12 {
            let hi = breaks.get(k + 1).copied().unwrap_or(t + 1);
            runs.push((t, hi));
        }
    }
    let total: u64 = runs.iter().map(|(lo, hi)| hi - lo).sum();
    let mut rank = (total - 1) / 2;
    for (lo, hi) in runs {
        if rank < hi - lo {
            return lo + rank;
        }
        rank -= hi - lo;
    }
    1
}

/// Bit errors conditioned on the previous transmitted symbol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsiStats {
    pub errors_after_zero: u64,
    pub total_after_zero: u64,
    pub errors_after_nonzero: u64,
    pub total_after_nonzero: u64,
}

impl IsiStats {
    fn merge(self, o: IsiStats) -> IsiStats {
        IsiStats {
            errors_after_zero: self.errors_after_zero + o.errors_after_zero,
            total_after_zero: self.total_after_zero + o.total_after_zero,
            errors_after_nonzero: self.errors_after_nonzero + o.errors_after_nonzero,
            total_after_nonzero: self.total_after_nonzero + o.total_after_nonzero,
        }
    }

    pub fn ber_after_zero(&self) -> f64 {
        ratio(self.errors_after_zero, self.total_after_zero)
    }

    pub fn ber_after_nonzero(&self) -> f64 {
        ratio(self.errors_after_nonzero, self.total_after_nonzero)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Accumulated outcome of a Monte-Carlo run over random sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRunSummary {
    pub threshold: u64,
    pub stats: ChannelStats,
    pub isi: IsiStats,
    pub n_realizations: u64,
}

/// Send `n_realizations` uniformly random sequences and accumulate the joint
/// statistics of transmitted and detected symbols.
///
/// Realization `k` draws from `rng.child(k)`, so the result does not depend on
/// the rayon pool size.
pub fn simulate_link(cfg: &McLinkConfig, rng: &RandomSource) -> Result<McRunSummary> {
    cfg.validate()?;
    let threshold = calibrate_threshold(cfg, &rng.child(PILOT_STREAM))?;
    let levels = cfg.levels();
    let (stats, isi) = (0..cfg.n_realizations as u64)
        .into_par_iter()
        .map(|k| -> Result<(ChannelStats, IsiStats)> {
            let mut r = rng.child(k);
            let tx: Vec<u8> = (0..cfg.sequence_length)
                .map(|_| r.below(levels as u64) as u8)
                .collect();
            let samples = transmit_sequence(&tx, cfg, &mut r)?;
            let rx = detect(&samples, threshold, levels);
            let mut stats = ChannelStats::new(levels);
            stats.record_all(&tx, &rx);
            let mut isi = IsiStats::default();
            for i in 1..tx.len() {
                let err = (tx[i] != rx[i]) as u64;
                if tx[i - 1] == 0 {
                    isi.errors_after_zero += err;
                    isi.total_after_zero += 1;
                } else {
                    isi.errors_after_nonzero += err;
                    isi.total_after_nonzero += 1;
                }
            }
            Ok((stats, isi))
        })
        .try_reduce(
            || (ChannelStats::new(levels), IsiStats::default()),
            |a, b| Ok((a.0.merge(&b.0), a.1.merge(b.1))),
        )?;
    Ok(McRunSummary {
        threshold,
        stats,
        isi,
        n_realizations: cfg.n_realizations as u64,
    })
}

/// Information rate of the molecular hop: empirical mutual information per
/// symbol divided by the symbol duration.
pub fn mc_information_rate(cfg: &McLinkConfig, rng: &RandomSource) -> Result<RateResult> {
    let summary = simulate_link(cfg, rng)?;
    let mi = if summary.stats.total() == 0 {
        0.0
    } else {
        estimate_mi(&summary.stats)?
    };
    RateResult::new(
        Segment::Mc,
        mi / cfg.bit_duration,
        mi,
        Some(cfg.levels()),
        summary.n_realizations,
        config_digest(cfg),
        rng.master_seed(),
    )
}

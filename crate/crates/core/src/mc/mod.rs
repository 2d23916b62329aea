//! Molecular-communication hop.
//!
//! Nano-sensors on a ring release impulses of molecules that diffuse freely
//! towards a spherical receiver at the ring center. The receiver either
//! absorbs every molecule that enters it or passively counts the molecules
//! inside it at each sample instant.

mod analytic;
mod link;
mod particles;

use serde::{Deserialize, Serialize};

pub use analytic::{analytic_hit_fraction, sample_hit_time};
pub use link::{
    calibrate_threshold, detect, mc_information_rate, place_sensors, simulate_link,
    transmit_frames, transmit_sequence, IsiStats, McRunSummary, SampleMatrix,
};
pub use particles::{
    absorb, brownian_step, passive_count, simulate_absorption_times, AbsorptionTimes,
    ParticleEnsemble,
};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    FullyAbsorbing,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Ook,
    Csk,
}

/// How the sensors share the transmitted sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorMode {
    /// Every sensor sends the same alert sequence.
    Redundant,
    /// Sensor 0 carries the observed sequence; the others send independent
    /// random sequences and act as interferers.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McLinkConfig {
    pub n_sensors: usize,
    /// m
    pub ring_radius: f64,
    pub molecules_per_impulse: u64,
    /// m²/s
    pub diffusion_coeff: f64,
    /// s
    pub bit_duration: f64,
    pub samples_per_bit: usize,
    pub sequence_length: usize,
    pub n_realizations: usize,
    /// m
    pub receiver_radius: f64,
    pub receiver_mode: ReceiverMode,
    pub modulation: Modulation,
    pub csk_levels: usize,
    /// Euler step of the absorbing-receiver simulation, s.
    pub time_step: f64,
    pub sensor_mode: SensorMode,
    /// Molecules older than this many bit periods are dropped.
    pub retire_after_bits: usize,
    /// Distance from the receiver center beyond which a molecule's remaining
    /// path is resolved with the exact first-passage law instead of further
    /// Euler steps. `None` steps every molecule until absorption or retirement.
    pub escape_radius: Option<f64>,
    /// Frames per symbol level used to calibrate the detection threshold.
    pub pilot_frames: usize,
}

impl Default for McLinkConfig {
    fn default() -> Self {
        McLinkConfig {
            n_sensors: 5,
            ring_radius: 45e-9,
            molecules_per_impulse: 10_000,
            diffusion_coeff: 4.365e-10,
            bit_duration: 400e-6,
            samples_per_bit: 10,
            sequence_length: 50,
            n_realizations: 1_000,
            receiver_radius: 10e-9,
            receiver_mode: ReceiverMode::FullyAbsorbing,
            modulation: Modulation::Ook,
            csk_levels: 2,
            time_step: 1e-6,
            sensor_mode: SensorMode::Redundant,
            retire_after_bits: 10,
            escape_radius: Some(4.0 * 45e-9),
            pilot_frames: 64,
        }
    }
}

impl McLinkConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::parameter(name, format!("must be finite and > 0, got {v}")))
            }
        }
        if self.n_sensors == 0 {
            return Err(SimError::parameter("n_sensors", "at least one sensor is required"));
        }
        positive("ring_radius", self.ring_radius)?;
        positive("receiver_radius", self.receiver_radius)?;
        positive("diffusion_coeff", self.diffusion_coeff)?;
        positive("bit_duration", self.bit_duration)?;
        positive("time_step", self.time_step)?;
        if self.receiver_radius >= self.ring_radius {
            return Err(SimError::parameter(
                "receiver_radius",
                format!(
                    "receiver_radius ({} m) must be smaller than ring_radius ({} m)",
                    self.receiver_radius, self.ring_radius
                ),
            ));
        }
        if self.samples_per_bit == 0 {
            return Err(SimError::parameter("samples_per_bit", "must be >= 1"));
        }
        if self.sequence_length == 0 {
            return Err(SimError::parameter("sequence_length", "must be >= 1"));
        }
        let interval = self.sample_interval();
        if self.time_step > interval * (1.0 + 1e-9) {
            return Err(SimError::parameter(
                "time_step",
                format!(
                    "time_step ({} s) must not exceed bit_duration / samples_per_bit ({interval} s)",
                    self.time_step
                ),
            ));
        }
        if self.modulation == Modulation::Csk && self.csk_levels < 2 {
            return Err(SimError::parameter("csk_levels", "CSK needs at least 2 levels"));
        }
        if self.csk_levels > 255 {
            return Err(SimError::parameter("csk_levels", "at most 255 levels are supported"));
        }
        if self.retire_after_bits == 0 {
            return Err(SimError::parameter("retire_after_bits", "must be >= 1"));
        }
        if let Some(r) = self.escape_radius {
            positive("escape_radius", r)?;
            if r <= self.ring_radius {
                return Err(SimError::parameter(
                    "escape_radius",
                    format!(
                        "escape_radius ({r} m) must exceed ring_radius ({} m)",
                        self.ring_radius
                    ),
                ));
            }
        }
        if self.pilot_frames == 0 {
            return Err(SimError::parameter("pilot_frames", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of symbol levels on the channel.
    pub fn levels(&self) -> usize {
        match self.modulation {
            Modulation::Ook => 2,
            Modulation::Csk => self.csk_levels,
        }
    }

    pub fn sample_interval(&self) -> f64 {
        self.bit_duration / self.samples_per_bit as f64
    }

    /// Euler steps per sample interval; the effective step is
    /// `sample_interval / steps_per_sample`, never larger than `time_step`.
    pub fn steps_per_sample(&self) -> usize {
        let ratio = self.sample_interval() / self.time_step;
        (ratio - 1e-9).ceil().max(1.0) as usize
    }

    /// Molecules released by one sensor for symbol `level`.
    pub fn molecules_for(&self, level: u8) -> u64 {
        let top = (self.levels() - 1) as f64;
        (self.molecules_per_impulse as f64 * level as f64 / top).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = McLinkConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.steps_per_sample(), 40);
        assert_eq!(cfg.molecules_for(1), 10_000);
        assert_eq!(cfg.molecules_for(0), 0);
    }

    #[test]
    fn receiver_must_fit_inside_ring() {
        let cfg = McLinkConfig {
            receiver_radius: 50e-9,
            ..McLinkConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("receiver_radius") && msg.contains("ring_radius"), "{msg}");
    }

    #[test]
    fn coarse_time_step_rejected() {
        let cfg = McLinkConfig {
            time_step: 50e-6,
            ..McLinkConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csk_levels_scale_emission() {
        let cfg = McLinkConfig {
            modulation: Modulation::Csk,
            csk_levels: 4,
            molecules_per_impulse: 900,
            ..McLinkConfig::default()
        };
        let counts: Vec<u64> = (0..4).map(|l| cfg.molecules_for(l)).collect();
        assert_eq!(counts, vec![0, 300, 600, 900]);
    }
}

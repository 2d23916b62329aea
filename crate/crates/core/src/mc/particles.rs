use crate::error::{Result, SimError};
use crate::rng::RandomSource;
use crate::vec3::Vec3;

/// Free molecules in the arena. The receiver sits at the origin.
#[derive(Debug, Clone, Default)]
pub struct ParticleEnsemble {
    pub positions: Vec<Vec3>,
    /// Bit period in which each molecule was released.
    pub birth_bit: Vec<u32>,
    pub alive: Vec<bool>,
}

impl ParticleEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        ParticleEnsemble {
            positions: Vec::with_capacity(n),
            birth_bit: Vec::with_capacity(n),
            alive: Vec::with_capacity(n),
        }
    }

    /// Release `count` molecules at `at`.
    pub fn emit(&mut self, at: Vec3, count: u64, birth_bit: u32) {
        let n = count as usize;
        self.positions.extend(std::iter::repeat_n(at, n));
        self.birth_bit.extend(std::iter::repeat_n(birth_bit, n));
        self.alive.extend(std::iter::repeat_n(true, n));
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Drop dead molecules from storage. Order of survivors is preserved.
    pub fn compact(&mut self) {
        let mut w = 0;
        for r in 0..self.positions.len() {
            if self.alive[r] {
                self.positions[w] = self.positions[r];
                self.birth_bit[w] = self.birth_bit[r];
                w += 1;
            }
        }
        self.positions.truncate(w);
        self.birth_bit.truncate(w);
        self.alive.clear();
        self.alive.resize(w, true);
    }
}

/// Advance every live molecule by one free-diffusion step: each coordinate
/// gets an independent `N(0, 2·D·dt)` increment.
pub fn brownian_step(
    ensemble: &mut ParticleEnsemble,
    dt: f64,
    diffusion_coeff: f64,
    rng: &mut RandomSource,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(SimError::parameter("dt", format!("time step must be > 0, got {dt}")));
    }
    if !(diffusion_coeff >= 0.0) {
        return Err(SimError::parameter(
            "diffusion_coeff",
            format!("must be >= 0, got {diffusion_coeff}"),
        ));
    }
    let sigma = (2.0 * diffusion_coeff * dt).sqrt();
    if sigma == 0.0 {
        return Ok(());
    }
    for (p, &alive) in ensemble.positions.iter_mut().zip(&ensemble.alive) {
        if alive {
            p.x += sigma * rng.standard_normal();
            p.y += sigma * rng.standard_normal();
            p.z += sigma * rng.standard_normal();
        }
    }
    Ok(())
}

/// Fully absorbing receiver: every live molecule within `receiver_radius` of
/// the origin is removed. Returns how many were absorbed by this call.
pub fn absorb(ensemble: &mut ParticleEnsemble, receiver_radius: f64) -> u64 {
    let r2 = receiver_radius * receiver_radius;
    let mut absorbed = 0;
    for (p, alive) in ensemble.positions.iter().zip(ensemble.alive.iter_mut()) {
        if *alive && p.norm_squared() <= r2 {
            *alive = false;
            absorbed += 1;
        }
    }
    absorbed
}

/// Passive receiver: number of live molecules currently inside the sphere.
pub fn passive_count(ensemble: &ParticleEnsemble, receiver_radius: f64) -> u64 {
    let r2 = receiver_radius * receiver_radius;
    ensemble
        .positions
        .iter()
        .zip(&ensemble.alive)
        .filter(|(p, &alive)| alive && p.norm_squared() <= r2)
        .count() as u64
}

/// Absorption times of a single impulse, as produced by the stepped simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTimes {
    /// Sorted absorption instants, s.
    pub times: Vec<f64>,
    pub n_released: u64,
}

impl AbsorptionTimes {
    /// Fraction of released molecules absorbed at or before `t`.
    pub fn fraction_by(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        k as f64 / self.n_released as f64
    }
}

/// Release `n_particles` molecules at distance `release_distance` from a fully
/// absorbing sphere of radius `receiver_radius` and step them with `dt` until
/// `horizon`, checking absorption after each step.
pub fn simulate_absorption_times(
    receiver_radius: f64,
    release_distance: f64,
    diffusion_coeff: f64,
    n_particles: u64,
    dt: f64,
    horizon: f64,
    rng: &mut RandomSource,
) -> Result<AbsorptionTimes> {
    if !(release_distance > receiver_radius) {
        return Err(SimError::parameter(
            "release_distance",
            "molecules must start outside the receiver",
        ));
    }
    if !(dt > 0.0) {
        return Err(SimError::parameter("dt", format!("time step must be > 0, got {dt}")));
    }
    if !(diffusion_coeff >= 0.0) {
        return Err(SimError::parameter("diffusion_coeff", "must be >= 0"));
    }
    let sigma = (2.0 * diffusion_coeff * dt).sqrt();
    let a2 = receiver_radius * receiver_radius;
    let n_steps = (horizon / dt).ceil() as u64;
    let mut times = Vec::new();
    // molecules are independent: walk each one to absorption or the horizon
    for _ in 0..n_particles {
        let mut p = Vec3::new(release_distance, 0.0, 0.0);
        for step in 1..=n_steps {
            p.x += sigma * rng.standard_normal();
            p.y += sigma * rng.standard_normal();
            p.z += sigma * rng.standard_normal();
            if p.norm_squared() <= a2 {
                times.push(step as f64 * dt);
                break;
            }
        }
    }
    times.sort_by(f64::total_cmp);
    Ok(AbsorptionTimes {
        times,
        n_released: n_particles,
    })
}

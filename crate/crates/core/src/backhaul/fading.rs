use nalgebra::{Complex, DMatrix};

use crate::error::{Result, SimError};
use crate::rng::RandomSource;
use crate::special::bessel_j0;

/// `n_rx × n_tx` complex baseband channel.
pub type ChannelMatrix = DMatrix<Complex<f64>>;

/// Lag-1 correlation of the Gauss-Markov fading process, `J0(2π·fd)`.
pub fn doppler_correlation(fd_norm: f64) -> f64 {
    bessel_j0(2.0 * std::f64::consts::PI * fd_norm)
}

/// Matrix of i.i.d. unit-variance circularly-symmetric complex Gaussians.
pub fn cscg_matrix(n_rx: usize, n_tx: usize, rng: &mut RandomSource) -> ChannelMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n_rx, n_tx, |_, _| {
        Complex::new(s * rng.standard_normal(), s * rng.standard_normal())
    })
}

/// First-order Gauss-Markov Rayleigh fading,
/// `H[t] = ρ·H[t−1] + √(1−ρ²)·W[t]`, started from the stationary law.
#[derive(Debug, Clone)]
pub struct GaussMarkovChannel {
    rho: f64,
    innovation: f64,
    shape: (usize, usize),
    state: Option<ChannelMatrix>,
    rng: RandomSource,
}

impl GaussMarkovChannel {
    pub fn new(shape: (usize, usize), fd_norm: f64, rng: RandomSource) -> Result<Self> {
        if !(0.0..0.5).contains(&fd_norm) {
            return Err(SimError::parameter(
                "fd_norm",
                format!("normalized Doppler must lie in [0, 0.5), got {fd_norm}"),
            ));
        }
        let rho = doppler_correlation(fd_norm);
        Ok(GaussMarkovChannel {
            rho,
            innovation: (1.0 - rho * rho).max(0.0).sqrt(),
            shape,
            state: None,
            rng,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Iterator for GaussMarkovChannel {
    type Item = ChannelMatrix;

    fn next(&mut self) -> Option<ChannelMatrix> {
        let next = gm_step(self.state.take(), self.rho, self.innovation, self.shape, &mut self.rng);
        self.state = Some(next.clone());
        Some(next)
    }
}

fn gm_step(
    prev: Option<ChannelMatrix>,
    rho: f64,
    innovation: f64,
    (r, c): (usize, usize),
    rng: &mut RandomSource,
) -> ChannelMatrix {
    match prev {
        None => cscg_matrix(r, c, rng),
        Some(prev) if innovation == 0.0 => prev,
        Some(prev) => {
            let w = cscg_matrix(r, c, rng);
            prev * Complex::from(rho) + w * Complex::from(innovation)
        }
    }
}

/// `n` consecutive matrices of one Gauss-Markov chain.
pub fn rayleigh_sequence(
    shape: (usize, usize),
    fd_norm: f64,
    n: usize,
    rng: &mut RandomSource,
) -> Result<Vec<ChannelMatrix>> {
    if n == 0 {
        return Err(SimError::parameter("n", "at least one sample is required"));
    }
    let chain = GaussMarkovChannel::new(shape, fd_norm, rng.clone())?;
    let mut out: Vec<ChannelMatrix> = Vec::with_capacity(n);
    for _ in 0..n {
        let next = gm_step(out.last().cloned(), chain.rho, chain.innovation, shape, rng);
        out.push(next);
    }
    Ok(out)
}

//! Zero forcing, fading and ergodic rates against independent computations.

use nalgebra::{Complex, DMatrix, DVector};
use nanolink::backhaul::{
    cscg_matrix, doppler_correlation, hop_ergodic_rate, rayleigh_sequence, zf_detect, zf_equalize,
    BackhaulConfig, GaussMarkovChannel, Hop,
};
use nanolink::derive_stream;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

type C = Complex<f64>;

/// Noise amplification of ZF stream k is the squared norm of row k of the
/// pseudo-inverse, computed here through an SVD.
fn pinv_snr(h: &DMatrix<C>, snr: f64) -> Vec<f64> {
    let w = h.clone().pseudo_inverse(1e-300).unwrap();
    (0..h.ncols()).map(|k| snr / w.row(k).norm_squared()).collect()
}

#[test]
fn zf_snr_matches_pseudo_inverse() {
    let mut rng = derive_stream(100, 0);
    for trial in 0..100 {
        let n_tx = 1 + trial % 4;
        let n_rx = n_tx + rng.below((17 - n_tx) as u64) as usize;
        let h = cscg_matrix(n_rx, n_tx, &mut rng);
        let got = zf_detect(&h, 3.7).unwrap();
        let want = pinv_snr(&h, 3.7);
        for (g, w) in got.iter().zip(&want) {
            assert!(((g - w) / w).abs() < 1e-10, "{n_rx}x{n_tx}: {g} vs {w}");
        }
    }
}

#[test]
fn noiseless_zf_recovers_symbols() {
    let mut rng = derive_stream(101, 0);
    for trial in 0..100 {
        let n_tx = 1 + trial % 4;
        let n_rx = n_tx + rng.below((17 - n_tx) as u64) as usize;
        let h = cscg_matrix(n_rx, n_tx, &mut rng);
        // QPSK symbols
        let x = DVector::from_fn(n_tx, |_, _| C::new(2.0 * rng.bit() as f64 - 1.0, 2.0 * rng.bit() as f64 - 1.0));
        let x_hat = zf_equalize(&h, &(&h * &x)).unwrap();
        assert!((x_hat - &x).norm() / x.norm() < 1e-10);
    }
}

#[test]
fn eight_by_two_against_oracle() {
    let h = cscg_matrix(8, 2, &mut derive_stream(102, 0));
    let got = zf_detect(&h, 1.0).unwrap();
    for (g, w) in got.iter().zip(pinv_snr(&h, 1.0)) {
        assert!(((g - w) / w).abs() < 1e-10);
    }
}

#[test]
fn gauss_markov_lag_one_autocorrelation() {
    let n = 100_000;
    let seq = rayleigh_sequence((1, 1), 0.01, n, &mut derive_stream(103, 0)).unwrap();
    let h: Vec<C> = seq.iter().map(|m| m[(0, 0)]).collect();
    // the process is zero mean, so no mean is removed
    let num: f64 = h.windows(2).map(|w| (w[0].conj() * w[1]).re).sum();
    let den: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let rho_hat = num / den;
    let want = 0.999013283055915;
    assert!((doppler_correlation(0.01) - want).abs() < 1e-12);
    assert!((rho_hat - want).abs() <= 0.005, "{rho_hat}");
}

#[test]
fn gauss_markov_unit_variance_across_realizations() {
    // one chain's samples are correlated over ~10³ steps, so the variance is
    // measured across 10⁵ independent chains at a fixed step
    let n = 100_000u64;
    let step = 50;
    let mut power = 0.0;
    for k in 0..n {
        let h = GaussMarkovChannel::new((1, 1), 0.01, derive_stream(104, k))
            .unwrap()
            .nth(step)
            .unwrap();
        power += h[(0, 0)].norm_sqr();
    }
    let var = power / n as f64;
    assert!((var - 1.0).abs() <= 0.02, "{var}");
}

#[test]
fn hop1_rate_matches_independent_monte_carlo() {
    let cfg = BackhaulConfig::default();
    let lib = hop_ergodic_rate(&cfg, Hop::Hop1, 45.0, 1000.0, &derive_stream(105, 0)).unwrap();

    // E[log2(1 + γ‖h‖²)] for h with 16 i.i.d. unit CSCG entries
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
    let gamma = 10f64.powf(4.5);
    let n = 1_000_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let mut g = 0.0;
        for _ in 0..16 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g += 0.5 * (re * re + im * im);
        }
        acc += (1.0 + gamma * g).log2();
    }
    let oracle = 20e6 * acc / n as f64;
    assert!((lib.rate_bps / oracle - 1.0).abs() < 0.01, "{} vs {}", lib.rate_bps, oracle);
    assert!((oracle / 1e6 - 380.0).abs() < 10.0, "{oracle}");
}

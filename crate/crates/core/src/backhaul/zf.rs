use nalgebra::{Complex, DVector};

use super::fading::ChannelMatrix;
use crate::error::{Result, SimError};

/// Relative pivot below which the Gram matrix is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

fn gram_cholesky(h: &ChannelMatrix) -> Result<nalgebra::Cholesky<Complex<f64>, nalgebra::Dyn>> {
    let (n_rx, n_tx) = h.shape();
    if n_tx == 0 {
        return Err(SimError::parameter("H", "channel has no columns"));
    }
    if n_rx < n_tx {
        return Err(SimError::SingularChannel(format!(
            "{n_rx} receive antennas cannot separate {n_tx} streams"
        )));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SimError::parameter("H", "channel has non-finite entries"));
    }
    let gram = h.adjoint() * h;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| SimError::SingularChannel("HᴴH is not positive definite".into()))?;
    let l = chol.l_dirty();
    for k in 0..n_tx {
        let pivot = l[(k, k)].norm_sqr();
        if !(pivot > PIVOT_TOLERANCE * gram[(k, k)].re) {
            return Err(SimError::SingularChannel(format!("column {k} is linearly dependent")));
        }
    }
    Ok(chol)
}

/// Post-processing SNR of every stream under zero forcing,
/// `snr / [(HᴴH)⁻¹]_kk`.
pub fn zf_detect(h: &ChannelMatrix, snr_linear: f64) -> Result<Vec<f64>> {
    let inv = gram_cholesky(h)?.inverse();
    Ok((0..h.ncols()).map(|k| snr_linear / inv[(k, k)].re).collect())
}

/// The ZF combiner `(HᴴH)⁻¹Hᴴ`.
pub fn zf_combiner(h: &ChannelMatrix) -> Result<ChannelMatrix> {
    let chol = gram_cholesky(h)?;
    Ok(chol.solve(&h.adjoint()))
}

/// Apply the ZF combiner to a received vector.
pub fn zf_equalize(h: &ChannelMatrix, y: &DVector<Complex<f64>>) -> Result<DVector<Complex<f64>>> {
    if y.len() != h.nrows() {
        return Err(SimError::parameter(
            "y",
            format!("length {} does not match {} receive antennas", y.len(), h.nrows()),
        ));
    }
    Ok(zf_combiner(h)? * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backhaul::cscg_matrix;
    use nalgebra::DMatrix;
    use crate::rng::derive_stream;

    fn identity(n: usize) -> ChannelMatrix {
        DMatrix::identity(n, n)
    }

    #[test]
    fn identity_channel_keeps_snr() {
        let snr = zf_detect(&identity(4), 7.5).unwrap();
        assert!(snr.iter().all(|&s| (s - 7.5).abs() < 1e-12));
    }

    #[test]
    fn single_stream_is_matched_filter() {
        // ‖h‖² = 16
        let h = DMatrix::from_element(16, 1, Complex::new(0.6, 0.8));
        let snr = zf_detect(&h, 3.0).unwrap();
        assert!((snr[0] - 48.0).abs() < 1e-10);
    }

    #[test]
    fn dependent_columns_are_singular() {
        let mut rng = derive_stream(1, 0);
        let col = cscg_matrix(8, 1, &mut rng);
        let h = DMatrix::from_fn(8, 2, |r, _| col[(r, 0)]);
        assert!(matches!(zf_detect(&h, 1.0), Err(SimError::SingularChannel(_))));
        let wide = cscg_matrix(2, 3, &mut rng);
        assert!(matches!(zf_detect(&wide, 1.0), Err(SimError::SingularChannel(_))));
    }

    #[test]
    fn post_zf_snr_below_matched_filter() {
        let mut rng = derive_stream(2, 0);
        for _ in 0..50 {
            let h = cscg_matrix(8, 3, &mut rng);
            let snr = zf_detect(&h, 2.0).unwrap();
            for (k, s) in snr.iter().enumerate() {
                let mf = 2.0 * h.column(k).norm_squared();
                assert!(*s <= mf * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn combiner_inverts_channel() {
        let mut rng = derive_stream(3, 0);
        let h = cscg_matrix(6, 2, &mut rng);
        let w = zf_combiner(&h).unwrap();
        let eye = &w * &h;
        assert!((eye - identity(2)).norm() < 1e-12);
        assert!(zf_equalize(&h, &DVector::zeros(5)).is_err());
    }
}

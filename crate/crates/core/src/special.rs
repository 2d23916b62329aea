//! Special functions not covered by `statrs`.

/// Bessel function of the first kind, order zero.
///
/// Power series for `|x| <= 12`, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let mut p = 1.0;
        let mut q = -1.0 / (8.0 * x);
        // next terms of the P and Q series for nu = 0
        let z = 8.0 * x;
        p -= 9.0 / (2.0 * z * z);
        p += 9.0 * 25.0 * 49.0 / (24.0 * z.powi(4));
        q += 9.0 * 25.0 / (6.0 * z.powi(3));
        let chi = x - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        // values from Abramowitz & Stegun table 9.1
        let table = [
            (0.0, 1.0),
            (1.0, 0.765_197_686_557_966_6),
            (2.0, 0.223_890_779_141_235_67),
            (2.404_825_557_695_773, 0.0),
            (5.0, -0.177_596_771_314_338_3),
            (10.0, -0.245_935_764_451_348_3),
            (15.0, -0.014_224_472_826_780_773),
            (20.0, 0.167_024_664_340_583_1),
        ];
        for (x, want) in table {
            let got = bessel_j0(x);
            assert!((got - want).abs() < 1e-6, "J0({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn j0_at_normalized_doppler() {
        let rho = bessel_j0(2.0 * std::f64::consts::PI * 0.01);
        assert!((rho - 0.999_013_283_055_915).abs() < 1e-12);
    }
}

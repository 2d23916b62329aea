use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Result, SimError};

/// Probability that a molecule released at distance `r` from the center of a
/// fully absorbing sphere of radius `a` has been absorbed by time `t`:
///
/// `F(t) = (a / r) · erfc((r − a) / (2 √(D t)))`
pub fn analytic_hit_fraction(a: f64, r: f64, d: f64, t: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(SimError::parameter("a", format!("receiver radius must be > 0, got {a}")));
    }
    if !(r >= a) {
        return Err(SimError::parameter(
            "r",
            format!("release distance {r} must be >= receiver radius {a}"),
        ));
    }
    if !(d > 0.0) || !(t >= 0.0) {
        return Err(SimError::parameter("D, t", "need D > 0 and t >= 0"));
    }
    if r == a {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(a / r * erfc((r - a) / (2.0 * (d * t).sqrt())))
}

/// Inverse-CDF draw of the absorption delay for a molecule currently at
/// distance `rho >= a`. `u` is uniform on `[0, 1)`. Returns `None` when the
/// molecule escapes to infinity, which happens with probability `1 − a/rho`.
pub fn sample_hit_time(a: f64, rho: f64, d: f64, u: f64) -> Option<f64> {
    let p_hit = a / rho;
    if u >= p_hit {
        return None;
    }
    let target = u / p_hit;
    if target <= 0.0 {
        return Some(0.0);
    }
    let z = erfc_inv(target);
    let half = (rho - a) / (2.0 * z);
    Some(half * half / d)
}

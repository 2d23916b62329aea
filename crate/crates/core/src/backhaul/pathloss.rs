use crate::error::{Result, SimError};

/// Distance at which the configured average SNR applies, m.
pub const REFERENCE_DISTANCE: f64 = 1000.0;

/// Single-slope UMi street-canyon LOS pathloss
/// `32.4 + 21·log10(d) + 20·log10(fc / 1 GHz)` with `d` in meters.
pub fn umi_pathloss_db(d: f64, fc: f64) -> Result<f64> {
    if !(d >= 10.0) {
        return Err(SimError::OutOfValidity {
            name: "d".into(),
            value: d,
            range: "d >= 10 m".into(),
        });
    }
    if !(fc > 0.0) {
        return Err(SimError::parameter("fc", format!("carrier must be > 0, got {fc}")));
    }
    Ok(32.4 + 21.0 * d.log10() + 20.0 * (fc / 1e9).log10())
}

//! Joint symbol counts and the plug-in mutual-information estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Joint count matrix over (transmitted symbol, detected symbol).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    levels: usize,
    counts: Vec<u64>,
}

impl ChannelStats {
    pub fn new(levels: usize) -> Self {
        assert!(levels >= 2, "a channel needs at least two symbols");
        ChannelStats {
            levels,
            counts: vec![0; levels * levels],
        }
    }

    /// Build from a row-major `levels × levels` matrix (rows are tx symbols).
    pub fn from_counts(levels: usize, counts: Vec<u64>) -> Result<Self> {
        if levels < 2 || counts.len() != levels * levels {
            return Err(SimError::parameter(
                "counts",
                format!("expected a {levels}x{levels} matrix, got {} entries", counts.len()),
            ));
        }
        Ok(ChannelStats { levels, counts })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn record(&mut self, tx: u8, rx: u8) {
        self.counts[tx as usize * self.levels + rx as usize] += 1;
    }

    pub fn record_all(&mut self, tx: &[u8], rx: &[u8]) {
        for (&t, &r) in tx.iter().zip(rx) {
            self.record(t, r);
        }
    }

    pub fn get(&self, tx: usize, rx: usize) -> u64 {
        self.counts[tx * self.levels + rx]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn errors(&self) -> u64 {
        let diag: u64 = (0..self.levels).map(|k| self.get(k, k)).sum();
        self.total() - diag
    }

    /// Symbol error rate; zero for an empty matrix.
    pub fn error_rate(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            self.errors() as f64 / n as f64
        }
    }

    /// Element-wise sum. Addition of counts is associative and commutative,
    /// so the merge order of parallel workers does not matter.
    pub fn merge(mut self, other: &ChannelStats) -> ChannelStats {
        assert_eq!(self.levels, other.levels, "merging stats of different alphabets");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }
}

/// Plug-in estimate of `I(X;Y)` in bits from an empirical joint distribution.
///
/// Uses `0·log 0 = 0` and clamps floating-point overshoot into
/// `[0, log2(levels)]`.
pub fn estimate_mi(stats: &ChannelStats) -> Result<f64> {
    let total = stats.total();
    if total == 0 {
        return Err(SimError::EmptyStats(
            "mutual information needs at least one observed symbol".into(),
        ));
    }
    let n = total as f64;
    let l = stats.levels;
    let px: Vec<f64> = (0..l)
        .map(|x| (0..l).map(|y| stats.get(x, y)).sum::<u64>() as f64 / n)
        .collect();
    let py: Vec<f64> = (0..l)
        .map(|y| (0..l).map(|x| stats.get(x, y)).sum::<u64>() as f64 / n)
        .collect();
    let mut mi = 0.0;
    for (x, &p_x) in px.iter().enumerate() {
        for (y, &p_y) in py.iter().enumerate() {
            let c = stats.get(x, y);
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * (pxy / (p_x * p_y)).log2();
        }
    }
    Ok(mi.clamp(0.0, (l as f64).log2()))
}

/// Expected upward bias of the plug-in estimator for independent X and Y:
/// `(levels - 1)² / (2 n ln 2)`.
pub fn independence_bias(levels: usize, n: u64) -> f64 {
    let k = (levels - 1) as f64;
    k * k / (2.0 * n as f64 * std::f64::consts::LN_2)
}

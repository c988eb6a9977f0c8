//! Tolerances used across the crate. Every numerical threshold lives here.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    /// Allowed deviation of a flag basis from orthonormality.
    pub orthonormality: f64,
    /// Smallest log singular/eigenvalue gap treated as a genuine gap.
    pub gap_floor: f64,
    /// Default margin `m` a certificate condition must exceed.
    pub membership_margin: f64,
    /// Entrywise tolerance when comparing floating group elements.
    pub float_compare: f64,
    /// Flags closer than this are merged in limit-set samples.
    pub dedup: f64,
    /// A margin below `-falsify` counts as a genuine failure.
    pub falsify: f64,
}

pub const POLICY: NumericPolicy = NumericPolicy {
    orthonormality: 1e-10,
    gap_floor: 1e-8,
    membership_margin: 1e-3,
    float_compare: 1e-9,
    dedup: 1e-6,
    falsify: 1e-9,
};

impl Default for NumericPolicy {
    fn default() -> Self {
        POLICY
    }
}

/// Rounds to 12 significant digits so serialized floats are reproducible.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let s = format!("{x:.11e}");
    s.parse().unwrap_or(x)
}

use crate::error::{Error, Result};

/// A pulse with instantaneous rise and exponential decay on top of a constant
/// baseline: `v(t) = B` for `t < 0`, `B + A·exp(−t/τ)` for `t ≥ 0`.
///
/// Rates are in photons per millisecond, `tau_ms` in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientSignalModel {
    pub amplitude_a: f64,
    pub baseline_b: f64,
    pub tau_ms: f64,
}

impl TransientSignalModel {
    pub fn new(amplitude_a: f64, baseline_b: f64, tau_ms: f64) -> Result<Self> {
        if !(amplitude_a.is_finite() && amplitude_a >= 0.0) {
            return Err(Error::Validation(format!("amplitude must be >= 0, got {amplitude_a}")));
        }
        if !(baseline_b.is_finite() && baseline_b >= 0.0) {
            return Err(Error::Validation(format!("baseline must be >= 0, got {baseline_b}")));
        }
        if !(tau_ms > 0.0) {
            return Err(Error::Validation(format!("tau must be positive, got {tau_ms}")));
        }
        Ok(Self {
            amplitude_a,
            baseline_b,
            tau_ms,
        })
    }

    pub fn value(&self, t_ms: f64) -> f64 {
        if t_ms < 0.0 {
            self.baseline_b
        } else {
            self.baseline_b + self.amplitude_a * (-t_ms / self.tau_ms).exp()
        }
    }
}

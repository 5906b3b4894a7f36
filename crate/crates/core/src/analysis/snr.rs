//! Shot-noise-limited SNR of a transient pulse versus exposure length.
//!
//! A window of length `T` starting at the pulse onset collects
//! `B·T + A·τ·(1 − e^{−T/τ})` photons on average. The signal is the pulse's
//! share of that count; the noise variance is the whole count, since the
//! baseline is Poisson too. Read noise is ignored.

use crate::error::{Error, Result};
use crate::signal::TransientSignalModel;

/// Mean photon count of the best-aligned window.
pub fn peak_window_count(model: &TransientSignalModel, t_e_ms: f64) -> f64 {
    model.baseline_b * t_e_ms + pulse_count(model, t_e_ms)
}

/// Pulse photons in the best-aligned window, above the baseline.
pub fn pulse_count(model: &TransientSignalModel, t_e_ms: f64) -> f64 {
    model.amplitude_a * model.tau_ms * -(-t_e_ms / model.tau_ms).exp_m1()
}

/// `S²/(S + B·T)` with `S` the pulse count.
pub fn snr(model: &TransientSignalModel, t_e_ms: f64) -> f64 {
    let s = pulse_count(model, t_e_ms);
    let total = s + model.baseline_b * t_e_ms;
    if total == 0.0 {
        0.0
    } else {
        s * s / total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    pub exposures_ms: Vec<f64>,
    pub snr: Vec<f64>,
    pub argmax_ms: f64,
}

impl SnrCurve {
    pub fn argmax_index(&self) -> usize {
        self.exposures_ms.iter().position(|&t| t == self.argmax_ms).unwrap_or(0)
    }

    /// Curve scaled so its maximum is 100.
    pub fn normalized_percent(&self) -> Vec<f64> {
        let max = self.snr.iter().cloned().fold(0.0, f64::max);
        self.snr.iter().map(|v| if max > 0.0 { 100.0 * v / max } else { 0.0 }).collect()
    }

    /// `t_e_ms,snr,is_argmax` rows.
    pub fn to_csv(&self) -> String {
        let idx = self.argmax_index();
        let mut out = String::from("t_e_ms,snr,is_argmax\n");
        for (i, (t, s)) in self.exposures_ms.iter().zip(&self.snr).enumerate() {
            out.push_str(&format!("{t},{s},{}\n", u8::from(i == idx)));
        }
        out
    }
}

fn check_model(model: &TransientSignalModel) -> Result<()> {
    if model.amplitude_a == 0.0 && model.baseline_b == 0.0 {
        return Err(Error::Degenerate("A and B are both zero".into()));
    }
    Ok(())
}

pub fn snr_curve(model: &TransientSignalModel, exposures_ms: &[f64]) -> Result<SnrCurve> {
    check_model(model)?;
    if exposures_ms.is_empty() {
        return Err(Error::Validation("empty exposure grid".into()));
    }
    if exposures_ms[0] <= 0.0 || exposures_ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("exposure grid must be positive and ascending".into()));
    }
    let values: Vec<f64> = exposures_ms.iter().map(|&t| snr(model, t)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok(SnrCurve {
        exposures_ms: exposures_ms.to_vec(),
        argmax_ms: exposures_ms[best],
        snr: values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalExposure {
    pub t_e_ms: f64,
    pub snr: f64,
    /// The maximum sits on an interval end: SNR is monotone over the interval.
    pub at_boundary: bool,
}

/// Golden-section maximization of [`snr`] over `[t_min, t_max]`.
pub fn optimal_exposure(model: &TransientSignalModel, t_min: f64, t_max: f64, tol: f64) -> Result<OptimalExposure> {
    check_model(model)?;
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
        return Err(Error::Validation(format!("need 0 < t_min < t_max, got [{t_min}, {t_max}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| snr(model, t);
    let (mut a, mut b) = (t_min, t_max);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let (s, lo, hi) = (f(t), f(t_min), f(t_max));
    let at_boundary = t - t_min <= tol || t_max - t <= tol;
    Ok(if at_boundary && lo >= s.max(hi) {
        OptimalExposure { t_e_ms: t_min, snr: lo, at_boundary: true }
    } else if at_boundary && hi >= s {
        OptimalExposure { t_e_ms: t_max, snr: hi, at_boundary: true }
    } else {
        OptimalExposure { t_e_ms: t, snr: s, at_boundary: false }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: f64, b: f64, tau: f64) -> TransientSignalModel {
        TransientSignalModel::new(a, b, tau).unwrap()
    }

    fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
        let n = ((b - a) / step).round() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    }

    #[test]
    fn no_pulse_gives_zero_snr() {
        let c = snr_curve(&model(0.0, 1.0, 1.0), &grid(0.1, 5.0, 0.1)).unwrap();
        assert!(c.snr.iter().all(|&v| v == 0.0));
        assert!(snr_curve(&model(0.0, 0.0, 1.0), &[1.0]).is_err());
    }

    #[test]
    fn slow_pulse_limit_is_linear() {
        let m = model(10.0, 1.0, 1e6);
        for t in [0.5, 1.0, 4.0] {
            let expected = 100.0 * t / 11.0;
            assert!((snr(&m, t) - expected).abs() / expected < 1e-4);
        }
        let c = snr_curve(&m, &grid(0.1, 20.0, 0.1)).unwrap();
        assert_eq!(c.argmax_index(), c.snr.len() - 1);
    }

    #[test]
    fn fast_pulse_has_interior_peak() {
        let c = snr_curve(&model(10.0, 1.0, 0.6), &grid(0.1, 20.0, 0.01)).unwrap();
        let i = c.argmax_index();
        assert!(i > 0 && i < c.snr.len() - 1);
        assert!(c.to_csv().lines().filter(|l| l.ends_with(",1")).count() == 1);
        assert_eq!(c.normalized_percent()[i], 100.0);
    }

    #[test]
    fn golden_section_matches_fine_grid() {
        let m = model(10.0, 1.0, 0.6);
        let opt = optimal_exposure(&m, 0.1, 20.0, 1e-6).unwrap();
        let g = grid(0.1, 20.0, 1e-4);
        let c = snr_curve(&m, &g).unwrap();
        assert!(!opt.at_boundary);
        assert!((opt.t_e_ms - c.argmax_ms).abs() < 2e-4);
    }

    #[test]
    fn longer_decay_moves_optimum_later() {
        let opts: Vec<f64> = [0.6, 1.2, 2.4]
            .iter()
            .map(|&tau| optimal_exposure(&model(10.0, 1.0, tau), 0.01, 50.0, 1e-7).unwrap().t_e_ms)
            .collect();
        assert!(opts[0] < opts[1] && opts[1] < opts[2], "{opts:?}");
    }

    #[test]
    fn monotone_interval_is_flagged() {
        let opt = optimal_exposure(&model(10.0, 1.0, 1e6), 0.1, 5.0, 1e-6).unwrap();
        assert!(opt.at_boundary);
        assert_eq!(opt.t_e_ms, 5.0);
        let opt = optimal_exposure(&model(10.0, 1.0, 0.6), 10.0, 20.0, 1e-6).unwrap();
        assert!(opt.at_boundary);
        assert_eq!(opt.t_e_ms, 10.0);
    }

    #[test]
    fn grid_validation() {
        let m = model(1.0, 1.0, 1.0);
        assert!(snr_curve(&m, &[]).is_err());
        assert!(snr_curve(&m, &[1.0, 0.5]).is_err());
        assert!(snr_curve(&m, &[0.0, 0.5]).is_err());
        assert!(optimal_exposure(&m, 2.0, 1.0, 1e-3).is_err());
    }
}

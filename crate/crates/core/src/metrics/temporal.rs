//! Per-pixel time-series metrics: temporal contrast, full duration and step onset.

use std::ops::Range;

use crate::cube::VideoCube;
use crate::error::{Error, Result};

/// Piecewise-linear signal through `(time_ms, value)` points.
///
/// Times are non-decreasing; a repeated time encodes a vertical step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times_ms: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times_ms: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_ms.len() != values.len() || times_ms.is_empty() {
            return Err(Error::Validation("time series needs matching, non-empty arrays".into()));
        }
        if times_ms.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("time series times must be non-decreasing".into()));
        }
        if times_ms.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Validation("time series must be finite".into()));
        }
        Ok(Self { times_ms, values })
    }

    /// Points `(t, v)`.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())
    }

    /// One sample per tick, at `tick · tick_ms`.
    pub fn from_pixel(cube: &VideoCube, row: usize, col: usize) -> Self {
        let dt = cube.tick_ms();
        let values: Vec<f64> = cube.pixel(row, col).iter().map(|&v| v as f64).collect();
        let times_ms = (0..values.len()).map(|t| t as f64 * dt).collect();
        Self { times_ms, values }
    }

    /// Mean over pixels, e.g. a region of interest.
    pub fn from_region(cube: &VideoCube, pixels: &[(usize, usize)]) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::Validation("empty pixel region".into()));
        }
        let mut values = vec![0.0; cube.ticks()];
        for &(r, c) in pixels {
            for (acc, &v) in values.iter_mut().zip(cube.pixel(r, c)) {
                *acc += v as f64;
            }
        }
        let n = pixels.len() as f64;
        let dt = cube.tick_ms();
        Ok(Self {
            times_ms: (0..values.len()).map(|t| t as f64 * dt).collect(),
            values: values.into_iter().map(|v| v / n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times_ms(&self) -> &[f64] {
        &self.times_ms
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            times_ms: self.times_ms.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    fn window(&self, window: &Range<usize>) -> Result<Range<usize>> {
        if window.start >= window.end || window.end > self.len() {
            return Err(Error::Validation(format!(
                "window {}..{} invalid for {} samples",
                window.start,
                window.end,
                self.len()
            )));
        }
        Ok(window.clone())
    }
}

/// `(peak − trough)/(peak + trough)` over the sample window.
pub fn temporal_contrast(series: &TimeSeries, window: Range<usize>) -> Result<f64> {
    let w = series.window(&window)?;
    let vals = &series.values[w];
    if let Some(v) = vals.iter().find(|v| **v < 0.0) {
        return Err(Error::Validation(format!("negative sample {v}")));
    }
    let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let trough = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if peak + trough == 0.0 {
        return Err(Error::Undefined("temporal contrast of an all-zero window".into()));
    }
    Ok((peak - trough) / (peak + trough))
}

/// Time between the threshold crossings around the peak, in ms.
///
/// The threshold is `trough + frac·(peak − trough)` over the window. The
/// rising crossing is the last one before the peak, the falling crossing the
/// first one after it; both are linearly interpolated.
pub fn full_duration(series: &TimeSeries, window: Range<usize>, frac: f64) -> Result<f64> {
    let w = series.window(&window)?;
    let (t, v) = (&series.times_ms[w.clone()], &series.values[w]);
    let mut peak_i = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[peak_i] {
            peak_i = i;
        }
    }
    let trough = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let thr = trough + frac * (v[peak_i] - trough);
    let cross = |i: usize, j: usize| {
        let dv = v[j] - v[i];
        if dv == 0.0 {
            t[i]
        } else {
            t[i] + (thr - v[i]) / dv * (t[j] - t[i])
        }
    };
    let rise = (0..peak_i)
        .rev()
        .find(|&i| v[i] < thr)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::OpenSupport("no rising threshold crossing before the peak".into()))?;
    let fall = (peak_i + 1..v.len())
        .find(|&j| v[j] < thr)
        .map(|j| cross(j - 1, j))
        .ok_or_else(|| Error::OpenSupport("no falling threshold crossing after the peak".into()))?;
    Ok(fall - rise)
}

/// Time in ms at which a rising step first reaches `first + frac·(last − first)`,
/// with `first`/`last` the window's end samples; linearly interpolated.
pub fn onset_time(series: &TimeSeries, window: Range<usize>, frac: f64) -> Result<f64> {
    let w = series.window(&window)?;
    let (t, v) = (&series.times_ms[w.clone()], &series.values[w]);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if hi <= lo {
        return Err(Error::Undefined(format!("no rise in window ({lo} to {hi})")));
    }
    let thr = lo + frac * (hi - lo);
    let i = v.iter().position(|&x| x >= thr).expect("last sample reaches the threshold");
    if i == 0 || v[i] == v[i - 1] {
        return Ok(t[i]);
    }
    Ok(t[i - 1] + (thr - v[i - 1]) / (v[i] - v[i - 1]) * (t[i] - t[i - 1]))
}

/// Default threshold fraction of the peak for [`full_duration`].
pub const FD_FRACTION: f64 = 0.15;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contrast_examples() {
        let s = TimeSeries::from_points(&[(0.0, 0.1), (1.0, 0.3), (2.0, 0.2)]).unwrap();
        assert!((temporal_contrast(&s, 0..3).unwrap() - 0.5).abs() < 1e-12);
        let flat = TimeSeries::from_points(&[(0.0, 0.4), (1.0, 0.4)]).unwrap();
        assert_eq!(temporal_contrast(&flat, 0..2).unwrap(), 0.0);
        let zero = TimeSeries::from_points(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(temporal_contrast(&zero, 0..2), Err(Error::Undefined(_))));
        assert!(temporal_contrast(&s, 2..2).is_err());
        assert!((temporal_contrast(&s.scaled(3.5), 0..3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rectangular_pulse_width_is_exact() {
        let s = TimeSeries::from_points(&[(0.0, 0.0), (10.0, 0.0), (10.0, 1.0), (20.0, 1.0), (20.0, 0.0), (30.0, 0.0)]).unwrap();
        assert_eq!(full_duration(&s, 0..6, FD_FRACTION).unwrap(), 10.0);
    }

    #[test]
    fn triangular_pulse() {
        let s = TimeSeries::from_points(&[(0.0, 0.0), (10.0, 0.0), (15.0, 1.0), (20.0, 0.0), (25.0, 0.0)]).unwrap();
        assert!((full_duration(&s, 0..5, FD_FRACTION).unwrap() - 8.5).abs() < 1e-12);
        assert!((full_duration(&s.scaled(7.0), 0..5, FD_FRACTION).unwrap() - 8.5).abs() < 1e-12);
    }

    #[test]
    fn step_onset() {
        let s = TimeSeries::from_points(&[(0.0, 1.0), (1.0, 1.0), (2.0, 3.0), (3.0, 3.0)]).unwrap();
        assert!((onset_time(&s, 0..4, 0.25).unwrap() - 1.25).abs() < 1e-12);
        assert!((onset_time(&s, 0..4, 0.0).unwrap()).abs() < 1e-12);
        let falling = TimeSeries::from_points(&[(0.0, 2.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(onset_time(&falling, 0..2, 0.5), Err(Error::Undefined(_))));
    }

    #[test]
    fn open_support_is_an_error() {
        let s = TimeSeries::from_points(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]).unwrap();
        assert!(matches!(full_duration(&s, 0..3, FD_FRACTION), Err(Error::OpenSupport(_))));
    }

    #[test]
    fn wider_pulse_longer_duration() {
        let pulse = |w: f64| TimeSeries::from_points(&[(0.0, 0.0), (10.0, 0.0), (12.0, 1.0), (12.0 + w, 1.0), (14.0 + w, 0.0), (40.0, 0.0)]).unwrap();
        let mut last = 0.0;
        for w in [1.0, 2.0, 5.0, 9.0] {
            let fd = full_duration(&pulse(w), 0..6, FD_FRACTION).unwrap();
            assert!(fd > last);
            last = fd;
        }
    }

    #[test]
    fn pixel_series_uses_tick_duration() {
        let cube = VideoCube::from_fn(1, 1, 4, 2.0, |_, _, t| t as f32).unwrap();
        let s = TimeSeries::from_pixel(&cube, 0, 0);
        assert_eq!(s.times_ms(), &[0.0, 2.0, 4.0, 6.0]);
    }
}

//! Forward model: irradiance cube → pixel-wise measurement cube.
//!
//! The stages are normalization, per-window integration with hold
//! upsampling, shot and read noise, the camera response, and quantization.
//! [`sample`] chains them in that order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::camera::{CameraModel, SensorNoise};
use crate::cube::VideoCube;
use crate::error::{Error, Result};
use crate::pattern::{ExposureClass, SamplingPattern};

/// Pre-CRF exposures above this multiple of full well are capped before the
/// Poisson draw. The CRF clips everything above 1 anyway; the cap only bounds λ.
pub const SHOT_NOISE_INPUT_CAP: f64 = 2.0;

/// Below this mean the Poisson draw is exact (inverse transform); above it a
/// rounded Gaussian `N(λ, λ)` is used.
pub const POISSON_EXACT_LIMIT: f64 = 30.0;

/// One integration interval `[start, start + len)` in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// The last tick of the window, where its reading becomes available.
    pub fn anchor(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn contains(&self, tick: usize) -> bool {
        tick >= self.start && tick < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct PixelSchedule {
    windows: Vec<Window>,
    /// A window cut off by the end of the cube; never read out.
    trailing: Option<Window>,
}

/// Integration windows of every pixel over a `rows × cols × ticks` cube.
///
/// Only complete windows are integrated. Ticks before a pixel's first window
/// and inside a trailing partial window carry no reading.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureCube {
    rows: usize,
    cols: usize,
    ticks: usize,
    pixels: Vec<PixelSchedule>,
}

impl ExposureCube {
    /// Arbitrary per-pixel window lists, e.g. for coded-exposure comparisons.
    /// Windows must be non-empty, sorted, non-overlapping and inside the cube.
    pub fn from_windows(rows: usize, cols: usize, ticks: usize, windows: Vec<Vec<Window>>) -> Result<Self> {
        if windows.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} window lists for {rows}x{cols} pixels",
                windows.len()
            )));
        }
        let mut pixels = Vec::with_capacity(windows.len());
        for (i, list) in windows.into_iter().enumerate() {
            let mut prev_end = 0;
            for w in &list {
                if w.len == 0 || w.start < prev_end || w.end() > ticks {
                    return Err(Error::Validation(format!(
                        "pixel {i}: invalid window [{}, {})",
                        w.start,
                        w.end()
                    )));
                }
                prev_end = w.end();
            }
            pixels.push(PixelSchedule {
                windows: list,
                trailing: None,
            });
        }
        Ok(Self {
            rows,
            cols,
            ticks,
            pixels,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.ticks)
    }

    /// Complete windows of one pixel, in time order.
    pub fn windows(&self, row: usize, col: usize) -> &[Window] {
        &self.pixels[row * self.cols + col].windows
    }

    pub fn trailing_partial(&self, row: usize, col: usize) -> Option<Window> {
        self.pixels[row * self.cols + col].trailing
    }

    pub fn window_at(&self, row: usize, col: usize, tick: usize) -> Option<Window> {
        let ws = self.windows(row, col);
        let i = ws.partition_point(|w| w.end() <= tick);
        ws.get(i).copied().filter(|w| w.contains(tick))
    }

    /// True when `tick` lies in a complete (read-out) window.
    pub fn is_valid(&self, row: usize, col: usize, tick: usize) -> bool {
        self.window_at(row, col, tick).is_some()
    }

    /// Binary exposure indicator: the pixel is integrating during `tick`.
    pub fn indicator(&self, row: usize, col: usize, tick: usize) -> bool {
        self.is_valid(row, col, tick)
            || self
                .trailing_partial(row, col)
                .is_some_and(|w| tick >= w.start && tick < self.ticks)
    }

    /// Per-window values of a hold-upsampled cube, read at each window start.
    pub fn window_values(&self, cube: &VideoCube, row: usize, col: usize) -> Vec<f32> {
        self.windows(row, col).iter().map(|w| cube.get(row, col, w.start)).collect()
    }

    fn check_dims(&self, cube: &VideoCube) -> Result<()> {
        if cube.dims() != self.dims() {
            return Err(Error::Shape(format!(
                "cube {:?} vs exposure cube {:?}",
                cube.dims(),
                self.dims()
            )));
        }
        Ok(())
    }
}

/// Back-to-back windows for every pixel, each starting at its tile phase.
pub fn render_exposure_cube(pattern: &SamplingPattern, rows: usize, cols: usize, ticks: usize) -> Result<ExposureCube> {
    if rows == 0 || cols == 0 || rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::Tiling(format!(
            "{rows}x{cols} cannot be tiled by the 2x2 pattern"
        )));
    }
    if ticks < pattern.min_ticks() {
        return Err(Error::Config(format!(
            "{ticks} ticks is shorter than longest exposure plus largest phase ({})",
            pattern.min_ticks()
        )));
    }
    let mut pixels = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let entry = pattern.entry_at(r, c);
            let len = pattern.duration(entry.class);
            let mut windows = Vec::new();
            let mut start = entry.phase;
            while start + len <= ticks {
                windows.push(Window { start, len });
                start += len;
            }
            let trailing = (start < ticks).then_some(Window { start, len });
            pixels.push(PixelSchedule { windows, trailing });
        }
    }
    Ok(ExposureCube {
        rows,
        cols,
        ticks,
        pixels,
    })
}

/// Linear-interpolated percentile of unsorted data, `q ∈ [0, 1]`.
pub(crate) fn percentile(values: &[f32], q: f64) -> f64 {
    let mut sorted: Vec<f32> = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] as f64 + frac * (sorted[hi] as f64 - sorted[lo] as f64)
}

/// Scales by the 99th percentile and clips to [0, 1].
pub fn normalize_hdr(p_orig: &VideoCube) -> Result<VideoCube> {
    if let Some(v) = p_orig.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Validation(format!("negative irradiance {v}")));
    }
    let p99 = percentile(p_orig.data(), 0.99);
    if p99 <= 0.0 {
        return Err(Error::Degenerate("99th percentile is zero".into()));
    }
    p_orig.map(|v| (v as f64 / p99).clamp(0.0, 1.0) as f32)
}

/// Sums `p` over each complete window (unit gain per tick) and holds the sum
/// across the window's ticks. All other ticks are 0.
pub fn integrate(p: &VideoCube, e: &ExposureCube) -> Result<VideoCube> {
    e.check_dims(p)?;
    let (_, cols, ticks) = p.dims();
    let mut out = vec![0.0f32; p.len()];
    out.par_chunks_mut(ticks).enumerate().for_each(|(i, px_out)| {
        let (r, c) = (i / cols, i % cols);
        let px = p.pixel(r, c);
        for w in e.windows(r, c) {
            let sum: f64 = px[w.start..w.end()].iter().map(|&v| v as f64).sum();
            px_out[w.start..w.end()].fill(sum as f32);
        }
    });
    p.with_data(out)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG for sample `(row, col, tick)` under `seed`.
fn sample_rng(seed: u64, row: usize, col: usize, tick: usize) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for v in [row, col, tick] {
        h = splitmix64(h ^ v as u64);
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn poisson(rng: &mut impl Rng, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < POISSON_EXACT_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u32;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u > cdf && k < 1000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        k as f64
    } else {
        let z: f64 = rng.sample(StandardNormal);
        (lambda + z * lambda.sqrt()).round().max(0.0)
    }
}

fn noisy_value(x: f64, noise: &SensorNoise, seed: u64, row: usize, col: usize, tick: usize) -> f64 {
    let mut rng = sample_rng(seed, row, col, tick);
    let fw = noise.full_well_electrons;
    let electrons = poisson(&mut rng, x.min(SHOT_NOISE_INPUT_CAP) * fw);
    let thermal = if noise.read_noise_electrons > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        z * noise.read_noise_electrons
    } else {
        0.0
    };
    ((electrons + thermal) / fw).max(0.0)
}

fn check_non_negative(x: &VideoCube, what: &str) -> Result<()> {
    if let Some(v) = x.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Validation(format!("{what}: negative input {v}")));
    }
    Ok(())
}

/// Shot plus read noise, drawn independently for every sample from a stream
/// keyed by `(seed, row, col, tick)`. Without noise parameters the input is returned.
pub fn add_noise(x: &VideoCube, camera: &CameraModel, seed: u64) -> Result<VideoCube> {
    check_non_negative(x, "add_noise")?;
    let Some(noise) = camera.noise else {
        return Ok(x.clone());
    };
    let (_, cols, ticks) = x.dims();
    let mut out = x.data().to_vec();
    out.par_chunks_mut(ticks).enumerate().for_each(|(i, px)| {
        let (r, c) = (i / cols, i % cols);
        for (t, v) in px.iter_mut().enumerate() {
            *v = noisy_value(*v as f64, &noise, seed, r, c, t) as f32;
        }
    });
    x.with_data(out)
}

/// Noise for a hold-upsampled exposure cube: one draw per window, keyed by the
/// window's start tick, held across the window so readings stay constant.
pub fn add_window_noise(x: &VideoCube, e: &ExposureCube, camera: &CameraModel, seed: u64) -> Result<VideoCube> {
    e.check_dims(x)?;
    check_non_negative(x, "add_window_noise")?;
    let Some(noise) = camera.noise else {
        return Ok(x.clone());
    };
    let (_, cols, ticks) = x.dims();
    let mut out = x.data().to_vec();
    out.par_chunks_mut(ticks).enumerate().for_each(|(i, px)| {
        let (r, c) = (i / cols, i % cols);
        for w in e.windows(r, c) {
            let v = noisy_value(px[w.start] as f64, &noise, seed, r, c, w.start) as f32;
            px[w.start..w.end()].fill(v);
        }
    });
    x.with_data(out)
}

pub fn apply_crf(x: &VideoCube, camera: &CameraModel) -> Result<VideoCube> {
    check_non_negative(x, "apply_crf")?;
    x.map(|v| camera.crf.apply(v as f64) as f32)
}

pub fn invert_crf(y: &VideoCube, camera: &CameraModel) -> Result<VideoCube> {
    if let Some(v) = y.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Validation(format!("invert_crf: value {v} outside [0, 1]")));
    }
    y.map(|v| camera.crf.invert_unchecked(v as f64) as f32)
}

/// Rounds to the nearest of `2^bits` codes (ties away from zero) and rescales to [0, 1].
pub fn quantize_value(y: f64, camera: &CameraModel) -> f64 {
    let max = camera.max_code();
    (y.clamp(0.0, 1.0) * max).round() / max
}

pub fn quantize(y: &VideoCube, camera: &CameraModel) -> Result<VideoCube> {
    y.map(|v| quantize_value(v as f64, camera) as f32)
}

/// Full forward model `y_mea = Q(R(p ⊙ e + n))`.
pub fn sample(p: &VideoCube, pattern: &SamplingPattern, camera: &CameraModel, seed: u64) -> Result<VideoCube> {
    camera.validate()?;
    check_non_negative(p, "sample")?;
    let (rows, cols, ticks) = p.dims();
    let e = render_exposure_cube(pattern, rows, cols, ticks)?;
    let mut x = integrate(p, &e)?;
    if camera.noise.is_some() {
        x = add_window_noise(&x, &e, camera, seed)?;
    }
    let y = apply_crf(&x, camera)?;
    quantize(&y, camera)
}

/// Ground-truth LDR rendering `R(g·p)` of one exposure class, `g` its duration in ticks.
pub fn ldr_target(p: &VideoCube, class: ExposureClass, pattern: &SamplingPattern, camera: &CameraModel) -> Result<VideoCube> {
    check_non_negative(p, "ldr_target")?;
    let gain = pattern.duration(class) as f64;
    p.map(|v| camera.crf.apply(gain * v as f64) as f32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{ExposureClass::*, TileEntry};

    fn constant(rows: usize, cols: usize, ticks: usize, v: f32) -> VideoCube {
        VideoCube::filled(rows, cols, ticks, 1.0, v).unwrap()
    }

    #[test]
    fn mid_phase_one_windows() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let e = render_exposure_cube(&pattern, 2, 2, 16).unwrap();
        let mid = e.windows(0, 1);
        assert_eq!(mid[0], Window { start: 1, len: 4 });
        assert_eq!(mid[1], Window { start: 5, len: 4 });
        assert!(!e.is_valid(0, 1, 0));
        assert!(e.indicator(0, 1, 15));
    }

    #[test]
    fn window_counts_on_small_cube() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let e = render_exposure_cube(&pattern, 2, 2, 16).unwrap();
        assert_eq!(e.windows(0, 0).len(), 8);
        assert_eq!(e.windows(1, 1), &[Window { start: 3, len: 8 }]);
        assert_eq!(e.trailing_partial(1, 1), Some(Window { start: 11, len: 8 }));
        assert!(e.indicator(1, 1, 12) && !e.is_valid(1, 1, 12));
    }

    #[test]
    fn led_config_durations_in_ticks() {
        // 4/8/16 ms exposures at 2 ms per tick.
        let pattern = SamplingPattern::mpve(2.0).unwrap();
        let ms: Vec<f64> = [Short, Mid, Long]
            .iter()
            .map(|&c| pattern.duration(c) as f64 * pattern.tick_ms())
            .collect();
        assert_eq!(ms, vec![4.0, 8.0, 16.0]);
    }

    #[test]
    fn render_errors() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        assert!(matches!(render_exposure_cube(&pattern, 3, 2, 16), Err(Error::Tiling(_))));
        assert!(matches!(render_exposure_cube(&pattern, 2, 2, 10), Err(Error::Config(_))));
    }

    #[test]
    fn normalize_examples() {
        let ones = constant(2, 2, 2, 1.0);
        assert_eq!(normalize_hdr(&ones).unwrap(), ones);

        let ramp = VideoCube::from_fn(1, 1, 100, 1.0, |_, _, t| (t + 1) as f32).unwrap();
        let out = normalize_hdr(&ramp).unwrap();
        // Sorted-array oracle: position 0.99·99 = 98.01 between 99 and 100.
        let p99 = 99.0 + 0.01 * 1.0;
        for t in 0..100 {
            let expected = ((t + 1) as f64 / p99).min(1.0) as f32;
            assert_eq!(out.get(0, 0, t), expected);
        }
        assert_eq!(out.get(0, 0, 99), 1.0);

        let scaled = ramp.map(|v| v * 7.5).unwrap();
        let a = normalize_hdr(&scaled).unwrap();
        for (x, y) in a.data().iter().zip(out.data()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(matches!(normalize_hdr(&constant(1, 1, 4, 0.0)), Err(Error::Degenerate(_))));
        assert!(normalize_hdr(&constant(1, 1, 4, -1.0)).is_err());
    }

    #[test]
    fn integrate_constant_scene() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let p = constant(2, 2, 16, 0.2);
        let e = render_exposure_cube(&pattern, 2, 2, 16).unwrap();
        let x = integrate(&p, &e).unwrap();
        assert!((x.get(0, 0, 5) - 0.4).abs() < 1e-6);
        assert!((x.get(0, 1, 5) - 0.8).abs() < 1e-6);
        assert!((x.get(1, 1, 5) - 1.6).abs() < 1e-6);
        assert_eq!(x.get(1, 1, 0), 0.0);
    }

    #[test]
    fn integrate_impulse_short_pixel() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let p = VideoCube::from_fn(2, 2, 16, 1.0, |_, _, t| if t == 5 { 1.0 } else { 0.0 }).unwrap();
        let e = render_exposure_cube(&pattern, 2, 2, 16).unwrap();
        let x = integrate(&p, &e).unwrap();
        let series = x.pixel(0, 0);
        for (t, &v) in series.iter().enumerate() {
            assert_eq!(v, if t == 4 || t == 5 { 1.0 } else { 0.0 }, "tick {t}");
        }
    }

    #[test]
    fn integrate_matches_direct_loop_oracle() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = VideoCube::from_fn(4, 6, 24, 1.0, |_, _, _| rng.random::<f32>()).unwrap();
        let e = render_exposure_cube(&pattern, 4, 6, 24).unwrap();
        let x = integrate(&p, &e).unwrap();
        for r in 0..4 {
            for c in 0..6 {
                let entry = pattern.entry_at(r, c);
                let d = pattern.duration(entry.class);
                for t in 0..24 {
                    // Locate the window by arithmetic rather than through the exposure cube.
                    let expected = if t < entry.phase {
                        0.0
                    } else {
                        let k = (t - entry.phase) / d;
                        let start = entry.phase + k * d;
                        if start + d > 24 {
                            0.0
                        } else {
                            (start..start + d).map(|s| p.get(r, c, s) as f64).sum::<f64>()
                        }
                    };
                    assert!((x.get(r, c, t) as f64 - expected).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn zero_input_stays_zero_under_noise() {
        let cam = CameraModel {
            noise: Some(SensorNoise {
                full_well_electrons: 10_000.0,
                read_noise_electrons: 0.0,
            }),
            ..CameraModel::default()
        };
        let x = constant(2, 2, 8, 0.0);
        assert!(add_noise(&x, &cam, 3).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shot_noise_mean_matches_poisson_moments() {
        let cam = CameraModel {
            noise: Some(SensorNoise {
                full_well_electrons: 10_000.0,
                read_noise_electrons: 0.0,
            }),
            ..CameraModel::default()
        };
        let n = 100_000usize;
        let x = VideoCube::filled(1, 1, n, 1.0, 0.5).unwrap();
        let noisy = add_noise(&x, &cam, 42).unwrap();
        let mean: f64 = noisy.data().iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let bound = 3.0 * (5000f64.sqrt() / 10_000.0) / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < bound, "mean {mean} bound {bound}");
    }

    #[test]
    fn small_lambda_poisson_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let lambda = 3.5;
        let draws: Vec<f64> = (0..n).map(|_| poisson(&mut rng, lambda)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - lambda).abs() < 4.0 * (lambda / n as f64).sqrt());
        assert!((var / lambda - 1.0).abs() < 0.02);
    }

    #[test]
    fn noise_is_deterministic_and_order_independent() {
        let cam = CameraModel::default();
        let x = VideoCube::from_fn(4, 4, 8, 1.0, |r, c, t| (r + c + t) as f32 * 0.01).unwrap();
        let a = add_noise(&x, &cam, 9).unwrap();
        let b = add_noise(&x, &cam, 9).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        // A sub-cube sees the same per-sample streams only through its own indices,
        // so recompute one sample directly from its key.
        let direct = noisy_value(x.get(2, 3, 5) as f64, &cam.noise.unwrap(), 9, 2, 3, 5) as f32;
        assert_eq!(a.get(2, 3, 5), direct);
        assert_ne!(add_noise(&x, &cam, 10).unwrap(), a);
    }

    #[test]
    fn window_noise_is_constant_within_windows() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let p = constant(4, 4, 20, 0.1);
        let e = render_exposure_cube(&pattern, 4, 4, 20).unwrap();
        let x = integrate(&p, &e).unwrap();
        let n = add_window_noise(&x, &e, &CameraModel::default(), 1).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                for w in e.windows(r, c) {
                    let v = n.get(r, c, w.start);
                    assert!((w.start..w.end()).all(|t| n.get(r, c, t) == v));
                }
            }
        }
    }

    #[test]
    fn crf_stage_validation() {
        let cam = CameraModel::noiseless(1.0);
        assert!(apply_crf(&constant(1, 1, 1, -0.5), &cam).is_err());
        assert!(invert_crf(&constant(1, 1, 1, 1.5), &cam).is_err());
        let y = apply_crf(&constant(1, 1, 1, 2.4), &cam).unwrap();
        assert_eq!(y.get(0, 0, 0), 1.0);
    }

    #[test]
    fn quantize_examples() {
        let cam = CameraModel::default();
        assert_eq!(quantize_value(1.0, &cam), 1.0);
        assert_eq!(quantize_value(0.5, &cam), 512.0 / 1023.0);
        let y = VideoCube::from_fn(1, 1, 50, 1.0, |_, _, t| t as f32 / 49.0).unwrap();
        let q = quantize(&y, &cam).unwrap();
        assert_eq!(quantize(&q, &cam).unwrap(), q);
    }

    #[test]
    fn sample_constant_scene_noiseless() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let cam = CameraModel::noiseless(1.0);
        let y = sample(&constant(4, 4, 16, 0.2), &pattern, &cam, 0).unwrap();
        assert!((y.get(0, 1, 8) - 0.8).abs() < 1.0 / 2046.0);
        assert!((y.get(0, 0, 8) - 0.4).abs() < 1.0 / 2046.0);
        assert_eq!(y.get(1, 1, 8), 1.0);
    }

    #[test]
    fn sample_equals_manual_stage_chain() {
        let pattern = SamplingPattern::new(
            [
                [TileEntry::new(Long, 1), TileEntry::new(Short, 0)],
                [TileEntry::new(Mid, 3), TileEntry::new(Mid, 2)],
            ],
            4,
            1.0,
        )
        .unwrap();
        let cam = CameraModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = VideoCube::from_fn(6, 4, 20, 1.0, |_, _, _| rng.random::<f32>() * 0.3).unwrap();
        let e = render_exposure_cube(&pattern, 6, 4, 20).unwrap();
        let x = integrate(&p, &e).unwrap();
        let n = add_window_noise(&x, &e, &cam, 77).unwrap();
        let manual = quantize(&apply_crf(&n, &cam).unwrap(), &cam).unwrap();
        assert_eq!(sample(&p, &pattern, &cam, 77).unwrap(), manual);
    }

    #[test]
    fn hold_preserves_window_values() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = VideoCube::from_fn(2, 2, 24, 1.0, |_, _, _| rng.random::<f32>()).unwrap();
        let e = render_exposure_cube(&pattern, 2, 2, 24).unwrap();
        let x = integrate(&p, &e).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let direct: Vec<f32> = e
                    .windows(r, c)
                    .iter()
                    .map(|w| (w.start..w.end()).map(|t| p.get(r, c, t) as f64).sum::<f64>() as f32)
                    .collect();
                assert_eq!(e.window_values(&x, r, c), direct);
            }
        }
    }

    #[test]
    fn custom_windows_validated() {
        let ok = ExposureCube::from_windows(1, 1, 10, vec![vec![Window { start: 0, len: 1 }, Window { start: 5, len: 2 }]]);
        assert!(ok.is_ok());
        let overlap = ExposureCube::from_windows(1, 1, 10, vec![vec![Window { start: 0, len: 3 }, Window { start: 2, len: 2 }]]);
        assert!(overlap.is_err());
        let outside = ExposureCube::from_windows(1, 1, 10, vec![vec![Window { start: 9, len: 2 }]]);
        assert!(outside.is_err());
    }

    #[test]
    fn ldr_target_scales() {
        let pattern = SamplingPattern::mpve(1.0).unwrap();
        let cam = CameraModel::noiseless(1.0);
        let p = constant(2, 2, 2, 0.1);
        let high = ldr_target(&p, Long, &pattern, &cam).unwrap();
        assert!(high.data().iter().all(|&v| (v - 0.8).abs() < 1e-6));
    }
}

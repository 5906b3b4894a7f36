//! Classical reconstruction from pixel-wise measurements: the spatial box
//! filter baseline, per-class LDR interpolation, well-exposedness fusion and
//! μ-law tone mapping.
//!
//! Irradiance outputs are at the mid-exposure scale: a static scene `p` is
//! recovered as `4·p` with the default tile.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::cube::{Frame, VideoCube};
use crate::error::{Error, Result};
use crate::pattern::{ExposureClass, SamplingPattern};
use crate::sensor::{render_exposure_cube, ExposureCube};

/// Keeps the fusion denominator positive.
pub const FUSION_EPSILON: f64 = 1e-4;

/// Default μ for tone mapping.
pub const DEFAULT_MU: f64 = 5000.0;

/// Interpolated per-class videos: short (low), mid and long (high) exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrStack {
    pub low: VideoCube,
    pub mid: VideoCube,
    pub high: VideoCube,
    /// Window lengths in ticks of low, mid, high (2, 4, 8 by default).
    pub exposure_gains: [f64; 3],
    /// Gain of the reference (mid) exposure that fused output is scaled to.
    pub reference_gain: f64,
    /// Samples per class filled by holding the nearest window value because
    /// they lie before the first or after the last window end.
    pub held_samples: [usize; 3],
}

impl LdrStack {
    pub fn new(low: VideoCube, mid: VideoCube, high: VideoCube, exposure_gains: [f64; 3], reference_gain: f64) -> Result<Self> {
        low.ensure_same_dims(&mid, "LDR stack")?;
        low.ensure_same_dims(&high, "LDR stack")?;
        for c in [&low, &mid, &high] {
            if let Some(v) = c.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Validation(format!("LDR value {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            low,
            mid,
            high,
            exposure_gains,
            reference_gain,
            held_samples: [0; 3],
        })
    }

    pub fn get(&self, class: ExposureClass) -> &VideoCube {
        match class {
            ExposureClass::Short => &self.low,
            ExposureClass::Mid => &self.mid,
            ExposureClass::Long => &self.high,
        }
    }

    fn cubes(&self) -> [&VideoCube; 3] {
        [&self.low, &self.mid, &self.high]
    }
}

/// Box filter output plus the count of samples with no valid 3×3 neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxFilterOutput {
    pub cube: VideoCube,
    pub unrecoverable: usize,
}

fn exposure_for(y: &VideoCube, pattern: &SamplingPattern) -> Result<ExposureCube> {
    let (rows, cols, ticks) = y.dims();
    render_exposure_cube(pattern, rows, cols, ticks)
}

fn check_unit_range(y: &VideoCube) -> Result<()> {
    if let Some(v) = y.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Validation(format!("measurement {v} outside [0, 1]")));
    }
    Ok(())
}

/// Per-frame spatial baseline: each sample is converted to mid-scale
/// irradiance, saturated or unread samples are dropped, and every pixel takes
/// the mean of the valid samples in its 3×3 neighbourhood.
pub fn box_filter_reconstruct(y_mea: &VideoCube, pattern: &SamplingPattern, camera: &CameraModel) -> Result<VideoCube> {
    Ok(box_filter_detailed(y_mea, pattern, camera)?.cube)
}

pub fn box_filter_detailed(y_mea: &VideoCube, pattern: &SamplingPattern, camera: &CameraModel) -> Result<BoxFilterOutput> {
    check_unit_range(y_mea)?;
    let e = exposure_for(y_mea, pattern)?;
    let (rows, cols, ticks) = y_mea.dims();
    let sat = camera.saturation_threshold();
    let base = pattern.base_exposure_ticks() as f64;

    let frames: Vec<(Vec<f64>, usize)> = (0..ticks)
        .into_par_iter()
        .map(|t| {
            let mut value = vec![0.0; rows * cols];
            let mut valid = vec![false; rows * cols];
            for r in 0..rows {
                for c in 0..cols {
                    let y = y_mea.get(r, c, t) as f64;
                    if e.is_valid(r, c, t) && y < sat {
                        let i = r * cols + c;
                        value[i] = camera.crf.invert_unchecked(y) * base / pattern.duration_at(r, c) as f64;
                        valid[i] = true;
                    }
                }
            }
            let mut out = vec![0.0; rows * cols];
            let mut missing = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let (mut sum, mut n) = (0.0, 0usize);
                    for rr in r.saturating_sub(1)..(r + 2).min(rows) {
                        for cc in c.saturating_sub(1)..(c + 2).min(cols) {
                            if valid[rr * cols + cc] {
                                sum += value[rr * cols + cc];
                                n += 1;
                            }
                        }
                    }
                    if n > 0 {
                        out[r * cols + c] = sum / n as f64;
                    } else {
                        missing.push((r, c));
                    }
                }
            }
            for &(r, c) in &missing {
                out[r * cols + c] = nearest_valid(&value, &valid, rows, cols, r, c).unwrap_or(0.0);
            }
            (out, missing.len())
        })
        .collect();

    let mut data = vec![0.0f32; rows * cols * ticks];
    let mut unrecoverable = 0;
    for (t, (plane, missing)) in frames.iter().enumerate() {
        unrecoverable += missing;
        for (i, v) in plane.iter().enumerate() {
            data[i * ticks + t] = *v as f32;
        }
    }
    Ok(BoxFilterOutput {
        cube: y_mea.with_data(data)?,
        unrecoverable,
    })
}

/// Value of the closest valid pixel by Chebyshev distance; ties go to the
/// first in row-major order.
fn nearest_valid(value: &[f64], valid: &[bool], rows: usize, cols: usize, r: usize, c: usize) -> Option<f64> {
    for radius in 1..rows.max(cols) {
        let r0 = r.saturating_sub(radius);
        let r1 = (r + radius).min(rows - 1);
        let c0 = c.saturating_sub(radius);
        let c1 = (c + radius).min(cols - 1);
        for rr in r0..=r1 {
            for cc in c0..=c1 {
                let on_ring = rr.abs_diff(r) == radius || cc.abs_diff(c) == radius;
                if on_ring && valid[rr * cols + cc] {
                    return Some(value[rr * cols + cc]);
                }
            }
        }
    }
    None
}

/// Linear interpolation through `(anchor, value)` pairs, holding the end
/// values outside them. Returns the number of held ticks.
fn interpolate_series(anchors: &[(usize, f32)], out: &mut [f32]) -> usize {
    let Some(&(first_t, first_v)) = anchors.first() else {
        out.fill(0.0);
        return out.len();
    };
    let &(last_t, last_v) = anchors.last().unwrap();
    let mut held = 0;
    let mut seg = 0;
    for (t, o) in out.iter_mut().enumerate() {
        if t <= first_t {
            *o = first_v;
            held += usize::from(t < first_t);
        } else if t >= last_t {
            *o = last_v;
            held += usize::from(t > last_t);
        } else {
            while anchors[seg + 1].0 < t {
                seg += 1;
            }
            let (t0, v0) = anchors[seg];
            let (t1, v1) = anchors[seg + 1];
            *o = if t == t1 {
                v1
            } else {
                let w = (t - t0) as f64 / (t1 - t0) as f64;
                (v0 as f64 + w * (v1 as f64 - v0 as f64)) as f32
            };
        }
    }
    held
}

/// Bilinear lookup on the sub-lattice `(r0 + 2i, c0 + 2j)` at full-res `(r, c)`,
/// clamping at the borders. `lattice[i][j]` holds a tick series.
#[allow(clippy::too_many_arguments)]
fn bilinear_at(lattice: &[Vec<f32>], lat_cols: usize, lat_rows: usize, r0: usize, c0: usize, r: usize, c: usize, t: usize) -> f64 {
    let coord = |x: usize, x0: usize, n: usize| -> (usize, usize, f64) {
        let u = ((x as f64 - x0 as f64) / 2.0).clamp(0.0, (n - 1) as f64);
        let i0 = u.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, u - i0 as f64)
    };
    let (i0, i1, fu) = coord(r, r0, lat_rows);
    let (j0, j1, fv) = coord(c, c0, lat_cols);
    let at = |i: usize, j: usize| lattice[i * lat_cols + j][t] as f64;
    let top = at(i0, j0) * (1.0 - fv) + at(i0, j1) * fv;
    let bottom = at(i1, j0) * (1.0 - fv) + at(i1, j1) * fv;
    top * (1.0 - fu) + bottom * fu
}

fn interpolate_class(y_mea: &VideoCube, e: &ExposureCube, pattern: &SamplingPattern, class: ExposureClass) -> (VideoCube, usize) {
    let (rows, cols, ticks) = y_mea.dims();
    let slots = pattern.slots(class);
    if slots.is_empty() {
        return (VideoCube::zeros(rows, cols, ticks, y_mea.tick_ms()).unwrap(), rows * cols * ticks);
    }
    let (lat_rows, lat_cols) = (rows / 2, cols / 2);

    // Temporal interpolation at every native pixel of each slot.
    let mut held = 0;
    let mut lattices = Vec::with_capacity(slots.len());
    for &(r0, c0) in &slots {
        let series: Vec<(Vec<f32>, usize)> = (0..lat_rows * lat_cols)
            .into_par_iter()
            .map(|k| {
                let (r, c) = (r0 + 2 * (k / lat_cols), c0 + 2 * (k % lat_cols));
                let anchors: Vec<(usize, f32)> = e
                    .windows(r, c)
                    .iter()
                    .map(|w| (w.anchor(), y_mea.get(r, c, w.start)))
                    .collect();
                let mut out = vec![0.0f32; ticks];
                let h = interpolate_series(&anchors, &mut out);
                (out, h)
            })
            .collect();
        held += series.iter().map(|s| s.1).sum::<usize>();
        lattices.push(series.into_iter().map(|s| s.0).collect::<Vec<_>>());
    }

    // Spatial: native pixels pass through, others average the slot bilinears.
    let mut data = vec![0.0f32; rows * cols * ticks];
    data.par_chunks_mut(ticks).enumerate().for_each(|(i, px)| {
        let (r, c) = (i / cols, i % cols);
        if let Some(s) = slots.iter().position(|&(r0, c0)| r0 == r % 2 && c0 == c % 2) {
            let k = (r / 2) * lat_cols + c / 2;
            px.copy_from_slice(&lattices[s][k]);
            return;
        }
        for (t, v) in px.iter_mut().enumerate() {
            let sum: f64 = slots
                .iter()
                .zip(&lattices)
                .map(|(&(r0, c0), lat)| bilinear_at(lat, lat_cols, lat_rows, r0, c0, r, c, t))
                .sum();
            *v = (sum / slots.len() as f64).clamp(0.0, 1.0) as f32;
        }
    });
    (y_mea.with_data(data).unwrap(), held)
}

/// Per-class interpolation of the measurement cube to full resolution.
///
/// Each window's reading is anchored at its last tick. Native pixels are
/// interpolated linearly in time between anchors (holding outside them),
/// then each class's sub-lattices are spread bilinearly over the frame.
pub fn interpolate_ldr(y_mea: &VideoCube, pattern: &SamplingPattern) -> Result<LdrStack> {
    check_unit_range(y_mea)?;
    let e = exposure_for(y_mea, pattern)?;
    let mut cubes = Vec::with_capacity(3);
    let mut held = [0; 3];
    for class in ExposureClass::ALL {
        let (cube, h) = interpolate_class(y_mea, &e, pattern, class);
        held[class.index()] = h;
        cubes.push(cube);
    }
    let high = cubes.pop().unwrap();
    let mid = cubes.pop().unwrap();
    let low = cubes.pop().unwrap();
    let gains = ExposureClass::ALL.map(|c| pattern.duration(c) as f64);
    let mut stack = LdrStack::new(low, mid, high, gains, pattern.base_exposure_ticks() as f64)?;
    stack.held_samples = held;
    Ok(stack)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionWeights {
    /// `max(ε, 1 − |2y − 1|)`, zero for clipped samples unless all are clipped.
    #[default]
    Triangle,
    /// Equal weights: fusion becomes the plain mean of the aligned irradiances.
    Uniform,
    /// One class only: its inverted, gain-aligned reading, saturated or not.
    Only(ExposureClass),
}

/// Weighted merge of the LDR stack into one mid-scale irradiance video.
pub fn fuse_hdr(stack: &LdrStack, camera: &CameraModel) -> Result<VideoCube> {
    fuse_hdr_with(stack, camera, FusionWeights::Triangle)
}

pub fn fuse_hdr_with(stack: &LdrStack, camera: &CameraModel, weights: FusionWeights) -> Result<VideoCube> {
    let sat = camera.saturation_threshold();
    let cubes = stack.cubes();
    let scales = stack.exposure_gains.map(|g| stack.reference_gain / g);
    let n = stack.low.len();
    let mut data = vec![0.0f32; n];
    data.par_iter_mut().enumerate().for_each(|(i, out)| {
        let ys = cubes.map(|c| c.data()[i] as f64);
        let p = [0, 1, 2].map(|k| camera.crf.invert_unchecked(ys[k]) * scales[k]);
        let w = match weights {
            FusionWeights::Uniform => [1.0; 3],
            FusionWeights::Only(c) => {
                let mut w = [0.0; 3];
                w[c.index()] = 1.0;
                w
            }
            FusionWeights::Triangle => {
                if ys.iter().all(|&y| y >= sat) {
                    [FUSION_EPSILON; 3]
                } else {
                    ys.map(|y| if y >= sat { 0.0 } else { (1.0 - (2.0 * y - 1.0).abs()).max(FUSION_EPSILON) })
                }
            }
        };
        let wsum: f64 = w.iter().sum();
        *out = ((0..3).map(|k| w[k] * p[k]).sum::<f64>() / wsum) as f32;
    });
    stack.low.with_data(data)
}

/// `log(1 + μp)/log(1 + μ)`.
pub fn mu_law_tonemap(p_hat: &VideoCube, mu: f64) -> Result<VideoCube> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Validation(format!("mu must be positive, got {mu}")));
    }
    if let Some(v) = p_hat.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Validation(format!("negative irradiance {v}")));
    }
    let denom = mu.ln_1p();
    p_hat.map(|v| ((mu * v as f64).ln_1p() / denom) as f32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Box,
    Fused,
    /// Interpolated single-class video, for comparison with fusion.
    Single(ExposureClass),
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Method::Box),
            "fused" => Ok(Method::Fused),
            other => match other.parse::<ExposureClass>() {
                Ok(c) => Ok(Method::Single(c)),
                Err(_) => Err(Error::Usage(format!(
                    "unknown method `{other}` (expected box, fused, short, mid or long)"
                ))),
            },
        }
    }
}

pub fn reconstruct(y_mea: &VideoCube, pattern: &SamplingPattern, camera: &CameraModel, method: Method) -> Result<VideoCube> {
    match method {
        Method::Box => box_filter_reconstruct(y_mea, pattern, camera),
        Method::Fused => fuse_hdr(&interpolate_ldr(y_mea, pattern)?, camera),
        Method::Single(c) => fuse_hdr_with(&interpolate_ldr(y_mea, pattern)?, camera, FusionWeights::Only(c)),
    }
}

/// Writes an 8-bit grayscale PNG with value `round(255·clamp(v, 0, 1))`.
pub fn write_png_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let pixels: Vec<u8> = frame.data.iter().map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8).collect();
    let img = image::GrayImage::from_raw(frame.cols as u32, frame.rows as u32, pixels)
        .ok_or_else(|| Error::Shape("frame buffer does not match its dimensions".into()))?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

/// Exports ticks `[from, to)` as `<prefix>_<tick>.png` in `dir`, tone-mapped when `mu` is given.
pub fn export_png_frames(cube: &VideoCube, dir: impl AsRef<Path>, prefix: &str, ticks: std::ops::Range<usize>, mu: Option<f64>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mapped;
    let src = match mu {
        Some(mu) => {
            mapped = mu_law_tonemap(cube, mu)?;
            &mapped
        }
        None => cube,
    };
    if ticks.end > src.ticks() {
        return Err(Error::Validation(format!("tick range ends at {} but cube has {}", ticks.end, src.ticks())));
    }
    let mut paths = Vec::new();
    for t in ticks {
        let path = dir.join(format!("{prefix}_{t:05}.png"));
        write_png_frame(&src.frame(t), &path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pattern() -> SamplingPattern {
        SamplingPattern::mpve(1.0).unwrap()
    }

    fn constant(v: f32) -> VideoCube {
        VideoCube::filled(8, 8, 24, 1.0, v).unwrap()
    }

    #[test]
    fn box_filter_constant_scenes() {
        let cam = CameraModel::noiseless(1.0);
        for (p, expected) in [(0.1f32, 0.4f32), (0.2, 0.8)] {
            let y = sample(&constant(p), &pattern(), &cam, 0).unwrap();
            let out = box_filter_detailed(&y, &pattern(), &cam).unwrap();
            assert_eq!(out.unrecoverable, 0);
            for &v in out.cube.data() {
                assert!((v - expected).abs() < 4.0 / 1023.0, "{v} vs {expected}");
            }
        }
    }

    #[test]
    fn box_filter_matches_nine_point_oracle() {
        let cam = CameraModel::noiseless(1.0);
        let pat = pattern();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frame: Vec<f32> = (0..64).map(|_| rng.random::<f32>() * 0.2).collect();
        let p = VideoCube::from_fn(8, 8, 16, 1.0, |r, c, _| frame[r * 8 + c]).unwrap();
        let y = sample(&p, &pat, &cam, 0).unwrap();
        let out = box_filter_reconstruct(&y, &pat, &cam).unwrap();
        // Every class sits inside a complete window at this tick.
        let t = 8;
        for r in 0..8i64 {
            for c in 0..8i64 {
                let mut vals = Vec::new();
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if !(0..8).contains(&rr) || !(0..8).contains(&cc) {
                            continue;
                        }
                        let (rr, cc) = (rr as usize, cc as usize);
                        let yv = y.get(rr, cc, t) as f64;
                        // Class gains by tile position: short 2, mid 4, long 8.
                        let gain = match (rr % 2, cc % 2) {
                            (0, 0) => 2.0,
                            (1, 1) => 8.0,
                            _ => 4.0,
                        };
                        if yv < 1.0 - 1.0 / 1024.0 {
                            vals.push(yv * 4.0 / gain);
                        }
                    }
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert!((out.get(r as usize, c as usize, t) as f64 - mean).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn static_scene_interpolation_is_flat() {
        let cam = CameraModel::noiseless(1.0);
        let y = sample(&constant(0.05), &pattern(), &cam, 0).unwrap();
        let stack = interpolate_ldr(&y, &pattern()).unwrap();
        for (cube, expected) in [(&stack.low, 0.1f32), (&stack.mid, 0.2), (&stack.high, 0.4)] {
            for &v in cube.data() {
                assert!((v - expected).abs() < 1.0 / 1023.0);
            }
        }
        assert!(stack.held_samples.iter().all(|&h| h > 0));
    }

    #[test]
    fn interpolation_passes_through_native_samples() {
        let cam = CameraModel::noiseless(1.0);
        let pat = pattern();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = VideoCube::from_fn(8, 8, 24, 1.0, |_, _, _| rng.random::<f32>() * 0.1).unwrap();
        let y = sample(&p, &pat, &cam, 0).unwrap();
        let e = render_exposure_cube(&pat, 8, 8, 24).unwrap();
        let stack = interpolate_ldr(&y, &pat).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let class = pat.entry_at(r, c).class;
                for w in e.windows(r, c) {
                    assert_eq!(stack.get(class).get(r, c, w.anchor()), y.get(r, c, w.start));
                }
            }
        }
    }

    #[test]
    fn ramp_interpolation_tracks_window_integral() {
        let cam = CameraModel::noiseless(1.0);
        let pat = pattern();
        let alpha = 0.002f64;
        let p = VideoCube::from_fn(4, 4, 32, 1.0, |_, _, t| (alpha * t as f64) as f32).unwrap();
        let y = sample(&p, &pat, &cam, 0).unwrap();
        let stack = interpolate_ldr(&y, &pat).unwrap();
        // Short windows span two ticks; the integral of αs over ticks t−1, t is α(2t − 1).
        let bound = alpha * 4.0 + 1.0 / 1023.0;
        for t in 2..31 {
            let analytic = alpha * (2.0 * t as f64 - 1.0);
            let got = stack.low.get(0, 0, t) as f64;
            assert!((got - analytic).abs() <= bound, "t={t}: {got} vs {analytic}");
        }
    }

    #[test]
    fn fusion_examples() {
        let cam = CameraModel::noiseless(1.0);
        let gains = [2.0, 4.0, 8.0];
        let c = |v: f32| VideoCube::filled(2, 2, 2, 1.0, v).unwrap();
        let stack = LdrStack::new(c(0.2), c(0.4), c(0.8), gains, 4.0).unwrap();
        for &v in fuse_hdr(&stack, &cam).unwrap().data() {
            assert!((v - 0.4).abs() < 1e-6);
        }

        // Long class clipped: the result is the weighted low/mid mean.
        let stack = LdrStack::new(c(0.3), c(0.6), c(1.0), gains, 4.0).unwrap();
        let fused = fuse_hdr(&stack, &cam).unwrap().get(0, 0, 0) as f64;
        let (w_lo, w_mid) = (0.6, 0.8);
        let expected = (w_lo * 0.6 + w_mid * 0.6) / (w_lo + w_mid);
        assert!((fused - expected).abs() < 1e-6);
        assert!((fused - 0.6).abs() < 1e-3);

        let uniform = fuse_hdr_with(&stack, &cam, FusionWeights::Uniform).unwrap().get(0, 0, 0);
        assert!((uniform as f64 - (0.6 + 0.6 + 0.5) / 3.0).abs() < 1e-6);
    }

    #[test]
    fn all_clipped_falls_back_to_epsilon_weights() {
        let cam = CameraModel::noiseless(1.0);
        let c = VideoCube::filled(1, 1, 1, 1.0, 1.0).unwrap();
        let stack = LdrStack::new(c.clone(), c.clone(), c, [2.0, 4.0, 8.0], 4.0).unwrap();
        let v = fuse_hdr(&stack, &cam).unwrap().get(0, 0, 0) as f64;
        assert!((v - (2.0 + 1.0 + 0.5) / 3.0).abs() < 1e-6);
    }

    #[test]
    fn tonemap_examples() {
        let p = VideoCube::new(1, 1, 3, 1.0, vec![0.0, 1.0, 0.01]).unwrap();
        let l = mu_law_tonemap(&p, DEFAULT_MU).unwrap();
        assert_eq!(l.get(0, 0, 0), 0.0);
        assert!((l.get(0, 0, 1) - 1.0).abs() < 1e-7);
        let expected = 51f64.ln() / 5001f64.ln();
        assert!((l.get(0, 0, 2) as f64 - expected).abs() < 1e-6);
        assert!((expected - 0.4616).abs() < 1e-4);
        assert!(mu_law_tonemap(&VideoCube::filled(1, 1, 1, 1.0, -0.1).unwrap(), 5000.0).is_err());
        assert!(mu_law_tonemap(&p, 0.0).is_err());
    }

    #[test]
    fn methods_agree_on_constants() {
        let cam = CameraModel::noiseless(1.0);
        // 2p, 4p and 8p all land on 10-bit codes, so quantization is exact.
        let p = (100.0 / 2046.0) as f32;
        let y = sample(&constant(p), &pattern(), &cam, 0).unwrap();
        let a = reconstruct(&y, &pattern(), &cam, Method::Box).unwrap();
        let b = reconstruct(&y, &pattern(), &cam, Method::Fused).unwrap();
        let a0 = a.get(0, 0, 0);
        assert!(a.data().iter().all(|&v| v == a0));
        for (x, z) in a.data().iter().zip(b.data()) {
            assert!((x - z).abs() < 1e-6, "{x} {z}");
        }
        assert!(matches!("median".parse::<Method>(), Err(Error::Usage(_))));
    }

    #[test]
    fn png_export_values() {
        let dir = tempfile::tempdir().unwrap();
        let cube = VideoCube::new(1, 2, 1, 1.0, vec![0.5, 2.0]).unwrap();
        let paths = export_png_frames(&cube, dir.path(), "f", 0..1, None).unwrap();
        let img = image::open(&paths[0]).unwrap().to_luma8();
        assert_eq!(img.as_raw(), &vec![128u8, 255]);
    }
}

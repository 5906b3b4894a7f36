//! Simulation and analysis of a multi-phase varying exposure (MPVE) sensor.
//!
//! Each pixel integrates back-to-back exposure windows. Within a 2×2 tile, the
//! window lengths (short, mid, long) and start phases differ. The modules cover
//! the forward sensor model, spectral and SNR analysis, classical HDR
//! reconstruction, image-quality metrics, and synthetic scenes.
//!
//! ```
//! use mpve::{cube::VideoCube, pattern::SamplingPattern, camera::CameraModel, sensor};
//!
//! let scene = VideoCube::filled(4, 4, 16, 1.0, 0.1).unwrap();
//! let pattern = SamplingPattern::mpve(1.0).unwrap();
//! let y = sensor::sample(&scene, &pattern, &CameraModel::noiseless(1.0), 0).unwrap();
//! // The long pixel at (1, 1) integrates 8 ticks of 0.1.
//! assert!((y.get(1, 1, 10) - 0.8).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod camera;
pub mod config;
pub mod cube;
pub mod error;
pub mod metrics;
pub mod pattern;
pub mod report;
pub mod scenes;
pub mod sensor;
pub mod signal;
pub mod synthesis;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/video-cubes.md")]
    mod video_cubes {}
    #[doc = include_str!("../../../book/src/sensor.md")]
    mod sensor {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/snr.md")]
    mod snr {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/scenes.md")]
    mod scenes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

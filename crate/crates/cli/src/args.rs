use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mpve::analysis::parse_grid;
use mpve::scenes::{IngestFormat, SceneKindName};
use mpve::synthesis::Method;

const GRID_HELP: &str = "Grids use `start:stop:step`, inclusive of stop.";

#[derive(Debug, Parser)]
#[command(name = "mpve", version, about = "Multi-phase pixel-wise exposure simulation, reconstruction and analysis")]
#[command(after_help = GRID_HELP)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "MPVE_THREADS")]
    pub threads: Option<usize>,

    /// Run log path (default: next to the primary output).
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene or ingest an HDR frame sequence into a .vcube.
    GenScene(GenScene),
    /// Sample an irradiance cube through the pixel-wise exposure sensor.
    Simulate(Simulate),
    /// Reconstruct HDR video from a measurement cube.
    Reconstruct(Reconstruct),
    /// Image and time-domain metrics.
    Metrics(Metrics),
    /// Averaged sampling spectrum of the four exposure phases.
    AnalyzeSpectrum(AnalyzeSpectrum),
    /// SNR versus exposure for a transient pulse.
    AnalyzeSnr(AnalyzeSnr),
    /// Box PSF spectra and their tile average.
    AnalyzePsf(AnalyzePsf),
    /// Crop, augment and simulate training samples.
    MakeDataset(MakeDataset),
    /// Write cube frames as 8-bit PNGs.
    ExportPng(ExportPng),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Impulse,
    LedPair,
    RotatingLetter,
    SlantedEdge,
    HdrComposite,
}

impl From<KindArg> for SceneKindName {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Impulse => SceneKindName::Impulse,
            KindArg::LedPair => SceneKindName::LedPair,
            KindArg::RotatingLetter => SceneKindName::RotatingLetter,
            KindArg::SlantedEdge => SceneKindName::SlantedEdge,
            KindArg::HdrComposite => SceneKindName::HdrComposite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Pfm,
    Vcube,
}

impl From<FormatArg> for IngestFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Pfm => IngestFormat::Pfm,
            FormatArg::Vcube => IngestFormat::Vcube,
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["kind", "ingest"]))]
pub struct GenScene {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Directory of frames to ingest instead of rendering.
    #[arg(long, value_name = "DIR")]
    pub ingest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pfm", requires = "ingest")]
    pub format: FormatArg,
    /// Scale by the 99th percentile and clip to [0, 1].
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 128)]
    pub rows: usize,
    #[arg(long, default_value_t = 128)]
    pub cols: usize,
    #[arg(long, default_value_t = 64)]
    pub ticks: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tick_ms: f64,
    /// Kind-specific `key=value` parameter; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub params: Vec<(String, String)>,
    /// File of `key = value` scene parameters.
    #[arg(long, value_name = "FILE")]
    pub params_file: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensorArgs {
    /// Pattern file (default: the standard tile at the cube's tick).
    #[arg(long, value_name = "FILE")]
    pub pattern: Option<PathBuf>,
    /// Camera file (default: gamma 2.2, 10-bit, noisy).
    #[arg(long, value_name = "FILE")]
    pub camera: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub sensor: SensorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Reconstruct {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub sensor: SensorArgs,
    /// box, fused, short, mid or long.
    #[arg(long, default_value = "fused", value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
}

/// A named probe `NAME=ROW,COL[,RADIUS]`: the mean over a disk, or one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub row: usize,
    pub col: usize,
    pub radius: f64,
}

#[derive(Debug, Args)]
pub struct Metrics {
    #[arg(long)]
    pub input: PathBuf,
    /// Ground truth for PSNR/SSIM.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    pub psnr: bool,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    /// Mean frame SSIM.
    #[arg(long, requires = "reference")]
    pub ssim: bool,
    /// Temporal contrast per probe.
    #[arg(long)]
    pub tc: bool,
    /// Full duration per probe.
    #[arg(long)]
    pub fd: bool,
    /// Step onset time per probe.
    #[arg(long)]
    pub onset: bool,
    /// Threshold fraction for --fd and --onset.
    #[arg(long, default_value_t = mpve::metrics::FD_FRACTION)]
    pub frac: f64,
    #[arg(long = "probe", value_name = "NAME=ROW,COL[,RADIUS]", value_parser = parse_probe)]
    pub probes: Vec<Probe>,
    /// Tick window `start:end` (end exclusive) for time metrics.
    #[arg(long, value_parser = parse_range)]
    pub window: Option<(usize, usize)>,
    /// Slanted-edge MTF of one frame.
    #[arg(long)]
    pub edge: bool,
    #[arg(long, default_value_t = 0, requires = "edge")]
    pub tick: usize,
    /// `ROW,COL,ROWS,COLS` (default: whole frame).
    #[arg(long, value_parser = parse_roi, requires = "edge")]
    pub roi: Option<[usize; 4]>,
    #[arg(long, value_name = "FILE", requires = "edge")]
    pub mtf_csv: Option<PathBuf>,
    /// Report as `key=value` records.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = GRID_HELP)]
pub struct AnalyzeSpectrum {
    #[arg(long, default_value_t = 4.0)]
    pub te_ms: f64,
    /// Frequencies in kHz.
    #[arg(long, value_parser = parse_grid_arg)]
    pub grid: Grid,
    #[arg(long, default_value_t = 16)]
    pub replicas: usize,
    /// One phase's spectrum instead of the average.
    #[arg(long)]
    pub phase: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = GRID_HELP)]
pub struct AnalyzeSnr {
    /// Pulse amplitude.
    #[arg(long = "A")]
    pub a: f64,
    /// Baseline rate.
    #[arg(long = "B")]
    pub b: f64,
    #[arg(long)]
    pub tau_ms: f64,
    /// Exposure lengths in ms.
    #[arg(long, value_parser = parse_grid_arg)]
    pub grid: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(after_help = GRID_HELP)]
pub struct AnalyzePsf {
    /// Frequencies in cycles per base exposure.
    #[arg(long, value_parser = parse_grid_arg, default_value = "0:1:0.001")]
    pub grid: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeDataset {
    /// Source videos (.vcube).
    #[arg(long = "input", value_name = "FILE")]
    pub inputs: Vec<PathBuf>,
    /// Directories of frame sequences, one video each.
    #[arg(long = "ingest", value_name = "DIR")]
    pub ingest: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "pfm")]
    pub format: FormatArg,
    /// Tick of ingested PFM sequences.
    #[arg(long, default_value_t = 1.0)]
    pub tick_ms: f64,
    /// Scale each video by its 99th percentile and clip to [0, 1].
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub sensor: SensorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Crop size `ROWSxCOLSxTICKS`.
    #[arg(long, default_value = "128x128x8", value_parser = parse_size)]
    pub crop: (usize, usize, usize),
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    /// Add 90°, 180° and 270° rotations.
    #[arg(long)]
    pub augment: bool,
    /// 2×2 box downsampling before cropping.
    #[arg(long)]
    pub downsample: bool,
    #[arg(long)]
    pub overwrite: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportPng {
    #[arg(long)]
    pub input: PathBuf,
    /// Tick range `start:end` (end exclusive; default all).
    #[arg(long, value_parser = parse_range)]
    pub ticks: Option<(usize, usize)>,
    /// μ-law tone mapping strength.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value = "frame")]
    pub prefix: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("`{s}` is not KEY=VALUE"))?;
    if k.trim().is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: mpve::Error| e.to_string())
}

/// An ascending `start:stop:step` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: String,
    pub values: Vec<f64>,
}

fn parse_grid_arg(s: &str) -> Result<Grid, String> {
    let values = parse_grid(s).map_err(|e| e.to_string())?;
    Ok(Grid {
        spec: s.to_string(),
        values,
    })
}

fn numbers<T: std::str::FromStr>(s: &str, sep: char) -> Result<Vec<T>, String> {
    s.split(sep)
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad number `{p}` in `{s}`")))
        .collect()
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    match numbers::<usize>(s, ':')?.as_slice() {
        &[a, b] if a < b => Ok((a, b)),
        _ => Err(format!("`{s}` is not start:end with start < end")),
    }
}

fn parse_roi(s: &str) -> Result<[usize; 4], String> {
    numbers::<usize>(s, ',')?
        .try_into()
        .map_err(|_| format!("`{s}` is not ROW,COL,ROWS,COLS"))
}

fn parse_size(s: &str) -> Result<(usize, usize, usize), String> {
    match numbers::<usize>(s, 'x')?.as_slice() {
        &[r, c, t] if r > 0 && c > 0 && t > 0 => Ok((r, c, t)),
        _ => Err(format!("`{s}` is not ROWSxCOLSxTICKS")),
    }
}

fn parse_probe(s: &str) -> Result<Probe, String> {
    let (name, rest) = s.split_once('=').ok_or_else(|| format!("`{s}` is not NAME=ROW,COL[,RADIUS]"))?;
    let v = numbers::<f64>(rest, ',')?;
    let idx = |x: f64| {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(format!("`{x}` is not a pixel index"))
        }
    };
    let (row, col, radius) = match v.as_slice() {
        &[r, c] => (idx(r)?, idx(c)?, 0.0),
        &[r, c, rad] if rad >= 0.0 => (idx(r)?, idx(c)?, rad),
        _ => return Err(format!("`{s}` is not NAME=ROW,COL[,RADIUS]")),
    };
    Ok(Probe {
        name: name.to_string(),
        row,
        col,
        radius,
    })
}

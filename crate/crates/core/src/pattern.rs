//! Exposure classes and the 2×2 multi-phase varying exposure tile.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// Relative exposure length of a pixel. Durations are expressed against the
/// base exposure `T_E`: short is `T_E/2`, mid is `T_E`, long is `2·T_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExposureClass {
    Short,
    Mid,
    Long,
}

impl ExposureClass {
    pub const ALL: [ExposureClass; 3] = [ExposureClass::Short, ExposureClass::Mid, ExposureClass::Long];

    pub fn name(self) -> &'static str {
        match self {
            ExposureClass::Short => "short",
            ExposureClass::Mid => "mid",
            ExposureClass::Long => "long",
        }
    }

    /// Position in `ALL`, also the channel order of an LDR stack.
    pub fn index(self) -> usize {
        match self {
            ExposureClass::Short => 0,
            ExposureClass::Mid => 1,
            ExposureClass::Long => 2,
        }
    }

    pub fn duration_ticks(self, base_exposure_ticks: usize) -> usize {
        match self {
            ExposureClass::Short => base_exposure_ticks / 2,
            ExposureClass::Mid => base_exposure_ticks,
            ExposureClass::Long => base_exposure_ticks * 2,
        }
    }

    /// Exposure multiple when `T_E` spans four ticks (2, 4, 8).
    pub fn gain_label(self) -> u32 {
        match self {
            ExposureClass::Short => 2,
            ExposureClass::Mid => 4,
            ExposureClass::Long => 8,
        }
    }
}

impl fmt::Display for ExposureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExposureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "short" | "low" => Ok(ExposureClass::Short),
            "mid" | "medium" => Ok(ExposureClass::Mid),
            "long" | "high" => Ok(ExposureClass::Long),
            other => Err(Error::Config(format!("unknown exposure class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileEntry {
    pub class: ExposureClass,
    /// Start offset of the first integration window, in ticks.
    pub phase: usize,
}

impl TileEntry {
    pub const fn new(class: ExposureClass, phase: usize) -> Self {
        Self { class, phase }
    }
}

/// Per-pixel exposure assignment over a 2×2 tile, repeated across the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPattern {
    tile: [[TileEntry; 2]; 2],
    base_exposure_ticks: usize,
    tick_us: u32,
}

impl SamplingPattern {
    pub fn new(tile: [[TileEntry; 2]; 2], base_exposure_ticks: usize, tick_ms: f64) -> Result<Self> {
        if base_exposure_ticks < 4 || base_exposure_ticks % 4 != 0 {
            return Err(Error::Config(format!(
                "base exposure must be a positive multiple of 4 ticks, got {base_exposure_ticks}"
            )));
        }
        if !tick_ms.is_finite() || tick_ms <= 0.0 {
            return Err(Error::Config(format!("tick duration must be positive, got {tick_ms}")));
        }
        let tick_us = (tick_ms * 1000.0).round();
        if tick_us < 1.0 || tick_us > u32::MAX as f64 {
            return Err(Error::Config(format!("tick duration {tick_ms} ms out of range")));
        }
        let step = base_exposure_ticks / 4;
        let mut seen = Vec::with_capacity(4);
        for entry in tile.iter().flatten() {
            if entry.phase % step != 0 || entry.phase >= base_exposure_ticks {
                return Err(Error::Config(format!(
                    "phase {} is not one of the four T_E/4 offsets (step {step})",
                    entry.phase
                )));
            }
            if seen.contains(&entry.phase) {
                return Err(Error::Config(format!("duplicate tile phase {}", entry.phase)));
            }
            seen.push(entry.phase);
        }
        Ok(Self {
            tile,
            base_exposure_ticks,
            tick_us: tick_us as u32,
        })
    }

    /// Short, mid / mid, long with phases 0, 1 / 2, 3 ticks and `T_E` = 4 ticks.
    pub fn mpve(tick_ms: f64) -> Result<Self> {
        use ExposureClass::*;
        Self::new(
            [
                [TileEntry::new(Short, 0), TileEntry::new(Mid, 1)],
                [TileEntry::new(Mid, 2), TileEntry::new(Long, 3)],
            ],
            4,
            tick_ms,
        )
    }

    pub fn tile(&self) -> &[[TileEntry; 2]; 2] {
        &self.tile
    }

    pub fn base_exposure_ticks(&self) -> usize {
        self.base_exposure_ticks
    }

    pub fn tick_ms(&self) -> f64 {
        self.tick_us as f64 / 1000.0
    }

    pub fn tick_us(&self) -> u32 {
        self.tick_us
    }

    #[inline]
    pub fn entry_at(&self, row: usize, col: usize) -> TileEntry {
        self.tile[row % 2][col % 2]
    }

    #[inline]
    pub fn duration_at(&self, row: usize, col: usize) -> usize {
        self.entry_at(row, col).class.duration_ticks(self.base_exposure_ticks)
    }

    pub fn duration(&self, class: ExposureClass) -> usize {
        class.duration_ticks(self.base_exposure_ticks)
    }

    /// Slots `(row, col)` of the tile holding `class`.
    pub fn slots(&self, class: ExposureClass) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..2 {
            for c in 0..2 {
                if self.tile[r][c].class == class {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Classes present in the tile, in `ExposureClass::ALL` order.
    pub fn classes(&self) -> Vec<ExposureClass> {
        ExposureClass::ALL
            .into_iter()
            .filter(|&c| !self.slots(c).is_empty())
            .collect()
    }

    /// Smallest cube length holding at least one complete window for every pixel.
    pub fn min_ticks(&self) -> usize {
        let longest = self
            .tile
            .iter()
            .flatten()
            .map(|e| e.class.duration_ticks(self.base_exposure_ticks))
            .max()
            .unwrap_or(0);
        let latest = self.tile.iter().flatten().map(|e| e.phase).max().unwrap_or(0);
        longest + latest
    }

    /// The tile seen by a square cube rotated 90° counter-clockwise.
    pub fn rotated90(&self) -> Self {
        let t = &self.tile;
        Self {
            tile: [[t[0][1], t[1][1]], [t[0][0], t[1][0]]],
            ..self.clone()
        }
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let tile: Vec<String> = self
            .tile
            .iter()
            .flatten()
            .map(|e| format!("{}:{}", e.class, e.phase))
            .collect();
        kv.insert("tile", tile.join(" "));
        kv.insert("base_exposure_ticks", self.base_exposure_ticks);
        kv.insert("tick_us", self.tick_us);
        kv
    }

    /// Reads `tile = short:0 mid:1 mid:2 long:3` (row-major), `base_exposure_ticks`, `tick_us`.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let tile_text = kv.require("tile")?;
        let entries = tile_text
            .split_whitespace()
            .map(|tok| {
                let (class, phase) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("tile entry `{tok}` is not class:phase")))?;
                let phase = phase
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad phase in `{tok}`")))?;
                Ok(TileEntry::new(class.parse()?, phase))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.len() != 4 {
            return Err(Error::Config(format!("tile needs 4 entries, got {}", entries.len())));
        }
        let base = kv.parse_or("base_exposure_ticks", 4usize)?;
        let tick_us: u32 = kv.parse_or("tick_us", 1000u32)?;
        Self::new(
            [[entries[0], entries[1]], [entries[2], entries[3]]],
            base,
            tick_us as f64 / 1000.0,
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_key_values(&KeyValues::read(path)?)
    }
}

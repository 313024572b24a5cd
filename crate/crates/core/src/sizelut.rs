//! Disparity -> box size lookup table.
//!
//! Projection is linear in disparity, so a table over quantized disparities
//! replaces the per-pixel projection in the scan hot loop with one rounded
//! index computation and an array access.

use std::io::Write;

use crate::camera::{project_model, BoxSize, CameraIntrinsics, ObjectModel};
use crate::error::{DswError, Result};
use crate::fmt::sig6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutConfig {
    /// Smallest tabulated disparity, > 0.
    pub d_min: f64,
    /// Largest tabulated disparity.
    pub d_max: f64,
    /// Quantization step, > 0.
    pub delta_d: f64,
}

impl Default for LutConfig {
    /// Covers the disparity range a typical stereo matcher produces at
    /// KITTI resolution: 1..128 in unit steps.
    fn default() -> Self {
        Self {
            d_min: 1.0,
            d_max: 128.0,
            delta_d: 1.0,
        }
    }
}

impl LutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "LUT d_min must be positive, got {}",
                self.d_min
            )));
        }
        if self.d_min > self.d_max {
            return Err(DswError::InvalidConfig(format!(
                "LUT d_min {} exceeds d_max {}",
                self.d_min, self.d_max
            )));
        }
        if !(self.delta_d > 0.0) {
            return Err(DswError::InvalidConfig(format!(
                "LUT delta_d must be positive, got {}",
                self.delta_d
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.d_max - self.d_min) / self.delta_d).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Immutable table of projected box sizes, one per quantized disparity.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeLut {
    config: LutConfig,
    entries: Vec<BoxSize>,
}

impl SizeLut {
    pub fn config(&self) -> &LutConfig {
        &self.config
    }

    pub fn entries(&self) -> &[BoxSize] {
        &self.entries
    }

    /// Disparity of table entry i.
    pub fn disparity_at(&self, index: usize) -> f64 {
        self.config.d_min + index as f64 * self.config.delta_d
    }

    /// Nearest-entry lookup. O(1).
    pub fn lookup(&self, disparity: f64) -> Result<BoxSize> {
        let cfg = &self.config;
        if !(disparity >= cfg.d_min) || disparity > cfg.d_max {
            return Err(DswError::OutOfRange {
                disparity,
                d_min: cfg.d_min,
                d_max: cfg.d_max,
            });
        }
        let index = ((disparity - cfg.d_min) / cfg.delta_d).round() as usize;
        Ok(self.entries[index.min(self.entries.len() - 1)])
    }

    /// CSV dump: `disparity,width_px,height_px`, one row per entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "disparity,width_px,height_px")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                sig6(self.disparity_at(i)),
                e.width_px,
                e.height_px
            )?;
        }
        Ok(())
    }
}

/// Tabulate project_model over the configured disparity grid.
pub fn build_lut(intr: &CameraIntrinsics, model: &ObjectModel, cfg: LutConfig) -> Result<SizeLut> {
    cfg.validate()?;
    intr.validate()?;
    let n = cfg.len();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let d = cfg.d_min + i as f64 * cfg.delta_d;
        entries.push(project_model(intr, model, d)?);
    }
    Ok(SizeLut {
        config: cfg,
        entries,
    })
}

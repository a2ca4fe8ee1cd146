use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Bilinear,
}

/// Circular sampling geometry: `points` samples at distance `radius`,
/// anticlockwise from `start_angle` (radians, 0 = east).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub radius: f64,
    pub points: usize,
    pub interpolation: Interpolation,
    pub start_angle: f64,
}

/// Offsets closer than this to an integer are snapped onto it, so that
/// axis-aligned samples read pixels exactly.
const SNAP: f64 = 1e-9;

impl NeighborhoodSpec {
    pub fn new(radius: f64, points: usize, interpolation: Interpolation) -> Result<Self> {
        let spec = Self {
            radius,
            points,
            interpolation,
            start_angle: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `r = 1`, `p = 8`, nearest sampling: the eight integer neighbors.
    pub fn unit8() -> Self {
        Self {
            radius: 1.0,
            points: 8,
            interpolation: Interpolation::Nearest,
            start_angle: 0.0,
        }
    }

    pub fn with_start_angle(mut self, start_angle: f64) -> Self {
        self.start_angle = start_angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.radius.is_finite() && self.radius >= 1.0,
            "radius must be >= 1, got {}",
            self.radius
        );
        ensure!(
            (4..=24).contains(&self.points),
            "point count must be in [4, 24], got {}",
            self.points
        );
        ensure!(self.start_angle.is_finite(), "start angle must be finite");
        Ok(())
    }

    /// Pixels of margin a sample may reach beyond its center.
    pub fn reach(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// `(row, col)` offset of each sample from the center.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < SNAP {
                r
            } else {
                v
            }
        };
        (0..self.points)
            .map(|i| {
                let phi = self.start_angle + 2.0 * PI * i as f64 / self.points as f64;
                (
                    snap(-self.radius * phi.sin()),
                    snap(self.radius * phi.cos()),
                )
            })
            .collect()
    }
}

/// One ring sample resolved to pixel reads.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Tap {
    Pixel(isize, isize),
    /// Top-left corner plus fractional row/column position in the cell.
    Cell {
        row: isize,
        col: isize,
        fy: f64,
        fx: f64,
    },
}

pub(crate) fn taps(spec: &NeighborhoodSpec) -> Vec<Tap> {
    spec.offsets()
        .into_iter()
        .map(|(dy, dx)| match spec.interpolation {
            Interpolation::Nearest => Tap::Pixel(dy.round() as isize, dx.round() as isize),
            Interpolation::Bilinear => {
                let (y0, x0) = (dy.floor(), dx.floor());
                let (fy, fx) = (dy - y0, dx - x0);
                if fy == 0.0 && fx == 0.0 {
                    Tap::Pixel(y0 as isize, x0 as isize)
                } else {
                    Tap::Cell {
                        row: y0 as isize,
                        col: x0 as isize,
                        fy,
                        fx,
                    }
                }
            }
        })
        .collect()
}

#[inline]
pub(crate) fn lerp2(v00: f64, v01: f64, v10: f64, v11: f64, fy: f64, fx: f64) -> f64 {
    let top = v00 + fx * (v01 - v00);
    let bottom = v10 + fx * (v11 - v10);
    top + fy * (bottom - top)
}

/// Reads the ring around `center` in a `H x W` plane. Reads that fall
/// outside the plane are clamped to the border (replicate padding).
pub fn sample_ring<T: Real>(
    plane: &Tensor<T>,
    center: (usize, usize),
    spec: &NeighborhoodSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    ensure!(
        plane.rank() == 2,
        "expected an H x W plane, got shape {:?}",
        plane.shape()
    );
    let (h, w) = (plane.shape()[0], plane.shape()[1]);
    let (r, c) = center;
    ensure!(r < h && c < w, "center ({r}, {c}) outside {h}x{w} plane");
    let at = |dy: isize, dx: isize| {
        let y = (r as isize + dy).clamp(0, h as isize - 1) as usize;
        let x = (c as isize + dx).clamp(0, w as isize - 1) as usize;
        plane.data()[y * w + x].as_f64()
    };
    Ok(taps(spec)
        .into_iter()
        .map(|t| match t {
            Tap::Pixel(dy, dx) => at(dy, dx),
            Tap::Cell { row, col, fy, fx } => lerp2(
                at(row, col),
                at(row, col + 1),
                at(row + 1, col),
                at(row + 1, col + 1),
                fy,
                fx,
            ),
        })
        .collect())
}

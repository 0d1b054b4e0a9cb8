use std::f64::consts::PI;

use crate::error::{check_dim, invalid, Result};
use crate::vector::all_finite;

/// Evenly spaced angles in `[angle_min, angle_max)` and cell-centred
/// detector offsets in `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    n_angles: usize,
    n_det: usize,
    angle_min: f64,
    angle_max: f64,
}

impl Geometry {
    pub fn new(n_angles: usize, n_det: usize, angle_min: f64, angle_max: f64) -> Result<Self> {
        if n_angles == 0 || n_det == 0 {
            return Err(invalid(format!("degenerate geometry: {n_angles} angles, {n_det} detectors")));
        }
        if !(angle_min.is_finite() && angle_max.is_finite() && angle_max > angle_min) {
            return Err(invalid(format!("angle range [{angle_min}, {angle_max}) is empty")));
        }
        Ok(Geometry { n_angles, n_det, angle_min, angle_max })
    }

    /// Angles in `[0, π)`.
    pub fn half_turn(n_angles: usize, n_det: usize) -> Result<Self> {
        Self::new(n_angles, n_det, 0.0, PI)
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn angle_min(&self) -> f64 {
        self.angle_min
    }

    pub fn angle_max(&self) -> f64 {
        self.angle_max
    }

    /// Number of rays `m = n_angles · n_det`.
    pub fn len(&self) -> usize {
        self.n_angles * self.n_det
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * (self.angle_max - self.angle_min) / self.n_angles as f64
    }

    pub fn offset(&self, j: usize) -> f64 {
        -1.0 + (2 * j + 1) as f64 / self.n_det as f64
    }
}

/// Line-integral data, row-major by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geometry: Geometry,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: Geometry, data: Vec<f64>) -> Result<Self> {
        check_dim(geometry.len(), data.len())?;
        if !all_finite(&data) {
            return Err(invalid("sinogram entries must be finite"));
        }
        Ok(Sinogram { geometry, data })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, angle: usize, det: usize) -> f64 {
        self.data[angle * self.geometry.n_det + det]
    }
}

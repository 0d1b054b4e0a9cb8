use crate::error::{invalid, Result};
use crate::image::Image;

/// An ellipse adding `intensity` inside
/// `((u cos φ + v sin φ)/a)² + ((−u sin φ + v cos φ)/b)² ≤ 1`,
/// with `(u, v)` the offset from the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    /// Rotation in degrees, counter-clockwise.
    pub phi_deg: f64,
}

impl Ellipse {
    pub const fn new(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Self {
        Ellipse { intensity, a, b, x0, y0, phi_deg }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let (u, v) = (x - self.x0, y - self.y0);
        let p = (u * c + v * s) / self.a;
        let q = (-u * s + v * c) / self.b;
        p * p + q * q <= 1.0
    }
}

/// Shepp–Logan head with the higher-contrast intensities commonly used for
/// display (outer skull 1, brain 0.2, ventricles 0, small features 0.3).
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    ellipses: Vec<Ellipse>,
}

impl Phantom {
    pub fn new(ellipses: Vec<Ellipse>) -> Self {
        Phantom { ellipses }
    }

    pub fn shepp_logan() -> Self {
        Phantom::new(SHEPP_LOGAN.to_vec())
    }

    /// Keep only the listed ellipses (0-based indices).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            let e = self.ellipses.get(i).ok_or_else(|| invalid(format!("ellipse index {i} out of range")))?;
            out.push(*e);
        }
        Ok(Phantom::new(out))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let ellipses = self.ellipses.iter().map(|e| Ellipse { intensity: e.intensity * factor, ..*e }).collect();
        Phantom::new(ellipses)
    }

    pub fn ellipses(&self) -> &[Ellipse] {
        &self.ellipses
    }

    /// Sample at pixel centres. Sums that cancel to rounding level are
    /// clamped at zero so the head stays nonnegative.
    pub fn rasterize(&self, side: usize) -> Result<Image> {
        if side < 2 {
            return Err(invalid("phantom side must be at least 2"));
        }
        let mut data = vec![0.0; side * side];
        for r in 0..side {
            for c in 0..side {
                let (x, y) = Image::pixel_center(side, r, c);
                let mut v = 0.0;
                for e in &self.ellipses {
                    if e.contains(x, y) {
                        v += e.intensity;
                    }
                }
                data[r * side + c] = if v.abs() < 1e-12 { 0.0 } else { v };
            }
        }
        Image::new(side, data)
    }
}

pub fn shepp_logan(side: usize) -> Result<Image> {
    Phantom::shepp_logan().rasterize(side)
}

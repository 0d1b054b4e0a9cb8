use crate::error::{check_dim, invalid, Result};
use crate::image::Image;
use crate::objectives::LinearModel;
use crate::sparse::{CsrBuilder, CsrMatrix};

use super::geometry::{Geometry, Sinogram};

/// Pixel-basis parallel-beam projector with exact intersection lengths.
///
/// The image covers `[−1, 1]²`; ray `(θ, t)` is the line
/// `t(cos θ, sin θ) + s(−sin θ, cos θ)`. Weights are assembled once by
/// tracing every ray through the grid, so the adjoint is the exact transpose.
#[derive(Debug, Clone)]
pub struct Radon {
    geometry: Geometry,
    side: usize,
    matrix: CsrMatrix,
}

impl Radon {
    pub fn new(geometry: Geometry, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(invalid("image side must be positive"));
        }
        let mut b = CsrBuilder::new(side * side);
        let mut scratch = Vec::new();
        for i in 0..geometry.n_angles() {
            let theta = geometry.angle(i);
            for j in 0..geometry.n_det() {
                trace_ray(side, theta, geometry.offset(j), &mut scratch, &mut b);
                b.finish_row();
            }
        }
        Ok(Radon { geometry, side, matrix: b.build() })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &Image) -> Result<Sinogram> {
        check_dim(self.side, x.side())?;
        Sinogram::new(self.geometry, self.matrix.apply(x.data()))
    }

    pub fn adjoint(&self, y: &Sinogram) -> Result<Image> {
        if y.geometry() != &self.geometry {
            return Err(invalid("sinogram geometry differs from the projector's"));
        }
        Image::new(self.side, self.matrix.adjoint(y.data()))
    }

    /// A linear model with one subset per contiguous stripe of angles.
    pub fn model(&self, data: &Sinogram, subsets: usize) -> Result<LinearModel> {
        if data.geometry() != &self.geometry {
            return Err(invalid("sinogram geometry differs from the projector's"));
        }
        LinearModel::new(self.matrix.clone(), data.data().to_vec())?.with_stripes(subsets, self.geometry.n_det())
    }
}

/// Push the (pixel, length) pairs of one ray into the current row.
fn trace_ray(side: usize, theta: f64, t: f64, crossings: &mut Vec<f64>, out: &mut CsrBuilder) {
    let (c, s) = (theta.cos(), theta.sin());
    let (px, py) = (t * c, t * s);
    let (dx, dy) = (-s, c);

    // Parameter interval inside the square.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-15 {
            if p.abs() >= 1.0 {
                return;
            }
        } else {
            let a = (-1.0 - p) / d;
            let b = (1.0 - p) / d;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    if !(hi > lo) {
        return;
    }

    let w = 2.0 / side as f64;
    crossings.clear();
    crossings.push(lo);
    crossings.push(hi);
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-15 {
            continue;
        }
        for k in 1..side {
            let line = -1.0 + k as f64 * w;
            let sk = (line - p) / d;
            if sk > lo && sk < hi {
                crossings.push(sk);
            }
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));

    let last = side as isize - 1;
    for pair in crossings.windows(2) {
        let len = pair[1] - pair[0];
        if len <= 1e-14 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let x = px + mid * dx;
        let y = py + mid * dy;
        let col = (((x + 1.0) / w).floor() as isize).clamp(0, last) as usize;
        let row = (((1.0 - y) / w).floor() as isize).clamp(0, last) as usize;
        out.push(row * side + col, len);
    }
}

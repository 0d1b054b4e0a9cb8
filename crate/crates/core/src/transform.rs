//! Orthonormal transforms used by the sparsity prior.

use crate::error::{invalid, Result};

/// A real orthonormal linear map `H` with `HᵀH = I`.
pub trait OrthoTransform {
    fn forward(&self, x: &[f64]) -> Vec<f64>;
    fn inverse(&self, w: &[f64]) -> Vec<f64>;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `H = I` on vectors of a fixed length.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl OrthoTransform for Identity {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn inverse(&self, w: &[f64]) -> Vec<f64> {
        w.to_vec()
    }
    fn len(&self) -> usize {
        self.0
    }
}

/// Full multi-level separable 2D Haar transform on a `side × side` image.
///
/// Each level transforms the rows and then the columns of the current
/// low-pass block, so after `log₂ side` levels a single scaling coefficient
/// remains at index 0.
#[derive(Debug, Clone, Copy)]
pub struct Haar2d {
    side: usize,
}

impl Haar2d {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 || !side.is_power_of_two() {
            return Err(invalid(format!("Haar transform needs a power-of-two side, got {side}")));
        }
        Ok(Haar2d { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }
}

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn analyze(buf: &mut [f64], tmp: &mut [f64], len: usize) {
    let h = len / 2;
    for i in 0..h {
        let (a, b) = (buf[2 * i], buf[2 * i + 1]);
        tmp[i] = (a + b) * S;
        tmp[h + i] = (a - b) * S;
    }
    buf[..len].copy_from_slice(&tmp[..len]);
}

fn synthesize(buf: &mut [f64], tmp: &mut [f64], len: usize) {
    let h = len / 2;
    for i in 0..h {
        let (s, d) = (buf[i], buf[h + i]);
        tmp[2 * i] = (s + d) * S;
        tmp[2 * i + 1] = (s - d) * S;
    }
    buf[..len].copy_from_slice(&tmp[..len]);
}

impl Haar2d {
    fn pass(&self, data: &mut [f64], len: usize, f: fn(&mut [f64], &mut [f64], usize)) {
        let n = self.side;
        let mut line = vec![0.0; len];
        let mut tmp = vec![0.0; len];
        for r in 0..len {
            line.copy_from_slice(&data[r * n..r * n + len]);
            f(&mut line, &mut tmp, len);
            data[r * n..r * n + len].copy_from_slice(&line);
        }
        for c in 0..len {
            for r in 0..len {
                line[r] = data[r * n + c];
            }
            f(&mut line, &mut tmp, len);
            for r in 0..len {
                data[r * n + c] = line[r];
            }
        }
    }
}

impl OrthoTransform for Haar2d {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len(), "image length");
        let mut w = x.to_vec();
        let mut len = self.side;
        while len >= 2 {
            self.pass(&mut w, len, analyze);
            len /= 2;
        }
        w
    }

    fn inverse(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.len(), "coefficient length");
        let mut x = w.to_vec();
        let mut len = 2;
        while len <= self.side {
            self.pass(&mut x, len, synthesize);
            len *= 2;
        }
        x
    }

    fn len(&self) -> usize {
        self.side * self.side
    }
}

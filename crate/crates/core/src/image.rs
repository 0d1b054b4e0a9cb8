use crate::error::{invalid, Result};

/// Square pixel grid stored row-major.
///
/// Pixel `(row, col)` lives at `data[row * side + col]`; row 0 is the top of
/// the `[-1, 1]²` support and column 0 its left edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    side: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(invalid("image side must be positive"));
        }
        if data.len() != side * side {
            return Err(invalid(format!("image of side {side} needs {} values, got {}", side * side, data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite pixel at index {i}")));
        }
        Ok(Image { side, data })
    }

    pub fn zeros(side: usize) -> Self {
        Image { side, data: vec![0.0; side * side] }
    }

    pub fn constant(side: usize, value: f64) -> Self {
        Image { side, data: vec![value; side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    /// Coordinates of the center of pixel `(row, col)` in `[-1, 1]²`.
    ///
    /// Computed from integer numerators so mirrored pixels have exactly
    /// negated coordinates.
    pub fn pixel_center(side: usize, row: usize, col: usize) -> (f64, f64) {
        let s = side as f64;
        let x = (2.0 * col as f64 + 1.0 - s) / s;
        let y = (s - 2.0 * row as f64 - 1.0) / s;
        (x, y)
    }

    /// `‖self − reference‖ / ‖reference‖`.
    pub fn relative_error(&self, reference: &Image) -> f64 {
        crate::vector::dist(&self.data, &reference.data) / crate::vector::norm(&reference.data)
    }
}

impl AsRef<[f64]> for Image {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

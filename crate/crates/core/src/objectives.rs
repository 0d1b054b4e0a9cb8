//! Concrete objectives: data-fidelity terms on a linear model and the
//! sparsity and total-variation priors.

use std::ops::Range;

use crate::error::{check_dim, invalid, Result};
use crate::problem::{ComponentObjective, Objective};
use crate::sparse::CsrMatrix;
use crate::transform::OrthoTransform;
use crate::tv::{tv_subgradient, tv_subgradient_bound, tv_value};
use crate::vector::{norm, norm1, norm_sq, sign0};

/// `Rx ≈ b` with the rows of `R` split into contiguous subsets.
#[derive(Debug, Clone)]
pub struct LinearModel {
    matrix: CsrMatrix,
    data: Vec<f64>,
    partition: Vec<Range<usize>>,
    row_norms: Vec<f64>,
}

impl LinearModel {
    /// A model with a single subset holding every row.
    pub fn new(matrix: CsrMatrix, data: Vec<f64>) -> Result<Self> {
        check_dim(matrix.rows(), data.len())?;
        let rows = matrix.rows();
        let row_norms = (0..rows).map(|r| matrix.row_norm(r)).collect();
        Ok(LinearModel { matrix, data, partition: std::iter::once(0..rows).collect(), row_norms })
    }

    /// Replace the partition. The ranges must tile `0..rows` in order.
    pub fn with_partition(mut self, partition: Vec<Range<usize>>) -> Result<Self> {
        if partition.is_empty() {
            return Err(invalid("partition needs at least one subset"));
        }
        let mut next = 0;
        for r in &partition {
            if r.start != next || r.end <= r.start {
                return Err(invalid("partition ranges must be nonempty and tile the rows in order"));
            }
            next = r.end;
        }
        if next != self.matrix.rows() {
            return Err(invalid("partition must cover every row"));
        }
        self.partition = partition;
        Ok(self)
    }

    /// Split the rows into `subsets` stripes of whole blocks of `block` rows
    /// (one block per projection angle). Stripe sizes differ by at most one
    /// block.
    pub fn with_stripes(self, subsets: usize, block: usize) -> Result<Self> {
        let rows = self.matrix.rows();
        if block == 0 || !rows.is_multiple_of(block) {
            return Err(invalid(format!("{rows} rows are not a multiple of block size {block}")));
        }
        let blocks = rows / block;
        if subsets == 0 || subsets > blocks {
            return Err(invalid(format!("cannot split {blocks} blocks into {subsets} subsets")));
        }
        let partition =
            (0..subsets).map(|s| (s * blocks / subsets) * block..((s + 1) * blocks / subsets) * block).collect();
        self.with_partition(partition)
    }

    /// One subset per row.
    pub fn with_row_partition(self) -> Result<Self> {
        let rows = self.matrix.rows();
        self.with_partition((0..rows).map(|r| r..r + 1).collect())
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn partition(&self) -> &[Range<usize>] {
        &self.partition
    }

    pub fn num_unknowns(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    /// `Rx − b`
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.apply(x);
        for (ri, bi) in r.iter_mut().zip(&self.data) {
            *ri -= bi;
        }
        r
    }

    fn subset_residual(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let range = self.partition[i].clone();
        let mut r = self.matrix.apply_rows(range.clone(), x);
        for (ri, bi) in r.iter_mut().zip(&self.data[range]) {
            *ri -= bi;
        }
        r
    }

    /// Frobenius norm of the rows of subset `i`, an upper bound on its
    /// spectral norm.
    fn subset_frobenius(&self, i: usize) -> f64 {
        self.row_norms[self.partition[i].clone()].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `q(x) = ½‖Rx − b‖²`
#[derive(Debug, Clone, Copy)]
pub struct LeastSquares<'a> {
    model: &'a LinearModel,
    radius: Option<f64>,
}

impl<'a> LeastSquares<'a> {
    pub fn new(model: &'a LinearModel) -> Self {
        LeastSquares { model, radius: None }
    }

    /// Declare that iterates stay in the ball `‖x‖ ≤ radius`, which makes the
    /// per-subset gradient bounds finite.
    pub fn within_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn model(&self) -> &LinearModel {
        self.model
    }
}

impl Objective for LeastSquares<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm_sq(&self.model.residual(x))
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.model.matrix.adjoint(&self.model.residual(x))
    }
}

impl ComponentObjective for LeastSquares<'_> {
    fn num_components(&self) -> usize {
        self.model.partition.len()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * norm_sq(&self.model.subset_residual(i, x))
    }

    fn component_subgradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let r = self.model.subset_residual(i, x);
        self.model.matrix.adjoint_rows_into(self.model.partition[i].clone(), &r, &mut g);
        g
    }

    /// `‖Rᵢ‖_F (‖Rᵢ‖_F ρ + ‖bᵢ‖)` on the declared ball of radius `ρ`;
    /// infinite when no radius was declared.
    fn component_bound(&self, i: usize) -> f64 {
        match self.radius {
            None => f64::INFINITY,
            Some(rad) => {
                let f = self.model.subset_frobenius(i);
                let b = norm(&self.model.data[self.model.partition[i].clone()]);
                f * (f * rad + b)
            }
        }
    }

    fn component_step(&self, i: usize, step: f64, x: &mut [f64]) {
        let r = self.model.subset_residual(i, x);
        let r: Vec<f64> = r.iter().map(|v| -step * v).collect();
        self.model.matrix.adjoint_rows_into(self.model.partition[i].clone(), &r, x);
    }
}

/// `f₀(x) = ½ Σᵢ h(⟨rᵢ, x⟩ − bᵢ)` with the Huber function
/// `h(t) = t²` for `|t| < Δ` and `2Δ|t| − Δ²` otherwise.
#[derive(Debug, Clone, Copy)]
pub struct Huber<'a> {
    model: &'a LinearModel,
    delta: f64,
}

pub fn huber(delta: f64, t: f64) -> f64 {
    if t.abs() < delta {
        t * t
    } else {
        2.0 * delta * t.abs() - delta * delta
    }
}

pub fn huber_derivative(delta: f64, t: f64) -> f64 {
    if t.abs() < delta {
        2.0 * t
    } else {
        2.0 * delta * sign0(t)
    }
}

impl<'a> Huber<'a> {
    /// `Δ = ‖R x̃ − b‖`.
    pub fn setup(model: &'a LinearModel, reference: &[f64]) -> Result<Self> {
        check_dim(model.num_unknowns(), reference.len())?;
        let delta = norm(&model.residual(reference));
        Self::with_delta(model, delta)
    }

    pub fn with_delta(model: &'a LinearModel, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("Huber threshold must be positive, got {delta}")));
        }
        Ok(Huber { model, delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Objective for Huber<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.model.residual(x).iter().map(|&t| huber(self.delta, t)).sum::<f64>()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = self.model.residual(x).iter().map(|&t| 0.5 * huber_derivative(self.delta, t)).collect();
        self.model.matrix.adjoint(&h)
    }

    /// `Δ Σᵢ ‖rᵢ‖`
    fn subgradient_bound(&self) -> Option<f64> {
        Some(self.delta * self.model.row_norms.iter().sum::<f64>())
    }
}

/// `ℓ(x) = ‖Rx − b‖₁`, split along the model partition.
#[derive(Debug, Clone, Copy)]
pub struct L1Residual<'a> {
    model: &'a LinearModel,
}

impl<'a> L1Residual<'a> {
    pub fn new(model: &'a LinearModel) -> Self {
        L1Residual { model }
    }

    pub fn model(&self) -> &LinearModel {
        self.model
    }
}

impl Objective for L1Residual<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        norm1(&self.model.residual(x))
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = self.model.residual(x).into_iter().map(sign0).collect();
        self.model.matrix.adjoint(&s)
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(self.model.row_norms.iter().sum())
    }
}

impl ComponentObjective for L1Residual<'_> {
    fn num_components(&self) -> usize {
        self.model.partition.len()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        norm1(&self.model.subset_residual(i, x))
    }

    fn component_subgradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let s: Vec<f64> = self.model.subset_residual(i, x).into_iter().map(sign0).collect();
        self.model.matrix.adjoint_rows_into(self.model.partition[i].clone(), &s, &mut g);
        g
    }

    /// `Cᵢ = Σ_{j ∈ subset i} ‖r_j‖`
    fn component_bound(&self, i: usize) -> f64 {
        self.model.row_norms[self.model.partition[i].clone()].iter().sum()
    }

    fn component_step(&self, i: usize, step: f64, x: &mut [f64]) {
        let s: Vec<f64> = self.model.subset_residual(i, x).into_iter().map(|t| -step * sign0(t)).collect();
        self.model.matrix.adjoint_rows_into(self.model.partition[i].clone(), &s, x);
    }
}

/// `f(x) = ‖Hx‖₁` for an orthonormal `H`.
#[derive(Debug, Clone, Copy)]
pub struct TransformL1<T> {
    transform: T,
}

impl<T: OrthoTransform> TransformL1<T> {
    pub const fn new(transform: T) -> Self {
        TransformL1 { transform }
    }

    pub fn transform(&self) -> &T {
        &self.transform
    }
}

impl<T: OrthoTransform> Objective for TransformL1<T> {
    fn value(&self, x: &[f64]) -> f64 {
        norm1(&self.transform.forward(x))
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let s: Vec<f64> = self.transform.forward(x).into_iter().map(sign0).collect();
        self.transform.inverse(&s)
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some((self.transform.len() as f64).sqrt())
    }
}

/// Periodic isotropic total variation on `n` pixels.
#[derive(Debug, Clone, Copy)]
pub struct TotalVariation {
    n: usize,
}

impl TotalVariation {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(invalid("total variation needs side ≥ 2"));
        }
        Ok(TotalVariation { n: side * side })
    }
}

impl Objective for TotalVariation {
    fn value(&self, x: &[f64]) -> f64 {
        tv_value(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        tv_subgradient(x)
    }

    fn subgradient_bound(&self) -> Option<f64> {
        Some(tv_subgradient_bound(self.n))
    }
}

/// `f ≡ 0`, for runs without a secondary objective.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Objective for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn subgradient_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

//! Library optimality operators and their certified constants.

use crate::error::{invalid, Result};
use crate::feasibility::ConvexSet;
use crate::operator::{OperatorMeta, OptimalityOperator};
use crate::problem::{ComponentObjective, Objective};
use crate::transform::OrthoTransform;
use crate::vector::{dist_sq, dot, step};

/// `x − λ ∇̃f(x)`
pub fn subgrad_step<F: Objective + ?Sized>(f: &F, lambda: f64, x: &[f64]) -> Vec<f64> {
    if lambda == 0.0 {
        return x.to_vec();
    }
    step(x, lambda, &f.subgradient(x))
}

/// `P(x − λ ∇f(x))`
pub fn proj_grad_step<F: Objective + ?Sized>(f: &F, set: &ConvexSet, lambda: f64, x: &[f64]) -> Vec<f64> {
    let mut y = subgrad_step(f, lambda, x);
    set.project_in_place(&mut y);
    y
}

/// `f(y) ≤ f(x) + ∇f(x)ᵀ(y − x) + ‖y − x‖²/(2λ)`
pub fn sufficient_decrease_holds<F: Objective + ?Sized>(f: &F, x: &[f64], y: &[f64], lambda: f64) -> bool {
    let g = f.subgradient(x);
    sufficient_decrease_with(f.value(x), &g, f.value(y), x, y, lambda)
}

/// Same test with `f(x)`, `∇f(x)` and `f(y)` already evaluated.
pub fn sufficient_decrease_with(fx: f64, gx: &[f64], fy: f64, x: &[f64], y: &[f64], lambda: f64) -> bool {
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let rhs = fx + dot(gx, &d) + dot(&d, &d) / (2.0 * lambda);
    // Relative slack absorbs rounding when the model is exact.
    fy <= rhs + 1e-12 * (fx.abs() + fy.abs() + 1.0)
}

pub fn is_permutation(order: &[usize], m: usize) -> bool {
    if order.len() != m {
        return false;
    }
    let mut seen = vec![false; m];
    for &i in order {
        if i >= m || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Sweep `x ← x − λ ∇̃f^{order(i)}(x)` over all components.
pub fn incremental_subgrad<F: ComponentObjective + ?Sized>(
    f: &F,
    lambda: f64,
    x: &[f64],
    order: &[usize],
) -> Result<Vec<f64>> {
    if !is_permutation(order, f.num_components()) {
        return Err(invalid(format!("order must be a permutation of 0..{}, got {order:?}", f.num_components())));
    }
    let mut y = x.to_vec();
    if lambda == 0.0 {
        return Ok(y);
    }
    for &i in order {
        f.component_step(i, lambda, &mut y);
    }
    Ok(y)
}

/// Constants of the incremental operator relative to `f(result)`:
/// `β = 2`, `γ = ΣCᵢ`, `ρ̄(λ) = 3λ(ΣCᵢ)²`.
pub fn incremental_meta<F: ComponentObjective + ?Sized>(f: &F) -> OperatorMeta {
    let c = f.total_bound();
    OperatorMeta::new(2.0, Some(c), 3.0 * c * c)
}

/// Componentwise shrinkage toward zero.
pub fn soft_threshold(mu: f64, w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&v| {
            if v > mu {
                v - mu
            } else if v < -mu {
                v + mu
            } else {
                0.0
            }
        })
        .collect()
}

/// `Hᵀ ST_μ(Hx)`, the proximal map of `μ‖H·‖₁`.
pub fn haar_prox<T: OrthoTransform + ?Sized>(h: &T, mu: f64, x: &[f64]) -> Vec<f64> {
    if mu == 0.0 {
        return x.to_vec();
    }
    h.inverse(&soft_threshold(mu, &h.forward(x)))
}

/// `x^{(i)} = base(λ/i, x^{(i−1)})` for `i = 1..J`.
pub fn iterated_op<O: OptimalityOperator + ?Sized>(base: &O, j: usize, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    if j == 0 {
        return Err(invalid("iteration count J must be at least one"));
    }
    let mut y = x.to_vec();
    for i in 1..=j {
        y = base.apply(lambda / i as f64, &y);
    }
    Ok(y)
}

/// Subgradient step on an objective with bounded subgradients.
///
/// With `G` the bound: `β = 2`, `γ = G`, `ρ̄(λ) = λG² + 2λγG = 3λG²`.
pub struct SubgradientStep<F> {
    f: F,
    bound: Option<f64>,
}

impl<F: Objective> SubgradientStep<F> {
    pub fn new(f: F) -> Self {
        let bound = f.subgradient_bound();
        SubgradientStep { f, bound }
    }

    pub fn with_bound(f: F, bound: f64) -> Self {
        SubgradientStep { f, bound: Some(bound) }
    }

    pub fn objective(&self) -> &F {
        &self.f
    }
}

impl<F: Objective> OptimalityOperator for SubgradientStep<F> {
    fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        subgrad_step(&self.f, lambda, x)
    }

    fn meta(&self) -> OperatorMeta {
        match self.bound {
            Some(g) => OperatorMeta::new(2.0, Some(g), 3.0 * g * g),
            None => OperatorMeta::new(2.0, None, f64::INFINITY),
        }
    }
}

/// Projected gradient step. Its descent bound (`β = 2`, `ρ ≡ 0`, for
/// comparison points in the set) holds whenever the sufficient-decrease test
/// passes, in particular for `λ ≤ 1/L`.
pub struct ProjectedGradient<F> {
    f: F,
    set: ConvexSet,
}

impl<F: Objective> ProjectedGradient<F> {
    pub fn new(f: F, set: ConvexSet) -> Self {
        ProjectedGradient { f, set }
    }

    pub fn objective(&self) -> &F {
        &self.f
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }
}

impl<F: Objective> OptimalityOperator for ProjectedGradient<F> {
    fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        proj_grad_step(&self.f, &self.set, lambda, x)
    }

    fn meta(&self) -> OperatorMeta {
        OperatorMeta::new(2.0, None, 0.0)
    }
}

/// Incremental sweep in a fixed component order.
pub struct Incremental<F> {
    f: F,
    order: Vec<usize>,
}

impl<F: ComponentObjective> Incremental<F> {
    pub fn new(f: F, order: Vec<usize>) -> Result<Self> {
        if !is_permutation(&order, f.num_components()) {
            return Err(invalid("order must be a permutation of the components"));
        }
        Ok(Incremental { f, order })
    }

    pub fn in_order(f: F) -> Self {
        let order = (0..f.num_components()).collect();
        Incremental { f, order }
    }
}

impl<F: ComponentObjective> OptimalityOperator for Incremental<F> {
    fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        incremental_subgrad(&self.f, lambda, x, &self.order).expect("order validated at construction")
    }

    fn meta(&self) -> OperatorMeta {
        incremental_meta(&self.f)
    }
}

/// Soft-thresholding in an orthonormal basis: `β = 2`, `γ = √n`, `ρ̄(μ) = 3μn`.
pub struct HaarProx<T> {
    transform: T,
}

impl<T: OrthoTransform> HaarProx<T> {
    pub fn new(transform: T) -> Self {
        HaarProx { transform }
    }

    pub fn transform(&self) -> &T {
        &self.transform
    }
}

impl<T: OrthoTransform> OptimalityOperator for HaarProx<T> {
    fn apply(&self, mu: f64, x: &[f64]) -> Vec<f64> {
        haar_prox(&self.transform, mu, x)
    }

    fn meta(&self) -> OperatorMeta {
        let n = self.transform.len() as f64;
        OperatorMeta::new(2.0, Some(n.sqrt()), 3.0 * n)
    }
}

/// J-fold repetition of a base operator with steps `λ/i`.
///
/// With `H_J = Σ 1/i` and `M` a subgradient bound of the objective, the
/// repeated operator satisfies the descent bound with `β′ = β H_J`,
/// `γ′ = γ H_J` and
/// `ρ̄′(λ) = Σ (1/i) ρ̄(λ/i) + β λ γ M Σᵢ (1/i) Σ_{j>i} 1/j`.
pub struct Iterated<O> {
    base: O,
    j: usize,
    bound: f64,
}

impl<O: OptimalityOperator> Iterated<O> {
    pub fn new(base: O, j: usize, subgradient_bound: f64) -> Result<Self> {
        if j == 0 {
            return Err(invalid("iteration count J must be at least one"));
        }
        Ok(Iterated { base, j, bound: subgradient_bound })
    }

    pub fn repeats(&self) -> usize {
        self.j
    }
}

impl<O: OptimalityOperator> OptimalityOperator for Iterated<O> {
    fn apply(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        iterated_op(&self.base, self.j, lambda, x).expect("J validated at construction")
    }

    fn meta(&self) -> OperatorMeta {
        let m = self.base.meta();
        let harmonic: f64 = (1..=self.j).map(|i| 1.0 / i as f64).sum();
        let inv_sq: f64 = (1..=self.j).map(|i| 1.0 / (i * i) as f64).sum();
        let mut cross = 0.0;
        for i in 1..=self.j {
            let tail: f64 = (i + 1..=self.j).map(|k| 1.0 / k as f64).sum();
            cross += tail / i as f64;
        }
        let gamma = m.gamma.map(|g| g * harmonic);
        let cross_coef = match m.gamma {
            Some(g) => m.beta * g * self.bound * cross,
            None if cross == 0.0 => 0.0,
            None => f64::INFINITY,
        };
        OperatorMeta::new(m.beta * harmonic, gamma, m.rho_coef * inv_sq + cross_coef)
    }
}

/// `O(λ, x) = x`. Only meaningful as a disabled secondary step (`μ ≡ 0`).
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityOperator;

impl OptimalityOperator for IdentityOperator {
    fn apply(&self, _lambda: f64, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn meta(&self) -> OperatorMeta {
        OperatorMeta::new(2.0, Some(0.0), 0.0)
    }
}

/// Left-hand minus right-hand side of the descent bound; nonnegative when
/// the bound holds.
pub fn descent_slack<F: Objective + ?Sized>(
    f: &F,
    meta: &OperatorMeta,
    lambda: f64,
    x: &[f64],
    out: &[f64],
    y: &[f64],
) -> f64 {
    let rhs = dist_sq(x, y) - meta.beta * lambda * (f.value(out) - f.value(y)) + lambda * meta.rho(lambda);
    rhs - dist_sq(out, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::TransformL1;
    use crate::transform::{Haar2d, Identity};

    struct Abs1;
    impl Objective for Abs1 {
        fn value(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![crate::vector::sign0(x[0])]
        }
        fn subgradient_bound(&self) -> Option<f64> {
            Some(1.0)
        }
    }

    struct HalfSq;
    impl Objective for HalfSq {
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * crate::vector::norm_sq(x)
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
    }

    /// |x − 1| + |x + 1|
    struct TwoKinks;
    impl Objective for TwoKinks {
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] - 1.0).abs() + (x[0] + 1.0).abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![crate::vector::sign0(x[0] - 1.0) + crate::vector::sign0(x[0] + 1.0)]
        }
    }
    impl ComponentObjective for TwoKinks {
        fn num_components(&self) -> usize {
            2
        }
        fn component_value(&self, i: usize, x: &[f64]) -> f64 {
            let c = if i == 0 { 1.0 } else { -1.0 };
            (x[0] - c).abs()
        }
        fn component_subgradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
            let c = if i == 0 { 1.0 } else { -1.0 };
            vec![crate::vector::sign0(x[0] - c)]
        }
        fn component_bound(&self, _i: usize) -> f64 {
            1.0
        }
    }

    #[test]
    fn subgradient_examples() {
        let f = TransformL1::new(Identity(1));
        assert_eq!(subgrad_step(&f, 0.5, &[2.0]), vec![1.5]);
        assert_eq!(subgrad_step(&f, 0.0, &[2.0]), vec![2.0]);
        assert_eq!(subgrad_step(&f, 0.7, &[0.0]), vec![0.0]);
    }

    #[test]
    fn projected_gradient_examples() {
        assert_eq!(proj_grad_step(&HalfSq, &ConvexSet::Whole, 1.0, &[3.0, -2.0]), vec![0.0, 0.0]);
        assert_eq!(proj_grad_step(&HalfSq, &ConvexSet::Nonnegative, 0.5, &[-1.0, 2.0]), vec![0.0, 1.0]);
        assert_eq!(proj_grad_step(&HalfSq, &ConvexSet::Nonnegative, 0.0, &[1.0, 2.0]), vec![1.0, 2.0]);
        let x = [0.4, -1.3];
        assert!(sufficient_decrease_holds(&HalfSq, &x, &x, 1.0));
        let y = proj_grad_step(&HalfSq, &ConvexSet::Whole, 1.0, &x);
        assert!(sufficient_decrease_holds(&HalfSq, &x, &y, 1.0));
    }

    #[test]
    fn incremental_examples() {
        assert_eq!(incremental_subgrad(&TwoKinks, 0.5, &[0.0], &[0, 1]).unwrap(), vec![0.0]);
        assert_eq!(incremental_subgrad(&TwoKinks, 0.0, &[0.3], &[1, 0]).unwrap(), vec![0.3]);
        assert!(incremental_subgrad(&TwoKinks, 0.5, &[0.0], &[0, 0]).is_err());
        assert!(incremental_subgrad(&TwoKinks, 0.5, &[0.0], &[0]).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(1.0, &[2.0, -0.5, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(soft_threshold(0.0, &[2.0, -0.5]), vec![2.0, -0.5]);
        assert_eq!(soft_threshold(3.0, &[2.0, -3.0, 1.0]), vec![0.0; 3]);
    }

    #[test]
    fn haar_prox_on_constant() {
        let h = Haar2d::new(8).unwrap();
        let (c, mu) = (2.0, 4.0);
        let out = haar_prox(&h, mu, &[c; 64]);
        for v in out {
            assert!((v - (c - mu / 8.0)).abs() < 1e-12);
        }
        assert_eq!(haar_prox(&h, 0.0, &[c; 64]), vec![c; 64]);
    }

    #[test]
    fn iterated_examples() {
        let base = SubgradientStep::new(Abs1);
        let out = iterated_op(&base, 3, 1.0, &[3.0]).unwrap();
        assert!((out[0] - (1.0 + 1.0 / 6.0)).abs() < 1e-15);
        assert_eq!(iterated_op(&base, 1, 0.7, &[3.0]).unwrap(), base.apply(0.7, &[3.0]));
        assert_eq!(iterated_op(&base, 4, 0.0, &[3.0]).unwrap(), vec![3.0]);
        assert!(iterated_op(&base, 0, 1.0, &[3.0]).is_err());
        assert!(Iterated::new(base, 0, 1.0).is_err());
    }

    #[test]
    fn iterated_meta_single_repeat_is_base() {
        let base = SubgradientStep::new(Abs1);
        let bm = base.meta();
        let it = Iterated::new(base, 1, 1.0).unwrap();
        assert_eq!(it.meta(), bm);
    }
}

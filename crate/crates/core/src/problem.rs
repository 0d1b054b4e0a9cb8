use crate::feasibility::Feasibility;

/// A convex function with a deterministic subgradient selection.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    /// One element of `∂f(x)`. Smooth objectives return the gradient.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// Uniform bound on `‖subgradient(x)‖`, when one is known.
    fn subgradient_bound(&self) -> Option<f64> {
        None
    }
}

/// `f = Σᵢ fᵢ`, split into components for incremental sweeps.
pub trait ComponentObjective: Objective {
    fn num_components(&self) -> usize;

    fn component_value(&self, i: usize, x: &[f64]) -> f64;

    fn component_subgradient(&self, i: usize, x: &[f64]) -> Vec<f64>;

    /// `Cᵢ`, a bound on the norm of every subgradient of component `i`.
    fn component_bound(&self, i: usize) -> f64;

    /// `x ← x − step · ∇̃fᵢ(x)`, with the subgradient taken before the update.
    fn component_step(&self, i: usize, step: f64, x: &mut [f64]) {
        let g = self.component_subgradient(i, x);
        crate::vector::axpy(-step, &g, x);
    }

    fn total_bound(&self) -> f64 {
        (0..self.num_components()).map(|i| self.component_bound(i)).sum()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgradient(x)
    }
    fn subgradient_bound(&self) -> Option<f64> {
        (**self).subgradient_bound()
    }
}

impl<T: ComponentObjective + ?Sized> ComponentObjective for &T {
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        (**self).component_value(i, x)
    }
    fn component_subgradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        (**self).component_subgradient(i, x)
    }
    fn component_bound(&self, i: usize) -> f64 {
        (**self).component_bound(i)
    }
    fn component_step(&self, i: usize, step: f64, x: &mut [f64]) {
        (**self).component_step(i, step, x)
    }
}

/// Minimize `secondary` over the minimizers of `primary` on the feasible set.
pub struct BilevelProblem<'a> {
    pub primary: &'a dyn Objective,
    pub secondary: &'a dyn Objective,
    pub feasible: &'a dyn Feasibility,
}

impl<'a> BilevelProblem<'a> {
    pub fn new(primary: &'a dyn Objective, secondary: &'a dyn Objective, feasible: &'a dyn Feasibility) -> Self {
        BilevelProblem { primary, secondary, feasible }
    }
}

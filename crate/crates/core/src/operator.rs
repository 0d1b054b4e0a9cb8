/// Constants certifying the two inequalities an optimality operator `O_f`
/// must satisfy.
///
/// Descent bound, for every `x`, `y` and `λ ≥ 0`:
///
/// ```text
/// ‖O(λ,x) − y‖² ≤ ‖x − y‖² − β·λ·(f(O(λ,x)) − f(y)) + λ·ρ̄(λ)
/// ```
///
/// Movement bound: `‖x − O(λ,x)‖ ≤ λ·γ`.
///
/// Every operator in this crate has an error term linear in the stepsize, so
/// `ρ̄(λ) = rho_coef · λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorMeta {
    pub beta: f64,
    /// `None` when no finite movement bound is known.
    pub gamma: Option<f64>,
    pub rho_coef: f64,
}

impl OperatorMeta {
    pub fn new(beta: f64, gamma: Option<f64>, rho_coef: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        OperatorMeta { beta, gamma, rho_coef }
    }

    /// `ρ̄(λ)`
    pub fn rho(&self, step: f64) -> f64 {
        self.rho_coef * step
    }
}

/// The `(λ, x) → x′` contract shared by primary and secondary steps.
pub trait OptimalityOperator {
    fn apply(&self, step: f64, x: &[f64]) -> Vec<f64>;
    fn meta(&self) -> OperatorMeta;
}

impl<T: OptimalityOperator + ?Sized> OptimalityOperator for &T {
    fn apply(&self, step: f64, x: &[f64]) -> Vec<f64> {
        (**self).apply(step, x)
    }
    fn meta(&self) -> OperatorMeta {
        (**self).meta()
    }
}

impl<T: OptimalityOperator + ?Sized> OptimalityOperator for Box<T> {
    fn apply(&self, step: f64, x: &[f64]) -> Vec<f64> {
        (**self).apply(step, x)
    }
    fn meta(&self) -> OperatorMeta {
        (**self).meta()
    }
}

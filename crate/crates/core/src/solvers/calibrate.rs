use crate::error::{invalid, Error, Result};
use crate::objectives::LinearModel;
use crate::operator::OptimalityOperator;
use crate::problem::{BilevelProblem, ComponentObjective};
use crate::schedule::StepSchedule;
use crate::vector::{dist, norm_sq};

use super::incremental::run_inc;

/// `μ = ratio · ‖x0 − x_{1/3}‖ / ‖x_{1/3} − x̃_{2/3}‖`, where
/// `x_{1/3} = op0(λ0, x0)` and `x̃_{2/3} = op1(1, x_{1/3})`.
pub fn calibrate_mu(
    op0: &dyn OptimalityOperator,
    op1: &dyn OptimalityOperator,
    lambda0: f64,
    x0: &[f64],
    ratio: f64,
) -> Result<f64> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(invalid(format!("target ratio must be positive, got {ratio}")));
    }
    let x13 = op0.apply(lambda0, x0);
    let x23 = op1.apply(1.0, &x13);
    let secondary = dist(&x13, &x23);
    if secondary == 0.0 || !secondary.is_finite() {
        return Err(Error::Calibration("secondary operator does not move at the tentative step".into()));
    }
    Ok(ratio * dist(x0, &x13) / secondary)
}

/// Candidate grids for `λ = α · s f0(x0)/‖∇̃f0(x0)‖²` and `λ_k = λ/(k+1)^ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchParams {
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Iterations of the incremental method per candidate.
    pub budget: usize,
}

impl Default for GridSearchParams {
    fn default() -> Self {
        GridSearchParams {
            alphas: (1..=10).map(|i| i as f64 / 10.0).collect(),
            epsilons: (5..=9).map(|i| i as f64 / 10.0).collect(),
            budget: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChoice {
    pub alpha: f64,
    pub epsilon: f64,
    pub lambda: f64,
    /// `f0` after the budget with this choice.
    pub final_f0: f64,
}

/// Run the incremental method for every grid pair and keep the one with the
/// smallest final `f0` (first in grid order on ties).
pub fn grid_search_lambda(
    problem: BilevelProblem<'_>,
    f0: &dyn ComponentObjective,
    x0: &[f64],
    params: &GridSearchParams,
    seed: u64,
) -> Result<GridChoice> {
    if params.alphas.is_empty() || params.epsilons.is_empty() {
        return Err(invalid("grid search needs nonempty grids"));
    }
    let g = f0.subgradient(x0);
    let gg = norm_sq(&g);
    if gg == 0.0 {
        return Err(Error::Calibration("zero subgradient at the starting point".into()));
    }
    let base = f0.num_components() as f64 * f0.value(x0) / gg;
    let mut best: Option<GridChoice> = None;
    for &alpha in &params.alphas {
        for &epsilon in &params.epsilons {
            let lambda = alpha * base;
            let sched = StepSchedule::power(lambda, epsilon)?;
            let p = BilevelProblem::new(problem.primary, problem.secondary, problem.feasible);
            let out = run_inc(p, f0, sched, x0, params.budget, seed)?;
            let final_f0 = problem.primary.value(&out.x);
            if best.is_none_or(|b| final_f0 < b.final_f0) {
                best = Some(GridChoice { alpha, epsilon, lambda, final_f0 });
            }
        }
    }
    Ok(best.expect("grids are nonempty"))
}

/// Constant image `α·1` with `Σ(R x0)ᵢ = Σ bᵢ`.
pub fn consistent_start(model: &LinearModel) -> Result<Vec<f64>> {
    let a = model.matrix();
    let mass: f64 = (0..a.rows()).map(|r| a.row_sum(r)).sum();
    if mass <= 0.0 {
        return Err(invalid("projector has no mass"));
    }
    let alpha = model.data().iter().sum::<f64>() / mass;
    Ok(vec![alpha; model.num_unknowns()])
}

use crate::error::Result;
use crate::framework::{BilevelRunner, RunOutput};
use crate::operator::OptimalityOperator;
use crate::operators::IdentityOperator;
use crate::problem::{BilevelProblem, ComponentObjective};
use crate::schedule::StepSchedule;

/// `λ_k = λ/(k+1)^ε` and `μ_k = μ/(k+1)^{ε+0.1}`.
pub fn incremental_schedules(lambda: f64, mu: f64, eps: f64) -> Result<(StepSchedule, StepSchedule)> {
    Ok((StepSchedule::power(lambda, eps)?, StepSchedule::power(mu, eps + 0.1)?))
}

/// Incremental bilevel method: a shuffled incremental sweep on `f0`, then
/// `op1`, then the feasibility step. `problem.primary` should evaluate the
/// same function as `f0`.
#[allow(clippy::too_many_arguments)]
pub fn run_iiba(
    problem: BilevelProblem<'_>,
    f0: &dyn ComponentObjective,
    op1: &dyn OptimalityOperator,
    sched0: StepSchedule,
    sched1: StepSchedule,
    x0: &[f64],
    max_iter: usize,
    seed: u64,
) -> Result<RunOutput> {
    let mut r = BilevelRunner::incremental(problem, f0, seed, op1, sched0, sched1, x0.to_vec())?;
    r.run(max_iter)?;
    Ok(r.into_output())
}

/// Projected incremental subgradient method, the `μ ≡ 0` case.
pub fn run_inc(
    problem: BilevelProblem<'_>,
    f0: &dyn ComponentObjective,
    sched0: StepSchedule,
    x0: &[f64],
    max_iter: usize,
    seed: u64,
) -> Result<RunOutput> {
    run_iiba(problem, f0, &IdentityOperator, sched0, StepSchedule::zero(), x0, max_iter, seed)
}

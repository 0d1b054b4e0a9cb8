//! Solver runs on the testbed and the method comparisons.

use bilevel::feasibility::ConvexSet;
use bilevel::objectives::{Huber, L1Residual, LinearModel, TotalVariation, TransformL1, Zero};
use bilevel::operators::{HaarProx, IdentityOperator, Incremental, Iterated, SubgradientStep};
use bilevel::solvers::{
    calibrate_mu, consistent_start, grid_search_lambda, incremental_schedules, FibaRunner, FibaSchedules, FistaMode,
    FistaRunner, GridSearchParams,
};
use bilevel::transform::Haar2d;
use bilevel::tv::tv_subgradient_bound;
use bilevel::{BilevelProblem, BilevelRunner, Objective, OptimalityOperator, Resumable, SolverTrace, StepSchedule};

use crate::config::{CompareKind, Constraint, ExperimentConfig, Secondary, SolverKind};
use crate::error::CliError;
use crate::testbed::Testbed;

/// Power iterations for the Lipschitz estimate of `∇½‖Rx − b‖²`.
const POWER_ITERATIONS: usize = 50;

/// One solver run: the trace, the relative error of every recorded iterate
/// and the final point. A run stopped by a solver error keeps the records
/// made so far and the error text.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub name: String,
    pub trace: SolverTrace,
    pub rel_error: Vec<f64>,
    pub x: Vec<f64>,
    pub abort: Option<String>,
}

impl MethodRun {
    /// Smallest relative error over the run and its iteration.
    pub fn best_rel_error(&self) -> Option<(usize, f64)> {
        argmin(&self.rel_error)
    }

    pub fn best_f0(&self) -> Option<f64> {
        argmin(&self.trace.f0_values()).map(|(_, v)| v)
    }
}

fn argmin(v: &[f64]) -> Option<(usize, f64)> {
    v.iter().copied().enumerate().filter(|(_, x)| !x.is_nan()).fold(None, |acc, (i, x)| match acc {
        Some((_, b)) if b <= x => acc,
        _ => Some((i, x)),
    })
}

/// Advance `solver` `iterations` times, recording the relative error of each
/// iterate the trace describes.
pub fn drive(name: &str, solver: &mut dyn Resumable, iterations: usize, tb: &Testbed) -> MethodRun {
    let mut rel_error = Vec::with_capacity(iterations);
    let mut abort = None;
    for _ in 0..iterations {
        let e = tb.relative_error_of(solver.iterate());
        match solver.step() {
            Ok(()) => rel_error.push(e),
            Err(err) => {
                abort = Some(err.to_string());
                break;
            }
        }
    }
    MethodRun { name: name.to_string(), trace: solver.trace().clone(), rel_error, x: solver.iterate().to_vec(), abort }
}

pub fn convex_set(c: Constraint) -> ConvexSet {
    match c {
        Constraint::None => ConvexSet::Whole,
        Constraint::Nonneg => ConvexSet::Nonnegative,
        Constraint::Box { lower, upper } => ConvexSet::Box { lower, upper },
    }
}

fn haar(side: usize) -> Result<Haar2d, CliError> {
    Haar2d::new(side).map_err(CliError::solver("Haar transform"))
}

fn secondary_objective(kind: Secondary, side: usize) -> Result<Box<dyn Objective + Send + Sync>, CliError> {
    Ok(match kind {
        Secondary::Haar => Box::new(TransformL1::new(haar(side)?)),
        Secondary::Tv => Box::new(TotalVariation::new(side).map_err(CliError::solver("TV"))?),
        Secondary::None => Box::new(Zero),
    })
}

/// Haar soft-thresholding, `J` iterated TV subgradient steps, or nothing.
fn secondary_operator(
    kind: Secondary,
    side: usize,
    tv_repeats: usize,
) -> Result<Box<dyn OptimalityOperator + Send + Sync>, CliError> {
    Ok(match kind {
        Secondary::Haar => Box::new(HaarProx::new(haar(side)?)),
        Secondary::Tv => {
            let tv = TotalVariation::new(side).map_err(CliError::solver("TV"))?;
            let op = Iterated::new(SubgradientStep::new(tv), tv_repeats, tv_subgradient_bound(side * side))
                .map_err(CliError::solver("iterated TV operator"))?;
            Box::new(op)
        }
        Secondary::None => Box::new(IdentityOperator),
    })
}

fn model(tb: &Testbed, subsets: usize) -> Result<LinearModel, CliError> {
    tb.radon.model(&tb.noisy, subsets).map_err(CliError::solver("linear model"))
}

pub fn lipschitz(model: &LinearModel) -> f64 {
    model.matrix().normal_norm_estimate(POWER_ITERATIONS)
}

/// FIBA on the Huber primary from `x0 = 0`, with `Δ` the residual norm at 0.
pub fn run_fiba(cfg: &ExperimentConfig, tb: &Testbed, model: &LinearModel) -> Result<MethodRun, CliError> {
    let n = cfg.testbed.side * cfg.testbed.side;
    let x0 = vec![0.0; n];
    let huber = Huber::setup(model, &x0).map_err(CliError::solver("Huber setup"))?;
    let f1 = secondary_objective(cfg.problem.secondary, cfg.testbed.side)?;
    let op1 = secondary_operator(cfg.problem.secondary, cfg.testbed.side, cfg.solver.tv_repeats)?;
    let set = convex_set(cfg.problem.constraint);
    let schedules = FibaSchedules::standard(cfg.solver.lambda.unwrap_or(0.5), cfg.solver.mu.unwrap_or(25.0))
        .map_err(CliError::solver("FIBA schedules"))?;
    let mut runner = FibaRunner::new(BilevelProblem::new(&huber, &*f1, &set), &*op1, schedules, x0)
        .map_err(CliError::solver("FIBA"))?
        .with_lipschitz(lipschitz(model));
    Ok(drive("FIBA", &mut runner, cfg.solver.max_iter, tb))
}

/// FISTA with penalty `γ` (or projection), stepsize `1/L` unless configured.
pub fn run_fista(
    cfg: &ExperimentConfig,
    tb: &Testbed,
    model: &LinearModel,
    gamma: f64,
    project: bool,
) -> Result<MethodRun, CliError> {
    let h = haar(cfg.testbed.side)?;
    let mode = FistaMode::from_parts(gamma, project).map_err(CliError::solver("FISTA mode"))?;
    let lambda = match cfg.solver.lambda {
        Some(l) => l,
        None => 1.0 / lipschitz(model),
    };
    let x0 = vec![0.0; cfg.testbed.side * cfg.testbed.side];
    let mut runner = FistaRunner::new(model, &h, mode, lambda, x0).map_err(CliError::solver("FISTA"))?;
    let name = if project { "FISTA-nonneg".to_string() } else { format!("FISTA-{gamma}") };
    Ok(drive(&name, &mut runner, cfg.solver.max_iter, tb))
}

/// Stepsizes shared by INC-s and IIBA-s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementalSetup {
    pub lambda: f64,
    pub epsilon: f64,
    pub mu: f64,
}

/// Configured `λ, ε, μ`, with the missing ones from the grid search and the
/// μ calibration at the consistent starting image.
pub fn incremental_setup(cfg: &ExperimentConfig, model: &LinearModel) -> Result<IncrementalSetup, CliError> {
    let side = cfg.testbed.side;
    let l1 = L1Residual::new(model);
    let f1 = secondary_objective(cfg.problem.secondary, side)?;
    let set = convex_set(cfg.problem.constraint);
    let x0 = consistent_start(model).map_err(CliError::solver("starting image"))?;
    let s = &cfg.solver;
    let (lambda, epsilon) = match s.lambda {
        Some(l) => (l, s.epsilon.unwrap_or(0.5)),
        None => {
            let mut params = GridSearchParams { budget: s.grid_budget, ..Default::default() };
            if let Some(e) = s.epsilon {
                params.epsilons = vec![e];
            }
            let choice = grid_search_lambda(BilevelProblem::new(&l1, &*f1, &set), &l1, &x0, &params, s.seed)
                .map_err(CliError::solver("λ grid search"))?;
            (choice.lambda, choice.epsilon)
        }
    };
    let mu = match s.mu {
        Some(m) => m,
        None if cfg.problem.secondary == Secondary::None => 0.0,
        None => {
            let op1 = secondary_operator(cfg.problem.secondary, side, s.tv_repeats)?;
            calibrate_mu(&Incremental::in_order(&l1), &*op1, lambda, &x0, s.mu_ratio)
                .map_err(CliError::solver("μ calibration"))?
        }
    };
    Ok(IncrementalSetup { lambda, epsilon, mu })
}

/// IIBA (`with_secondary`) or INC from the consistent starting image.
pub fn run_incremental(
    cfg: &ExperimentConfig,
    tb: &Testbed,
    model: &LinearModel,
    setup: IncrementalSetup,
    with_secondary: bool,
    name: &str,
) -> Result<MethodRun, CliError> {
    let side = cfg.testbed.side;
    let l1 = L1Residual::new(model);
    let f1 = secondary_objective(cfg.problem.secondary, side)?;
    let set = convex_set(cfg.problem.constraint);
    let x0 = consistent_start(model).map_err(CliError::solver("starting image"))?;
    let (s0, s1) = incremental_schedules(setup.lambda, setup.mu, setup.epsilon)
        .map_err(CliError::solver("incremental schedules"))?;
    let op1: Box<dyn OptimalityOperator + Send + Sync> = if with_secondary {
        secondary_operator(cfg.problem.secondary, side, cfg.solver.tv_repeats)?
    } else {
        Box::new(IdentityOperator)
    };
    let s1 = if with_secondary { s1 } else { StepSchedule::zero() };
    let problem = BilevelProblem::new(&l1, &*f1, &set);
    let mut runner = BilevelRunner::incremental(problem, &l1, cfg.solver.seed, &*op1, s0, s1, x0)
        .map_err(CliError::solver(name.to_string()))?;
    Ok(drive(name, &mut runner, cfg.solver.max_iter, tb))
}

/// The single run requested by `reconstruct`.
pub fn reconstruct(cfg: &ExperimentConfig, tb: &Testbed) -> Result<MethodRun, CliError> {
    let s = &cfg.solver;
    let m = model(tb, s.subsets)?;
    match s.kind {
        SolverKind::Fiba => run_fiba(cfg, tb, &m),
        SolverKind::Fista => run_fista(cfg, tb, &m, if s.project { 0.0 } else { s.gamma }, s.project),
        SolverKind::Iiba | SolverKind::Inc => {
            let setup = incremental_setup(cfg, &m)?;
            let iiba = s.kind == SolverKind::Iiba;
            let name = format!("{}-{}", if iiba { "IIBA" } else { "INC" }, s.subsets);
            run_incremental(cfg, tb, &m, setup, iiba, &name)
        }
    }
}

/// `f1` at the first iterate of each method reaching a common `f0` level.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedGroup {
    pub name: String,
    /// Indices into [`Comparison::runs`].
    pub methods: Vec<usize>,
    /// Decreasing `f0` levels.
    pub levels: Vec<f64>,
    /// `entries[l][j]`: `(k, f1)` of method `methods[j]` at level `l`.
    pub entries: Vec<Vec<(usize, f64)>>,
}

/// `n` levels evenly spaced below the largest initial `f0` down to the
/// largest per-method minimum, so every method reaches every level.
pub fn matched_levels(name: &str, runs: &[MethodRun], methods: Vec<usize>, n: usize) -> MatchedGroup {
    let f0s: Vec<Vec<f64>> = methods.iter().map(|&i| runs[i].trace.f0_values()).collect();
    let usable = f0s.iter().all(|f| !f.is_empty());
    if !usable {
        return MatchedGroup { name: name.to_string(), methods, levels: vec![], entries: vec![] };
    }
    let hi = f0s.iter().map(|f| f[0]).fold(f64::NEG_INFINITY, f64::max);
    let lo = f0s.iter().map(|f| argmin(f).map_or(f64::INFINITY, |(_, v)| v)).fold(f64::NEG_INFINITY, f64::max);
    let mut levels = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    for j in 0..n {
        let level = if j + 1 == n { lo } else { hi - (hi - lo) * (j + 1) as f64 / n as f64 };
        let row: Option<Vec<(usize, f64)>> = methods
            .iter()
            .zip(&f0s)
            .map(|(&i, f)| f.iter().position(|&v| v <= level).map(|k| (k, runs[i].trace.records()[k].f1)))
            .collect();
        if let Some(row) = row {
            levels.push(level);
            entries.push(row);
        }
    }
    MatchedGroup { name: name.to_string(), methods, levels, entries }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<MethodRun>,
    pub groups: Vec<MatchedGroup>,
}

type Job<'a> = Box<dyn FnOnce() -> Result<Vec<MethodRun>, CliError> + Send + 'a>;

/// Run jobs on up to `threads` scoped workers (0: one per job). Results come
/// back in job order, so the output does not depend on scheduling.
fn run_jobs(jobs: Vec<Job<'_>>, threads: usize) -> Result<Vec<MethodRun>, CliError> {
    let n = jobs.len();
    let workers = if threads == 0 { n } else { threads.min(n) }.max(1);
    let mut buckets: Vec<Vec<(usize, Job<'_>)>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, job) in jobs.into_iter().enumerate() {
        buckets[i % workers].push((i, job));
    }
    let mut results: Vec<Option<Result<Vec<MethodRun>, CliError>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = buckets
            .into_iter()
            .map(|bucket| scope.spawn(move || bucket.into_iter().map(|(i, job)| (i, job())).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("solver worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let mut runs = Vec::new();
    for r in results {
        runs.extend(r.expect("every job ran")?);
    }
    Ok(runs)
}

/// Simulated study: FISTA for each configured `γ`, then FIBA, on one model.
/// Incremental study: INC-s and IIBA-s for each subset count, sharing the
/// grid-searched `λ` and calibrated `μ`.
pub fn compare(cfg: &ExperimentConfig, tb: &Testbed) -> Result<Comparison, CliError> {
    let threads = cfg.compare.threads;
    let levels = cfg.compare.levels;
    match cfg.compare.kind {
        CompareKind::Simulated => {
            let m = model(tb, cfg.solver.subsets)?;
            let m = &m;
            let mut jobs: Vec<Job<'_>> = Vec::new();
            for &gamma in &cfg.solver.gammas {
                jobs.push(Box::new(move || Ok(vec![run_fista(cfg, tb, m, gamma, false)?])));
            }
            jobs.push(Box::new(move || Ok(vec![run_fiba(cfg, tb, m)?])));
            let runs = run_jobs(jobs, threads)?;
            let all = (0..runs.len()).collect();
            let group = matched_levels("all", &runs, all, levels);
            Ok(Comparison { runs, groups: vec![group] })
        }
        CompareKind::Incremental => {
            let mut jobs: Vec<Job<'_>> = Vec::new();
            for &s in &cfg.compare.subsets {
                jobs.push(Box::new(move || {
                    let m = model(tb, s)?;
                    let setup = incremental_setup(cfg, &m)?;
                    Ok(vec![
                        run_incremental(cfg, tb, &m, setup, false, &format!("INC-{s}"))?,
                        run_incremental(cfg, tb, &m, setup, true, &format!("IIBA-{s}"))?,
                    ])
                }));
            }
            let runs = run_jobs(jobs, threads)?;
            let groups = cfg
                .compare
                .subsets
                .iter()
                .enumerate()
                .map(|(i, s)| matched_levels(&format!("s={s}"), &runs, vec![2 * i, 2 * i + 1], levels))
                .collect();
            Ok(Comparison { runs, groups })
        }
    }
}

//! The abstract three-step bilevel iteration.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Substep};
use crate::operator::{OperatorMeta, OptimalityOperator};
use crate::operators::{incremental_meta, incremental_subgrad};
use crate::problem::{BilevelProblem, ComponentObjective};
use crate::schedule::StepSchedule;
use crate::trace::{IterationRecord, SolverTrace};
use crate::vector::{all_finite, dist};

/// A solver that can be advanced one iteration at a time.
pub trait Resumable {
    /// Perform iteration `k`, pushing its record to the trace.
    fn step(&mut self) -> Result<()>;

    /// The current iterate `x_k`, i.e. the point the next record describes.
    fn iterate(&self) -> &[f64];

    fn trace(&self) -> &SolverTrace;

    fn primary_meta(&self) -> OperatorMeta;

    fn secondary_meta(&self) -> OperatorMeta;
}

/// Final iterate plus the per-iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: SolverTrace,
    pub x: Vec<f64>,
}

pub(crate) fn ensure_finite(v: &[f64], iteration: usize, step: Substep) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration, step })
    }
}

// Built once per run; boxing the RNG buys nothing.
#[allow(clippy::large_enum_variant)]
enum Primary<'a> {
    Operator(&'a dyn OptimalityOperator),
    Incremental { f: &'a dyn ComponentObjective, rng: ChaCha8Rng, order: Vec<usize> },
}

pub struct BilevelRunner<'a> {
    problem: BilevelProblem<'a>,
    primary: Primary<'a>,
    secondary: &'a dyn OptimalityOperator,
    sched0: StepSchedule,
    sched1: StepSchedule,
    x: Vec<f64>,
    k: usize,
    trace: SolverTrace,
    record_mid: bool,
}

impl<'a> BilevelRunner<'a> {
    pub fn new(
        problem: BilevelProblem<'a>,
        op0: &'a dyn OptimalityOperator,
        op1: &'a dyn OptimalityOperator,
        sched0: StepSchedule,
        sched1: StepSchedule,
        x0: Vec<f64>,
    ) -> Result<Self> {
        Self::build(problem, Primary::Operator(op0), op1, sched0, sched1, x0)
    }

    /// Primary step is an incremental sweep over the components of `f`, in a
    /// fresh pseudo-random order every iteration.
    pub fn incremental(
        problem: BilevelProblem<'a>,
        f: &'a dyn ComponentObjective,
        seed: u64,
        op1: &'a dyn OptimalityOperator,
        sched0: StepSchedule,
        sched1: StepSchedule,
        x0: Vec<f64>,
    ) -> Result<Self> {
        let primary =
            Primary::Incremental { f, rng: ChaCha8Rng::seed_from_u64(seed), order: (0..f.num_components()).collect() };
        Self::build(problem, primary, op1, sched0, sched1, x0)
    }

    fn build(
        problem: BilevelProblem<'a>,
        primary: Primary<'a>,
        secondary: &'a dyn OptimalityOperator,
        sched0: StepSchedule,
        sched1: StepSchedule,
        x0: Vec<f64>,
    ) -> Result<Self> {
        ensure_finite(&x0, 0, Substep::Feasibility)
            .map_err(|_| crate::error::invalid("starting point must be finite"))?;
        Ok(BilevelRunner {
            problem,
            primary,
            secondary,
            sched0,
            sched1,
            x: x0,
            k: 0,
            trace: SolverTrace::new(),
            record_mid: false,
        })
    }

    /// Also evaluate `f0(x_{k+1/3})` every iteration.
    pub fn with_mid_values(mut self) -> Self {
        self.record_mid = true;
        self
    }

    pub fn run(&mut self, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            self.step()?;
        }
        Ok(())
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput { trace: self.trace, x: self.x }
    }
}

impl Resumable for BilevelRunner<'_> {
    fn step(&mut self) -> Result<()> {
        let k = self.k;
        let lambda = self.sched0.value(k);
        let mu = self.sched1.value(k);
        let f0 = self.problem.primary.value(&self.x);
        let f1 = self.problem.secondary.value(&self.x);

        let x13 = match &mut self.primary {
            Primary::Operator(op) => op.apply(lambda, &self.x),
            Primary::Incremental { f, rng, order } => {
                order.shuffle(rng);
                incremental_subgrad(*f, lambda, &self.x, order)?
            }
        };
        ensure_finite(&x13, k, Substep::Primary)?;
        let f0_mid = self.record_mid.then(|| self.problem.primary.value(&x13));

        let x23 = self.secondary.apply(mu, &x13);
        ensure_finite(&x23, k, Substep::Secondary)?;
        let x1 = self.problem.feasible.apply(mu, &x23);
        ensure_finite(&x1, k, Substep::Feasibility)?;

        self.trace.push(IterationRecord {
            k,
            f0,
            f1,
            step0_norm: dist(&self.x, &x13),
            step1_norm: dist(&self.x, &x23),
            lambda,
            mu,
            f0_mid,
        });
        self.x = x1;
        self.k += 1;
        Ok(())
    }

    fn iterate(&self) -> &[f64] {
        &self.x
    }

    fn trace(&self) -> &SolverTrace {
        &self.trace
    }

    fn primary_meta(&self) -> OperatorMeta {
        match &self.primary {
            Primary::Operator(op) => op.meta(),
            Primary::Incremental { f, .. } => incremental_meta(*f),
        }
    }

    fn secondary_meta(&self) -> OperatorMeta {
        self.secondary.meta()
    }
}

/// Run `max_iter` iterations of
/// `x_{k+1/3} = O_f0(λ_k, x_k)`, `x_{k+2/3} = O_f1(μ_k, x_{k+1/3})`,
/// `x_{k+1} = P(x_{k+2/3})`.
pub fn run_bilevel(
    problem: BilevelProblem<'_>,
    op0: &dyn OptimalityOperator,
    op1: &dyn OptimalityOperator,
    sched0: StepSchedule,
    sched1: StepSchedule,
    x0: &[f64],
    max_iter: usize,
) -> Result<RunOutput> {
    let mut runner = BilevelRunner::new(problem, op0, op1, sched0, sched1, x0.to_vec())?;
    runner.run(max_iter)?;
    Ok(runner.into_output())
}

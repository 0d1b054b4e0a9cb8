use crate::error::{invalid, Result, Substep};
use crate::framework::{ensure_finite, Resumable, RunOutput};
use crate::operator::{OperatorMeta, OptimalityOperator};
use crate::operators::sufficient_decrease_with;
use crate::problem::BilevelProblem;
use crate::schedule::StepSchedule;
use crate::trace::{IterationRecord, SolverTrace};
use crate::vector::{all_finite, dist, norm, step};

/// Primary stepsizes `λ_i`, secondary stepsizes `μ_k` and the movement
/// thresholds `ζ_k` that control when `λ` advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FibaSchedules {
    pub lambda: StepSchedule,
    pub mu: StepSchedule,
    pub zeta: StepSchedule,
}

impl FibaSchedules {
    /// `λ_k = λ/(k+1)^0.1`, `μ_k = μ/(k+1)`, `ζ_k = 10⁶/(k+1)^0.1`.
    pub fn standard(lambda: f64, mu: f64) -> Result<Self> {
        Ok(FibaSchedules {
            lambda: StepSchedule::power(lambda, 0.1)?,
            mu: StepSchedule::power(mu, 1.0)?,
            zeta: StepSchedule::power(1e6, 0.1)?,
        })
    }
}

/// Per-iteration diagnostics beyond the common trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FibaOutcome {
    /// Whether `f0(x_{k+1/3}) ≤ f0(x_k) + ∇f0(x_k)ᵀd + ‖d‖²/(2λ)` held.
    pub sufficient_decrease: Vec<bool>,
    /// Stepsize index `i_k` used at iteration `k`.
    pub lambda_index: Vec<usize>,
    /// `‖y_{k+1/3} − x_{k+1/3}‖ / (μ_k ζ_k)`, or 0 when the bound is 0 and
    /// the perturbation vanishes.
    pub perturbation_ratio: Vec<f64>,
    /// Iterations where `λ_{i_k} > 1/L` and sufficient decrease failed.
    pub step_violations: usize,
}

/// Accelerated projected gradient on `f0` perturbed by a secondary operator.
pub struct FibaRunner<'a> {
    problem: BilevelProblem<'a>,
    secondary: &'a dyn OptimalityOperator,
    schedules: FibaSchedules,
    lipschitz: Option<f64>,
    x: Vec<f64>,
    prev_mid: Vec<f64>,
    t: f64,
    i: usize,
    k: usize,
    trace: SolverTrace,
    outcome: FibaOutcome,
}

impl<'a> FibaRunner<'a> {
    pub fn new(
        problem: BilevelProblem<'a>,
        secondary: &'a dyn OptimalityOperator,
        schedules: FibaSchedules,
        x0: Vec<f64>,
    ) -> Result<Self> {
        if !all_finite(&x0) {
            return Err(invalid("starting point must be finite"));
        }
        Ok(FibaRunner {
            problem,
            secondary,
            schedules,
            lipschitz: None,
            prev_mid: x0.clone(),
            x: x0,
            t: 1.0,
            i: 0,
            k: 0,
            trace: SolverTrace::new(),
            outcome: FibaOutcome::default(),
        })
    }

    /// Known Lipschitz constant of `∇f0`, used only for diagnostics.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn run(&mut self, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            self.step()?;
        }
        Ok(())
    }

    pub fn momentum(&self) -> f64 {
        self.t
    }

    pub fn outcome(&self) -> &FibaOutcome {
        &self.outcome
    }

    pub fn into_parts(self) -> (RunOutput, FibaOutcome) {
        (RunOutput { trace: self.trace, x: self.x }, self.outcome)
    }
}

impl Resumable for FibaRunner<'_> {
    fn step(&mut self) -> Result<()> {
        let k = self.k;
        let lambda = self.schedules.lambda.value(self.i);
        let mu = self.schedules.mu.value(k);
        let zeta = self.schedules.zeta.value(k);
        let f0 = self.problem.primary;

        let f0x = f0.value(&self.x);
        let f1x = self.problem.secondary.value(&self.x);
        let g = f0.subgradient(&self.x);
        let x13 = self.problem.feasible.apply(mu, &step(&self.x, lambda, &g));
        ensure_finite(&x13, k, Substep::Primary)?;
        let f0_mid = f0.value(&x13);
        let decrease = sufficient_decrease_with(f0x, &g, f0_mid, &self.x, &x13, lambda);
        let small_step = self.lipschitz.is_some_and(|l| lambda * l <= 1.0);
        if !decrease && !small_step {
            self.outcome.step_violations += 1;
        }
        self.outcome.sufficient_decrease.push(decrease);
        self.outcome.lambda_index.push(self.i);

        let step0 = dist(&self.x, &x13);
        if step0 >= zeta {
            self.i += 1;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        let diff: Vec<f64> = x13.iter().zip(&self.prev_mid).map(|(a, b)| a - b).collect();
        let dn = norm(&diff);
        let xi = if dn == 0.0 { 1.0 } else { (mu * zeta / dn).min(1.0) };
        let w = xi * (self.t - 1.0) / t_next;
        let y: Vec<f64> = x13.iter().zip(&diff).map(|(a, d)| a + w * d).collect();
        ensure_finite(&y, k, Substep::Extrapolation)?;
        let bound = mu * zeta;
        // w = 0 when ‖diff‖ overflows; 0·∞ would read as NaN.
        let pert = if w == 0.0 { 0.0 } else { w.abs() * dn };
        let ratio = if bound > 0.0 {
            pert / bound
        } else if pert == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        debug_assert!(ratio <= 1.0 + 1e-12, "perturbation exceeds μζ");
        self.outcome.perturbation_ratio.push(ratio);

        let x23 = self.secondary.apply(mu, &y);
        ensure_finite(&x23, k, Substep::Secondary)?;
        let x1 = self.problem.feasible.apply(mu, &x23);
        ensure_finite(&x1, k, Substep::Feasibility)?;

        self.trace.push(IterationRecord {
            k,
            f0: f0x,
            f1: f1x,
            step0_norm: step0,
            step1_norm: dist(&self.x, &x23),
            lambda,
            mu,
            f0_mid: Some(f0_mid),
        });
        self.prev_mid = x13;
        self.t = t_next;
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
        OperatorMeta::new(2.0, None, 0.0)
    }

    fn secondary_meta(&self) -> OperatorMeta {
        self.secondary.meta()
    }
}

pub fn run_fiba(
    problem: BilevelProblem<'_>,
    secondary: &dyn OptimalityOperator,
    schedules: FibaSchedules,
    x0: &[f64],
    max_iter: usize,
) -> Result<(RunOutput, FibaOutcome)> {
    let mut r = FibaRunner::new(problem, secondary, schedules, x0.to_vec())?;
    r.run(max_iter)?;
    Ok(r.into_parts())
}

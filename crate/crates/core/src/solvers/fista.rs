use crate::error::{invalid, Result, Substep};
use crate::feasibility::ConvexSet;
use crate::framework::{ensure_finite, Resumable, RunOutput};
use crate::objectives::LinearModel;
use crate::operator::OperatorMeta;
use crate::operators::haar_prox;
use crate::trace::{IterationRecord, SolverTrace};
use crate::transform::OrthoTransform;
use crate::vector::{all_finite, dist, norm1, norm_sq, step};

/// Which proximal step follows the gradient step on `½‖Rx − b‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FistaMode {
    /// Prox of `γ‖H·‖₁`; `γ = 0` gives plain accelerated gradient.
    Regularized { gamma: f64 },
    /// Projection onto the nonnegative orthant.
    Projected,
}

impl FistaMode {
    /// Map the `(γ, projection)` pair to a mode. Combining a positive `γ`
    /// with the projection is rejected.
    pub fn from_parts(gamma: f64, project: bool) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("γ must be finite and nonnegative, got {gamma}")));
        }
        match (gamma > 0.0, project) {
            (true, true) => Err(invalid("regularization and nonnegativity cannot be combined")),
            (_, true) => Ok(FistaMode::Projected),
            _ => Ok(FistaMode::Regularized { gamma }),
        }
    }
}

/// Accelerated proximal gradient for `½‖Rx − b‖² + γ‖Hx‖₁` (or with a
/// nonnegativity constraint instead of the penalty). Records `f0 = ½‖Rx − b‖²`
/// and `f1 = ‖Hx‖₁`.
pub struct FistaRunner<'a, T: ?Sized> {
    model: &'a LinearModel,
    transform: &'a T,
    mode: FistaMode,
    lambda: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    k: usize,
    trace: SolverTrace,
}

impl<'a, T: OrthoTransform + ?Sized> FistaRunner<'a, T> {
    pub fn new(model: &'a LinearModel, transform: &'a T, mode: FistaMode, lambda: f64, x0: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("stepsize must be positive, got {lambda}")));
        }
        if !all_finite(&x0) || x0.len() != model.num_unknowns() {
            return Err(invalid("starting point must be finite and match the model"));
        }
        Ok(FistaRunner {
            model,
            transform,
            mode,
            lambda,
            y: x0.clone(),
            x: x0,
            t: 1.0,
            k: 0,
            trace: SolverTrace::new(),
        })
    }

    pub fn run(&mut self, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput { trace: self.trace, x: self.x }
    }

    fn prox(&self, v: Vec<f64>) -> Vec<f64> {
        match self.mode {
            FistaMode::Regularized { gamma } if gamma > 0.0 => haar_prox(self.transform, gamma * self.lambda, &v),
            FistaMode::Regularized { .. } => v,
            FistaMode::Projected => ConvexSet::Nonnegative.project(&v),
        }
    }
}

impl<T: OrthoTransform + ?Sized> Resumable for FistaRunner<'_, T> {
    fn step(&mut self) -> Result<()> {
        let k = self.k;
        let f0 = 0.5 * norm_sq(&self.model.residual(&self.x));
        let f1 = norm1(&self.transform.forward(&self.x));

        let g = self.model.matrix().adjoint(&self.model.residual(&self.y));
        let x_new = self.prox(step(&self.y, self.lambda, &g));
        ensure_finite(&x_new, k, Substep::Primary)?;
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        let w = (self.t - 1.0) / t_new;
        let y: Vec<f64> = x_new.iter().zip(&self.x).map(|(a, b)| a + w * (a - b)).collect();
        ensure_finite(&y, k, Substep::Extrapolation)?;

        let gamma = match self.mode {
            FistaMode::Regularized { gamma } => gamma,
            FistaMode::Projected => 0.0,
        };
        self.trace.push(IterationRecord {
            k,
            f0,
            f1,
            step0_norm: dist(&self.x, &x_new),
            step1_norm: dist(&y, &x_new),
            lambda: self.lambda,
            mu: gamma * self.lambda,
            f0_mid: None,
        });
        self.x = x_new;
        self.y = y;
        self.t = t_new;
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
        OperatorMeta::new(2.0, Some(0.0), 0.0)
    }
}

pub fn run_fista<T: OrthoTransform + ?Sized>(
    model: &LinearModel,
    gamma: f64,
    transform: &T,
    project: bool,
    lambda: f64,
    x0: &[f64],
    max_iter: usize,
) -> Result<RunOutput> {
    let mode = FistaMode::from_parts(gamma, project)?;
    let mut r = FistaRunner::new(model, transform, mode, lambda, x0.to_vec())?;
    r.run(max_iter)?;
    Ok(r.into_output())
}

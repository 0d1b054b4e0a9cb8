//! A-posteriori optimality certificates from best-so-far values.

use crate::error::{invalid, Error, Result};
use crate::framework::Resumable;
use crate::operator::OperatorMeta;
use crate::trace::{IterationRecord, SolverTrace};

/// Constants entering the bounds `σ₀`, `σ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingParams {
    /// Bound on `‖x_i − x*‖` for the iterates the windows start from.
    pub d: f64,
    /// Bound on subgradient norms of both objectives.
    pub m: f64,
    /// Upper bound on `f1(y) − inf f1` over points the secondary step sees.
    pub n: f64,
    pub beta: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Upper bound on `f0*`; the running best `φ₀` is used when absent.
    pub f0_star: Option<f64>,
}

impl StoppingParams {
    pub fn new(d: f64, m: f64, n: f64, beta: f64, eps0: f64, eps1: f64) -> Result<Self> {
        let ok = d > 0.0 && m >= 0.0 && n >= 0.0 && beta > 0.0 && eps0 >= 0.0 && eps1 >= 0.0;
        if !ok || ![d, m, n, beta, eps0, eps1].iter().all(|v| v.is_finite()) {
            return Err(invalid("stopping constants must be finite with D, β > 0 and M, N, ε ≥ 0"));
        }
        Ok(StoppingParams { d, m, n, beta, eps0, eps1, f0_star: None })
    }

    pub fn with_f0_star(mut self, f0_star: f64) -> Self {
        self.f0_star = Some(f0_star);
        self
    }
}

/// Linear error terms `ρ̄ᵢ(t) = coefᵢ · t` of the two operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    pub rho0: f64,
    pub rho1: f64,
}

/// Shared `β` and error bounds of an operator pair. Pairs with different `β`
/// are rejected since the bounds use a single constant.
pub fn operator_constants(op0: &OperatorMeta, op1: &OperatorMeta) -> Result<(f64, ErrorBounds)> {
    if op0.beta != op1.beta {
        return Err(invalid(format!(
            "operators have different β ({} and {}); the certificate needs a common value",
            op0.beta, op1.beta
        )));
    }
    Ok((op0.beta, ErrorBounds { rho0: op0.rho_coef, rho1: op1.rho_coef }))
}

/// Running sums behind `σ₀ᵏ`.
#[derive(Debug, Clone, Copy, Default)]
struct Sigma0Sums {
    num: f64,
    den: f64,
}

impl Sigma0Sums {
    fn add(&mut self, r: &IterationRecord, p: &StoppingParams, rho: &ErrorBounds) {
        let (l, u) = (r.lambda, r.mu);
        self.num += l * (rho.rho0 * l + p.beta * p.m * r.step0_norm) + u * (p.beta * p.n + rho.rho1 * u);
        self.den += p.beta * l;
    }

    fn value(&self, p: &StoppingParams) -> Result<f64> {
        if self.den <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok((p.d * p.d + self.num) / self.den)
    }
}

/// Running sums behind `σ₁^{k0,k}`.
#[derive(Debug, Clone, Copy, Default)]
struct Sigma1Sums {
    num: f64,
    den: f64,
}

impl Sigma1Sums {
    fn add(&mut self, r: &IterationRecord, best_f0: f64, p: &StoppingParams, rho: &ErrorBounds) {
        let (l, u) = (r.lambda, r.mu);
        // Without a recorded f0(x_{i+1/3}), bound it below by Lipschitz continuity.
        let f0_mid = r.f0_mid.unwrap_or(r.f0 - p.m * r.step0_norm);
        let f0_star = p.f0_star.unwrap_or(best_f0);
        let deficit = (f0_star - f0_mid).max(0.0);
        self.num += l * (rho.rho0 * l + p.beta * deficit) + u * (rho.rho1 * u + p.beta * p.m * r.step1_norm);
        self.den += p.beta * u;
    }

    fn value(&self, p: &StoppingParams) -> Result<f64> {
        if self.den <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok((p.d * p.d + self.num) / self.den)
    }
}

/// `σ₀ᵏ`, an upper bound on `φ₀ᵏ − f0*`.
pub fn sigma0(trace: &SolverTrace, k: usize, p: &StoppingParams, rho: &ErrorBounds) -> Result<f64> {
    check_index(trace, k)?;
    let mut s = Sigma0Sums::default();
    for r in &trace.records()[..=k] {
        s.add(r, p, rho);
    }
    s.value(p)
}

/// `σ₁^{k0,k}`, an upper bound on `φ₁^{k0,k} − f1*`.
pub fn sigma1(trace: &SolverTrace, k0: usize, k: usize, p: &StoppingParams, rho: &ErrorBounds) -> Result<f64> {
    check_index(trace, k)?;
    if k0 > k {
        return Err(invalid(format!("window start {k0} exceeds end {k}")));
    }
    let mut s = Sigma1Sums::default();
    for (i, r) in trace.records().iter().enumerate().take(k + 1).skip(k0) {
        s.add(r, trace.best_f0(i), p, rho);
    }
    s.value(p)
}

/// Every prefix value of `σ₀` in one pass.
pub fn sigma0_series(trace: &SolverTrace, p: &StoppingParams, rho: &ErrorBounds) -> Vec<Option<f64>> {
    let mut s = Sigma0Sums::default();
    trace
        .records()
        .iter()
        .map(|r| {
            s.add(r, p, rho);
            s.value(p).ok()
        })
        .collect()
}

/// Every value `σ₁^{k0,k}` for `k ≥ k0` in one pass.
pub fn sigma1_series(trace: &SolverTrace, k0: usize, p: &StoppingParams, rho: &ErrorBounds) -> Vec<Option<f64>> {
    let mut s = Sigma1Sums::default();
    trace
        .records()
        .iter()
        .enumerate()
        .skip(k0)
        .map(|(i, r)| {
            s.add(r, trace.best_f0(i), p, rho);
            s.value(p).ok()
        })
        .collect()
}

fn check_index(trace: &SolverTrace, k: usize) -> Result<()> {
    if k >= trace.len() {
        return Err(invalid(format!("index {k} outside a trace of {} records", trace.len())));
    }
    Ok(())
}

/// `Σ₀ⁿ a / Σ₀ⁿ b` for each `n`; `None` while the denominator is zero.
pub fn ratio_of_sums(a: &[f64], b: &[f64]) -> Result<Vec<Option<f64>>> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), actual: b.len() });
    }
    if a.iter().chain(b).any(|&v| !(v >= 0.0)) {
        return Err(invalid("ratio of sums needs nonnegative sequences"));
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            sa += x;
            sb += y;
            (sb > 0.0).then(|| sa / sb)
        })
        .collect())
}

/// Result of the two-phase stopping procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct StopCertificate {
    /// Whether both tests passed within the budget.
    pub stopped: bool,
    /// Index `k1` of the returned iterate.
    pub index: usize,
    pub x: Vec<f64>,
    pub f0: f64,
    pub f1: f64,
    /// End of the primary phase.
    pub k0: usize,
    /// Start of the final secondary window.
    pub kappa: usize,
    /// Last iteration performed.
    pub k: usize,
    /// `σ₀^{k0}`, bounding `f0(x) − f0*` when stopped.
    pub sigma0: Option<f64>,
    /// `σ₁^{κ,k}`, bounding `f1(x) − f1*` when stopped.
    pub sigma1: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Clone)]
struct Snapshot {
    index: usize,
    x: Vec<f64>,
    f0: f64,
    f1: f64,
}

struct Driver<'r, R: ?Sized> {
    runner: &'r mut R,
    max_iter: usize,
    current: Option<Snapshot>,
}

impl<R: Resumable + ?Sized> Driver<'_, R> {
    /// One more iteration, or `None` when the budget is spent.
    fn advance(&mut self) -> Result<Option<IterationRecord>> {
        if self.runner.trace().len() >= self.max_iter {
            return Ok(None);
        }
        let x = self.runner.iterate().to_vec();
        self.runner.step()?;
        let r = *self.runner.trace().last().expect("a record was just pushed");
        self.current = Some(Snapshot { index: r.k, x, f0: r.f0, f1: r.f1 });
        Ok(Some(r))
    }

    fn last_index(&self) -> usize {
        self.runner.trace().len().saturating_sub(1)
    }
}

/// Advance `runner` until both certificates fall below their tolerances.
///
/// Phase A iterates until `σ₀ᵏ ≤ ε₀` and fixes `k0 = κ = k`. Phase B iterates
/// until `σ₁^{κ,k} ≤ ε₁`, picks `k1 = argmin f1` over `[κ, k]`, and stops if
/// `f0(x_{k1}) ≤ φ₀^{k0}`; otherwise it restarts the window at `κ = k` and
/// performs at least one further iteration before testing again. The runner
/// must be fresh; at most `max_iter` iterations are performed.
pub fn stopping_procedure<R: Resumable + ?Sized>(
    runner: &mut R,
    p: &StoppingParams,
    rho: &ErrorBounds,
    max_iter: usize,
) -> Result<StopCertificate> {
    if !runner.trace().is_empty() {
        return Err(invalid("stopping procedure needs a fresh runner"));
    }
    let mut drv = Driver { runner, max_iter, current: None };

    let partial = |drv: &Driver<'_, R>,
                   snap: Option<Snapshot>,
                   k0: Option<usize>,
                   kappa: usize,
                   s0: Option<f64>,
                   s1: Option<f64>,
                   reason: &str| {
        let snap = snap.unwrap_or(Snapshot { index: 0, x: drv.runner.iterate().to_vec(), f0: f64::NAN, f1: f64::NAN });
        StopCertificate {
            stopped: false,
            index: snap.index,
            f0: snap.f0,
            f1: snap.f1,
            x: snap.x,
            k0: k0.unwrap_or(snap.index),
            kappa,
            k: drv.last_index(),
            sigma0: s0,
            sigma1: s1,
            reason: Some(reason.to_string()),
        }
    };

    // Phase A.
    let mut s0 = Sigma0Sums::default();
    let mut sigma0_value = None;
    loop {
        let Some(r) = drv.advance()? else {
            let snap = drv.current.clone();
            return Ok(partial(&drv, snap, None, 0, sigma0_value, None, "budget exhausted before σ₀ ≤ ε₀"));
        };
        s0.add(&r, p, rho);
        sigma0_value = s0.value(p).ok();
        if sigma0_value.is_some_and(|v| v <= p.eps0) {
            break;
        }
    }
    let k0 = drv.last_index();
    let phi0 = drv.runner.trace().best_f0(k0);
    let mut kappa = k0;
    let mut restarted = false;

    // Phase B.
    loop {
        let start = drv.current.clone().expect("phase A performed a step");
        let mut s1 = Sigma1Sums::default();
        let r = drv.runner.trace().records()[kappa];
        s1.add(&r, drv.runner.trace().best_f0(kappa), p, rho);
        let mut sigma1_value = s1.value(p).ok();
        let mut best = start;
        let mut steps = 0usize;

        loop {
            let passed = sigma1_value.is_some_and(|v| v <= p.eps1);
            if passed && (!restarted || steps > 0) {
                break;
            }
            let Some(r) = drv.advance()? else {
                let reason = "budget exhausted before σ₁ ≤ ε₁";
                return Ok(partial(&drv, Some(best), Some(k0), kappa, sigma0_value, sigma1_value, reason));
            };
            steps += 1;
            s1.add(&r, drv.runner.trace().best_f0(r.k), p, rho);
            sigma1_value = s1.value(p).ok();
            if r.f1 < best.f1 {
                best = drv.current.clone().unwrap();
            }
        }

        if best.f0 <= phi0 {
            return Ok(StopCertificate {
                stopped: true,
                index: best.index,
                f0: best.f0,
                f1: best.f1,
                x: best.x,
                k0,
                kappa,
                k: drv.last_index(),
                sigma0: sigma0_value,
                sigma1: sigma1_value,
                reason: None,
            });
        }
        kappa = drv.last_index();
        restarted = true;
    }
}

//! Projectors and Fejér-monotone feasibility operators.
//!
//! A [`Feasibility`] map plays the `P_X0` role in the bilevel loop. Simple
//! sets are projected onto exactly; intersections of sublevel sets are
//! handled with relaxed Polyak steps composed sequentially (POCS) or averaged
//! (Cimmino), optionally repeated until a merit function is small enough.

use crate::error::{invalid, Result};
use crate::vector::{dist, norm, norm_sq};

/// The feasibility step `(μ, x) → x′` of the bilevel iteration.
pub trait Feasibility {
    fn apply(&self, mu: f64, x: &[f64]) -> Vec<f64>;
}

/// Closed convex sets with a cheap exact projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Whole,
    Nonnegative,
    Box { lower: f64, upper: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexSet {
    pub fn bounds(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(invalid(format!("empty box [{lower}, {upper}]")));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(invalid(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            ConvexSet::Whole => {}
            ConvexSet::Nonnegative => {
                for v in x.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            ConvexSet::Box { lower, upper } => {
                for v in x.iter_mut() {
                    *v = v.clamp(*lower, *upper);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let d = dist(x, center);
                if d > *radius {
                    let t = radius / d;
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + t * (*v - c);
                    }
                }
            }
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::Whole => true,
            ConvexSet::Nonnegative => x.iter().all(|&v| v >= -tol),
            ConvexSet::Box { lower, upper } => x.iter().all(|&v| v >= lower - tol && v <= upper + tol),
            ConvexSet::Ball { center, radius } => dist(x, center) <= radius + tol,
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        dist(x, &self.project(x))
    }
}

impl Feasibility for ConvexSet {
    fn apply(&self, _mu: f64, x: &[f64]) -> Vec<f64> {
        self.project(x)
    }
}

/// Convex `h` describing the set `lev₀(h) = {x : h(x) ≤ 0}`.
pub trait Constraint {
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// `h(x) = (aᵀx − b) / ‖a‖`, the signed distance to the hyperplane.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    /// The set `{x : aᵀx ≤ b}`.
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self> {
        let n = norm(&a);
        if n == 0.0 {
            return Err(invalid("half-space normal must be nonzero"));
        }
        Ok(HalfSpace { normal: a.iter().map(|v| v / n).collect(), offset: b / n })
    }
}

impl Constraint for HalfSpace {
    fn value(&self, x: &[f64]) -> f64 {
        crate::vector::dot(&self.normal, x) - self.offset
    }
    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.normal.clone()
    }
}

/// `h(x) = ‖x − c‖ − r`.
#[derive(Debug, Clone)]
pub struct BallConstraint {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Constraint for BallConstraint {
    fn value(&self, x: &[f64]) -> f64 {
        dist(x, &self.center) - self.radius
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let d = dist(x, &self.center);
        if d == 0.0 {
            return vec![0.0; x.len()];
        }
        x.iter().zip(&self.center).map(|(a, c)| (a - c) / d).collect()
    }
}

/// `h(x) = d_C(x)` for a set with an exact projector.
#[derive(Debug, Clone)]
pub struct DistanceTo(pub ConvexSet);

impl Constraint for DistanceTo {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.distance(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let p = self.0.project(x);
        let d = dist(x, &p);
        if d == 0.0 {
            return vec![0.0; x.len()];
        }
        x.iter().zip(&p).map(|(a, b)| (a - b) / d).collect()
    }
}

/// An operator that never increases the distance to any point of its target set.
pub trait FejerOperator {
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

impl<T: FejerOperator + ?Sized> FejerOperator for Box<T> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (**self).apply(x)
    }
}

/// Relaxed subgradient projection toward `lev₀(h)`:
/// `x − ν [h(x)]₊ / ‖g‖² · g` with `g ∈ ∂h(x)`.
pub struct PolyakStep<H> {
    constraint: H,
    relaxation: f64,
}

impl<H: Constraint> PolyakStep<H> {
    pub fn new(constraint: H, relaxation: f64) -> Result<Self> {
        if !(relaxation > 0.0 && relaxation <= 2.0) {
            return Err(invalid(format!("relaxation must lie in (0, 2], got {relaxation}")));
        }
        Ok(PolyakStep { constraint, relaxation })
    }

    pub fn constraint(&self) -> &H {
        &self.constraint
    }
}

/// One relaxed Polyak step, free-function form.
pub fn polyak_step<H: Constraint + ?Sized>(h: &H, relaxation: f64, x: &[f64]) -> Vec<f64> {
    let hv = h.value(x);
    if hv <= 0.0 {
        return x.to_vec();
    }
    let g = h.subgradient(x);
    let gg = norm_sq(&g);
    if gg == 0.0 {
        return x.to_vec();
    }
    let t = relaxation * hv / gg;
    crate::vector::step(x, t, &g)
}

impl<H: Constraint> FejerOperator for PolyakStep<H> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        polyak_step(&self.constraint, self.relaxation, x)
    }
}

/// Exact projection as a Fejér operator.
impl FejerOperator for ConvexSet {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.project(x)
    }
}

/// `E₁ = S_r ∘ ⋯ ∘ S_1`.
pub struct Sequential {
    steps: Vec<Box<dyn FejerOperator>>,
}

/// `E₂ = (1/r) Σ S_i`.
pub struct Averaged {
    steps: Vec<Box<dyn FejerOperator>>,
}

pub fn pocs_compose(steps: Vec<Box<dyn FejerOperator>>) -> Result<Sequential> {
    if steps.is_empty() {
        return Err(invalid("sequential composition needs at least one step"));
    }
    Ok(Sequential { steps })
}

pub fn cimmino_average(steps: Vec<Box<dyn FejerOperator>>) -> Result<Averaged> {
    if steps.is_empty() {
        return Err(invalid("averaged composition needs at least one step"));
    }
    Ok(Averaged { steps })
}

impl FejerOperator for Sequential {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.steps {
            y = s.apply(&y);
        }
        y
    }
}

impl FejerOperator for Averaged {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let r = self.steps.len() as f64;
        let mut acc = vec![0.0; x.len()];
        for s in &self.steps {
            let y = s.apply(x);
            for (a, v) in acc.iter_mut().zip(&y) {
                *a += v;
            }
        }
        for a in acc.iter_mut() {
            *a /= r;
        }
        acc
    }
}

/// Constants of the repeat-until-tolerance test `φ(y) ≤ K μ^{αε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub k: f64,
    pub alpha: f64,
    pub eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { k: 1.0, alpha: 1.0, eps: 1.0 }
    }
}

impl Tolerance {
    pub fn new(k: f64, alpha: f64, eps: f64) -> Result<Self> {
        if !(k > 0.0 && alpha > 0.0 && eps > 0.0) {
            return Err(invalid("K, α and ε must all be positive"));
        }
        Ok(Tolerance { k, alpha, eps })
    }

    pub fn threshold(&self, mu: f64) -> f64 {
        self.k * mu.powf(self.alpha * self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub x: Vec<f64>,
    /// Number of applications performed.
    pub applications: usize,
    pub budget_exhausted: bool,
}

pub const DEFAULT_MAX_REPEATS: usize = 100;

/// Apply `op` until `merit(y) ≤ K μ^{αε}`, at most `max_repeats` times.
pub fn repeat_until_feasible<E, M>(
    op: &E,
    merit: M,
    tol: Tolerance,
    mu: f64,
    x: &[f64],
    max_repeats: usize,
) -> Result<RepeatOutcome>
where
    E: FejerOperator + ?Sized,
    M: Fn(&[f64]) -> f64,
{
    if max_repeats == 0 {
        return Err(invalid("repeat budget must be at least one"));
    }
    let threshold = tol.threshold(mu);
    let mut y = x.to_vec();
    for p in 0..=max_repeats {
        if merit(&y) <= threshold {
            return Ok(RepeatOutcome { x: y, applications: p, budget_exhausted: false });
        }
        if p == max_repeats {
            break;
        }
        y = op.apply(&y);
    }
    Ok(RepeatOutcome { x: y, applications: max_repeats, budget_exhausted: true })
}

/// `φ(x) = max_i [h_i(x)]₊`.
pub fn max_violation(constraints: &[&dyn Constraint], x: &[f64]) -> f64 {
    constraints.iter().map(|h| h.value(x).max(0.0)).fold(0.0, f64::max)
}

/// A Fejér operator repeated until tolerance, usable as the `P_X0` step.
pub struct RepeatedFeasibility<E, M> {
    pub op: E,
    pub merit: M,
    pub tolerance: Tolerance,
    pub max_repeats: usize,
}

impl<E: FejerOperator, M: Fn(&[f64]) -> f64> Feasibility for RepeatedFeasibility<E, M> {
    fn apply(&self, mu: f64, x: &[f64]) -> Vec<f64> {
        let max = self.max_repeats.max(1);
        match repeat_until_feasible(&self.op, &self.merit, self.tolerance, mu, x, max) {
            Ok(out) => out.x,
            Err(_) => unreachable!("budget is at least one"),
        }
    }
}

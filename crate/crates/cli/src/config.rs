//! Experiment configuration: a TOML file with `[testbed]`, `[problem]`,
//! `[solver]`, `[compare]` and `[output]` sections.
//!
//! Every key is optional except the seed. Problem defaults follow the solver
//! family: the smooth family (FIBA, FISTA, simulated comparison) defaults to a
//! Huber primary, Haar secondary and no constraint; the incremental family
//! (IIBA, INC, incremental comparison) to an ℓ1 residual, TV and
//! nonnegativity.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Primary {
    LsqHuber,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Secondary {
    Haar,
    Tv,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    None,
    Nonneg,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Fiba,
    Iiba,
    Inc,
    Fista,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareKind {
    /// Five FISTA penalties against FIBA.
    Simulated,
    /// INC-s against IIBA-s for each subset count.
    Incremental,
}

/// Which subcommand the configuration is loaded for. Problem defaults and
/// solver checks depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Phantom,
    Project,
    Reconstruct,
    Compare,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    testbed: RawTestbed,
    problem: RawProblem,
    solver: RawSolver,
    compare: RawCompare,
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTestbed {
    side: Option<usize>,
    n_angles: Option<usize>,
    n_det: Option<usize>,
    noise: Option<f64>,
    intensity: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawProblem {
    primary: Option<Primary>,
    secondary: Option<Secondary>,
    constraint: Option<ConstraintKind>,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSolver {
    kind: Option<SolverKind>,
    max_iter: Option<usize>,
    lambda: Option<f64>,
    mu: Option<f64>,
    epsilon: Option<f64>,
    subsets: Option<usize>,
    gamma: Option<f64>,
    gammas: Option<Vec<f64>>,
    project: Option<bool>,
    tv_repeats: Option<usize>,
    mu_ratio: Option<f64>,
    grid_budget: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawCompare {
    kind: Option<CompareKind>,
    subsets: Option<Vec<usize>>,
    levels: Option<usize>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestbedConfig {
    pub side: usize,
    pub n_angles: usize,
    pub n_det: usize,
    /// Target relative error of the noisy sinogram.
    pub noise: f64,
    /// Attenuation scale of the reconstructed phantom; noise is simulated on
    /// the unit phantom and the data are multiplied by this factor.
    pub intensity: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    None,
    Nonneg,
    Box { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub primary: Primary,
    pub secondary: Secondary,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub max_iter: usize,
    /// FIBA: base of `λ_k`. FISTA: stepsize (default `1/L`). INC/IIBA: base
    /// of `λ_k` (default from the grid search).
    pub lambda: Option<f64>,
    /// FIBA: base of `μ_k`. IIBA: base of `μ_k` (default calibrated).
    pub mu: Option<f64>,
    /// INC/IIBA decay exponent of `λ_k` (default from the grid search).
    pub epsilon: Option<f64>,
    pub subsets: usize,
    /// FISTA penalty for `reconstruct`.
    pub gamma: f64,
    /// FISTA penalties for the simulated comparison.
    pub gammas: Vec<f64>,
    /// FISTA: project onto the nonnegative orthant instead of penalizing.
    pub project: bool,
    /// Inner repeats of the iterated TV subgradient operator.
    pub tv_repeats: usize,
    /// Target `‖x_{1/3} − x_{2/3}‖ / ‖x_0 − x_{1/3}‖` for the μ calibration.
    pub mu_ratio: f64,
    /// Iterations per candidate in the λ grid search.
    pub grid_budget: usize,
    /// Seed for the shuffled incremental sweeps and the grid search.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub kind: CompareKind,
    pub subsets: Vec<usize>,
    /// Number of matched `f0` levels in the comparison table.
    pub levels: usize,
    /// Worker threads; 0 means one per method.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub testbed: TestbedConfig,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub compare: CompareConfig,
    pub output: PathBuf,
}

/// Values given on the command line, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn bad(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: msg.into() }
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(path, format!("must be positive and finite, got {v}")))
    }
}

/// Smooth family when true, incremental family otherwise.
fn smooth_family(command: Command, solver: Option<SolverKind>, compare: Option<CompareKind>) -> bool {
    match command {
        Command::Compare => compare.unwrap_or(CompareKind::Simulated) == CompareKind::Simulated,
        _ => matches!(solver.unwrap_or(SolverKind::Fiba), SolverKind::Fiba | SolverKind::Fista),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path, command: Command, overrides: &Overrides) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, command, overrides)
    }

    pub fn from_toml(text: &str, command: Command, overrides: &Overrides) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| bad("", e.to_string()))?;
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            bad(if path == "." { "" } else { &path }, message)
        })?;
        Self::resolve(raw, command, overrides)
    }

    fn resolve(raw: RawConfig, command: Command, overrides: &Overrides) -> Result<Self, CliError> {
        let t = raw.testbed;
        let side = t.side.unwrap_or(128);
        if side < 2 {
            return Err(bad("testbed.side", format!("must be at least 2, got {side}")));
        }
        let n_angles = t.n_angles.unwrap_or(64);
        if n_angles == 0 {
            return Err(bad("testbed.n_angles", "must be at least 1"));
        }
        let n_det = t.n_det.unwrap_or(side);
        if n_det == 0 {
            return Err(bad("testbed.n_det", "must be at least 1"));
        }
        let noise = t.noise.unwrap_or(0.10);
        if !(noise > 0.0 && noise < 1.0) {
            return Err(bad("testbed.noise", format!("must lie in (0, 1), got {noise}")));
        }
        let intensity = positive("testbed.intensity", t.intensity.unwrap_or(200.0))?;
        let seed = overrides
            .seed
            .or(t.seed)
            .ok_or_else(|| bad("testbed.seed", "missing (set it in the file or pass --seed)"))?;
        let testbed = TestbedConfig { side, n_angles, n_det, noise, intensity, seed };

        let s = raw.solver;
        let c = raw.compare;
        let smooth = smooth_family(command, s.kind, c.kind);

        let p = raw.problem;
        let primary = p.primary.unwrap_or(if smooth { Primary::LsqHuber } else { Primary::L1 });
        let secondary = p.secondary.unwrap_or(if smooth { Secondary::Haar } else { Secondary::Tv });
        let kind = p.constraint.unwrap_or(if smooth { ConstraintKind::None } else { ConstraintKind::Nonneg });
        let constraint = match kind {
            ConstraintKind::None => Constraint::None,
            ConstraintKind::Nonneg => Constraint::Nonneg,
            ConstraintKind::Box => {
                let lower = p.lower.unwrap_or(0.0);
                let upper = p.upper.ok_or_else(|| bad("problem.upper", "required for a box constraint"))?;
                if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                    return Err(bad("problem.upper", format!("empty or unbounded box [{lower}, {upper}]")));
                }
                Constraint::Box { lower, upper }
            }
        };
        if kind != ConstraintKind::Box && (p.lower.is_some() || p.upper.is_some()) {
            return Err(bad("problem.constraint", "bounds given but the constraint is not `box`"));
        }
        if secondary == Secondary::Haar && !side.is_power_of_two() {
            return Err(bad("testbed.side", format!("the Haar transform needs a power of two, got {side}")));
        }
        let problem = ProblemConfig { primary, secondary, constraint };

        let solver_kind = s.kind.unwrap_or(SolverKind::Fiba);
        let max_iter = s.max_iter.unwrap_or(if smooth { 400 } else { 100 });
        if max_iter == 0 {
            return Err(bad("solver.max_iter", "must be at least 1"));
        }
        let opt_pos = |path: &str, v: Option<f64>| v.map(|v| positive(path, v)).transpose();
        let lambda = opt_pos("solver.lambda", s.lambda)?;
        let mu = match s.mu {
            Some(m) if !(m >= 0.0 && m.is_finite()) => {
                return Err(bad("solver.mu", format!("must be nonnegative and finite, got {m}")))
            }
            m => m,
        };
        let epsilon = s.epsilon;
        if let Some(e) = epsilon {
            if !(e > 0.0 && e <= 1.0) {
                return Err(bad("solver.epsilon", format!("must lie in (0, 1], got {e}")));
            }
        }
        let subsets = s.subsets.unwrap_or(1);
        if subsets == 0 || subsets > n_angles {
            return Err(bad("solver.subsets", format!("must lie in 1..={n_angles}, got {subsets}")));
        }
        let check_gamma = |path: &str, g: f64| {
            if g >= 0.0 && g.is_finite() {
                Ok(g)
            } else {
                Err(bad(path, format!("must be nonnegative and finite, got {g}")))
            }
        };
        let gamma = check_gamma("solver.gamma", s.gamma.unwrap_or(1.0))?;
        let gammas = s.gammas.unwrap_or_else(|| vec![100.0, 10.0, 1.5, 1.0, 0.0]);
        if gammas.is_empty() {
            return Err(bad("solver.gammas", "must not be empty"));
        }
        for (i, &g) in gammas.iter().enumerate() {
            check_gamma(&format!("solver.gammas[{i}]"), g)?;
        }
        let project = s.project.unwrap_or(false);
        let tv_repeats = s.tv_repeats.unwrap_or(5);
        if tv_repeats == 0 {
            return Err(bad("solver.tv_repeats", "must be at least 1"));
        }
        let mu_ratio = positive("solver.mu_ratio", s.mu_ratio.unwrap_or(0.1))?;
        let grid_budget = s.grid_budget.unwrap_or(10);
        if grid_budget == 0 {
            return Err(bad("solver.grid_budget", "must be at least 1"));
        }
        let solver = SolverConfig {
            kind: solver_kind,
            max_iter,
            lambda,
            mu,
            epsilon,
            subsets,
            gamma,
            gammas,
            project,
            tv_repeats,
            mu_ratio,
            grid_budget,
            seed: s.seed.unwrap_or(seed),
        };

        let compare_kind = c.kind.unwrap_or(CompareKind::Simulated);
        // Default subset counts that exceed the number of angles are dropped;
        // explicit ones are checked.
        let compare_subsets = c.subsets.unwrap_or_else(|| [1, 4, 16].into_iter().filter(|&q| q <= n_angles).collect());
        if compare_subsets.is_empty() {
            return Err(bad("compare.subsets", "must not be empty"));
        }
        for (i, &q) in compare_subsets.iter().enumerate() {
            if q == 0 || q > n_angles {
                return Err(bad(&format!("compare.subsets[{i}]"), format!("must lie in 1..={n_angles}, got {q}")));
            }
        }
        let levels = c.levels.unwrap_or(20);
        if levels == 0 {
            return Err(bad("compare.levels", "must be at least 1"));
        }
        let compare =
            CompareConfig { kind: compare_kind, subsets: compare_subsets, levels, threads: c.threads.unwrap_or(0) };

        let output = overrides.out.clone().or(raw.output.dir).unwrap_or_else(|| PathBuf::from("out"));

        let cfg = ExperimentConfig { command, testbed, problem, solver, compare, output };
        cfg.check_combination()?;
        Ok(cfg)
    }

    /// Solver preconditions on the problem choice.
    fn check_combination(&self) -> Result<(), CliError> {
        let p = &self.problem;
        match self.command {
            Command::Phantom | Command::Project => Ok(()),
            Command::Reconstruct => match self.solver.kind {
                SolverKind::Fiba => {
                    if p.primary != Primary::LsqHuber {
                        return Err(bad("problem.primary", "FIBA needs the differentiable `lsq-huber` primary"));
                    }
                    Ok(())
                }
                SolverKind::Iiba | SolverKind::Inc => {
                    if p.primary != Primary::L1 {
                        return Err(bad("problem.primary", "incremental methods need the `l1` primary"));
                    }
                    Ok(())
                }
                SolverKind::Fista => self.check_fista(),
            },
            Command::Compare => match self.compare.kind {
                CompareKind::Simulated => {
                    if p.primary != Primary::LsqHuber {
                        return Err(bad("problem.primary", "the simulated comparison needs `lsq-huber`"));
                    }
                    self.check_fista()
                }
                CompareKind::Incremental => {
                    if p.primary != Primary::L1 {
                        return Err(bad("problem.primary", "the incremental comparison needs `l1`"));
                    }
                    if p.secondary == Secondary::None {
                        return Err(bad("problem.secondary", "the incremental comparison needs a secondary objective"));
                    }
                    Ok(())
                }
            },
        }
    }

    fn check_fista(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if p.secondary != Secondary::Haar {
            return Err(bad("problem.secondary", "FISTA penalizes the Haar ℓ1 norm; use `haar`"));
        }
        if self.solver.project && p.constraint != Constraint::Nonneg {
            return Err(bad("solver.project", "projection needs `problem.constraint = \"nonneg\"`"));
        }
        match p.constraint {
            Constraint::None => Ok(()),
            Constraint::Nonneg if self.command == Command::Reconstruct && self.solver.project => {
                if self.solver.gamma > 0.0 {
                    Err(bad("solver.gamma", "a projected FISTA run takes γ = 0"))
                } else {
                    Ok(())
                }
            }
            _ => Err(bad(
                "problem.constraint",
                "FISTA runs unconstrained, or with `nonneg` and `solver.project = true` in reconstruct",
            )),
        }
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::vector::{dist, norm};

/// Noisy line integrals and the transmitted-count level that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyData {
    pub data: Vec<f64>,
    /// `‖b − p‖ / ‖p‖`
    pub relative_error: f64,
    /// Expected unattenuated count per ray.
    pub incident: f64,
}

/// Counts `N ~ Poisson(N₀ e^{−p})` turned back into `ln(N₀/N)`, with
/// zero counts read as one.
pub fn simulate_poisson_counts(p: &[f64], incident: f64, seed: u64) -> Result<NoisyData> {
    if !(incident >= 1.0 && incident.is_finite()) {
        return Err(invalid(format!("incident count must be at least 1, got {incident}")));
    }
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(invalid("line integrals must be finite and nonnegative"));
    }
    let pn = norm(p);
    if pn == 0.0 {
        return Err(invalid("line integrals are all zero"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = p
        .iter()
        .map(|&v| {
            let mean = incident * (-v).exp();
            let n = if mean > 0.0 { Poisson::new(mean).map(|d| d.sample(&mut rng)).unwrap_or(0.0) } else { 0.0 };
            (incident / n.max(1.0)).ln()
        })
        .collect();
    let relative_error = dist(&data, p) / pn;
    Ok(NoisyData { data, relative_error, incident })
}

/// Pick the incident count by bisection on `ln N₀` (same seed at every
/// trial) so the relative data error lands within ±10% of `target`.
pub fn simulate_poisson(p: &[f64], target: f64, seed: u64) -> Result<NoisyData> {
    if !(target > 0.0 && target < 1.0) {
        return Err(invalid(format!("target relative error must lie in (0, 1), got {target}")));
    }
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    let at_lo = simulate_poisson_counts(p, lo.exp(), seed)?;
    let at_hi = simulate_poisson_counts(p, hi.exp(), seed)?;
    if at_lo.relative_error < target * 0.9 || at_hi.relative_error > target * 1.1 {
        return Err(Error::Calibration(format!(
            "relative error {target} outside the reachable range [{}, {}]",
            at_hi.relative_error, at_lo.relative_error
        )));
    }
    let mut best =
        if (at_lo.relative_error - target).abs() < (at_hi.relative_error - target).abs() { at_lo } else { at_hi };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let trial = simulate_poisson_counts(p, mid.exp(), seed)?;
        if (trial.relative_error - target).abs() < (best.relative_error - target).abs() {
            best = trial.clone();
        }
        if (trial.relative_error / target - 1.0).abs() <= 0.02 {
            return Ok(trial);
        }
        if trial.relative_error > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.relative_error / target - 1.0).abs() <= 0.1 {
        Ok(best)
    } else {
        Err(Error::Calibration(format!("closest relative error {} misses target {target}", best.relative_error)))
    }
}

//! Simulated parallel-beam data for the configured phantom and noise level.

use bilevel::tomo::{simulate_poisson, Geometry, Phantom, Radon, Sinogram};
use bilevel::Image;

use crate::config::TestbedConfig;
use crate::error::CliError;

pub struct Testbed {
    pub radon: Radon,
    /// Phantom at the configured intensity, the reconstruction target.
    pub truth: Image,
    pub clean: Sinogram,
    pub noisy: Sinogram,
    /// Realized `‖p̃ − p‖ / ‖p‖`.
    pub relative_error: f64,
    /// Incident photon count chosen by the calibration.
    pub incident: f64,
}

impl Testbed {
    /// Counts are drawn for the unit-intensity phantom, whose attenuations
    /// are O(1); both sinograms are then multiplied by the intensity. The
    /// relative error is unchanged by the scaling.
    pub fn build(cfg: &TestbedConfig) -> Result<Self, CliError> {
        let geometry = Geometry::half_turn(cfg.n_angles, cfg.n_det).map_err(CliError::solver("geometry"))?;
        let radon = Radon::new(geometry, cfg.side).map_err(CliError::solver("projector"))?;
        let unit = Phantom::shepp_logan().rasterize(cfg.side).map_err(CliError::solver("phantom"))?;
        let truth = phantom(cfg)?;
        let p = radon.apply(&unit).map_err(CliError::solver("projection"))?;
        let noisy = simulate_poisson(p.data(), cfg.noise, cfg.seed).map_err(CliError::solver("noise"))?;
        let c = cfg.intensity;
        let clean = Sinogram::new(geometry, p.data().iter().map(|v| v * c).collect())
            .map_err(CliError::solver("projection"))?;
        let noisy_sino =
            Sinogram::new(geometry, noisy.data.iter().map(|v| v * c).collect()).map_err(CliError::solver("noise"))?;
        Ok(Testbed {
            radon,
            truth,
            clean,
            noisy: noisy_sino,
            relative_error: noisy.relative_error,
            incident: noisy.incident,
        })
    }

    pub fn relative_error_of(&self, x: &[f64]) -> f64 {
        bilevel::vector::dist(x, self.truth.data()) / bilevel::vector::norm(self.truth.data())
    }
}

pub fn phantom(cfg: &TestbedConfig) -> Result<Image, CliError> {
    Phantom::shepp_logan().scaled(cfg.intensity).rasterize(cfg.side).map_err(CliError::solver("phantom"))
}

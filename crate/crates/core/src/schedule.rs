use crate::error::{invalid, Result};

/// Stepsize sequence `base / (k + 1)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    base: f64,
    exponent: f64,
}

impl StepSchedule {
    pub fn power(base: f64, exponent: f64) -> Result<Self> {
        if !(base >= 0.0 && base.is_finite()) {
            return Err(invalid(format!("schedule base must be finite and nonnegative, got {base}")));
        }
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(invalid(format!("schedule exponent must be finite and nonnegative, got {exponent}")));
        }
        Ok(StepSchedule { base, exponent })
    }

    pub fn constant(base: f64) -> Result<Self> {
        Self::power(base, 0.0)
    }

    pub fn zero() -> Self {
        StepSchedule { base: 0.0, exponent: 0.0 }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn is_constant(&self) -> bool {
        self.exponent == 0.0
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.exponent == 0.0 {
            self.base
        } else {
            self.base / ((k + 1) as f64).powf(self.exponent)
        }
    }

    /// Same decay, different base.
    pub fn with_base(&self, base: f64) -> Result<Self> {
        Self::power(base, self.exponent)
    }
}

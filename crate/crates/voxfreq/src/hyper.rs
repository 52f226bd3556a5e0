//! Hyperparameter math: γ-scaled Gaussian initialization and the
//! polynomial learning-rate decay schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, VoxError};

/// Decay exponent of the learning-rate schedule; not configurable.
pub const LR_EXPONENT: f64 = 0.9;

/// Gaussian weight-initialization scale: draws come from N(0, (d^−γ)²).
#[derive(Debug, Clone, Copy)]
pub struct InitSpec {
    /// Fan-in (number of input neurons); how it is counted is the caller's
    /// concern.
    pub d: usize,
    /// Scale exponent γ ≥ 0; larger γ gives a smaller initialization scale.
    pub gamma: f64,
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(VoxError::Argument("d must be >= 1".into()));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(VoxError::Argument(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Closed-form standard deviation d^(−γ).
pub fn init_std(spec: &InitSpec) -> Result<f64> {
    spec.validate()?;
    Ok((spec.d as f64).powf(-spec.gamma))
}

/// `n` seeded draws from N(0, init_std²).
pub fn sample_init(spec: &InitSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(VoxError::Argument("n must be >= 1".into()));
    }
    let std = init_std(spec)?;
    let normal = Normal::new(0.0, std).map_err(|e| VoxError::Argument(e.to_string()))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Polynomial learning-rate decay: lr_init · (1 − epoch/max_epoch)^0.9.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleSpec {
    pub lr_init: f64,
    pub max_epoch: usize,
    /// Must equal `LR_EXPONENT`; carried so configs can state it explicitly.
    pub exponent: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec { lr_init: 1e-2, max_epoch: 1000, exponent: LR_EXPONENT }
    }
}

impl ScheduleSpec {
    /// Fine-tuning variant: lr_init 1e-3.
    pub fn fine_tune() -> Self {
        ScheduleSpec { lr_init: 1e-3, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_init.is_finite() && self.lr_init > 0.0) {
            return Err(VoxError::Argument(format!("lr_init must be > 0, got {}", self.lr_init)));
        }
        if self.max_epoch < 1 {
            return Err(VoxError::Argument("max_epoch must be >= 1".into()));
        }
        if self.exponent != LR_EXPONENT {
            return Err(VoxError::Argument(format!(
                "schedule exponent is fixed at {LR_EXPONENT}, got {}",
                self.exponent
            )));
        }
        Ok(())
    }
}

/// Learning rate at `epoch`; exact `lr_init` at 0 and exact 0 at `max_epoch`.
pub fn lr_at(spec: &ScheduleSpec, epoch: usize) -> Result<f64> {
    spec.validate()?;
    if epoch > spec.max_epoch {
        return Err(VoxError::Argument(format!(
            "epoch {epoch} outside [0, {}]",
            spec.max_epoch
        )));
    }
    if epoch == 0 {
        return Ok(spec.lr_init);
    }
    if epoch == spec.max_epoch {
        return Ok(0.0);
    }
    Ok(spec.lr_init * (1.0 - epoch as f64 / spec.max_epoch as f64).powf(LR_EXPONENT))
}

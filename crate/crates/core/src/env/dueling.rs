use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::reward::{eval_reward, RewardFunction};
use crate::error::{BanditError, Result};
use crate::scalar::{lit, Scalar};
use crate::types::FeatureVector;

pub const DEFAULT_SHARPNESS: f64 = 10.0;

/// Sharpened logistic preference: `1 / (1 + exp(−s·(f1 − f2)))`.
pub fn btl_probability<F: Scalar>(f1: F, f2: F, sharpness: F) -> F {
    F::one() / (F::one() + (-(sharpness * (f1 - f2))).exp())
}

/// Dueling environment: a latent reward observed through BTL comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingEnv<F> {
    pub latent: RewardFunction<F>,
    pub sharpness: F,
}

impl<F: Scalar> DuelingEnv<F> {
    pub fn new(latent: RewardFunction<F>, sharpness: F) -> Result<Self> {
        if !(sharpness > F::zero() && sharpness.is_finite()) {
            return Err(BanditError::InvalidParameter("BTL sharpness must be positive".into()));
        }
        Ok(Self { latent, sharpness })
    }

    pub fn with_default_sharpness(latent: RewardFunction<F>) -> Self {
        Self { latent, sharpness: lit(DEFAULT_SHARPNESS) }
    }

    /// P(x1 ≻ x2).
    pub fn preference_probability(&self, x1: &FeatureVector<F>, x2: &FeatureVector<F>) -> Result<F> {
        x1.check_dim(x2.dim())?;
        Ok(btl_probability(eval_reward(&self.latent, x1)?, eval_reward(&self.latent, x2)?, self.sharpness))
    }
}

/// Bernoulli draw of `1(x1 ≻ x2)`; consumes one uniform.
pub fn sample_preference<F: Scalar, R: Rng + ?Sized>(
    env: &DuelingEnv<F>,
    x1: &FeatureVector<F>,
    x2: &FeatureVector<F>,
    rng: &mut R,
) -> Result<bool> {
    let p = env.preference_probability(x1, x2)?;
    let u: F = lit(rng.random::<f64>());
    Ok(u < p)
}

//! Simulated predictors that know the true function.
//!
//! The noise law is an artifact assumption, not a model of any language
//! model: transient noise has standard deviation `kappa * temperature`, and an
//! optional persistent component of standard deviation `persistent_noise` is a
//! fixed function of `(history, query)`, mimicking a model that is
//! deterministically wrong at temperature zero.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{btl_probability, eval_reward, DuelingEnv, RewardFunction};
use crate::error::{BanditError, Result};
use crate::predictor::{PredictionKind, PredictionRequest, PredictionResponse, Predictor, Query};
use crate::rng::{mix64, rng_from_seed, BanditRng};
use crate::scalar::{lit, Scalar};
use crate::types::FeatureVector;

pub const DEFAULT_KAPPA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OracleTruth<F> {
    Reward(RewardFunction<F>),
    Dueling(DuelingEnv<F>),
}

impl<F: Scalar> OracleTruth<F> {
    fn latent(&self) -> &RewardFunction<F> {
        match self {
            OracleTruth::Reward(f) => f,
            OracleTruth::Dueling(env) => &env.latent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec<F> {
    pub truth: OracleTruth<F>,
    /// Noise standard deviation per unit of temperature (κ).
    pub noise_scale_per_temperature: F,
    /// Standard deviation of the temperature-independent component.
    pub persistent_noise: F,
    /// Keys the persistent component.
    pub noise_seed: u64,
}

impl<F: Scalar> OracleSpec<F> {
    pub fn new(truth: OracleTruth<F>) -> Self {
        Self { truth, noise_scale_per_temperature: lit(DEFAULT_KAPPA), persistent_noise: F::zero(), noise_seed: 0 }
    }

    /// Exact predictions at every temperature.
    pub fn exact(truth: OracleTruth<F>) -> Self {
        Self { truth, noise_scale_per_temperature: F::zero(), persistent_noise: F::zero(), noise_seed: 0 }
    }

    pub fn with_kappa(mut self, kappa: F) -> Self {
        self.noise_scale_per_temperature = kappa;
        self
    }

    pub fn with_persistent_noise(mut self, std: F, seed: u64) -> Self {
        self.persistent_noise = std;
        self.noise_seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.noise_scale_per_temperature >= F::zero()) || !(self.persistent_noise >= F::zero()) {
            return Err(BanditError::InvalidParameter("oracle noise scales must be >= 0".into()));
        }
        Ok(())
    }

    fn transient<R: Rng + ?Sized>(&self, temperature: F, rng: &mut R) -> F {
        let std = self.noise_scale_per_temperature * temperature;
        if std > F::zero() {
            std * lit(rng.sample::<f64, _>(StandardNormal))
        } else {
            F::zero()
        }
    }

    fn persistent(&self, key: u64) -> F {
        if self.persistent_noise > F::zero() {
            let mut rng = rng_from_seed(mix64(self.noise_seed ^ key));
            self.persistent_noise * lit(rng.sample::<f64, _>(StandardNormal))
        } else {
            F::zero()
        }
    }
}

/// `clamp(btl(f(x1), f(x2), s) + ε, 0, 1)` with `ε ~ N(0, (κτ)²)`.
pub fn oracle_preference_predict<F: Scalar, R: Rng + ?Sized>(
    spec: &OracleSpec<F>,
    pair: (&FeatureVector<F>, &FeatureVector<F>),
    temperature: F,
    rng: &mut R,
) -> Result<F> {
    let sharpness = match &spec.truth {
        OracleTruth::Dueling(env) => env.sharpness,
        OracleTruth::Reward(_) => lit(crate::env::DEFAULT_SHARPNESS),
    };
    let latent = spec.truth.latent();
    let p = btl_probability(eval_reward(latent, pair.0)?, eval_reward(latent, pair.1)?, sharpness);
    Ok((p + spec.transient(temperature, rng)).max(F::zero()).min(F::one()))
}

/// Predictor backend wrapping an [`OracleSpec`].
#[derive(Debug, Clone)]
pub struct OraclePredictor<F> {
    spec: OracleSpec<F>,
}

impl<F: Scalar> OraclePredictor<F> {
    pub fn new(spec: OracleSpec<F>) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &OracleSpec<F> {
        &self.spec
    }
}

impl<F: Scalar> Predictor<F> for OraclePredictor<F> {
    fn predict(&self, request: &PredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>> {
        request.validate()?;
        let key = mix64(request.history.fingerprint() ^ request.query.prompt_features().fold_fingerprint(request.kind as u64));
        let value = match (&request.query, request.kind) {
            (Query::Arm(x), PredictionKind::Reward) => {
                eval_reward(self.spec.truth.latent(), x)? + self.spec.transient(request.temperature, rng) + self.spec.persistent(key)
            }
            (Query::Arm(x), PredictionKind::Loss) => {
                -eval_reward(self.spec.truth.latent(), x)? + self.spec.transient(request.temperature, rng) + self.spec.persistent(key)
            }
            (Query::Pair { first, second, .. }, PredictionKind::PreferenceProbability) => {
                let p = oracle_preference_predict(&self.spec, (first, second), request.temperature, rng)?;
                (p + self.spec.persistent(key)).max(F::zero()).min(F::one())
            }
            _ => return Err(BanditError::InvalidParameter("query shape does not match prediction kind".into())),
        };
        Ok(PredictionResponse::exact(value))
    }
}

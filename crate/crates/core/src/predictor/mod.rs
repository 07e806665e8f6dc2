//! The prediction contract consumed by every agent.
//!
//! A predictor sees an immutable history snapshot plus a query and returns a
//! point prediction. Stochasticity is controlled by the request temperature;
//! at temperature zero a backend must be a deterministic function of
//! `(history, query)`.

mod oracle;
mod parse;
mod text;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::rng::{BanditRng, StreamFactory};
use crate::scalar::Scalar;
use crate::types::{FeatureVector, History, HistoryKind};

pub use oracle::{oracle_preference_predict, OraclePredictor, OracleSpec, OracleTruth, DEFAULT_KAPPA};
pub use parse::{
    parse_distribution_response, parse_label_choice, parse_scalar_response, ParseError,
};
pub use text::{ContextualOracle, TextExample, TextHistory, TextPredictionRequest, TextPredictor, TextQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Reward,
    Loss,
    PreferenceProbability,
}

impl PredictionKind {
    pub fn history_kind(self) -> HistoryKind {
        match self {
            PredictionKind::Reward => HistoryKind::Reward,
            PredictionKind::Loss => HistoryKind::Loss,
            PredictionKind::PreferenceProbability => HistoryKind::Preference,
        }
    }
}

/// What is being predicted for.
#[derive(Debug, Clone, PartialEq)]
pub enum Query<'a, F> {
    Arm(&'a FeatureVector<F>),
    /// An ordered pair: the prediction is P(first ≻ second). `encoded` is the
    /// pair feature that text backends place in the prompt.
    Pair { first: &'a FeatureVector<F>, second: &'a FeatureVector<F>, encoded: FeatureVector<F> },
}

impl<'a, F> Query<'a, F> {
    /// The features a prompt shows for this query.
    pub fn prompt_features(&self) -> &FeatureVector<F> {
        match self {
            Query::Arm(x) => x,
            Query::Pair { encoded, .. } => encoded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRequest<'a, F> {
    pub history: &'a History<F>,
    pub query: Query<'a, F>,
    pub temperature: F,
    pub kind: PredictionKind,
    /// Position of this call within its agent step; distinguishes repeated
    /// stochastic calls with identical prompts.
    pub sample_index: u64,
}

impl<'a, F: Scalar> PredictionRequest<'a, F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= F::zero() && self.temperature.is_finite()) {
            return Err(BanditError::InvalidParameter("temperature must be finite and >= 0".into()));
        }
        if self.history.kind() != self.kind.history_kind() {
            return Err(BanditError::HistoryKind {
                history: self.history.kind().to_string(),
                other: format!("{:?}", self.kind),
            });
        }
        let pair = matches!(self.query, Query::Pair { .. });
        if pair != (self.kind == PredictionKind::PreferenceProbability) {
            return Err(BanditError::InvalidParameter(
                "preference requests take a pair query; reward/loss requests a single arm".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResponse<F> {
    pub value: F,
    /// Raw completion text, for backends that produce one.
    pub raw_text: Option<String>,
    pub attempts: u32,
}

impl<F: Scalar> PredictionResponse<F> {
    pub fn exact(value: F) -> Self {
        Self { value, raw_text: None, attempts: 1 }
    }
}

/// A reward, loss or preference predictor.
pub trait Predictor<F: Scalar>: Send + Sync {
    fn predict(&self, request: &PredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>>;
}

impl<F: Scalar, P: Predictor<F> + ?Sized> Predictor<F> for &P {
    fn predict(&self, request: &PredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>> {
        (**self).predict(request, rng)
    }
}

impl<F: Scalar, P: Predictor<F> + ?Sized> Predictor<F> for Box<P> {
    fn predict(&self, request: &PredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>> {
        (**self).predict(request, rng)
    }
}

/// Runs every request concurrently, each on the stream
/// `(run seed, iteration, sample_index)`. Output order matches input order.
pub fn predict_all<F: Scalar, P: Predictor<F> + ?Sized>(
    predictor: &P,
    requests: &[PredictionRequest<'_, F>],
    streams: StreamFactory,
    iteration: u64,
) -> Result<Vec<PredictionResponse<F>>> {
    requests
        .par_iter()
        .map(|req| {
            req.validate()?;
            let mut rng = streams.stream(iteration, req.sample_index);
            let response = predictor.predict(req, &mut rng)?;
            if !response.value.is_finite() {
                return Err(BanditError::Predictor(format!(
                    "non-finite prediction for sample {}",
                    req.sample_index
                )));
            }
            Ok(response)
        })
        .collect()
}

//! Prediction contract for the text contextual task, where arms are labels
//! and the query is a (context, label) combination.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::ContextualRecord;
use crate::error::{BanditError, Result};
use crate::predictor::PredictionResponse;
use crate::rng::BanditRng;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextExample<F> {
    pub title: Option<String>,
    pub context: String,
    pub label: String,
    pub reward: F,
}

/// Append-only log of (context, chosen label, reward) triples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TextHistory<F> {
    entries: Vec<TextExample<F>>,
}

impl<F: Scalar> TextHistory<F> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn push(&mut self, example: TextExample<F>) -> Result<()> {
        if !example.reward.is_finite() {
            return Err(BanditError::NonFinite { what: "text reward", index: self.entries.len() });
        }
        self.entries.push(example);
        Ok(())
    }

    pub fn entries(&self) -> &[TextExample<F>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn suffix(&self, keep: usize) -> Self {
        let start = self.entries.len().saturating_sub(keep);
        Self { entries: self.entries[start..].to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextQuery<'a> {
    pub title: Option<&'a str>,
    pub context: &'a str,
    pub label: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextPredictionRequest<'a, F> {
    pub history: &'a TextHistory<F>,
    pub pool: &'a [String],
    pub query: TextQuery<'a>,
    pub temperature: F,
    pub sample_index: u64,
}

pub trait TextPredictor<F: Scalar>: Send + Sync {
    fn predict_text(&self, request: &TextPredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>>;
}

/// Predicts 1 for the correct label and 0 otherwise, plus `N(0, (κτ)²)` noise.
#[derive(Debug, Clone)]
pub struct ContextualOracle<F> {
    truth: HashMap<(Option<String>, String), String>,
    kappa: F,
}

impl<F: Scalar> ContextualOracle<F> {
    pub fn new(records: &[ContextualRecord], kappa: F) -> Self {
        let truth = records
            .iter()
            .map(|r| ((r.title.clone(), r.context_text.clone()), r.correct_arm_label.clone()))
            .collect();
        Self { truth, kappa }
    }
}

impl<F: Scalar> TextPredictor<F> for ContextualOracle<F> {
    fn predict_text(&self, request: &TextPredictionRequest<'_, F>, rng: &mut BanditRng) -> Result<PredictionResponse<F>> {
        let key = (request.query.title.map(str::to_string), request.query.context.to_string());
        let correct = self
            .truth
            .get(&key)
            .ok_or_else(|| BanditError::Predictor("context unknown to the contextual oracle".into()))?;
        let base = if correct == request.query.label { F::one() } else { F::zero() };
        let std = self.kappa * request.temperature;
        let noise = if std > F::zero() { std * lit(rng.sample::<f64, _>(StandardNormal)) } else { F::zero() };
        Ok(PredictionResponse::exact(base + noise))
    }
}

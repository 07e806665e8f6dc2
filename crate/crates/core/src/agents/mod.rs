//! Arm-selection algorithms built on a [`Predictor`](crate::predictor::Predictor).
//!
//! Steps never mutate the history: the caller observes the environment and
//! appends afterwards.

mod baseline;
mod dueling;
mod regression_oracle;
mod schedule;
mod thompson;

use serde::{Deserialize, Serialize};

use crate::predictor::PredictionResponse;
use crate::rng::StreamFactory;
use crate::select::ArmDistribution;
use crate::types::{ArmSet, History};

pub use baseline::{baseline_random_pair, baseline_random_step, initial_arms};
pub use dueling::{borda_estimate, pair_feature, ts_llm_db_step, PairEncoding, TsLlmDbConfig};
pub use regression_oracle::{ro_llm_distribution, ro_llm_step, RoLlmConfig};
pub use schedule::TemperatureSchedule;
pub use thompson::{ts_llm_step, ts_llm_text_step, TsLlmConfig};

/// Read-only view of a run at the start of iteration `iteration` (1-based).
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a, F> {
    pub arms: &'a ArmSet<F>,
    pub history: &'a History<F>,
    pub iteration: usize,
    pub streams: StreamFactory,
}

/// Outcome of one agent step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision<F> {
    /// One arm, or the (first, second) pair for dueling steps.
    pub arms: Vec<usize>,
    /// Temperatures used, in call order (first arm, second arm for dueling).
    pub temperatures: Vec<F>,
    pub predictions: Vec<PredictionResponse<F>>,
    pub distribution: Option<ArmDistribution<F>>,
}

impl<F> Decision<F> {
    pub fn arm(&self) -> usize {
        self.arms[0]
    }
}

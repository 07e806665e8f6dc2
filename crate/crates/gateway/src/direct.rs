//! Baselines that ask the model to choose the arm itself.

use llmab_core::env::ContextualRecord;
use llmab_core::predictor::{parse_distribution_response, parse_label_choice, TextHistory};
use llmab_core::rng::BanditRng;
use llmab_core::scalar::Scalar;
use llmab_core::select::{sample_from_distribution, ArmDistribution};
use llmab_core::types::{ArmSet, History, Observation};
use serde::{Deserialize, Serialize};

use crate::cache::CachedClient;
use crate::client::ChatRequest;
use crate::error::{GatewayError, Result};
use crate::predictor::{complete_parsed, render_within_budget};
use crate::prompts::{render_baseline_prompt, render_text_direct_prompt};

pub use crate::prompts::BaselineVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectSettings {
    pub model: String,
    pub temperature: f64,
    /// Room for step-by-step reasoning before the tagged answer.
    pub max_tokens: u32,
    pub parse_attempts: u32,
    pub char_budget: Option<usize>,
}

impl Default for DirectSettings {
    fn default() -> Self {
        Self { model: String::new(), temperature: 1.0, max_tokens: 1024, parse_attempts: 3, char_budget: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOutcome<F> {
    pub arm: usize,
    pub distribution: Option<ArmDistribution<F>>,
    pub raw_text: String,
    pub attempts: u32,
}

/// Renders the button prompt, parses the returned distribution and samples from it.
#[allow(clippy::too_many_arguments)]
pub fn baseline_direct_step<F: Scalar>(
    variant: BaselineVariant,
    gateway: &CachedClient,
    settings: &DirectSettings,
    labels: &[String],
    arms: &ArmSet<F>,
    history: &History<F>,
    horizon: usize,
    rng: &mut BanditRng,
) -> Result<DirectOutcome<F>> {
    if labels.len() != arms.len() {
        return Err(GatewayError::Input(format!("{} labels for {} arms", labels.len(), arms.len())));
    }
    let choices = history
        .entries()
        .iter()
        .map(|obs| match obs {
            Observation::Scalar { arm: Some(i), value, .. } => Ok((*i, *value)),
            _ => Err(GatewayError::Input("direct baseline needs arm-indexed reward observations".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let render = |keep: usize| render_baseline_prompt(variant, labels, arms.arms(), &choices[choices.len() - keep..], horizon);
    let prompt = render_within_budget(choices.len(), settings.char_budget, render)?;
    let chat = ChatRequest::user(&settings.model, settings.temperature, prompt, settings.max_tokens);
    let (distribution, raw_text, attempts) =
        complete_parsed(gateway, &chat, 0, settings.parse_attempts, |t| parse_distribution_response::<F>(t, labels))?;
    let arm = sample_from_distribution(&distribution, rng);
    Ok(DirectOutcome { arm, distribution: Some(distribution), raw_text, attempts })
}

/// Asks for the label of one record given the text history.
pub fn text_direct_step<F: Scalar>(
    gateway: &CachedClient,
    settings: &DirectSettings,
    record: &ContextualRecord,
    history: &TextHistory<F>,
) -> Result<DirectOutcome<F>> {
    let render = |keep: usize| {
        render_text_direct_prompt(&history.suffix(keep), &record.arm_pool, record.title.as_deref(), &record.context_text)
    };
    let prompt = render_within_budget(history.len(), settings.char_budget, render)?;
    let chat = ChatRequest::user(&settings.model, settings.temperature, prompt, settings.max_tokens);
    let (arm, raw_text, attempts) =
        complete_parsed(gateway, &chat, 0, settings.parse_attempts, |t| parse_label_choice(t, &record.arm_pool))?;
    Ok(DirectOutcome { arm, distribution: None, raw_text, attempts })
}

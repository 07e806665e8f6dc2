//! Predictors backed by a chat model.

use std::sync::Arc;

use llmab_core::predictor::{
    parse_scalar_response, PredictionKind, PredictionRequest, PredictionResponse, Predictor, Query, TextHistory,
    TextPredictionRequest, TextPredictor,
};
use llmab_core::rng::BanditRng;
use llmab_core::scalar::{lit, to_f64, Scalar};
use llmab_core::types::History;
use serde::{Deserialize, Serialize};

use crate::cache::CachedClient;
use crate::client::ChatRequest;
use crate::error::{GatewayError, Result};
use crate::prompts::{render_dueling_prompt, render_reward_prompt, render_text_ts_prompt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    pub model: String,
    pub max_tokens: u32,
    /// Completions requested per prediction before a parse failure is fatal.
    pub parse_attempts: u32,
    /// Prompt length cap in characters; oldest history entries go first.
    pub char_budget: Option<usize>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self { model: String::new(), max_tokens: 64, parse_attempts: 3, char_budget: None }
    }
}

impl LlmSettings {
    pub fn from_env() -> Result<Self> {
        let model = std::env::var("LLM_MODEL")
            .map_err(|_| GatewayError::Config("environment variable LLM_MODEL is not set".into()))?;
        Ok(Self { model, ..Self::default() })
    }
}

/// Renders with the newest `keep` entries, dropping the oldest two at a time
/// while the prompt exceeds `budget`.
pub(crate) fn render_within_budget(
    len: usize,
    budget: Option<usize>,
    render: impl Fn(usize) -> Result<String>,
) -> Result<String> {
    let mut keep = len;
    let mut prompt = render(keep)?;
    let Some(budget) = budget else { return Ok(prompt) };
    while prompt.chars().count() > budget && keep >= 2 {
        keep -= 2;
        prompt = render(keep)?;
    }
    if keep < len {
        log::warn!("prompt over {budget} characters: dropped the {} oldest history entries", len - keep);
    }
    Ok(prompt)
}

/// Requests completions until one parses, up to `attempts`.
pub(crate) fn complete_parsed<T>(
    gateway: &CachedClient,
    request: &ChatRequest,
    sample_index: u64,
    attempts: u32,
    parse: impl Fn(&str) -> std::result::Result<T, llmab_core::predictor::ParseError>,
) -> Result<(T, String, u32)> {
    let attempts = attempts.max(1);
    let mut failure = None;
    for attempt in 0..attempts {
        let text = gateway.cached_complete(request, sample_index, attempt)?;
        match parse(&text) {
            Ok(v) => return Ok((v, text, attempt + 1)),
            Err(e) => {
                log::warn!("unparseable completion (attempt {}/{attempts}): {e}", attempt + 1);
                failure = Some((e, text));
            }
        }
    }
    let (error, last_text) = failure.expect("at least one attempt");
    Err(GatewayError::Parse { attempts, error, last_text })
}

pub struct LlmPredictor {
    gateway: Arc<CachedClient>,
    settings: LlmSettings,
}

impl LlmPredictor {
    pub fn new(gateway: Arc<CachedClient>, settings: LlmSettings) -> Self {
        Self { gateway, settings }
    }

    fn prompt<F: Scalar>(&self, request: &PredictionRequest<'_, F>) -> Result<String> {
        let history = request.history;
        let render = |keep: usize| -> Result<String> {
            let h: History<F> = if keep == history.len() { history.clone() } else { history.suffix(keep) };
            match &request.query {
                Query::Arm(x) => render_reward_prompt(&h, x, request.kind.history_kind()),
                Query::Pair { encoded, .. } => render_dueling_prompt(&h, encoded),
            }
        };
        render_within_budget(history.len(), self.settings.char_budget, render)
    }
}

impl<F: Scalar> Predictor<F> for LlmPredictor {
    fn predict(&self, request: &PredictionRequest<'_, F>, _rng: &mut BanditRng) -> llmab_core::Result<PredictionResponse<F>> {
        request.validate()?;
        let prompt = self.prompt(request)?;
        let chat = ChatRequest::user(&self.settings.model, to_f64(request.temperature), prompt, self.settings.max_tokens);
        let (mut value, text, attempts) =
            complete_parsed(&self.gateway, &chat, request.sample_index, self.settings.parse_attempts, parse_scalar_response)?;
        if request.kind == PredictionKind::PreferenceProbability && !(0.0..=1.0).contains(&value) {
            log::warn!("preference prediction {value} outside [0, 1], clamping");
            value = value.clamp(0.0, 1.0);
        }
        Ok(PredictionResponse { value: lit(value), raw_text: Some(text), attempts })
    }
}

pub struct LlmTextPredictor {
    gateway: Arc<CachedClient>,
    settings: LlmSettings,
}

impl LlmTextPredictor {
    pub fn new(gateway: Arc<CachedClient>, settings: LlmSettings) -> Self {
        Self { gateway, settings }
    }
}

impl<F: Scalar> TextPredictor<F> for LlmTextPredictor {
    fn predict_text(
        &self,
        request: &TextPredictionRequest<'_, F>,
        _rng: &mut BanditRng,
    ) -> llmab_core::Result<PredictionResponse<F>> {
        let history = request.history;
        let render = |keep: usize| -> Result<String> {
            let h: TextHistory<F> = history.suffix(keep);
            render_text_ts_prompt(&h, request.pool, &request.query)
        };
        let prompt = render_within_budget(history.len(), self.settings.char_budget, render)?;
        let chat = ChatRequest::user(&self.settings.model, to_f64(request.temperature), prompt, self.settings.max_tokens);
        let (value, text, attempts) =
            complete_parsed(&self.gateway, &chat, request.sample_index, self.settings.parse_attempts, parse_scalar_response)?;
        Ok(PredictionResponse { value: lit(value), raw_text: Some(text), attempts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_drops_oldest_pairs() {
        let entries: Vec<String> = (0..7).map(|i| format!("entry{i};")).collect();
        let render = |keep: usize| Ok(entries[entries.len() - keep..].concat());
        assert_eq!(render_within_budget(7, None, render).unwrap().len(), 7 * 7);
        // 7 entries of 7 chars; a 30-char budget keeps 3 (dropping 2 then 2).
        let p = render_within_budget(7, Some(30), render).unwrap();
        assert_eq!(p, "entry4;entry5;entry6;");
    }
}

//! Prompt rendering, an OpenAI-compatible chat client with caching and
//! record/replay, and language-model backed predictors.

pub mod cache;
pub mod client;
pub mod direct;
pub mod error;
pub mod predictor;
pub mod prompts;

pub use cache::{cache_key, CachedClient, GatewayMode, ReplayEntry};
pub use client::{ChatClient, ChatMessage, ChatRequest, ClientConfig, Completion, HttpReply, RateLimiter, RetryPolicy, Transport, UreqTransport};
pub use direct::{baseline_direct_step, text_direct_step, BaselineVariant, DirectOutcome, DirectSettings};
pub use error::{GatewayError, Result};
pub use predictor::{LlmPredictor, LlmSettings, LlmTextPredictor};
pub use prompts::{
    default_arm_labels, render_baseline_prompt, render_dueling_prompt, render_fixture, render_reward_prompt,
    render_text_direct_prompt, render_text_ts_prompt, PromptFixture, TemplateId, BUTTON_COLORS,
};

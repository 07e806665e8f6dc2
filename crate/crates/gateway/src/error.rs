use llmab_core::predictor::ParseError;
use llmab_core::BanditError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template `{template}`: slot {{{slot}}} left unfilled")]
    UnfilledSlot { template: &'static str, slot: String },
    #[error("template `{template}` has no slot {{{slot}}}")]
    UnknownSlot { template: &'static str, slot: String },
    #[error("prompt input: {0}")]
    Input(String),
    #[error("credentials rejected (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("giving up after {attempts} attempts, last failure: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response envelope: {0}")]
    Envelope(String),
    #[error("replay log has no response for prompt digest {digest}")]
    ReplayMiss { digest: String },
    #[error("replay log {path}: {message}")]
    Log { path: String, message: String },
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("response unparseable after {attempts} attempts ({error}); last text: {last_text:?}")]
    Parse { attempts: u32, error: ParseError, last_text: String },
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

pub type Result<T, E = GatewayError> = std::result::Result<T, E>;

impl From<GatewayError> for BanditError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Bandit(inner) => inner,
            other => BanditError::Predictor(other.to_string()),
        }
    }
}

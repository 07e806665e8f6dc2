//! Parsers for `#…#`-delimited model responses.

use thiserror::Error;

use crate::scalar::{lit, Scalar};
use crate::select::{validate_distribution, ArmDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no #…# span in response")]
    NoSpan,
    #[error("span `{0}` is not a finite decimal number")]
    NonNumeric(String),
    #[error("conflicting values {0} and {1} in one response")]
    Conflicting(f64, f64),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("label `{0}` given twice")]
    DuplicateLabel(String),
    #[error("cannot parse `{0}` as label:probability")]
    MalformedPair(String),
    #[error("distribution rejected: {0}")]
    Distribution(String),
}

/// Contents of consecutive `#…#` pairs, in order of appearance.
fn hash_spans(text: &str) -> Vec<&str> {
    let mut spans = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('#') {
        let after = &rest[open + 1..];
        let Some(close) = after.find('#') else { break };
        spans.push(&after[..close]);
        rest = &after[close + 1..];
    }
    spans
}

fn parse_number(span: &str) -> Result<f64, ParseError> {
    let trimmed = span.trim();
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::NonNumeric(trimmed.to_string())),
    }
}

/// First `#…#` span parsed as a decimal. Later numeric spans must agree with
/// it; later non-numeric spans are ignored.
pub fn parse_scalar_response(text: &str) -> Result<f64, ParseError> {
    let spans = hash_spans(text);
    let first = spans.first().ok_or(ParseError::NoSpan)?;
    let value = parse_number(first)?;
    for span in &spans[1..] {
        if let Ok(other) = parse_number(span) {
            if other != value {
                return Err(ParseError::Conflicting(value, other));
            }
        }
    }
    Ok(value)
}

/// Content of the last `<Answer>…</Answer>` block, matched case-insensitively.
fn answer_block(text: &str) -> Option<&str> {
    let lower = text.to_ascii_lowercase();
    let open_tag = "<answer>";
    let close_tag = "</answer>";
    let mut search_end = lower.len();
    loop {
        let open = lower[..search_end].rfind(open_tag)?;
        let body_start = open + open_tag.len();
        if let Some(close) = lower[body_start..].find(close_tag) {
            return Some(&text[body_start..body_start + close]);
        }
        search_end = open;
    }
}

fn clean_label(raw: &str) -> &str {
    raw.trim().trim_matches(|c| matches!(c, '\'' | '"' | '[' | ']')).trim()
}

/// Parses `label:probability` pairs into a distribution over `labels`.
/// Looks inside `<Answer>…</Answer>` when present, else at the first `#…#`
/// span. Labels not mentioned get probability zero.
pub fn parse_distribution_response<F: Scalar>(text: &str, labels: &[String]) -> Result<ArmDistribution<F>, ParseError> {
    let body = match answer_block(text) {
        Some(block) => hash_spans(block).first().copied().unwrap_or(block.trim()),
        None => *hash_spans(text).first().ok_or(ParseError::NoSpan)?,
    };
    let mut probs: Vec<Option<f64>> = vec![None; labels.len()];
    for pair in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (label, value) = pair.rsplit_once(':').ok_or_else(|| ParseError::MalformedPair(pair.to_string()))?;
        let label = clean_label(label);
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ParseError::MalformedPair(pair.to_string()))?;
        let idx = labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ParseError::UnknownLabel(label.to_string()))?;
        if probs[idx].replace(value).is_some() {
            return Err(ParseError::DuplicateLabel(label.to_string()));
        }
    }
    let p: Vec<F> = probs.into_iter().map(|v| lit(v.unwrap_or(0.0))).collect();
    validate_distribution(&p).map_err(|e| ParseError::Distribution(e.to_string()))
}

/// Index of the label named by the first `#…#` span.
pub fn parse_label_choice(text: &str, labels: &[String]) -> Result<usize, ParseError> {
    let span = *hash_spans(text).first().ok_or(ParseError::NoSpan)?;
    let label = clean_label(span);
    labels.iter().position(|l| l == label).ok_or_else(|| ParseError::UnknownLabel(label.to_string()))
}

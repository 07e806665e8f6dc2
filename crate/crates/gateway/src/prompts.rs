//! The eight prompt templates.
//!
//! Bodies carry `{NAME}` slots. Rendering fails if a slot is left unfilled or
//! a value is supplied for a slot the body does not have. Feature vectors
//! print as `[0.1234, -0.5000]`, scalar outputs with four decimals, binary
//! outputs as `1`/`0`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use llmab_core::predictor::{TextExample, TextHistory, TextQuery};
use llmab_core::scalar::{to_f64, Scalar};
use llmab_core::types::{FeatureVector, History, HistoryKind, Observation};
use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, Result};

pub const BUTTON_COLORS: [&str; 16] = [
    "blue", "green", "red", "yellow", "purple", "orange", "cyan", "magenta", "lime", "pink", "teal", "lavender", "brown",
    "beige", "maroon", "mint",
];

/// Color names for up to 16 arms, `arm1`… beyond that.
pub fn default_arm_labels(k: usize) -> Vec<String> {
    if k <= BUTTON_COLORS.len() {
        BUTTON_COLORS[..k].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=k).map(|i| format!("arm{i}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    TsReward,
    TsLoss,
    Dueling,
    BaselineNofeature,
    BaselineFramingfeature,
    BaselineHistoryfeature,
    TextTs,
    TextDirect,
}

impl TemplateId {
    pub const ALL: [TemplateId; 8] = [
        TemplateId::TsReward,
        TemplateId::TsLoss,
        TemplateId::Dueling,
        TemplateId::BaselineNofeature,
        TemplateId::BaselineFramingfeature,
        TemplateId::BaselineHistoryfeature,
        TemplateId::TextTs,
        TemplateId::TextDirect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::TsReward => "ts_reward",
            TemplateId::TsLoss => "ts_loss",
            TemplateId::Dueling => "dueling",
            TemplateId::BaselineNofeature => "baseline_nofeature",
            TemplateId::BaselineFramingfeature => "baseline_framingfeature",
            TemplateId::BaselineHistoryfeature => "baseline_historyfeature",
            TemplateId::TextTs => "text_ts",
            TemplateId::TextDirect => "text_direct",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateId::TsReward | TemplateId::TsLoss => SCALAR_BODY,
            TemplateId::Dueling => DUELING_BODY,
            TemplateId::BaselineNofeature => BASELINE_NOFEATURE_BODY,
            TemplateId::BaselineFramingfeature => BASELINE_FRAMING_BODY,
            TemplateId::BaselineHistoryfeature => BASELINE_HISTORY_BODY,
            TemplateId::TextTs => TEXT_TS_BODY,
            TemplateId::TextDirect => TEXT_DIRECT_BODY,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GatewayError::Input(format!("unknown template id `{s}`")))
    }
}

const SCALAR_BODY: &str = "Help me predict the function value at the last input. Each function value is associated with a Normal distribution with a fixed but unknown mean. Your response should only contain the function value in the format of #function value#.
{EXAMPLES}input: {INPUT}, output:";

const DUELING_BODY: &str = "Help me predict the value for the last input as a continuous value between 0 and 1. Your response MUST only contain the value in the format of #value#.
{EXAMPLES}input: {INPUT}, output:";

const BASELINE_NOFEATURE_BODY: &str = "You are in a room with {K} buttons labeled
{LABELS}
Each button is associated with a Normal distribution with a fixed but unknown mean; the means for the buttons could be different and are associated with features of buttons. For each button, when you press it, you will get a reward that is sampled from the button's associated distribution.
You have {HORIZON} time steps and, on each time step, you can choose any button and receive the reward. Your goal is to maximize the total reward over the {HORIZON} time steps. So far you have played {TIMES} times with the following choices and rewards:
{CHOICES}You MUST output a distribution over the {K} buttons as probabilities, formatted EXACTLY like this example: {FORMAT}. Each probability value({PLIST}) MUST be a number between 0 and 1, and the total of all probabilities MUST equal 1.
Let's think step by step to make sure we make a good choice. Which button will you choose next? YOU MUST provide your final answer within the tags <Answer>DIST</Answer> where DIST is {FORMAT}.";

const BASELINE_FRAMING_BODY: &str = "You are in a room with {K} buttons labeled
{LABELS}
{FEATURES}Each button is associated with a Normal distribution with a fixed but unknown mean; the means for the buttons could be different and are associated with features of buttons. For each button, when you press it, you will get a reward that is sampled from the button's associated distribution.
You have {HORIZON} time steps and, on each time step, you can choose any button and receive the reward. Your goal is to maximize the total reward over the {HORIZON} time steps. So far you have played {TIMES} times with the following choices and rewards:
{CHOICES}You MUST output a distribution over the {K} buttons as probabilities, formatted EXACTLY like this example: {FORMAT}. Each probability value({PLIST}) MUST be a number between 0 and 1, and the total of all probabilities MUST equal 1.
Let's think step by step to make sure we make a good choice. Which button will you choose next? YOU MUST provide your final answer within the tags <Answer>DIST</Answer> where DIST is {FORMAT}.";

const BASELINE_HISTORY_BODY: &str = "You are in a room with {K} buttons labeled
{LABELS}
Each button is associated with a Normal distribution with a fixed but unknown mean; the means for the buttons could be different and are associated with features of buttons. For each button, when you press it, you will get a reward that is sampled from the button's associated distribution.
You have {HORIZON} time steps and, on each time step, you can choose any button and receive the reward. Your goal is to maximize the total reward over the {HORIZON} time steps.
{FEATURES}So far you have played {TIMES} times with the following choices and rewards:
{CHOICES}You MUST output a distribution over the {K} buttons as probabilities, formatted EXACTLY like this example: {FORMAT}. Each probability value({PLIST}) MUST be a number between 0 and 1, and the total of all probabilities MUST equal 1.
Let's think step by step to make sure we make a good choice. Which button will you choose next? YOU MUST provide your final answer within the tags <Answer>DIST</Answer> where DIST is {FORMAT}.";

const TEXT_TS_BODY: &str = "There are Titles and Contents of some items. \n\n\
Labels and items correspond one-to-one.
There are a total of {COUNT} items.The Labels MUST be ONE of the following numbers: {POOL}

The Reward is a number between 0 and 1 determined by whether the Label is correct or not.

Help me predict the Reward at the last Title, Content and Label.

Your response MUST be the predicted Reward only, formatted as #predicted Reward#.

{EXAMPLES}**Title**: {TITLE}
**Content**: {CONTENT}
**Label**: {LABEL}
**Reward**:";

const TEXT_DIRECT_BODY: &str = "There are Titles and Contents of some items. \n\n\
Labels and items correspond one-to-one.
There are a total of {COUNT} items.The Labels MUST be ONE of the following numbers: {POOL}

The Reward is a number between 0 and 1 determined by whether the Label is correct or not.

Help me choose the correct Label at the last Title and Content. Your response MUST be the chosen Label only, formatted as #chosen Label#.

{EXAMPLES}**Title**: {TITLE}
**Content**: {CONTENT}
**Label**:";

/// Substitutes every `{NAME}` slot of a template body.
fn fill(template: TemplateId, slots: &[(&str, String)]) -> Result<String> {
    let body = template.body();
    let values: HashMap<&str, &String> = slots.iter().map(|(k, v)| (*k, v)).collect();
    let mut used = vec![false; slots.len()];
    let mut out = String::with_capacity(body.len() + slots.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').expect("template bodies have balanced braces");
        let name = &after[..close];
        let value = values
            .get(name)
            .ok_or_else(|| GatewayError::UnfilledSlot { template: template.as_str(), slot: name.to_string() })?;
        out.push_str(value);
        if let Some(i) = slots.iter().position(|(k, _)| *k == name) {
            used[i] = true;
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(GatewayError::UnknownSlot { template: template.as_str(), slot: slots[i].0.to_string() });
    }
    Ok(out)
}

fn decimal<F: Scalar>(v: F) -> String {
    format!("{:.4}", to_f64(v))
}

/// Reward/loss prompt: one `input: …, output: …` line per observation, then the query.
pub fn render_reward_prompt<F: Scalar>(history: &History<F>, query: &FeatureVector<F>, kind: HistoryKind) -> Result<String> {
    let template = match kind {
        HistoryKind::Reward => TemplateId::TsReward,
        HistoryKind::Loss => TemplateId::TsLoss,
        HistoryKind::Preference => {
            return Err(GatewayError::Input("reward prompts take a reward or loss history".into()));
        }
    };
    if history.kind() != kind {
        return Err(GatewayError::Input(format!("history holds {} observations, prompt expects {kind}", history.kind())));
    }
    let mut examples = String::new();
    for obs in history.entries() {
        examples.push_str(&format!("input: {}, output: {}\n", obs.features(), decimal(obs.value())));
    }
    fill(template, &[("EXAMPLES", examples), ("INPUT", query.to_string())])
}

/// Preference prompt over encoded pair features; outputs print as `1`/`0`.
pub fn render_dueling_prompt<F: Scalar>(history: &History<F>, pair_features: &FeatureVector<F>) -> Result<String> {
    if history.kind() != HistoryKind::Preference {
        return Err(GatewayError::Input(format!("dueling prompt needs a preference history, got {}", history.kind())));
    }
    let mut examples = String::new();
    for obs in history.entries() {
        let output = match obs {
            Observation::Preference { preferred, .. } => u8::from(*preferred),
            Observation::Scalar { .. } => return Err(GatewayError::Input("scalar entry in a preference history".into())),
        };
        examples.push_str(&format!("input: {}, output: {output}\n", obs.features()));
    }
    fill(TemplateId::Dueling, &[("EXAMPLES", examples), ("INPUT", pair_features.to_string())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineVariant {
    NoFeature,
    FramingFeature,
    HistoryFeature,
}

impl BaselineVariant {
    pub fn template(self) -> TemplateId {
        match self {
            BaselineVariant::NoFeature => TemplateId::BaselineNofeature,
            BaselineVariant::FramingFeature => TemplateId::BaselineFramingfeature,
            BaselineVariant::HistoryFeature => TemplateId::BaselineHistoryfeature,
        }
    }
}

/// `#a:p1,b:p2,...,z:pK#` with the middle elided once K exceeds three.
fn distribution_example(labels: &[String]) -> (String, String) {
    let k = labels.len();
    let pair = |i: usize| format!("{}:p{}", labels[i], i + 1);
    let p = |i: usize| format!("p{}", i + 1);
    let (format, plist) = if k <= 3 {
        ((0..k).map(pair).collect::<Vec<_>>().join(","), (0..k).map(p).collect::<Vec<_>>().join(","))
    } else {
        (format!("{},{},...,{}", pair(0), pair(1), pair(k - 1)), format!("{},{},...,{}", p(0), p(1), p(k - 1)))
    };
    (format!("#{format}#"), plist)
}

/// Direct arm-selection prompt. `choices` lists (arm index, reward) in play order.
pub fn render_baseline_prompt<F: Scalar>(
    variant: BaselineVariant,
    labels: &[String],
    features: &[FeatureVector<F>],
    choices: &[(usize, F)],
    horizon: usize,
) -> Result<String> {
    if labels.len() < 2 {
        return Err(GatewayError::Input("baseline prompt needs at least two labels".into()));
    }
    let label_list = format!(
        "[{}]",
        labels.iter().map(|l| format!("'{l}'")).collect::<Vec<_>>().join(", ")
    );
    let mut history = String::new();
    for &(arm, reward) in choices {
        let label = labels
            .get(arm)
            .ok_or_else(|| GatewayError::Input(format!("choice refers to arm {arm} of {}", labels.len())))?;
        history.push_str(&format!("{label} button, reward {}\n", decimal(reward)));
    }
    let (format, plist) = distribution_example(labels);
    let mut slots = vec![
        ("K", labels.len().to_string()),
        ("LABELS", label_list),
        ("HORIZON", horizon.to_string()),
        ("TIMES", choices.len().to_string()),
        ("CHOICES", history),
        ("FORMAT", format),
        ("PLIST", plist),
    ];
    if variant != BaselineVariant::NoFeature {
        if features.len() != labels.len() {
            return Err(GatewayError::Input(format!("{} labels but {} feature vectors", labels.len(), features.len())));
        }
        let block: String = labels
            .iter()
            .zip(features)
            .map(|(l, x)| format!("Feature of {l} button: {x}\n"))
            .collect();
        slots.push(("FEATURES", block));
    }
    fill(variant.template(), &slots)
}

fn text_reward<F: Scalar>(r: F) -> String {
    let v = to_f64(r);
    if v == 1.0 || v == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

fn text_examples<F: Scalar>(history: &[TextExample<F>]) -> String {
    history
        .iter()
        .map(|e| {
            format!(
                "**Title**: {}\n**Content**: {}\n**Label**: {}\n**Reward**: {}\n\n",
                e.title.as_deref().unwrap_or(""),
                e.context,
                e.label,
                text_reward(e.reward)
            )
        })
        .collect()
}

fn text_header_slots(pool: &[String]) -> Vec<(&'static str, String)> {
    vec![("COUNT", pool.len().to_string()), ("POOL", format!("[{}]", pool.join(", ")))]
}

/// Reward prediction for one (title, content, label) query.
pub fn render_text_ts_prompt<F: Scalar>(history: &TextHistory<F>, pool: &[String], query: &TextQuery<'_>) -> Result<String> {
    let mut slots = text_header_slots(pool);
    slots.extend([
        ("EXAMPLES", text_examples(history.entries())),
        ("TITLE", query.title.unwrap_or("").to_string()),
        ("CONTENT", query.context.to_string()),
        ("LABEL", query.label.to_string()),
    ]);
    fill(TemplateId::TextTs, &slots)
}

/// Direct label choice for one (title, content) query.
pub fn render_text_direct_prompt<F: Scalar>(
    history: &TextHistory<F>,
    pool: &[String],
    title: Option<&str>,
    context: &str,
) -> Result<String> {
    let mut slots = text_header_slots(pool);
    slots.extend([
        ("EXAMPLES", text_examples(history.entries())),
        ("TITLE", title.unwrap_or("").to_string()),
        ("CONTENT", context.to_string()),
    ]);
    fill(TemplateId::TextDirect, &slots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureExample {
    pub input: Vec<f64>,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureChoice {
    pub label: String,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTextQuery {
    pub title: Option<String>,
    pub context: String,
    pub label: Option<String>,
}

/// Inputs for rendering any template from a JSON file. Each template reads
/// only the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptFixture {
    pub history: Vec<FixtureExample>,
    pub query: Option<Vec<f64>>,
    pub labels: Option<Vec<String>>,
    pub features: Vec<Vec<f64>>,
    pub choices: Vec<FixtureChoice>,
    pub horizon: Option<usize>,
    pub pool: Vec<String>,
    pub text_history: Vec<TextExample<f64>>,
    pub text_query: Option<FixtureTextQuery>,
}

fn missing(field: &str, id: TemplateId) -> GatewayError {
    GatewayError::Input(format!("fixture for `{id}` needs `{field}`"))
}

fn fixture_history(fixture: &PromptFixture, kind: HistoryKind) -> Result<History<f64>> {
    let mut h = History::new(kind);
    for (i, e) in fixture.history.iter().enumerate() {
        let x = FeatureVector::from_f64(&e.input)?;
        if kind == HistoryKind::Preference {
            let preferred = match e.output {
                1.0 => true,
                0.0 => false,
                o => return Err(GatewayError::Input(format!("history entry {i}: binary output expected, got {o}"))),
            };
            h.push_preference(x, preferred)?;
        } else {
            h.push_scalar(None, x, e.output)?;
        }
    }
    Ok(h)
}

pub fn render_fixture(id: TemplateId, fixture: &PromptFixture) -> Result<String> {
    let query = || -> Result<FeatureVector<f64>> {
        Ok(FeatureVector::from_f64(fixture.query.as_deref().ok_or_else(|| missing("query", id))?)?)
    };
    match id {
        TemplateId::TsReward => render_reward_prompt(&fixture_history(fixture, HistoryKind::Reward)?, &query()?, HistoryKind::Reward),
        TemplateId::TsLoss => render_reward_prompt(&fixture_history(fixture, HistoryKind::Loss)?, &query()?, HistoryKind::Loss),
        TemplateId::Dueling => render_dueling_prompt(&fixture_history(fixture, HistoryKind::Preference)?, &query()?),
        TemplateId::BaselineNofeature | TemplateId::BaselineFramingfeature | TemplateId::BaselineHistoryfeature => {
            let variant = match id {
                TemplateId::BaselineNofeature => BaselineVariant::NoFeature,
                TemplateId::BaselineFramingfeature => BaselineVariant::FramingFeature,
                _ => BaselineVariant::HistoryFeature,
            };
            let labels = fixture.labels.clone().unwrap_or_else(|| default_arm_labels(16));
            let features = fixture
                .features
                .iter()
                .map(|f| FeatureVector::from_f64(f))
                .collect::<llmab_core::Result<Vec<_>>>()?;
            let choices = fixture
                .choices
                .iter()
                .map(|c| {
                    labels
                        .iter()
                        .position(|l| *l == c.label)
                        .map(|i| (i, c.reward))
                        .ok_or_else(|| GatewayError::Input(format!("choice label `{}` not among the labels", c.label)))
                })
                .collect::<Result<Vec<_>>>()?;
            render_baseline_prompt(variant, &labels, &features, &choices, fixture.horizon.ok_or_else(|| missing("horizon", id))?)
        }
        TemplateId::TextTs | TemplateId::TextDirect => {
            let mut history = TextHistory::new();
            for e in &fixture.text_history {
                history.push(e.clone())?;
            }
            let q = fixture.text_query.as_ref().ok_or_else(|| missing("text_query", id))?;
            if id == TemplateId::TextDirect {
                render_text_direct_prompt(&history, &fixture.pool, q.title.as_deref(), &q.context)
            } else {
                let label = q.label.as_deref().ok_or_else(|| missing("text_query.label", id))?;
                render_text_ts_prompt(&history, &fixture.pool, &TextQuery { title: q.title.as_deref(), context: &q.context, label })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector<f64> {
        FeatureVector::from_f64(v).unwrap()
    }

    #[test]
    fn empty_history_renders_header_and_query_only() {
        let h = History::<f64>::new(HistoryKind::Reward);
        let p = render_reward_prompt(&h, &fv(&[0.5, -0.25]), HistoryKind::Reward).unwrap();
        let lines: Vec<&str> = p.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "input: [0.5000, -0.2500], output:");
    }

    #[test]
    fn history_lines_keep_insertion_order() {
        let mut h = History::<f64>::new(HistoryKind::Loss);
        h.push_scalar(Some(0), fv(&[1.0]), -0.5).unwrap();
        h.push_scalar(Some(1), fv(&[2.0]), 0.25).unwrap();
        let p = render_reward_prompt(&h, &fv(&[3.0]), HistoryKind::Loss).unwrap();
        let lines: Vec<&str> = p.lines().skip(1).collect();
        assert_eq!(lines, ["input: [1.0000], output: -0.5000", "input: [2.0000], output: 0.2500", "input: [3.0000], output:"]);
        assert!(render_reward_prompt(&h, &fv(&[3.0]), HistoryKind::Reward).is_err());
    }

    #[test]
    fn dueling_outputs_are_binary_literals() {
        let mut h = History::<f64>::new(HistoryKind::Preference);
        h.push_preference(fv(&[0.1, -0.1]), true).unwrap();
        h.push_preference(fv(&[0.0, 0.2]), false).unwrap();
        let p = render_dueling_prompt(&h, &fv(&[0.3, 0.3])).unwrap();
        assert!(p.contains("input: [0.1000, -0.1000], output: 1\n"));
        assert!(p.contains("input: [0.0000, 0.2000], output: 0\n"));
        assert!(p.ends_with("input: [0.3000, 0.3000], output:"));
    }

    #[test]
    fn baseline_feature_placement() {
        let labels = default_arm_labels(16);
        let feats: Vec<_> = (0..16).map(|i| fv(&[i as f64 / 16.0])).collect();
        let choices = [(0usize, 0.5f64), (3, -0.1)];
        let none = render_baseline_prompt(BaselineVariant::NoFeature, &labels, &feats, &choices, 100).unwrap();
        assert!(!none.contains("Feature of"));
        let framing = render_baseline_prompt(BaselineVariant::FramingFeature, &labels, &feats, &choices, 100).unwrap();
        assert!(framing.find("Feature of blue").unwrap() < framing.find("Each button is associated").unwrap());
        let hist = render_baseline_prompt(BaselineVariant::HistoryFeature, &labels, &feats, &choices, 100).unwrap();
        let feat_at = hist.find("Feature of blue").unwrap();
        assert!(hist.find("Each button is associated").unwrap() < feat_at);
        assert!(feat_at < hist.find("So far you have played").unwrap());
        assert!(hist.contains("yellow button, reward -0.1000\n"));
    }

    #[test]
    fn small_pools_enumerate_every_label() {
        let labels = default_arm_labels(2);
        let p = render_baseline_prompt::<f64>(BaselineVariant::NoFeature, &labels, &[], &[], 5).unwrap();
        assert!(p.contains("#blue:p1,green:p2#"));
        assert!(p.contains("value(p1,p2)"));
    }

    #[test]
    fn fill_rejects_missing_and_unknown_slots() {
        assert!(matches!(
            fill(TemplateId::TsReward, &[("EXAMPLES", String::new())]),
            Err(GatewayError::UnfilledSlot { .. })
        ));
        assert!(matches!(
            fill(TemplateId::TsReward, &[("EXAMPLES", String::new()), ("INPUT", "x".into()), ("EXTRA", "y".into())]),
            Err(GatewayError::UnknownSlot { .. })
        ));
    }

    #[test]
    fn template_ids_round_trip() {
        for id in TemplateId::ALL {
            assert_eq!(id.as_str().parse::<TemplateId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
        assert!("nope".parse::<TemplateId>().is_err());
    }
}

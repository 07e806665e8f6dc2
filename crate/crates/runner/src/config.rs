//! TOML experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use llmab_core::agents::{PairEncoding, TemperatureSchedule};
use llmab_core::env::{PoolSelection, RewardKind, DEFAULT_GP_LENGTHSCALE, DEFAULT_NOISE_VARIANCE, DEFAULT_SHARPNESS};
use llmab_core::predictor::DEFAULT_KAPPA;
use llmab_gateway::BaselineVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Mab,
    Dueling,
    Contextual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default = "default_arms")]
    pub arms: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub horizon: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub predictor: PredictorConfig,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub contextual: Option<ContextualConfig>,
}

fn default_arms() -> usize {
    16
}
fn default_dim() -> usize {
    4
}
fn default_repetitions() -> usize {
    10
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub reward: RewardKind,
    pub gp_lengthscale: f64,
    pub noise_variance: f64,
    /// BTL sharpness for dueling tasks.
    pub sharpness: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            reward: RewardKind::Linear,
            gp_lengthscale: DEFAULT_GP_LENGTHSCALE,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            sharpness: DEFAULT_SHARPNESS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub base: f64,
    pub rate: f64,
    pub cap: f64,
    #[serde(default)]
    pub floor: Option<f64>,
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<TemperatureSchedule<f64>> {
        Ok(match self.floor {
            Some(floor) => TemperatureSchedule::with_floor(self.base, self.rate, self.cap, floor)?,
            None => TemperatureSchedule::new(self.base, self.rate, self.cap)?,
        })
    }

    fn from_schedule(s: TemperatureSchedule<f64>) -> Self {
        Self { base: s.base, rate: s.rate, cap: s.cap, floor: Some(s.floor) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentConfig {
    TsLlm {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        schedule: Option<ScheduleConfig>,
        #[serde(default = "default_init")]
        init_pulls: usize,
    },
    RoLlm {
        #[serde(default)]
        label: Option<String>,
        gamma: f64,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default = "default_init")]
        init_pulls: usize,
    },
    TsLlmDb {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        borda_samples: Option<usize>,
        #[serde(default)]
        first_schedule: Option<ScheduleConfig>,
        #[serde(default)]
        second_schedule: Option<ScheduleConfig>,
        #[serde(default)]
        pair_encoding: Option<PairEncoding>,
        #[serde(default)]
        allow_self_duel: bool,
        #[serde(default = "default_init_duels")]
        init_duels: usize,
    },
    Random {
        #[serde(default)]
        label: Option<String>,
    },
    Direct {
        #[serde(default)]
        label: Option<String>,
        #[serde(default = "default_variant")]
        variant: BaselineVariant,
        #[serde(default = "default_init")]
        init_pulls: usize,
    },
}

fn default_init() -> usize {
    2
}
fn default_init_duels() -> usize {
    1
}
fn default_variant() -> BaselineVariant {
    BaselineVariant::NoFeature
}

impl AgentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AgentConfig::TsLlm { .. } => "ts_llm",
            AgentConfig::RoLlm { .. } => "ro_llm",
            AgentConfig::TsLlmDb { .. } => "ts_llm_db",
            AgentConfig::Random { .. } => "random",
            AgentConfig::Direct { .. } => "direct",
        }
    }

    pub fn label(&self) -> String {
        let explicit = match self {
            AgentConfig::TsLlm { label, .. }
            | AgentConfig::RoLlm { label, .. }
            | AgentConfig::TsLlmDb { label, .. }
            | AgentConfig::Random { label }
            | AgentConfig::Direct { label, .. } => label.clone(),
        };
        explicit.unwrap_or_else(|| match self {
            AgentConfig::Direct { variant, .. } => format!("direct_{}", variant_name(*variant)),
            other => other.kind_name().to_string(),
        })
    }

    /// Fills every defaulted field so the stored config is self-describing.
    pub fn resolved(&self, task: Task, arms: usize, reward: RewardKind) -> AgentConfig {
        let label = Some(self.label());
        match self.clone() {
            AgentConfig::TsLlm { schedule, init_pulls, .. } => AgentConfig::TsLlm {
                label,
                schedule: Some(schedule.unwrap_or_else(|| ScheduleConfig::from_schedule(TemperatureSchedule::standard()))),
                init_pulls,
            },
            AgentConfig::RoLlm { gamma, mu, init_pulls, .. } => {
                AgentConfig::RoLlm { label, gamma, mu: Some(mu.unwrap_or(arms as f64)), init_pulls }
            }
            AgentConfig::TsLlmDb {
                borda_samples,
                first_schedule,
                second_schedule,
                pair_encoding,
                allow_self_duel,
                init_duels,
                ..
            } => {
                let square = reward != RewardKind::Linear && task == Task::Dueling;
                let (first, second, encoding) = if square {
                    (
                        TemperatureSchedule::dueling_square_first(),
                        TemperatureSchedule::dueling_square_second(),
                        PairEncoding::Concatenation,
                    )
                } else {
                    (TemperatureSchedule::standard(), TemperatureSchedule::dueling_linear_second(), PairEncoding::Difference)
                };
                AgentConfig::TsLlmDb {
                    label,
                    borda_samples: Some(borda_samples.unwrap_or_else(|| 15.min(arms.saturating_sub(1)).max(1))),
                    first_schedule: Some(first_schedule.unwrap_or_else(|| ScheduleConfig::from_schedule(first))),
                    second_schedule: Some(second_schedule.unwrap_or_else(|| ScheduleConfig::from_schedule(second))),
                    pair_encoding: Some(pair_encoding.unwrap_or(encoding)),
                    allow_self_duel,
                    init_duels,
                }
            }
            AgentConfig::Random { .. } => AgentConfig::Random { label },
            AgentConfig::Direct { variant, init_pulls, .. } => AgentConfig::Direct { label, variant, init_pulls },
        }
    }

    fn supports(&self, task: Task) -> bool {
        matches!(
            (self, task),
            (AgentConfig::Random { .. }, _)
                | (AgentConfig::TsLlm { .. }, Task::Mab | Task::Contextual)
                | (AgentConfig::Direct { .. }, Task::Mab | Task::Contextual)
                | (AgentConfig::RoLlm { .. }, Task::Mab)
                | (AgentConfig::TsLlmDb { .. }, Task::Dueling)
        )
    }
}

fn variant_name(v: BaselineVariant) -> &'static str {
    match v {
        BaselineVariant::NoFeature => "nofeature",
        BaselineVariant::FramingFeature => "framingfeature",
        BaselineVariant::HistoryFeature => "historyfeature",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictorConfig {
    /// Simulated predictor that knows the true function.
    Oracle {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default)]
        persistent_noise: f64,
    },
    /// Chat model behind the gateway.
    Llm,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig::Oracle { kappa: DEFAULT_KAPPA, persistent_noise: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayModeConfig {
    Live,
    Record,
    Replay,
}

/// Chat gateway settings. Transport-only fields (mode, log, endpoint, rate
/// limit, timeout) are left out of serialized provenance so a recorded run and
/// its replay carry identical records. The API key is read from the
/// environment only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(skip_serializing)]
    pub mode: GatewayModeConfig,
    #[serde(skip_serializing)]
    pub log: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub api_base: Option<String>,
    #[serde(skip_serializing)]
    pub requests_per_minute: Option<u32>,
    #[serde(skip_serializing)]
    pub timeout_secs: u64,
    pub model: Option<String>,
    pub max_tokens: u32,
    pub parse_attempts: u32,
    pub char_budget: Option<usize>,
    pub direct_temperature: f64,
    pub direct_max_tokens: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            mode: GatewayModeConfig::Live,
            log: None,
            api_base: None,
            requests_per_minute: None,
            timeout_secs: 120,
            model: None,
            max_tokens: 64,
            parse_attempts: 3,
            char_budget: None,
            direct_temperature: 1.0,
            direct_max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub max_context_words: Option<usize>,
    #[serde(default)]
    pub max_context_chars: Option<usize>,
    pub pool: PoolSelection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).context("parsing experiment config")?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; relative dataset and log paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(c) = self.contextual.as_mut() {
            fix(&mut c.dataset);
        }
        if let Some(l) = self.gateway.log.as_mut() {
            fix(l);
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.horizon >= 1, "horizon must be >= 1");
        ensure!(self.repetitions >= 1, "repetitions must be >= 1");
        ensure!(!self.agents.is_empty(), "at least one [[agents]] entry is required");
        if self.task != Task::Contextual {
            ensure!(self.arms >= 2, "arms must be >= 2");
            ensure!(self.dim >= 1, "dim must be >= 1");
        }
        if self.task == Task::Contextual && self.contextual.is_none() {
            bail!("contextual task needs a [contextual] section");
        }
        let mut labels = HashSet::new();
        for agent in &self.agents {
            ensure!(agent.supports(self.task), "agent `{}` cannot run a {:?} task", agent.kind_name(), self.task);
            ensure!(labels.insert(agent.label()), "duplicate agent label `{}`", agent.label());
            match agent {
                AgentConfig::RoLlm { gamma, mu, init_pulls, .. } => {
                    ensure!(*gamma > 0.0, "ro_llm gamma must be > 0");
                    ensure!(mu.is_none_or(|m| m > 0.0), "ro_llm mu must be > 0");
                    ensure!(*init_pulls >= 1 && *init_pulls <= self.arms, "init_pulls must lie in [1, arms]");
                }
                AgentConfig::TsLlm { init_pulls, .. } | AgentConfig::Direct { init_pulls, .. } => {
                    ensure!(*init_pulls >= 1, "init_pulls must be >= 1");
                    if self.task == Task::Mab {
                        ensure!(*init_pulls <= self.arms, "init_pulls must not exceed arms");
                    }
                }
                AgentConfig::TsLlmDb { borda_samples, .. } => {
                    if let Some(n) = borda_samples {
                        ensure!(*n >= 1 && *n < self.arms, "borda_samples must lie in [1, arms - 1]");
                    }
                }
                AgentConfig::Random { .. } => {}
            }
            if matches!(agent, AgentConfig::Direct { .. }) {
                ensure!(self.predictor == PredictorConfig::Llm, "direct agents need `predictor.backend = \"llm\"`");
            }
            if let AgentConfig::TsLlm { schedule: Some(s), .. } = agent {
                s.build()?;
            }
        }
        if let PredictorConfig::Oracle { kappa, persistent_noise } = self.predictor {
            ensure!(kappa >= 0.0 && persistent_noise >= 0.0, "oracle noise scales must be >= 0");
        }
        if self.predictor == PredictorConfig::Llm && self.gateway.mode != GatewayModeConfig::Live {
            ensure!(self.gateway.log.is_some(), "gateway record/replay mode needs `gateway.log`");
        }
        ensure!(self.environment.noise_variance >= 0.0, "noise_variance must be >= 0");
        ensure!(self.environment.gp_lengthscale > 0.0, "gp_lengthscale must be > 0");
        Ok(())
    }

    pub fn uses_llm(&self) -> bool {
        self.predictor == PredictorConfig::Llm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
task = "mab"
horizon = 5

[[agents]]
kind = "ts_llm"

[[agents]]
kind = "ro_llm"
gamma = 5
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!((c.arms, c.dim, c.repetitions), (16, 4, 10));
        assert_eq!(c.environment.noise_variance, 0.02);
        assert_eq!(c.predictor, PredictorConfig::Oracle { kappa: 0.3, persistent_noise: 0.0 });
        let ro = c.agents[1].resolved(c.task, c.arms, c.environment.reward);
        assert!(matches!(ro, AgentConfig::RoLlm { mu: Some(m), .. } if m == 16.0));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("horizon = 5", "horizon = 0")).is_err());
        assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("gamma = 5", "gamma = 5\nbogus = 1")).is_err());
        assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace("\"ro_llm\"", "\"ts_llm_db\"")).is_err());
        let dup = format!("{MINIMAL}\n[[agents]]\nkind = \"ts_llm\"\n");
        assert!(ExperimentConfig::from_toml_str(&dup).is_err());
        let direct = format!("{MINIMAL}\n[[agents]]\nkind = \"direct\"\n");
        assert!(ExperimentConfig::from_toml_str(&direct).is_err());
    }

    #[test]
    fn dueling_defaults_follow_reward_kind() {
        let text = "task = \"dueling\"\nhorizon = 3\n[environment]\nreward = \"square\"\n[[agents]]\nkind = \"ts_llm_db\"\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        match c.agents[0].resolved(c.task, c.arms, c.environment.reward) {
            AgentConfig::TsLlmDb { first_schedule: Some(f), pair_encoding: Some(e), borda_samples: Some(n), .. } => {
                assert_eq!((f.base, f.rate, f.cap), (1.6, 0.13, 1.5));
                assert_eq!(e, PairEncoding::Concatenation);
                assert_eq!(n, 15);
            }
            other => panic!("{other:?}"),
        }
    }
}

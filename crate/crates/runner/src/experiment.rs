//! Seeded execution of every (method, repetition) pair.
//!
//! Repetition `r` runs under `derive_seed(base_seed, r)`; the arms, θ, GP
//! draw, initialization, agent tie-breaks, observation noise and predictor
//! streams each take a tagged sub-seed of it. Methods sharing a repetition
//! therefore face the same environment and the same noise stream.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use llmab_core::agents::{
    baseline_random_pair, baseline_random_step, initial_arms, pair_feature, ro_llm_step, ts_llm_db_step, ts_llm_step,
    ts_llm_text_step, PairEncoding, RoLlmConfig, StepContext, TsLlmConfig, TsLlmDbConfig,
};
use llmab_core::env::{
    generate_arms, generate_theta, load_contextual_dataset, observe_reward, sample_preference, ContextualRecord,
    DatasetFilter, DuelingEnv, NoiseSpec, RewardFunction, RewardFunctionSpec,
};
use llmab_core::predictor::{
    ContextualOracle, OraclePredictor, OracleSpec, OracleTruth, PredictionResponse, Predictor, TextExample, TextHistory,
    TextPredictor,
};
use llmab_core::regret::RegretLedger;
use llmab_core::rng::{derive_seed, rng_from_seed, sub_seed, BanditRng, StreamFactory};
use llmab_core::types::{ArmSet, History, HistoryKind};
use llmab_gateway::{
    baseline_direct_step, default_arm_labels, text_direct_step, CachedClient, ChatClient, ClientConfig, DirectSettings,
    LlmPredictor, LlmSettings, LlmTextPredictor, RetryPolicy, UreqTransport,
};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{AgentConfig, ExperimentConfig, GatewayModeConfig, PredictorConfig, Task};
use crate::record::{IterationRecord, Metric, Phase, RecordHeader, RepetitionPaths, RunRecord};

pub const TAG_ARMS: u64 = 1;
pub const TAG_THETA: u64 = 2;
pub const TAG_GP: u64 = 3;
pub const TAG_AGENT: u64 = 4;
pub const TAG_OBSERVATION: u64 = 5;
pub const TAG_PREDICT: u64 = 6;
pub const TAG_ORACLE: u64 = 7;
pub const TAG_CONTEXT_ORDER: u64 = 8;

/// Where predictions come from.
#[derive(Clone)]
pub enum Backend {
    Oracle { kappa: f64, persistent_noise: f64 },
    Llm { gateway: Arc<CachedClient>, settings: LlmSettings, direct: DirectSettings },
}

impl Backend {
    /// Builds the backend named by the config, opening the gateway in its
    /// configured mode. Credentials and endpoint come from the environment
    /// unless the config sets them.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        match config.predictor {
            PredictorConfig::Oracle { kappa, persistent_noise } => Ok(Backend::Oracle { kappa, persistent_noise }),
            PredictorConfig::Llm => {
                let g = &config.gateway;
                let gateway = match g.mode {
                    GatewayModeConfig::Replay => {
                        CachedClient::replay(g.log.clone().context("replay mode needs gateway.log")?)?
                    }
                    mode => {
                        let api_base = match &g.api_base {
                            Some(b) => b.clone(),
                            None => std::env::var("LLM_API_BASE").context("LLM_API_BASE is not set")?,
                        };
                        let api_key = std::env::var("LLM_API_KEY").context("LLM_API_KEY is not set")?;
                        let client = ChatClient::new(
                            ClientConfig {
                                api_base,
                                api_key,
                                retry: RetryPolicy::default(),
                                requests_per_minute: g.requests_per_minute,
                            },
                            Arc::new(UreqTransport::new(Duration::from_secs(g.timeout_secs))),
                        );
                        if mode == GatewayModeConfig::Record {
                            CachedClient::record(client, g.log.clone().context("record mode needs gateway.log")?)?
                        } else {
                            CachedClient::live(client)
                        }
                    }
                };
                Self::llm(config, Arc::new(gateway))
            }
        }
    }

    /// LLM backend over an already-open gateway.
    pub fn llm(config: &ExperimentConfig, gateway: Arc<CachedClient>) -> Result<Self> {
        let g = &config.gateway;
        let model = match &g.model {
            Some(m) => m.clone(),
            None => std::env::var("LLM_MODEL").context("set gateway.model or LLM_MODEL")?,
        };
        Ok(Backend::Llm {
            gateway,
            settings: LlmSettings {
                model: model.clone(),
                max_tokens: g.max_tokens,
                parse_attempts: g.parse_attempts,
                char_budget: g.char_budget,
            },
            direct: DirectSettings {
                model,
                temperature: g.direct_temperature,
                max_tokens: g.direct_max_tokens,
                parse_attempts: g.parse_attempts,
                char_budget: g.char_budget,
            },
        })
    }

    fn reward_predictor(&self, truth: OracleTruth<f64>, run_seed: u64) -> Result<Box<dyn Predictor<f64>>> {
        Ok(match self {
            Backend::Oracle { kappa, persistent_noise } => Box::new(OraclePredictor::new(
                OracleSpec::new(truth)
                    .with_kappa(*kappa)
                    .with_persistent_noise(*persistent_noise, sub_seed(run_seed, TAG_ORACLE)),
            )?),
            Backend::Llm { gateway, settings, .. } => Box::new(LlmPredictor::new(gateway.clone(), settings.clone())),
        })
    }
}

/// Synthetic environment of one repetition.
#[derive(Debug, Clone)]
pub struct Environment {
    pub arms: ArmSet<f64>,
    pub reward: RewardFunction<f64>,
    pub optimal_arm: usize,
    pub optimal_value: f64,
}

pub fn build_environment(config: &ExperimentConfig, run_seed: u64) -> Result<Environment> {
    let arms = generate_arms::<f64>(config.arms, config.dim, sub_seed(run_seed, TAG_ARMS))?;
    let theta = generate_theta::<f64>(config.dim, sub_seed(run_seed, TAG_THETA))?;
    let spec = RewardFunctionSpec { kind: config.environment.reward, gp_lengthscale: config.environment.gp_lengthscale };
    let reward = spec.realize(theta, &arms, sub_seed(run_seed, TAG_GP))?;
    let (optimal_arm, optimal_value) = reward.best_arm(&arms)?;
    Ok(Environment { arms, reward, optimal_arm, optimal_value })
}

/// Effective configuration of one method, as stored in record headers.
pub fn method_config(config: &ExperimentConfig, agent: &AgentConfig) -> Value {
    json!({
        "task": config.task,
        "arms": config.arms,
        "dim": config.dim,
        "horizon": config.horizon,
        "base_seed": config.base_seed,
        "environment": config.environment,
        "predictor": config.predictor,
        "gateway": config.gateway,
        "contextual": config.contextual,
        "agent": agent.resolved(config.task, config.arms, config.environment.reward),
    })
}

pub fn config_digest(value: &Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// Raw completions of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptLine {
    pub iteration: usize,
    pub completions: Vec<String>,
}

struct Step {
    arms: Vec<usize>,
    temperatures: Vec<f64>,
    phase: Phase,
    completions: Vec<String>,
}

impl Step {
    fn init(arms: Vec<usize>) -> Self {
        Self { arms, temperatures: vec![], phase: Phase::Init, completions: vec![] }
    }

    fn agent(arms: Vec<usize>, temperatures: Vec<f64>, predictions: &[PredictionResponse<f64>]) -> Self {
        let completions = predictions.iter().filter_map(|p| p.raw_text.clone()).collect();
        Self { arms, temperatures, phase: Phase::Agent, completions }
    }
}

struct Recorder {
    ledger: RegretLedger<f64>,
    iterations: Vec<IterationRecord>,
    transcript: Vec<TranscriptLine>,
    cumulative_reward: Option<f64>,
}

impl Recorder {
    fn new(optimal: f64, track_reward: bool) -> Self {
        Self {
            ledger: RegretLedger::new(optimal),
            iterations: Vec::new(),
            transcript: Vec::new(),
            cumulative_reward: track_reward.then_some(0.0),
        }
    }

    fn push(&mut self, t: usize, step: Step, observation: f64, true_value: f64) -> Result<()> {
        let inst = self.ledger.record(true_value)?;
        if let Some(total) = self.cumulative_reward.as_mut() {
            *total += observation;
        }
        let transcript = if step.completions.is_empty() {
            None
        } else {
            self.transcript.push(TranscriptLine { iteration: t, completions: step.completions });
            Some(self.transcript.len())
        };
        self.iterations.push(IterationRecord {
            iteration: t,
            phase: step.phase,
            temperatures: step.temperatures,
            arms: step.arms,
            observation,
            true_value,
            instantaneous_regret: inst,
            cumulative_regret: self.ledger.total(),
            cumulative_reward: self.cumulative_reward,
            transcript,
        });
        Ok(())
    }
}

struct Streams {
    agent: BanditRng,
    observation: BanditRng,
    predict: StreamFactory,
}

impl Streams {
    fn new(run_seed: u64) -> Self {
        Self {
            agent: rng_from_seed(sub_seed(run_seed, TAG_AGENT)),
            observation: rng_from_seed(sub_seed(run_seed, TAG_OBSERVATION)),
            predict: StreamFactory::new(sub_seed(run_seed, TAG_PREDICT)),
        }
    }
}

fn run_mab(config: &ExperimentConfig, agent: &AgentConfig, backend: &Backend, run_seed: u64) -> Result<(Recorder, f64)> {
    let env = build_environment(config, run_seed)?;
    let noise = NoiseSpec::new(config.environment.noise_variance)?;
    let mut s = Streams::new(run_seed);
    let kind = if matches!(agent, AgentConfig::RoLlm { .. }) { HistoryKind::Loss } else { HistoryKind::Reward };
    let mut history = History::new(kind);
    let init = match agent {
        AgentConfig::TsLlm { init_pulls, .. } | AgentConfig::RoLlm { init_pulls, .. } | AgentConfig::Direct { init_pulls, .. } => {
            initial_arms(config.arms, *init_pulls, &mut s.agent)?
        }
        _ => Vec::new(),
    };
    let predictor = backend.reward_predictor(OracleTruth::Reward(env.reward.clone()), run_seed)?;
    let labels = default_arm_labels(config.arms);
    let mut rec = Recorder::new(env.optimal_value, false);
    for t in 1..=config.horizon {
        let step = if t <= init.len() {
            Step::init(vec![init[t - 1]])
        } else {
            let ctx = StepContext { arms: &env.arms, history: &history, iteration: t, streams: s.predict };
            match agent {
                AgentConfig::TsLlm { schedule, init_pulls, .. } => {
                    let cfg = TsLlmConfig { schedule: schedule.context("unresolved schedule")?.build()?, init_pulls: *init_pulls };
                    let d = ts_llm_step(&cfg, &ctx, predictor.as_ref(), &mut s.agent)?;
                    Step::agent(d.arms, d.temperatures, &d.predictions)
                }
                AgentConfig::RoLlm { gamma, mu, init_pulls, .. } => {
                    let cfg = RoLlmConfig { gamma: *gamma, mu: *mu, init_pulls: *init_pulls };
                    let d = ro_llm_step(&cfg, &ctx, predictor.as_ref(), &mut s.agent)?;
                    Step::agent(d.arms, d.temperatures, &d.predictions)
                }
                AgentConfig::Random { .. } => {
                    Step { phase: Phase::Agent, ..Step::init(vec![baseline_random_step(config.arms, &mut s.agent)]) }
                }
                AgentConfig::Direct { variant, .. } => {
                    let Backend::Llm { gateway, direct, .. } = backend else { bail!("direct agents need the llm backend") };
                    let out = baseline_direct_step(
                        *variant,
                        gateway,
                        direct,
                        &labels,
                        &env.arms,
                        &history,
                        config.horizon,
                        &mut s.agent,
                    )?;
                    Step { arms: vec![out.arm], temperatures: vec![direct.temperature], phase: Phase::Agent, completions: vec![out.raw_text] }
                }
                AgentConfig::TsLlmDb { .. } => bail!("ts_llm_db cannot run a mab task"),
            }
        };
        let arm = step.arms[0];
        let x = env.arms.get(arm);
        let y = observe_reward(&env.reward, noise, x, &mut s.observation)?;
        let observation = if kind == HistoryKind::Loss { -y } else { y };
        history.push_scalar(Some(arm), x.clone(), observation)?;
        rec.push(t, step, observation, env.reward.eval(x)?)?;
    }
    Ok((rec, env.optimal_value))
}

fn run_dueling(config: &ExperimentConfig, agent: &AgentConfig, backend: &Backend, run_seed: u64) -> Result<(Recorder, f64)> {
    let env = build_environment(config, run_seed)?;
    let duel = DuelingEnv::new(env.reward.clone(), config.environment.sharpness)?;
    let mut s = Streams::new(run_seed);
    let mut history = History::new(HistoryKind::Preference);
    let (db_config, init_duels) = match agent {
        AgentConfig::TsLlmDb {
            borda_samples,
            first_schedule,
            second_schedule,
            pair_encoding,
            allow_self_duel,
            init_duels,
            ..
        } => (
            Some(TsLlmDbConfig {
                borda_samples: borda_samples.context("unresolved borda_samples")?,
                first_arm_schedule: first_schedule.context("unresolved schedule")?.build()?,
                second_arm_schedule: second_schedule.context("unresolved schedule")?.build()?,
                pair_encoding: pair_encoding.context("unresolved pair encoding")?,
                allow_self_duel: *allow_self_duel,
                init_duels: *init_duels,
            }),
            *init_duels,
        ),
        AgentConfig::Random { .. } => (None, 0),
        other => bail!("{} cannot run a dueling task", other.kind_name()),
    };
    let encoding = db_config.as_ref().map_or(PairEncoding::Difference, |c| c.pair_encoding);
    let predictor = backend.reward_predictor(OracleTruth::Dueling(duel.clone()), run_seed)?;
    let mut rec = Recorder::new(env.optimal_value, false);
    for t in 1..=config.horizon {
        let step = match &db_config {
            Some(_) if t <= init_duels => {
                let (a, b) = baseline_random_pair(config.arms, &mut s.agent);
                Step::init(vec![a, b])
            }
            Some(cfg) => {
                let ctx = StepContext { arms: &env.arms, history: &history, iteration: t, streams: s.predict };
                let d = ts_llm_db_step(cfg, &ctx, predictor.as_ref(), &mut s.agent)?;
                Step::agent(d.arms, d.temperatures, &d.predictions)
            }
            None => {
                let (a, b) = baseline_random_pair(config.arms, &mut s.agent);
                Step { phase: Phase::Agent, ..Step::init(vec![a, b]) }
            }
        };
        let (x1, x2) = (env.arms.get(step.arms[0]), env.arms.get(step.arms[1]));
        let preferred = sample_preference(&duel, x1, x2, &mut s.observation)?;
        history.push_preference(pair_feature(x1, x2, encoding)?, preferred)?;
        rec.push(t, step, if preferred { 1.0 } else { 0.0 }, env.reward.eval(x1)?)?;
    }
    Ok((rec, env.optimal_value))
}

/// Iteration order over the dataset: shuffled passes, as many as the horizon needs.
fn context_order(n: usize, horizon: usize, run_seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(sub_seed(run_seed, TAG_CONTEXT_ORDER));
    let mut order = Vec::with_capacity(horizon);
    while order.len() < horizon {
        let mut pass: Vec<usize> = (0..n).collect();
        pass.shuffle(&mut rng);
        order.extend(pass);
    }
    order.truncate(horizon);
    order
}

fn run_contextual(
    config: &ExperimentConfig,
    agent: &AgentConfig,
    backend: &Backend,
    run_seed: u64,
    records: &[ContextualRecord],
) -> Result<(Recorder, f64)> {
    let pool = records.first().context("empty dataset")?.arm_pool.clone();
    let mut s = Streams::new(run_seed);
    let mut history = TextHistory::<f64>::new();
    let order = context_order(records.len(), config.horizon, run_seed);
    let init_pulls = match agent {
        AgentConfig::TsLlm { init_pulls, .. } | AgentConfig::Direct { init_pulls, .. } => *init_pulls,
        _ => 0,
    };
    let predictor: Box<dyn TextPredictor<f64>> = match backend {
        Backend::Oracle { kappa, .. } => Box::new(ContextualOracle::new(records, *kappa)),
        Backend::Llm { gateway, settings, .. } => Box::new(LlmTextPredictor::new(gateway.clone(), settings.clone())),
    };
    let mut rec = Recorder::new(1.0, true);
    for t in 1..=config.horizon {
        let record = &records[order[t - 1]];
        let step = if t <= init_pulls {
            Step::init(vec![baseline_random_step(pool.len(), &mut s.agent)])
        } else {
            match agent {
                AgentConfig::TsLlm { schedule, .. } => {
                    let schedule = schedule.context("unresolved schedule")?.build()?;
                    let d = ts_llm_text_step(&schedule, record, &history, predictor.as_ref(), t, s.predict, &mut s.agent)?;
                    Step::agent(d.arms, d.temperatures, &d.predictions)
                }
                AgentConfig::Direct { .. } => {
                    let Backend::Llm { gateway, direct, .. } = backend else { bail!("direct agents need the llm backend") };
                    let out = text_direct_step(gateway, direct, record, &history)?;
                    Step { arms: vec![out.arm], temperatures: vec![direct.temperature], phase: Phase::Agent, completions: vec![out.raw_text] }
                }
                AgentConfig::Random { .. } => {
                    Step { phase: Phase::Agent, ..Step::init(vec![baseline_random_step(pool.len(), &mut s.agent)]) }
                }
                other => bail!("{} cannot run a contextual task", other.kind_name()),
            }
        };
        let label = &pool[step.arms[0]];
        let reward = if *label == record.correct_arm_label { 1.0 } else { 0.0 };
        history.push(TextExample {
            title: record.title.clone(),
            context: record.context_text.clone(),
            label: label.clone(),
            reward,
        })?;
        rec.push(t, step, reward, reward)?;
    }
    Ok((rec, 1.0))
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<Option<Vec<ContextualRecord>>> {
    let Some(c) = &config.contextual else { return Ok(None) };
    let filter = DatasetFilter {
        max_context_words: c.max_context_words,
        max_context_chars: c.max_context_chars,
        pool: c.pool.clone(),
    };
    Ok(Some(load_contextual_dataset(&c.dataset, &filter)?))
}

/// Runs one repetition of one method in memory.
pub fn simulate_repetition(
    config: &ExperimentConfig,
    agent: &AgentConfig,
    repetition: usize,
    backend: &Backend,
    dataset: Option<&[ContextualRecord]>,
) -> Result<(RunRecord, Vec<TranscriptLine>)> {
    let resolved = agent.resolved(config.task, config.arms, config.environment.reward);
    let seed = derive_seed(config.base_seed, repetition as u64);
    let (rec, optimal) = match config.task {
        Task::Mab => run_mab(config, &resolved, backend, seed)?,
        Task::Dueling => run_dueling(config, &resolved, backend, seed)?,
        Task::Contextual => {
            run_contextual(config, &resolved, backend, seed, dataset.context("contextual task without a dataset")?)?
        }
    };
    let method = method_config(config, agent);
    let header = RecordHeader {
        method: resolved.label(),
        repetition,
        seed,
        config_digest: config_digest(&method),
        horizon: config.horizon,
        metric: if config.task == Task::Contextual { Metric::Reward } else { Metric::Regret },
        optimal_value: optimal,
        config: method,
    };
    let record = RunRecord { header, iterations: rec.iterations };
    record.validate()?;
    Ok((record, rec.transcript))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedRepetition {
    pub method: String,
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    /// Successful records, ordered by method then repetition.
    pub records: Vec<RunRecord>,
    pub failed: Vec<FailedRepetition>,
    /// Repetitions loaded from disk rather than re-run.
    pub resumed: usize,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|i| serde_json::to_string(i).expect("serializable") + "\n").collect()
}

enum JobResult {
    Done(RunRecord, bool),
    Failed(FailedRepetition),
}

fn run_job(
    config: &ExperimentConfig,
    agent: &AgentConfig,
    repetition: usize,
    backend: &Backend,
    dataset: Option<&[ContextualRecord]>,
    out_dir: &Path,
) -> Result<JobResult> {
    let label = agent.label();
    let paths = RepetitionPaths::new(&out_dir.join(&label), repetition);
    let digest = config_digest(&method_config(config, agent));
    if paths.record.exists() {
        match RunRecord::load(&paths.record) {
            Ok(r) if r.header.config_digest == digest => return Ok(JobResult::Done(r, true)),
            Ok(_) => log::warn!("{}: config changed, re-running", paths.record.display()),
            Err(e) => log::warn!("{}: unreadable ({e:#}), re-running", paths.record.display()),
        }
    }
    if paths.failed.exists() {
        fs::remove_file(&paths.failed)?;
    }
    let started = Instant::now();
    match simulate_repetition(config, agent, repetition, backend, dataset) {
        Ok((record, transcript)) => {
            if !transcript.is_empty() {
                crate::record::write_atomic(&paths.transcript, jsonl(&transcript).as_bytes())?;
            }
            crate::record::write_atomic(&paths.record, record.to_jsonl().as_bytes())?;
            let meta = json!({
                "wall_clock_ms": started.elapsed().as_millis() as u64,
                "finished_at_ms": now_ms(),
            });
            crate::record::write_atomic(&paths.meta, meta.to_string().as_bytes())?;
            Ok(JobResult::Done(record, false))
        }
        Err(e) => {
            let failed = FailedRepetition { method: label, repetition, error: format!("{e:#}") };
            log::error!("{} repetition {repetition} failed: {}", failed.method, failed.error);
            let body = json!({"method": failed.method, "repetition": repetition, "error": failed.error});
            crate::record::write_atomic(&paths.failed, body.to_string().as_bytes())?;
            Ok(JobResult::Failed(failed))
        }
    }
}

/// Runs (or resumes) every repetition of every method, writing records under
/// `out_dir/<method>/`. Repetitions run in parallel; a failing repetition is
/// recorded and the rest proceed.
pub fn run_experiment(config: &ExperimentConfig, backend: &Backend, out_dir: &Path) -> Result<ExperimentOutcome> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let jobs: Vec<(usize, usize)> =
        (0..config.agents.len()).flat_map(|a| (0..config.repetitions).map(move |r| (a, r))).collect();
    let results: Vec<Result<JobResult>> = jobs
        .par_iter()
        .map(|&(a, r)| run_job(config, &config.agents[a], r, backend, dataset.as_deref(), out_dir))
        .collect();
    let mut outcome = ExperimentOutcome::default();
    for result in results {
        match result? {
            JobResult::Done(record, resumed) => {
                outcome.resumed += usize::from(resumed);
                outcome.records.push(record);
            }
            JobResult::Failed(f) => outcome.failed.push(f),
        }
    }
    if outcome.records.is_empty() && !outcome.failed.is_empty() {
        return Err(anyhow!("every repetition failed; first error: {}", outcome.failed[0].error));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_order_covers_each_pass() {
        let o = context_order(4, 10, 3);
        assert_eq!(o.len(), 10);
        let mut first: Vec<usize> = o[..4].to_vec();
        first.sort();
        assert_eq!(first, vec![0, 1, 2, 3]);
        assert_eq!(o, context_order(4, 10, 3));
    }
}

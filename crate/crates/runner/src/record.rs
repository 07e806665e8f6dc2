//! Per-repetition run records: one JSON header line, then one line per iteration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Regret,
    Reward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordHeader {
    pub method: String,
    pub repetition: usize,
    pub seed: u64,
    pub config_digest: String,
    pub horizon: usize,
    pub metric: Metric,
    pub optimal_value: f64,
    /// Effective configuration of this method, every default filled in.
    pub config: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Predictor temperatures used; empty for initialization and random steps.
    pub temperatures: Vec<f64>,
    /// Selected arm, or (first, second) for duels.
    pub arms: Vec<usize>,
    /// Value appended to the history: reward, loss, or 1/0 preference.
    pub observation: f64,
    /// Noise-free value of the (first) selected arm.
    pub true_value: f64,
    pub instantaneous_regret: f64,
    pub cumulative_regret: f64,
    /// Running sum of rewards, for the contextual task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_reward: Option<f64>,
    /// Line of the transcript file holding this iteration's completions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub header: RecordHeader,
    pub iterations: Vec<IterationRecord>,
}

/// Line-delimited form of a record header or iteration.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(RecordHeader),
    Iteration(IterationRecord),
}

impl RunRecord {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Header(self.header.clone())).expect("header serializes");
        out.push('\n');
        for it in &self.iterations {
            out.push_str(&serde_json::to_string(&Line::Iteration(it.clone())).expect("iteration serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
        let header = match lines.next() {
            Some((_, l)) => match serde_json::from_str(l).context("record header")? {
                Line::Header(h) => h,
                Line::Iteration(_) => bail!("record starts with an iteration line"),
            },
            None => bail!("empty record"),
        };
        let mut iterations = Vec::new();
        for (i, l) in lines {
            match serde_json::from_str(l).with_context(|| format!("record line {}", i + 1))? {
                Line::Iteration(it) => iterations.push(it),
                Line::Header(_) => bail!("second header at line {}", i + 1),
            }
        }
        let record = Self { header, iterations };
        record.validate()?;
        Ok(record)
    }

    /// Exactly `horizon` consecutive iterations whose cumulative columns
    /// match recomputation from the per-step values.
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.iterations.len() == self.header.horizon,
            "{} iterations recorded, horizon is {}",
            self.iterations.len(),
            self.header.horizon
        );
        let mut regret = 0.0;
        let mut reward = 0.0;
        for (i, it) in self.iterations.iter().enumerate() {
            ensure!(it.iteration == i + 1, "iteration {} out of order", it.iteration);
            regret += it.instantaneous_regret;
            ensure!(
                (regret - it.cumulative_regret).abs() <= 1e-9 * regret.abs().max(1.0),
                "cumulative regret {} at iteration {} does not match recomputed {regret}",
                it.cumulative_regret,
                it.iteration
            );
            if self.header.metric == Metric::Reward {
                reward += it.observation;
                let stored = it.cumulative_reward.context("reward record without cumulative_reward")?;
                ensure!((reward - stored).abs() <= 1e-9 * reward.abs().max(1.0), "cumulative reward mismatch at {}", it.iteration);
            }
        }
        Ok(())
    }

    /// Per-iteration series that summaries aggregate.
    pub fn curve(&self) -> Vec<f64> {
        match self.header.metric {
            Metric::Regret => self.iterations.iter().map(|i| i.cumulative_regret).collect(),
            Metric::Reward => self.iterations.iter().map(|i| i.cumulative_reward.unwrap_or(f64::NAN)).collect(),
        }
    }

    pub fn final_value(&self) -> f64 {
        self.curve().last().copied().unwrap_or(0.0)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_jsonl(&text).with_context(|| format!("in {}", path.display()))
    }
}

/// File layout of one repetition inside a method directory.
#[derive(Debug, Clone)]
pub struct RepetitionPaths {
    pub record: PathBuf,
    pub transcript: PathBuf,
    pub meta: PathBuf,
    pub failed: PathBuf,
}

impl RepetitionPaths {
    pub fn new(method_dir: &Path, repetition: usize) -> Self {
        let stem = format!("rep-{repetition:04}");
        Self {
            record: method_dir.join(format!("{stem}.jsonl")),
            transcript: method_dir.join(format!("{stem}.transcript.jsonl")),
            meta: method_dir.join(format!("{stem}.meta.json")),
            failed: method_dir.join(format!("{stem}.failed.json")),
        }
    }
}

/// Writes via a temporary sibling and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

//! Per-method mean and standard error curves across repetitions.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::record::{Metric, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation over √n; zero for a single run.
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub metric: Metric,
    pub rows: Vec<SummaryRow>,
}

impl MethodSummary {
    pub fn final_mean(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.mean)
    }
}

/// Mean and standard error of a set of equal-length curves, pointwise.
pub fn mean_stderr(curves: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let Some(first) = curves.first() else { bail!("no curves to aggregate") };
    let len = first.len();
    if curves.iter().any(|c| c.len() != len) {
        bail!("curves have different horizons");
    }
    let n = curves.len() as f64;
    Ok((0..len)
        .map(|t| {
            let mean = curves.iter().map(|c| c[t]).sum::<f64>() / n;
            let stderr = if curves.len() < 2 {
                0.0
            } else {
                let var = curves.iter().map(|c| (c[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            (mean, stderr)
        })
        .collect())
}

/// Groups records by method (sorted by name) and summarizes each group.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<MethodSummary>> {
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.header.method.as_str()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(method, runs)| {
            let metric = runs[0].header.metric;
            if runs.iter().any(|r| r.header.metric != metric) {
                bail!("method `{method}` mixes regret and reward records");
            }
            let curves: Vec<Vec<f64>> = runs.iter().map(|r| r.curve()).collect();
            let stats = mean_stderr(&curves).with_context(|| format!("method `{method}`"))?;
            let rows = stats
                .into_iter()
                .enumerate()
                .map(|(i, (mean, stderr))| SummaryRow {
                    method: method.to_string(),
                    iteration: i + 1,
                    mean,
                    stderr,
                    n: runs.len(),
                })
                .collect();
            Ok(MethodSummary { method: method.to_string(), metric, rows })
        })
        .collect()
}

/// Records found under a results directory, plus the count of failure markers.
#[derive(Debug, Default)]
pub struct Collected {
    pub records: Vec<RunRecord>,
    pub failed: usize,
}

/// Loads every `<method>/rep-*.jsonl` record below `dir`, skipping transcripts.
pub fn collect_records(dir: &Path) -> Result<Collected> {
    let mut out = Collected::default();
    let mut method_dirs: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    method_dirs.sort();
    for m in method_dirs {
        let mut files: Vec<_> = fs::read_dir(&m)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        files.sort();
        for f in files {
            let Some(name) = f.file_name().and_then(|n| n.to_str()) else { continue };
            if !name.starts_with("rep-") {
                continue;
            }
            if name.ends_with(".failed.json") {
                out.failed += 1;
            } else if name.ends_with(".jsonl") && !name.ends_with(".transcript.jsonl") {
                out.records.push(RunRecord::load(&f)?);
            }
        }
    }
    Ok(out)
}

pub fn write_summary_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut text = String::from("method,iteration,mean,stderr,n\n");
    for s in summaries {
        for r in &s.rows {
            text.push_str(&format!("{},{},{},{},{}\n", r.method, r.iteration, r.mean, r.stderr, r.n));
        }
    }
    crate::record::write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_runs_hand_computed() {
        // Runs (2, 4) and (4, 6): at t=2 the mean is 5, std 1.414.., stderr 1.
        let s = mean_stderr(&[vec![2.0, 4.0], vec![4.0, 6.0]]).unwrap();
        assert_eq!(s[1].0, 5.0);
        assert!((s[1].1 - 1.0).abs() < 1e-12);
        assert_eq!(s[0], (3.0, 1.0));
    }

    #[test]
    fn single_run_has_zero_stderr() {
        let s = mean_stderr(&[vec![1.0, 3.0]]).unwrap();
        assert_eq!(s, vec![(1.0, 0.0), (3.0, 0.0)]);
    }

    #[test]
    fn mismatched_horizons_are_rejected() {
        assert!(mean_stderr(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(mean_stderr(&[]).is_err());
    }
}

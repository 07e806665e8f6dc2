//! Parameter sweeps: one config variant per value, agent labels suffixed.

use anyhow::{bail, Context, Result};
use toml::Value;

/// Agent kinds that accept each sweepable key.
fn accepts(kind: &str, key: &str) -> bool {
    matches!(
        (kind, key),
        ("ro_llm", "gamma" | "mu" | "init_pulls")
            | ("ts_llm", "init_pulls")
            | ("direct", "init_pulls")
            | ("ts_llm_db", "borda_samples" | "init_duels")
    )
}

/// Parses `key=v1,v2,...`.
pub fn parse_param(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec.split_once('=').context("sweep parameter must look like key=v1,v2")?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if key.trim().is_empty() || values.is_empty() {
        bail!("sweep parameter `{spec}` needs a key and at least one value");
    }
    Ok((key.trim().to_string(), values))
}

fn parse_value(raw: &str) -> Value {
    raw.parse::<i64>()
        .map(Value::Integer)
        .or_else(|_| raw.parse::<f64>().map(Value::Float))
        .unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn default_label(agent: &toml::Table) -> String {
    let kind = agent.get("kind").and_then(Value::as_str).unwrap_or("agent");
    match (kind, agent.get("variant").and_then(Value::as_str)) {
        ("direct", Some(v)) => format!("direct_{}", v.replace('_', "")),
        ("direct", None) => "direct_nofeature".into(),
        _ => kind.to_string(),
    }
}

/// Returns one TOML document per value. Agents that accept `key` get the value
/// and the label suffix `_<key><value>`; other agents are dropped from the
/// variants after the first so baselines are run once.
pub fn expand(base: &str, key: &str, values: &[String]) -> Result<Vec<(String, String)>> {
    let doc: toml::Table = base.parse().context("parsing sweep base config")?;
    let agents = doc.get("agents").and_then(Value::as_array).context("config has no [[agents]]")?;
    if !agents.iter().any(|a| a.get("kind").and_then(Value::as_str).is_some_and(|k| accepts(k, key))) {
        bail!("no agent in the config accepts `{key}`");
    }
    let mut out = Vec::new();
    for (i, raw) in values.iter().enumerate() {
        let mut variant = doc.clone();
        let mut kept = Vec::new();
        for agent in agents {
            let mut table = agent.as_table().context("agent entry is not a table")?.clone();
            let kind = table.get("kind").and_then(Value::as_str).unwrap_or_default().to_string();
            if accepts(&kind, key) {
                let label = table.get("label").and_then(Value::as_str).map_or_else(|| default_label(&table), str::to_string);
                table.insert(key.to_string(), parse_value(raw));
                table.insert("label".into(), Value::String(format!("{label}_{key}{raw}")));
                kept.push(Value::Table(table));
            } else if i == 0 {
                kept.push(Value::Table(table));
            }
        }
        variant.insert("agents".into(), Value::Array(kept));
        out.push((raw.clone(), toml::to_string(&variant)?));
    }
    Ok(out)
}

//! Line-delimited JSON datasets for the text contextual task.
//!
//! Each line is an object with a `context` string, a `label` (string or
//! integer) and an optional `title`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BanditError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualRecord {
    pub title: Option<String>,
    pub context_text: String,
    pub correct_arm_label: String,
    pub arm_pool: Vec<String>,
}

/// Which labels make up the arm pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSelection {
    /// Exactly these labels, in this order.
    Labels(Vec<String>),
    /// The most frequent labels among records that survive the length caps.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFilter {
    pub max_context_words: Option<usize>,
    pub max_context_chars: Option<usize>,
    pub pool: PoolSelection,
}

struct RawRecord {
    title: Option<String>,
    context: String,
    label: String,
}

fn parse_line(line: &str) -> std::result::Result<RawRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record is not an object")?;
    let context = obj
        .get("context")
        .and_then(Value::as_str)
        .ok_or("missing string field `context`")?
        .to_string();
    let label = match obj.get("label") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) if n.is_i64() || n.is_u64() => n.to_string(),
        Some(_) => return Err("`label` must be a single string or integer".into()),
        None => return Err("missing field `label`".into()),
    };
    let title = match obj.get("title") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err("`title` must be a string".into()),
    };
    Ok(RawRecord { title, context, label })
}

/// Loads, length-filters and pool-restricts a dataset. Malformed lines are
/// logged with their line number and skipped; an empty result is an error.
pub fn load_contextual_dataset(path: impl AsRef<Path>, filter: &DatasetFilter) -> Result<Vec<ContextualRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| BanditError::Dataset(format!("{}: {e}", path.display())))?;
    let mut kept = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BanditError::Dataset(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match parse_line(&line) {
            Ok(r) => r,
            Err(msg) => {
                log::warn!("{}:{}: skipping malformed record: {msg}", path.display(), idx + 1);
                continue;
            }
        };
        if filter.max_context_words.is_some_and(|cap| record.context.split_whitespace().count() > cap) {
            continue;
        }
        if filter.max_context_chars.is_some_and(|cap| record.context.chars().count() > cap) {
            continue;
        }
        kept.push(record);
    }

    let pool = match &filter.pool {
        PoolSelection::Labels(labels) => labels.clone(),
        PoolSelection::TopK(k) => {
            let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
            for (order, r) in kept.iter().enumerate() {
                counts.entry(&r.label).or_insert((0, order)).0 += 1;
            }
            let mut ranked: Vec<(&str, (usize, usize))> = counts.into_iter().collect();
            // Most frequent first; first appearance breaks ties.
            ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
            ranked.into_iter().take(*k).map(|(l, _)| l.to_string()).collect()
        }
    };
    if pool.len() < 2 {
        return Err(BanditError::Dataset(format!("arm pool needs at least 2 labels, got {}", pool.len())));
    }

    let records: Vec<ContextualRecord> = kept
        .into_iter()
        .filter(|r| pool.contains(&r.label))
        .map(|r| ContextualRecord {
            title: r.title,
            context_text: r.context,
            correct_arm_label: r.label,
            arm_pool: pool.clone(),
        })
        .collect();
    if records.is_empty() {
        return Err(BanditError::Dataset(format!("no records in {} survived filtering", path.display())));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn pool(labels: &[&str]) -> DatasetFilter {
        DatasetFilter {
            max_context_words: None,
            max_context_chars: None,
            pool: PoolSelection::Labels(labels.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn keeps_well_formed_records_in_order() {
        let f = write(&[
            r#"{"context": "alpha", "label": "a"}"#,
            r#"{"context": "beta", "label": 7}"#,
            r#"{"context": "gamma", "label": "a", "title": "T"}"#,
        ]);
        let recs = load_contextual_dataset(f.path(), &pool(&["a", "7"])).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].context_text, "alpha");
        assert_eq!(recs[1].correct_arm_label, "7");
        assert_eq!(recs[2].title.as_deref(), Some("T"));
        assert!(recs.iter().all(|r| r.arm_pool.contains(&r.correct_arm_label)));
    }

    #[test]
    fn drops_long_contexts_and_foreign_labels() {
        let long = vec!["w"; 401].join(" ");
        let ok = vec!["w"; 400].join(" ");
        let l1 = format!(r#"{{"context": "{long}", "label": "a"}}"#);
        let l2 = format!(r#"{{"context": "{ok}", "label": "a"}}"#);
        let f = write(&[&l1, &l2, r#"{"context": "x", "label": "zzz"}"#, r#"{"context": "y", "label": "b"}"#]);
        let mut filter = pool(&["a", "b"]);
        filter.max_context_words = Some(400);
        let recs = load_contextual_dataset(f.path(), &filter).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].context_text, "y");

        filter.max_context_chars = Some(1);
        let recs = load_contextual_dataset(f.path(), &filter).unwrap();
        assert_eq!(recs.len(), 1);
    }

    #[test]
    fn skips_malformed_lines_and_errors_when_empty() {
        let f = write(&["not json", r#"{"context": 3, "label": "a"}"#, r#"{"context": "c", "label": ["a", "b"]}"#]);
        assert!(matches!(load_contextual_dataset(f.path(), &pool(&["a", "b"])), Err(BanditError::Dataset(_))));
        let f = write(&["not json", r#"{"context": "c", "label": "a"}"#]);
        assert_eq!(load_contextual_dataset(f.path(), &pool(&["a", "b"])).unwrap().len(), 1);
    }

    #[test]
    fn top_k_pool_picks_frequent_labels() {
        let f = write(&[
            r#"{"context": "1", "label": 5}"#,
            r#"{"context": "2", "label": 9}"#,
            r#"{"context": "3", "label": 9}"#,
            r#"{"context": "4", "label": 1}"#,
            r#"{"context": "5", "label": 5}"#,
            r#"{"context": "6", "label": 9}"#,
        ]);
        let filter = DatasetFilter { max_context_words: None, max_context_chars: None, pool: PoolSelection::TopK(2) };
        let recs = load_contextual_dataset(f.path(), &filter).unwrap();
        assert_eq!(recs[0].arm_pool, vec!["9".to_string(), "5".to_string()]);
        assert_eq!(recs.len(), 5);
    }
}

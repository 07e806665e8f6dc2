//! Arm features, arm pools and interaction histories.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::rng::mix64;
use crate::scalar::{to_f64, Scalar};

/// A d-dimensional feature vector with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<F> {
    components: Vec<F>,
}

impl<F: Scalar> FeatureVector<F> {
    pub fn new(components: Vec<F>) -> Result<Self> {
        if components.is_empty() {
            return Err(BanditError::Empty("feature vector"));
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(BanditError::NonFinite { what: "feature vector", index });
        }
        Ok(Self { components })
    }

    pub fn from_f64(components: &[f64]) -> Result<Self> {
        let converted = components
            .iter()
            .map(|&c| F::from_f64(c).unwrap_or_else(F::nan))
            .collect();
        Self::new(converted)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.components
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.components.iter().map(|&c| to_f64(c)).collect()
    }

    pub fn dot(&self, other: &Self) -> Result<F> {
        self.check_dim(other.dim())?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn squared_distance(&self, other: &Self) -> Result<F> {
        self.check_dim(other.dim())?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum())
    }

    pub fn norm(&self) -> F {
        self.components.iter().map(|&c| c * c).sum::<F>().sqrt()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(BanditError::DimensionMismatch { expected, got: self.dim() });
        }
        Ok(())
    }

    /// Bit-level fingerprint of the components, mixed into `state`.
    pub(crate) fn fold_fingerprint(&self, mut state: u64) -> u64 {
        for &c in &self.components {
            state = mix64(state ^ to_f64(c).to_bits());
        }
        mix64(state ^ self.components.len() as u64)
    }
}

impl<F> Index<usize> for FeatureVector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.components[i]
    }
}

impl<F: Scalar> fmt::Display for FeatureVector<F> {
    /// Bracketed, comma-separated, four decimal places: `[0.1000, -0.2500]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:.4}", to_f64(*c))?;
        }
        f.write_str("]")
    }
}

/// The K arms an agent chooses from. Indices are stable for the lifetime of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSet<F> {
    arms: Vec<FeatureVector<F>>,
    labels: Option<Vec<String>>,
}

impl<F: Scalar> ArmSet<F> {
    pub fn new(arms: Vec<FeatureVector<F>>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(BanditError::InvalidParameter(format!(
                "an arm set needs at least 2 arms, got {}",
                arms.len()
            )));
        }
        let d = arms[0].dim();
        for arm in &arms[1..] {
            arm.check_dim(d)?;
        }
        Ok(Self { arms, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.arms.len() {
            return Err(BanditError::InvalidParameter(format!(
                "{} labels for {} arms",
                labels.len(),
                self.arms.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.arms[0].dim()
    }

    pub fn arms(&self) -> &[FeatureVector<F>] {
        &self.arms
    }

    pub fn get(&self, i: usize) -> &FeatureVector<F> {
        &self.arms[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Position of an arm with exactly these features.
    pub fn position(&self, x: &FeatureVector<F>) -> Option<usize> {
        self.arms.iter().position(|a| a == x)
    }
}

impl<F> Index<usize> for ArmSet<F> {
    type Output = FeatureVector<F>;
    fn index(&self, i: usize) -> &FeatureVector<F> {
        &self.arms[i]
    }
}

/// What the scalar observations in a history mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryKind {
    Reward,
    /// Losses are negated rewards, stored at ingestion.
    Loss,
    Preference,
}

impl fmt::Display for HistoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistoryKind::Reward => "reward",
            HistoryKind::Loss => "loss",
            HistoryKind::Preference => "preference",
        })
    }
}

/// One logged interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Observation<F> {
    /// Reward or loss for a single arm. `arm` is kept for prompts that refer
    /// to arms by label.
    Scalar { arm: Option<usize>, features: FeatureVector<F>, value: F },
    /// Outcome of a duel: `preferred` is true iff the first arm won.
    Preference { pair_features: FeatureVector<F>, preferred: bool },
}

impl<F: Scalar> Observation<F> {
    pub fn features(&self) -> &FeatureVector<F> {
        match self {
            Observation::Scalar { features, .. } => features,
            Observation::Preference { pair_features, .. } => pair_features,
        }
    }

    /// Scalar value, with preferences mapped to 1/0.
    pub fn value(&self) -> F {
        match self {
            Observation::Scalar { value, .. } => *value,
            Observation::Preference { preferred: true, .. } => F::one(),
            Observation::Preference { preferred: false, .. } => F::zero(),
        }
    }
}

/// Append-only interaction log with a fixed kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History<F> {
    kind: HistoryKind,
    entries: Vec<Observation<F>>,
    #[serde(skip)]
    fingerprint: u64,
}

impl<F: Scalar> History<F> {
    pub fn new(kind: HistoryKind) -> Self {
        Self { kind, entries: Vec::new(), fingerprint: mix64(kind as u64 + 1) }
    }

    pub fn kind(&self) -> HistoryKind {
        self.kind
    }

    pub fn entries(&self) -> &[Observation<F>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a reward (or loss, for loss histories) observation.
    pub fn push_scalar(&mut self, arm: Option<usize>, features: FeatureVector<F>, value: F) -> Result<()> {
        if self.kind == HistoryKind::Preference {
            return Err(BanditError::HistoryKind {
                history: self.kind.to_string(),
                other: "scalar".into(),
            });
        }
        if !value.is_finite() {
            return Err(BanditError::NonFinite { what: "observation", index: self.entries.len() });
        }
        self.push(Observation::Scalar { arm, features, value });
        Ok(())
    }

    pub fn push_preference(&mut self, pair_features: FeatureVector<F>, preferred: bool) -> Result<()> {
        if self.kind != HistoryKind::Preference {
            return Err(BanditError::HistoryKind {
                history: self.kind.to_string(),
                other: "preference".into(),
            });
        }
        self.push(Observation::Preference { pair_features, preferred });
        Ok(())
    }

    fn push(&mut self, obs: Observation<F>) {
        let state = mix64(self.fingerprint ^ to_f64(obs.value()).to_bits());
        self.fingerprint = obs.features().fold_fingerprint(state);
        self.entries.push(obs);
    }

    /// Rolling digest of the full content; equal histories share it.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Copy holding only the newest `keep` entries.
    pub fn suffix(&self, keep: usize) -> Self {
        let mut out = Self::new(self.kind);
        let start = self.entries.len().saturating_sub(keep);
        for obs in &self.entries[start..] {
            out.push(obs.clone());
        }
        out
    }

    /// Rebuilds the fingerprint after deserialization.
    pub fn reindexed(self) -> Self {
        let mut out = Self::new(self.kind);
        for obs in self.entries {
            out.push(obs);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector<f64> {
        FeatureVector::from_f64(v).unwrap()
    }

    #[test]
    fn rejects_non_finite_components() {
        assert!(matches!(
            FeatureVector::<f64>::new(vec![1.0, f64::NAN]),
            Err(BanditError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn display_uses_four_decimals() {
        assert_eq!(fv(&[0.5, -0.25, 1.0]).to_string(), "[0.5000, -0.2500, 1.0000]");
    }

    #[test]
    fn arm_set_requires_two_arms_and_shared_dim() {
        assert!(ArmSet::new(vec![fv(&[1.0])]).is_err());
        assert!(ArmSet::new(vec![fv(&[1.0]), fv(&[1.0, 2.0])]).is_err());
        assert_eq!(ArmSet::new(vec![fv(&[1.0]), fv(&[2.0])]).unwrap().len(), 2);
    }

    #[test]
    fn history_kind_is_enforced() {
        let mut h = History::<f64>::new(HistoryKind::Reward);
        assert!(h.push_preference(fv(&[1.0]), true).is_err());
        h.push_scalar(Some(0), fv(&[1.0]), 0.5).unwrap();
        assert!(h.push_scalar(None, fv(&[1.0]), f64::INFINITY).is_err());
        let mut p = History::<f64>::new(HistoryKind::Preference);
        assert!(p.push_scalar(None, fv(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let mut a = History::<f64>::new(HistoryKind::Reward);
        let mut b = History::<f64>::new(HistoryKind::Reward);
        assert_eq!(a.fingerprint(), b.fingerprint());
        a.push_scalar(None, fv(&[1.0, 2.0]), 0.5).unwrap();
        b.push_scalar(None, fv(&[1.0, 2.0]), 0.5).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        a.push_scalar(None, fv(&[1.0, 2.0]), 0.5).unwrap();
        b.push_scalar(None, fv(&[1.0, 2.0]), 0.6).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_ne!(
            History::<f64>::new(HistoryKind::Reward).fingerprint(),
            History::<f64>::new(HistoryKind::Loss).fingerprint()
        );
    }

    #[test]
    fn suffix_keeps_newest_entries() {
        let mut h = History::<f64>::new(HistoryKind::Reward);
        for i in 0..5 {
            h.push_scalar(Some(i), fv(&[i as f64]), i as f64).unwrap();
        }
        let s = h.suffix(2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries()[0].value(), 3.0);
    }
}

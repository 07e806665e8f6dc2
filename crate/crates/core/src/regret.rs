//! Regret accounting for single-arm and dueling runs.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

/// Per-iteration instantaneous regret with its running sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger<F> {
    optimal_value: F,
    instantaneous: Vec<F>,
    cumulative: Vec<F>,
}

impl<F: Scalar> RegretLedger<F> {
    pub fn new(optimal_value: F) -> Self {
        Self { optimal_value, instantaneous: Vec::new(), cumulative: Vec::new() }
    }

    /// Records one iteration and returns its instantaneous regret.
    pub fn record(&mut self, selected_value: F) -> Result<F> {
        if !selected_value.is_finite() {
            return Err(BanditError::NonFinite { what: "selected value", index: self.instantaneous.len() });
        }
        let r = self.optimal_value - selected_value;
        let total = self.cumulative.last().copied().unwrap_or_else(F::zero) + r;
        self.instantaneous.push(r);
        self.cumulative.push(total);
        Ok(r)
    }

    pub fn optimal_value(&self) -> F {
        self.optimal_value
    }

    pub fn instantaneous(&self) -> &[F] {
        &self.instantaneous
    }

    pub fn cumulative(&self) -> &[F] {
        &self.cumulative
    }

    pub fn total(&self) -> F {
        self.cumulative.last().copied().unwrap_or_else(F::zero)
    }

    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }
}

/// Ledger of `optimal_value − selected_values[t]` and its prefix sums.
pub fn cumulative_regret<F: Scalar>(selected_values: &[F], optimal_value: F) -> Result<RegretLedger<F>> {
    if !optimal_value.is_finite() {
        return Err(BanditError::NonFinite { what: "optimal value", index: 0 });
    }
    let mut ledger = RegretLedger::new(optimal_value);
    for &v in selected_values {
        ledger.record(v)?;
    }
    Ok(ledger)
}

/// Dueling regret counted on the first (recommended) arm only.
pub fn dueling_first_arm_regret<F: Scalar>(first_arm_values: &[F], optimal_value: F) -> Result<RegretLedger<F>> {
    cumulative_regret(first_arm_values, optimal_value)
}

//! Tie-broken argmax/argmin and arm distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Absolute tolerance on `|Σp − 1|` for f64; widened for lower precision types.
pub const SUM_TOLERANCE: f64 = 1e-9;
/// How far below zero (or above one) an entry may sit before it is an error.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

fn sum_tolerance<F: Scalar>(k: usize) -> F {
    let eps_bound = F::epsilon() * lit::<F>(8.0 * k.max(1) as f64);
    eps_bound.max(lit(SUM_TOLERANCE))
}

fn negativity_tolerance<F: Scalar>() -> F {
    (F::epsilon() * lit(8.0)).max(lit(NEGATIVITY_TOLERANCE))
}

fn check_finite<F: Scalar>(values: &[F]) -> Result<()> {
    if values.is_empty() {
        return Err(BanditError::Empty("value list"));
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(BanditError::NonFinite { what: "value list", index }),
        None => Ok(()),
    }
}

fn pick_extreme<F: Scalar, R: Rng + ?Sized>(values: &[F], rng: &mut R, better: impl Fn(F, F) -> bool) -> Result<usize> {
    check_finite(values)?;
    let mut best = values[0];
    let mut ties = vec![0usize];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, best) {
            best = v;
            ties.clear();
            ties.push(i);
        } else if v == best {
            ties.push(i);
        }
    }
    // The stream is only consumed when there is a real tie.
    Ok(if ties.len() == 1 { ties[0] } else { ties[rng.random_range(0..ties.len())] })
}

/// Index of a maximal entry; exact ties are broken uniformly with `rng`.
pub fn argmax_with_tiebreak<F: Scalar, R: Rng + ?Sized>(values: &[F], rng: &mut R) -> Result<usize> {
    pick_extreme(values, rng, |a, b| a > b)
}

/// Index of a minimal entry; exact ties are broken uniformly with `rng`.
pub fn argmin_with_tiebreak<F: Scalar, R: Rng + ?Sized>(values: &[F], rng: &mut R) -> Result<usize> {
    pick_extreme(values, rng, |a, b| a < b)
}

/// A validated probability distribution over the K arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmDistribution<F> {
    probabilities: Vec<F>,
}

impl<F: Scalar> ArmDistribution<F> {
    pub fn probabilities(&self) -> &[F] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(BanditError::Empty("distribution"));
        }
        validate_distribution(&vec![F::one() / lit(k as f64); k])
    }
}

/// Accepts `p` iff every entry lies in `[−1e-12, 1 + 1e-12]` and the mass is
/// within 1e-9 of one. Entries are clamped to `[0, 1]` and renormalized.
pub fn validate_distribution<F: Scalar>(p: &[F]) -> Result<ArmDistribution<F>> {
    if p.is_empty() {
        return Err(BanditError::Empty("distribution"));
    }
    let neg_tol = negativity_tolerance::<F>();
    for (i, &pi) in p.iter().enumerate() {
        if !pi.is_finite() {
            return Err(BanditError::NonFinite { what: "distribution", index: i });
        }
        if pi < -neg_tol || pi > F::one() + neg_tol {
            return Err(BanditError::InvalidDistribution(format!(
                "entry {i} = {} outside [0, 1]",
                to_f64(pi)
            )));
        }
    }
    let mass: F = p.iter().copied().sum();
    if (mass - F::one()).abs() > sum_tolerance::<F>(p.len()) {
        return Err(BanditError::InvalidDistribution(format!(
            "total mass {} differs from 1",
            to_f64(mass)
        )));
    }
    let clamped: Vec<F> = p.iter().map(|&pi| pi.max(F::zero()).min(F::one())).collect();
    let total: F = clamped.iter().copied().sum();
    Ok(ArmDistribution { probabilities: clamped.into_iter().map(|pi| pi / total).collect() })
}

/// Inverse-CDF draw over the stored arm order. Consumes one uniform from `rng`.
pub fn sample_from_distribution<F: Scalar, R: Rng + ?Sized>(p: &ArmDistribution<F>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.probabilities.iter().enumerate() {
        let pi = to_f64(pi);
        if pi > 0.0 {
            last_positive = i;
            cumulative += pi;
            if u < cumulative {
                return i;
            }
        }
    }
    // Rounding left the cumulative sum a hair under u.
    last_positive
}

//! RO-LLM: a regression-oracle bandit with inverse-gap-weighted exploration.

use serde::{Deserialize, Serialize};

use crate::agents::{Decision, StepContext};
use crate::error::{BanditError, Result};
use crate::predictor::{predict_all, PredictionKind, PredictionRequest, Predictor, Query};
use crate::rng::BanditRng;
use crate::scalar::{lit, to_f64, Scalar};
use crate::select::{argmin_with_tiebreak, sample_from_distribution, validate_distribution, ArmDistribution, NEGATIVITY_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoLlmConfig<F> {
    pub gamma: F,
    /// Defaults to the number of arms when unset.
    pub mu: Option<F>,
    pub init_pulls: usize,
}

impl<F: Scalar> RoLlmConfig<F> {
    pub fn new(gamma: F) -> Self {
        Self { gamma, mu: None, init_pulls: 2 }
    }

    pub fn mu_for(&self, k: usize) -> F {
        self.mu.unwrap_or_else(|| lit(k as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > F::zero()) || self.mu.is_some_and(|m| !(m > F::zero())) {
            return Err(BanditError::InvalidParameter("RO-LLM needs gamma > 0 and mu > 0".into()));
        }
        if self.init_pulls < 1 {
            return Err(BanditError::InvalidParameter("init_pulls must be >= 1".into()));
        }
        Ok(())
    }
}

/// Inverse gap weighting: every non-leader arm gets `1 / (mu + gamma·gap)`,
/// the leader (lowest predicted loss) takes the remaining mass.
pub fn ro_llm_distribution<F: Scalar>(
    losses: &[F],
    gamma: F,
    mu: F,
    rng: &mut BanditRng,
) -> Result<(ArmDistribution<F>, usize)> {
    if !(gamma >= F::zero()) || !(mu > F::zero()) {
        return Err(BanditError::InvalidParameter("ro_llm_distribution needs gamma >= 0 and mu > 0".into()));
    }
    let leader = argmin_with_tiebreak(losses, rng)?;
    let best = losses[leader];
    let mut p: Vec<F> = losses
        .iter()
        .enumerate()
        .map(|(i, &l)| if i == leader { F::zero() } else { F::one() / (mu + gamma * (l - best)) })
        .collect();
    let others: F = p.iter().copied().sum();
    let leader_mass = F::one() - others;
    if leader_mass < -lit::<F>(NEGATIVITY_TOLERANCE) {
        return Err(BanditError::LeaderMassNegative {
            mass: to_f64(leader_mass),
            mu: to_f64(mu),
            gamma: to_f64(gamma),
            arms: losses.len(),
        });
    }
    p[leader] = leader_mass;
    Ok((validate_distribution(&p)?, leader))
}

/// Temperature-zero loss predictions, then a draw from the IGW distribution.
pub fn ro_llm_step<F: Scalar, P: Predictor<F> + ?Sized>(
    config: &RoLlmConfig<F>,
    ctx: &StepContext<'_, F>,
    predictor: &P,
    rng: &mut BanditRng,
) -> Result<Decision<F>> {
    let requests: Vec<_> = ctx
        .arms
        .arms()
        .iter()
        .enumerate()
        .map(|(i, x)| PredictionRequest {
            history: ctx.history,
            query: Query::Arm(x),
            temperature: F::zero(),
            kind: PredictionKind::Loss,
            sample_index: i as u64,
        })
        .collect();
    let predictions = predict_all(predictor, &requests, ctx.streams, ctx.iteration as u64)?;
    let losses: Vec<F> = predictions.iter().map(|p| p.value).collect();
    let (distribution, _leader) = ro_llm_distribution(&losses, config.gamma, config.mu_for(ctx.arms.len()), rng)?;
    let arm = sample_from_distribution(&distribution, rng);
    Ok(Decision { arms: vec![arm], temperatures: vec![F::zero()], predictions, distribution: Some(distribution) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_arms, generate_theta, RewardFunction};
    use crate::predictor::{OraclePredictor, OracleSpec, OracleTruth};
    use crate::rng::{rng_from_seed, StreamFactory};
    use crate::types::{History, HistoryKind};
    use proptest::prelude::*;

    #[test]
    fn hand_derived_two_arm_case() {
        let (d, leader) = ro_llm_distribution(&[0.1f64, 0.3], 5.0, 2.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(leader, 0);
        assert!((d.probabilities()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.probabilities()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_limits() {
        let (d, _) = ro_llm_distribution(&[0.4; 16], 7.0, 16.0, &mut rng_from_seed(0)).unwrap();
        assert!(d.probabilities().iter().all(|&p| p == 1.0 / 16.0));
        let losses: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let (d, _) = ro_llm_distribution(&losses, 0.0, 16.0, &mut rng_from_seed(0)).unwrap();
        assert!(d.probabilities().iter().all(|&p| p == 1.0 / 16.0));
    }

    #[test]
    fn large_gamma_concentrates_on_leader() {
        let (d, leader) = ro_llm_distribution(&[0.5, 0.1, 0.9], 1e9, 3.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(leader, 1);
        assert!(d.probabilities()[1] > 1.0 - 1e-8);
    }

    #[test]
    fn small_mu_is_rejected() {
        let err = ro_llm_distribution(&[0.0, 0.0, 0.0], 1.0, 1.0, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, BanditError::LeaderMassNegative { .. }));
    }

    #[test]
    fn step_favours_true_best_arm_and_is_idempotent() {
        let arms = generate_arms::<f64>(4, 4, 21).unwrap();
        let f = RewardFunction::Linear { theta: generate_theta(4, 22).unwrap() };
        let (best, _) = f.best_arm(&arms).unwrap();
        let f_values = f.values_on(&arms).unwrap();
        let oracle = OraclePredictor::new(OracleSpec::new(OracleTruth::Reward(f))).unwrap();
        let h = History::new(HistoryKind::Loss);
        let cfg = RoLlmConfig::new(10.0);
        let ctx = StepContext { arms: &arms, history: &h, iteration: 1, streams: StreamFactory::new(3) };
        let mut rng = rng_from_seed(8);
        let first = ro_llm_step(&cfg, &ctx, &oracle, &mut rng).unwrap();
        let second = ro_llm_step(&cfg, &ctx, &oracle, &mut rng).unwrap();
        assert_eq!(first.distribution, second.distribution);
        let p_best = first.distribution.as_ref().unwrap().probabilities()[best];
        let hits = (0..1000).filter(|_| ro_llm_step(&cfg, &ctx, &oracle, &mut rng).unwrap().arm() == best).count();
        // Binomial(1000, p_best): allow five standard deviations.
        let sd = (1000.0 * p_best * (1.0 - p_best)).sqrt();
        assert!((hits as f64 - 1000.0 * p_best).abs() < 5.0 * sd);
        let values = f_values;
        let expected = 1.0 - (0..4).filter(|&i| i != best).map(|i| 1.0 / (4.0 + 10.0 * (values[best] - values[i]))).sum::<f64>();
        assert!((p_best - expected).abs() < 1e-12);
        assert!(p_best >= 0.5, "p_best {p_best}");
        assert!(hits >= 500, "hits {hits}");
    }

    proptest! {
        #[test]
        fn valid_under_sufficient_condition(
            losses in proptest::collection::vec(-1.0f64..1.0, 2..=16),
            gamma in 0.0f64..10.0,
            seed in any::<u64>(),
        ) {
            let k = losses.len() as f64;
            let range = losses.iter().cloned().fold(f64::MIN, f64::max) - losses.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(gamma * range <= k * (k - 1.0));
            let (d, _) = ro_llm_distribution(&losses, gamma, k, &mut rng_from_seed(seed)).unwrap();
            prop_assert!(validate_distribution(d.probabilities()).is_ok());
        }

        #[test]
        fn shift_invariant(
            losses in proptest::collection::vec(-1.0f64..1.0, 2..=16),
            shift in -5.0f64..5.0,
        ) {
            let k = losses.len() as f64;
            let shifted: Vec<f64> = losses.iter().map(|l| l + shift).collect();
            let (a, la) = ro_llm_distribution(&losses, 5.0, k, &mut rng_from_seed(1)).unwrap();
            let (b, lb) = ro_llm_distribution(&shifted, 5.0, k, &mut rng_from_seed(1)).unwrap();
            prop_assert_eq!(la, lb);
            for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

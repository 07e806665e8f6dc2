use serde::{Deserialize, Serialize};

use crate::agents::{Decision, StepContext, TemperatureSchedule};
use crate::env::ContextualRecord;
use crate::error::{BanditError, Result};
use crate::predictor::{
    predict_all, PredictionKind, PredictionRequest, Predictor, Query, TextHistory, TextPredictionRequest, TextPredictor,
    TextQuery,
};
use crate::rng::{BanditRng, StreamFactory};
use crate::scalar::Scalar;
use crate::select::argmax_with_tiebreak;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsLlmConfig<F> {
    pub schedule: TemperatureSchedule<F>,
    pub init_pulls: usize,
}

impl<F: Scalar> Default for TsLlmConfig<F> {
    fn default() -> Self {
        Self { schedule: TemperatureSchedule::standard(), init_pulls: 2 }
    }
}

impl<F: Scalar> TsLlmConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.init_pulls < 1 {
            return Err(BanditError::InvalidParameter("init_pulls must be >= 1".into()));
        }
        Ok(())
    }
}

/// Predicts every arm's reward at the scheduled temperature and plays the argmax.
pub fn ts_llm_step<F: Scalar, P: Predictor<F> + ?Sized>(
    config: &TsLlmConfig<F>,
    ctx: &StepContext<'_, F>,
    predictor: &P,
    rng: &mut BanditRng,
) -> Result<Decision<F>> {
    let temperature = config.schedule.at(ctx.iteration);
    let requests: Vec<_> = ctx
        .arms
        .arms()
        .iter()
        .enumerate()
        .map(|(i, x)| PredictionRequest {
            history: ctx.history,
            query: Query::Arm(x),
            temperature,
            kind: PredictionKind::Reward,
            sample_index: i as u64,
        })
        .collect();
    let predictions = predict_all(predictor, &requests, ctx.streams, ctx.iteration as u64)?;
    let values: Vec<F> = predictions.iter().map(|p| p.value).collect();
    let arm = argmax_with_tiebreak(&values, rng)?;
    Ok(Decision { arms: vec![arm], temperatures: vec![temperature], predictions, distribution: None })
}

/// TS-LLM over the labels of a contextual record: score every (context, label)
/// pair and play the best label.
pub fn ts_llm_text_step<F: Scalar, P: TextPredictor<F> + ?Sized>(
    schedule: &TemperatureSchedule<F>,
    record: &ContextualRecord,
    history: &TextHistory<F>,
    predictor: &P,
    iteration: usize,
    streams: StreamFactory,
    rng: &mut BanditRng,
) -> Result<Decision<F>> {
    use rayon::prelude::*;
    let temperature = schedule.at(iteration);
    let predictions = record
        .arm_pool
        .par_iter()
        .enumerate()
        .map(|(i, label)| {
            let request = TextPredictionRequest {
                history,
                pool: &record.arm_pool,
                query: TextQuery { title: record.title.as_deref(), context: &record.context_text, label },
                temperature,
                sample_index: i as u64,
            };
            predictor.predict_text(&request, &mut streams.stream(iteration as u64, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<F> = predictions.iter().map(|p| p.value).collect();
    let arm = argmax_with_tiebreak(&values, rng)?;
    Ok(Decision { arms: vec![arm], temperatures: vec![temperature], predictions, distribution: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_arms, generate_theta, RewardFunction};
    use crate::predictor::{OraclePredictor, OracleSpec, OracleTruth, PredictionResponse};
    use crate::rng::rng_from_seed;
    use crate::types::{History, HistoryKind};

    struct Fixed(Vec<f64>);

    impl Predictor<f64> for Fixed {
        fn predict(&self, r: &PredictionRequest<'_, f64>, _: &mut BanditRng) -> Result<PredictionResponse<f64>> {
            Ok(PredictionResponse::exact(self.0[r.sample_index as usize]))
        }
    }

    #[test]
    fn picks_largest_prediction() {
        let arms = generate_arms::<f64>(2, 3, 0).unwrap();
        let h = History::new(HistoryKind::Reward);
        let ctx = StepContext { arms: &arms, history: &h, iteration: 3, streams: StreamFactory::new(0) };
        let d = ts_llm_step(&TsLlmConfig::default(), &ctx, &Fixed(vec![0.3, 0.7]), &mut rng_from_seed(0)).unwrap();
        assert_eq!(d.arm(), 1);
        assert_eq!(d.temperatures, vec![TemperatureSchedule::<f64>::standard().at(3)]);
        assert_eq!(d.predictions.len(), 2);
    }

    #[test]
    fn exact_oracle_is_greedy_on_truth() {
        let arms = generate_arms::<f64>(16, 4, 5).unwrap();
        let f = RewardFunction::Linear { theta: generate_theta(4, 6).unwrap() };
        let (best, _) = f.best_arm(&arms).unwrap();
        let oracle = OraclePredictor::new(OracleSpec::exact(OracleTruth::Reward(f))).unwrap();
        let h = History::new(HistoryKind::Reward);
        let mut rng = rng_from_seed(1);
        for t in 1..20 {
            let ctx = StepContext { arms: &arms, history: &h, iteration: t, streams: StreamFactory::new(9) };
            assert_eq!(ts_llm_step(&TsLlmConfig::default(), &ctx, &oracle, &mut rng).unwrap().arm(), best);
        }
    }

    #[test]
    fn noisy_oracle_is_reproducible() {
        let arms = generate_arms::<f64>(16, 4, 5).unwrap();
        let f = RewardFunction::Linear { theta: generate_theta(4, 6).unwrap() };
        let oracle = OraclePredictor::new(OracleSpec::new(OracleTruth::Reward(f))).unwrap();
        let h = History::new(HistoryKind::Reward);
        let run = || {
            let mut rng = rng_from_seed(2);
            (1..30)
                .map(|t| {
                    let ctx = StepContext { arms: &arms, history: &h, iteration: t, streams: StreamFactory::new(4) };
                    ts_llm_step(&TsLlmConfig::default(), &ctx, &oracle, &mut rng).unwrap().arm()
                })
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        // Early high temperature explores beyond a single arm.
        assert!(a.iter().any(|&x| x != a[0]));
    }

    #[test]
    fn wrong_history_kind_fails() {
        let arms = generate_arms::<f64>(4, 2, 5).unwrap();
        let h = History::new(HistoryKind::Loss);
        let ctx = StepContext { arms: &arms, history: &h, iteration: 1, streams: StreamFactory::new(0) };
        assert!(ts_llm_step(&TsLlmConfig::default(), &ctx, &Fixed(vec![0.0; 4]), &mut rng_from_seed(0)).is_err());
    }
}

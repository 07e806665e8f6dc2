//! TS-LLM-DB: Borda-estimated first arm, optimistic second arm.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::agents::{Decision, StepContext, TemperatureSchedule};
use crate::error::{BanditError, Result};
use crate::predictor::{predict_all, PredictionKind, PredictionRequest, Predictor, Query};
use crate::rng::BanditRng;
use crate::scalar::{lit, Scalar};
use crate::select::argmax_with_tiebreak;
use crate::types::{ArmSet, FeatureVector};

/// How a pair of arms is shown to the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairEncoding {
    /// `x1 − x2`; sufficient when the latent reward is linear.
    Difference,
    /// `x1 ‖ x2`.
    Concatenation,
}

pub fn pair_feature<F: Scalar>(x1: &FeatureVector<F>, x2: &FeatureVector<F>, encoding: PairEncoding) -> Result<FeatureVector<F>> {
    x1.check_dim(x2.dim())?;
    let (a, b) = (x1.as_slice(), x2.as_slice());
    let components = match encoding {
        PairEncoding::Difference => a.iter().zip(b).map(|(&p, &q)| p - q).collect(),
        PairEncoding::Concatenation => a.iter().chain(b).copied().collect(),
    };
    FeatureVector::new(components)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsLlmDbConfig<F> {
    /// Opponents sampled per arm for the Borda estimate (N).
    pub borda_samples: usize,
    pub first_arm_schedule: TemperatureSchedule<F>,
    pub second_arm_schedule: TemperatureSchedule<F>,
    pub pair_encoding: PairEncoding,
    /// Lets the second arm equal the first, as in the unrestricted argmax.
    pub allow_self_duel: bool,
    /// Random duels played before the main loop.
    pub init_duels: usize,
}

impl<F: Scalar> TsLlmDbConfig<F> {
    /// Linear-latent defaults: difference encoding, `c = 1.4` / `c = 1.1` schedules.
    pub fn linear(k: usize) -> Self {
        Self {
            borda_samples: 15.min(k.saturating_sub(1)).max(1),
            first_arm_schedule: TemperatureSchedule::standard(),
            second_arm_schedule: TemperatureSchedule::dueling_linear_second(),
            pair_encoding: PairEncoding::Difference,
            allow_self_duel: false,
            init_duels: 1,
        }
    }

    /// Square-latent defaults: concatenation, `a = 1.6, b = 0.13` schedules.
    pub fn square(k: usize) -> Self {
        Self {
            first_arm_schedule: TemperatureSchedule::dueling_square_first(),
            second_arm_schedule: TemperatureSchedule::dueling_square_second(),
            pair_encoding: PairEncoding::Concatenation,
            ..Self::linear(k)
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.borda_samples < 1 || self.borda_samples > k.saturating_sub(1) {
            return Err(BanditError::InvalidParameter(format!(
                "Borda sample count must lie in [1, K-1] = [1, {}], got {}",
                k.saturating_sub(1),
                self.borda_samples
            )));
        }
        Ok(())
    }
}

/// `n` distinct opponents of arm `i`, uniform without replacement.
fn draw_opponents(i: usize, k: usize, n: usize, rng: &mut BanditRng) -> Vec<usize> {
    index::sample(rng, k - 1, n).into_iter().map(|o| if o >= i { o + 1 } else { o }).collect()
}

fn pair_request<'a, F: Scalar>(
    ctx: &StepContext<'a, F>,
    first: usize,
    second: usize,
    encoding: PairEncoding,
    temperature: F,
    sample_index: u64,
) -> Result<PredictionRequest<'a, F>> {
    let (x1, x2) = (ctx.arms.get(first), ctx.arms.get(second));
    Ok(PredictionRequest {
        history: ctx.history,
        query: Query::Pair { first: x1, second: x2, encoded: pair_feature(x1, x2, encoding)? },
        temperature,
        kind: PredictionKind::PreferenceProbability,
        sample_index,
    })
}

fn check_borda_args<F: Scalar>(arms: &ArmSet<F>, n: usize) -> Result<()> {
    if n < 1 || n > arms.len() - 1 {
        return Err(BanditError::InvalidParameter(format!("N must lie in [1, {}], got {n}", arms.len() - 1)));
    }
    Ok(())
}

/// Mean predicted probability that arm `i` beats `n` opponents drawn without
/// replacement from the other arms.
pub fn borda_estimate<F: Scalar, P: Predictor<F> + ?Sized>(
    i: usize,
    ctx: &StepContext<'_, F>,
    predictor: &P,
    n: usize,
    encoding: PairEncoding,
    temperature: F,
    rng: &mut BanditRng,
) -> Result<F> {
    check_borda_args(ctx.arms, n)?;
    let opponents = draw_opponents(i, ctx.arms.len(), n, rng);
    let requests = opponents
        .iter()
        .enumerate()
        .map(|(slot, &j)| pair_request(ctx, i, j, encoding, temperature, slot as u64))
        .collect::<Result<Vec<_>>>()?;
    let predictions = predict_all(predictor, &requests, ctx.streams, ctx.iteration as u64)?;
    Ok(predictions.iter().map(|p| p.value).sum::<F>() / lit(n as f64))
}

/// Selects `(first, second)`: first maximizes the Borda estimate, second
/// maximizes the predicted probability of beating the first.
pub fn ts_llm_db_step<F: Scalar, P: Predictor<F> + ?Sized>(
    config: &TsLlmDbConfig<F>,
    ctx: &StepContext<'_, F>,
    predictor: &P,
    rng: &mut BanditRng,
) -> Result<Decision<F>> {
    let k = ctx.arms.len();
    let n = config.borda_samples;
    config.validate(k)?;
    let first_temp = config.first_arm_schedule.at(ctx.iteration);
    let second_temp = config.second_arm_schedule.at(ctx.iteration);

    // Opponent sets come from the run stream before any prediction is issued.
    let opponents: Vec<Vec<usize>> = (0..k).map(|i| draw_opponents(i, k, n, rng)).collect();
    let mut requests = Vec::with_capacity(k * n);
    for (i, opps) in opponents.iter().enumerate() {
        for (slot, &j) in opps.iter().enumerate() {
            requests.push(pair_request(ctx, i, j, config.pair_encoding, first_temp, (i * n + slot) as u64)?);
        }
    }
    let mut predictions = predict_all(predictor, &requests, ctx.streams, ctx.iteration as u64)?;
    let borda: Vec<F> = predictions
        .chunks(n)
        .map(|chunk| chunk.iter().map(|p| p.value).sum::<F>() / lit(n as f64))
        .collect();
    let first = argmax_with_tiebreak(&borda, rng)?;

    let candidates: Vec<usize> = (0..k).filter(|&j| config.allow_self_duel || j != first).collect();
    let second_requests = candidates
        .iter()
        .map(|&j| pair_request(ctx, j, first, config.pair_encoding, second_temp, (k * n + j) as u64))
        .collect::<Result<Vec<_>>>()?;
    let second_predictions = predict_all(predictor, &second_requests, ctx.streams, ctx.iteration as u64)?;
    let scores: Vec<F> = second_predictions.iter().map(|p| p.value).collect();
    let second = candidates[argmax_with_tiebreak(&scores, rng)?];
    predictions.extend(second_predictions);

    Ok(Decision {
        arms: vec![first, second],
        temperatures: vec![first_temp, second_temp],
        predictions,
        distribution: None,
    })
}

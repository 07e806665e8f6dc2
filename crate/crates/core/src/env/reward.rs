use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::rng::rng_from_seed;
use crate::scalar::{lit, to_f64, Scalar};
use crate::types::{ArmSet, FeatureVector};

pub const DEFAULT_GP_LENGTHSCALE: f64 = 0.4;
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.02;

const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Linear,
    Square,
    Sinusoidal,
    GpSample,
}

/// Declarative description of a reward landscape, realized per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFunctionSpec {
    pub kind: RewardKind,
    #[serde(default = "default_lengthscale")]
    pub gp_lengthscale: f64,
}

fn default_lengthscale() -> f64 {
    DEFAULT_GP_LENGTHSCALE
}

impl RewardFunctionSpec {
    pub fn new(kind: RewardKind) -> Self {
        Self { kind, gp_lengthscale: DEFAULT_GP_LENGTHSCALE }
    }

    /// Builds the concrete function. `theta` is used by the parametric kinds;
    /// `gp_seed` by the GP kind, whose table is registered on `arms`.
    pub fn realize<F: Scalar>(&self, theta: FeatureVector<F>, arms: &ArmSet<F>, gp_seed: u64) -> Result<RewardFunction<F>> {
        if self.kind != RewardKind::GpSample {
            theta.check_dim(arms.dim())?;
        }
        Ok(match self.kind {
            RewardKind::Linear => RewardFunction::Linear { theta },
            RewardKind::Square => RewardFunction::Square { theta },
            RewardKind::Sinusoidal => RewardFunction::Sinusoidal { theta },
            RewardKind::GpSample => RewardFunction::GpSample(sample_gp_reward_table(arms, self.gp_lengthscale, gp_seed)?),
        })
    }
}

/// Values of one GP prior draw, tabulated on a registered arm set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpTable<F> {
    arms: Vec<FeatureVector<F>>,
    values: Vec<F>,
}

impl<F: Scalar> GpTable<F> {
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn lookup(&self, x: &FeatureVector<F>) -> Option<F> {
        self.arms.iter().position(|a| a == x).map(|i| self.values[i])
    }
}

/// A realized latent reward function f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardFunction<F> {
    /// f(x) = θᵀx
    Linear { theta: FeatureVector<F> },
    /// f(x) = (θᵀx)²
    Square { theta: FeatureVector<F> },
    /// f(x) = sin(θᵀx)
    Sinusoidal { theta: FeatureVector<F> },
    GpSample(GpTable<F>),
}

impl<F: Scalar> RewardFunction<F> {
    pub fn kind(&self) -> RewardKind {
        match self {
            RewardFunction::Linear { .. } => RewardKind::Linear,
            RewardFunction::Square { .. } => RewardKind::Square,
            RewardFunction::Sinusoidal { .. } => RewardKind::Sinusoidal,
            RewardFunction::GpSample(_) => RewardKind::GpSample,
        }
    }

    pub fn eval(&self, x: &FeatureVector<F>) -> Result<F> {
        eval_reward(self, x)
    }

    /// Multiplies every value of f by `factor`.
    pub fn scaled(&self, factor: F) -> Self {
        let scale_theta = |t: &FeatureVector<F>| {
            FeatureVector::new(t.as_slice().iter().map(|&c| c * factor).collect()).expect("finite")
        };
        match self {
            RewardFunction::Linear { theta } => RewardFunction::Linear { theta: scale_theta(theta) },
            RewardFunction::GpSample(t) => RewardFunction::GpSample(GpTable {
                arms: t.arms.clone(),
                values: t.values.iter().map(|&v| v * factor).collect(),
            }),
            // Square and sine are not homogeneous in θ; no closed-form rescale.
            other => other.clone(),
        }
    }

    /// Best value and its index over `arms`.
    pub fn best_arm(&self, arms: &ArmSet<F>) -> Result<(usize, F)> {
        let mut best = (0, self.eval(arms.get(0))?);
        for (i, x) in arms.arms().iter().enumerate().skip(1) {
            let v = self.eval(x)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        Ok(best)
    }

    pub fn values_on(&self, arms: &ArmSet<F>) -> Result<Vec<F>> {
        arms.arms().iter().map(|x| self.eval(x)).collect()
    }
}

/// Exact, deterministic value of `f` at `x`.
pub fn eval_reward<F: Scalar>(f: &RewardFunction<F>, x: &FeatureVector<F>) -> Result<F> {
    match f {
        RewardFunction::Linear { theta } => x.dot(theta),
        RewardFunction::Square { theta } => x.dot(theta).map(|v| v * v),
        RewardFunction::Sinusoidal { theta } => x.dot(theta).map(F::sin),
        RewardFunction::GpSample(table) => {
            if let Some(first) = table.arms.first() {
                x.check_dim(first.dim())?;
            }
            table.lookup(x).ok_or(BanditError::UnregisteredArm)
        }
    }
}

/// RBF Gram matrix `exp(−‖xi − xj‖² / (2ℓ²))`, computed in f64.
pub fn rbf_gram<F: Scalar>(arms: &ArmSet<F>, lengthscale: f64) -> DMatrix<f64> {
    let k = arms.len();
    let denom = 2.0 * lengthscale * lengthscale;
    DMatrix::from_fn(k, k, |i, j| {
        let d2 = to_f64(arms[i].squared_distance(&arms[j]).expect("arm set has a shared dimension"));
        (-d2 / denom).exp()
    })
}

/// One joint draw from a zero-mean GP prior with an RBF kernel, realized on
/// the arm set through a jittered Cholesky factor.
pub fn sample_gp_reward_table<F: Scalar>(arms: &ArmSet<F>, lengthscale: f64, seed: u64) -> Result<GpTable<F>> {
    if !(lengthscale > 0.0 && lengthscale.is_finite()) {
        return Err(BanditError::InvalidParameter(format!("GP lengthscale must be positive, got {lengthscale}")));
    }
    let k = arms.len();
    let gram = rbf_gram(arms, lengthscale);
    let mut jitter = JITTER_START;
    let factor = loop {
        let jittered = &gram + DMatrix::<f64>::identity(k, k) * jitter;
        if let Some(chol) = jittered.cholesky() {
            break chol.l();
        }
        if jitter >= JITTER_MAX {
            return Err(BanditError::Cholesky { jitter });
        }
        log::warn!("GP Cholesky failed with jitter {jitter:e}; escalating");
        jitter *= 10.0;
    };
    let mut rng = rng_from_seed(seed);
    let z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let draw = factor * z;
    Ok(GpTable {
        arms: arms.arms().to_vec(),
        values: draw.iter().map(|&v| lit(v)).collect(),
    })
}

/// Observation noise: zero-mean Gaussian with the given variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { variance: DEFAULT_NOISE_VARIANCE }
    }
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(BanditError::InvalidParameter(format!("noise variance must be >= 0, got {variance}")));
        }
        Ok(Self { variance })
    }
}

/// `f(x) + ε` with `ε ~ N(0, variance)`. No draw is made when the variance is zero.
pub fn observe_reward<F: Scalar, R: Rng + ?Sized>(
    f: &RewardFunction<F>,
    noise: NoiseSpec,
    x: &FeatureVector<F>,
    rng: &mut R,
) -> Result<F> {
    let value = eval_reward(f, x)?;
    if noise.variance == 0.0 {
        return Ok(value);
    }
    let eps: f64 = rng.sample::<f64, _>(StandardNormal) * noise.variance.sqrt();
    Ok(value + lit(eps))
}

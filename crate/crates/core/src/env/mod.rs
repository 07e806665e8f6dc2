//! Synthetic reward landscapes, preference generation and dataset loading.

mod contextual;
mod dueling;
mod generate;
mod reward;

pub use contextual::{load_contextual_dataset, ContextualRecord, DatasetFilter, PoolSelection};
pub use dueling::{btl_probability, sample_preference, DuelingEnv, DEFAULT_SHARPNESS};
pub use generate::{generate_arms, generate_theta};
pub use reward::{
    eval_reward, observe_reward, rbf_gram, sample_gp_reward_table, GpTable, NoiseSpec, RewardFunction,
    RewardFunctionSpec, RewardKind, DEFAULT_GP_LENGTHSCALE, DEFAULT_NOISE_VARIANCE,
};

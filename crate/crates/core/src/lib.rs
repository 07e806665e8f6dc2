//! Multi-armed and dueling bandit algorithms that delegate reward prediction
//! to a pluggable predictor (an in-context language model or a simulated
//! oracle), with synthetic environments and regret accounting.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below name the common instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod env;
pub mod error;
pub mod predictor;
pub mod regret;
pub mod rng;
pub mod scalar;
pub mod select;
pub mod types;

pub use error::{BanditError, Result};
pub use scalar::Scalar;

pub type FeatureVector64 = types::FeatureVector<f64>;
pub type FeatureVector32 = types::FeatureVector<f32>;
pub type ArmSet64 = types::ArmSet<f64>;
pub type ArmSet32 = types::ArmSet<f32>;
pub type History64 = types::History<f64>;
pub type History32 = types::History<f32>;
pub type ArmDistribution64 = select::ArmDistribution<f64>;
pub type ArmDistribution32 = select::ArmDistribution<f32>;
pub type RegretLedger64 = regret::RegretLedger<f64>;
pub type RegretLedger32 = regret::RegretLedger<f32>;
pub type RewardFunction64 = env::RewardFunction<f64>;
pub type RewardFunction32 = env::RewardFunction<f32>;
pub type TemperatureSchedule64 = agents::TemperatureSchedule<f64>;
pub type TemperatureSchedule32 = agents::TemperatureSchedule<f32>;
pub type OraclePredictor64 = predictor::OraclePredictor<f64>;
pub type OraclePredictor32 = predictor::OraclePredictor<f32>;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BanditError, Result};
use crate::rng::rng_from_seed;
use crate::scalar::{lit, Scalar};
use crate::types::{ArmSet, FeatureVector};

/// K arms with components drawn i.i.d. from Uniform[−1, 1].
pub fn generate_arms<F: Scalar>(k: usize, d: usize, seed: u64) -> Result<ArmSet<F>> {
    if d == 0 {
        return Err(BanditError::InvalidParameter("feature dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let arms = (0..k)
        .map(|_| FeatureVector::new((0..d).map(|_| lit(rng.random_range(-1.0..=1.0))).collect()))
        .collect::<Result<Vec<_>>>()?;
    ArmSet::new(arms)
}

/// Standard-normal direction normalized to unit Euclidean norm.
pub fn generate_theta<F: Scalar>(d: usize, seed: u64) -> Result<FeatureVector<F>> {
    if d == 0 {
        return Err(BanditError::InvalidParameter("feature dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let raw: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return FeatureVector::new(raw.iter().map(|v| lit(v / norm)).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arms_stay_in_the_cube() {
        let arms = generate_arms::<f64>(16, 4, 123).unwrap();
        assert_eq!(arms.len(), 16);
        assert_eq!(arms.dim(), 4);
        assert!(arms.arms().iter().all(|a| a.as_slice().iter().all(|c| (-1.0..=1.0).contains(c))));
        assert_eq!(arms, generate_arms::<f64>(16, 4, 123).unwrap());
        assert_ne!(arms, generate_arms::<f64>(16, 4, 124).unwrap());
    }

    #[test]
    fn theta_has_unit_norm() {
        for seed in 0..20 {
            let t = generate_theta::<f64>(4, seed).unwrap();
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(generate_theta::<f64>(4, 1).unwrap(), generate_theta::<f64>(4, 1).unwrap());
        let t32 = generate_theta::<f32>(4, 1).unwrap();
        assert!((t32.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(generate_arms::<f64>(1, 4, 0).is_err());
        assert!(generate_arms::<f64>(4, 0, 0).is_err());
        assert!(generate_theta::<f64>(0, 0).is_err());
    }
}

use rand::seq::index;
use rand::Rng;

use crate::error::{BanditError, Result};
use crate::rng::BanditRng;

/// Uniformly random arm.
pub fn baseline_random_step(k: usize, rng: &mut BanditRng) -> usize {
    rng.random_range(0..k)
}

/// Uniformly random pair of distinct arms.
pub fn baseline_random_pair(k: usize, rng: &mut BanditRng) -> (usize, usize) {
    let picked = index::sample(rng, k, 2);
    (picked.index(0), picked.index(1))
}

/// `count` distinct arms for the initialization phase.
pub fn initial_arms(k: usize, count: usize, rng: &mut BanditRng) -> Result<Vec<usize>> {
    if count > k {
        return Err(BanditError::InvalidParameter(format!("cannot pick {count} distinct initial arms out of {k}")));
    }
    Ok(index::sample(rng, k, count).into_vec())
}

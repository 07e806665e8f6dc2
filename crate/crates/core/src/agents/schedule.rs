use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::scalar::{lit, Scalar};

/// Decaying temperature `max(a − min(b·√t, c), floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule<F> {
    pub base: F,
    pub rate: F,
    pub cap: F,
    pub floor: F,
}

impl<F: Scalar> TemperatureSchedule<F> {
    /// Schedule with the default floor `base − cap`.
    pub fn new(base: F, rate: F, cap: F) -> Result<Self> {
        Self::with_floor(base, rate, cap, base - cap)
    }

    pub fn with_floor(base: F, rate: F, cap: F, floor: F) -> Result<Self> {
        let all_finite = [base, rate, cap, floor].iter().all(|v| v.is_finite());
        if !all_finite || rate < F::zero() || cap < F::zero() || floor < F::zero() {
            return Err(BanditError::InvalidParameter(format!(
                "temperature schedule needs finite rate, cap, floor >= 0 (base {base}, rate {rate}, cap {cap}, floor {floor})"
            )));
        }
        Ok(Self { base, rate, cap, floor })
    }

    pub fn constant(temperature: F) -> Result<Self> {
        Self::with_floor(temperature, F::zero(), F::zero(), temperature)
    }

    /// `1.5 − min(0.1·√t, 1.4)`: the default TS-LLM and linear first-arm schedule.
    pub fn standard() -> Self {
        Self::new(lit(1.5), lit(0.1), lit(1.4)).expect("valid constants")
    }

    /// `1.5 − min(0.1·√t, 1.1)`: second arm, linear dueling.
    pub fn dueling_linear_second() -> Self {
        Self::new(lit(1.5), lit(0.1), lit(1.1)).expect("valid constants")
    }

    /// `1.6 − min(0.13·√t, 1.5)`: first arm, square dueling.
    pub fn dueling_square_first() -> Self {
        Self::new(lit(1.6), lit(0.13), lit(1.5)).expect("valid constants")
    }

    /// `1.6 − min(0.13·√t, 1.1)`: second arm, square dueling.
    pub fn dueling_square_second() -> Self {
        Self::new(lit(1.6), lit(0.13), lit(1.1)).expect("valid constants")
    }

    /// Temperature at iteration `t` (1-based; `t = 0` is treated as 1).
    pub fn at(&self, t: usize) -> F {
        let t: F = lit(t.max(1) as f64);
        let decay = (self.rate * t.sqrt()).min(self.cap);
        (self.base - decay).max(self.floor)
    }
}

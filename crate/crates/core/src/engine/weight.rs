use std::fmt::Debug;

use rand::Rng;

use super::EngineError;

/// Numeric type of researcher weights: exact `u64` in discrete mode, `f64`
/// in continuous mode.
pub trait Weight: Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Running total with the accumulation rule of the type.
    type Total: Copy + Debug + Default + Send + Sync;

    const ZERO: Self;

    fn try_add(self, other: Self) -> Result<Self, EngineError>;
    fn sub(self, other: Self) -> Self;
    fn to_f64(self) -> f64;
    /// Convert a draw from a weight law.
    fn from_draw(v: f64) -> Result<Self, EngineError>;
    /// Uniform point in `[0, total)`.
    fn uniform_below<R: Rng + ?Sized>(total: Self, rng: &mut R) -> Self;

    fn total_add(acc: &mut Self::Total, v: Self) -> Result<(), EngineError>;
    fn total_value(acc: &Self::Total) -> Self;
}

impl Weight for u64 {
    type Total = u64;

    const ZERO: Self = 0;

    fn try_add(self, other: Self) -> Result<Self, EngineError> {
        self.checked_add(other).ok_or(EngineError::Overflow)
    }

    fn sub(self, other: Self) -> Self {
        self - other
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn from_draw(v: f64) -> Result<Self, EngineError> {
        if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(EngineError::NonIntegerWeight(v))
        }
    }

    fn uniform_below<R: Rng + ?Sized>(total: Self, rng: &mut R) -> Self {
        rng.random_range(0..total)
    }

    fn total_add(acc: &mut u64, v: Self) -> Result<(), EngineError> {
        *acc = acc.checked_add(v).ok_or(EngineError::Overflow)?;
        Ok(())
    }

    fn total_value(acc: &u64) -> Self {
        *acc
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Weight for f64 {
    type Total = CompensatedSum;

    const ZERO: Self = 0.0;

    fn try_add(self, other: Self) -> Result<Self, EngineError> {
        Ok(self + other)
    }

    fn sub(self, other: Self) -> Self {
        self - other
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn from_draw(v: f64) -> Result<Self, EngineError> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(EngineError::NonIntegerWeight(v))
        }
    }

    fn uniform_below<R: Rng + ?Sized>(total: Self, rng: &mut R) -> Self {
        rng.random::<f64>() * total
    }

    fn total_add(acc: &mut CompensatedSum, v: Self) -> Result<(), EngineError> {
        acc.add(v);
        Ok(())
    }

    fn total_value(acc: &CompensatedSum) -> Self {
        acc.value()
    }
}

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("a forecast needs at least one coordinate")]
    Empty,
    #[error("forecast coordinate {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("forecast has {found} coordinates, the event system has {expected} events")]
    DimensionMismatch { found: usize, expected: usize },
}

/// Announced probabilities for `n` events: a point of `[0,1]^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Forecast(Vec<f64>);

impl Forecast {
    pub fn new(values: Vec<f64>) -> Result<Self, ForecastError> {
        if values.is_empty() {
            return Err(ForecastError::Empty);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ForecastError::OutOfRange { index, value });
        }
        Ok(Forecast(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn expect_dim(&self, expected: usize) -> Result<(), ForecastError> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(ForecastError::DimensionMismatch {
                found: self.dim(),
                expected,
            })
        }
    }

    /// Clamps each coordinate into `[0,1]`; for optimizer outputs that drift
    /// by a rounding error.
    pub(crate) fn clamped(values: Vec<f64>) -> Forecast {
        Forecast(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

impl Deref for Forecast {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Forecast {
    type Error = ForecastError;
    fn try_from(values: Vec<f64>) -> Result<Self, ForecastError> {
        Forecast::new(values)
    }
}

impl From<Forecast> for Vec<f64> {
    fn from(f: Forecast) -> Vec<f64> {
        f.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert_eq!(Forecast::new(vec![]), Err(ForecastError::Empty));
        assert!(matches!(
            Forecast::new(vec![0.2, 1.5]),
            Err(ForecastError::OutOfRange { index: 1, .. })
        ));
        assert!(Forecast::new(vec![f64::NAN]).is_err());
        assert!(serde_json::from_str::<Forecast>("[0.1, -0.1]").is_err());
        assert_eq!(serde_json::from_str::<Forecast>("[0, 1]").unwrap().as_slice(), &[0.0, 1.0]);
    }
}

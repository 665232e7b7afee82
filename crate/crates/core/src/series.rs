// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty sample of real values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    id: String,
    values: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        TimeSeries::new(raw.id, raw.values)
    }
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::InvalidSeries {
                id,
                reason: "no values".into(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries {
                reason: format!("value at position {} is not finite", pos + 1),
                id,
            });
        }
        Ok(Self { id, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Returns a copy with every value mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.id.clone(), self.values.iter().map(|&v| f(v)).collect())
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(TimeSeries::new("a", vec![]).is_err());
        let err = TimeSeries::new("b", vec![0.1, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("position 2"));
        assert!(TimeSeries::new("c", vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok: TimeSeries = serde_json::from_str(r#"{"id":"x","values":[0.5]}"#).unwrap();
        assert_eq!(ok.values(), &[0.5]);
        assert!(serde_json::from_str::<TimeSeries>(r#"{"id":"x","values":[]}"#).is_err());
    }
}

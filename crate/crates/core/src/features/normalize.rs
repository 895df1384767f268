use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{Error, Result};

/// Per-feature `(min, max)` fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationBounds {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut it = rows.into_iter();
        let first = it.next().ok_or_else(|| Error::InvalidInput("no rows to fit".into()))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in it {
            if row.len() != min.len() {
                return Err(Error::DimensionMismatch { expected: min.len(), got: row.len() });
            }
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Features whose fitted range is empty; they always map to 0.
    pub fn zero_range(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.max[k] <= self.min[k]).collect()
    }

    /// `(d - min) / (max - min)` clamped to `[0, 1]`.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: row.len() });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let range = self.max[k] - self.min[k];
                if range > 0.0 { ((v - self.min[k]) / range).clamp(0.0, 1.0) } else { 0.0 }
            })
            .collect())
    }
}

/// Min-max scales a fitting set into `[0, 1]` and returns the bounds for
/// later use on unseen rows.
pub fn normalize_dataset(
    vectors: &[FeatureVector],
) -> Result<(Vec<FeatureVector>, NormalizationBounds)> {
    let bounds = NormalizationBounds::fit(vectors.iter().map(|v| v.values.as_slice()))?;
    let normalized = vectors
        .iter()
        .map(|v| {
            Ok(FeatureVector {
                values: bounds.apply(&v.values)?,
                label: v.label,
                roi_id: v.roi_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((normalized, bounds))
}

//! The 130-value BI-RADS descriptor: shape (ids 1-9), mass size and age
//! (10-11), margin (12-32) and texture (33-130).

mod contour;
mod margin;
mod normalize;
mod shape;
mod stats;
mod texture;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use contour::{trace_contour, Contour};
pub use margin::{
    edge_probabilities, margin_features, margin_waveform_stats, waveform_stats, waveforms,
    MarginParams, WaveformStats,
};
pub use normalize::{normalize_dataset, NormalizationBounds};
pub use shape::{
    convex_hull, direction_changes, hull_pixel_area, shape_features, turning_angles,
    variation_function, TURN_SPAN, TURN_TOLERANCE_RAD, VARIATION_SAMPLES,
};
pub use stats::{shannon_entropy, stats7, STAT_NAMES};
pub use texture::{
    glcm, haralick_features, quantize, texture_features, Glcm, GlcmParams, GLCM_ANGLES,
    HARALICK_NAMES,
};

use crate::error::{Error, Result};
use crate::imaging::{BiRads, RoiRecord};
use crate::segmentation::MassMask;

pub const FEATURE_COUNT: usize = 130;

const SHAPE_NAMES: [&str; 9] = [
    "continuity",
    "curvature",
    "irregularity",
    "difference_area",
    "mean_variation",
    "variance_variation",
    "skewness_variation",
    "kurtosis_variation",
    "entropy_variation",
];

const MARGIN_NAMES: [&str; 3] =
    ["margin_kurtosis", "margin_entropy", "margin_max_probability_index"];

/// Canonical names indexed by `id - 1`.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut names: Vec<String> = SHAPE_NAMES.iter().map(|s| s.to_string()).collect();
        names.push("mass_size".into());
        names.push("age".into());
        for base in MARGIN_NAMES.iter().chain(HARALICK_NAMES.iter()) {
            for stat in STAT_NAMES {
                names.push(format!("{base}_{stat}"));
            }
        }
        debug_assert_eq!(names.len(), FEATURE_COUNT);
        names
    })
}

/// Name of a 1-based feature id.
pub fn feature_name(id: u16) -> Option<&'static str> {
    feature_names().get((id as usize).checked_sub(1)?).map(String::as_str)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub glcm: GlcmParams,
    pub margin: MarginParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: BiRads,
    pub roi_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, label: BiRads, roi_id: impl Into<String>) -> Result<Self> {
        if values.len() != FEATURE_COUNT {
            return Err(Error::DimensionMismatch { expected: FEATURE_COUNT, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {} ({}) is not finite",
                i + 1,
                feature_names()[i]
            )));
        }
        Ok(Self { values, label, roi_id: roi_id.into() })
    }

    /// Value of a 1-based feature id.
    pub fn get(&self, id: u16) -> f64 {
        self.values[id as usize - 1]
    }
}

/// Mass size in mm² and patient age.
pub fn additional_features(mask: &MassMask, spacing_mm: f64, age: f64) -> Result<[f64; 2]> {
    if !(spacing_mm > 0.0) {
        return Err(Error::InvalidInput(format!("spacing {spacing_mm} mm must be > 0")));
    }
    Ok([mask.pixel_count() as f64 * spacing_mm * spacing_mm, age])
}

/// All 130 features of one segmented ROI, in canonical id order.
pub fn extract_features(
    roi: &RoiRecord,
    mask: &MassMask,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let img = &roi.image;
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: img.width() * img.height(),
            got: mask.width() * mask.height(),
        });
    }
    let contour = trace_contour(mask)?;
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(shape_features(mask, &contour)?);
    values.extend(additional_features(mask, img.spacing_mm(), roi.patient_age)?);
    values.extend(margin_features(img, mask, &contour, &cfg.margin)?);
    values.extend(texture_features(img, &cfg.glcm)?);
    FeatureVector::new(values, roi.birads_label, roi.case_id.clone())
}

//! Margin sharpness from intensity waveforms sampled across the boundary.
//!
//! Waveforms are anchored at the contour points whose polar angle around the
//! mask centroid is closest to `k * angle_step`. Each waveform walks along the
//! outward normal; sample 31 is the last pixel inside the mask and sample 32
//! the first one outside, so the gradient step between them (edge-probability
//! index 31) is the margin position.

use serde::{Deserialize, Serialize};

use super::contour::Contour;
use super::stats::stats7;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::segmentation::MassMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarginParams {
    pub waveform_count: usize,
    pub waveform_length: usize,
    pub angle_step: f64,
}

impl Default for MarginParams {
    fn default() -> Self {
        Self { waveform_count: 32, waveform_length: 64, angle_step: std::f64::consts::PI / 16.0 }
    }
}

impl MarginParams {
    pub fn validate(&self) -> Result<()> {
        if self.waveform_count == 0 {
            return Err(Error::InvalidInput("waveform_count must be >= 1".into()));
        }
        if self.waveform_length < 2 || self.waveform_length % 2 != 0 {
            return Err(Error::InvalidInput("waveform_length must be even and >= 2".into()));
        }
        if !(self.angle_step > 0.0) {
            return Err(Error::InvalidInput("angle_step must be > 0".into()));
        }
        Ok(())
    }

    fn margin_index(&self) -> usize {
        self.waveform_length / 2 - 1
    }
}

/// Per-waveform descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformStats {
    pub kurtosis: f64,
    pub entropy: f64,
    pub shifted_max_index: f64,
}

/// Edge probabilities `|I[j+1] - I[j]|` normalized to sum 1, uniform when the
/// waveform is flat.
pub fn edge_probabilities(samples: &[f64]) -> Vec<f64> {
    let grad: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let total: f64 = grad.iter().sum();
    if total > 0.0 {
        grad.iter().map(|g| g / total).collect()
    } else {
        vec![1.0 / grad.len() as f64; grad.len()]
    }
}

/// Kurtosis (non-excess, of position under `ep`), entropy and the argmax
/// shifted by `margin_index`.
pub fn waveform_stats(ep: &[f64], margin_index: usize) -> WaveformStats {
    let mean: f64 = ep.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    let (mut m2, mut m4) = (0.0, 0.0);
    for (j, p) in ep.iter().enumerate() {
        let d2 = (j as f64 - mean).powi(2);
        m2 += d2 * p;
        m4 += d2 * d2 * p;
    }
    let kurtosis = if m2 > 1e-12 { m4 / (m2 * m2) } else { 0.0 };
    let entropy = ep.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    let mut best = 0;
    for (j, &p) in ep.iter().enumerate() {
        if p > ep[best] {
            best = j;
        }
    }
    WaveformStats { kurtosis, entropy, shifted_max_index: best as f64 - margin_index as f64 }
}

fn centroid(mask: &MassMask) -> (f64, f64) {
    let (mut sx, mut sy) = (0.0, 0.0);
    for p in mask.pixels() {
        sx += p.col as f64;
        sy += p.row as f64;
    }
    let n = mask.pixel_count() as f64;
    (sx / n, sy / n)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Intensity samples along the outward normal for each waveform anchor.
pub fn waveforms(
    img: &GrayImage,
    mask: &MassMask,
    contour: &Contour,
    params: &MarginParams,
) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected: img.width() * img.height(),
            got: mask.width() * mask.height(),
        });
    }
    if contour.len() < 4 {
        return Err(Error::DegenerateMask("contour has fewer than 4 points".into()));
    }
    let (cx, cy) = centroid(mask);
    let pts = contour.xy();
    let n = pts.len();
    let polar: Vec<f64> = pts.iter().map(|&(x, y)| (y - cy).atan2(x - cx)).collect();
    let radius2: Vec<f64> = pts.iter().map(|&(x, y)| (x - cx).powi(2) + (y - cy).powi(2)).collect();
    let inside = params.waveform_length / 2;

    let mut out = Vec::with_capacity(params.waveform_count);
    for k in 0..params.waveform_count {
        let target = k as f64 * params.angle_step;
        let mut best = 0;
        for i in 1..n {
            let (gi, gb) = (angle_gap(polar[i], target), angle_gap(polar[best], target));
            if gi < gb - 1e-12 || ((gi - gb).abs() <= 1e-12 && radius2[i] > radius2[best]) {
                best = i;
            }
        }
        let (px, py) = pts[best];
        let (ax, ay) = pts[(best + n - 2) % n];
        let (bx, by) = pts[(best + 2) % n];
        let (tx, ty) = (bx - ax, by - ay);
        let (rx, ry) = (px - cx, py - cy);
        let (mut nx, mut ny) = (ty, -tx);
        if nx * rx + ny * ry < 0.0 {
            nx = -nx;
            ny = -ny;
        }
        let norm = nx.hypot(ny);
        let (nx, ny) = if norm < 1e-9 || (nx * rx + ny * ry).abs() < 1e-9 {
            let rn = rx.hypot(ry);
            if rn < 1e-9 { (1.0, 0.0) } else { (rx / rn, ry / rn) }
        } else {
            (nx / norm, ny / norm)
        };
        let at = |s: f64| ((py + s * ny).round() as i64, (px + s * nx).round() as i64);
        // Walk outward to the first sample that leaves the mask.
        let mut last_inside = 0.0;
        for s in 1..=inside {
            let (r, c) = at(s as f64);
            if !mask.get_signed(r, c) {
                break;
            }
            last_inside = s as f64;
        }
        let samples = (0..=params.waveform_length)
            .map(|j| {
                let (r, c) = at(last_inside + j as f64 - (inside as f64 - 1.0));
                f64::from(img.get_clamped(r, c))
            })
            .collect();
        out.push(samples);
    }
    Ok(out)
}

/// Per-waveform kurtosis, entropy and shifted max index.
pub fn margin_waveform_stats(
    img: &GrayImage,
    mask: &MassMask,
    contour: &Contour,
    params: &MarginParams,
) -> Result<Vec<WaveformStats>> {
    let margin = params.margin_index();
    Ok(waveforms(img, mask, contour, params)?
        .iter()
        .map(|w| waveform_stats(&edge_probabilities(w), margin))
        .collect())
}

/// The 21 margin values: seven statistics of kurtosis, then of entropy, then
/// of the shifted max index, over all waveforms.
pub fn margin_features(
    img: &GrayImage,
    mask: &MassMask,
    contour: &Contour,
    params: &MarginParams,
) -> Result<[f64; 21]> {
    let per = margin_waveform_stats(img, mask, contour, params)?;
    let mut out = [0.0; 21];
    let columns: [Vec<f64>; 3] = [
        per.iter().map(|w| w.kurtosis).collect(),
        per.iter().map(|w| w.entropy).collect(),
        per.iter().map(|w| w.shifted_max_index).collect(),
    ];
    for (f, col) in columns.iter().enumerate() {
        out[f * 7..f * 7 + 7].copy_from_slice(&stats7(col)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_edge() {
        let mut samples = vec![200.0; 32];
        samples.extend(vec![10.0; 33]);
        let ep = edge_probabilities(&samples);
        assert_eq!(ep.len(), 64);
        let s = waveform_stats(&ep, 31);
        assert_eq!(s.entropy, 0.0);
        assert_eq!(s.shifted_max_index, 0.0);
        assert_eq!(s.kurtosis, 0.0);
    }

    #[test]
    fn flat_waveform_is_uniform() {
        let ep = edge_probabilities(&[5.0; 65]);
        let s = waveform_stats(&ep, 31);
        assert!((s.entropy - 64f64.ln()).abs() < 1e-12);
        // Discrete uniform on 0..64: kurtosis = 3/5 * (3n^2 - 7)/(n^2 - 1).
        let n2 = 64.0f64 * 64.0;
        assert!((s.kurtosis - 0.6 * (3.0 * n2 - 7.0) / (n2 - 1.0)).abs() < 1e-9);
        assert_eq!(s.shifted_max_index, -31.0);
    }

    #[test]
    fn rejects_odd_length() {
        let p = MarginParams { waveform_length: 63, ..Default::default() };
        assert!(p.validate().is_err());
    }
}

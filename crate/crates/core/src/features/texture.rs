//! Grey-level co-occurrence matrices and Haralick's fourteen descriptors.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::stats::stats7;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// The eight co-occurrence directions, `k * pi / 8` for `k = 0..8`.
pub const GLCM_ANGLES: [f64; 8] =
    [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, PI / 2.0, 5.0 * PI / 8.0, 3.0 * PI / 4.0, 7.0 * PI / 8.0];

pub const HARALICK_NAMES: [&str; 14] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "information_measure_of_correlation_1",
    "information_measure_of_correlation_2",
    "maximal_correlation_coefficient",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlcmParams {
    /// Number of equal-width grey bins `Ng`.
    pub gray_bins: usize,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self { gray_bins: 64 }
    }
}

impl GlcmParams {
    /// Distances `1..=side/2`.
    pub fn distances(side: usize) -> std::ops::RangeInclusive<usize> {
        1..=side / 2
    }
}

/// Square, row-major probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
}

impl Glcm {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let levels = rows.len();
        if levels == 0 || rows.iter().any(|r| r.len() != levels) {
            return Err(Error::InvalidInput("co-occurrence matrix must be square".into()));
        }
        Ok(Self { levels, p: rows.concat() })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.levels)
            .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

/// Maps intensities to `bins` equal-width bins spanning the image's own
/// `[min, max]` range.
pub fn quantize(img: &GrayImage, bins: usize) -> Vec<usize> {
    let (lo, hi) = img.min_max();
    let span = u64::from(hi - lo) + 1;
    img.pixels()
        .iter()
        .map(|&v| (u64::from(v - lo) * bins as u64 / span) as usize)
        .collect()
}

fn displacement(distance: usize, angle: f64) -> Result<(i64, i64)> {
    if !GLCM_ANGLES.iter().any(|a| (a - angle).abs() < 1e-9) {
        return Err(Error::InvalidInput(format!("angle {angle} is not one of the eight GLCM angles")));
    }
    let d = distance as f64;
    Ok(((d * angle.cos()).round() as i64, (-d * angle.sin()).round() as i64))
}

fn count_pairs(
    bins: &[usize],
    width: usize,
    height: usize,
    dx: i64,
    dy: i64,
    levels: usize,
    counts: &mut [u64],
) -> u64 {
    let (w, h) = (width as i64, height as i64);
    let mut total = 0;
    for r in 0.max(-dy)..h.min(h - dy) {
        for c in 0.max(-dx)..w.min(w - dx) {
            let a = bins[(r * w + c) as usize];
            let b = bins[((r + dy) * w + c + dx) as usize];
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
            total += 2;
        }
    }
    total
}

/// Symmetrized, normalized co-occurrence matrix for pixel pairs
/// `p -> p + round(d * (cos a, -sin a))` (rows grow downward).
pub fn glcm(img: &GrayImage, distance: usize, angle: f64, levels: usize) -> Result<Glcm> {
    if distance == 0 {
        return Err(Error::InvalidInput("GLCM distance must be >= 1".into()));
    }
    if levels < 2 {
        return Err(Error::InvalidInput("GLCM needs >= 2 grey levels".into()));
    }
    let (dx, dy) = displacement(distance, angle)?;
    if dx.unsigned_abs() as usize >= img.width() || dy.unsigned_abs() as usize >= img.height() {
        return Err(Error::DisplacementTooLarge {
            distance,
            width: img.width(),
            height: img.height(),
        });
    }
    let bins = quantize(img, levels);
    let mut counts = vec![0u64; levels * levels];
    let total = count_pairs(&bins, img.width(), img.height(), dx, dy, levels, &mut counts);
    Ok(Glcm { levels, p: counts.iter().map(|&c| c as f64 / total as f64).collect() })
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 { p * p.ln() } else { 0.0 }
}

/// Haralick's fourteen features in [`HARALICK_NAMES`] order. Grey levels are
/// indexed from 1, logarithms are natural and `0 ln 0 = 0`.
pub fn haralick_features(glcm: &Glcm) -> Result<[f64; 14]> {
    let sum = glcm.sum();
    if (sum - 1.0).abs() > 1e-9 || glcm.p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::UnnormalizedGlcm(sum));
    }
    let ng = glcm.levels;
    let mut px = vec![0.0; ng];
    let mut py = vec![0.0; ng];
    let mut p_sum = vec![0.0; 2 * ng + 1];
    let mut p_diff = vec![0.0; ng];
    let (mut asm, mut idm, mut entropy, mut cross) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..ng {
        for j in 0..ng {
            let p = glcm.get(i, j);
            if p == 0.0 {
                continue;
            }
            px[i] += p;
            py[j] += p;
            p_sum[i + j + 2] += p;
            p_diff[i.abs_diff(j)] += p;
            asm += p * p;
            let d = i as f64 - j as f64;
            idm += p / (1.0 + d * d);
            entropy -= p * p.ln();
            cross += (i + 1) as f64 * (j + 1) as f64 * p;
        }
    }
    let level = |i: usize| (i + 1) as f64;
    let mu_x: f64 = px.iter().enumerate().map(|(i, p)| level(i) * p).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, p)| level(j) * p).sum();
    let var_x: f64 = px.iter().enumerate().map(|(i, p)| (level(i) - mu_x).powi(2) * p).sum();
    let var_y: f64 = py.iter().enumerate().map(|(j, p)| (level(j) - mu_y).powi(2) * p).sum();

    let contrast: f64 = p_diff.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    let sd = (var_x * var_y).sqrt();
    let correlation = if sd > 1e-15 { (cross - mu_x * mu_y) / sd } else { 0.0 };
    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let sum_variance: f64 =
        p_sum.iter().enumerate().map(|(k, p)| (k as f64 - sum_average).powi(2) * p).sum();
    let sum_entropy: f64 = -p_sum.iter().map(|&p| plogp(p)).sum::<f64>();
    let diff_mean: f64 = p_diff.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let diff_variance: f64 =
        p_diff.iter().enumerate().map(|(n, p)| (n as f64 - diff_mean).powi(2) * p).sum();
    let diff_entropy: f64 = -p_diff.iter().map(|&p| plogp(p)).sum::<f64>();

    let hx: f64 = -px.iter().map(|&p| plogp(p)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&p| plogp(p)).sum::<f64>();
    let (mut hxy1, mut hxy2) = (0.0, 0.0);
    for i in 0..ng {
        for j in 0..ng {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= glcm.get(i, j) * q.ln();
                hxy2 -= q * q.ln();
            }
        }
    }
    let hmax = hx.max(hy);
    let imc1 = if hmax > 0.0 { (entropy - hxy1) / hmax } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - entropy)).exp()).max(0.0).sqrt();

    Ok([
        asm,
        contrast,
        correlation,
        var_x,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        entropy,
        diff_variance,
        diff_entropy,
        imc1,
        imc2,
        maximal_correlation(glcm, &px, &py),
    ])
}

/// Square root of the second-largest eigenvalue of
/// `Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k))`, computed through the
/// similar symmetric matrix `B B^T` with `B(i,k) = p(i,k) / sqrt(px(i) py(k))`.
fn maximal_correlation(glcm: &Glcm, px: &[f64], py: &[f64]) -> f64 {
    let rows: Vec<usize> = (0..glcm.levels).filter(|&i| px[i] > 0.0).collect();
    let cols: Vec<usize> = (0..glcm.levels).filter(|&k| py[k] > 0.0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return 0.0;
    }
    let b = DMatrix::from_fn(rows.len(), cols.len(), |a, c| {
        let (i, k) = (rows[a], cols[c]);
        glcm.get(i, k) / (px[i] * py[k]).sqrt()
    });
    let s = &b * b.transpose();
    let mut eig: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig[1].max(0.0).sqrt()
}

/// Texture descriptor for a square ROI: for each distance `1..=side/2` the
/// eight angle matrices are averaged, Haralick features are computed, and
/// each feature is summarized by [`stats7`] over distances. Output is
/// feature-major (all seven statistics of feature 1, then feature 2, ...).
pub fn texture_features(img: &GrayImage, params: &GlcmParams) -> Result<[f64; 98]> {
    if !img.is_square() {
        return Err(Error::InvalidInput("texture features need a square ROI".into()));
    }
    let side = img.width();
    if side < 4 {
        return Err(Error::RoiTooSmall(side));
    }
    let levels = params.gray_bins;
    if levels < 2 {
        return Err(Error::InvalidInput("GLCM needs >= 2 grey levels".into()));
    }
    let bins = quantize(img, levels);
    let mut per_distance: Vec<[f64; 14]> = Vec::new();
    let mut counts = vec![0u64; levels * levels];
    for d in GlcmParams::distances(side) {
        let mut acc = vec![0.0; levels * levels];
        for &angle in &GLCM_ANGLES {
            let (dx, dy) = displacement(d, angle)?;
            counts.iter_mut().for_each(|c| *c = 0);
            let total = count_pairs(&bins, side, side, dx, dy, levels, &mut counts) as f64;
            for (a, &c) in acc.iter_mut().zip(&counts) {
                *a += c as f64 / total;
            }
        }
        let total: f64 = acc.iter().sum();
        acc.iter_mut().for_each(|a| *a /= total);
        per_distance.push(haralick_features(&Glcm { levels, p: acc })?);
    }
    let mut out = [0.0; 98];
    for f in 0..14 {
        let series: Vec<f64> = per_distance.iter().map(|h| h[f]).collect();
        out[f * 7..f * 7 + 7].copy_from_slice(&stats7(&series)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_single_cell() {
        let img = GrayImage::new(6, 6, 8, 1.0, vec![77; 36]).unwrap();
        let g = glcm(&img, 2, PI / 4.0, 8).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.sum(), 1.0);
    }

    #[test]
    fn two_by_two_pairs() {
        let img = GrayImage::from_rows(&[&[0, 1], &[0, 1]]).unwrap();
        let g = glcm(&img, 1, 0.0, 2).unwrap();
        assert_eq!(g.p, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn displacement_too_large() {
        let img = GrayImage::from_rows(&[&[0, 1], &[0, 1]]).unwrap();
        assert_eq!(glcm(&img, 2, 0.0, 2).unwrap_err().code(), "displacement-too-large");
        assert!(glcm(&img, 1, 0.3, 2).is_err());
    }

    #[test]
    fn diagonal_point_mass() {
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[2][2] = 1.0;
        let f = haralick_features(&Glcm::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[8], 0.0);
        assert_eq!(f[4], 1.0);
        assert_eq!(f[13], 0.0);
    }

    #[test]
    fn uniform_matrix() {
        let rows = vec![vec![1.0 / 16.0; 4]; 4];
        let f = haralick_features(&Glcm::from_rows(&rows).unwrap()).unwrap();
        assert!((f[0] - 1.0 / 16.0).abs() < 1e-15);
        assert!((f[8] - 16f64.ln()).abs() < 1e-12);
        // Independent marginals: no information shared.
        assert!(f[11].abs() < 1e-12 && f[12].abs() < 1e-6 && f[13].abs() < 1e-6);
    }

    #[test]
    fn rejects_unnormalized() {
        let rows = vec![vec![0.1; 2]; 2];
        let err = haralick_features(&Glcm::from_rows(&rows).unwrap()).unwrap_err();
        assert_eq!(err.code(), "unnormalized-glcm");
    }

    #[test]
    fn constant_roi_texture() {
        let img = GrayImage::new(8, 8, 8, 1.0, vec![3; 64]).unwrap();
        let t = texture_features(&img, &GlcmParams::default()).unwrap();
        for s in 0..7 {
            let contrast = t[7 + s];
            assert_eq!(contrast, 0.0);
        }
        assert_eq!(&t[0..3], &[1.0, 1.0, 1.0]);
        for f in 0..14 {
            assert_eq!(t[f * 7 + 3], 0.0, "std of feature {f}");
        }
    }

    #[test]
    fn tiny_roi_rejected() {
        let img = GrayImage::new(3, 3, 8, 1.0, vec![3; 9]).unwrap();
        assert_eq!(texture_features(&img, &GlcmParams::default()).unwrap_err().code(), "roi-too-small");
    }
}

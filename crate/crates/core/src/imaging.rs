//! Grayscale images, ROI cropping and histogram equalization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel coordinates, row-major (`row` grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// The four BI-RADS assessment categories handled by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BiRads {
    B2,
    B3,
    B4,
    B5,
}

impl BiRads {
    pub const ALL: [BiRads; 4] = [BiRads::B2, BiRads::B3, BiRads::B4, BiRads::B5];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Self::ALL.get(idx).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BiRads::B2 => "B-2",
            BiRads::B3 => "B-3",
            BiRads::B4 => "B-4",
            BiRads::B5 => "B-5",
        }
    }
}

impl fmt::Display for BiRads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiRads {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "B-2" | "B2" | "2" => Ok(BiRads::B2),
            "B-3" | "B3" | "3" => Ok(BiRads::B3),
            "B-4" | "B4" | "4" => Ok(BiRads::B4),
            "B-5" | "B5" | "5" => Ok(BiRads::B5),
            other => Err(Error::Schema(format!("unknown BI-RADS label {other:?}"))),
        }
    }
}

impl Serialize for BiRads {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BiRads {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mammographic projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum View {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "MLO")]
    Mlo,
}

/// Single-channel image at native bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    spacing_mm: f64,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        spacing_mm: f64,
        pixels: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image must be at least 1x1".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::InvalidInput(format!("bit depth {bit_depth} not in {{8, 16}}")));
        }
        if !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
            return Err(Error::InvalidInput(format!("spacing {spacing_mm} mm must be > 0")));
        }
        let max = Self::max_level_for(bit_depth);
        if let Some(&v) = pixels.iter().find(|&&v| u32::from(v) > max) {
            return Err(Error::InvalidInput(format!(
                "intensity {v} exceeds {bit_depth}-bit range"
            )));
        }
        Ok(Self { width, height, bit_depth, spacing_mm, pixels })
    }

    /// Builds an 8-bit image from nested rows; handy for small fixtures.
    pub fn from_rows(rows: &[&[u16]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let pixels = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(width, height, 8, 1.0, pixels)
    }

    fn max_level_for(bit_depth: u8) -> u32 {
        (1u32 << bit_depth) - 1
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn spacing_mm(&self) -> f64 {
        self.spacing_mm
    }

    /// Largest representable intensity, `2^bit_depth - 1`.
    pub fn max_level(&self) -> u32 {
        Self::max_level_for(self.bit_depth)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.row < self.height && p.col < self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    /// Intensity at a (possibly out-of-range) position, clamped to the border.
    #[inline]
    pub fn get_clamped(&self, row: i64, col: i64) -> u16 {
        let r = row.clamp(0, self.height as i64 - 1) as usize;
        let c = col.clamp(0, self.width as i64 - 1) as usize;
        self.get(r, c)
    }

    pub fn min_max(&self) -> (u16, u16) {
        let mut lo = u16::MAX;
        let mut hi = 0;
        for &v in &self.pixels {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn center(&self) -> Pixel {
        Pixel::new(self.height / 2, self.width / 2)
    }

    pub fn with_spacing(mut self, spacing_mm: f64) -> Result<Self> {
        if !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
            return Err(Error::InvalidInput(format!("spacing {spacing_mm} mm must be > 0")));
        }
        self.spacing_mm = spacing_mm;
        Ok(self)
    }

    pub fn load_png(path: &Path, spacing_mm: f64) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::io(path.display(), e))?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        match img {
            image::DynamicImage::ImageLuma8(buf) => {
                let px = buf.into_raw().into_iter().map(u16::from).collect();
                Self::new(width, height, 8, spacing_mm, px)
            }
            image::DynamicImage::ImageLuma16(buf) => {
                Self::new(width, height, 16, spacing_mm, buf.into_raw())
            }
            other => Err(Error::Schema(format!(
                "{}: expected single-channel 8/16-bit PNG, got {:?}",
                path.display(),
                other.color()
            ))),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let (w, h) = (self.width as u32, self.height as u32);
        let res = if self.bit_depth == 8 {
            let raw: Vec<u8> = self.pixels.iter().map(|&v| v as u8).collect();
            image::GrayImage::from_raw(w, h, raw)
                .expect("buffer matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        } else {
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, self.pixels.clone())
                .expect("buffer matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        };
        res.map_err(|e| Error::io(path.display(), e))
    }
}

/// A cropped, square ROI together with its case metadata.
#[derive(Debug, Clone)]
pub struct RoiRecord {
    pub image: GrayImage,
    pub patient_age: f64,
    pub birads_label: BiRads,
    pub case_id: String,
    pub view: View,
}

impl RoiRecord {
    pub fn new(
        image: GrayImage,
        patient_age: f64,
        birads_label: BiRads,
        case_id: impl Into<String>,
        view: View,
    ) -> Result<Self> {
        if !image.is_square() {
            return Err(Error::InvalidInput(format!(
                "ROI must be square, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        if !(0.0..=130.0).contains(&patient_age) {
            return Err(Error::InvalidInput(format!("patient age {patient_age} outside [0, 130]")));
        }
        Ok(Self { image, patient_age, birads_label, case_id: case_id.into(), view })
    }
}

/// Crops a `(2r+1)`-sided square around `center`. Near the border the window
/// slides inward so it stays square and inside the image.
pub fn crop_roi(full: &GrayImage, center: Pixel, radius: usize) -> Result<GrayImage> {
    if !full.contains(center) {
        return Err(Error::InvalidInput(format!(
            "center ({}, {}) outside {}x{} image",
            center.row, center.col, full.width, full.height
        )));
    }
    if radius == 0 {
        return Err(Error::InvalidInput("radius must be >= 1".into()));
    }
    let side = 2 * radius + 1;
    if side > full.width || side > full.height {
        return Err(Error::RoiExceedsImage { side, width: full.width, height: full.height });
    }
    let top = center.row.saturating_sub(radius).min(full.height - side);
    let left = center.col.saturating_sub(radius).min(full.width - side);
    let mut pixels = Vec::with_capacity(side * side);
    for r in top..top + side {
        let start = r * full.width + left;
        pixels.extend_from_slice(&full.pixels[start..start + side]);
    }
    GrayImage::new(side, side, full.bit_depth, full.spacing_mm, pixels)
}

/// Discrete histogram equalization anchored at the smallest non-zero CDF value:
/// `v -> round((cdf(v) - cdf_min) / (1 - cdf_min) * (2^bits - 1))`.
///
/// An image holding a single intensity has nothing to stretch and is returned
/// unchanged.
pub fn equalize_histogram(img: &GrayImage) -> GrayImage {
    let levels = img.max_level() as usize + 1;
    let mut hist = vec![0u64; levels];
    for &v in &img.pixels {
        hist[v as usize] += 1;
    }
    let total = img.pixels.len() as u64;
    let mut cumulative = Vec::with_capacity(levels);
    let mut acc = 0u64;
    for &h in &hist {
        acc += h;
        cumulative.push(acc);
    }
    let cdf_min = cumulative.iter().copied().find(|&c| c > 0).unwrap_or(total);
    if cdf_min == total {
        return img.clone();
    }
    let scale = f64::from(img.max_level()) / (total - cdf_min) as f64;
    let lut: Vec<u16> = cumulative
        .iter()
        .map(|&c| {
            let num = c.saturating_sub(cdf_min) as f64;
            (num * scale).round() as u16
        })
        .collect();
    let pixels = img.pixels.iter().map(|&v| lut[v as usize]).collect();
    GrayImage { pixels, ..img.clone() }
}

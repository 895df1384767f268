//! Seeded region growing and the threshold sweep that produces candidate
//! masks for human review.

mod polygon;
mod review;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

pub use polygon::{is_simple_polygon, rasterize_polygon};
pub use review::{
    apply_selection, emit_review_bundle, read_bundle, BundleCandidate, BundleDescriptor,
    SelectionEntry, SelectionManifest, BUNDLE_FILE,
};

use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Pixel};

/// Default number of thresholds tried by [`threshold_sweep`].
pub const DEFAULT_SWEEP_STEPS: usize = 64;

const NEIGHBORS_8: [(i64, i64); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Binary mass region on the ROI grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    threshold: f64,
    seed: Pixel,
    pixel_count: usize,
}

impl MassMask {
    /// Builds a mask from raw bits. The seed must be set; connectivity is the
    /// caller's responsibility (see [`MassMask::is_single_component`]).
    pub fn from_bits(
        width: usize,
        height: usize,
        bits: Vec<bool>,
        threshold: f64,
        seed: Pixel,
    ) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, got: bits.len() });
        }
        if seed.row >= height || seed.col >= width {
            return Err(Error::SeedOutOfBounds { row: seed.row, col: seed.col });
        }
        if !bits[seed.row * width + seed.col] {
            return Err(Error::DegenerateMask("seed pixel not set".into()));
        }
        let pixel_count = bits.iter().filter(|&&b| b).count();
        Ok(Self { width, height, bits, threshold, seed, pixel_count })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn seed(&self) -> Pixel {
        self.seed
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Membership for signed coordinates; anything off-grid is background.
    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Pixel::new(i / self.width, i % self.width))
    }

    /// `self ⊆ other`, bit for bit.
    pub fn is_subset_of(&self, other: &MassMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn same_region(&self, other: &MassMask) -> bool {
        self.width == other.width && self.bits == other.bits
    }

    /// Whether the set bits form exactly one 8-connected component.
    pub fn is_single_component(&self) -> bool {
        let Some(first) = self.bits.iter().position(|&b| b) else {
            return false;
        };
        let start = Pixel::new(first / self.width, first % self.width);
        flood(self.width, self.height, start, |r, c| self.get(r, c)).1 == self.pixel_count
    }

    /// Keeps only the 8-connected component containing the seed.
    pub(crate) fn restrict_to_seed_component(self) -> Self {
        let (bits, count) = flood(self.width, self.height, self.seed, |r, c| self.get(r, c));
        Self { bits, pixel_count: count, ..self }
    }

    /// 0/255 8-bit image of the mask.
    pub fn to_image(&self) -> GrayImage {
        let px = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, 8, 1.0, px).expect("mask dimensions are valid")
    }
}

/// 8-connected flood fill from `start` over pixels accepted by `inside`.
fn flood(
    width: usize,
    height: usize,
    start: Pixel,
    inside: impl Fn(usize, usize) -> bool,
) -> (Vec<bool>, usize) {
    let mut seen = vec![false; width * height];
    let mut queue = VecDeque::new();
    let mut count = 0;
    if inside(start.row, start.col) {
        seen[start.row * width + start.col] = true;
        queue.push_back(start);
    }
    while let Some(p) = queue.pop_front() {
        count += 1;
        for (dr, dc) in NEIGHBORS_8 {
            let (r, c) = (p.row as i64 + dr, p.col as i64 + dc);
            if r < 0 || c < 0 || r >= height as i64 || c >= width as i64 {
                continue;
            }
            let (r, c) = (r as usize, c as usize);
            let idx = r * width + c;
            if !seen[idx] && inside(r, c) {
                seen[idx] = true;
                queue.push_back(Pixel::new(r, c));
            }
        }
    }
    (seen, count)
}

/// Grows from `seed` through 8-connected pixels whose intensity lies within
/// `threshold` of the seed intensity.
pub fn grow_region(img: &GrayImage, seed: Pixel, threshold: f64) -> Result<MassMask> {
    if !img.contains(seed) {
        return Err(Error::SeedOutOfBounds { row: seed.row, col: seed.col });
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold {threshold} must be >= 0")));
    }
    let base = f64::from(img.get(seed.row, seed.col));
    let (bits, pixel_count) = flood(img.width(), img.height(), seed, |r, c| {
        (f64::from(img.get(r, c)) - base).abs() <= threshold
    });
    Ok(MassMask { width: img.width(), height: img.height(), bits, threshold, seed, pixel_count })
}

/// Candidate masks for one ROI, ascending in threshold, pairwise distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub roi_id: String,
    pub candidates: Vec<MassMask>,
    pub thresholds_tested: usize,
}

impl CandidateSet {
    pub fn for_roi(mut self, roi_id: impl Into<String>) -> Self {
        self.roi_id = roi_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// For every pixel, the smallest threshold at which region growing from
/// `seed` reaches it: the minimax cost over 8-connected paths, where a
/// pixel's cost is its absolute difference from the seed intensity.
pub fn inclusion_levels(img: &GrayImage, seed: Pixel) -> Result<Vec<u32>> {
    if !img.contains(seed) {
        return Err(Error::SeedOutOfBounds { row: seed.row, col: seed.col });
    }
    let (w, h) = (img.width(), img.height());
    let base = i64::from(img.get(seed.row, seed.col));
    let cost = |r: usize, c: usize| (i64::from(img.get(r, c)) - base).unsigned_abs() as u32;
    let mut level = vec![u32::MAX; w * h];
    let mut heap = BinaryHeap::new();
    level[seed.row * w + seed.col] = 0;
    heap.push(Reverse((0u32, seed.row, seed.col)));
    while let Some(Reverse((lv, r, c))) = heap.pop() {
        if lv > level[r * w + c] {
            continue;
        }
        for (dr, dc) in NEIGHBORS_8 {
            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
            if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            let next = lv.max(cost(nr, nc));
            if next < level[nr * w + nc] {
                level[nr * w + nc] = next;
                heap.push(Reverse((next, nr, nc)));
            }
        }
    }
    Ok(level)
}

/// Grows from the ROI center at `steps` thresholds spread evenly over
/// `[0, max - min]` and drops masks identical to a lower-threshold one.
pub fn threshold_sweep(img: &GrayImage, steps: usize) -> Result<CandidateSet> {
    if steps < 2 {
        return Err(Error::InvalidInput(format!("sweep needs >= 2 steps, got {steps}")));
    }
    let seed = img.center();
    let levels = inclusion_levels(img, seed)?;
    let (lo, hi) = img.min_max();
    let span = f64::from(hi - lo);
    let mut candidates: Vec<MassMask> = Vec::new();
    for k in 0..steps {
        let threshold = span * k as f64 / (steps - 1) as f64;
        let bits: Vec<bool> = levels.iter().map(|&lv| f64::from(lv) <= threshold).collect();
        if candidates.last().is_some_and(|prev| prev.bits == bits) {
            continue;
        }
        let pixel_count = bits.iter().filter(|&&b| b).count();
        candidates.push(MassMask {
            width: img.width(),
            height: img.height(),
            bits,
            threshold,
            seed,
            pixel_count,
        });
    }
    Ok(CandidateSet { roi_id: String::new(), candidates, thresholds_tested: steps })
}

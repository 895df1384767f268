//! Review bundles (what the reviewer sees) and selection manifests (what the
//! reviewer decided).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::polygon::{is_simple_polygon, rasterize_polygon, Vertex};
use super::{CandidateSet, MassMask};
use crate::error::{Error, Result};
use crate::fsutil::{check_header, header_line, read_json, write_json, write_png};
use crate::imaging::{BiRads, GrayImage, Pixel, RoiRecord, View};

pub const BUNDLE_FILE: &str = "bundle.json";
const BUNDLE_FORMAT: &str = "mammocad-bundle";
const SELECTIONS_FORMAT: &str = "mammocad-selections";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleCandidate {
    pub index: usize,
    pub threshold: f64,
    pub pixel_count: usize,
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDescriptor {
    pub format: String,
    pub version: u32,
    pub roi_id: String,
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub spacing_mm: f64,
    pub seed: Pixel,
    pub patient_age: f64,
    pub view: View,
    pub birads_label: BiRads,
    pub thresholds_tested: usize,
    pub candidate_count: usize,
    pub candidates: Vec<BundleCandidate>,
}

/// Writes `roi.png`, one `mask_NNN.png` per candidate and `bundle.json`
/// into `out_dir`.
pub fn emit_review_bundle(
    roi: &RoiRecord,
    cands: &CandidateSet,
    out_dir: &Path,
) -> Result<BundleDescriptor> {
    let first = cands
        .candidates
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("{}: empty candidate set", cands.roi_id)))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display(), e))?;
    let image_name = "roi.png".to_string();
    write_png(&out_dir.join(&image_name), &roi.image)?;
    let mut entries = Vec::with_capacity(cands.len());
    for (index, mask) in cands.candidates.iter().enumerate() {
        let name = format!("mask_{index:03}.png");
        write_png(&out_dir.join(&name), &mask.to_image())?;
        entries.push(BundleCandidate {
            index,
            threshold: mask.threshold(),
            pixel_count: mask.pixel_count(),
            mask: name,
        });
    }
    let descriptor = BundleDescriptor {
        format: BUNDLE_FORMAT.into(),
        version: FORMAT_VERSION,
        roi_id: if cands.roi_id.is_empty() { roi.case_id.clone() } else { cands.roi_id.clone() },
        image: image_name,
        width: roi.image.width(),
        height: roi.image.height(),
        bit_depth: roi.image.bit_depth(),
        spacing_mm: roi.image.spacing_mm(),
        seed: first.seed(),
        patient_age: roi.patient_age,
        view: roi.view,
        birads_label: roi.birads_label,
        thresholds_tested: cands.thresholds_tested,
        candidate_count: entries.len(),
        candidates: entries,
    };
    write_json(&out_dir.join(BUNDLE_FILE), &descriptor)?;
    Ok(descriptor)
}

/// Reads a bundle back: descriptor, the ROI image and the candidate masks.
pub fn read_bundle(dir: &Path) -> Result<(BundleDescriptor, GrayImage, CandidateSet)> {
    let desc: BundleDescriptor = read_json(&dir.join(BUNDLE_FILE))?;
    if desc.format != BUNDLE_FORMAT || desc.version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "{}: unsupported bundle {} v{}",
            dir.display(),
            desc.format,
            desc.version
        )));
    }
    if desc.candidate_count != desc.candidates.len() {
        return Err(Error::Schema(format!("{}: candidate_count disagrees", dir.display())));
    }
    let image = GrayImage::load_png(&dir.join(&desc.image), desc.spacing_mm)?;
    let mut candidates = Vec::with_capacity(desc.candidates.len());
    for c in &desc.candidates {
        let png = GrayImage::load_png(&dir.join(&c.mask), 1.0)?;
        if png.width() != desc.width || png.height() != desc.height {
            return Err(Error::Schema(format!("{}: mask size mismatch", c.mask)));
        }
        let bits = png.pixels().iter().map(|&v| v > 127).collect();
        candidates.push(MassMask::from_bits(desc.width, desc.height, bits, c.threshold, desc.seed)?);
    }
    let set = CandidateSet {
        roi_id: desc.roi_id.clone(),
        candidates,
        thresholds_tested: desc.thresholds_tested,
    };
    Ok((desc, image, set))
}

/// One reviewer decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub candidate: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<Vec<Vertex>>,
    pub reviewer: String,
    pub timestamp: String,
}

#[derive(Serialize, Deserialize)]
struct SelectionLine {
    roi_id: String,
    #[serde(flatten)]
    entry: SelectionEntry,
}

/// Reviewer decisions keyed by ROI id. Stored as JSON lines; a later line for
/// the same ROI replaces an earlier one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionManifest {
    entries: BTreeMap<String, SelectionEntry>,
}

impl SelectionManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, roi_id: &str) -> Option<&SelectionEntry> {
        self.entries.get(roi_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SelectionEntry)> {
        self.entries.iter()
    }

    pub fn insert(&mut self, roi_id: impl Into<String>, entry: SelectionEntry) -> Result<()> {
        validate_entry(&entry)?;
        self.entries.insert(roi_id.into(), entry);
        Ok(())
    }

    /// Loads a manifest; a missing file is an empty manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path.display(), e)),
        };
        let origin = path.display().to_string();
        let mut lines = BufReader::new(file).lines();
        let Some(first) = lines.next() else {
            return Ok(Self::new());
        };
        check_header(&first?, SELECTIONS_FORMAT, FORMAT_VERSION, &origin)?;
        let mut manifest = Self::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SelectionLine = serde_json::from_str(&line)
                .map_err(|e| Error::Schema(format!("{origin}:{}: {e}", n + 2)))?;
            manifest.insert(rec.roi_id, rec.entry)?;
        }
        Ok(manifest)
    }

    /// Rewrites the whole file, one line per ROI in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = header_line(SELECTIONS_FORMAT, FORMAT_VERSION);
        text.push('\n');
        for (roi_id, entry) in &self.entries {
            let line = SelectionLine { roi_id: roi_id.clone(), entry: entry.clone() };
            text.push_str(&serde_json::to_string(&line).expect("selection serializes"));
            text.push('\n');
        }
        crate::fsutil::write_atomic(path, text.as_bytes())
    }

    /// Appends one decision to the file (creating it with its header) and
    /// records it in memory.
    pub fn append(&mut self, path: &Path, roi_id: &str, entry: SelectionEntry) -> Result<()> {
        validate_entry(&entry)?;
        let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path.display(), e))?;
        let mut text = String::new();
        if fresh {
            text.push_str(&header_line(SELECTIONS_FORMAT, FORMAT_VERSION));
            text.push('\n');
        }
        let line = SelectionLine { roi_id: roi_id.to_string(), entry: entry.clone() };
        text.push_str(&serde_json::to_string(&line).expect("selection serializes"));
        text.push('\n');
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path.display(), e))?;
        f.sync_data().map_err(|e| Error::io(path.display(), e))?;
        self.entries.insert(roi_id.to_string(), entry);
        Ok(())
    }
}

fn validate_entry(entry: &SelectionEntry) -> Result<()> {
    if let Some(contour) = &entry.contour {
        if !is_simple_polygon(contour) {
            return Err(Error::BadSelection(
                "contour must be a simple closed polygon with >= 3 vertices".into(),
            ));
        }
    }
    Ok(())
}

/// Resolves the reviewer's choice for `cands`. An edited contour replaces the
/// chosen candidate with its rasterized interior, keeping the candidate's
/// threshold tag; only the component holding the seed survives.
pub fn apply_selection(cands: &CandidateSet, manifest: &SelectionManifest) -> Result<MassMask> {
    let entry =
        manifest.get(&cands.roi_id).ok_or_else(|| Error::UnreviewedRoi(cands.roi_id.clone()))?;
    let chosen = cands.candidates.get(entry.candidate).ok_or_else(|| {
        Error::BadSelection(format!(
            "{}: candidate {} of {}",
            cands.roi_id,
            entry.candidate,
            cands.len()
        ))
    })?;
    let Some(contour) = &entry.contour else {
        return Ok(chosen.clone());
    };
    let (w, h) = (chosen.width(), chosen.height());
    let bits = rasterize_polygon(contour, w, h);
    let seed = if bits[chosen.seed().row * w + chosen.seed().col] {
        chosen.seed()
    } else {
        nearest_set_pixel(&bits, w, chosen.seed()).ok_or_else(|| {
            Error::BadSelection(format!("{}: contour encloses no pixels", cands.roi_id))
        })?
    };
    Ok(MassMask::from_bits(w, h, bits, chosen.threshold(), seed)?.restrict_to_seed_component())
}

fn nearest_set_pixel(bits: &[bool], width: usize, to: Pixel) -> Option<Pixel> {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| Pixel::new(i / width, i % width))
        .min_by_key(|p| {
            let dr = p.row as i64 - to.row as i64;
            let dc = p.col as i64 - to.col as i64;
            (dr * dr + dc * dc, p.row, p.col)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{grow_region, threshold_sweep};

    fn entry(candidate: usize, contour: Option<Vec<Vertex>>) -> SelectionEntry {
        SelectionEntry {
            candidate,
            contour,
            reviewer: "r1".into(),
            timestamp: "2020-01-01T00:00:00Z".into(),
        }
    }

    fn three_candidates() -> CandidateSet {
        let img = GrayImage::from_rows(&[
            &[0, 0, 0, 0, 0],
            &[0, 50, 50, 50, 0],
            &[0, 50, 90, 50, 0],
            &[0, 50, 50, 50, 0],
            &[0, 0, 0, 0, 0],
        ])
        .unwrap();
        let set = threshold_sweep(&img, 10).unwrap().for_roi("case-1");
        assert_eq!(set.len(), 3);
        set
    }

    #[test]
    fn plain_selection_returns_candidate() {
        let set = three_candidates();
        let mut m = SelectionManifest::new();
        m.insert("case-1", entry(0, None)).unwrap();
        assert_eq!(apply_selection(&set, &m).unwrap(), set.candidates[0]);
    }

    #[test]
    fn polygon_selection_rasterizes_block() {
        let img = GrayImage::new(8, 8, 8, 1.0, vec![10; 64]).unwrap();
        let base = grow_region(&img, Pixel::new(2, 2), 0.0).unwrap();
        let set = CandidateSet { roi_id: "c".into(), candidates: vec![base], thresholds_tested: 2 };
        let mut m = SelectionManifest::new();
        m.insert("c", entry(0, Some(vec![[0, 0], [0, 4], [4, 4], [4, 0]]))).unwrap();
        let mask = apply_selection(&set, &m).unwrap();
        assert_eq!(mask.pixel_count(), 25);
        assert_eq!(mask.threshold(), 0.0);
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(mask.get(r, c), r <= 4 && c <= 4);
            }
        }
    }

    #[test]
    fn out_of_range_index() {
        let set = three_candidates();
        let mut m = SelectionManifest::new();
        m.insert("case-1", entry(9, None)).unwrap();
        assert_eq!(apply_selection(&set, &m).unwrap_err().code(), "bad-selection");
    }

    #[test]
    fn missing_entry() {
        let set = three_candidates();
        let err = apply_selection(&set, &SelectionManifest::new()).unwrap_err();
        assert_eq!(err.code(), "unreviewed-roi");
    }

    #[test]
    fn rejects_self_intersecting_contour() {
        let mut m = SelectionManifest::new();
        let err = m.insert("x", entry(0, Some(vec![[0, 0], [4, 4], [0, 4], [4, 0]]))).unwrap_err();
        assert_eq!(err.code(), "bad-selection");
    }

    #[test]
    fn manifest_last_write_wins_and_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sel.jsonl");
        let mut m = SelectionManifest::new();
        m.append(&path, "a", entry(1, None)).unwrap();
        m.append(&path, "b", entry(0, Some(vec![[0, 0], [0, 3], [3, 0]]))).unwrap();
        m.append(&path, "a", entry(2, None)).unwrap();
        let back = SelectionManifest::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get("a").unwrap().candidate, 2);

        let compact = dir.path().join("compact.jsonl");
        back.save(&compact).unwrap();
        assert_eq!(SelectionManifest::load(&compact).unwrap(), m);
    }

    #[test]
    fn bundle_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let set = three_candidates();
        let img = GrayImage::new(5, 5, 8, 0.05, (0..25).collect()).unwrap();
        let roi = RoiRecord::new(img, 61.0, BiRads::B4, "case-1", View::Mlo).unwrap();
        let desc = emit_review_bundle(&roi, &set, dir.path()).unwrap();
        assert_eq!(desc.candidate_count, 3);
        assert!(desc.candidates.windows(2).all(|w| w[0].threshold < w[1].threshold));
        let (back_desc, back_img, back_set) = read_bundle(dir.path()).unwrap();
        assert_eq!(back_desc, desc);
        assert_eq!(back_img, roi.image);
        assert_eq!(back_set, set);
    }

    #[test]
    fn bundle_single_candidate() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::new(4, 4, 8, 1.0, vec![3; 16]).unwrap();
        let set = threshold_sweep(&img, 8).unwrap().for_roi("flat");
        let roi = RoiRecord::new(img, 40.0, BiRads::B2, "flat", View::Cc).unwrap();
        let desc = emit_review_bundle(&roi, &set, dir.path()).unwrap();
        assert_eq!(desc.candidate_count, 1);
        assert!(dir.path().join("mask_000.png").exists());
    }

    #[test]
    fn bundle_into_unwritable_location() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let img = GrayImage::new(4, 4, 8, 1.0, vec![3; 16]).unwrap();
        let set = threshold_sweep(&img, 2).unwrap();
        let roi = RoiRecord::new(img, 40.0, BiRads::B2, "flat", View::Cc).unwrap();
        let err = emit_review_bundle(&roi, &set, &blocker.join("sub")).unwrap_err();
        assert_eq!(err.code(), "io");
    }
}

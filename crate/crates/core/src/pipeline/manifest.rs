//! Dataset manifest: one JSON object per line after a versioned header.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{check_header, header_line, write_atomic};
use crate::gafs::stratified_split;
use crate::imaging::{BiRads, Pixel, View};

const MANIFEST_FORMAT: &str = "mammocad-manifest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub case_id: String,
    /// PNG path, relative to the manifest's directory unless absolute.
    pub image: PathBuf,
    pub center: Pixel,
    pub radius: usize,
    pub spacing_mm: f64,
    pub patient_age: f64,
    pub view: View,
    pub birads_label: BiRads,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

fn valid_case_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let m = Self { entries, base_dir: base_dir.into() };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !valid_case_id(&e.case_id) {
                return Err(Error::Schema(format!(
                    "case_id {:?} must be non-empty and use only [A-Za-z0-9._-]",
                    e.case_id
                )));
            }
            if !seen.insert(e.case_id.as_str()) {
                return Err(Error::Schema(format!("duplicate case_id {}", e.case_id)));
            }
            if e.radius == 0 || !(e.spacing_mm > 0.0) {
                return Err(Error::Schema(format!("{}: radius and spacing must be > 0", e.case_id)));
            }
            if !(0.0..=130.0).contains(&e.patient_age) {
                return Err(Error::Schema(format!("{}: age {} out of range", e.case_id, e.patient_age)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path.display(), e))?;
        let origin = path.display().to_string();
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Schema(format!("{origin}: empty manifest")))??;
        check_header(&first, MANIFEST_FORMAT, 1, &origin)?;
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line)
                    .map_err(|e| Error::Schema(format!("{origin}:{}: {e}", n + 2)))?,
            );
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(entries, base)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = header_line(MANIFEST_FORMAT, 1);
        text.push('\n');
        for e in &self.entries {
            text.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
            text.push('\n');
        }
        write_atomic(path, text.as_bytes())
    }

    pub fn image_path(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.image.is_absolute() {
            entry.image.clone()
        } else {
            self.base_dir.join(&entry.image)
        }
    }

    /// Split of every entry. Explicit tags are kept; untagged entries are
    /// assigned 60/40 train/test, stratified by class and seeded.
    pub fn splits(&self, seed: u64) -> Vec<Split> {
        let untagged: Vec<usize> =
            (0..self.entries.len()).filter(|&i| self.entries[i].split.is_none()).collect();
        let labels: Vec<usize> =
            untagged.iter().map(|&i| self.entries[i].birads_label.index()).collect();
        let (_, test) = stratified_split(&labels, 0.4, seed);
        let mut out: Vec<Split> =
            self.entries.iter().map(|e| e.split.unwrap_or(Split::Train)).collect();
        for t in test {
            out[untagged[t]] = Split::Test;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, label: BiRads) -> ManifestEntry {
        ManifestEntry {
            case_id: id.into(),
            image: format!("{id}.png").into(),
            center: Pixel::new(10, 10),
            radius: 5,
            spacing_mm: 0.1,
            patient_age: 50.0,
            view: View::Cc,
            birads_label: label,
            split: None,
        }
    }

    #[test]
    fn round_trip_and_split() {
        let entries: Vec<ManifestEntry> = (0..20)
            .map(|i| entry(&format!("c{i:02}"), BiRads::ALL[i % 4]))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        let m = DatasetManifest::new(entries, dir.path()).unwrap();
        m.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!(back.image_path(&back.entries[0]), dir.path().join("c00.png"));
        let s = back.splits(1);
        assert_eq!(s.iter().filter(|&&x| x == Split::Test).count(), 8);
        assert_eq!(s, back.splits(1));
    }

    #[test]
    fn rejects_duplicates_and_bad_ids() {
        let dup = vec![entry("a", BiRads::B2), entry("a", BiRads::B3)];
        assert_eq!(DatasetManifest::new(dup, ".").unwrap_err().code(), "schema");
        let bad = vec![entry("../x", BiRads::B2)];
        assert!(DatasetManifest::new(bad, ".").is_err());
    }

    #[test]
    fn explicit_tags_kept() {
        let mut e = entry("a", BiRads::B2);
        e.split = Some(Split::Test);
        let m = DatasetManifest::new(vec![e], ".").unwrap();
        assert_eq!(m.splits(0), vec![Split::Test]);
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, metrics, ConfusionMatrix, MetricReport};
use crate::features::{extract_features, feature_names, NormalizationBounds, FEATURE_COUNT};
use crate::fsutil::{write_atomic, write_json};
use crate::gafs::{full_search, search_report, stratified_split, BpnFitness, FitnessSplit, SearchResult};
use crate::imaging::{crop_roi, equalize_histogram, BiRads, GrayImage, RoiRecord, View};
use crate::neural::{train, Model, NetworkShape, Samples, TrainConfig};
use crate::segmentation::{
    apply_selection, emit_review_bundle, read_bundle, threshold_sweep, SelectionEntry,
    SelectionManifest, BUNDLE_FILE,
};

pub const BUNDLES_DIR: &str = "bundles";
pub const SELECTIONS_FILE: &str = "selections.jsonl";
pub const FEATURES_FILE: &str = "features.csv";
pub const BOUNDS_FILE: &str = "features.bounds.json";
pub const MODEL_FILE: &str = "model.json";

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub case_id: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub total: usize,
    pub succeeded: Vec<String>,
    pub failures: Vec<Failure>,
}

impl SegmentSummary {
    pub fn outcome(&self) -> Outcome {
        if self.failures.is_empty() { Outcome::Complete } else { Outcome::Partial }
    }
}

/// Crops, equalizes and sweeps every manifest entry into
/// `out/bundles/<case_id>`. A failing entry is recorded and skipped.
pub fn cmd_segment(manifest: &DatasetManifest, cfg: &RunConfig, out: &Path) -> Result<SegmentSummary> {
    cfg.validate()?;
    let bundles = out.join(BUNDLES_DIR);
    let results: Vec<(String, Result<()>)> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let run = || -> Result<()> {
                let full = GrayImage::load_png(&manifest.image_path(e), e.spacing_mm)?;
                let roi = equalize_histogram(&crop_roi(&full, e.center, e.radius)?);
                let record = RoiRecord::new(roi, e.patient_age, e.birads_label, &e.case_id, e.view)?;
                let cands = threshold_sweep(&record.image, cfg.sweep_steps)?.for_roi(&e.case_id);
                emit_review_bundle(&record, &cands, &bundles.join(&e.case_id))?;
                Ok(())
            };
            (e.case_id.clone(), run())
        })
        .collect();
    let mut summary = SegmentSummary { total: results.len(), succeeded: Vec::new(), failures: Vec::new() };
    for (case_id, r) in results {
        match r {
            Ok(()) => summary.succeeded.push(case_id),
            Err(e) => {
                log::warn!("{case_id}: {e}");
                summary.failures.push(Failure { case_id, code: e.code().into(), message: e.to_string() });
            }
        }
    }
    write_json(&out.join("segment-summary.json"), &summary)?;
    Ok(summary)
}

/// Sorted ids of the bundle directories under `dir`.
pub fn list_bundles(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir.display(), e))? {
        let entry = entry?;
        if entry.path().join(BUNDLE_FILE).is_file() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Stand-in for a human reviewer: for every bundle without a selection,
/// picks the largest candidate that does not touch the ROI border (the
/// first candidate when all do). Returns the number of new selections.
pub fn cmd_review_auto(bundles_dir: &Path, selections: &Path) -> Result<usize> {
    let mut manifest = SelectionManifest::load(selections)?;
    let mut added = 0;
    for id in list_bundles(bundles_dir)? {
        if manifest.get(&id).is_some() {
            continue;
        }
        let (_, _, cands) = read_bundle(&bundles_dir.join(&id))?;
        let mut pick = 0;
        for (i, m) in cands.candidates.iter().enumerate() {
            let (w, h) = (m.width(), m.height());
            let touches = m.pixels().any(|p| p.row == 0 || p.col == 0 || p.row + 1 == h || p.col + 1 == w);
            if !touches && m.pixel_count() >= cands.candidates[pick].pixel_count() {
                pick = i;
            }
        }
        manifest.insert(
            id,
            SelectionEntry { candidate: pick, contour: None, reviewer: "auto".into(), timestamp: now_timestamp() },
        )?;
        added += 1;
    }
    manifest.save(selections)?;
    Ok(added)
}

/// One row of the feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub roi_id: String,
    pub view: View,
    pub split: Split,
    pub label: BiRads,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

const META_COLUMNS: [&str; 4] = ["roi_id", "view", "split", "label"];

fn view_str(v: View) -> &'static str {
    match v {
        View::Cc => "CC",
        View::Mlo => "MLO",
    }
}

impl FeatureTable {
    pub fn header() -> Vec<String> {
        META_COLUMNS.iter().map(|s| s.to_string()).chain(feature_names().iter().cloned()).collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(format!("csv: {e}"));
        w.write_record(Self::header()).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.roi_id.clone(),
                view_str(r.view).to_string(),
                r.split.as_str().to_string(),
                r.label.as_str().to_string(),
            ];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let schema = |m: String| Error::Schema(format!("{origin}: {m}"));
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(format!("{origin}: {e}")),
            _ => schema(e.to_string()),
        })?;
        let header: Vec<String> =
            rdr.headers().map_err(|e| schema(e.to_string()))?.iter().map(str::to_string).collect();
        if header != Self::header() {
            return Err(schema(format!(
                "expected {} columns (roi_id, view, split, label, then the feature names)",
                META_COLUMNS.len() + FEATURE_COUNT
            )));
        }
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| schema(format!("line {line}: {e}")))?;
            let view = match &rec[1] {
                "CC" => View::Cc,
                "MLO" => View::Mlo,
                v => return Err(schema(format!("line {line}: view {v:?}"))),
            };
            let split = match &rec[2] {
                "train" => Split::Train,
                "test" => Split::Test,
                s => return Err(schema(format!("line {line}: split {s:?}"))),
            };
            let label: BiRads = rec[3].parse().map_err(|_| schema(format!("line {line}: label {:?}", &rec[3])))?;
            let values = rec
                .iter()
                .skip(META_COLUMNS.len())
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| schema(format!("line {line}: non-numeric feature value")))?;
            rows.push(FeatureRow { roi_id: rec[0].to_string(), view, split, label, values });
        }
        Ok(Self { rows })
    }

    /// Training samples plus test inputs whose labels stay sealed.
    pub fn design(&self) -> Result<Design> {
        let (train, test): (Vec<&FeatureRow>, Vec<&FeatureRow>) =
            self.rows.iter().partition(|r| r.split == Split::Train);
        let train_rows: Vec<Vec<f64>> = train.iter().map(|r| r.values.clone()).collect();
        let train_labels: Vec<BiRads> = train.iter().map(|r| r.label).collect();
        Design::new(
            Samples::from_rows(&train_rows, &train_labels)?,
            test.iter().map(|r| r.values.clone()).collect(),
            test.iter().map(|r| r.label.index()).collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BoundsFile {
    format: String,
    version: u32,
    feature_names: Vec<String>,
    min: Vec<f64>,
    max: Vec<f64>,
    zero_range_ids: Vec<usize>,
    train_rows: usize,
    test_rows: usize,
}

/// Extracts the 130 features of every manifest entry from its reviewed
/// bundle, min-max normalizes them with bounds fitted on the training rows
/// and writes `features.csv` plus the bounds sidecar.
pub fn cmd_features(
    manifest: &DatasetManifest,
    bundles_dir: &Path,
    selections: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<FeatureTable> {
    cfg.validate()?;
    let chosen = SelectionManifest::load(selections)?;
    if let Some(e) = manifest.entries.iter().find(|e| chosen.get(&e.case_id).is_none()) {
        return Err(Error::UnreviewedRoi(e.case_id.clone()));
    }
    let splits = manifest.splits(cfg.seed);
    let raw: Vec<FeatureRow> = manifest
        .entries
        .par_iter()
        .zip(splits.par_iter())
        .map(|(e, &split)| {
            let (desc, image, cands) = read_bundle(&bundles_dir.join(&e.case_id))?;
            let mask = apply_selection(&cands, &chosen)?;
            let roi = RoiRecord::new(image, desc.patient_age, desc.birads_label, &e.case_id, desc.view)?;
            let fv = extract_features(&roi, &mask, &cfg.features)
                .map_err(|err| Error::InvalidInput(format!("{}: {err}", e.case_id)))?;
            Ok(FeatureRow { roi_id: e.case_id.clone(), view: e.view, split, label: e.birads_label, values: fv.values })
        })
        .collect::<Result<_>>()?;
    let train_rows: Vec<&[f64]> =
        raw.iter().filter(|r| r.split == Split::Train).map(|r| r.values.as_slice()).collect();
    let n_train = train_rows.len();
    let bounds = NormalizationBounds::fit(train_rows)
        .map_err(|_| Error::InvalidInput("no training rows to fit normalization".into()))?;
    let rows = raw
        .into_iter()
        .map(|r| Ok(FeatureRow { values: bounds.apply(&r.values)?, ..r }))
        .collect::<Result<Vec<_>>>()?;
    let table = FeatureTable { rows };
    write_atomic(&out.join(FEATURES_FILE), &table.to_csv()?)?;
    write_json(
        &out.join(BOUNDS_FILE),
        &BoundsFile {
            format: "mammocad-bounds".into(),
            version: 1,
            feature_names: feature_names().to_vec(),
            min: bounds.min.clone(),
            max: bounds.max.clone(),
            zero_range_ids: bounds.zero_range().iter().map(|k| k + 1).collect(),
            train_rows: n_train,
            test_rows: table.rows.len() - n_train,
        },
    )?;
    Ok(table)
}

/// Why sealed test labels are being read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelAccess {
    /// Scoring a finished model.
    FinalScoring,
    /// Fitness explicitly configured to use the test split.
    PaperTestFitness,
}

/// Test labels that may only be read through [`SealedLabels::open`], which
/// records the access so callers can assert nothing peeked early.
#[derive(Debug)]
pub struct SealedLabels {
    labels: Vec<usize>,
    opened: AtomicBool,
}

impl SealedLabels {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels, opened: AtomicBool::new(false) }
    }

    pub fn open(&self, why: LabelAccess) -> &[usize] {
        log::debug!("test labels opened for {why:?}");
        self.opened.store(true, Ordering::SeqCst);
        &self.labels
    }

    pub fn was_opened(&self) -> bool {
        self.opened.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Labelled training split and a test split with sealed labels.
#[derive(Debug)]
pub struct Design {
    pub train: Samples,
    test_x: Vec<Vec<f64>>,
    test_labels: SealedLabels,
}

impl Design {
    pub fn new(train: Samples, test_x: Vec<Vec<f64>>, test_labels: Vec<usize>) -> Result<Self> {
        if test_x.len() != test_labels.len() {
            return Err(Error::LengthMismatch(test_x.len(), test_labels.len()));
        }
        if let Some(r) = test_x.iter().find(|r| r.len() != train.inputs()) {
            return Err(Error::DimensionMismatch { expected: train.inputs(), got: r.len() });
        }
        Ok(Self { train, test_x, test_labels: SealedLabels::new(test_labels) })
    }

    pub fn test_inputs(&self) -> &[Vec<f64>] {
        &self.test_x
    }

    pub fn test_labels(&self) -> &SealedLabels {
        &self.test_labels
    }

    fn test_samples(&self, why: LabelAccess) -> Result<Samples> {
        Samples::new(self.train.inputs(), self.test_x.concat(), self.test_labels.open(why).to_vec())
    }
}

/// A model trained on the given 1-based ids, with its training accuracy and
/// its predictions on the test inputs.
pub fn fit_subset(design: &Design, ids: &[u16], cfg: &TrainConfig) -> Result<(Model, f64, Vec<usize>)> {
    let cols: Vec<usize> = ids.iter().map(|&id| id as usize - 1).collect();
    let data = design.train.project(&cols);
    let mut model = train(&data, NetworkShape::for_inputs(ids.len()), cfg)?;
    model.feature_ids = ids.to_vec();
    let train_acc = model.accuracy(&data)?;
    let preds = design
        .test_x
        .iter()
        .map(|row| {
            let x: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
            Ok(model.predict(&x)?.class.index())
        })
        .collect::<Result<_>>()?;
    Ok((model, train_acc, preds))
}

fn accuracy_of(preds: &[usize], labels: &[usize]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / preds.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub length: usize,
    pub fitness: f64,
    pub generations: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub search: SearchResult,
    pub curve: Vec<CurvePoint>,
    pub model: Model,
    pub metrics: MetricReport,
}

/// Feature search, then per-L retraining on the full training split and a
/// final scoring of the global best on the test split.
pub fn run_selection(design: &Design, cfg: &RunConfig) -> Result<SelectionRun> {
    let ga = &cfg.ga;
    ga.validate()?;
    if design.train.is_empty() || design.test_labels.is_empty() {
        return Err(Error::InvalidInput("both train and test splits must be non-empty".into()));
    }
    let universe = design.train.inputs();
    let (fit_train, fit_score) = match ga.fitness_split {
        FitnessSplit::Validation => {
            let (keep, held) = stratified_split(design.train.labels(), ga.validation_fraction, ga.seed);
            (design.train.subset(&keep), design.train.subset(&held))
        }
        FitnessSplit::PaperTest => {
            (design.train.clone(), design.test_samples(LabelAccess::PaperTestFitness)?)
        }
    };
    let fitness = BpnFitness::new(fit_train, fit_score, ga.fitness_training)?;
    let ga_cfg = crate::gafs::GaConfig { feature_count: universe, ..ga.clone() };
    let search = full_search(&fitness, &ga_cfg)?;
    assert!(
        ga.fitness_split == FitnessSplit::PaperTest || !design.test_labels.was_opened(),
        "test labels read before final scoring"
    );

    let fits: Vec<(Model, f64, Vec<usize>)> = search
        .records
        .par_iter()
        .map(|r| fit_subset(design, &r.best.canonical(), &cfg.training))
        .collect::<Result<_>>()?;
    let labels = design.test_labels.open(LabelAccess::FinalScoring);
    let curve = search
        .records
        .iter()
        .zip(&fits)
        .map(|(r, (_, train_acc, preds))| CurvePoint {
            length: r.length,
            fitness: r.fitness,
            generations: r.generations,
            train_accuracy: *train_acc,
            test_accuracy: accuracy_of(preds, labels),
        })
        .collect();
    let (model, _, preds) = fits.into_iter().nth(search.best_index).expect("best record exists");
    let metrics = metrics(&confusion(&preds, labels)?)?;
    Ok(SelectionRun { search, curve, model, metrics })
}

fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("length,fitness,generations,train_accuracy,test_accuracy\n");
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.length, p.fitness, p.generations, p.train_accuracy, p.test_accuracy
        );
    }
    out
}

pub fn write_metrics(out: &Path, report: &MetricReport) -> Result<()> {
    write_atomic(&out.join("metrics.txt"), report.to_text().as_bytes())?;
    let csv = format!("{}\n{}\n", MetricReport::CSV_HEADER, report.to_csv_row());
    write_atomic(&out.join("metrics.csv"), csv.as_bytes())?;
    write_json(&out.join("metrics.json"), report)
}

/// Runs [`run_selection`] on a feature CSV and writes the search report,
/// the per-L curve, the global-best model and its metrics.
pub fn cmd_select(features: &Path, cfg: &RunConfig, out: &Path) -> Result<SelectionRun> {
    let design = FeatureTable::load(features)?.design()?;
    let run = run_selection(&design, cfg)?;
    let mut report = search_report(&run.search, design.train.inputs());
    let _ = writeln!(
        report,
        "\nfitness split: {}\nfinal model test accuracy: {:.6}",
        match cfg.ga.fitness_split {
            FitnessSplit::Validation => "validation",
            FitnessSplit::PaperTest => "paper-test",
        },
        run.metrics.accuracy
    );
    write_atomic(&out.join("search-report.txt"), report.as_bytes())?;
    write_atomic(&out.join("curve.csv"), curve_csv(&run.curve).as_bytes())?;
    run.model.save(&out.join(MODEL_FILE))?;
    write_metrics(out, &run.metrics)?;
    Ok(run)
}

/// Trains on the training split with the given ids (all when `None`).
pub fn cmd_train(features: &Path, ids: Option<&[u16]>, cfg: &RunConfig, out: &Path) -> Result<(Model, f64)> {
    let design = FeatureTable::load(features)?.design()?;
    let all: Vec<u16> = (1..=design.train.inputs() as u16).collect();
    let ids = ids.unwrap_or(&all);
    if let Some(&bad) = ids.iter().find(|&&id| id == 0 || id as usize > design.train.inputs()) {
        return Err(Error::InvalidInput(format!("feature id {bad} out of range")));
    }
    let (model, train_acc, _) = fit_subset(&design, ids, &cfg.training)?;
    model.save(&out.join(MODEL_FILE))?;
    Ok((model, train_acc))
}

/// Scores a saved model on the test split of a feature CSV.
pub fn cmd_evaluate(model_path: &Path, features: &Path, out: &Path) -> Result<MetricReport> {
    let model = Model::load(model_path)?;
    let design = FeatureTable::load(features)?.design()?;
    let ids: Vec<u16> = if model.feature_ids.is_empty() {
        (1..=model.shape().inputs as u16).collect()
    } else {
        model.feature_ids.clone()
    };
    let preds = design
        .test_inputs()
        .iter()
        .map(|row| {
            let x: Vec<f64> = ids
                .iter()
                .map(|&id| row.get(id as usize - 1).copied().ok_or(Error::DimensionMismatch { expected: id as usize, got: row.len() }))
                .collect::<Result<_>>()?;
            Ok(model.predict(&x)?.class.index())
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = design.test_labels().open(LabelAccess::FinalScoring);
    let report = metrics(&confusion(&preds, labels)?)?;
    write_metrics(out, &report)?;
    Ok(report)
}

/// Parses four lines of four non-negative counts (comma or whitespace
/// separated); rows are actual classes.
pub fn parse_matrix(text: &str) -> Result<ConfusionMatrix> {
    let rows: Vec<Vec<u64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u64>().map_err(|_| Error::Schema(format!("bad count {t:?}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Schema("confusion matrix must be 4 rows of 4 counts".into()));
    }
    let mut counts = [[0u64; 4]; 4];
    for (i, r) in rows.iter().enumerate() {
        counts[i].copy_from_slice(r);
    }
    Ok(ConfusionMatrix::from_counts(counts))
}

pub fn cmd_evaluate_matrix(matrix: &Path, out: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(matrix).map_err(|e| Error::io(matrix.display(), e))?;
    let report = metrics(&parse_matrix(&text)?)?;
    write_metrics(out, &report)?;
    Ok(report)
}

/// Review status of every bundle, for the review service.
pub fn review_status(bundles_dir: &Path, selections: &SelectionManifest) -> Result<Vec<RoiStatus>> {
    let mut out = Vec::new();
    for id in list_bundles(bundles_dir)? {
        let desc: crate::segmentation::BundleDescriptor =
            crate::fsutil::read_json(&bundles_dir.join(&id).join(BUNDLE_FILE))?;
        let sel = selections.get(&id);
        out.push(RoiStatus {
            roi_id: id,
            candidate_count: desc.candidate_count,
            reviewed: sel.is_some(),
            selected: sel.map(|s| s.candidate),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiStatus {
    pub roi_id: String,
    pub candidate_count: usize,
    pub reviewed: bool,
    pub selected: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_parsing() {
        let cm = parse_matrix("47,2,1,0\n3 41 4 2\n# comment\n2,5,36,7\n0,3,2,45\n").unwrap();
        assert_eq!(cm.counts[2], [2, 5, 36, 7]);
        assert!(parse_matrix("1,2,3\n").is_err());
    }

    #[test]
    fn sealed_labels_track_access() {
        let s = SealedLabels::new(vec![0, 1]);
        assert!(!s.was_opened());
        assert_eq!(s.open(LabelAccess::FinalScoring), &[0, 1]);
        assert!(s.was_opened());
    }

    #[test]
    fn feature_table_round_trip() {
        let row = |id: &str, split, label| FeatureRow {
            roi_id: id.into(),
            view: View::Mlo,
            split,
            label,
            values: (0..FEATURE_COUNT).map(|k| k as f64 / 130.0).collect(),
        };
        let table = FeatureTable { rows: vec![row("a", Split::Train, BiRads::B3), row("b", Split::Test, BiRads::B5)] };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_atomic(&p, &table.to_csv().unwrap()).unwrap();
        assert_eq!(FeatureTable::load(&p).unwrap(), table);
        let header = std::fs::read_to_string(&p).unwrap();
        assert_eq!(header.lines().next().unwrap().split(',').count(), 134);
        std::fs::write(&p, "roi_id,label\nx,B-2\n").unwrap();
        assert_eq!(FeatureTable::load(&p).unwrap_err().code(), "schema");
    }
}

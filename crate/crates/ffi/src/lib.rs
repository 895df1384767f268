//! C ABI over the mammocad pipeline.
//!
//! Objects are opaque heap handles created by `mc_*_new`/`mc_*_load`-style
//! calls and released with the matching `mc_*_free`. Fallible calls return
//! an [`McStatus`]; on failure `mc_last_error()` describes the problem until
//! the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use mammocad::evaluation::{metrics, ConfusionMatrix};
use mammocad::features::{extract_features, feature_names, FeatureConfig, FEATURE_COUNT};
use mammocad::imaging::{crop_roi, equalize_histogram, BiRads, GrayImage, Pixel, RoiRecord, View};
use mammocad::neural::{hidden_size, Model, OUTPUT_COUNT};
use mammocad::segmentation::{threshold_sweep, CandidateSet};
use mammocad::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Io = 3,
    Schema = 4,
    RoiExceedsImage = 5,
    SeedOutOfBounds = 6,
    DegenerateMask = 7,
    DimensionMismatch = 8,
    RoiTooSmall = 9,
    OutOfRange = 10,
    Internal = 98,
    Panic = 99,
}

pub struct McImage(GrayImage);

pub struct McCandidateSet(CandidateSet);

pub struct McModel(Model);

/// Rates derived from a 4x4 confusion matrix (rows actual, B-2..B-5).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McMetrics {
    pub accuracy: f64,
    pub sensitivity: [f64; 4],
    pub specificity: [f64; 4],
    pub micro_ppv: f64,
    pub micro_npv: f64,
    pub micro_mcc: f64,
    pub macro_ppv: f64,
    pub macro_npv: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("no interior NUL"));
}

fn status_of(err: &Error) -> McStatus {
    match err {
        Error::Io(_) => McStatus::Io,
        Error::Schema(_) => McStatus::Schema,
        Error::RoiExceedsImage { .. } => McStatus::RoiExceedsImage,
        Error::SeedOutOfBounds { .. } => McStatus::SeedOutOfBounds,
        Error::DegenerateMask(_) => McStatus::DegenerateMask,
        Error::DimensionMismatch { .. } | Error::LengthMismatch(..) => McStatus::DimensionMismatch,
        Error::RoiTooSmall(_) => McStatus::RoiTooSmall,
        Error::InvalidInput(_) | Error::BadSelection(_) | Error::EmptyStats => McStatus::InvalidInput,
        _ => McStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), McStatus>) -> McStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            McStatus::Panic
        }
    }
}

fn fail(err: Error) -> McStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> McStatus {
    set_error(format!("null argument: {what}"));
    McStatus::NullArgument
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, McStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, McStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, McStatus> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| {
        set_error("path is not valid UTF-8");
        McStatus::InvalidInput
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty when none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `len` row-major pixels into a new image.
///
/// # Safety
/// `pixels` must point to `len` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_image_new(
    width: usize,
    height: usize,
    bit_depth: u8,
    spacing_mm: f64,
    pixels: *const u16,
    len: usize,
    out: *mut *mut McImage,
) -> McStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if pixels.is_null() {
            return Err(null("pixels"));
        }
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        let img = GrayImage::new(width, height, bit_depth, spacing_mm, data).map_err(fail)?;
        *out = Box::into_raw(Box::new(McImage(img)));
        Ok(())
    })
}

/// Reads an 8- or 16-bit grayscale PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_image_load_png(
    path: *const c_char,
    spacing_mm: f64,
    out: *mut *mut McImage,
) -> McStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let img = GrayImage::load_png(path_arg(path)?, spacing_mm).map_err(fail)?;
        *out = Box::into_raw(Box::new(McImage(img)));
        Ok(())
    })
}

/// # Safety
/// `img` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mc_image_free(img: *mut McImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// # Safety
/// `img` must be a live image or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mc_image_width(img: *const McImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be a live image or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mc_image_height(img: *const McImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Borrowed row-major pixel buffer of `width * height` values, valid while
/// the image lives.
///
/// # Safety
/// `img` must be a live image or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn mc_image_pixels(img: *const McImage) -> *const u16 {
    img.as_ref().map_or(ptr::null(), |i| i.0.pixels().as_ptr())
}

/// Square `(2 * radius + 1)` window around `(row, col)`, slid inward at the
/// borders.
///
/// # Safety
/// `img` must be a live image and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_crop_roi(
    img: *const McImage,
    row: usize,
    col: usize,
    radius: usize,
    out: *mut *mut McImage,
) -> McStatus {
    guard(|| {
        let img = as_ref(img, "img")?;
        let out = out_ptr(out, "out")?;
        let roi = crop_roi(&img.0, Pixel::new(row, col), radius).map_err(fail)?;
        *out = Box::into_raw(Box::new(McImage(roi)));
        Ok(())
    })
}

/// Histogram-equalized copy.
///
/// # Safety
/// `img` must be a live image and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_equalize(img: *const McImage, out: *mut *mut McImage) -> McStatus {
    guard(|| {
        let img = as_ref(img, "img")?;
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(McImage(equalize_histogram(&img.0))));
        Ok(())
    })
}

/// Region-growing candidates from the image center over `steps` thresholds.
///
/// # Safety
/// `img` must be a live image and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_threshold_sweep(
    img: *const McImage,
    steps: usize,
    out: *mut *mut McCandidateSet,
) -> McStatus {
    guard(|| {
        let img = as_ref(img, "img")?;
        let out = out_ptr(out, "out")?;
        let set = threshold_sweep(&img.0, steps).map_err(fail)?;
        *out = Box::into_raw(Box::new(McCandidateSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mc_candidates_free(set: *mut McCandidateSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live candidate set or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mc_candidates_len(set: *const McCandidateSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Threshold and pixel count of one candidate.
///
/// # Safety
/// `set` must be live; `threshold` and `pixel_count` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_candidate_info(
    set: *const McCandidateSet,
    index: usize,
    threshold: *mut f64,
    pixel_count: *mut usize,
) -> McStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        let (t, n) = (out_ptr(threshold, "threshold")?, out_ptr(pixel_count, "pixel_count")?);
        let m = set.0.candidates.get(index).ok_or_else(|| {
            set_error(format!("candidate {index} of {}", set.0.len()));
            McStatus::OutOfRange
        })?;
        *t = m.threshold();
        *n = m.pixel_count();
        Ok(())
    })
}

/// Writes the candidate mask as `width * height` bytes of 0/1.
///
/// # Safety
/// `set` must be live and `out` must hold `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mc_candidate_mask(
    set: *const McCandidateSet,
    index: usize,
    out: *mut u8,
    len: usize,
) -> McStatus {
    guard(|| {
        let set = as_ref(set, "set")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = set.0.candidates.get(index).ok_or_else(|| {
            set_error(format!("candidate {index} of {}", set.0.len()));
            McStatus::OutOfRange
        })?;
        if len != m.bits().len() {
            return Err(fail(Error::DimensionMismatch { expected: m.bits().len(), got: len }));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, &b) in dst.iter_mut().zip(m.bits()) {
            *d = u8::from(b);
        }
        Ok(())
    })
}

/// The 130 raw (unnormalized) features of `roi` segmented by one candidate,
/// with default feature settings.
///
/// # Safety
/// `roi` and `set` must be live; `out` must hold 130 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mc_extract_features(
    roi: *const McImage,
    set: *const McCandidateSet,
    candidate: usize,
    patient_age: f64,
    out: *mut f64,
) -> McStatus {
    guard(|| {
        let roi = as_ref(roi, "roi")?;
        let set = as_ref(set, "set")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mask = set.0.candidates.get(candidate).ok_or_else(|| {
            set_error(format!("candidate {candidate} of {}", set.0.len()));
            McStatus::OutOfRange
        })?;
        let record =
            RoiRecord::new(roi.0.clone(), patient_age, BiRads::B2, "ffi", View::Cc).map_err(fail)?;
        let fv = extract_features(&record, mask, &FeatureConfig::default()).map_err(fail)?;
        std::slice::from_raw_parts_mut(out, FEATURE_COUNT).copy_from_slice(&fv.values);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn mc_feature_count() -> usize {
    FEATURE_COUNT
}

/// Static name of a 1-based feature id, or null when out of range.
#[no_mangle]
pub extern "C" fn mc_feature_name(id: u16) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| {
        feature_names().iter().map(|n| CString::new(n.as_str()).expect("ascii name")).collect()
    });
    match (id as usize).checked_sub(1).and_then(|i| names.get(i)) {
        Some(n) => n.as_ptr(),
        None => ptr::null(),
    }
}

/// Hidden-layer width for `inputs` features; 0 when `inputs` is 0.
#[no_mangle]
pub extern "C" fn mc_hidden_size(inputs: usize) -> usize {
    if inputs == 0 { 0 } else { hidden_size(inputs) }
}

/// Loads a model saved by the pipeline.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mc_model_load(path: *const c_char, out: *mut *mut McModel) -> McStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let model = Model::load(path_arg(path)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(McModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mc_model_free(model: *mut McModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of inputs the model expects; 0 for null.
///
/// # Safety
/// `model` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn mc_model_inputs(model: *const McModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.shape().inputs)
}

/// Classifies one input vector. `class_index` receives 0..3 for B-2..B-5
/// and `scores` the four class probabilities.
///
/// # Safety
/// `x` must hold `len` doubles, `class_index` be writable and `scores` hold
/// 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mc_model_predict(
    model: *const McModel,
    x: *const f64,
    len: usize,
    class_index: *mut u32,
    scores: *mut f64,
) -> McStatus {
    guard(|| {
        let model = as_ref(model, "model")?;
        let class_index = out_ptr(class_index, "class_index")?;
        if x.is_null() {
            return Err(null("x"));
        }
        if scores.is_null() {
            return Err(null("scores"));
        }
        let input = std::slice::from_raw_parts(x, len);
        let p = model.0.predict(input).map_err(fail)?;
        *class_index = p.class.index() as u32;
        std::slice::from_raw_parts_mut(scores, OUTPUT_COUNT).copy_from_slice(&p.scores);
        Ok(())
    })
}

/// Metrics of a row-major 4x4 confusion matrix (rows actual class).
///
/// # Safety
/// `counts` must hold 16 values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn mc_metrics_from_confusion(
    counts: *const u64,
    out: *mut McMetrics,
) -> McStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let flat = std::slice::from_raw_parts(counts, 16);
        let mut m = [[0u64; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&flat[i * 4..i * 4 + 4]);
        }
        let r = metrics(&ConfusionMatrix::from_counts(m)).map_err(fail)?;
        let mut res = McMetrics {
            accuracy: r.accuracy,
            micro_ppv: r.micro_ppv,
            micro_npv: r.micro_npv,
            micro_mcc: r.micro_mcc,
            macro_ppv: r.macro_ppv,
            macro_npv: r.macro_npv,
            ..McMetrics::default()
        };
        for (c, rates) in r.per_class.iter().enumerate() {
            res.sensitivity[c] = rates.sensitivity;
            res.specificity[c] = rates.specificity;
        }
        *out = res;
        Ok(())
    })
}

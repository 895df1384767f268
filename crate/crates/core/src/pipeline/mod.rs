//! Command implementations behind the `mammocad` binary, plus the file
//! formats they exchange.

mod commands;
mod config;
mod demo;
mod manifest;
mod server;

pub use commands::{
    cmd_evaluate, cmd_evaluate_matrix, cmd_features, cmd_review_auto, cmd_segment, cmd_select,
    cmd_train, fit_subset, list_bundles, parse_matrix, review_status, run_selection,
    write_metrics, CurvePoint, Design, Failure, FeatureRow, FeatureTable, LabelAccess, Outcome,
    RoiStatus, SealedLabels, SegmentSummary, SelectionRun, BOUNDS_FILE, BUNDLES_DIR,
    FEATURES_FILE, MODEL_FILE, SELECTIONS_FILE,
};
pub use config::RunConfig;
pub use demo::{generate_demo, render_case, DemoParams};
pub use manifest::{DatasetManifest, ManifestEntry, Split};
pub use server::{ReviewServer, StopHandle};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged(_) | Error::IdPoolExhausted | Error::Bind(_) => 1,
        _ => EXIT_INPUT,
    }
}

//! Computer-aided BI-RADS classification of breast masses: ROI preparation,
//! seeded region growing with human review, 130 shape/margin/texture
//! features, a back-propagation classifier and genetic feature selection.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod gafs;
mod fsutil;
pub mod imaging;
pub mod neural;
pub mod pipeline;
pub mod segmentation;

pub use error::{Error, Result};

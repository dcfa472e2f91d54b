//! Segmentation and quantification of hyperreflective foci in SD-OCT
//! B-scans and volumes.
//!
//! A B-scan is denoised with a bilateral filter, then two branches run in
//! parallel: a retina-band ROI from fuzzy c-means on the histogram of a
//! closing-by-reconstruction image, and bright maximally stable extremal
//! regions from a max-tree. Their intersection, cleaned by component size,
//! gives the foci.

pub mod denoise;
pub mod error;
pub mod image;
pub mod labeling;
pub mod metrics;
pub mod morphology;
pub mod mser;
pub mod phantom;
pub mod pipeline;
pub mod roi;
pub mod study;

pub use error::{Error, Result};
pub use image::{BScan, Cube, Mask};
pub use pipeline::{segment_bscan, segment_cube, HFReport, PipelineConfig};

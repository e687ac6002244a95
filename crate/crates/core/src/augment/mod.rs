//! Deterministic image augmentation.
//!
//! Images are 8-bit RGB rasters. A [`plan::AugmentPlan`] holds the chains of
//! [`TransformSpec`]s applied to each source image; [`batch`] runs a plan over
//! a directory, either on the originals (basic mode) or on externally generated
//! attribute edits (combined mode). [`attributes`] writes the attribute grid
//! those edits are expected to follow and [`align`] warps faces onto template
//! landmarks.

pub mod align;
pub mod attributes;
pub mod batch;
pub mod clahe;
pub mod plan;
pub mod raster;
mod resample;
pub mod transforms;

pub use align::{align_affine, fit_affine, load_landmarks, load_template, warp_affine, Affine2, LandmarkSet, Point};
pub use attributes::{enumerate_attribute_combos, AttributeCombo, AttributePlan, FacialHair, Hair};
pub use batch::{run_basic, run_combined, AlignStage, Alignment, BatchOptions, GenerationReport};
pub use plan::{build_plan, AugmentPlan, Policy, Span, DEFAULT_CHAINS};
pub use raster::RasterImage;
pub use transforms::{apply, apply_chain, TransformSpec};

//! Proper-sampling tests and tracking on the selection tree.
//!
//! A pair of images is properly sampled at a scale when their attributed
//! Reeb trees agree there; correspondence is only attempted where that
//! holds. Tracking walks each feature's chain in the selection tree from
//! the coarsest properly-sampled scale down to the feature's native scale,
//! estimating translation at each level and re-detecting in the next.

mod proper;
mod selection;
mod tst;

pub use proper::{coarsest_proper_scale, properly_sampled, Window};
pub use selection::{build_selection_tree, SelectionNode, SelectionTree};
pub use tst::{tst_step, BreakReason, Track, TrackPoint, TrackStatus, Tracker, TstConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error(transparent)]
    Img(#[from] imgcore::ImgError),
    #[error(transparent)]
    Art(#[from] art::ArtError),
    #[error(transparent)]
    Detect(#[from] detect::DetectError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, TrackError>;

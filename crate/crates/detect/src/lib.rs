//! Co-variant detection and canonization: blob and corner detectors over a
//! scale space, transversality and scale-persistence scoring, rotation and
//! contrast canonization, the greedy segmentation tree with stable-segment
//! selection, and finite-dimensional point-set canonization.
//!
//! Detectors return lists of [`Frame`]s. Scale is never collapsed to a single
//! global choice: every output carries its own sigma and callers keep the
//! whole list across scales.

mod blobs;
mod canonize;
mod frame;
mod harris;
mod segtree;
mod shape;

pub use blobs::{detect_blobs, local_maxima, stability_margin, transversal, BlobKind, DEFAULT_TAU_J};
pub use canonize::{canonize_contrast, canonize_rotation};
pub use frame::{DetectorKind, Frame};
pub use harris::detect_harris;
pub use segtree::{segment_tree, superpixel_frames, MergeEvent, SegTree, StableRegion};
pub use shape::{canonize_similarity, canonize_similarity_cyclic, CanonizeMode, PointSet, Similarity};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Img(#[from] imgcore::ImgError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window has no gradient energy, orientation undefined")]
    UndefinedOrientation,
    #[error("patch is flat, contrast canonization undefined")]
    FlatPatch,
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),
}

pub type Result<T> = std::result::Result<T, DetectError>;

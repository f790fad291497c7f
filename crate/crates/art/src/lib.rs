//! Critical-point classification and attributed Reeb trees for grayscale
//! rasters.
//!
//! The tree of a raster is built from the superlevel-set merge sweep: a node
//! per local maximum, a degree-3 node per merge saddle, and one virtual
//! boundary minimum closing the domain so that the closed-surface counting
//! relation `n_max - n_saddle + n_min = 2` holds on every tree. Node
//! attributes are the ordinal ranks of the critical values; the values
//! themselves and the positions do not take part in equality.

mod classify;
mod tree;

pub use classify::{classify_critical, CriticalKind, CriticalPoint};
pub use tree::{art_equal, build_art, Art, ArtNode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtError {
    #[error(transparent)]
    Img(#[from] imgcore::ImgError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ArtError>;

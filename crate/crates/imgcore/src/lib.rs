//! Image containers and the handful of low-level operations every other
//! crate in this workspace builds on: Gaussian smoothing, finite-difference
//! gradients, bilinear warping, scale-space construction and PGM/PNG I/O.
//!
//! All pixel data is `f64` normalized to `[0, 1]`. Operations are pure
//! functions of their inputs; values are freely shareable across threads.

mod error;
mod io;
mod ops;
mod raster;
mod scale_space;

pub use error::ImgError;
pub use io::{read_image, read_pgm, read_png, write_pgm, write_pgm16, write_png, PgmFormat};
pub use ops::{gaussian_blur, gradient, warp, WarpResult};
pub use raster::{Raster, VectorField};
pub use scale_space::{build_pyramid, build_scale_space, ScaleSpace, ScaleSpaceMode};

pub type Result<T> = std::result::Result<T, ImgError>;

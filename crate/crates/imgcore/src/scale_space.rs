use crate::{gaussian_blur, ImgError, Raster, Result};

/// Whether levels share the base grid or are decimated per octave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSpaceMode {
    /// All levels keep the base resolution. Critical-point structure can be
    /// compared across levels without re-indexing.
    NonDecimated,
    /// Classic pyramid: one level per octave, dimensions halved each time.
    /// Used by the coarse-to-fine flow solver.
    Decimated,
}

/// An ordered stack of smoothed versions of a base raster, sigma strictly
/// increasing.
#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub base: Raster,
    pub mode: ScaleSpaceMode,
    levels: Vec<(f64, Raster)>,
}

impl ScaleSpace {
    pub fn levels(&self) -> &[(f64, Raster)] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn sigma(&self, level: usize) -> f64 {
        self.levels[level].0
    }

    pub fn raster(&self, level: usize) -> &Raster {
        &self.levels[level].1
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.levels.iter().map(|(s, _)| *s).collect()
    }
}

/// Builds a scale space with the geometric schedule
/// `sigma_k = sigma0 * 2^(k / steps_per_octave)`.
///
/// Non-decimated levels are produced by incremental smoothing with
/// `sigma_inc = sqrt(sigma_k^2 - sigma_{k-1}^2)`, so level `k` equals a
/// direct blur of the base at `sigma_k` up to accumulation error.
/// Decimated mode halves the grid once per level and uses one level per
/// octave (`steps_per_octave` is ignored there).
pub fn build_scale_space(
    img: &Raster,
    sigma0: f64,
    steps_per_octave: usize,
    n_levels: usize,
) -> Result<ScaleSpace> {
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(ImgError::InvalidArgument(format!(
            "sigma0 must be positive, got {sigma0}"
        )));
    }
    if n_levels == 0 {
        return Err(ImgError::InvalidArgument("n_levels must be >= 1".into()));
    }
    if steps_per_octave == 0 {
        return Err(ImgError::InvalidArgument(
            "steps_per_octave must be >= 1".into(),
        ));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut current = gaussian_blur(img, sigma0)?;
    let mut sigma_prev = sigma0;
    levels.push((sigma0, current.clone()));
    for k in 1..n_levels {
        let sigma_k = sigma0 * 2f64.powf(k as f64 / steps_per_octave as f64);
        let sigma_inc = (sigma_k * sigma_k - sigma_prev * sigma_prev).sqrt();
        current = gaussian_blur(&current, sigma_inc)?;
        levels.push((sigma_k, current.clone()));
        sigma_prev = sigma_k;
    }
    Ok(ScaleSpace {
        base: img.clone(),
        mode: ScaleSpaceMode::NonDecimated,
        levels,
    })
}

/// Decimated pyramid for coarse-to-fine solvers: level 0 is the base blurred
/// at `sigma0`; each further level is smoothed and halved.
pub fn build_pyramid(img: &Raster, sigma0: f64, n_levels: usize) -> Result<ScaleSpace> {
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(ImgError::InvalidArgument(format!(
            "sigma0 must be positive, got {sigma0}"
        )));
    }
    if n_levels == 0 {
        return Err(ImgError::InvalidArgument("n_levels must be >= 1".into()));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut current = gaussian_blur(img, sigma0)?;
    levels.push((sigma0, current.clone()));
    for k in 1..n_levels {
        if current.width() < 4 || current.height() < 4 {
            break;
        }
        current = gaussian_blur(&current, 1.0)?.downsample_half();
        levels.push((sigma0 * 2f64.powi(k as i32), current.clone()));
    }
    Ok(ScaleSpace {
        base: img.clone(),
        mode: ScaleSpaceMode::Decimated,
        levels,
    })
}

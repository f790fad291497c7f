use detect::{canonize_contrast, Frame};
use imgcore::Raster;

use crate::{DescrError, Result};

pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_SUPPORT_MULT: f64 = 2.0;

/// A fixed-grid patch resampled in a frame's canonical coordinates and
/// contrast-canonized: mean 0, unit variance.
#[derive(Debug, Clone)]
pub struct Patch {
    pub grid: usize,
    pub values: Raster,
    /// Contrast gain removed from the source window.
    pub alpha: f64,
    /// Contrast offset removed from the source window.
    pub beta: f64,
}

impl Patch {
    /// Canonizes an already-resampled raster (mainly for tests and for
    /// callers with their own sampling).
    pub fn from_raster(values: &Raster) -> Result<Patch> {
        let (alpha, beta, canon) = canonize_contrast(values)?;
        Ok(Patch {
            grid: canon.width(),
            values: canon,
            alpha,
            beta,
        })
    }
}

/// Resamples `img` on the frame's canonized grid (translate by -t, rotate
/// by -theta, scale to a `support_mult * sigma` half-width window) and
/// canonizes contrast. The rotated window must lie inside the image.
pub fn extract_patch(
    img: &Raster,
    frame: &Frame,
    grid: usize,
    support_mult: f64,
) -> Result<Patch> {
    if grid < 2 {
        return Err(DescrError::InvalidArgument("grid must be >= 2".into()));
    }
    let radius = support_mult * frame.sigma;
    // The rotated square window is contained in the centered disk of
    // radius*sqrt(2); require that disk inside the image.
    let reach = radius * 2f64.sqrt();
    let (w, h) = (img.width() as f64, img.height() as f64);
    if frame.x - reach < 0.0 || frame.y - reach < 0.0 || frame.x + reach > w - 1.0
        || frame.y + reach > h - 1.0
    {
        return Err(DescrError::InvalidArgument(format!(
            "frame window (reach {reach:.1}) exceeds the image at ({}, {})",
            frame.x, frame.y
        )));
    }
    let (s, c) = frame.theta.sin_cos();
    let step = 2.0 * radius / grid as f64;
    let resampled = Raster::from_fn(grid, grid, |i, j| {
        let u = (i as f64 + 0.5 - grid as f64 / 2.0) * step;
        let v = (j as f64 + 0.5 - grid as f64 / 2.0) * step;
        // Canonical grid offsets rotated back into image coordinates.
        let dx = c * u - s * v;
        let dy = s * u + c * v;
        img.sample_bilinear(frame.x + dx, frame.y + dy)
    })?;
    Patch::from_raster(&resampled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use detect::DetectorKind;

    #[test]
    fn axis_aligned_unit_step_window_is_an_exact_copy() {
        // grid 32, support 2 * sigma = 16 gives unit sample spacing; with
        // the center on a half-integer pixel the samples land exactly on
        // the grid, so the patch equals the normalized crop.
        let img = Raster::from_fn(64, 64, |x, y| ((x * 7 + y * 13) % 23) as f64 / 23.0).unwrap();
        let frame = Frame::at(31.5, 31.5, 8.0, DetectorKind::Log, 1.0);
        let patch = extract_patch(&img, &frame, 32, 2.0).unwrap();
        let crop = img.crop(16, 16, 32, 32).unwrap();
        let (_, _, canon) = detect::canonize_contrast(&crop).unwrap();
        assert!(patch.values.rms_diff(&canon) < 1e-12);
    }

    #[test]
    fn roundtrip_through_the_frames_own_similarity() {
        // Analytic scene evaluated twice: once plain, once pre-transformed
        // by the frame's similarity; the canonized patches agree up to
        // resampling error.
        let scene = |x: f64, y: f64| -> f64 {
            let g = |cx: f64, cy: f64, r2: f64, a: f64| {
                a * (-((x - cx).powi(2) + (y - cy).powi(2)) / r2).exp()
            };
            0.2 + g(0.0, 0.0, 30.0, 0.7) + g(6.0, 3.0, 10.0, 0.5)
        };
        // Identity frame at the scene origin, mapped to image center.
        let base = Raster::from_fn(96, 96, |x, y| scene(x as f64 - 48.0, y as f64 - 48.0)).unwrap();
        let f0 = Frame::at(48.0, 48.0, 6.0, DetectorKind::Log, 1.0);
        let p0 = extract_patch(&base, &f0, 32, 2.0).unwrap();

        // The same scene rotated, scaled and shifted, with the frame
        // transported accordingly.
        let theta = 0.7f64;
        let scale = 1.3f64;
        let (s, c) = theta.sin_cos();
        let warped = Raster::from_fn(96, 96, |x, y| {
            // Image position -> scene coordinates via the inverse map.
            let dx = x as f64 - 44.0;
            let dy = y as f64 - 50.0;
            let u = (c * dx + s * dy) / scale;
            let v = (-s * dx + c * dy) / scale;
            scene(u, v)
        })
        .unwrap();
        let mut f1 = Frame::at(44.0, 50.0, 6.0 * scale, DetectorKind::Log, 1.0);
        f1.set_theta(theta);
        let p1 = extract_patch(&warped, &f1, 32, 2.0).unwrap();

        // Raw resampling error is ~1e-3; unit-variance normalization
        // divides by the window deviation, so allow that amplification.
        let rms = p0.values.rms_diff(&p1.values);
        assert!(rms < 0.02, "rms {rms}");
    }

    #[test]
    fn flat_window_is_an_error() {
        let img = Raster::constant(64, 64, 0.5).unwrap();
        let frame = Frame::at(32.0, 32.0, 4.0, DetectorKind::Log, 1.0);
        assert!(matches!(
            extract_patch(&img, &frame, 16, 2.0),
            Err(DescrError::Detect(detect::DetectError::FlatPatch))
        ));
    }

    #[test]
    fn window_outside_image_is_an_error() {
        let img = Raster::constant(32, 32, 0.5).unwrap();
        let frame = Frame::at(4.0, 4.0, 8.0, DetectorKind::Log, 1.0);
        assert!(extract_patch(&img, &frame, 16, 2.0).is_err());
    }
}

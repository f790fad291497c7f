use imgcore::Raster;

use crate::{DetectError, Frame, Result};

const ORIENTATION_BINS: usize = 36;

/// Dominant gradient orientation in the frame's support window: a 36-bin
/// direction histogram over `B_sigma(t)`, Gaussian-weighted and
/// magnitude-weighted, with parabolic refinement of the peak bin.
///
/// Returns the angle in `[0, 2*pi)`; a window without gradient energy is an
/// [`DetectError::UndefinedOrientation`] error.
pub fn canonize_rotation(img: &Raster, frame: &Frame) -> Result<f64> {
    let weight_std = 1.5 * frame.sigma;
    let radius = (3.0 * weight_std).ceil() as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let cx = frame.x.round() as isize;
    let cy = frame.y.round() as isize;
    if cx - radius < 0 || cy - radius < 0 || cx + radius >= w || cy + radius >= h {
        return Err(DetectError::InvalidArgument(
            "orientation window exceeds the image".into(),
        ));
    }

    let tau = std::f64::consts::TAU;
    let bin_width = tau / ORIENTATION_BINS as f64;
    let mut hist = [0.0f64; ORIENTATION_BINS];
    let mut energy = 0.0;
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let x = cx + dx;
            let y = cy + dy;
            if x < 1 || y < 1 || x >= w - 1 || y >= h - 1 {
                continue;
            }
            let gx = 0.5 * (img.get((x + 1) as usize, y as usize) - img.get((x - 1) as usize, y as usize));
            let gy = 0.5 * (img.get(x as usize, (y + 1) as usize) - img.get(x as usize, (y - 1) as usize));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let dist2 = ((x as f64 - frame.x).powi(2) + (y as f64 - frame.y).powi(2))
                / (2.0 * weight_std * weight_std);
            let wgt = mag * (-dist2).exp();
            energy += wgt;
            let angle = gy.atan2(gx).rem_euclid(tau);
            // Linear interpolation between the two nearest bin centers.
            let pos = angle / bin_width - 0.5;
            let b0 = pos.floor();
            let frac = pos - b0;
            let i0 = (b0.rem_euclid(ORIENTATION_BINS as f64)) as usize;
            let i1 = (i0 + 1) % ORIENTATION_BINS;
            hist[i0] += wgt * (1.0 - frac);
            hist[i1] += wgt * frac;
        }
    }
    if energy < 1e-12 {
        return Err(DetectError::UndefinedOrientation);
    }
    let peak = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let l = hist[(peak + ORIENTATION_BINS - 1) % ORIENTATION_BINS];
    let c = hist[peak];
    let r = hist[(peak + 1) % ORIENTATION_BINS];
    let denom = l - 2.0 * c + r;
    let offset = if denom.abs() < 1e-18 {
        0.0
    } else {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    };
    Ok(((peak as f64 + 0.5 + offset) * bin_width).rem_euclid(tau))
}

/// Affine contrast canonization of a patch: returns `(alpha, beta, out)`
/// with `beta` the mean, `alpha` the standard deviation, and
/// `out = (patch - beta) / alpha` having mean 0 and unit variance.
pub fn canonize_contrast(patch: &Raster) -> Result<(f64, f64, Raster)> {
    const EPS_C: f64 = 1e-12;
    let n = (patch.width() * patch.height()) as f64;
    let beta = patch.data().iter().sum::<f64>() / n;
    let var = patch.data().iter().map(|v| (v - beta) * (v - beta)).sum::<f64>() / n;
    let alpha = var.sqrt();
    if alpha <= EPS_C {
        return Err(DetectError::FlatPatch);
    }
    let out = Raster::from_fn(patch.width(), patch.height(), |x, y| {
        (patch.get(x, y) - beta) / alpha
    })?;
    Ok((alpha, beta, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DetectorKind;

    #[test]
    fn ramp_orientation_is_zero() {
        let img = Raster::from_fn(48, 48, |x, _| x as f64 / 48.0).unwrap();
        let frame = Frame::at(24.0, 24.0, 3.0, DetectorKind::Log, 1.0);
        let theta = canonize_rotation(&img, &frame).unwrap();
        let wrapped = if theta > std::f64::consts::PI {
            theta - std::f64::consts::TAU
        } else {
            theta
        };
        assert!(wrapped.abs() < 0.05, "theta {theta}");
    }

    #[test]
    fn rotated_ramp_orientation() {
        let a = std::f64::consts::FRAC_PI_6;
        let img = Raster::from_fn(48, 48, |x, y| {
            (a.cos() * x as f64 + a.sin() * y as f64) / 70.0
        })
        .unwrap();
        let frame = Frame::at(24.0, 24.0, 3.0, DetectorKind::Log, 1.0);
        let theta = canonize_rotation(&img, &frame).unwrap();
        assert!((theta - a).abs() < 0.05, "theta {theta} vs {a}");
    }

    #[test]
    fn constant_window_is_undefined() {
        let img = Raster::constant(48, 48, 0.7).unwrap();
        let frame = Frame::at(24.0, 24.0, 3.0, DetectorKind::Log, 1.0);
        assert!(matches!(
            canonize_rotation(&img, &frame),
            Err(DetectError::UndefinedOrientation)
        ));
    }

    #[test]
    fn contrast_of_binary_tiles() {
        let patch = Raster::from_fn(8, 8, |x, y| ((x + y) % 2) as f64).unwrap();
        let (alpha, beta, out) = canonize_contrast(&patch).unwrap();
        assert!((beta - 0.5).abs() < 1e-12);
        assert!((alpha - 0.5).abs() < 1e-12);
        for &v in out.data() {
            assert!((v.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn contrast_is_affine_invariant_and_invertible() {
        let patch = Raster::from_fn(9, 7, |x, y| ((x * 13 + y * 29) % 17) as f64 / 17.0).unwrap();
        let (_, _, canon) = canonize_contrast(&patch).unwrap();
        let scaled = Raster::from_fn(9, 7, |x, y| 3.5 * patch.get(x, y) + 0.2).unwrap();
        let (alpha, beta, canon2) = canonize_contrast(&scaled).unwrap();
        assert!(canon.rms_diff(&canon2) < 1e-12);
        // Round trip: alpha*out + beta reconstructs the input.
        for y in 0..7 {
            for x in 0..9 {
                let back = alpha * canon2.get(x, y) + beta;
                assert!((back - scaled.get(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_patch_is_an_error() {
        let patch = Raster::constant(5, 5, 0.25).unwrap();
        assert!(matches!(canonize_contrast(&patch), Err(DetectError::FlatPatch)));
    }
}

use imgcore::{gaussian_blur, gradient, Raster};

use crate::{DetectError, DetectorKind, Frame, Result};

/// Corner detection from the Gaussian-windowed second-moment matrix of the
/// gradients: local maxima of `det(M) - kappa * trace(M)^2`. `kappa = 0`
/// gives the pure-determinant form.
pub fn detect_harris(
    img: &Raster,
    sigma_d: f64,
    sigma_w: f64,
    kappa: f64,
) -> Result<Vec<Frame>> {
    if !(sigma_d > 0.0) || !(sigma_w > 0.0) {
        return Err(DetectError::InvalidArgument(
            "sigma_d and sigma_w must be positive".into(),
        ));
    }
    let smooth = gaussian_blur(img, sigma_d)?;
    let (gx, gy) = gradient(&smooth)?;
    let (w, h) = (img.width(), img.height());
    let gxx = Raster::from_fn(w, h, |x, y| gx.get(x, y) * gx.get(x, y))?;
    let gxy = Raster::from_fn(w, h, |x, y| gx.get(x, y) * gy.get(x, y))?;
    let gyy = Raster::from_fn(w, h, |x, y| gy.get(x, y) * gy.get(x, y))?;
    let mxx = gaussian_blur(&gxx, sigma_w)?;
    let mxy = gaussian_blur(&gxy, sigma_w)?;
    let myy = gaussian_blur(&gyy, sigma_w)?;

    let response = Raster::from_fn(w, h, |x, y| {
        let a = mxx.get(x, y);
        let b = mxy.get(x, y);
        let c = myy.get(x, y);
        let det = a * c - b * b;
        let tr = a + c;
        det - kappa * tr * tr
    })?;

    let mut frames = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let v = response.get(x, y);
            if v <= 0.0 {
                continue;
            }
            let mut strict = true;
            'nb: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    if response.get((x as isize + dx) as usize, (y as isize + dy) as usize) >= v {
                        strict = false;
                        break 'nb;
                    }
                }
            }
            if strict {
                frames.push(Frame::at(x as f64, y as f64, sigma_w, DetectorKind::Harris, v));
            }
        }
    }
    frames.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.x.partial_cmp(&b.x).unwrap())
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    Ok(frames)
}

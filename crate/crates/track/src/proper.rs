use art::{art_equal, build_art};
use imgcore::{gaussian_blur, Raster};

use crate::{Result, TrackError};

/// An axis-aligned pixel window `[x0, x0+w) x [y0, y0+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Window {
    /// Window of half-width `hw` around `(cx, cy)`, clipped to `w x h`.
    pub fn around(cx: f64, cy: f64, hw: usize, w: usize, h: usize) -> Window {
        let x0 = (cx.round() as isize - hw as isize).max(0) as usize;
        let y0 = (cy.round() as isize - hw as isize).max(0) as usize;
        let x1 = ((cx.round() as isize + hw as isize + 1).max(1) as usize).min(w);
        let y1 = ((cy.round() as isize + hw as isize + 1).max(1) as usize).min(h);
        Window {
            x0,
            y0,
            w: x1.saturating_sub(x0).max(1),
            h: y1.saturating_sub(y0).max(1),
        }
    }
}

/// True iff the two images have equal attributed Reeb trees at scale
/// `sigma`, restricted to `region` when given (the cropped window gets its
/// own virtual boundary minimum).
pub fn properly_sampled(
    a: &Raster,
    b: &Raster,
    sigma: f64,
    region: Option<Window>,
) -> Result<bool> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(TrackError::InvalidArgument(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sa = gaussian_blur(a, sigma)?;
    let sb = gaussian_blur(b, sigma)?;
    let (ca, cb) = match region {
        Some(r) => (sa.crop(r.x0, r.y0, r.w, r.h)?, sb.crop(r.x0, r.y0, r.w, r.h)?),
        None => (sa, sb),
    };
    let ta = build_art(&ca, 0.0)?;
    let tb = build_art(&cb, 0.0)?;
    Ok(art_equal(&ta, &tb))
}

/// The smallest scale in the increasing `schedule` at which the pair is
/// properly sampled, or `None` when every scale fails.
pub fn coarsest_proper_scale(
    a: &Raster,
    b: &Raster,
    schedule: &[f64],
    region: Option<Window>,
) -> Result<Option<f64>> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TrackError::InvalidArgument(
            "scale schedule must be strictly increasing".into(),
        ));
    }
    for &sigma in schedule {
        if properly_sampled(a, b, sigma, region)? {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn blob_image(cx: f64, cy: f64) -> Raster {
        Raster::from_fn(48, 48, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            0.2 + 0.8 * (-(dx * dx + dy * dy) / 12.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn identical_pair_is_proper_at_every_scale() {
        let img = blob_image(24.0, 24.0);
        for sigma in [0.5, 1.0, 2.0, 4.0] {
            assert!(properly_sampled(&img, &img, sigma, None).unwrap());
        }
        let first = coarsest_proper_scale(&img, &img, &[0.5, 1.0, 2.0], None).unwrap();
        assert_eq!(first, Some(0.5));
    }

    #[test]
    fn deleted_blob_fails_at_blob_scale() {
        let a = blob_image(24.0, 24.0);
        let b = Raster::constant(48, 48, 0.2).unwrap();
        assert!(!properly_sampled(&a, &b, 1.5, None).unwrap());
    }

    #[test]
    fn small_shift_is_proper_but_a_new_blob_is_not() {
        let a = blob_image(24.0, 24.0);
        let shifted = blob_image(26.0, 24.0);
        assert!(properly_sampled(&a, &shifted, 1.5, None).unwrap());

        let with_new = Raster::from_fn(48, 48, |x, y| {
            let g = |cx: f64, cy: f64| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                (-(dx * dx + dy * dy) / 12.0).exp()
            };
            0.2 + 0.8 * g(26.0, 24.0) + 0.6 * g(12.0, 12.0)
        })
        .unwrap();
        assert!(!properly_sampled(&a, &with_new, 1.5, None).unwrap());
    }

    #[test]
    fn independent_noise_fails_at_fine_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut failures = 0;
        let trials = 20;
        for _ in 0..trials {
            let a = Raster::from_fn(32, 32, |_, _| rng.gen_range(0.0..1.0)).unwrap();
            let b = Raster::from_fn(32, 32, |_, _| rng.gen_range(0.0..1.0)).unwrap();
            if !properly_sampled(&a, &b, 1.0, None).unwrap() {
                failures += 1;
            }
        }
        assert!(failures * 100 >= trials * 95, "only {failures}/{trials} failed");
    }

    #[test]
    fn region_restriction_uses_the_window() {
        // Change outside the window is invisible to the windowed test.
        let a = blob_image(24.0, 24.0);
        let b = Raster::from_fn(48, 48, |x, y| {
            let base = a.get(x, y);
            if x < 8 && y < 8 {
                1.0 - base
            } else {
                base
            }
        })
        .unwrap();
        let win = Window::around(24.0, 24.0, 10, 48, 48);
        assert!(properly_sampled(&a, &b, 1.0, Some(win)).unwrap());
        assert!(!properly_sampled(&a, &b, 0.8, None).unwrap());
    }
}

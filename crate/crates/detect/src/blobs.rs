use imgcore::{Raster, ScaleSpace};

use crate::{DetectError, DetectorKind, Frame, Result};

/// Blob detector functional over the location-scale group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlobKind {
    Log,
    Dog,
    Hessian,
}

/// Default transversality threshold, as a fraction of the response dynamic
/// range.
pub const DEFAULT_TAU_J: f64 = 1e-6;

fn laplacian(img: &Raster, x: usize, y: usize) -> f64 {
    let (xi, yi) = (x as isize, y as isize);
    img.get_clamped(xi + 1, yi) + img.get_clamped(xi - 1, yi) + img.get_clamped(xi, yi + 1)
        + img.get_clamped(xi, yi - 1)
        - 4.0 * img.get(x, y)
}

fn hessian_det(img: &Raster, x: usize, y: usize) -> f64 {
    let (xi, yi) = (x as isize, y as isize);
    let hxx = img.get_clamped(xi + 1, yi) - 2.0 * img.get(x, y) + img.get_clamped(xi - 1, yi);
    let hyy = img.get_clamped(xi, yi + 1) - 2.0 * img.get(x, y) + img.get_clamped(xi, yi - 1);
    let hxy = 0.25
        * (img.get_clamped(xi + 1, yi + 1) - img.get_clamped(xi + 1, yi - 1)
            - img.get_clamped(xi - 1, yi + 1)
            + img.get_clamped(xi - 1, yi - 1));
    hxx * hyy - hxy * hxy
}

/// Per-level detector responses. For LoG the response at level `i` is the
/// scale-normalized `sigma^2 * laplacian`; for the Hessian it is
/// `sigma^4 * det`; for DoG it is the level difference normalized by the
/// schedule ratio, `(L_{i+1} - L_i) / (k - 1)`.
pub(crate) fn response_stack(ss: &ScaleSpace, kind: BlobKind) -> (Vec<Raster>, Vec<f64>) {
    let (w, h) = (ss.base.width(), ss.base.height());
    match kind {
        BlobKind::Log | BlobKind::Hessian => {
            let mut stack = Vec::with_capacity(ss.n_levels());
            for (sigma, level) in ss.levels() {
                let s2 = sigma * sigma;
                let r = Raster::from_fn(w, h, |x, y| match kind {
                    BlobKind::Log => s2 * laplacian(level, x, y),
                    BlobKind::Hessian => s2 * s2 * hessian_det(level, x, y),
                    BlobKind::Dog => unreachable!(),
                })
                .expect("valid raster");
                stack.push(r);
            }
            (stack, ss.sigmas())
        }
        BlobKind::Dog => {
            let mut stack = Vec::with_capacity(ss.n_levels() - 1);
            let mut sigmas = Vec::with_capacity(ss.n_levels() - 1);
            for i in 0..ss.n_levels() - 1 {
                let k = ss.sigma(i + 1) / ss.sigma(i);
                let a = ss.raster(i);
                let b = ss.raster(i + 1);
                let r = Raster::from_fn(w, h, |x, y| (b.get(x, y) - a.get(x, y)) / (k - 1.0))
                    .expect("valid raster");
                stack.push(r);
                sigmas.push(ss.sigma(i));
            }
            (stack, sigmas)
        }
    }
}

/// Detects 3-D local extrema of the blob response over (x, y, sigma)
/// 26-neighborhoods, keeps `|response| >= contrast_thresh`, and refines each
/// by a quadratic fit in position and log-scale.
pub fn detect_blobs(ss: &ScaleSpace, kind: BlobKind, contrast_thresh: f64) -> Result<Vec<Frame>> {
    if ss.n_levels() < 3 {
        return Err(DetectError::InvalidArgument(format!(
            "blob detection needs >= 3 scale levels, got {}",
            ss.n_levels()
        )));
    }
    let (stack, sigmas) = response_stack(ss, kind);
    let (w, h) = (ss.base.width(), ss.base.height());
    let detector_kind = match kind {
        BlobKind::Log => DetectorKind::Log,
        BlobKind::Dog => DetectorKind::Dog,
        BlobKind::Hessian => DetectorKind::Hessian,
    };

    let mut frames = Vec::new();
    for s in 1..stack.len().saturating_sub(1) {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let v = stack[s].get(x, y);
                if v.abs() < contrast_thresh {
                    continue;
                }
                let mut is_max = true;
                let mut is_min = true;
                'nb: for ds in -1isize..=1 {
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if ds == 0 && dy == 0 && dx == 0 {
                                continue;
                            }
                            let n = stack[(s as isize + ds) as usize]
                                .get((x as isize + dx) as usize, (y as isize + dy) as usize);
                            if n >= v {
                                is_max = false;
                            }
                            if n <= v {
                                is_min = false;
                            }
                            if !is_max && !is_min {
                                break 'nb;
                            }
                        }
                    }
                }
                if !(is_max || is_min) {
                    continue;
                }
                let (dx, dy, ds) = refine_3d(&stack, s, x, y);
                let k = sigmas[s + 1] / sigmas[s];
                let sigma = sigmas[s] * k.powf(ds);
                frames.push(Frame::at(
                    x as f64 + dx,
                    y as f64 + dy,
                    sigma,
                    detector_kind,
                    v,
                ));
            }
        }
    }
    frames.sort_by(|a, b| {
        b.score
            .abs()
            .partial_cmp(&a.score.abs())
            .unwrap()
            .then(a.x.partial_cmp(&b.x).unwrap())
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    Ok(frames)
}

/// One Newton step of a 3-D quadratic fit around a grid extremum; offsets
/// are clamped to one sample in each direction.
fn refine_3d(stack: &[Raster], s: usize, x: usize, y: usize) -> (f64, f64, f64) {
    let f = |ds: isize, dy: isize, dx: isize| -> f64 {
        stack[(s as isize + ds) as usize].get((x as isize + dx) as usize, (y as isize + dy) as usize)
    };
    let gx = 0.5 * (f(0, 0, 1) - f(0, 0, -1));
    let gy = 0.5 * (f(0, 1, 0) - f(0, -1, 0));
    let gs = 0.5 * (f(1, 0, 0) - f(-1, 0, 0));
    let c = f(0, 0, 0);
    let hxx = f(0, 0, 1) - 2.0 * c + f(0, 0, -1);
    let hyy = f(0, 1, 0) - 2.0 * c + f(0, -1, 0);
    let hss = f(1, 0, 0) - 2.0 * c + f(-1, 0, 0);
    let hxy = 0.25 * (f(0, 1, 1) - f(0, 1, -1) - f(0, -1, 1) + f(0, -1, -1));
    let hxs = 0.25 * (f(1, 0, 1) - f(1, 0, -1) - f(-1, 0, 1) + f(-1, 0, -1));
    let hys = 0.25 * (f(1, 1, 0) - f(1, -1, 0) - f(-1, 1, 0) + f(-1, -1, 0));

    // Solve H d = -g by Cramer's rule; fall back to no refinement when the
    // fit is singular.
    let det = hxx * (hyy * hss - hys * hys) - hxy * (hxy * hss - hys * hxs)
        + hxs * (hxy * hys - hyy * hxs);
    if det.abs() < 1e-18 {
        return (0.0, 0.0, 0.0);
    }
    let b = [-gx, -gy, -gs];
    let dx = (b[0] * (hyy * hss - hys * hys) - hxy * (b[1] * hss - hys * b[2])
        + hxs * (b[1] * hys - hyy * b[2]))
        / det;
    let dy = (hxx * (b[1] * hss - hys * b[2]) - b[0] * (hxy * hss - hys * hxs)
        + hxs * (hxy * b[2] - b[1] * hxs))
        / det;
    let ds = (hxx * (hyy * b[2] - b[1] * hys) - hxy * (hxy * b[2] - b[1] * hxs)
        + b[0] * (hxy * hys - hyy * hxs))
        / det;
    (
        dx.clamp(-1.0, 1.0),
        dy.clamp(-1.0, 1.0),
        ds.clamp(-1.0, 1.0),
    )
}

/// True iff the discrete Hessian of `response` at `(x, y)` is definite with
/// `|det|` above `tau_rel` times the response dynamic range: the point is an
/// isolated extremum rather than a ridge or saddle. Invariant to adding a
/// constant to the response field.
pub fn transversal(response: &Raster, x: usize, y: usize, tau_rel: f64) -> Result<bool> {
    let (w, h) = (response.width(), response.height());
    if x == 0 || y == 0 || x >= w - 1 || y >= h - 1 {
        return Err(DetectError::InvalidArgument(
            "transversality needs an interior point".into(),
        ));
    }
    let c = response.get(x, y);
    let hxx = response.get(x + 1, y) - 2.0 * c + response.get(x - 1, y);
    let hyy = response.get(x, y + 1) - 2.0 * c + response.get(x, y - 1);
    let hxy = 0.25
        * (response.get(x + 1, y + 1) - response.get(x + 1, y - 1) - response.get(x - 1, y + 1)
            + response.get(x - 1, y - 1));
    let det = hxx * hyy - hxy * hxy;
    let (lo, hi) = response.min_max();
    let tau_j = tau_rel * (hi - lo).max(f64::MIN_POSITIVE);
    // det > 0 means both curvatures share a sign: a definite extremum.
    Ok(det > tau_j)
}

/// Local maxima (strict, 8-neighborhood, interior) of a raster.
pub fn local_maxima(img: &Raster) -> Vec<(usize, usize)> {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = img.get(x, y);
            let mut strict = true;
            'nb: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    if img.get((x as isize + dx) as usize, (y as isize + dy) as usize) >= c {
                        strict = false;
                        break 'nb;
                    }
                }
            }
            if strict {
                out.push((x, y));
            }
        }
    }
    out
}

/// Scale-persistence stability margin of a frame: the length (in scale
/// units) of the contiguous scale interval above the frame's own level over
/// which its intensity maximum keeps tracking without merging with another
/// maximum or disappearing.
pub fn stability_margin(ss: &ScaleSpace, frame: &Frame) -> Result<f64> {
    let sigmas = ss.sigmas();
    let level0 = sigmas
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - frame.sigma)
                .abs()
                .partial_cmp(&(b.1 - frame.sigma).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .expect("scale space has levels");

    let maxima: Vec<Vec<(usize, usize)>> = (0..ss.n_levels())
        .map(|l| local_maxima(ss.raster(l)))
        .collect();

    let locate = |cands: &[(usize, usize)], px: f64, py: f64, radius: f64| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &(mx, my)) in cands.iter().enumerate() {
            let d = ((mx as f64 - px).powi(2) + (my as f64 - py).powi(2)).sqrt();
            if d <= radius && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    };

    let r0 = frame.sigma.max(2.0);
    let Some(mut current) = locate(&maxima[level0], frame.x, frame.y, r0) else {
        return Err(DetectError::InvalidArgument(
            "frame has no extremum at its own level".into(),
        ));
    };

    let mut last_level = level0;
    for l in level0..ss.n_levels() - 1 {
        let radius = sigmas[l + 1].max(2.0) * 1.5;
        // Forward assignment of every maximum at level l to its nearest
        // continuation at level l+1; a shared continuation is a merge.
        let mut assignment: Vec<Option<usize>> = Vec::with_capacity(maxima[l].len());
        for &(mx, my) in &maxima[l] {
            assignment.push(locate(&maxima[l + 1], mx as f64, my as f64, radius));
        }
        let Some(target) = assignment[current] else {
            break; // disappeared
        };
        let shared = assignment
            .iter()
            .enumerate()
            .any(|(i, a)| i != current && *a == Some(target));
        if shared {
            break; // merged with a neighbor
        }
        current = target;
        last_level = l + 1;
    }
    Ok(sigmas[last_level] - sigmas[level0])
}

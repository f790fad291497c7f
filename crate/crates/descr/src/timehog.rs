use imgcore::gradient;
use serde::Serialize;

use crate::{DescrError, Patch, Result};

pub const DEFAULT_CELLS: usize = 4;
pub const DEFAULT_BINS: usize = 8;

/// Temporal histogram of gradient orientations: per spatial cell, a B-bin
/// orientation histogram accumulated over all of a track's samples,
/// magnitude-weighted and l1-normalized per cell. Temporal ordering is
/// deliberately discarded.
#[derive(Debug, Clone, Serialize)]
pub struct TimeHog {
    /// Cells per image side (cells x cells spatial grid).
    pub cells: usize,
    pub bins: usize,
    pub patch_grid: usize,
    /// Row-major cells, bins contiguous: `hist[(cy*cells + cx)*bins + b]`.
    pub hist: Vec<f64>,
}

/// Accumulates the time HOG of a track's canonized patches.
pub fn time_hog(samples: &[Patch], cells: usize, bins: usize) -> Result<TimeHog> {
    let Some(first) = samples.first() else {
        return Err(DescrError::InvalidArgument(
            "time HOG needs at least one sample".into(),
        ));
    };
    let grid = first.grid;
    if cells == 0 || bins < 2 || grid % cells != 0 {
        return Err(DescrError::InvalidArgument(format!(
            "bad shape: {cells} cells, {bins} bins over grid {grid}"
        )));
    }
    if samples.iter().any(|p| p.grid != grid) {
        return Err(DescrError::InvalidArgument(
            "all patches must share one grid".into(),
        ));
    }
    let cell_px = grid / cells;
    let tau = std::f64::consts::TAU;
    let bin_width = tau / bins as f64;
    let mut hist = vec![0.0f64; cells * cells * bins];

    for patch in samples {
        let (gx, gy) = gradient(&patch.values)?;
        for y in 0..grid {
            for x in 0..grid {
                let i = y * grid + x;
                let mag = (gx.data()[i] * gx.data()[i] + gy.data()[i] * gy.data()[i]).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let angle = gy.data()[i].atan2(gx.data()[i]).rem_euclid(tau);
                let cell = (y / cell_px) * cells + x / cell_px;
                // Linear interpolation between the two nearest bin centers.
                let pos = angle / bin_width - 0.5;
                let b0 = pos.floor();
                let frac = pos - b0;
                let i0 = (b0.rem_euclid(bins as f64)) as usize;
                let i1 = (i0 + 1) % bins;
                hist[cell * bins + i0] += mag * (1.0 - frac);
                hist[cell * bins + i1] += mag * frac;
            }
        }
    }

    // Per-cell l1 normalization; all-zero cells stay zero.
    for cell in 0..cells * cells {
        let s: f64 = hist[cell * bins..(cell + 1) * bins].iter().sum();
        if s > 0.0 {
            for b in 0..bins {
                hist[cell * bins + b] /= s;
            }
        }
    }
    Ok(TimeHog {
        cells,
        bins,
        patch_grid: grid,
        hist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use imgcore::Raster;

    fn ramp_patch(angle: f64, grid: usize) -> Patch {
        let (s, c) = angle.sin_cos();
        let raster = Raster::from_fn(grid, grid, |x, y| {
            0.5 + 0.3 * (c * x as f64 + s * y as f64) / grid as f64
        })
        .unwrap();
        Patch::from_raster(&raster).unwrap()
    }

    #[test]
    fn single_sample_equals_its_spatial_histogram() {
        let p = ramp_patch(0.9, 16);
        let one = time_hog(std::slice::from_ref(&p), 4, 8).unwrap();
        // Accumulating the same sample twice renormalizes to the same
        // histogram.
        let two = time_hog(&[p.clone(), p.clone()], 4, 8).unwrap();
        for (a, b) in one.hist.iter().zip(&two.hist) {
            assert!((a - b).abs() < 1e-12);
        }
        // Each non-empty cell sums to one.
        for cell in 0..16 {
            let s: f64 = one.hist[cell * 8..(cell + 1) * 8].iter().sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn temporal_permutation_is_exact_invariance() {
        let a = ramp_patch(0.2, 16);
        let b = ramp_patch(1.4, 16);
        let c = ramp_patch(2.9, 16);
        let fwd = time_hog(&[a.clone(), b.clone(), c.clone()], 4, 8).unwrap();
        let perm = time_hog(&[c, a, b], 4, 8).unwrap();
        assert_eq!(fwd.hist, perm.hist);
    }

    #[test]
    fn alternating_orthogonal_samples_are_bimodal() {
        // Gradient direction 0 and pi alternating: every cell histogram has
        // two equal modes half a cycle apart.
        let up = ramp_patch(0.0, 16);
        let down = ramp_patch(std::f64::consts::PI, 16);
        let hog = time_hog(&[up.clone(), down.clone(), up, down], 4, 8).unwrap();
        for cell in 0..16 {
            let h = &hog.hist[cell * 8..(cell + 1) * 8];
            let mass_0: f64 = h[0] + h[7]; // bins flanking angle 0
            let mass_pi: f64 = h[3] + h[4]; // bins flanking angle pi
            assert!((mass_0 - mass_pi).abs() < 0.05, "cell {cell}: {h:?}");
            assert!(mass_0 > 0.4, "cell {cell}: {h:?}");
        }
    }

    #[test]
    fn empty_track_is_an_error() {
        assert!(time_hog(&[], 4, 8).is_err());
    }
}

//! Invariant descriptors over canonized tracked patches: the best-template
//! descriptor (per-cell circular statistics of gradient direction) and the
//! time HOG (temporal histogram of gradient orientations, order-free).

mod patch;
mod template;
mod timehog;

pub use patch::{extract_patch, Patch, DEFAULT_GRID, DEFAULT_SUPPORT_MULT};
pub use template::{best_template, TemplateDescriptor};
pub use timehog::{time_hog, TimeHog, DEFAULT_BINS, DEFAULT_CELLS};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescrError {
    #[error(transparent)]
    Img(#[from] imgcore::ImgError),
    #[error(transparent)]
    Detect(#[from] detect::DetectError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, DescrError>;

/// Distance metric over concatenated descriptor cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    Chi2,
}

/// Either descriptor, for callers that treat them uniformly.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Descriptor {
    Template(TemplateDescriptor),
    TimeHog(TimeHog),
}

/// Distance between two descriptors of the same kind. Template angular
/// differences are wrapped to `[0, pi]`; chi-squared applies to histogram
/// descriptors only.
pub fn descr_distance(a: &Descriptor, b: &Descriptor, metric: Metric) -> Result<f64> {
    match (a, b) {
        (Descriptor::Template(a), Descriptor::Template(b)) => template_distance(a, b, metric),
        (Descriptor::TimeHog(a), Descriptor::TimeHog(b)) => timehog_distance(a, b, metric),
        _ => Err(DescrError::InvalidArgument(
            "cannot compare descriptors of different kinds".into(),
        )),
    }
}

/// L2 distance over per-cell circular mean directions, each difference
/// wrapped to `[0, pi]`.
pub fn template_distance(
    a: &TemplateDescriptor,
    b: &TemplateDescriptor,
    metric: Metric,
) -> Result<f64> {
    if a.grid != b.grid {
        return Err(DescrError::InvalidArgument(format!(
            "template grids differ: {} vs {}",
            a.grid, b.grid
        )));
    }
    if metric != Metric::L2 {
        return Err(DescrError::InvalidArgument(
            "chi-squared is defined on histogram descriptors, not templates".into(),
        ));
    }
    let tau = std::f64::consts::TAU;
    let sum: f64 = a
        .mean_direction
        .iter()
        .zip(&b.mean_direction)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(tau);
            let d = d.min(tau - d);
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Distance between two time HOGs over their concatenated cells.
pub fn timehog_distance(a: &TimeHog, b: &TimeHog, metric: Metric) -> Result<f64> {
    if a.cells != b.cells || a.bins != b.bins {
        return Err(DescrError::InvalidArgument(format!(
            "time HOG shapes differ: {}x{} vs {}x{}",
            a.cells, a.bins, b.cells, b.bins
        )));
    }
    match metric {
        Metric::L2 => {
            let sum: f64 = a
                .hist
                .iter()
                .zip(&b.hist)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            Ok(sum.sqrt())
        }
        Metric::Chi2 => {
            let mut sum = 0.0;
            for (x, y) in a.hist.iter().zip(&b.hist) {
                let denom = x + y;
                if denom > 0.0 {
                    sum += (x - y) * (x - y) / denom;
                }
            }
            Ok(0.5 * sum)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_hog(values: &[f64]) -> TimeHog {
        TimeHog {
            cells: 1,
            bins: values.len(),
            patch_grid: 4,
            hist: values.to_vec(),
        }
    }

    #[test]
    fn distance_is_zero_on_self_and_symmetric() {
        let a = toy_hog(&[0.5, 0.25, 0.25, 0.0]);
        let b = toy_hog(&[0.1, 0.4, 0.3, 0.2]);
        for metric in [Metric::L2, Metric::Chi2] {
            assert_eq!(timehog_distance(&a, &a, metric).unwrap(), 0.0);
            let ab = timehog_distance(&a, &b, metric).unwrap();
            let ba = timehog_distance(&b, &a, metric).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!(ab > 0.0);
        }
    }

    #[test]
    fn matches_hand_computed_toy_values() {
        // Two-cell toy: histograms (1, 0) and (0.5, 0.5).
        let a = toy_hog(&[1.0, 0.0]);
        let b = toy_hog(&[0.5, 0.5]);
        // L2: sqrt(0.25 + 0.25) = sqrt(0.5)
        assert!((timehog_distance(&a, &b, Metric::L2).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        // Chi2: 0.5 * (0.25/1.5 + 0.25/0.5) = 0.5 * (1/6 + 1/2) = 1/3
        assert!((timehog_distance(&a, &b, Metric::Chi2).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        // Two-cell template toy: directions (0, pi/2) vs (pi/4, pi/4);
        // wrapped differences are (pi/4, pi/4), L2 = pi/4 * sqrt(2).
        let ta = TemplateDescriptor {
            grid: 2,
            mean_direction: vec![0.0, std::f64::consts::FRAC_PI_2],
            circular_std: vec![0.0, 0.0],
            samples: 1,
        };
        let tb = TemplateDescriptor {
            grid: 2,
            mean_direction: vec![std::f64::consts::FRAC_PI_4; 2],
            circular_std: vec![0.0, 0.0],
            samples: 1,
        };
        let want = std::f64::consts::FRAC_PI_4 * 2f64.sqrt();
        assert!((template_distance(&ta, &tb, Metric::L2).unwrap() - want).abs() < 1e-12);

        // Wrap check: 0.1 vs tau - 0.1 differ by 0.2, not tau - 0.2.
        let tc = TemplateDescriptor {
            grid: 2,
            mean_direction: vec![0.1, 0.1],
            circular_std: vec![0.0, 0.0],
            samples: 1,
        };
        let td = TemplateDescriptor {
            grid: 2,
            mean_direction: vec![std::f64::consts::TAU - 0.1; 2],
            circular_std: vec![0.0, 0.0],
            samples: 1,
        };
        let want = 0.2 * 2f64.sqrt();
        assert!((template_distance(&tc, &td, Metric::L2).unwrap() - want).abs() < 1e-12);
    }
}

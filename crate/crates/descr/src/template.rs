use imgcore::gradient;
use serde::Serialize;

use crate::{DescrError, Patch, Result};

/// Best-template descriptor: per-cell circular mean of the gradient
/// direction across the track's samples, with the circular standard
/// deviation kept as the confidence weight.
#[derive(Debug, Clone, Serialize)]
pub struct TemplateDescriptor {
    pub grid: usize,
    /// Per-cell mean angle in `[0, 2*pi)`, row-major.
    pub mean_direction: Vec<f64>,
    /// Per-cell circular standard deviation (0 = perfectly repeatable).
    pub circular_std: Vec<f64>,
    pub samples: usize,
}

/// Aggregates a track's canonized patches into the best template.
pub fn best_template(samples: &[Patch]) -> Result<TemplateDescriptor> {
    let Some(first) = samples.first() else {
        return Err(DescrError::InvalidArgument(
            "best template needs at least one sample".into(),
        ));
    };
    let grid = first.grid;
    if samples.iter().any(|p| p.grid != grid) {
        return Err(DescrError::InvalidArgument(
            "all patches must share one grid".into(),
        ));
    }
    let n = grid * grid;
    let mut sum_cos = vec![0.0f64; n];
    let mut sum_sin = vec![0.0f64; n];
    for patch in samples {
        let (gx, gy) = gradient(&patch.values)?;
        for i in 0..n {
            let a = gy.data()[i].atan2(gx.data()[i]);
            sum_cos[i] += a.cos();
            sum_sin[i] += a.sin();
        }
    }
    let count = samples.len() as f64;
    let tau = std::f64::consts::TAU;
    let mut mean = vec![0.0f64; n];
    let mut std = vec![0.0f64; n];
    for i in 0..n {
        mean[i] = sum_sin[i].atan2(sum_cos[i]).rem_euclid(tau);
        let r = ((sum_cos[i] / count).powi(2) + (sum_sin[i] / count).powi(2))
            .sqrt()
            .clamp(1e-12, 1.0);
        std[i] = (-2.0 * r.ln()).sqrt();
    }
    Ok(TemplateDescriptor {
        grid,
        mean_direction: mean,
        circular_std: std,
        samples: samples.len(),
    })
}

use serde::Serialize;

/// Which functional produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Log,
    Dog,
    Hessian,
    Harris,
    SuperpixelCentroid,
}

/// A detected canonical group element: translation, scale, rotation and
/// affine contrast, plus the detector response that selected it.
#[derive(Debug, Clone, Serialize)]
pub struct Frame {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    /// Rotation in radians, normalized to `[0, 2*pi)`.
    pub theta: f64,
    /// Contrast gain (> 0).
    pub alpha: f64,
    /// Contrast offset.
    pub beta: f64,
    pub kind: DetectorKind,
    pub score: f64,
}

impl Frame {
    pub fn at(x: f64, y: f64, sigma: f64, kind: DetectorKind, score: f64) -> Self {
        Frame {
            x,
            y,
            sigma,
            theta: 0.0,
            alpha: 1.0,
            beta: 0.0,
            kind,
            score,
        }
    }

    pub fn set_theta(&mut self, theta: f64) {
        let tau = std::f64::consts::TAU;
        self.theta = theta.rem_euclid(tau);
    }
}

use crate::{DetectError, Result};

/// N labeled points in the plane, N >= 3, not all coincident.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
}

impl PointSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(DetectError::InvalidArgument(format!(
                "point set needs >= 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(DetectError::InvalidArgument("non-finite point".into()));
        }
        let p0 = points[0];
        if points
            .iter()
            .all(|p| (p.0 - p0.0).abs() < 1e-12 && (p.1 - p0.1).abs() < 1e-12)
        {
            return Err(DetectError::DegenerateConfiguration(
                "all points coincident".into(),
            ));
        }
        Ok(PointSet { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A planar similarity `x -> scale * R(theta) * x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub theta: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Similarity {
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (
            self.scale * (c * p.0 - s * p.1) + self.tx,
            self.scale * (s * p.0 + c * p.1) + self.ty,
        )
    }

    pub fn apply_set(&self, ps: &PointSet) -> PointSet {
        PointSet {
            points: ps.points.iter().map(|&p| self.apply(p)).collect(),
        }
    }

    fn inverse_apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = (p.0 - self.tx) / self.scale;
        let dy = (p.1 - self.ty) / self.scale;
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Which representative of the orbit to pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonizeMode {
    /// First point to the origin, second point to (1, 0). Exact and simple,
    /// but tied to the point ordering.
    Vertex,
    /// Centroid to the origin, principal axis to the horizontal, largest
    /// singular value to 1. Less sensitive to which point is listed first.
    Stable,
}

/// Removes the similarity group from a point set: returns the canonical
/// representative and the group element `g` with `canonical = g^{-1} * ps`
/// (equivalently `ps = g * canonical`).
pub fn canonize_similarity(ps: &PointSet, mode: CanonizeMode) -> Result<(PointSet, Similarity)> {
    let g = match mode {
        CanonizeMode::Vertex => {
            let p1 = ps.points[0];
            let p2 = ps.points[1];
            let dx = p2.0 - p1.0;
            let dy = p2.1 - p1.1;
            let scale = (dx * dx + dy * dy).sqrt();
            if scale < 1e-12 {
                return Err(DetectError::DegenerateConfiguration(
                    "first two points coincide".into(),
                ));
            }
            Similarity {
                theta: dy.atan2(dx),
                scale,
                tx: p1.0,
                ty: p1.1,
            }
        }
        CanonizeMode::Stable => {
            let n = ps.points.len() as f64;
            let cx = ps.points.iter().map(|p| p.0).sum::<f64>() / n;
            let cy = ps.points.iter().map(|p| p.1).sum::<f64>() / n;
            // Second-moment matrix of the centered points.
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for &(x, y) in &ps.points {
                let dx = x - cx;
                let dy = y - cy;
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
            }
            // Principal axis and largest singular value.
            let tr = sxx + syy;
            let disc = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
            let l1 = 0.5 * (tr + disc);
            if l1 < 1e-20 {
                return Err(DetectError::DegenerateConfiguration(
                    "zero spread around centroid".into(),
                ));
            }
            // Eigenvector of the largest eigenvalue.
            let mut theta = if sxy.abs() > 1e-18 {
                sxy.atan2(l1 - syy)
            } else if sxx >= syy {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            };
            // Disambiguate the axis sign by the third moment along it.
            let (s, c) = theta.sin_cos();
            let skew: f64 = ps
                .points
                .iter()
                .map(|&(x, y)| {
                    let a = c * (x - cx) + s * (y - cy);
                    a * a * a
                })
                .sum();
            if skew < 0.0 {
                theta += std::f64::consts::PI;
            }
            Similarity {
                theta,
                scale: (l1 / n).sqrt(),
                tx: cx,
                ty: cy,
            }
        }
    };
    let canonical = PointSet {
        points: ps.points.iter().map(|&p| g.inverse_apply(p)).collect(),
    };
    Ok((canonical, g))
}

/// Canonizations under all cyclic shifts of the point ordering; the
/// similarity group is removed but the ordering ambiguity is the caller's
/// to marginalize.
pub fn canonize_similarity_cyclic(ps: &PointSet) -> Result<Vec<(PointSet, Similarity)>> {
    let n = ps.points.len();
    (0..n)
        .map(|shift| {
            let rotated: Vec<(f64, f64)> =
                (0..n).map(|i| ps.points[(i + shift) % n]).collect();
            canonize_similarity(&PointSet { points: rotated }, CanonizeMode::Vertex)
        })
        .collect()
}

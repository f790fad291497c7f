use detect::{local_maxima, DetectorKind, Frame};
use imgcore::{build_scale_space, Raster, ScaleSpace};

use crate::Result;

/// A detected frame at one scale level, linked to the nearest coarser-scale
/// frame whose support contains it.
#[derive(Debug, Clone)]
pub struct SelectionNode {
    pub frame: Frame,
    pub level: usize,
    pub parent: Option<usize>,
}

/// Per-scale detected frames with coarse-to-fine parent links.
#[derive(Debug)]
pub struct SelectionTree {
    pub scale_space: ScaleSpace,
    pub nodes: Vec<SelectionNode>,
    levels: Vec<Vec<usize>>,
}

impl SelectionTree {
    pub fn level_nodes(&self, level: usize) -> &[usize] {
        &self.levels[level]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.scale_space.sigmas()
    }

    /// Chain of node ids from `node` up to its highest ancestor
    /// (fine to coarse, starting with `node` itself).
    pub fn ancestor_chain(&self, node: usize) -> Vec<usize> {
        let mut chain = vec![node];
        let mut at = node;
        while let Some(p) = self.nodes[at].parent {
            chain.push(p);
            at = p;
        }
        chain
    }
}

/// Detects intensity maxima at every level of a geometric scale space and
/// links each to its nearest containing parent one level coarser.
pub fn build_selection_tree(
    img: &Raster,
    sigma0: f64,
    steps_per_octave: usize,
    n_levels: usize,
    min_prominence: f64,
) -> Result<SelectionTree> {
    let ss = build_scale_space(img, sigma0, steps_per_octave, n_levels)?;
    let mut nodes: Vec<SelectionNode> = Vec::new();
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(ss.n_levels());

    for l in 0..ss.n_levels() {
        let raster = ss.raster(l);
        let sigma = ss.sigma(l);
        let mut ids = Vec::new();
        for (x, y) in local_maxima(raster) {
            // Suppress numerically flat maxima.
            let c = raster.get(x, y);
            let mut best_nb = f64::NEG_INFINITY;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    best_nb = best_nb
                        .max(raster.get((x as isize + dx) as usize, (y as isize + dy) as usize));
                }
            }
            if c - best_nb < min_prominence {
                continue;
            }
            let id = nodes.len();
            nodes.push(SelectionNode {
                frame: Frame::at(x as f64, y as f64, sigma, DetectorKind::Log, c),
                level: l,
                parent: None,
            });
            ids.push(id);
        }
        levels.push(ids);
    }

    // Parent links: nearest coarser-level frame whose support radius
    // (3 sigma) contains the child.
    for l in 0..levels.len().saturating_sub(1) {
        let (childs, parents) = (levels[l].clone(), levels[l + 1].clone());
        for c in childs {
            let (cx, cy) = (nodes[c].frame.x, nodes[c].frame.y);
            let mut best: Option<(usize, f64)> = None;
            for &p in &parents {
                let d = ((nodes[p].frame.x - cx).powi(2) + (nodes[p].frame.y - cy).powi(2)).sqrt();
                if d <= 3.0 * nodes[p].frame.sigma && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((p, d));
                }
            }
            nodes[c].parent = best.map(|(p, _)| p);
        }
    }

    Ok(SelectionTree {
        scale_space: ss,
        nodes,
        levels,
    })
}

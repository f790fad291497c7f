use detect::{canonize_rotation, local_maxima, stability_margin, Frame};
use imgcore::{build_scale_space, Raster, ScaleSpace};
use serde::Serialize;

use crate::proper::{coarsest_proper_scale, Window};
use crate::selection::SelectionTree;
use crate::Result;

/// Why a track stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakReason {
    TopologyChange,
    Occlusion,
    OutOfFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Live,
    Broken,
}

/// One observation of a track, reported at its native selection scale.
#[derive(Debug, Clone, Serialize)]
pub struct TrackPoint {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Track {
    pub id: usize,
    /// Scale-space level index of the native selection scale.
    pub level: usize,
    pub points: Vec<TrackPoint>,
    pub status: TrackStatus,
    pub break_reason: Option<BreakReason>,
    pub break_time: Option<usize>,
}

impl Track {
    fn last(&self) -> &TrackPoint {
        self.points.last().expect("track has at least one point")
    }

    fn break_at(&mut self, t: usize, reason: BreakReason) {
        self.status = TrackStatus::Broken;
        self.break_reason = Some(reason);
        self.break_time = Some(t);
    }

    /// Displacement between first and last observation.
    pub fn total_displacement(&self) -> (f64, f64) {
        let a = &self.points[0];
        let b = self.last();
        (b.x - a.x, b.y - a.y)
    }
}

/// Knobs of the tracking-on-the-selection-tree stepper.
#[derive(Debug, Clone)]
pub struct TstConfig {
    pub sigma0: f64,
    pub steps_per_octave: usize,
    pub n_levels: usize,
    /// Minimum height of a selection maximum over its neighborhood.
    pub min_prominence: f64,
    /// Radius for re-associating a track with a selection node.
    pub assoc_radius: f64,
    /// Radius for unique re-detection around a propagated estimate.
    pub redetect_radius: f64,
    pub min_search_radius: f64,
    /// Cap on the stability-margin-derived search radius.
    pub max_search_radius: f64,
    /// Tracks closer than this to the image edge are dropped out-of-frame.
    pub border_margin: f64,
}

impl Default for TstConfig {
    fn default() -> Self {
        TstConfig {
            sigma0: 1.0,
            steps_per_octave: 2,
            n_levels: 6,
            min_prominence: 1e-9,
            assoc_radius: 2.5,
            redetect_radius: 2.5,
            min_search_radius: 2.0,
            max_search_radius: 12.0,
            border_margin: 3.0,
        }
    }
}

/// Track store advancing one frame pair at a time.
#[derive(Debug)]
pub struct Tracker {
    pub config: TstConfig,
    pub tracks: Vec<Track>,
    pub time: usize,
}

impl Tracker {
    pub fn new(config: TstConfig) -> Self {
        Tracker {
            config,
            tracks: Vec::new(),
            time: 0,
        }
    }

    /// Spawns one track per selection node at the current time.
    pub fn spawn_from_tree(&mut self, tree: &SelectionTree) {
        for (i, node) in tree.nodes.iter().enumerate() {
            let _ = i;
            let id = self.tracks.len();
            self.tracks.push(Track {
                id,
                level: node.level,
                points: vec![TrackPoint {
                    t: self.time,
                    x: node.frame.x,
                    y: node.frame.y,
                    sigma: node.frame.sigma,
                    theta: node.frame.theta,
                }],
                status: TrackStatus::Live,
                break_reason: None,
                break_time: None,
            });
        }
    }

    pub fn live_tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.status == TrackStatus::Live)
    }
}

/// Quadratic-fit subpixel position of a grid maximum of `img`.
fn subpixel_max(img: &Raster, x: usize, y: usize) -> (f64, f64) {
    let refine = |l: f64, c: f64, r: f64| -> f64 {
        let denom = l - 2.0 * c + r;
        if denom.abs() < 1e-18 {
            0.0
        } else {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        }
    };
    let (xi, yi) = (x as isize, y as isize);
    let dx = refine(
        img.get_clamped(xi - 1, yi),
        img.get(x, y),
        img.get_clamped(xi + 1, yi),
    );
    let dy = refine(
        img.get_clamped(xi, yi - 1),
        img.get(x, y),
        img.get_clamped(xi, yi + 1),
    );
    (x as f64 + dx, y as f64 + dy)
}

/// Windowed SSD between `a` around `(cx, cy)` and `b` around
/// `(cx + dx, cy + dy)`.
fn ssd(a: &Raster, b: &Raster, cx: f64, cy: f64, dx: isize, dy: isize, half: isize) -> f64 {
    let mut sum = 0.0;
    let (cxi, cyi) = (cx.round() as isize, cy.round() as isize);
    for oy in -half..=half {
        for ox in -half..=half {
            let va = a.get_clamped(cxi + ox, cyi + oy);
            let vb = b.get_clamped(cxi + dx + ox, cyi + dy + oy);
            sum += (va - vb) * (va - vb);
        }
    }
    sum
}

/// Integer SSD search followed by parabolic per-axis refinement. Returns the
/// displacement of the window content from `a` to `b`.
fn ssd_search(
    a: &Raster,
    b: &Raster,
    cx: f64,
    cy: f64,
    init: (f64, f64),
    radius: isize,
    half: isize,
) -> (f64, f64) {
    let (ix, iy) = (init.0.round() as isize, init.1.round() as isize);
    let mut best = (f64::INFINITY, 0isize, 0isize);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let c = ssd(a, b, cx, cy, ix + dx, iy + dy, half);
            if c < best.0 {
                best = (c, ix + dx, iy + dy);
            }
        }
    }
    let (_, bx, by) = best;
    let refine = |l: f64, c: f64, r: f64| -> f64 {
        let denom = l - 2.0 * c + r;
        if denom.abs() < 1e-18 {
            0.0
        } else {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        }
    };
    let c0 = ssd(a, b, cx, cy, bx, by, half);
    let fx = refine(
        ssd(a, b, cx, cy, bx - 1, by, half),
        c0,
        ssd(a, b, cx, cy, bx + 1, by, half),
    );
    let fy = refine(
        ssd(a, b, cx, cy, bx, by - 1, half),
        c0,
        ssd(a, b, cx, cy, bx, by + 1, half),
    );
    (bx as f64 + fx, by as f64 + fy)
}

/// Advances every live track from `img_t` to `img_t1` using the selection
/// tree of `img_t`:
///
/// 1. find the coarsest properly-sampled scale of the track's region,
/// 2. estimate translation there by windowed SSD within the
///    stability-margin radius,
/// 3. propagate the estimate down the chain, re-detecting at each finer
///    level (a missing or ambiguous re-detection breaks the track),
/// 4. report the displacement at the track's native selection scale.
pub fn tst_step(
    tracker: &mut Tracker,
    tree_t: &SelectionTree,
    img_t: &Raster,
    img_t1: &Raster,
) -> Result<()> {
    tst_step_masked(tracker, tree_t, img_t, img_t1, None)
}

/// [`tst_step`] with an optional occlusion mask on `img_t1`'s grid; tracks
/// landing on masked pixels break with reason `occlusion`.
pub fn tst_step_masked(
    tracker: &mut Tracker,
    tree_t: &SelectionTree,
    img_t: &Raster,
    img_t1: &Raster,
    occlusion: Option<&[bool]>,
) -> Result<()> {
    let cfg = tracker.config.clone();
    let t1 = tracker.time + 1;
    let (w, h) = (img_t.width(), img_t.height());

    let ss1: ScaleSpace =
        build_scale_space(img_t1, cfg.sigma0, cfg.steps_per_octave, cfg.n_levels)?;
    let maxima1: Vec<Vec<(usize, usize)>> = (0..ss1.n_levels())
        .map(|l| local_maxima(ss1.raster(l)))
        .collect();

    for track in tracker.tracks.iter_mut() {
        if track.status != TrackStatus::Live {
            continue;
        }
        let p = track.last().clone();

        // Out of frame?
        if p.x < cfg.border_margin
            || p.y < cfg.border_margin
            || p.x > (w as f64 - 1.0) - cfg.border_margin
            || p.y > (h as f64 - 1.0) - cfg.border_margin
        {
            track.break_at(t1, BreakReason::OutOfFrame);
            continue;
        }

        // Re-associate with the selection tree of img_t at the native level.
        let mut node = None;
        let mut best_d = cfg.assoc_radius;
        for &cand in tree_t.level_nodes(track.level) {
            let f = &tree_t.nodes[cand].frame;
            let d = ((f.x - p.x).powi(2) + (f.y - p.y).powi(2)).sqrt();
            if d <= best_d {
                best_d = d;
                node = Some(cand);
            }
        }
        let Some(node) = node else {
            track.break_at(t1, BreakReason::TopologyChange);
            continue;
        };

        let chain = tree_t.ancestor_chain(node);
        let sigma_top = tree_t.nodes[*chain.last().unwrap()].frame.sigma;
        let window = Window::around(p.x, p.y, (4.0 * sigma_top).ceil() as usize + 4, w, h);
        let chain_sigmas: Vec<f64> = chain
            .iter()
            .map(|&n| tree_t.nodes[n].frame.sigma)
            .collect();

        // Step 1: coarsest properly-sampled scale for this region.
        let Some(sigma_star) =
            coarsest_proper_scale(img_t, img_t1, &chain_sigmas, Some(window))?
        else {
            track.break_at(t1, BreakReason::TopologyChange);
            continue;
        };
        let start_idx = chain_sigmas
            .iter()
            .position(|&s| s == sigma_star)
            .expect("sigma_star comes from the chain");

        // Steps 2-4: estimate at the coarsest proper scale, then walk down.
        let mut disp = (0.0f64, 0.0f64);
        let mut broke = false;
        for i in (0..=start_idx).rev() {
            let n = &tree_t.nodes[chain[i]];
            let level = n.level;
            let a = tree_t.scale_space.raster(level);
            let b = ss1.raster(level);
            let half = ((2.0 * n.frame.sigma).ceil() as isize).clamp(3, 9);

            if i == start_idx {
                // The persistence margin is right-censored at the top of the
                // schedule (a feature alive at the last level reports the
                // distance travelled so far), so the level's own sigma is a
                // floor on the search neighborhood.
                let margin = stability_margin(&tree_t.scale_space, &n.frame)
                    .unwrap_or(cfg.min_search_radius);
                let radius = margin
                    .max(n.frame.sigma)
                    .max(cfg.min_search_radius)
                    .min(cfg.max_search_radius)
                    .ceil() as isize;
                let d = ssd_search(a, b, n.frame.x, n.frame.y, (0.0, 0.0), radius, half);
                disp = d;
            } else {
                // Unique re-detection near the propagated estimate.
                let pred = (n.frame.x + disp.0, n.frame.y + disp.1);
                let mut found: Vec<(usize, usize)> = Vec::new();
                for &(mx, my) in &maxima1[level] {
                    let d = ((mx as f64 - pred.0).powi(2) + (my as f64 - pred.1).powi(2)).sqrt();
                    if d <= cfg.redetect_radius {
                        found.push((mx, my));
                    }
                }
                if found.len() != 1 {
                    track.break_at(t1, BreakReason::TopologyChange);
                    broke = true;
                    break;
                }
                // Refine the estimate at this level (radius 1 around the
                // propagated displacement).
                let d = ssd_search(a, b, n.frame.x, n.frame.y, disp, 1, half);
                disp = d;
            }
        }
        if broke {
            continue;
        }

        let native = &tree_t.nodes[node].frame;
        let new_x = native.x + disp.0;
        let new_y = native.y + disp.1;

        if let Some(mask) = occlusion {
            let xi = (new_x.round() as isize).clamp(0, w as isize - 1) as usize;
            let yi = (new_y.round() as isize).clamp(0, h as isize - 1) as usize;
            if mask[yi * w + xi] {
                track.break_at(t1, BreakReason::Occlusion);
                continue;
            }
        }

        // Rotation canonized from the gradient field at the new position.
        let mut frame1 = Frame::at(new_x, new_y, native.sigma, native.kind, native.score);
        let theta = canonize_rotation(img_t1, &frame1).unwrap_or(0.0);
        frame1.set_theta(theta);

        track.points.push(TrackPoint {
            t: t1,
            x: new_x,
            y: new_y,
            sigma: native.sigma,
            theta: frame1.theta,
        });
    }

    tracker.time = t1;
    Ok(())
}

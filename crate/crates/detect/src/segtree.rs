use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap};

use imgcore::Raster;

use crate::{DetectError, DetectorKind, Frame, Result};

/// One greedy merge: regions `a` and `b` fused into the new region `into`
/// at 1-based `level`, at boundary-averaged gradient `cost`.
#[derive(Debug, Clone)]
pub struct MergeEvent {
    pub a: usize,
    pub b: usize,
    pub into: usize,
    pub level: usize,
    pub cost: f64,
}

/// Greedy agglomeration dendrogram over single-pixel seeds. Node ids
/// `0..n_pixels` are the pixels themselves; merge nodes are appended.
#[derive(Debug, Clone)]
pub struct SegTree {
    width: usize,
    height: usize,
    merges: Vec<MergeEvent>,
    parent: Vec<Option<usize>>,
    formed_at: Vec<usize>,
    children: Vec<Option<(usize, usize)>>,
}

/// A region picked by the largest-minimum-gap rule, with its gap score.
#[derive(Debug, Clone)]
pub struct StableRegion {
    pub node: usize,
    pub gap: usize,
    pub pixels: Vec<usize>,
}

impl SegTree {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn n_levels(&self) -> usize {
        self.merges.len()
    }

    /// Region id per pixel after the first `level` merges (level 0 is the
    /// all-singleton partition).
    pub fn labels_at(&self, level: usize) -> Vec<usize> {
        let n = self.width * self.height;
        (0..n)
            .map(|p| {
                let mut node = p;
                while let Some(up) = self.parent[node] {
                    if self.formed_at[up] <= level {
                        node = up;
                    } else {
                        break;
                    }
                }
                node
            })
            .collect()
    }

    /// Final partition (all merges applied).
    pub fn final_labels(&self) -> Vec<usize> {
        self.labels_at(self.merges.len())
    }

    fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut pixels = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children[v] {
                None => pixels.push(v),
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        pixels.sort_unstable();
        pixels
    }

    /// Stable regions: for every pixel, walk its chain of merges, score each
    /// region on the chain by the minimum of its own lifetime and its
    /// successor's (in merge steps), and keep the best-scoring region with
    /// gap >= `gap_min`. Regions still alive when merging stopped never get
    /// merged away, so their trailing lifetime is counted from a sentinel
    /// beyond any possible merge index. The returned regions are
    /// deduplicated.
    pub fn stable_regions(&self, gap_min: usize) -> Vec<StableRegion> {
        let n = self.width * self.height;
        let sentinel = 2 * n;
        let mut selected: BTreeMap<usize, usize> = BTreeMap::new(); // node -> gap
        for p in 0..n {
            // Chain of regions containing p with their formation levels.
            let mut chain = vec![(p, 0usize)];
            let mut node = p;
            while let Some(up) = self.parent[node] {
                chain.push((up, self.formed_at[up]));
                node = up;
            }
            let mut lifetimes = Vec::with_capacity(chain.len());
            for (j, &(_, k)) in chain.iter().enumerate() {
                let next = chain.get(j + 1).map(|&(_, k1)| k1).unwrap_or(sentinel);
                lifetimes.push(next - k);
            }
            let mut best: Option<(usize, usize)> = None; // (score, chain idx)
            for j in 0..chain.len() {
                let score = if j + 1 < chain.len() {
                    lifetimes[j].min(lifetimes[j + 1])
                } else {
                    lifetimes[j]
                };
                if score >= gap_min && best.map_or(true, |(s, _)| score >= s) {
                    best = Some((score, j));
                }
            }
            if let Some((score, j)) = best {
                let node = chain[j].0;
                let entry = selected.entry(node).or_insert(score);
                *entry = (*entry).max(score);
            }
        }
        selected
            .into_iter()
            .map(|(node, gap)| StableRegion {
                node,
                gap,
                pixels: self.leaves_under(node),
            })
            .collect()
    }
}

#[derive(Debug)]
struct HeapEntry {
    cost: f64,
    combined_size: usize,
    a: usize,
    b: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed so the BinaryHeap pops the cheapest (then smallest, then
    // lexicographically first) pair.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.combined_size.cmp(&self.combined_size))
            .then(other.a.cmp(&self.a))
            .then(other.b.cmp(&self.b))
    }
}

/// Greedy agglomeration from single-pixel regions, merging the pair with
/// the least boundary-averaged gradient until that minimum reaches
/// `sigma_stop`. Boundary gradient between 4-adjacent pixels is the
/// absolute intensity difference.
pub fn segment_tree(img: &Raster, sigma_stop: f64, _gap_min: usize) -> Result<SegTree> {
    if !(sigma_stop > 0.0) {
        return Err(DetectError::InvalidArgument(
            "sigma_stop must be positive".into(),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let n = w * h;

    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut formed_at: Vec<usize> = vec![0; n];
    let mut children: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut alive: Vec<bool> = vec![true; n];
    // Boundary statistics between live regions: neighbor -> (sum, count).
    let mut adj: Vec<BTreeMap<usize, (f64, usize)>> = vec![BTreeMap::new(); n];

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                let q = p + 1;
                let c = (img.get(x, y) - img.get(x + 1, y)).abs();
                adj[p].insert(q, (c, 1));
                adj[q].insert(p, (c, 1));
            }
            if y + 1 < h {
                let q = p + w;
                let c = (img.get(x, y) - img.get(x, y + 1)).abs();
                adj[p].insert(q, (c, 1));
                adj[q].insert(p, (c, 1));
            }
        }
    }
    for p in 0..n {
        for (&q, &(sum, cnt)) in &adj[p] {
            if q > p {
                heap.push(HeapEntry {
                    cost: sum / cnt as f64,
                    combined_size: 2,
                    a: p,
                    b: q,
                });
            }
        }
    }

    let mut merges = Vec::new();
    let mut last_cost = 0.0f64;
    while let Some(entry) = heap.pop() {
        let (a, b) = (entry.a, entry.b);
        if !alive[a] || !alive[b] {
            continue;
        }
        if entry.cost >= sigma_stop {
            break;
        }
        // Greedy min-cost merges never decrease: every new pair cost is a
        // weighted average of costs that were already at least the minimum.
        debug_assert!(entry.cost >= last_cost - 1e-12);
        last_cost = entry.cost;

        let c = parent.len();
        parent.push(None);
        formed_at.push(merges.len() + 1);
        children.push(Some((a, b)));
        size.push(size[a] + size[b]);
        alive.push(true);
        alive[a] = false;
        alive[b] = false;
        parent[a] = Some(c);
        parent[b] = Some(c);
        merges.push(MergeEvent {
            a,
            b,
            into: c,
            level: merges.len() + 1,
            cost: entry.cost,
        });

        // Fuse adjacency of a and b into c.
        let mut merged: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        let adj_a = std::mem::take(&mut adj[a]);
        let adj_b = std::mem::take(&mut adj[b]);
        for (t, (s, cnt)) in adj_a.into_iter().chain(adj_b) {
            if t == a || t == b {
                continue;
            }
            let e = merged.entry(t).or_insert((0.0, 0));
            e.0 += s;
            e.1 += cnt;
        }
        adj.push(BTreeMap::new());
        for (t, (s, cnt)) in merged {
            adj[t].remove(&a);
            adj[t].remove(&b);
            adj[t].insert(c, (s, cnt));
            adj[c].insert(t, (s, cnt));
            let (lo, hi) = if t < c { (t, c) } else { (c, t) };
            heap.push(HeapEntry {
                cost: s / cnt as f64,
                combined_size: size[t] + size[c],
                a: lo,
                b: hi,
            });
        }
    }

    Ok(SegTree {
        width: w,
        height: h,
        merges,
        parent,
        formed_at,
        children,
    })
}

/// One frame per region of the partition at `level`: the region centroid,
/// with sigma the radius of the equal-area disk.
pub fn superpixel_frames(tree: &SegTree, level: usize) -> Result<Vec<Frame>> {
    if level > tree.n_levels() {
        return Err(DetectError::InvalidArgument(format!(
            "level {level} exceeds {} merges",
            tree.n_levels()
        )));
    }
    let labels = tree.labels_at(level);
    let w = tree.width();
    let mut acc: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for (p, &r) in labels.iter().enumerate() {
        let e = acc.entry(r).or_insert((0.0, 0.0, 0));
        e.0 += (p % w) as f64;
        e.1 += (p / w) as f64;
        e.2 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(_, (sx, sy, cnt))| {
            let area = cnt as f64;
            Frame::at(
                sx / area,
                sy / area,
                (area / std::f64::consts::PI).sqrt(),
                DetectorKind::SuperpixelCentroid,
                area,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_tone_image_gives_two_regions() {
        let img = Raster::from_fn(16, 8, |x, _| if x < 8 { 0.0 } else { 1.0 }).unwrap();
        let tree = segment_tree(&img, 0.5, 2).unwrap();
        let labels = tree.final_labels();
        let left = labels[0];
        let right = labels[15];
        assert_ne!(left, right);
        for y in 0..8 {
            for x in 0..16 {
                let want = if x < 8 { left } else { right };
                assert_eq!(labels[y * 16 + x], want, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn constant_image_is_one_region() {
        let img = Raster::constant(9, 7, 0.3).unwrap();
        let tree = segment_tree(&img, 0.1, 2).unwrap();
        let labels = tree.final_labels();
        assert!(labels.iter().all(|&l| l == labels[0]));
    }

    #[test]
    fn merge_costs_non_decreasing() {
        let img = Raster::from_fn(12, 12, |x, y| ((x * 31 + y * 17) % 7) as f64 / 7.0).unwrap();
        let tree = segment_tree(&img, 10.0, 2).unwrap();
        let mut prev = 0.0;
        for m in tree.merges() {
            assert!(m.cost >= prev - 1e-12, "cost dropped at level {}", m.level);
            prev = m.cost;
        }
    }

    #[test]
    fn four_quadrants_are_stable_regions() {
        // Enumerating the merge order: all zero-cost merges inside the
        // quadrants happen first, then the process stops before any
        // cross-quadrant merge, so each pixel's longest-lived region is its
        // quadrant.
        let img = Raster::from_fn(16, 16, |x, y| match (x < 8, y < 8) {
            (true, true) => 0.1,
            (false, true) => 0.4,
            (true, false) => 0.7,
            (false, false) => 1.0,
        })
        .unwrap();
        let tree = segment_tree(&img, 0.2, 2).unwrap();
        let stable = tree.stable_regions(4);
        assert_eq!(stable.len(), 4, "stable regions: {}", stable.len());
        for region in &stable {
            assert_eq!(region.pixels.len(), 64);
            let qx = region.pixels[0] % 16 < 8;
            let qy = region.pixels[0] / 16 < 8;
            for &p in &region.pixels {
                assert_eq!(p % 16 < 8, qx);
                assert_eq!(p / 16 < 8, qy);
            }
        }
    }

    #[test]
    fn centroid_of_square_region() {
        let img = Raster::from_fn(10, 10, |_, _| 0.5).unwrap();
        let tree = segment_tree(&img, 0.1, 2).unwrap();
        let frames = superpixel_frames(&tree, tree.n_levels()).unwrap();
        assert_eq!(frames.len(), 1);
        assert!((frames[0].x - 4.5).abs() < 1e-12);
        assert!((frames[0].y - 4.5).abs() < 1e-12);
        assert!((frames[0].sigma - (100.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn centroids_translate_with_the_image() {
        let base = Raster::from_fn(24, 24, |x, y| {
            if (6..12).contains(&x) && (8..14).contains(&y) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let shifted = Raster::from_fn(24, 24, |x, y| {
            if (9..15).contains(&x) && (10..16).contains(&y) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let ta = segment_tree(&base, 0.5, 2).unwrap();
        let tb = segment_tree(&shifted, 0.5, 2).unwrap();
        let fa = superpixel_frames(&ta, ta.n_levels()).unwrap();
        let fb = superpixel_frames(&tb, tb.n_levels()).unwrap();
        // Bright-region centroids differ by exactly the integer shift.
        let bright = |fs: &[Frame]| -> (f64, f64) {
            let f = fs.iter().min_by_key(|f| f.score as usize).unwrap();
            (f.x, f.y)
        };
        let (ax, ay) = bright(&fa);
        let (bx, by) = bright(&fb);
        assert!((bx - ax - 3.0).abs() < 1e-9, "{ax} -> {bx}");
        assert!((by - ay - 2.0).abs() < 1e-9, "{ay} -> {by}");
    }

    #[test]
    fn l_shaped_region_centroid_matches_decomposition() {
        // L-shape = 6x3 bar plus 3x3 foot; centroid is the area-weighted
        // combination of the two rectangle centroids.
        let in_l = |x: usize, y: usize| (y < 3 && x < 6) || ((3..6).contains(&y) && x < 3);
        let img = Raster::from_fn(12, 12, |x, y| if in_l(x, y) { 1.0 } else { 0.0 }).unwrap();
        let tree = segment_tree(&img, 0.5, 2).unwrap();
        let frames = superpixel_frames(&tree, tree.n_levels()).unwrap();
        let lf = frames
            .iter()
            .min_by(|a, b| a.score.partial_cmp(&b.score).unwrap())
            .unwrap();
        let bar = (18.0, 2.5, 1.0); // area, cx, cy
        let foot = (9.0, 1.0, 4.0);
        let area = bar.0 + foot.0;
        let cx = (bar.0 * bar.1 + foot.0 * foot.1) / area;
        let cy = (bar.0 * bar.2 + foot.0 * foot.2) / area;
        assert_eq!(lf.score as usize, 27);
        assert!((lf.x - cx).abs() < 1e-9, "{} vs {cx}", lf.x);
        assert!((lf.y - cy).abs() < 1e-9, "{} vs {cy}", lf.y);
    }
}

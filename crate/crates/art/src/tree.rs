use imgcore::{gaussian_blur, Raster};
use serde::Serialize;

use crate::classify::{greater, CriticalKind, RING};
use crate::Result;

/// A node of an attributed Reeb tree. `ordinal` is the rank of the node's
/// critical value among all nodes of the same tree (the virtual boundary
/// minimum always ranks 0). Positions and raw values are construction
/// metadata and excluded from equality.
#[derive(Debug, Clone, Serialize)]
pub struct ArtNode {
    pub id: usize,
    pub kind: CriticalKind,
    pub ordinal: usize,
    #[serde(skip)]
    pub value: f64,
    #[serde(skip)]
    pub pixel: Option<(usize, usize)>,
}

/// Attributed Reeb tree: connected, acyclic, maxima and minima of degree 1,
/// saddles of degree 3.
#[derive(Debug, Clone, Serialize)]
pub struct Art {
    pub nodes: Vec<ArtNode>,
    pub edges: Vec<(usize, usize)>,
    /// Canonical string encoding; two trees are equal iff these match.
    pub encoding: String,
}

impl Art {
    pub fn n_maxima(&self) -> usize {
        self.count(CriticalKind::Max)
    }

    pub fn n_saddles(&self) -> usize {
        self.count(CriticalKind::Saddle)
    }

    pub fn n_minima(&self) -> usize {
        self.count(CriticalKind::Min)
    }

    fn count(&self, kind: CriticalKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// `n_max - n_saddle + n_min`, which is 2 on every valid tree.
    pub fn euler_count(&self) -> isize {
        self.n_maxima() as isize - self.n_saddles() as isize + self.n_minima() as isize
    }

    pub fn degree(&self, id: usize) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| *a == id || *b == id)
            .count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.nodes,
            "edges": self.edges,
            "encoding": self.encoding,
        })
    }

    /// Checks the structural invariants: connected acyclic graph, extrema of
    /// degree 1, saddles of degree 3, and the counting relation
    /// `n_max - n_saddle + n_min = 2`.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.nodes.len();
        if self.edges.len() + 1 != n {
            return Err(format!("{} edges for {} nodes", self.edges.len(), n));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        // Connectivity (with |E| = |V| - 1 this also implies acyclicity).
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("disconnected tree".into());
        }
        for node in &self.nodes {
            let deg = adj[node.id].len();
            let want = match node.kind {
                CriticalKind::Saddle => 3,
                _ => 1,
            };
            if deg != want {
                return Err(format!(
                    "node {} ({:?}) has degree {deg}, expected {want}",
                    node.id, node.kind
                ));
            }
        }
        if self.euler_count() != 2 {
            return Err(format!("euler count {}", self.euler_count()));
        }
        Ok(())
    }
}

/// Rooted-tree isomorphism respecting node kinds and ordinal attributes.
pub fn art_equal(a: &Art, b: &Art) -> bool {
    a.encoding == b.encoding
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        self.parent[rb] = ra;
        ra
    }
}

/// Builds the attributed Reeb tree of `img` smoothed at `sigma`.
///
/// Superlevel-set sweep in descending value order with union-find:
/// components are born at local maxima and fused at merge saddles; a merge
/// of m > 2 components is split into m-1 simple saddles so every saddle has
/// degree 3. The virtual boundary minimum closes the domain at the bottom.
/// Plateaus are broken by pixel index before the sweep.
pub fn build_art(img: &Raster, sigma: f64) -> Result<Art> {
    let smooth = gaussian_blur(img, sigma)?;
    let (w, h) = (smooth.width(), smooth.height());
    let n = w * h;

    let mut order: Vec<usize> = (0..n).collect();
    // Descending by value, plateaus broken so the lower index comes first.
    order.sort_by(|&a, &b| {
        smooth.data()[b]
            .partial_cmp(&smooth.data()[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut uf = UnionFind::new(n);
    let mut processed = vec![false; n];
    // Representative tree node of each component, indexed by UF root.
    let mut rep_node: Vec<Option<usize>> = vec![None; n];

    let mut nodes: Vec<ArtNode> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    for &p in &order {
        let (px, py) = (p % w, p / w);
        let pv = smooth.data()[p];
        // Distinct components already present among processed neighbors.
        let mut roots: Vec<usize> = Vec::new();
        for (dx, dy) in RING {
            let nx = px as isize + dx;
            let ny = py as isize + dy;
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let q = ny as usize * w + nx as usize;
            if processed[q] {
                let r = uf.find(q);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        }
        processed[p] = true;
        match roots.len() {
            0 => {
                // Born: local maximum.
                let id = nodes.len();
                nodes.push(ArtNode {
                    id,
                    kind: CriticalKind::Max,
                    ordinal: 0,
                    value: pv,
                    pixel: Some((px, py)),
                });
                let r = uf.find(p);
                rep_node[r] = Some(id);
            }
            1 => {
                let r = uf.union(roots[0], p);
                let keep = rep_node[roots[0]];
                rep_node[r] = keep;
            }
            _ => {
                // Merge saddle. Order the incoming components by the value
                // of their representative node (highest first) so chained
                // splits of multi-way merges are reproducible.
                let mut comps: Vec<(usize, usize)> = roots
                    .iter()
                    .map(|&r| (rep_node[r].expect("live component has a node"), r))
                    .collect();
                comps.sort_by(|a, b| {
                    let na = &nodes[a.0];
                    let nb = &nodes[b.0];
                    nb.value
                        .partial_cmp(&na.value)
                        .unwrap()
                        .then(a.0.cmp(&b.0))
                });
                let mut current_node = comps[0].0;
                let mut current_root = comps[0].1;
                for &(other_node, other_root) in &comps[1..] {
                    let sid = nodes.len();
                    nodes.push(ArtNode {
                        id: sid,
                        kind: CriticalKind::Saddle,
                        ordinal: 0,
                        value: pv,
                        pixel: Some((px, py)),
                    });
                    edges.push((current_node, sid));
                    edges.push((other_node, sid));
                    current_root = uf.union(current_root, other_root);
                    current_node = sid;
                }
                current_root = uf.union(current_root, p);
                rep_node[current_root] = Some(current_node);
            }
        }
    }

    // One component must remain on a connected grid; close it with the
    // virtual boundary minimum.
    let final_root = uf.find(order[0]);
    let top = rep_node[final_root].expect("non-empty image yields a component");
    let vmin = nodes.len();
    nodes.push(ArtNode {
        id: vmin,
        kind: CriticalKind::Min,
        ordinal: 0,
        value: f64::NEG_INFINITY,
        pixel: None,
    });
    edges.push((top, vmin));

    assign_ordinals(&mut nodes);
    let encoding = encode(&nodes, &edges, vmin);

    let art = Art {
        nodes,
        edges,
        encoding,
    };
    debug_assert_eq!(art.euler_count(), 2);
    Ok(art)
}

/// Ordinal = rank by (value, creation order); the virtual minimum is 0.
fn assign_ordinals(nodes: &mut [ArtNode]) {
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| {
        nodes[a]
            .value
            .partial_cmp(&nodes[b].value)
            .unwrap()
            .then(a.cmp(&b))
    });
    for (rank, &i) in idx.iter().enumerate() {
        nodes[i].ordinal = rank;
    }
}

/// Canonical encoding of the tree rooted at the virtual minimum. Children
/// are sorted by (kind, ordinal, subtree encoding) so the string is a
/// complete isomorphism invariant for attributed rooted trees.
fn encode(nodes: &[ArtNode], edges: &[(usize, usize)], root: usize) -> String {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    fn rec(nodes: &[ArtNode], adj: &[Vec<usize>], at: usize, from: Option<usize>) -> String {
        let mut children: Vec<String> = adj[at]
            .iter()
            .filter(|&&c| Some(c) != from)
            .map(|&c| rec(nodes, adj, c, Some(at)))
            .collect();
        children.sort();
        let kind = match nodes[at].kind {
            CriticalKind::Max => 'M',
            CriticalKind::Min => 'm',
            CriticalKind::Saddle => 's',
        };
        format!("({}{}{})", kind, nodes[at].ordinal, children.concat())
    }
    rec(nodes, &adj, root, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_field(centers: &[(f64, f64, f64)], w: usize, h: usize) -> Raster {
        Raster::from_fn(w, h, |x, y| {
            centers
                .iter()
                .map(|&(cx, cy, a)| {
                    let dx = x as f64 - cx;
                    let dy = y as f64 - cy;
                    a * (-(dx * dx + dy * dy) / 24.0).exp()
                })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn single_bump_is_max_to_virtual_min() {
        let img = bump_field(&[(16.0, 16.0, 1.0)], 33, 33);
        let art = build_art(&img, 0.5).unwrap();
        assert_eq!(art.n_maxima(), 1);
        assert_eq!(art.n_saddles(), 0);
        assert_eq!(art.n_minima(), 1);
        assert_eq!(art.edges.len(), 1);
        assert_eq!(art.euler_count(), 2);
    }

    #[test]
    fn two_bumps_merge_at_saddle() {
        let img = bump_field(&[(12.0, 16.0, 1.0), (26.0, 16.0, 0.9)], 39, 33);
        let art = build_art(&img, 0.5).unwrap();
        assert_eq!(art.n_maxima(), 2);
        assert_eq!(art.n_saddles(), 1);
        assert_eq!(art.n_minima(), 1);
        assert_eq!(art.euler_count(), 2);
        // The saddle carries degree 3, extrema degree 1.
        for node in &art.nodes {
            let want = match node.kind {
                CriticalKind::Saddle => 3,
                _ => 1,
            };
            assert_eq!(art.degree(node.id), want, "node {}", node.id);
        }
    }

    #[test]
    fn three_bumps_in_a_row() {
        let img = bump_field(
            &[(10.0, 12.0, 1.0), (24.0, 12.0, 0.95), (38.0, 12.0, 0.9)],
            49,
            25,
        );
        let art = build_art(&img, 0.5).unwrap();
        assert_eq!(art.n_maxima(), 3);
        assert_eq!(art.n_saddles(), 2);
        assert_eq!(art.n_minima(), 1);
        assert_eq!(art.euler_count(), 2);
    }

    #[test]
    fn equal_to_itself_and_not_to_different_structure() {
        let two = bump_field(&[(12.0, 16.0, 1.0), (26.0, 16.0, 0.9)], 39, 33);
        let three = bump_field(
            &[(10.0, 12.0, 1.0), (24.0, 12.0, 0.95), (38.0, 12.0, 0.9)],
            49,
            25,
        );
        let a = build_art(&two, 0.5).unwrap();
        let b = build_art(&three, 0.5).unwrap();
        assert!(art_equal(&a, &a));
        assert!(!art_equal(&a, &b));
    }

    #[test]
    fn invariant_under_rotation_and_contrast() {
        let img = bump_field(&[(12.0, 14.0, 1.0), (24.0, 20.0, 0.8)], 37, 37);
        let rotated = Raster::from_fn(37, 37, |x, y| img.get(y, 36 - x)).unwrap();
        // Strictly increasing remap.
        let remapped =
            Raster::from_fn(37, 37, |x, y| {
                let v = rotated.get(x, y);
                0.1 + 0.8 * (v * v * v + 0.3 * v)
            })
            .unwrap();
        let a = build_art(&img, 0.5).unwrap();
        let b = build_art(&remapped, 0.5).unwrap();
        assert!(art_equal(&a, &b));
    }

    #[test]
    fn json_shape() {
        let img = bump_field(&[(16.0, 16.0, 1.0)], 33, 33);
        let art = build_art(&img, 0.5).unwrap();
        let js = art.to_json();
        assert!(js["nodes"].as_array().unwrap().len() == 2);
        assert!(js["encoding"].as_str().unwrap().starts_with("(m0"));
    }
}

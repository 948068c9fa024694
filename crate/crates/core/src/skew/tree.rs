use serde::Serialize;

/// Relative slack used when comparing skews that should be equal.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewNode {
    /// Half-open bin range `[x, y)`.
    pub bins: (usize, usize),
    /// Half-open code range covered by `bins`.
    pub range: (u64, u64),
    pub skew: f64,
    pub children: Option<(usize, usize)>,
    pub depth: usize,
}

/// Balanced binary tree over contiguous groups of histogram bins. Every node
/// stores the query skew of its range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewTree {
    nodes: Vec<SkewNode>,
    root: usize,
    leaves: usize,
}

impl SkewTree {
    /// `boundaries` are the histogram bin boundaries, `leaf_edges` the bin
    /// indices at which leaves start (plus the final bin count), and `skew`
    /// computes the skew of a half-open bin range.
    pub fn build(boundaries: &[u64], leaf_edges: &[usize], skew: impl Fn(usize, usize) -> f64) -> Self {
        assert!(leaf_edges.len() >= 2, "skew tree needs at least one leaf");
        let mut nodes = Vec::with_capacity(2 * leaf_edges.len());
        let root = build_rec(&mut nodes, boundaries, leaf_edges, 0, leaf_edges.len() - 1, 0, &skew);
        Self { nodes, root, leaves: leaf_edges.len() - 1 }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &SkewNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[SkewNode] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves
    }

    /// Minimum combined skew achievable by a covering set of each subtree.
    pub fn annotations(&self) -> Vec<f64> {
        let mut ann = vec![0.0; self.nodes.len()];
        // Children are pushed before their parent, so index order is bottom-up.
        for (i, n) in self.nodes.iter().enumerate() {
            ann[i] = match n.children {
                None => n.skew,
                Some((l, r)) => n.skew.min(ann[l] + ann[r]),
            };
        }
        ann
    }
}

fn build_rec(
    nodes: &mut Vec<SkewNode>,
    boundaries: &[u64],
    edges: &[usize],
    lo: usize,
    hi: usize,
    depth: usize,
    skew: &impl Fn(usize, usize) -> f64,
) -> usize {
    let bins = (edges[lo], edges[hi]);
    let children = if hi - lo >= 2 {
        let mid = (lo + hi).div_ceil(2);
        let l = build_rec(nodes, boundaries, edges, lo, mid, depth + 1, skew);
        let r = build_rec(nodes, boundaries, edges, mid, hi, depth + 1, skew);
        Some((l, r))
    } else {
        None
    };
    nodes.push(SkewNode {
        bins,
        range: (boundaries[bins.0], boundaries[bins.1]),
        skew: skew(bins.0, bins.1),
        children,
        depth,
    });
    nodes.len() - 1
}

/// Leaf starts for `n_bins` bins: one bin per leaf when bins are atomic,
/// otherwise two bins per leaf (a trailing odd bin joins the last leaf).
pub fn leaf_edges(n_bins: usize, atomic: bool) -> Vec<usize> {
    if atomic || n_bins < 4 {
        return (0..=n_bins).collect();
    }
    let mut edges: Vec<usize> = (0..n_bins).step_by(2).collect();
    if n_bins % 2 == 1 {
        edges.pop();
    }
    edges.push(n_bins);
    edges
}

/// One entry of a covering set, in bin and code coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverSegment {
    pub bins: (usize, usize),
    pub range: (u64, u64),
    pub skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cover {
    /// Selected node ids, ordered by range.
    pub nodes: Vec<usize>,
    pub segments: Vec<CoverSegment>,
    pub skew: f64,
}

impl Cover {
    /// Internal boundaries between consecutive segments.
    pub fn split_values(&self) -> Vec<u64> {
        split_values(&self.segments)
    }
}

pub fn split_values(segments: &[CoverSegment]) -> Vec<u64> {
    segments.iter().skip(1).map(|s| s.range.0).collect()
}

/// Minimum-skew covering set by a bottom-up annotation pass followed by a
/// top-down selection pass. When a node ties with its best descendant cover,
/// the node wins.
pub fn optimal_covering_set(tree: &SkewTree) -> Cover {
    let ann = tree.annotations();
    let mut nodes = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(i) = stack.pop() {
        let n = tree.node(i);
        match n.children {
            Some((l, r)) if n.skew > ann[i] * (1.0 + TIE_TOL) + 1e-12 => {
                stack.push(r);
                stack.push(l);
            }
            _ => nodes.push(i),
        }
    }
    let segments: Vec<CoverSegment> = nodes
        .iter()
        .map(|&i| {
            let n = tree.node(i);
            CoverSegment { bins: n.bins, range: n.range, skew: n.skew }
        })
        .collect();
    let skew = segments.iter().map(|s| s.skew).sum();
    Cover { nodes, segments, skew }
}

/// One ordered pass that merges a segment into its left neighbour when the
/// skew of the union is at most `factor` times the sum of the two.
pub fn merge_covering_nodes(
    segments: &[CoverSegment],
    skew: impl Fn(usize, usize) -> f64,
    factor: f64,
) -> Vec<CoverSegment> {
    let mut out: Vec<CoverSegment> = Vec::with_capacity(segments.len());
    let mut iter = segments.iter().copied();
    let Some(mut cur) = iter.next() else { return out };
    for next in iter {
        let combined = skew(cur.bins.0, next.bins.1);
        let limit = factor * (cur.skew + next.skew);
        if combined <= limit * (1.0 + TIE_TOL) + 1e-12 {
            cur = CoverSegment { bins: (cur.bins.0, next.bins.1), range: (cur.range.0, next.range.1), skew: combined };
        } else {
            out.push(cur);
            cur = next;
        }
    }
    out.push(cur);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_boundaries(n: usize, width: u64) -> Vec<u64> {
        (0..=n as u64).map(|i| i * width).collect()
    }

    #[test]
    fn equal_width_histogram_gets_half_as_many_leaves() {
        assert_eq!(leaf_edges(128, false).len() - 1, 64);
        assert_eq!(leaf_edges(10, true).len() - 1, 10);
        assert_eq!(*leaf_edges(7, false).last().unwrap(), 7);
    }

    #[test]
    fn tree_ranges_nest() {
        let b = uniform_boundaries(10, 3);
        let t = SkewTree::build(&b, &leaf_edges(10, true), |x, y| (y - x) as f64);
        assert_eq!(t.num_leaves(), 10);
        let root = t.node(t.root());
        assert_eq!(root.range, (0, 30));
        for n in t.nodes() {
            if let Some((l, r)) = n.children {
                assert_eq!(t.node(l).bins.0, n.bins.0);
                assert_eq!(t.node(l).bins.1, t.node(r).bins.0);
                assert_eq!(t.node(r).bins.1, n.bins.1);
            }
        }
    }

    #[test]
    fn zero_skews_select_the_root() {
        let b = uniform_boundaries(16, 1);
        let t = SkewTree::build(&b, &leaf_edges(16, true), |_, _| 0.0);
        let c = optimal_covering_set(&t);
        assert_eq!(c.nodes, vec![t.root()]);
        assert!(c.split_values().is_empty());
    }

    #[test]
    fn zero_skews_merge_everything() {
        let segs: Vec<CoverSegment> = (0..4)
            .map(|i| CoverSegment { bins: (i, i + 1), range: (i as u64, i as u64 + 1), skew: 0.0 })
            .collect();
        let merged = merge_covering_nodes(&segs, |_, _| 0.0, 1.1);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].bins, (0, 4));
    }

    #[test]
    fn superadditive_skews_never_merge_at_factor_one() {
        let segs: Vec<CoverSegment> = (0..4)
            .map(|i| CoverSegment { bins: (i, i + 1), range: (i as u64, i as u64 + 1), skew: 1.0 })
            .collect();
        let merged = merge_covering_nodes(&segs, |x, y| 3.0 * (y - x) as f64, 1.0);
        assert_eq!(merged, segs);
    }
}

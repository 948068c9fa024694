//! Grid Tree: a space-partitioning decision tree whose leaves are regions of
//! low intra-region query skew.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skew::{select_split, NodeContext, SplitDecision, SplitParams};
use crate::workload::{Dataset, Query, Workload};

/// A leaf of the Grid Tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub region_id: usize,
    /// Inclusive per-dimension code ranges.
    pub bounds: Vec<(u64, u64)>,
    pub point_count: usize,
    pub query_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridTreeNode {
    /// Child `j` covers `[values[j-1], values[j])` on `split_dim`, with the
    /// first and last child open towards the parent bounds.
    Internal { split_dim: usize, values: Vec<u64>, children: Vec<GridTreeNode> },
    Leaf(Region),
}

impl GridTreeNode {
    #[inline]
    fn child_index(values: &[u64], v: u64) -> usize {
        values.partition_point(|&s| s <= v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridTreeParams {
    pub split: SplitParams,
    pub max_depth: usize,
    /// Rows sampled per node to detect dimensions with few distinct values.
    pub unique_sample: usize,
}

impl Default for GridTreeParams {
    fn default() -> Self {
        Self { split: SplitParams::default(), max_depth: 12, unique_sample: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridTree {
    root: GridTreeNode,
    regions: Vec<Region>,
    depth: usize,
    node_count: usize,
}

impl GridTree {
    /// A tree with one region covering the whole data space.
    pub fn single_region(ds: &Dataset, query_count: usize) -> Self {
        let region = Region { region_id: 0, bounds: ds.full_bounds(), point_count: ds.n(), query_count };
        Self { root: GridTreeNode::Leaf(region.clone()), regions: vec![region], depth: 0, node_count: 1 }
    }

    /// Greedy top-down construction. The workload must be clustered into
    /// query types.
    pub fn build(ds: &Dataset, w: &Workload, params: &GridTreeParams) -> Result<Self> {
        if ds.n() == 0 {
            return Err(Error::InvalidArgument("cannot build a Grid Tree over an empty dataset".into()));
        }
        if !w.is_clustered() {
            return Err(Error::InvalidArgument("workload must be clustered into types".into()));
        }
        let types: Vec<Vec<&Query>> =
            w.types.iter().map(|t| t.members.iter().map(|&m| &w.queries[m]).collect()).collect();
        let mut b = Builder { ds, params, total_points: ds.n(), total_queries: w.len(), regions: Vec::new(), nodes: 0, depth: 0 };
        let rows: Vec<u32> = (0..ds.n() as u32).collect();
        let root = b.build(rows, &types, ds.full_bounds(), 0)?;
        Ok(Self { root, regions: b.regions, depth: b.depth, node_count: b.nodes })
    }

    pub fn root(&self) -> &GridTreeNode {
        &self.root
    }

    /// Leaves in depth-first order; `regions()[i].region_id == i`.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn region_of_point(&self, point: &[u64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                GridTreeNode::Leaf(r) => return r.region_id,
                GridTreeNode::Internal { split_dim, values, children } => {
                    node = &children[GridTreeNode::child_index(values, point[*split_dim])];
                }
            }
        }
    }

    pub fn region_of_row(&self, ds: &Dataset, row: usize) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                GridTreeNode::Leaf(r) => return r.region_id,
                GridTreeNode::Internal { split_dim, values, children } => {
                    node = &children[GridTreeNode::child_index(values, ds.value(row, *split_dim))];
                }
            }
        }
    }

    /// Region id of every row.
    pub fn assign(&self, ds: &Dataset) -> Vec<u32> {
        (0..ds.n()).map(|r| self.region_of_row(ds, r) as u32).collect()
    }

    /// Regions whose bounds overlap `q`, with the bounds clipped to `q`.
    pub fn intersecting_regions(&self, q: &Query) -> Vec<(usize, Vec<(u64, u64)>)> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                GridTreeNode::Leaf(r) => {
                    if q.intersects(&r.bounds) {
                        let clipped = r
                            .bounds
                            .iter()
                            .enumerate()
                            .map(|(d, &b)| q.interval_within(d, b).unwrap_or(b))
                            .collect();
                        out.push((r.region_id, clipped));
                    }
                }
                GridTreeNode::Internal { split_dim, values, children } => {
                    let (first, last) = match q.predicate(*split_dim) {
                        Some(p) => (GridTreeNode::child_index(values, p.lo), GridTreeNode::child_index(values, p.hi)),
                        None => (0, children.len() - 1),
                    };
                    stack.extend(children[first..=last].iter().rev());
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.root)?)
    }

    /// Serialized size, used for index-size accounting.
    pub fn size_bytes(&self) -> usize {
        self.to_json().map_or(0, |s| s.len())
    }
}

struct Builder<'a> {
    ds: &'a Dataset,
    params: &'a GridTreeParams,
    total_points: usize,
    total_queries: usize,
    regions: Vec<Region>,
    nodes: usize,
    depth: usize,
}

impl Builder<'_> {
    fn build(&mut self, rows: Vec<u32>, types: &[Vec<&Query>], bounds: Vec<(u64, u64)>, depth: usize) -> Result<GridTreeNode> {
        self.nodes += 1;
        self.depth = self.depth.max(depth);
        let types: Vec<Vec<&Query>> =
            types.iter().map(|t| t.iter().copied().filter(|q| q.intersects(&bounds)).collect()).collect();
        let query_count: usize = types.iter().map(Vec::len).sum();

        let decision = if depth >= self.params.max_depth {
            None
        } else {
            let unique = self.unique_values(&rows, &types, &bounds);
            let ctx = NodeContext {
                bounds: &bounds,
                types: &types,
                unique: &unique,
                points: rows.len(),
                total_points: self.total_points,
                total_queries: self.total_queries,
            };
            match select_split(&ctx, &self.params.split)? {
                SplitDecision::Split(c) => self.drop_empty_children(&rows, c.dim, c.values),
                SplitDecision::Leaf(_) => None,
            }
        };

        let Some((dim, values, parts)) = decision else {
            let region = Region { region_id: self.regions.len(), bounds, point_count: rows.len(), query_count };
            self.regions.push(region.clone());
            return Ok(GridTreeNode::Leaf(region));
        };

        let mut children = Vec::with_capacity(parts.len());
        for (j, part) in parts.into_iter().enumerate() {
            let mut b = bounds.clone();
            if j > 0 {
                b[dim].0 = values[j - 1];
            }
            if j < values.len() {
                b[dim].1 = values[j] - 1;
            }
            children.push(self.build(part, &types, b, depth + 1)?);
        }
        Ok(GridTreeNode::Internal { split_dim: dim, values, children })
    }

    /// Partitions `rows` by `values` on `dim`, first removing split values
    /// that bound a child without points, so empty children merge into a
    /// neighbour. `None` if fewer than two children keep points.
    #[allow(clippy::type_complexity)]
    fn drop_empty_children(&self, rows: &[u32], dim: usize, values: Vec<u64>) -> Option<(usize, Vec<u64>, Vec<Vec<u32>>)> {
        let col = self.ds.column(dim);
        let mut counts = vec![0usize; values.len() + 1];
        for &r in rows {
            counts[GridTreeNode::child_index(&values, col[r as usize])] += 1;
        }
        let kept: Vec<u64> =
            (1..counts.len()).filter(|&j| counts[j] > 0 && counts[..j].iter().any(|&c| c > 0)).map(|j| values[j - 1]).collect();
        if kept.is_empty() {
            return None;
        }
        let mut parts: Vec<Vec<u32>> = vec![Vec::new(); kept.len() + 1];
        for &r in rows {
            parts[GridTreeNode::child_index(&kept, col[r as usize])].push(r);
        }
        Some((dim, kept, parts))
    }

    /// Sorted distinct values of the node's points on each filtered dim, kept
    /// only when there are fewer than the histogram bin count.
    fn unique_values(&self, rows: &[u32], types: &[Vec<&Query>], bounds: &[(u64, u64)]) -> Vec<Option<Vec<u64>>> {
        let limit = self.params.split.n_bins;
        let step = (rows.len() / self.params.unique_sample.max(1)).max(1);
        (0..bounds.len())
            .map(|dim| {
                let filtered = types.iter().flatten().any(|q| q.predicate(dim).is_some());
                if !filtered || rows.is_empty() || bounds[dim].1 - bounds[dim].0 < limit as u64 {
                    return None;
                }
                let col = self.ds.column(dim);
                let mut seen = BTreeSet::new();
                for &r in rows.iter().step_by(step) {
                    seen.insert(col[r as usize]);
                    if seen.len() >= limit {
                        return None;
                    }
                }
                Some(seen.into_iter().collect())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::cluster_query_types;

    fn grid(n: u64) -> Dataset {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            for j in 0..n {
                a.push(i);
                b.push(j);
            }
        }
        Dataset::from_columns(vec![a, b]).unwrap()
    }

    fn manual_tree() -> GridTree {
        let r = |id, lo, hi| Region { region_id: id, bounds: vec![(lo, hi), (0, 9)], point_count: 0, query_count: 0 };
        let root = GridTreeNode::Internal {
            split_dim: 0,
            values: vec![4, 7],
            children: vec![GridTreeNode::Leaf(r(0, 0, 3)), GridTreeNode::Leaf(r(1, 4, 6)), GridTreeNode::Leaf(r(2, 7, 9))],
        };
        GridTree { root, regions: vec![r(0, 0, 3), r(1, 4, 6), r(2, 7, 9)], depth: 1, node_count: 4 }
    }

    #[test]
    fn split_value_belongs_to_the_right_child() {
        let t = manual_tree();
        assert_eq!(t.region_of_point(&[4, 0]), 1);
        assert_eq!(t.region_of_point(&[3, 0]), 0);
        assert_eq!(t.region_of_point(&[9, 0]), 2);
    }

    #[test]
    fn routing_follows_the_split_dim() {
        let t = manual_tree();
        let q = Query::from_ranges(&[(0, 5, 6)]).unwrap();
        assert_eq!(t.intersecting_regions(&q).iter().map(|r| r.0).collect::<Vec<_>>(), vec![1]);
        let q = Query::from_ranges(&[(1, 5, 6)]).unwrap();
        assert_eq!(t.intersecting_regions(&q).len(), 3);
        let q = Query::from_ranges(&[(0, 2, 8)]).unwrap();
        let got = t.intersecting_regions(&q);
        assert_eq!(got.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(got[0].1[0], (2, 3));
        assert_eq!(got[2].1[0], (7, 8));
    }

    #[test]
    fn uniform_workload_gives_a_single_region() {
        let ds = grid(64);
        let qs = (0..64u64).map(|i| Query::from_ranges(&[(0, i, i), (1, 0, 63)]).unwrap()).collect();
        let w = cluster_query_types(&Workload::new(qs), &ds);
        let t = GridTree::build(&ds, &w, &GridTreeParams::default()).unwrap();
        assert_eq!(t.num_regions(), 1);
        assert_eq!(t.regions()[0].point_count, ds.n());
    }

    #[test]
    fn json_has_split_and_leaf_fields() {
        let s = manual_tree().to_json().unwrap();
        assert!(s.contains("\"split_dim\":0"));
        assert!(s.contains("\"region_id\":2"));
        let back: GridTreeNode = serde_json::from_str(&s).unwrap();
        assert_eq!(&back, manual_tree().root());
    }
}

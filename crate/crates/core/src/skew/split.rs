use serde::Serialize;

use super::emd::skew_of;
use super::histogram::{Binning, QueryHistogram};
use super::tree::{leaf_edges, merge_covering_nodes, optimal_covering_set, split_values, SkewTree};
use crate::error::Result;
use crate::workload::Query;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitParams {
    pub n_bins: usize,
    pub merge_factor: f64,
    /// A split must reduce skew by at least this fraction of the size of
    /// the whole workload.
    pub min_reduction: f64,
    /// Nodes holding less than this fraction of all points become leaves.
    pub min_points: f64,
    /// Nodes intersecting less than this fraction of all queries become leaves.
    pub min_queries: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self { n_bins: 128, merge_factor: 1.1, min_reduction: 0.05, min_points: 0.01, min_queries: 0.01 }
    }
}

/// Per-type query histograms of one dimension over one node range.
///
/// Types that do not filter the dimension are left out: their placement
/// carries no signal on it, so they contribute zero skew.
#[derive(Debug, Clone)]
pub struct DimSkew {
    pub dim: usize,
    binning: Binning,
    hists: Vec<QueryHistogram>,
}

impl DimSkew {
    /// `bounds` is the inclusive node range on `dim`; `unique` the sorted
    /// distinct values of the node's points on `dim`, if known.
    pub fn new(
        types: &[Vec<&Query>],
        dim: usize,
        bounds: (u64, u64),
        unique: Option<&[u64]>,
        n_bins: usize,
    ) -> Result<Self> {
        let binning = Binning::for_range(bounds.0, bounds.1 + 1, n_bins, unique)?;
        let hists = types
            .iter()
            .filter(|t| t.iter().any(|q| q.predicate(dim).is_some()))
            .map(|t| {
                let intervals = t.iter().filter_map(|q| q.predicate(dim)).map(|p| (p.lo, p.hi));
                QueryHistogram::from_intervals(dim, binning.clone(), intervals)
            })
            .collect();
        Ok(Self { dim, binning, hists })
    }

    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn histograms(&self) -> &[QueryHistogram] {
        &self.hists
    }

    /// Sum over types of the skew of bins `[x, y)`.
    pub fn skew(&self, x: usize, y: usize) -> f64 {
        self.hists.iter().map(|h| skew_of(&h.masses()[x..y])).sum()
    }

    pub fn tree(&self) -> SkewTree {
        let edges = leaf_edges(self.binning.n_bins(), self.binning.is_atomic());
        SkewTree::build(self.binning.boundaries(), &edges, |x, y| self.skew(x, y))
    }
}

/// Skew of all types on `dim` over the inclusive range `bounds`.
pub fn skew_all_types(types: &[Vec<&Query>], dim: usize, bounds: (u64, u64), n_bins: usize) -> Result<f64> {
    let s = DimSkew::new(types, dim, bounds, None, n_bins)?;
    Ok(s.skew(0, s.binning().n_bins()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitChoice {
    pub dim: usize,
    /// Ascending, strictly inside the node range. Child `j` holds values in
    /// `[values[j-1], values[j])`.
    pub values: Vec<u64>,
    /// Skew reduction in units of the node range (bin-unit EMD divided by the
    /// bin count).
    pub reduction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeafReason {
    NoQueries,
    FewPoints,
    FewQueries,
    LowSkew,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SplitDecision {
    Split(SplitChoice),
    Leaf(LeafReason),
}

/// Largest skew reduction achievable on one dimension, or `None` when the
/// dimension cannot be split.
pub fn best_split_for_dim(
    types: &[Vec<&Query>],
    dim: usize,
    bounds: (u64, u64),
    unique: Option<&[u64]>,
    params: &SplitParams,
) -> Result<Option<SplitChoice>> {
    if bounds.0 >= bounds.1 {
        return Ok(None);
    }
    let s = DimSkew::new(types, dim, bounds, unique, params.n_bins)?;
    if s.histograms().is_empty() {
        return Ok(None);
    }
    let n_bins = s.binning().n_bins();
    let tree = s.tree();
    let root_skew = tree.node(tree.root()).skew;
    let cover = optimal_covering_set(&tree);
    let merged = merge_covering_nodes(&cover.segments, |x, y| s.skew(x, y), params.merge_factor);
    let values = split_values(&merged);
    if values.is_empty() {
        return Ok(None);
    }
    let reduction = (root_skew - merged.iter().map(|m| m.skew).sum::<f64>()) / n_bins as f64;
    Ok(Some(SplitChoice { dim, values, reduction }))
}

/// Everything split selection needs to know about one Grid Tree node.
#[derive(Debug, Clone, Copy)]
pub struct NodeContext<'a> {
    /// Inclusive per-dimension bounds of the node.
    pub bounds: &'a [(u64, u64)],
    /// Queries intersecting the node, grouped by type.
    pub types: &'a [Vec<&'a Query>],
    /// Sorted distinct values per dimension, when there are few of them.
    pub unique: &'a [Option<Vec<u64>>],
    pub points: usize,
    pub total_points: usize,
    pub total_queries: usize,
}

pub fn select_split(ctx: &NodeContext<'_>, params: &SplitParams) -> Result<SplitDecision> {
    let node_queries: usize = ctx.types.iter().map(Vec::len).sum();
    if node_queries == 0 {
        return Ok(SplitDecision::Leaf(LeafReason::NoQueries));
    }
    if (ctx.points as f64) < params.min_points * ctx.total_points as f64 {
        return Ok(SplitDecision::Leaf(LeafReason::FewPoints));
    }
    if (node_queries as f64) < params.min_queries * ctx.total_queries as f64 {
        return Ok(SplitDecision::Leaf(LeafReason::FewQueries));
    }
    let mut best: Option<SplitChoice> = None;
    for (dim, &bounds) in ctx.bounds.iter().enumerate() {
        let unique = ctx.unique.get(dim).and_then(|u| u.as_deref());
        if let Some(c) = best_split_for_dim(ctx.types, dim, bounds, unique, params)? {
            if best.as_ref().is_none_or(|b| c.reduction > b.reduction) {
                best = Some(c);
            }
        }
    }
    match best {
        Some(c) if c.reduction >= params.min_reduction * ctx.total_queries as f64 => Ok(SplitDecision::Split(c)),
        _ => Ok(SplitDecision::Leaf(LeafReason::LowSkew)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(r: &[(usize, u64, u64)]) -> Query {
        Query::from_ranges(r).unwrap()
    }

    #[test]
    fn one_type_equals_its_own_skew() {
        let qs = [q(&[(0, 0, 9)]), q(&[(0, 0, 9)])];
        let t = vec![qs.iter().collect::<Vec<_>>()];
        let s = skew_all_types(&t, 0, (0, 39), 4).unwrap();
        assert!((s - 2.0 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn opposing_types_do_not_cancel() {
        let left = q(&[(0, 0, 9)]);
        let right = q(&[(0, 30, 39)]);
        let separate = vec![vec![&left], vec![&right]];
        let pooled = vec![vec![&left, &right]];
        let s_sep = skew_all_types(&separate, 0, (0, 39), 4).unwrap();
        let s_pool = skew_all_types(&pooled, 0, (0, 39), 4).unwrap();
        assert!(s_sep > s_pool);
        assert!(s_sep > 0.0);
    }

    #[test]
    fn uniform_workload_is_a_leaf() {
        let qs: Vec<Query> = (0..128u64).map(|i| q(&[(0, i * 8, i * 8 + 7), (1, 0, 1023)])).collect();
        let t = vec![qs.iter().collect::<Vec<_>>()];
        let bounds = [(0, 1023), (0, 1023)];
        let ctx = NodeContext {
            bounds: &bounds,
            types: &t,
            unique: &[None, None],
            points: 1000,
            total_points: 1000,
            total_queries: 128,
        };
        assert_eq!(
            select_split(&ctx, &SplitParams::default()).unwrap(),
            SplitDecision::Leaf(LeafReason::LowSkew)
        );
    }

    #[test]
    fn tiny_node_is_a_leaf_regardless_of_skew() {
        let qs: Vec<Query> = (0..50u64).map(|i| q(&[(0, i % 5, i % 5)])).collect();
        let t = vec![qs.iter().collect::<Vec<_>>()];
        let bounds = [(0, 1023)];
        let ctx = NodeContext {
            bounds: &bounds,
            types: &t,
            unique: &[None],
            points: 5,
            total_points: 1000,
            total_queries: 50,
        };
        assert_eq!(
            select_split(&ctx, &SplitParams::default()).unwrap(),
            SplitDecision::Leaf(LeafReason::FewPoints)
        );
    }

    #[test]
    fn unfiltered_dim_cannot_be_split() {
        let a = q(&[(0, 0, 3)]);
        let t = vec![vec![&a]];
        assert_eq!(best_split_for_dim(&t, 1, (0, 99), None, &SplitParams::default()).unwrap(), None);
    }
}

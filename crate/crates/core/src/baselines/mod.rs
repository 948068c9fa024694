//! Reference indexes for comparison.

mod kdtree;

pub use kdtree::{selectivity_order, KdTree};

use crate::clock::Stopwatch;
use crate::error::Result;
use crate::index::{RangeIndex, TsunamiConfig, TsunamiIndex};
use crate::store::{reorder, PhysicalRange};
use crate::workload::{Dataset, Query, Workload};

/// No index: every query scans all rows.
#[derive(Debug, Clone)]
pub struct FullScan {
    data: Dataset,
}

impl FullScan {
    pub fn new(ds: &Dataset) -> Self {
        Self { data: ds.clone() }
    }
}

impl RangeIndex for FullScan {
    fn name(&self) -> String {
        "full-scan".into()
    }

    fn data(&self) -> &Dataset {
        &self.data
    }

    fn ranges(&self, _q: &Query) -> Vec<PhysicalRange> {
        vec![PhysicalRange::new(0, self.data.n(), false)]
    }

    fn size_bytes(&self) -> usize {
        0
    }
}

/// Store sorted on one dimension; queries binary search that dimension.
#[derive(Debug, Clone)]
pub struct ClusteredSingle {
    data: Dataset,
    dim: usize,
}

impl ClusteredSingle {
    /// Sorts on the most selective dimension of the workload.
    pub fn build(ds: &Dataset, w: &Workload) -> Result<Self> {
        let dim = selectivity_order(ds, w).first().copied().unwrap_or(0);
        Self::on_dim(ds, dim)
    }

    pub fn on_dim(ds: &Dataset, dim: usize) -> Result<Self> {
        let col = ds.column(dim);
        let mut perm: Vec<u32> = (0..ds.n() as u32).collect();
        perm.sort_by_key(|&r| col[r as usize]);
        Ok(Self { data: reorder(ds, &perm)?, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl RangeIndex for ClusteredSingle {
    fn name(&self) -> String {
        "clustered".into()
    }

    fn data(&self) -> &Dataset {
        &self.data
    }

    fn ranges(&self, q: &Query) -> Vec<PhysicalRange> {
        let Some(p) = q.predicate(self.dim) else {
            return vec![PhysicalRange::new(0, self.data.n(), false)];
        };
        let col = self.data.column(self.dim);
        let start = col.partition_point(|&v| v < p.lo);
        let end = col.partition_point(|&v| v <= p.hi);
        if start == end {
            return Vec::new();
        }
        vec![PhysicalRange::new(start, end, q.num_filtered() == 1)]
    }

    fn size_bytes(&self) -> usize {
        0
    }
}

/// Flood: one all-independent grid over the whole space.
pub fn build_flood(ds: &Dataset, w: &Workload) -> Result<TsunamiIndex> {
    TsunamiIndex::build(ds, w, TsunamiConfig::flood())
}

/// Candidate kd-tree page sizes, `2^7..=2^17`.
pub fn page_sizes() -> Vec<usize> {
    (7..=17).map(|e| 1usize << e).collect()
}

/// Average query time in nanoseconds over `queries`.
pub fn mean_query_nanos(index: &dyn RangeIndex, queries: &[Query]) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let t = Stopwatch::start();
    for q in queries {
        std::hint::black_box(index.count(q));
    }
    t.nanos() / queries.len() as f64
}

/// Builds a kd-tree for every page size and keeps the one fastest on
/// `tune`. Returns it with the `(page size, mean ns)` of every candidate.
pub fn tune_kdtree(ds: &Dataset, w: &Workload, tune: &[Query], sizes: &[usize]) -> Result<(KdTree, Vec<(usize, f64)>)> {
    let mut best: Option<(KdTree, f64)> = None;
    let mut results = Vec::new();
    for &size in sizes {
        let kd = KdTree::build(ds, w, size)?;
        let t = mean_query_nanos(&kd, tune);
        results.push((size, t));
        if best.as_ref().is_none_or(|(_, b)| t < *b) {
            best = Some((kd, t));
        }
    }
    let (kd, _) = best.ok_or_else(|| crate::Error::InvalidArgument("no page sizes".into()))?;
    Ok((kd, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::brute_force_count;

    #[test]
    fn clustered_is_exact_on_single_dim_queries() {
        let ds = Dataset::from_columns(vec![(0..100).rev().collect(), (0..100).map(|i| i % 7).collect()]).unwrap();
        let c = ClusteredSingle::on_dim(&ds, 0).unwrap();
        let q = Query::from_ranges(&[(0, 10, 19)]).unwrap();
        assert_eq!(c.ranges(&q), vec![PhysicalRange::new(10, 20, true)]);
        let q = Query::from_ranges(&[(0, 10, 59), (1, 0, 2)]).unwrap();
        assert_eq!(c.count(&q), brute_force_count(&ds, q.predicates()));
        assert_eq!(FullScan::new(&ds).count(&q), brute_force_count(&ds, q.predicates()));
    }

    #[test]
    fn page_sweep_spans_powers_of_two() {
        let s = page_sizes();
        assert_eq!((s[0], *s.last().unwrap(), s.len()), (128, 131_072, 11));
    }
}

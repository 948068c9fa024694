use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::RangeIndex;
use crate::store::{reorder, PhysicalRange};
use crate::workload::{ColumnSample, Dataset, Query, Workload};

#[derive(Debug, Clone, Copy, Serialize)]
enum Node {
    Leaf { start: usize, end: usize },
    /// Left child holds values `<= split`.
    Inner { start: usize, end: usize, dim: usize, split: u64, left: usize, right: usize },
}

/// Median-split kd-tree over a store laid out in tree order, so every node is
/// one contiguous row range. Split dimensions cycle through the dimensions,
/// most selective workload dimensions first.
#[derive(Debug, Clone)]
pub struct KdTree {
    data: Dataset,
    nodes: Vec<Node>,
    dim_order: Vec<usize>,
    page_size: usize,
}

impl KdTree {
    pub fn build(ds: &Dataset, w: &Workload, page_size: usize) -> Result<Self> {
        if page_size == 0 {
            return Err(Error::InvalidArgument("page size must be positive".into()));
        }
        if ds.n() == 0 {
            return Err(Error::InvalidArgument("cannot index an empty dataset".into()));
        }
        let dim_order = selectivity_order(ds, w);
        let mut rows: Vec<u32> = (0..ds.n() as u32).collect();
        let mut b = Builder { ds, page_size, order: &dim_order, nodes: Vec::new() };
        b.build(&mut rows, 0, 0);
        let nodes = b.nodes;
        let data = reorder(ds, &rows)?;
        Ok(Self { data, nodes, dim_order, page_size })
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim_order(&self) -> &[usize] {
        &self.dim_order
    }

    /// Point count of every leaf, in storage order.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        let mut out: Vec<(usize, usize)> = self
            .nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Leaf { start, end } => Some((start, end - start)),
                Node::Inner { .. } => None,
            })
            .collect();
        out.sort_unstable();
        out.into_iter().map(|(_, len)| len).collect()
    }

    /// Sizes of sibling pairs where both siblings are leaves.
    pub fn sibling_leaf_sizes(&self) -> Vec<(usize, usize)> {
        let len = |i: usize| match self.nodes[i] {
            Node::Leaf { start, end } => Some(end - start),
            Node::Inner { .. } => None,
        };
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Inner { left, right, .. } => Some((len(left)?, len(right)?)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

/// Dimensions sorted by ascending average workload selectivity; dimensions
/// no query filters go last in index order.
pub fn selectivity_order(ds: &Dataset, w: &Workload) -> Vec<usize> {
    let sample = ColumnSample::new(ds, 10_000, 0);
    let mut sum = vec![0.0; ds.d()];
    let mut count = vec![0usize; ds.d()];
    for q in &w.queries {
        for p in q.predicates() {
            sum[p.dim] += sample.selectivity(p.dim, p.lo, p.hi);
            count[p.dim] += 1;
        }
    }
    let key = |d: usize| if count[d] == 0 { f64::INFINITY } else { sum[d] / count[d] as f64 };
    let mut order: Vec<usize> = (0..ds.d()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

struct Builder<'a> {
    ds: &'a Dataset,
    page_size: usize,
    order: &'a [usize],
    nodes: Vec<Node>,
}

impl Builder<'_> {
    /// Builds the subtree over `rows` (global offset `start`), reordering
    /// `rows` in place. Returns the node id.
    fn build(&mut self, rows: &mut [u32], start: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let end = start + rows.len();
        self.nodes.push(Node::Leaf { start, end });
        if rows.len() <= self.page_size {
            return id;
        }
        for k in 0..self.order.len() {
            let dim = self.order[(depth + k) % self.order.len()];
            let col = self.ds.column(dim);
            let mid = (rows.len() - 1) / 2;
            let (_, &mut m, _) = rows.select_nth_unstable_by_key(mid, |&r| col[r as usize]);
            let split = col[m as usize];
            // Ties go left; a split that empties the right side is useless.
            let mut l = 0;
            for i in 0..rows.len() {
                if col[rows[i] as usize] <= split {
                    rows.swap(i, l);
                    l += 1;
                }
            }
            if l == rows.len() {
                continue;
            }
            let (lo, hi) = rows.split_at_mut(l);
            let left = self.build(lo, start, depth + k + 1);
            let right = self.build(hi, start + l, depth + k + 1);
            self.nodes[id] = Node::Inner { start, end, dim, split, left, right };
            return id;
        }
        id
    }
}

impl RangeIndex for KdTree {
    fn name(&self) -> String {
        format!("kdtree-{}", self.page_size)
    }

    fn data(&self) -> &Dataset {
        &self.data
    }

    fn ranges(&self, q: &Query) -> Vec<PhysicalRange> {
        let mut out: Vec<PhysicalRange> = Vec::new();
        let mut push = |r: PhysicalRange| match out.last_mut() {
            Some(last) if last.end == r.start && last.exact == r.exact => last.end = r.end,
            _ => out.push(r),
        };
        let mut stack = vec![(0usize, self.data.full_bounds())];
        while let Some((id, bounds)) = stack.pop() {
            if !q.intersects(&bounds) {
                continue;
            }
            match self.nodes[id] {
                Node::Leaf { start, end } => push(PhysicalRange::new(start, end, q.covers(&bounds))),
                Node::Inner { start, end, .. } if q.covers(&bounds) => push(PhysicalRange::new(start, end, true)),
                Node::Inner { dim, split, left, right, .. } => {
                    let (lo, hi) = bounds[dim];
                    if split < hi {
                        let mut rb = bounds.clone();
                        rb[dim] = (split + 1, hi);
                        stack.push((right, rb));
                    }
                    let mut lb = bounds;
                    lb[dim] = (lo, split.min(hi));
                    stack.push((left, lb));
                }
            }
        }
        out
    }

    fn size_bytes(&self) -> usize {
        self.nodes.len() * std::mem::size_of::<Node>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::brute_force_count;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force_with_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ds = Dataset::from_columns(vec![
            (0..3000).map(|_| rng.gen_range(0..20)).collect(),
            (0..3000).map(|_| rng.gen_range(0..1000)).collect(),
            vec![7; 3000],
        ])
        .unwrap();
        let w = Workload::new(vec![Query::from_ranges(&[(1, 0, 10)]).unwrap()]);
        for page in [1, 16, 128, 5000] {
            let kd = KdTree::build(&ds, &w, page).unwrap();
            for _ in 0..50 {
                let a = rng.gen_range(0..20);
                let b = rng.gen_range(0..1000);
                let q = Query::from_ranges(&[(0, a, a + 3), (1, b, b + 200), (2, 7, 7)]).unwrap();
                assert_eq!(kd.count(&q), brute_force_count(&ds, q.predicates()));
            }
        }
    }

    #[test]
    fn most_selective_dimension_splits_first() {
        let ds = Dataset::from_columns(vec![(0..100).collect(), (0..100).collect()]).unwrap();
        let w = Workload::new(vec![Query::from_ranges(&[(0, 0, 50), (1, 0, 5)]).unwrap()]);
        assert_eq!(selectivity_order(&ds, &w), vec![1, 0]);
    }
}

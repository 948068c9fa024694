use std::collections::HashMap;

use serde::Serialize;

use super::cost::CostWeights;
use crate::augmented::{CellRun, ModelCache, Skeleton, Strategy};
use crate::error::Result;
use crate::workload::{Dataset, Query};

/// Averages of the cost-model features over a workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    /// Predicted average query time in nanoseconds.
    pub cost: f64,
    pub avg_ranges: f64,
    /// Estimated average number of points scanned (full-data scale).
    pub avg_scanned: f64,
}

/// Predicts the average query time of candidate layouts of one region from
/// a uniform sample of its points.
#[derive(Debug)]
pub struct Evaluator<'a> {
    cache: ModelCache<'a>,
    queries: Vec<Query>,
    scale: f64,
    weights: CostWeights,
    budget: usize,
    filtered: Vec<bool>,
    sorted: Vec<Vec<u64>>,
    memo: HashMap<(Skeleton, Vec<usize>), Option<CostBreakdown>>,
    runs: Vec<CellRun>,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    /// `sample` holds sampled points of a region of `n_region` points;
    /// `queries` are the region's queries.
    pub fn new(sample: &'a Dataset, queries: Vec<Query>, n_region: usize, weights: CostWeights, budget: usize) -> Result<Self> {
        let cache = ModelCache::new(sample)?;
        let d = sample.d();
        let mut filtered = vec![false; d];
        for q in &queries {
            for p in q.predicates() {
                if p.dim < d {
                    filtered[p.dim] = true;
                }
            }
        }
        let sorted = sample
            .columns()
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        Ok(Self {
            cache,
            queries,
            scale: n_region as f64 / sample.n() as f64,
            weights,
            budget: budget.max(1),
            filtered,
            sorted,
            memo: HashMap::new(),
            runs: Vec::new(),
            evaluations: 0,
        })
    }

    pub fn d(&self) -> usize {
        self.filtered.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn weights(&self) -> CostWeights {
        self.weights
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn is_filtered(&self, dim: usize) -> bool {
        self.filtered[dim]
    }

    pub fn cache(&mut self) -> &mut ModelCache<'a> {
        &mut self.cache
    }

    /// Distinct configurations evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Number of grid cells of `(skeleton, partitions)`.
    pub fn num_cells(skeleton: &Skeleton, partitions: &[usize]) -> u128 {
        skeleton.grid_dims().iter().map(|&g| partitions[g] as u128).product()
    }

    pub fn cost(&mut self, skeleton: &Skeleton, partitions: &[usize]) -> Option<f64> {
        self.breakdown(skeleton, partitions).map(|b| b.cost)
    }

    /// `None` for layouts that are invalid, cannot be fitted, or exceed the
    /// cell budget.
    pub fn breakdown(&mut self, skeleton: &Skeleton, partitions: &[usize]) -> Option<CostBreakdown> {
        let key_p: Vec<usize> = (0..skeleton.d())
            .map(|i| match skeleton.strategy(i) {
                Strategy::Mapped { .. } => 1,
                _ => partitions[i].max(1),
            })
            .collect();
        let key = (skeleton.clone(), key_p);
        if let Some(b) = self.memo.get(&key) {
            return *b;
        }
        let b = self.compute(&key.0, &key.1);
        self.memo.insert(key, b);
        b
    }

    fn compute(&mut self, skeleton: &Skeleton, partitions: &[usize]) -> Option<CostBreakdown> {
        if !skeleton.is_valid() || Self::num_cells(skeleton, partitions) > self.budget as u128 {
            return None;
        }
        self.evaluations += 1;
        let layout = self.cache.layout(skeleton, partitions).ok()?;
        let cells = self.cache.assign_cells(&layout);
        let mut prefix = vec![0u32; layout.num_cells() + 1];
        for &c in &cells {
            prefix[c as usize + 1] += 1;
        }
        for i in 0..layout.num_cells() {
            prefix[i + 1] += prefix[i];
        }
        if self.queries.is_empty() {
            return Some(CostBreakdown { cost: 0.0, avg_ranges: 0.0, avg_scanned: 0.0 });
        }
        let (mut cost, mut ranges, mut scanned) = (0.0, 0.0, 0.0);
        for q in &self.queries {
            layout.plan_into(q, &mut self.runs);
            let hits: u64 = self
                .runs
                .iter()
                .filter(|r| !r.exact)
                .map(|r| (prefix[r.end] - prefix[r.start]) as u64)
                .sum();
            let s = hits as f64 * self.scale;
            cost += self.weights.predict(self.runs.len() as f64, s, q.num_filtered());
            ranges += self.runs.len() as f64;
            scanned += s;
        }
        let n = self.queries.len() as f64;
        Some(CostBreakdown { cost: cost / n, avg_ranges: ranges / n, avg_scanned: scanned / n })
    }

    /// Fraction of sampled points with `dim` in `[lo, hi]`.
    pub fn selectivity(&self, dim: usize, lo: u64, hi: u64) -> f64 {
        let col = &self.sorted[dim];
        let a = col.partition_point(|&v| v < lo);
        let b = col.partition_point(|&v| v <= hi);
        (b - a) as f64 / col.len() as f64
    }

    /// Average selectivity, per dimension, of the predicates the grid sees
    /// under `skeleton` (mapped predicates rewritten onto their targets).
    /// `None` for dimensions no query constrains.
    pub fn grid_selectivities(&mut self, skeleton: &Skeleton) -> Vec<Option<f64>> {
        let d = self.d();
        let mut sum = vec![0.0; d];
        let mut count = vec![0usize; d];
        let ranges = self.cache.ranges().to_vec();
        let queries = std::mem::take(&mut self.queries);
        for q in &queries {
            let mut preds: Vec<Option<(u64, u64)>> = vec![None; d];
            for p in q.predicates() {
                preds[p.dim] = Some((p.lo, p.hi));
            }
            for dim in 0..d {
                let (Some((a, b)), Strategy::Mapped { target }) = (preds[dim], skeleton.strategy(dim)) else {
                    continue;
                };
                preds[dim] = None;
                if a <= ranges[dim].0 && b >= ranges[dim].1 {
                    continue;
                }
                let (x0, x1) = self.cache.mapping(dim, target).and_then(|m| m.induce(a, b)).unwrap_or((1, 0));
                preds[target] = Some(match preds[target] {
                    Some((c, e)) => (x0.max(c), x1.min(e)),
                    None => (x0, x1),
                });
            }
            for (dim, p) in preds.iter().enumerate() {
                if let Some((a, b)) = *p {
                    sum[dim] += if a <= b { self.selectivity(dim, a, b) } else { 0.0 };
                    count[dim] += 1;
                }
            }
        }
        self.queries = queries;
        (0..d).map(|i| (count[i] > 0).then(|| sum[i] / count[i] as f64)).collect()
    }
}

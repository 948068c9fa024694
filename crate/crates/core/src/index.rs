//! The full index: a Grid Tree over data space with an Augmented Grid,
//! tuned by the optimizer, inside every queried region.

use std::sync::Arc;

use parking_lot::RwLock;
use serde::Serialize;

use crate::augmented::{build_grid_with_layout, counting_sort, AugmentedGrid, GridLayout, Skeleton};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::grid_tree::{GridTree, GridTreeParams, Region};
use crate::optimizer::{cell_budget, optimize, CostWeights, Evaluator, GridConfig, OptimizerKind};
use crate::store::{reorder, scan_count_unchecked, PhysicalRange, ScanStats};
use crate::workload::{cluster_query_types, sample_rows, Dataset, Query, Workload};

/// Anything that turns a query into physical ranges over the store it owns.
pub trait RangeIndex {
    fn name(&self) -> String;

    /// The store, in the index's physical order.
    fn data(&self) -> &Dataset;

    fn ranges(&self, q: &Query) -> Vec<PhysicalRange>;

    /// Index metadata size, excluding the store.
    fn size_bytes(&self) -> usize;

    fn count_with_stats(&self, q: &Query, stats: &mut ScanStats) -> u64 {
        scan_count_unchecked(self.data(), &self.ranges(q), q.predicates(), stats)
    }

    fn count(&self, q: &Query) -> u64 {
        self.count_with_stats(q, &mut ScanStats::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsunamiConfig {
    pub tree: GridTreeParams,
    /// Without the tree the whole space is one region.
    pub use_grid_tree: bool,
    pub optimizer: OptimizerKind,
    pub weights: CostWeights,
    /// Points sampled per region for the optimizer.
    pub sample_size: usize,
    /// Queries per region given to the optimizer; more are thinned evenly.
    pub max_optimizer_queries: usize,
    /// Overrides [`cell_budget`] when set.
    pub max_cells: Option<usize>,
    pub seed: u64,
}

impl Default for TsunamiConfig {
    fn default() -> Self {
        Self {
            tree: GridTreeParams::default(),
            use_grid_tree: true,
            optimizer: OptimizerKind::Agd,
            weights: CostWeights::default(),
            sample_size: 100_000,
            max_optimizer_queries: 1_000,
            max_cells: None,
            seed: 0,
        }
    }
}

impl TsunamiConfig {
    /// One region, all-independent grid tuned by gradient descent.
    pub fn flood() -> Self {
        Self { use_grid_tree: false, optimizer: OptimizerKind::IndependentGradient, ..Self::default() }
    }

    /// Grid Tree with plain grids in every region.
    pub fn tree_only() -> Self {
        Self { optimizer: OptimizerKind::IndependentGradient, ..Self::default() }
    }

    /// Augmented Grid over the whole space.
    pub fn augmented_only() -> Self {
        Self { use_grid_tree: false, ..Self::default() }
    }
}

/// Per-region slice of the store and its grid, if the region is queried.
#[derive(Debug, Clone, Serialize)]
pub struct RegionIndex {
    pub region: Region,
    pub start: usize,
    pub end: usize,
    pub grid: Option<AugmentedGrid>,
    pub config: Option<GridConfig>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BuildTimes {
    pub tree_seconds: f64,
    pub optimize_seconds: f64,
    pub sort_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionStats {
    pub region_id: usize,
    pub point_count: usize,
    pub query_count: usize,
    pub skeleton: Option<String>,
    pub partitions: Option<Vec<usize>>,
    pub num_cells: usize,
    pub predicted_cost_ns: Option<f64>,
}

/// Summary of a built index: tree shape, per-region grids, build timing.
#[derive(Debug, Clone, Serialize)]
pub struct IndexStats {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub tree_nodes: usize,
    pub tree_depth: usize,
    pub num_regions: usize,
    pub min_points_per_region: usize,
    pub median_points_per_region: usize,
    pub max_points_per_region: usize,
    pub avg_mappings_per_region: f64,
    pub avg_conditionals_per_region: f64,
    pub total_cells: usize,
    pub index_bytes: usize,
    pub build: BuildTimes,
    pub regions: Vec<RegionStats>,
}

#[derive(Debug, Clone)]
pub struct TsunamiIndex {
    config: TsunamiConfig,
    data: Dataset,
    tree: GridTree,
    regions: Vec<RegionIndex>,
    times: BuildTimes,
}

impl TsunamiIndex {
    /// Builds the index over `ds` for workload `w` and stores a reordered
    /// copy of `ds`. `w` is clustered into query types if it is not already.
    pub fn build(ds: &Dataset, w: &Workload, config: TsunamiConfig) -> Result<Self> {
        if ds.n() == 0 {
            return Err(Error::InvalidArgument("cannot index an empty dataset".into()));
        }
        if ds.n() > u32::MAX as usize {
            return Err(Error::InvalidArgument("more than 2^32 rows".into()));
        }
        w.validate(ds.d())?;
        let total = Stopwatch::start();

        let t = Stopwatch::start();
        let tree = if config.use_grid_tree && !w.is_empty() {
            let clustered;
            let w = if w.is_clustered() {
                w
            } else {
                clustered = cluster_query_types(w, ds);
                &clustered
            };
            GridTree::build(ds, w, &config.tree)?
        } else {
            GridTree::single_region(ds, w.len())
        };
        let tree_seconds = t.seconds();

        let assignment = tree.assign(ds);
        let (offsets, grouped) = counting_sort(&assignment, tree.num_regions());
        drop(assignment);

        let mut perm = Vec::with_capacity(ds.n());
        let mut regions = Vec::with_capacity(tree.num_regions());
        let (mut optimize_seconds, mut sort_seconds) = (0.0, 0.0);
        for region in tree.regions() {
            let (start, end) = (offsets[region.region_id] as usize, offsets[region.region_id + 1] as usize);
            let rows = &grouped[start..end];
            let queries: Vec<Query> = w
                .queries
                .iter()
                .filter(|q| q.intersects(&region.bounds) && !q.covers(&region.bounds))
                .cloned()
                .collect();
            let mut entry = RegionIndex { region: region.clone(), start, end, grid: None, config: None };
            if rows.is_empty() || queries.is_empty() {
                perm.extend_from_slice(rows);
                regions.push(entry);
                continue;
            }

            let t = Stopwatch::start();
            let queries = thin(queries, config.max_optimizer_queries);
            let sample = gather(ds, &sample_rows(rows.len(), config.sample_size, config.seed), Some(rows));
            let budget = config.max_cells.unwrap_or_else(|| cell_budget(rows.len()));
            let mut ev = Evaluator::new(&sample, queries, rows.len(), config.weights, budget)?;
            let best = optimize(&mut ev, config.optimizer).best;
            drop(ev);
            optimize_seconds += t.seconds();

            let t = Stopwatch::start();
            let points = gather(ds, rows, None);
            let layout = GridLayout::fit(&points, &best.skeleton, &best.partitions).or_else(|_| {
                // A mapping fitted on the sample can degenerate on the full
                // region; fall back to independent partitioning.
                GridLayout::fit(&points, &Skeleton::all_independent(ds.d()), &best.partitions)
            })?;
            drop(points);
            let (grid, region_perm) = build_grid_with_layout(layout, ds, rows);
            perm.extend_from_slice(&region_perm);
            sort_seconds += t.seconds();
            entry.grid = Some(grid);
            entry.config = Some(best);
            regions.push(entry);
        }
        drop(grouped);

        let t = Stopwatch::start();
        let data = reorder(ds, &perm)?;
        sort_seconds += t.seconds();
        let times = BuildTimes { tree_seconds, optimize_seconds, sort_seconds, total_seconds: total.seconds() };
        Ok(Self { config, data, tree, regions, times })
    }

    pub fn config(&self) -> &TsunamiConfig {
        &self.config
    }

    pub fn tree(&self) -> &GridTree {
        &self.tree
    }

    pub fn regions(&self) -> &[RegionIndex] {
        &self.regions
    }

    pub fn build_times(&self) -> BuildTimes {
        self.times
    }

    pub fn query(&self, q: &Query) -> u64 {
        self.count(q)
    }

    pub fn query_with_stats(&self, q: &Query) -> (u64, ScanStats) {
        let mut stats = ScanStats::default();
        let c = self.count_with_stats(q, &mut stats);
        (c, stats)
    }

    pub fn stats(&self) -> IndexStats {
        let regions: Vec<RegionStats> = self
            .regions
            .iter()
            .map(|r| RegionStats {
                region_id: r.region.region_id,
                point_count: r.end - r.start,
                query_count: r.region.query_count,
                skeleton: r.grid.as_ref().map(|g| g.layout.skeleton().to_string()),
                partitions: r.grid.as_ref().map(|g| g.layout.partitions().to_vec()),
                num_cells: r.grid.as_ref().map_or(1, |g| g.layout.num_cells()),
                predicted_cost_ns: r.config.as_ref().map(|c| c.cost),
            })
            .collect();
        let mut points: Vec<usize> = regions.iter().map(|r| r.point_count).collect();
        points.sort_unstable();
        let per_region = |f: fn(&Skeleton) -> usize| {
            let total: usize =
                self.regions.iter().filter_map(|r| r.grid.as_ref()).map(|g| f(g.layout.skeleton())).sum();
            total as f64 / self.regions.len() as f64
        };
        IndexStats {
            name: self.name(),
            n: self.data.n(),
            d: self.data.d(),
            tree_nodes: self.tree.node_count(),
            tree_depth: self.tree.depth(),
            num_regions: self.regions.len(),
            min_points_per_region: points[0],
            median_points_per_region: points[points.len() / 2],
            max_points_per_region: points[points.len() - 1],
            avg_mappings_per_region: per_region(Skeleton::num_mapped),
            avg_conditionals_per_region: per_region(Skeleton::num_dependent),
            total_cells: regions.iter().map(|r| r.num_cells).sum(),
            index_bytes: self.size_bytes(),
            build: self.times,
            regions,
        }
    }

    pub fn stats_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.stats())?)
    }
}

impl RangeIndex for TsunamiIndex {
    fn name(&self) -> String {
        match (self.config.use_grid_tree, self.config.optimizer) {
            (false, OptimizerKind::IndependentGradient) => "flood".into(),
            (true, OptimizerKind::IndependentGradient) => "grid-tree-only".into(),
            (false, _) => "augmented-grid-only".into(),
            _ => "tsunami".into(),
        }
    }

    fn data(&self) -> &Dataset {
        &self.data
    }

    fn ranges(&self, q: &Query) -> Vec<PhysicalRange> {
        let mut out = Vec::new();
        for (id, _) in self.tree.intersecting_regions(q) {
            let r = &self.regions[id];
            if r.start == r.end {
                continue;
            }
            if q.covers(&r.region.bounds) {
                out.push(PhysicalRange::new(r.start, r.end, true));
            } else if let Some(g) = &r.grid {
                out.extend(g.ranges(q, r.start));
            } else {
                out.push(PhysicalRange::new(r.start, r.end, false));
            }
        }
        out
    }

    /// Tree JSON bytes plus every grid's lookup table. Lookup tables
    /// dominate; models are a few kilobytes per region.
    fn size_bytes(&self) -> usize {
        self.tree.size_bytes() + self.regions.iter().filter_map(|r| r.grid.as_ref()).map(|g| g.size_bytes()).sum::<usize>()
    }
}

/// Every `len / max`-th query, keeping at most `max`.
fn thin(queries: Vec<Query>, max: usize) -> Vec<Query> {
    if max == 0 || queries.len() <= max {
        return queries;
    }
    let step = queries.len() as f64 / max as f64;
    (0..max).map(|i| queries[(i as f64 * step) as usize].clone()).collect()
}

/// Copies rows `idx` (indices into `rows` if given) into a new dataset.
fn gather(ds: &Dataset, idx: &[u32], rows: Option<&[u32]>) -> Dataset {
    let at = |i: u32| rows.map_or(i, |r| r[i as usize]) as usize;
    let columns = ds.columns().iter().map(|c| idx.iter().map(|&i| c[at(i)]).collect()).collect();
    Dataset::with_domains(columns, ds.domains().to_vec()).expect("gathered columns share one length")
}

/// An index that readers can query while a replacement is being built.
#[derive(Debug, Clone)]
pub struct SharedIndex {
    inner: Arc<RwLock<Arc<TsunamiIndex>>>,
}

impl SharedIndex {
    pub fn new(index: TsunamiIndex) -> Self {
        Self { inner: Arc::new(RwLock::new(Arc::new(index))) }
    }

    pub fn snapshot(&self) -> Arc<TsunamiIndex> {
        self.inner.read().clone()
    }

    pub fn swap(&self, index: TsunamiIndex) -> Arc<TsunamiIndex> {
        std::mem::replace(&mut *self.inner.write(), Arc::new(index))
    }

    /// Reoptimizes for workload `w` over the current data and swaps the new
    /// index in. Readers keep the old index until the swap.
    pub fn rebuild(&self, w: &Workload) -> Result<()> {
        let old = self.snapshot();
        let new = TsunamiIndex::build(old.data(), w, old.config)?;
        self.swap(new);
        Ok(())
    }

    pub fn query(&self, q: &Query) -> u64 {
        self.snapshot().count(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::brute_force_count;
    use crate::workload::{generate_synthetic, DatasetSpec};

    fn corpus() -> (Dataset, Workload) {
        let ds = generate_synthetic(&DatasetSpec::half_correlated(20_000, 4, 10_000, 0.02), 1).unwrap();
        let mut qs = Vec::new();
        for i in 0..60u64 {
            let a = (i * 157) % 9_000;
            qs.push(Query::from_ranges(&[(0, a, a + 800), (1, 0, 5_000)]).unwrap());
            qs.push(Query::from_ranges(&[(2, a, a + 300)]).unwrap());
        }
        (ds, Workload::new(qs))
    }

    #[test]
    fn all_variants_match_brute_force() {
        let (ds, w) = corpus();
        for config in [TsunamiConfig::default(), TsunamiConfig::flood(), TsunamiConfig::tree_only(), TsunamiConfig::augmented_only()] {
            let idx = TsunamiIndex::build(&ds, &w, config).unwrap();
            for q in &w.queries {
                assert_eq!(idx.query(q), brute_force_count(&ds, q.predicates()), "{} {q:?}", idx.name());
            }
        }
    }

    #[test]
    fn ranges_are_disjoint_and_in_bounds() {
        let (ds, w) = corpus();
        let idx = TsunamiIndex::build(&ds, &w, TsunamiConfig::default()).unwrap();
        for q in &w.queries {
            let mut r = idx.ranges(q);
            r.sort_by_key(|r| r.start);
            assert!(r.windows(2).all(|p| p[0].end <= p[1].start));
            assert!(r.iter().all(|r| r.end <= ds.n()));
        }
    }

    #[test]
    fn shared_index_rebuild_keeps_answers() {
        let (ds, w) = corpus();
        let shared = SharedIndex::new(TsunamiIndex::build(&ds, &w, TsunamiConfig::default()).unwrap());
        let q = &w.queries[3];
        let before = shared.query(q);
        let w2 = Workload::new(vec![Query::from_ranges(&[(3, 10, 4_000)]).unwrap(); 20]);
        shared.rebuild(&w2).unwrap();
        assert_eq!(shared.query(q), before);
    }

    #[test]
    fn empty_workload_builds_single_unindexed_region() {
        let (ds, _) = corpus();
        let idx = TsunamiIndex::build(&ds, &Workload::default(), TsunamiConfig::default()).unwrap();
        assert_eq!(idx.regions().len(), 1);
        let q = Query::from_ranges(&[(0, 5, 500)]).unwrap();
        assert_eq!(idx.query(&q), brute_force_count(&ds, q.predicates()));
    }
}

//! Index construction by name, oracle verification and query timing.

use std::time::Instant;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use tsunami_core::baselines::{page_sizes, tune_kdtree, ClusteredSingle, FullScan};
use tsunami_core::index::{RangeIndex, TsunamiConfig, TsunamiIndex};
use tsunami_core::optimizer::{CostWeights, OptimizerKind};
use tsunami_core::store::{scan_count_unchecked, PhysicalRange, ScanStats};
use tsunami_core::{Dataset, Query, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    Tsunami,
    Flood,
    Kdtree,
    Clustered,
    Fullscan,
    GridtreeOnly,
    AugmentedOnly,
}

impl IndexKind {
    pub const ALL: [IndexKind; 7] = [
        IndexKind::Tsunami,
        IndexKind::Flood,
        IndexKind::Kdtree,
        IndexKind::Clustered,
        IndexKind::Fullscan,
        IndexKind::GridtreeOnly,
        IndexKind::AugmentedOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Tsunami => "tsunami",
            IndexKind::Flood => "flood",
            IndexKind::Kdtree => "kdtree",
            IndexKind::Clustered => "clustered",
            IndexKind::Fullscan => "fullscan",
            IndexKind::GridtreeOnly => "gridtree-only",
            IndexKind::AugmentedOnly => "augmented-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_learned(self) -> bool {
        !matches!(self, IndexKind::Kdtree | IndexKind::Clustered | IndexKind::Fullscan)
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub weights: CostWeights,
    pub max_cells: Option<usize>,
    /// Kd-tree page sizes to try; the fastest on the workload is kept.
    pub page_sizes: Vec<usize>,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            max_cells: None,
            page_sizes: vec![1024],
            seed: 0,
            optimizer: OptimizerKind::Agd,
        }
    }
}

impl BuildOptions {
    pub fn with_sweep(mut self) -> Self {
        self.page_sizes = page_sizes();
        self
    }

    pub fn tsunami_config(&self, kind: IndexKind) -> TsunamiConfig {
        let base = match kind {
            IndexKind::Flood => TsunamiConfig::flood(),
            IndexKind::GridtreeOnly => TsunamiConfig::tree_only(),
            IndexKind::AugmentedOnly => TsunamiConfig { optimizer: self.optimizer, ..TsunamiConfig::augmented_only() },
            _ => TsunamiConfig { optimizer: self.optimizer, ..TsunamiConfig::default() },
        };
        TsunamiConfig { weights: self.weights, max_cells: self.max_cells, seed: self.seed, ..base }
    }
}

pub struct Built {
    pub index: Box<dyn RangeIndex + Send + Sync>,
    pub build_seconds: f64,
    /// Index statistics for learned indexes.
    pub stats: Option<serde_json::Value>,
    /// `(page size, mean ns)` of every kd-tree candidate.
    pub page_sweep: Vec<(usize, f64)>,
}

pub fn build_index(kind: IndexKind, ds: &Dataset, w: &Workload, opts: &BuildOptions) -> Result<Built> {
    let t = Instant::now();
    let mut stats = None;
    let mut page_sweep = Vec::new();
    let index: Box<dyn RangeIndex + Send + Sync> = match kind {
        IndexKind::Fullscan => Box::new(FullScan::new(ds)),
        IndexKind::Clustered => Box::new(ClusteredSingle::build(ds, w)?),
        IndexKind::Kdtree => {
            let (kd, sweep) = tune_kdtree(ds, w, &w.queries, &opts.page_sizes)?;
            page_sweep = sweep;
            Box::new(kd)
        }
        _ => {
            let idx = TsunamiIndex::build(ds, w, opts.tsunami_config(kind))?;
            stats = Some(serde_json::to_value(idx.stats())?);
            Box::new(idx)
        }
    };
    Ok(Built { index, build_seconds: t.elapsed().as_secs_f64(), stats, page_sweep })
}

/// Wraps an index and corrupts its answers the way a damaged cell lookup
/// table would: the first non-empty range of every query loses its last
/// row. Used to check that verification catches broken indexes.
pub struct Corrupted(pub Box<dyn RangeIndex + Send + Sync>);

impl RangeIndex for Corrupted {
    fn name(&self) -> String {
        self.0.name()
    }

    fn data(&self) -> &Dataset {
        self.0.data()
    }

    fn ranges(&self, q: &Query) -> Vec<PhysicalRange> {
        let mut r = self.0.ranges(q);
        if let Some(x) = r.iter_mut().find(|x| !x.is_empty()) {
            x.end -= 1;
            x.exact = true;
        }
        r
    }

    fn size_bytes(&self) -> usize {
        self.0.size_bytes()
    }
}

/// Full-scan answer of every query.
pub fn oracle_counts(ds: &Dataset, queries: &[Query]) -> Vec<u64> {
    let all = [PhysicalRange::new(0, ds.n(), false)];
    queries.iter().map(|q| scan_count_unchecked(ds, &all, q.predicates(), &mut ScanStats::default())).collect()
}

/// First query whose count differs from the oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub index: String,
    pub query: usize,
    pub expected: u64,
    pub got: u64,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: query {} expected {} got {}", self.index, self.query, self.expected, self.got)
    }
}

impl std::error::Error for Mismatch {}

pub fn verify(index: &dyn RangeIndex, queries: &[Query], oracle: &[u64]) -> std::result::Result<(), Mismatch> {
    for (i, (q, &expected)) in queries.iter().zip(oracle).enumerate() {
        let got = index.count(q);
        if got != expected {
            return Err(Mismatch { index: index.name(), query: i, expected, got });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub avg_query_ns: f64,
    pub p50_ns: f64,
    pub p99_ns: f64,
    pub queries_per_sec: f64,
}

/// One warmup pass, then `passes` timed passes. Every query's latency is
/// the median over passes.
pub fn time_queries(index: &dyn RangeIndex, queries: &[Query], passes: usize) -> Result<Timing> {
    if queries.is_empty() {
        bail!("cannot time an empty workload");
    }
    for q in queries {
        std::hint::black_box(index.count(q));
    }
    let passes = passes.max(1);
    let mut lat = vec![Vec::with_capacity(passes); queries.len()];
    for _ in 0..passes {
        for (i, q) in queries.iter().enumerate() {
            let t = Instant::now();
            std::hint::black_box(index.count(q));
            lat[i].push(t.elapsed().as_nanos() as f64);
        }
    }
    let per_query = lat
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect();
    Ok(summarize(per_query))
}

/// Times several indexes against each other: every round runs each query
/// once on each index in turn, and each query keeps its fastest run. Slow
/// phases of a shared machine then hit all indexes alike, which keeps
/// throughput ratios stable.
pub fn time_interleaved(indexes: &[&dyn RangeIndex], queries: &[Query], rounds: usize) -> Result<Vec<Timing>> {
    if queries.is_empty() {
        bail!("cannot time an empty workload");
    }
    let mut best = vec![vec![f64::INFINITY; queries.len()]; indexes.len()];
    for _ in 0..rounds.max(1) {
        for (index, best) in indexes.iter().zip(&mut best) {
            for (q, b) in queries.iter().zip(best.iter_mut()) {
                let t = Instant::now();
                std::hint::black_box(index.count(q));
                *b = b.min(t.elapsed().as_nanos() as f64);
            }
        }
    }
    Ok(best.into_iter().map(summarize).collect())
}

fn summarize(mut per_query: Vec<f64>) -> Timing {
    let avg = per_query.iter().sum::<f64>() / per_query.len() as f64;
    per_query.sort_by(f64::total_cmp);
    let pct = |p: f64| per_query[((per_query.len() - 1) as f64 * p).round() as usize];
    Timing { avg_query_ns: avg, p50_ns: pct(0.5), p99_ns: pct(0.99), queries_per_sec: 1e9 / avg.max(1.0) }
}

/// FNV-1a over every column, for reproducibility fingerprints in reports.
pub fn dataset_fingerprint(ds: &Dataset) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for col in ds.columns() {
        for v in col {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    format!("{h:016x}")
}

use serde::{Deserialize, Serialize};

use super::agd::proportional_partitions;
use crate::augmented::{build_grid, AugmentedGrid, Skeleton};
use crate::clock::Stopwatch;
use crate::error::Result;
use crate::store::{reorder, scan_count_unchecked, ScanStats};
use crate::workload::{sample_rows, Dataset, Query};

/// Linear query-time model `w0 * ranges + w1 * scanned_points * filtered_dims`,
/// in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Per cell range: one lookup and a likely cache miss.
    pub w0: f64,
    /// Per scanned value of one dimension of one point.
    pub w1: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { w0: 100.0, w1: 2.0 }
    }
}

impl CostWeights {
    #[inline]
    pub fn predict(&self, ranges: f64, scanned_points: f64, filtered_dims: usize) -> f64 {
        self.w0 * ranges + self.w1 * scanned_points * filtered_dims as f64
    }

    /// Fit without intercept of `time = w0 * ranges + w1 * point_dims` over
    /// `(ranges, point_dims, time_ns)` samples, minimizing squared relative
    /// error. Weights are clamped at zero; a singular system falls back to
    /// the defaults.
    pub fn fit(samples: &[(f64, f64, f64)]) -> Self {
        let (mut a, mut b, mut c, mut ya, mut yb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(r, s, t) in samples.iter().filter(|x| x.2 > 0.0) {
            let (r, s, t) = (r / t, s / t, 1.0);
            a += r * r;
            b += r * s;
            c += s * s;
            ya += r * t;
            yb += s * t;
        }
        let det = a * c - b * b;
        if samples.len() < 2 || det.is_nan() || det.abs() <= 1e-9 * (a * c).max(f64::MIN_POSITIVE) {
            return Self::default();
        }
        let w0 = (c * ya - b * yb) / det;
        let w1 = (a * yb - b * ya) / det;
        match (w0 >= 0.0, w1 >= 0.0) {
            (true, true) => Self { w0, w1 },
            (false, true) if c > 0.0 => Self { w0: 0.0, w1: (yb / c).max(0.0) },
            (true, false) if a > 0.0 => Self { w0: (ya / a).max(0.0), w1: 0.0 },
            _ => Self::default(),
        }
    }
}

/// `(ranges, point_dims, time_ns)` for every query on a built grid. Each
/// query runs `reps` times and the fastest run counts.
pub fn cost_samples(ds: &Dataset, grid: &AugmentedGrid, base: usize, queries: &[Query], reps: usize) -> Vec<(f64, f64, f64)> {
    let mut samples = Vec::with_capacity(queries.len());
    for q in queries {
        let mut best = f64::INFINITY;
        let mut stats = ScanStats::default();
        for _ in 0..reps.max(1) {
            stats = ScanStats::default();
            let t = Stopwatch::start();
            let ranges = grid.ranges(q, base);
            std::hint::black_box(scan_count_unchecked(ds, &ranges, q.predicates(), &mut stats));
            best = best.min(t.nanos());
        }
        samples.push((stats.ranges as f64, stats.point_dims_scanned as f64, best));
    }
    samples
}

/// Times every query on a built grid and fits weights to the measurements.
pub fn calibrate_cost_model(ds: &Dataset, grid: &AugmentedGrid, base: usize, queries: &[Query], reps: usize) -> CostWeights {
    CostWeights::fit(&cost_samples(ds, grid, base, queries, reps))
}

/// Rows timed during calibration; larger datasets are sampled.
const CALIBRATION_ROWS: usize = 2_000_000;
const CALIBRATION_ROUNDS: usize = 15;

/// Timing fixture for fitting weights on `ds` itself: independent grids at
/// four granularities over the data, so both features vary across samples,
/// and up to 200 of the workload's queries. Every call to
/// [`Calibration::round`] times each query once per grid; each query keeps
/// its fastest run. Rounds can be interleaved with other measurements so
/// that drift in machine speed affects both alike.
pub struct Calibration {
    queries: Vec<Query>,
    layouts: Vec<(Dataset, AugmentedGrid)>,
    samples: Vec<Vec<(f64, f64, f64)>>,
}

impl Calibration {
    pub fn new(ds: &Dataset, queries: &[Query]) -> Result<Self> {
        let step = queries.len().div_ceil(200).max(1);
        let queries: Vec<Query> = queries.iter().step_by(step).cloned().collect();
        let sampled;
        let ds = if ds.n() > CALIBRATION_ROWS {
            let mut rows = sample_rows(ds.n(), CALIBRATION_ROWS, 0);
            rows.sort_unstable();
            sampled = reorder_subset(ds, &rows)?;
            &sampled
        } else {
            ds
        };
        let mut filtered = vec![0usize; ds.d()];
        for q in &queries {
            for p in q.predicates() {
                filtered[p.dim] += 1;
            }
        }
        let weight: Vec<Option<f64>> = filtered.iter().map(|&c| (c > 0).then_some(1.0)).collect();
        let mut layouts = Vec::new();
        if !queries.is_empty() {
            for points_per_cell in [20_000, 2_000, 200, 50] {
                let budget = (ds.n() / points_per_cell).max(1);
                let p = proportional_partitions(&weight, budget);
                let (grid, perm) = build_grid(ds, &Skeleton::all_independent(ds.d()), &p)?;
                layouts.push((reorder(ds, &perm)?, grid));
            }
        }
        let samples = vec![Vec::new(); layouts.len()];
        Ok(Self { queries, layouts, samples })
    }

    pub fn round(&mut self) {
        for ((store, grid), best) in self.layouts.iter().zip(&mut self.samples) {
            let round = cost_samples(store, grid, 0, &self.queries, 1);
            if best.is_empty() {
                *best = round;
            } else {
                for (b, r) in best.iter_mut().zip(round) {
                    b.2 = b.2.min(r.2);
                }
            }
        }
    }

    /// Weights fitted to the rounds so far; defaults before any round or
    /// without queries.
    pub fn weights(&self) -> CostWeights {
        CostWeights::fit(&self.samples.concat())
    }
}

/// [`Calibration`] with a fixed number of back-to-back rounds.
pub fn calibrate_weights(ds: &Dataset, queries: &[Query]) -> Result<CostWeights> {
    let mut c = Calibration::new(ds, queries)?;
    for _ in 0..CALIBRATION_ROUNDS {
        c.round();
    }
    Ok(c.weights())
}

fn reorder_subset(ds: &Dataset, rows: &[u32]) -> Result<Dataset> {
    let columns = ds.columns().iter().map(|c| rows.iter().map(|&r| c[r as usize]).collect()).collect();
    Dataset::with_domains(columns, ds.domains().to_vec())
}

//! Seeded synthetic datasets and query workloads.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Query, RangePredicate, Workload};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DimSource {
    /// Integers drawn uniformly from `[lo, hi)`.
    Uniform { lo: u64, hi: u64 },
    /// `slope * base + intercept` plus uniform noise of at most
    /// `noise * width(base)`, where `noise` is a fraction (0.01 = 1%).
    Linear { base: usize, slope: f64, intercept: f64, noise: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n: usize,
    pub dims: Vec<DimSource>,
}

impl DatasetSpec {
    /// `d` dimensions; the first half uniform over `[0, domain)`, the second
    /// half linearly correlated to the first half with the given noise.
    pub fn half_correlated(n: usize, d: usize, domain: u64, noise: f64) -> Self {
        let half = d.div_ceil(2);
        let dims = (0..d)
            .map(|i| {
                if i < half {
                    DimSource::Uniform { lo: 0, hi: domain }
                } else {
                    DimSource::Linear { base: i - half, slope: 1.0, intercept: 0.0, noise }
                }
            })
            .collect();
        Self { n, dims }
    }

    pub fn uniform(n: usize, d: usize, domain: u64) -> Self {
        Self { n, dims: vec![DimSource::Uniform { lo: 0, hi: domain }; d] }
    }

    /// Generation order with every base before its dependents.
    fn topo_order(&self) -> Result<Vec<usize>> {
        let d = self.dims.len();
        let mut state = vec![0u8; d];
        let mut order = Vec::with_capacity(d);
        for start in 0..d {
            let mut chain = Vec::new();
            let mut cur = start;
            loop {
                match state[cur] {
                    2 => break,
                    1 => return Err(Error::Config(format!("cyclic correlation through dim {cur}"))),
                    _ => {}
                }
                state[cur] = 1;
                chain.push(cur);
                match self.dims[cur] {
                    DimSource::Linear { base, .. } => {
                        if base >= d {
                            return Err(Error::Config(format!("dim {cur} correlates to missing dim {base}")));
                        }
                        cur = base;
                    }
                    DimSource::Uniform { .. } => break,
                }
            }
            for &c in chain.iter().rev() {
                if state[c] != 2 {
                    state[c] = 2;
                    order.push(c);
                }
            }
        }
        Ok(order)
    }
}

pub fn generate_synthetic(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    if spec.n == 0 || spec.dims.is_empty() {
        return Err(Error::Config("dataset spec needs n > 0 and at least one dim".into()));
    }
    for (i, s) in spec.dims.iter().enumerate() {
        match *s {
            DimSource::Uniform { lo, hi } if lo >= hi => {
                return Err(Error::Config(format!("dim {i}: empty uniform range")))
            }
            DimSource::Linear { noise, slope, intercept, .. }
                if !(noise >= 0.0 && slope.is_finite() && intercept.is_finite()) =>
            {
                return Err(Error::Config(format!("dim {i}: invalid linear parameters")))
            }
            _ => {}
        }
    }
    let order = spec.topo_order()?;
    let mut columns: Vec<Vec<u64>> = vec![Vec::new(); spec.dims.len()];
    let mut widths = vec![0f64; spec.dims.len()];
    for &dim in &order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(dim as u64 + 1);
        let col: Vec<u64> = match spec.dims[dim] {
            DimSource::Uniform { lo, hi } => {
                widths[dim] = (hi - lo) as f64;
                (0..spec.n).map(|_| rng.gen_range(lo..hi)).collect()
            }
            DimSource::Linear { base, slope, intercept, noise } => {
                let band = noise * widths[base];
                let base_col = &columns[base];
                base_col
                    .iter()
                    .map(|&b| {
                        let target = slope * b as f64 + intercept;
                        let jitter = if band > 0.0 { rng.gen_range(-band..=band) } else { 0.0 };
                        let mut v = (target + jitter).round();
                        if band >= 0.5 {
                            v = v.clamp((target - band).ceil(), (target + band).floor());
                        }
                        v.max(0.0) as u64
                    })
                    .collect()
            }
        };
        let (mn, mx) = col.iter().fold((u64::MAX, 0), |(a, b), &v| (a.min(v), b.max(v)));
        if !matches!(spec.dims[dim], DimSource::Uniform { .. }) {
            widths[dim] = (mx - mn) as f64;
        }
        columns[dim] = col;
    }
    let domains = spec
        .dims
        .iter()
        .zip(&columns)
        .map(|(s, c)| match *s {
            DimSource::Uniform { hi, .. } => hi,
            DimSource::Linear { .. } => c.iter().copied().max().unwrap_or(0) + 1,
        })
        .collect();
    Dataset::with_domains(columns, domains)
}

/// Where the centers of a query type's predicates fall, as quantiles of the
/// filtered dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CenterDist {
    #[default]
    Uniform,
    /// Centers drawn uniformly from the quantile band `[lo, hi]`.
    Band { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub dim: usize,
    pub selectivity: f64,
    #[serde(default)]
    pub center: CenterDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTypeSpec {
    pub count: usize,
    pub filters: Vec<FilterSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub types: Vec<QueryTypeSpec>,
}

/// Per-dimension uniform row sample, sorted, used for quantiles and
/// selectivity estimates.
#[derive(Debug, Clone)]
pub struct ColumnSample {
    sorted: Vec<Vec<u64>>,
    domains: Vec<u64>,
}

impl ColumnSample {
    pub const DEFAULT_SIZE: usize = 100_000;

    pub fn new(ds: &Dataset, size: usize, seed: u64) -> Self {
        let rows = sample_rows(ds.n(), size, seed);
        let sorted = (0..ds.d())
            .map(|dim| {
                let col = ds.column(dim);
                let mut v: Vec<u64> = rows.iter().map(|&r| col[r as usize]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        Self { sorted, domains: ds.domains().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.sorted[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Estimated fraction of rows with `lo <= value <= hi` on `dim`.
    pub fn selectivity(&self, dim: usize, lo: u64, hi: u64) -> f64 {
        let s = &self.sorted[dim];
        if s.is_empty() || lo > hi {
            return 0.0;
        }
        let a = s.partition_point(|&v| v < lo);
        let b = s.partition_point(|&v| v <= hi);
        (b - a) as f64 / s.len() as f64
    }

    /// Value at quantile `q` in `[0, 1]`; 0 and 1 map to the domain ends.
    pub fn quantile(&self, dim: usize, q: f64) -> u64 {
        if q <= 0.0 {
            return 0;
        }
        if q >= 1.0 {
            return self.domains[dim].saturating_sub(1);
        }
        let s = &self.sorted[dim];
        let idx = ((s.len() - 1) as f64 * q).round() as usize;
        s[idx]
    }

    /// Selectivity embedding: one entry per predicate, in dimension order.
    pub fn embedding(&self, q: &Query) -> Vec<f64> {
        q.predicates().iter().map(|p| self.selectivity(p.dim, p.lo, p.hi)).collect()
    }
}

/// `min(size, n)` distinct row ids, sorted, deterministic in `seed`.
pub fn sample_rows(n: usize, size: usize, seed: u64) -> Vec<u32> {
    if size >= n {
        return (0..n as u32).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<u32> = index::sample(&mut rng, n, size).into_iter().map(|r| r as u32).collect();
    rows.sort_unstable();
    rows
}

/// Per-dimension selectivity embedding of `q`, estimated on a fixed-seed
/// uniform sample of `min(100_000, n)` rows.
pub fn selectivity_embedding(q: &Query, ds: &Dataset) -> Vec<f64> {
    ColumnSample::new(ds, ColumnSample::DEFAULT_SIZE, 0).embedding(q)
}

pub fn generate_workload(spec: &WorkloadSpec, ds: &Dataset, seed: u64) -> Result<Workload> {
    for (t, ty) in spec.types.iter().enumerate() {
        if ty.filters.is_empty() {
            return Err(Error::Config(format!("query type {t} has no filters")));
        }
        for f in &ty.filters {
            if !(f.selectivity > 0.0 && f.selectivity <= 1.0) {
                return Err(Error::Config(format!(
                    "query type {t}: selectivity {} outside (0, 1]",
                    f.selectivity
                )));
            }
            if f.dim >= ds.d() {
                return Err(Error::Config(format!("query type {t}: dim {} >= d={}", f.dim, ds.d())));
            }
            if let CenterDist::Band { lo, hi } = f.center {
                if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                    return Err(Error::Config(format!("query type {t}: bad center band")));
                }
            }
        }
    }
    let sample = ColumnSample::new(ds, ColumnSample::DEFAULT_SIZE, seed ^ 0x5eed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::new();
    for (t, ty) in spec.types.iter().enumerate() {
        for _ in 0..ty.count {
            let preds = ty
                .filters
                .iter()
                .map(|f| {
                    let (lo, hi) = predicate_bounds(&sample, f, &mut rng);
                    RangePredicate::new(f.dim, lo, hi)
                })
                .collect::<Result<Vec<_>>>()?;
            queries.push(Query::new(preds)?.with_type_hint(t));
        }
    }
    Ok(Workload::new(queries))
}

fn predicate_bounds(sample: &ColumnSample, f: &FilterSpec, rng: &mut ChaCha8Rng) -> (u64, u64) {
    if f.selectivity >= 1.0 {
        return (0, sample.domains[f.dim].saturating_sub(1));
    }
    let center = match f.center {
        CenterDist::Uniform => rng.gen_range(0.0..=1.0),
        CenterDist::Band { lo, hi } => {
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        }
    };
    let half = f.selectivity / 2.0;
    let (mut lo_q, mut hi_q) = (center - half, center + half);
    if lo_q < 0.0 {
        hi_q -= lo_q;
        lo_q = 0.0;
    }
    if hi_q > 1.0 {
        lo_q = (lo_q - (hi_q - 1.0)).max(0.0);
        hi_q = 1.0;
    }
    let lo = sample.quantile(f.dim, lo_q);
    let hi = sample.quantile(f.dim, hi_q).max(lo);
    (lo, hi)
}

use crate::error::{Error, Result};
use crate::workload::Query;

/// Bin layout of a query histogram over a half-open code range `[a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    boundaries: Vec<u64>,
    /// Every bin holds a single distinct data value, so no skew can exist
    /// inside a bin.
    atomic: bool,
}

impl Binning {
    /// `n_bins` equal-width bins. Ranges narrower than `n_bins` codes get one
    /// bin per code instead.
    pub fn equal_width(a: u64, b: u64, n_bins: usize) -> Result<Self> {
        check_range(a, b, n_bins)?;
        let width = b - a;
        if width <= n_bins as u64 {
            return Ok(Self { boundaries: (a..=b).collect(), atomic: true });
        }
        let boundaries = (0..=n_bins as u128)
            .map(|j| a + (width as u128 * j / n_bins as u128) as u64)
            .collect();
        Ok(Self { boundaries, atomic: false })
    }

    /// One bin per distinct value. `values` must be sorted, deduplicated and
    /// inside `[a, b)`; the first bin is stretched down to `a` so the bins
    /// still tile the range.
    pub fn unique_values(a: u64, b: u64, values: &[u64]) -> Result<Self> {
        check_range(a, b, 2)?;
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("unique values must be sorted and nonempty".into()));
        }
        if values[0] < a || *values.last().unwrap() >= b {
            return Err(Error::InvalidArgument("unique values outside the range".into()));
        }
        let mut boundaries = Vec::with_capacity(values.len() + 1);
        boundaries.push(a);
        boundaries.extend_from_slice(&values[1..]);
        boundaries.push(b);
        Ok(Self { boundaries, atomic: true })
    }

    /// Equal-width unless the data has fewer than `n_bins` distinct values.
    pub fn for_range(a: u64, b: u64, n_bins: usize, unique: Option<&[u64]>) -> Result<Self> {
        match unique {
            Some(u) if !u.is_empty() && u.len() < n_bins => Self::unique_values(a, b, u),
            _ => Self::equal_width(a, b, n_bins),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn is_atomic(&self) -> bool {
        self.atomic
    }

    pub fn range(&self) -> (u64, u64) {
        (self.boundaries[0], *self.boundaries.last().unwrap())
    }

    /// Bin containing `v`, clamped to the first and last bin.
    pub fn bin_of(&self, v: u64) -> usize {
        self.boundaries
            .partition_point(|&x| x <= v)
            .saturating_sub(1)
            .min(self.n_bins() - 1)
    }
}

fn check_range(a: u64, b: u64, n_bins: usize) -> Result<()> {
    if a >= b {
        return Err(Error::InvalidArgument(format!("empty histogram range [{a}, {b})")));
    }
    if n_bins < 2 {
        return Err(Error::InvalidArgument("histogram needs at least 2 bins".into()));
    }
    Ok(())
}

/// Empirical placement PDF of a set of queries on one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryHistogram {
    pub dim: usize,
    binning: Binning,
    masses: Vec<f64>,
}

impl QueryHistogram {
    /// Each inclusive interval that intersects the binned range spreads one
    /// unit of mass evenly over the bins it touches.
    pub fn from_intervals(dim: usize, binning: Binning, intervals: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut masses = vec![0.0; binning.n_bins()];
        let (a, b) = binning.range();
        for (lo, hi) in intervals {
            if hi < a || lo >= b {
                continue;
            }
            let first = binning.bin_of(lo.max(a));
            let last = binning.bin_of(hi.min(b - 1));
            let share = 1.0 / (last - first + 1) as f64;
            for m in &mut masses[first..=last] {
                *m += share;
            }
        }
        Self { dim, binning, masses }
    }

    /// Queries that do not filter `dim` span the whole range.
    pub fn from_queries<'a>(dim: usize, binning: Binning, queries: impl IntoIterator<Item = &'a Query>) -> Self {
        let full = binning.range();
        let intervals = queries.into_iter().map(|q| match q.predicate(dim) {
            Some(p) => (p.lo, p.hi),
            None => (full.0, full.1 - 1),
        });
        Self::from_intervals(dim, binning, intervals)
    }

    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Histogram of `queries` on `dim` over `[a, b)` with `n_bins` equal-width
/// bins (or one bin per code when the range is narrower than that).
pub fn build_histogram(queries: &[&Query], dim: usize, a: u64, b: u64, n_bins: usize) -> Result<QueryHistogram> {
    Ok(QueryHistogram::from_queries(dim, Binning::equal_width(a, b, n_bins)?, queries.iter().copied()))
}

use serde::{Deserialize, Serialize};

/// Default knot count of a per-dimension CDF model.
pub const DEFAULT_KNOTS: usize = 256;

/// Piecewise-linear model of the empirical CDF `F(v) = |{x < v}| / n`.
///
/// Knots are `(value, F(value))` pairs at evenly spaced ranks, so they are
/// exact empirical quantiles. Columns with at most `K + 1` distinct values
/// keep every distinct value and are modelled exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<u64>,
    cdfs: Vec<f64>,
}

impl EmpiricalCdf {
    /// `values` must be nonempty.
    pub fn fit(values: &[u64], knots: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        Self::fit_sorted(&sorted, knots)
    }

    pub fn fit_sorted(sorted: &[u64], knots: usize) -> Self {
        assert!(!sorted.is_empty(), "cannot fit a CDF to no values");
        let n = sorted.len();
        let knots = knots.max(1);
        let rank = |v: u64| sorted.partition_point(|&x| x < v) as f64 / n as f64;

        let mut distinct = 1;
        for w in sorted.windows(2) {
            if w[0] != w[1] {
                distinct += 1;
                if distinct > knots + 1 {
                    break;
                }
            }
        }

        let mut values = Vec::with_capacity(distinct.min(knots + 1));
        let mut cdfs = Vec::with_capacity(values.capacity());
        let mut push = |v: u64, c: f64| {
            if values.last() != Some(&v) {
                values.push(v);
                cdfs.push(c);
            }
        };
        if distinct <= knots + 1 {
            let mut i = 0;
            while i < n {
                push(sorted[i], i as f64 / n as f64);
                i += sorted[i..].partition_point(|&x| x == sorted[i]);
            }
        } else {
            for j in 0..=knots {
                let idx = ((j as u128 * (n - 1) as u128 + knots as u128 / 2) / knots as u128) as usize;
                push(sorted[idx], rank(sorted[idx]));
            }
        }
        Self { values, cdfs }
    }

    /// Monotone nondecreasing, 0 below the smallest value and 1 above the
    /// largest.
    pub fn eval(&self, x: u64) -> f64 {
        let i = self.values.partition_point(|&v| v < x);
        if i == self.values.len() {
            return 1.0;
        }
        if self.values[i] == x {
            return self.cdfs[i];
        }
        if i == 0 {
            return 0.0;
        }
        let (v0, v1) = (self.values[i - 1] as f64, self.values[i] as f64);
        let (c0, c1) = (self.cdfs[i - 1], self.cdfs[i]);
        c0 + (c1 - c0) * (x as f64 - v0) / (v1 - v0)
    }

    /// `min(floor(F(x) * p), p - 1)`.
    #[inline]
    pub fn partition(&self, x: u64, p: usize) -> usize {
        partition_of(self.eval(x), p)
    }

    pub fn min(&self) -> u64 {
        self.values[0]
    }

    pub fn max(&self) -> u64 {
        *self.values.last().unwrap()
    }

    pub fn num_knots(&self) -> usize {
        self.values.len()
    }

    pub fn knots(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().copied().zip(self.cdfs.iter().copied())
    }
}

#[inline]
pub fn partition_of(cdf: f64, p: usize) -> usize {
    ((cdf * p as f64) as usize).min(p - 1)
}

/// Partition interval `[l, h]` of the inclusive value range `[a, b]`, plus
/// whether the first and last partitions lie entirely inside `[a, b]`.
///
/// `None` when the range misses `[min, max]` entirely.
pub(crate) fn partition_span(
    part: impl Fn(u64) -> usize,
    min: u64,
    max: u64,
    p: usize,
    a: u64,
    b: u64,
) -> Option<Span> {
    if b < min || a > max {
        return None;
    }
    let l = part(a);
    let h = part(b);
    let low_exact = a <= min || part(a - 1) < l;
    let high_exact = b >= max || part(b + 1) > h;
    debug_assert!(l <= h && h < p);
    Some(Span { lo: l, hi: h, low_exact, high_exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Span {
    pub lo: usize,
    pub hi: usize,
    pub low_exact: bool,
    pub high_exact: bool,
}

impl Span {
    pub fn full(p: usize) -> Self {
        Self { lo: 0, hi: p - 1, low_exact: true, high_exact: true }
    }

    pub fn is_full_exact(&self, p: usize) -> bool {
        self.lo == 0 && self.hi == p - 1 && self.low_exact && self.high_exact
    }

    #[inline]
    pub fn exact(&self, j: usize) -> bool {
        (j > self.lo || self.low_exact) && (j < self.hi || self.high_exact)
    }
}

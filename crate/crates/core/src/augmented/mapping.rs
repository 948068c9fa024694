use serde::{Deserialize, Serialize};

/// Largest acceptable `err_lo + err_hi`, as a fraction of the target's range,
/// for the initial skeleton heuristic.
pub const MAX_MAPPING_ERROR: f64 = 0.10;

/// Linear predictor of the target dimension from the mapped dimension with
/// max-residual bounds: every fitted point has
/// `LR(y) - err_lo <= x <= LR(y) + err_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalMapping {
    pub mapped: usize,
    pub target: usize,
    pub slope: f64,
    pub intercept: f64,
    pub err_lo: f64,
    pub err_hi: f64,
}

impl FunctionalMapping {
    /// Ordinary least squares of `xs` on `ys`. `None` if `ys` has zero
    /// variance or the fitted slope is zero.
    pub fn fit(mapped: usize, target: usize, ys: &[u64], xs: &[u64]) -> Option<Self> {
        assert_eq!(ys.len(), xs.len());
        let n = ys.len() as f64;
        if ys.is_empty() {
            return None;
        }
        let my = ys.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mx = xs.iter().map(|&v| v as f64).sum::<f64>() / n;
        let (mut sxy, mut syy) = (0.0, 0.0);
        for (&y, &x) in ys.iter().zip(xs) {
            let dy = y as f64 - my;
            sxy += dy * (x as f64 - mx);
            syy += dy * dy;
        }
        if syy <= 0.0 {
            return None;
        }
        let slope = sxy / syy;
        if slope == 0.0 || !slope.is_finite() {
            return None;
        }
        let intercept = mx - slope * my;
        let mut m = Self { mapped, target, slope, intercept, err_lo: 0.0, err_hi: 0.0 };
        for (&y, &x) in ys.iter().zip(xs) {
            let r = x as f64 - m.predict(y as f64);
            m.err_hi = m.err_hi.max(r);
            m.err_lo = m.err_lo.max(-r);
        }
        Some(m)
    }

    #[inline]
    pub fn predict(&self, y: f64) -> f64 {
        self.slope * y + self.intercept
    }

    pub fn error_span(&self) -> f64 {
        self.err_lo + self.err_hi
    }

    /// Conservative predicate on the target for the inclusive predicate
    /// `[y0, y1]` on the mapped dimension. `None` when no fitted point can
    /// satisfy it.
    pub fn induce(&self, y0: u64, y1: u64) -> Option<(u64, u64)> {
        let (a, b) = (self.predict(y0 as f64), self.predict(y1 as f64));
        let (lo, hi) = if self.slope > 0.0 { (a, b) } else { (b, a) };
        let lo = lo - self.err_lo;
        let hi = hi + self.err_hi;
        // Absorb rounding in the residual computation.
        let lo = (lo - 1e-6 * lo.abs().max(1.0)).ceil();
        let hi = (hi + 1e-6 * hi.abs().max(1.0)).floor();
        if hi < 0.0 || lo > hi || lo >= u64::MAX as f64 {
            return None;
        }
        let lo = lo.max(0.0) as u64;
        let hi = if hi >= u64::MAX as f64 { u64::MAX } else { hi as u64 };
        Some((lo, hi))
    }
}

/// Fits a mapping and keeps it only when its error band is within
/// [`MAX_MAPPING_ERROR`] of `target_width`.
pub fn fit_functional_mapping(
    mapped: usize,
    target: usize,
    ys: &[u64],
    xs: &[u64],
    target_width: u64,
) -> Option<FunctionalMapping> {
    FunctionalMapping::fit(mapped, target, ys, xs)
        .filter(|m| m.error_span() <= MAX_MAPPING_ERROR * target_width.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_relation() {
        let ys: Vec<u64> = (0..100).collect();
        let xs: Vec<u64> = ys.iter().map(|y| 3 * y).collect();
        let m = FunctionalMapping::fit(1, 0, &ys, &xs).unwrap();
        assert!((m.slope - 3.0).abs() < 1e-9);
        assert!(m.intercept.abs() < 1e-6);
        assert!(m.err_lo < 1e-6 && m.err_hi < 1e-6);
        assert_eq!(m.induce(2, 5), Some((6, 15)));
    }

    #[test]
    fn formula_with_error_bounds() {
        let m = FunctionalMapping { mapped: 1, target: 0, slope: 1.0, intercept: 0.0, err_lo: 2.0, err_hi: 3.0 };
        assert_eq!(m.induce(10, 20), Some((8, 23)));
    }

    #[test]
    fn negative_slope_swaps_endpoints() {
        let ys: Vec<u64> = (0..100).collect();
        let xs: Vec<u64> = ys.iter().map(|y| 1000 - 2 * y).collect();
        let m = FunctionalMapping::fit(1, 0, &ys, &xs).unwrap();
        assert_eq!(m.induce(10, 20), Some((960, 980)));
    }

    #[test]
    fn constant_mapped_dim_is_rejected() {
        assert!(FunctionalMapping::fit(1, 0, &[5; 10], &(0..10).collect::<Vec<_>>()).is_none());
    }

    #[test]
    fn wide_error_band_is_rejected() {
        let ys: Vec<u64> = (0..1000).collect();
        let xs: Vec<u64> = (0..1000u64).map(|i| (i * 7919) % 1000).collect();
        assert!(fit_functional_mapping(1, 0, &ys, &xs, 1000).is_none());
    }
}

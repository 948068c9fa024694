use serde::{Deserialize, Serialize};

use super::cdf::{EmpiricalCdf, DEFAULT_KNOTS};

/// CDF of a dependent dimension conditioned on the partition of its base
/// dimension: one CDF model per base partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCdf {
    pub dependent: usize,
    pub base: usize,
    pub base_partitions: usize,
    /// `None` for base partitions that hold no points.
    cdfs: Vec<Option<EmpiricalCdf>>,
}

impl ConditionalCdf {
    /// Knots per base partition, so total storage stays near one CDF's.
    pub fn knots_for(base_partitions: usize) -> usize {
        8.max(DEFAULT_KNOTS / base_partitions.max(1))
    }

    /// `base_parts[i]` is the base partition of point `i`, `dep_values[i]` its
    /// dependent-dimension value.
    pub fn fit(dependent: usize, base: usize, base_partitions: usize, base_parts: &[u32], dep_values: &[u64]) -> Self {
        let mut groups: Vec<Vec<u64>> = vec![Vec::new(); base_partitions];
        for (&b, &v) in base_parts.iter().zip(dep_values) {
            groups[b as usize].push(v);
        }
        let knots = Self::knots_for(base_partitions);
        let cdfs = groups
            .into_iter()
            .map(|mut g| {
                (!g.is_empty()).then(|| {
                    g.sort_unstable();
                    EmpiricalCdf::fit_sorted(&g, knots)
                })
            })
            .collect();
        Self { dependent, base, base_partitions, cdfs }
    }

    pub fn cdf(&self, base_part: usize) -> Option<&EmpiricalCdf> {
        self.cdfs[base_part].as_ref()
    }

    /// CDF value of `y` within base partition `base_part` (0 for an empty
    /// base partition).
    #[inline]
    pub fn eval(&self, base_part: usize, y: u64) -> f64 {
        self.cdfs[base_part].as_ref().map_or(0.0, |c| c.eval(y))
    }

    pub fn num_knots(&self) -> usize {
        self.cdfs.iter().flatten().map(EmpiricalCdf::num_knots).sum()
    }
}

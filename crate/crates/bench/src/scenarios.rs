//! Named synthetic benchmark configurations.

use serde::{Deserialize, Serialize};
use tsunami_core::workload::{CenterDist, DatasetSpec, FilterSpec, QueryTypeSpec, WorkloadSpec};

pub const DOMAIN: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Uniform data, uniformly placed queries.
    Uniform,
    /// Uniform data, two query types, one concentrated in a narrow band.
    Skewed,
    /// Half the dimensions linear in the other half, two skewed query types
    /// that filter correlated dimensions.
    SkewedCorrelated,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Uniform, Scenario::Skewed, Scenario::SkewedCorrelated];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Uniform => "uniform",
            Scenario::Skewed => "skewed",
            Scenario::SkewedCorrelated => "skewed_correlated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn dataset(self, n: usize) -> DatasetSpec {
        match self {
            Scenario::Uniform | Scenario::Skewed => DatasetSpec::uniform(n, 4, DOMAIN),
            Scenario::SkewedCorrelated => DatasetSpec::half_correlated(n, 6, DOMAIN, 0.01),
        }
    }

    /// `queries` split evenly over the types; every query selects about 1%
    /// of the rows.
    pub fn workload(self, queries: usize) -> WorkloadSpec {
        let a = queries / 2;
        let b = queries - a;
        let f = |dim, selectivity, center| FilterSpec { dim, selectivity, center };
        let band = |lo, hi| CenterDist::Band { lo, hi };
        let types = match self {
            Scenario::Uniform => vec![
                QueryTypeSpec { count: a, filters: vec![f(0, 0.1, CenterDist::Uniform), f(1, 0.1, CenterDist::Uniform)] },
                QueryTypeSpec { count: b, filters: vec![f(2, 0.1, CenterDist::Uniform), f(3, 0.1, CenterDist::Uniform)] },
            ],
            Scenario::Skewed => vec![
                QueryTypeSpec { count: a, filters: vec![f(0, 0.02, band(0.80, 0.90)), f(1, 0.5, CenterDist::Uniform)] },
                QueryTypeSpec { count: b, filters: vec![f(0, 0.1, band(0.0, 0.5)), f(2, 0.1, CenterDist::Uniform)] },
            ],
            Scenario::SkewedCorrelated => vec![
                QueryTypeSpec { count: a, filters: vec![f(0, 0.02, band(0.80, 0.90)), f(1, 0.5, CenterDist::Uniform)] },
                QueryTypeSpec { count: b, filters: vec![f(3, 0.1, band(0.0, 0.5)), f(2, 0.1, CenterDist::Uniform)] },
            ],
        };
        WorkloadSpec { types }
    }

    /// A second workload over the same data for shift experiments: other
    /// dimensions, other hot bands.
    pub fn shifted_workload(self, queries: usize) -> WorkloadSpec {
        let a = queries / 2;
        let b = queries - a;
        let f = |dim, selectivity, center| FilterSpec { dim, selectivity, center };
        let band = |lo, hi| CenterDist::Band { lo, hi };
        let types = match self {
            Scenario::SkewedCorrelated => vec![
                QueryTypeSpec { count: a, filters: vec![f(4, 0.02, band(0.10, 0.20)), f(5, 0.5, CenterDist::Uniform)] },
                QueryTypeSpec { count: b, filters: vec![f(1, 0.1, band(0.5, 1.0)), f(0, 0.1, CenterDist::Uniform)] },
            ],
            _ => vec![
                QueryTypeSpec { count: a, filters: vec![f(3, 0.02, band(0.10, 0.20)), f(2, 0.5, CenterDist::Uniform)] },
                QueryTypeSpec { count: b, filters: vec![f(1, 0.1, band(0.5, 1.0)), f(0, 0.1, CenterDist::Uniform)] },
            ],
        };
        WorkloadSpec { types }
    }
}

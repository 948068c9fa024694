//! Augmented Grid: a per-region grid whose dimensions are partitioned by
//! their own CDF, by a CDF conditioned on another dimension, or removed in
//! favour of a functional mapping onto another dimension.

mod cdf;
mod conditional;
mod grid;
mod mapping;
mod models;
mod skeleton;

pub use cdf::{partition_of, EmpiricalCdf, DEFAULT_KNOTS};
pub use conditional::ConditionalCdf;
pub use grid::{
    build_grid, build_grid_with_layout, counting_sort, runs_to_ranges, AugmentedGrid, CellRun, GridLayout,
    MAX_CELLS,
};
pub use mapping::{fit_functional_mapping, FunctionalMapping, MAX_MAPPING_ERROR};
pub use models::ModelCache;
pub use skeleton::{Skeleton, Strategy};

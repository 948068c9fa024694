//! Workload-aware learned multi-dimensional index.
//!
//! The index is a composition of two structures:
//!
//! * a [`grid_tree::GridTree`] that splits data space into non-overlapping
//!   regions so that, inside every region, the sample query workload has
//!   little query skew, and
//! * one [`augmented::AugmentedGrid`] per queried region, a grid whose
//!   per-dimension partitioning strategy (independent CDF, functional
//!   mapping, or conditional CDF) is tuned to the correlations present in
//!   that region's data.
//!
//! [`index::TsunamiIndex`] ties them together on top of the column store in
//! [`store`], and [`baselines`] provides the reference indexes used by the
//! benchmark harness.

pub mod augmented;
pub mod clock;
pub mod baselines;
pub mod error;
pub mod grid_tree;
pub mod index;
pub mod optimizer;
pub mod oracle;
pub mod skew;
pub mod store;
pub mod workload;

pub use error::{Error, Result};
pub use index::{TsunamiConfig, TsunamiIndex};
pub use store::{PhysicalRange, ScanStats};
pub use workload::{Dataset, Query, QueryType, RangePredicate, Workload};

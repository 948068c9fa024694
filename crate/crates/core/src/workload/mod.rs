//! Datasets, queries, ingestion, synthetic generation and query-type
//! clustering.

mod cluster;
mod dataset;
mod ingest;
mod query;
pub mod synth;

pub use cluster::{cluster_query_types, cluster_with_sample, dbscan, min_points_for, CLUSTER_EPS};
pub use dataset::Dataset;
pub use ingest::{ingest_csv, ingest_reader, ColumnKind, ColumnSpec};
pub use query::{Query, QueryType, RangePredicate, Workload};
pub use synth::{
    generate_synthetic, generate_workload, sample_rows, selectivity_embedding, CenterDist, ColumnSample,
    DatasetSpec, DimSource, FilterSpec, QueryTypeSpec, WorkloadSpec,
};

//! Query skew: per-dimension query histograms, the 1-D earth mover's
//! distance, skew trees and split selection for the Grid Tree.

mod emd;
mod histogram;
mod split;
mod tree;

pub use emd::{emd_1d, skew_of};
pub use histogram::{build_histogram, Binning, QueryHistogram};
pub use split::{
    best_split_for_dim, select_split, skew_all_types, DimSkew, LeafReason, NodeContext, SplitChoice,
    SplitDecision, SplitParams,
};
pub use tree::{
    leaf_edges, merge_covering_nodes, optimal_covering_set, split_values, Cover, CoverSegment, SkewNode,
    SkewTree,
};

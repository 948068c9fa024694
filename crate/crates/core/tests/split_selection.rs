//! Split selection on a two-type workload over a 48-month time dimension:
//! one type scans year-long windows anywhere, the other scans single months
//! of the last year only.

use tsunami_core::grid_tree::{GridTree, GridTreeParams};
use tsunami_core::skew::{select_split, skew_all_types, NodeContext, SplitDecision, SplitParams};
use tsunami_core::workload::{Dataset, Query, QueryType, Workload};

fn workload() -> (Vec<Query>, Vec<Query>) {
    let mut yearly = Vec::new();
    for rep in 0..3u64 {
        for start in 0..=36u64 {
            yearly.push(Query::from_ranges(&[(0, start, start + 11), (1, rep * 10, rep * 10 + 50)]).unwrap());
        }
    }
    let mut monthly = Vec::new();
    for rep in 0..9 {
        for m in 36..48u64 {
            monthly.push(Query::from_ranges(&[(0, m, m), (1, rep * 5, rep * 5 + 40)]).unwrap());
        }
    }
    (yearly, monthly)
}

#[test]
fn splits_time_at_the_start_of_the_last_year() {
    let (yearly, monthly) = workload();
    let types = vec![yearly.iter().collect::<Vec<_>>(), monthly.iter().collect::<Vec<_>>()];
    let bounds = [(0, 47), (0, 99)];
    let total = yearly.len() + monthly.len();
    let ctx = NodeContext {
        bounds: &bounds,
        types: &types,
        unique: &[None, None],
        points: 48_000,
        total_points: 48_000,
        total_queries: total,
    };
    match select_split(&ctx, &SplitParams::default()).unwrap() {
        SplitDecision::Split(c) => {
            assert_eq!(c.dim, 0);
            assert!(c.values.contains(&36), "{:?}", c.values);
        }
        other => panic!("expected a split, got {other:?}"),
    }
}

#[test]
fn split_reduces_skew_of_the_monthly_type() {
    let (_, monthly) = workload();
    let types = vec![monthly.iter().collect::<Vec<_>>()];
    let whole = skew_all_types(&types, 0, (0, 47), 128).unwrap();
    let last_year = skew_all_types(&types, 0, (36, 47), 128).unwrap();
    assert!(whole > 0.0);
    assert!(last_year < 1e-9);
}

#[test]
fn grid_tree_separates_the_last_year() {
    let (yearly, monthly) = workload();
    let mut time = Vec::new();
    let mut other = Vec::new();
    for m in 0..48u64 {
        for k in 0..1000u64 {
            time.push(m);
            other.push((k * 7) % 100);
        }
    }
    let ds = Dataset::from_columns(vec![time, other]).unwrap();
    let mut queries = yearly.clone();
    queries.extend(monthly.iter().cloned());
    let types = vec![
        QueryType { id: 0, filtered_dims: vec![0, 1], members: (0..yearly.len()).collect() },
        QueryType { id: 1, filtered_dims: vec![0, 1], members: (yearly.len()..queries.len()).collect() },
    ];
    let w = Workload { queries, types };
    let tree = GridTree::build(&ds, &w, &GridTreeParams::default()).unwrap();
    assert!(tree.num_regions() >= 2);
    assert!(tree.regions().iter().any(|r| r.bounds[0].0 == 36));
    let total: usize = tree.regions().iter().map(|r| r.point_count).sum();
    assert_eq!(total, ds.n());
}

#[test]
fn uniform_workload_gives_single_region() {
    let ds = Dataset::from_columns(vec![(0..10_000).collect(), (0..10_000).map(|i| (i * 31) % 10_000).collect()]).unwrap();
    let queries: Vec<Query> = (0..200u64).map(|i| Query::from_ranges(&[(0, i * 50, i * 50 + 99)]).unwrap()).collect();
    let w = Workload {
        types: vec![QueryType { id: 0, filtered_dims: vec![0], members: (0..queries.len()).collect() }],
        queries,
    };
    let tree = GridTree::build(&ds, &w, &GridTreeParams::default()).unwrap();
    assert_eq!(tree.num_regions(), 1);
}

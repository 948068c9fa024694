//! Skew tree over `[0, 1000)` with eight leaves of width 125.

use std::collections::HashMap;

use tsunami_core::skew::{merge_covering_nodes, optimal_covering_set, SkewTree};

/// Node skews, keyed by half-open leaf range. The optimal cover is
/// `[0,250) [250,375) [375,500) [500,1000)` and the first two sum to 15.
fn node_skews() -> HashMap<(usize, usize), f64> {
    let mut t = HashMap::from([
        ((0, 8), 100.0),
        ((0, 4), 40.0),
        ((4, 8), 10.0),
        ((0, 2), 10.0),
        ((2, 4), 20.0),
        ((4, 6), 6.0),
        ((6, 8), 6.0),
        ((0, 1), 6.0),
        ((1, 2), 6.0),
        ((2, 3), 5.0),
        ((3, 4), 5.0),
    ]);
    for leaf in 4..8 {
        t.insert((leaf, leaf + 1), 4.0);
    }
    t
}

fn tree() -> (SkewTree, HashMap<(usize, usize), f64>) {
    let boundaries: Vec<u64> = (0..=8).map(|i| i * 125).collect();
    let edges: Vec<usize> = (0..=8).collect();
    let t = node_skews();
    let tree = SkewTree::build(&boundaries, &edges, |x, y| t[&(x, y)]);
    (tree, t)
}

#[test]
fn covering_set_split_values() {
    let (tree, _) = tree();
    assert_eq!(tree.num_leaves(), 8);
    assert_eq!(tree.node(tree.root()).range, (0, 1000));
    let cover = optimal_covering_set(&tree);
    let ranges: Vec<(u64, u64)> = cover.segments.iter().map(|s| s.range).collect();
    assert_eq!(ranges, vec![(0, 250), (250, 375), (375, 500), (500, 1000)]);
    assert_eq!(cover.split_values(), vec![250, 375, 500]);
    assert_eq!(cover.segments[0].skew + cover.segments[1].skew, 15.0);
    assert_eq!(cover.skew, 30.0);
}

#[test]
fn merge_removes_250_when_union_is_cheap() {
    let (tree, mut t) = tree();
    let cover = optimal_covering_set(&tree);
    // Skew(0, 375) = 16 < 15 * 1.1.
    t.insert((0, 3), 16.0);
    t.insert((0, 4), 40.0);
    t.insert((3, 8), 50.0);
    let merged = merge_covering_nodes(&cover.segments, |x, y| t.get(&(x, y)).copied().unwrap_or(1e9), 1.1);
    let values: Vec<u64> = merged.iter().skip(1).map(|s| s.range.0).collect();
    assert_eq!(values, vec![375, 500]);
}

#[test]
fn merge_keeps_250_when_union_is_expensive() {
    let (tree, mut t) = tree();
    let cover = optimal_covering_set(&tree);
    t.insert((0, 3), 17.0);
    t.insert((2, 4), 20.0);
    t.insert((3, 8), 50.0);
    let merged = merge_covering_nodes(&cover.segments, |x, y| t.get(&(x, y)).copied().unwrap_or(1e9), 1.1);
    let values: Vec<u64> = merged.iter().skip(1).map(|s| s.range.0).collect();
    assert_eq!(values, vec![250, 375, 500]);
}

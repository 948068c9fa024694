//! Augmented Grids answer exactly like a full scan, for every valid skeleton.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsunami_core::augmented::{build_grid, Skeleton, Strategy};
use tsunami_core::store::{brute_force_count, reorder, scan_count, ScanStats};
use tsunami_core::workload::{Dataset, Query};

fn all_skeletons(d: usize) -> Vec<Skeleton> {
    let options = |i: usize| {
        let mut o = vec![Strategy::Independent];
        for j in (0..d).filter(|&j| j != i) {
            o.push(Strategy::Mapped { target: j });
            o.push(Strategy::Dependent { base: j });
        }
        o
    };
    let mut out = vec![Vec::new()];
    for i in 0..d {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Strategy>| {
                options(i).into_iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(Skeleton).filter(Skeleton::is_valid).collect()
}

/// dim 0 uniform, dim 1 = 2 * dim 0 + noise, dim 2 few distinct values.
fn dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..1000)).collect();
    let y: Vec<u64> = x.iter().map(|&v| 2 * v + rng.gen_range(0..40)).collect();
    let z: Vec<u64> = (0..n).map(|_| rng.gen_range(0..5)).collect();
    Dataset::from_columns(vec![x, y, z]).unwrap()
}

fn random_query(rng: &mut ChaCha8Rng) -> Query {
    loop {
        let mut r = Vec::new();
        for (dim, max) in [(0usize, 1100u64), (1, 2200), (2, 7)] {
            if rng.gen_bool(0.6) {
                let a = rng.gen_range(0..max);
                let b = rng.gen_range(a..=max);
                r.push((dim, a, b));
            }
        }
        if let Ok(q) = Query::from_ranges(&r) {
            return q;
        }
    }
}

#[test]
fn every_three_dim_skeleton_is_exact() {
    let ds = dataset(3000, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let skeletons = all_skeletons(3);
    assert!(skeletons.len() > 20);
    for skel in skeletons {
        let p = [4, 5, 3];
        let Ok((grid, perm)) = build_grid(&ds, &skel, &p) else { continue };
        let store = reorder(&ds, &perm).unwrap();
        for _ in 0..40 {
            let q = random_query(&mut rng);
            let mut stats = ScanStats::default();
            let got = scan_count(&store, &grid.ranges(&q, 0), q.predicates(), &mut stats).unwrap();
            assert_eq!(got, brute_force_count(&ds, q.predicates()), "{skel} {q:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_layouts_are_exact(
        seed in 0u64..1000,
        skel_idx in 0usize..1000,
        p in prop::collection::vec(1usize..12, 3),
        n in 1usize..1500,
    ) {
        let ds = dataset(n, seed);
        let skeletons = all_skeletons(3);
        let skel = &skeletons[skel_idx % skeletons.len()];
        let built = build_grid(&ds, skel, &p);
        prop_assume!(built.is_ok());
        let (grid, perm) = built.unwrap();
        prop_assert_eq!(grid.num_points(), n);
        let store = reorder(&ds, &perm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        for _ in 0..20 {
            let q = random_query(&mut rng);
            let ranges = grid.ranges(&q, 0);
            prop_assert!(ranges.windows(2).all(|w| w[0].end <= w[1].start));
            let got = scan_count(&store, &ranges, q.predicates(), &mut ScanStats::default()).unwrap();
            prop_assert_eq!(got, brute_force_count(&ds, q.predicates()));
        }
    }
}

#[test]
fn table3_one_hop_neighbours() {
    let x = Strategy::Independent;
    let skel = Skeleton(vec![x, Strategy::Dependent { base: 0 }, x]);
    let mut got: Vec<String> = skel.one_hop_neighbors().iter().map(|s| s.to_string()).collect();
    got.sort();
    let mut want = vec!["[0, 1, 2]", "[0, 1|2, 2]", "[0, 1->0, 2]", "[0, 1->2, 2]", "[0, 1|0, 2|0]", "[0, 1|0, 2->0]"];
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn uniform_partitions_are_equally_filled() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let ds = Dataset::from_columns(vec![
        (0..n).map(|_| rng.gen_range(0..1_000_000)).collect(),
        (0..n).map(|_| rng.gen_range(0..1_000_000)).collect(),
    ])
    .unwrap();
    let p = [10, 7];
    let (grid, perm) = build_grid(&ds, &Skeleton::all_independent(2), &p).unwrap();
    let store = reorder(&ds, &perm).unwrap();
    for (dim, &pi) in p.iter().enumerate() {
        let mut counts = vec![0usize; pi];
        for r in 0..store.n() {
            counts[grid.layout.cell_coordinates(&store.row(r))[dim]] += 1;
        }
        let expect = n as f64 / pi as f64;
        for c in counts {
            assert!((c as f64 - expect).abs() <= 0.02 * expect, "dim {dim}: {c} vs {expect}");
        }
    }
}

#[test]
fn rows_are_sorted_by_cell() {
    let ds = dataset(2000, 4);
    let skel = Skeleton(vec![Strategy::Independent, Strategy::Dependent { base: 0 }, Strategy::Independent]);
    let (grid, perm) = build_grid(&ds, &skel, &[6, 6, 2]).unwrap();
    let store = reorder(&ds, &perm).unwrap();
    let cells: Vec<usize> = (0..store.n()).map(|r| grid.layout.cell_of(&store.row(r))).collect();
    assert!(cells.windows(2).all(|w| w[0] <= w[1]));
    for (c, w) in grid.offsets.windows(2).enumerate() {
        assert!(cells[w[0] as usize..w[1] as usize].iter().all(|&x| x == c));
    }
}

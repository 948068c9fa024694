//! Column-store scans: reorder-by-permutation and counted range scans with
//! the exact-range skip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{Dataset, RangePredicate};

/// Rows `[start, end)` of the store. `exact` promises that every row in the
/// range satisfies every predicate of the query it was produced for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalRange {
    pub start: usize,
    pub end: usize,
    pub exact: bool,
}

impl PhysicalRange {
    pub fn new(start: usize, end: usize, exact: bool) -> Self {
        Self { start, end, exact }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn shifted(self, by: usize) -> Self {
        Self { start: self.start + by, end: self.end + by, exact: self.exact }
    }
}

/// Scan instrumentation, accumulated across calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    /// Physical ranges visited.
    pub ranges: u64,
    /// Rows whose values were checked against the predicates.
    pub points_scanned: u64,
    /// `points_scanned` times the number of predicate columns read.
    pub point_dims_scanned: u64,
    /// Rows counted from exact ranges without touching column data.
    pub exact_rows: u64,
}

impl ScanStats {
    pub fn add(&mut self, other: &ScanStats) {
        self.ranges += other.ranges;
        self.points_scanned += other.points_scanned;
        self.point_dims_scanned += other.point_dims_scanned;
        self.exact_rows += other.exact_rows;
    }
}

/// Row `i` of the result is row `perm[i]` of `ds`.
pub fn reorder(ds: &Dataset, perm: &[u32]) -> Result<Dataset> {
    let n = ds.n();
    if perm.len() != n {
        return Err(Error::InvalidArgument(format!("permutation has {} entries, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        let p = p as usize;
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("permutation is not a bijection".into()));
        }
    }
    let columns = ds
        .columns()
        .iter()
        .map(|col| perm.iter().map(|&p| col[p as usize]).collect())
        .collect();
    let mut out = Dataset::with_domains(columns, ds.domains().to_vec())?
        .with_scales((0..ds.d()).map(|i| ds.scale(i)).collect());
    if (0..ds.d()).any(|i| ds.dict(i).is_some()) {
        out = out.with_dicts((0..ds.d()).map(|i| ds.dict(i).map(<[String]>::to_vec)).collect());
    }
    Ok(out)
}

const BLOCK: usize = 1024;

/// Counts rows inside `ranges` that satisfy every predicate.
///
/// Exact ranges contribute their length without reading any column. Only the
/// columns of the filtered dimensions are read.
pub fn scan_count(
    ds: &Dataset,
    ranges: &[PhysicalRange],
    predicates: &[RangePredicate],
    stats: &mut ScanStats,
) -> Result<u64> {
    let n = ds.n();
    for r in ranges {
        if r.start > r.end || r.end > n {
            return Err(Error::InvalidArgument(format!(
                "range [{}, {}) out of bounds for {n} rows",
                r.start, r.end
            )));
        }
    }
    if let Some(p) = predicates.iter().find(|p| p.dim >= ds.d()) {
        return Err(Error::InvalidArgument(format!("predicate dim {} >= d={}", p.dim, ds.d())));
    }
    Ok(scan_count_unchecked(ds, ranges, predicates, stats))
}

/// [`scan_count`] without bounds validation, for ranges produced by an index
/// over the same store.
pub fn scan_count_unchecked(
    ds: &Dataset,
    ranges: &[PhysicalRange],
    predicates: &[RangePredicate],
    stats: &mut ScanStats,
) -> u64 {
    let filters: Vec<(&[u64], u64, u64)> = predicates
        .iter()
        .map(|p| (ds.column(p.dim), p.lo, p.hi - p.lo))
        .collect();
    let mut total = 0;
    for r in ranges {
        stats.ranges += 1;
        if r.exact || filters.is_empty() {
            total += r.len() as u64;
            stats.exact_rows += r.len() as u64;
            continue;
        }
        stats.points_scanned += r.len() as u64;
        stats.point_dims_scanned += (r.len() * filters.len()) as u64;
        total += count_matching(&filters, r.start, r.end);
    }
    total
}

/// Branch-free blockwise filter: each predicate column is read once per row
/// and folded into a byte mask.
fn count_matching(filters: &[(&[u64], u64, u64)], start: usize, end: usize) -> u64 {
    let mut mask = [0u8; BLOCK];
    let mut total = 0u64;
    let mut at = start;
    while at < end {
        let len = BLOCK.min(end - at);
        let mask = &mut mask[..len];
        let (col, lo, width) = filters[0];
        for (m, &v) in mask.iter_mut().zip(&col[at..at + len]) {
            *m = (v.wrapping_sub(lo) <= width) as u8;
        }
        for &(col, lo, width) in &filters[1..] {
            for (m, &v) in mask.iter_mut().zip(&col[at..at + len]) {
                *m &= (v.wrapping_sub(lo) <= width) as u8;
            }
        }
        total += mask.iter().map(|&m| m as u32).sum::<u32>() as u64;
        at += len;
    }
    total
}

/// Reference count by checking every row.
pub fn brute_force_count(ds: &Dataset, predicates: &[RangePredicate]) -> u64 {
    (0..ds.n())
        .filter(|&r| predicates.iter().all(|p| p.contains(ds.value(r, p.dim))))
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ds(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::from_columns(
            (0..3).map(|_| (0..n).map(|_| rng.gen_range(0..100)).collect()).collect(),
        )
        .unwrap()
    }

    fn preds(r: &[(usize, u64, u64)]) -> Vec<RangePredicate> {
        r.iter().map(|&(d, lo, hi)| RangePredicate::new(d, lo, hi).unwrap()).collect()
    }

    #[test]
    fn identity_and_reverse_permutations() {
        let ds = random_ds(50, 1);
        let id: Vec<u32> = (0..50).collect();
        assert_eq!(reorder(&ds, &id).unwrap(), ds);
        let rev: Vec<u32> = (0..50).rev().collect();
        assert_eq!(reorder(&reorder(&ds, &rev).unwrap(), &rev).unwrap(), ds);
    }

    #[test]
    fn reorder_preserves_column_multisets() {
        let ds = random_ds(500, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut perm: Vec<u32> = (0..500).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let out = reorder(&ds, &perm).unwrap();
        for d in 0..3 {
            let mut a = ds.column(d).to_vec();
            let mut b = out.column(d).to_vec();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
            for (i, &p) in perm.iter().enumerate() {
                assert_eq!(out.value(i, d), ds.value(p as usize, d));
            }
        }
    }

    #[test]
    fn non_bijective_permutation_is_rejected() {
        let ds = random_ds(4, 1);
        assert!(reorder(&ds, &[0, 1, 1, 3]).is_err());
        assert!(reorder(&ds, &[0, 1, 2]).is_err());
        assert!(reorder(&ds, &[0, 1, 2, 9]).is_err());
    }

    #[test]
    fn exact_range_skips_column_reads() {
        let ds = random_ds(100, 4);
        let mut stats = ScanStats::default();
        let c = scan_count(&ds, &[PhysicalRange::new(10, 20, true)], &preds(&[(0, 0, 5)]), &mut stats)
            .unwrap();
        assert_eq!(c, 10);
        assert_eq!(stats.points_scanned, 0);
        assert_eq!(stats.point_dims_scanned, 0);
    }

    #[test]
    fn empty_ranges_count_zero() {
        let ds = random_ds(100, 4);
        let mut stats = ScanStats::default();
        assert_eq!(scan_count(&ds, &[], &preds(&[(0, 0, 5)]), &mut stats).unwrap(), 0);
    }

    #[test]
    fn out_of_bounds_range_is_an_error() {
        let ds = random_ds(10, 4);
        let mut stats = ScanStats::default();
        assert!(scan_count(&ds, &[PhysicalRange::new(5, 11, false)], &[], &mut stats).is_err());
    }

    #[test]
    fn scan_matches_brute_force() {
        let ds = random_ds(5000, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let mut p = Vec::new();
            for d in 0..3 {
                if rng.gen_bool(0.6) {
                    let a = rng.gen_range(0..100);
                    let b = rng.gen_range(a..100);
                    p.push(RangePredicate::new(d, a, b).unwrap());
                }
            }
            let oracle = brute_force_count(&ds, &p);
            let mut stats = ScanStats::default();
            let full = scan_count(&ds, &[PhysicalRange::new(0, 5000, false)], &p, &mut stats).unwrap();
            assert_eq!(full, oracle);
            let split = [
                PhysicalRange::new(0, 1234, false),
                PhysicalRange::new(1234, 1235, false),
                PhysicalRange::new(1235, 5000, false),
            ];
            assert_eq!(scan_count(&ds, &split, &p, &mut stats).unwrap(), oracle);
            assert_eq!(stats.point_dims_scanned, 2 * 5000 * p.len() as u64);
        }
    }

    #[test]
    fn marking_truly_exact_range_keeps_count() {
        let ds = Dataset::from_columns(vec![(0..100).collect()]).unwrap();
        let p = preds(&[(0, 20, 60)]);
        let mut stats = ScanStats::default();
        let plain = scan_count(&ds, &[PhysicalRange::new(0, 100, false)], &p, &mut stats).unwrap();
        let with_exact = scan_count(
            &ds,
            &[
                PhysicalRange::new(0, 30, false),
                PhysicalRange::new(30, 50, true),
                PhysicalRange::new(50, 100, false),
            ],
            &p,
            &mut stats,
        )
        .unwrap();
        assert_eq!(plain, 41);
        assert_eq!(with_exact, plain);
    }
}

use std::sync::Arc;

use serde::Serialize;

use super::cdf::{partition_of, partition_span, EmpiricalCdf, Span};
use super::conditional::ConditionalCdf;
use super::mapping::FunctionalMapping;
use super::models::ModelCache;
use super::skeleton::{Skeleton, Strategy};
use crate::error::{Error, Result};
use crate::store::PhysicalRange;
use crate::workload::{Dataset, Query};

/// A run of consecutive cell ids `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellRun {
    pub start: usize,
    pub end: usize,
    /// Every point in these cells satisfies the query.
    pub exact: bool,
}

/// Skeleton, partition counts and fitted models: everything that decides
/// which cell a point falls into.
#[derive(Debug, Clone, Serialize)]
pub struct GridLayout {
    skeleton: Skeleton,
    /// Per dimension; mapped dimensions are forced to 1.
    partitions: Vec<usize>,
    order: Vec<usize>,
    strides: Vec<usize>,
    num_cells: usize,
    /// Inclusive data range per dimension of the fitted points.
    ranges: Vec<(u64, u64)>,
    #[serde(skip)]
    cdfs: Vec<Option<Arc<EmpiricalCdf>>>,
    mappings: Vec<Option<FunctionalMapping>>,
    #[serde(skip)]
    conditionals: Vec<Option<Arc<ConditionalCdf>>>,
}

/// Cell ids must fit in 32 bits.
pub const MAX_CELLS: usize = u32::MAX as usize;

impl GridLayout {
    pub(crate) fn from_models(
        skeleton: Skeleton,
        mut partitions: Vec<usize>,
        ranges: Vec<(u64, u64)>,
        cdfs: Vec<Option<Arc<EmpiricalCdf>>>,
        mappings: Vec<Option<FunctionalMapping>>,
        conditionals: Vec<Option<Arc<ConditionalCdf>>>,
    ) -> Result<Self> {
        for (dim, p) in partitions.iter_mut().enumerate() {
            if matches!(skeleton.strategy(dim), Strategy::Mapped { .. }) {
                *p = 1;
            } else if *p == 0 {
                return Err(Error::InvalidArgument(format!("dim {dim} has zero partitions")));
            }
        }
        let order = skeleton.grid_dims();
        let mut strides = vec![1; order.len()];
        let mut num_cells: usize = 1;
        for (pos, &dim) in order.iter().enumerate().rev() {
            strides[pos] = num_cells;
            num_cells = num_cells
                .checked_mul(partitions[dim])
                .filter(|&c| c <= MAX_CELLS)
                .ok_or_else(|| Error::InvalidArgument("too many grid cells".into()))?;
        }
        Ok(Self { skeleton, partitions, order, strides, num_cells, ranges, cdfs, mappings, conditionals })
    }

    /// Fits every model on `points`.
    pub fn fit(points: &Dataset, skeleton: &Skeleton, partitions: &[usize]) -> Result<Self> {
        ModelCache::new(points)?.layout(skeleton, partitions)
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn partitions(&self) -> &[usize] {
        &self.partitions
    }

    /// Grid dimensions in radix order; the last varies fastest.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn mapping(&self, dim: usize) -> Option<&FunctionalMapping> {
        self.mappings[dim].as_ref()
    }

    pub fn cdf(&self, dim: usize) -> Option<&EmpiricalCdf> {
        self.cdfs[dim].as_deref()
    }

    pub fn conditional(&self, dim: usize) -> Option<&ConditionalCdf> {
        self.conditionals[dim].as_deref()
    }

    /// Partition of `point` in every grid dimension, in radix order.
    pub fn cell_coordinates(&self, point: &[u64]) -> Vec<usize> {
        let mut parts = vec![0; self.skeleton.d()];
        for &dim in &self.order {
            parts[dim] = self.partition_of(dim, point[dim], &parts);
        }
        self.order.iter().map(|&d| parts[d]).collect()
    }

    pub fn cell_of(&self, point: &[u64]) -> usize {
        self.cell_coordinates(point).iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    #[inline]
    fn partition_of(&self, dim: usize, v: u64, parts: &[usize]) -> usize {
        let p = self.partitions[dim];
        match self.skeleton.strategy(dim) {
            Strategy::Dependent { base } => {
                partition_of(self.conditionals[dim].as_ref().unwrap().eval(parts[base], v), p)
            }
            _ => self.cdfs[dim].as_ref().unwrap().partition(v, p),
        }
    }

    /// Cell of every listed row of `ds`, computed column by column.
    pub fn assign_cells(&self, ds: &Dataset, rows: Option<&[u32]>) -> Vec<u32> {
        let n = rows.map_or(ds.n(), <[u32]>::len);
        let value = |dim: usize, i: usize| match rows {
            Some(r) => ds.value(r[i] as usize, dim),
            None => ds.value(i, dim),
        };
        let mut cells = vec![0u32; n];
        let mut parts: Vec<Option<Vec<u32>>> = vec![None; self.skeleton.d()];
        for (pos, &dim) in self.order.iter().enumerate() {
            let p = self.partitions[dim];
            let col: Vec<u32> = match self.skeleton.strategy(dim) {
                Strategy::Dependent { base } => {
                    let cond = self.conditionals[dim].as_ref().unwrap();
                    let bp = parts[base].as_ref().unwrap();
                    (0..n).map(|i| partition_of(cond.eval(bp[i] as usize, value(dim, i)), p) as u32).collect()
                }
                _ => {
                    let cdf = self.cdfs[dim].as_ref().unwrap();
                    (0..n).map(|i| cdf.partition(value(dim, i), p) as u32).collect()
                }
            };
            let stride = self.strides[pos] as u32;
            for (c, &j) in cells.iter_mut().zip(&col) {
                *c += j * stride;
            }
            parts[dim] = Some(col);
        }
        cells
    }

    /// Cell runs that may hold points matching `q`, in ascending order.
    pub fn plan(&self, q: &Query) -> Vec<CellRun> {
        let mut out = Vec::new();
        self.plan_into(q, &mut out);
        out
    }

    pub fn plan_into(&self, q: &Query, out: &mut Vec<CellRun>) {
        out.clear();
        let d = self.skeleton.d();
        let mut preds: Vec<Option<(u64, u64)>> = vec![None; d];
        for p in q.predicates() {
            if p.dim < d {
                preds[p.dim] = Some((p.lo, p.hi));
            }
        }

        // Rewrite mapped-dimension predicates onto their targets.
        let mut all_exact = true;
        for dim in 0..d {
            let (Some((a, b)), Some(m)) = (preds[dim], self.mappings[dim].as_ref()) else { continue };
            let (min, max) = self.ranges[dim];
            if b < min || a > max {
                return;
            }
            preds[dim] = None;
            if a <= min && b >= max {
                continue;
            }
            let Some((x0, x1)) = m.induce(a, b) else { return };
            let (lo, hi) = match preds[m.target] {
                Some((c, e)) => (x0.max(c), x1.min(e)),
                None => (x0, x1),
            };
            if lo > hi {
                return;
            }
            preds[m.target] = Some((lo, hi));
            all_exact = false;
        }

        let mut spans: Vec<Vec<Option<Span>>> = vec![Vec::new(); d];
        for &dim in &self.order {
            let p = self.partitions[dim];
            spans[dim] = match self.skeleton.strategy(dim) {
                Strategy::Dependent { .. } => {
                    let cond = self.conditionals[dim].as_ref().unwrap();
                    let per_base: Vec<Option<Span>> = (0..cond.base_partitions)
                        .map(|b| {
                            let cdf = cond.cdf(b)?;
                            match preds[dim] {
                                None => Some(Span::full(p)),
                                Some((a, e)) => partition_span(|x| cdf.partition(x, p), cdf.min(), cdf.max(), p, a, e),
                            }
                        })
                        .collect();
                    if per_base.iter().all(Option::is_none) {
                        return;
                    }
                    per_base
                }
                _ => {
                    let cdf = self.cdfs[dim].as_ref().unwrap();
                    let span = match preds[dim] {
                        None => Span::full(p),
                        Some((a, e)) => match partition_span(|x| cdf.partition(x, p), cdf.min(), cdf.max(), p, a, e) {
                            Some(s) => s,
                            None => return,
                        },
                    };
                    vec![Some(span)]
                }
            };
        }

        // Suffixes of the radix order that are covered completely, so their
        // whole block of cells can be emitted as one run.
        let k = self.order.len();
        let mut full = vec![true; k + 1];
        let mut full_exact = vec![true; k + 1];
        for pos in (0..k).rev() {
            let dim = self.order[pos];
            let p = self.partitions[dim];
            let is_full = spans[dim].iter().all(|s| s.is_some_and(|s| s.lo == 0 && s.hi == p - 1));
            let is_full_exact = spans[dim].iter().all(|s| s.is_some_and(|s| s.is_full_exact(p)));
            full[pos] = full[pos + 1] && is_full;
            full_exact[pos] = full_exact[pos + 1] && is_full_exact;
        }

        let mut parts = vec![0usize; d];
        let ctx = PlanCtx { layout: self, spans: &spans, full: &full, full_exact: &full_exact };
        ctx.walk(0, 0, all_exact, &mut parts, out);
    }

    /// Physical row ranges for `q` given the cell offset table of a built
    /// grid, shifted by `base` rows.
    pub fn physical_ranges(&self, q: &Query, offsets: &[u64], base: usize) -> Vec<PhysicalRange> {
        runs_to_ranges(&self.plan(q), offsets, base)
    }

    pub fn num_knots(&self) -> usize {
        self.cdfs.iter().flatten().map(|c| c.num_knots()).sum::<usize>()
            + self.conditionals.iter().flatten().map(|c| c.num_knots()).sum::<usize>()
    }
}

struct PlanCtx<'a> {
    layout: &'a GridLayout,
    spans: &'a [Vec<Option<Span>>],
    full: &'a [bool],
    full_exact: &'a [bool],
}

impl PlanCtx<'_> {
    fn walk(&self, pos: usize, cell: usize, exact: bool, parts: &mut [usize], out: &mut Vec<CellRun>) {
        let l = self.layout;
        let dim = l.order[pos];
        let p = l.partitions[dim];
        let stride = l.strides[pos];
        if (exact && self.full_exact[pos]) || (!exact && self.full[pos]) {
            push_run(out, cell, cell + stride * p, exact);
            return;
        }
        let span = match l.skeleton.strategy(dim) {
            Strategy::Dependent { base } => self.spans[dim][parts[base]],
            _ => self.spans[dim][0],
        };
        let Some(span) = span else { return };
        if pos + 1 == l.order.len() {
            push_run(out, cell + span.lo, cell + span.lo + 1, exact && span.exact(span.lo));
            if span.hi > span.lo + 1 {
                push_run(out, cell + span.lo + 1, cell + span.hi, exact);
            }
            if span.hi > span.lo {
                push_run(out, cell + span.hi, cell + span.hi + 1, exact && span.exact(span.hi));
            }
            return;
        }
        for j in span.lo..=span.hi {
            parts[dim] = j;
            self.walk(pos + 1, cell + j * stride, exact && span.exact(j), parts, out);
        }
    }
}

fn push_run(out: &mut Vec<CellRun>, start: usize, end: usize, exact: bool) {
    if let Some(last) = out.last_mut() {
        if last.end == start && last.exact == exact {
            last.end = end;
            return;
        }
    }
    out.push(CellRun { start, end, exact });
}

/// Maps cell runs to row ranges through an offset table, dropping empty
/// ranges and merging physically adjacent ones of equal exactness.
pub fn runs_to_ranges(runs: &[CellRun], offsets: &[u64], base: usize) -> Vec<PhysicalRange> {
    let mut out: Vec<PhysicalRange> = Vec::with_capacity(runs.len());
    for r in runs {
        let (s, e) = (offsets[r.start] as usize + base, offsets[r.end] as usize + base);
        if s == e {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.end == s && last.exact == r.exact => last.end = e,
            _ => out.push(PhysicalRange::new(s, e, r.exact)),
        }
    }
    out
}

/// A layout plus the cell lookup table of its region's rows.
#[derive(Debug, Clone, Serialize)]
pub struct AugmentedGrid {
    pub layout: GridLayout,
    /// `offsets[c]..offsets[c + 1]` are the region-local rows of cell `c`.
    #[serde(skip)]
    pub offsets: Vec<u64>,
}

impl AugmentedGrid {
    pub fn num_points(&self) -> usize {
        *self.offsets.last().unwrap() as usize
    }

    /// Lookup table size: `8 * (cells + 1)` bytes.
    pub fn size_bytes(&self) -> usize {
        8 * self.offsets.len()
    }

    /// Physical ranges for `q`, with region rows starting at `base`.
    pub fn ranges(&self, q: &Query, base: usize) -> Vec<PhysicalRange> {
        self.layout.physical_ranges(q, &self.offsets, base)
    }
}

/// Fits `skeleton` at `partitions` on `points` and sorts them by cell.
/// Returns the grid and the permutation: new local row `i` is old row
/// `perm[i]`. Points keep input order within a cell.
pub fn build_grid(points: &Dataset, skeleton: &Skeleton, partitions: &[usize]) -> Result<(AugmentedGrid, Vec<u32>)> {
    let layout = GridLayout::fit(points, skeleton, partitions)?;
    let cells = layout.assign_cells(points, None);
    let (offsets, perm) = counting_sort(&cells, layout.num_cells());
    Ok((AugmentedGrid { layout, offsets }, perm))
}

/// Grid for a layout fitted elsewhere, over `rows` of `ds`. The returned
/// permutation holds entries of `rows`.
pub fn build_grid_with_layout(layout: GridLayout, ds: &Dataset, rows: &[u32]) -> (AugmentedGrid, Vec<u32>) {
    let cells = layout.assign_cells(ds, Some(rows));
    let (offsets, local) = counting_sort(&cells, layout.num_cells());
    let perm = local.into_iter().map(|i| rows[i as usize]).collect();
    (AugmentedGrid { layout, offsets }, perm)
}

/// Stable counting sort of point indices by cell id.
pub fn counting_sort(cells: &[u32], num_cells: usize) -> (Vec<u64>, Vec<u32>) {
    let mut offsets = vec![0u64; num_cells + 1];
    for &c in cells {
        offsets[c as usize + 1] += 1;
    }
    for i in 0..num_cells {
        offsets[i + 1] += offsets[i];
    }
    let mut next = offsets.clone();
    let mut perm = vec![0u32; cells.len()];
    for (i, &c) in cells.iter().enumerate() {
        let slot = &mut next[c as usize];
        perm[*slot as usize] = i as u32;
        *slot += 1;
    }
    (offsets, perm)
}

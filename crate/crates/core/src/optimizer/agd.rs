use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluator::Evaluator;
use crate::augmented::{partition_of, Skeleton, Strategy, MAX_MAPPING_ERROR};

/// Fraction of empty probe cells above which a pair is treated as correlated.
pub const EMPTY_CELL_THRESHOLD: f64 = 0.25;
pub const PROBE_GRID: usize = 16;
pub const MAX_ITERATIONS: usize = 30;
/// Iterations improving cost by less than this fraction count as stalled.
pub const MIN_IMPROVEMENT: f64 = 0.01;
pub const MAX_STALLED: usize = 3;
const PROBE_FACTOR: f64 = 1.25;
const MAX_HALVINGS: usize = 6;

/// Target of about 200 points per cell, clamped to `[64, 4_000_000]`.
pub fn cell_budget(n_region: usize) -> usize {
    (n_region / 200).clamp(64, 4_000_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Heuristic initialization, then alternating gradient and skeleton steps.
    Agd,
    /// AGD from the all-independent skeleton.
    AgdNaiveInit,
    /// Gradient steps only, skeleton frozen at the heuristic initialization.
    GradientOnly,
    /// Gradient steps only on the all-independent skeleton.
    IndependentGradient,
    /// Seeded random-restart hill climbing from the heuristic initialization.
    HillClimb { iterations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub skeleton: Skeleton,
    /// One entry per dimension; entries of mapped dimensions are ignored.
    pub partitions: Vec<usize>,
    /// Predicted average query time in nanoseconds.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub skeleton: String,
    pub partitions: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub initial: GridConfig,
    pub best: GridConfig,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
}

pub fn optimize(ev: &mut Evaluator<'_>, kind: OptimizerKind) -> OptimizeResult {
    let naive = Skeleton::all_independent(ev.d());
    match kind {
        OptimizerKind::Agd => {
            let s = initialize_skeleton(ev);
            adaptive_gradient_descent(ev, s, false)
        }
        OptimizerKind::AgdNaiveInit => adaptive_gradient_descent(ev, naive, false),
        OptimizerKind::GradientOnly => {
            let s = initialize_skeleton(ev);
            adaptive_gradient_descent(ev, s, true)
        }
        OptimizerKind::IndependentGradient => adaptive_gradient_descent(ev, naive, true),
        OptimizerKind::HillClimb { iterations, seed } => {
            let s = initialize_skeleton(ev);
            random_restart_hillclimb(ev, s, iterations, seed)
        }
    }
}

/// Share of empty cells in a `PROBE_GRID x PROBE_GRID` grid over `(x, y)`,
/// both partitioned independently.
pub fn empty_cell_fraction(ev: &mut Evaluator<'_>, x: usize, y: usize) -> f64 {
    let vx = ev.cache().cdf_values(x);
    let vy = ev.cache().cdf_values(y);
    let mut seen = vec![false; PROBE_GRID * PROBE_GRID];
    for (&a, &b) in vx.iter().zip(vy.iter()) {
        seen[partition_of(a, PROBE_GRID) * PROBE_GRID + partition_of(b, PROBE_GRID)] = true;
    }
    seen.iter().filter(|s| !**s).count() as f64 / seen.len() as f64
}

/// Greedy heuristic skeleton. Each filtered dimension, widest average
/// filter first, becomes mapped onto the dimension it predicts best within
/// the error allowance, else dependent on the dimension leaving the most probe cells
/// empty, else stays independent. Targets and bases are pinned independent.
pub fn initialize_skeleton(ev: &mut Evaluator<'_>) -> Skeleton {
    let d = ev.d();
    let mut s = vec![Strategy::Independent; d];
    let mut pinned = vec![false; d];
    let ranges = ev.cache().ranges().to_vec();
    // A mapped filter is widened by the mapping error, which costs least
    // relative to a wide filter; wide dimensions therefore claim targets
    // before narrow ones.
    let sel = ev.grid_selectivities(&Skeleton(vec![Strategy::Independent; d]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sel[b].unwrap_or(0.0).total_cmp(&sel[a].unwrap_or(0.0)).then(a.cmp(&b)));
    for x in order {
        if pinned[x] || !ev.is_filtered(x) {
            continue;
        }
        let free = |y: usize, s: &[Strategy]| y != x && s[y] == Strategy::Independent;

        let mut best_map: Option<(f64, usize)> = None;
        for y in (0..d).filter(|&y| free(y, &s)) {
            let width = (ranges[y].1 - ranges[y].0 + 1) as f64;
            if let Some(m) = ev.cache().mapping(x, y) {
                let rel = m.error_span() / width;
                if rel <= MAX_MAPPING_ERROR && best_map.is_none_or(|(r, _)| rel < r) {
                    best_map = Some((rel, y));
                }
            }
        }
        if let Some((_, y)) = best_map {
            s[x] = Strategy::Mapped { target: y };
            pinned[y] = true;
            continue;
        }

        let mut best_dep: Option<(f64, usize)> = None;
        for y in (0..d).filter(|&y| free(y, &s)) {
            let empty = empty_cell_fraction(ev, x, y);
            if empty > EMPTY_CELL_THRESHOLD && best_dep.is_none_or(|(e, _)| empty > e) {
                best_dep = Some((empty, y));
            }
        }
        if let Some((_, y)) = best_dep {
            s[x] = Strategy::Dependent { base: y };
            pinned[y] = true;
        }
    }
    Skeleton(s)
}

/// Partition counts proportional to the inverse of each grid dimension's
/// average selectivity, scaled so their product approaches the budget.
/// Unconstrained bases get the smallest share; other unconstrained
/// dimensions get one partition.
pub fn initialize_partitions(ev: &mut Evaluator<'_>, skeleton: &Skeleton) -> Vec<usize> {
    let d = ev.d();
    let sel = ev.grid_selectivities(skeleton);
    let grid = skeleton.grid_dims();
    let mut weight: Vec<Option<f64>> = vec![None; d];
    for &g in &grid {
        weight[g] = sel[g].map(|s| 1.0 / s.max(1e-6));
    }
    let min_w = weight.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let min_w = if min_w.is_finite() { min_w } else { 1.0 };
    for dim in 0..d {
        if let Strategy::Dependent { base } = skeleton.strategy(dim) {
            if weight[base].is_none() {
                weight[base] = Some(min_w);
            }
        }
    }
    proportional_partitions(&weight, ev.budget())
}

/// `p_i = c * w_i` with `prod p_i ~= budget`; dimensions whose share drops
/// below one partition are fixed at one and the rest rescaled.
pub fn proportional_partitions(weight: &[Option<f64>], budget: usize) -> Vec<usize> {
    let mut p = vec![1; weight.len()];
    let mut active: Vec<usize> = (0..weight.len()).filter(|&i| weight[i].is_some()).collect();
    let ln_budget = (budget.max(1) as f64).ln();
    loop {
        if active.is_empty() {
            return p;
        }
        let ln_w: f64 = active.iter().map(|&i| weight[i].unwrap().ln()).sum();
        let ln_c = (ln_budget - ln_w) / active.len() as f64;
        let share = |i: usize| (ln_c + weight[i].unwrap().ln()).exp();
        let (small, keep): (Vec<usize>, Vec<usize>) = active.iter().partition(|&&i| share(i) < 1.0);
        if small.is_empty() {
            for &i in &active {
                p[i] = ((share(i) + 1e-9).floor() as usize).max(1);
            }
            return project(p, &active, budget);
        }
        active = keep;
    }
}

/// Lowers partition counts of `dims` until their product fits the budget.
fn project(mut p: Vec<usize>, dims: &[usize], budget: usize) -> Vec<usize> {
    let product = |p: &[usize]| dims.iter().map(|&g| p[g] as u128).product::<u128>();
    let budget = budget.max(1) as u128;
    let total = product(&p);
    if total > budget {
        let f = (budget as f64 / total as f64).powf(1.0 / dims.len() as f64);
        for &g in dims {
            p[g] = ((p[g] as f64 * f).floor() as usize).max(1);
        }
    }
    while product(&p) > budget {
        let &g = dims.iter().max_by_key(|&&g| p[g]).unwrap();
        p[g] -= 1;
    }
    p
}

fn project_grid(p: Vec<usize>, skeleton: &Skeleton, budget: usize) -> Vec<usize> {
    project(p, &skeleton.grid_dims(), budget)
}

/// One descent step over the partition counts of the grid dimensions,
/// using central differences in `ln p` and backtracking line search. The
/// step is taken only if it strictly lowers cost.
pub fn gradient_step(ev: &mut Evaluator<'_>, skeleton: &Skeleton, p: &[usize], cost: f64) -> (Vec<usize>, f64) {
    let grid = skeleton.grid_dims();
    let mut grad = vec![0.0; p.len()];
    for &g in &grid {
        let cur = p[g];
        let up = (cur + 1).max((cur as f64 * PROBE_FACTOR).round() as usize);
        let down = if cur > 1 { ((cur as f64 / PROBE_FACTOR).round() as usize).clamp(1, cur - 1) } else { cur };
        let mut probe = p.to_vec();
        probe[g] = up;
        let (hi_p, hi_c) = match ev.cost(skeleton, &probe) {
            Some(c) => (up, c),
            None => (cur, cost),
        };
        probe[g] = down;
        let (lo_p, lo_c) = match (down < cur).then(|| ev.cost(skeleton, &probe)).flatten() {
            Some(c) => (down, c),
            None => (cur, cost),
        };
        if hi_p != lo_p {
            grad[g] = (hi_c - lo_c) / ((hi_p as f64).ln() - (lo_p as f64).ln());
        }
    }
    // Against a binding budget the raw gradient mostly asks for more cells
    // and the projection undoes it, so the direction along the budget
    // surface (mean removed) is tried as well.
    let mean = grid.iter().map(|&g| grad[g]).sum::<f64>() / grid.len().max(1) as f64;
    let along: Vec<f64> = (0..p.len()).map(|i| if grid.contains(&i) { grad[i] - mean } else { 0.0 }).collect();
    let mut best = (p.to_vec(), cost);
    for dir in [grad, along] {
        if let Some(found) = line_search(ev, skeleton, p, cost, &dir) {
            if found.1 < best.1 {
                best = found;
            }
        }
    }
    best
}

fn line_search(ev: &mut Evaluator<'_>, skeleton: &Skeleton, p: &[usize], cost: f64, dir: &[f64]) -> Option<(Vec<usize>, f64)> {
    let norm = dir.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let mut t = std::f64::consts::LN_2;
    for _ in 0..=MAX_HALVINGS {
        let mut cand = p.to_vec();
        for &g in &skeleton.grid_dims() {
            let next = ((p[g] as f64).ln() - t * dir[g] / norm).exp().round();
            cand[g] = (next as usize).max(1);
        }
        let cand = project_grid(cand, skeleton, ev.budget());
        if cand != p {
            if let Some(c) = ev.cost(skeleton, &cand) {
                if c < cost {
                    return Some((cand, c));
                }
            }
        }
        t /= 2.0;
    }
    None
}

/// Partition counts to try with a neighbouring skeleton. A dimension that
/// becomes mapped hands its partitions to its target; one that stops being
/// mapped takes a square-root share of its former target's.
fn neighbor_partitions(from: &Skeleton, to: &Skeleton, p: &[usize], budget: usize) -> Vec<usize> {
    let mut q = p.to_vec();
    for i in 0..from.d() {
        match (from.strategy(i), to.strategy(i)) {
            (Strategy::Mapped { .. }, Strategy::Mapped { .. }) => {}
            (_, Strategy::Mapped { target }) => q[target] = q[target].saturating_mul(q[i].max(1)),
            (Strategy::Mapped { target }, _) => {
                let share = (q[target] as f64).sqrt().round().max(1.0) as usize;
                q[i] = share;
                q[target] = (q[target] / share).max(1);
            }
            _ => {}
        }
    }
    project_grid(q, to, budget)
}

/// Best skeleton one hop away from `skeleton` (or `skeleton` itself). Only
/// filtered dimensions may become mapped or dependent.
pub fn local_skeleton_search(
    ev: &mut Evaluator<'_>,
    skeleton: &Skeleton,
    p: &[usize],
    cost: f64,
) -> (Skeleton, Vec<usize>, f64) {
    let mut best = (skeleton.clone(), p.to_vec(), cost);
    for i in 0..skeleton.d() {
        for cand in skeleton.neighbors_at(i) {
            if !ev.is_filtered(i) && cand.strategy(i) != Strategy::Independent {
                continue;
            }
            let q = neighbor_partitions(skeleton, &cand, p, ev.budget());
            if let Some(c) = ev.cost(&cand, &q) {
                if c < best.2 {
                    best = (cand, q, c);
                }
            }
        }
    }
    best
}

fn entry(iteration: usize, s: &Skeleton, p: &[usize], cost: f64) -> TraceEntry {
    TraceEntry { iteration, skeleton: s.to_string(), partitions: p.to_vec(), cost }
}

/// Starting configuration: `skeleton` with heuristic partitions, falling
/// back to a single cell if that cannot be evaluated.
fn start(ev: &mut Evaluator<'_>, skeleton: Skeleton) -> GridConfig {
    let p = initialize_partitions(ev, &skeleton);
    if let Some(cost) = ev.cost(&skeleton, &p) {
        return GridConfig { skeleton, partitions: p, cost };
    }
    let naive = Skeleton::all_independent(ev.d());
    let p = vec![1; ev.d()];
    let cost = ev.cost(&naive, &p).unwrap_or(f64::INFINITY);
    GridConfig { skeleton: naive, partitions: p, cost }
}

/// Alternates gradient steps over partitions with one-hop skeleton search
/// (skipped when `freeze_skeleton`). Stops when nothing changes, after
/// `MAX_STALLED` consecutive low-improvement iterations, or after
/// `MAX_ITERATIONS`. Returns the best configuration seen.
pub fn adaptive_gradient_descent(ev: &mut Evaluator<'_>, skeleton: Skeleton, freeze_skeleton: bool) -> OptimizeResult {
    let initial = start(ev, skeleton);
    let mut trace = vec![entry(0, &initial.skeleton, &initial.partitions, initial.cost)];
    let mut best = initial.clone();
    let (mut s, mut p, mut c) = (initial.skeleton.clone(), initial.partitions.clone(), initial.cost);
    let mut stalled = 0;
    for it in 1..=MAX_ITERATIONS {
        let (p1, c1) = gradient_step(ev, &s, &p, c);
        let (s2, p2, c2) = if freeze_skeleton {
            (s.clone(), p1, c1)
        } else {
            local_skeleton_search(ev, &s, &p1, c1)
        };
        trace.push(entry(it, &s2, &p2, c2));
        if c2 < best.cost {
            best = GridConfig { skeleton: s2.clone(), partitions: p2.clone(), cost: c2 };
        }
        let changed = s2 != s || p2 != p;
        let improvement = if c > 0.0 { (c - c2) / c } else { 0.0 };
        (s, p, c) = (s2, p2, c2);
        if !changed {
            break;
        }
        if improvement < MIN_IMPROVEMENT {
            stalled += 1;
            if stalled >= MAX_STALLED {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    OptimizeResult { initial, best, trace, evaluations: ev.evaluations() }
}

/// Black-box reference: random perturbations of one strategy or one
/// partition count, accepted on improvement, with a random restart every
/// ten iterations.
pub fn random_restart_hillclimb(ev: &mut Evaluator<'_>, skeleton: Skeleton, iterations: usize, seed: u64) -> OptimizeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = start(ev, skeleton);
    let mut trace = vec![entry(0, &initial.skeleton, &initial.partitions, initial.cost)];
    let mut best = initial.clone();
    let mut cur = initial.clone();
    let d = ev.d();
    let filtered: Vec<usize> = (0..d).filter(|&i| ev.is_filtered(i)).collect();
    for it in 1..=iterations {
        let (s, p) = if it % 10 == 0 {
            random_config(ev, &filtered, &mut rng)
        } else {
            perturb(ev, &cur, &filtered, &mut rng)
        };
        let Some(c) = ev.cost(&s, &p) else { continue };
        let restart = it % 10 == 0;
        if restart || c < cur.cost {
            cur = GridConfig { skeleton: s, partitions: p, cost: c };
        }
        if cur.cost < best.cost {
            best = cur.clone();
        }
        trace.push(entry(it, &cur.skeleton, &cur.partitions, cur.cost));
    }
    OptimizeResult { initial, best, trace, evaluations: ev.evaluations() }
}

fn perturb(ev: &mut Evaluator<'_>, cur: &GridConfig, filtered: &[usize], rng: &mut ChaCha8Rng) -> (Skeleton, Vec<usize>) {
    if !filtered.is_empty() && rng.gen_bool(0.5) {
        let dim = filtered[rng.gen_range(0..filtered.len())];
        let options = cur.skeleton.neighbors_at(dim);
        if !options.is_empty() {
            let s = options[rng.gen_range(0..options.len())].clone();
            let p = neighbor_partitions(&cur.skeleton, &s, &cur.partitions, ev.budget());
            return (s, p);
        }
    }
    let grid = cur.skeleton.grid_dims();
    let mut p = cur.partitions.clone();
    let g = grid[rng.gen_range(0..grid.len())];
    let factor = rng.gen_range(-std::f64::consts::LN_2..std::f64::consts::LN_2).exp();
    p[g] = ((p[g] as f64 * factor).round() as usize).max(1);
    (cur.skeleton.clone(), project_grid(p, &cur.skeleton, ev.budget()))
}

fn random_config(ev: &mut Evaluator<'_>, filtered: &[usize], rng: &mut ChaCha8Rng) -> (Skeleton, Vec<usize>) {
    let d = ev.d();
    let mut s = Skeleton::all_independent(d);
    for _ in 0..rng.gen_range(0..=filtered.len()) {
        let dim = filtered[rng.gen_range(0..filtered.len())];
        let options = s.neighbors_at(dim);
        if !options.is_empty() {
            s = options[rng.gen_range(0..options.len())].clone();
        }
    }
    let grid = s.grid_dims();
    let max_ln = (ev.budget() as f64).ln() / grid.len().max(1) as f64;
    let mut p = vec![1; d];
    for &g in &grid {
        if ev.is_filtered(g) || s.0.iter().any(|x| *x == Strategy::Dependent { base: g } || *x == Strategy::Mapped { target: g }) {
            p[g] = (rng.gen_range(0.0..=max_ln).exp().round() as usize).max(1);
        }
    }
    let p = project_grid(p, &s, ev.budget());
    (s, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_selectivities_split_budget_evenly() {
        assert_eq!(proportional_partitions(&[Some(4.0), Some(4.0)], 64), vec![8, 8]);
    }

    #[test]
    fn more_selective_dim_gets_proportionally_more() {
        let p = proportional_partitions(&[Some(100.0), Some(10.0)], 1000);
        assert!(p[0] * p[1] <= 1000);
        let ratio = p[0] as f64 / p[1] as f64;
        assert!((ratio - 10.0).abs() <= 10.0 * 0.15, "{p:?}");
    }

    #[test]
    fn tiny_shares_collapse_to_one() {
        let p = proportional_partitions(&[Some(1e6), Some(1.0), None], 100);
        assert_eq!(p, vec![100, 1, 1]);
    }

    #[test]
    fn budget_clamps() {
        assert_eq!(cell_budget(100), 64);
        assert_eq!(cell_budget(10_000_000), 50_000);
        assert_eq!(cell_budget(usize::MAX / 2), 4_000_000);
    }
}

//! Slow reference implementations that tests and the acceptance suite check
//! the fast paths against.

use crate::skew::SkewTree;

/// Successive shortest paths with Bellman-Ford on the bipartite transport
/// network; exact for the LP up to floating point.
pub fn transport_lp(supply: &[f64], demand: &[f64]) -> f64 {
    let n = supply.len();
    // Nodes: 0 = source, 1..=n sources, n+1..=2n sinks, 2n+1 = sink.
    let (s, t) = (0, 2 * n + 1);
    let mut edges: Vec<(usize, usize, f64, f64)> = Vec::new();
    let add = |edges: &mut Vec<(usize, usize, f64, f64)>, u, v, cap, cost| {
        edges.push((u, v, cap, cost));
        edges.push((v, u, 0.0, -cost));
    };
    for i in 0..n {
        add(&mut edges, s, 1 + i, supply[i], 0.0);
        add(&mut edges, 1 + n + i, t, demand[i], 0.0);
        for j in 0..n {
            add(&mut edges, 1 + i, 1 + n + j, f64::INFINITY, (i as f64 - j as f64).abs());
        }
    }
    let total: f64 = supply.iter().sum();
    let eps = 1e-12 * total.max(1.0);
    let (mut flow, mut cost) = (0.0, 0.0);
    while total - flow > eps {
        let mut dist = vec![f64::INFINITY; t + 1];
        let mut via = vec![usize::MAX; t + 1];
        dist[s] = 0.0;
        for _ in 0..t {
            let mut changed = false;
            for (e, &(u, v, cap, c)) in edges.iter().enumerate() {
                if cap > eps && dist[u] + c < dist[v] - 1e-12 {
                    dist[v] = dist[u] + c;
                    via[v] = e;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[t].is_infinite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let e = via[v];
            push = push.min(edges[e].2);
            v = edges[e].0;
        }
        let mut v = t;
        while v != s {
            let e = via[v];
            edges[e].2 -= push;
            edges[e ^ 1].2 += push;
            v = edges[e].0;
        }
        flow += push;
        cost += push * dist[t];
    }
    cost
}

/// Every covering set of the subtree at `i`, with its total skew.
pub fn all_covers(tree: &SkewTree, i: usize) -> Vec<(Vec<usize>, f64)> {
    let node = tree.node(i);
    let mut out = vec![(vec![i], node.skew)];
    if let Some((l, r)) = node.children {
        let right = all_covers(tree, r);
        for (ln, ls) in all_covers(tree, l) {
            for (rn, rs) in &right {
                let mut nodes = ln.clone();
                nodes.extend_from_slice(rn);
                out.push((nodes, ls + rs));
            }
        }
    }
    out
}

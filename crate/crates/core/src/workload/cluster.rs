//! Grouping of workload queries into query types.

use std::collections::BTreeMap;

use super::synth::ColumnSample;
use super::{Dataset, QueryType, Workload};

/// DBSCAN radius over selectivity embeddings.
pub const CLUSTER_EPS: f64 = 0.2;

/// Cluster label for every point, `None` for noise.
///
/// Plain O(n^2) DBSCAN with Euclidean distance; workloads are small.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let eps2 = eps * eps;
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| {
                points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= eps2
            })
            .collect()
    };

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = neighbors(i);
        if seeds.len() < min_pts {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = Some(cluster);
        let mut queue = seeds;
        while let Some(j) = queue.pop() {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let more = neighbors(j);
            if more.len() >= min_pts {
                queue.extend(more.into_iter().filter(|&k| labels[k].is_none() || !visited[k]));
            }
        }
    }
    labels
}

/// `max(3, 1% of the group)`.
pub fn min_points_for(group_size: usize) -> usize {
    3.max(group_size / 100)
}

/// Assigns every query to exactly one type: queries are first grouped by
/// their filtered-dimension set, then DBSCAN runs on the selectivity
/// embeddings of each group. Noise points of a group form one extra type.
pub fn cluster_query_types(w: &Workload, ds: &Dataset) -> Workload {
    let sample = ColumnSample::new(ds, ColumnSample::DEFAULT_SIZE, 0);
    cluster_with_sample(w, &sample)
}

pub fn cluster_with_sample(w: &Workload, sample: &ColumnSample) -> Workload {
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, q) in w.queries.iter().enumerate() {
        groups.entry(q.filtered_dims()).or_default().push(i);
    }

    let mut types = Vec::new();
    for (dims, members) in groups {
        let embeddings: Vec<Vec<f64>> =
            members.iter().map(|&i| sample.embedding(&w.queries[i])).collect();
        let labels = dbscan(&embeddings, CLUSTER_EPS, min_points_for(members.len()));
        let clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); clusters + 1];
        for (&q, label) in members.iter().zip(&labels) {
            buckets[label.unwrap_or(clusters)].push(q);
        }
        for members in buckets.into_iter().filter(|b| !b.is_empty()) {
            types.push(QueryType { id: types.len(), filtered_dims: dims.clone(), members });
        }
    }
    Workload { queries: w.queries.clone(), types }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Query;

    #[test]
    fn dbscan_separates_two_blobs() {
        let mut pts = Vec::new();
        for i in 0..50 {
            let j = (i % 7) as f64 * 0.005;
            pts.push(vec![0.01 + j, 0.5 - j]);
        }
        for i in 0..50 {
            let j = (i % 5) as f64 * 0.004;
            pts.push(vec![0.5 + j, 0.01 + j]);
        }
        let labels = dbscan(&pts, CLUSTER_EPS, min_points_for(100));
        assert!(labels.iter().all(Option::is_some));
        assert!(labels[..50].iter().all(|l| *l == labels[0]));
        assert!(labels[50..].iter().all(|l| *l == labels[50]));
        assert_ne!(labels[0], labels[50]);
    }

    #[test]
    fn dbscan_marks_isolated_points_as_noise() {
        let pts = vec![vec![0.0], vec![0.01], vec![0.02], vec![0.9]];
        let labels = dbscan(&pts, 0.2, 3);
        assert_eq!(labels, vec![Some(0), Some(0), Some(0), None]);
    }

    fn ds() -> Dataset {
        Dataset::from_columns(vec![(0..1000).collect(), (0..1000).rev().collect(), (0..1000).collect()])
            .unwrap()
    }

    #[test]
    fn different_dim_sets_are_different_types() {
        let w = Workload::new(vec![
            Query::from_ranges(&[(0, 0, 10), (1, 0, 10)]).unwrap(),
            Query::from_ranges(&[(2, 0, 10)]).unwrap(),
        ]);
        let c = cluster_query_types(&w, &ds());
        assert_eq!(c.types.len(), 2);
    }

    #[test]
    fn identical_queries_form_one_type() {
        let q = Query::from_ranges(&[(0, 100, 200)]).unwrap();
        for n in [1, 2, 10] {
            let c = cluster_query_types(&Workload::new(vec![q.clone(); n]), &ds());
            assert_eq!(c.types.len(), 1);
            assert_eq!(c.types[0].members.len(), n);
        }
    }

    #[test]
    fn types_partition_the_workload() {
        let mut qs = Vec::new();
        for i in 0..60u64 {
            qs.push(Query::from_ranges(&[(0, i, i + 5 + (i % 3) * 300)]).unwrap());
            qs.push(Query::from_ranges(&[(0, i, i + 500), (2, 0, i * 10)]).unwrap());
        }
        let c = cluster_query_types(&Workload::new(qs), &ds());
        let mut seen = vec![0; c.queries.len()];
        for t in &c.types {
            for &m in &t.members {
                seen[m] += 1;
                assert_eq!(c.queries[m].filtered_dims(), t.filtered_dims);
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }
}

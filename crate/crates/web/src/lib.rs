//! Browser demo: generate a dataset and workload, build a tsunami index and
//! a flood grid side by side, and inspect them one query at a time.
//!
//! [`Session`] is plain Rust so it can be tested natively; [`Demo`] is the
//! thin JavaScript-facing wrapper.

use serde_json::{json, Value};
use tsunami_core::index::RangeIndex;
use tsunami_core::workload::{
    cluster_query_types, generate_synthetic, generate_workload, CenterDist, DatasetSpec, FilterSpec, QueryTypeSpec,
    WorkloadSpec,
};
use tsunami_core::{Dataset, Query, ScanStats, TsunamiConfig, TsunamiIndex, Workload};
use wasm_bindgen::prelude::*;

pub const DOMAIN: u64 = 1 << 16;

/// `correlated` picks 4 dimensions of which dims 2 and 3 follow 0 and 1;
/// otherwise 4 independent uniform dimensions. Both get two query types,
/// one concentrated in a narrow band of dim 0.
pub fn specs(rows: usize, correlated: bool, queries: usize) -> (DatasetSpec, WorkloadSpec) {
    let data = if correlated {
        DatasetSpec::half_correlated(rows, 4, DOMAIN, 0.01)
    } else {
        DatasetSpec::uniform(rows, 4, DOMAIN)
    };
    let f = |dim, selectivity, center| FilterSpec { dim, selectivity, center };
    let a = queries / 2;
    let hot_dim = if correlated { 3 } else { 2 };
    let workload = WorkloadSpec {
        types: vec![
            QueryTypeSpec {
                count: a,
                filters: vec![f(0, 0.02, CenterDist::Band { lo: 0.8, hi: 0.9 }), f(1, 0.5, CenterDist::Uniform)],
            },
            QueryTypeSpec {
                count: queries - a,
                filters: vec![f(hot_dim, 0.1, CenterDist::Band { lo: 0.0, hi: 0.5 }), f(1, 0.1, CenterDist::Uniform)],
            },
        ],
    };
    (data, workload)
}

pub struct Session {
    ds: Dataset,
    workload: Workload,
    tsunami: TsunamiIndex,
    flood: TsunamiIndex,
}

fn scan(index: &TsunamiIndex, q: &Query) -> (u64, ScanStats) {
    let mut stats = ScanStats::default();
    let count = index.count_with_stats(q, &mut stats);
    (count, stats)
}

impl Session {
    pub fn new(rows: usize, correlated: bool, seed: u64) -> Result<Self, String> {
        let (dspec, wspec) = specs(rows, correlated, 200);
        let ds = generate_synthetic(&dspec, seed).map_err(|e| e.to_string())?;
        let w = generate_workload(&wspec, &ds, seed + 1).map_err(|e| e.to_string())?;
        let workload = cluster_query_types(&w, &ds);
        let config = TsunamiConfig { seed, sample_size: 20_000, ..TsunamiConfig::default() };
        let tsunami = TsunamiIndex::build(&ds, &workload, config).map_err(|e| e.to_string())?;
        let flood = TsunamiIndex::build(&ds, &workload, TsunamiConfig { seed, sample_size: 20_000, ..TsunamiConfig::flood() })
            .map_err(|e| e.to_string())?;
        Ok(Self { ds, workload, tsunami, flood })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.ds
    }

    pub fn tsunami(&self) -> &TsunamiIndex {
        &self.tsunami
    }

    /// Overview: per-index structure and what the whole workload costs each
    /// index in rows read.
    pub fn summary(&self) -> Value {
        let cost = |idx: &TsunamiIndex| {
            let mut total = ScanStats::default();
            for q in &self.workload.queries {
                total.add(&scan(idx, q).1);
            }
            let n = self.workload.len().max(1) as f64;
            json!({
                "avg_points_scanned": total.points_scanned as f64 / n,
                "avg_ranges": total.ranges as f64 / n,
                "index_bytes": idx.size_bytes(),
            })
        };
        let stats = self.tsunami.stats();
        json!({
            "rows": self.ds.n(),
            "dims": self.ds.d(),
            "queries": self.workload.len(),
            "query_types": self.workload.types.len(),
            "tsunami": cost(&self.tsunami),
            "flood": cost(&self.flood),
            "regions": stats.regions.iter().map(|r| json!({
                "id": r.region_id,
                "points": r.point_count,
                "queries": r.query_count,
                "skeleton": r.skeleton.as_ref().map(ToString::to_string),
                "partitions": r.partitions,
                "cells": r.num_cells,
            })).collect::<Vec<_>>(),
            "tree_depth": stats.tree_depth,
        })
    }

    /// Runs one query given as `[dim, lo, hi]` triples on both indexes and a
    /// full scan.
    pub fn query(&self, ranges: &[(usize, u64, u64)]) -> Result<Value, String> {
        let q = Query::from_ranges(ranges).map_err(|e| e.to_string())?;
        if let Some(p) = q.predicates().iter().find(|p| p.dim >= self.ds.d()) {
            return Err(format!("dimension {} out of range", p.dim));
        }
        let truth = tsunami_core::store::brute_force_count(&self.ds, q.predicates());
        let report = |idx: &TsunamiIndex| {
            let (count, s) = scan(idx, &q);
            json!({ "count": count, "ranges": s.ranges, "points_scanned": s.points_scanned, "exact_rows": s.exact_rows })
        };
        Ok(json!({ "full_scan": truth, "tsunami": report(&self.tsunami), "flood": report(&self.flood) }))
    }

    /// A workload query by position, as `[dim, lo, hi]` triples.
    pub fn sample_query(&self, i: usize) -> Value {
        let q = &self.workload.queries[i % self.workload.len().max(1)];
        json!(q.predicates().iter().map(|p| [p.dim as u64, p.lo, p.hi]).collect::<Vec<_>>())
    }

    /// Region rectangles projected on two dimensions, for drawing.
    pub fn regions_2d(&self, x: usize, y: usize) -> Value {
        let tree = self.tsunami.tree();
        json!(tree
            .regions()
            .iter()
            .map(|r| json!({ "id": r.region_id, "x": r.bounds[x], "y": r.bounds[y] }))
            .collect::<Vec<_>>())
    }

    /// Up to `max` data points projected on two dimensions.
    pub fn points_2d(&self, x: usize, y: usize, max: usize) -> Vec<u64> {
        let step = (self.ds.n() / max.max(1)).max(1);
        (0..self.ds.n()).step_by(step).flat_map(|r| [self.ds.value(r, x), self.ds.value(r, y)]).collect()
    }
}

#[wasm_bindgen]
pub struct Demo(Session);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(rows: usize, correlated: bool, seed: u32) -> Result<Demo, JsError> {
        Session::new(rows, correlated, seed as u64).map(Demo).map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> String {
        self.0.summary().to_string()
    }

    /// `flat` holds `dim, lo, hi` triples.
    pub fn query(&self, flat: &[f64]) -> Result<String, JsError> {
        let ranges: Vec<(usize, u64, u64)> = flat.chunks_exact(3).map(|c| (c[0] as usize, c[1] as u64, c[2] as u64)).collect();
        self.0.query(&ranges).map(|v| v.to_string()).map_err(|e| JsError::new(&e))
    }

    pub fn sample_query(&self, i: usize) -> String {
        self.0.sample_query(i).to_string()
    }

    pub fn regions_2d(&self, x: usize, y: usize) -> String {
        self.0.regions_2d(x, y).to_string()
    }

    /// Flattened `x, y` pairs as doubles.
    pub fn points_2d(&self, x: usize, y: usize, max: usize) -> Vec<f64> {
        self.0.points_2d(x, y, max).into_iter().map(|v| v as f64).collect()
    }

    pub fn domain(&self) -> f64 {
        DOMAIN as f64
    }
}

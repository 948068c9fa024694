use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `lo <= value <= hi` on one dimension. Equality filters use `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RangePredicate {
    pub dim: usize,
    pub lo: u64,
    pub hi: u64,
}

impl RangePredicate {
    pub fn new(dim: usize, lo: u64, hi: u64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!("predicate on dim {dim}: lo {lo} > hi {hi}")));
        }
        Ok(Self { dim, lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: u64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Intersection with an inclusive interval, if non-empty.
    #[inline]
    pub fn clip(&self, lo: u64, hi: u64) -> Option<(u64, u64)> {
        let a = self.lo.max(lo);
        let b = self.hi.min(hi);
        (a <= b).then_some((a, b))
    }
}

/// Conjunction of range predicates with a COUNT aggregation.
///
/// Predicates are kept sorted by dimension and at most one predicate exists
/// per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_hint: Option<usize>,
    predicates: Vec<RangePredicate>,
}

impl Query {
    pub fn new(mut predicates: Vec<RangePredicate>) -> Result<Self> {
        if predicates.is_empty() {
            return Err(Error::InvalidArgument("query needs at least one predicate".into()));
        }
        predicates.sort_by_key(|p| p.dim);
        for w in predicates.windows(2) {
            if w[0].dim == w[1].dim {
                return Err(Error::InvalidArgument(format!("duplicate predicate on dim {}", w[0].dim)));
            }
        }
        if let Some(p) = predicates.iter().find(|p| p.lo > p.hi) {
            return Err(Error::InvalidArgument(format!("predicate on dim {}: lo > hi", p.dim)));
        }
        Ok(Self { type_hint: None, predicates })
    }

    pub fn with_type_hint(mut self, hint: usize) -> Self {
        self.type_hint = Some(hint);
        self
    }

    /// Shorthand used throughout tests: `(dim, lo, hi)` triples.
    pub fn from_ranges(ranges: &[(usize, u64, u64)]) -> Result<Self> {
        Self::new(
            ranges
                .iter()
                .map(|&(dim, lo, hi)| RangePredicate::new(dim, lo, hi))
                .collect::<Result<_>>()?,
        )
    }

    pub fn predicates(&self) -> &[RangePredicate] {
        &self.predicates
    }

    pub fn predicate(&self, dim: usize) -> Option<&RangePredicate> {
        self.predicates.iter().find(|p| p.dim == dim)
    }

    pub fn filtered_dims(&self) -> Vec<usize> {
        self.predicates.iter().map(|p| p.dim).collect()
    }

    pub fn num_filtered(&self) -> usize {
        self.predicates.len()
    }

    pub fn matches_row(&self, row: &[u64]) -> bool {
        self.predicates.iter().all(|p| p.contains(row[p.dim]))
    }

    /// Interval of this query on `dim` inside the inclusive `bounds`, treating
    /// an absent predicate as spanning the whole bound.
    pub fn interval_within(&self, dim: usize, bounds: (u64, u64)) -> Option<(u64, u64)> {
        match self.predicate(dim) {
            Some(p) => p.clip(bounds.0, bounds.1),
            None => Some(bounds),
        }
    }

    /// Whether the query rectangle overlaps the box given by inclusive `bounds`.
    pub fn intersects(&self, bounds: &[(u64, u64)]) -> bool {
        self.predicates
            .iter()
            .all(|p| p.clip(bounds[p.dim].0, bounds[p.dim].1).is_some())
    }

    /// Whether every point of the box lies inside the query rectangle.
    pub fn covers(&self, bounds: &[(u64, u64)]) -> bool {
        self.predicates
            .iter()
            .all(|p| p.lo <= bounds[p.dim].0 && bounds[p.dim].1 <= p.hi)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.predicates.is_empty() {
            return Err(Error::InvalidArgument("query needs at least one predicate".into()));
        }
        for w in self.predicates.windows(2) {
            if w[0].dim >= w[1].dim {
                return Err(Error::InvalidArgument("predicates must have distinct dims".into()));
            }
        }
        for p in &self.predicates {
            if p.dim >= d {
                return Err(Error::InvalidArgument(format!("predicate dim {} >= d={d}", p.dim)));
            }
            if p.lo > p.hi {
                return Err(Error::InvalidArgument(format!("predicate on dim {}: lo > hi", p.dim)));
            }
        }
        Ok(())
    }
}

/// A cluster of queries that filter the same dimensions with similar
/// selectivities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryType {
    pub id: usize,
    pub filtered_dims: Vec<usize>,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    pub queries: Vec<Query>,
    pub types: Vec<QueryType>,
}

impl Workload {
    pub fn new(queries: Vec<Query>) -> Self {
        Self { queries, types: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn is_clustered(&self) -> bool {
        !self.types.is_empty() || self.queries.is_empty()
    }

    /// Type id of every query, in query order. Requires clustering.
    pub fn type_of_queries(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.queries.len()];
        for t in &self.types {
            for &m in &t.members {
                out[m] = t.id;
            }
        }
        out
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.queries.iter().try_for_each(|q| q.validate(d))
    }

    /// Workload JSON: an array of `{type_hint?, predicates: [{dim, lo, hi}]}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.queries)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut queries: Vec<Query> = serde_json::from_str(s)?;
        for q in &mut queries {
            q.predicates.sort_by_key(|p| p.dim);
            q.validate(usize::MAX)?;
        }
        Ok(Self::new(queries))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_rejects_duplicates_and_inverted_ranges() {
        assert!(Query::from_ranges(&[]).is_err());
        assert!(Query::from_ranges(&[(0, 1, 2), (0, 3, 4)]).is_err());
        assert!(Query::from_ranges(&[(0, 5, 4)]).is_err());
        let q = Query::from_ranges(&[(2, 1, 2), (0, 3, 4)]).unwrap();
        assert_eq!(q.filtered_dims(), vec![0, 2]);
    }

    #[test]
    fn intersects_and_covers() {
        let q = Query::from_ranges(&[(0, 10, 20)]).unwrap();
        assert!(q.intersects(&[(0, 10), (0, 5)]));
        assert!(!q.intersects(&[(21, 30), (0, 5)]));
        assert!(q.covers(&[(12, 18), (0, 100)]));
        assert!(!q.covers(&[(12, 21), (0, 100)]));
        assert_eq!(q.interval_within(1, (3, 9)), Some((3, 9)));
        assert_eq!(q.interval_within(0, (15, 99)), Some((15, 20)));
    }

    #[test]
    fn workload_json_round_trip() {
        let w = Workload::new(vec![
            Query::from_ranges(&[(0, 1, 2)]).unwrap().with_type_hint(3),
            Query::from_ranges(&[(1, 5, 5), (0, 0, 9)]).unwrap(),
        ]);
        let s = w.to_json().unwrap();
        assert!(s.contains("\"type_hint\": 3"));
        let back = Workload::from_json(&s).unwrap();
        assert_eq!(back.queries, w.queries);
        assert!(Workload::from_json(r#"[{"predicates":[{"dim":0,"lo":4,"hi":1}]}]"#).is_err());
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How one dimension is partitioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Uniformly in the dimension's own CDF.
    Independent,
    /// Removed from the grid; predicates are rewritten onto `target`.
    Mapped { target: usize },
    /// Uniformly in the CDF conditioned on the partition of `base`.
    Dependent { base: usize },
}

/// Per-dimension strategies. Targets and bases must themselves be
/// independent, which keeps the restriction graph acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Skeleton(pub Vec<Strategy>);

impl Skeleton {
    pub fn all_independent(d: usize) -> Self {
        Self(vec![Strategy::Independent; d])
    }

    pub fn new(strategies: Vec<Strategy>) -> Result<Self> {
        let s = Self(strategies);
        s.validate()?;
        Ok(s)
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn strategy(&self, dim: usize) -> Strategy {
        self.0[dim]
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if !self.0.contains(&Strategy::Independent) {
            return Err(Error::Config("skeleton needs an independent dimension".into()));
        }
        for (i, s) in self.0.iter().enumerate() {
            let other = match *s {
                Strategy::Independent => continue,
                Strategy::Mapped { target } => target,
                Strategy::Dependent { base } => base,
            };
            if other == i || other >= d {
                return Err(Error::Config(format!("dim {i} refers to invalid dim {other}")));
            }
            if self.0[other] != Strategy::Independent {
                return Err(Error::Config(format!("dim {i} refers to dim {other}, which is not independent")));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Dimensions that own grid coordinates, in radix order: independent
    /// dimensions first, then dependent ones (so every base precedes its
    /// dependents). The last entry varies fastest.
    pub fn grid_dims(&self) -> Vec<usize> {
        let ind = (0..self.d()).filter(|&i| self.0[i] == Strategy::Independent);
        let dep = (0..self.d()).filter(|&i| matches!(self.0[i], Strategy::Dependent { .. }));
        ind.chain(dep).collect()
    }

    pub fn num_mapped(&self) -> usize {
        self.0.iter().filter(|s| matches!(s, Strategy::Mapped { .. })).count()
    }

    pub fn num_dependent(&self) -> usize {
        self.0.iter().filter(|s| matches!(s, Strategy::Dependent { .. })).count()
    }

    /// Every valid skeleton that differs in exactly one dimension's strategy.
    pub fn one_hop_neighbors(&self) -> Vec<Skeleton> {
        let mut out = Vec::new();
        for i in 0..self.d() {
            out.extend(self.neighbors_at(i));
        }
        out
    }

    /// Valid skeletons that change only dimension `dim`.
    pub fn neighbors_at(&self, dim: usize) -> Vec<Skeleton> {
        let d = self.d();
        let mut options = vec![Strategy::Independent];
        for j in (0..d).filter(|&j| j != dim) {
            options.push(Strategy::Mapped { target: j });
            options.push(Strategy::Dependent { base: j });
        }
        options
            .into_iter()
            .filter(|&s| s != self.0[dim])
            .filter_map(|s| {
                let mut next = self.clone();
                next.0[dim] = s;
                next.is_valid().then_some(next)
            })
            .collect()
    }
}

impl fmt::Display for Skeleton {
    /// `[0, 1|0, 2->0]`: `|` marks a conditional CDF and `->` a mapping.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match s {
                Strategy::Independent => write!(f, "{i}")?,
                Strategy::Mapped { target } => write!(f, "{i}->{target}")?,
                Strategy::Dependent { base } => write!(f, "{i}|{base}")?,
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Strategy::*;

    #[test]
    fn restrictions_are_enforced() {
        assert!(Skeleton::new(vec![Mapped { target: 2 }, Dependent { base: 0 }, Independent]).is_err());
        assert!(Skeleton::new(vec![Independent, Mapped { target: 1 }]).is_err());
        assert!(Skeleton::new(vec![Mapped { target: 1 }, Mapped { target: 0 }]).is_err());
        assert!(Skeleton::new(vec![Independent, Dependent { base: 0 }, Mapped { target: 0 }]).is_ok());
    }

    #[test]
    fn radix_order_puts_dependents_last() {
        let s = Skeleton::new(vec![Dependent { base: 2 }, Mapped { target: 2 }, Independent, Independent]).unwrap();
        assert_eq!(s.grid_dims(), vec![2, 3, 0]);
        assert_eq!(s.to_string(), "[0|2, 1->2, 2, 3]");
    }
}

use std::collections::HashMap;
use std::sync::Arc;

use super::cdf::{partition_of, EmpiricalCdf, DEFAULT_KNOTS};
use super::conditional::ConditionalCdf;
use super::grid::GridLayout;
use super::mapping::FunctionalMapping;
use super::skeleton::{Skeleton, Strategy};
use crate::error::{Error, Result};
use crate::workload::Dataset;

/// Fitted models over one fixed point set, memoized so that many candidate
/// layouts can share them.
///
/// Besides the models it caches every point's CDF value per dimension, which
/// turns partition assignment for a new partition count into a multiply.
#[derive(Debug)]
pub struct ModelCache<'a> {
    points: &'a Dataset,
    ranges: Vec<(u64, u64)>,
    cdfs: Vec<Option<Arc<EmpiricalCdf>>>,
    cdf_values: Vec<Option<Arc<Vec<f64>>>>,
    mappings: HashMap<(usize, usize), Option<FunctionalMapping>>,
    conditionals: HashMap<(usize, usize, usize), Arc<ConditionalCdf>>,
    cond_values: HashMap<(usize, usize, usize), Arc<Vec<f64>>>,
}

impl<'a> ModelCache<'a> {
    pub fn new(points: &'a Dataset) -> Result<Self> {
        if points.n() == 0 {
            return Err(Error::InvalidArgument("cannot fit models to an empty point set".into()));
        }
        let ranges = points
            .columns()
            .iter()
            .map(|c| (*c.iter().min().unwrap(), *c.iter().max().unwrap()))
            .collect();
        let d = points.d();
        Ok(Self {
            points,
            ranges,
            cdfs: vec![None; d],
            cdf_values: vec![None; d],
            mappings: HashMap::new(),
            conditionals: HashMap::new(),
            cond_values: HashMap::new(),
        })
    }

    pub fn points(&self) -> &'a Dataset {
        self.points
    }

    /// Inclusive data range of every dimension.
    pub fn ranges(&self) -> &[(u64, u64)] {
        &self.ranges
    }

    pub fn cdf(&mut self, dim: usize) -> Arc<EmpiricalCdf> {
        let points = self.points;
        self.cdfs[dim]
            .get_or_insert_with(|| Arc::new(EmpiricalCdf::fit(points.column(dim), DEFAULT_KNOTS)))
            .clone()
    }

    pub fn cdf_values(&mut self, dim: usize) -> Arc<Vec<f64>> {
        if let Some(v) = &self.cdf_values[dim] {
            return v.clone();
        }
        let cdf = self.cdf(dim);
        let v = Arc::new(self.points.column(dim).iter().map(|&x| cdf.eval(x)).collect::<Vec<f64>>());
        self.cdf_values[dim] = Some(v.clone());
        v
    }

    /// Mapping predicting `target` from `mapped`; `None` when degenerate.
    pub fn mapping(&mut self, mapped: usize, target: usize) -> Option<FunctionalMapping> {
        let points = self.points;
        *self
            .mappings
            .entry((mapped, target))
            .or_insert_with(|| FunctionalMapping::fit(mapped, target, points.column(mapped), points.column(target)))
    }

    pub fn base_partitions(&mut self, base: usize, p: usize) -> Vec<u32> {
        self.cdf_values(base).iter().map(|&c| partition_of(c, p) as u32).collect()
    }

    pub fn conditional(&mut self, dep: usize, base: usize, p_base: usize) -> Arc<ConditionalCdf> {
        if let Some(c) = self.conditionals.get(&(dep, base, p_base)) {
            return c.clone();
        }
        let parts = self.base_partitions(base, p_base);
        let c = Arc::new(ConditionalCdf::fit(dep, base, p_base, &parts, self.points.column(dep)));
        self.conditionals.insert((dep, base, p_base), c.clone());
        c
    }

    pub fn conditional_values(&mut self, dep: usize, base: usize, p_base: usize) -> Arc<Vec<f64>> {
        if let Some(v) = self.cond_values.get(&(dep, base, p_base)) {
            return v.clone();
        }
        let cond = self.conditional(dep, base, p_base);
        let base_vals = self.cdf_values(base);
        let col = self.points.column(dep);
        let v: Vec<f64> = base_vals
            .iter()
            .zip(col)
            .map(|(&c, &y)| cond.eval(partition_of(c, p_base), y))
            .collect();
        let v = Arc::new(v);
        self.cond_values.insert((dep, base, p_base), v.clone());
        v
    }

    /// Fits (or reuses) every model `skeleton` needs at partition counts
    /// `partitions`.
    pub fn layout(&mut self, skeleton: &Skeleton, partitions: &[usize]) -> Result<GridLayout> {
        skeleton.validate()?;
        if skeleton.d() != self.points.d() || partitions.len() != skeleton.d() {
            return Err(Error::InvalidArgument("skeleton, partitions and data disagree on d".into()));
        }
        let d = skeleton.d();
        let mut cdfs = vec![None; d];
        let mut mappings = vec![None; d];
        let mut conditionals = vec![None; d];
        for dim in 0..d {
            match skeleton.strategy(dim) {
                Strategy::Independent => cdfs[dim] = Some(self.cdf(dim)),
                Strategy::Mapped { target } => {
                    let m = self
                        .mapping(dim, target)
                        .ok_or_else(|| Error::Config(format!("dim {dim} cannot be mapped onto {target}")))?;
                    mappings[dim] = Some(m);
                }
                Strategy::Dependent { base } => {
                    conditionals[dim] = Some(self.conditional(dim, base, partitions[base].max(1)));
                }
            }
        }
        GridLayout::from_models(skeleton.clone(), partitions.to_vec(), self.ranges.clone(), cdfs, mappings, conditionals)
    }

    /// Cell of every point, using cached CDF values. `layout` must come from
    /// this cache.
    pub fn assign_cells(&mut self, layout: &GridLayout) -> Vec<u32> {
        let n = self.points.n();
        let mut cells = vec![0u32; n];
        for (pos, &dim) in layout.order().iter().enumerate() {
            let p = layout.partitions()[dim];
            let stride = layout.strides()[pos] as u32;
            if p == 1 {
                continue;
            }
            let vals = match layout.skeleton().strategy(dim) {
                Strategy::Dependent { base } => self.conditional_values(dim, base, layout.partitions()[base]),
                _ => self.cdf_values(dim),
            };
            for (c, &v) in cells.iter_mut().zip(vals.iter()) {
                *c += partition_of(v, p) as u32 * stride;
            }
        }
        cells
    }
}

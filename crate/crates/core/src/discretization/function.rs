use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

use super::grid::Grid;

/// Real samples on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(invalid(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            values: vec![c; grid.node_count()],
            grid: Arc::clone(grid),
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|k| f(grid.node(k))).collect();
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Discrete delta: `1 / cell volume` at the node nearest to `point`.
    pub fn delta(grid: &Arc<Grid>, point: &[f64]) -> Result<Self> {
        if point.len() != grid.dim() {
            return Err(invalid("delta location has the wrong dimension"));
        }
        let k = grid
            .nearest_node(point)
            .ok_or_else(|| invalid(format!("point {point:?} lies outside the grid box")))?;
        let mut u = Self::zeros(grid);
        u.values[k] = 1.0 / grid.cell_volume();
        Ok(u)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(invalid("grid functions live on different grids"))
        }
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.grid.lp_norm(&self.values, p)
    }

    /// Haar integral `sum u_k * cellvol`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Haar inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Writes one row per node: coordinates `x0, x1, ...` then `value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.grid.dim()).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        wtr.write_record(&header)?;
        for (k, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.node(k).iter().map(|c| format!("{c:e}")).collect();
            row.push(format!("{v:e}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads rows written by [`write_csv`](Self::write_csv), in any order.
    /// Every node must be covered exactly once.
    pub fn read_csv<R: Read>(grid: &Arc<Grid>, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let dim = grid.dim();
        let mut values = vec![f64::NAN; grid.node_count()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim + 1 {
                return Err(Error::Io(format!("row {}: expected {} columns, got {}", line + 1, dim + 1, rec.len())));
            }
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("row {}: {e}", line + 1)))?;
            let k = grid
                .nearest_node(&nums[..dim])
                .ok_or_else(|| Error::Io(format!("row {}: coordinates outside the grid", line + 1)))?;
            let off = nums[..dim]
                .iter()
                .zip(grid.node(k))
                .zip(grid.spacing())
                .any(|((a, b), h)| (a - b).abs() > 1e-6 * h);
            if off {
                return Err(Error::Io(format!("row {}: coordinates are not a grid node", line + 1)));
            }
            if !values[k].is_nan() {
                return Err(Error::Io(format!("row {}: node {k} given twice", line + 1)));
            }
            values[k] = nums[dim];
        }
        if let Some(k) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Io(format!("node {k} has no value")));
        }
        Self::new(Arc::clone(grid), values)
    }

    pub fn load_csv(grid: &Arc<Grid>, path: &Path) -> Result<Self> {
        Self::read_csv(grid, std::fs::File::open(path)?)
    }
}

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discretization::Grid;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub node: usize,
    /// Index into the measure's t levels; `None` for measures on the group.
    pub level: Option<usize>,
    pub weight: f64,
}

/// Finite nonnegative measure on the grid or on grid × `t` levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    levels: Vec<f64>,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(levels: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if levels.iter().any(|&t| !(t > 0.0 && t.is_finite())) || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t levels must be positive and strictly increasing"));
        }
        for a in &atoms {
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(invalid(format!("atom weight {} is not a finite nonnegative number", a.weight)));
            }
            match (a.level, levels.is_empty()) {
                (Some(l), false) if l < levels.len() => {}
                (None, true) => {}
                _ => return Err(invalid("atom level does not match the measure's t levels")),
            }
        }
        Ok(Self { levels, atoms })
    }

    pub fn zero(levels: Vec<f64>) -> Self {
        Self { levels, atoms: Vec::new() }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn on_product(&self) -> bool {
        !self.levels.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.levels.clone(),
            self.atoms.iter().map(|a| Atom { weight: c * a.weight, ..*a }).collect(),
        )
    }

    /// `count` atoms with weights in `(0, 1]` at nodes whose ball of radius
    /// `t` fits in the box, `t` drawn from `levels`.
    pub fn random_product(grid: &Grid, levels: Vec<f64>, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates = Vec::new();
        for k in 0..grid.node_count() {
            for (l, &t) in levels.iter().enumerate() {
                if grid.ball_inside_box(grid.node(k), t) {
                    candidates.push((k, l));
                }
            }
        }
        if candidates.is_empty() {
            return Err(invalid("no node admits any of the t levels"));
        }
        let atoms = (0..count)
            .map(|_| {
                let (node, l) = candidates[rng.gen_range(0..candidates.len())];
                Atom {
                    node,
                    level: Some(l),
                    weight: 1.0 - rng.gen::<f64>(),
                }
            })
            .collect();
        Self::new(levels, atoms)
    }

    /// `count` atoms on the group with weights in `(0, 1]` at nodes at least
    /// a quarter of the inradius away from the box edge.
    pub fn random_group(grid: &Grid, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let margin = 0.25 * grid.inradius();
        let candidates: Vec<usize> = (0..grid.node_count()).filter(|&k| grid.ball_inside_box(grid.node(k), margin)).collect();
        if candidates.is_empty() {
            return Err(invalid("no node lies away from the box edge"));
        }
        let atoms = (0..count)
            .map(|_| Atom {
                node: candidates[rng.gen_range(0..candidates.len())],
                level: None,
                weight: 1.0 - rng.gen::<f64>(),
            })
            .collect();
        Self::new(Vec::new(), atoms)
    }

    /// Rows `x0, ..., [t,] weight`; a `t` column makes a product measure
    /// whose levels are the distinct `t` values.
    pub fn read_csv<R: Read>(grid: &Arc<Grid>, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let dim = grid.dim();
        let has_t = headers.iter().any(|h| h.trim() == "t");
        let want = dim + 1 + usize::from(has_t);
        if headers.len() != want {
            return Err(Error::Io(format!("expected {want} columns, got {}", headers.len())));
        }
        let mut rows: Vec<(usize, Option<f64>, f64)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("row {}: {e}", line + 1)))?;
            if nums.len() != want {
                return Err(Error::Io(format!("row {}: expected {want} columns", line + 1)));
            }
            let node = grid
                .nearest_node(&nums[..dim])
                .ok_or_else(|| Error::Io(format!("row {}: outside the grid", line + 1)))?;
            let t = has_t.then(|| nums[dim]);
            rows.push((node, t, nums[want - 1]));
        }
        let mut levels: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let atoms = rows
            .into_iter()
            .map(|(node, t, weight)| Atom {
                node,
                level: t.map(|t| levels.iter().position(|&l| l == t).expect("level present")),
                weight,
            })
            .collect();
        Self::new(levels, atoms)
    }

    pub fn load_csv(grid: &Arc<Grid>, path: &Path) -> Result<Self> {
        Self::read_csv(grid, std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Boundary;
    use crate::group::GroupDescriptor;

    #[test]
    fn csv_and_validation() {
        let g = Arc::new(Grid::new(GroupDescriptor::euclidean(1).unwrap(), &[9], 1.0, Boundary::Dirichlet).unwrap());
        let text = format!("x0,t,weight\n{},0.5,2\n{},0.25,1\n", g.node(4)[0], g.node(3)[0]);
        let m = DiscreteMeasure::read_csv(&g, text.as_bytes()).unwrap();
        assert_eq!(m.levels(), &[0.25, 0.5]);
        assert_eq!(m.atoms()[0].level, Some(1));
        assert_eq!(m.total_mass(), 3.0);
        let base = DiscreteMeasure::read_csv(&g, "x0,weight\n0,1.5\n".as_bytes()).unwrap();
        assert!(!base.on_product());
        assert!(DiscreteMeasure::new(vec![], vec![Atom { node: 0, level: None, weight: -1.0 }]).is_err());
        assert!(DiscreteMeasure::new(vec![0.5], vec![Atom { node: 0, level: None, weight: 1.0 }]).is_err());
    }
}

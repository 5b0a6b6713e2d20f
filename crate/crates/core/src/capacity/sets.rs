use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::Grid;
use crate::error::{invalid, Error, Result};
use crate::fractional::radius_ladder;

/// Subset of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSet {
    grid: Arc<Grid>,
    members: Vec<bool>,
}

impl DiscreteSet {
    pub fn empty(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            members: vec![false; grid.node_count()],
        }
    }

    pub fn full(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            members: vec![true; grid.node_count()],
        }
    }

    pub fn from_membership(grid: &Arc<Grid>, members: Vec<bool>) -> Result<Self> {
        if members.len() != grid.node_count() {
            return Err(invalid("membership vector does not match the grid"));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            members,
        })
    }

    pub fn from_nodes(grid: &Arc<Grid>, nodes: &[usize]) -> Result<Self> {
        let mut s = Self::empty(grid);
        for &k in nodes {
            if k >= grid.node_count() {
                return Err(invalid(format!("node index {k} out of range")));
            }
            s.members[k] = true;
        }
        Ok(s)
    }

    /// Nodes `g` with `d(g, center) < r`.
    pub fn ball(grid: &Arc<Grid>, center: &[f64], r: f64) -> Self {
        let nodes = grid.nodes_in_ball(center, r, false);
        Self::from_nodes(grid, &nodes).expect("nodes come from the grid")
    }

    pub fn from_predicate(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> bool) -> Self {
        Self {
            members: (0..grid.node_count()).map(|k| f(grid.node(k))).collect(),
            grid: Arc::clone(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn membership(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members[node]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn nodes(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&k| self.members[k]).collect()
    }

    pub fn insert(&mut self, node: usize) {
        self.members[node] = true;
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a && b)
    }

    fn zip(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.members.len(), other.members.len(), "sets on different grids");
        Self {
            grid: Arc::clone(&self.grid),
            members: self.members.iter().zip(&other.members).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    /// Adds every lattice neighbour (one step along any axis).
    pub fn dilate(&self) -> Self {
        let mut out = self.clone();
        for k in self.nodes() {
            let idx = self.grid.unravel(k);
            for axis in 0..idx.len() {
                for step in [-1i64, 1] {
                    let mut j = idx.clone();
                    j[axis] += step;
                    if let Some(m) = self.grid.ravel(&j) {
                        out.members[m] = true;
                    }
                }
            }
        }
        out
    }

    /// Node list from CSV rows of coordinates (`x0, x1, ...`), matched to
    /// the nearest node and required to sit on it.
    pub fn read_csv<R: Read>(grid: &Arc<Grid>, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let dim = grid.dim();
        let mut s = Self::empty(grid);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != dim {
                return Err(Error::Io(format!("row {}: expected {dim} coordinates", line + 1)));
            }
            let c: Vec<f64> = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("row {}: {e}", line + 1)))?;
            let k = grid
                .nearest_node(&c)
                .ok_or_else(|| Error::Io(format!("row {}: outside the grid", line + 1)))?;
            if c.iter().zip(grid.node(k)).zip(grid.spacing()).any(|((a, b), h)| (a - b).abs() > 1e-6 * h) {
                return Err(Error::Io(format!("row {}: not a grid node", line + 1)));
            }
            s.members[k] = true;
        }
        Ok(s)
    }

    pub fn load_csv(grid: &Arc<Grid>, path: &Path) -> Result<Self> {
        Self::read_csv(grid, std::fs::File::open(path)?)
    }
}

/// Balls centred on every `stride`-th node along each axis with radii from
/// the dyadic ladder, followed by unions of up to `max_union` of them, in a
/// fixed order and truncated at `cap` members. Duplicates and empty sets
/// are dropped.
pub fn ball_family(grid: &Arc<Grid>, stride: usize, max_union: usize, cap: usize) -> Vec<DiscreteSet> {
    let stride = stride.max(1);
    let mut balls: Vec<DiscreteSet> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let radii = radius_ladder(grid);
    for k in 0..grid.node_count() {
        if grid.unravel(k).iter().any(|&i| i as usize % stride != 0) {
            continue;
        }
        for &r in &radii {
            let b = DiscreteSet::ball(grid, grid.node(k), r);
            if !b.is_empty() && seen.insert(b.members.clone()) {
                balls.push(b);
            }
        }
    }
    let mut family = Vec::new();
    for b in &balls {
        if family.len() >= cap {
            return family;
        }
        family.push(b.clone());
    }
    let m = balls.len();
    if max_union >= 2 {
        for i in 0..m {
            for j in i + 1..m {
                if family.len() >= cap {
                    return family;
                }
                let u = balls[i].union(&balls[j]);
                if seen.insert(u.members.clone()) {
                    family.push(u);
                }
            }
        }
    }
    if max_union >= 3 {
        for i in 0..m {
            for j in i + 1..m {
                for l in j + 1..m {
                    if family.len() >= cap {
                        return family;
                    }
                    let u = balls[i].union(&balls[j]).union(&balls[l]);
                    if seen.insert(u.members.clone()) {
                        family.push(u);
                    }
                }
            }
        }
    }
    family
}

/// `count` nonempty random node sets of at most a third of the grid each.
pub fn random_sets(grid: &Arc<Grid>, count: usize, seed: u64) -> Vec<DiscreteSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.node_count();
    let mut nodes: Vec<usize> = (0..n).collect();
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=(n / 3).max(1));
            nodes.shuffle(&mut rng);
            DiscreteSet::from_nodes(grid, &nodes[..k]).expect("valid nodes")
        })
        .collect()
}

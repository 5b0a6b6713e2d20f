use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{GroupDescriptor, GroupPoint};

/// Hard cap on the node count; the dense eigendecomposition is `O(n³)`.
pub const NODE_CAP: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Zero extension outside the box; interior nodes only.
    Dirichlet,
    /// Indices wrap on every axis.
    Periodic,
}

/// Serializable description of a grid, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Group id: `r1`, `r2` or `h1`.
    pub group: String,
    /// Either one count per coordinate or a single count used on every axis.
    pub points_per_axis: Vec<usize>,
    pub half_width: f64,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        let desc = GroupDescriptor::from_id(&self.group)?;
        Grid::new(desc, &self.points_per_axis, self.half_width, self.boundary)
    }
}

/// A tensor-product lattice on the box `prod_i [-a^{j_i}, a^{j_i}]`, where
/// `j_i` is the stratum of coordinate `i`.
///
/// Dirichlet axes hold `N` interior points with `h = 2a/(N+1)`; periodic
/// axes hold `N` points with `h = 2a/N` starting at `-a`. Node indices run
/// with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    desc: GroupDescriptor,
    boundary: Boundary,
    half_width: f64,
    n: Vec<usize>,
    half: Vec<f64>,
    h: Vec<f64>,
    coords: Vec<f64>,
}

impl Grid {
    pub fn new(desc: GroupDescriptor, points_per_axis: &[usize], half_width: f64, boundary: Boundary) -> Result<Self> {
        let dim = desc.dim();
        let n: Vec<usize> = match points_per_axis.len() {
            1 => vec![points_per_axis[0]; dim],
            l if l == dim => points_per_axis.to_vec(),
            l => {
                return Err(invalid(format!(
                    "points_per_axis has {l} entries, group `{}` has dimension {dim}",
                    desc.id()
                )))
            }
        };
        if n.iter().any(|&k| k < 2) {
            return Err(invalid("every axis needs at least two points"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid(format!("half_width must be positive, got {half_width}")));
        }
        let total = n.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k)).unwrap_or(usize::MAX);
        if total > NODE_CAP {
            return Err(Error::ResourceLimit {
                what: "grid nodes",
                requested: total,
                limit: NODE_CAP,
            });
        }
        let half: Vec<f64> = desc
            .dilation_exponents()
            .iter()
            .map(|&j| half_width.powi(j as i32))
            .collect();
        let h: Vec<f64> = half
            .iter()
            .zip(&n)
            .map(|(&a, &k)| match boundary {
                Boundary::Dirichlet => 2.0 * a / (k + 1) as f64,
                Boundary::Periodic => 2.0 * a / k as f64,
            })
            .collect();
        let mut grid = Self {
            desc,
            boundary,
            half_width,
            n,
            half,
            h,
            coords: Vec::new(),
        };
        let mut coords = Vec::with_capacity(total * dim);
        let mut idx = vec![0i64; dim];
        for node in 0..total {
            grid.unravel_into(node, &mut idx);
            for (axis, &k) in idx.iter().enumerate() {
                coords.push(grid.lattice_coord(axis, k));
            }
        }
        grid.coords = coords;
        Ok(grid)
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.desc
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Half-widths per coordinate, `a^{j_i}`.
    pub fn axis_half_widths(&self) -> &[f64] {
        &self.half
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.n
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn node_count(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    /// Coordinates of node `k` as a slice of length `dim`.
    pub fn node(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[k * d..(k + 1) * d]
    }

    pub fn node_point(&self, k: usize) -> GroupPoint {
        GroupPoint::new(self.node(k).to_vec())
    }

    /// Coordinate of lattice index `k` on `axis`; `k` may lie outside `0..N`.
    pub fn lattice_coord(&self, axis: usize, k: i64) -> f64 {
        let a = self.half[axis];
        let h = self.h[axis];
        match self.boundary {
            Boundary::Dirichlet => -a + (k + 1) as f64 * h,
            Boundary::Periodic => -a + k as f64 * h,
        }
    }

    /// Fractional lattice position of coordinate `x` on `axis`.
    pub fn lattice_pos(&self, axis: usize, x: f64) -> f64 {
        let a = self.half[axis];
        let h = self.h[axis];
        match self.boundary {
            Boundary::Dirichlet => (x + a) / h - 1.0,
            Boundary::Periodic => (x + a) / h,
        }
    }

    pub fn unravel(&self, node: usize) -> Vec<i64> {
        let mut idx = vec![0; self.dim()];
        self.unravel_into(node, &mut idx);
        idx
    }

    fn unravel_into(&self, mut node: usize, idx: &mut [i64]) {
        for (axis, &k) in self.n.iter().enumerate() {
            idx[axis] = (node % k) as i64;
            node /= k;
        }
    }

    /// Node index for a lattice multi-index; wraps on periodic grids, `None`
    /// outside the box on Dirichlet grids.
    pub fn ravel(&self, idx: &[i64]) -> Option<usize> {
        let mut node = 0usize;
        let mut stride = 1usize;
        for (axis, &k) in self.n.iter().enumerate() {
            let i = match self.boundary {
                Boundary::Periodic => idx[axis].rem_euclid(k as i64),
                Boundary::Dirichlet => {
                    if idx[axis] < 0 || idx[axis] >= k as i64 {
                        return None;
                    }
                    idx[axis]
                }
            };
            node += i as usize * stride;
            stride *= k;
        }
        Some(node)
    }

    /// Nearest node to a coordinate vector, or `None` if it falls outside the
    /// Dirichlet box (more than half a cell beyond the outermost nodes).
    pub fn nearest_node(&self, c: &[f64]) -> Option<usize> {
        let mut idx = [0i64; 3];
        for axis in 0..self.dim() {
            let p = self.lattice_pos(axis, c[axis]);
            if !p.is_finite() {
                return None;
            }
            idx[axis] = p.round() as i64;
        }
        self.ravel(&idx[..self.dim()])
    }

    /// Largest `r` for which the homogeneous ball `B(e, r)` fits in the box.
    pub fn inradius(&self) -> f64 {
        let extent = self.desc.unit_ball_extent();
        self.half
            .iter()
            .zip(&extent)
            .zip(self.desc.dilation_exponents())
            .map(|((&a, &m), &j)| (a / m).powf(1.0 / j as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest homogeneous norm of a single lattice step along one axis.
    pub fn max_step_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for axis in 0..self.dim() {
            let mut c = vec![0.0; self.dim()];
            c[axis] = self.h[axis];
            best = best.max(self.desc.hom_norm_coords(&c));
        }
        best
    }

    /// True when the bounding box of `B(center, r)` lies inside the box.
    pub fn ball_inside_box(&self, center: &[f64], r: f64) -> bool {
        self.desc
            .ball_bounding_box(center, r)
            .iter()
            .zip(&self.half)
            .all(|(&(lo, hi), &a)| lo >= -a - 1e-12 && hi <= a + 1e-12)
    }

    /// Nodes `g'` with `d(g', center) < r` (or `<= r` when `closed`).
    ///
    /// On periodic grids lattice points are mapped back into the box, so a
    /// node appears once even if the ball wraps around.
    pub fn nodes_in_ball(&self, center: &[f64], r: f64, closed: bool) -> Vec<usize> {
        let bbox = self.desc.ball_bounding_box(center, r);
        let ranges: Vec<(i64, i64)> = bbox
            .iter()
            .enumerate()
            .map(|(axis, &(lo, hi))| {
                (
                    self.lattice_pos(axis, lo).ceil() as i64,
                    self.lattice_pos(axis, hi).floor() as i64,
                )
            })
            .collect();
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|r| r.0 > r.1) {
            return out;
        }
        let mut c = vec![0.0; self.dim()];
        loop {
            for (axis, &k) in idx.iter().enumerate() {
                c[axis] = self.lattice_coord(axis, k);
            }
            let d = self.desc.distance_coords(&c, center);
            if d < r || (closed && d <= r) {
                if let Some(node) = self.ravel(&idx) {
                    out.push(node);
                }
            }
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == idx.len() {
                    if self.boundary == Boundary::Periodic {
                        out.sort_unstable();
                        out.dedup();
                    }
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] <= ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }

    /// Haar-weighted `L^p` norm of raw node values; `p = ∞` gives the max.
    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.cell_volume()).powf(1.0 / p)
    }
}

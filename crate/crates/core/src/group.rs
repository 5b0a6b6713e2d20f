//! Exact arithmetic on the shipped stratified groups.
//!
//! Points are stored in exponential coordinates. The Euclidean groups are
//! abelian with a single stratum; the first Heisenberg group `h1` has strata
//! `(2, 1)` and the law
//! `(x, y, z)·(x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Seed used when callers do not supply one, so sampling-based estimates are
/// reproducible run to run.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<f64>,
}

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
enum Kind {
    Euclidean(usize),
    Heisenberg,
}

/// A stratified group instance: law, dilations, homogeneous norm and the
/// left-invariant horizontal frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDescriptor {
    kind: Kind,
    strata_dims: Vec<usize>,
    exponents: Vec<u32>,
}

impl GroupDescriptor {
    pub fn euclidean(n: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(invalid(format!("only R^1 and R^2 are shipped, got R^{n}")));
        }
        Ok(Self {
            kind: Kind::Euclidean(n),
            strata_dims: vec![n],
            exponents: vec![1; n],
        })
    }

    pub fn heisenberg() -> Self {
        Self {
            kind: Kind::Heisenberg,
            strata_dims: vec![2, 1],
            exponents: vec![1, 1, 2],
        }
    }

    /// Looks up a descriptor by its configuration id (`r1`, `r2`, `h1`).
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "r1" => Self::euclidean(1),
            "r2" => Self::euclidean(2),
            "h1" => Ok(Self::heisenberg()),
            other => Err(invalid(format!("unknown group id `{other}` (expected r1, r2 or h1)"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            Kind::Euclidean(1) => "r1",
            Kind::Euclidean(_) => "r2",
            Kind::Heisenberg => "h1",
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self.kind, Kind::Euclidean(_))
    }

    /// Total topological dimension `n = sum n_j`.
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn strata_dims(&self) -> &[usize] {
        &self.strata_dims
    }

    /// Number of horizontal directions `n_1`.
    pub fn horizontal_dim(&self) -> usize {
        self.strata_dims[0]
    }

    /// Homogeneous dimension `Q = sum j n_j`.
    pub fn hom_dimension(&self) -> usize {
        self.strata_dims
            .iter()
            .enumerate()
            .map(|(j, n)| (j + 1) * n)
            .sum()
    }

    pub fn q(&self) -> f64 {
        self.hom_dimension() as f64
    }

    /// Coordinate `i` dilates by `r^{exponents[i]}`.
    pub fn dilation_exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::new(vec![0.0; self.dim()])
    }

    fn check(&self, g: &GroupPoint) -> Result<()> {
        if g.dim() != self.dim() {
            return Err(invalid(format!(
                "point has {} coordinates, group `{}` has dimension {}",
                g.dim(),
                self.id(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn multiply(&self, a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
        self.check(a)?;
        self.check(b)?;
        let mut out = vec![0.0; self.dim()];
        self.multiply_coords(a.coords(), b.coords(), &mut out);
        Ok(GroupPoint::new(out))
    }

    /// Allocation-free group law on raw coordinate slices.
    pub fn multiply_coords(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self.kind {
            Kind::Euclidean(_) => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = x + y;
                }
            }
            Kind::Heisenberg => {
                out[0] = a[0] + b[0];
                out[1] = a[1] + b[1];
                out[2] = a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
        }
    }

    /// In exponential coordinates of a step-2 group the inverse is negation.
    pub fn inverse(&self, g: &GroupPoint) -> GroupPoint {
        GroupPoint::new(g.coords().iter().map(|x| -x).collect())
    }

    pub fn dilate(&self, r: f64, g: &GroupPoint) -> Result<GroupPoint> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("dilation factor must be positive, got {r}")));
        }
        self.check(g)?;
        Ok(GroupPoint::new(
            g.coords()
                .iter()
                .zip(&self.exponents)
                .map(|(x, &k)| x * r.powi(k as i32))
                .collect(),
        ))
    }

    /// Homogeneous norm: Euclidean on `R^n`, Korányi `((x²+y²)² + 16 z²)^{1/4}` on `h1`.
    pub fn hom_norm(&self, g: &GroupPoint) -> f64 {
        self.hom_norm_coords(g.coords())
    }

    pub fn hom_norm_coords(&self, c: &[f64]) -> f64 {
        match self.kind {
            Kind::Euclidean(_) => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Kind::Heisenberg => {
                let rho2 = c[0] * c[0] + c[1] * c[1];
                (rho2 * rho2 + 16.0 * c[2] * c[2]).sqrt().sqrt()
            }
        }
    }

    /// Left-invariant distance `d(g, g') = |g'^{-1} g|`.
    pub fn distance(&self, g: &GroupPoint, g_prime: &GroupPoint) -> f64 {
        self.distance_coords(g.coords(), g_prime.coords())
    }

    pub fn distance_coords(&self, g: &[f64], gp: &[f64]) -> f64 {
        match self.kind {
            Kind::Euclidean(_) => g
                .iter()
                .zip(gp)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Kind::Heisenberg => {
                let dx = g[0] - gp[0];
                let dy = g[1] - gp[1];
                let dz = g[2] - gp[2] + 0.5 * (gp[1] * g[0] - gp[0] * g[1]);
                let rho2 = dx * dx + dy * dy;
                (rho2 * rho2 + 16.0 * dz * dz).sqrt().sqrt()
            }
        }
    }

    /// Coefficients `a_i(g)` of the horizontal field `X_j = sum_i a_i(g) ∂_i`.
    ///
    /// On `h1`: `X_1 = ∂x - (y/2) ∂z`, `X_2 = ∂y + (x/2) ∂z`.
    pub fn horizontal_coefficients(&self, j: usize, g: &GroupPoint) -> Result<Vec<f64>> {
        self.check(g)?;
        if j >= self.horizontal_dim() {
            return Err(invalid(format!("horizontal field index {j} out of range")));
        }
        let mut a = vec![0.0; self.dim()];
        a[j] = 1.0;
        if let Kind::Heisenberg = self.kind {
            let c = g.coords();
            a[2] = if j == 0 { -0.5 * c[1] } else { 0.5 * c[0] };
        }
        Ok(a)
    }

    /// Largest `|coord_i|` over the closed unit ball of the homogeneous norm.
    pub fn unit_ball_extent(&self) -> Vec<f64> {
        match self.kind {
            Kind::Euclidean(n) => vec![1.0; n],
            Kind::Heisenberg => vec![1.0, 1.0, 0.25],
        }
    }

    /// Axis-aligned box containing the ball `B(center, r)`.
    ///
    /// Exact on `R^n`; on `h1` the `z` excursion is bounded by
    /// `r²/4 + |(x, y)| r / 2`.
    pub fn ball_bounding_box(&self, center: &[f64], r: f64) -> Vec<(f64, f64)> {
        match self.kind {
            Kind::Euclidean(_) => center.iter().map(|c| (c - r, c + r)).collect(),
            Kind::Heisenberg => {
                let rho = (center[0] * center[0] + center[1] * center[1]).sqrt();
                let dz = 0.25 * r * r + 0.5 * rho * r;
                vec![
                    (center[0] - r, center[0] + r),
                    (center[1] - r, center[1] + r),
                    (center[2] - dz, center[2] + dz),
                ]
            }
        }
    }

    /// Draws a point uniformly (in Lebesgue = Haar measure) from the unit
    /// homogeneous ball by rejection from its bounding box.
    pub fn sample_unit_ball<R: Rng>(&self, rng: &mut R) -> GroupPoint {
        let extent = self.unit_ball_extent();
        loop {
            let c: Vec<f64> = extent.iter().map(|&e| rng.gen_range(-e..=e)).collect();
            if self.hom_norm_coords(&c) <= 1.0 {
                return GroupPoint::new(c);
            }
        }
    }
}

/// `|g g'| / (|g| + |g'|)`, or `None` when both points are the identity.
pub fn triangle_ratio(desc: &GroupDescriptor, g: &GroupPoint, h: &GroupPoint) -> Result<Option<f64>> {
    let denom = desc.hom_norm(g) + desc.hom_norm(h);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some(desc.hom_norm(&desc.multiply(g, h)?) / denom))
}

/// Empirical quasi-triangle constant `γ̂ = max |g g'| / (|g| + |g'|)` over
/// `sample_count` random pairs from the unit ball. Each sampled `g` is also
/// paired with the identity, which pins the estimate at `γ̂ ≥ 1`.
pub fn estimate_triangle_constant(desc: &GroupDescriptor, sample_count: usize, seed: u64) -> Result<f64> {
    if sample_count < 100 {
        return Err(invalid(format!("sample_count must be at least 100, got {sample_count}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = desc.identity();
    let mut gamma: f64 = 0.0;
    for _ in 0..sample_count {
        let g = desc.sample_unit_ball(&mut rng);
        let h = desc.sample_unit_ball(&mut rng);
        for (a, b) in [(&g, &h), (&g, &e)] {
            if let Some(r) = triangle_ratio(desc, a, b)? {
                gamma = gamma.max(r);
            }
        }
    }
    Ok(gamma)
}

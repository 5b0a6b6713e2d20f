//! Seeded families of test functions supported inside the grid box.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::bump;
use crate::discretization::{Grid, GridFunction};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Bump,
    Hat,
    Gaussian,
    Oscillatory,
    Indicator,
}

impl Profile {
    pub const ALL: [Profile; 5] = [Profile::Bump, Profile::Hat, Profile::Gaussian, Profile::Oscillatory, Profile::Indicator];

    pub fn id(&self) -> &'static str {
        match self {
            Profile::Bump => "bump",
            Profile::Hat => "hat",
            Profile::Gaussian => "gaussian",
            Profile::Oscillatory => "oscillatory",
            Profile::Indicator => "indicator",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| invalid(format!("unknown test function profile {id:?}")))
    }

    /// Radial profile at `d / r`; the oscillation runs along the first axis.
    fn eval(&self, rho: f64, x0: f64, freq: f64) -> f64 {
        match self {
            Profile::Bump => bump(rho),
            Profile::Hat => (1.0 - rho).max(0.0),
            // Truncated so the support stays inside the ball.
            Profile::Gaussian => (-4.0 * rho * rho).exp() * if rho < 1.0 { 1.0 } else { 0.0 },
            Profile::Oscillatory => bump(rho) * (freq * x0).cos(),
            Profile::Indicator => {
                if rho < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One member of a suite: `amplitude · profile(d(c, g) / radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: Profile,
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

impl TestFunction {
    pub fn name(&self, index: usize) -> String {
        format!("{}-{index}", self.profile.id())
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        if self.center.len() != grid.dim() {
            return Err(invalid("test function centre has the wrong dimension"));
        }
        if !(self.radius > 0.0) {
            return Err(invalid(format!("test function radius must be positive, got {}", self.radius)));
        }
        let desc = grid.descriptor();
        Ok(GridFunction::from_fn(grid, |c| {
            let rho = desc.distance_coords(&self.center, c) / self.radius;
            self.amplitude * self.profile.eval(rho, c[0] - self.center[0], self.frequency)
        }))
    }
}

/// `count` functions cycling through the profiles, with centres in the ball
/// of radius `R/4` about the origin and radii in `[R/4, R/2]` (`R` the box
/// inradius), so every support stays inside the box.
pub fn suite_spec(grid: &Grid, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let desc = grid.descriptor();
    let big_r = grid.inradius();
    (0..count)
        .map(|i| {
            let profile = Profile::ALL[i % Profile::ALL.len()];
            let u = desc.sample_unit_ball(&mut rng);
            let center = desc.dilate(0.25 * big_r, &u).expect("positive dilation").into_coords();
            let radius = big_r * rng.gen_range(0.25..0.5);
            TestFunction {
                profile,
                center,
                radius,
                amplitude: rng.gen_range(0.5..2.0),
                frequency: rng.gen_range(2.0..8.0) / radius,
            }
        })
        .collect()
}

pub fn standard_suite(grid: &Arc<Grid>, count: usize, seed: u64) -> Result<Vec<(String, GridFunction)>> {
    suite_spec(grid, count, seed)
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((f.name(i), f.sample(grid)?)))
        .collect()
}

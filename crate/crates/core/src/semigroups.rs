//! Heat, fractional heat and Caffarelli–Silvestre (Poisson) semigroups as
//! spectral multipliers, subordination cross-checks, kernel extraction and
//! certification of two-sided kernel bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_li, ln_gamma};

use crate::discretization::{GridFunction, SpectralOperator};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_vec, Tolerance};

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be nonnegative and finite, got {t}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("sigma must lie in (0, 1), got {sigma}")))
    }
}

/// A semigroup member `T_t`, identified by its scalar multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Semigroup {
    /// `e^{-tλ}`
    Heat { t: f64 },
    /// `e^{-tλ^α}`
    FracHeat { alpha: f64, t: f64 },
    /// `ψ_σ(t²λ)`
    Poisson { sigma: f64, t: f64 },
}

impl Semigroup {
    pub fn t(&self) -> f64 {
        match *self {
            Semigroup::Heat { t } | Semigroup::FracHeat { t, .. } | Semigroup::Poisson { t, .. } => t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Semigroup::Heat { t } => check_t(t),
            Semigroup::FracHeat { alpha, t } => check_alpha(alpha).and(check_t(t)),
            Semigroup::Poisson { sigma, t } => check_sigma(sigma).and(check_t(t)),
        }
    }

    /// Multiplier values on the spectrum of `op`.
    pub fn multiplier(&self, op: &SpectralOperator) -> Result<Vec<f64>> {
        self.validate()?;
        match *self {
            Semigroup::Heat { t } => op.multiplier(|l| (-t * l).exp()),
            Semigroup::FracHeat { alpha, t } => op.multiplier(|l| (-t * l.powf(alpha)).exp()),
            Semigroup::Poisson { sigma, t } => (0..op.node_count())
                .map(|k| poisson_multiplier(sigma, t * t * op.lambda(k)))
                .collect(),
        }
    }

    /// Reference decay profile at distance `d` in homogeneous dimension `q`:
    /// `t / (t^{1/(2α)} + d)^{Q+2α}` (heat is `α = 1`) or
    /// `t^{2σ} / (t² + d²)^{Q/2+σ}`.
    pub fn profile(&self, q: f64, d: f64) -> f64 {
        match *self {
            Semigroup::Heat { t } => t / (t.sqrt() + d).powf(q + 2.0),
            Semigroup::FracHeat { alpha, t } => t / (t.powf(0.5 / alpha) + d).powf(q + 2.0 * alpha),
            Semigroup::Poisson { sigma, t } => t.powf(2.0 * sigma) / (t * t + d * d).powf(0.5 * q + sigma),
        }
    }

    pub fn apply(&self, op: &SpectralOperator, u: &GridFunction) -> Result<GridFunction> {
        let m = self.multiplier(op)?;
        Ok(u.with_values(op.apply_multiplier(&m, u.values())))
    }
}

pub fn heat_apply(op: &SpectralOperator, t: f64, u: &GridFunction) -> Result<GridFunction> {
    Semigroup::Heat { t }.apply(op, u)
}

pub fn frac_heat_apply(op: &SpectralOperator, alpha: f64, t: f64, u: &GridFunction) -> Result<GridFunction> {
    Semigroup::FracHeat { alpha, t }.apply(op, u)
}

pub fn poisson_apply(op: &SpectralOperator, sigma: f64, t: f64, u: &GridFunction) -> Result<GridFunction> {
    Semigroup::Poisson { sigma, t }.apply(op, u)
}

/// `ψ_σ(x) = Γ(σ)^{-1} ∫_0^∞ e^{-r - x/(4r)} r^{σ-1} dr`, integrated in `y = ln r`.
///
/// The lower limit is pushed down until the neglected piece
/// `e^{σ y}/(σ Γ(σ))` is below `1e-16`, so `ψ_σ(0) = 1` to full precision.
pub fn poisson_multiplier(sigma: f64, x: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("Poisson multiplier argument must be nonnegative, got {x}")));
    }
    let lg = ln_gamma(sigma);
    let f = |y: f64| (sigma * y - y.exp() - 0.25 * x * (-y).exp() - lg).exp();
    let r_star = 0.5 * (sigma + (sigma * sigma + x).sqrt());
    let y_star = r_star.ln();
    let width = 1.0 / (r_star + 0.25 * x / r_star).sqrt();
    let y_lo = ((1e-16 * sigma * gamma(sigma)).ln() / sigma).min(y_star - 50.0 * width);
    let y_hi = (r_star + 800.0).ln().max(y_star + 50.0 * width);
    let bps: Vec<f64> = (-12..=12).map(|k| y_star + k as f64 * width).collect();
    integrate(
        f,
        y_lo,
        y_hi,
        &bps,
        Tolerance {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
        },
    )
}

/// Density of the stable subordinator: `e^{-tλ^α} = ∫ η_t^α(s) e^{-sλ} ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorDensity {
    alpha: f64,
    t: f64,
}

impl SubordinatorDensity {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("subordinator index must lie in (0, 1), got {alpha}")));
        }
        if !(t > 0.0) {
            return Err(invalid(format!("subordinator time must be positive, got {t}")));
        }
        Ok(Self { alpha, t })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn require_closed_form(&self) -> Result<()> {
        if self.alpha == 0.5 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "closed-form subordinator density only for alpha = 1/2, got {}",
                self.alpha
            )))
        }
    }

    /// `η_t^{1/2}(s) = t (4π)^{-1/2} s^{-3/2} e^{-t²/(4s)}`.
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        self.require_closed_form()?;
        if s <= 0.0 {
            return Ok(0.0);
        }
        let t = self.t;
        Ok(t / (4.0 * std::f64::consts::PI).sqrt() * s.powf(-1.5) * (-t * t / (4.0 * s)).exp())
    }

    /// `min(t^{-1/α}, t s^{-1-α})`.
    pub fn envelope(&self, s: f64) -> f64 {
        self.t.powf(-1.0 / self.alpha).min(self.t * s.powf(-1.0 - self.alpha))
    }

    /// Integration window in `y = ln s` outside which the density and its
    /// moments up to order 1/4 are negligible (below `1e-13`).
    fn window(&self) -> (f64, f64, Vec<f64>) {
        let t2 = self.t * self.t;
        let lo = (t2 / 3000.0).ln();
        let hi = (t2 / (std::f64::consts::PI * 1e-26)).ln();
        let peak = (t2 / 6.0).ln();
        let bps = (-6..=12).map(|k| peak + k as f64).collect();
        (lo, hi, bps)
    }

    /// `∫ η(s) w(s) ds` by quadrature in `y = ln s`.
    pub fn integrate_against(&self, w: impl Fn(f64) -> f64) -> Result<f64> {
        self.require_closed_form()?;
        let (lo, hi, bps) = self.window();
        integrate(
            |y| {
                let s = y.exp();
                self.evaluate(s).unwrap_or(0.0) * s * w(s)
            },
            lo,
            hi,
            &bps,
            Tolerance {
                rel_tol: 1e-13,
                abs_tol: 1e-300,
            },
        )
    }

    /// `∫ η(s) s^δ ds`: quadrature on `s < S`, and the slowly decaying tail
    /// `s > S` in closed form through the lower incomplete gamma function.
    pub fn moment(&self, delta: f64) -> Result<f64> {
        self.require_closed_form()?;
        if delta >= self.alpha {
            return Err(invalid(format!("moment order must be below alpha, got {delta}")));
        }
        let t2 = self.t * self.t;
        let s_max = 1e4 * t2;
        let (lo, _, bps) = self.window();
        let body = integrate(
            |y| {
                let s = y.exp();
                self.evaluate(s).unwrap_or(0.0) * s * s.powf(delta)
            },
            lo,
            s_max.ln(),
            &bps,
            Tolerance {
                rel_tol: 1e-13,
                abs_tol: 1e-300,
            },
        )?;
        let a = 0.5 - delta;
        let tail = self.t / (4.0 * std::f64::consts::PI).sqrt()
            * (0.25 * t2).powf(delta - 0.5)
            * gamma_li(a, 0.25 * t2 / s_max);
        Ok(body + tail)
    }

    /// `Γ(1 - δ/α) / Γ(1 - δ) t^{δ/α}`.
    pub fn moment_closed_form(&self, delta: f64) -> f64 {
        gamma(1.0 - delta / self.alpha) / gamma(1.0 - delta) * self.t.powf(delta / self.alpha)
    }

    /// `∫ η(s) e^{-sλ} ds` by quadrature.
    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        self.integrate_against(|s| (-s * lambda).exp())
    }
}

/// `∫_0^∞ η_t^{1/2}(s) e^{-sL} u ds`, integrating the whole spectral
/// coefficient vector of `u` in one adaptive sweep over `ln s`.
pub fn frac_heat_via_subordination(op: &SpectralOperator, density: &SubordinatorDensity, u: &GridFunction) -> Result<GridFunction> {
    density.require_closed_form()?;
    let c = op.coefficients(u.values());
    let lambdas: Vec<f64> = (0..op.node_count()).map(|k| op.lambda(k)).collect();
    let (lo, hi, bps) = density.window();
    let res = integrate_vec(
        |y| {
            let s = y.exp();
            let w = density.evaluate(s).unwrap_or(0.0) * s;
            c.iter().zip(&lambdas).map(|(ck, lk)| w * (-s * lk).exp() * ck).collect()
        },
        lo,
        hi,
        c.len(),
        &bps,
        Tolerance {
            rel_tol: 1e-11,
            abs_tol: 1e-300,
        },
    )?;
    Ok(u.with_values(op.synthesize(&res.value)))
}

/// Kernel column `T δ_b`: the semigroup applied to a discrete delta at the
/// node nearest `base_point`.
pub fn extract_kernel(op: &SpectralOperator, semigroup: Semigroup, base_point: &[f64]) -> Result<GridFunction> {
    let delta = GridFunction::delta(op.grid(), base_point)?;
    semigroup.apply(op, &delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Location {
    pub coords: Vec<f64>,
    pub t: f64,
}

/// Measured constants of a two-sided (or one-sided) kernel estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub profile_id: String,
    pub c_lower: f64,
    pub c_upper: f64,
    pub argmin: Location,
    pub argmax: Location,
    pub sample_count: usize,
}

impl BoundReport {
    pub fn spread(&self) -> f64 {
        self.c_upper / self.c_lower
    }

    pub fn is_certified(&self) -> bool {
        self.c_lower > 0.0 && self.c_upper.is_finite() && self.c_lower <= self.c_upper
    }
}

struct Extremes {
    lo: f64,
    hi: f64,
    argmin: Location,
    argmax: Location,
    count: usize,
}

impl Extremes {
    fn new() -> Self {
        let nowhere = Location {
            coords: Vec::new(),
            t: f64::NAN,
        };
        Self {
            lo: f64::INFINITY,
            hi: 0.0,
            argmin: nowhere.clone(),
            argmax: nowhere,
            count: 0,
        }
    }

    fn push(&mut self, r: f64, coords: &[f64], t: f64) {
        self.count += 1;
        if r < self.lo {
            self.lo = r;
            self.argmin = Location {
                coords: coords.to_vec(),
                t,
            };
        }
        if r > self.hi {
            self.hi = r;
            self.argmax = Location {
                coords: coords.to_vec(),
                t,
            };
        }
    }

    fn report(self, profile_id: &str) -> Result<BoundReport> {
        if self.count == 0 {
            return Err(invalid("no admissible sample points for the bound"));
        }
        Ok(BoundReport {
            profile_id: profile_id.to_string(),
            c_lower: self.lo,
            c_upper: self.hi,
            argmin: self.argmin,
            argmax: self.argmax,
            sample_count: self.count,
        })
    }
}

/// Nodes within half the box inradius of `base`, with their distances.
fn certification_region(op: &SpectralOperator, base: &[f64]) -> Result<Vec<(usize, f64)>> {
    let grid = op.grid();
    let b = grid
        .nearest_node(base)
        .ok_or_else(|| invalid(format!("base point {base:?} lies outside the grid box")))?;
    let bc = grid.node(b).to_vec();
    let radius = 0.5 * grid.inradius();
    Ok(grid
        .nodes_in_ball(&bc, radius, true)
        .into_iter()
        .map(|k| (k, grid.descriptor().distance_coords(grid.node(k), &bc)))
        .collect())
}

fn certify_two_sided(
    op: &SpectralOperator,
    profile_id: &str,
    semigroups: &[Semigroup],
    base: &[f64],
    profile: impl Fn(f64, f64) -> f64,
) -> Result<BoundReport> {
    if semigroups.is_empty() {
        return Err(invalid("empty t set"));
    }
    let region = certification_region(op, base)?;
    let grid = op.grid();
    let mut ext = Extremes::new();
    for sg in semigroups {
        let t = sg.t();
        if !(t > 0.0) {
            return Err(invalid("bound certification needs t > 0"));
        }
        let k = extract_kernel(op, *sg, base)?;
        let peak = k.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &(node, d) in &region {
            let v = k.values()[node];
            if v <= 1e-10 * peak {
                return Err(Error::CertificationFailure {
                    location: format!("node {:?}, t = {t}", grid.node(node)),
                    reason: format!("kernel value {v:e} is not positive"),
                });
            }
            ext.push(v / profile(t, d), grid.node(node), t);
        }
    }
    ext.report(profile_id)
}

/// Ratio `K_{α,t}(g) (t^{1/(2α)} + d(e,g))^{Q+2α} / t` over the certification
/// region and `t_set`.
pub fn certify_frac_heat_bounds(op: &SpectralOperator, alpha: f64, t_set: &[f64], base_point: &[f64]) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let q = op.grid().descriptor().q();
    let sgs: Vec<Semigroup> = t_set.iter().map(|&t| Semigroup::FracHeat { alpha, t }).collect();
    certify_two_sided(op, "frac-heat", &sgs, base_point, |t, d| Semigroup::FracHeat { alpha, t }.profile(q, d))
}

/// Ratio `K(g) (t² + d(e,g)²)^{Q/2+σ} / t^{2σ}` for the Poisson kernel.
pub fn certify_poisson_bounds(op: &SpectralOperator, sigma: f64, t_set: &[f64], base_point: &[f64]) -> Result<BoundReport> {
    check_sigma(sigma)?;
    let q = op.grid().descriptor().q();
    let sgs: Vec<Semigroup> = t_set.iter().map(|&t| Semigroup::Poisson { sigma, t }).collect();
    certify_two_sided(op, "poisson", &sgs, base_point, |t, d| Semigroup::Poisson { sigma, t }.profile(q, d))
}

/// Smallest `C` with `|K(gh) - K(g)| <= C (d(e,h)/scale) profile(d(e,g))`
/// over the region, increments realized as nearest-node translations.
fn certify_holder(
    op: &SpectralOperator,
    profile_id: &str,
    sg: Semigroup,
    base: &[f64],
    h_set: &[Vec<f64>],
    scale: f64,
    profile: impl Fn(f64) -> f64,
) -> Result<BoundReport> {
    let grid = op.grid();
    let desc = grid.descriptor();
    let region = certification_region(op, base)?;
    let k = extract_kernel(op, sg, base)?;
    let t = sg.t();
    let mut ext = Extremes::new();
    let mut shifted = vec![0.0; grid.dim()];
    for h in h_set {
        if h.len() != grid.dim() {
            return Err(invalid("increment has the wrong dimension"));
        }
        if desc.hom_norm_coords(h) >= scale {
            return Err(invalid(format!("increment {h:?} is not shorter than the time scale {scale:e}")));
        }
        for &(node, d) in &region {
            let g = grid.node(node);
            desc.multiply_coords(g, h, &mut shifted);
            let Some(m) = grid.nearest_node(&shifted) else { continue };
            let dh = desc.distance_coords(grid.node(m), g);
            let diff = (k.values()[m] - k.values()[node]).abs();
            if dh == 0.0 {
                continue;
            }
            ext.push(diff / ((dh / scale) * profile(d)), g, t);
        }
    }
    if ext.count == 0 {
        // Every increment collapsed to the identity: both sides vanish.
        return Ok(BoundReport {
            profile_id: profile_id.to_string(),
            c_lower: 0.0,
            c_upper: 0.0,
            argmin: Location { coords: base.to_vec(), t },
            argmax: Location { coords: base.to_vec(), t },
            sample_count: 0,
        });
    }
    ext.report(profile_id)
}

pub fn certify_frac_heat_holder(
    op: &SpectralOperator,
    alpha: f64,
    t: f64,
    base_point: &[f64],
    h_set: &[Vec<f64>],
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    let q = op.grid().descriptor().q();
    let scale = t.powf(0.5 / alpha);
    certify_holder(op, "frac-heat-holder", Semigroup::FracHeat { alpha, t }, base_point, h_set, scale, |d| {
        t / (scale + d).powf(q + 2.0 * alpha)
    })
}

pub fn certify_poisson_holder(
    op: &SpectralOperator,
    sigma: f64,
    t: f64,
    base_point: &[f64],
    h_set: &[Vec<f64>],
) -> Result<BoundReport> {
    check_sigma(sigma)?;
    let q = op.grid().descriptor().q();
    certify_holder(op, "poisson-holder", Semigroup::Poisson { sigma, t }, base_point, h_set, t, |d| {
        t.powf(2.0 * sigma) / (t * t + d * d).powf(0.5 * q + sigma)
    })
}

/// `sup |H u(g) - H u(g₀)| / (‖u‖_p t^{-(1+Q/p)/(2α)} d(g, g₀))` over
/// `pair_count` random node pairs plus every adjacent pair along axis 0.
pub fn continuity_modulus(
    op: &SpectralOperator,
    alpha: f64,
    t: f64,
    u: &GridFunction,
    p: f64,
    pair_count: usize,
    seed: u64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("continuity modulus needs t > 0"));
    }
    let norm = u.lp_norm(p);
    if norm == 0.0 {
        return Err(invalid("continuity modulus needs u != 0"));
    }
    let grid = op.grid();
    let desc = grid.descriptor();
    let hu = frac_heat_apply(op, alpha, t, u)?;
    let q = desc.q();
    let scale = norm * t.powf(-(1.0 + q / p) / (2.0 * alpha));
    let n = grid.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..pair_count).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    pairs.extend((0..n.saturating_sub(1)).map(|k| (k, k + 1)));
    let mut best: f64 = 0.0;
    for (a, b) in pairs {
        if a == b {
            continue;
        }
        let d = desc.distance_coords(grid.node(a), grid.node(b));
        let diff = (hu.values()[a] - hu.values()[b]).abs();
        best = best.max(diff / (scale * d));
    }
    Ok(best)
}

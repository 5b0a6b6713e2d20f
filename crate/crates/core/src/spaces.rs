//! Fractional Sobolev norms, Besov seminorms (heat, Poisson and difference
//! flavors), their equivalence brackets, density studies and the min-max
//! inequality.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::discretization::{min_mollifier_radius, mollify, truncate, Grid, GridFunction, SpectralOperator};
use crate::error::{invalid, Error, Result};
use crate::fractional::frac_power;
use crate::linalg::gemm;
use crate::semigroups::Semigroup;

pub const DEFAULT_LEVEL_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BesovFlavor {
    Heat { alpha: f64 },
    Poisson { sigma: f64 },
    Difference,
}

impl BesovFlavor {
    pub fn id(&self) -> &'static str {
        match self {
            BesovFlavor::Heat { .. } => "heat",
            BesovFlavor::Poisson { .. } => "poisson",
            BesovFlavor::Difference => "difference",
        }
    }
}

/// `q = f64::INFINITY` selects the sup form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovParams {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub flavor: BesovFlavor,
}

impl BesovParams {
    pub fn heat(p: f64, q: f64, alpha: f64, beta: f64) -> Self {
        Self {
            p,
            q,
            beta,
            flavor: BesovFlavor::Heat { alpha },
        }
    }

    pub fn poisson(p: f64, q: f64, sigma: f64, beta: f64) -> Self {
        Self {
            p,
            q,
            beta,
            flavor: BesovFlavor::Poisson { sigma },
        }
    }

    pub fn difference(p: f64, q: f64, beta: f64) -> Self {
        Self {
            p,
            q,
            beta,
            flavor: BesovFlavor::Difference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid(format!("Besov p must be finite and >= 1, got {}", self.p)));
        }
        if !(self.q >= 1.0) {
            return Err(invalid(format!("Besov q must be >= 1, got {}", self.q)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("Besov beta must be positive, got {}", self.beta)));
        }
        match self.flavor {
            BesovFlavor::Heat { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(invalid(format!("heat flavor needs alpha in (0, 1], got {alpha}")))
            }
            BesovFlavor::Poisson { sigma } if !(sigma > 0.0 && sigma < 1.0) => {
                Err(invalid(format!("Poisson flavor needs sigma in (0, 1), got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    fn semigroup(&self, t: f64) -> Option<Semigroup> {
        match self.flavor {
            BesovFlavor::Heat { alpha } => Some(Semigroup::FracHeat { alpha, t }),
            BesovFlavor::Poisson { sigma } => Some(Semigroup::Poisson { sigma, t }),
            BesovFlavor::Difference => None,
        }
    }
}

/// `count` points log-spaced on `[lo, hi]`.
pub fn log_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// `hi, hi/base, hi/base², ...` down to `lo`, returned in increasing order.
pub fn geometric_levels(lo: f64, hi: f64, base: f64) -> Result<Vec<f64>> {
    if !(base > 1.0 && lo > 0.0 && hi > lo) {
        return Err(invalid("geometric ladder needs base > 1 and 0 < lo < hi"));
    }
    let mut out = Vec::new();
    let mut r = hi;
    while r >= lo * (1.0 - 1e-12) {
        out.push(r);
        r /= base;
    }
    out.reverse();
    Ok(out)
}

/// Default scale ladder: heat `t ∈ [h², R^{2α}]`, Poisson `t ∈ [h², R]`,
/// difference `r ∈ [h, R]`, with `R` the box inradius and `h` the finest
/// spacing.
pub fn default_levels(grid: &Grid, flavor: BesovFlavor) -> Vec<f64> {
    let h = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let r = grid.inradius();
    match flavor {
        BesovFlavor::Heat { alpha } => log_levels(h * h, r.powf(2.0 * alpha), DEFAULT_LEVEL_COUNT),
        BesovFlavor::Poisson { .. } => log_levels(h * h, r, DEFAULT_LEVEL_COUNT),
        BesovFlavor::Difference => log_levels(h, r, DEFAULT_LEVEL_COUNT),
    }
}

/// Trapezoid weights in `ln t` for sorted levels.
fn log_trapezoid_weights(levels: &[f64]) -> Vec<f64> {
    let n = levels.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = 0.5 * (levels[i + 1] / levels[i]).ln();
        w[i] += d;
        w[i + 1] += d;
    }
    w
}

fn checked_levels(levels: &[f64]) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(invalid("empty level set"));
    }
    if levels.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("scale levels must be positive and finite"));
    }
    let mut l = levels.to_vec();
    l.sort_by(f64::total_cmp);
    l.dedup();
    Ok(l)
}

/// `F[x + g n] = |u(x) - u(g)|^p`.
fn difference_tensor(u: &[f64], p: f64) -> Vec<f64> {
    let n = u.len();
    let mut f = vec![0.0; n * n];
    for g in 0..n {
        let col = &mut f[g * n..(g + 1) * n];
        for (x, v) in col.iter_mut().enumerate() {
            *v = (u[x] - u[g]).abs().powf(p);
        }
    }
    f
}

/// Inner integrals at each level.
///
/// Heat/Poisson: `∫ T_t(|u - u(g)|^p)(g) dg = vol Σ_k m_k(t) v_kᵀ F v_k`, so
/// the `n x n` tensor is transformed once and every level is a dot product.
/// Difference: `∫∫_{B(g,r)} |u(g) - u(g')|^p dg' dg / r^{2βp+Q}`.
pub fn besov_level_integrals(op: &SpectralOperator, params: &BesovParams, u: &GridFunction, levels: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let levels = checked_levels(levels)?;
    let grid = op.grid();
    let vol = grid.cell_volume();
    let n = grid.node_count();
    let p = params.p;
    match params.flavor {
        BesovFlavor::Difference => {
            let q_dim = grid.descriptor().q();
            let rmax = *levels.last().unwrap();
            let desc = grid.descriptor();
            let mut sums = vec![0.0; levels.len()];
            for g in 0..n {
                let ug = u.values()[g];
                for k in grid.nodes_in_ball(grid.node(g), rmax, false) {
                    let d = desc.distance_coords(grid.node(k), grid.node(g));
                    let v = (u.values()[k] - ug).abs().powf(p);
                    if v == 0.0 {
                        continue;
                    }
                    for (s, &r) in sums.iter_mut().zip(&levels) {
                        if d < r {
                            *s += v;
                        }
                    }
                }
            }
            Ok(sums
                .iter()
                .zip(&levels)
                .map(|(s, r)| s * vol * vol / r.powf(2.0 * params.beta * p + q_dim))
                .collect())
        }
        _ => {
            let f = difference_tensor(u.values(), p);
            let v = op.eigenvectors();
            let g = gemm(true, false, n, n, n, v, &f);
            let d: Vec<f64> = (0..n).map(|k| (0..n).map(|col| v[col + k * n] * g[k + col * n]).sum()).collect();
            levels
                .iter()
                .map(|&t| {
                    let m = params.semigroup(t).expect("semigroup flavor").multiplier(op)?;
                    Ok((vol * m.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>()).max(0.0))
                })
                .collect()
        }
    }
}

/// Combines level integrals into the seminorm: trapezoid in `ln t` for
/// finite `q`, the sup over levels for `q = ∞`.
fn combine_levels(params: &BesovParams, levels: &[f64], inner: &[f64]) -> f64 {
    let p = params.p;
    let decay = |t: f64| match params.flavor {
        BesovFlavor::Difference => 1.0,
        _ => t.powf(-0.5 * params.beta),
    };
    if params.q.is_infinite() {
        return levels.iter().zip(inner).map(|(&t, &i)| decay(t) * i.powf(1.0 / p)).fold(0.0, f64::max);
    }
    let q = params.q;
    let w = log_trapezoid_weights(levels);
    let s: f64 = levels
        .iter()
        .zip(inner)
        .zip(&w)
        .map(|((&t, &i), &wi)| wi * (decay(t) * i.powf(1.0 / p)).powf(q))
        .sum();
    s.powf(1.0 / q)
}

pub fn besov_seminorm(op: &SpectralOperator, params: &BesovParams, u: &GridFunction, levels: &[f64]) -> Result<f64> {
    let sorted = checked_levels(levels)?;
    let inner = besov_level_integrals(op, params, u, &sorted)?;
    Ok(combine_levels(params, &sorted, &inner))
}

/// [`besov_seminorm`] on the flavor's [`default_levels`].
pub fn besov_seminorm_default(op: &SpectralOperator, params: &BesovParams, u: &GridFunction) -> Result<f64> {
    besov_seminorm(op, params, u, &default_levels(op.grid(), params.flavor))
}

/// For `q = p` semigroup flavors the level sum collapses to one kernel:
/// `N(u)^p = vol Σ_{g,x} K(g,x) |u(x) - u(g)|^p`, `K = Σ_i w_i t_i^{-βp/2} T_{t_i}`.
#[derive(Debug, Clone)]
pub struct BesovKernel {
    n: usize,
    p: f64,
    vol: f64,
    matrix: Vec<f64>,
}

impl BesovKernel {
    pub fn new(op: &SpectralOperator, params: &BesovParams, levels: &[f64]) -> Result<Self> {
        params.validate()?;
        if params.q != params.p || params.flavor == BesovFlavor::Difference {
            return Err(invalid("Besov kernel form needs a semigroup flavor with q = p"));
        }
        let levels = checked_levels(levels)?;
        let w = log_trapezoid_weights(&levels);
        let n = op.node_count();
        let mut mu = vec![0.0; n];
        for (&t, &wi) in levels.iter().zip(&w) {
            let c = wi * t.powf(-0.5 * params.beta * params.p);
            let m = params.semigroup(t).expect("semigroup flavor").multiplier(op)?;
            for (a, b) in mu.iter_mut().zip(m) {
                *a += c * b;
            }
        }
        Ok(Self {
            n,
            p: params.p,
            vol: op.grid().cell_volume(),
            matrix: op.multiplier_matrix(&mu),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `N(u)^p`.
    pub fn seminorm_pow(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for g in 0..n {
            for x in 0..n {
                s += self.matrix[x + g * n] * (u[x] - u[g]).abs().powf(self.p);
            }
        }
        (s * self.vol).max(0.0)
    }

    /// Gradient of `N(u)^p` with respect to the nodal values.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let p = self.p;
        let mut out = vec![0.0; n];
        for g in 0..n {
            for x in 0..n {
                let d = u[x] - u[g];
                if d == 0.0 {
                    continue;
                }
                let v = 2.0 * p * self.vol * self.matrix[x + g * n] * d.abs().powf(p - 1.0) * d.signum();
                out[x] += v;
            }
        }
        out
    }

    /// For `p = 2`: the matrix `Q` with `N(u)² = uᵀ Q u`.
    pub fn quadratic_form(&self) -> Result<Vec<f64>> {
        if self.p != 2.0 {
            return Err(invalid("quadratic form exists only for p = 2"));
        }
        let n = self.n;
        let mut q = vec![0.0; n * n];
        for g in 0..n {
            let row: f64 = (0..n).map(|x| self.matrix[x + g * n]).sum();
            q[g + g * n] += 2.0 * self.vol * row;
            for x in 0..n {
                q[x + g * n] -= 2.0 * self.vol * self.matrix[x + g * n];
            }
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevNorm {
    pub full: f64,
    pub homogeneous: f64,
}

/// `‖u‖_p + ‖L^s u‖_p` and `‖L^s u‖_p`.
pub fn sobolev_norm(op: &SpectralOperator, s: f64, p: f64, u: &GridFunction) -> Result<SobolevNorm> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("Sobolev order must lie in (0, 1), got {s}")));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("Sobolev p must be >= 1, got {p}")));
    }
    let homogeneous = frac_power(op, s, u)?.lp_norm(p);
    Ok(SobolevNorm {
        full: u.lp_norm(p) + homogeneous,
        homogeneous,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub c1: f64,
    pub c2: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.c2 / self.c1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct NormReport {
    pub values: BTreeMap<String, f64>,
    pub ratios: BTreeMap<String, Bracket>,
}

/// Scale ladders for the three flavors of an equivalence study.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceLevels {
    pub heat: Vec<f64>,
    pub poisson: Vec<f64>,
    pub difference: Vec<f64>,
}

impl EquivalenceLevels {
    pub fn defaults(grid: &Grid, alpha: f64, sigma: f64) -> Self {
        Self {
            heat: default_levels(grid, BesovFlavor::Heat { alpha }),
            poisson: default_levels(grid, BesovFlavor::Poisson { sigma }),
            difference: default_levels(grid, BesovFlavor::Difference),
        }
    }

    /// Difference ladder replaced by a geometric one with the given base.
    pub fn with_difference_base(mut self, grid: &Grid, base: f64) -> Result<Self> {
        let h = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
        self.difference = geometric_levels(h, grid.inradius(), base)?;
        Ok(self)
    }
}

/// Brackets between `N_H^{α,2β}`, `N_P^{σ,2αβ/σ}` and the difference
/// seminorm `N^{αβ}` over the suite.
#[allow(clippy::too_many_arguments)]
pub fn certify_besov_equivalence(
    op: &SpectralOperator,
    p: f64,
    q: f64,
    beta: f64,
    alpha: f64,
    sigma: f64,
    suite: &[(String, GridFunction)],
    levels: &EquivalenceLevels,
) -> Result<NormReport> {
    if !(beta > 0.0 && beta < 1.0 / p) {
        return Err(invalid(format!("equivalence needs beta in (0, 1/p), got {beta}")));
    }
    if suite.is_empty() {
        return Err(invalid("empty test suite"));
    }
    let flavors = [
        ("heat", BesovParams::heat(p, q, alpha, 2.0 * beta), &levels.heat),
        ("poisson", BesovParams::poisson(p, q, sigma, 2.0 * alpha * beta / sigma), &levels.poisson),
        ("difference", BesovParams::difference(p, q, alpha * beta), &levels.difference),
    ];
    let mut report = NormReport::default();
    let mut per_fn: Vec<[f64; 3]> = Vec::new();
    for (id, u) in suite {
        let mut vals = [0.0; 3];
        for (i, (name, params, lv)) in flavors.iter().enumerate() {
            vals[i] = besov_seminorm(op, params, u, lv)?;
            report.values.insert(format!("{name}:{id}"), vals[i]);
        }
        let finite = vals.iter().filter(|v| v.is_finite()).count();
        if finite != 0 && finite != 3 {
            return Err(Error::EquivalenceFailure {
                function: id.clone(),
                reason: format!("seminorms {vals:?} are not all finite"),
            });
        }
        per_fn.push(vals);
    }
    for (a, b) in [(0, 2), (1, 2), (0, 1)] {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for vals in &per_fn {
            if vals[a].min(vals[b]) < 1e-12 {
                continue;
            }
            let r = vals[a] / vals[b];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi > 0.0 {
            report
                .ratios
                .insert(format!("{}/{}", flavors[a].0, flavors[b].0), Bracket { c1: lo, c2: hi });
        }
    }
    Ok(report)
}

/// `max ‖L^{sα} u‖_p / (‖u‖_p + N_H^{α,β}_{p,p}(u))` over the suite.
pub fn certify_besov_sobolev_embedding(
    op: &SpectralOperator,
    s: f64,
    alpha: f64,
    p: f64,
    beta: f64,
    suite: &[GridFunction],
) -> Result<f64> {
    let ok = if p > 1.0 { beta > 2.0 * s } else { beta >= 2.0 * s };
    if !ok {
        return Err(invalid(format!("embedding needs beta > 2s, got beta = {beta}, s = {s}")));
    }
    if !(s > 0.0 && s * alpha <= 1.0) {
        return Err(invalid("embedding needs s > 0 and s alpha <= 1"));
    }
    let params = BesovParams::heat(p, p, alpha, beta);
    let levels = default_levels(op.grid(), params.flavor);
    let mut best: f64 = 0.0;
    for u in suite {
        let den = u.lp_norm(p) + besov_seminorm(op, &params, u, &levels)?;
        if den == 0.0 {
            continue;
        }
        best = best.max(frac_power(op, s * alpha, u)?.lp_norm(p) / den);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityNorm {
    /// `‖L^s v‖_p`.
    Sobolev { s: f64, p: f64 },
    /// `‖v‖_p + N(v)` on the flavor's default ladder.
    Besov(BesovParams),
}

impl DensityNorm {
    pub fn eval(&self, op: &SpectralOperator, v: &GridFunction) -> Result<f64> {
        match self {
            DensityNorm::Sobolev { s, p } => Ok(sobolev_norm(op, *s, *p, v)?.homogeneous),
            DensityNorm::Besov(params) => Ok(v.lp_norm(params.p) + besov_seminorm_default(op, params, v)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub epsilon: f64,
    pub truncation: f64,
    pub gap: f64,
    pub nonnegative: bool,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStudy {
    pub rows: Vec<DensityRow>,
    /// Gap of the finest resolvable mollification without truncation.
    pub floor: f64,
    /// Gaps nonincreasing along the ladder up to the floor.
    pub monotone: bool,
    /// Final gap within ten times the floor.
    pub final_within_floor: bool,
}

/// Tabulates `‖η_N(τ_ε * u) - u‖` along paired ladders `(ε_i, N_i)`.
pub fn density_convergence_study(
    op: &SpectralOperator,
    norm: DensityNorm,
    u: &GridFunction,
    eps_ladder: &[f64],
    n_ladder: &[f64],
) -> Result<DensityStudy> {
    if eps_ladder.is_empty() || eps_ladder.len() != n_ladder.len() {
        return Err(invalid("ladders must be nonempty and of equal length"));
    }
    if eps_ladder.windows(2).any(|w| w[1] > w[0]) || n_ladder.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("epsilon ladder must decrease and N ladder increase"));
    }
    let u_nonneg = u.values().iter().all(|&v| v >= 0.0);
    let floor_eps = min_mollifier_radius(op.grid());
    let floor = norm.eval(op, &mollify(u, floor_eps)?.function.sub(u))?;
    let mut rows = Vec::with_capacity(eps_ladder.len());
    for (&eps, &big_n) in eps_ladder.iter().zip(n_ladder) {
        let m = mollify(u, eps)?;
        let w = truncate(&m.function, big_n)?;
        rows.push(DensityRow {
            epsilon: eps,
            truncation: big_n,
            gap: norm.eval(op, &w.sub(u))?,
            nonnegative: !u_nonneg || w.values().iter().all(|&v| v >= 0.0),
            warning: m.warning,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap + floor);
    let final_within_floor = rows.last().map_or(true, |r| r.gap <= 10.0 * floor.max(1e-14));
    Ok(DensityStudy {
        rows,
        floor,
        monotone,
        final_within_floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinMaxReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `‖max‖^p + ‖min‖^p <= ‖u₁‖^p + ‖u₂‖^p` with `‖v‖^p = ‖v‖_p^p + N(v)^p`.
pub fn minmax_check(op: &SpectralOperator, params: &BesovParams, u1: &GridFunction, u2: &GridFunction, levels: &[f64]) -> Result<MinMaxReport> {
    u1.check_same_grid(u2)?;
    if params.q != params.p {
        return Err(invalid("min-max check needs q = p"));
    }
    let p = params.p;
    let norm_p = |v: &GridFunction| -> Result<f64> { Ok(v.lp_norm(p).powf(p) + besov_seminorm(op, params, v, levels)?.powf(p)) };
    let hi = u1.zip_with(u2, f64::max);
    let lo = u1.zip_with(u2, f64::min);
    let lhs = norm_p(&hi)? + norm_p(&lo)?;
    let rhs = norm_p(u1)? + norm_p(u2)?;
    let slack = 1e-12 * rhs.max(f64::MIN_POSITIVE);
    Ok(MinMaxReport {
        lhs,
        rhs,
        slack,
        holds: lhs <= rhs + slack,
    })
}

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sets::DiscreteSet;
use super::solvers::{bound_qp, spg};
use crate::discretization::{GridFunction, SpectralOperator};
use crate::error::{invalid, Result};
use crate::fractional::maximal_function;
use crate::linalg::gemv;
use crate::spaces::{default_levels, BesovFlavor, BesovKernel, BesovParams, Bracket};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacityKind {
    /// `inf ‖f‖_p^p` over `f >= 0` with `𝓘_{2s} f >= 1` on the set.
    Riesz { s: f64, p: f64 },
    /// `inf ‖L^s u‖_p^p` over `u >= 1_E`.
    Sobolev { s: f64, p: f64 },
    /// `inf ‖u‖_p^p + N_H^{α,β}(u)^p` over `1_E <= u <= 1`.
    Besov { alpha: f64, beta: f64, p: f64 },
}

impl CapacityKind {
    pub fn p(&self) -> f64 {
        match *self {
            CapacityKind::Riesz { p, .. } | CapacityKind::Sobolev { p, .. } | CapacityKind::Besov { p, .. } => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Stopping tolerance on the projected-gradient residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Use projected gradient even where the exact QP applies (p = 2).
    pub iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200_000,
            iterative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    pub minimizer: GridFunction,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Capacity evaluator for one operator and one capacity kind; the dense
/// matrices it needs are built once.
pub struct Capacitor<'a> {
    op: &'a SpectralOperator,
    kind: CapacityKind,
    opts: SolverOptions,
    /// Riesz: `L^{-s}`; Sobolev: `L^s`.
    power: Vec<f64>,
    /// Riesz: `L^{-2s}`; Sobolev (p = 2): `L^{2s}`; Besov (p = 2): `N²` form.
    square: Vec<f64>,
    besov: Option<BesovKernel>,
}

impl<'a> Capacitor<'a> {
    pub fn new(op: &'a SpectralOperator, kind: CapacityKind, opts: SolverOptions) -> Result<Self> {
        let p = kind.p();
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("capacity exponent must be finite and > 1, got {p}")));
        }
        let (power, square, besov) = match kind {
            CapacityKind::Riesz { s, .. } | CapacityKind::Sobolev { s, .. } => {
                if !(s > 0.0 && s < 1.0) {
                    return Err(invalid(format!("capacity order must lie in (0, 1), got {s}")));
                }
                op.require_positive_spectrum()?;
                let sign = if matches!(kind, CapacityKind::Riesz { .. }) { -1.0 } else { 1.0 };
                let power = op.multiplier_matrix(&op.multiplier(|l| l.powf(sign * s))?);
                let square = op.multiplier_matrix(&op.multiplier(|l| l.powf(2.0 * sign * s))?);
                (power, square, None)
            }
            CapacityKind::Besov { alpha, beta, p } => {
                let params = BesovParams::heat(p, p, alpha, beta);
                let kernel = BesovKernel::new(op, &params, &default_levels(op.grid(), BesovFlavor::Heat { alpha }))?;
                let square = if p == 2.0 { kernel.quadratic_form()? } else { Vec::new() };
                (Vec::new(), square, Some(kernel))
            }
        };
        Ok(Self {
            op,
            kind,
            opts,
            power,
            square,
            besov,
        })
    }

    pub fn kind(&self) -> CapacityKind {
        self.kind
    }

    pub fn op(&self) -> &SpectralOperator {
        self.op
    }

    /// The matching function-space norm to the power `p`: `‖L^s u‖_p^p` for
    /// Riesz and Sobolev, `‖u‖_p^p + N(u)^p` for Besov.
    pub fn norm_pow(&self, u: &GridFunction) -> f64 {
        let p = self.kind.p();
        let vol = self.op.grid().cell_volume();
        match &self.besov {
            Some(k) => u.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol + k.seminorm_pow(u.values()),
            None => {
                let n = self.op.node_count();
                let m = match self.kind {
                    CapacityKind::Riesz { s, .. } => self.op.multiplier_matrix(&self.op.multiplier(|l| l.powf(s)).expect("finite")),
                    _ => self.power.clone(),
                };
                gemv(false, n, n, &m, u.values()).iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol
            }
        }
    }

    pub fn capacity(&self, set: &DiscreteSet) -> Result<CapacityResult> {
        if set.membership().len() != self.op.node_count() {
            return Err(invalid("set lives on a different grid"));
        }
        if set.is_empty() {
            return Ok(CapacityResult {
                value: 0.0,
                minimizer: GridFunction::zeros(self.op.grid()),
                iterations: 0,
                kkt_residual: 0.0,
                converged: true,
            });
        }
        match self.kind {
            CapacityKind::Riesz { p, .. } => self.riesz(set, p),
            CapacityKind::Sobolev { p, .. } => self.sobolev(set, p),
            CapacityKind::Besov { p, .. } => self.besov(set, p),
        }
    }

    fn riesz(&self, set: &DiscreteSet, p: f64) -> Result<CapacityResult> {
        let n = self.op.node_count();
        let vol = self.op.grid().cell_volume();
        let idx = set.nodes();
        let m = idx.len();
        let r = &self.power;
        let row = |e: usize, x: usize| r[e + x * n];
        let nonneg = idx.iter().all(|&e| (0..n).all(|x| row(e, x) >= 0.0));
        let (mut f, iterations, kkt, converged) = if p == 2.0 && nonneg && !self.opts.iterative {
            // Dual in the multipliers: min ½λᵀ(G/2vol)λ - 1ᵀλ, λ >= 0.
            let mut h = vec![0.0; m * m];
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    h[a + b * m] = self.square[i + j * n] / (2.0 * vol);
                }
            }
            let qp = bound_qp(&h, &vec![1.0; m], &vec![0.0; m], &vec![f64::INFINITY; m], &vec![true; m], 10 * m + 100)?;
            let mut f = vec![0.0; n];
            for (a, &e) in idx.iter().enumerate() {
                if qp.x[a] != 0.0 {
                    for (x, fx) in f.iter_mut().enumerate() {
                        *fx += row(e, x) * qp.x[a] / (2.0 * vol);
                    }
                }
            }
            (f, qp.iterations, qp.kkt_residual, qp.converged)
        } else {
            let q = 1.0 / (p - 1.0);
            let primal = |lam: &[f64]| -> Vec<f64> {
                let mut z = vec![0.0; n];
                for (a, &e) in idx.iter().enumerate() {
                    if lam[a] != 0.0 {
                        for (x, zx) in z.iter_mut().enumerate() {
                            *zx += row(e, x) * lam[a];
                        }
                    }
                }
                z.iter().map(|&v| (v.max(0.0) / (p * vol)).powf(q)).collect()
            };
            let objective = |lam: &[f64]| {
                let f = primal(lam);
                let val = -lam.iter().sum::<f64>() + (p - 1.0) * vol * f.iter().map(|v| v.powf(p)).sum::<f64>();
                let grad = idx.iter().map(|&e| (0..n).map(|x| row(e, x) * f[x]).sum::<f64>() - 1.0).collect();
                (val, grad)
            };
            let res = spg(
                objective,
                |l: &mut [f64]| l.iter_mut().for_each(|v| *v = v.max(0.0)),
                &vec![1.0; m],
                self.opts.tolerance,
                self.opts.max_iterations,
            );
            (primal(&res.x), res.iterations, res.residual, res.converged)
        };
        // Homogeneity: rescale so the tightest constraint holds with equality.
        let lo = idx
            .iter()
            .map(|&e| (0..n).map(|x| row(e, x) * f[x]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if lo > 0.0 {
            f.iter_mut().for_each(|v| *v /= lo);
        }
        let value = vol * f.iter().map(|v| v.abs().powf(p)).sum::<f64>();
        Ok(CapacityResult {
            value,
            minimizer: GridFunction::new(std::sync::Arc::clone(self.op.grid()), f)?,
            iterations,
            kkt_residual: kkt,
            converged,
        })
    }

    fn lower_bounds(&self, set: &DiscreteSet) -> Vec<f64> {
        set.membership().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
    }

    fn sobolev(&self, set: &DiscreteSet, p: f64) -> Result<CapacityResult> {
        let n = self.op.node_count();
        let vol = self.op.grid().cell_volume();
        let lb = self.lower_bounds(set);
        let (u, iterations, kkt, converged) = if p == 2.0 && !self.opts.iterative {
            let h: Vec<f64> = self.square.iter().map(|v| 2.0 * vol * v).collect();
            let free: Vec<bool> = set.membership().iter().map(|&m| !m).collect();
            let qp = bound_qp(&h, &vec![0.0; n], &lb, &vec![f64::INFINITY; n], &free, 10 * n + 100)?;
            (qp.x, qp.iterations, qp.kkt_residual, qp.converged)
        } else {
            let m = &self.power;
            let objective = |u: &[f64]| {
                let w = gemv(false, n, n, m, u);
                let val = vol * w.iter().map(|v| v.abs().powf(p)).sum::<f64>();
                let dw: Vec<f64> = w.iter().map(|v| p * vol * v.abs().powf(p - 1.0) * v.signum()).collect();
                (val, gemv(true, n, n, m, &dw))
            };
            let lbc = lb.clone();
            let res = spg(
                objective,
                move |u: &mut [f64]| u.iter_mut().zip(&lbc).for_each(|(v, l)| *v = v.max(*l)),
                &lb,
                self.opts.tolerance,
                self.opts.max_iterations,
            );
            (res.x, res.iterations, res.residual, res.converged)
        };
        let value = self.norm_pow(&GridFunction::new(std::sync::Arc::clone(self.op.grid()), u.clone())?);
        Ok(CapacityResult {
            value,
            minimizer: GridFunction::new(std::sync::Arc::clone(self.op.grid()), u)?,
            iterations,
            kkt_residual: kkt,
            converged,
        })
    }

    fn besov(&self, set: &DiscreteSet, p: f64) -> Result<CapacityResult> {
        let n = self.op.node_count();
        let vol = self.op.grid().cell_volume();
        let lb = self.lower_bounds(set);
        let kernel = self.besov.as_ref().expect("Besov kernel");
        let (u, iterations, kkt, converged) = if p == 2.0 && !self.opts.iterative {
            let mut h: Vec<f64> = self.square.iter().map(|v| 2.0 * v).collect();
            for i in 0..n {
                h[i + i * n] += 2.0 * vol;
            }
            let free: Vec<bool> = set.membership().iter().map(|&m| !m).collect();
            let qp = bound_qp(&h, &vec![0.0; n], &lb, &vec![1.0; n], &free, 10 * n + 100)?;
            (qp.x, qp.iterations, qp.kkt_residual, qp.converged)
        } else {
            let objective = |u: &[f64]| {
                let val = vol * u.iter().map(|v| v.abs().powf(p)).sum::<f64>() + kernel.seminorm_pow(u);
                let mut g = kernel.gradient(u);
                for (gi, v) in g.iter_mut().zip(u) {
                    *gi += p * vol * v.abs().powf(p - 1.0) * v.signum();
                }
                (val, g)
            };
            let lbc = lb.clone();
            let res = spg(
                objective,
                move |u: &mut [f64]| u.iter_mut().zip(&lbc).for_each(|(v, l)| *v = v.clamp(*l, 1.0)),
                &lb,
                self.opts.tolerance,
                self.opts.max_iterations,
            );
            (res.x, res.iterations, res.residual, res.converged)
        };
        let value = self.norm_pow(&GridFunction::new(std::sync::Arc::clone(self.op.grid()), u.clone())?);
        Ok(CapacityResult {
            value,
            minimizer: GridFunction::new(std::sync::Arc::clone(self.op.grid()), u)?,
            iterations,
            kkt_residual: kkt,
            converged,
        })
    }

    /// Capacity of the set and of its one-cell dilation, the grid model of
    /// the strict-interior admissibility condition.
    pub fn relaxation_report(&self, set: &DiscreteSet) -> Result<RelaxationReport> {
        let value = self.capacity(set)?.value;
        let dilated_value = self.capacity(&set.dilate())?.value;
        Ok(RelaxationReport {
            value,
            dilated_value,
            relative_gap: if value > 0.0 { (dilated_value - value) / value } else { 0.0 },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub value: f64,
    pub dilated_value: f64,
    pub relative_gap: f64,
}

pub fn riesz_capacity(op: &SpectralOperator, s: f64, p: f64, set: &DiscreteSet, opts: SolverOptions) -> Result<CapacityResult> {
    Capacitor::new(op, CapacityKind::Riesz { s, p }, opts)?.capacity(set)
}

pub fn sobolev_capacity(op: &SpectralOperator, s: f64, p: f64, set: &DiscreteSet, opts: SolverOptions) -> Result<CapacityResult> {
    Capacitor::new(op, CapacityKind::Sobolev { s, p }, opts)?.capacity(set)
}

pub fn besov_capacity(op: &SpectralOperator, alpha: f64, beta: f64, p: f64, set: &DiscreteSet, opts: SolverOptions) -> Result<CapacityResult> {
    Capacitor::new(op, CapacityKind::Besov { alpha, beta, p }, opts)?.capacity(set)
}

/// Bracket of `Cap_a(E) / Cap_b(E)` over the sets with both values positive.
pub fn comparability(a: &Capacitor, b: &Capacitor, sets: &[DiscreteSet]) -> Result<Bracket> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in sets {
        let (x, y) = (a.capacity(s)?.value, b.capacity(s)?.value);
        if x > 0.0 && y > 0.0 {
            lo = lo.min(x / y);
            hi = hi.max(x / y);
        }
    }
    if hi == 0.0 {
        return Err(invalid("no set with positive capacities"));
    }
    Ok(Bracket { c1: lo, c2: hi })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub property: String,
    pub trials: usize,
    pub failures: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub tolerance: f64,
    pub outcomes: Vec<PropertyOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failures == 0)
    }

    pub fn outcome(&self, property: &str) -> Option<&PropertyOutcome> {
        self.outcomes.iter().find(|o| o.property == property)
    }
}

fn random_set(grid: &std::sync::Arc<crate::discretization::Grid>, rng: &mut ChaCha8Rng) -> DiscreteSet {
    let n = grid.node_count();
    let k = rng.gen_range(1..=(n / 6).max(1));
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    DiscreteSet::from_nodes(grid, &nodes[..k]).expect("valid nodes")
}

fn grow(set: &DiscreteSet, rng: &mut ChaCha8Rng) -> DiscreteSet {
    let extra = random_set(set.grid(), rng);
    let out = set.union(&extra);
    if out == *set {
        let missing: Vec<usize> = (0..set.membership().len()).filter(|&k| !set.contains(k)).collect();
        if let Some(&k) = missing.choose(rng) {
            let mut o = out;
            o.insert(k);
            return o;
        }
    }
    out
}

/// Empty set, repeatability, monotonicity, finite subadditivity and
/// monotone chains on random node sets. A violation larger than
/// `tolerance` counts as a failure.
pub fn capacity_property_suite(cap: &Capacitor, trials: usize, seed: u64, tolerance: f64) -> Result<PropertyReport> {
    if trials < 20 {
        return Err(invalid("property suite needs at least 20 trials"));
    }
    let grid = cap.op().grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut value = |s: &DiscreteSet| -> Result<f64> {
        if let Some(&v) = cache.get(s.membership()) {
            return Ok(v);
        }
        let v = cap.capacity(s)?.value;
        cache.insert(s.membership().to_vec(), v);
        Ok(v)
    };
    let mut outcomes = Vec::new();
    let mut record = |name: &str, viols: Vec<f64>| {
        outcomes.push(PropertyOutcome {
            property: name.to_string(),
            trials: viols.len(),
            failures: viols.iter().filter(|&&v| v > tolerance).count(),
            max_violation: viols.iter().copied().fold(0.0, f64::max),
        });
    };
    record("empty", vec![value(&DiscreteSet::empty(grid))?.abs()]);
    let mut v = Vec::new();
    for _ in 0..trials {
        let e = random_set(grid, &mut rng);
        let a = cap.capacity(&e)?.value;
        let b = cap.capacity(&e)?.value;
        v.push((a - b).abs());
    }
    record("repeatable", v);
    let mut v = Vec::new();
    for _ in 0..trials {
        let e1 = random_set(grid, &mut rng);
        let e2 = grow(&e1, &mut rng);
        v.push(value(&e1)? - value(&e2)?);
    }
    record("monotone", v);
    let mut v = Vec::new();
    for _ in 0..trials {
        let e1 = random_set(grid, &mut rng);
        let e2 = random_set(grid, &mut rng);
        v.push(value(&e1.union(&e2))? - value(&e1)? - value(&e2)?);
    }
    record("subadditive", v);
    let mut v = Vec::new();
    for _ in 0..trials {
        let e3 = random_set(grid, &mut rng);
        let e2 = grow(&e3, &mut rng);
        let e1 = grow(&e2, &mut rng);
        let (c1, c2, c3) = (value(&e1)?, value(&e2)?, value(&e3)?);
        v.push((c2 - c1).max(c3 - c2));
    }
    record("decreasing-chain", v);
    let mut v = Vec::new();
    for _ in 0..trials {
        let e1 = random_set(grid, &mut rng);
        let e2 = grow(&e1, &mut rng);
        let e3 = grow(&e2, &mut rng);
        let union = e1.union(&e2).union(&e3);
        let (c1, c2, c3, cu) = (value(&e1)?, value(&e2)?, value(&e3)?, value(&union)?);
        v.push((c1 - c2).max(c2 - c3).max((c3 - cu).abs()));
    }
    record("increasing-chain", v);
    Ok(PropertyReport { tolerance, outcomes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongReport {
    /// Max over the suite of the capacitary integral over `‖u‖^p`.
    pub ratio: f64,
    pub integrals: Vec<f64>,
    /// Relative change of `ratio` when the ladder is doubled.
    pub refinement_change: f64,
    /// Largest relative change of a single integral under the same doubling.
    pub worst_integral_change: f64,
    pub levels: usize,
}

/// `∫_0^{λ_min} + Σ trapezoid` of `Cap({v >= λ})` in `λ^p` on a ladder
/// uniform in `λ^p` over `[2^{-20} max v, max v]`. The head piece is
/// bounded above by `Cap({v > 0}) λ_min^p`.
fn capacitary_integral(cap: &Capacitor, v: &GridFunction, levels: usize, cache: &mut HashMap<Vec<bool>, f64>) -> Result<f64> {
    let p = cap.kind().p();
    let grid = cap.op().grid();
    let top = v.values().iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut value = |lambda: f64, strict: bool| -> Result<f64> {
        let set = DiscreteSet::from_membership(
            grid,
            v.values().iter().map(|&x| if strict { x > lambda } else { x >= lambda }).collect(),
        )?;
        if let Some(&c) = cache.get(set.membership()) {
            return Ok(c);
        }
        let c = cap.capacity(&set)?.value;
        cache.insert(set.membership().to_vec(), c);
        Ok(c)
    };
    let lo = top * 2f64.powi(-20);
    let (a, b) = (lo.powf(p), top.powf(p));
    let mut total = value(0.0, true)? * a;
    let mut prev = value(lo, false)?;
    for i in 1..levels {
        let y = a + (b - a) * i as f64 / (levels - 1) as f64;
        let lambda = if i == levels - 1 { top } else { y.powf(1.0 / p) };
        let c = value(lambda, false)?;
        total += 0.5 * (prev + c) * (b - a) / (levels - 1) as f64;
        prev = c;
    }
    Ok(total)
}

/// Capacitary strong-type ratio `∫ Cap({|u| >= λ}) dλ^p / ‖u‖^p` over the
/// suite (`𝓜u` in place of `|u|` when `with_maximal`).
pub fn strong_capacitary_check(cap: &Capacitor, suite: &[GridFunction], with_maximal: bool, levels: usize) -> Result<StrongReport> {
    if levels < 2 {
        return Err(invalid("λ ladder needs at least two levels"));
    }
    if let CapacityKind::Sobolev { s, p } | CapacityKind::Riesz { s, p } = cap.kind() {
        let q = cap.op().grid().descriptor().q();
        if !(p < q / (2.0 * s)) {
            return Err(invalid(format!("strong-type check needs p < Q/(2s) = {}", q / (2.0 * s))));
        }
    }
    let mut cache = HashMap::new();
    let mut ratio: f64 = 0.0;
    let mut fine_ratio: f64 = 0.0;
    let mut change: f64 = 0.0;
    let mut integrals = Vec::new();
    for u in suite {
        let norm = cap.norm_pow(u);
        let v = if with_maximal { maximal_function(u)? } else { u.abs() };
        let coarse = capacitary_integral(cap, &v, levels, &mut cache)?;
        let fine = capacitary_integral(cap, &v, 2 * levels, &mut cache)?;
        if fine > 0.0 {
            change = change.max((fine - coarse).abs() / fine);
        }
        if norm > 0.0 {
            ratio = ratio.max(coarse / norm);
            fine_ratio = fine_ratio.max(fine / norm);
        }
        integrals.push(coarse);
    }
    Ok(StrongReport {
        ratio,
        integrals,
        refinement_change: if fine_ratio > 0.0 { (fine_ratio - ratio).abs() / fine_ratio } else { 0.0 },
        worst_integral_change: change,
        levels,
    })
}

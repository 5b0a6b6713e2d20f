use carnot_core::discretization::min_mollifier_radius;
use carnot_core::spaces::{
    besov_seminorm, certify_besov_equivalence, certify_besov_sobolev_embedding, default_levels, density_convergence_study,
    minmax_check, BesovFlavor, BesovParams, DensityNorm, EquivalenceLevels, NormReport,
};
use carnot_core::suite::standard_suite;
use carnot_core::{Boundary, Grid, GridFunction, Result};

use super::{refined, grid_spec, Check, Ctx};
use crate::report::{cell, to_value, CheckClass, Outcome};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "besov-difference-oracle",
            statement: "difference seminorm (int_0^R (r^{-2 beta p - Q} int int_{d < r} |u(g') - u(g)|^p)^{q/p} dr/r)^{1/q} equals a direct double sum",
            class: CheckClass::Assertion,
            run: oracle,
        },
        Check {
            id: "besov-constants-minmax",
            statement: "every seminorm vanishes on constants and ||max(u,v)||^p + ||min(u,v)||^p <= ||u||^p + ||v||^p",
            class: CheckClass::Assertion,
            run: constants_minmax,
        },
        Check {
            id: "com2-besov-equivalence",
            statement: "B^{alpha,2 beta}_{H} = B^{sigma,2 alpha beta/sigma}_{P} = B^{alpha beta} with two-sided constants",
            class: CheckClass::Assertion,
            run: equivalence,
        },
        Check {
            id: "besov-sobolev-embedding",
            statement: "||L^{s alpha} u||_p <= C ||u||_{B^{alpha,beta}_{p,p,H}} for beta > 2s",
            class: CheckClass::Assertion,
            run: embedding,
        },
        Check {
            id: "density-mollifier",
            statement: "eta_N (tau_eps * u) -> u in norm as eps -> 0 and N -> inf",
            class: CheckClass::Assertion,
            run: density,
        },
    ]
}

/// Direct `O(n²)` evaluation over all node pairs, trapezoid in `ln r`.
fn brute_difference(g: &Grid, u: &[f64], p: f64, beta: f64, q: f64, levels: &[f64]) -> f64 {
    let n = u.len();
    let vol = g.cell_volume();
    let desc = g.descriptor();
    let q_dim = desc.q();
    let inner: Vec<f64> = levels
        .iter()
        .map(|&r| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if desc.distance_coords(g.node(j), g.node(i)) < r {
                        s += (u[i] - u[j]).abs().powf(p);
                    }
                }
            }
            s * vol * vol / r.powf(2.0 * beta * p + q_dim)
        })
        .collect();
    let mut total = 0.0;
    for i in 0..levels.len() - 1 {
        let f = |k: usize| inner[k].powf(q / p);
        total += 0.5 * (f(i) + f(i + 1)) * (levels[i + 1] / levels[i]).ln();
    }
    total.powf(1.0 / q)
}

fn oracle(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 64, 1.0, Boundary::Dirichlet))?;
    let levels = default_levels(op.grid(), BesovFlavor::Difference);
    let mut worst: f64 = 0.0;
    for u in ctx.suite_functions(op.grid())?.iter().take(5) {
        for (p, q, beta) in [(2.0, 2.0, 0.3), (1.5, 3.0, 0.2)] {
            let got = besov_seminorm(&op, &BesovParams::difference(p, q, beta), u, &levels)?;
            let want = brute_difference(op.grid(), u.values(), p, beta, q, &levels);
            worst = worst.max((got - want).abs() / want);
        }
    }
    o.at_most("max_rel_error", worst, 1e-10);
    Ok(o)
}

fn flavors(alpha: f64, sigma: f64, beta: f64, p: f64, q: f64) -> [BesovParams; 3] {
    [
        BesovParams::heat(p, q, alpha, 2.0 * beta),
        BesovParams::poisson(p, q, sigma, 2.0 * alpha * beta / sigma),
        BesovParams::difference(p, q, alpha * beta),
    ]
}

fn constants_minmax(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 64, 1.0, Boundary::Dirichlet))?;
    let grid = op.grid();
    let c = GridFunction::constant(grid, 3.0);
    let mut on_constants: f64 = 0.0;
    let params = flavors(0.5, 0.5, 0.3, 2.0, 2.0);
    for par in &params {
        on_constants = on_constants.max(besov_seminorm(&op, par, &c, &default_levels(grid, par.flavor))?);
    }
    o.at_most("seminorm_on_constants", on_constants, 0.0);
    let pairs = standard_suite(grid, 200, ctx.seed().wrapping_add(1))?;
    let mut violations = 0usize;
    let mut worst: f64 = f64::NEG_INFINITY;
    for (i, pair) in pairs.chunks(2).enumerate() {
        let par = &params[i % 3];
        let rep = minmax_check(&op, par, &pair[0].1, &pair[1].1, &default_levels(grid, par.flavor))?;
        if !rep.holds {
            violations += 1;
        }
        worst = worst.max((rep.lhs - rep.rhs) / rep.rhs);
    }
    o.put("pairs", pairs.len() / 2);
    o.num("max_relative_excess", worst);
    o.expect(violations == 0, format!("{violations} pairs violate the min-max inequality beyond 1e-12 slack"));
    Ok(o)
}

fn equivalence_report(ctx: &Ctx, n_scale: usize, beta: f64) -> Result<NormReport> {
    let base = ctx.primary(grid_spec("r1", 128, 2.0, Boundary::Dirichlet));
    let s = if n_scale == 1 { base } else { refined(&base) };
    let op = ctx.op_for(&s)?;
    let suite: Vec<_> = ctx.suite(op.grid())?.into_iter().take(10).collect();
    let alpha = ctx.list(&ctx.params().alpha, &[0.5])[0];
    let sigma = ctx.list(&ctx.params().sigma, &[0.5])[0];
    let levels = EquivalenceLevels::defaults(op.grid(), alpha, sigma);
    certify_besov_equivalence(&op, 2.0, 2.0, beta, alpha, sigma, &suite, &levels)
}

fn equivalence(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let beta = ctx.list(&ctx.params().beta, &[0.3])[0];
    let coarse = equivalence_report(ctx, 1, beta)?;
    let fine = equivalence_report(ctx, 2, beta)?;
    for (key, b) in &coarse.ratios {
        o.at_most(&format!("{key}_width"), b.width(), 100.0);
        if let Some(f) = fine.ratios.get(key) {
            let drift = (f.c1 / b.c1).max(b.c1 / f.c1).max(f.c2 / b.c2).max(b.c2 / f.c2);
            o.at_most(&format!("{key}_refinement_drift"), drift, 2.0);
        }
    }
    o.put("coarse", to_value(&coarse));
    o.put("fine", to_value(&fine));
    let rows: Vec<Vec<String>> = coarse.values.iter().map(|(k, v)| vec![k.clone(), cell(*v)]).collect();
    o.csv("values.csv", &["flavor:function", "seminorm"], &rows);
    Ok(o)
}

fn embedding(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let base = ctx.primary(grid_spec("r1", 128, 2.0, Boundary::Dirichlet));
    let mut ratios = Vec::new();
    for s in [base.clone(), refined(&base)] {
        let op = ctx.op_for(&s)?;
        let suite = ctx.suite_functions(op.grid())?;
        ratios.push(certify_besov_sobolev_embedding(&op, 0.1, 0.5, 2.0, 0.3, &suite)?);
    }
    o.finite_positive("ratio", ratios[0]);
    o.finite_positive("ratio_refined", ratios[1]);
    o.at_most("refinement_drift", (ratios[0] / ratios[1]).max(ratios[1] / ratios[0]), 2.0);
    Ok(o)
}

fn density(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let g = op.grid();
    let u = GridFunction::from_fn(g, |c| if c[0].abs() < 0.6 { 1.0 } else { 0.0 });
    let e0 = min_mollifier_radius(g);
    let eps = [8.0 * e0, 4.0 * e0, 2.0 * e0, e0];
    let ns = [10.0; 4];
    for (name, norm) in [
        ("sobolev", DensityNorm::Sobolev { s: 0.3, p: 2.0 }),
        ("besov", DensityNorm::Besov(BesovParams::heat(2.0, 2.0, 0.5, 0.3))),
    ] {
        let st = density_convergence_study(&op, norm, &u, &eps, &ns)?;
        o.expect(st.monotone, format!("{name}: gaps not monotone along the ladder"));
        o.expect(st.final_within_floor, format!("{name}: final gap not within ten times the floor"));
        o.expect(st.rows.iter().all(|r| r.nonnegative), format!("{name}: mollified indicator went negative"));
        o.put(name, to_value(&st));
    }
    Ok(o)
}

use carnot_core::fractional::{
    cone_maximal_domination, frac_divergence, frac_gradient, frac_power, frac_power_integral, hls_ratio, maximal_function,
    riesz_potential, HorizontalGridField,
};
use carnot_core::{Boundary, Result};

use super::{rel, grid_spec, Check, Ctx};
use crate::report::{CheckClass, Outcome};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "riesz-inversion",
            statement: "I_{2s} L^s u = u and int f I_{2s} u = int u I_{2s} f on Dirichlet grids",
            class: CheckClass::Assertion,
            run: inversion,
        },
        Check {
            id: "frac-power-routes",
            statement: "L^s u = c_s int_0^inf (1 - e^{-tL}) u t^{-1-s} dt agrees with the spectral multiplier lambda^s",
            class: CheckClass::Assertion,
            run: routes,
        },
        Check {
            id: "hls-ratio",
            statement: "||I_theta u||_q <= C ||u||_p with 1/p - 1/q = theta/Q",
            class: CheckClass::Report,
            run: hls,
        },
        Check {
            id: "frac-duality",
            statement: "<nabla^s u, phi> = -<u, div^s phi> for the fractional gradient and divergence",
            class: CheckClass::Assertion,
            run: duality,
        },
        Check {
            id: "maximal-cone",
            statement: "sup_{d(g,g') < t} |P_{sigma,t} f(g')| <= C M f(g), and M is sublinear",
            class: CheckClass::Assertion,
            run: cone,
        },
    ]
}

fn inversion(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let s_list = ctx.list(&ctx.params().s, &[0.2, 0.4]);
    let (mut inv, mut dual) = (0.0f64, 0.0f64);
    for sp in [grid_spec("r1", 128, 1.0, Boundary::Dirichlet), grid_spec("h1", 8, 2.0, Boundary::Dirichlet)] {
        let op = ctx.op_for(&ctx.primary(sp))?;
        let suite = ctx.suite_functions(op.grid())?;
        for &s in &s_list {
            for (i, u) in suite.iter().take(6).enumerate() {
                let back = riesz_potential(&op, 2.0 * s, &frac_power(&op, s, u)?)?;
                inv = inv.max(rel(&back, u));
                let f = &suite[(i + 1) % suite.len()];
                let a = f.inner(&riesz_potential(&op, 2.0 * s, u)?);
                let b = u.inner(&riesz_potential(&op, 2.0 * s, f)?);
                dual = dual.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    o.at_most("inversion_max_rel_error", inv, 1e-8);
    o.at_most("duality_max_rel_error", dual, 1e-8);
    Ok(o)
}

fn routes(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 1.0, Boundary::Dirichlet))?;
    let suite = ctx.suite_functions(op.grid())?;
    for s in ctx.list(&ctx.params().s, &[0.25, 0.5, 0.75]) {
        let mut worst: f64 = 0.0;
        for u in &suite {
            worst = worst.max(rel(&frac_power_integral(&op, s, u)?, &frac_power(&op, s, u)?));
        }
        o.at_most(&format!("s_{s}_max_rel_error"), worst, 1e-4);
    }
    o.put("suite_size", suite.len());
    Ok(o)
}

fn hls(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 1.0, Boundary::Dirichlet))?;
    let suite = ctx.suite_functions(op.grid())?;
    for p in ctx.list(&ctx.params().p, &[1.5]) {
        let ratio = hls_ratio(&op, 0.5, p, &suite)?;
        o.finite_positive(&format!("ratio_theta_0.5_p_{p}"), ratio);
    }
    Ok(o)
}

fn duality(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut worst: f64 = 0.0;
    for sp in [grid_spec("r1", 128, 1.0, Boundary::Dirichlet), grid_spec("h1", 8, 2.0, Boundary::Dirichlet)] {
        let op = ctx.op_for(&ctx.primary(sp))?;
        let suite = ctx.suite_functions(op.grid())?;
        for s in ctx.list(&ctx.params().s, &[0.25, 0.5, 0.75]) {
            for i in 0..4 {
                let u = &suite[i];
                let phi = HorizontalGridField::gradient(&op, &suite[(i + 1) % suite.len()]);
                let a = frac_gradient(&op, s, u)?.inner(&phi);
                let b = u.inner(&frac_divergence(&op, s, &phi)?);
                worst = worst.max((a + b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    o.at_most("adjoint_max_rel_error", worst, 1e-10);
    Ok(o)
}

fn cone(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let suite = ctx.suite_functions(op.grid())?;
    let mut worst: f64 = 0.0;
    for sigma in ctx.list(&ctx.params().sigma, &[0.5]) {
        for u in &suite {
            let rep = cone_maximal_domination(&op, sigma, u, &[0.1, 0.3, 1.0])?;
            worst = worst.max(rep.constant);
        }
    }
    o.finite_positive("cone_constant", worst);
    o.at_most("cone_constant_bound", worst, 10.0);
    let mut sub: f64 = 0.0;
    for w in suite.windows(2) {
        let lhs = maximal_function(&w[0].add(&w[1]))?;
        let rhs = maximal_function(&w[0])?.add(&maximal_function(&w[1])?);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            sub = sub.max(a - b);
        }
    }
    o.at_most("sublinearity_max_excess", sub, 1e-12);
    Ok(o)
}

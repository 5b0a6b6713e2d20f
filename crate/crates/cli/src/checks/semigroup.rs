use std::f64::consts::PI;

use carnot_core::group::estimate_triangle_constant;
use carnot_core::semigroups::{
    certify_frac_heat_bounds, certify_frac_heat_holder, certify_poisson_bounds, certify_poisson_holder, extract_kernel,
    frac_heat_via_subordination, poisson_multiplier, BoundReport, Semigroup, SubordinatorDensity,
};
use carnot_core::{Boundary, GridFunction, GroupDescriptor, Result, SpectralOperator};

use super::{rel, grid_spec, Check, Ctx};
use crate::report::{cell, to_value, CheckClass, Outcome};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "grp-triangle",
            statement: "d(g,h) <= gamma (d(g,k) + d(k,h)); gamma = 1 on R^n and finite on H1 for the Koranyi norm",
            class: CheckClass::Assertion,
            run: triangle,
        },
        Check {
            id: "op-spectrum",
            statement: "Dirichlet R^1 spectrum is (4/h^2) sin^2(k pi / (2(N+1))); the assembled operator is symmetric and its eigenbasis reconstructs it",
            class: CheckClass::Assertion,
            run: spectrum,
        },
        Check {
            id: "subordination-check",
            statement: "int_0^inf eta_t(s) e^{-s lambda} ds = e^{-t sqrt(lambda)} and the subordinated heat flow equals e^{-t L^{1/2}}",
            class: CheckClass::Assertion,
            run: subordination,
        },
        Check {
            id: "subordinator-moments",
            statement: "int eta_t(s) s^delta ds = Gamma(1 - delta/alpha) / Gamma(1 - delta) t^{delta/alpha} for delta < alpha",
            class: CheckClass::Assertion,
            run: moments,
        },
        Check {
            id: "poisson-multiplier",
            statement: "psi_{1/2}(x) = e^{-sqrt(x)} and psi_sigma(0) = 1",
            class: CheckClass::Assertion,
            run: poisson_mult,
        },
        Check {
            id: "heat-kernel-gaussian",
            statement: "periodic R^1 heat kernel equals the Gaussian image sum (4 pi t)^{-1/2} sum_m e^{-(x + mP)^2 / 4t}",
            class: CheckClass::Assertion,
            run: gaussian,
        },
        Check {
            id: "semigroup-laws",
            statement: "T_s T_t = T_{s+t}, <T u, v> = <u, T v>, ||T u||_p <= ||u||_p, u >= 0 => T u >= 0, T 1 = 1",
            class: CheckClass::Assertion,
            run: laws,
        },
        Check {
            id: "pro-frac-bounds",
            statement: "K_{alpha,t}(g) is comparable to t / (t^{1/(2 alpha)} + |g|)^{Q + 2 alpha}",
            class: CheckClass::Assertion,
            run: frac_bounds,
        },
        Check {
            id: "pro-poisson-bounds",
            statement: "P_{sigma,t}(g) is comparable to t^{2 sigma} / (t^2 + |g|^2)^{Q/2 + sigma}",
            class: CheckClass::Assertion,
            run: poisson_bounds,
        },
        Check {
            id: "holder-continuity",
            statement: "|K_t(g h) - K_t(g)| <= C (|h| / t-scale) profile(g) for |h| below the time scale",
            class: CheckClass::Assertion,
            run: holder,
        },
    ]
}

fn triangle(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    for (id, desc) in [
        ("r1", GroupDescriptor::euclidean(1)?),
        ("r2", GroupDescriptor::euclidean(2)?),
        ("h1", GroupDescriptor::heisenberg()),
    ] {
        let gamma = estimate_triangle_constant(&desc, 4000, ctx.seed())?;
        if desc.is_abelian() {
            o.at_most(&format!("gamma_{id}"), gamma, 1.0 + 1e-12);
        } else {
            o.finite_positive(&format!("gamma_{id}"), gamma);
        }
    }
    Ok(o)
}

fn spectrum(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (n, a) = (64usize, 1.0);
    let op = ctx.op_for(&grid_spec("r1", n, a, Boundary::Dirichlet))?;
    let h = 2.0 * a / (n + 1) as f64;
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let want = 4.0 / (h * h) * (k as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2);
        worst = worst.max((op.lambda(k - 1) - want).abs());
    }
    o.at_most("r1_spectrum_error_over_lambda_max", worst / op.lambda_max(), 1e-12);
    let h1 = ctx.op_for(&grid_spec("h1", 8, 2.0, Boundary::Dirichlet))?;
    o.at_most("h1_symmetry_residual", h1.symmetry_residual(), 1e-12);
    o.at_most("h1_reconstruction_residual", h1.reconstruction_residual(), 1e-10);
    o.expect(h1.lambda(0) > 0.0, "Dirichlet H1 operator has a nonpositive eigenvalue");
    Ok(o)
}

fn subordination(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let d = SubordinatorDensity::new(0.5, 1.0)?;
    let mut worst: f64 = 0.0;
    for lambda in [0.1f64, 1.0, 10.0] {
        let want = (-lambda.sqrt()).exp();
        worst = worst.max((d.laplace(lambda)? - want).abs() / want);
    }
    o.at_most("laplace_max_rel_error", worst, 1e-8);
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let suite = ctx.suite_functions(op.grid())?;
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0] {
        let d = SubordinatorDensity::new(0.5, t)?;
        for u in suite.iter().take(5) {
            let a = frac_heat_via_subordination(&op, &d, u)?;
            let b = Semigroup::FracHeat { alpha: 0.5, t }.apply(&op, u)?;
            worst = worst.max(rel(&a, &b));
        }
    }
    o.at_most("grid_route_max_rel_error", worst, 1e-6);
    Ok(o)
}

fn moments(_: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let d = SubordinatorDensity::new(0.5, t)?;
        for delta in [-1.0, 0.25] {
            let want = d.moment_closed_form(delta);
            worst = worst.max((d.moment(delta)? - want).abs() / want);
        }
    }
    o.at_most("moment_max_rel_error", worst, 1e-8);
    Ok(o)
}

fn poisson_mult(_: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut worst: f64 = 0.0;
    for x in [0.01, 1.0, 100.0] {
        let want = (-f64::sqrt(x)).exp();
        worst = worst.max((poisson_multiplier(0.5, x)? - want).abs() / want);
    }
    o.at_most("half_closed_form_max_rel_error", worst, 1e-8);
    let mut worst: f64 = 0.0;
    for sigma in [0.2, 0.5, 0.8] {
        worst = worst.max((poisson_multiplier(sigma, 0.0)? - 1.0).abs());
    }
    o.at_most("value_at_zero_max_error", worst, 1e-10);
    Ok(o)
}

fn gaussian(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (n, a, t) = (512usize, 10.0, 0.5);
    let op = ctx.op_for(&grid_spec("r1", n, a, Boundary::Periodic))?;
    let k = extract_kernel(&op, Semigroup::Heat { t }, &[0.0])?;
    let grid = op.grid();
    let mut worst: f64 = 0.0;
    let mut abs_err: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 0..grid.node_count() {
        let x = grid.node(i)[0];
        let image: f64 = (-20..=20)
            .map(|m| (-(x + 2.0 * a * m as f64).powi(2) / (4.0 * t)).exp())
            .sum::<f64>()
            / (4.0 * PI * t).sqrt();
        let v = k.values()[i];
        if x.abs() <= 0.5 * a {
            worst = worst.max((v - image).abs() / image);
            abs_err = abs_err.max((v - image).abs());
            peak = peak.max(image);
        }
        rows.push(vec![cell(x.abs()), cell(t), cell(v), cell(image), cell(v / image)]);
    }
    // Pointwise relative error grows like x^4 h^2 in the Gaussian tail; the
    // assertion is on the sup norm relative to the peak.
    o.num("interior_pointwise_rel_error", worst);
    o.at_most("interior_sup_rel_error", abs_err / peak, 1e-3);
    o.at_most("mass_error", (k.integral() - 1.0).abs(), 1e-10);
    o.csv("profile.csv", &["d", "t", "K", "profile", "ratio"], &rows);
    Ok(o)
}

fn laws(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let dir = ctx.op_for(&grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let per = ctx.op_for(&grid_spec("r1", 128, 2.0, Boundary::Periodic))?;
    let suite = ctx.suite_functions(dir.grid())?;
    let (u, v) = (&suite[0], &suite[1]);
    let alphas = ctx.list(&ctx.params().alpha, &[0.3, 0.5, 0.8]);
    let sigmas = ctx.list(&ctx.params().sigma, &[0.3, 0.5, 0.8]);
    let times = ctx.list(&ctx.params().t, &[0.1, 1.0]);
    let mut family: Vec<(String, Box<dyn Fn(f64) -> Semigroup>, bool)> = vec![("heat".into(), Box::new(|t| Semigroup::Heat { t }), true)];
    for &alpha in &alphas {
        family.push((format!("frac_heat_{alpha}"), Box::new(move |t| Semigroup::FracHeat { alpha, t }), true));
    }
    for &sigma in &sigmas {
        // Only the sigma = 1/2 extension is a semigroup in t.
        family.push((format!("poisson_{sigma}"), Box::new(move |t| Semigroup::Poisson { sigma, t }), sigma == 0.5));
    }
    let (mut law, mut adj, mut contr, mut pos, mut mass) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (_, make, is_semigroup) in &family {
        for &t in &times {
            let tu = make(t).apply(&dir, u)?;
            if *is_semigroup {
                let two = make(0.5).apply(&dir, &tu)?;
                let one = make(t + 0.5).apply(&dir, u)?;
                law = law.max(rel(&two, &one));
            }
            let tv = make(t).apply(&dir, v)?;
            let (a, b) = (tu.inner(v), u.inner(&tv));
            adj = adj.max((a - b).abs() / a.abs().max(b.abs()));
            for p in [1.0, 2.0, f64::INFINITY] {
                contr = contr.max(tu.lp_norm(p) / u.lp_norm(p) - 1.0);
            }
            let abs = u.abs();
            let ta = make(t).apply(&dir, &abs)?;
            let top = ta.values().iter().copied().fold(0.0, f64::max);
            let low = ta.values().iter().copied().fold(0.0, f64::min);
            pos = pos.max(-low / top);
            let one = make(t).apply(&per, &GridFunction::constant(per.grid(), 1.0))?;
            mass = mass.max(one.values().iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max));
        }
    }
    o.at_most("semigroup_law_max_rel_error", law, 1e-10);
    o.at_most("self_adjointness_max_rel_error", adj, 1e-10);
    o.at_most("contraction_max_excess", contr, 1e-12);
    o.at_most("positivity_max_negative_fraction", pos, 1e-12);
    o.at_most("unit_mass_max_error", mass, 1e-10);
    o.put("members", family.len() * times.len());
    Ok(o)
}

fn certify_both(
    ctx: &Ctx,
    o: &mut Outcome,
    params: &[f64],
    certify: fn(&SpectralOperator, f64, &[f64], &[f64]) -> Result<BoundReport>,
    r1_spread: f64,
) -> Result<()> {
    let times = ctx.list(&ctx.params().t, &[0.25, 0.5, 1.0]);
    let r1 = ctx.op_for(&grid_spec("r1", 400, 20.0, Boundary::Dirichlet))?;
    let rep = certify(&r1, 0.5, &times, &[0.0])?;
    o.expect(rep.is_certified(), "R1 bracket not certified");
    o.at_most("r1_half_spread", rep.spread(), r1_spread);
    o.put("r1_half_report", to_value(&rep));
    let h1 = ctx.op(grid_spec("h1", 12, 2.0, Boundary::Dirichlet))?;
    let base = vec![0.0; h1.grid().dim()];
    for &x in params {
        let rep = certify(&h1, x, &times, &base)?;
        o.expect(rep.is_certified(), format!("H1 bracket not certified at {x}"));
        o.finite_positive(&format!("h1_{x}_c_lower"), rep.c_lower);
        o.finite_positive(&format!("h1_{x}_c_upper"), rep.c_upper);
        o.put(&format!("h1_{x}_report"), to_value(&rep));
    }
    Ok(())
}

fn profile_rows(op: &SpectralOperator, sg: Semigroup) -> Result<Vec<Vec<String>>> {
    let k = extract_kernel(op, sg, &[0.0])?;
    let q = op.grid().descriptor().q();
    let grid = op.grid();
    Ok((0..grid.node_count())
        .filter(|&i| grid.node(i)[0] >= 0.0)
        .map(|i| {
            let d = grid.node(i)[0];
            let prof = sg.profile(q, d);
            vec![cell(d), cell(sg.t()), cell(k.values()[i]), cell(prof), cell(k.values()[i] / prof)]
        })
        .collect())
}

fn frac_bounds(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let alphas = ctx.list(&ctx.params().alpha, &[0.5]);
    certify_both(ctx, &mut o, &alphas, certify_frac_heat_bounds, 10.0)?;
    let r1 = ctx.op_for(&grid_spec("r1", 400, 20.0, Boundary::Dirichlet))?;
    let rows = profile_rows(&r1, Semigroup::FracHeat { alpha: 0.5, t: 0.5 })?;
    o.csv("profile.csv", &["d", "t", "K", "profile", "ratio"], &rows);
    Ok(o)
}

fn poisson_bounds(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let sigmas = ctx.list(&ctx.params().sigma, &[0.5]);
    certify_both(ctx, &mut o, &sigmas, certify_poisson_bounds, 10.0)?;
    let r1 = ctx.op_for(&grid_spec("r1", 400, 20.0, Boundary::Dirichlet))?;
    let rows = profile_rows(&r1, Semigroup::Poisson { sigma: 0.5, t: 0.5 })?;
    o.csv("profile.csv", &["d", "t", "K", "profile", "ratio"], &rows);
    Ok(o)
}

fn holder(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let r1 = ctx.op_for(&grid_spec("r1", 200, 10.0, Boundary::Dirichlet))?;
    let steps = [vec![0.1], vec![-0.3]];
    o.finite_positive("r1_frac_heat", certify_frac_heat_holder(&r1, 0.5, 1.0, &[0.0], &steps)?.c_upper);
    o.finite_positive("r1_poisson", certify_poisson_holder(&r1, 0.5, 1.0, &[0.0], &steps)?.c_upper);
    let h1 = ctx.op(grid_spec("h1", 12, 2.0, Boundary::Dirichlet))?;
    let h = h1.grid().spacing().to_vec();
    let base = vec![0.0; h1.grid().dim()];
    let steps: Vec<Vec<f64>> = (0..h1.horizontal_dim())
        .map(|j| {
            let mut v = vec![0.0; h1.grid().dim()];
            v[j] = h[j];
            v
        })
        .collect();
    o.finite_positive("h1_frac_heat", certify_frac_heat_holder(&h1, 0.5, 1.0, &base, &steps)?.c_upper);
    o.finite_positive("h1_poisson", certify_poisson_holder(&h1, 0.5, 1.0, &base, &steps)?.c_upper);
    Ok(o)
}

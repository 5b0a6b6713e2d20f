use carnot_core::capacity::{
    ball_family, capacity_property_suite, carleson_embedding_verify, comparability, random_sets, strong_capacitary_check,
    tent_identity_report, tent_lower_bound_check, trace_embedding_verify, CapacityKind, Capacitor, DiscreteMeasure, DiscreteSet,
    EmbeddingReport, ExtensionSemigroup, SolverOptions,
};
use carnot_core::{Boundary, GridFunction, GridSpec, Result};

use super::{refined, grid_spec, Check, Ctx};
use crate::report::{cell, to_value, CheckClass, Outcome};

pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "capacity-solver-soundness",
            statement: "at p = 2 the iterative capacity solver agrees with the direct KKT solve",
            class: CheckClass::Assertion,
            run: soundness,
        },
        Check {
            id: "pro6-capacity-properties",
            statement: "Cap(empty) = 0, E1 c E2 => Cap(E1) <= Cap(E2), Cap(E1 u E2) <= Cap(E1) + Cap(E2), continuity along monotone chains",
            class: CheckClass::Assertion,
            run: properties,
        },
        Check {
            id: "relation-comparability",
            statement: "Cap_{I_2s,p}(E) / C <= Cap_{W^{2s,p}}(E) <= C Cap_{I_2s,p}(E)",
            class: CheckClass::Assertion,
            run: relation,
        },
        Check {
            id: "capacity-relaxation",
            statement: "u >= 1 on E and u >= 1 on a neighbourhood of E give the same capacity up to one cell",
            class: CheckClass::Assertion,
            run: relaxation,
        },
        Check {
            id: "strong-capacitary",
            statement: "int_0^inf Cap({|u| >= lambda}) d lambda^p <= C ||u||^p, also with the maximal function and the Besov capacity",
            class: CheckClass::Assertion,
            run: strong,
        },
        Check {
            id: "tent-identities",
            statement: "T(U1 n U2) = T(U1) n T(U2) and T(U1) u T(U2) c T(U1 u U2)",
            class: CheckClass::Assertion,
            run: tent_ids,
        },
        Check {
            id: "tent-lower-bound",
            statement: "O c {|f| >= 1} => inf over T(O) of P_{sigma,t}|f| > 0",
            class: CheckClass::Assertion,
            run: tent_lower,
        },
        Check {
            id: "thm1-carleson",
            statement: "||T_t u||_{L^q(mu)} <= A1 ||u||, weak-type A2 <= A1, sup mu(T(O))^{p/q} / Cap(O) and c_p(mu; t) ladder",
            class: CheckClass::Assertion,
            run: carleson,
        },
        Check {
            id: "thm2-trace",
            statement: "||u||_{L^q(nu)} <= B1 ||u||_{W^{2s,p}} against sup nu(E)^{1/q} / Cap(E)^{1/p}",
            class: CheckClass::Assertion,
            run: trace_sobolev,
        },
        Check {
            id: "thm3-besov-trace",
            statement: "||u||_{L^q(nu)} <= B1 ||u||_{B^{alpha,beta}_{p,p}} against sup nu(E)^{1/q} / Cap_B(E)^{1/p}",
            class: CheckClass::Assertion,
            run: trace_besov,
        },
    ]
}

const SOBOLEV: CapacityKind = CapacityKind::Sobolev { s: 0.25, p: 2.0 };
const BESOV: CapacityKind = CapacityKind::Besov { alpha: 0.5, beta: 0.3, p: 2.0 };

fn kinds() -> [(&'static str, CapacityKind); 3] {
    [("riesz", CapacityKind::Riesz { s: 0.25, p: 2.0 }), ("sobolev", SOBOLEV), ("besov", BESOV)]
}

fn small_grids() -> [(&'static str, GridSpec); 3] {
    let mut r2 = grid_spec("r2", 5, 1.0, Boundary::Dirichlet);
    r2.points_per_axis = vec![5, 5];
    [
        ("r1", grid_spec("r1", 32, 1.0, Boundary::Dirichlet)),
        ("r2", r2),
        ("h1", grid_spec("h1", 3, 1.0, Boundary::Dirichlet)),
    ]
}

fn soundness(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let iterative = SolverOptions {
        iterative: true,
        ..SolverOptions::default()
    };
    for (gname, s) in small_grids() {
        let op = ctx.op_for(&s)?;
        let sets = random_sets(op.grid(), 50, ctx.seed());
        for (kname, kind) in kinds() {
            let direct = Capacitor::new(&op, kind, SolverOptions::default())?;
            let iter = Capacitor::new(&op, kind, iterative)?;
            let mut worst: f64 = 0.0;
            for set in &sets {
                let a = direct.capacity(set)?.value;
                let b = iter.capacity(set)?.value;
                worst = worst.max((b - a).abs() / a.abs().max(f64::MIN_POSITIVE));
            }
            o.at_most(&format!("{gname}_{kname}_max_rel_diff"), worst, 1e-4);
        }
    }
    Ok(o)
}

fn properties(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 64, 1.0, Boundary::Dirichlet))?;
    for (name, kind) in kinds() {
        let cap = Capacitor::new(&op, kind, SolverOptions::default())?;
        let rep = capacity_property_suite(&cap, 20, ctx.seed(), 1e-8)?;
        for out in &rep.outcomes {
            o.expect(
                out.failures == 0,
                format!("{name}: {} failed {} of {} trials (worst {:e})", out.property, out.failures, out.trials, out.max_violation),
            );
        }
        o.put(name, to_value(&rep));
    }
    Ok(o)
}

fn relation(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let mut sets = ball_family(op.grid(), 8, 2, 60);
    if let Some(extra) = ctx.sets_file(op.grid())? {
        sets.push(extra);
    }
    let riesz = Capacitor::new(&op, CapacityKind::Riesz { s: 0.25, p: 2.0 }, SolverOptions::default())?;
    let sob = Capacitor::new(&op, SOBOLEV, SolverOptions::default())?;
    let b = comparability(&riesz, &sob, &sets)?;
    o.num("ratio_min", b.c1);
    o.num("ratio_max", b.c2);
    o.put("sets", sets.len());
    o.at_most("C", b.c2.max(1.0 / b.c1), 20.0);
    Ok(o)
}

fn relaxation(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let cap = Capacitor::new(&op, SOBOLEV, SolverOptions::default())?;
    let set = match ctx.sets_file(op.grid())? {
        Some(s) => s,
        None => DiscreteSet::ball(op.grid(), &[0.0], 0.3),
    };
    let rep = cap.relaxation_report(&set)?;
    o.num("value", rep.value);
    o.num("dilated_value", rep.dilated_value);
    o.at_most("relative_gap", rep.relative_gap, 0.05);
    Ok(o)
}

fn strong(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let base = ctx.primary(grid_spec("r1", 128, 2.0, Boundary::Dirichlet));
    let sob = CapacityKind::Sobolev { s: 0.2, p: 2.0 };
    let mut plain = Vec::new();
    for (i, s) in [base.clone(), refined(&base)].iter().enumerate() {
        let op = ctx.op_for(s)?;
        let suite = ctx.suite_functions(op.grid())?;
        let variants: &[(&str, CapacityKind, bool)] = if i == 0 {
            &[("sobolev", sob, false), ("maximal", sob, true), ("besov", BESOV, false)]
        } else {
            &[("sobolev_refined", sob, false)]
        };
        for &(name, kind, maximal) in variants {
            let cap = Capacitor::new(&op, kind, SolverOptions::default())?;
            let rep = strong_capacitary_check(&cap, &suite, maximal, 40)?;
            o.finite_positive(&format!("{name}_ratio"), rep.ratio);
            o.at_most(&format!("{name}_refinement_change"), rep.refinement_change, 0.01);
            o.num(&format!("{name}_worst_integral_change"), rep.worst_integral_change);
            if !maximal && kind == sob {
                plain.push(rep.ratio);
            }
        }
    }
    o.at_most("grid_drift", (plain[0] / plain[1]).max(plain[1] / plain[0]), 2.0);
    Ok(o)
}

fn tent_ids(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let levels = [0.05, 0.1, 0.2];
    let mut disjoint_counterexample = false;
    for (gname, s) in [("r1", grid_spec("r1", 64, 2.0, Boundary::Dirichlet)), ("h1", grid_spec("h1", 8, 2.0, Boundary::Dirichlet))] {
        let op = ctx.op_for(&s)?;
        let g = op.grid();
        let fam = ball_family(g, 2, 1, 40);
        let mut pairs = 0usize;
        let mut bad = 0usize;
        let mut literal_fails = 0usize;
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                let r = tent_identity_report(&fam[i], &fam[j], &levels)?;
                pairs += 1;
                if !(r.intersection_identity && r.union_inclusion) {
                    bad += 1;
                }
                if !r.union_as_intersection {
                    literal_fails += 1;
                }
            }
        }
        o.put(&format!("{gname}_pairs"), pairs);
        o.put(&format!("{gname}_union_as_intersection_fails"), literal_fails);
        o.expect(bad == 0, format!("{gname}: {bad} of {pairs} pairs violate the intersection identity or union inclusion"));
        if gname == "r1" {
            let d = 0.5 * g.inradius();
            let u1 = DiscreteSet::ball(g, &[-d], 0.4);
            let u2 = DiscreteSet::ball(g, &[d], 0.4);
            let r = tent_identity_report(&u1, &u2, &levels)?;
            o.expect(r.intersection_identity && r.union_inclusion, "disjoint balls violate the valid identities");
            disjoint_counterexample = !r.union_as_intersection && r.union_size > 0 && r.tents_intersection_size == 0;
        }
    }
    o.put("union_as_intersection_counterexample", disjoint_counterexample);
    Ok(o)
}

fn tent_lower(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(grid_spec("r1", 128, 2.0, Boundary::Dirichlet))?;
    let g = op.grid();
    let levels = [0.05, 0.1, 0.2];
    let one = GridFunction::constant(g, 1.0);
    let mut prev = 0.0;
    let mut radii = Vec::new();
    let mut infs = Vec::new();
    for r in [1.0, 0.8, 0.6, 0.4] {
        let set = DiscreteSet::ball(g, &[0.0], r);
        let v = tent_lower_bound_check(&op, 0.5, &set, &one, &levels)?;
        o.expect(v > 0.0 && v <= 1.0 + 1e-12, format!("r = {r}: infimum {v:e} outside (0, 1]"));
        o.expect(v >= prev - 1e-12, format!("r = {r}: infimum decreased when the set shrank"));
        prev = v;
        radii.push(r);
        infs.push(v);
        let ind = GridFunction::from_fn(g, |c| if set.contains(g.nearest_node(c).expect("node")) { 1.0 } else { 0.0 });
        let w = tent_lower_bound_check(&op, 0.5, &set, &ind, &levels)?;
        o.expect(w > 0.0, format!("r = {r}: indicator infimum {w:e} not positive"));
    }
    o.put("radii", crate::report::nums(&radii));
    o.put("infimum_unit", crate::report::nums(&infs));
    Ok(o)
}

const EXPONENTS: [f64; 3] = [2.0, 4.0, 1.5];

fn embedding_grid() -> GridSpec {
    grid_spec("r1", 64, 2.0, Boundary::Dirichlet)
}

/// Common assertions over one embedding report. `scaled` is the report for
/// the measure times 16; `key` names the constant that must scale by
/// `16^{p/q}` (or `16^{1/q}` for a `1/p` power).
fn judge(o: &mut Outcome, tag: &str, rep: &EmbeddingReport, scaled: &EmbeddingReport, key: &str, power: Option<f64>) {
    let c = |r: &EmbeddingReport, k: &str| r.constants.get(k).copied().unwrap_or(f64::NAN);
    let first = rep.constants.keys().next().cloned().unwrap_or_default();
    let a1 = c(rep, &first);
    let weak = rep.constants.iter().find(|(k, _)| k.starts_with("(iii)")).map(|(_, v)| *v).unwrap_or(f64::NAN);
    let cap_const = c(rep, key);
    if cap_const.is_finite() {
        o.expect(a1.is_finite(), format!("{tag}: finite capacity constant but infinite strong constant"));
    }
    o.expect(rep.weak_le_strong && weak <= a1, format!("{tag}: weak-type constant {weak:e} exceeds strong {a1:e}"));
    let Some(power) = power else { return };
    let want = 16f64.powf(power) * cap_const;
    let got = c(scaled, key);
    if cap_const.is_finite() && cap_const > 0.0 {
        o.expect(
            (got - want).abs() <= 1e-12 * want,
            format!("{tag}: scaling the measure by 16 moved {key} to {got:e}, expected {want:e}"),
        );
    }
}

fn row(tag: &str, rep: &EmbeddingReport) -> Vec<String> {
    let mut r = vec![tag.to_string(), cell(rep.q)];
    r.extend(rep.constants.values().map(|&v| cell(v)));
    r
}

/// One CSV per exponent; the columns are the report's constant names.
fn tables(o: &mut Outcome, tables: Vec<(f64, Vec<String>, Vec<Vec<String>>)>) {
    for (q, keys, rows) in tables {
        let mut header = vec!["instance", "q"];
        header.extend(keys.iter().map(|k| k.as_str()));
        o.csv(&format!("q{q}.csv"), &header, &rows);
    }
}

fn carleson(ctx: &Ctx) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(embedding_grid())?;
    let g = op.grid();
    let cap = Capacitor::new(&op, SOBOLEV, SolverOptions::default())?;
    let mut family = ball_family(g, 4, 3, 200);
    if let Some(extra) = ctx.sets_file(g)? {
        family.push(extra);
    }
    let suite = ctx.suite_functions(g)?;
    let levels = vec![0.05, 0.1, 0.2];
    let mut measures = Vec::new();
    for i in 0..10 {
        measures.push(DiscreteMeasure::random_product(g, levels.clone(), 8, ctx.seed().wrapping_add(100 + i))?);
    }
    if let Some(m) = ctx.measure_file(g)? {
        measures.push(m);
    }
    let ext = ExtensionSemigroup::Poisson { sigma: 0.5 };
    let qs = ctx.list(&ctx.params().q, &EXPONENTS);
    let mut out = Vec::new();
    let mut worst_a4: f64 = 0.0;
    for &q in &qs {
        let mut rows = Vec::new();
        let mut keys = Vec::new();
        for (i, mu) in measures.iter().enumerate() {
            let tag = format!("mu{i}_q{q}");
            let rep = carleson_embedding_verify(&cap, ext, q, mu, &suite, &family)?;
            let scaled = carleson_embedding_verify(&cap, ext, q, &mu.scaled(16.0)?, &suite, &family)?;
            judge(&mut o, &tag, &rep, &scaled, "(iv) tent-capacity A3", Some(2.0 / q));
            if let Some(&a4) = rep.constants.get("(ii) capacity-minimizing A4") {
                let a3 = rep.constants["(iv) tent-capacity A3"];
                if a3 > 0.0 {
                    worst_a4 = worst_a4.max((a4.powf(2.0) - a3).abs() / a3);
                }
            }
            keys = rep.constants.keys().cloned().collect();
            rows.push(row(&tag, &rep));
        }
        out.push((q, keys, rows));
    }
    o.at_most("a4_pow_p_vs_a3", worst_a4, 1e-12);
    o.put("instances", measures.len());
    o.put("family_size", family.len());
    tables(&mut o, out);
    Ok(o)
}

fn trace(ctx: &Ctx, kind: CapacityKind) -> Result<Outcome> {
    let mut o = Outcome::default();
    let op = ctx.op(embedding_grid())?;
    let g = op.grid();
    let cap = Capacitor::new(&op, kind, SolverOptions::default())?;
    let mut family = ball_family(g, 4, 3, 200);
    if let Some(extra) = ctx.sets_file(g)? {
        family.push(extra);
    }
    let suite = ctx.suite_functions(g)?;
    let mut measures = Vec::new();
    for i in 0..10 {
        measures.push(DiscreteMeasure::random_group(g, 8, ctx.seed().wrapping_add(200 + i))?);
    }
    if let Some(m) = ctx.measure_file(g)? {
        measures.push(m);
    }
    let p = kind.p();
    let qs = ctx.list(&ctx.params().q, &EXPONENTS);
    let mut out = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for &q in &qs {
        let mut rows = Vec::new();
        let mut keys = Vec::new();
        for (i, nu) in measures.iter().enumerate() {
            let tag = format!("nu{i}_q{q}");
            let rep = trace_embedding_verify(&cap, q, nu, &suite, &family)?;
            let scaled = trace_embedding_verify(&cap, q, &nu.scaled(16.0)?, &suite, &family)?;
            if q >= p {
                judge(&mut o, &tag, &rep, &scaled, "(ii) isocapacitary B2", Some(1.0 / q));
            } else {
                judge(&mut o, &tag, &rep, &scaled, "(ii) dyadic integral h_p", None);
            }
            if let Some(&r) = rep.ratios.get("B1/B2") {
                worst_ratio = worst_ratio.max(r);
            }
            keys = rep.constants.keys().cloned().collect();
            rows.push(row(&tag, &rep));
        }
        out.push((q, keys, rows));
    }
    o.num("max_b1_over_b2", worst_ratio);
    o.put("instances", measures.len());
    o.put("family_size", family.len());
    tables(&mut o, out);
    Ok(o)
}

fn trace_sobolev(ctx: &Ctx) -> Result<Outcome> {
    trace(ctx, SOBOLEV)
}

fn trace_besov(ctx: &Ctx) -> Result<Outcome> {
    trace(ctx, BESOV)
}

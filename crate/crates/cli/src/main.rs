//! `carnot`: runs the verifier suites and the individual operators from the
//! command line.

mod checks;
mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use carnot_core::capacity::{
    carleson_embedding_verify, trace_embedding_verify, CapacityKind, Capacitor, DiscreteMeasure, DiscreteSet, ExtensionSemigroup,
    SolverOptions,
};
use carnot_core::fractional::{frac_power, maximal_function, riesz_potential};
use carnot_core::semigroups::{certify_frac_heat_bounds, certify_poisson_bounds, extract_kernel, Semigroup};
use carnot_core::spaces::{besov_seminorm_default, BesovParams};
use carnot_core::suite::standard_suite;
use carnot_core::{Boundary, Grid, GridFunction, GridSpec, SpectralOperator};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use checks::{registry, run_check, Ctx};
use config::ExperimentConfig;
use report::CheckClass;

#[derive(Parser)]
#[command(name = "carnot", version, about = "Numerical verifier for sub-Laplacian semigroups, capacities and embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks from a TOML experiment config (all checks when omitted).
    Run {
        config: Option<PathBuf>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to these check ids; overrides `checks` in the config.
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Print every registered check id with its statement.
    ListChecks,
    /// Extract a semigroup kernel at the origin and write its radial profile as CSV.
    Kernel {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Family::Heat)]
        semigroup: Family,
        /// `α` for the fractional heat semigroup, `σ` for Poisson.
        #[arg(long, default_value_t = 0.5)]
        param: f64,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Certify two-sided kernel bounds and print the bound report as JSON.
    CertifyBounds {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Family::FracHeat)]
        semigroup: Family,
        #[arg(long, default_value_t = 0.5)]
        param: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0])]
        t: Vec<f64>,
    },
    /// Run the subordination identity check and print its report.
    SubordinationCheck,
    /// Capacity of a node set (CSV) or of a centred ball.
    Capacity {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        kind: KindArgs,
        #[arg(long)]
        sets: Option<PathBuf>,
        #[arg(long, default_value_t = 0.3)]
        ball: f64,
    },
    /// Carleson (product measure) or trace (group measure) embedding constants.
    Embed {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        kind: KindArgs,
        /// Measure CSV; a `t` column makes it a Carleson measure.
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        /// Poisson `σ` for the Carleson extension.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
    },
    /// `L^s u`.
    FracPower {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Riesz potential `I_θ u`.
    Riesz {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Centred maximal function over the dyadic radius ladder.
    Maximal {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        io: Io,
    },
    /// Besov seminorm of a function, printed as JSON.
    Besov {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Flavor::Heat)]
        flavor: Flavor,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        /// `α` for the heat flavor, `σ` for Poisson.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "r1")]
    group: String,
    /// Points per axis.
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Dirichlet)]
    boundary: BoundaryArg,
}

#[derive(Args)]
struct Io {
    /// Input function CSV; the first standard suite function when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct KindArgs {
    #[arg(long, value_enum, default_value_t = Kind::Sobolev)]
    kind: Kind,
    #[arg(long, default_value_t = 0.25)]
    s: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Dirichlet,
    Periodic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Family {
    Heat,
    FracHeat,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Riesz,
    Sobolev,
    Besov,
}

#[derive(Clone, Copy, ValueEnum)]
enum Flavor {
    Heat,
    Poisson,
    Difference,
}

impl GridArgs {
    fn grid_spec(&self) -> GridSpec {
        GridSpec {
            group: self.group.clone(),
            points_per_axis: vec![self.n],
            half_width: self.half_width,
            boundary: match self.boundary {
                BoundaryArg::Dirichlet => Boundary::Dirichlet,
                BoundaryArg::Periodic => Boundary::Periodic,
            },
        }
    }

    fn operator(&self) -> Result<SpectralOperator, String> {
        let grid = Arc::new(self.grid_spec().build().map_err(|e| e.to_string())?);
        carnot_core::discretization::build_sublaplacian(&grid).map_err(|e| e.to_string())
    }
}

impl KindArgs {
    fn kind(&self) -> CapacityKind {
        match self.kind {
            Kind::Riesz => CapacityKind::Riesz { s: self.s, p: self.p },
            Kind::Sobolev => CapacityKind::Sobolev { s: self.s, p: self.p },
            Kind::Besov => CapacityKind::Besov {
                alpha: self.alpha,
                beta: self.beta,
                p: self.p,
            },
        }
    }
}

/// A failure with its exit code: 1 for a failed check or numerical error,
/// 2 for bad configuration or arguments.
struct Failure(u8, String);

fn numeric<E: std::fmt::Display>(e: E) -> Failure {
    Failure(1, e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure(2, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("carnot: {msg}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, out, checks } => run(config.as_deref(), out, checks),
        Command::ListChecks => {
            let mut stdout = std::io::stdout().lock();
            for c in registry() {
                writeln!(stdout, "{}\t{}", c.id, c.statement).map_err(numeric)?;
            }
            Ok(())
        }
        Command::Kernel {
            grid,
            semigroup,
            param,
            t,
            io,
        } => {
            let op = grid.operator().map_err(usage)?;
            let sg = semigroup_of(semigroup, param, t);
            let origin = vec![0.0; op.grid().dim()];
            let k = extract_kernel(&op, sg, &origin).map_err(numeric)?;
            let desc = op.grid().descriptor().clone();
            let mut rows = Vec::new();
            for (i, &v) in k.values().iter().enumerate() {
                let d = desc.hom_norm_coords(op.grid().node(i));
                let prof = sg.profile(desc.q(), d);
                rows.push(vec![report::cell(d), report::cell(t), report::cell(v), report::cell(prof), report::cell(v / prof)]);
            }
            emit_csv(io.output.as_deref(), &["d", "t", "K", "profile", "ratio"], &rows)
        }
        Command::CertifyBounds { grid, semigroup, param, t } => {
            let op = grid.operator().map_err(usage)?;
            let origin = vec![0.0; op.grid().dim()];
            let rep = match semigroup {
                Family::Poisson => certify_poisson_bounds(&op, param, &t, &origin),
                Family::FracHeat => certify_frac_heat_bounds(&op, param, &t, &origin),
                Family::Heat => certify_frac_heat_bounds(&op, 1.0, &t, &origin),
            }
            .map_err(numeric)?;
            print_json(&rep)
        }
        Command::SubordinationCheck => {
            let cfg = ExperimentConfig::default();
            let ctx = Ctx::new(&cfg);
            let check = checks::find("subordination-check").expect("registered check");
            let (rep, _) = run_check(&check, &ctx);
            print_json(&rep)?;
            if rep.passed {
                Ok(())
            } else {
                Err(Failure(1, "subordination check failed".into()))
            }
        }
        Command::Capacity { grid, kind, sets, ball } => {
            let op = grid.operator().map_err(usage)?;
            let set = match sets {
                Some(p) => DiscreteSet::load_csv(op.grid(), &p).map_err(usage)?,
                None => DiscreteSet::ball(op.grid(), &vec![0.0; op.grid().dim()], ball),
            };
            let cap = Capacitor::new(&op, kind.kind(), SolverOptions::default()).map_err(usage)?;
            let r = cap.capacity(&set).map_err(numeric)?;
            print_json(&json!({
                "kind": report::to_value(&kind.kind()),
                "set_size": set.len(),
                "value": report::num(r.value),
                "iterations": r.iterations,
                "kkt_residual": report::num(r.kkt_residual),
                "converged": r.converged,
            }))
        }
        Command::Embed {
            grid,
            kind,
            measure,
            q,
            sigma,
        } => {
            let op = grid.operator().map_err(usage)?;
            let g = op.grid();
            let mu = DiscreteMeasure::load_csv(g, &measure).map_err(usage)?;
            let cap = Capacitor::new(&op, kind.kind(), SolverOptions::default()).map_err(usage)?;
            let family = carnot_core::capacity::ball_family(g, 4, 3, 200);
            let suite: Vec<GridFunction> = standard_suite(g, 20, 1).map_err(numeric)?.into_iter().map(|x| x.1).collect();
            let rep = if mu.on_product() {
                carleson_embedding_verify(&cap, ExtensionSemigroup::Poisson { sigma }, q, &mu, &suite, &family)
            } else {
                trace_embedding_verify(&cap, q, &mu, &suite, &family)
            }
            .map_err(numeric)?;
            print_json(&rep)
        }
        Command::FracPower { grid, s, io } => {
            let op = grid.operator().map_err(usage)?;
            let u = input(&op, io.input.as_deref())?;
            write_fn(io.output.as_deref(), &frac_power(&op, s, &u).map_err(numeric)?)
        }
        Command::Riesz { grid, theta, io } => {
            let op = grid.operator().map_err(usage)?;
            let u = input(&op, io.input.as_deref())?;
            write_fn(io.output.as_deref(), &riesz_potential(&op, theta, &u).map_err(numeric)?)
        }
        Command::Maximal { grid, io } => {
            let op = grid.operator().map_err(usage)?;
            let u = input(&op, io.input.as_deref())?;
            write_fn(io.output.as_deref(), &maximal_function(&u).map_err(numeric)?)
        }
        Command::Besov {
            grid,
            flavor,
            p,
            q,
            beta,
            alpha,
            input: path,
        } => {
            let op = grid.operator().map_err(usage)?;
            let u = input(&op, path.as_deref())?;
            let params = match flavor {
                Flavor::Heat => BesovParams::heat(p, q, alpha, beta),
                Flavor::Poisson => BesovParams::poisson(p, q, alpha, beta),
                Flavor::Difference => BesovParams::difference(p, q, beta),
            };
            params.validate().map_err(usage)?;
            let v = besov_seminorm_default(&op, &params, &u).map_err(numeric)?;
            print_json(&json!({ "params": report::to_value(&params), "seminorm": report::num(v) }))
        }
    }
}

fn semigroup_of(f: Family, param: f64, t: f64) -> Semigroup {
    match f {
        Family::Heat => Semigroup::Heat { t },
        Family::FracHeat => Semigroup::FracHeat { alpha: param, t },
        Family::Poisson => Semigroup::Poisson { sigma: param, t },
    }
}

fn input(op: &SpectralOperator, path: Option<&Path>) -> Result<GridFunction, Failure> {
    let grid: &Arc<Grid> = op.grid();
    match path {
        Some(p) => GridFunction::load_csv(grid, p).map_err(usage),
        None => Ok(standard_suite(grid, 1, 1).map_err(numeric)?.remove(0).1),
    }
}

fn write_fn(path: Option<&Path>, u: &GridFunction) -> Result<(), Failure> {
    match path {
        Some(p) => u.save_csv(p).map_err(numeric),
        None => u.write_csv(std::io::stdout().lock()).map_err(numeric),
    }
}

fn emit_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut o = report::Outcome::default();
    o.csv("out", header, rows);
    let body = &o.files[0].1;
    match path {
        Some(p) => std::fs::write(p, body).map_err(numeric),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(numeric),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(numeric)?;
    writeln!(std::io::stdout().lock(), "{text}").map_err(numeric)
}

fn run(config: Option<&Path>, out: Option<PathBuf>, only: Vec<String>) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p).map_err(usage)?,
        None => ExperimentConfig::default(),
    };
    if !only.is_empty() {
        cfg.checks = Some(only);
    }
    let all = registry();
    let selected: Vec<_> = match &cfg.checks {
        None => all.iter().collect(),
        Some(ids) => {
            let mut v = Vec::new();
            for id in ids {
                v.push(all.iter().find(|c| c.id == id).ok_or_else(|| usage(format!("unknown check id {id:?}")))?);
            }
            v
        }
    };
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("carnot-out"));
    std::fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let ctx = Ctx::new(&cfg);
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for check in selected {
        let start = Instant::now();
        let (rep, files) = run_check(check, &ctx);
        eprintln!(
            "{:<28} {:<4} {:>8.2}s",
            rep.id,
            if rep.passed { "ok" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for (name, body) in &files {
            std::fs::write(dir.join(name), body).map_err(numeric)?;
        }
        write_json(&dir.join(format!("{}.json", rep.id)), &rep)?;
        if !rep.passed && rep.class == CheckClass::Assertion {
            failed.push(rep.id.clone());
            for f in &rep.failures {
                eprintln!("  {}: {f}", rep.id);
            }
        }
        reports.push(rep);
    }
    let summary = json!({
        "passed": failed.is_empty(),
        "failed": failed,
        "checks": reports.iter().map(report::to_value).collect::<Vec<Value>>(),
    });
    write_json(&dir.join("report.json"), &summary)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure(1, format!("failed checks: {}", failed.join(", "))))
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).map_err(numeric)?;
    text.push('\n');
    std::fs::write(path, text).map_err(numeric)
}

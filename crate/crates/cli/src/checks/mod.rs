//! Registry of verifier checks. Each check builds its own grids unless the
//! experiment config overrides the grid, runs library routines against
//! independent references, and returns metrics plus failed assertions.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;
use std::rc::Rc;
use std::sync::Arc;

use carnot_core::capacity::{DiscreteMeasure, DiscreteSet};
use carnot_core::discretization::build_sublaplacian;
use carnot_core::suite::standard_suite;
use carnot_core::{Boundary, Grid, GridFunction, GridSpec, Result, SpectralOperator};

use crate::config::{ExperimentConfig, ParamSets};
use crate::report::{CheckClass, CheckReport, Outcome};

mod capacity;
mod fractional;
mod semigroup;
mod spaces;

pub struct Check {
    pub id: &'static str,
    /// The property verified, in one line of mathematics.
    pub statement: &'static str,
    pub class: CheckClass,
    pub run: fn(&Ctx) -> Result<Outcome>,
}

pub fn registry() -> Vec<Check> {
    let mut all = Vec::new();
    all.extend(semigroup::checks());
    all.extend(fractional::checks());
    all.extend(spaces::checks());
    all.extend(capacity::checks());
    all
}

pub fn find(id: &str) -> Option<Check> {
    registry().into_iter().find(|c| c.id == id)
}

pub fn grid_spec(group: &str, n: usize, half_width: f64, boundary: Boundary) -> GridSpec {
    GridSpec {
        group: group.to_string(),
        points_per_axis: vec![n],
        half_width,
        boundary,
    }
}

/// Same box with twice the points per axis.
pub fn refined(s: &GridSpec) -> GridSpec {
    GridSpec {
        points_per_axis: s.points_per_axis.iter().map(|n| 2 * n).collect(),
        ..s.clone()
    }
}

/// Shared state for one run: the config and a cache of assembled operators.
pub struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    ops: RefCell<BTreeMap<String, Rc<SpectralOperator>>>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            cfg,
            ops: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn params(&self) -> &ParamSets {
        &self.cfg.params
    }

    pub fn list(&self, which: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
        ParamSets::get(which, default)
    }

    /// The config's grid when one is given, the check's default otherwise.
    pub fn primary(&self, default: GridSpec) -> GridSpec {
        self.cfg.grid.clone().unwrap_or(default)
    }

    pub fn op_for(&self, s: &GridSpec) -> Result<Rc<SpectralOperator>> {
        let key = format!("{}:{:?}:{:e}:{:?}", s.group, s.points_per_axis, s.half_width, s.boundary);
        if let Some(op) = self.ops.borrow().get(&key) {
            return Ok(Rc::clone(op));
        }
        let op = Rc::new(build_sublaplacian(&Arc::new(s.build()?))?);
        self.ops.borrow_mut().insert(key, Rc::clone(&op));
        Ok(op)
    }

    pub fn op(&self, default: GridSpec) -> Result<Rc<SpectralOperator>> {
        self.op_for(&self.primary(default))
    }

    pub fn suite(&self, grid: &Arc<Grid>) -> Result<Vec<(String, GridFunction)>> {
        standard_suite(grid, self.cfg.suite.count, self.cfg.suite.seed)
    }

    pub fn suite_functions(&self, grid: &Arc<Grid>) -> Result<Vec<GridFunction>> {
        Ok(self.suite(grid)?.into_iter().map(|(_, u)| u).collect())
    }

    pub fn seed(&self) -> u64 {
        self.cfg.suite.seed
    }

    pub fn measure_file(&self, grid: &Arc<Grid>) -> Result<Option<DiscreteMeasure>> {
        self.cfg.files.measure.as_deref().map(|p| DiscreteMeasure::load_csv(grid, p)).transpose()
    }

    pub fn sets_file(&self, grid: &Arc<Grid>) -> Result<Option<DiscreteSet>> {
        self.cfg.files.sets.as_deref().map(|p: &Path| DiscreteSet::load_csv(grid, p)).transpose()
    }
}

pub fn run_check(check: &Check, ctx: &Ctx) -> (CheckReport, Vec<(String, String)>) {
    let (outcome, error) = match (check.run)(ctx) {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e.to_string())),
    };
    let mut failures = outcome.failures;
    if let Some(e) = error {
        failures.push(format!("error: {e}"));
    }
    let files: Vec<(String, String)> = outcome
        .files
        .into_iter()
        .map(|(name, body)| (format!("{}-{name}", check.id), body))
        .collect();
    let report = CheckReport {
        id: check.id.to_string(),
        statement: check.statement.to_string(),
        class: check.class,
        passed: failures.is_empty(),
        failures,
        metrics: outcome.metrics,
        files: files.iter().map(|f| f.0.clone()).collect(),
    };
    (report, files)
}

/// `‖a - b‖₂ / ‖b‖₂`.
pub fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    carnot_core::linalg::rel_diff(a.values(), b.values())
}

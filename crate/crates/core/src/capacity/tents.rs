use std::collections::BTreeSet;

use serde::Serialize;

use super::sets::DiscreteSet;
use crate::discretization::{GridFunction, SpectralOperator};
use crate::error::{invalid, Result};
use crate::semigroups::poisson_apply;

/// Discrete tent: the `(node, level)` pairs whose closed-under-inclusion
/// ball `B(g, t)` lies in the open set and in the grid box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tent {
    members: BTreeSet<(usize, usize)>,
}

impl Tent {
    pub fn members(&self) -> &BTreeSet<(usize, usize)> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: usize, level: usize) -> bool {
        self.members.contains(&(node, level))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            members: self.members.intersection(&other.members).copied().collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.is_subset(&other.members)
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.iter().any(|&t| !(t > 0.0 && t.is_finite())) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tent levels must be positive and strictly increasing"));
    }
    Ok(())
}

pub fn tent(set: &DiscreteSet, levels: &[f64]) -> Result<Tent> {
    check_levels(levels)?;
    let grid = set.grid();
    let mut members = BTreeSet::new();
    for g in set.nodes() {
        let c = grid.node(g);
        // Balls grow with t, so the first failing level ends the column.
        for (l, &t) in levels.iter().enumerate() {
            if !grid.ball_inside_box(c, t) || !grid.nodes_in_ball(c, t, false).iter().all(|&k| set.contains(k)) {
                break;
            }
            members.insert((g, l));
        }
    }
    Ok(Tent { members })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TentIdentityReport {
    /// `T(U1 ∩ U2) = T(U1) ∩ T(U2)`.
    pub intersection_identity: bool,
    /// `T(U1 ∪ U2) ⊇ T(U1) ∪ T(U2)`.
    pub union_inclusion: bool,
    /// `T(U1 ∪ U2) = T(U1) ∩ T(U2)`, evaluated as literally written.
    pub union_as_intersection: bool,
    pub union_size: usize,
    pub tents_intersection_size: usize,
}

pub fn tent_identity_report(u1: &DiscreteSet, u2: &DiscreteSet, levels: &[f64]) -> Result<TentIdentityReport> {
    let (t1, t2) = (tent(u1, levels)?, tent(u2, levels)?);
    let tu = tent(&u1.union(u2), levels)?;
    let ti = tent(&u1.intersection(u2), levels)?;
    let both = t1.intersection(&t2);
    Ok(TentIdentityReport {
        intersection_identity: ti == both,
        union_inclusion: t1.union(&t2).is_subset(&tu),
        union_as_intersection: tu == both,
        union_size: tu.len(),
        tents_intersection_size: both.len(),
    })
}

/// `inf P_{σ,t}|f|(g)` over the tent of `O`, which needs `O ⊆ {|f| >= 1}`.
pub fn tent_lower_bound_check(op: &SpectralOperator, sigma: f64, set: &DiscreteSet, f: &GridFunction, levels: &[f64]) -> Result<f64> {
    if set.nodes().iter().any(|&k| f.values()[k].abs() < 1.0) {
        return Err(invalid("the open set is not contained in {|f| >= 1}"));
    }
    let t = tent(set, levels)?;
    if t.is_empty() {
        return Err(invalid("tent of the set is empty at these levels"));
    }
    let abs = f.abs();
    let mut lo = f64::INFINITY;
    for (l, &s) in levels.iter().enumerate() {
        if !t.members().iter().any(|&(_, m)| m == l) {
            continue;
        }
        let v = poisson_apply(op, sigma, s, &abs)?;
        for &(g, _) in t.members().iter().filter(|&&(_, m)| m == l) {
            lo = lo.min(v.values()[g]);
        }
    }
    Ok(lo)
}

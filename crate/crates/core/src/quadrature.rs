//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 20-point rule and compared against the
//! sum over its two halves; panels are bisected until the discrepancy meets
//! its share of the global tolerance. Integrands may be vector valued, so a
//! whole spectral coefficient vector can be integrated in one sweep.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

const DEGREE: usize = 20;
const MAX_DEPTH: u32 = 40;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut pairs = GaussLegendre::new(DEGREE)
            .expect("degree 20 Gauss-Legendre rule")
            .into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Tolerances for [`integrate_vec`]. Acceptance requires the estimated error
/// to fall below `max(rel_tol * |I|, abs_tol)` in the Euclidean norm.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<f64>,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn panel<F: FnMut(f64) -> Vec<f64>>(f: &mut F, a: f64, b: f64, len: usize, evals: &mut usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = vec![0.0; len];
    for &(x, w) in rule() {
        let v = f(mid + half * x);
        debug_assert_eq!(v.len(), len);
        for (s, vi) in acc.iter_mut().zip(&v) {
            *s += w * half * vi;
        }
    }
    *evals += DEGREE;
    acc
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates a vector-valued function of length `len` over `[a, b]`.
///
/// `breakpoints` (any order, values outside `(a, b)` ignored) seed the
/// initial panel split; put them around narrow peaks.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, len: usize, breakpoints: &[f64], tol: Tolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> Vec<f64>,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!("bad quadrature interval [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut evals = 0;
    // Coarse pass fixes the scale the relative tolerance refers to.
    let mut pieces: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    let mut total = vec![0.0; len];
    for w in cuts.windows(2) {
        let v = panel(&mut f, w[0], w[1], len, &mut evals);
        for (t, x) in total.iter_mut().zip(&v) {
            *t += x;
        }
        pieces.push((w[0], w[1], v));
    }
    let eps = (tol.rel_tol * norm(&total)).max(tol.abs_tol);
    let width = b - a;

    let mut value = vec![0.0; len];
    let mut err_total = 0.0;
    let mut stack: Vec<(f64, f64, Vec<f64>, u32)> = pieces.into_iter().map(|(l, r, v)| (l, r, v, 0)).collect();
    while let Some((l, r, whole, depth)) = stack.pop() {
        let m = 0.5 * (l + r);
        let left = panel(&mut f, l, m, len, &mut evals);
        let right = panel(&mut f, m, r, len, &mut evals);
        let split: Vec<f64> = left.iter().zip(&right).map(|(x, y)| x + y).collect();
        let diff = norm(&split.iter().zip(&whole).map(|(x, y)| x - y).collect::<Vec<_>>());
        let share = eps * ((r - l) / width).max(1e-3);
        if diff <= share {
            for (v, s) in value.iter_mut().zip(&split) {
                *v += s;
            }
            err_total += diff;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{l:e}, {r:e}] (residual estimate {diff:e}, target {share:e})"
            )));
        }
        stack.push((l, m, left, depth + 1));
        stack.push((m, r, right, depth + 1));
    }
    Ok(QuadResult {
        value,
        error_estimate: err_total,
        evaluations: evals,
    })
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    Ok(integrate_vec(|x| vec![f(x)], a, b, 1, breakpoints, tol)?.value[0])
}

use crate::error::{invalid, Result};
use crate::linalg::spd_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct QpResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Largest violation of stationarity, multiplier signs or bounds.
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Slot {
    Free,
    Lower,
    Upper,
}

/// Primal active-set method for `min ½ xᵀHx - cᵀx` subject to
/// `lb <= x <= ub` (`H` symmetric positive definite, column-major `n x n`).
///
/// `start_free` chooses the initial working set: variables listed as free
/// start at the feasible point closest to zero, the others at a bound.
pub fn bound_qp(h: &[f64], c: &[f64], lb: &[f64], ub: &[f64], start_free: &[bool], max_iter: usize) -> Result<QpResult> {
    let n = c.len();
    if h.len() != n * n || lb.len() != n || ub.len() != n || start_free.len() != n {
        return Err(invalid("bound_qp: inconsistent dimensions"));
    }
    if lb.iter().zip(ub).any(|(l, u)| l > u) {
        return Err(invalid("bound_qp: lower bound above upper bound"));
    }
    let mut slot = vec![Slot::Free; n];
    let mut x = vec![0.0; n];
    for i in 0..n {
        if lb[i] == ub[i] {
            slot[i] = Slot::Lower;
            x[i] = lb[i];
        } else if !start_free[i] && lb[i].is_finite() {
            slot[i] = Slot::Lower;
            x[i] = lb[i];
        } else if !start_free[i] && ub[i].is_finite() {
            slot[i] = Slot::Upper;
            x[i] = ub[i];
        } else {
            x[i] = 0.0f64.clamp(lb[i], ub[i]);
        }
    }
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&i| slot[i] == Slot::Free).collect();
        // Equality-constrained minimizer with the working set fixed.
        let mut target = x.clone();
        if !free.is_empty() {
            let m = free.len();
            let mut hff = vec![0.0; m * m];
            let mut rhs = vec![0.0; m];
            for (a, &i) in free.iter().enumerate() {
                let mut r = c[i];
                for j in 0..n {
                    if slot[j] != Slot::Free {
                        r -= h[i + j * n] * x[j];
                    }
                }
                rhs[a] = r;
                for (b, &j) in free.iter().enumerate() {
                    hff[a + b * m] = h[i + j * n];
                }
            }
            let sol = spd_solve(&hff, m, &rhs, 1)?;
            for (a, &i) in free.iter().enumerate() {
                target[i] = sol[a];
            }
        }
        // Ratio test toward the target.
        let mut step = 1.0;
        let mut blocking: Option<(usize, Slot)> = None;
        for &i in &free {
            let d = target[i] - x[i];
            if d < 0.0 && target[i] < lb[i] {
                let a = (lb[i] - x[i]) / d;
                if a < step {
                    step = a.max(0.0);
                    blocking = Some((i, Slot::Lower));
                }
            } else if d > 0.0 && target[i] > ub[i] {
                let a = (ub[i] - x[i]) / d;
                if a < step {
                    step = a.max(0.0);
                    blocking = Some((i, Slot::Upper));
                }
            }
        }
        for &i in &free {
            x[i] += step * (target[i] - x[i]);
        }
        if let Some((i, s)) = blocking {
            slot[i] = s;
            x[i] = if s == Slot::Lower { lb[i] } else { ub[i] };
            continue;
        }
        // Multipliers of the working set: gradient Hx - c.
        let grad = gradient(h, c, &x);
        let mut worst = 0.0;
        let mut release = None;
        for i in 0..n {
            if lb[i] == ub[i] {
                continue;
            }
            let v = match slot[i] {
                Slot::Lower => -grad[i],
                Slot::Upper => grad[i],
                Slot::Free => 0.0,
            };
            if v > worst {
                worst = v;
                release = Some(i);
            }
        }
        match release {
            Some(i) if worst > tol => slot[i] = Slot::Free,
            _ => {
                let kkt = kkt_residual(&grad, &x, lb, ub, &slot);
                return Ok(QpResult {
                    x,
                    iterations,
                    kkt_residual: kkt,
                    converged: true,
                });
            }
        }
    }
    let grad = gradient(h, c, &x);
    Ok(QpResult {
        kkt_residual: kkt_residual(&grad, &x, lb, ub, &slot),
        x,
        iterations,
        converged: false,
    })
}

fn gradient(h: &[f64], c: &[f64], x: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut g: Vec<f64> = c.iter().map(|v| -v).collect();
    for j in 0..n {
        if x[j] != 0.0 {
            for i in 0..n {
                g[i] += h[i + j * n] * x[j];
            }
        }
    }
    g
}

fn kkt_residual(grad: &[f64], x: &[f64], lb: &[f64], ub: &[f64], slot: &[Slot]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..x.len() {
        r = r.max((lb[i] - x[i]).max(0.0)).max((x[i] - ub[i]).max(0.0));
        if lb[i] == ub[i] {
            continue;
        }
        r = r.max(match slot[i] {
            Slot::Free => grad[i].abs(),
            Slot::Lower => (-grad[i]).max(0.0),
            Slot::Upper => grad[i].max(0.0),
        });
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpgResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// `‖P(x - ∇f) - x‖_∞` at the returned point.
    pub residual: f64,
    pub converged: bool,
}

/// Spectral projected gradient (Barzilai–Borwein steps, nonmonotone
/// Armijo search over the last 10 values) for a smooth convex objective
/// on a convex set given by its projection.
pub fn spg(
    objective: impl Fn(&[f64]) -> (f64, Vec<f64>),
    project: impl Fn(&mut [f64]),
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> SpgResult {
    const MEMORY: usize = 10;
    let mut x = x0.to_vec();
    project(&mut x);
    let (mut f, mut g) = objective(&x);
    let mut history = vec![f];
    let residual_of = |x: &[f64], g: &[f64]| {
        let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        project(&mut y);
        y.iter().zip(x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let mut residual = residual_of(&x, &g);
    let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut step = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    let mut iterations = 0;
    while residual > tol && iterations < max_iter {
        iterations += 1;
        let mut trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        project(&mut trial);
        let d: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let fmax = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let (xn, fnew, gnew) = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let (fv, gv) = objective(&xn);
            if fv <= fmax + 1e-4 * lambda * gd || lambda < 1e-20 {
                break (xn, fv, gv);
            }
            lambda *= 0.5;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-30, 1e30) } else { 1e30f64.min(step * 10.0) };
        x = xn;
        f = fnew;
        g = gnew;
        history.push(f);
        if history.len() > MEMORY {
            history.remove(0);
        }
        residual = residual_of(&x, &g);
        if ss == 0.0 {
            break;
        }
    }
    SpgResult {
        converged: residual <= tol,
        x,
        value: f,
        iterations,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qp_matches_hand_solution() {
        // min ½(x² + y²) - (x + 2y) with x <= 0.5, y >= 3: x = 0.5, y = 3.
        let h = [1.0, 0.0, 0.0, 1.0];
        let r = bound_qp(&h, &[1.0, 2.0], &[f64::NEG_INFINITY, 3.0], &[0.5, f64::INFINITY], &[true, true], 50).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 0.5).abs() < 1e-14 && (r.x[1] - 3.0).abs() < 1e-14);
        // Interior optimum.
        let h = [2.0, 1.0, 1.0, 2.0];
        let r = bound_qp(&h, &[1.0, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &[false, false], 50).unwrap();
        assert!((r.x[0] - 1.0 / 3.0).abs() < 1e-14 && r.kkt_residual < 1e-12);
    }

    #[test]
    fn spg_agrees_with_qp() {
        let h = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let c = [1.0, -2.0, 3.0];
        let qp = bound_qp(&h, &c, &[0.0; 3], &[f64::INFINITY; 3], &[true; 3], 50).unwrap();
        let obj = |x: &[f64]| {
            let hx: Vec<f64> = (0..3).map(|i| (0..3).map(|j| h[i + 3 * j] * x[j]).sum::<f64>()).collect();
            let f = 0.5 * x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>() - x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
            (f, hx.iter().zip(&c).map(|(a, b)| a - b).collect())
        };
        let r = spg(obj, |x| x.iter_mut().for_each(|v| *v = v.max(0.0)), &[0.0; 3], 1e-12, 1000);
        assert!(r.converged);
        for i in 0..3 {
            assert!((r.x[i] - qp.x[i]).abs() < 1e-10);
        }
    }
}

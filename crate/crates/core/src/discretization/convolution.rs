use crate::error::{invalid, Result};

use super::function::GridFunction;

/// `(f * u)(g) = ∫ f(g g'^{-1}) u(g') dg'`, with `f` read at the node nearest
/// to `g g'^{-1}` (zero outside a Dirichlet box, wrapped when periodic).
pub fn convolve(f: &GridFunction, u: &GridFunction) -> Result<GridFunction> {
    f.check_same_grid(u)?;
    let grid = u.grid();
    let desc = grid.descriptor();
    let n = grid.node_count();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let mut out = vec![0.0; n];
    let mut inv = vec![0.0; dim];
    let mut prod = vec![0.0; dim];
    for (k, o) in out.iter_mut().enumerate() {
        let g = grid.node(k);
        let mut acc = 0.0;
        for (kp, &uv) in u.values().iter().enumerate() {
            if uv == 0.0 {
                continue;
            }
            for (a, b) in inv.iter_mut().zip(grid.node(kp)) {
                *a = -b;
            }
            desc.multiply_coords(g, &inv, &mut prod);
            if let Some(m) = grid.nearest_node(&prod) {
                acc += f.values()[m] * uv;
            }
        }
        *o = acc * vol;
    }
    Ok(u.with_values(out))
}

/// Unnormalized bump `exp(-1 / (1 - r²))` on `r < 1`.
pub fn bump(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Mollified {
    pub function: GridFunction,
    /// Set when `ε` was below the resolvable scale and `u` was returned as is.
    pub warning: Option<String>,
}

/// Smallest `ε` accepted by [`mollify`].
pub fn min_mollifier_radius(grid: &super::Grid) -> f64 {
    2.0 * grid.max_step_norm()
}

/// `(u * τ_ε)(g) = ∫ u(g') τ_ε(g'^{-1} g) dg'` with `τ` the radial bump in the
/// homogeneous norm.
///
/// The kernel is evaluated at exact group points and normalized at each
/// output node by its Haar sum over the unbounded lattice, so constants are
/// reproduced away from a Dirichlet boundary and `u ≥ 1` on `B(g, ε)`
/// forces the result `≥ 1` at `g`.
pub fn mollify(u: &GridFunction, eps: f64) -> Result<Mollified> {
    if !(eps > 0.0) {
        return Err(invalid(format!("mollifier radius must be positive, got {eps}")));
    }
    let grid = u.grid();
    let floor = min_mollifier_radius(grid);
    if eps < floor {
        return Ok(Mollified {
            function: u.clone(),
            warning: Some(format!("epsilon {eps:e} below resolvable radius {floor:e}; input returned unchanged")),
        });
    }
    let desc = grid.descriptor();
    let dim = grid.dim();
    let n = grid.node_count();
    let mut out = vec![0.0; n];
    let mut c = vec![0.0; dim];
    for (k, o) in out.iter_mut().enumerate() {
        let g = grid.node(k);
        let bbox = desc.ball_bounding_box(g, eps);
        let lo: Vec<i64> = bbox
            .iter()
            .enumerate()
            .map(|(ax, b)| grid.lattice_pos(ax, b.0).ceil() as i64)
            .collect();
        let hi: Vec<i64> = bbox
            .iter()
            .enumerate()
            .map(|(ax, b)| grid.lattice_pos(ax, b.1).floor() as i64)
            .collect();
        let mut idx = lo.clone();
        let mut mass = 0.0;
        let mut acc = 0.0;
        'odometer: loop {
            for (ax, &i) in idx.iter().enumerate() {
                c[ax] = grid.lattice_coord(ax, i);
            }
            let w = bump(desc.distance_coords(g, &c) / eps);
            if w > 0.0 {
                mass += w;
                if let Some(m) = grid.ravel(&idx) {
                    acc += w * u.values()[m];
                }
            }
            let mut ax = 0;
            loop {
                if ax == dim {
                    break 'odometer;
                }
                idx[ax] += 1;
                if idx[ax] <= hi[ax] {
                    break;
                }
                idx[ax] = lo[ax];
                ax += 1;
            }
        }
        *o = if mass > 0.0 { acc / mass } else { u.values()[k] };
    }
    Ok(Mollified {
        function: u.with_values(out),
        warning: None,
    })
}

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff profile: 1 on `[0, 1]`, 0 on `[2, ∞)`, monotone between.
pub fn cutoff(r: f64) -> f64 {
    let a = psi(2.0 - r);
    let b = psi(r - 1.0);
    a / (a + b)
}

/// Pointwise product with `η(|g| / N)`.
pub fn truncate(u: &GridFunction, big_n: f64) -> Result<GridFunction> {
    if !(big_n > 0.0) {
        return Err(invalid(format!("truncation radius must be positive, got {big_n}")));
    }
    let grid = u.grid();
    let desc = grid.descriptor();
    let vals = u
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * cutoff(desc.hom_norm_coords(grid.node(k)) / big_n))
        .collect();
    Ok(u.with_values(vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Boundary, Grid};
    use crate::group::GroupDescriptor;
    use std::sync::Arc;

    fn r1(n: usize, a: f64, b: Boundary) -> Arc<Grid> {
        Arc::new(Grid::new(GroupDescriptor::euclidean(1).unwrap(), &[n], a, b).unwrap())
    }

    fn h1(n: usize, a: f64, b: Boundary) -> Arc<Grid> {
        Arc::new(Grid::new(GroupDescriptor::heisenberg(), &[n], a, b).unwrap())
    }

    #[test]
    fn delta_is_identity_for_convolution() {
        for g in [r1(33, 1.0, Boundary::Dirichlet), h1(7, 1.0, Boundary::Dirichlet)] {
            let d = GridFunction::delta(&g, &vec![0.0; g.dim()]).unwrap();
            let u = GridFunction::from_fn(&g, |c| c.iter().map(|x| x.sin()).sum());
            let w = convolve(&d, &u).unwrap();
            assert!(crate::linalg::rel_diff(w.values(), u.values()) < 1e-12);
        }
    }

    #[test]
    fn box_convolution_matches_double_sum() {
        let g = r1(41, 2.0, Boundary::Dirichlet);
        let f = GridFunction::from_fn(&g, |c| if c[0].abs() <= 0.5 { 1.0 } else { 0.0 });
        let w = convolve(&f, &f).unwrap();
        let h = g.spacing()[0];
        // Independent oracle: on R^1, g g'^{-1} = (k - k') h sits at index 20 + k - k'.
        for k in 0..41i64 {
            let mut s = 0.0;
            for kp in 0..41i64 {
                let m = 20 + k - kp;
                if (0..41).contains(&m) && ((k - kp) as f64 * h).abs() <= 0.5 {
                    s += f.values()[kp as usize];
                }
            }
            assert!((w.values()[k as usize] - s * h).abs() < 1e-12);
        }
        // Triangle: peak at zero, symmetric, linear decay.
        let mid = 20;
        assert!(w.values()[mid] >= w.values()[mid + 3]);
        assert!((w.values()[mid + 4] - w.values()[mid - 4]).abs() < 1e-12);
    }

    #[test]
    fn mollify_preserves_constants_on_periodic() {
        for g in [r1(64, 1.0, Boundary::Periodic), h1(10, 1.0, Boundary::Periodic)] {
            let u = GridFunction::constant(&g, 3.5);
            let eps = min_mollifier_radius(&g) * 1.5;
            let m = mollify(&u, eps).unwrap();
            assert!(m.warning.is_none());
            assert!(m.function.values().iter().all(|v| (v - 3.5).abs() < 1e-8 * 3.5));
        }
    }

    #[test]
    fn mollify_below_resolution_warns() {
        let g = r1(32, 1.0, Boundary::Dirichlet);
        let u = GridFunction::from_fn(&g, |c| c[0]);
        let m = mollify(&u, g.spacing()[0]).unwrap();
        assert!(m.warning.is_some());
        assert_eq!(m.function, u);
    }

    #[test]
    fn mollified_indicator_is_one_on_erosion() {
        let g = h1(11, 1.5, Boundary::Dirichlet);
        let desc = g.descriptor().clone();
        let r = 1.2;
        let u = GridFunction::from_fn(&g, |c| if desc.hom_norm_coords(c) < r { 1.0 } else { 0.0 });
        let eps = min_mollifier_radius(&g);
        let m = mollify(&u, eps).unwrap().function;
        for k in 0..g.node_count() {
            let inside: Vec<usize> = g.nodes_in_ball(g.node(k), eps, false);
            if inside.iter().all(|&i| u.values()[i] >= 1.0) && g.ball_inside_box(g.node(k), eps) {
                assert!(m.values()[k] >= 1.0 - 1e-12);
            }
            assert!(m.values()[k] >= 0.0);
        }
    }

    #[test]
    fn truncate_examples() {
        let g = h1(7, 1.0, Boundary::Dirichlet);
        let u = GridFunction::from_fn(&g, |c| 1.0 + c[0]);
        assert_eq!(truncate(&u, 10.0).unwrap(), u);
        let one = GridFunction::constant(&g, 1.0);
        let t = truncate(&one, 0.4).unwrap();
        for k in 0..g.node_count() {
            let r = g.descriptor().hom_norm_coords(g.node(k));
            assert_eq!(t.values()[k], cutoff(r / 0.4));
            if r <= 0.4 {
                assert_eq!(t.values()[k], 1.0);
            }
            if r >= 0.8 {
                assert_eq!(t.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn cutoff_is_monotone() {
        let mut prev = 1.0;
        for i in 0..=300 {
            let v = cutoff(i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }
}

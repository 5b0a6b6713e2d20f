use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg;

use super::function::GridFunction;
use super::grid::{Boundary, Grid};

/// Row-compressed sparse matrix with few entries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.cols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * u[c]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows.len());
        let mut out = vec![0.0; self.cols];
        for (row, &x) in self.rows.iter().zip(v) {
            for &(c, a) in row {
                out[c] += a * x;
            }
        }
        out
    }
}

fn push_entry(row: &mut Vec<(usize, f64)>, col: usize, v: f64) {
    if v == 0.0 {
        return;
    }
    match row.iter_mut().find(|e| e.0 == col) {
        Some(e) => e.1 += v,
        None => row.push((col, v)),
    }
}

/// Lattice on which the discrete horizontal derivatives live.
///
/// Periodic grids use the nodes themselves. Dirichlet grids add a ghost
/// layer at index `-1` on horizontal axes and `pad` extra layers on both
/// sides of higher-stratum axes, so that every lattice point whose
/// difference stencil touches a node owns a row.
#[derive(Debug, Clone, PartialEq)]
struct RowLattice {
    lo: Vec<i64>,
    len: Vec<usize>,
}

impl RowLattice {
    fn for_grid(grid: &Grid) -> Self {
        let n = grid.points_per_axis();
        match grid.boundary() {
            Boundary::Periodic => Self {
                lo: vec![0; n.len()],
                len: n.to_vec(),
            },
            Boundary::Dirichlet => {
                let exps = grid.descriptor().dilation_exponents();
                let h = grid.spacing();
                // Largest stratum-2 displacement of one horizontal step.
                let a = grid.half_width();
                let mut lo = Vec::new();
                let mut len = Vec::new();
                for axis in 0..n.len() {
                    if exps[axis] == 1 {
                        lo.push(-1);
                        len.push(n[axis] + 1);
                    } else {
                        let hmax = (0..n.len()).filter(|&i| exps[i] == 1).map(|i| h[i]).fold(0.0, f64::max);
                        let pad = (0.5 * a * hmax / h[axis]).ceil() as i64 + 1;
                        lo.push(-pad);
                        len.push(n[axis] + 2 * pad as usize);
                    }
                }
                Self { lo, len }
            }
        }
    }

    fn count(&self) -> usize {
        self.len.iter().product()
    }

    fn unravel(&self, mut r: usize, idx: &mut [i64]) {
        for (axis, &k) in self.len.iter().enumerate() {
            idx[axis] = (r % k) as i64 + self.lo[axis];
            r /= k;
        }
    }
}

/// Builds `D_j u(g) = (u(g · exp(h_j X_j)) - u(g)) / h_j` on the row lattice.
///
/// Horizontal shifts move by exactly one lattice step; the induced
/// displacement of higher-stratum coordinates is handled by linear
/// interpolation between lattice layers.
fn horizontal_difference(grid: &Grid, lattice: &RowLattice, j: usize) -> SparseRows {
    let dim = grid.dim();
    let desc = grid.descriptor();
    let exps = desc.dilation_exponents();
    let h = grid.spacing()[j];
    let mut idx = vec![0i64; dim];
    let mut shifted = vec![0i64; dim];
    let mut rows = Vec::with_capacity(lattice.count());
    for r in 0..lattice.count() {
        lattice.unravel(r, &mut idx);
        let g: Vec<f64> = idx.iter().enumerate().map(|(ax, &k)| grid.lattice_coord(ax, k)).collect();
        let coeffs = desc
            .horizontal_coefficients(j, &crate::group::GroupPoint::new(g.clone()))
            .expect("valid field index");
        let mut row = Vec::new();
        if let Some(c) = grid.ravel(&idx) {
            push_entry(&mut row, c, -1.0 / h);
        }
        // Target point: horizontal index + 1 on axis j, fractional elsewhere.
        let mut stencil: Vec<(Vec<i64>, f64)> = vec![(idx.clone(), 1.0)];
        stencil[0].0[j] += 1;
        for axis in 0..dim {
            if exps[axis] == 1 || coeffs[axis] == 0.0 {
                continue;
            }
            let p = grid.lattice_pos(axis, g[axis] + coeffs[axis] * h);
            let k0 = p.floor();
            let w = p - k0;
            let mut next = Vec::with_capacity(stencil.len() * 2);
            for (s, wt) in stencil {
                let mut lo = s.clone();
                lo[axis] = k0 as i64;
                let mut hi = s;
                hi[axis] = k0 as i64 + 1;
                next.push((lo, wt * (1.0 - w)));
                next.push((hi, wt * w));
            }
            stencil = next;
        }
        for (s, wt) in stencil {
            shifted.copy_from_slice(&s);
            if let Some(c) = grid.ravel(&shifted) {
                push_entry(&mut row, c, wt / h);
            }
        }
        rows.push(row);
    }
    SparseRows {
        cols: grid.node_count(),
        rows,
    }
}

/// Symmetric positive semidefinite discrete sub-Laplacian `L = sum_j D_j^T D_j`
/// together with its full eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: Arc<Grid>,
    matrix: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
    gradient: Vec<SparseRows>,
}

/// Assembles the sub-Laplacian of `grid` and diagonalizes it.
pub fn build_sublaplacian(grid: &Arc<Grid>) -> Result<SpectralOperator> {
    let n = grid.node_count();
    let lattice = RowLattice::for_grid(grid);
    let gradient: Vec<SparseRows> = (0..grid.descriptor().horizontal_dim())
        .map(|j| horizontal_difference(grid, &lattice, j))
        .collect();
    let mut matrix = vec![0.0; n * n];
    for d in &gradient {
        for row in &d.rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    matrix[a + b * n] += va * vb;
                }
            }
        }
    }
    let (mut eigenvalues, mut eigenvectors) = linalg::sym_eigen(&matrix, n)?;
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    if grid.boundary() == Boundary::Periodic {
        // The kernel is exactly the constants; pin it so that multipliers
        // like e^{-t sqrt(λ)} see λ = 0 rather than round-off.
        let c = (n as f64).sqrt().recip();
        let sign = if eigenvectors[..n].iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        eigenvalues[0] = 0.0;
        eigenvectors[..n].iter_mut().for_each(|v| *v = sign * c);
    }
    Ok(SpectralOperator {
        grid: Arc::clone(grid),
        matrix,
        eigenvalues,
        eigenvectors,
        gradient,
    })
}

impl SpectralOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn node_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Dense column-major matrix of `L`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Eigenvalues in nondecreasing order, as returned by the eigensolver.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalue `k` clamped at zero (round-off can push zero modes negative).
    pub fn lambda(&self, k: usize) -> f64 {
        self.eigenvalues[k].max(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0).max(0.0)
    }

    /// Column-major eigenvector array.
    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    /// Orthonormal (Euclidean) eigenvector `k`.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.node_count();
        &self.eigenvectors[k * n..(k + 1) * n]
    }

    /// Eigenvector `k` as a grid function.
    pub fn mode(&self, k: usize) -> GridFunction {
        GridFunction::new(Arc::clone(&self.grid), self.eigenvector(k).to_vec()).expect("length matches")
    }

    /// True when a zero eigenvalue is present by construction (periodic).
    pub fn has_zero_mode(&self) -> bool {
        self.grid.boundary() == Boundary::Periodic
    }

    /// Fails with [`Error::ZeroMode`] unless the spectrum is strictly positive.
    pub fn require_positive_spectrum(&self) -> Result<()> {
        if self.has_zero_mode() || self.lambda(0) <= 0.0 {
            Err(Error::ZeroMode)
        } else {
            Ok(())
        }
    }

    /// Evaluates `phi` on every (clamped) eigenvalue.
    pub fn multiplier(&self, phi: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        (0..self.node_count())
            .map(|k| {
                let lambda = self.lambda(k);
                let m = phi(lambda);
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(Error::SingularMultiplier { mode: k, lambda })
                }
            })
            .collect()
    }

    /// Spectral coefficients `V^T u`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        linalg::gemv(true, n, n, &self.eigenvectors, u)
    }

    /// Synthesis `V c`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        linalg::gemv(false, n, n, &self.eigenvectors, c)
    }

    /// `V diag(m) V^T u` for precomputed multiplier values `m`.
    pub fn apply_multiplier(&self, m: &[f64], u: &[f64]) -> Vec<f64> {
        let mut c = self.coefficients(u);
        for (ci, mi) in c.iter_mut().zip(m) {
            *ci *= mi;
        }
        self.synthesize(&c)
    }

    /// Applies `V diag(m) V^T` to the `ncols` columns of the column-major `x`.
    pub fn apply_multiplier_columns(&self, m: &[f64], x: &[f64], ncols: usize) -> Vec<f64> {
        let n = self.node_count();
        let mut c = linalg::gemm(true, false, n, ncols, n, &self.eigenvectors, x);
        for col in 0..ncols {
            for (k, mk) in m.iter().enumerate() {
                c[k + col * n] *= mk;
            }
        }
        linalg::gemm(false, false, n, ncols, n, &self.eigenvectors, &c)
    }

    /// Dense `V diag(m) V^T`.
    pub fn multiplier_matrix(&self, m: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        let mut scaled = self.eigenvectors.clone();
        for (k, mk) in m.iter().enumerate() {
            for v in &mut scaled[k * n..(k + 1) * n] {
                *v *= mk;
            }
        }
        linalg::gemm(false, true, n, n, n, &scaled, &self.eigenvectors)
    }

    /// Direct matrix-vector product `L u`.
    pub fn apply_matrix(&self, u: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        linalg::gemv(false, n, n, &self.matrix, u)
    }

    /// Number of rows of each discrete horizontal derivative.
    pub fn row_count(&self) -> usize {
        self.gradient[0].row_count()
    }

    pub fn horizontal_dim(&self) -> usize {
        self.gradient.len()
    }

    /// The sparse discrete field `D_j`.
    pub fn derivative(&self, j: usize) -> &SparseRows {
        &self.gradient[j]
    }

    /// Discrete horizontal gradient `(D_1 u, ..., D_{n1} u)`.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.gradient.iter().map(|d| d.apply(u)).collect()
    }

    /// Discrete divergence `-sum_j D_j^T phi_j`, the negative adjoint of
    /// [`gradient`](Self::gradient).
    pub fn divergence(&self, phi: &[Vec<f64>]) -> Result<Vec<f64>> {
        if phi.len() != self.gradient.len() || phi.iter().any(|c| c.len() != self.row_count()) {
            return Err(invalid("field does not match the operator's row lattice"));
        }
        let mut out = vec![0.0; self.node_count()];
        for (d, c) in self.gradient.iter().zip(phi) {
            for (o, v) in out.iter_mut().zip(d.apply_transpose(c)) {
                *o -= v;
            }
        }
        Ok(out)
    }

    /// `max |M - M^T| / max |M|`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.node_count();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[i + j * n] - self.matrix[j + i * n]).abs());
                scale = scale.max(self.matrix[i + j * n].abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// `‖M - V Λ V^T‖_F / ‖M‖_F`.
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = self.multiplier_matrix(&self.eigenvalues);
        let num: f64 = rebuilt.iter().zip(&self.matrix).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = self.matrix.iter().map(|a| a * a).sum();
        (num / den).sqrt()
    }
}

/// `V diag(phi(λ)) V^T u`.
pub fn apply_spectral_function(op: &SpectralOperator, phi: impl Fn(f64) -> f64, u: &GridFunction) -> Result<GridFunction> {
    if !Arc::ptr_eq(op.grid(), u.grid()) && **op.grid() != **u.grid() {
        return Err(invalid("function and operator live on different grids"));
    }
    let m = op.multiplier(phi)?;
    Ok(u.with_values(op.apply_multiplier(&m, u.values())))
}

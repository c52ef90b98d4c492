//! Nine-point stencil matrices on structured grids and a Jacobi
//! preconditioned conjugate gradient solver with fixed (Dirichlet) nodes.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Symmetric sparse matrix whose row `k` couples node `k` only to its
/// 3x3 lattice neighbourhood. Slot `3 * (dj + 1) + (di + 1)` holds the
/// coefficient of neighbour `(i + di, j + dj)`.
#[derive(Debug, Clone)]
pub struct StencilMatrix {
    nodes_x: usize,
    nodes_y: usize,
    coeffs: Vec<[f64; 9]>,
}

const CENTER: usize = 4;

impl StencilMatrix {
    pub fn zeros(mesh: &Mesh) -> Self {
        StencilMatrix {
            nodes_x: mesh.nodes_x(),
            nodes_y: mesh.nodes_y(),
            coeffs: vec![[0.0; 9]; mesh.node_count()],
        }
    }

    pub fn size(&self) -> usize {
        self.coeffs.len()
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        let (ri, rj) = (row % self.nodes_x, row / self.nodes_x);
        let (ci, cj) = (col % self.nodes_x, col / self.nodes_x);
        let di = ci as isize - ri as isize;
        let dj = cj as isize - rj as isize;
        debug_assert!(di.abs() <= 1 && dj.abs() <= 1, "nodes {row} and {col} are not neighbours");
        (3 * (dj + 1) + (di + 1)) as usize
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let s = self.slot(row, col);
        self.coeffs[row][s] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.coeffs[row][self.slot(row, col)]
    }

    pub fn diagonal(&self, row: usize) -> f64 {
        self.coeffs[row][CENTER]
    }

    /// `self += other` (same grid).
    pub fn add_matrix(&mut self, other: &StencilMatrix) {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for s in 0..9 {
                a[s] += b[s];
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> StencilMatrix {
        let mut out = self.clone();
        for row in &mut out.coeffs {
            for c in row.iter_mut() {
                *c *= factor;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.nodes_x;
        let ny = self.nodes_y;
        for j in 0..ny {
            let row0 = j * nx;
            let interior_row = j > 0 && j + 1 < ny;
            for i in 0..nx {
                let k = row0 + i;
                let c = &self.coeffs[k];
                if interior_row && i > 0 && i + 1 < nx {
                    let s = k - nx - 1;
                    let n = k + nx - 1;
                    y[k] = c[0] * x[s]
                        + c[1] * x[s + 1]
                        + c[2] * x[s + 2]
                        + c[3] * x[k - 1]
                        + c[4] * x[k]
                        + c[5] * x[k + 1]
                        + c[6] * x[n]
                        + c[7] * x[n + 1]
                        + c[8] * x[n + 2];
                } else {
                    let mut acc = 0.0;
                    for dj in -1isize..=1 {
                        let jj = j as isize + dj;
                        if jj < 0 || jj >= ny as isize {
                            continue;
                        }
                        for di in -1isize..=1 {
                            let ii = i as isize + di;
                            if ii < 0 || ii >= nx as isize {
                                continue;
                            }
                            let slot = (3 * (dj + 1) + (di + 1)) as usize;
                            acc += c[slot] * x[jj as usize * nx + ii as usize];
                        }
                    }
                    y[k] = acc;
                }
            }
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        dot(x, &y)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target `‖b - Ax‖ / ‖b‖` on the free nodes.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `50 √(unknowns)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub wall_time_ms: f64,
}

/// Residual replacements allowed after the recursion reports convergence.
const MAX_RESTARTS: usize = 4;

/// Solves `A x = rhs` on the nodes with `fixed[k] == false`, keeping
/// `x[k]` for fixed nodes as Dirichlet data. Free entries of `x` are
/// overwritten (the initial guess is zero).
pub fn solve_constrained(
    a: &StencilMatrix,
    rhs: &[f64],
    fixed: &[bool],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<SolveStats> {
    let start = Instant::now();
    let n = a.size();
    assert!(rhs.len() == n && fixed.len() == n && x.len() == n);

    for k in 0..n {
        if !fixed[k] {
            x[k] = 0.0;
        }
    }
    let free = fixed.iter().filter(|f| !**f).count();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for k in 0..n {
        r[k] = if fixed[k] { 0.0 } else { rhs[k] - r[k] };
    }
    let b_norm = dot(&r, &r).sqrt();
    if free == 0 || b_norm == 0.0 {
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let mut inv_diag = vec![0.0; n];
    for k in 0..n {
        if !fixed[k] {
            let d = a.diagonal(k);
            if d <= 0.0 {
                return Err(Error::NotElliptic(format!("non-positive diagonal {d} at free node {k}")));
            }
            inv_diag[k] = 1.0 / d;
        }
    }
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| (50.0 * (free as f64).sqrt()).ceil() as usize)
        .max(1);

    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut res;
    let mut true_res;
    let mut it = 0;
    let mut restarts = 0;
    loop {
        let mut rz = 0.0;
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
            p[k] = z[k];
            rz += r[k] * z[k];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        while it < max_iter && res > opts.rel_tol {
            a.apply(&p, &mut q);
            for k in 0..n {
                if fixed[k] {
                    q[k] = 0.0;
                }
            }
            let pq = dot(&p, &q);
            if pq <= 0.0 {
                return Err(Error::NotElliptic(format!("operator not positive definite (pAp = {pq:e})")));
            }
            let alpha = rz / pq;
            let mut rr = 0.0;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
                rr += r[k] * r[k];
            }
            it += 1;
            res = rr.sqrt() / b_norm;
            if res <= opts.rel_tol {
                break;
            }
            let mut rz_new = 0.0;
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
                rz_new += r[k] * z[k];
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        // the recursive residual drifts from the true one on large systems;
        // restart from the true residual when they disagree
        a.apply(x, &mut q);
        let mut rr = 0.0;
        for k in 0..n {
            r[k] = if fixed[k] { 0.0 } else { rhs[k] - q[k] };
            rr += r[k] * r[k];
        }
        true_res = rr.sqrt() / b_norm;
        if true_res <= 10.0 * opts.rel_tol || it >= max_iter || restarts >= MAX_RESTARTS {
            break;
        }
        restarts += 1;
    }
    let stats = SolveStats {
        iterations: it,
        relative_residual: true_res,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    if res > opts.rel_tol || true_res > 10.0 * opts.rel_tol {
        return Err(Error::NonConvergence {
            iterations: it,
            residual: true_res,
        });
    }
    Ok(stats)
}

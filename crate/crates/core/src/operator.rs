//! Five-point flux-form operators `-div(w grad u)` on a [`Grid2D`].
//!
//! Each face between neighbouring nodes carries a transmissibility `T`;
//! the operator is `(A u)_k = sum_faces T (u_k - u_neighbour)` and the
//! discrete energy is `1/2 sum_faces T (u_a - u_b)^2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

#[derive(Debug, Clone)]
pub struct FluxOperator {
    pub nx: usize,
    pub ny: usize,
    /// Face between `(i, j)` and `(i + 1, j)`, stored at `j * nx + i`.
    pub tx: Vec<f64>,
    /// Face between `(i, j)` and `(i, j + 1)`, stored at `j * (nx + 1) + i`.
    pub ty: Vec<f64>,
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl FluxOperator {
    /// Operator of `-div(y^alpha grad u)` with exact weight integrals.
    pub fn weighted(grid: &Grid2D) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let dx = grid.dx();
        let mut tx = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            let w = grid.row_weight(j) / dx;
            for i in 0..nx {
                tx[j * nx + i] = w;
            }
        }
        let mut ty = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            let t = grid.column_transmissibility(j);
            for i in 0..=nx {
                ty[j * (nx + 1) + i] = t * grid.dual_x(i);
            }
        }
        FluxOperator { nx, ny, tx, ty }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// `A u` over every node (no boundary handling).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        out.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
            for i in 0..=nx {
                let k = j * (nx + 1) + i;
                let mut acc = 0.0;
                if i > 0 {
                    acc += self.tx[j * nx + i - 1] * (u[k] - u[k - 1]);
                }
                if i < nx {
                    acc += self.tx[j * nx + i] * (u[k] - u[k + 1]);
                }
                if j > 0 {
                    acc += self.ty[(j - 1) * (nx + 1) + i] * (u[k] - u[k - nx - 1]);
                }
                if j < ny {
                    acc += self.ty[j * (nx + 1) + i] * (u[k] - u[k + nx + 1]);
                }
                row[i] = acc;
            }
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut d = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..=ny {
            for i in 0..=nx {
                let mut acc = 0.0;
                if i > 0 {
                    acc += self.tx[j * nx + i - 1];
                }
                if i < nx {
                    acc += self.tx[j * nx + i];
                }
                if j > 0 {
                    acc += self.ty[(j - 1) * (nx + 1) + i];
                }
                if j < ny {
                    acc += self.ty[j * (nx + 1) + i];
                }
                d[self.idx(i, j)] = acc;
            }
        }
        d
    }

    /// `1/2 sum_faces T (u_a - u_b)^2`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut e = 0.0;
        for j in 0..=ny {
            for i in 0..=nx {
                let k = self.idx(i, j);
                if i < nx {
                    e += self.tx[j * nx + i] * (u[k + 1] - u[k]).powi(2);
                }
                if j < ny {
                    e += self.ty[j * (nx + 1) + i] * (u[k + nx + 1] - u[k]).powi(2);
                }
            }
        }
        0.5 * e
    }

    /// Relative residual `|f - A u|` over the free nodes, scaled by `|f| + |A| |u|`.
    pub fn relative_residual(&self, u: &[f64], f: &[f64], fixed: &[bool]) -> f64 {
        let au = self.apply(u);
        let diag = self.diagonal();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..u.len() {
            if fixed[k] {
                continue;
            }
            num = num.max((f[k] - au[k]).abs());
            den = den.max(f[k].abs() + 2.0 * diag[k] * u[k].abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Solves `(A u)_k = f_k` on the free nodes, with `u` fixed where `fixed` is set.
    ///
    /// Conjugate gradients with symmetric diagonal scaling. `u` carries the
    /// Dirichlet values and the initial guess on entry.
    pub fn solve_pcg(&self, u: &mut [f64], f: &[f64], fixed: &[bool], rtol: f64, max_iter: usize) -> Result<SolveStats> {
        let n = u.len();
        let diag = self.diagonal();
        let mut au = self.apply(u);
        let mut r: Vec<f64> = (0..n).map(|k| if fixed[k] { 0.0 } else { f[k] - au[k] }).collect();
        let norm = |v: &[f64]| v.par_iter().map(|x| x * x).sum::<f64>().sqrt();
        let bnorm = {
            // right-hand side of the reduced system: f minus the Dirichlet coupling
            let mut ud = u.to_vec();
            for k in 0..n {
                if !fixed[k] {
                    ud[k] = 0.0;
                }
            }
            let ad = self.apply(&ud);
            let b: Vec<f64> = (0..n).map(|k| if fixed[k] { 0.0 } else { f[k] - ad[k] }).collect();
            norm(&b).max(f64::MIN_POSITIVE)
        };
        let mut z: Vec<f64> = (0..n).map(|k| if fixed[k] { 0.0 } else { r[k] / diag[k] }).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.par_iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut it = 0;
        let mut rel = norm(&r) / bnorm;
        while rel > rtol {
            if it >= max_iter {
                return Err(Error::NoConvergence(format!(
                    "conjugate gradients stopped at relative residual {rel:.3e} after {it} iterations"
                )));
            }
            self.apply_into(&p, &mut au);
            for k in 0..n {
                if fixed[k] {
                    au[k] = 0.0;
                }
            }
            let pap: f64 = p.par_iter().zip(&au).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::NoConvergence("operator is not positive definite on the free nodes".into()));
            }
            let a = rz / pap;
            u.par_iter_mut().zip(&p).for_each(|(x, pp)| *x += a * pp);
            r.par_iter_mut().zip(&au).for_each(|(x, q)| *x -= a * q);
            z.par_iter_mut().enumerate().for_each(|(k, zk)| *zk = if fixed[k] { 0.0 } else { r[k] / diag[k] });
            let rz_new: f64 = r.par_iter().zip(&z).map(|(a, b)| a * b).sum();
            let bcoef = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(&z).for_each(|(pp, zk)| *pp = zk + bcoef * *pp);
            it += 1;
            rel = norm(&r) / bnorm;
        }
        Ok(SolveStats { iterations: it, relative_residual: rel })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;

    #[test]
    fn kernel_contains_affine_functions() {
        let g = Grid2D::new(Params::new(0.3, 0.5, 1).unwrap(), 10, 9, 1.0, 1.0, None).unwrap();
        let op = FluxOperator::weighted(&g);
        let mut u = vec![0.0; g.len()];
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                u[g.idx(i, j)] = 0.5 + 2.0 * g.x[i] - 1.5 * g.y[j].powf(0.6);
            }
        }
        let au = op.apply(&u);
        for j in 1..g.ny {
            for i in 1..g.nx {
                assert!(au[g.idx(i, j)].abs() < 1e-12, "{}", au[g.idx(i, j)]);
            }
        }
    }

    #[test]
    fn pcg_recovers_dirichlet_solution() {
        let g = Grid2D::new(Params::new(0.6, 0.5, 1).unwrap(), 20, 16, 1.0, 1.0, None).unwrap();
        let op = FluxOperator::weighted(&g);
        let exact = |x: f64, y: f64| 1.0 + x + y.powf(1.2);
        let mut u = vec![0.0; g.len()];
        let mut fixed = vec![false; g.len()];
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                if g.is_outer(i, j) || j == 0 {
                    fixed[g.idx(i, j)] = true;
                    u[g.idx(i, j)] = exact(g.x[i], g.y[j]);
                }
            }
        }
        let f = vec![0.0; g.len()];
        let st = op.solve_pcg(&mut u, &f, &fixed, 1e-12, 5000).unwrap();
        assert!(st.relative_residual <= 1e-12);
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                assert!((u[g.idx(i, j)] - exact(g.x[i], g.y[j])).abs() < 1e-9);
            }
        }
    }
}

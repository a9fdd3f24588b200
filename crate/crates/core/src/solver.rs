//! Solver for `div(y^alpha grad u) = 0` on `[-Lx, Lx] x [0, Ly]`.
//!
//! Dirichlet data on the top and lateral sides; on `y = 0` each node
//! carries either a Dirichlet value or a prescribed weighted flux
//! `lim y^alpha du/dy`. The flux-form operator is separable, so a sine
//! transform in `x` reduces it to tridiagonal systems in `y`. Mixed bottom
//! conditions go through the Schur complement of the bottom row, a dense
//! symmetric positive definite matrix of order `nx - 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac::{frac_laplacian_profile, refined_nodes, SampledFunction, Tail};
use crate::grid::{Field, Grid2D};
use crate::operator::FluxOperator;
use crate::params::Params;
use crate::profile::{eval_halfplane, solve_profile, ProfileTol};

/// Condition attached to one node of the bottom row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BottomNode {
    Dirichlet(f64),
    /// Prescribed `lim y^alpha du/dy`.
    Flux(f64),
}

#[derive(Debug, Clone)]
pub enum BottomCondition {
    Dirichlet(Vec<f64>),
    Flux(Vec<f64>),
    Mixed(Vec<BottomNode>),
    /// One lagged sweep of the nonlinear condition: flux `gamma (u + delta)^{gamma-1}`
    /// where the previous iterate exceeds `threshold`, `u = 0` elsewhere.
    FreeBoundary { previous: Vec<f64>, delta: f64, threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinearMethod {
    /// Sine transform in `x`, tridiagonal elimination in `y`.
    Direct,
    /// Conjugate gradients with diagonal scaling.
    Pcg,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveOptions {
    pub method: LinearMethod,
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { method: LinearMethod::Direct, rtol: 1e-10, max_iter: 200_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: Field,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Precomputed sine-transform factorisation of the weighted operator.
pub struct SeparableSolver {
    pub grid: Arc<Grid2D>,
    pub op: FluxOperator,
    dst: DMatrix<f64>,
    mu: Vec<f64>,
    /// Schur complement of the bottom row, one value per sine mode.
    sigma: Vec<f64>,
    schur: DMatrix<f64>,
}

impl SeparableSolver {
    pub fn new(grid: Arc<Grid2D>) -> Self {
        let op = FluxOperator::weighted(&grid);
        let m = grid.nx - 1;
        let nx = grid.nx as f64;
        let dst = DMatrix::from_fn(m, m, |i, k| (2.0 / nx).sqrt() * (PI * ((i + 1) * (k + 1)) as f64 / nx).sin());
        let mu: Vec<f64> = (1..=m).map(|k| 2.0 - 2.0 * (PI * k as f64 / nx).cos()).collect();
        let mut solver = SeparableSolver { grid, op, dst, mu, sigma: vec![], schur: DMatrix::zeros(0, 0) };
        solver.sigma = (0..m).map(|k| solver.eliminate_from_top(k, None).0).collect();
        let d = DMatrix::from_diagonal(&DVector::from_vec(solver.sigma.clone()));
        solver.schur = &solver.dst * d * &solver.dst;
        solver
    }

    fn diag(&self, k: usize, j: usize) -> f64 {
        let g = &self.grid;
        let dx = g.dx();
        let mut d = g.row_weight(j) / dx * self.mu[k];
        if j > 0 {
            d += dx * g.column_transmissibility(j - 1);
        }
        if j < g.ny {
            d += dx * g.column_transmissibility(j);
        }
        d
    }

    fn off(&self, j: usize) -> f64 {
        -self.grid.dx() * self.grid.column_transmissibility(j)
    }

    /// Eliminates rows `ny-1, ..., 1` of mode `k`; returns the reduced
    /// bottom diagonal and, if a right-hand side is given, the reduced rhs.
    fn eliminate_from_top(&self, k: usize, rhs: Option<&[f64]>) -> (f64, f64) {
        let ny = self.grid.ny;
        let mut d = self.diag(k, ny - 1);
        let mut r = rhs.map(|v| v[ny - 1]).unwrap_or(0.0);
        for j in (0..ny - 1).rev() {
            let e = self.off(j);
            let dj = self.diag(k, j) - e * e / d;
            let rj = rhs.map(|v| v[j] - e * r / d).unwrap_or(0.0);
            d = dj;
            r = rj;
        }
        (d, r)
    }

    /// Schur complement `S` of the bottom row (interior columns).
    pub fn schur(&self) -> &DMatrix<f64> {
        &self.schur
    }

    /// Right-hand side `-A_{UD} u_D` for the nodes not on the outer boundary,
    /// rows `0..ny`, interior columns, as a `ny x (nx-1)` matrix.
    fn data_rhs(&self, u: &[f64], bottom_known: bool) -> DMatrix<f64> {
        let g = &self.grid;
        let mut ud = u.to_vec();
        for j in 0..g.ny {
            for i in 1..g.nx {
                if j > 0 || !bottom_known {
                    ud[g.idx(i, j)] = 0.0;
                }
            }
        }
        let ad = self.op.apply(&ud);
        DMatrix::from_fn(g.ny, g.nx - 1, |j, i| -ad[g.idx(i + 1, j)])
    }

    fn tridiag_solve(&self, k: usize, rhs: &[f64], first: usize) -> Vec<f64> {
        let ny = self.grid.ny;
        let n = ny - first;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for (idx, j) in (first..ny).enumerate() {
            let a = if idx > 0 { self.off(j - 1) } else { 0.0 };
            let b = self.diag(k, j);
            let up = if j + 1 < ny { self.off(j) } else { 0.0 };
            let den = b - a * prev_c;
            c[idx] = up / den;
            d[idx] = (rhs[idx] - a * prev_d) / den;
            prev_c = c[idx];
            prev_d = d[idx];
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for idx in (0..n - 1).rev() {
            x[idx] = d[idx] - c[idx] * x[idx + 1];
        }
        x
    }

    /// Solves with the bottom row prescribed; `u` holds all Dirichlet data.
    pub fn solve_bottom_dirichlet(&self, u: &mut [f64]) {
        let g = &self.grid;
        let rhs = self.data_rhs(u, true);
        let hat = rhs * &self.dst;
        let m = g.nx - 1;
        let mut sol = DMatrix::zeros(g.ny, m);
        for k in 0..m {
            let col: Vec<f64> = (1..g.ny).map(|j| hat[(j, k)]).collect();
            let x = self.tridiag_solve(k, &col, 1);
            for (idx, v) in x.into_iter().enumerate() {
                sol[(idx + 1, k)] = v;
            }
        }
        let back = sol * &self.dst;
        for j in 1..g.ny {
            for i in 1..g.nx {
                u[g.idx(i, j)] = back[(j, i - 1)];
            }
        }
    }

    /// Reduced right-hand side on the bottom row: the bottom equations read
    /// `S u_0 = rhs + src`, where `src_i = -dx * flux_i`.
    pub fn reduced_rhs(&self, u: &[f64]) -> DVector<f64> {
        let g = &self.grid;
        let rhs = self.data_rhs(u, false);
        let hat = rhs * &self.dst;
        let m = g.nx - 1;
        let red: Vec<f64> = (0..m)
            .map(|k| {
                let col: Vec<f64> = (0..g.ny).map(|j| hat[(j, k)]).collect();
                self.eliminate_from_top(k, Some(&col)).1
            })
            .collect();
        &self.dst * DVector::from_vec(red)
    }

    /// Solves with per-node bottom conditions. `u` carries the outer Dirichlet data.
    pub fn solve_mixed_nodes(&self, u: &mut [f64], nodes: &[BottomNode]) -> Result<()> {
        let g = &self.grid;
        let m = g.nx - 1;
        let dx = g.dx();
        let rt = self.reduced_rhs(u);
        let free: Vec<usize> = (0..m).filter(|&i| matches!(nodes[i + 1], BottomNode::Flux(_))).collect();
        let mut u0 = DVector::zeros(m);
        for i in 0..m {
            if let BottomNode::Dirichlet(v) = nodes[i + 1] {
                u0[i] = v;
            }
        }
        if !free.is_empty() {
            let nf = free.len();
            let mut sff = DMatrix::zeros(nf, nf);
            let mut b = DVector::zeros(nf);
            let su0 = &self.schur * &u0;
            for (a, &i) in free.iter().enumerate() {
                let BottomNode::Flux(phi) = nodes[i + 1] else { unreachable!() };
                b[a] = rt[i] - dx * phi - su0[i];
                for (c, &l) in free.iter().enumerate() {
                    sff[(a, c)] = self.schur[(i, l)];
                }
            }
            let chol = sff
                .cholesky()
                .ok_or_else(|| Error::NoConvergence("bottom Schur complement is not positive definite".into()))?;
            let x = chol.solve(&b);
            for (a, &i) in free.iter().enumerate() {
                u0[i] = x[a];
            }
        }
        for i in 0..m {
            u[g.idx(i + 1, 0)] = u0[i];
        }
        self.solve_bottom_dirichlet(u);
        Ok(())
    }
}

fn expand_bottom(grid: &Grid2D, outer: &Field, bc: &BottomCondition) -> Result<Vec<BottomNode>> {
    let n = grid.nx + 1;
    let check_len = |len: usize| {
        if len != n {
            Err(Error::InconsistentBoundary(format!("bottom condition has {len} entries, grid row has {n}")))
        } else {
            Ok(())
        }
    };
    let nodes: Vec<BottomNode> = match bc {
        BottomCondition::Dirichlet(v) => {
            check_len(v.len())?;
            v.iter().map(|&x| BottomNode::Dirichlet(x)).collect()
        }
        BottomCondition::Flux(v) => {
            check_len(v.len())?;
            v.iter().map(|&x| BottomNode::Flux(x)).collect()
        }
        BottomCondition::Mixed(v) => {
            check_len(v.len())?;
            v.clone()
        }
        BottomCondition::FreeBoundary { previous, delta, threshold } => {
            check_len(previous.len())?;
            let gamma = grid.params.gamma;
            previous
                .iter()
                .map(|&p| {
                    if p > *threshold {
                        let flux = if gamma == 0.0 { 0.0 } else { gamma * (p + delta).powf(gamma - 1.0) };
                        BottomNode::Flux(flux)
                    } else {
                        BottomNode::Dirichlet(0.0)
                    }
                })
                .collect()
        }
    };
    for (i, node) in nodes.iter().enumerate() {
        let v = match node {
            BottomNode::Dirichlet(v) | BottomNode::Flux(v) => *v,
        };
        if !v.is_finite() {
            return Err(Error::InconsistentBoundary(format!("non-finite bottom datum at node {i}")));
        }
    }
    for &i in &[0, grid.nx] {
        if let BottomNode::Dirichlet(v) = nodes[i] {
            let corner = outer.at(i, 0);
            if (v - corner).abs() > 1e-9 * (1.0 + corner.abs()) {
                return Err(Error::InconsistentBoundary(format!(
                    "bottom corner value {v} disagrees with lateral data {corner}"
                )));
            }
        }
    }
    Ok(nodes)
}

/// Solves the weighted problem with Dirichlet data from `outer` on the top
/// and sides and the bottom condition `bc`.
pub fn solve_mixed(grid: Arc<Grid2D>, outer: &Field, bc: &BottomCondition, opts: SolveOptions) -> Result<SolveReport> {
    if outer.grid.len() != grid.len() {
        return Err(Error::InconsistentBoundary("outer data lives on a different grid".into()));
    }
    let nodes = expand_bottom(&grid, outer, bc)?;
    let mut u = vec![0.0; grid.len()];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if grid.is_outer(i, j) {
                let v = outer.at(i, j);
                if !v.is_finite() {
                    return Err(Error::InconsistentBoundary(format!("non-finite boundary value at ({i}, {j})")));
                }
                u[grid.idx(i, j)] = v;
            }
        }
    }
    let dx = grid.dx();
    let mut f = vec![0.0; grid.len()];
    let mut fixed = vec![false; grid.len()];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            fixed[grid.idx(i, j)] = grid.is_outer(i, j);
        }
    }
    for i in 1..grid.nx {
        match nodes[i] {
            BottomNode::Dirichlet(v) => {
                u[grid.idx(i, 0)] = v;
                fixed[grid.idx(i, 0)] = true;
            }
            BottomNode::Flux(phi) => f[grid.idx(i, 0)] = -dx * phi,
        }
    }
    let iterations = match opts.method {
        LinearMethod::Direct => {
            let solver = SeparableSolver::new(grid.clone());
            solver.solve_mixed_nodes(&mut u, &nodes)?;
            0
        }
        LinearMethod::Pcg => {
            let op = FluxOperator::weighted(&grid);
            op.solve_pcg(&mut u, &f, &fixed, opts.rtol, opts.max_iter)?.iterations
        }
    };
    let op = FluxOperator::weighted(&grid);
    let relative_residual = op.relative_residual(&u, &f, &fixed);
    if relative_residual > opts.rtol.max(1e-10) {
        return Err(Error::NoConvergence(format!("solution residual {relative_residual:.3e} above tolerance")));
    }
    Ok(SolveReport { field: Field { grid, values: u }, relative_residual, iterations })
}

#[derive(Debug, Clone, Serialize)]
pub struct BottomFlux {
    pub x: Vec<f64>,
    /// `(u(x, y_1) - u(x, 0)) (1 - alpha) / y_1^{1 - alpha}`.
    pub one_term: Vec<f64>,
    /// Flux from the fit `u - u(x, 0) = c_1 y^{2s} + c_2 y^2` through rows 1 and 2.
    pub two_term: Vec<f64>,
    /// Nodes where the two estimates differ by more than the tolerance.
    pub flagged: Vec<usize>,
}

/// Weighted Neumann data `lim y^alpha du/dy` along the bottom row.
pub fn bottom_flux(field: &Field, tol: f64) -> BottomFlux {
    let g = &field.grid;
    let ts = 2.0 * g.params.s;
    let (y1, y2) = (g.y[1], g.y[2]);
    let (e1, e2) = (y1.powf(ts), y2.powf(ts));
    let det = e1 * y2 * y2 - e2 * y1 * y1;
    let mut out = BottomFlux { x: g.x.clone(), one_term: vec![], two_term: vec![], flagged: vec![] };
    let scale = field.max_abs().max(f64::MIN_POSITIVE) / g.ly.powf(ts);
    for i in 0..=g.nx {
        let u0 = field.at(i, 0);
        let d1 = field.at(i, 1) - u0;
        let d2 = field.at(i, 2) - u0;
        let one = d1 * ts / e1;
        let c1 = (d1 * y2 * y2 - d2 * y1 * y1) / det;
        let two = ts * c1;
        if (one - two).abs() > tol * one.abs().max(scale) {
            out.flagged.push(i);
        }
        out.one_term.push(one);
        out.two_term.push(two);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Crosscheck {
    pub x: Vec<f64>,
    pub flux: Vec<f64>,
    pub frac_laplacian: Vec<f64>,
    /// Fitted extension constant `d = -flux / frac_laplacian` per point.
    pub d_fit: Vec<f64>,
    pub d_mean: f64,
    pub d_spread: f64,
}

/// Solves the extension of `x_+^beta` on the grid and compares its bottom
/// flux with an independent quadrature of `(-Delta)^s x_+^beta`.
///
/// Dirichlet data on all sides, including the bottom, come from the
/// homogeneous extension `r^beta g(theta)`.
pub fn extension_crosscheck(params: &Params, nx: usize, ny: usize, window: (f64, f64), points: usize) -> Result<Crosscheck> {
    let (a, b) = window;
    if !(0.0 < a && a < b && b < 1.0) || points < 2 {
        return Err(Error::InvalidParameter("window must satisfy 0 < a < b < 1".into()));
    }
    let profile = solve_profile(params, ProfileTol::default())?;
    let grid = Arc::new(Grid2D::new(*params, nx, ny, 1.0, 1.0, None)?);
    let outer = Field::from_fn(grid.clone(), |x, y| eval_halfplane(&profile, 1.0, x, y).map(|v| v.u).unwrap_or(0.0));
    let beta = params.beta();
    let trace: Vec<f64> = grid.x.iter().map(|&x| x.max(0.0).powf(beta)).collect();
    let rep = solve_mixed(grid.clone(), &outer, &BottomCondition::Dirichlet(trace), SolveOptions::default())?;
    let bf = bottom_flux(&rep.field, 1e-2);
    let dx = grid.dx();
    let idx: Vec<usize> = (0..points)
        .map(|k| {
            let x = a + (b - a) * k as f64 / (points - 1) as f64;
            ((x + 1.0) / dx).round() as usize
        })
        .collect();
    let xs: Vec<f64> = idx.iter().map(|&i| grid.x[i]).collect();
    let samples = SampledFunction::from_fn(refined_nodes(-4.0, 4.0, 4000), |x| x.max(0.0).powf(beta))?
        .with_tails(Tail::zero(), Tail::Power { coef: 1.0, exponent: beta });
    let fl = frac_laplacian_profile(params.s, &samples, &xs, 1e-9)?;
    let flux: Vec<f64> = idx.iter().map(|&i| bf.two_term[i]).collect();
    let frac: Vec<f64> = fl.iter().map(|v| v.0).collect();
    let d_fit: Vec<f64> = flux.iter().zip(&frac).map(|(f, l)| -f / l).collect();
    let d_mean = d_fit.iter().sum::<f64>() / d_fit.len() as f64;
    let d_spread = d_fit.iter().fold(0.0f64, |m, d| m.max((d - d_mean).abs()));
    Ok(Crosscheck { x: xs, flux, frac_laplacian: frac, d_fit, d_mean, d_spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(s: f64, nx: usize, ny: usize) -> Arc<Grid2D> {
        Arc::new(Grid2D::new(Params::new(s, 0.5, 1).unwrap(), nx, ny, 1.0, 1.0, None).unwrap())
    }

    #[test]
    fn direct_and_pcg_agree_on_mixed_problem() {
        let g = setup(0.35, 24, 20);
        let outer = Field::from_fn(g.clone(), |x, y| 1.0 + 0.3 * (3.0 * x).sin() + y);
        let nodes: Vec<BottomNode> = g
            .x
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 || i == g.nx {
                    BottomNode::Dirichlet(outer.at(i, 0))
                } else if x < 0.0 {
                    BottomNode::Dirichlet(0.2)
                } else {
                    BottomNode::Flux(0.7 * x)
                }
            })
            .collect();
        let bc = BottomCondition::Mixed(nodes);
        let d = solve_mixed(g.clone(), &outer, &bc, SolveOptions::default()).unwrap();
        let p = solve_mixed(g, &outer, &bc, SolveOptions { method: LinearMethod::Pcg, rtol: 1e-13, ..Default::default() })
            .unwrap();
        let diff = d.field.values.iter().zip(&p.field.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-9, "{diff}");
        assert!(d.relative_residual < 1e-12);
    }

    #[test]
    fn corner_mismatch_is_rejected() {
        let g = setup(0.5, 8, 8);
        let outer = Field::from_fn(g.clone(), |_, _| 1.0);
        let bc = BottomCondition::Dirichlet(vec![0.0; g.nx + 1]);
        assert!(matches!(
            solve_mixed(g, &outer, &bc, SolveOptions::default()),
            Err(Error::InconsistentBoundary(_))
        ));
    }

    #[test]
    fn one_term_flux_exact_for_power() {
        let g = setup(0.3, 8, 8);
        let f = Field::from_fn(g.clone(), |x, y| x + 2.0 * y.powf(0.6));
        let bf = bottom_flux(&f, 1e-8);
        for v in &bf.one_term {
            assert!((v - 1.2).abs() < 1e-12);
        }
        assert!(bf.flagged.is_empty());
    }
}

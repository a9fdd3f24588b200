//! Discrete minimisation of `J(u) = 1/2 int y^alpha |grad u|^2 + int_{y=0} u^gamma`.
//!
//! The interior is eliminated exactly, which leaves an energy of the bottom
//! trace `v`:
//!
//! ```text
//! E(v) = 1/2 v'Sv - r'v + dx sum F_delta(v_i) + const,   v >= 0,
//! ```
//!
//! with `S` the Schur complement of the bottom row and
//! `F_delta(t) = (t + delta)^gamma - delta^gamma`. Since `F_delta` is
//! concave, replacing it by its tangent at the current iterate gives a
//! convex majorant; each outer step minimises that majorant under `v >= 0`
//! by a primal-dual active set method, so the energy never increases. A
//! sweep of exact one-dimensional minimisations per node follows, which
//! lets contact nodes leave the contact set when that lowers the energy.
//! `delta` is decreased along a continuation schedule.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::roots::brent;
use crate::solver::SeparableSolver;

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerConfig {
    /// First regularisation, relative to the largest boundary value.
    pub delta_start: f64,
    pub delta_factor: f64,
    /// Last regularisation, relative to the largest boundary value.
    pub delta_floor: f64,
    /// Absolute threshold separating contact from positivity; defaults to `10 * delta_floor * scale`.
    pub fb_threshold: Option<f64>,
    pub max_outer: usize,
    pub energy_rtol: f64,
    /// Cap on accepted contact-set moves after the continuation.
    pub max_contact_moves: usize,
    /// Starting bottom trace (interior nodes only); the zero-flux solution otherwise.
    #[serde(skip)]
    pub initial_trace: Option<Vec<f64>>,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            delta_start: 1.0,
            delta_factor: 0.1,
            delta_floor: 1e-9,
            fb_threshold: None,
            max_outer: 500,
            energy_rtol: 1e-13,
            max_contact_moves: 10_000,
            initial_trace: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyLogEntry {
    pub stage: usize,
    pub delta: f64,
    pub iteration: usize,
    /// Regularised energy that the iteration decreases.
    pub energy_delta: f64,
    /// Energy with the unregularised penalty.
    pub energy: f64,
    pub contact_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct Minimizer {
    pub field: Field,
    pub energy: f64,
    pub log: Vec<EnergyLogEntry>,
    /// Bottom nodes with `u <= fb_threshold`.
    pub contact: Vec<bool>,
    pub fb_threshold: f64,
    /// Sub-cell free-boundary points on the trace.
    pub fb_points: Vec<f64>,
}

fn penalty(t: f64, gamma: f64, delta: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if gamma == 0.0 {
        1.0
    } else {
        (t + delta).powf(gamma) - delta.powf(gamma)
    }
}

fn penalty_slope(t: f64, gamma: f64, delta: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma * (t.max(0.0) + delta).powf(gamma - 1.0)
    }
}

struct Reduced<'a> {
    s: &'a DMatrix<f64>,
    r: DVector<f64>,
    dx: f64,
    gamma: f64,
    /// Energy offset of the outer data; sets the roundoff scale.
    base: f64,
}

impl Reduced<'_> {
    fn energy(&self, v: &DVector<f64>, delta: f64) -> f64 {
        let quad = 0.5 * v.dot(&(self.s * v)) - self.r.dot(v);
        quad + self.dx * v.iter().map(|&t| penalty(t, self.gamma, delta)).sum::<f64>()
    }

    /// Minimises `1/2 v'Sv - r'v + dx w'v` over `v >= 0`.
    fn active_set_qp(&self, w: &DVector<f64>, start: &DVector<f64>, pinned: &[bool]) -> Result<DVector<f64>> {
        let m = self.r.len();
        let mut active: Vec<bool> = start.iter().zip(pinned).map(|(&t, &p)| p || t <= 0.0).collect();
        let rhs = &self.r - w * self.dx;
        for _ in 0..200 {
            let free: Vec<usize> = (0..m).filter(|&i| !active[i]).collect();
            let mut v = DVector::zeros(m);
            if !free.is_empty() {
                let sff = DMatrix::from_fn(free.len(), free.len(), |a, b| self.s[(free[a], free[b])]);
                let bf = DVector::from_fn(free.len(), |a, _| rhs[free[a]]);
                let chol = sff
                    .cholesky()
                    .ok_or_else(|| Error::NoConvergence("reduced energy lost positive definiteness".into()))?;
                let x = chol.solve(&bf);
                for (a, &i) in free.iter().enumerate() {
                    v[i] = x[a];
                }
            }
            let grad = self.s * &v - &rhs;
            let mut changed = false;
            for i in 0..m {
                let next = pinned[i] || if active[i] { grad[i] > 0.0 } else { v[i] < 0.0 };
                if next != active[i] {
                    changed = true;
                    active[i] = next;
                }
            }
            if !changed {
                return Ok(v.map(|t| t.max(0.0)));
            }
        }
        Err(Error::NoConvergence("active-set iteration did not settle (oscillating contact set)".into()))
    }

    /// Majorise-minimise plus coordinate sweeps at fixed `delta` until the
    /// energy settles. Pinned nodes stay at zero. `record` sees every iterate.
    fn descend(
        &self,
        v: &mut DVector<f64>,
        d: f64,
        pinned: &[bool],
        cfg: &MinimizerConfig,
        mut record: impl FnMut(usize, &DVector<f64>),
    ) -> Result<()> {
        let m = v.len();
        let mut e_prev = self.energy(v, d);
        for it in 0..cfg.max_outer {
            let noise = self.noise(v, d);
            let mut w = DVector::from_fn(m, |i, _| penalty_slope(v[i], self.gamma, d));
            // at delta = 0 the tangent is vertical on the contact set, which keeps it there
            let qp_pin: Vec<bool> = (0..m).map(|i| pinned[i] || !w[i].is_finite()).collect();
            w.iter_mut().for_each(|x| if !x.is_finite() { *x = 0.0 });
            let mut next = self.active_set_qp(&w, v, &qp_pin)?;
            if self.gamma == 0.0 {
                next.iter_mut().for_each(|t| if *t <= 0.0 { *t = 0.0 });
            }
            if self.energy(&next, d) < e_prev - noise {
                *v = next;
            }
            let tol = noise.max(cfg.energy_rtol * (self.base + e_prev).abs());
            let moves = self.coordinate_sweep(v, d, tol, pinned);
            let e = self.energy(v, d);
            if e > e_prev + 4.0 * tol {
                return Err(Error::NoConvergence(format!("energy increased from {e_prev:.17e} to {e:.17e} at delta = {d:.3e}")));
            }
            record(it, v);
            let change = (e_prev - e).abs();
            e_prev = e;
            if moves == 0 && change <= tol {
                if self.polish(v, d, pinned) {
                    record(it + 1, v);
                }
                return Ok(());
            }
        }
        Err(Error::NoConvergence(format!("outer iteration did not settle at delta = {d:.3e}")))
    }

    /// Rounding level of `energy` at `v`.
    fn noise(&self, v: &DVector<f64>, delta: f64) -> f64 {
        let quad = 0.5 * v.dot(&(self.s * v)).abs() + self.r.dot(&v.abs());
        let pen: f64 = v.iter().map(|&t| penalty(t, self.gamma, delta)).sum();
        64.0 * f64::EPSILON * (quad + self.dx * pen + self.base.abs())
    }

    /// Newton iteration for stationarity on the positive set, contact set held
    /// fixed. Kept only if it stays positive and does not raise the energy
    /// beyond rounding; returns whether `v` changed.
    fn polish(&self, v: &mut DVector<f64>, d: f64, pinned: &[bool]) -> bool {
        let free: Vec<usize> = (0..v.len()).filter(|&i| !pinned[i] && v[i] > 0.0).collect();
        if free.is_empty() {
            return false;
        }
        let g = self.gamma;
        let mut w = v.clone();
        for _ in 0..20 {
            let sv = self.s * &w;
            let grad = DVector::from_fn(free.len(), |a, _| {
                let i = free[a];
                sv[i] - self.r[i] + self.dx * if g == 0.0 { 0.0 } else { penalty_slope(w[i], g, d) }
            });
            let h = DMatrix::from_fn(free.len(), free.len(), |a, b| {
                let curv = if a == b && g != 0.0 { self.dx * g * (g - 1.0) * (w[free[a]] + d).powf(g - 2.0) } else { 0.0 };
                self.s[(free[a], free[b])] + curv
            });
            let Some(chol) = h.cholesky() else { return false };
            let step = chol.solve(&grad);
            let mut size = 0.0f64;
            for (a, &i) in free.iter().enumerate() {
                w[i] -= step[a];
                if w[i] <= 0.0 {
                    return false;
                }
                size = size.max(step[a].abs() / w[i]);
            }
            if size < 1e-15 {
                break;
            }
        }
        if self.energy(&w, d) <= self.energy(v, d) + self.noise(v, d) && w != *v {
            *v = w;
            true
        } else {
            false
        }
    }

    /// Exact global minimisation in each coordinate, sweeping left to right.
    fn coordinate_sweep(&self, v: &mut DVector<f64>, delta: f64, min_gain: f64, pinned: &[bool]) -> usize {
        let m = v.len();
        let mut sv = self.s * &*v;
        let mut moves = 0;
        for i in 0..m {
            if pinned[i] {
                continue;
            }
            let sii = self.s[(i, i)];
            let b = self.r[i] - (sv[i] - sii * v[i]);
            let phi = |t: f64| 0.5 * sii * t * t - b * t + self.dx * penalty(t, self.gamma, delta);
            let best = self.best_coordinate(sii, b, delta);
            let current = phi(v[i]);
            if phi(best) < current - min_gain {
                let dv = best - v[i];
                for k in 0..m {
                    sv[k] += self.s[(k, i)] * dv;
                }
                v[i] = best;
                moves += 1;
            }
        }
        moves
    }

    /// Global minimiser over `t >= 0` of `1/2 a t^2 - b t + dx F(t)`.
    fn best_coordinate(&self, a: f64, b: f64, delta: f64) -> f64 {
        let phi = |t: f64| 0.5 * a * t * t - b * t + self.dx * penalty(t, self.gamma, delta);
        if b <= 0.0 {
            return 0.0;
        }
        let cand = if self.gamma == 0.0 {
            b / a
        } else {
            let g = self.gamma;
            let dphi = |t: f64| a * t - b + self.dx * g * (t + delta).powf(g - 1.0);
            // dphi is convex with its minimum where phi'' = 0
            let tc = ((self.dx * g * (1.0 - g) / a).powf(1.0 / (2.0 - g)) - delta).max(0.0);
            if dphi(tc) >= 0.0 {
                return 0.0;
            }
            let hi = (b / a).max(tc) * 1.000_001 + 1e-300;
            match brent(dphi, tc, hi, 1e-15 * hi, 200) {
                Ok(t) => t,
                Err(_) => return 0.0,
            }
        };
        if phi(cand) < phi(0.0) {
            cand
        } else {
            0.0
        }
    }
}

/// Free-boundary points where the trace crosses `threshold`, by linear interpolation.
pub fn free_boundary_points(x: &[f64], trace: &[f64], threshold: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for i in 0..trace.len() - 1 {
        let (a, b) = (trace[i] - threshold, trace[i + 1] - threshold);
        if (a <= 0.0) != (b <= 0.0) {
            let t = a / (a - b);
            pts.push(x[i] + t * (x[i + 1] - x[i]));
        }
    }
    pts
}

/// Minimises the discrete energy with Dirichlet data from `data` on the top and sides.
pub fn minimize_energy(grid: Arc<Grid2D>, data: &Field, cfg: &MinimizerConfig) -> Result<Minimizer> {
    if data.grid.len() != grid.len() {
        return Err(Error::InconsistentBoundary("boundary data lives on a different grid".into()));
    }
    if !(cfg.delta_factor > 0.0 && cfg.delta_factor < 1.0) || !(cfg.delta_floor > 0.0) || cfg.delta_start < cfg.delta_floor {
        return Err(Error::InvalidParameter("delta schedule must decrease from delta_start to delta_floor > 0".into()));
    }
    let g = grid.params.gamma;
    let mut u = vec![0.0; grid.len()];
    let mut scale = 0.0f64;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if grid.is_outer(i, j) {
                let v = data.at(i, j);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InconsistentBoundary(format!("boundary value {v} at ({i}, {j}) is not a finite non-negative number")));
                }
                u[grid.idx(i, j)] = v;
                scale = scale.max(v);
            }
        }
    }
    let solver = SeparableSolver::new(grid.clone());
    let dx = grid.dx();
    let m = grid.nx - 1;
    // energy of the outer data alone: quadratic part with v = 0 plus the corner penalties
    let mut u0 = u.clone();
    solver.solve_bottom_dirichlet(&mut u0);
    let base = solver.op.energy(&u0)
        + 0.5 * dx * (penalty(u[0], g, 0.0) + penalty(u[grid.idx(grid.nx, 0)], g, 0.0));
    let red = Reduced { s: solver.schur(), r: solver.reduced_rhs(&u), dx, gamma: g, base };
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let floor = cfg.delta_floor * scale;
    let threshold = cfg.fb_threshold.unwrap_or(10.0 * floor);

    // start from the solution with zero flux on the bottom, which is positive
    let mut v = if let Some(init) = &cfg.initial_trace {
        if init.len() != m {
            return Err(Error::InvalidParameter(format!("initial trace has {} entries, expected {m}", init.len())));
        }
        DVector::from_fn(m, |i, _| init[i].max(0.0))
    } else {
        let chol = red.s.clone().cholesky().ok_or_else(|| Error::NoConvergence("Schur complement is singular".into()))?;
        chol.solve(&red.r).map(|t| t.max(0.0))
    };
    let mut log = Vec::new();
    let mut delta = cfg.delta_start * scale;
    let mut stage = 0;
    let free = vec![false; m];
    loop {
        let d = delta.max(floor);
        red.descend(&mut v, d, &free, cfg, |it, vv: &DVector<f64>| {
            log.push(EnergyLogEntry {
                stage,
                delta: d,
                iteration: it,
                energy_delta: base + red.energy(vv, d),
                energy: base + red.energy(vv, 0.0),
                contact_nodes: vv.iter().filter(|&&t| t <= threshold).count(),
            })
        })?;
        if d <= floor {
            break;
        }
        delta *= cfg.delta_factor;
        stage += 1;
    }

    // The regularised penalty undercharges each positive node by about
    // delta^gamma, which is not small when gamma is; the rest runs on the
    // unregularised energy. Local minima of the concave penalty differ mostly
    // in where the contact set ends, so each end of the contact set is moved
    // by one node at a time and the move kept whenever the re-minimised
    // energy is lower.
    stage += 1;
    red.descend(&mut v, 0.0, &free, cfg, |it, vv: &DVector<f64>| {
        let e = base + red.energy(vv, 0.0);
        log.push(EnergyLogEntry {
            stage,
            delta: 0.0,
            iteration: it,
            energy_delta: e,
            energy: e,
            contact_nodes: vv.iter().filter(|&&t| t <= threshold).count(),
        })
    })?;
    stage += 1;
    let mut e_cur = red.energy(&v, 0.0);
    for moves in 0..cfg.max_contact_moves {
        let min_gain = cfg.energy_rtol * (base + e_cur).abs().max(f64::MIN_POSITIVE);
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..m {
            let pos = |k: usize| v[k] > threshold;
            let edge = (i > 0 && pos(i - 1) != pos(i)) || (i + 1 < m && pos(i + 1) != pos(i));
            if !edge {
                continue;
            }
            let mut w = v.clone();
            if pos(i) {
                w[i] = 0.0;
                let mut pin = free.clone();
                pin[i] = true;
                red.descend(&mut w, 0.0, &pin, cfg, |_, _| ())?;
            } else {
                // copy the positive neighbour so the trial starts past the barrier
                let nb = if i > 0 && pos(i - 1) { v[i - 1] } else { v[i + 1] };
                w[i] = nb;
            }
            red.descend(&mut w, 0.0, &free, cfg, |_, _| ())?;
            let e = red.energy(&w, 0.0);
            if e < e_cur - min_gain && best.as_ref().map_or(true, |b| e < b.0) {
                best = Some((e, w));
            }
        }
        let Some((e, w)) = best else { break };
        v = w;
        e_cur = e;
        log.push(EnergyLogEntry {
            stage,
            delta: 0.0,
            iteration: moves,
            energy_delta: base + e,
            energy: base + e,
            contact_nodes: v.iter().filter(|&&t| t <= threshold).count(),
        });
    }
    for i in 0..m {
        u[grid.idx(i + 1, 0)] = v[i];
    }
    solver.solve_bottom_dirichlet(&mut u);
    let field = Field { grid: grid.clone(), values: u };
    let contact: Vec<bool> = field.trace().iter().map(|&t| t <= threshold).collect();
    let fb_points = free_boundary_points(&grid.x, field.trace(), threshold);
    let energy = discrete_energy(&field, 0.0);
    Ok(Minimizer { field, energy, log, contact, fb_threshold: threshold, fb_points })
}

/// Discrete `J` of a grid field: flux-form Dirichlet energy plus the trapezoidal
/// penalty on the bottom row, regularised by `delta`.
pub fn discrete_energy(field: &Field, delta: f64) -> f64 {
    let g = &field.grid;
    let op = crate::operator::FluxOperator::weighted(g);
    let gamma = g.params.gamma;
    let pen: f64 = (0..=g.nx).map(|i| g.dual_x(i) * penalty(field.at(i, 0), gamma, delta)).sum();
    op.energy(&field.values) + pen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;

    fn grid(s: f64, gamma: f64, n: usize) -> Arc<Grid2D> {
        Arc::new(Grid2D::new(Params::new(s, gamma, 1).unwrap(), n, n / 2, 1.0, 1.0, None).unwrap())
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = grid(0.5, 0.5, 16);
        let data = Field::zeros(g.clone());
        let m = minimize_energy(g, &data, &MinimizerConfig::default()).unwrap();
        assert!(m.field.max_abs() == 0.0);
        assert_eq!(m.energy, 0.0);
        assert!(m.contact.iter().all(|&c| c));
    }

    #[test]
    fn energy_log_is_monotone_within_stages() {
        let g = grid(0.4, 0.5, 32);
        let data = Field::from_fn(g.clone(), |x, y| (0.5 + x).max(0.0) * 0.3 + y);
        let m = minimize_energy(g, &data, &MinimizerConfig::default()).unwrap();
        for w in m.log.windows(2) {
            if w[0].stage == w[1].stage {
                assert!(w[1].energy_delta <= w[0].energy_delta + 1e-12 * w[0].energy_delta.abs());
            }
        }
        assert!(m.field.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn reduced_energy_matches_full_energy() {
        let g = grid(0.5, 0.5, 16);
        let data = Field::from_fn(g.clone(), |x, y| 1.0 + x + y);
        let m = minimize_energy(g, &data, &MinimizerConfig::default()).unwrap();
        let last = m.log.last().unwrap();
        assert!((last.energy - m.energy).abs() < 1e-10 * m.energy.abs());
    }

    #[test]
    fn cavitation_runs() {
        let g = grid(0.5, 0.0, 32);
        let data = Field::from_fn(g.clone(), |x, y| (x + 0.2).max(0.0) + 0.5 * y);
        let m = minimize_energy(g, &data, &MinimizerConfig::default()).unwrap();
        assert!(!m.fb_points.is_empty());
        for w in m.log.windows(2) {
            assert!(w[1].energy_delta <= w[0].energy_delta + 1e-12);
        }
    }
}

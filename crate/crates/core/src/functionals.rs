//! Weiss and Monneau functionals, homogeneity defects and blow-up sequences.
//!
//! For a field `u` on the upper half-plane and a centre `x0` on `{y = 0}`:
//!
//! ```text
//! W(R) = R^{-kv} [ int_{B_R+} y^a |grad u|^2 + 2 int_{B_R} u^gamma ] - beta R^{-ks} int_{dB_R+} y^a u^2
//! M(R) = R^{-ks} int_{dB_R+} y^a (u - p)^2
//! D(R) = int_{dB_R+} y^a (u_nu - beta u / R)^2,     W'(R) = 2 R^{-kv} D(R)
//! ```
//!
//! Grid fields are integrated cell by cell in the variables `(x, y^{2s})`,
//! where the interpolant is bilinear, with cells cut by the circle handled by
//! quadrature across the exact chord. Surface integrals use a composite rule
//! in the polar angle whose end panels are Gauss-Jacobi with the `sin^alpha`
//! endpoint behaviour built into the weight.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::params::{penalty_power, Params};
use crate::profile::HalfPlane;
use crate::quad::{gauss_jacobi, gauss_legendre, integrate, QuadTol, Rule};

/// Something the functionals can be evaluated on: a grid field or an analytic solution.
pub trait FieldLike: Sync {
    fn params(&self) -> Params;
    /// Value at `(x, y)`; NaN outside the domain.
    fn value(&self, x: f64, y: f64) -> f64;
    /// `(u_x, u_y)`; NaN outside the domain.
    fn gradient(&self, x: f64, y: f64) -> (f64, f64);
    /// `int_{B_R+(x0)} y^alpha |grad u|^2`.
    fn dirichlet(&self, x0: f64, r: f64) -> Result<f64>;
    /// `int_{x0-R}^{x0+R} u(x, 0)^gamma dx`.
    fn penalty(&self, x0: f64, r: f64) -> Result<f64>;
    /// Mesh size of a discrete field, `None` for analytic ones.
    fn mesh_size(&self) -> Option<f64>;
    /// Errors unless the closed half-ball of radius `r` about `x0` lies in the domain.
    fn admissible(&self, x0: f64, r: f64) -> Result<()>;
}

const CELL_NODES: usize = 12;

impl FieldLike for Field {
    fn params(&self) -> Params {
        self.grid.params
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        Field::value(self, x, y).unwrap_or(f64::NAN)
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        Field::gradient(self, x, y).unwrap_or((f64::NAN, f64::NAN))
    }

    fn mesh_size(&self) -> Option<f64> {
        Some(self.grid.h())
    }

    fn admissible(&self, x0: f64, r: f64) -> Result<()> {
        let g = &self.grid;
        let slack = 1e-12 * g.lx;
        if !(r > 0.0) || x0 - r < -g.lx - slack || x0 + r > g.lx + slack || r > g.ly + slack {
            return Err(Error::Domain(format!("ball of radius {r} about x = {x0} leaves the grid")));
        }
        Ok(())
    }

    fn dirichlet(&self, x0: f64, r: f64) -> Result<f64> {
        self.admissible(x0, r)?;
        let g = &self.grid;
        let ts = 2.0 * g.params.s;
        let p = 1.0 / g.params.s - 2.0;
        let legendre = gauss_legendre(CELL_NODES);
        let bottom = gauss_jacobi(CELL_NODES, 0.0, p)?;
        let eta: Vec<f64> = g.y.iter().map(|y| y.powf(ts)).collect();
        let dx = g.dx();
        let rows: Vec<f64> = (0..g.ny)
            .into_par_iter()
            .map(|j| {
                let (e0, e1) = (eta[j], eta[j + 1]);
                let de = e1 - e0;
                if g.y[j] >= r {
                    return 0.0;
                }
                let mut acc = 0.0;
                for i in 0..g.nx {
                    let (xa, xb) = (g.x[i], g.x[i + 1]);
                    let near_x = x0.clamp(xa, xb) - x0;
                    if near_x.hypot(g.y[j]) >= r {
                        continue;
                    }
                    let far_x = (xa - x0).abs().max((xb - x0).abs());
                    let v00 = self.at(i, j);
                    let b = self.at(i + 1, j) - v00;
                    let c = self.at(i, j + 1) - v00;
                    let d = self.at(i + 1, j + 1) - self.at(i, j + 1) - b;
                    if far_x.hypot(g.y[j + 1]) <= r {
                        acc += cell_energy_full(b, c, d, dx, e0, de, ts, p, &legendre);
                    } else {
                        acc += cell_energy_clipped(b, c, d, (xa, dx), (e0, de), ts, p, (x0, r), if j == 0 { Some(&bottom) } else { None }, &legendre);
                    }
                }
                acc
            })
            .collect();
        Ok(rows.iter().sum())
    }

    fn penalty(&self, x0: f64, r: f64) -> Result<f64> {
        self.admissible(x0, r)?;
        let g = &self.grid;
        let gamma = g.params.gamma;
        let tr = self.trace();
        let (lo, hi) = (x0 - r, x0 + r);
        let mut acc = 0.0;
        for i in 0..g.nx {
            let (xa, xb) = (g.x[i], g.x[i + 1]);
            let (a, b) = (lo.max(xa), hi.min(xb));
            if b <= a {
                continue;
            }
            let lin = |x: f64| tr[i] + (tr[i + 1] - tr[i]) * (x - xa) / (xb - xa);
            acc += segment_power_integral(lin(a), lin(b), b - a, gamma);
        }
        Ok(acc)
    }
}

/// `int_0^L (linear from va to vb)_+^gamma`, with `t^0 = 1_{t > 0}`.
fn segment_power_integral(va: f64, vb: f64, len: f64, gamma: f64) -> f64 {
    if va <= 0.0 && vb <= 0.0 {
        return 0.0;
    }
    // restrict to the positive part
    let (lo, hi, l) = if va <= 0.0 {
        (0.0, vb, len * vb / (vb - va))
    } else if vb <= 0.0 {
        (0.0, va, len * va / (va - vb))
    } else {
        (va.min(vb), va.max(vb), len)
    };
    if gamma == 0.0 {
        return l;
    }
    if hi - lo <= 1e-14 * hi {
        return l * hi.powf(gamma);
    }
    l * (hi.powf(gamma + 1.0) - lo.powf(gamma + 1.0)) / ((gamma + 1.0) * (hi - lo))
}

/// Energy of the interpolant `v00 + b xi + c eta + d xi eta` over a whole cell.
#[allow(clippy::too_many_arguments)]
fn cell_energy_full(b: f64, c: f64, d: f64, dx: f64, e0: f64, de: f64, ts: f64, p: f64, legendre: &Rule) -> f64 {
    let term_eta = ts * dx / de * (c * c + c * d + d * d / 3.0);
    // int (b + d t)^2 Y^p dY over the cell, with Y = e0 + de t
    let ix = if e0 == 0.0 {
        de.powf(p + 1.0) * (b * b / (p + 1.0) + 2.0 * b * d / (p + 2.0) + d * d / (p + 3.0))
    } else {
        de * legendre.apply(0.0, 1.0, |t| (b + d * t).powi(2) * (e0 + de * t).powf(p))
    };
    term_eta + ix / (ts * dx)
}

/// Energy of the interpolant over the part of a cell inside the ball.
#[allow(clippy::too_many_arguments)]
fn cell_energy_clipped(
    b: f64,
    c: f64,
    d: f64,
    (xa, dx): (f64, f64),
    (e0, de): (f64, f64),
    ts: f64,
    p: f64,
    (x0, r): (f64, f64),
    bottom: Option<&Rule>,
    legendre: &Rule,
) -> f64 {
    // chord of the ball at height Y, as a fraction interval of the cell
    let chord = |t: f64| -> Option<(f64, f64)> {
        let y = (e0 + de * t).powf(1.0 / ts);
        if y >= r {
            return None;
        }
        let half = (r * r - y * y).sqrt();
        let lo = ((x0 - half - xa) / dx).clamp(0.0, 1.0);
        let hi = ((x0 + half - xa) / dx).clamp(0.0, 1.0);
        (hi > lo).then_some((lo, hi))
    };
    let eta_part = |t: f64| -> f64 {
        chord(t).map_or(0.0, |(l, h)| {
            c * c * (h - l) + c * d * (h * h - l * l) + d * d * (h * h * h - l * l * l) / 3.0
        })
    };
    let x_part = |t: f64| -> f64 { chord(t).map_or(0.0, |(l, h)| (b + d * t).powi(2) * (h - l)) };
    let term_eta = ts * dx / de * legendre.apply(0.0, 1.0, eta_part);
    let ix = match bottom {
        // weight (1 + u)^p on [-1, 1] with Y = de (1 + u) / 2
        Some(rule) => {
            let scale = (0.5 * de).powf(p + 1.0);
            rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * x_part(0.5 * (1.0 + u))).sum::<f64>() * scale
        }
        None => de * legendre.apply(0.0, 1.0, |t| x_part(t) * (e0 + de * t).powf(p)),
    };
    term_eta + ix / (ts * dx)
}

/// The half-plane solution `A r^beta g(theta)` translated to have its free boundary at `center`.
#[derive(Debug, Clone)]
pub struct HalfPlaneField {
    pub hp: HalfPlane,
    pub center: f64,
}

impl HalfPlaneField {
    pub fn new(hp: HalfPlane, center: f64) -> Self {
        HalfPlaneField { hp, center }
    }

    /// `int_0^pi sin^alpha (beta^2 g^2 + g'^2) d theta`.
    fn angular_energy(&self) -> Result<f64> {
        let prof = &self.hp.profile;
        let (alpha, beta) = (prof.params.alpha(), prof.beta());
        let integrand = |th: f64| {
            let (g, dg) = prof.eval(th);
            let dg = if dg.is_finite() { dg } else { 0.0 };
            th.sin().powf(alpha) * (beta * beta * g * g + dg * dg)
        };
        // theta = pi tau^k / (tau^k + (1 - tau)^k) flattens the endpoint powers
        let k = 4.0;
        let map = |tau: f64| {
            let (a, b) = (tau.powf(k), (1.0 - tau).powf(k));
            let th = PI * a / (a + b);
            let dth = PI * k * (tau * (1.0 - tau)).powf(k - 1.0) / (a + b).powi(2);
            (th, dth)
        };
        let f = |tau: f64| {
            if tau <= 0.0 || tau >= 1.0 {
                return 0.0;
            }
            let (th, dth) = map(tau);
            if th <= 0.0 || th >= PI {
                return 0.0;
            }
            integrand(th) * dth
        };
        Ok(integrate(f, 0.0, 1.0, QuadTol::new(1e-13, 1e-10))?.value)
    }
}

impl FieldLike for HalfPlaneField {
    fn params(&self) -> Params {
        self.hp.profile.params
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        if y < 0.0 {
            return f64::NAN;
        }
        self.hp.value(x - self.center, y)
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        self.hp.eval(x - self.center, y).map(|v| (v.ut, v.uz)).unwrap_or((f64::NAN, f64::NAN))
    }

    fn mesh_size(&self) -> Option<f64> {
        None
    }

    fn admissible(&self, _x0: f64, r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("radius {r} must be positive")));
        }
        Ok(())
    }

    fn dirichlet(&self, x0: f64, r: f64) -> Result<f64> {
        self.admissible(x0, r)?;
        if x0 != self.center {
            return Err(Error::Domain("analytic volume integrals need the ball centred on the free boundary".into()));
        }
        let p = self.params();
        let e = p.alpha() + 2.0 * p.beta();
        Ok(self.hp.amplitude.powi(2) * r.powf(e) / e * self.angular_energy()?)
    }

    fn penalty(&self, x0: f64, r: f64) -> Result<f64> {
        self.admissible(x0, r)?;
        let p = self.params();
        let (a, gamma) = (self.hp.amplitude, p.gamma);
        let q = p.beta() * gamma + 1.0;
        let hi = (x0 + r - self.center).max(0.0);
        let lo = (x0 - r - self.center).max(0.0);
        Ok(penalty_power(a, gamma) * (hi.powf(q) - lo.powf(q)) / q)
    }
}

/// Composite rule for `int_0^pi sin^alpha(theta) phi(theta) d theta`.
#[derive(Debug, Clone)]
pub struct SurfaceRule {
    pub theta: Vec<f64>,
    /// Weights including the factor `sin^alpha`.
    pub weight: Vec<f64>,
}

impl SurfaceRule {
    pub fn new(alpha: f64, panels: usize, order: usize) -> Result<Self> {
        let panels = panels.max(2);
        let hp = PI / panels as f64;
        let leg = gauss_legendre(order);
        let end = gauss_jacobi(order, 0.0, alpha)?;
        let mut theta = Vec::with_capacity(panels * order);
        let mut weight = Vec::with_capacity(panels * order);
        // left end: sin^a = th^a (sin th / th)^a with th = hp (1 + u) / 2
        for (&u, &w) in end.nodes.iter().zip(&end.weights) {
            let th = 0.5 * hp * (1.0 + u);
            theta.push(th);
            weight.push(w * (0.5 * hp).powf(alpha + 1.0) * (th.sin() / th).powf(alpha));
        }
        for k in 1..panels - 1 {
            let (a, b) = (k as f64 * hp, (k + 1) as f64 * hp);
            for (&u, &w) in leg.nodes.iter().zip(&leg.weights) {
                let th = 0.5 * (a + b) + 0.5 * hp * u;
                theta.push(th);
                weight.push(0.5 * hp * w * th.sin().powf(alpha));
            }
        }
        for (&u, &w) in end.nodes.iter().zip(&end.weights).rev() {
            let d = 0.5 * hp * (1.0 + u);
            theta.push(PI - d);
            weight.push(w * (0.5 * hp).powf(alpha + 1.0) * (d.sin() / d).powf(alpha));
        }
        Ok(SurfaceRule { theta, weight })
    }

    /// Rule fine enough for a field with mesh size `h` on a circle of radius `r`.
    pub fn for_radius(alpha: f64, r: f64, h: Option<f64>) -> Result<Self> {
        let panels = match h {
            Some(h) => ((PI * r / h).ceil() as usize).clamp(16, 4096),
            None => 32,
        };
        SurfaceRule::new(alpha, panels, 6)
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.theta.iter().zip(&self.weight).map(|(&t, &w)| w * f(t)).sum()
    }
}

fn surface_integral<F: Fn(f64, f64) -> f64>(u: &dyn FieldLike, x0: f64, r: f64, f: F) -> Result<f64> {
    let alpha = u.params().alpha();
    let rule = SurfaceRule::for_radius(alpha, r, u.mesh_size())?;
    let v = rule.apply(|th| f(x0 + r * th.cos(), r * th.sin()));
    if !v.is_finite() {
        return Err(Error::Domain(format!("surface integral at R = {r} is not finite")));
    }
    Ok(r.powf(1.0 + alpha) * v)
}

/// The pieces of `W(R)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeissValue {
    pub r: f64,
    pub dirichlet: f64,
    pub penalty: f64,
    pub surface: f64,
    pub w: f64,
}

pub fn weiss(u: &dyn FieldLike, x0: f64, r: f64) -> Result<WeissValue> {
    u.admissible(x0, r)?;
    let p = u.params();
    let ex = p.derived();
    let dirichlet = u.dirichlet(x0, r)?;
    let penalty = u.penalty(x0, r)?;
    let surface = surface_integral(u, x0, r, |x, y| u.value(x, y).powi(2))?;
    let w = r.powf(-ex.kappa_vol) * (dirichlet + 2.0 * penalty) - p.beta() * r.powf(-ex.kappa_surf) * surface;
    Ok(WeissValue { r, dirichlet, penalty, surface, w })
}

/// `int_{dB_R+} y^alpha (u_nu - beta u / R)^2`.
pub fn homogeneity_defect(u: &dyn FieldLike, x0: f64, r: f64) -> Result<f64> {
    u.admissible(x0, r)?;
    let beta = u.params().beta();
    surface_integral(u, x0, r, |x, y| {
        let (ux, uy) = u.gradient(x, y);
        let (c, s) = ((x - x0) / r, y / r);
        // the y-derivative may be infinite on y = 0 where sin(theta) = 0
        let un = c * ux + if s == 0.0 { 0.0 } else { s * uy };
        (un - beta * u.value(x, y) / r).powi(2)
    })
}

/// `R^{-ks} int_{dB_R+} y^alpha (u - p)^2`, the weight included.
pub fn monneau(u: &dyn FieldLike, p: &dyn FieldLike, x0: f64, r: f64) -> Result<f64> {
    u.admissible(x0, r)?;
    p.admissible(x0, r)?;
    let ks = u.params().derived().kappa_surf;
    let v = surface_integral(u, x0, r, |x, y| (u.value(x, y) - p.value(x, y)).powi(2))?;
    Ok(r.powf(-ks) * v)
}

/// A radius sweep of `W` or `M` with monotonicity bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalSweep {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `(v_{k+1} - v_k) / (R_{k+1} - R_k)`.
    pub forward_differences: Vec<f64>,
    /// Allowed negative slack per interval.
    pub tol_mono: Vec<f64>,
    pub violation_count: usize,
    /// Homogeneity defect at each radius (Weiss sweeps only).
    pub defects: Vec<f64>,
    /// Slope over `2 R^{-kv} D` at the interval midpoint (Weiss sweeps only).
    pub defect_ratio: Vec<f64>,
}

/// Default constant in the monotonicity slack, twice the constant `c` in the
/// measured error `|W_h(R) - W(R)| ~ c (h / R) E(R)` of sampled half-plane
/// solutions and of minimisers with half-plane data.
pub const DEFAULT_C_MONO: f64 = 0.05;

/// Slack on the slope over `[r0, r1]`: `c h E / (r0 r1)`, with `E` the scaled
/// Dirichlet energy `R^{-kv} int y^alpha |grad u|^2` at `r0`. This is the
/// difference quotient of an error of size `c (h / R) E`. Analytic fields use
/// `h = 1e-8 r0`.
pub fn default_tolerance(c: f64, h: Option<f64>, r0: f64, r1: f64, scaled_energy: f64) -> f64 {
    let h = h.unwrap_or(1e-8 * r0);
    c * h * scaled_energy.abs() / (r0 * r1)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("sweep radii must be at least two, strictly increasing".into()));
    }
    Ok(())
}

pub fn weiss_sweep(u: &dyn FieldLike, x0: f64, radii: &[f64], c_mono: f64) -> Result<FunctionalSweep> {
    check_radii(radii)?;
    let kv = u.params().derived().kappa_vol;
    let vals: Vec<WeissValue> = radii.par_iter().map(|&r| weiss(u, x0, r)).collect::<Result<_>>()?;
    let defects: Vec<f64> = radii.par_iter().map(|&r| homogeneity_defect(u, x0, r)).collect::<Result<_>>()?;
    let mids: Vec<f64> = radii.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mid_defects: Vec<f64> = mids.par_iter().map(|&r| homogeneity_defect(u, x0, r)).collect::<Result<_>>()?;
    let mut fd = Vec::new();
    let mut tol = Vec::new();
    let mut ratio = Vec::new();
    let mut violations = 0;
    for k in 0..radii.len() - 1 {
        let (r0, r1) = (radii[k], radii[k + 1]);
        let slope = (vals[k + 1].w - vals[k].w) / (r1 - r0);
        let t = default_tolerance(c_mono, u.mesh_size(), r0, r1, r0.powf(-kv) * vals[k].dirichlet);
        if slope < -t {
            violations += 1;
        }
        let predicted = 2.0 * mids[k].powf(-kv) * mid_defects[k];
        ratio.push(if predicted > 0.0 { slope / predicted } else { f64::NAN });
        fd.push(slope);
        tol.push(t);
    }
    Ok(FunctionalSweep {
        radii: radii.to_vec(),
        values: vals.iter().map(|v| v.w).collect(),
        forward_differences: fd,
        tol_mono: tol,
        violation_count: violations,
        defects,
        defect_ratio: ratio,
    })
}

pub fn monneau_sweep(u: &dyn FieldLike, p: &dyn FieldLike, x0: f64, radii: &[f64], c_mono: f64) -> Result<FunctionalSweep> {
    check_radii(radii)?;
    let values: Vec<f64> = radii.par_iter().map(|&r| monneau(u, p, x0, r)).collect::<Result<_>>()?;
    let scale: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let ks = u.params().derived().kappa_surf;
            surface_integral(u, x0, r, |x, y| u.value(x, y).powi(2)).map(|v| v * r.powf(-ks))
        })
        .collect::<Result<_>>()?;
    let mut fd = Vec::new();
    let mut tol = Vec::new();
    let mut violations = 0;
    for k in 0..radii.len() - 1 {
        let (r0, r1) = (radii[k], radii[k + 1]);
        let slope = (values[k + 1] - values[k]) / (r1 - r0);
        let t = default_tolerance(c_mono, u.mesh_size(), r0, r1, scale[k]);
        if slope < -t {
            violations += 1;
        }
        fd.push(slope);
        tol.push(t);
    }
    Ok(FunctionalSweep {
        radii: radii.to_vec(),
        values,
        forward_differences: fd,
        tol_mono: tol,
        violation_count: violations,
        defects: Vec::new(),
        defect_ratio: Vec::new(),
    })
}

/// Samples `u_r(X) = u(x0 + r X) / r^beta` on `target`.
pub fn rescale_onto(u: &dyn FieldLike, x0: f64, r: f64, target: Arc<Grid2D>) -> Result<Field> {
    let beta = u.params().beta();
    let scale = r.powf(-beta);
    let f = Field::from_fn(target, |x, y| u.value(x0 + r * x, r * y) * scale);
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("rescaling by {r} about {x0} leaves the source domain")));
    }
    Ok(f)
}

/// `u_r(X) = u(x0 + r X) / r^beta` as an evaluable field.
pub struct Rescaled<'a> {
    pub u: &'a dyn FieldLike,
    pub x0: f64,
    pub r: f64,
}

impl Rescaled<'_> {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.x0 + self.r * x, self.r * y)
    }
}

impl FieldLike for Rescaled<'_> {
    fn params(&self) -> Params {
        self.u.params()
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        let (a, b) = self.map(x, y);
        self.u.value(a, b) * self.r.powf(-self.params().beta())
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (a, b) = self.map(x, y);
        let (gx, gy) = self.u.gradient(a, b);
        let k = self.r.powf(1.0 - self.params().beta());
        (gx * k, gy * k)
    }

    fn dirichlet(&self, x0: f64, r: f64) -> Result<f64> {
        let p = self.params();
        let e = p.alpha() + 2.0 * p.beta() + p.n as f64 - 1.0;
        Ok(self.u.dirichlet(self.x0 + self.r * x0, self.r * r)? * self.r.powf(-e))
    }

    fn penalty(&self, x0: f64, r: f64) -> Result<f64> {
        let p = self.params();
        let e = p.beta() * p.gamma + p.n as f64;
        Ok(self.u.penalty(self.x0 + self.r * x0, self.r * r)? * self.r.powf(-e))
    }

    fn mesh_size(&self) -> Option<f64> {
        self.u.mesh_size().map(|h| h / self.r)
    }

    fn admissible(&self, x0: f64, r: f64) -> Result<()> {
        self.u.admissible(self.x0 + self.r * x0, self.r * r)
    }
}

/// Result of a blow-up sequence at a free-boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    /// Radii actually used, decreasing.
    pub radii: Vec<f64>,
    /// Radii dropped because they are below the resolvable scale.
    pub truncated: Vec<f64>,
    /// Weighted `L^2(dB_1+)` distance between successive rescalings.
    pub distances: Vec<f64>,
    /// Orientation `+1` (positive set to the right) or `-1` of the best-fit half-plane solution.
    pub normal: f64,
    /// Relative weighted `L^2(dB_1+)` distance of the last rescaling from the best fit.
    pub fit_distance: f64,
    #[serde(skip)]
    pub fields: Vec<Field>,
}

/// Rescalings `u(x0 + r X) / r^beta` for decreasing `r`, compared on the unit half-circle.
///
/// Radii below two mesh widths are dropped and listed in `truncated`.
/// `reference` supplies the half-plane solution to fit the last rescaling against.
pub fn blowup_sequence(
    u: &dyn FieldLike,
    x0: f64,
    radii: &[f64],
    reference: &HalfPlane,
    target: Option<Arc<Grid2D>>,
) -> Result<BlowupReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("blow-up radii must be strictly decreasing".into()));
    }
    let (mut used, mut truncated) = (Vec::new(), Vec::new());
    for &r in radii {
        u.admissible(x0, r)?;
        match u.mesh_size() {
            Some(h) if r < 2.0 * h => truncated.push(r),
            _ => used.push(r),
        }
    }
    if used.is_empty() {
        return Err(Error::Domain("every blow-up radius is below the resolvable scale".into()));
    }
    let alpha = u.params().alpha();
    let rule = SurfaceRule::new(alpha, 64, 6)?;
    let samples: Vec<Vec<f64>> = used
        .iter()
        .map(|&r| {
            let v = Rescaled { u, x0, r };
            rule.theta.iter().map(|&th| v.value(th.cos(), th.sin())).collect()
        })
        .collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&rule.weight).map(|((x, y), w)| w * (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let distances = samples.windows(2).map(|w| dist(&w[0], &w[1])).collect();
    let last = samples.last().expect("non-empty");
    let norm = dist(last, &vec![0.0; last.len()]).max(f64::MIN_POSITIVE);
    let mut best = (f64::INFINITY, 1.0);
    for sign in [1.0, -1.0] {
        let p: Vec<f64> = rule.theta.iter().map(|&th| reference.value(sign * th.cos(), th.sin())).collect();
        let d = dist(last, &p) / norm;
        if d < best.0 {
            best = (d, sign);
        }
    }
    let fields = match target {
        Some(t) => used.iter().map(|&r| rescale_onto(u, x0, r, t.clone())).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(BlowupReport { radii: used, truncated, distances, normal: best.1, fit_distance: best.0, fields })
}

/// Best-fit normal of a blow-up in two tangential dimensions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalFit {
    /// Angle of the fitted normal in the tangential plane, radians in `[0, 2 pi)`.
    pub angle: f64,
    /// Relative weighted `L^2` distance on the unit half-sphere.
    pub distance: f64,
}

/// Fits `A U(x . nu, y)` to `u(x0 + r X) / r^beta` on the unit half-sphere of
/// `R^2 x (0, inf)`, for a field given as a closure `u(x1, x2, y)`.
pub fn fit_normal_2d<F: Fn(f64, f64, f64) -> f64 + Sync>(
    u: F,
    x0: (f64, f64),
    r: f64,
    reference: &HalfPlane,
) -> Result<NormalFit> {
    let params = reference.profile.params;
    let (alpha, beta) = (params.alpha(), params.beta());
    // on the unit sphere d sigma = dy d psi; weight y^alpha on [0, 1]
    let jac = gauss_jacobi(24, 0.0, alpha)?;
    let m_psi = 96;
    let mut pts = Vec::new();
    for (&t, &w) in jac.nodes.iter().zip(&jac.weights) {
        let y = 0.5 * (1.0 + t);
        let wy = w * 0.5f64.powf(alpha + 1.0);
        let rho = (1.0 - y * y).max(0.0).sqrt();
        for k in 0..m_psi {
            let psi = 2.0 * PI * k as f64 / m_psi as f64;
            let (x1, x2) = (rho * psi.cos(), rho * psi.sin());
            let val = u(x0.0 + r * x1, x0.1 + r * x2, r * y) * r.powf(-beta);
            pts.push((x1, x2, y, wy * 2.0 * PI / m_psi as f64, val));
        }
    }
    let norm: f64 = pts.iter().map(|p| p.3 * p.4 * p.4).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let misfit = |ang: f64| -> f64 {
        let (c, s) = (ang.cos(), ang.sin());
        pts.par_iter().map(|p| p.3 * (p.4 - reference.value(p.0 * c + p.1 * s, p.2)).powi(2)).sum::<f64>().sqrt()
    };
    let coarse = 360;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..coarse {
        let a = 2.0 * PI * k as f64 / coarse as f64;
        let m = misfit(a);
        if m < best.0 {
            best = (m, a);
        }
    }
    // golden-section refinement within one coarse step
    let step = 2.0 * PI / coarse as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - gr * (b - a), a + gr * (b - a));
    let (mut fc, mut fd) = (misfit(c), misfit(d));
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = misfit(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = misfit(d);
        }
    }
    let ang = (0.5 * (a + b)).rem_euclid(2.0 * PI);
    Ok(NormalFit { angle: ang, distance: misfit(ang) / norm })
}

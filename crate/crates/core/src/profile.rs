//! Angular profile of the homogeneous half-plane solution.
//!
//! In polar coordinates `(t, z) = r (cos theta, sin theta)` of the upper
//! half-plane, the homogeneous solution is `U = A r^beta g(theta)` where
//!
//! ```text
//! g'' + alpha cot(theta) g' + beta (alpha + beta) g = 0,   g(0) = 1,  g(pi) = 0.
//! ```
//!
//! Both endpoints are regular singular points with indicial exponents `0`
//! and `2s`. The profile is obtained by shooting on the coefficient `c` of
//! the singular branch `g ~ 1 + c theta^{2s}` at `theta = 0`. Near the
//! endpoints `g` is represented by Frobenius series, in the interior by
//! quintic Hermite interpolation of the integrated values.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate_to, OdeTol};
use crate::params::Params;

const SERIES_TERMS: usize = 24;

/// Truncated Frobenius series `sum_k a_k theta^{2k + r}`.
#[derive(Debug, Clone, Serialize)]
pub struct Frobenius {
    pub r: f64,
    pub coeffs: Vec<f64>,
}

fn theta_cot_series(terms: usize) -> Vec<f64> {
    // cos x / (sin x / x) as a power series in x^2
    let mut cosc = vec![0.0; terms];
    let mut sinc = vec![0.0; terms];
    let mut fact = 1.0f64;
    for k in 0..terms {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        if k > 0 {
            fact *= (2 * k - 1) as f64 * (2 * k) as f64;
        }
        cosc[k] = sign / fact;
        sinc[k] = sign / (fact * (2 * k + 1) as f64);
    }
    let mut q = vec![0.0; terms];
    for k in 0..terms {
        let mut acc = cosc[k];
        for j in 1..=k {
            acc -= sinc[j] * q[k - j];
        }
        q[k] = acc / sinc[0];
    }
    q
}

impl Frobenius {
    fn new(alpha: f64, lambda: f64, r: f64, terms: usize) -> Self {
        let q = theta_cot_series(terms);
        let mut a = vec![0.0; terms];
        a[0] = 1.0;
        for m in 1..terms {
            let e = 2.0 * m as f64 + r;
            let mut rhs = -lambda * a[m - 1];
            for k in 1..=m {
                rhs -= alpha * q[k] * (e - 2.0 * k as f64) * a[m - k];
            }
            a[m] = rhs / (e * (e - 1.0 + alpha));
        }
        Frobenius { r, coeffs: a }
    }

    /// Value and first derivative at `x > 0`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let x2 = x * x;
        let mut v = 0.0;
        let mut d = 0.0;
        let mut p = 1.0;
        for (k, a) in self.coeffs.iter().enumerate() {
            let e = 2.0 * k as f64 + self.r;
            v += a * p;
            d += a * e * p;
            p *= x2;
        }
        if self.r == 0.0 {
            (v, d / x)
        } else {
            let xr = x.powf(self.r);
            (v * xr, d * xr / x)
        }
    }
}

/// Numerical controls for [`solve_profile`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileTol {
    /// Offset from the endpoints where the series hands over to the integrator.
    pub endpoint_offset: f64,
    /// Radius around each endpoint inside which `g` is evaluated by series.
    pub series_radius: f64,
    /// Number of uniform interior nodes.
    pub interior_nodes: usize,
    pub ode_rtol: f64,
    /// Target for `|g(pi)|`.
    pub shoot_tol: f64,
}

impl Default for ProfileTol {
    fn default() -> Self {
        ProfileTol {
            endpoint_offset: 1e-6,
            series_radius: 0.05,
            interior_nodes: 2000,
            ode_rtol: 1e-12,
            shoot_tol: 1e-12,
        }
    }
}

/// Solution of the angular boundary value problem.
#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    pub params: Params,
    /// Increasing grid on `(0, pi)`, geometrically refined towards both ends.
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// `g'(theta) sin(theta)^alpha` at the nodes.
    pub weighted_slope: Vec<f64>,
    /// Coefficient `c` of `theta^{2s}` in `g = 1 + c theta^{2s} + ...`.
    pub coefficient_c: f64,
    /// `lim_{theta -> 0} g' sin^alpha = 2 s c`.
    pub slope_at_zero: f64,
    /// Residual `g(pi)` left by the shooting.
    pub g_at_pi: f64,
    /// Coefficient of `(pi - theta)^{2s}` at the far endpoint.
    pub coefficient_pi: f64,
    pub shooting_iterations: usize,
    regular: Frobenius,
    singular: Frobenius,
    tol: ProfileTol,
    interior_start: usize,
    interior_h: f64,
}

struct Shot {
    a: f64,
    b: f64,
}

fn ode_rhs(alpha: f64, lambda: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |th: f64, y: &[f64; 2]| {
        let w = th.sin().powf(alpha);
        [y[1] / w, -lambda * w * y[0]]
    }
}

fn node_grid(tol: &ProfileTol) -> (Vec<f64>, usize, f64) {
    let e0 = tol.endpoint_offset;
    let rl = tol.series_radius;
    let ratio = 1.2f64;
    let mut left = vec![e0];
    while left.last().unwrap() * ratio < rl {
        let x = left.last().unwrap() * ratio;
        left.push(x);
    }
    let m = tol.interior_nodes.max(8);
    let h = (PI - 2.0 * rl) / m as f64;
    let mut theta = left.clone();
    let start = theta.len();
    for k in 0..=m {
        theta.push(rl + k as f64 * h);
    }
    for x in left.iter().rev() {
        theta.push(PI - x);
    }
    (theta, start, h)
}

/// Solves the angular problem by shooting on `c`.
///
/// The shooting residual `g(pi)` is affine in `c`. The root is bracketed
/// by expansion, narrowed by bisection and finished by one secant step.
pub fn solve_profile(params: &Params, tol: ProfileTol) -> Result<Profile> {
    let alpha = params.alpha();
    let beta = params.beta();
    let lambda = beta * (alpha + beta);
    let two_s = 2.0 * params.s;
    let regular = Frobenius::new(alpha, lambda, 0.0, SERIES_TERMS);
    let singular = Frobenius::new(alpha, lambda, two_s, SERIES_TERMS);
    let (theta, interior_start, interior_h) = node_grid(&tol);
    let e0 = tol.endpoint_offset;
    let f = ode_rhs(alpha, lambda);
    let ode_tol = OdeTol { rtol: tol.ode_rtol, atol: tol.ode_rtol * 1e-2, ..Default::default() };

    let initial = |c: f64| -> [f64; 2] {
        let (r0, r1) = regular.eval(e0);
        let (s0, s1) = singular.eval(e0);
        let w = e0.sin().powf(alpha);
        [r0 + c * s0, (r1 + c * s1) * w]
    };
    let match_far = |y: [f64; 2]| -> Shot {
        let (r0, r1) = regular.eval(e0);
        let (s0, s1) = singular.eval(e0);
        let w = e0.sin().powf(alpha);
        // g = a R + b S,  p = -(a R' + b S') w
        let m11 = r0;
        let m12 = s0;
        let m21 = -r1 * w;
        let m22 = -s1 * w;
        let det = m11 * m22 - m12 * m21;
        Shot { a: (y[0] * m22 - m12 * y[1]) / det, b: (m11 * y[1] - m21 * y[0]) / det }
    };
    let shoot = |c: f64| -> Result<Shot> {
        let (y, _) = integrate_to(&f, e0, initial(c), PI - e0, 1e-8, ode_tol)?;
        Ok(match_far(y))
    };

    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut flo = shoot(lo)?.a;
    let mut fhi = shoot(hi)?.a;
    let mut expand = 0;
    while flo.signum() == fhi.signum() {
        expand += 1;
        if expand > 40 {
            return Err(Error::NoConvergence("could not bracket the shooting parameter".into()));
        }
        lo *= 2.0;
        hi *= 2.0;
        flo = shoot(lo)?.a;
        fhi = shoot(hi)?.a;
    }
    let mut iterations = 0;
    while (hi - lo).abs() > 1e-13 * (1.0 + lo.abs().max(hi.abs())) && iterations < 200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let fm = shoot(mid)?.a;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            flo = 0.0;
            fhi = 0.0;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let c = if fhi != flo { lo - flo * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };

    // final pass recording the nodes
    let mut g = Vec::with_capacity(theta.len());
    let mut p = Vec::with_capacity(theta.len());
    let mut y = initial(c);
    g.push(y[0]);
    p.push(y[1]);
    for k in 1..theta.len() {
        let h0 = (theta[k] - theta[k - 1]) * 0.5;
        let (yn, _) = integrate_to(&f, theta[k - 1], y, theta[k], h0, ode_tol)?;
        y = yn;
        g.push(y[0]);
        p.push(y[1]);
    }
    let far = match_far(y);
    if far.a.abs() > tol.shoot_tol.max(1e-10) {
        return Err(Error::NoConvergence(format!(
            "shooting residual g(pi) = {:.3e} exceeds tolerance",
            far.a
        )));
    }
    let dg: Vec<f64> = theta.iter().zip(&p).map(|(&t, &pp)| pp / t.sin().powf(alpha)).collect();
    Ok(Profile {
        params: *params,
        theta,
        g,
        dg,
        weighted_slope: p,
        coefficient_c: c,
        slope_at_zero: two_s * c,
        g_at_pi: far.a,
        coefficient_pi: far.b,
        shooting_iterations: iterations + 2 * (expand + 1),
        regular,
        singular,
        tol,
        interior_start,
        interior_h,
    })
}

fn hermite5(t: f64, h: f64, v0: [f64; 3], v1: [f64; 3]) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * t3 - t4 + 0.5 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
    let d3 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
    let v = h0 * v0[0] + h1 * h * v0[1] + h2 * h * h * v0[2] + h3 * v1[0] + h4 * h * v1[1] + h5 * h * h * v1[2];
    let d = (d0 * v0[0] + d1 * h * v0[1] + d2 * h * h * v0[2] + d3 * v1[0] + d4 * h * v1[1] + d5 * h * h * v1[2]) / h;
    (v, d)
}

impl Profile {
    pub fn beta(&self) -> f64 {
        self.params.beta()
    }

    fn second_derivative(&self, th: f64, g: f64, dg: f64) -> f64 {
        let alpha = self.params.alpha();
        let beta = self.params.beta();
        -alpha * th.cos() / th.sin() * dg - beta * (alpha + beta) * g
    }

    /// `(g(theta), g'(theta))` for `theta` in `[0, pi]`.
    ///
    /// At `theta = 0` the derivative is the one-sided limit, which is
    /// infinite when `s < 1/2`.
    pub fn eval(&self, th: f64) -> (f64, f64) {
        let rl = self.tol.series_radius;
        if th <= rl {
            if th <= 0.0 {
                let d = if self.params.s < 0.5 {
                    f64::INFINITY * self.coefficient_c.signum()
                } else if self.params.s == 0.5 {
                    self.coefficient_c
                } else {
                    0.0
                };
                return (1.0, d);
            }
            let (r0, r1) = self.regular.eval(th);
            let (s0, s1) = self.singular.eval(th);
            return (r0 + self.coefficient_c * s0, r1 + self.coefficient_c * s1);
        }
        if th >= PI - rl {
            let u = PI - th;
            if u <= 0.0 {
                // the boundary condition, rather than the shooting residual
                return (0.0, f64::NAN);
            }
            let (r0, r1) = self.regular.eval(u);
            let (s0, s1) = self.singular.eval(u);
            return (self.g_at_pi * r0 + self.coefficient_pi * s0, -(self.g_at_pi * r1 + self.coefficient_pi * s1));
        }
        let m = self.tol.interior_nodes.max(8);
        let k = (((th - rl) / self.interior_h).floor() as usize).min(m - 1);
        let i0 = self.interior_start + k;
        let t0 = self.theta[i0];
        let t1 = self.theta[i0 + 1];
        let v0 = [self.g[i0], self.dg[i0], self.second_derivative(t0, self.g[i0], self.dg[i0])];
        let v1 = [self.g[i0 + 1], self.dg[i0 + 1], self.second_derivative(t1, self.g[i0 + 1], self.dg[i0 + 1])];
        let h = t1 - t0;
        hermite5((th - t0) / h, h, v0, v1)
    }

    /// Mismatch between the endpoint series and the interpolant at the series radius.
    pub fn junction_mismatch(&self) -> f64 {
        let rl = self.tol.series_radius;
        let mut worst = 0.0f64;
        for &(th, series) in &[(rl, true), (PI - rl, false)] {
            let i = if series { self.interior_start } else { self.interior_start + self.tol.interior_nodes.max(8) };
            let (gs, _) = self.eval(th);
            worst = worst.max((gs - self.g[i]).abs());
        }
        worst
    }

    /// Maximum over interior check points of the ODE residual computed from
    /// fourth-order central differences of the evaluated profile.
    pub fn ode_residual(&self, checks: usize) -> f64 {
        let alpha = self.params.alpha();
        let beta = self.params.beta();
        let h = 1e-3;
        let mut worst = 0.0f64;
        for k in 1..checks {
            let th = 0.1 + (PI - 0.2) * k as f64 / checks as f64;
            let g = |x: f64| self.eval(x).0;
            let (gm2, gm1, g0, gp1, gp2) = (g(th - 2.0 * h), g(th - h), g(th), g(th + h), g(th + 2.0 * h));
            let d1 = (gm2 - 8.0 * gm1 + 8.0 * gp1 - gp2) / (12.0 * h);
            let d2 = (-gm2 + 16.0 * gm1 - 30.0 * g0 + 16.0 * gp1 - gp2) / (12.0 * h * h);
            let res = d2 + alpha * th.cos() / th.sin() * d1 + beta * (alpha + beta) * g0;
            worst = worst.max(res.abs());
        }
        worst
    }

    /// Angle where `g` attains its maximum; `g` is decreasing on `[theta_peak, pi]`.
    pub fn peak_angle(&self) -> f64 {
        if self.slope_at_zero <= 0.0 {
            return 0.0;
        }
        for k in 1..self.theta.len() {
            if self.weighted_slope[k] <= 0.0 {
                let (t0, t1) = (self.theta[k - 1], self.theta[k]);
                let (p0, p1) = (self.weighted_slope[k - 1], self.weighted_slope[k]);
                return t0 + (t1 - t0) * p0 / (p0 - p1);
            }
        }
        PI
    }
}

/// Values of `U`, `dU/dt` and `dU/dz` requested from [`eval_halfplane`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlaneValue {
    pub u: f64,
    pub ut: f64,
    pub uz: f64,
}

/// `U(t, z) = A r^beta g(theta)` with `A` = `amplitude`.
pub fn eval_halfplane(profile: &Profile, amplitude: f64, t: f64, z: f64) -> Result<HalfPlaneValue> {
    if z < 0.0 || !t.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("point ({t}, {z}) is outside the closed upper half-plane")));
    }
    let r = t.hypot(z);
    if r == 0.0 {
        return Ok(HalfPlaneValue { u: 0.0, ut: 0.0, uz: 0.0 });
    }
    let beta = profile.beta();
    if z == 0.0 && t < 0.0 {
        let uz = if profile.params.s >= 0.5 { 0.0 } else { f64::INFINITY };
        return Ok(HalfPlaneValue { u: 0.0, ut: 0.0, uz: amplitude * uz });
    }
    let th = z.atan2(t);
    let (g, dg) = profile.eval(th);
    let (sn, cs) = th.sin_cos();
    let rb = amplitude * r.powf(beta);
    let rb1 = rb / r;
    // g' sin(theta) vanishes at theta = 0 even where g' is infinite
    let dgs = if sn == 0.0 { 0.0 } else { dg * sn };
    let dgc = if sn == 0.0 && !dg.is_finite() { f64::NAN } else { dg * cs };
    Ok(HalfPlaneValue { u: rb * g, ut: rb1 * (beta * g * cs - dgs), uz: rb1 * (beta * g * sn + dgc) })
}

/// The homogeneous half-plane solution with a fixed amplitude.
#[derive(Debug, Clone)]
pub struct HalfPlane {
    pub profile: Arc<Profile>,
    pub amplitude: f64,
}

impl HalfPlane {
    pub fn new(profile: Arc<Profile>, amplitude: f64) -> Self {
        HalfPlane { profile, amplitude }
    }

    /// Amplitude `A` for which `A^{2-gamma} lambda* = gamma`, i.e. the
    /// flux condition `lim z^alpha dU/dz = gamma U^{gamma-1}` holds on `{t > 0}`.
    pub fn flux_consistent_amplitude(profile: &Profile) -> Result<f64> {
        let g = profile.params.gamma;
        if g == 0.0 || profile.slope_at_zero <= 0.0 {
            return Err(Error::Domain("flux-consistent amplitude needs gamma > 0".into()));
        }
        Ok((g / profile.slope_at_zero).powf(1.0 / (2.0 - g)))
    }

    pub fn value(&self, t: f64, z: f64) -> f64 {
        eval_halfplane(&self.profile, self.amplitude, t, z.abs()).map(|v| v.u).unwrap_or(f64::NAN)
    }

    pub fn eval(&self, t: f64, z: f64) -> Result<HalfPlaneValue> {
        eval_halfplane(&self.profile, self.amplitude, t, z)
    }
}

/// `f` and `F` on the profile grid, with the endpoint limits attached.
#[derive(Debug, Clone, Serialize)]
pub struct AngularFunctions {
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    #[serde(rename = "F")]
    pub big_f: Vec<f64>,
    pub min_f: f64,
    pub sup_abs_big_f: f64,
}

/// `f(theta) = beta cos(theta) - g'(theta) sin(theta) / g(theta)`, so that `dU/dt = f U / r`.
pub fn f_at(profile: &Profile, th: f64) -> Result<f64> {
    let beta = profile.beta();
    let (g, dg) = profile.eval(th);
    if g <= 0.0 {
        return Err(Error::Domain(format!("g vanishes at theta = {th}")));
    }
    let sn = th.sin();
    let dgs = if sn == 0.0 { 0.0 } else { dg * sn };
    Ok(beta * th.cos() - dgs / g)
}

/// `F(theta) = (beta^2 - beta) cos^2 + beta (1 - alpha - beta) sin^2 + (2 - 2 beta - alpha) sin cos g'/g`.
pub fn big_f_at(profile: &Profile, th: f64) -> Result<f64> {
    let beta = profile.beta();
    let alpha = profile.params.alpha();
    let (g, dg) = profile.eval(th);
    if g <= 0.0 {
        return Err(Error::Domain(format!("g vanishes at theta = {th}")));
    }
    let (sn, cs) = th.sin_cos();
    let dgs = if sn == 0.0 { 0.0 } else { dg * sn };
    Ok((beta * beta - beta) * cs * cs + beta * (1.0 - alpha - beta) * sn * sn + (2.0 - 2.0 * beta - alpha) * cs * dgs / g)
}

/// Endpoint limits of `f` and `F`.
pub fn angular_limits(params: &Params) -> ((f64, f64), (f64, f64)) {
    let b = params.beta();
    let ts = 2.0 * params.s;
    ((b, ts - b), (b * b - b, (ts - b) * (ts - b + 1.0)))
}

pub fn compute_angular(profile: &Profile) -> Result<AngularFunctions> {
    let ((f0, fpi), (bf0, bfpi)) = angular_limits(&profile.params);
    let mut theta = vec![0.0];
    let mut f = vec![f0];
    let mut big_f = vec![bf0];
    for &th in &profile.theta {
        theta.push(th);
        f.push(f_at(profile, th)?);
        big_f.push(big_f_at(profile, th)?);
    }
    theta.push(PI);
    f.push(fpi);
    big_f.push(bfpi);
    let min_f = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup_abs_big_f = big_f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(AngularFunctions { theta, f, big_f, min_f, sup_abs_big_f })
}

/// One sample `(t, tau, z)` for [`check_ratio_bound`].
#[derive(Debug, Clone, Copy)]
pub struct RatioSample {
    pub t: f64,
    pub tau: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    /// Largest `U(tau/r, z/r) / U(t/r, z/r)` over the samples.
    pub max_ratio: f64,
    /// Samples in the decreasing range of `g` where the ordering `g(theta_1) <= g(theta_2)` fails.
    pub ordering_violations: Vec<usize>,
    pub peak_angle: f64,
}

/// Ratio bound behind the comparison argument near the negative axis.
///
/// Each sample is rescaled by `r = |(t, z)|`; the rescaled `(tau, z)` must
/// lie in the annulus `1/2 <= |.| <= 3/2` and `tau <= t`.
pub fn check_ratio_bound(profile: &Profile, samples: &[RatioSample]) -> Result<RatioReport> {
    let peak = profile.peak_angle();
    let mut max_ratio = 0.0f64;
    let mut ordering_violations = Vec::new();
    for (i, smp) in samples.iter().enumerate() {
        let r = smp.t.hypot(smp.z);
        if r == 0.0 || smp.z <= 0.0 {
            return Err(Error::Domain(format!("sample {i} must have z > 0")));
        }
        if smp.tau > smp.t {
            return Err(Error::Domain(format!("sample {i} has tau > t")));
        }
        let (tt, zz, ta) = (smp.t / r, smp.z / r, smp.tau / r);
        let rho = ta.hypot(zz);
        if !(0.5..=1.5).contains(&rho) {
            return Err(Error::Domain(format!("sample {i} leaves the annulus (|.| = {rho})")));
        }
        let num = eval_halfplane(profile, 1.0, ta, zz)?.u;
        let den = eval_halfplane(profile, 1.0, tt, zz)?.u;
        if den <= 0.0 {
            return Err(Error::Domain(format!("sample {i} has U = 0 in the denominator")));
        }
        max_ratio = max_ratio.max(num / den);
        let th1 = zz.atan2(ta);
        let th2 = zz.atan2(tt);
        if th2 >= peak && th1 >= th2 {
            let g1 = profile.eval(th1).0;
            let g2 = profile.eval(th2).0;
            if g1 > g2 + 1e-12 {
                ordering_violations.push(i);
            }
        }
    }
    Ok(RatioReport { max_ratio, ordering_violations, peak_angle: peak })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(beta: f64, th: f64) -> f64 {
        (beta * (PI - th)).sin() / (beta * PI).sin()
    }

    #[test]
    fn cot_series() {
        let q = theta_cot_series(6);
        let expected = [1.0, -1.0 / 3.0, -1.0 / 45.0, -2.0 / 945.0, -1.0 / 4725.0, -2.0 / 93555.0];
        for (a, b) in q.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn half_case_matches_closed_form() {
        let p = Params::new(0.5, 0.5, 1).unwrap();
        let prof = solve_profile(&p, ProfileTol::default()).unwrap();
        let beta = p.beta();
        for k in 0..=200 {
            let th = PI * k as f64 / 200.0;
            let g = prof.eval(th.min(PI - 1e-14)).0;
            assert!((g - closed_form(beta, th)).abs() < 1e-9, "theta {th}: {g}");
        }
        let lam = -beta / (beta * PI).tan();
        assert!((prof.slope_at_zero - lam).abs() < 1e-9);
    }

    #[test]
    fn series_and_interior_agree() {
        for &(s, g) in &[(0.3, 0.1), (0.7, 0.5), (0.5, 0.0)] {
            let p = Params::new(s, g, 1).unwrap();
            let prof = solve_profile(&p, ProfileTol::default()).unwrap();
            assert!(prof.junction_mismatch() < 1e-9, "s={s} g={g}: {}", prof.junction_mismatch());
        }
    }

    #[test]
    fn cavitation_has_no_singular_part_at_half() {
        let p = Params::new(0.5, 0.0, 1).unwrap();
        let prof = solve_profile(&p, ProfileTol::default()).unwrap();
        assert!(prof.coefficient_c.abs() < 1e-9);
        assert!((prof.eval(1.0).0 - 0.5f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn halfplane_origin_and_domain() {
        let p = Params::new(0.5, 0.5, 1).unwrap();
        let prof = solve_profile(&p, ProfileTol::default()).unwrap();
        let v = eval_halfplane(&prof, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(v.u, 0.0);
        assert!(eval_halfplane(&prof, 1.0, 0.0, -1.0).is_err());
        // trace is t_+^beta
        let w = eval_halfplane(&prof, 1.0, 0.3, 0.0).unwrap();
        assert!((w.u - 0.3f64.powf(p.beta())).abs() < 1e-14);
        assert_eq!(eval_halfplane(&prof, 1.0, -0.3, 0.0).unwrap().u.abs() < 1e-12, true);
    }

    #[test]
    fn ratio_bound_rejects_bad_samples() {
        let p = Params::new(0.5, 0.5, 1).unwrap();
        let prof = solve_profile(&p, ProfileTol::default()).unwrap();
        let bad = [RatioSample { t: 1.0, tau: -5.0, z: 1.0 }];
        assert!(check_ratio_bound(&prof, &bad).is_err());
        let good = [RatioSample { t: -1.0, tau: -1.2, z: 0.2 }];
        let rep = check_ratio_bound(&prof, &good).unwrap();
        assert!(rep.max_ratio < 1.0);
        assert!(rep.ordering_violations.is_empty());
    }
}

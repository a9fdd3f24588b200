//! Fractional-Laplacian integrals of one-dimensional power profiles.
//!
//! For `u = x_+^beta` one has `(-Delta)^s u(x) = A_1 x^{beta - 2s}` for
//! `x > 0` and `(-Delta)^s u(x) = A_2 |x|^{beta - 2s}` for `x < 0`. The
//! constants are computed by quadrature with explicit handling of the
//! cancellation at the origin, the kinks at `y = 1` and the algebraic tails.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::quad::{integrate, integrate_power_left, integrate_power_right, QuadResult, QuadTol};
use crate::special::frac_constant_1d;

/// Constants of the one-dimensional homogeneous profile `x_+^beta`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfPlaneConstants {
    pub c1s: f64,
    pub a1: f64,
    pub a1_error: f64,
    pub a2: f64,
    pub a2_error: f64,
    /// `((beta - s) / (-beta A_1))^{1/(2 - gamma)}`; `None` when `gamma = 0`.
    pub amplitude_a: Option<f64>,
}

impl HalfPlaneConstants {
    /// Amplitude solving `A^{2-gamma} d (-A_1) = gamma` for a given extension constant `d`.
    pub fn amplitude_with_extension_constant(&self, gamma: f64, d: f64) -> Option<f64> {
        if gamma <= 0.0 || self.a1 >= 0.0 || d <= 0.0 {
            return None;
        }
        Some((gamma / (-d * self.a1)).powf(1.0 / (2.0 - gamma)))
    }
}

fn binomial_series_core(beta: f64, s: f64) -> f64 {
    // int_0^{1/2} ((1+y)^b + (1-y)^b - 2) y^{-1-2s} dy, termwise
    let mut total = 0.0;
    let mut binom = 1.0; // binom(beta, m)
    for m in 1..400 {
        binom *= (beta - (m as f64 - 1.0)) / m as f64;
        if m % 2 == 1 {
            continue;
        }
        let e = m as f64 - 2.0 * s;
        let term = 2.0 * binom * 0.5f64.powf(e) / e;
        total += term;
        if term.abs() < 1e-18 * total.abs().max(1e-300) && m > 4 {
            break;
        }
    }
    total
}

/// Computes `C_{1,s}`, `A_1`, `A_2` and the amplitude `A` to absolute accuracy `tol`.
pub fn half_plane_constants(params: &Params, tol: f64) -> Result<HalfPlaneConstants> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    let s = params.s;
    let beta = params.beta();
    let c = frac_constant_1d(s);
    let k = |y: f64| y.powf(-1.0 - 2.0 * s);
    let q = QuadTol { abs: tol / 8.0, rel: 0.0, max_intervals: 4000 };

    // A_1 = -C int_0^inf ((1+y)^b + (1-y)_+^b - 2) y^{-1-2s} dy
    let core = binomial_series_core(beta, s);
    let mid_smooth = integrate(|y| ((1.0 + y).powf(beta) - 2.0) * k(y), 0.5, 2.0, q)?;
    let mid_kink = integrate_power_right(beta, 0.5, 1.0, k, q)?;
    let tail = integrate_power_left(2.0 * s - 1.0 - beta, 0.0, 1.0, |u| (u + 2.0).powf(beta), q)?;
    let tail_value = 2f64.powf(-2.0 * s) * (tail.value - 1.0 / s);
    let i1 = core + mid_smooth.value + mid_kink.value + tail_value;
    let e1 = mid_smooth.error + mid_kink.error + 2f64.powf(-2.0 * s) * tail.error + 1e-16 * core.abs();
    let a1 = -c * i1;

    // A_2 = -C int_1^inf (y-1)^b y^{-1-2s} dy
    let near = integrate_power_left(beta, 1.0, 2.0, k, q)?;
    let far = integrate_power_left(2.0 * s - 1.0 - beta, 0.0, 1.0, |u| (2.0 - u).powf(beta), q)?
        .scale(2f64.powf(-2.0 * s));
    let i2 = near + far;
    let a2 = -c * i2.value;

    let amplitude_a = if params.gamma > 0.0 && a1 < 0.0 {
        Some(((beta - s) / (-beta * a1)).powf(1.0 / (2.0 - params.gamma)))
    } else {
        None
    };
    Ok(HalfPlaneConstants { c1s: c, a1, a1_error: c * e1, a2, a2_error: c * i2.error, amplitude_a })
}

/// Behaviour of a sampled function outside its sample window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tail {
    /// `u(y) = coef |y|^exponent` beyond the window edge.
    Power { coef: f64, exponent: f64 },
}

impl Tail {
    pub fn zero() -> Self {
        Tail::Power { coef: 0.0, exponent: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Tail::Power { coef: c, exponent: 0.0 }
    }

    fn parts(&self) -> (f64, f64) {
        match *self {
            Tail::Power { coef, exponent } => (coef, exponent),
        }
    }
}

/// Samples on a window `[a, b]` interpolated by C^1 cubic Hermite pieces,
/// with declared algebraic tails outside the window.
#[derive(Debug, Clone, Serialize)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    left: Option<Tail>,
    right: Option<Tail>,
}

impl SampledFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 3 {
            return Err(Error::InvalidParameter("need at least three samples with matching values".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("sample nodes must be strictly increasing".into()));
        }
        let n = nodes.len();
        let sec: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = sec[0];
        slopes[n - 1] = sec[n - 2];
        for i in 1..n - 1 {
            let h0 = nodes[i] - nodes[i - 1];
            let h1 = nodes[i + 1] - nodes[i];
            slopes[i] = (h1 * sec[i - 1] + h0 * sec[i]) / (h0 + h1);
        }
        Ok(SampledFunction { nodes, values, slopes, left: None, right: None })
    }

    /// Samples `f` on the given nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(nodes: Vec<f64>, f: F) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    pub fn with_tails(mut self, left: Tail, right: Tail) -> Self {
        self.left = Some(left);
        self.right = Some(right);
        self
    }

    pub fn window(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    /// Interpolated value inside the window.
    pub fn value(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let i = match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.nodes[i + 1] - self.nodes[i];
        let t = (x - self.nodes[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}

/// One-sided tail integral `int_d^inf (c |x +- z|^p - u0) z^{-1-2s} dz`
/// where `x +- z` leaves the window at distance `d`.
fn tail_integral(s: f64, x: f64, d: f64, sign: f64, tail: Tail, u0: f64, q: QuadTol) -> Result<QuadResult> {
    let (c, p) = tail.parts();
    let const_part = -u0 * d.powf(-2.0 * s) / (2.0 * s);
    if c == 0.0 {
        return Ok(QuadResult { value: const_part, error: 0.0, intervals: 0 });
    }
    if p >= 2.0 * s {
        return Err(Error::Domain(format!("tail exponent {p} >= 2s makes the integral diverge")));
    }
    // z = d / v, |x + sign z| = (d + sign x v) / v
    let r = integrate_power_left(2.0 * s - 1.0 - p, 0.0, 1.0, |v| (d + sign * x * v).abs().powf(p), q)?;
    let r = r.scale(c * d.powf(-2.0 * s));
    Ok(QuadResult { value: r.value + const_part, ..r })
}

/// `(-Delta)^s u` at the given interior points, with error estimates.
pub fn frac_laplacian_profile(s: f64, u: &SampledFunction, points: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1)")));
    }
    let (Some(left), Some(right)) = (u.left, u.right) else {
        return Err(Error::Domain("tails of the sampled function are not declared".into()));
    };
    let (a, b) = u.window();
    for t in [left, right] {
        let (c, p) = t.parts();
        if c != 0.0 && p != 0.0 && !(a < 0.0 && b > 0.0) {
            return Err(Error::Domain("power tails require a window containing the origin".into()));
        }
    }
    let c1 = frac_constant_1d(s);
    let q = QuadTol { abs: tol / 8.0, rel: 0.0, max_intervals: 8000 };
    let zmin = 1e-6 * (b - a);
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        if !(x > a && x < b) {
            return Err(Error::Domain(format!("evaluation point {x} is not strictly inside the window [{a}, {b}]")));
        }
        let u0 = u.value(x);
        let dl = x - a;
        let dr = b - x;
        let z0 = dl.min(dr);
        let second = |z: f64| {
            let z = z.max(zmin);
            (u.value(x + z) + u.value(x - z) - 2.0 * u0) / (z * z)
        };
        let mut total = integrate_power_left(1.0 - 2.0 * s, 0.0, z0, second, q)?;
        let kernel = |z: f64| z.powf(-1.0 - 2.0 * s);
        total = total + integrate(|z| (u.value(x + z) - u0) * kernel(z), z0, dr.max(z0), q)?;
        total = total + integrate(|z| (u.value(x - z) - u0) * kernel(z), z0, dl.max(z0), q)?;
        total = total + tail_integral(s, x, dr, 1.0, right, u0, q)?;
        total = total + tail_integral(s, x, dl, -1.0, left, u0, q)?;
        out.push((-c1 * total.value, c1 * total.error));
    }
    Ok(out)
}

/// Nodes on `[a, b]` refined geometrically towards `x = 0` when it lies inside.
pub fn refined_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    if a < 0.0 && b > 0.0 {
        let h = (b - a) / n as f64;
        let mut r = h;
        while r > 1e-9 {
            r *= 0.5;
            nodes.push(r);
            nodes.push(-r);
        }
        nodes.push(0.0);
        nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        nodes.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn a1_closed_form_at_half() {
        for &g in &[0.2, 0.5, 0.8] {
            let p = Params::new(0.5, g, 1).unwrap();
            let c = half_plane_constants(&p, 1e-10).unwrap();
            let b = p.beta();
            assert!((c.a1 - b / (PI * b).tan()).abs() < 1e-8, "gamma {g}: {}", c.a1);
        }
    }

    #[test]
    fn a1_vanishes_in_cavitation_limit() {
        for &s in &[0.2, 0.5, 0.8] {
            let c = half_plane_constants(&Params::new(s, 0.0, 1).unwrap(), 1e-11).unwrap();
            assert!(c.a1.abs() < 1e-9, "s {s}: {}", c.a1);
            assert!(c.amplitude_a.is_none());
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(half_plane_constants(&Params::new(0.5, 0.5, 1).unwrap(), 0.0).is_err());
    }

    #[test]
    fn sampled_requires_tails_and_interior_points() {
        let nodes = refined_nodes(-2.0, 2.0, 200);
        let u = SampledFunction::from_fn(nodes, |x| x.max(0.0).powf(0.6)).unwrap();
        assert!(frac_laplacian_profile(0.5, &u, &[1.0], 1e-8).is_err());
        let u = u.with_tails(Tail::zero(), Tail::Power { coef: 1.0, exponent: 0.6 });
        assert!(frac_laplacian_profile(0.5, &u, &[2.0], 1e-8).is_err());
        assert!(frac_laplacian_profile(0.5, &u, &[1.0], 1e-8).is_ok());
    }
}

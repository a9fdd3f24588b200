//! One-dimensional quadrature.
//!
//! Globally adaptive Gauss-Kronrod (10/21 points), a change of variables
//! that absorbs algebraic endpoint singularities, and Gauss-Jacobi rules
//! built by the Golub-Welsch eigenvalue method.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_778,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            error: self.error + o.error,
            intervals: self.intervals + o.intervals,
        }
    }
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, error: 0.0, intervals: 0 }
    }

    pub fn scale(self, c: f64) -> Self {
        QuadResult { value: c * self.value, error: c.abs() * self.error, intervals: self.intervals }
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-12, rel: 1e-12, max_intervals: 2000 }
    }
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        QuadTol { abs, rel, ..Default::default() }
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let value = resk * h;
    let mut err = ((resk - resg) * h).abs();
    let floor = 50.0 * f64::EPSILON * resabs * h.abs();
    if floor > err {
        err = floor;
    }
    (value, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error until the total error
/// estimate falls below `max(tol.abs, tol.rel * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: QuadTol) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    let (v, e) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        if !total.is_finite() {
            return Err(Error::NoConvergence("non-finite integrand".into()));
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if count >= tol.max_intervals {
            return Err(Error::NoConvergence(format!(
                "quadrature on [{a}, {b}] reached {count} intervals with error {total_err:.3e}"
            )));
        }
        let p = heap.pop().expect("non-empty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            // interval cannot be split further; accept it as is
            heap.push(Piece { error: 0.0, ..p });
            total_err -= p.error;
            continue;
        }
        let (v1, e1) = gk21(&f, p.a, m);
        let (v2, e2) = gk21(&f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
        count += 1;
    }
    // re-sum to limit accumulated cancellation
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult { value, error, intervals: count })
}

/// Integrates `(u - a)^p phi(u)` over `[a, b]` for `p > -1`.
///
/// The substitution `v = (u - a)^{p+1}` makes the integrand `phi(a + v^{1/(p+1)}) / (p+1)`.
pub fn integrate_power_left<F: Fn(f64) -> f64>(
    p: f64,
    a: f64,
    b: f64,
    phi: F,
    tol: QuadTol,
) -> Result<QuadResult> {
    if p <= -1.0 {
        return Err(Error::Domain(format!("endpoint exponent {p} is not integrable")));
    }
    let q = p + 1.0;
    let vmax = (b - a).powf(q);
    let r = integrate(|v: f64| phi(a + v.powf(1.0 / q)), 0.0, vmax, tol)?;
    Ok(r.scale(1.0 / q))
}

/// Integrates `(b - u)^p phi(u)` over `[a, b]` for `p > -1`.
pub fn integrate_power_right<F: Fn(f64) -> f64>(
    p: f64,
    a: f64,
    b: f64,
    phi: F,
    tol: QuadTol,
) -> Result<QuadResult> {
    integrate_power_left(p, a, b, |u: f64| phi(a + b - u), tol)
}

/// Nodes and weights of a fixed rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Jacobi rule for the weight `(1 - x)^a (1 + x)^b` on `[-1, 1]`.
pub fn gauss_jacobi(m: usize, a: f64, b: f64) -> Result<Rule> {
    if m == 0 || a <= -1.0 || b <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "Gauss-Jacobi needs m >= 1 and exponents > -1 (m={m}, a={a}, b={b})"
        )));
    }
    let ab = a + b;
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < m {
            let j = kf + 1.0;
            let off2 = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = off2.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn gauss_legendre(m: usize) -> Rule {
    gauss_jacobi(m, 0.0, 0.0).expect("valid Legendre order")
}

impl Rule {
    /// Applies the rule to `[lo, hi]` for a smooth integrand (weight ignored).
    pub fn apply<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integral() {
        let r = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, QuadTol::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        assert!(r.error < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^1 x^-0.7 cos x dx compared with a termwise series
        let p = -0.7;
        let r = integrate_power_left(p, 0.0, 1.0, |x: f64| x.cos(), QuadTol::default()).unwrap();
        let mut series = 0.0;
        let mut term = 1.0;
        for k in 0..30 {
            let e = 2.0 * k as f64 + p + 1.0;
            series += term / e;
            term *= -1.0 / ((2 * k + 1) as f64 * (2 * k + 2) as f64);
        }
        assert!((r.value - series).abs() < 1e-12, "{} vs {}", r.value, series);
    }

    #[test]
    fn jacobi_moments() {
        // int (1-x)^a (1+x)^b x^k for small k against the rule with m large
        let (a, b) = (-0.3, 0.4);
        let rule = gauss_jacobi(12, a, b).unwrap();
        let total: f64 = rule.weights.iter().sum();
        let mu0 = (2f64.powf(a + b + 1.0)) * crate::special::beta_fn(a + 1.0, b + 1.0);
        assert!((total - mu0).abs() < 1e-13);
        // exactness for degree 2m-1: compare with the adaptive integrator
        let poly = |x: f64| x.powi(7) - 0.5 * x.powi(4) + x;
        let exact = integrate_power_left(
            b,
            -1.0,
            0.0,
            |x: f64| (1.0 - x).powf(a) * poly(x),
            QuadTol::default(),
        )
        .unwrap()
        .value
            + integrate_power_right(a, 0.0, 1.0, |x: f64| (1.0 + x).powf(b) * poly(x), QuadTol::default())
                .unwrap()
                .value;
        let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * poly(x)).sum();
        assert!((exact - approx).abs() < 1e-12, "{exact} vs {approx}");
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        let rule = gauss_legendre(5);
        let v = rule.apply(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }
}

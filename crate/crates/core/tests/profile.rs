use std::f64::consts::PI;
use std::sync::Arc;

use fbnl_core::frac::half_plane_constants;
use fbnl_core::profile::{solve_profile, HalfPlane, ProfileTol};
use fbnl_core::special::{extension_constant, gamma};
use fbnl_core::Params;

/// Gamma by upward recurrence and the Stirling series, independent of the library.
fn stirling_gamma(x: f64) -> f64 {
    let mut shift = 1.0;
    let mut z = x;
    while z < 12.0 {
        shift *= z;
        z += 1.0;
    }
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z.powi(3)) + 1.0 / (1260.0 * z.powi(5)) - 1.0 / (1680.0 * z.powi(7));
    ((z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series).exp() / shift
}

fn profile(s: f64, g: f64) -> Arc<fbnl_core::profile::Profile> {
    Arc::new(solve_profile(&Params::new(s, g, 1).unwrap(), ProfileTol::default()).unwrap())
}

#[test]
fn library_gamma_matches_stirling() {
    for k in 1..40 {
        let x = 0.05 * k as f64;
        let rel = (gamma(x) - stirling_gamma(x)).abs() / stirling_gamma(x);
        assert!(rel < 1e-12, "x = {x}: rel {rel}");
    }
}

#[test]
fn closed_form_at_half() {
    for g in [0.1, 0.3, 0.5, 0.7] {
        let p = profile(0.5, g);
        let beta = 1.0 / (2.0 - g);
        for k in 0..=100 {
            let th = PI * k as f64 / 100.0;
            let want = (beta * (PI - th)).sin() / (beta * PI).sin();
            assert!((p.eval(th).0 - want).abs() < 1e-8);
        }
        let slope = -beta / (beta * PI).tan();
        assert!((p.slope_at_zero - slope).abs() < 1e-8);
    }
}

#[test]
fn slope_is_extension_constant_times_a1() {
    for (s, g) in [(0.3, 0.2), (0.4, 0.5), (0.7, 0.3)] {
        let p = profile(s, g);
        let c = half_plane_constants(&Params::new(s, g, 1).unwrap(), 1e-11).unwrap();
        let d = 2f64.powf(1.0 - 2.0 * s) * stirling_gamma(1.0 - s) / stirling_gamma(s);
        assert!((extension_constant(s) - d).abs() < 1e-11);
        assert!((p.slope_at_zero + d * c.a1).abs() < 1e-7, "s = {s}, gamma = {g}");
    }
}

#[test]
fn flux_consistent_amplitude_at_half() {
    let p = profile(0.5, 0.5);
    let a = HalfPlane::flux_consistent_amplitude(&p).unwrap();
    let lambda = (2.0 / 3.0) / 3f64.sqrt();
    assert!((a - (0.5 / lambda).powf(2.0 / 3.0)).abs() < 1e-9);
}

#[test]
fn halfplane_solves_the_extension_equation() {
    // y^alpha (U_xx + U_yy) + alpha y^{alpha-1} U_y = 0 by central differences
    for s in [0.3, 0.5, 0.7] {
        let hp = HalfPlane::new(profile(s, 0.4), 1.0);
        let alpha = 1.0 - 2.0 * s;
        let h = 1e-3;
        for &(x, y) in &[(0.4, 0.3), (-0.2, 0.5), (0.05, 0.2), (-0.6, 0.1)] {
            let u = |a: f64, b: f64| hp.value(a, b);
            let uxx = (u(x + h, y) - 2.0 * u(x, y) + u(x - h, y)) / (h * h);
            let uyy = (u(x, y + h) - 2.0 * u(x, y) + u(x, y - h)) / (h * h);
            let uy = (u(x, y + h) - u(x, y - h)) / (2.0 * h);
            let res = uxx + uyy + alpha * uy / y;
            let scale = uxx.abs() + uyy.abs() + (alpha * uy / y).abs();
            assert!(res.abs() < 1e-4 * scale, "s = {s} at ({x}, {y}): {res} vs {scale}");
        }
    }
}

#[test]
fn flux_condition_holds_with_consistent_amplitude() {
    let p = profile(0.5, 0.5);
    let hp = HalfPlane::new(p.clone(), HalfPlane::flux_consistent_amplitude(&p).unwrap());
    for t in [0.2, 0.5, 0.9] {
        let y = 1e-7;
        let v = hp.eval(t, y).unwrap();
        let want = 0.5 * hp.value(t, 0.0).powf(-0.5);
        assert!((v.uz - want).abs() < 1e-5 * want, "t = {t}: {} vs {want}", v.uz);
    }
}

#[test]
fn zero_on_the_contact_half_line() {
    let hp = HalfPlane::new(profile(0.3, 0.5), 1.0);
    for t in [-0.1, -0.5, -2.0] {
        assert_eq!(hp.value(t, 0.0), 0.0);
    }
    assert!(hp.value(0.3, 0.0) > 0.0);
}

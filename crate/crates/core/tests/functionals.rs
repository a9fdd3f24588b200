use std::sync::Arc;

use fbnl_core::functionals::{
    blowup_sequence, fit_normal_2d, homogeneity_defect, monneau, weiss, weiss_sweep, FieldLike, HalfPlaneField,
    Rescaled, DEFAULT_C_MONO,
};
use fbnl_core::grid::{Field, Grid2D};
use fbnl_core::minimizer::{minimize_energy, MinimizerConfig};
use fbnl_core::profile::{solve_profile, HalfPlane, ProfileTol};
use fbnl_core::Params;

fn halfplane(s: f64, gamma: f64, amp: Option<f64>) -> HalfPlane {
    let p = Arc::new(solve_profile(&Params::new(s, gamma, 1).unwrap(), ProfileTol::default()).unwrap());
    let a = amp.unwrap_or_else(|| HalfPlane::flux_consistent_amplitude(&p).unwrap());
    HalfPlane::new(p, a)
}

/// W of `A r^beta g`: Dirichlet part `A^2 lambda* / (1 + beta gamma)` by the
/// divergence theorem, penalty `2 A^gamma / (1 + beta gamma)`, minus the
/// surface term, which cancels the Dirichlet part up to the flux identity.
fn closed_form_w(hp: &HalfPlane) -> f64 {
    let p = &hp.profile;
    let (a, g) = (hp.amplitude, p.params.gamma);
    (2.0 * a.powf(g) - a * a * p.slope_at_zero) / (1.0 + p.beta() * g)
}

#[test]
fn analytic_weiss_is_constant_and_matches_closed_form() {
    for (s, g, a) in [(0.5, 0.5, Some(1.0)), (0.3, 0.4, None), (0.7, 0.2, Some(0.6))] {
        let hp = halfplane(s, g, a);
        let f = HalfPlaneField::new(hp.clone(), 0.3);
        let want = closed_form_w(&hp);
        for r in [0.05, 0.4, 3.0] {
            let w = weiss(&f, 0.3, r).unwrap().w;
            assert!((w - want).abs() < 1e-6 * want.abs().max(1.0), "s = {s}, R = {r}: {w} vs {want}");
            assert!(homogeneity_defect(&f, 0.3, r).unwrap() < 1e-16);
        }
    }
}

#[test]
fn grid_weiss_converges_to_analytic_value() {
    let hp = halfplane(0.5, 0.5, Some(1.0));
    let want = closed_form_w(&hp);
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let grid = Arc::new(Grid2D::new(hp.profile.params, n, n, 1.0, 1.0, None).unwrap());
            let f = Field::from_fn(grid, |x, y| hp.value(x, y));
            (weiss(&f, 0.0, 0.3).unwrap().w - want).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < 0.7 * w[0]), "{errs:?}");
    assert!(errs[2] < 2e-3);
}

#[test]
fn scaling_identity_for_rescaled_views() {
    let hp = halfplane(0.4, 0.5, None);
    let grid = Arc::new(Grid2D::new(hp.profile.params, 128, 64, 1.0, 1.0, None).unwrap());
    let f = Field::from_fn(grid, |x, y| hp.value(x, y) + 0.05 * y);
    for (big_r, rho) in [(0.5, 0.8), (0.25, 1.5)] {
        let direct = weiss(&f, 0.1, big_r * rho).unwrap().w;
        let view = Rescaled { u: &f, x0: 0.1, r: big_r };
        let scaled = weiss(&view, 0.0, rho).unwrap().w;
        assert!((direct - scaled).abs() < 1e-12 * direct.abs());
    }
}

#[test]
fn monneau_of_scaled_copies() {
    let hp = halfplane(0.5, 0.5, None);
    let p = HalfPlaneField::new(hp.clone(), 0.0);
    let half = HalfPlaneField::new(HalfPlane::new(hp.profile.clone(), 0.5 * hp.amplitude), 0.0);
    assert_eq!(monneau(&p, &p, 0.0, 0.4).unwrap(), 0.0);
    // M(u, u/2) = R^{-ks} int (u/2)^2 is independent of R for homogeneous u
    let m1 = monneau(&p, &half, 0.0, 0.2).unwrap();
    let m2 = monneau(&p, &half, 0.0, 0.9).unwrap();
    assert!((m1 - m2).abs() < 1e-10 * m1);
    assert!(m1 > 0.0);
}

#[test]
fn weiss_sweep_on_analytic_field_has_no_violations() {
    let hp = halfplane(0.5, 0.5, None);
    let p = HalfPlaneField::new(hp, 0.0);
    let radii: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let sw = weiss_sweep(&p, 0.0, &radii, DEFAULT_C_MONO).unwrap();
    assert_eq!(sw.violation_count, 0);
    assert!(sw.forward_differences.iter().all(|d| d.abs() < 1e-8));
}

#[test]
fn blowup_of_minimizer_is_the_halfplane_solution() {
    let hp = halfplane(0.5, 0.5, None);
    let grid = Arc::new(Grid2D::new(hp.profile.params, 128, 64, 1.0, 1.0, None).unwrap());
    // positive set to the left: mirrored data
    let data = Field::from_fn(grid.clone(), |x, y| hp.value(-x, y));
    let m = minimize_energy(grid.clone(), &data, &MinimizerConfig::default()).unwrap();
    let x0 = m.fb_points[0];
    let rep = blowup_sequence(&m.field, x0, &[0.8, 0.4, 0.2, 0.1, 0.05, 0.01], &hp, Some(grid)).unwrap();
    assert_eq!(rep.normal, -1.0);
    assert_eq!(rep.truncated, vec![0.01]);
    assert!(rep.fit_distance < 0.05, "{}", rep.fit_distance);
    assert_eq!(rep.fields.len(), rep.radii.len());
}

#[test]
fn tilted_normal_is_recovered() {
    let hp = halfplane(0.5, 0.5, None);
    for deg in [0.0f64, 33.0, 200.0] {
        let ang = deg.to_radians();
        let (c, s) = (ang.cos(), ang.sin());
        let fit = fit_normal_2d(|x1, x2, y| hp.value(x1 * c + x2 * s, y), (0.0, 0.0), 0.5, &hp).unwrap();
        let diff = (fit.angle - ang).rem_euclid(2.0 * std::f64::consts::PI);
        let diff = diff.min(2.0 * std::f64::consts::PI - diff);
        assert!(diff.to_degrees() < 2.0, "{deg}: {}", fit.angle.to_degrees());
        assert!(fit.distance < 1e-6);
    }
}

#[test]
fn penalty_closed_form() {
    let hp = halfplane(0.6, 0.4, Some(1.3));
    let p = HalfPlaneField::new(hp.clone(), -0.2);
    let beta = hp.profile.beta();
    let r: f64 = 0.7;
    let want = 1.3f64.powf(0.4) * r.powf(1.0 + 0.4 * beta) / (1.0 + 0.4 * beta);
    assert!((p.penalty(-0.2, r).unwrap() - want).abs() < 1e-12);
}

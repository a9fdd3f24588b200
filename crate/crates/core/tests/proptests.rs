use std::sync::Arc;

use proptest::prelude::*;

use fbnl_core::comparison::{domain_variation, gamma_r};
use fbnl_core::grid::{Field, Grid2D};
use fbnl_core::minimizer::{minimize_energy, MinimizerConfig};
use fbnl_core::profile::{solve_profile, HalfPlane, ProfileTol};
use fbnl_core::solver::bottom_flux;
use fbnl_core::Params;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_identities(s in 0.01f64..0.99, g in 0.0f64..0.99, n in 1usize..5) {
        let p = Params::new(s, g, n).unwrap();
        let d = p.derived();
        prop_assert!((d.beta * (2.0 - g) - 2.0 * s).abs() < 1e-14);
        prop_assert!((d.kappa_surf - d.kappa_vol - 1.0).abs() < 1e-14);
        prop_assert!((d.alpha + 2.0 * s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_for_affine_data(
        s in 0.1f64..0.9, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
        x in -1.0f64..1.0, y in 0.0f64..1.0,
    ) {
        let grid = Arc::new(Grid2D::new(Params::new(s, 0.5, 1).unwrap(), 10, 7, 1.0, 1.0, None).unwrap());
        let ts = 2.0 * s;
        let f = Field::from_fn(grid.clone(), |x, y| a + b * x + c * y.powf(ts));
        let want = a + b * x + c * y.powf(ts);
        prop_assert!((f.value(x, y).unwrap() - want).abs() < 1e-12);
        let flux = bottom_flux(&f, 1e-6);
        prop_assert!(flux.one_term.iter().all(|v| (v - ts * c).abs() < 1e-11 * (1.0 + c.abs())));
    }

    #[test]
    fn gamma_r_scales(lam in 0.1f64..10.0, r in 1.0f64..100.0, x1 in -1.0f64..1.0, x2 in -1.0f64..1.0, z in 0.0f64..1.0) {
        let p = Params::new(0.5, 0.5, 2).unwrap();
        let a = gamma_r(&p, lam * r, &[lam * x1, lam * x2, lam * z]).unwrap();
        let b = gamma_r(&p, r, &[x1, x2, z]).unwrap();
        prop_assert!((a - lam * b).abs() < 1e-12 * (1.0 + b.abs() * lam));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translate_variation_is_delta_over_eps(delta in -0.09f64..0.09, xn in -0.5f64..0.5, z in 0.01f64..0.5) {
        let params = Params::new(0.5, 0.5, 1).unwrap();
        let hp = HalfPlane::new(Arc::new(solve_profile(&params, ProfileTol::default()).unwrap()), 1.0);
        let eps = 0.1;
        let dv = domain_variation(|y| hp.value(y[0] + delta, y[1]), &hp, 1, eps, &[xn, z]).unwrap();
        prop_assert!((dv.w - delta / eps).abs() < 1e-9);
    }

    #[test]
    fn minimizers_are_nonnegative_and_beat_their_data(
        a in 0.1f64..1.0, b in -0.5f64..0.5, c in 0.0f64..0.6, g in 0.0f64..0.9,
    ) {
        let grid = Arc::new(Grid2D::new(Params::new(0.5, g, 1).unwrap(), 16, 8, 1.0, 1.0, None).unwrap());
        let data = Field::from_fn(grid.clone(), |x, y| (a * (x - b)).max(0.0) + c * y);
        let m = minimize_energy(grid, &data, &MinimizerConfig::default()).unwrap();
        prop_assert!(m.field.values.iter().all(|&v| v >= 0.0));
        prop_assert!(m.energy <= fbnl_core::minimizer::discrete_energy(&data, 0.0) + 1e-12);
    }
}

use std::sync::Arc;

use fbnl_core::fb::{extract_free_boundary, measure_flatness};
use fbnl_core::grid::{Field, Grid2D};
use fbnl_core::minimizer::{minimize_energy, MinimizerConfig};
use fbnl_core::profile::{solve_profile, HalfPlane, ProfileTol};
use fbnl_core::Params;

#[test]
fn halfplane_minimizer_is_nondegenerate() {
    let params = Params::new(0.5, 0.5, 1).unwrap();
    let p = Arc::new(solve_profile(&params, ProfileTol::default()).unwrap());
    let hp = HalfPlane::new(p.clone(), HalfPlane::flux_consistent_amplitude(&p).unwrap());
    let grid = Arc::new(Grid2D::new(params, 128, 64, 1.0, 1.0, None).unwrap());
    let data = Field::from_fn(grid.clone(), |x, y| hp.value(x, y));
    let m = minimize_energy(grid.clone(), &data, &MinimizerConfig::default()).unwrap();
    let radii = [0.25, 0.125, 0.0625, 0.03125];
    let rep = extract_free_boundary(&m.field, m.fb_threshold, &radii);
    assert_eq!(rep.fb_points.len(), 1);
    // contact set is [-1, x_fb]
    assert!((rep.contact_measure - (1.0 + rep.fb_points[0])).abs() < grid.dx());
    let d = &rep.density[0];
    assert!(d.ratios.iter().all(|r| (r - 0.5).abs() < 0.05), "{:?}", d.ratios);
    let g = &rep.growth[0];
    assert!((g.slope - params.beta()).abs() < 0.1, "{}", g.slope);
    let fl = measure_flatness(&m.field, rep.fb_points[0], 1.0, &radii, m.fb_threshold).unwrap();
    assert!(fl.eps.iter().all(|e| *e < 0.05), "{:?}", fl.eps);
}

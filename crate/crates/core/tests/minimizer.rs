use std::sync::Arc;

use fbnl_core::grid::{Field, Grid2D};
use fbnl_core::minimizer::{minimize_energy, Minimizer, MinimizerConfig};
use fbnl_core::profile::{solve_profile, HalfPlane, ProfileTol};
use fbnl_core::Params;

fn grid(s: f64, gamma: f64, n: usize) -> Arc<Grid2D> {
    Arc::new(Grid2D::new(Params::new(s, gamma, 1).unwrap(), n, n / 2, 1.0, 1.0, None).unwrap())
}

fn halfplane(s: f64, gamma: f64) -> HalfPlane {
    let p = Arc::new(solve_profile(&Params::new(s, gamma, 1).unwrap(), ProfileTol::default()).unwrap());
    let a = HalfPlane::flux_consistent_amplitude(&p).unwrap();
    HalfPlane::new(p, a)
}

fn run(g: Arc<Grid2D>, f: impl Fn(f64, f64) -> f64) -> Minimizer {
    let data = Field::from_fn(g.clone(), f);
    minimize_energy(g, &data, &MinimizerConfig::default()).unwrap()
}

#[test]
fn halfplane_data_recovers_the_free_boundary() {
    for s in [0.5, 0.7] {
        let hp = halfplane(s, 0.5);
        let mut errors = Vec::new();
        for n in [32, 64, 128] {
            let g = grid(s, 0.5, n);
            let m = run(g.clone(), |x, y| hp.value(x, y));
            assert_eq!(m.fb_points.len(), 1, "s = {s}, n = {n}: {:?}", m.fb_points);
            assert!(m.fb_points[0].abs() <= g.dx(), "s = {s}, n = {n}: {:?}", m.fb_points);
            let err = m.field.values.iter().zip(Field::from_fn(g, |x, y| hp.value(x, y)).values).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            errors.push(err);
        }
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "s = {s}: {errors:?}");
    }
}

#[test]
fn energy_log_decreases_within_each_stage() {
    let g = grid(0.5, 0.5, 64);
    let m = run(g, |x, y| (0.8 * x + 0.3 * (3.0 * x).sin()).max(0.0) + 0.5 * y);
    for w in m.log.windows(2) {
        if w[0].stage == w[1].stage {
            let tol = 1e-10 * w[0].energy_delta.abs();
            assert!(w[1].energy_delta <= w[0].energy_delta + tol, "{:?} -> {:?}", w[0], w[1]);
        }
    }
    // the contact-set search only accepts strict decreases of the final energy
    let last = m.log.iter().map(|e| e.stage).max().unwrap();
    let polish: Vec<_> = m.log.iter().filter(|e| e.stage == last).collect();
    assert!(polish.windows(2).all(|w| w[1].energy_delta < w[0].energy_delta));
}

#[test]
fn regularisation_tail_is_negligible() {
    let g = grid(0.5, 0.5, 64);
    let m = run(g, |x, y| 0.6 * (x + 0.2).max(0.0) + 0.3 * y + 0.1 * x * x);
    let stages: Vec<usize> = {
        let mut v: Vec<usize> = m.log.iter().map(|e| e.stage).collect();
        v.dedup();
        v
    };
    // last two continuation stages (the final stage is the contact-set search)
    let k = stages.len();
    let end = |st: usize| m.log.iter().filter(|e| e.stage == st).last().unwrap().energy;
    let (a, b) = (end(stages[k - 3]), end(stages[k - 2]));
    assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
}

#[test]
fn mirrored_data_give_mirrored_minimizers() {
    let g = grid(0.5, 0.5, 64);
    let f = |x: f64, y: f64| (0.8 * x + 0.3 * (3.0 * x).sin()).max(0.0) + 0.5 * y;
    let a = run(g.clone(), f);
    let b = run(g.clone(), |x, y| f(-x, y));
    let scale = a.field.max_abs();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            assert!((a.field.at(i, j) - b.field.at(g.nx - i, j)).abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn large_constant_data_leave_no_contact() {
    let g = grid(0.5, 0.5, 32);
    let m = run(g, |_, _| 10.0);
    assert!(m.contact.iter().all(|c| !c));
    assert!(m.fb_points.is_empty());
}

#[test]
fn minimizer_beats_its_data_extension() {
    let g = grid(0.6, 0.3, 48);
    let f = |x: f64, y: f64| 0.6 * (x + 0.2).max(0.0) + 0.3 * y + 0.1 * x * x;
    let m = run(g.clone(), f);
    let data = Field::from_fn(g.clone(), f);
    let trace = data.trace().to_vec();
    let ext = fbnl_core::solver::solve_mixed(g, &data, &fbnl_core::solver::BottomCondition::Dirichlet(trace), Default::default()).unwrap();
    assert!(m.energy < fbnl_core::minimizer::discrete_energy(&ext.field, 0.0));
}

//! The fourteen acceptance criteria as runnable checks.
//!
//! Every check returns its measured values next to the tolerance it was held
//! to. A check that cannot be completed counts as failed and keeps the error
//! message.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{
    ball_samples, domain_variation, expansion_sweep, radial_fit, solve_linearized, RadialSubsolution,
};
use crate::error::{Error, Result};
use crate::fb::{measure_density, measure_nondegeneracy};
use crate::frac::half_plane_constants;
use crate::functionals::{
    monneau, monneau_sweep, rescale_onto, weiss, weiss_sweep, HalfPlaneField, DEFAULT_C_MONO,
};
use crate::grid::{Field, Grid2D};
use crate::minimizer::{minimize_energy, Minimizer, MinimizerConfig};
use crate::params::Params;
use crate::profile::{compute_angular, f_at, big_f_at, solve_profile, HalfPlane, Profile, ProfileTol};
use crate::solver::{bottom_flux, extension_crosscheck, solve_mixed, BottomCondition, SolveOptions};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub tolerance: String,
    pub measured: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub seconds: f64,
    pub runtime_limit: f64,
}

impl CriterionReport {
    /// One line: id, verdict, title, the first measurements and the runtime.
    pub fn summary(&self) -> String {
        let shown: Vec<String> = self.measured.iter().take(4).map(|(k, v)| format!("{k}={v:.6e}")).collect();
        format!(
            "criterion {:>2} {} {:<34} {:>7.2}s  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            shown.join(" ")
        )
    }
}

struct Outcome {
    passed: bool,
    tolerance: String,
    measured: Vec<(String, f64)>,
    notes: Vec<String>,
}

impl Outcome {
    fn new(tolerance: impl Into<String>) -> Self {
        Outcome { passed: true, tolerance: tolerance.into(), measured: Vec::new(), notes: Vec::new() }
    }

    fn record(&mut self, name: impl Into<String>, value: f64) {
        self.measured.push((name.into(), value));
    }

    /// Records `value` and fails the criterion unless `ok`.
    fn require(&mut self, name: impl Into<String>, value: f64, ok: bool) {
        let name = name.into();
        if !ok {
            self.passed = false;
            self.notes.push(format!("{name} = {value:e} is out of tolerance"));
        }
        self.measured.push((name, value));
    }
}

pub const TITLES: [&str; 14] = [
    "exponent algebra",
    "A1 vanishes at gamma = 0",
    "A1 closed form at s = 1/2",
    "A2 Beta-function oracle",
    "profile ODE",
    "angular endpoint limits",
    "solver exactness",
    "extension cross-check",
    "Weiss functional on half-plane",
    "Weiss monotonicity on minimizers",
    "Monneau functional",
    "non-degeneracy and growth",
    "domain variation",
    "linearized solver",
];

const RUNTIME_LIMITS: [f64; 14] = [1.0, 5.0, 10.0, 5.0, 30.0, 10.0, 60.0, 120.0, 120.0, 300.0, 180.0, 300.0, 60.0, 120.0];

pub fn criterion_count() -> usize {
    TITLES.len()
}

/// Runs criterion `id` (1-based).
pub fn run_criterion(id: usize) -> Result<CriterionReport> {
    if id == 0 || id > TITLES.len() {
        return Err(Error::InvalidParameter(format!("criterion {id} does not exist (1..=14)")));
    }
    let start = Instant::now();
    let out = match id {
        1 => exponent_algebra(),
        2 => a1_vanishing(),
        3 => a1_closed_form(),
        4 => a2_oracle(),
        5 => profile_ode(),
        6 => angular_limits_check(),
        7 => solver_exactness(),
        8 => extension_check(),
        9 => weiss_half_plane(),
        10 => weiss_monotonicity(),
        11 => monneau_check(),
        12 => growth_check(),
        13 => domain_variation_check(),
        _ => linearized_check(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let limit = RUNTIME_LIMITS[id - 1];
    let mut rep = match out {
        Ok(o) => CriterionReport {
            id,
            title: TITLES[id - 1],
            passed: o.passed,
            tolerance: o.tolerance,
            measured: o.measured,
            notes: o.notes,
            seconds,
            runtime_limit: limit,
        },
        Err(e) => CriterionReport {
            id,
            title: TITLES[id - 1],
            passed: false,
            tolerance: String::new(),
            measured: Vec::new(),
            notes: vec![format!("check aborted: {e}")],
            seconds,
            runtime_limit: limit,
        },
    };
    if seconds > limit {
        rep.passed = false;
        rep.notes.push(format!("runtime {seconds:.1} s exceeds {limit} s"));
    }
    Ok(rep)
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=TITLES.len()).map(|k| run_criterion(k).expect("valid id")).collect()
}

fn profile_for(s: f64, gamma: f64) -> Result<Arc<Profile>> {
    Ok(Arc::new(solve_profile(&Params::new(s, gamma, 1)?, ProfileTol::default())?))
}

/// The half-plane solution with the amplitude that solves the flux condition.
pub fn flux_consistent_halfplane(s: f64, gamma: f64) -> Result<HalfPlane> {
    let p = profile_for(s, gamma)?;
    let a = HalfPlane::flux_consistent_amplitude(&p)?;
    Ok(HalfPlane::new(p, a))
}

fn exponent_algebra() -> Result<Outcome> {
    let mut o = Outcome::new("|beta(2-gamma) - 2s|, |beta - s - gamma beta/2| <= 1e-14");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(1e-3..1.0);
        let g: f64 = rng.gen_range(0.0..1.0);
        let p = Params::new(s, g, 1)?;
        let b = p.beta();
        e1 = e1.max((b * (2.0 - g) - 2.0 * s).abs());
        e2 = e2.max((b - s - g * b / 2.0).abs());
    }
    o.require("max_err_scaling", e1, e1 <= 1e-14);
    o.require("max_err_shift", e2, e2 <= 1e-14);
    Ok(o)
}

fn a1_vanishing() -> Result<Outcome> {
    let mut o = Outcome::new("|A1| <= 1e-8 at gamma = 0");
    for s in [0.3, 0.5, 0.7] {
        let c = half_plane_constants(&Params::new(s, 0.0, 1)?, 1e-11)?;
        o.require(format!("A1(s={s})"), c.a1, c.a1.abs() <= 1e-8);
    }
    Ok(o)
}

fn a1_closed_form() -> Result<Outcome> {
    let mut o = Outcome::new("|A1 - beta cot(pi beta)| <= 1e-6 at s = 1/2");
    for beta in [0.55, 0.6, 0.65, 0.7, 0.75] {
        let gamma = 2.0 - 1.0 / beta;
        let c = half_plane_constants(&Params::new(0.5, gamma, 1)?, 1e-10)?;
        let want = beta / (PI * beta).tan();
        let err = (c.a1 - want).abs();
        o.require(format!("err(beta={beta})"), err, err <= 1e-6);
    }
    Ok(o)
}

fn a2_oracle() -> Result<Outcome> {
    let mut o = Outcome::new("|A2 + 4/(3 sqrt 3)| <= 1e-6 at s = 1/2, beta = 2/3");
    let c = half_plane_constants(&Params::new(0.5, 0.5, 1)?, 1e-10)?;
    let err = (c.a2 + 4.0 / (3.0 * 3f64.sqrt())).abs();
    o.record("A2", c.a2);
    o.require("err", err, err <= 1e-6);
    Ok(o)
}

fn profile_ode() -> Result<Outcome> {
    let mut o = Outcome::new("closed form at s = 1/2, |g(pi)| and ODE residual <= 1e-6");
    for gamma in [0.1, 0.3, 0.5] {
        let p = profile_for(0.5, gamma)?;
        let beta = p.beta();
        let mut err = 0.0f64;
        for k in 0..=2000 {
            let th = PI * k as f64 / 2000.0;
            let want = (beta * (PI - th)).sin() / (beta * PI).sin();
            err = err.max((p.eval(th).0 - want).abs());
        }
        o.require(format!("closed_form_err(gamma={gamma})"), err, err <= 1e-6);
    }
    for s in [0.3, 0.5, 0.7] {
        for gamma in [0.1, 0.3, 0.5] {
            let p = profile_for(s, gamma)?;
            o.require(format!("g(pi)(s={s},gamma={gamma})"), p.g_at_pi, p.g_at_pi.abs() <= 1e-6);
            let res = p.ode_residual(400);
            o.require(format!("ode_residual(s={s},gamma={gamma})"), res, res <= 1e-6);
        }
    }
    Ok(o)
}

/// Value at zero of `c0 + c1 x^{e1} + c2 x^{e2}` through three samples.
fn extrapolate(xs: [f64; 3], ys: [f64; 3], e1: f64, e2: f64) -> f64 {
    let m = Matrix3::from_fn(|i, j| match j {
        0 => 1.0,
        1 => xs[i].powf(e1),
        _ => xs[i].powf(e2),
    });
    let v = Vector3::new(ys[0], ys[1], ys[2]);
    m.lu().solve(&v).map(|c| c[0]).unwrap_or(f64::NAN)
}

fn angular_limits_check() -> Result<Outcome> {
    let mut o = Outcome::new("f limits 1e-6, F limits 1e-5, min f > 0");
    for s in [0.3, 0.5, 0.7] {
        for gamma in [0.1, 0.3, 0.5] {
            let p = profile_for(s, gamma)?;
            let beta = p.beta();
            let ts = 2.0 * s;
            // near 0 the corrections are powers of theta^{2s}; near pi they are even
            let t0 = [1e-5, 2e-5, 4e-5];
            let e2 = (2.0 * ts).min(2.0);
            let tp = [1e-2, 2e-2, 4e-2];
            let at0 = |h: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                Ok(extrapolate(t0, [h(t0[0])?, h(t0[1])?, h(t0[2])?], ts, e2))
            };
            let atpi = |h: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                Ok(extrapolate(tp, [h(PI - tp[0])?, h(PI - tp[1])?, h(PI - tp[2])?], 2.0, 4.0))
            };
            let ff = |th: f64| f_at(&p, th);
            let bf = |th: f64| big_f_at(&p, th);
            let tag = format!("(s={s},gamma={gamma})");
            let d = (at0(&ff)? - beta).abs();
            o.require(format!("f0_err{tag}"), d, d <= 1e-6);
            let d = (atpi(&ff)? - (ts - beta)).abs();
            o.require(format!("fpi_err{tag}"), d, d <= 1e-6);
            let d = (at0(&bf)? - (beta * beta - beta)).abs();
            o.require(format!("F0_err{tag}"), d, d <= 1e-5);
            let d = (atpi(&bf)? - (ts - beta) * (ts - beta + 1.0)).abs();
            o.require(format!("Fpi_err{tag}"), d, d <= 1e-5);
            let min_f = compute_angular(&p)?.min_f;
            o.require(format!("min_f{tag}"), min_f, min_f > 0.0);
        }
    }
    Ok(o)
}

fn solver_exactness() -> Result<Outcome> {
    let n = 256;
    // roundoff of a direct solve: number of unknowns times the unit roundoff
    let tol = ((n + 1) * (n + 1)) as f64 * f64::EPSILON;
    let mut o = Outcome::new(format!(
        "exact data reproduced to {tol:.2e} relative, bottom flux of y^{{2s}} = 2s to {tol:.2e} / y_1^{{2s}}, maximum principle"
    ));
    for s in [0.3, 0.5, 0.7] {
        let params = Params::new(s, 0.5, 1)?;
        let grid = Arc::new(Grid2D::new(params, n, n, 1.0, 1.0, None)?);
        let ts = 2.0 * s;
        let cases: [(&str, Box<dyn Fn(f64, f64) -> f64>); 3] = [
            ("y^2s", Box::new(move |_, y: f64| y.powf(ts))),
            ("const", Box::new(|_, _| 1.75)),
            ("x", Box::new(|x, _| x)),
        ];
        for (name, f) in cases.iter() {
            let outer = Field::from_fn(grid.clone(), f);
            let trace = outer.trace().to_vec();
            let rep = solve_mixed(grid.clone(), &outer, &BottomCondition::Dirichlet(trace), SolveOptions::default())?;
            let scale = outer.max_abs().max(1.0);
            let err = rep.field.values.iter().zip(&outer.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
            o.require(format!("{name}_err(s={s})"), err, err <= tol);
            if *name == "y^2s" {
                let bf = bottom_flux(&rep.field, 1e-8);
                let e = bf.one_term.iter().chain(&bf.two_term).fold(0.0f64, |m, v| m.max((v - ts).abs()));
                o.require(format!("flux_err(s={s})"), e, e <= tol / grid.y[1].powf(ts));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let s = rng.gen_range(0.15..0.85);
        let grid = Arc::new(Grid2D::new(Params::new(s, 0.5, 1)?, n, n, 1.0, 1.0, None)?);
        let mut outer = Field::zeros(grid.clone());
        for v in outer.values.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let trace = outer.trace().to_vec();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=n {
            for i in 0..=n {
                if grid.is_outer(i, j) || j == 0 {
                    lo = lo.min(outer.at(i, j));
                    hi = hi.max(outer.at(i, j));
                }
            }
        }
        let rep = solve_mixed(grid.clone(), &outer, &BottomCondition::Dirichlet(trace), SolveOptions::default())?;
        for v in &rep.field.values {
            worst = worst.max(v - hi).max(lo - v);
        }
    }
    o.require("max_principle_excess", worst, worst <= tol);
    Ok(o)
}

fn extension_check() -> Result<Outcome> {
    let mut o = Outcome::new("|d - 1| <= 2% at s = 1/2; d(s=0.4) agrees across gamma within 2%");
    let win = (0.2, 0.6);
    let c = extension_crosscheck(&Params::new(0.5, 0.5, 1)?, 256, 256, win, 9)?;
    let e = (c.d_mean - 1.0).abs();
    o.record("d(s=0.5)", c.d_mean);
    o.require("rel_err(s=0.5)", e, e <= 0.02);
    let a = extension_crosscheck(&Params::new(0.4, 0.2, 1)?, 256, 256, win, 9)?;
    let b = extension_crosscheck(&Params::new(0.4, 0.5, 1)?, 256, 256, win, 9)?;
    o.record("d(s=0.4,gamma=0.2)", a.d_mean);
    o.record("d(s=0.4,gamma=0.5)", b.d_mean);
    let rel = (a.d_mean - b.d_mean).abs() / a.d_mean.abs().max(b.d_mean.abs());
    o.require("gamma_spread(s=0.4)", rel, rel <= 0.02);
    Ok(o)
}

fn half_plane_grid(hp: &HalfPlane, n: usize) -> Result<Field> {
    let grid = Arc::new(Grid2D::new(hp.profile.params, n, n, 1.0, 1.0, None)?);
    Ok(Field::from_fn(grid, |x, y| hp.value(x, y)))
}

fn weiss_half_plane() -> Result<Outcome> {
    let target = 1.125;
    let mut o = Outcome::new("max |W(R) - 1.125| / 1.125 <= 1% for R in [0.1, 0.4] at 256^2; scaling identity");
    let hp = HalfPlane::new(profile_for(0.5, 0.5)?, 1.0);
    let field = half_plane_grid(&hp, 256)?;
    let radii: Vec<f64> = (0..7).map(|k| 0.1 + 0.05 * k as f64).collect();
    let mut dev = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in &radii {
        let w = weiss(&field, 0.0, r)?.w;
        dev = dev.max((w - target).abs() / target);
        lo = lo.min(w);
        hi = hi.max(w);
    }
    o.record("W(0.1)", weiss(&field, 0.0, 0.1)?.w);
    o.require("max_rel_dev_from_target", dev, dev <= 0.01);
    o.record("spread_over_R", (hi - lo) / hi.abs());
    // analytic value of W for A r^beta g: (2 A^gamma - A^2 lambda*) / (1 + beta gamma)
    let analytic = HalfPlaneField::new(hp.clone(), 0.0);
    o.record("W_analytic", weiss(&analytic, 0.0, 0.25)?.w);
    let p = &hp.profile;
    o.record("W_closed_form", (2.0 - p.slope_at_zero) / (1.0 + p.beta() * p.params.gamma));

    // W(R rho, u) against W(rho, u_R) with u_R resampled on a grid of the same shape;
    // slack c (h / R) E / rho, the discretisation error model of the sweeps
    let big_r = 0.5;
    let kv = p.params.derived().kappa_vol;
    for n in [128, 256] {
        let f = half_plane_grid(&hp, n)?;
        let scaled = rescale_onto(&f, 0.0, big_r, f.grid.clone())?;
        let h = f.grid.h() / big_r;
        for rho in [0.2, 0.4, 0.6] {
            let direct = weiss(&f, 0.0, big_r * rho)?.w;
            let ws = weiss(&scaled, 0.0, rho)?;
            let tol = DEFAULT_C_MONO * h / rho * ws.dirichlet * rho.powf(-kv);
            let d = (ws.w - direct).abs();
            o.require(format!("scaling_diff(n={n},rho={rho})"), d, d <= tol);
            o.record(format!("scaling_tol(n={n},rho={rho})"), tol);
        }
    }
    Ok(o)
}

/// Boundary data used by the minimizer checks and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// The flux-consistent half-plane solution, free boundary at 0.
    HalfPlane,
    /// `0.6 (x + 0.2)_+ + 0.3 y + 0.1 x^2`.
    Ramp,
    /// `(0.8 x + 0.3 sin 3x)_+ + 0.5 y`.
    Bump,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "halfplane" | "hp" => Ok(Scenario::HalfPlane),
            "ramp" => Ok(Scenario::Ramp),
            "bump" => Ok(Scenario::Bump),
            _ => Err(Error::Parse(format!("unknown scenario '{name}' (halfplane, ramp, bump)"))),
        }
    }

    pub fn data(&self, grid: Arc<Grid2D>) -> Result<Field> {
        Ok(match self {
            Scenario::HalfPlane => {
                let p = grid.params;
                let hp = flux_consistent_halfplane(p.s, p.gamma)?;
                Field::from_fn(grid, |x, y| hp.value(x, y))
            }
            Scenario::Ramp => Field::from_fn(grid, |x, y| 0.6 * (x + 0.2).max(0.0) + 0.3 * y + 0.1 * x * x),
            Scenario::Bump => Field::from_fn(grid, |x, y| (0.8 * x + 0.3 * (3.0 * x).sin()).max(0.0) + 0.5 * y),
        })
    }
}

/// Minimizer on `[-1, 1] x [0, 1]` with `n x n/2` cells.
pub fn scenario_minimizer(scenario: Scenario, params: Params, n: usize) -> Result<Minimizer> {
    let grid = Arc::new(Grid2D::new(params, n, n / 2, 1.0, 1.0, None)?);
    let data = scenario.data(grid.clone())?;
    minimize_energy(grid, &data, &MinimizerConfig::default())
}

/// Free-boundary point closest to the centre and the sweep radii that fit around it.
pub fn sweep_setup(m: &Minimizer, count: usize) -> Result<(f64, Vec<f64>)> {
    let x0 = *m
        .fb_points
        .iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or_else(|| Error::Domain("the minimizer has no free-boundary point".into()))?;
    let g = &m.field.grid;
    let rmax = 0.95 * (g.lx - x0.abs()).min(g.ly);
    let rmin = 0.05;
    if rmax <= rmin {
        return Err(Error::Domain(format!("free boundary at {x0} is too close to the edge")));
    }
    let radii = (0..count).map(|k| rmin + (rmax - rmin) * k as f64 / (count - 1) as f64).collect();
    Ok((x0, radii))
}

fn weiss_monotonicity() -> Result<Outcome> {
    let mut o = Outcome::new(format!("no slope below -c h E / (r0 r1), c = {DEFAULT_C_MONO}, 20 radii"));
    let params = Params::new(0.5, 0.5, 1)?;
    for sc in [Scenario::Ramp, Scenario::Bump] {
        let m = scenario_minimizer(sc, params, 256)?;
        let (x0, radii) = sweep_setup(&m, 20)?;
        let sw = weiss_sweep(&m.field, x0, &radii, DEFAULT_C_MONO)?;
        o.record(format!("{sc:?}_x0"), x0);
        o.require(format!("{sc:?}_violations"), sw.violation_count as f64, sw.violation_count == 0);
        let worst = sw.forward_differences.iter().zip(&sw.tol_mono).map(|(d, t)| d / t).fold(f64::INFINITY, f64::min);
        o.record(format!("{sc:?}_min_slope_over_tol"), worst);
    }
    Ok(o)
}

fn monneau_check() -> Result<Outcome> {
    let mut o = Outcome::new("M(p, p) <= 1e-14; no slope below -c h S / (r0 r1) for minimizer/blow-up pairs");
    let params = Params::new(0.5, 0.5, 1)?;
    let hp = flux_consistent_halfplane(0.5, 0.5)?;
    let p = HalfPlaneField::new(hp.clone(), 0.0);
    let mut self_dist = 0.0f64;
    for r in [0.1, 0.3, 0.7] {
        self_dist = self_dist.max(monneau(&p, &p, 0.0, r)?.abs());
    }
    let grid_field = half_plane_grid(&hp, 128)?;
    for r in [0.1, 0.3, 0.7] {
        self_dist = self_dist.max(monneau(&grid_field, &grid_field, 0.0, r)?.abs());
    }
    o.require("M(p,p)", self_dist, self_dist <= 1e-14);
    for sc in [Scenario::HalfPlane, Scenario::Ramp] {
        let m = scenario_minimizer(sc, params, 256)?;
        let (x0, radii) = sweep_setup(&m, 20)?;
        let p = HalfPlaneField::new(hp.clone(), x0);
        let sw = monneau_sweep(&m.field, &p, x0, &radii, DEFAULT_C_MONO)?;
        o.require(format!("{sc:?}_violations"), sw.violation_count as f64, sw.violation_count == 0);
        o.record(format!("{sc:?}_M_first"), sw.values[0]);
        o.record(format!("{sc:?}_M_last"), *sw.values.last().expect("non-empty"));
    }
    Ok(o)
}

fn growth_check() -> Result<Outcome> {
    let mut o = Outcome::new("|growth exponent - beta| <= 0.1; inf density ratio > 0.05");
    let params = Params::new(0.5, 0.5, 1)?;
    let m = scenario_minimizer(Scenario::HalfPlane, params, 256)?;
    let (x0, _) = sweep_setup(&m, 2)?;
    let radii: Vec<f64> = (2..=6).map(|k| 0.5f64.powi(k)).collect();
    let fit = measure_nondegeneracy(&m.field, x0, &radii)?;
    o.record("beta", params.beta());
    o.record("slope", fit.slope);
    let e = (fit.slope - params.beta()).abs();
    o.require("slope_err", e, e <= 0.1);
    let d = measure_density(&m.field, x0, &radii, m.fb_threshold)?;
    o.require("density_inf", d.inf_ratio, d.inf_ratio > 0.05);
    Ok(o)
}

fn domain_variation_check() -> Result<Outcome> {
    let mut o = Outcome::new("|w - 1| <= 1e-8 for an exact translate; expansion constant drift <= 20% over R = 20, 40, 80");
    let hp = flux_consistent_halfplane(0.5, 0.5)?;
    let eps = 0.1;
    let mut err = 0.0f64;
    for n in [1usize, 2] {
        for x in ball_samples(n, 0.5, 6) {
            let dv = domain_variation(|y| hp.value(y[n - 1] + eps, y[n]), &hp, n, eps, &x)?;
            err = err.max((dv.w - 1.0).abs());
        }
    }
    o.require("translate_err", err, err <= 1e-8);
    let pts = ball_samples(2, 0.5, 10);
    let sw = expansion_sweep(&hp, 2, &[20.0, 40.0, 80.0], &pts)?;
    for c in &sw.constants {
        o.record(format!("C(R={})", c.r), c.constant);
    }
    o.require("drift", sw.drift, sw.drift <= 0.2);
    // control case where the first-order terms of w and gamma_R coincide
    let cav = HalfPlane::new(profile_for(0.5, 0.0)?, 1.0);
    let sw0 = expansion_sweep(&cav, 2, &[20.0, 40.0, 80.0], &pts)?;
    o.record("drift(gamma=0)", sw0.drift);
    let sub = RadialSubsolution::new(hp, 1, 20.0)?;
    let one_d = ball_samples(1, 0.5, 8)
        .iter()
        .map(|x| (sub.eval(x).unwrap_or(f64::NAN) - sub.hp.value(x[0], x[1])).abs())
        .fold(0.0, f64::max);
    o.record("n1_vR_minus_U", one_d);
    Ok(o)
}

/// Radii `2h .. 8h` on which the first-order coefficient is fitted.
pub fn linearized_radii(grid: &Grid2D) -> Vec<f64> {
    (2..=8).map(|k| k as f64 * grid.dx()).collect()
}

pub fn linearized_boundary(x: f64, y: f64) -> f64 {
    1.0 + 0.3 * (1.0 - x).powi(2) * y
}

fn linearized_check() -> Result<Outcome> {
    let mut o = Outcome::new("constants exact to 1e-12; interior residual <= 1e-8; |b| < 10 x |b_h - b_{h/2}|");
    let hp = flux_consistent_halfplane(0.5, 0.5)?;
    let params = hp.profile.params;
    let grid = Arc::new(Grid2D::new(params, 64, 32, 1.0, 1.0, None)?);
    let c = solve_linearized(grid, &hp, |_, _| 0.7, 1e-13, 100_000)?;
    let e = c.field.values.iter().fold(0.0f64, |m, v| m.max((v - 0.7).abs()));
    o.require("constant_err", e, e <= 1e-12);
    let angles: Vec<f64> = (0..=4).map(|k| k as f64 * PI / 4.0).collect();
    let mut b = Vec::new();
    let mut res = 0.0f64;
    for n in [128, 256] {
        let grid = Arc::new(Grid2D::new(params, n, n / 2, 1.0, 1.0, None)?);
        let rep = solve_linearized(grid.clone(), &hp, linearized_boundary, 1e-13, 200_000)?;
        res = res.max(rep.interior_residual);
        o.record(format!("floored_faces({n})"), rep.floored_faces as f64);
        b.push(radial_fit(&rep.field, 0.0, &linearized_radii(&grid), &angles)?.b_max);
    }
    o.require("interior_residual", res, res <= 1e-8);
    let noise = (b[1] - b[0]).abs();
    o.record("b_128", b[0]);
    o.record("noise_floor", noise);
    o.require("b_256", b[1], b[1] < 10.0 * noise);
    Ok(o)
}

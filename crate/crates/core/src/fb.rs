//! Free-boundary measurements on the trace of a field: location, contact
//! measure, density of the contact set, growth away from the free boundary
//! and flatness across dyadic scales.
//!
//! The trace is read as the piecewise-linear interpolant of the bottom row;
//! the positivity set is `{u > threshold}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::minimizer::free_boundary_points;

/// Growth fit `log sup_{B_r} u ~ slope log r + intercept` at one free-boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthFit {
    pub x0: f64,
    pub radii: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// Contact-set density `|{u = 0} cap B_r(x0)| / |B_r|` per radius.
#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub x0: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub inf_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeBoundaryReport {
    pub threshold: f64,
    pub fb_points: Vec<f64>,
    /// Length of the contact set on the whole trace.
    pub contact_measure: f64,
    pub density: Vec<DensityReport>,
    pub growth: Vec<GrowthFit>,
}

/// Breakpoints of the interpolated trace on `[lo, hi]`, with crossings of the
/// threshold inserted, and the sign of `u - threshold` on each piece.
fn pieces(x: &[f64], trace: &[f64], threshold: f64, lo: f64, hi: f64) -> Vec<(f64, f64, bool)> {
    let mut out = Vec::new();
    for i in 0..trace.len() - 1 {
        let (xa, xb) = (x[i], x[i + 1]);
        let (a, b) = (lo.max(xa), hi.min(xb));
        if b <= a {
            continue;
        }
        let lin = |t: f64| trace[i] + (trace[i + 1] - trace[i]) * (t - xa) / (xb - xa) - threshold;
        let (fa, fb) = (lin(a), lin(b));
        if (fa > 0.0) != (fb > 0.0) {
            let c = a + (b - a) * fa / (fa - fb);
            out.push((a, c, fa > 0.0));
            out.push((c, b, fb > 0.0));
        } else {
            out.push((a, b, fa > 0.0 || (fa == 0.0 && fb > 0.0)));
        }
    }
    out
}

/// Length of `{u <= threshold}` within `[lo, hi]`.
pub fn contact_length(field: &Field, threshold: f64, lo: f64, hi: f64) -> f64 {
    pieces(&field.grid.x, field.trace(), threshold, lo, hi).iter().filter(|p| !p.2).map(|p| p.1 - p.0).sum()
}

fn check_window(field: &Field, x0: f64, r: f64) -> Result<()> {
    let lx = field.grid.lx;
    if !(r > 0.0) || x0 - r < -lx * (1.0 + 1e-12) || x0 + r > lx * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("radius {r} about {x0} exceeds the trace window")));
    }
    Ok(())
}

pub fn measure_density(field: &Field, x0: f64, radii: &[f64], threshold: f64) -> Result<DensityReport> {
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        check_window(field, x0, r)?;
        ratios.push(contact_length(field, threshold, x0 - r, x0 + r) / (2.0 * r));
    }
    let inf_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DensityReport { x0, radii: radii.to_vec(), ratios, inf_ratio })
}

/// Least-squares fit of `log sup_{|x - x0| < r} u(x, 0)` against `log r`.
///
/// Radii outside the window or with a vanishing supremum are skipped; at
/// least four must remain.
pub fn measure_nondegeneracy(field: &Field, x0: f64, radii: &[f64]) -> Result<GrowthFit> {
    let g = &field.grid;
    let tr = field.trace();
    let mut used = Vec::new();
    let mut sups = Vec::new();
    for &r in radii {
        if check_window(field, x0, r).is_err() {
            continue;
        }
        let (lo, hi) = (x0 - r, x0 + r);
        let mut m = field.value(lo, 0.0).unwrap_or(0.0).max(field.value(hi, 0.0).unwrap_or(0.0));
        for i in 0..=g.nx {
            if g.x[i] > lo && g.x[i] < hi {
                m = m.max(tr[i]);
            }
        }
        if m > 0.0 {
            used.push(r);
            sups.push(m);
        }
    }
    if used.len() < 4 {
        return Err(Error::Domain(format!("only {} usable radii for the growth fit (need 4)", used.len())));
    }
    let (slope, intercept) = fit_line(&used.iter().map(|r| r.ln()).collect::<Vec<_>>(), &sups.iter().map(|v| v.ln()).collect::<Vec<_>>());
    Ok(GrowthFit { x0, radii: used, sup_values: sups, slope, intercept })
}

/// Ordinary least squares `y ~ slope x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Free-boundary points, contact measure, and per-point density and growth over `radii`.
///
/// Radii that leave the window are dropped per point; a point whose growth
/// fit has fewer than four usable radii gets no growth entry.
pub fn extract_free_boundary(field: &Field, threshold: f64, radii: &[f64]) -> FreeBoundaryReport {
    let g = &field.grid;
    let fb_points = free_boundary_points(&g.x, field.trace(), threshold);
    let contact_measure = contact_length(field, threshold, -g.lx, g.lx);
    let mut density = Vec::new();
    let mut growth = Vec::new();
    for &x0 in &fb_points {
        let ok: Vec<f64> = radii.iter().copied().filter(|&r| check_window(field, x0, r).is_ok()).collect();
        if !ok.is_empty() {
            if let Ok(d) = measure_density(field, x0, &ok, threshold) {
                density.push(d);
            }
        }
        if let Ok(gf) = measure_nondegeneracy(field, x0, &ok) {
            growth.push(gf);
        }
    }
    FreeBoundaryReport { threshold, fb_points, contact_measure, density, growth }
}

/// Flatness per scale: the smallest `eps` with
/// `{xi <= -eps} in {u = 0} in {xi <= eps}` on `[-1, 1]`, where
/// `xi = normal (x - x0) / r` and the positive set lies on the `+xi` side.
#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub x0: f64,
    pub scales: Vec<f64>,
    pub eps: Vec<f64>,
}

pub fn measure_flatness(field: &Field, x0: f64, normal: f64, scales: &[f64], threshold: f64) -> Result<FlatnessReport> {
    if scales.len() < 4 {
        return Err(Error::Domain("flatness needs at least four scales".into()));
    }
    let mut eps = Vec::new();
    for &r in scales {
        check_window(field, x0, r)?;
        let mut e = 0.0f64;
        for (a, b, pos) in pieces(&field.grid.x, field.trace(), threshold, x0 - r, x0 + r) {
            let (xa, xb) = (normal * (a - x0) / r, normal * (b - x0) / r);
            let (lo, hi) = (xa.min(xb), xa.max(xb));
            if pos {
                e = e.max(-lo);
            } else {
                e = e.max(hi);
            }
        }
        eps.push(e.clamp(0.0, 1.0));
    }
    Ok(FlatnessReport { x0, scales: scales.to_vec(), eps })
}

/// Flatness of a trace in two tangential dimensions against the normal at
/// angle `normal_angle`, sampled on a polar grid of the unit disc.
pub fn measure_flatness_2d<F: Fn(f64, f64) -> f64>(
    trace: F,
    x0: (f64, f64),
    normal_angle: f64,
    scales: &[f64],
    threshold: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if scales.len() < 4 {
        return Err(Error::Domain("flatness needs at least four scales".into()));
    }
    let (nc, ns) = (normal_angle.cos(), normal_angle.sin());
    let samples = samples.max(8);
    Ok(scales
        .iter()
        .map(|&r| {
            let mut e = 0.0f64;
            for a in 1..=samples {
                let rho = a as f64 / samples as f64;
                let m = 8 * a;
                for k in 0..m {
                    let ph = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    let (px, py) = (rho * ph.cos(), rho * ph.sin());
                    let xi = px * nc + py * ns;
                    let pos = trace(x0.0 + r * px, x0.1 + r * py) > threshold;
                    e = e.max(if pos { -xi } else { xi });
                }
            }
            e.clamp(0.0, 1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::params::Params;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<Grid2D> {
        Arc::new(Grid2D::new(Params::new(0.5, 0.5, 1).unwrap(), n, 4, 1.0, 1.0, None).unwrap())
    }

    #[test]
    fn exact_half_line_trace() {
        let g = grid(64);
        let f = Field::from_fn(g, |x, _| x.max(0.0).powf(2.0 / 3.0));
        let rep = extract_free_boundary(&f, 1e-12, &[0.125, 0.25, 0.5, 0.75]);
        assert_eq!(rep.fb_points.len(), 1);
        assert!(rep.fb_points[0].abs() < 1e-9);
        assert!((rep.contact_measure - 1.0).abs() < 1e-9);
        for &q in &rep.density[0].ratios {
            assert!((q - 0.5).abs() < 1e-9);
        }
        // sup over [-r, r] is u(r) exactly when r is a node
        assert!((rep.growth[0].slope - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_field() {
        let g = grid(16);
        let f = Field::zeros(g);
        let rep = extract_free_boundary(&f, 1e-12, &[0.5]);
        assert!(rep.fb_points.is_empty());
        assert_eq!(rep.contact_measure, 2.0);
        let d = measure_density(&f, 0.0, &[0.25, 0.5], 1e-12).unwrap();
        assert!(d.ratios.iter().all(|&q| q == 1.0));
    }

    #[test]
    fn density_errors_outside_window() {
        let f = Field::zeros(grid(16));
        assert!(measure_density(&f, 0.5, &[0.6], 0.0).is_err());
        assert!(measure_nondegeneracy(&f, 0.0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn flatness_of_shifted_half_line() {
        let g = grid(256);
        // shift by a whole number of cells so the interpolant is exact
        let f = Field::from_fn(g, |x, _| (x - 0.0625).max(0.0));
        let scales = [0.8, 0.4, 0.2, 0.1];
        let rep = measure_flatness(&f, 0.0, 1.0, &scales, 1e-12).unwrap();
        for (r, e) in scales.iter().zip(&rep.eps) {
            assert!((e - (0.0625 / r).min(1.0)).abs() < 1e-9, "{r} {e}");
        }
        let centred = measure_flatness(&f, 0.0625, 1.0, &scales, 1e-12).unwrap();
        assert!(centred.eps.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn curved_boundary_flatness_decays() {
        // contact set outside a disc of radius 1 about (1, 0): the boundary
        // deviates from its tangent line by about r^2 / 2 at scale r
        let trace = |x: f64, y: f64| if (x - 1.0).hypot(y) < 1.0 { 1.0 } else { 0.0 };
        let scales = [0.4, 0.2, 0.1, 0.05];
        let eps = measure_flatness_2d(trace, (0.0, 0.0), 0.0, &scales, 0.5, 200).unwrap();
        for w in eps.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (r, e) in scales.iter().zip(&eps) {
            assert!((e / r - 0.5).abs() < 0.15, "{r} {e}");
        }
    }
}

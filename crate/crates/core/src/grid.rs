//! Graded tensor grids on `[-Lx, Lx] x [0, Ly]` and nodal fields.
//!
//! Rows are graded towards `y = 0` by `y_j = Ly (j/ny)^q`. Fields are
//! interpolated bilinearly in `(x, y^{2s})`, the variable in which the
//! singular branch `y^{2s}` of the degenerate equation is linear.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Params;

#[derive(Debug, Clone, Serialize)]
pub struct Grid2D {
    pub params: Params,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub q: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Default grading exponent `max(1, 1/(2s))`.
pub fn default_grading(s: f64) -> f64 {
    (1.0 / (2.0 * s)).max(1.0)
}

fn int_pow(p: f64, a: f64, b: f64) -> f64 {
    (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
}

impl Grid2D {
    pub fn new(params: Params, nx: usize, ny: usize, lx: f64, ly: f64, q: Option<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!("grid needs nx, ny >= 2 (got {nx} x {ny})")));
        }
        if nx % 2 != 0 {
            return Err(Error::InvalidParameter("nx must be even so that x = 0 is a node".into()));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParameter("grid extents must be positive".into()));
        }
        let q = q.unwrap_or_else(|| default_grading(params.s));
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("grading exponent q = {q} must be >= 1")));
        }
        let x = (0..=nx).map(|i| -lx + 2.0 * lx * i as f64 / nx as f64).collect();
        let y = (0..=ny).map(|j| ly * (j as f64 / ny as f64).powf(q)).collect();
        Ok(Grid2D { params, nx, ny, lx, ly, q, x, y })
    }

    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    /// Largest cell dimension, used as the mesh size `h`.
    pub fn h(&self) -> f64 {
        let dy = self.y.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        self.dx().max(dy)
    }

    pub fn is_outer(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.nx || j == self.ny
    }

    /// Extent `[lo, hi]` in `y` of the dual cell of row `j`.
    pub fn dual_y(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { 0.0 } else { 0.5 * (self.y[j - 1] + self.y[j]) };
        let hi = if j == self.ny { self.y[j] } else { 0.5 * (self.y[j] + self.y[j + 1]) };
        (lo, hi)
    }

    /// Width in `x` of the dual cell of column `i`.
    pub fn dual_x(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    /// `int y^alpha dy` over the dual extent of row `j`.
    pub fn row_weight(&self, j: usize) -> f64 {
        let (lo, hi) = self.dual_y(j);
        int_pow(self.alpha(), lo, hi)
    }

    /// Transmissibility per unit width between rows `j` and `j+1`:
    /// `1 / int y^{-alpha} dy`, exact for functions affine in `y^{2s}`.
    pub fn column_transmissibility(&self, j: usize) -> f64 {
        let ts = 2.0 * self.params.s;
        ts / (self.y[j + 1].powf(ts) - self.y[j].powf(ts))
    }

    /// Index of the cell `[x_i, x_{i+1}]` containing `x`, if any.
    pub fn locate_x(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= -self.lx && x <= self.lx) {
            return None;
        }
        let f = (x + self.lx) / self.dx();
        let i = (f.floor() as usize).min(self.nx - 1);
        Some((i, (x - self.x[i]) / self.dx()))
    }

    /// Row index and fraction in the variable `y^{2s}`.
    pub fn locate_y(&self, y: f64) -> Option<(usize, f64)> {
        if !(y >= 0.0 && y <= self.ly) {
            return None;
        }
        let j = ((self.ny as f64 * (y / self.ly).powf(1.0 / self.q)).floor() as usize).min(self.ny - 1);
        let ts = 2.0 * self.params.s;
        // guard against rounding in the inverse grading
        let j = if y < self.y[j] && j > 0 { j - 1 } else if j + 1 < self.ny && y > self.y[j + 1] { j + 1 } else { j };
        let e0 = self.y[j].powf(ts);
        let e1 = self.y[j + 1].powf(ts);
        Some((j, (y.powf(ts) - e0) / (e1 - e0)))
    }
}

/// Nodal values on a [`Grid2D`], stored row by row from `y = 0` upwards.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid2D>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<Grid2D>) -> Self {
        let n = grid.len();
        Field { grid, values: vec![0.0; n] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Arc<Grid2D>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                values.push(f(grid.x[i], grid.y[j]));
            }
        }
        Field { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Values on the bottom row `y = 0`.
    pub fn trace(&self) -> &[f64] {
        &self.values[..=self.grid.nx]
    }

    /// Interpolated value, bilinear in `(x, y^{2s})`. `None` outside the grid.
    pub fn value(&self, x: f64, y: f64) -> Option<f64> {
        let (i, tx) = self.grid.locate_x(x)?;
        let (j, ty) = self.grid.locate_y(y)?;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    /// Gradient `(u_x, u_y)` of the interpolant; `u_y` is infinite on `y = 0` when `s < 1/2`.
    pub fn gradient(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let (i, tx) = self.grid.locate_x(x)?;
        let (j, ty) = self.grid.locate_y(y)?;
        let g = &self.grid;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        let ux = ((1.0 - ty) * (v10 - v00) + ty * (v11 - v01)) / g.dx();
        let ts = 2.0 * g.params.s;
        let de = g.y[j + 1].powf(ts) - g.y[j].powf(ts);
        let ueta = ((1.0 - tx) * (v01 - v00) + tx * (v11 - v10)) / de;
        let uy = ueta * ts * y.powf(ts - 1.0);
        Some((ux, uy))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Text snapshot: a header line with the grid metadata, then one line per row.
    pub fn to_snapshot(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        writeln!(
            out,
            "# fbnl-field nx={} ny={} Lx={:.16e} Ly={:.16e} q={:.16e} s={:.16e} gamma={:.16e}",
            g.nx, g.ny, g.lx, g.ly, g.q, g.params.s, g.params.gamma
        )
        .unwrap();
        for j in 0..=g.ny {
            let row: Vec<String> = (0..=g.nx).map(|i| format!("{:.16e}", self.at(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
        let get = |key: &str| -> Result<String> {
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(&format!("{key}=")).map(str::to_string))
                .ok_or_else(|| Error::Parse(format!("snapshot header lacks {key}")))
        };
        let num = |v: String| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v}: {e}")));
        let nx: usize = get("nx")?.parse().map_err(|_| Error::Parse("bad nx".into()))?;
        let ny: usize = get("ny")?.parse().map_err(|_| Error::Parse("bad ny".into()))?;
        let lx = num(get("Lx")?)?;
        let ly = num(get("Ly")?)?;
        let q = num(get("q")?)?;
        let s = num(get("s")?)?;
        let gamma = num(get("gamma")?)?;
        let grid = Grid2D::new(Params::new(s, gamma, 1)?, nx, ny, lx, ly, Some(q))?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse(format!("{tok}: {e}")))?);
            }
        }
        if values.len() != grid.len() {
            return Err(Error::Parse(format!("expected {} values, found {}", grid.len(), values.len())));
        }
        Ok(Field { grid: Arc::new(grid), values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(s: f64) -> Arc<Grid2D> {
        Arc::new(Grid2D::new(Params::new(s, 0.5, 1).unwrap(), 16, 12, 1.0, 0.5, None).unwrap())
    }

    #[test]
    fn interpolation_exact_for_affine_in_eta() {
        let g = grid(0.3);
        let f = Field::from_fn(g.clone(), |x, y| 1.0 + 2.0 * x + 3.0 * y.powf(0.6));
        for &(x, y) in &[(0.13, 0.0), (-0.77, 0.001), (0.5, 0.31), (1.0, 0.5)] {
            let v = f.value(x, y).unwrap();
            assert!((v - (1.0 + 2.0 * x + 3.0 * y.powf(0.6))).abs() < 1e-13);
        }
        assert!(f.value(1.1, 0.1).is_none());
        assert!(f.value(0.0, -0.1).is_none());
    }

    #[test]
    fn grading_and_weights() {
        let g = grid(0.25);
        assert_eq!(g.q, 2.0);
        assert_eq!(g.y[0], 0.0);
        assert!((g.y[g.ny] - 0.5).abs() < 1e-15);
        let total: f64 = (0..=g.ny).map(|j| g.row_weight(j)).sum();
        assert!((total - 0.5f64.powf(1.5) / 1.5).abs() < 1e-14);
        assert!(Grid2D::new(Params::new(0.5, 0.5, 1).unwrap(), 15, 8, 1.0, 1.0, None).is_err());
    }

    proptest! {
        #[test]
        fn snapshot_round_trip(seed in 0u64..1000, s in 0.1f64..0.9) {
            let g = grid(s);
            let f = Field::from_fn(g, |x, y| ((seed as f64 + 1.0) * x).sin() * (y + 1e-3).ln() / 7.0);
            let back = Field::from_snapshot(&f.to_snapshot()).unwrap();
            prop_assert_eq!(&back.values, &f.values);
            prop_assert_eq!(back.grid.y.clone(), f.grid.y.clone());
        }
    }
}

//! Problem parameters and the exponent algebra derived from them.
//!
//! All quantities are closed-form functions of `(s, gamma, n)`. The
//! homogeneity degree `beta` is the scaling under which the energy is
//! invariant, `alpha` is the weight exponent of the extension variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated problem parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub s: f64,
    pub gamma: f64,
    pub n: usize,
}

/// Exponents derived from [`Params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub alpha: f64,
    pub beta: f64,
    /// Normalising power of `R` in front of the volume terms of the Weiss energy.
    pub kappa_vol: f64,
    /// Normalising power of `R` in front of the boundary term.
    pub kappa_surf: f64,
    /// Exponent `e` in `J(B_{1/lambda}, u_lambda) = lambda^e J(B_1, u)`.
    pub energy_scale_exp: f64,
}

impl Params {
    pub fn new(s: f64, gamma: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1)")));
        }
        if !(gamma >= 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {gamma} must lie in [0, 1)"
            )));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("dimension n must be >= 1".into()));
        }
        Ok(Params { s, gamma, n })
    }

    pub fn alpha(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    pub fn beta(&self) -> f64 {
        2.0 * self.s / (2.0 - self.gamma)
    }

    /// True in the cavitation limit, where `u^gamma` is read as the indicator of `{u > 0}`.
    pub fn is_cavitation(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn derived(&self) -> DerivedExponents {
        let alpha = self.alpha();
        let beta = self.beta();
        let nm1 = self.n as f64 - 1.0;
        let kappa_vol = nm1 + (2.0 - alpha * self.gamma) / (2.0 - self.gamma);
        DerivedExponents {
            alpha,
            beta,
            kappa_vol,
            kappa_surf: kappa_vol + 1.0,
            energy_scale_exp: -nm1 - beta * self.gamma,
        }
    }
}

/// `t^gamma`, with the convention `t^0 = 1_{t > 0}` and `t^gamma = 0` for `t <= 0`.
pub fn penalty_power(t: f64, gamma: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if gamma == 0.0 {
        1.0
    } else {
        t.powf(gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_half_values() {
        let d = Params::new(0.5, 0.5, 1).unwrap().derived();
        assert_eq!(d.alpha, 0.0);
        assert!((d.beta - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.kappa_vol - 4.0 / 3.0).abs() < 1e-15);
        assert!((d.kappa_surf - 7.0 / 3.0).abs() < 1e-15);
        assert!((d.energy_scale_exp + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cavitation_limit() {
        let p = Params::new(0.3, 0.0, 2).unwrap();
        assert!(p.is_cavitation());
        assert!((p.beta() - 0.3).abs() < 1e-15);
        assert_eq!(penalty_power(2.0, 0.0), 1.0);
        assert_eq!(penalty_power(0.0, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Params::new(0.0, 0.5, 1).is_err());
        assert!(Params::new(1.0, 0.5, 1).is_err());
        assert!(Params::new(0.5, 1.0, 1).is_err());
        assert!(Params::new(0.5, -0.1, 1).is_err());
        assert!(Params::new(0.5, 0.5, 0).is_err());
        assert!(Params::new(f64::NAN, 0.5, 1).is_err());
    }

    proptest! {
        #[test]
        fn identities(s in 0.01f64..0.99, g in 0.0f64..0.99, n in 1usize..6) {
            let p = Params::new(s, g, n).unwrap();
            let d = p.derived();
            prop_assert!(d.beta > s - 1e-15 && d.beta < 2.0 * s);
            prop_assert!((d.beta - s - g * d.beta / 2.0).abs() < 1e-14);
            prop_assert!(((2.0 - d.alpha * g) / (2.0 - g) - 1.0 - d.beta * g).abs() < 1e-14);
            prop_assert!((d.kappa_surf - d.kappa_vol - 1.0).abs() < 1e-14);
        }
    }
}

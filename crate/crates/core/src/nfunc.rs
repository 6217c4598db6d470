//! Orlicz N-functions: evaluation, Young-Fenchel conjugates and inverses.
//!
//! Every family here is even, convex, vanishes only at zero and grows
//! superlinearly, and each keeps a quadratic lower bound near the origin
//! (the property the sub-Gaussian machinery downstream relies on).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opt::golden_min;
use crate::tol;

/// Supported N-function families.
///
/// Construct through the checked constructors; deserialization routes
/// through the same parameter validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NFunction {
    /// `phi(x) = |x|^alpha / alpha` with `1 < alpha <= 2`.
    PowerAlpha { alpha: f64 },
    /// `phi(x) = |x|^2 / alpha` for `|x| <= 1`, `|x|^alpha / alpha` beyond,
    /// with `alpha > 2`.
    PiecewisePower { alpha: f64 },
    /// `phi(x) = exp(|x|) - |x| - 1`.
    ExpAbs,
    /// `phi(x) = x^2 / 2`.
    GaussianHalfSquare,
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum NFunctionRaw {
    PowerAlpha { alpha: f64 },
    PiecewisePower { alpha: f64 },
    ExpAbs,
    GaussianHalfSquare,
}

impl TryFrom<NFunctionRaw> for NFunction {
    type Error = Error;

    fn try_from(raw: NFunctionRaw) -> Result<Self> {
        match raw {
            NFunctionRaw::PowerAlpha { alpha } => NFunction::power_alpha(alpha),
            NFunctionRaw::PiecewisePower { alpha } => NFunction::piecewise_power(alpha),
            NFunctionRaw::ExpAbs => Ok(NFunction::ExpAbs),
            NFunctionRaw::GaussianHalfSquare => Ok(NFunction::GaussianHalfSquare),
        }
    }
}

impl<'de> Deserialize<'de> for NFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        NFunctionRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl NFunction {
    pub fn power_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "power_alpha needs 1 < alpha <= 2, got {alpha}"
            )));
        }
        Ok(NFunction::PowerAlpha { alpha })
    }

    pub fn piecewise_power(alpha: f64) -> Result<Self> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "piecewise_power needs alpha > 2, got {alpha}"
            )));
        }
        Ok(NFunction::PiecewisePower { alpha })
    }

    /// `phi(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            NFunction::PowerAlpha { alpha } => a.powf(alpha) / alpha,
            NFunction::PiecewisePower { alpha } => {
                if a <= 1.0 {
                    a * a / alpha
                } else {
                    a.powf(alpha) / alpha
                }
            }
            NFunction::ExpAbs => a.exp_m1() - a,
            NFunction::GaussianHalfSquare => 0.5 * x * x,
        }
    }

    /// Young-Fenchel conjugate `phi*(x) = sup_y (x y - phi(y))`.
    ///
    /// Closed form where one exists; the piecewise-power family always goes
    /// through the numeric Legendre transform.
    pub fn conjugate(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            NFunction::PowerAlpha { alpha } => {
                let gamma = alpha / (alpha - 1.0);
                a.powf(gamma) / gamma
            }
            NFunction::ExpAbs => (1.0 + a) * a.ln_1p() - a,
            NFunction::GaussianHalfSquare => 0.5 * x * x,
            NFunction::PiecewisePower { .. } => self.numeric_conjugate(x),
        }
    }

    /// Legendre transform computed as a max over a log-spaced grid with
    /// golden-section refinement around the argmax.
    ///
    /// Public so closed-form conjugates can be cross-checked against it.
    pub fn numeric_conjugate(&self, x: f64) -> f64 {
        let a = x.abs();
        if a == 0.0 {
            return 0.0;
        }
        let obj = |y: f64| a * y - self.eval(y);
        let mut y_hi: f64 = 10.0;
        loop {
            let n = 400usize;
            let lo_log = -8.0f64;
            let step = (y_hi.log10() - lo_log) / (n as f64 - 1.0);
            let mut best_i = 0usize;
            let mut best_y = 0.0f64;
            let mut best_v = 0.0f64; // y = 0 contributes 0
            for i in 0..n {
                let y = 10f64.powf(lo_log + step * i as f64);
                let v = obj(y);
                if v > best_v {
                    best_i = i;
                    best_y = y;
                    best_v = v;
                }
            }
            // extend the grid while the argmax sits at the top edge
            if best_i + 1 == n && y_hi < 1e12 {
                y_hi *= 100.0;
                continue;
            }
            let lo = if best_i == 0 {
                0.0
            } else {
                10f64.powf(lo_log + step * (best_i as f64 - 1.0))
            };
            let hi = if best_i + 1 < n {
                10f64.powf(lo_log + step * (best_i as f64 + 1.0))
            } else {
                best_y
            };
            let (_, neg) = golden_min(|y| -obj(y), lo, hi, 1e-13 * (1.0 + hi));
            return (-neg).max(best_v).max(0.0);
        }
    }

    /// Inverse of `phi` restricted to `[0, inf)`; `y < 0` is a domain error.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!(
                "phi inverse is defined for y >= 0, got {y}"
            )));
        }
        Ok(match *self {
            NFunction::PowerAlpha { alpha } => (alpha * y).powf(1.0 / alpha),
            NFunction::PiecewisePower { alpha } => {
                if y <= 1.0 / alpha {
                    (alpha * y).sqrt()
                } else {
                    (alpha * y).powf(1.0 / alpha)
                }
            }
            NFunction::GaussianHalfSquare => (2.0 * y).sqrt(),
            NFunction::ExpAbs => invert_exp_abs(y),
        })
    }

    /// `Psi(v) = v / phi^{-1}(v)` extended continuously by `Psi(v) = 0` for
    /// `v <= 0`. This is the integrand weight of the admissibility test.
    pub fn psi(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let x = self
            .inverse(v)
            .expect("inverse is total on the non-negative axis");
        v / x
    }

    /// A derivative of `phi` (the subgradient choice used for the
    /// Fenchel-Young equality case).
    pub fn derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        s * match *self {
            NFunction::PowerAlpha { alpha } => a.powf(alpha - 1.0),
            NFunction::PiecewisePower { alpha } => {
                if a < 1.0 {
                    2.0 * a / alpha
                } else {
                    a.powf(alpha - 1.0)
                }
            }
            NFunction::ExpAbs => a.exp_m1(),
            NFunction::GaussianHalfSquare => a,
        }
    }

    /// Exponent `p` such that `phi(x) = |x|^p / p` for all large `|x|`,
    /// when the family has one.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            NFunction::PowerAlpha { alpha } | NFunction::PiecewisePower { alpha } => Some(alpha),
            NFunction::GaussianHalfSquare => Some(2.0),
            NFunction::ExpAbs => None,
        }
    }
}

/// Solves `exp(x) - x - 1 = y` for `x >= 0` by bracketed bisection.
fn invert_exp_abs(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let f = |x: f64| x.exp_m1() - x;
    let mut hi = 1.0f64;
    while f(hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol::ROOT_REL * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

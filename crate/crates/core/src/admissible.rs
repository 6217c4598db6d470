//! Weight functions `Z` controlling kernel increments through the
//! sine/ratio inequality, plus the admissibility integral pairing a weight
//! with an N-function.
//!
//! A weight is usable when `u / Z(u)` is non-decreasing past its threshold
//! `u0` and the integral of `Psi(ln(Z^{-1}(1/s) - u0))` converges at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::quad;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AdmissibleFn {
    /// `Z(u) = u^rho` with `0 < rho <= 1`; threshold `u0 = 0`.
    Power { rho: f64 },
    /// `Z(u) = ln^alpha(u + 1)` with `alpha > 1`; threshold `u0 = e^alpha - 1`.
    LogPower { alpha: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum AdmissibleFnRaw {
    Power { rho: f64 },
    LogPower { alpha: f64 },
}

impl TryFrom<AdmissibleFnRaw> for AdmissibleFn {
    type Error = Error;

    fn try_from(raw: AdmissibleFnRaw) -> Result<Self> {
        match raw {
            AdmissibleFnRaw::Power { rho } => AdmissibleFn::power(rho),
            AdmissibleFnRaw::LogPower { alpha } => AdmissibleFn::log_power(alpha),
        }
    }
}

impl<'de> Deserialize<'de> for AdmissibleFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        AdmissibleFnRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl AdmissibleFn {
    pub fn power(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power weight needs 0 < rho <= 1, got {rho}"
            )));
        }
        Ok(AdmissibleFn::Power { rho })
    }

    pub fn log_power(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-power weight needs alpha > 1, got {alpha}"
            )));
        }
        Ok(AdmissibleFn::LogPower { alpha })
    }

    /// Threshold past which `u / Z(u)` is non-decreasing.
    pub fn u0(&self) -> f64 {
        match *self {
            AdmissibleFn::Power { .. } => 0.0,
            AdmissibleFn::LogPower { alpha } => alpha.exp() - 1.0,
        }
    }

    /// `Z(u)` for `u >= 0`; negative `u` is a domain error.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("Z is defined for u >= 0, got {u}")));
        }
        Ok(self.z(u))
    }

    /// Unchecked evaluation on the valid domain; internal hot paths only.
    pub(crate) fn z(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0);
        match *self {
            AdmissibleFn::Power { rho } => u.powf(rho),
            AdmissibleFn::LogPower { alpha } => u.ln_1p().powf(alpha),
        }
    }

    /// Inverse `Z^{-1}(v)` for `v >= 0`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!(
                "Z inverse is defined for v >= 0, got {v}"
            )));
        }
        Ok(match *self {
            AdmissibleFn::Power { rho } => v.powf(1.0 / rho),
            AdmissibleFn::LogPower { alpha } => v.powf(1.0 / alpha).exp_m1(),
        })
    }

    /// `ln(Z^{-1}(y) - u0)` in overflow-safe form.
    ///
    /// Returns `None` when the argument of the logarithm is non-positive
    /// (only possible away from the singular end of the integrals that use
    /// this).
    pub(crate) fn ln_inv_minus_u0(&self, y: f64) -> Option<f64> {
        debug_assert!(y > 0.0);
        match *self {
            AdmissibleFn::Power { rho } => Some(y.ln() / rho),
            AdmissibleFn::LogPower { alpha } => {
                // Z^{-1}(y) - u0 = e^w - e^alpha with w = y^{1/alpha}
                let w = y.powf(1.0 / alpha);
                if w <= alpha {
                    None
                } else {
                    Some(w + (-((alpha - w).exp())).ln_1p())
                }
            }
        }
    }

    /// Admissibility of the pair `(Z, phi)`: convergence of the integral of
    /// `Psi(ln(Z^{-1}(1/s) - u0))` on `(0, eps]`, decided by a dyadic
    /// Cauchy criterion on partial integrals.
    pub fn check_admissible(&self, phi: &NFunction, eps: f64) -> Result<bool> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "admissibility check needs eps > 0, got {eps}"
            )));
        }
        let integrand = |s: f64| match self.ln_inv_minus_u0(1.0 / s) {
            Some(v) => phi.psi(v),
            None => 0.0,
        };
        Ok(quad::cauchy_converges(
            integrand,
            eps,
            tol::ADMISSIBLE_CAUCHY_ABS,
            tol::MAX_DYADIC_LEVELS,
        ))
    }

    /// Property-test oracle for the sine/weight-ratio inequality
    /// `|sin(u/v)| <= Z(|u| + u0) / Z(|v| + u0)`, allowing floating slack.
    pub fn sine_bound_holds(&self, u: f64, v: f64) -> Result<bool> {
        if u == 0.0 || v == 0.0 {
            return Err(Error::Domain(
                "sine bound oracle needs u != 0 and v != 0".into(),
            ));
        }
        let u0 = self.u0();
        let lhs = (u / v).sin().abs();
        let rhs = self.z(u.abs() + u0) / self.z(v.abs() + u0);
        Ok(lhs <= rhs * (1.0 + tol::SINE_BOUND_SLACK))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn eval_and_threshold_frozen_values() {
        let p = AdmissibleFn::power(0.5).unwrap();
        assert_eq!(p.eval(4.0).unwrap(), 2.0);
        assert_eq!(p.u0(), 0.0);
        let l = AdmissibleFn::log_power(2.0).unwrap();
        // ln^2(e^2 - 1 + 1) = 4
        assert!((l.eval(l.u0()).unwrap() - 4.0).abs() < 1e-12);
        assert!((l.u0() - (2.0f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn eval_rejects_negative_argument() {
        assert!(AdmissibleFn::power(1.0).unwrap().eval(-1.0).is_err());
        assert!(AdmissibleFn::log_power(1.5).unwrap().eval(-1e-9).is_err());
    }

    #[test]
    fn constructors_enforce_parameter_ranges() {
        assert!(AdmissibleFn::power(0.0).is_err());
        assert!(AdmissibleFn::power(1.2).is_err());
        assert!(AdmissibleFn::log_power(1.0).is_err());
        assert!(AdmissibleFn::log_power(f64::NAN).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        let fams = [
            AdmissibleFn::power(0.3).unwrap(),
            AdmissibleFn::power(1.0).unwrap(),
            AdmissibleFn::log_power(1.5).unwrap(),
            AdmissibleFn::log_power(3.0).unwrap(),
        ];
        for z in fams {
            for i in 0..200 {
                let u = 1e-3 * 10f64.powf(9.0 * i as f64 / 199.0);
                let v = z.eval(u).unwrap();
                assert!(rel_err(z.inverse(v).unwrap(), u) < 1e-10, "{z:?} u = {u}");
            }
        }
    }

    #[test]
    fn monotone_increasing() {
        let fams = [
            AdmissibleFn::power(0.5).unwrap(),
            AdmissibleFn::log_power(2.0).unwrap(),
        ];
        for z in fams {
            let mut prev = z.eval(0.0).unwrap();
            for i in 1..1000 {
                let u = i as f64 * 0.37;
                let cur = z.eval(u).unwrap();
                assert!(cur > prev, "{z:?} not increasing at {u}");
                prev = cur;
            }
        }
    }

    #[test]
    fn ratio_u_over_z_nondecreasing_past_threshold() {
        let fams = [
            AdmissibleFn::power(0.7).unwrap(),
            AdmissibleFn::log_power(2.0).unwrap(),
        ];
        for z in fams {
            let u0 = z.u0();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..1000 {
                let u = u0 + 1e-6 + i as f64 * 0.05;
                let ratio = u / z.eval(u).unwrap();
                assert!(ratio >= prev - 1e-12, "{z:?} ratio dips at {u}");
                prev = ratio;
            }
        }
    }

    #[test]
    fn ln_inv_minus_threshold_is_stable_for_tiny_arguments() {
        let l = AdmissibleFn::log_power(2.0).unwrap();
        // s = 1e-13 would overflow a naive exp; the log form must stay finite
        let v = l.ln_inv_minus_u0(1e13).unwrap();
        assert!(v.is_finite());
        // w = (1e13)^{1/2} dominates; the correction is negligible here
        assert!(rel_err(v, 1e13f64.sqrt()) < 1e-12);
        // below the threshold the argument is non-positive
        assert!(l.ln_inv_minus_u0(1.0).is_none());
    }

    #[test]
    fn admissible_pairs_converge() {
        let cases = [
            (
                AdmissibleFn::power(0.5).unwrap(),
                NFunction::power_alpha(2.0).unwrap(),
            ),
            (AdmissibleFn::log_power(2.0).unwrap(), NFunction::ExpAbs),
            (
                AdmissibleFn::power(1.0).unwrap(),
                NFunction::GaussianHalfSquare,
            ),
        ];
        for (z, phi) in cases {
            assert!(z.check_admissible(&phi, 0.1).unwrap(), "{z:?} with {phi:?}");
        }
    }

    #[test]
    fn admissibility_check_rejects_bad_eps() {
        let z = AdmissibleFn::power(0.5).unwrap();
        assert!(z
            .check_admissible(&NFunction::GaussianHalfSquare, 0.0)
            .is_err());
        assert!(z
            .check_admissible(&NFunction::GaussianHalfSquare, -1.0)
            .is_err());
    }

    #[test]
    fn sine_bound_frozen_examples() {
        let p1 = AdmissibleFn::power(1.0).unwrap();
        // |sin(1/2)| <= 1/2
        assert!(p1.sine_bound_holds(1.0, 2.0).unwrap());
        // ratio above 1 always dominates
        assert!(p1.sine_bound_holds(100.0, 0.1).unwrap());
        let lp = AdmissibleFn::log_power(2.0).unwrap();
        assert!(lp.sine_bound_holds(0.3, 5.0).unwrap());
    }

    #[test]
    fn sine_bound_rejects_zero_arguments() {
        let z = AdmissibleFn::power(0.5).unwrap();
        assert!(z.sine_bound_holds(0.0, 1.0).is_err());
        assert!(z.sine_bound_holds(1.0, 0.0).is_err());
    }

    #[test]
    fn sine_bound_random_sweep() {
        let fams = [
            AdmissibleFn::power(0.3).unwrap(),
            AdmissibleFn::power(0.5).unwrap(),
            AdmissibleFn::power(1.0).unwrap(),
            AdmissibleFn::log_power(1.5).unwrap(),
            AdmissibleFn::log_power(2.0).unwrap(),
            AdmissibleFn::log_power(3.0).unwrap(),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for z in fams {
            for _ in 0..2000 {
                let u = 10f64.powf(rng.random_range(-4.0..4.0))
                    * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let v = 10f64.powf(rng.random_range(-4.0..4.0))
                    * if rng.random::<bool>() { 1.0 } else { -1.0 };
                assert!(z.sine_bound_holds(u, v).unwrap(), "{z:?} u={u} v={v}");
                assert!(z.sine_bound_holds(v, u).unwrap(), "{z:?} u={v} v={u}");
            }
        }
    }

    #[test]
    fn deserialization_validates() {
        let ok: AdmissibleFn = serde_json::from_str(r#"{"family":"power","rho":0.5}"#).unwrap();
        assert_eq!(ok, AdmissibleFn::Power { rho: 0.5 });
        assert!(serde_json::from_str::<AdmissibleFn>(r#"{"family":"power","rho":2.0}"#).is_err());
        assert!(
            serde_json::from_str::<AdmissibleFn>(r#"{"family":"log_power","alpha":0.5}"#).is_err()
        );
    }
}

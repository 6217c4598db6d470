//! Entropy-based bounds for the supremum of the random wave field over a
//! space-time rectangle.
//!
//! The pipeline assembles three ingredients: the Orlicz scale of the field
//! (`eps0`), a modulus `sigma` built from the admissible weight, and an
//! entropy integral of the metric covering numbers transformed by a slowly
//! growing function `r`. Tail and moment-generating bounds share the same
//! entropy factor by construction; closed forms specialize it for power and
//! log-power weights.
//!
//! Every exponential is assembled in log space and exponentiated once, so
//! the pipeline survives the huge intermediate factors that small `beta`
//! produces.

use serde::{Deserialize, Serialize};

use crate::admissible::AdmissibleFn;
use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::quad;
use crate::spectral::Rect;
use crate::tol;

/// Slowly growing transform of covering numbers: `r(v) = v^beta - 1` on
/// `v >= 1`. Small `beta` sharpens the final bound; the inverse
/// `(1 + y)^{1/beta}` is handled in log space because it overflows for
/// `beta` below about `1e-2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RFunction {
    PowerMinusOne { beta: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum RFunctionRaw {
    PowerMinusOne { beta: f64 },
}

impl TryFrom<RFunctionRaw> for RFunction {
    type Error = Error;

    fn try_from(raw: RFunctionRaw) -> Result<Self> {
        match raw {
            RFunctionRaw::PowerMinusOne { beta } => RFunction::power_minus_one(beta),
        }
    }
}

impl<'de> Deserialize<'de> for RFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RFunctionRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl RFunction {
    pub fn power_minus_one(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "r-function exponent beta must be positive and finite, got {beta}"
            )));
        }
        Ok(RFunction::PowerMinusOne { beta })
    }

    pub fn beta(&self) -> f64 {
        match *self {
            RFunction::PowerMinusOne { beta } => beta,
        }
    }

    /// `r(v)` for `v >= 1` given `ln v`; exact for huge `v`.
    pub fn eval_from_ln(&self, ln_v: f64) -> f64 {
        (self.beta() * ln_v).exp_m1()
    }

    pub fn eval(&self, v: f64) -> f64 {
        if v < 1.0 {
            0.0
        } else {
            self.eval_from_ln(v.ln())
        }
    }

    /// `ln r^{-1}(y) = ln(1 + y) / beta` for `y >= 0`.
    pub fn ln_inv(&self, y: f64) -> f64 {
        y.ln_1p() / self.beta()
    }
}

/// Modulus of the sup-distance over a grid of mesh `h`:
/// `sigma(h) = 2 c / Z(1/h + u0)` with `c = C_y C_Z`.
pub fn sigma(z: &AdmissibleFn, c: f64, h: f64) -> f64 {
    2.0 * c / z.z(1.0 / h + z.u0())
}

/// Distance scale past which one ball covers the whole rectangle:
/// `gamma0 = sigma(kappa)` for the larger side `kappa`.
pub fn gamma0(z: &AdmissibleFn, c: f64, kappa_len: f64) -> f64 {
    sigma(z, c, kappa_len)
}

/// Inverse modulus: the mesh at which `sigma(h) = v`. Defined for
/// `0 < v < gamma0`; beyond that no refinement is needed.
pub fn sigma_inv(z: &AdmissibleFn, c: f64, kappa_len: f64, v: f64) -> Result<f64> {
    let g0 = gamma0(z, c, kappa_len);
    if !(v > 0.0 && v < g0) {
        return Err(Error::Precondition(format!(
            "sigma_inv needs 0 < v < gamma0 = {g0}, got {v}"
        )));
    }
    match z.ln_inv_minus_u0(2.0 * c / v) {
        Some(ln_w) => Ok((-ln_w).exp()),
        None => Err(Error::Precondition(format!(
            "sigma_inv undefined at v = {v}: inverse weight does not exceed u0"
        ))),
    }
}

/// `ln((s/2) w + 1)` given `ln w`, stable when `w` overflows f64.
fn ln_axis_factor(side: f64, ln_w: f64) -> f64 {
    if ln_w > 690.0 {
        // the +1 is below 1 ulp of (s/2) w here
        (0.5 * side).ln() + ln_w
    } else {
        (0.5 * side * ln_w.exp()).ln_1p()
    }
}

/// Log of the covering-number bound of the rectangle at sup-distance `v`:
/// sum of per-axis log counts at mesh `sigma_inv(v)`, and 0 once `v`
/// reaches `gamma0`. Stays finite where the count itself overflows f64.
pub fn ln_covering_bound(z: &AdmissibleFn, c: f64, rect: &Rect, v: f64) -> f64 {
    if v >= gamma0(z, c, rect.kappa_len()) {
        return 0.0;
    }
    match z.ln_inv_minus_u0(2.0 * c / v) {
        Some(ln_w) => ln_axis_factor(rect.t_len(), ln_w) + ln_axis_factor(rect.x_len(), ln_w),
        None => 0.0,
    }
}

/// Upper bound on the covering number of the rectangle at sup-distance `v`:
/// product of per-axis counts at mesh `sigma_inv(v)`, and 1 once `v`
/// reaches `gamma0`.
pub fn covering_bound(z: &AdmissibleFn, c: f64, rect: &Rect, v: f64) -> f64 {
    ln_covering_bound(z, c, rect, v).exp()
}

/// Where the entropy functional comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    /// Adaptive improper quadrature of `r(N(v))` on `(0, delta]`.
    Quadrature,
    /// Closed majorant for power weights; exact enough that the assembled
    /// factor matches the classical closed form as `beta -> 0`.
    PowerMajorant,
    /// Closed majorant for log-power weights with `r = ln`.
    ExpMajorant,
}

/// Log of the entropy factor under the power majorant, with the covering
/// count majorized by `kappa^2 w^2` inside the window
/// `theta eps0 < 2 c (kappa/2)^rho`:
/// `ln r^{-1}` of `((2c)^{2 beta/rho} kappa^{2 beta} (1 - 2 beta/rho)^{-1}
/// delta^{-2 beta/rho} - 1)` at `delta = theta eps0`, which collapses to an
/// exact log-space expression.
pub fn ln_power_majorant_factor(
    rho: f64,
    beta: f64,
    c: f64,
    eps0: f64,
    theta: f64,
    kappa_len: f64,
) -> Result<f64> {
    if 2.0 * beta >= rho {
        return Err(Error::EntropyDivergent(format!(
            "power majorant needs 2 beta < rho, got beta = {beta}, rho = {rho}"
        )));
    }
    let delta = theta * eps0;
    let window = 2.0 * c * (0.5 * kappa_len).powf(rho);
    if !(delta < window) {
        return Err(Error::Precondition(format!(
            "power window requires theta * eps0 < 2 c (kappa/2)^rho = {window}, got {delta}"
        )));
    }
    Ok((2.0 / rho) * (2.0 * c).ln() + 2.0 * kappa_len.ln()
        - (1.0 - 2.0 * beta / rho).ln() / beta
        - (2.0 / rho) * delta.ln())
}

/// Enforce the aperture condition of the log-power closed form. The
/// rectangle sides fix a floor for the weight exponent.
pub fn exp_alpha_window(rect: &Rect, alpha: f64) -> Result<()> {
    let floor = 1.0f64
        .max((2.0 / rect.t_len()).ln())
        .max((2.0 / rect.x_len()).ln());
    if alpha > floor {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "we choose some alpha > max{{1, ln(2/(b-a)), ln(2/(d-c))}} = {floor:.6}; got alpha = {alpha}"
        )))
    }
}

/// Log of the entropy factor under the log-power majorant with `r = ln`:
/// `ln(kappa^2/4) + (2 alpha/(alpha-1)) (2c/(theta eps0))^{1/alpha}`,
/// valid for `theta eps0 <= gamma0` and `alpha` above the aperture floor.
pub fn ln_exp_majorant_factor(
    alpha: f64,
    c: f64,
    eps0: f64,
    theta: f64,
    rect: &Rect,
    g0: f64,
) -> Result<f64> {
    exp_alpha_window(rect, alpha)?;
    let delta = theta * eps0;
    if !(delta <= g0) {
        return Err(Error::Precondition(format!(
            "log-power window requires theta * eps0 <= gamma0 = {g0}, got {delta}"
        )));
    }
    let kappa_len = rect.kappa_len();
    Ok((kappa_len * kappa_len / 4.0).ln()
        + (2.0 * alpha / (alpha - 1.0)) * (2.0 * c / delta).powf(1.0 / alpha))
}

/// Everything needed to evaluate the generic tail and MGF bounds.
#[derive(Clone, Debug)]
pub struct BoundPipeline {
    pub phi: NFunction,
    pub z: AdmissibleFn,
    pub r: RFunction,
    pub c_y: f64,
    pub c_z: f64,
    pub eps0: f64,
    pub rect: Rect,
    pub entropy: EntropySource,
}

impl BoundPipeline {
    /// Combined scale constant `c = C_y C_Z`.
    pub fn c(&self) -> f64 {
        self.c_y * self.c_z
    }

    pub fn gamma0(&self) -> f64 {
        gamma0(&self.z, self.c(), self.rect.kappa_len())
    }

    /// Entropy integral `int_0^delta r(N(v)) dv` by adaptive improper
    /// quadrature. Divergence is reported, not silenced.
    pub fn entropy_integral(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!(
                "entropy integral needs a positive finite upper limit, got {delta}"
            )));
        }
        let c = self.c();
        quad::integrate_improper(
            |v: f64| {
                self.r
                    .eval_from_ln(ln_covering_bound(&self.z, c, &self.rect, v))
            },
            delta,
            tol::QUAD_REL,
            tol::MAX_DYADIC_LEVELS,
        )
    }

    /// Log of the entropy factor `r^{-1}(I_r(delta) / (theta eps0))` at
    /// `delta = min(theta eps0, gamma0)`. Both the tail and the MGF bound
    /// call this one method, so the factor is computed identically.
    pub fn ln_entropy_factor(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Precondition(format!(
                "theta must lie strictly inside (0, 1), got {theta}"
            )));
        }
        match self.entropy {
            EntropySource::Quadrature => {
                let delta = (theta * self.eps0).min(self.gamma0());
                let integral = self.entropy_integral(delta)?;
                Ok(self.r.ln_inv(integral / (theta * self.eps0)))
            }
            EntropySource::PowerMajorant => {
                let rho = match self.z {
                    AdmissibleFn::Power { rho } => rho,
                    _ => {
                        return Err(Error::Precondition(
                            "power majorant requires a power-type weight Z".into(),
                        ))
                    }
                };
                ln_power_majorant_factor(
                    rho,
                    self.r.beta(),
                    self.c(),
                    self.eps0,
                    theta,
                    self.rect.kappa_len(),
                )
            }
            EntropySource::ExpMajorant => {
                let alpha = match self.z {
                    AdmissibleFn::LogPower { alpha } => alpha,
                    _ => {
                        return Err(Error::Precondition(
                            "log-power majorant requires a log-power weight Z".into(),
                        ))
                    }
                };
                ln_exp_majorant_factor(alpha, self.c(), self.eps0, theta, &self.rect, self.gamma0())
            }
        }
    }

    /// Tail bound `2 exp(ln_entropy_factor - phi*(u (1 - theta) / eps0))`.
    /// A zero scale means the field is a.s. zero and the tail vanishes.
    pub fn tail_bound(&self, theta: f64, u: f64) -> Result<f64> {
        if self.eps0 == 0.0 {
            return Ok(0.0);
        }
        let ln_factor = self.ln_entropy_factor(theta)?;
        let x = u * (1.0 - theta) / self.eps0;
        Ok(2.0 * (ln_factor - self.phi.conjugate(x)).exp())
    }

    /// Moment-generating bound
    /// `exp(phi(lambda eps0 / (1 - theta)) + ln_entropy_factor)`.
    pub fn mgf_bound(&self, theta: f64, lambda: f64) -> Result<f64> {
        if self.eps0 == 0.0 {
            return Ok(1.0);
        }
        let ln_factor = self.ln_entropy_factor(theta)?;
        Ok(mgf_bound_from_parts(&self.phi, self.eps0, theta, lambda, ln_factor))
    }

    /// Optimized tail bound at level `u`: scan plus golden refinement over
    /// `theta` in (0, 1).
    pub fn optimal_tail(&self, u: f64) -> Result<(f64, f64)> {
        if self.eps0 == 0.0 {
            return Ok((0.5, 0.0));
        }
        optimize_theta(|theta| self.tail_bound(theta, u))
    }
}

/// MGF bound assembled from an already computed entropy factor; exposed so
/// recomposition can be checked against `mgf_bound` bit for bit.
pub fn mgf_bound_from_parts(
    phi: &NFunction,
    eps0: f64,
    theta: f64,
    lambda: f64,
    ln_entropy_factor: f64,
) -> f64 {
    (phi.eval(lambda * eps0 / (1.0 - theta)) + ln_entropy_factor).exp()
}

/// Minimize a bound over `theta` in (0, 1): 64-point scan, then golden
/// refinement around the best point. Window violations at individual
/// `theta` are skipped; any other error aborts. Returns `(theta*, value)`.
pub fn optimize_theta<F: FnMut(f64) -> Result<f64>>(mut f: F) -> Result<(f64, f64)> {
    const SCAN: usize = 64;
    let lo = 1e-4;
    let hi = 1.0 - 1e-4;
    let mut hard_error: Option<Error> = None;
    let mut eval = |theta: f64, hard: &mut Option<Error>| -> f64 {
        match f(theta) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => f64::INFINITY,
            Err(Error::Precondition(_)) => f64::INFINITY,
            Err(e) => {
                if hard.is_none() {
                    *hard = Some(e);
                }
                f64::INFINITY
            }
        }
    };

    let mut best_i = 0usize;
    let mut best_v = f64::INFINITY;
    let mut thetas = [0.0f64; SCAN];
    for (i, slot) in thetas.iter_mut().enumerate() {
        let theta = lo + (hi - lo) * i as f64 / (SCAN - 1) as f64;
        *slot = theta;
        let v = eval(theta, &mut hard_error);
        if let Some(e) = hard_error.take() {
            return Err(e);
        }
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    if !best_v.is_finite() {
        return Err(Error::Infeasible(
            "no admissible theta in (0, 1): every candidate violates a window or diverges".into(),
        ));
    }

    let a = thetas[best_i.saturating_sub(1)];
    let b = thetas[(best_i + 1).min(SCAN - 1)];
    let (theta_g, v_g) = crate::opt::golden_min(|t| eval(t, &mut hard_error), a, b, 1e-9);
    if let Some(e) = hard_error.take() {
        return Err(e);
    }
    if v_g.is_finite() && v_g < best_v {
        Ok((theta_g, v_g))
    } else {
        Ok((thetas[best_i], best_v))
    }
}

/// Closed-form tail bound for power-type weight and power-type Orlicz
/// function with conjugate exponent `gamma`:
/// `2 exp(-x^gamma / gamma) (2 e c)^{2/rho} kappa^2 (theta eps0)^{-2/rho}`
/// at `x = u (1 - theta) / eps0`, inside the window
/// `theta eps0 < 2 c (kappa/2)^rho`.
pub fn closed_form_power(
    u: f64,
    theta: f64,
    gamma: f64,
    rho: f64,
    c: f64,
    eps0: f64,
    kappa_len: f64,
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!(
            "theta must lie strictly inside (0, 1), got {theta}"
        )));
    }
    if eps0 == 0.0 {
        return Ok(0.0);
    }
    let delta = theta * eps0;
    let window = 2.0 * c * (0.5 * kappa_len).powf(rho);
    if !(delta < window) {
        return Err(Error::Precondition(format!(
            "power window requires theta * eps0 < 2 c (kappa/2)^rho = {window}, got {delta}"
        )));
    }
    let x = u * (1.0 - theta) / eps0;
    let ln_bound = std::f64::consts::LN_2 - x.abs().powf(gamma) / gamma
        + (2.0 / rho) * (2.0 * std::f64::consts::E * c).ln()
        + 2.0 * kappa_len.ln()
        - (2.0 / rho) * delta.ln();
    Ok(ln_bound.exp())
}

/// Gaussian specialization of [`closed_form_power`]: `gamma = 2`, unit
/// process scale, so `c = C_Z`.
pub fn closed_form_gauss(
    u: f64,
    theta: f64,
    rho: f64,
    c_z: f64,
    eps0: f64,
    kappa_len: f64,
) -> Result<f64> {
    closed_form_power(u, theta, 2.0, rho, c_z, eps0, kappa_len)
}

/// Closed-form tail bound for the exponential Orlicz function with
/// log-power weight:
/// `2 exp(-(x+1) ln(1+x) + x + ln(kappa^2/4)
///        + (2 alpha/(alpha-1)) (2c/(theta eps0))^{1/alpha})`.
/// Shares its entropy expression with [`ln_exp_majorant_factor`].
pub fn closed_form_exp(
    u: f64,
    theta: f64,
    alpha: f64,
    c: f64,
    eps0: f64,
    rect: &Rect,
    g0: f64,
) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!(
            "theta must lie strictly inside (0, 1), got {theta}"
        )));
    }
    if eps0 == 0.0 {
        return Ok(0.0);
    }
    let ln_factor = ln_exp_majorant_factor(alpha, c, eps0, theta, rect, g0)?;
    let x = u * (1.0 - theta) / eps0;
    let conj = (x + 1.0) * x.ln_1p() - x;
    Ok(2.0 * (ln_factor - conj).exp())
}

/// How a report's rows were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Generic,
    ClosedPower,
    ClosedGauss,
    ClosedExp,
}

impl std::fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BoundMethod::Generic => "generic",
            BoundMethod::ClosedPower => "closed_power",
            BoundMethod::ClosedGauss => "closed_gauss",
            BoundMethod::ClosedExp => "closed_exp",
        };
        f.write_str(s)
    }
}

/// One optimized tail-bound row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub u: f64,
    pub theta_star: f64,
    pub bound: f64,
}

/// Full report of a bound run; serialized as `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: BoundMethod,
    pub fingerprint: String,
    pub eps0: f64,
    pub gamma_upper: f64,
    pub c_z: f64,
    pub gamma0: f64,
    pub existence: f64,
    pub admissible: bool,
    /// `theta*` of the last (largest-u) row, the high-level summary knob.
    pub theta_star: f64,
    pub rows: Vec<BoundRow>,
    pub notes: Vec<String>,
}

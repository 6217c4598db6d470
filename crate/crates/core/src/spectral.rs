//! Discrete spectral measures on the frequency line and the dispersive
//! kernel machinery built on them.
//!
//! A measure is a finite set of frequency atoms plus a symmetric PSD
//! covariance of their amplitudes; every double "integral" against it is an
//! exact finite sum. The problem instance fixes an odd-order dispersion
//! polynomial, the space-time rectangle and the scale constant of the
//! driving process.

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::admissible::AdmissibleFn;
use crate::error::{Error, Result};
use crate::tol;

/// Finite atomic spectral measure: frequencies plus amplitude covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    lambdas: Vec<f64>,
    /// Row-major `n x n`, symmetrized after validation.
    cov: Vec<f64>,
    n: usize,
    total_variation: f64,
}

impl SpectralMeasure {
    pub fn new(lambdas: Vec<f64>, cov_rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = lambdas.len();
        if cov_rows.len() != n || cov_rows.iter().any(|r| r.len() != n) {
            return Err(Error::Measure(format!(
                "covariance must be {n} x {n} to match {n} atoms"
            )));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Measure("non-finite frequency atom".into()));
        }
        let mut cov = Vec::with_capacity(n * n);
        for row in &cov_rows {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::Measure("non-finite covariance entry".into()));
                }
                cov.push(v);
            }
        }
        let max_abs = cov.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (cov[i * n + j] - cov[j * n + i]).abs();
                if d > tol::SYMMETRY_REL * max_abs {
                    return Err(Error::Measure(format!(
                        "covariance asymmetric at ({i}, {j}): |{} - {}| exceeds relative {}",
                        cov[i * n + j],
                        cov[j * n + i],
                        tol::SYMMETRY_REL
                    )));
                }
            }
        }
        // symmetrize for all downstream arithmetic
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (cov[i * n + j] + cov[j * n + i]);
                cov[i * n + j] = s;
                cov[j * n + i] = s;
            }
        }
        if n > 0 && max_abs > 0.0 {
            let m = DMatrix::from_row_slice(n, n, &cov);
            let eigs = m.symmetric_eigen().eigenvalues;
            let max_eig = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let min_eig = eigs.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if min_eig < -tol::PSD_EIG_REL * max_eig {
                return Err(Error::Measure(format!(
                    "covariance not positive semidefinite: min eigenvalue {min_eig:.3e}"
                )));
            }
        }
        let total_variation = cov.iter().map(|v| v.abs()).sum();
        Ok(SpectralMeasure {
            lambdas,
            cov,
            n,
            total_variation,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n + j]
    }

    /// Total variation of the covariance seen as a bi-measure.
    pub fn total_variation(&self) -> f64 {
        self.total_variation
    }

    /// Double integral of `g` against the absolute bi-measure.
    pub fn double_integral<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += g(self.lambdas[i], self.lambdas[j]) * self.cov[i * self.n + j].abs();
            }
        }
        acc
    }

    /// Double integral of the product kernel `w(lambda) w(mu)` against the
    /// absolute bi-measure.
    pub fn product_integral(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let cov_row = &self.cov[i * self.n..(i + 1) * self.n];
            let row: f64 = w.iter().zip(cov_row).map(|(wj, g)| wj * g.abs()).sum();
            acc += w[i] * row;
        }
        acc
    }

    /// Signed quadratic form `v' G v` (exact second moments).
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let cov_row = &self.cov[i * self.n..(i + 1) * self.n];
            let row: f64 = v.iter().zip(cov_row).map(|(vj, g)| vj * g).sum();
            acc += v[i] * row;
        }
        acc
    }

    /// Symmetric PSD square root via eigendecomposition, tiny negative
    /// eigenvalues clipped to zero. Row-major `n x n`.
    pub fn sqrt_matrix(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let m = DMatrix::from_row_slice(self.n, self.n, &self.cov);
        let eig = m.symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let s = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i * self.n + j] = s[(i, j)];
            }
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralMeasureRaw {
    lambdas: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl TryFrom<SpectralMeasureRaw> for SpectralMeasure {
    type Error = Error;

    fn try_from(raw: SpectralMeasureRaw) -> Result<Self> {
        SpectralMeasure::new(raw.lambdas, raw.cov)
    }
}

impl<'de> Deserialize<'de> for SpectralMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SpectralMeasureRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for SpectralMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| self.cov[i * self.n..(i + 1) * self.n].to_vec())
            .collect();
        let mut st = s.serialize_struct("SpectralMeasure", 2)?;
        st.serialize_field("lambdas", &self.lambdas)?;
        st.serialize_field("cov", &rows)?;
        st.end()
    }
}

/// Space-time rectangle `[a, b] x [c, d]` (time side first).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Rect {
    pub fn new(t_min: f64, t_max: f64, x_min: f64, x_max: f64) -> Result<Self> {
        let r = Rect {
            t_min,
            t_max,
            x_min,
            x_max,
        };
        if ![t_min, t_max, x_min, x_max].iter().all(|v| v.is_finite())
            || !(t_max > t_min)
            || !(x_max > x_min)
        {
            return Err(Error::InvalidParameter(format!(
                "rectangle needs finite sides with b > a, d > c, got {r:?}"
            )));
        }
        Ok(r)
    }

    pub fn t_len(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn x_len(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// The larger side, the diameter scale of the sup-distance.
    pub fn kappa_len(&self) -> f64 {
        self.t_len().max(self.x_len())
    }

    pub fn min_side(&self) -> f64 {
        self.t_len().min(self.x_len())
    }
}

impl Serialize for Rect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.t_min, self.t_max, self.x_min, self.x_max].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        Rect::new(v[0], v[1], v[2], v[3]).map_err(serde::de::Error::custom)
    }
}

/// Kernel parity: which harmonic rides the dispersive phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kappa {
    Cos,
    Sin,
}

/// Problem instance: dispersion coefficients `a_1..a_N`, rectangle, kernel
/// parity, and the scale constant of the driving process.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub coeffs: Vec<f64>,
    pub rect: Rect,
    pub kappa: Kappa,
    pub c_y: f64,
    pub gaussian: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSpecRaw {
    coeffs: Vec<f64>,
    rect: Rect,
    kappa: Kappa,
    c_y: f64,
    gaussian: bool,
}

impl TryFrom<ProblemSpecRaw> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: ProblemSpecRaw) -> Result<Self> {
        ProblemSpec::new(raw.coeffs, raw.rect, raw.kappa, raw.c_y, raw.gaussian)
    }
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ProblemSpecRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl ProblemSpec {
    pub fn new(coeffs: Vec<f64>, rect: Rect, kappa: Kappa, c_y: f64, gaussian: bool) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "dispersion coefficients must be a non-empty finite list".into(),
            ));
        }
        if !(c_y > 0.0 && c_y.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C_y must be positive and finite, got {c_y}"
            )));
        }
        if gaussian && c_y != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Gaussian driving process forces C_y = 1, got {c_y}"
            )));
        }
        Ok(ProblemSpec {
            coeffs,
            rect,
            kappa,
            c_y,
            gaussian,
        })
    }

    /// Highest derivative order present is `2N + 1`.
    pub fn order_n(&self) -> usize {
        self.coeffs.len()
    }

    /// Dispersion symbol `P(lambda) = sum_k a_k lambda^{2k+1} (-1)^k`.
    pub fn dispersion(&self, lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        let mut pw = lambda * l2; // lambda^3
        let mut sign = -1.0;
        let mut acc = 0.0;
        for &a in &self.coeffs {
            acc += sign * a * pw;
            pw *= l2;
            sign = -sign;
        }
        acc
    }

    /// Plane-wave kernel `kappa(lambda x + t P(lambda))`.
    pub fn kernel(&self, t: f64, x: f64, lambda: f64) -> f64 {
        let arg = lambda * x + t * self.dispersion(lambda);
        match self.kappa {
            Kappa::Cos => arg.cos(),
            Kappa::Sin => arg.sin(),
        }
    }
}

/// Increment weight `Z(|lambda|/2 + u0) + Z(|P(lambda)|/2 + u0)` entering
/// the entropy constant.
fn cz_weight(spec: &ProblemSpec, z: &AdmissibleFn, lambda: f64) -> f64 {
    let u0 = z.u0();
    z.z(lambda.abs() * 0.5 + u0) + z.z(spec.dispersion(lambda).abs() * 0.5 + u0)
}

/// Entropy constant: square root of the double integral of the product of
/// increment weights against the absolute bi-measure.
pub fn compute_cz(m: &SpectralMeasure, spec: &ProblemSpec, z: &AdmissibleFn) -> f64 {
    let w: Vec<f64> = m
        .lambdas()
        .iter()
        .map(|&l| cz_weight(spec, z, l))
        .collect();
    m.product_integral(&w).sqrt()
}

/// Existence functional for the solution candidate: double integral of
/// `|lambda mu|^{2N+1} Z(u0 + |lambda|^{2N+1}) Z(u0 + |mu|^{2N+1})`.
pub fn existence_integral(m: &SpectralMeasure, spec: &ProblemSpec, z: &AdmissibleFn) -> f64 {
    let p = (2 * spec.order_n() + 1) as f64;
    let u0 = z.u0();
    let w: Vec<f64> = m
        .lambdas()
        .iter()
        .map(|&l| {
            let lp = l.abs().powf(p);
            lp * z.z(u0 + lp)
        })
        .collect();
    m.product_integral(&w)
}

/// Log-power existence functional, defined on non-negative atoms only.
pub struct LogPowerExistence {
    pub value: f64,
    /// Atoms with negative frequency, excluded from the sum.
    pub negative_atoms: usize,
}

/// Double integral of `|lambda mu|^{2N+1} (ln(1+lambda) ln(1+mu))^alpha`
/// restricted to atoms with `lambda, mu >= 0`.
pub fn existence_integral_log_power(
    m: &SpectralMeasure,
    spec: &ProblemSpec,
    alpha: f64,
) -> Result<LogPowerExistence> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log-power existence exponent must be positive, got {alpha}"
        )));
    }
    let p = (2 * spec.order_n() + 1) as f64;
    let negative_atoms = m.lambdas().iter().filter(|&&l| l < 0.0).count();
    let w: Vec<f64> = m
        .lambdas()
        .iter()
        .map(|&l| {
            if l < 0.0 {
                0.0
            } else {
                l.powf(p) * l.ln_1p().powf(alpha)
            }
        })
        .collect();
    Ok(LogPowerExistence {
        value: m.product_integral(&w),
        negative_atoms,
    })
}

/// Upper bound for the sub-Gaussian scale of the field: `C_y` times the
/// square root of the total variation (the kernel never exceeds one).
pub fn gamma_upper(m: &SpectralMeasure, c_y: f64) -> f64 {
    c_y * m.total_variation().sqrt()
}

/// Exact standard deviation of a field increment between two space-time
/// points, from the signed covariance.
pub fn increment_std(
    m: &SpectralMeasure,
    spec: &ProblemSpec,
    p0: (f64, f64),
    p1: (f64, f64),
) -> Result<f64> {
    let delta: Vec<f64> = m
        .lambdas()
        .iter()
        .map(|&l| spec.kernel(p1.0, p1.1, l) - spec.kernel(p0.0, p0.1, l))
        .collect();
    let q = m.quadratic_form(&delta);
    // |delta_i| <= 2, so 4 V bounds the quadratic form magnitude
    let scale = 1.0 + 4.0 * m.total_variation();
    if q < -tol::QUADFORM_NEG_ABS * scale {
        return Err(Error::Internal(format!(
            "increment variance {q:.3e} negative beyond tolerance (PSD violation)"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

/// Content hash binding a measure and problem instance; recorded in every
/// report and ensemble so verification can refuse mismatched inputs.
pub fn fingerprint(m: &SpectralMeasure, spec: &ProblemSpec) -> String {
    #[derive(Serialize)]
    struct Payload<'a> {
        measure: &'a SpectralMeasure,
        problem: &'a ProblemSpec,
    }
    let json = serde_json::to_string(&Payload {
        measure: m,
        problem: spec,
    })
    .expect("fingerprint payload serializes");
    let mut h = Sha256::new();
    h.update(json.as_bytes());
    hex::encode(h.finalize())
}

//! Monte Carlo verification: exact sampling of the field on a grid,
//! empirical exceedance with one-sided confidence upper bounds, and checks
//! that the analytic modulus and tail bounds dominate what is observed.
//!
//! Sampling is reproducible by construction: one ChaCha12 stream per path,
//! all derived from a single seed, so results are independent of thread
//! count and platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::admissible::AdmissibleFn;
use crate::bounds::{sigma, BoundReport};
use crate::error::{Error, Result};
use crate::spectral::{fingerprint, ProblemSpec, SpectralMeasure};

/// RNG identifier recorded in every ensemble.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Grid resolution and ensemble size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationConfig {
    pub t_points: usize,
    pub x_points: usize,
    pub n_paths: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationConfigRaw {
    t_points: usize,
    x_points: usize,
    n_paths: usize,
}

impl TryFrom<SimulationConfigRaw> for SimulationConfig {
    type Error = Error;

    fn try_from(raw: SimulationConfigRaw) -> Result<Self> {
        SimulationConfig::new(raw.t_points, raw.x_points, raw.n_paths)
    }
}

impl<'de> Deserialize<'de> for SimulationConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SimulationConfigRaw::deserialize(d)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

impl SimulationConfig {
    pub fn new(t_points: usize, x_points: usize, n_paths: usize) -> Result<Self> {
        if t_points < 2 || x_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points per axis, got {t_points} x {x_points}"
            )));
        }
        if n_paths < 1 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        Ok(SimulationConfig {
            t_points,
            x_points,
            n_paths,
        })
    }
}

/// Grid suprema of `|field|` for every sampled path, plus everything needed
/// to reproduce or refuse them later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupEnsemble {
    pub fingerprint: String,
    pub rng: String,
    pub seed: u64,
    pub config: SimulationConfig,
    pub sups: Vec<f64>,
}

/// Row-major kernel matrix: one row per grid point, one column per atom.
fn kernel_matrix(m: &SpectralMeasure, spec: &ProblemSpec, t_points: usize, x_points: usize) -> Vec<f64> {
    let n = m.n_atoms();
    let mut k = vec![0.0; t_points * x_points * n];
    for it in 0..t_points {
        let t = spec.rect.t_min + spec.rect.t_len() * it as f64 / (t_points - 1) as f64;
        for ix in 0..x_points {
            let x = spec.rect.x_min + spec.rect.x_len() * ix as f64 / (x_points - 1) as f64;
            let row = (it * x_points + ix) * n;
            for (j, &l) in m.lambdas().iter().enumerate() {
                k[row + j] = spec.kernel(t, x, l);
            }
        }
    }
    k
}

/// Amplitudes for one path: `xi = S z` with `S` the covariance square root
/// and `z` standard normal from the path's own ChaCha12 stream.
fn path_amplitudes(sqrt_cov: &[f64], n: usize, seed: u64, path: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path);
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    (0..n)
        .map(|i| (0..n).map(|j| sqrt_cov[i * n + j] * z[j]).sum())
        .collect()
}

/// Sample `n_paths` exact field realizations on the grid and record the
/// supremum of `|field|` for each. Only defined for the Gaussian process.
pub fn sample_paths(
    m: &SpectralMeasure,
    spec: &ProblemSpec,
    config: &SimulationConfig,
    seed: u64,
) -> Result<SupEnsemble> {
    if !spec.gaussian {
        return Err(Error::NotGaussian);
    }
    let n = m.n_atoms();
    let sups = if n == 0 {
        vec![0.0; config.n_paths]
    } else {
        let kernels = kernel_matrix(m, spec, config.t_points, config.x_points);
        let sqrt_cov = m.sqrt_matrix();
        let points = config.t_points * config.x_points;
        (0..config.n_paths as u64)
            .into_par_iter()
            .map(|path| {
                let xi = path_amplitudes(&sqrt_cov, n, seed, path);
                let mut sup = 0.0f64;
                for p in 0..points {
                    let row = &kernels[p * n..(p + 1) * n];
                    let v: f64 = row.iter().zip(&xi).map(|(k, x)| k * x).sum();
                    sup = sup.max(v.abs());
                }
                sup
            })
            .collect()
    };
    Ok(SupEnsemble {
        fingerprint: fingerprint(m, spec),
        rng: RNG_ALGORITHM.to_string(),
        seed,
        config: *config,
        sups,
    })
}

/// Empirical exceedance of a level with a one-sided 99% upper confidence
/// bound (Clopper-Pearson).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub count: usize,
    pub p_hat: f64,
    pub ci_upper: f64,
}

pub fn empirical_exceedance(sups: &[f64], u: f64) -> Result<Exceedance> {
    let n = sups.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "exceedance needs a non-empty ensemble".into(),
        ));
    }
    let count = sups.iter().filter(|&&s| s > u).count();
    let p_hat = count as f64 / n as f64;
    let ci_upper = if count == 0 {
        1.0 - 0.01f64.powf(1.0 / n as f64)
    } else if count == n {
        1.0
    } else {
        Beta::new((count + 1) as f64, (n - count) as f64)
            .map_err(|e| Error::Internal(format!("beta quantile: {e}")))?
            .inverse_cdf(0.99)
    };
    Ok(Exceedance {
        count,
        p_hat,
        ci_upper,
    })
}

/// Worst observed ratio of exact increment scale to the analytic modulus
/// `sigma` over all grid point pairs. At or below 1 the modulus claim
/// holds on this grid; `c` is the combined constant the modulus uses.
pub fn verify_sigma_oracle(
    m: &SpectralMeasure,
    spec: &ProblemSpec,
    z: &AdmissibleFn,
    c: f64,
    t_points: usize,
    x_points: usize,
) -> Result<f64> {
    if m.n_atoms() == 0 {
        return Ok(0.0);
    }
    if t_points < 2 || x_points < 2 {
        return Err(Error::InvalidParameter(
            "sigma check needs at least a 2 x 2 grid".into(),
        ));
    }
    let n = m.n_atoms();
    let kernels = kernel_matrix(m, spec, t_points, x_points);
    let sqrt_cov = m.sqrt_matrix();
    let points = t_points * x_points;
    // y_p = S k_p so that |y_p - y_q|^2 is the exact increment variance
    let mut y = vec![0.0f64; points * n];
    for p in 0..points {
        let row = &kernels[p * n..(p + 1) * n];
        for i in 0..n {
            y[p * n + i] = (0..n).map(|j| sqrt_cov[i * n + j] * row[j]).sum();
        }
    }
    let dt = spec.rect.t_len() / (t_points - 1) as f64;
    let dx = spec.rect.x_len() / (x_points - 1) as f64;
    // sigma depends only on the step pattern; tabulate once
    let mut sigma_table = vec![0.0; t_points * x_points];
    for a in 0..t_points {
        for b in 0..x_points {
            if a == 0 && b == 0 {
                continue;
            }
            let h = (a as f64 * dt).max(b as f64 * dx);
            sigma_table[a * x_points + b] = sigma(z, c, h);
        }
    }
    let c_y2 = spec.c_y * spec.c_y;
    let worst_sq = (0..points)
        .into_par_iter()
        .map(|p| {
            let (it_p, ix_p) = (p / x_points, p % x_points);
            let mut local = 0.0f64;
            for q in (p + 1)..points {
                let (it_q, ix_q) = (q / x_points, q % x_points);
                let a = it_q.abs_diff(it_p);
                let b = ix_q.abs_diff(ix_p);
                let s = sigma_table[a * x_points + b];
                let mut d2 = 0.0;
                for i in 0..n {
                    let d = y[q * n + i] - y[p * n + i];
                    d2 += d * d;
                }
                local = local.max(c_y2 * d2 / (s * s));
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst_sq.sqrt())
}

/// One level of the bound-versus-simulation comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub u: f64,
    pub bound: f64,
    pub count: usize,
    pub p_hat: f64,
    pub ci_upper: f64,
    /// Bound dominates the confidence upper bound, or is vacuous (>= 1).
    pub ok: bool,
}

/// Compare a bound report against an ensemble level by level. Refuses to
/// compare artifacts produced from different inputs.
pub fn verify_bound_dominance(
    ensemble: &SupEnsemble,
    report: &BoundReport,
) -> Result<Vec<DominanceRow>> {
    if ensemble.fingerprint != report.fingerprint {
        return Err(Error::FingerprintMismatch(format!(
            "report was built for {} but the ensemble for {}",
            report.fingerprint, ensemble.fingerprint
        )));
    }
    report
        .rows
        .iter()
        .map(|row| {
            let e = empirical_exceedance(&ensemble.sups, row.u)?;
            let ok = row.bound >= 1.0 || e.ci_upper <= row.bound;
            Ok(DominanceRow {
                u: row.u,
                bound: row.bound,
                count: e.count,
                p_hat: e.p_hat,
                ci_upper: e.ci_upper,
                ok,
            })
        })
        .collect()
}

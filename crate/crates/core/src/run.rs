//! Configuration, instance preparation and the three commands (bound,
//! simulate, verify). Pure computation is separated from file and console
//! IO so embedders can drive it directly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admissible::AdmissibleFn;
use crate::bounds::{
    closed_form_exp, closed_form_gauss, closed_form_power, exp_alpha_window, gamma0,
    optimize_theta, BoundMethod, BoundPipeline, BoundReport, BoundRow, EntropySource, RFunction,
};
use crate::error::{Error, Result};
use crate::nfunc::NFunction;
use crate::simulate::{
    sample_paths, verify_bound_dominance, verify_sigma_oracle, DominanceRow, SimulationConfig,
    SupEnsemble,
};
use crate::spectral::{
    compute_cz, existence_integral, existence_integral_log_power, fingerprint, gamma_upper,
    ProblemSpec, SpectralMeasure,
};
use crate::tol;

/// Scale used by the admissibility convergence check.
const ADMISSIBILITY_EPS: f64 = 0.1;

/// A measure is given inline or loaded from a JSON file next to the config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSource {
    File { path: String },
    Inline(SpectralMeasure),
}

/// How the Orlicz scale `eps0` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eps0Mode {
    /// Conservative: the total-variation upper bound for the field scale.
    #[default]
    GammaUpper,
    /// Sharper but heuristic: maximum field scale over the refined grid.
    Grid,
}

fn default_seed() -> u64 {
    42
}

/// Top-level run configuration, one JSON file per study.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phi: NFunction,
    #[serde(rename = "Z")]
    pub z: AdmissibleFn,
    pub r: RFunction,
    pub measure: MeasureSource,
    pub problem: ProblemSpec,
    pub u_grid: Vec<f64>,
    pub sim: SimulationConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub eps0_mode: Eps0Mode,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf)> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok((cfg, base))
    }

    fn validate(&self) -> Result<()> {
        if self.u_grid.is_empty() {
            return Err(Error::Config("u_grid must not be empty".into()));
        }
        let mut prev = 0.0;
        for &u in &self.u_grid {
            if !(u.is_finite() && u > prev) {
                return Err(Error::Config(format!(
                    "u_grid must be positive and strictly increasing, offending value {u}"
                )));
            }
            prev = u;
        }
        Ok(())
    }
}

/// Which bound method the caller asked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    /// Closed form when the function signature admits one, else generic.
    Auto,
    /// Always the quadrature-backed generic pipeline.
    Generic,
    /// Closed form or an error if no signature matches.
    Closed,
}

/// A loaded, validated and preprocessed run: all derived constants in one
/// place.
pub struct Instance {
    pub config: RunConfig,
    pub measure: SpectralMeasure,
    pub fingerprint: String,
    pub c_z: f64,
    pub gamma_upper: f64,
    pub gamma0: f64,
    pub eps0: f64,
    pub eps0_grid: f64,
    pub out_dir: PathBuf,
}

/// Maximum field scale `C_y sd(X(t, x))` over a grid.
fn grid_field_scale(
    m: &SpectralMeasure,
    spec: &ProblemSpec,
    t_points: usize,
    x_points: usize,
) -> f64 {
    let mut best = 0.0f64;
    for it in 0..t_points {
        let t = spec.rect.t_min + spec.rect.t_len() * it as f64 / (t_points - 1) as f64;
        for ix in 0..x_points {
            let x = spec.rect.x_min + spec.rect.x_len() * ix as f64 / (x_points - 1) as f64;
            let row: Vec<f64> = m.lambdas().iter().map(|&l| spec.kernel(t, x, l)).collect();
            best = best.max(m.quadratic_form(&row).max(0.0));
        }
    }
    spec.c_y * best.sqrt()
}

impl Instance {
    pub fn prepare(config: RunConfig, base_dir: &Path) -> Result<Instance> {
        config.validate()?;
        let measure = match &config.measure {
            MeasureSource::Inline(m) => m.clone(),
            MeasureSource::File { path } => {
                let full = base_dir.join(path);
                let text = fs::read_to_string(&full).map_err(|e| {
                    Error::Config(format!("cannot read measure {}: {e}", full.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid measure {}: {e}", full.display())))?
            }
        };
        let spec = &config.problem;
        let c_z = compute_cz(&measure, spec, &config.z);
        let g_up = gamma_upper(&measure, spec.c_y);
        let g0 = gamma0(&config.z, spec.c_y * c_z, spec.rect.kappa_len());
        // grid estimate with one dyadic refinement; monotone in refinement
        let eps0_grid = grid_field_scale(&measure, spec, config.sim.t_points, config.sim.x_points)
            .max(grid_field_scale(
                &measure,
                spec,
                2 * config.sim.t_points - 1,
                2 * config.sim.x_points - 1,
            ));
        let eps0 = match config.eps0_mode {
            Eps0Mode::GammaUpper => g_up,
            Eps0Mode::Grid => eps0_grid,
        };
        let fp = fingerprint(&measure, spec);
        let out_dir = match &config.output_dir {
            Some(d) => base_dir.join(d),
            None => base_dir.to_path_buf(),
        };
        Ok(Instance {
            config,
            measure,
            fingerprint: fp,
            c_z,
            gamma_upper: g_up,
            gamma0: g0,
            eps0,
            eps0_grid,
            out_dir,
        })
    }

    fn c(&self) -> f64 {
        self.config.problem.c_y * self.c_z
    }
}

/// Resolve which closed form, if any, matches the function signature.
fn closed_signature(phi: &NFunction, z: &AdmissibleFn, gaussian: bool) -> Option<BoundMethod> {
    match (phi, z) {
        (NFunction::GaussianHalfSquare, AdmissibleFn::Power { .. }) if gaussian => {
            Some(BoundMethod::ClosedGauss)
        }
        (NFunction::GaussianHalfSquare, AdmissibleFn::Power { .. })
        | (NFunction::PowerAlpha { .. }, AdmissibleFn::Power { .. }) => {
            Some(BoundMethod::ClosedPower)
        }
        (NFunction::ExpAbs, AdmissibleFn::LogPower { .. }) => Some(BoundMethod::ClosedExp),
        _ => None,
    }
}

/// Compute the full bound report for an instance.
pub fn compute_bound_report(inst: &Instance, choice: MethodChoice) -> Result<BoundReport> {
    let cfg = &inst.config;
    let spec = &cfg.problem;
    let mut notes = Vec::new();

    let admissible = cfg.z.check_admissible(&cfg.phi, ADMISSIBILITY_EPS)?;
    if !admissible {
        return Err(Error::NotAdmissible(format!(
            "the weight/Orlicz pair fails the convergence check at eps = {ADMISSIBILITY_EPS}"
        )));
    }

    let existence = existence_integral(&inst.measure, spec, &cfg.z);
    notes.push(format!("existence functional = {existence:.6e}"));
    if let (Some(p), AdmissibleFn::LogPower { alpha }) = (cfg.phi.power_exponent(), &cfg.z) {
        let le = existence_integral_log_power(&inst.measure, spec, *alpha)?;
        let threshold = 1.0 - 1.0 / p;
        notes.push(format!(
            "log-power existence functional = {:.6e} (exponent threshold 1 - 1/p = {threshold})",
            le.value
        ));
        if le.negative_atoms > 0 {
            notes.push(format!(
                "{} atoms with negative frequency are excluded from the log-power existence sum",
                le.negative_atoms
            ));
        }
    }

    let signature = closed_signature(&cfg.phi, &cfg.z, spec.gaussian);
    let method = match choice {
        MethodChoice::Generic => BoundMethod::Generic,
        MethodChoice::Auto => signature.unwrap_or(BoundMethod::Generic),
        MethodChoice::Closed => signature.ok_or_else(|| {
            Error::Config(
                "no closed form matches the phi/Z signature; run with --method generic".into(),
            )
        })?,
    };
    if method == BoundMethod::ClosedGauss {
        notes.push(
            "Gaussian and power closed forms both apply; using the Gaussian one".into(),
        );
    }

    if inst.eps0 > 0.0 && (inst.gamma_upper - inst.eps0_grid) > 0.1 * inst.gamma_upper {
        notes.push(format!(
            "grid scale estimate {:.6} sits more than 10% below the conservative scale {:.6}",
            inst.eps0_grid, inst.gamma_upper
        ));
    }

    let c = inst.c();
    let eps0 = inst.eps0;
    let kappa_len = spec.rect.kappa_len();
    let rows: Vec<BoundRow> = if eps0 == 0.0 {
        cfg.u_grid
            .iter()
            .map(|&u| BoundRow {
                u,
                theta_star: 0.5,
                bound: 0.0,
            })
            .collect()
    } else {
        match method {
            BoundMethod::Generic => {
                let pipeline = BoundPipeline {
                    phi: cfg.phi,
                    z: cfg.z,
                    r: cfg.r,
                    c_y: spec.c_y,
                    c_z: inst.c_z,
                    eps0,
                    rect: spec.rect,
                    entropy: EntropySource::Quadrature,
                };
                cfg.u_grid
                    .iter()
                    .map(|&u| {
                        let (theta_star, bound) = pipeline.optimal_tail(u)?;
                        Ok(BoundRow {
                            u,
                            theta_star,
                            bound,
                        })
                    })
                    .collect::<Result<_>>()?
            }
            BoundMethod::ClosedGauss => {
                let rho = match cfg.z {
                    AdmissibleFn::Power { rho } => rho,
                    _ => unreachable!("signature guarantees a power weight"),
                };
                cfg.u_grid
                    .iter()
                    .map(|&u| {
                        let (theta_star, bound) = optimize_theta(|theta| {
                            closed_form_gauss(u, theta, rho, inst.c_z, eps0, kappa_len)
                        })?;
                        Ok(BoundRow {
                            u,
                            theta_star,
                            bound,
                        })
                    })
                    .collect::<Result<_>>()?
            }
            BoundMethod::ClosedPower => {
                let rho = match cfg.z {
                    AdmissibleFn::Power { rho } => rho,
                    _ => unreachable!("signature guarantees a power weight"),
                };
                let p = cfg
                    .phi
                    .power_exponent()
                    .expect("signature guarantees a power-type phi");
                let gamma = p / (p - 1.0);
                cfg.u_grid
                    .iter()
                    .map(|&u| {
                        let (theta_star, bound) = optimize_theta(|theta| {
                            closed_form_power(u, theta, gamma, rho, c, eps0, kappa_len)
                        })?;
                        Ok(BoundRow {
                            u,
                            theta_star,
                            bound,
                        })
                    })
                    .collect::<Result<_>>()?
            }
            BoundMethod::ClosedExp => {
                let alpha = match cfg.z {
                    AdmissibleFn::LogPower { alpha } => alpha,
                    _ => unreachable!("signature guarantees a log-power weight"),
                };
                // the aperture condition does not depend on theta or u;
                // surface its violation directly
                exp_alpha_window(&spec.rect, alpha)?;
                cfg.u_grid
                    .iter()
                    .map(|&u| {
                        let (theta_star, bound) = optimize_theta(|theta| {
                            closed_form_exp(u, theta, alpha, c, eps0, &spec.rect, inst.gamma0)
                        })?;
                        Ok(BoundRow {
                            u,
                            theta_star,
                            bound,
                        })
                    })
                    .collect::<Result<_>>()?
            }
        }
    };

    let theta_star = rows.last().map(|r| r.theta_star).unwrap_or(0.5);
    Ok(BoundReport {
        method,
        fingerprint: inst.fingerprint.clone(),
        eps0,
        gamma_upper: inst.gamma_upper,
        c_z: inst.c_z,
        gamma0: inst.gamma0,
        existence,
        admissible,
        theta_star,
        rows,
        notes,
    })
}

/// Sample the ensemble for an instance.
pub fn compute_ensemble(inst: &Instance, seed: Option<u64>) -> Result<SupEnsemble> {
    sample_paths(
        &inst.measure,
        &inst.config.problem,
        &inst.config.sim,
        seed.unwrap_or(inst.config.seed),
    )
}

/// Outcome of the verification command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub fingerprint: String,
    pub n_paths: usize,
    pub cz_scale: f64,
    pub worst_sigma_ratio: f64,
    pub sigma_ok: bool,
    pub rows: Vec<DominanceRow>,
    pub all_ok: bool,
}

/// Run both verification layers: the modulus oracle on the simulation grid
/// and bound-versus-empirical dominance per level.
pub fn compute_verification(
    inst: &Instance,
    ensemble: &SupEnsemble,
    report: &BoundReport,
    cz_scale: f64,
) -> Result<VerificationSummary> {
    if !(cz_scale > 0.0 && cz_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cz-scale must be positive and finite, got {cz_scale}"
        )));
    }
    let spec = &inst.config.problem;
    let worst_sigma_ratio = verify_sigma_oracle(
        &inst.measure,
        spec,
        &inst.config.z,
        spec.c_y * inst.c_z * cz_scale,
        inst.config.sim.t_points,
        inst.config.sim.x_points,
    )?;
    let sigma_ok = worst_sigma_ratio <= 1.0 + tol::SIGMA_ORACLE_SLACK;
    let rows = verify_bound_dominance(ensemble, report)?;
    let all_ok = sigma_ok && rows.iter().all(|r| r.ok);
    Ok(VerificationSummary {
        fingerprint: inst.fingerprint.clone(),
        n_paths: ensemble.sups.len(),
        cz_scale,
        worst_sigma_ratio,
        sigma_ok,
        rows,
        all_ok,
    })
}

/// Nearest-rank quantile of an unsorted sample.
pub fn quantile(samples: &[f64], p: f64) -> f64 {
    debug_assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_report_files(report: &BoundReport, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    write_json(&out_dir.join("report.json"), report)?;
    let mut csv = String::from("u,theta_star,bound,method\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.u, row.theta_star, row.bound, report.method
        ));
    }
    fs::write(out_dir.join("report.csv"), csv)?;
    Ok(())
}

fn write_verification_files(summary: &VerificationSummary, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    write_json(&out_dir.join("verification.json"), summary)?;
    let mut csv = String::from("u,bound,count,p_hat,ci_upper,ok\n");
    for row in &summary.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.u, row.bound, row.count, row.p_hat, row.ci_upper, row.ok
        ));
    }
    fs::write(out_dir.join("verification.csv"), csv)?;
    Ok(())
}

fn print_report(report: &BoundReport, out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(
        out,
        "method = {}  eps0 = {:.6}  C_Z = {:.6}  gamma0 = {:.6}",
        report.method, report.eps0, report.c_z, report.gamma0
    )?;
    for note in &report.notes {
        writeln!(out, "note: {note}")?;
    }
    for row in &report.rows {
        let marker = if row.bound >= 1.0 {
            "  (vacuous: not below 1)"
        } else {
            ""
        };
        writeln!(
            out,
            "u = {:>8.4}  theta* = {:.6}  bound = {:.6e}{marker}",
            row.u, row.theta_star, row.bound
        )?;
    }
    Ok(())
}

fn load_instance(config_path: &Path, out_override: Option<&Path>) -> Result<Instance> {
    let (cfg, base) = RunConfig::load(config_path)?;
    let mut inst = Instance::prepare(cfg, &base)?;
    if let Some(out) = out_override {
        inst.out_dir = out.to_path_buf();
    }
    Ok(inst)
}

/// `bound` command: report to stdout plus `report.json` / `report.csv`.
pub fn run_bound(
    config_path: &Path,
    choice: MethodChoice,
    out_override: Option<&Path>,
) -> Result<BoundReport> {
    let inst = load_instance(config_path, out_override)?;
    let report = compute_bound_report(&inst, choice)?;
    write_report_files(&report, &inst.out_dir)?;
    let stdout = std::io::stdout();
    print_report(&report, &mut stdout.lock())?;
    Ok(report)
}

/// `simulate` command: ensemble to `ensemble.json` plus sup quantiles.
pub fn run_simulate(
    config_path: &Path,
    seed: Option<u64>,
    out_override: Option<&Path>,
) -> Result<SupEnsemble> {
    let inst = load_instance(config_path, out_override)?;
    let ensemble = compute_ensemble(&inst, seed)?;
    ensure_out_dir(&inst.out_dir)?;
    write_json(&inst.out_dir.join("ensemble.json"), &ensemble)?;
    println!(
        "sampled {} paths on a {} x {} grid (seed {})",
        ensemble.sups.len(),
        ensemble.config.t_points,
        ensemble.config.x_points,
        ensemble.seed
    );
    for (label, p) in [("50%", 0.5), ("90%", 0.9), ("99%", 0.99)] {
        println!("sup quantile {label} = {:.6}", quantile(&ensemble.sups, p));
    }
    Ok(ensemble)
}

/// Load a previously written artifact when it matches the instance,
/// otherwise recompute it.
fn load_or_compute_report(inst: &Instance) -> Result<BoundReport> {
    let path = inst.out_dir.join("report.json");
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(report) = serde_json::from_str::<BoundReport>(&text) {
            if report.fingerprint == inst.fingerprint {
                return Ok(report);
            }
            println!("report.json belongs to different inputs; recomputing");
        }
    }
    let report = compute_bound_report(inst, MethodChoice::Auto)?;
    write_report_files(&report, &inst.out_dir)?;
    Ok(report)
}

fn load_or_compute_ensemble(inst: &Instance, seed: Option<u64>) -> Result<SupEnsemble> {
    let path = inst.out_dir.join("ensemble.json");
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(ensemble) = serde_json::from_str::<SupEnsemble>(&text) {
            if ensemble.fingerprint == inst.fingerprint
                && seed.is_none_or(|s| s == ensemble.seed)
            {
                return Ok(ensemble);
            }
            println!("ensemble.json belongs to different inputs; recomputing");
        }
    }
    let ensemble = compute_ensemble(inst, seed)?;
    ensure_out_dir(&inst.out_dir)?;
    write_json(&inst.out_dir.join("ensemble.json"), &ensemble)?;
    Ok(ensemble)
}

fn print_verification(summary: &VerificationSummary) {
    println!(
        "sigma oracle: worst ratio = {:.6} ({}), cz scale = {}",
        summary.worst_sigma_ratio,
        if summary.sigma_ok { "ok" } else { "VIOLATED" },
        summary.cz_scale
    );
    for row in &summary.rows {
        println!(
            "u = {:>8.4}  bound = {:.6e}  empirical = {:.4} (ci99 {:.4})  {}",
            row.u,
            row.bound,
            row.p_hat,
            row.ci_upper,
            if row.ok { "ok" } else { "FAILED" }
        );
    }
}

/// `verify` command: sigma oracle plus dominance table; loads or recreates
/// the report and ensemble artifacts as needed. A `cz_scale` below 1
/// tightens the modulus and should make the oracle fail: the negative
/// control for the whole check.
pub fn run_verify(
    config_path: &Path,
    cz_scale: f64,
    out_override: Option<&Path>,
) -> Result<VerificationSummary> {
    let inst = load_instance(config_path, out_override)?;
    let report = load_or_compute_report(&inst)?;
    let ensemble = load_or_compute_ensemble(&inst, None)?;
    let summary = compute_verification(&inst, &ensemble, &report, cz_scale)?;
    write_verification_files(&summary, &inst.out_dir)?;
    print_verification(&summary);
    if !summary.all_ok {
        let failed = summary.rows.iter().filter(|r| !r.ok).count();
        return Err(Error::VerificationFailed(format!(
            "{failed} dominance rows failed, sigma ratio {:.6} (ok: {})",
            summary.worst_sigma_ratio, summary.sigma_ok
        )));
    }
    Ok(summary)
}

/// `all` command: bound, simulate, verify in sequence on one instance.
pub fn run_all(
    config_path: &Path,
    choice: MethodChoice,
    seed: Option<u64>,
    cz_scale: f64,
    out_override: Option<&Path>,
) -> Result<VerificationSummary> {
    let inst = load_instance(config_path, out_override)?;
    let report = compute_bound_report(&inst, choice)?;
    write_report_files(&report, &inst.out_dir)?;
    let stdout = std::io::stdout();
    print_report(&report, &mut stdout.lock())?;
    let ensemble = compute_ensemble(&inst, seed)?;
    write_json(&inst.out_dir.join("ensemble.json"), &ensemble)?;
    let summary = compute_verification(&inst, &ensemble, &report, cz_scale)?;
    write_verification_files(&summary, &inst.out_dir)?;
    print_verification(&summary);
    if !summary.all_ok {
        let failed = summary.rows.iter().filter(|r| !r.ok).count();
        return Err(Error::VerificationFailed(format!(
            "{failed} dominance rows failed, sigma ratio {:.6} (ok: {})",
            summary.worst_sigma_ratio, summary.sigma_ok
        )));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::empirical_exceedance;
    use crate::spectral::{Kappa, Rect};

    fn standard_config() -> RunConfig {
        RunConfig {
            phi: NFunction::GaussianHalfSquare,
            z: AdmissibleFn::power(1.0).unwrap(),
            r: RFunction::power_minus_one(1e-3).unwrap(),
            measure: MeasureSource::Inline(
                SpectralMeasure::new(
                    vec![1.0, 2.0],
                    vec![vec![1.0, 0.3], vec![0.3, 1.0]],
                )
                .unwrap(),
            ),
            problem: ProblemSpec::new(
                vec![1.0],
                Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(),
                Kappa::Cos,
                1.0,
                true,
            )
            .unwrap(),
            u_grid: (1..=12).map(|i| 0.5 * i as f64).collect(),
            sim: SimulationConfig::new(16, 16, 200).unwrap(),
            seed: 42,
            eps0_mode: Eps0Mode::GammaUpper,
            output_dir: None,
        }
    }

    fn standard_instance() -> Instance {
        Instance::prepare(standard_config(), Path::new(".")).unwrap()
    }

    #[test]
    fn derived_constants_match_hand_values() {
        let inst = standard_instance();
        // C_Z^2 = sum |G_ij| w_i w_j with w = (1, 4.5): 1 + 2*0.3*4.5 + 20.25
        assert!((inst.c_z - 29.0f64.sqrt()).abs() < 1e-12);
        assert!((inst.gamma_upper - 2.6f64.sqrt()).abs() < 1e-12);
        // gamma0 = 2 C_Z for rho = 1, kappa = 1
        assert!((inst.gamma0 - 2.0 * 29.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(inst.eps0, inst.gamma_upper);
        // the field scale on the grid cannot exceed the conservative bound
        assert!(inst.eps0_grid <= inst.gamma_upper + 1e-12);
        assert!(inst.eps0_grid > 0.0);
    }

    #[test]
    fn auto_dispatch_selects_gaussian_closed_form() {
        let inst = standard_instance();
        let report = compute_bound_report(&inst, MethodChoice::Auto).unwrap();
        assert_eq!(report.method, BoundMethod::ClosedGauss);
        assert_eq!(report.rows.len(), 12);
        assert!(report.admissible);
        // rows decrease in u once past the vacuous regime
        for pair in report.rows.windows(2) {
            assert!(pair[1].bound <= pair[0].bound * (1.0 + 1e-9));
        }
        assert_eq!(report.theta_star, report.rows.last().unwrap().theta_star);
    }

    #[test]
    fn generic_never_exceeds_closed_form() {
        // the closed form majorizes each axis count by a factor up to 2,
        // so it can sit up to ~4x above the quadrature pipeline but never
        // below it
        let inst = standard_instance();
        let generic = compute_bound_report(&inst, MethodChoice::Generic).unwrap();
        let closed = compute_bound_report(&inst, MethodChoice::Closed).unwrap();
        assert_eq!(generic.method, BoundMethod::Generic);
        assert_eq!(closed.method, BoundMethod::ClosedGauss);
        for (g, c) in generic.rows.iter().zip(&closed.rows) {
            assert!(
                g.bound <= c.bound * (1.0 + 1e-9),
                "u = {}: generic {} above closed {}",
                g.u,
                g.bound,
                c.bound
            );
            assert!(
                c.bound <= g.bound * 4.1,
                "u = {}: closed {} implausibly far above generic {}",
                g.u,
                c.bound,
                g.bound
            );
        }
    }

    #[test]
    fn closed_choice_requires_a_matching_signature() {
        let mut cfg = standard_config();
        cfg.phi = NFunction::ExpAbs;
        // ExpAbs with a power weight has no closed form
        let inst = Instance::prepare(cfg, Path::new(".")).unwrap();
        let err = compute_bound_report(&inst, MethodChoice::Closed).unwrap_err();
        assert!(err.to_string().contains("no closed form"));
        // but auto falls back to the generic pipeline
        let report = compute_bound_report(&inst, MethodChoice::Auto).unwrap();
        assert_eq!(report.method, BoundMethod::Generic);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = standard_config();
        let js = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(js.contains("\"Z\""));
        let back: RunConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(back.u_grid, cfg.u_grid);
        assert_eq!(back.seed, 42);
        let mut bad: serde_json::Value = serde_json::from_str(&js).unwrap();
        bad["u_grid"] = serde_json::json!([2.0, 1.0]);
        let parsed: RunConfig = serde_json::from_value(bad).unwrap();
        assert!(parsed.validate().is_err());
    }

    #[test]
    fn quantile_uses_nearest_rank() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(quantile(&xs, 0.5), 50.0);
        assert_eq!(quantile(&xs, 0.99), 99.0);
        assert_eq!(quantile(&xs, 1.0), 100.0);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn verification_passes_on_the_standard_instance() {
        let inst = standard_instance();
        let report = compute_bound_report(&inst, MethodChoice::Auto).unwrap();
        let ensemble = compute_ensemble(&inst, None).unwrap();
        let summary = compute_verification(&inst, &ensemble, &report, 1.0).unwrap();
        assert!(summary.sigma_ok, "ratio {}", summary.worst_sigma_ratio);
        assert!(summary.all_ok);
        // halving C_Z must break the modulus
        let broken = compute_verification(&inst, &ensemble, &report, 0.5).unwrap();
        assert!(!broken.sigma_ok);
        assert!(!broken.all_ok);
        assert!(compute_verification(&inst, &ensemble, &report, 0.0).is_err());
    }

    #[test]
    fn exceedance_rows_match_direct_computation() {
        let inst = standard_instance();
        let report = compute_bound_report(&inst, MethodChoice::Auto).unwrap();
        let ensemble = compute_ensemble(&inst, None).unwrap();
        let rows = verify_bound_dominance(&ensemble, &report).unwrap();
        for row in &rows {
            let e = empirical_exceedance(&ensemble.sups, row.u).unwrap();
            assert_eq!(e.count, row.count);
            assert_eq!(e.ci_upper, row.ci_upper);
        }
    }
}

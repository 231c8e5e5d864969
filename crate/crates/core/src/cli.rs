//! The `winding` command-line front end.
//!
//! Every command resolves a [`RunConfig`] (flags over a JSON config file
//! over defaults), writes its data files to the output directory together
//! with `<command>_config.json` holding the resolved configuration, and
//! exits with a code from [`exit`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{builtin, CovarianceEval, SpectralMeasure};
use crate::stats::{self, McSettings, DEFAULT_SEED};
use crate::theory;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DEGENERATE: i32 = 2;
    pub const CROSS_CHECK: i32 = 3;
    pub const SIMULATION: i32 = 4;
    pub const VERIFICATION: i32 = 5;
    pub const CLASSIFICATION: i32 = 6;
}

/// Largest tolerated `|V_K - V_K̃| / V_K`.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-6;
/// Largest tolerated residual of the power-law fit behind `classify`.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    Theory,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VerifyProfile {
    /// Quadratic for purely atomic measures, linear otherwise.
    Auto,
    Linear,
    Quadratic,
}

/// Everything a command needs. Fields missing from a config file take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in measure name; ignored when `measure` is set.
    pub builtin: String,
    /// Built-in parameters; `atomic` takes `freq, mass` pairs.
    pub params: Vec<f64>,
    /// Path of a measure JSON file.
    pub measure: Option<PathBuf>,
    /// `T` grid of `variance`.
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub t_scale: GridScale,
    /// Horizon of `simulate` and `verify`.
    #[serde(rename = "T")]
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub dt0: Option<f64>,
    pub n_freq: Option<usize>,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    /// `x` grid of `kernel`: `x_count` points on `[0, x_max]`.
    pub x_max: f64,
    pub x_count: usize,
    /// Fit window of `classify`; `None` picks the per-kernel default from
    /// [`default_fit_window`].
    pub fit_t_min: Option<f64>,
    pub fit_t_max: Option<f64>,
    pub fit_count: usize,
    pub source: CurveSource,
    pub profile: VerifyProfile,
    /// `simulate`: attach the theoretical variance and its z-score.
    pub theory: bool,
    /// `simulate`: also run the normality test.
    pub clt: bool,
    /// `simulate`: write the per-path CSV.
    pub paths_csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            builtin: "gaussian".into(),
            params: Vec::new(),
            measure: None,
            t_min: 1.0,
            t_max: 200.0,
            t_count: 40,
            t_scale: GridScale::Log,
            t: 50.0,
            n_paths: 2000,
            seed: DEFAULT_SEED,
            dt0: None,
            n_freq: None,
            out_dir: PathBuf::from("."),
            threads: None,
            x_max: 10.0,
            x_count: 2001,
            fit_t_min: None,
            fit_t_max: None,
            fit_count: 12,
            source: CurveSource::Theory,
            profile: VerifyProfile::Auto,
            theory: false,
            clt: false,
            paths_csv: false,
        }
    }
}

/// Default `classify` window: `[20, 160]` for purely atomic measures, whose
/// quadratic growth sets in early, and `[50, 800]` otherwise, which keeps
/// the short-time transient out of the fit.
pub fn default_fit_window(measure: &SpectralMeasure) -> (f64, f64) {
    if measure.density().is_none() {
        (20.0, 160.0)
    } else {
        (50.0, 800.0)
    }
}

/// Strictly increasing grid of `count` points on `[min, max]`.
pub fn make_grid(min: f64, max: f64, count: usize, scale: GridScale) -> Result<Vec<f64>> {
    let bad = |m: &str| Err(Error::InvalidParameter(format!("T grid: {m}")));
    if count == 0 {
        return bad("count must be positive");
    }
    if !(min.is_finite() && max.is_finite()) || (count > 1 && !(min < max)) {
        return bad("need min < max");
    }
    if scale == GridScale::Log && !(min > 0.0) {
        return bad("log grid needs min > 0");
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let step = 1.0 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let u = i as f64 * step;
            match scale {
                GridScale::Linear => min + u * (max - min),
                GridScale::Log => (min.ln() + u * (max / min).ln()).exp(),
            }
        })
        .map(|v| v.clamp(min, max))
        .collect())
}

/// Parses `1:0.5,3:0.5` or `0.25`.
pub fn parse_params(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .flat_map(|item| item.split(':'))
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "winding",
    version,
    about = "Winding of complex Gaussian stationary processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate K, K̃ and K̃* and list the points where |r| = 1.
    Kernel(CommonArgs),
    /// Theoretical mean and variance over a T grid, by both routes.
    Variance(CommonArgs),
    /// Monte Carlo winding at one horizon.
    Simulate(CommonArgs),
    /// Theory against simulation, one verdict per check.
    Verify(CommonArgs),
    /// Fit the growth exponent and name the regime.
    Classify(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Built-in measure: sinc, gaussian, bessel_j0, ou_smooth, ou_spectral,
    /// power_cosine, atomic.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Built-in parameters, e.g. `0.25` or `1:0.5,3:0.5` for atomic.
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// Measure JSON file (takes precedence over --builtin).
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub tcount: Option<usize>,
    #[arg(long, value_enum)]
    pub tscale: Option<GridScale>,
    /// Horizon for simulate and verify.
    #[arg(long = "T", alias = "t")]
    pub t: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// RNG seed; the default is fixed, see `--print-config`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt0: Option<f64>,
    #[arg(long)]
    pub n_freq: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Worker threads for path simulation; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Number of x points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fit_tmin: Option<f64>,
    #[arg(long)]
    pub fit_tmax: Option<f64>,
    #[arg(long)]
    pub fit_count: Option<usize>,
    #[arg(long, value_enum)]
    pub source: Option<CurveSource>,
    #[arg(long, value_enum)]
    pub profile: Option<VerifyProfile>,
    #[arg(long)]
    pub theory: bool,
    #[arg(long)]
    pub clt: bool,
    #[arg(long)]
    pub paths_csv: bool,
}

impl CommonArgs {
    /// Flags over the config file over defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.builtin, c.builtin);
        if let Some(p) = &self.params {
            c.params =
                parse_params(p).map_err(|e| Error::InvalidParameter(format!("--params {e}")))?;
        }
        if self.measure.is_some() {
            c.measure = self.measure.clone();
        }
        set!(self.tmin, c.t_min);
        set!(self.tmax, c.t_max);
        set!(self.tcount, c.t_count);
        set!(self.tscale, c.t_scale);
        set!(self.t, c.t);
        set!(self.paths, c.n_paths);
        set!(self.seed, c.seed);
        set!(self.out, c.out_dir);
        set!(self.xmax, c.x_max);
        set!(self.n, c.x_count);
        set!(self.fit_count, c.fit_count);
        set!(self.source, c.source);
        set!(self.profile, c.profile);
        if self.dt0.is_some() {
            c.dt0 = self.dt0;
        }
        if self.n_freq.is_some() {
            c.n_freq = self.n_freq;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if self.fit_tmin.is_some() {
            c.fit_t_min = self.fit_tmin;
        }
        if self.fit_tmax.is_some() {
            c.fit_t_max = self.fit_tmax;
        }
        c.theory |= self.theory;
        c.clt |= self.clt;
        c.paths_csv |= self.paths_csv;
        Ok(c)
    }
}

impl RunConfig {
    pub fn load_measure(&self) -> Result<(SpectralMeasure, CovarianceEval)> {
        match &self.measure {
            Some(path) => {
                let m = SpectralMeasure::from_json(&fs::read_to_string(path)?)?;
                Ok((m.clone(), CovarianceEval::closed_form(m)))
            }
            None => builtin(&self.builtin, &self.params),
        }
    }

    pub fn mc_settings(&self) -> McSettings {
        McSettings {
            n_freq: self.n_freq,
            dt0: self.dt0,
            start: 0.0,
        }
    }

    fn t_grid(&self) -> Result<Vec<f64>> {
        make_grid(self.t_min, self.t_max, self.t_count, self.t_scale)
    }
}

/// Maps a library error to an exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Degenerate(_) | Error::NonDiscreteSingularSet(_) => exit::DEGENERATE,
        Error::Quadrature(_) => exit::CROSS_CHECK,
        Error::InsufficientFrequencies { .. }
        | Error::WindingRefinement { .. }
        | Error::SimulationFailures { .. }
        | Error::ZeroVariance => exit::SIMULATION,
        Error::Fit(_) => exit::CLASSIFICATION,
        _ => exit::USAGE,
    }
}

/// Outcome of a command: the exit code and a one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Self {
            code: exit::OK,
            summary,
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write(dir, name, &s)
}

#[derive(Serialize)]
struct SingularSidecar<'a> {
    kernel: &'a str,
    seed: u64,
    x_max: f64,
    singular_points: &'a [f64],
}

pub fn cmd_kernel(c: &RunConfig) -> Result<Outcome> {
    let (measure, eval) = c.load_measure()?;
    if !(c.x_max > 0.0) || c.x_count < 2 {
        return Err(Error::InvalidParameter(
            "kernel grid needs x_max > 0 and at least 2 points".into(),
        ));
    }
    let grid = make_grid(0.0, c.x_max, c.x_count, GridScale::Linear)?;
    let profile = theory::kernel_profile(&eval, &grid)?;
    let csv = write(&c.out_dir, "kernel.csv", &profile.to_csv())?;
    write_json(
        &c.out_dir,
        "kernel_singular.json",
        &SingularSidecar {
            kernel: measure.name(),
            seed: c.seed,
            x_max: c.x_max,
            singular_points: &profile.singular_points,
        },
    )?;
    Ok(Outcome::ok(format!(
        "{}: {} rows, {} singular point(s) in [0, {}]",
        csv.display(),
        grid.len(),
        profile.singular_points.len(),
        c.x_max
    )))
}

/// The variance CSV, with `V/T` and `V/(T ln T)` columns appended.
pub fn variance_csv(curve: &theory::VarianceCurve) -> String {
    let mut out = String::new();
    for (i, line) in curve.to_csv().lines().enumerate() {
        out.push_str(line);
        if i == 0 {
            out.push_str(",V_over_T,V_over_TlnT\n");
        } else {
            let t = curve.t[i - 1];
            let v = curve.v_k[i - 1];
            let tl = t * t.ln();
            let per_log = if tl > 0.0 {
                (v / tl).to_string()
            } else {
                "nan".into()
            };
            out.push_str(&format!(",{},{}\n", v / t, per_log));
        }
    }
    out
}

pub fn cmd_variance(c: &RunConfig) -> Result<Outcome> {
    let (_, eval) = c.load_measure()?;
    let curve = theory::variance_curve(&eval, &c.t_grid()?)?;
    let path = write(&c.out_dir, "variance.csv", &variance_csv(&curve))?;
    let gap = curve.max_relative_gap();
    let code = if gap < CROSS_CHECK_TOLERANCE {
        exit::OK
    } else {
        exit::CROSS_CHECK
    };
    Ok(Outcome {
        code,
        summary: format!(
            "{}: {} rows, max |V_K - V_Ktilde|/V_K = {gap:.3e}",
            path.display(),
            curve.t.len()
        ),
    })
}

pub fn cmd_simulate(c: &RunConfig) -> Result<Outcome> {
    let (measure, eval) = c.load_measure()?;
    let run = stats::mc_winding(&measure, c.t, c.n_paths, c.seed, &c.mc_settings())?;
    let mut report = run.report.clone();
    if c.theory {
        if measure.is_degenerate() {
            report.theory_v = Some(0.0);
        } else {
            report = report.with_theory(theory::variance_via_k(&eval, c.t)?);
        }
    }
    if c.clt && !measure.is_degenerate() {
        report = report.with_clt(&stats::clt_test(&run.deltas())?);
    }
    let path = write_json(&c.out_dir, "simulate.json", &report)?;
    if c.paths_csv {
        write(
            &c.out_dir,
            "simulate_paths.csv",
            &crate::simulate::paths_to_csv(&run.paths),
        )?;
    }
    Ok(Outcome::ok(format!(
        "{}: mean {:.6}, var {:.6} ± {:.3e}{}",
        path.display(),
        report.mean,
        report.var,
        report.se_var,
        report.z.map(|z| format!(", z {z:.2}")).unwrap_or_default()
    )))
}

/// One verification check; `passed = None` marks a skipped check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub value: f64,
    pub threshold: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub kernel: String,
    pub profile: VerifyProfile,
    #[serde(rename = "T")]
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Log grid of 7 horizons on `[20, 160]`, containing 20, 40, 80 and 160.
pub fn quadratic_grid() -> Vec<f64> {
    (0..7).map(|i| 20.0 * 2f64.powf(i as f64 / 2.0)).collect()
}

pub fn verify(c: &RunConfig) -> Result<VerifyReport> {
    let (measure, eval) = c.load_measure()?;
    let profile = match c.profile {
        VerifyProfile::Auto if measure.density().is_none() => VerifyProfile::Quadratic,
        VerifyProfile::Auto => VerifyProfile::Linear,
        p => p,
    };
    let settings = c.mc_settings();
    let mut checks = Vec::new();

    let v = theory::variance_curve(&eval, &[c.t])?;
    let gap = v.max_relative_gap();
    checks.push(Check {
        name: "cross_check".into(),
        passed: Some(gap < CROSS_CHECK_TOLERANCE),
        value: gap,
        threshold: format!("< {CROSS_CHECK_TOLERANCE:e}"),
        detail: format!("V_K = {}, V_Ktilde = {}", v.v_k[0], v.v_ktilde[0]),
    });

    let run = stats::mc_winding(&measure, c.t, c.n_paths, c.seed, &settings)?;
    let report = run.report.clone().with_theory(v.v_k[0]);
    let dev = (report.mean - v.mean[0]) / report.se_mean;
    checks.push(Check {
        name: "mean".into(),
        passed: Some(dev.abs() < 3.0),
        value: dev,
        threshold: "|z| < 3".into(),
        detail: format!(
            "empirical {} ± {}, theory {}",
            report.mean, report.se_mean, v.mean[0]
        ),
    });

    match profile {
        VerifyProfile::Quadratic => {
            checks.push(Check {
                name: "clt".into(),
                passed: None,
                value: f64::NAN,
                threshold: "skipped".into(),
                detail: "no central limit law for atomic measures".into(),
            });
            let grid = quadratic_grid();
            let mut vars = Vec::with_capacity(grid.len());
            for (i, &t) in grid.iter().enumerate() {
                let r = stats::mc_winding(
                    &measure,
                    t,
                    c.n_paths,
                    c.seed.wrapping_add(1 + i as u64),
                    &settings,
                )?;
                vars.push(r.report.var);
            }
            let fit = stats::growth_exponent(&grid, &vars, 0.0, f64::INFINITY)?;
            checks.push(Check {
                name: "growth_exponent".into(),
                passed: Some((1.8..=2.05).contains(&fit.exponent)),
                value: fit.exponent,
                threshold: "in [1.8, 2.05]".into(),
                detail: format!("MC variance on T = {grid:?}, residual {:.3}", fit.residual),
            });
            let ratios = stats::subquadratic_check(&grid, &vars);
            let decay = ratios[0] / ratios[ratios.len() - 1];
            checks.push(Check {
                name: "no_quadratic_decay".into(),
                passed: Some(decay <= 2.0),
                value: decay,
                threshold: "V/T² decays by at most 2x".into(),
                detail: format!("V/T² = {ratios:?}"),
            });
        }
        _ => {
            let z = report.z.unwrap_or(f64::NAN);
            checks.push(Check {
                name: "variance".into(),
                passed: Some(z.abs() < 3.0),
                value: z,
                threshold: "|z| < 3".into(),
                detail: format!(
                    "empirical {} ± {}, theory {}",
                    report.var, report.se_var, v.v_k[0]
                ),
            });
            let clt = stats::clt_test(&run.deltas())?;
            checks.push(Check {
                name: "clt".into(),
                passed: Some(clt.p > 0.01),
                value: clt.p,
                threshold: "p > 0.01".into(),
                detail: format!("KS {}, Kolmogorov series p {}", clt.ks, clt.p_kolmogorov),
            });
            let grid = make_grid(1.0, 200.0, 40, GridScale::Log)?;
            let curve = theory::variance_curve(&eval, &grid)?;
            let lb = stats::linear_lower_bound_check(&curve);
            let frac = lb / (curve.v_k[grid.len() - 1] / 200.0);
            checks.push(Check {
                name: "linear_lower_bound".into(),
                passed: Some(frac > 0.01),
                value: frac,
                threshold: "min V/T over [1, 200] > 0.01 V(200)/200".into(),
                detail: format!("min V/T = {lb}"),
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed != Some(false));
    Ok(VerifyReport {
        kernel: measure.name().to_string(),
        profile,
        t: c.t,
        n_paths: c.n_paths,
        seed: c.seed,
        checks,
        passed,
    })
}

pub fn cmd_verify(c: &RunConfig) -> Result<Outcome> {
    let report = verify(c)?;
    let path = write_json(&c.out_dir, "verify.json", &report)?;
    let mut summary = format!("{}", path.display());
    for check in &report.checks {
        let verdict = match check.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "skip",
        };
        summary.push_str(&format!(
            "\n  {verdict} {}: {} ({})",
            check.name, check.value, check.threshold
        ));
    }
    Ok(Outcome {
        code: if report.passed {
            exit::OK
        } else {
            exit::VERIFICATION
        },
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub kernel: String,
    pub source: CurveSource,
    pub seed: u64,
    pub exponent: f64,
    pub regime: String,
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub log_slope: f64,
    pub log_intercept: f64,
    pub linear_drift: f64,
}

pub fn classify(c: &RunConfig) -> Result<ClassifyReport> {
    let (measure, eval) = c.load_measure()?;
    let (lo, hi) = default_fit_window(&measure);
    let (lo, hi) = (c.fit_t_min.unwrap_or(lo), c.fit_t_max.unwrap_or(hi));
    let grid = make_grid(lo, hi, c.fit_count, GridScale::Log)?;
    let v = match c.source {
        CurveSource::Theory => theory::variance_curve(&eval, &grid)?.v_k,
        CurveSource::Mc => {
            let settings = c.mc_settings();
            let mut v = Vec::with_capacity(grid.len());
            for (i, &t) in grid.iter().enumerate() {
                v.push(
                    stats::mc_winding(
                        &measure,
                        t,
                        c.n_paths,
                        c.seed.wrapping_add(i as u64),
                        &settings,
                    )?
                    .report
                    .var,
                );
            }
            v
        }
    };
    let cls = stats::classify(&grid, &v, lo, hi)?;
    Ok(ClassifyReport {
        kernel: measure.name().to_string(),
        source: c.source,
        seed: c.seed,
        exponent: cls.fit.exponent,
        regime: cls.regime,
        residual: cls.fit.residual,
        t_min: lo,
        t_max: hi,
        log_slope: cls.log_slope,
        log_intercept: cls.log_intercept,
        linear_drift: cls.linear_drift,
    })
}

pub fn cmd_classify(c: &RunConfig) -> Result<Outcome> {
    let report = classify(c)?;
    let path = write_json(&c.out_dir, "classify.json", &report)?;
    let code = if report.residual > FIT_RESIDUAL_LIMIT {
        exit::CLASSIFICATION
    } else {
        exit::OK
    };
    Ok(Outcome {
        code,
        summary: format!(
            "{}: {} (exponent {:.3}, residual {:.3})",
            path.display(),
            report.regime,
            report.exponent,
            report.residual
        ),
    })
}

fn dispatch(
    name: &str,
    args: &CommonArgs,
    run: fn(&RunConfig) -> Result<Outcome>,
) -> Result<Outcome> {
    let config = args.resolve()?;
    if args.print_config {
        return Ok(Outcome::ok(serde_json::to_string_pretty(&config)?));
    }
    let go = || -> Result<Outcome> {
        write_json(&config.out_dir, &format!("{name}_config.json"), &config)?;
        run(&config)
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// Parses `args`, runs the command, prints its summary and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    let result = match &cli.command {
        Command::Kernel(a) => dispatch("kernel", a, cmd_kernel),
        Command::Variance(a) => dispatch("variance", a, cmd_variance),
        Command::Simulate(a) => dispatch("simulate", a, cmd_simulate),
        Command::Verify(a) => dispatch("verify", a, cmd_verify),
        Command::Classify(a) => dispatch("classify", a, cmd_classify),
    };
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            make_grid(1.0, 3.0, 3, GridScale::Linear).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let g = make_grid(1.0, 100.0, 3, GridScale::Log).unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
        assert!(make_grid(0.0, 1.0, 3, GridScale::Log).is_err());
        assert!(make_grid(2.0, 1.0, 3, GridScale::Linear).is_err());
        let q = quadratic_grid();
        for t in [20.0, 40.0, 80.0, 160.0] {
            assert!(q.iter().any(|v| (v - t).abs() < 1e-9));
        }
    }

    #[test]
    fn params() {
        assert_eq!(
            parse_params("1:0.5,3:0.5").unwrap(),
            vec![1.0, 0.5, 3.0, 0.5]
        );
        assert_eq!(parse_params("0.25").unwrap(), vec![0.25]);
        assert_eq!(parse_params("-1:1").unwrap(), vec![-1.0, 1.0]);
        assert!(parse_params("a").is_err());
    }
}

//! Monte Carlo estimates of the winding moments, comparison with theory,
//! growth-exponent fits and the normality test.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::{self, FrequencyGrid, PathRecord};
use crate::special::normal_cdf;
use crate::spectral::SpectralMeasure;
use crate::theory::VarianceCurve;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_190_601;
/// Largest tolerated fraction of paths whose winding could not be resolved.
pub const MAX_FAILURE_RATE: f64 = 1e-3;
/// Null replicates behind the calibrated KS p-value.
pub const KS_CALIBRATION_REPLICATES: usize = 2000;
const KS_CALIBRATION_SEED: u64 = 0x4b53_6e75_6c6c;

/// Simulation knobs; `None` picks the documented default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct McSettings {
    /// Density cells; default is the smallest count allowed by the
    /// periodization guard, rounded up to a multiple of 256.
    pub n_freq: Option<usize>,
    /// Initial winding step; default [`simulate::default_dt0`].
    pub dt0: Option<f64>,
    /// Start of the observation window (stationarity checks).
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    pub kernel: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
    #[serde(rename = "theory_V")]
    pub theory_v: Option<f64>,
    pub z: Option<f64>,
    pub ks: Option<f64>,
    pub p: Option<f64>,
    pub failures: usize,
    pub n_freq: usize,
    pub dt0: f64,
}

impl MCReport {
    /// Attaches a theoretical variance and its z-score.
    pub fn with_theory(mut self, theory_v: f64) -> Self {
        self.theory_v = Some(theory_v);
        self.z = compare(theory_v, &self).ok();
        self
    }

    pub fn with_clt(mut self, clt: &CLTReport) -> Self {
        self.ks = Some(clt.ks);
        self.p = Some(clt.p);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub report: MCReport,
    pub paths: Vec<PathRecord>,
}

impl McRun {
    pub fn deltas(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.sample.delta).collect()
    }
}

/// Frequency grid used by [`mc_winding`] for a window ending at `t_max`.
pub fn simulation_grid(
    measure: &SpectralMeasure,
    t_max: f64,
    settings: &McSettings,
) -> Result<FrequencyGrid> {
    let n_freq = match settings.n_freq {
        Some(n) => n,
        None => {
            let need = simulate::required_frequencies(measure, t_max);
            need.div_ceil(256).max(1) * 256
        }
    };
    simulate::discretize(measure, t_max, n_freq)
}

/// Windings of `n_paths` independent paths over `[start, start + T]`.
///
/// Path `i` draws its coefficients from stream `i` of `seed`, so results do
/// not depend on the thread count. Paths whose winding cannot be resolved
/// are dropped and counted; more than 0.1% of them is an error.
pub fn mc_winding(
    measure: &SpectralMeasure,
    t: f64,
    n_paths: usize,
    seed: u64,
    settings: &McSettings,
) -> Result<McRun> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T must be positive, got {t}"
        )));
    }
    if n_paths < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 paths, got {n_paths}"
        )));
    }
    let start = settings.start;
    let grid = simulation_grid(measure, start + t, settings)?;
    let dt0 = settings.dt0.unwrap_or_else(|| simulate::default_dt0(&grid));
    let results: Vec<(u64, Result<simulate::WindingSample>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let proc = simulate::sample_process_stream(&grid, seed, i);
            (i, simulate::winding_between(&proc, start, start + t, dt0))
        })
        .collect();
    let mut paths = Vec::with_capacity(n_paths);
    let mut failures = 0;
    for (i, r) in results {
        match r {
            Ok(sample) => paths.push(PathRecord {
                path_index: i,
                sample,
            }),
            Err(_) => failures += 1,
        }
    }
    if failures as f64 > MAX_FAILURE_RATE * n_paths as f64 {
        return Err(Error::SimulationFailures {
            failed: failures,
            total: n_paths,
        });
    }
    let deltas: Vec<f64> = paths.iter().map(|p| p.sample.delta).collect();
    let m = moments(&deltas)?;
    let report = MCReport {
        kernel: measure.name().to_string(),
        t,
        n_paths: deltas.len(),
        seed,
        mean: m.mean,
        var: m.var,
        se_mean: m.se_mean,
        se_var: m.se_var,
        theory_v: None,
        z: None,
        ks: None,
        p: None,
        failures,
        n_freq: grid.len(),
        dt0,
    };
    Ok(McRun { report, paths })
}

/// Sample mean, unbiased variance and their jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

pub fn moments(x: &[f64]) -> Result<Moments> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let q: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let var = q / (nf - 1.0);
    // Leave-one-out variances from the centred data y = x - mean:
    // v_(i) = (q - y_i² n/(n-1)) / (n-2).
    let loo: Vec<f64> = x
        .iter()
        .map(|v| {
            let y = v - mean;
            (q - y * y * nf / (nf - 1.0)) / (nf - 2.0)
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / nf;
    let jack: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum();
    Ok(Moments {
        n,
        mean,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: ((nf - 1.0) / nf * jack).sqrt(),
    })
}

/// `(empirical - theory) / se_var`.
pub fn compare(theory_v: f64, report: &MCReport) -> Result<f64> {
    if !(report.se_var > 0.0) {
        return Err(Error::InvalidParameter(
            "standard error of the variance is zero".into(),
        ));
    }
    Ok((report.var - theory_v) / report.se_var)
}

/// Least-squares fit of `log V = intercept + exponent · log T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Largest absolute residual in `log V`.
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl GrowthFit {
    /// The exponent is only meaningful when the power law fits.
    pub fn is_meaningful(&self) -> bool {
        self.residual < 0.1
    }
}

pub const MIN_FIT_POINTS: usize = 6;

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    (slope, intercept, residual)
}

fn select(t: &[f64], v: &[f64], t_min: f64, t_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if t.len() != v.len() {
        return Err(Error::InvalidParameter(
            "T and V series differ in length".into(),
        ));
    }
    let (ts, vs): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .filter(|(t, _)| **t >= t_min && **t <= t_max)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "only {} points in [{t_min}, {t_max}], need {MIN_FIT_POINTS}",
            ts.len()
        )));
    }
    if let Some(bad) = vs.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Fit(format!(
            "non-positive variance {bad} cannot be fitted in log scale"
        )));
    }
    Ok((ts, vs))
}

pub fn growth_exponent(t: &[f64], v: &[f64], t_min: f64, t_max: f64) -> Result<GrowthFit> {
    let (ts, vs) = select(t, v, t_min, t_max)?;
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (exponent, intercept, residual) = least_squares(&x, &y);
    Ok(GrowthFit {
        exponent,
        intercept,
        residual,
        t_min: ts[0],
        t_max: ts[ts.len() - 1],
        n_points: ts.len(),
    })
}

pub fn growth_exponent_curve(curve: &VarianceCurve, t_min: f64, t_max: f64) -> Result<GrowthFit> {
    growth_exponent(&curve.t, &curve.v_k, t_min, t_max)
}

/// Growth regime of a variance curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub regime: String,
    pub fit: GrowthFit,
    /// Slope and intercept of `V/T = a + b ln T`, and its largest residual
    /// in `log V`.
    pub log_slope: f64,
    pub log_intercept: f64,
    pub log_residual: f64,
    /// Relative change of `V/T` across the fitted range.
    pub linear_drift: f64,
}

/// Labels a curve as `linear`, `T log T`, `power <α>` or `quadratic`.
///
/// Quadratic when `α̂ ≥ 1.9`. Linear when `V/T` changes by less than 10%
/// across the range and `|α̂ - 1| < 0.05`. Otherwise the better of the two
/// models `V = c T^α` and `V = T (a + b ln T)`, judged by the largest
/// residual in `log V`.
pub fn classify(t: &[f64], v: &[f64], t_min: f64, t_max: f64) -> Result<Classification> {
    let fit = growth_exponent(t, v, t_min, t_max)?;
    let (ts, vs) = select(t, v, t_min, t_max)?;
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = ts.iter().zip(&vs).map(|(t, v)| v / t).collect();
    let (b, a, _) = least_squares(&x, &y);
    let log_residual = ts
        .iter()
        .zip(&vs)
        .map(|(t, v)| {
            let model = t * (a + b * t.ln());
            if model > 0.0 {
                (v.ln() - model.ln()).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let drift = (hi - lo) / lo;
    let regime = if fit.exponent >= 1.9 {
        "quadratic".to_string()
    } else if drift < 0.1 && (fit.exponent - 1.0).abs() < 0.05 {
        "linear".to_string()
    } else if log_residual < fit.residual {
        "T log T".to_string()
    } else {
        format!("power {:.2}", fit.exponent)
    };
    Ok(Classification {
        regime,
        fit,
        log_slope: b,
        log_intercept: a,
        log_residual,
        linear_drift: drift,
    })
}

/// One-sample Kolmogorov-Smirnov test of standardized samples against the
/// standard normal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CLTReport {
    pub n_samples: usize,
    pub ks: f64,
    /// Calibrated for the estimated mean and variance (Lilliefors null,
    /// simulated once per sample size).
    pub p: f64,
    /// Asymptotic Kolmogorov series p-value, which ignores that the mean
    /// and variance were estimated and is therefore conservative.
    pub p_kolmogorov: f64,
    pub mean: f64,
    pub sd: f64,
    pub standardization: &'static str,
}

pub const MIN_CLT_SAMPLES: usize = 100;

fn ks_statistic_standardized(samples: &[f64]) -> Result<(f64, f64, f64)> {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let d = z
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = normal_cdf(*v);
            ((i + 1) as f64 / n - c).max(c - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok((d, mean, sd))
}

/// `P(K > λ)` for the Kolmogorov distribution, 20 terms of the alternating
/// series evaluated at Stephens' finite-sample argument.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=20 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn null_distribution(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("cache lock").get(&n) {
        return Arc::clone(v);
    }
    let mut stats: Vec<f64> = (0..KS_CALIBRATION_REPLICATES as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(KS_CALIBRATION_SEED);
            rng.set_stream(rep);
            let x = normal_samples(&mut rng, n);
            ks_statistic_standardized(&x)
                .expect("normal samples have variance")
                .0
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let stats = Arc::new(stats);
    cache
        .lock()
        .expect("cache lock")
        .insert(n, Arc::clone(&stats));
    stats
}

/// `n` standard normal draws (both Box-Muller components).
pub fn normal_samples(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let z = simulate::draw_complex_normal(rng) * std::f64::consts::SQRT_2;
        out.push(z.re);
        out.push(z.im);
    }
    out.truncate(n);
    out
}

/// Standardizes by the sample mean and standard deviation and tests for
/// normality.
pub fn clt_test(samples: &[f64]) -> Result<CLTReport> {
    let n = samples.len();
    if n < MIN_CLT_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_CLT_SAMPLES} samples, got {n}"
        )));
    }
    let (ks, mean, sd) = ks_statistic_standardized(samples)?;
    let null = null_distribution(n);
    let exceed = null.len() - null.partition_point(|d| *d < ks);
    let p = (1 + exceed) as f64 / (1 + null.len()) as f64;
    Ok(CLTReport {
        n_samples: n,
        ks,
        p,
        p_kolmogorov: kolmogorov_p(ks, n),
        mean,
        sd,
        standardization: "empirical mean/var",
    })
}

/// `min V(T)/T` over the curve.
pub fn linear_lower_bound(t: &[f64], v: &[f64]) -> f64 {
    t.iter()
        .zip(v)
        .map(|(t, v)| v / t)
        .fold(f64::INFINITY, f64::min)
}

pub fn linear_lower_bound_check(curve: &VarianceCurve) -> f64 {
    linear_lower_bound(&curve.t, &curve.v_k)
}

/// `V(T)/T²` along the series.
pub fn subquadratic_check(t: &[f64], v: &[f64]) -> Vec<f64> {
    t.iter().zip(v).map(|(t, v)| v / (t * t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_small_sample() {
        // For x = (0, 1, 2, 3) the leave-one-out variances are
        // (1, 7/3, 7/3, 1); jackknife se = sqrt(3/4 · 4 · (2/3)²) = 2/√3.
        let m = moments(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((m.mean - 1.5).abs() < 1e-15);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.se_var - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((m.se_mean - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law_fit() {
        let t: Vec<f64> = (0..10).map(|i| 2f64.powi(i)).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(1.5)).collect();
        let fit = growth_exponent(&t, &v, 1.0, 1000.0).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(growth_exponent(&t, &v, 100.0, 1000.0).is_err());
        let mut bad = v.clone();
        bad[3] = 0.0;
        assert!(matches!(
            growth_exponent(&t, &bad, 1.0, 1000.0),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn classifier_labels_synthetic_curves() {
        let t: Vec<f64> = (0..12).map(|i| 50.0 * 1.3f64.powi(i)).collect();
        let label = |f: &dyn Fn(f64) -> f64| {
            let v: Vec<f64> = t.iter().map(|t| f(*t)).collect();
            classify(&t, &v, 0.0, f64::INFINITY).unwrap().regime
        };
        assert_eq!(label(&|t| 2.3 * t - 0.8), "linear");
        assert_eq!(label(&|t| t * (0.5 + 0.15 * t.ln())), "T log T");
        assert_eq!(label(&|t| 0.4 * t.powf(1.5)), "power 1.50");
        assert_eq!(label(&|t| t * t + 3.0 * t), "quadratic");
    }

    #[test]
    fn compare_scores() {
        let r = MCReport {
            kernel: "x".into(),
            t: 1.0,
            n_paths: 10,
            seed: 0,
            mean: 0.0,
            var: 5.0,
            se_mean: 0.1,
            se_var: 0.5,
            theory_v: None,
            z: None,
            ks: None,
            p: None,
            failures: 0,
            n_freq: 0,
            dt0: 0.1,
        };
        assert_eq!(compare(5.0, &r).unwrap(), 0.0);
        assert!((compare(4.0, &r).unwrap() - 2.0).abs() < 1e-15);
        assert!(compare(1.0, &MCReport { se_var: 0.0, ..r }).is_err());
    }

    #[test]
    fn kolmogorov_series_values() {
        // P(K > 1.36) ≈ 0.0494, P(K > 1.63) ≈ 0.0098 (asymptotic, large n)
        let n = 1_000_000;
        let d = |l: f64| l / (n as f64).sqrt();
        assert!((kolmogorov_p(d(1.358_1), n) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_p(d(1.627_6), n) - 0.01).abs() < 2e-4);
        assert_eq!(kolmogorov_p(0.0, 100), 1.0);
    }

    #[test]
    fn zero_variance_rejected() {
        assert!(matches!(clt_test(&[1.0; 200]), Err(Error::ZeroVariance)));
        assert!(clt_test(&[1.0; 50]).is_err());
    }
}

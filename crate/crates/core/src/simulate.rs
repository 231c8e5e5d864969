//! Sample paths as random trigonometric sums and their winding.
//!
//! A measure is replaced by a finite grid of frequencies `λ_k` with weights
//! `a_k²` summing to one, and the process is
//! `f(t) = Σ a_k ζ_k e^{-iλ_k t}` with i.i.d. standard complex Gaussian `ζ_k`.
//! Atoms are kept exactly; a density is sampled at cell midpoints, which
//! makes the process periodic with period `2π/Δλ`. The grid is required to
//! keep that period at least ten times the longest time of interest.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::spectral::{DensityKind, SpectralMeasure};

/// Required ratio between the periodization period and `T_max`.
pub const PERIOD_GUARD: f64 = 10.0;
/// Density mass left outside the discretized frequency window.
pub const TAIL_MASS: f64 = 1e-7;
/// Bisection depth after which a winding step is declared unresolvable.
pub const MAX_DEPTH: u32 = 40;
/// Accepted argument increments are strictly below this.
pub const GUARD: f64 = std::f64::consts::FRAC_PI_2;

const PAIRWISE_BLOCK: usize = 1024;
const RESYNC_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// `2π/Δλ` for a discretized density, infinite for a purely atomic measure.
    pub periodization_period: f64,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `Σ a_k² e^{-iλ_k t}`, the covariance of the discretized process.
    pub fn covariance(&self, t: f64) -> Complex64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, a)| Complex64::from_polar(a * a, -l * t))
            .sum()
    }

    /// Largest `|λ_k|`.
    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// `sqrt(Σ a_k² λ_k²)`, the typical angular speed of a phasor.
    pub fn rms_frequency(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, a)| a * a * l * l)
            .sum::<f64>()
            .sqrt()
    }
}

/// Smallest density cell count that honours the periodization guard.
pub fn required_frequencies(measure: &SpectralMeasure, t_max: f64) -> usize {
    match measure.density() {
        None => 0,
        Some(d) => {
            let l = d.kind.effective_support(TAIL_MASS);
            (PERIOD_GUARD * t_max * l / PI).ceil().max(2.0) as usize
        }
    }
}

/// Turns a measure into a frequency grid: atoms exactly, the density on
/// `n_freq` midpoint cells over its effective support.
pub fn discretize(measure: &SpectralMeasure, t_max: f64, n_freq: usize) -> Result<FrequencyGrid> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "T_max must be positive, got {t_max}"
        )));
    }
    let mut frequencies = Vec::new();
    let mut weights = Vec::new();
    for a in measure.atoms() {
        frequencies.push(a.freq);
        weights.push(a.mass);
    }
    let mut period = f64::INFINITY;
    if let Some(d) = measure.density() {
        if n_freq < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_freq must be at least 2, got {n_freq}"
            )));
        }
        let required = required_frequencies(measure, t_max);
        if n_freq < required {
            return Err(Error::InsufficientFrequencies {
                t_max,
                required,
                given: n_freq,
            });
        }
        let l = d.kind.effective_support(TAIL_MASS);
        let step = 2.0 * l / n_freq as f64;
        period = 2.0 * PI / step;
        let cells = cell_masses(d.kind, -l, step, n_freq)?;
        let total: f64 = cells.iter().sum();
        for (k, m) in cells.into_iter().enumerate() {
            frequencies.push(-l + (k as f64 + 0.5) * step);
            weights.push(d.weight * m / total);
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidMeasure("measure has no mass".into()));
    }
    let amplitudes = weights.iter().map(|w| (w / total).sqrt()).collect();
    Ok(FrequencyGrid {
        frequencies,
        amplitudes,
        periodization_period: period,
    })
}

/// `p(λ_k) Δλ` per cell; cells containing a singular point of the density
/// get their exact mass instead.
fn cell_masses(kind: DensityKind, lo: f64, step: f64, n: usize) -> Result<Vec<f64>> {
    let singular = kind.singular_points();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = lo + k as f64 * step;
        let b = a + step;
        let inside: Vec<f64> = singular
            .iter()
            .copied()
            .filter(|s| *s >= a - 1e-12 * step && *s <= b + 1e-12 * step)
            .collect();
        if inside.is_empty() {
            out.push(kind.pdf(0.5 * (a + b)) * step);
            continue;
        }
        let mut mass = 0.0;
        for s in inside {
            let tol = Tolerance::new(1e-15, 1e-10);
            let left = quad::tanh_sinh(&|u: f64| kind.pdf_offset(s, u), (a - s).min(0.0), 0.0, tol);
            let right =
                quad::tanh_sinh(&|u: f64| kind.pdf_offset(s, u), 0.0, (b - s).max(0.0), tol);
            if !(left.converged && right.converged) {
                return Err(Error::Quadrature(format!(
                    "cell mass near density singularity {s}"
                )));
            }
            mass += left.value + right.value;
        }
        out.push(mass);
    }
    Ok(out)
}

/// One realisation `f(t) = Σ a_k ζ_k e^{-iλ_k t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSumProcess {
    pub frequencies: Vec<f64>,
    /// `a_k ζ_k`.
    pub coefficients: Vec<Complex64>,
    pub seed: u64,
    pub stream: u64,
}

/// Standard complex Gaussian from two uniforms (Box-Muller); real and
/// imaginary parts have variance ½.
pub fn draw_complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
}

/// The `k`-th coefficient of stream `stream` under `seed`, independent of
/// how many other coefficients or streams are drawn.
pub fn standard_complex_normal(seed: u64, stream: u64, k: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(4 * k as u128);
    draw_complex_normal(&mut rng)
}

/// Draws the coefficients of path `stream`. Coefficient `k` always comes
/// from words `4k..4k+4` of the ChaCha stream `(seed, stream)`.
pub fn sample_process_stream(grid: &FrequencyGrid, seed: u64, stream: u64) -> TrigSumProcess {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let coefficients = grid
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, a)| {
            rng.set_word_pos(4 * k as u128);
            *a * draw_complex_normal(&mut rng)
        })
        .collect();
    TrigSumProcess {
        frequencies: grid.frequencies.clone(),
        coefficients,
        seed,
        stream,
    }
}

pub fn sample_process(grid: &FrequencyGrid, seed: u64) -> TrigSumProcess {
    sample_process_stream(grid, seed, 0)
}

fn pairwise(v: &[Complex64]) -> Complex64 {
    if v.len() <= PAIRWISE_BLOCK {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise(a) + pairwise(b)
    }
}

impl TrigSumProcess {
    /// Negates every frequency and conjugates every coefficient: the
    /// complex conjugate path.
    pub fn conjugate(&self) -> Self {
        Self {
            frequencies: self.frequencies.iter().map(|l| -l).collect(),
            coefficients: self.coefficients.iter().map(|c| c.conj()).collect(),
            seed: self.seed,
            stream: self.stream,
        }
    }

    fn sum(&self, terms: impl Iterator<Item = Complex64>) -> Complex64 {
        if self.coefficients.len() > PAIRWISE_BLOCK {
            let v: Vec<Complex64> = terms.collect();
            pairwise(&v)
        } else {
            terms.sum()
        }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.sum(
            self.frequencies
                .iter()
                .zip(&self.coefficients)
                .map(|(l, c)| c * Complex64::from_polar(1.0, -l * t)),
        )
    }
}

/// `(f(t), f'(t))` by direct summation.
pub fn evaluate(proc: &TrigSumProcess, t: f64) -> (Complex64, Complex64) {
    let phased: Vec<(f64, Complex64)> = proc
        .frequencies
        .iter()
        .zip(&proc.coefficients)
        .map(|(l, c)| (*l, c * Complex64::from_polar(1.0, -l * t)))
        .collect();
    let f = proc.sum(phased.iter().map(|(_, v)| *v));
    let df = proc.sum(phased.iter().map(|(l, v)| v * Complex64::new(0.0, -l)));
    (f, df)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingSample {
    #[serde(rename = "T")]
    pub t: f64,
    pub delta: f64,
    pub n_segments: usize,
    pub max_increment: f64,
    pub refinements: usize,
}

/// Walks `f` along a uniform grid with phasor recurrences, resynchronised
/// with exact phases every few steps.
struct Stepper<'a> {
    proc: &'a TrigSumProcess,
    t0: f64,
    dt: f64,
    step: usize,
    phasors: Vec<Complex64>,
    rotation: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(proc: &'a TrigSumProcess, t0: f64, dt: f64) -> Self {
        let rotation = proc
            .frequencies
            .iter()
            .map(|l| Complex64::from_polar(1.0, -l * dt))
            .collect();
        let mut s = Self {
            proc,
            t0,
            dt,
            step: 0,
            phasors: Vec::new(),
            rotation,
        };
        s.resync();
        s
    }

    fn time(&self) -> f64 {
        self.t0 + self.step as f64 * self.dt
    }

    fn resync(&mut self) {
        let t = self.time();
        self.phasors = self
            .proc
            .frequencies
            .iter()
            .zip(&self.proc.coefficients)
            .map(|(l, c)| c * Complex64::from_polar(1.0, -l * t))
            .collect();
    }

    fn value(&self) -> Complex64 {
        pairwise(&self.phasors)
    }

    fn advance(&mut self) {
        self.step += 1;
        if self.step.is_multiple_of(RESYNC_STEPS) {
            self.resync();
        } else {
            for (p, r) in self.phasors.iter_mut().zip(&self.rotation) {
                *p *= r;
            }
        }
    }
}

struct Tally {
    delta: f64,
    segments: usize,
    max_increment: f64,
    refinements: usize,
}

/// Adds the argument increment of `f` over `[a, b]`, bisecting while the
/// principal increment is at least `GUARD`.
fn accumulate(
    proc: &TrigSumProcess,
    a: f64,
    fa: Complex64,
    b: f64,
    fb: Complex64,
    depth: u32,
    tally: &mut Tally,
) -> Result<()> {
    let inc = (fb * fa.conj()).arg();
    if inc.abs() < GUARD && fa != Complex64::default() {
        tally.delta += inc;
        tally.segments += 1;
        tally.max_increment = tally.max_increment.max(inc.abs());
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::WindingRefinement { t: 0.5 * (a + b) });
    }
    tally.refinements += 1;
    let m = 0.5 * (a + b);
    let fm = proc.value(m);
    accumulate(proc, a, fa, m, fm, depth + 1, tally)?;
    accumulate(proc, m, fm, b, fb, depth + 1, tally)
}

/// Total argument increment of `f` over `[t0, t1]`.
pub fn winding_between(proc: &TrigSumProcess, t0: f64, t1: f64, dt0: f64) -> Result<WindingSample> {
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "empty interval [{t0}, {t1}]"
        )));
    }
    if !(dt0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt0 must be positive, got {dt0}"
        )));
    }
    let n = ((t1 - t0) / dt0).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / n as f64;
    let mut stepper = Stepper::new(proc, t0, dt);
    let mut tally = Tally {
        delta: 0.0,
        segments: 0,
        max_increment: 0.0,
        refinements: 0,
    };
    let mut a = t0;
    let mut fa = stepper.value();
    for i in 1..=n {
        stepper.advance();
        let (b, fb) = if i == n {
            (t1, proc.value(t1))
        } else {
            (stepper.time(), stepper.value())
        };
        accumulate(proc, a, fa, b, fb, 0, &mut tally)?;
        a = b;
        fa = fb;
    }
    Ok(WindingSample {
        t: t1 - t0,
        delta: tally.delta,
        n_segments: tally.segments,
        max_increment: tally.max_increment,
        refinements: tally.refinements,
    })
}

/// `Δ(T)`, the total argument increment over `[0, T]`.
pub fn winding(proc: &TrigSumProcess, t: f64, dt0: f64) -> Result<WindingSample> {
    winding_between(proc, 0.0, t, dt0)
}

/// Default initial step: a tenth of a radian of typical phasor rotation.
pub fn default_dt0(grid: &FrequencyGrid) -> f64 {
    let w = grid.rms_frequency().max(grid.max_frequency() * 0.25);
    if w > 0.0 {
        (0.1 / w).min(0.1)
    } else {
        0.1
    }
}

/// Per-path record as written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_index: u64,
    pub sample: WindingSample,
}

pub fn paths_to_csv(records: &[PathRecord]) -> String {
    let mut s = String::from("path_index,T,delta,n_segments,refinements\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.path_index, r.sample.t, r.sample.delta, r.sample.n_segments, r.sample.refinements
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub t: f64,
    pub value: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub se_re: f64,
    pub se_im: f64,
}

/// Monte Carlo average of `f(t) conj(f(0))` over `n_paths` paths.
pub fn empirical_covariance(
    grid: &FrequencyGrid,
    n_paths: usize,
    t_list: &[f64],
    seed: u64,
) -> Vec<CovarianceEstimate> {
    use rayon::prelude::*;
    let products: Vec<Vec<Complex64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let proc = sample_process_stream(grid, seed, p);
            let f0 = proc.value(0.0);
            t_list.iter().map(|&t| proc.value(t) * f0.conj()).collect()
        })
        .collect();
    let n = n_paths as f64;
    t_list
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mean: Complex64 = products.iter().map(|v| v[j]).sum::<Complex64>() / n;
            let (vr, vi) = products.iter().fold((0.0, 0.0), |(a, b), v| {
                let d = v[j] - mean;
                (a + d.re * d.re, b + d.im * d.im)
            });
            CovarianceEstimate {
                t,
                value: mean,
                se_re: (vr / (n - 1.0) / n).sqrt(),
                se_im: (vi / (n - 1.0) / n).sqrt(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::builtin;

    #[test]
    fn atoms_pass_through() {
        let (m, _) = builtin("atomic", &[1.0, 0.25, 3.0, 0.75]).unwrap();
        let g = discretize(&m, 100.0, 0).unwrap();
        assert_eq!(g.frequencies, vec![1.0, 3.0]);
        assert!((g.amplitudes[0] - 0.5).abs() < 1e-15);
        assert!(g.periodization_period.is_infinite());
    }

    #[test]
    fn guard_reports_minimum() {
        let (m, _) = builtin("sinc", &[]).unwrap();
        let need = required_frequencies(&m, 100.0);
        assert_eq!(need, 1000);
        match discretize(&m, 100.0, need - 1) {
            Err(Error::InsufficientFrequencies {
                required, given, ..
            }) => {
                assert_eq!((required, given), (need, need - 1))
            }
            other => panic!("{other:?}"),
        }
        let g = discretize(&m, 100.0, 4096).unwrap();
        let total: f64 = g.amplitudes.iter().map(|a| a * a).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(g.periodization_period >= PERIOD_GUARD * 100.0);
    }

    #[test]
    fn arcsine_cells_carry_exact_mass() {
        let (m, _) = builtin("bessel_j0", &[]).unwrap();
        let g = discretize(&m, 10.0, 64).unwrap();
        // the end cell [1 - 1/32, 1] has mass (1/π)(π/2 - asin(1 - 1/32)),
        // 40% more than the midpoint rule gives; renormalization moves it
        // by well under a percent
        let edge = 0.5 - (1.0f64 - 1.0 / 32.0).asin() / PI;
        assert!((g.amplitudes[63].powi(2) / edge - 1.0).abs() < 1e-2);
        assert_eq!(g.amplitudes[0], g.amplitudes[63]);
    }

    #[test]
    fn stream_words_are_per_coefficient() {
        let g = FrequencyGrid {
            frequencies: vec![0.0; 5],
            amplitudes: vec![1.0; 5],
            periodization_period: f64::INFINITY,
        };
        let p = sample_process_stream(&g, 9, 3);
        for k in 0..5 {
            assert_eq!(p.coefficients[k], standard_complex_normal(9, 3, k as u64));
        }
        assert_ne!(sample_process_stream(&g, 9, 4).coefficients, p.coefficients);
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<Complex64> = (0..5000)
            .map(|k| Complex64::new(k as f64, -(k as f64) * 0.5))
            .collect();
        let naive: Complex64 = v.iter().sum();
        assert_eq!(pairwise(&v), naive);
    }
}

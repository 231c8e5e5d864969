//! Exact mean and variance of the winding.
//!
//! With `g = |r|²`, `R = r'/r` and `C = r'(0)² - r''(0)`, the variance is
//! `V(T) = T ∫_{-T}^{T} (1 - |x|/T) K(x) dx` where
//!
//! ```text
//! K  = g/(1-g) Im²{R(x) - R(0)} - ½ log(1/(1-g)) Re R'(x)
//! K̃  = g/(1-g) Im²{R(x) - R(0)} + ¼ (log 1/(1-g))' (log g)'
//! ```
//!
//! on `0 < g < 1` and `½|r'|²` where `g` is 0 or 1. Integrating the log term
//! by parts gives the second route
//! `V(T) = T ∫ (1 - |x|/T) K̃ + ½ ∫_{g(T)}^1 log(1/(1-y)) dy/y`.
//!
//! Both kernels are even. `K` has a logarithmic singularity at every point
//! of `D = {|r| = 1}`; `K̃` stays bounded and its continuous version `K̃*`
//! takes the value `C` on `D` and `|r'|²` where `r = 0`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, Multi, Tolerance};
use crate::special::log_over_s_tail;
use crate::spectral::{covariance_derivative, nondegeneracy_margin, CovPoint, CovarianceEval};

/// Band on `|r|²` (and on `1 - |r|²` when it is computed by subtraction)
/// inside which the pointwise branch values are used.
pub const EPS_SWITCH: f64 = 1e-12;
/// Band on `1 - |r|²` inside which `K̃*` returns its limit value. Only used
/// when `1 - |r|²` comes from a subtraction; an exact `1 - |r|²` keeps the
/// open formula all the way down, which matters for covariances that are
/// not smooth at the origin.
pub const EPS_CONTINUITY: f64 = 1e-10;

/// Which variance kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kernel {
    K,
    Ktilde,
    KtildeStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Zero,
    One,
    Open,
}

/// Kernel evaluator bound to one covariance; caches `Im r'(0)` and `C`.
#[derive(Debug, Clone)]
pub struct KernelEvaluator<'a> {
    eval: &'a CovarianceEval,
    im_dr0: f64,
    margin: f64,
    precise: bool,
}

impl<'a> KernelEvaluator<'a> {
    /// Fails for degenerate measures and for covariances that are not twice
    /// differentiable.
    pub fn new(eval: &'a CovarianceEval) -> Result<Self> {
        let measure = eval.measure();
        if measure.is_degenerate() {
            return Err(Error::Degenerate(measure.name().to_string()));
        }
        let im_dr0 = covariance_derivative(eval, 0.0, 1)?.im;
        let margin = nondegeneracy_margin(eval)?;
        if !(margin > 0.0) {
            return Err(Error::Degenerate(format!(
                "{}: r'(0)² - r''(0) = {margin}",
                measure.name()
            )));
        }
        Ok(Self {
            eval,
            im_dr0,
            margin,
            precise: eval.precise_near_one(),
        })
    }

    pub fn eval(&self) -> &CovarianceEval {
        self.eval
    }

    /// `C = r'(0)² - r''(0)`.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// `Im r'(0)`.
    pub fn im_dr0(&self) -> f64 {
        self.im_dr0
    }

    fn branch(&self, p: &CovPoint) -> Branch {
        let g = p.r.norm_sqr();
        if g <= EPS_SWITCH {
            Branch::Zero
        } else if p.one_minus_abs2 <= 0.0 || (!self.precise && p.one_minus_abs2 <= EPS_SWITCH) {
            Branch::One
        } else {
            Branch::Open
        }
    }

    /// `g/(1-g) Im²{R - R(0)}`, written as `(Im(r' r̄) - g Im r'(0))² / (g (1-g))`.
    fn first_term(&self, p: &CovPoint, g: f64) -> f64 {
        let d = match p.cross {
            Some((_, d)) => d,
            None => (p.dr * p.r.conj()).im - g * self.im_dr0,
        };
        d * d / (g * p.one_minus_abs2)
    }

    /// `log(1/(1-g))` without cancellation at either end.
    fn log_term(p: &CovPoint, g: f64) -> f64 {
        if p.one_minus_abs2 < 0.5 {
            -p.one_minus_abs2.ln()
        } else {
            -(-g).ln_1p()
        }
    }

    pub fn k_at(&self, p: &CovPoint) -> f64 {
        match self.branch(p) {
            Branch::Zero | Branch::One => 0.5 * p.dr.norm_sqr(),
            Branch::Open => {
                let g = p.r.norm_sqr();
                let rbar = p.r.conj();
                let z = p.dr * rbar;
                // g R' = r'' r̄ - (r' r̄)² / g
                let g_dlogr = p.ddr * rbar - z * z / g;
                self.first_term(p, g) - 0.5 * (Self::log_term(p, g) / g) * g_dlogr.re
            }
        }
    }

    pub fn ktilde_at(&self, p: &CovPoint) -> f64 {
        match self.branch(p) {
            Branch::Zero | Branch::One => 0.5 * p.dr.norm_sqr(),
            Branch::Open => self.ktilde_open(p),
        }
    }

    pub fn ktilde_star_at(&self, p: &CovPoint) -> f64 {
        match self.branch(p) {
            Branch::Zero => p.dr.norm_sqr(),
            Branch::One => self.margin,
            Branch::Open if !self.precise && p.one_minus_abs2 <= EPS_CONTINUITY => self.margin,
            Branch::Open => self.ktilde_open(p),
        }
    }

    fn ktilde_open(&self, p: &CovPoint) -> f64 {
        let g = p.r.norm_sqr();
        // ¼ (g'/(1-g)) (g'/g) with g' = 2 Re(r' r̄)
        let re = match p.cross {
            Some((re, _)) => re,
            None => (p.dr * p.r.conj()).re,
        };
        self.first_term(p, g) + re * re / (g * p.one_minus_abs2)
    }

    pub fn k(&self, x: f64) -> f64 {
        self.k_at(&self.eval.point(x))
    }

    pub fn ktilde(&self, x: f64) -> f64 {
        self.ktilde_at(&self.eval.point(x))
    }

    pub fn ktilde_star(&self, x: f64) -> f64 {
        self.ktilde_star_at(&self.eval.point(x))
    }

    pub fn value(&self, kernel: Kernel, x: f64) -> f64 {
        match kernel {
            Kernel::K => self.k(x),
            Kernel::Ktilde => self.ktilde(x),
            Kernel::KtildeStar => self.ktilde_star(x),
        }
    }

    /// `(K, K̃*)` at `x` from a single covariance evaluation.
    fn pair(&self, x: f64) -> [f64; 2] {
        let p = self.eval.point(x);
        [self.k_at(&p), self.ktilde_star_at(&p)]
    }

    fn pair_offset(&self, s: f64, u: f64) -> [f64; 2] {
        let p = self.eval.point_offset(s, u);
        [self.k_at(&p), self.ktilde_star_at(&p)]
    }
}

/// `K(x)`; NaN when the kernel is undefined (degenerate or rough covariance).
pub fn kernel_k(eval: &CovarianceEval, x: f64) -> f64 {
    KernelEvaluator::new(eval).map_or(f64::NAN, |k| k.k(x))
}

/// `K̃(x)`; NaN when the kernel is undefined.
pub fn kernel_ktilde(eval: &CovarianceEval, x: f64) -> f64 {
    KernelEvaluator::new(eval).map_or(f64::NAN, |k| k.ktilde(x))
}

/// `K̃*(x)`, the continuous version of `K̃`; NaN when undefined.
pub fn kernel_ktilde_star(eval: &CovarianceEval, x: f64) -> f64 {
    KernelEvaluator::new(eval).map_or(f64::NAN, |k| k.ktilde_star(x))
}

/// `E[Δ(T)] = T Im r'(0)`.
pub fn mean_winding(eval: &CovarianceEval, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T must be positive, got {t}"
        )));
    }
    Ok(t * covariance_derivative(eval, 0.0, 1)?.im)
}

/// `(1/(2T)) ∫_{rT2}^1 log(1/(1-y)) dy/y`.
pub fn boundary_term(r_t2: f64, t: f64) -> f64 {
    log_over_s_tail(1.0 - r_t2.clamp(0.0, 1.0)) / (2.0 * t)
}

/// Points of `[0, x_max]` where `|r|² > 1 - EPS_CONTINUITY`. Always contains 0.
///
/// A measure with a density part cannot be carried by a lattice, so only
/// purely atomic measures are scanned. The scan locates local minima of
/// `1 - |r|²` on a grid fine relative to the largest frequency gap, then
/// bisects on the sign of `(|r|²)'` to pin each one down.
pub fn singular_set(eval: &CovarianceEval, x_max: f64) -> Result<Vec<f64>> {
    if !(x_max >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "x_max must be non-negative, got {x_max}"
        )));
    }
    let measure = eval.measure();
    if measure.density().is_some() {
        return Ok(vec![0.0]);
    }
    let atoms = measure.atoms();
    let (lo, hi) = atoms
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| {
            (l.min(a.freq), h.max(a.freq))
        });
    let width = hi - lo;
    if !(width > 0.0) {
        return Err(Error::NonDiscreteSingularSet(0.0));
    }
    let g1 = |x: f64| eval.point(x).one_minus_abs2;
    // d/dx (1 - |r|²) = -2 Re(r' r̄)
    let dg1 = |x: f64| {
        let p = eval.point(x);
        -2.0 * p.cross.map_or((p.dr * p.r.conj()).re, |c| c.0)
    };
    let h = (PI / (16.0 * width)).min(x_max.max(1e-300));
    let n = (x_max / h).ceil() as usize;
    const MAX_SCAN: usize = 50_000_000;
    if n > MAX_SCAN {
        return Err(Error::InvalidParameter(format!(
            "x_max = {x_max} needs {n} scan points; too many"
        )));
    }
    let mut out = vec![0.0];
    let mut prev2 = g1(0.0);
    let mut prev = g1(h);
    if prev <= EPS_CONTINUITY && prev2 <= EPS_CONTINUITY {
        return Err(Error::NonDiscreteSingularSet(0.0));
    }
    for i in 2..=n + 1 {
        let x = i as f64 * h;
        let cur = g1(x);
        if cur <= EPS_CONTINUITY && prev <= EPS_CONTINUITY {
            return Err(Error::NonDiscreteSingularSet(x));
        }
        let xm = (i - 1) as f64 * h;
        if prev <= prev2 && prev <= cur && prev < 0.05 {
            // minimum of 1 - |r|² bracketed by [xm - h, xm + h]
            let mut a = xm - h;
            let mut b = xm + h;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if dg1(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let s = 0.5 * (a + b);
            if s > 0.5 * h && s <= x_max && g1(s) <= EPS_CONTINUITY {
                out.push(s);
            }
        }
        prev2 = prev;
        prev = cur;
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 0.5 * h);
    Ok(out)
}

/// One elementary integration interval and its integrals of
/// `(K, ξK, K̃*, ξK̃*)` with `ξ = (x - a)/(b - a)`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    values: [f64; 4],
}

impl Piece {
    /// `(∫K, ∫|x|K, ∫K̃*, ∫|x|K̃*)` over the piece (which never straddles 0).
    fn moments(&self) -> [f64; 4] {
        let w = self.b - self.a;
        let sign = if self.b <= 0.0 { -1.0 } else { 1.0 };
        let [k, xk, kt, xkt] = self.values;
        [
            k,
            sign * (self.a * k + w * xk),
            kt,
            sign * (self.a * kt + w * xkt),
        ]
    }
}

const TS_TOL_REL: f64 = 1e-12;
const GK_TOL_REL: f64 = 1e-11;
const MAX_PANELS: usize = 400_000;

/// Integrates the kernels over `[lo, hi]` cut at every point of `cuts`.
/// Points of `singular` (which must cover `[lo, hi]` and a margin) get a
/// neighbourhood of half-width `min(1, gap/2)` integrated by tanh-sinh in
/// the offset from the singular point.
fn kernel_pieces(
    ke: &KernelEvaluator<'_>,
    lo: f64,
    hi: f64,
    singular: &[f64],
    cuts: &[f64],
) -> Result<Vec<Piece>> {
    // (s, left edge, right edge); neighbours share their midpoint exactly.
    let mut hoods = Vec::with_capacity(singular.len());
    for (i, &s) in singular.iter().enumerate() {
        let left = if i > 0 {
            (0.5 * (singular[i - 1] + s)).max(s - 1.0)
        } else {
            s - 1.0
        };
        let right = singular
            .get(i + 1)
            .map_or(s + 1.0, |&n| (0.5 * (s + n)).min(s + 1.0));
        hoods.push((s, left, right));
    }
    let mut points = vec![lo, hi];
    for &(s, left, right) in &hoods {
        for p in [left, s, right] {
            if p > lo && p < hi {
                points.push(p);
            }
        }
    }
    points.extend(cuts.iter().copied().filter(|c| *c > lo && *c < hi));
    if lo < 0.0 && hi > 0.0 {
        points.push(0.0);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let scale = ke.margin().max(1e-300);
    let spread = ke.eval().measure().frequency_spread();
    let panel_width = (2.0 * PI / spread).clamp(0.05, 1.0);
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let f = |x: f64| {
            let xi = ((x - a) / len).clamp(0.0, 1.0);
            let [k, kt] = ke.pair(x);
            Multi([k, xi * k, kt, xi * kt])
        };
        if len <= 1e-12 * a.abs().max(1.0) {
            // sliver left between nearly coincident cut points
            let v = f(0.5 * (a + b));
            out.push(Piece {
                a,
                b,
                values: (v * len).0,
            });
            continue;
        }
        let hood = hoods
            .iter()
            .find(|(_, left, right)| a >= *left && b <= *right);
        let est = match hood {
            Some(&(s, _, _)) => {
                let g = |u: f64| {
                    let x = s + u;
                    let xi = ((x - a) / len).clamp(0.0, 1.0);
                    let [k, kt] = ke.pair_offset(s, u);
                    Multi([k, xi * k, kt, xi * kt])
                };
                let tol = Tolerance::new(1e-15 * scale * len, TS_TOL_REL);
                let est = quad::tanh_sinh(&g, a - s, b - s, tol);
                if !est.converged {
                    return Err(Error::Quadrature(format!(
                        "kernel near singular point {s} on [{a}, {b}]"
                    )));
                }
                est
            }
            None => {
                let n = (len / panel_width).ceil().max(1.0) as usize;
                let step = len / n as f64;
                let panels: Vec<(f64, f64)> = (0..n)
                    .map(|i| {
                        (
                            a + i as f64 * step,
                            if i + 1 == n {
                                b
                            } else {
                                a + (i + 1) as f64 * step
                            },
                        )
                    })
                    .collect();
                let tol = Tolerance::new(1e-14 * scale * len, GK_TOL_REL);
                let est = quad::integrate_panels(&f, &panels, tol, MAX_PANELS.max(4 * n));
                if !est.converged {
                    return Err(Error::Quadrature(format!(
                        "kernel on [{a}, {b}] (error {:.2e})",
                        est.error
                    )));
                }
                est
            }
        };
        out.push(Piece {
            a,
            b,
            values: est.value.0,
        });
    }
    Ok(out)
}

/// `V(T)` and the pieces it is assembled from, for every `T` of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCurve {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub v_k: Vec<f64>,
    pub v_ktilde: Vec<f64>,
    /// `(1/(2T)) ∫_{|r(T)|²}^1 log(1/(1-y)) dy/y`.
    pub boundary: Vec<f64>,
}

impl VarianceCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,mean,V_K,V_Ktilde,boundary\n");
        for i in 0..self.t.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                self.t[i], self.mean[i], self.v_k[i], self.v_ktilde[i], self.boundary[i]
            );
        }
        s
    }

    /// Largest `|V_K - V_K̃| / V_K` over the grid.
    pub fn max_relative_gap(&self) -> f64 {
        self.v_k
            .iter()
            .zip(&self.v_ktilde)
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max)
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty T grid".into()));
    }
    let increasing = t_grid.windows(2).all(|w| w[1] > w[0]);
    if !increasing || !(t_grid[0] > 0.0) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidParameter(
            "T grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `V(T)` by both routes on a strictly increasing grid of positive `T`.
///
/// The integrals over `[0, T]` of `K`, `xK` (and the same for `K̃*`) are
/// accumulated piece by piece, so the whole curve costs one pass over
/// `[0, max T]`. Evenness of the kernels turns `[-T, T]` into twice `[0, T]`.
pub fn variance_curve(eval: &CovarianceEval, t_grid: &[f64]) -> Result<VarianceCurve> {
    check_grid(t_grid)?;
    let ke = KernelEvaluator::new(eval)?;
    let t_max = *t_grid.last().expect("non-empty");
    let singular = singular_set(eval, t_max + 2.0)?;
    let pieces = kernel_pieces(&ke, 0.0, t_max, &singular, t_grid)?;
    let mut curve = VarianceCurve {
        t: t_grid.to_vec(),
        mean: Vec::with_capacity(t_grid.len()),
        v_k: Vec::with_capacity(t_grid.len()),
        v_ktilde: Vec::with_capacity(t_grid.len()),
        boundary: Vec::with_capacity(t_grid.len()),
    };
    let mut acc = [0.0; 4];
    let mut next = pieces.iter().peekable();
    for &t in t_grid {
        while let Some(p) = next.next_if(|p| p.b <= t * (1.0 + 1e-15)) {
            for (a, m) in acc.iter_mut().zip(p.moments()) {
                *a += m;
            }
        }
        let [k, xk, kt, xkt] = acc;
        let p = eval.point(t);
        let boundary = log_over_s_tail(p.one_minus_abs2.clamp(0.0, 1.0)) / (2.0 * t);
        curve.mean.push(t * ke.im_dr0());
        curve.v_k.push(2.0 * t * (k - xk / t));
        curve.v_ktilde.push(2.0 * t * (kt - xkt / t) + t * boundary);
        curve.boundary.push(boundary);
    }
    Ok(curve)
}

/// `V(T) = T ∫_{-T}^{T} (1 - |x|/T) K(x) dx`.
pub fn variance_via_k(eval: &CovarianceEval, t: f64) -> Result<f64> {
    Ok(variance_curve(eval, &[t])?.v_k[0])
}

/// `V(T) = T [∫_{-T}^{T} (1 - |x|/T) K̃(x) dx + boundary_term(|r(T)|², T)]`.
///
/// `K̃` is integrated through its continuous version `K̃*`, which differs
/// from it on a countable set only.
pub fn variance_via_ktilde(eval: &CovarianceEval, t: f64) -> Result<f64> {
    Ok(variance_curve(eval, &[t])?.v_ktilde[0])
}

/// `(V_K, V_K̃)` integrating over the whole of `[-T, T]` without using the
/// evenness of the kernels.
pub fn variance_full_interval(eval: &CovarianceEval, t: f64) -> Result<(f64, f64)> {
    check_grid(&[t])?;
    let ke = KernelEvaluator::new(eval)?;
    let half = singular_set(eval, t + 2.0)?;
    let mut singular: Vec<f64> = half.iter().rev().map(|s| -s).collect();
    singular.extend(half.iter().copied().filter(|s| *s > 0.0));
    let pieces = kernel_pieces(&ke, -t, t, &singular, &[])?;
    let mut acc = [0.0; 4];
    for p in &pieces {
        for (a, m) in acc.iter_mut().zip(p.moments()) {
            *a += m;
        }
    }
    let [k, xk, kt, xkt] = acc;
    let boundary = boundary_term(1.0 - eval.point(t).one_minus_abs2, t);
    Ok((t * (k - xk / t), t * (kt - xkt / t) + t * boundary))
}

/// `lim V(T)/T = ∫_ℝ K̃`, or a divergence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Slope {
    Finite { value: f64, error: f64 },
    Divergent { cutoff: f64, last_segment: f64 },
}

impl Slope {
    pub fn value(&self) -> Option<f64> {
        match self {
            Slope::Finite { value, .. } => Some(*value),
            Slope::Divergent { .. } => None,
        }
    }
}

/// `∫_ℝ K̃` over dyadic segments `[2^k, 2^{k+1}]`.
///
/// Converges when two consecutive segments fall below `1e-10`, or when the
/// epsilon-extrapolated partial sums (algebraically decaying kernels such as
/// sinc) agree to `1e-10` relative three times running. Divergent when the
/// segment integrals stop shrinking (ratio above 0.8 three times running).
pub fn asymptotic_slope(eval: &CovarianceEval) -> Result<Slope> {
    const MAX_DOUBLINGS: i32 = 22;
    let ke = KernelEvaluator::new(eval)?;
    let mut singular = singular_set(eval, 3.0)?;
    let head = kernel_pieces(&ke, 0.0, 1.0, &singular, &[])?;
    let mut total: f64 = head.iter().map(|p| p.values[2]).sum();
    let mut partial = vec![total];
    let mut small = 0;
    let mut growing = 0;
    let mut stable = 0;
    let mut prev_segment = f64::INFINITY;
    let mut prev_extrapolated = f64::NAN;
    for k in 0..MAX_DOUBLINGS {
        let a = 2f64.powi(k);
        let b = 2.0 * a;
        if eval.measure().density().is_none() {
            singular = singular_set(eval, b + 2.0)?;
        }
        let local: Vec<f64> = singular.iter().copied().filter(|s| *s >= a - 2.0).collect();
        let segment: f64 = kernel_pieces(&ke, a, b, &local, &[])?
            .iter()
            .map(|p| p.values[2])
            .sum();
        total += segment;
        partial.push(total);
        if segment.abs() < 1e-10 {
            small += 1;
            if small >= 2 {
                return Ok(Slope::Finite {
                    value: 2.0 * total,
                    error: 2.0 * segment.abs(),
                });
            }
        } else {
            small = 0;
        }
        if k >= 2 && segment >= 0.8 * prev_segment {
            growing += 1;
            if growing >= 3 {
                return Ok(Slope::Divergent {
                    cutoff: b,
                    last_segment: segment,
                });
            }
        } else {
            growing = 0;
        }
        prev_segment = segment;
        if partial.len() >= 6 {
            let (value, err) = quad::wynn_epsilon(&partial[2..]);
            if (value - prev_extrapolated).abs() <= 1e-10 * value.abs() {
                stable += 1;
                if stable >= 3 {
                    let error = err.max((value - prev_extrapolated).abs());
                    return Ok(Slope::Finite {
                        value: 2.0 * value,
                        error: 2.0 * error,
                    });
                }
            } else {
                stable = 0;
            }
            prev_extrapolated = value;
        }
    }
    Err(Error::Quadrature(format!(
        "asymptotic slope undecided after 2^{MAX_DOUBLINGS}"
    )))
}

/// Pointwise kernel table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelProfile {
    pub grid: Vec<f64>,
    pub k_values: Vec<f64>,
    pub ktilde_values: Vec<f64>,
    pub ktilde_star_values: Vec<f64>,
    pub singular_points: Vec<f64>,
}

impl KernelProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,K,Ktilde,KtildeStar\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.grid[i], self.k_values[i], self.ktilde_values[i], self.ktilde_star_values[i]
            );
        }
        s
    }
}

pub fn kernel_profile(eval: &CovarianceEval, grid: &[f64]) -> Result<KernelProfile> {
    let ke = KernelEvaluator::new(eval)?;
    let x_max = grid.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let singular_points = singular_set(eval, x_max)?;
    let mut profile = KernelProfile {
        grid: grid.to_vec(),
        k_values: Vec::with_capacity(grid.len()),
        ktilde_values: Vec::with_capacity(grid.len()),
        ktilde_star_values: Vec::with_capacity(grid.len()),
        singular_points,
    };
    for &x in grid {
        let p = eval.point(x);
        profile.k_values.push(ke.k_at(&p));
        profile.ktilde_values.push(ke.ktilde_at(&p));
        profile.ktilde_star_values.push(ke.ktilde_star_at(&p));
    }
    Ok(profile)
}

/// Second moments of a jointly Gaussian quadruple `(F1, F2, F1', F2')`:
/// `r_jk = E[F_j conj F_k]`, `s_jk = E[F_j' conj F_k]`, `t12 = E[F1' conj F2']`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMoments {
    pub r11: f64,
    pub r22: f64,
    pub r12: Complex64,
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
    pub t12: Complex64,
}

/// `cov(F1'/F1, F2'/F2)` (`conjugated = false`) or
/// `cov(F1'/F1, conj(F2'/F2))` (`conjugated = true`) in closed form.
pub fn ratio_cov_oracle(m: &RatioMoments, conjugated: bool) -> Result<Complex64> {
    if !(m.r11 > 0.0 && m.r22 > 0.0) {
        return Err(Error::InvalidParameter(
            "r11 and r22 must be positive".into(),
        ));
    }
    let det = m.r11 * m.r22 - m.r12.norm_sqr();
    if !(det > 1e-14 * m.r11 * m.r22) {
        return Err(Error::InvalidParameter(format!(
            "|r12|² = r11 r22 (determinant {det}); the covariance diverges"
        )));
    }
    if m.r12 == Complex64::default() {
        return Ok(if conjugated {
            Complex64::default()
        } else {
            m.s12 * m.s21 / (m.r11 * m.r22)
        });
    }
    let r21 = m.r12.conj();
    let factor = m.r12.norm_sqr() / det;
    let left = m.s12 / m.r12 - m.s11 / m.r11;
    let right = m.s21 / r21 - m.s22 / m.r22;
    if !conjugated {
        return Ok(factor * left * right);
    }
    // log(r11 r22 / det) = log(1 + |r12|² / det)
    let log = (m.r12.norm_sqr() / det).ln_1p();
    Ok(factor * left * right.conj()
        + log * (m.t12 / m.r12 - m.s12 * m.s21.conj() / (m.r12 * m.r12)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::builtin;

    fn eval(name: &str, params: &[f64]) -> CovarianceEval {
        builtin(name, params).unwrap().1
    }

    #[test]
    fn sinc_zero_branch() {
        let e = eval("sinc", &[]);
        assert!((kernel_k(&e, 1.0) - 0.5).abs() < 1e-12);
        assert!((kernel_ktilde(&e, 1.0) - 0.5).abs() < 1e-12);
        assert!((kernel_ktilde_star(&e, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rejected() {
        let e = eval("atomic", &[2.0, 1.0]);
        assert!(matches!(
            KernelEvaluator::new(&e),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(variance_via_k(&e, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(
            singular_set(&e, 5.0),
            Err(Error::NonDiscreteSingularSet(_))
        ));
    }

    #[test]
    fn boundary_term_ends() {
        assert!((boundary_term(0.0, 2.0) - PI * PI / 24.0).abs() < 1e-15);
        assert_eq!(boundary_term(1.0, 2.0), 0.0);
    }
}

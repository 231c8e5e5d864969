//! Spectral measures and covariance evaluation.
//!
//! A [`SpectralMeasure`] is a probability measure on the real line made of
//! point masses plus (optionally) one weighted built-in density. Its Fourier
//! transform `r(t) = ∫ e^{-iλt} dρ(λ)` is the covariance kernel of the
//! process; [`CovarianceEval`] evaluates `r`, `r'`, `r''` either from closed
//! forms or by oscillatory quadrature of the spectral moments.

mod density;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use density::{DensityKind, Tail};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Tolerance on the total mass of a measure.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A point mass `mass · δ_freq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub freq: f64,
    pub mass: f64,
}

/// A built-in density scaled by `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub kind: DensityKind,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    name: String,
    atoms: Vec<Atom>,
    density: Option<Density>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<DensityJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DensityJson {
    builtin: String,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

impl SpectralMeasure {
    /// Builds and validates a measure: masses non-negative, total mass one.
    pub fn new(
        name: impl Into<String>,
        atoms: Vec<Atom>,
        density: Option<Density>,
    ) -> Result<Self> {
        for a in &atoms {
            if !(a.mass >= 0.0 && a.mass.is_finite() && a.freq.is_finite()) {
                return Err(Error::InvalidMeasure(format!("bad atom {a:?}")));
            }
        }
        if let Some(d) = &density {
            d.kind.validate().map_err(Error::InvalidParameter)?;
            if !(d.weight >= 0.0 && d.weight.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "bad density weight {}",
                    d.weight
                )));
            }
        }
        let mass: f64 =
            atoms.iter().map(|a| a.mass).sum::<f64>() + density.map_or(0.0, |d| d.weight);
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {mass} differs from 1"
            )));
        }
        let atoms = atoms.into_iter().filter(|a| a.mass > 0.0).collect();
        let density = density.filter(|d| d.weight > 0.0);
        Ok(Self {
            name: name.into(),
            atoms,
            density,
        })
    }

    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        Self::new("atomic", atoms, None)
    }

    pub fn from_density(kind: DensityKind) -> Result<Self> {
        Self::new(kind.name(), vec![], Some(Density { kind, weight: 1.0 }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    /// A single atom and nothing else: the process is a rigid rotation.
    pub fn is_degenerate(&self) -> bool {
        if self.density.is_some() {
            return false;
        }
        match self.atoms.split_first() {
            None => true,
            Some((first, rest)) => rest.iter().all(|a| a.freq == first.freq),
        }
    }

    /// Whether the measure is invariant under `λ ↦ -λ` (real covariance).
    pub fn is_symmetric(&self) -> bool {
        let total = |f: f64| -> f64 {
            self.atoms
                .iter()
                .filter(|a| a.freq == f)
                .map(|a| a.mass)
                .sum()
        };
        self.atoms
            .iter()
            .all(|a| (total(a.freq) - total(-a.freq)).abs() <= 1e-15)
    }

    /// Whether `∫ λ² dρ < ∞`, i.e. the covariance is twice differentiable.
    pub fn has_second_moment(&self) -> bool {
        self.density.is_none_or(|d| d.kind.has_second_moment())
    }

    /// Width of the frequency range carrying the mass (used to pick scan steps).
    pub fn frequency_spread(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.freq);
            hi = hi.max(a.freq);
        }
        if let Some(d) = &self.density {
            let l = d.kind.effective_support(1e-6);
            lo = lo.min(-l);
            hi = hi.max(l);
        }
        (hi - lo).max(1e-12)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasureJson = serde_json::from_str(text)?;
        let atom_mass: f64 = raw.atoms.iter().map(|a| a.mass).sum();
        let density = match raw.density {
            None => None,
            Some(d) => {
                let kind = density_kind(&d.builtin, &d.params)?;
                Some(Density {
                    kind,
                    weight: d.weight.unwrap_or(1.0 - atom_mass),
                })
            }
        };
        let name = raw.name.unwrap_or_else(|| match &density {
            Some(d) if raw.atoms.is_empty() => d.kind.name().to_string(),
            Some(_) => "mixed".to_string(),
            None => "atomic".to_string(),
        });
        Self::new(name, raw.atoms, density)
    }

    pub fn to_json(&self) -> String {
        let raw = MeasureJson {
            name: Some(self.name.clone()),
            atoms: self.atoms.clone(),
            density: self.density.map(|d| DensityJson {
                builtin: d.kind.name().to_string(),
                params: d.kind.params(),
                weight: Some(d.weight),
            }),
        };
        serde_json::to_string_pretty(&raw).expect("measure serializes")
    }
}

fn density_kind(name: &str, params: &[f64]) -> Result<DensityKind> {
    let one = |default: f64| -> Result<f64> {
        match params {
            [] => Ok(default),
            [p] => Ok(*p),
            _ => Err(Error::InvalidParameter(format!(
                "{name} takes one parameter"
            ))),
        }
    };
    let none = || -> Result<()> {
        if params.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} takes no parameters"
            )))
        }
    };
    let kind = match name {
        "sinc" => none().map(|_| DensityKind::Sinc)?,
        "gaussian" => none().map(|_| DensityKind::Gaussian)?,
        "bessel_j0" => none().map(|_| DensityKind::BesselJ0)?,
        "ou" => none().map(|_| DensityKind::Ou)?,
        "ou_smooth" => DensityKind::OuSmooth(one(0.5)?),
        "ou_spectral" => DensityKind::OuSpectral(one(10.0)?),
        "power_cosine" => DensityKind::PowerCosine(one(0.25)?),
        other => return Err(Error::UnknownBuiltin(other.to_string())),
    };
    kind.validate().map_err(Error::InvalidParameter)?;
    Ok(kind)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 7] = [
    "sinc",
    "gaussian",
    "bessel_j0",
    "ou_smooth",
    "ou_spectral",
    "power_cosine",
    "atomic",
];

/// Built-in measure with its closed-form covariance evaluator.
///
/// `atomic` takes a flat list `[freq_1, mass_1, freq_2, mass_2, ...]`;
/// `ou_smooth(a)`, `ou_spectral(M)` and `power_cosine(b)` take one parameter
/// each (defaults 0.5, 10 and 0.25). `ou` (the non-differentiable
/// exponential kernel) is accepted for diagnostics.
pub fn builtin(name: &str, params: &[f64]) -> Result<(SpectralMeasure, CovarianceEval)> {
    let measure = if name == "atomic" {
        if params.is_empty() || !params.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "atomic needs freq:mass pairs".to_string(),
            ));
        }
        let atoms = params
            .chunks(2)
            .map(|c| Atom {
                freq: c[0],
                mass: c[1],
            })
            .collect();
        SpectralMeasure::atomic(atoms)?
    } else {
        SpectralMeasure::from_density(density_kind(name, params)?)?
    };
    let eval = CovarianceEval::closed_form(measure.clone());
    Ok((measure, eval))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

/// `r`, `r'`, `r''` at one time, plus `1 - |r|²` computed without
/// cancellation where the closed form allows it.
#[derive(Debug, Clone, Copy)]
pub struct CovPoint {
    pub r: Complex64,
    pub dr: Complex64,
    pub ddr: Complex64,
    pub one_minus_abs2: f64,
    /// For purely atomic measures, `(Re(r' r̄), Im(r' r̄) - |r|² Im r'(0))`
    /// from pairwise frequency differences, so both vanish together with
    /// `1 - |r|²` at points where `|r| = 1`.
    pub cross: Option<(f64, f64)>,
}

/// Evaluator for the covariance kernel of a measure.
#[derive(Debug, Clone)]
pub struct CovarianceEval {
    measure: SpectralMeasure,
    provenance: Provenance,
}

const QUAD_TOL: Tolerance = Tolerance::new(1e-11, 1e-11);
const ALGEBRAIC_TAIL_START: f64 = 50.0;

impl CovarianceEval {
    pub fn closed_form(measure: SpectralMeasure) -> Self {
        Self {
            measure,
            provenance: Provenance::ClosedForm,
        }
    }

    pub fn quadrature(measure: SpectralMeasure) -> Self {
        Self {
            measure,
            provenance: Provenance::Quadrature,
        }
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Whether `one_minus_abs2` keeps relative accuracy as `|r| → 1`.
    pub fn precise_near_one(&self) -> bool {
        self.provenance == Provenance::ClosedForm
    }

    pub fn r(&self, t: f64) -> Complex64 {
        self.point(t).r
    }

    pub fn dr(&self, t: f64) -> Complex64 {
        self.point(t).dr
    }

    pub fn ddr(&self, t: f64) -> Complex64 {
        self.point(t).ddr
    }

    /// Evaluate everything at `t`. Quadrature failures surface as NaN; use
    /// [`CovarianceEval::try_point`] to get the error instead.
    pub fn point(&self, t: f64) -> CovPoint {
        self.try_point(t).unwrap_or(CovPoint {
            r: Complex64::new(f64::NAN, f64::NAN),
            dr: Complex64::new(f64::NAN, f64::NAN),
            ddr: Complex64::new(f64::NAN, f64::NAN),
            one_minus_abs2: f64::NAN,
            cross: None,
        })
    }

    /// Covariance at `s + u`. For purely atomic measures the phases are split
    /// as `e^{-iλs} e^{-iλu}` so the result is smooth in `u` even where `s + u`
    /// cannot be represented more finely than `ulp(s)`.
    pub fn point_offset(&self, s: f64, u: f64) -> CovPoint {
        if self.measure.density.is_some() || s == 0.0 {
            return self.point(s + u);
        }
        let mut r = Complex64::default();
        let mut dr = Complex64::default();
        let mut ddr = Complex64::default();
        for a in &self.measure.atoms {
            let e = Complex64::from_polar(a.mass, -a.freq * s)
                * Complex64::from_polar(1.0, -a.freq * u);
            r += e;
            dr += e * Complex64::new(0.0, -a.freq);
            ddr += e * (-a.freq * a.freq);
        }
        let (one_minus_abs2, cross) = atomic_pairs(&self.measure.atoms, s, u);
        CovPoint {
            r,
            dr,
            ddr,
            one_minus_abs2,
            cross: Some(cross),
        }
    }

    pub fn try_point(&self, t: f64) -> Result<CovPoint> {
        let mut r = Complex64::default();
        let mut dr = Complex64::default();
        let mut ddr = Complex64::default();
        for a in &self.measure.atoms {
            let e = Complex64::from_polar(a.mass, -a.freq * t);
            r += e;
            dr += e * Complex64::new(0.0, -a.freq);
            ddr += e * (-a.freq * a.freq);
        }
        let mut density_g1 = None;
        if let Some(d) = &self.measure.density {
            match self.provenance {
                Provenance::ClosedForm => {
                    let p = d.kind.covariance(t);
                    r += d.weight * p.r;
                    dr += d.weight * p.dr;
                    ddr += d.weight * p.ddr;
                    density_g1 = Some(p.one_minus_r2);
                }
                Provenance::Quadrature => {
                    r += d.weight * density_transform(d.kind, t, 0)?;
                    if d.kind.has_second_moment() {
                        dr += d.weight * density_transform(d.kind, t, 1)?;
                        ddr += d.weight * density_transform(d.kind, t, 2)?;
                    } else {
                        dr = Complex64::new(f64::NAN, f64::NAN);
                        ddr = Complex64::new(f64::NAN, f64::NAN);
                    }
                }
            }
        }
        let mut cross = None;
        let atoms = &self.measure.atoms;
        let one_minus_abs2 = match (self.precise_near_one(), density_g1) {
            (true, Some(g1)) if atoms.is_empty() => g1,
            (true, Some(g1)) => {
                let d = self.measure.density.as_ref().expect("density present");
                mixed_one_minus_abs2(atoms, d.weight, d.kind.covariance(t).r, g1, t)
            }
            (true, None) => {
                let (g1, c) = atomic_pairs(atoms, t, 0.0);
                cross = Some(c);
                g1
            }
            _ => (1.0 - r.norm_sqr()).max(0.0),
        };
        Ok(CovPoint {
            r,
            dr,
            ddr,
            one_minus_abs2,
            cross,
        })
    }
}

/// `1 - |r|²` for atoms of total mass `1 - w` plus `w` times a symmetric
/// density with real covariance `rd` and `1 - rd² = gd`:
///
/// ```text
/// Σ_{j,k} m_j m_k (1 - cos((λ_j - λ_k) t)) + 2w Σ_j m_j (1 - rd cos(λ_j t)) + w² gd
/// ```
///
/// Every term is non-negative while `rd ≥ 0`, which holds near `t = 0`.
fn mixed_one_minus_abs2(atoms: &[Atom], w: f64, rd: f64, gd: f64, t: f64) -> f64 {
    let mut pairs = 0.0;
    for (j, a) in atoms.iter().enumerate() {
        for b in &atoms[j + 1..] {
            let v = (0.5 * (a.freq - b.freq) * t).sin();
            pairs += a.mass * b.mass * v * v;
        }
    }
    // 1 - rd = gd / (1 + rd) keeps precision when rd is close to 1
    let one_minus_rd = if rd > 0.0 { gd / (1.0 + rd) } else { 1.0 - rd };
    let mut cross = 0.0;
    for a in atoms {
        let v = (0.5 * a.freq * t).sin();
        // 1 - rd cos θ = (1 - rd) + 2 rd sin²(θ/2)
        cross += a.mass * (one_minus_rd + 2.0 * rd * v * v);
    }
    4.0 * pairs + 2.0 * w * cross + w * w * gd
}

/// Pairwise forms at `t = s + u` for an atomic measure of unit mass, with
/// `h = (λ_j - λ_k)/2` and `v = sin(h t)` expanded around `s`:
///
/// ```text
/// 1 - |r|²               = 4 Σ_{j<k} m_j m_k v²
/// Re(r' r̄)               = -2 Σ_{j<k} m_j m_k (λ_j - λ_k) v cos(h t)
/// Im(r' r̄) - |r|² Im r'(0) = 2 Σ_{j<k} m_j m_k (λ_j + λ_k - 2 m_1) v²
/// ```
fn atomic_pairs(atoms: &[Atom], s: f64, u: f64) -> (f64, (f64, f64)) {
    let m1: f64 = atoms.iter().map(|a| a.freq * a.mass).sum();
    let (mut g1, mut re, mut im) = (0.0, 0.0, 0.0);
    for (j, a) in atoms.iter().enumerate() {
        for b in &atoms[j + 1..] {
            let h = 0.5 * (a.freq - b.freq);
            let (sa, ca) = (h * s).sin_cos();
            let (sb, cb) = (h * u).sin_cos();
            let v = sa * cb + ca * sb;
            let c = ca * cb - sa * sb;
            let w = a.mass * b.mass;
            g1 += w * v * v;
            re -= w * (a.freq - b.freq) * v * c;
            im += w * (a.freq + b.freq - 2.0 * m1) * v * v;
        }
    }
    (4.0 * g1, (2.0 * re, 2.0 * im))
}

/// `∫ (-iλ)^order e^{-iλt} p(λ) dλ`. Panels are at most `π / (4|t|)` wide
/// so the phase turns slowly on each; algebraic tails are summed cycle by
/// cycle with epsilon extrapolation.
fn density_transform(kind: DensityKind, t: f64, order: u32) -> Result<Complex64> {
    let factor = move |l: f64| -> Complex64 {
        let phase = Complex64::from_polar(1.0, -l * t);
        match order {
            0 => phase,
            1 => phase * Complex64::new(0.0, -l),
            _ => phase * (-l * l),
        }
    };
    let (lo, hi, algebraic) = match kind.tail() {
        Tail::Compact { lo, hi } => (lo, hi, false),
        Tail::Exponential { cutoff } => (-cutoff, cutoff, false),
        Tail::Algebraic { power, .. } => {
            if power - order as f64 <= 1.0 {
                return Err(Error::Divergent(format!(
                    "spectral moment of order {order} of {} is infinite",
                    kind.name()
                )));
            }
            (-ALGEBRAIC_TAIL_START, ALGEBRAIC_TAIL_START, true)
        }
    };
    let max_width = if t == 0.0 {
        1.0
    } else {
        (PI / (4.0 * t.abs())).min(1.0)
    };
    let mut total = integrate_density(kind, &factor, lo, hi, max_width, QUAD_TOL)
        .map_err(|e| Error::Quadrature(format!("transform of {} at t = {t}: {e}", kind.name())))?;
    if algebraic {
        let integrand = |l: f64| factor(l) * kind.pdf(l);
        let right = quad::oscillatory_tail(&integrand, hi, t, QUAD_TOL)?;
        let mirrored = |x: f64| integrand(-x);
        let left = quad::oscillatory_tail(&mirrored, -lo, -t, QUAD_TOL)?;
        total += right.value + left.value;
    }
    Ok(total)
}

/// `∫_lo^hi h(λ) p(λ) dλ` on panels at most `max_width` wide. Panels next
/// to a density singularity use tanh-sinh in the offset from the singular
/// point, so nodes crowding it are not rounded onto it; the rest go to
/// adaptive Gauss–Kronrod.
fn integrate_density<V, H>(
    kind: DensityKind,
    h: &H,
    lo: f64,
    hi: f64,
    max_width: f64,
    tol: Tolerance,
) -> std::result::Result<V, String>
where
    V: quad::QuadValue,
    H: Fn(f64) -> V,
{
    let singular = kind.singular_points();
    let is_singular = |x: f64| singular.iter().any(|s| (s - x).abs() < 1e-14);
    let mut points = vec![lo, hi];
    points.extend(singular.iter().copied().filter(|s| *s > lo && *s < hi));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut regular = Vec::new();
    let mut total = V::default();
    for w in points.windows(2) {
        let (u, v) = (w[0], w[1]);
        let n = ((v - u) / max_width).ceil().max(1.0) as usize;
        let step = (v - u) / n as f64;
        for i in 0..n {
            let a = u + i as f64 * step;
            let b = if i + 1 == n { v } else { a + step };
            let left = i == 0 && is_singular(u);
            let right = i + 1 == n && is_singular(v);
            if !(left || right) {
                regular.push((a, b));
                continue;
            }
            let mid = if left && right {
                0.5 * (a + b)
            } else if left {
                b
            } else {
                a
            };
            let mut pieces = Vec::new();
            if left {
                pieces.push((a, 0.0, mid - a));
            }
            if right {
                pieces.push((b, mid - b, 0.0));
            }
            for (center, s0, s1) in pieces {
                let g = |s: f64| h(center + s) * kind.pdf_offset(center, s);
                let est =
                    quad::tanh_sinh(&g, s0, s1, Tolerance::new(tol.abs * 0.01, tol.rel * 0.1));
                if !est.converged {
                    return Err(format!("singular panel [{a}, {b}] did not converge"));
                }
                total = total + est.value;
            }
        }
    }
    if !regular.is_empty() {
        let f = |l: f64| h(l) * kind.pdf(l);
        let est = quad::integrate_panels(&f, &regular, tol, 200_000);
        if !est.converged {
            return Err(format!("error estimate {:.2e}", est.error));
        }
        total = total + est.value;
    }
    Ok(total)
}

/// `Σ masses + ∫ p`, with the density integrated numerically.
pub fn total_mass(measure: &SpectralMeasure) -> Result<f64> {
    let atoms: f64 = measure.atoms.iter().map(|a| a.mass).sum();
    let density = match &measure.density {
        None => 0.0,
        Some(d) => d.weight * density_transform(d.kind, 0.0, 0)?.re,
    };
    Ok(atoms + density)
}

/// `r(t)` (the covariance operation).
pub fn covariance(eval: &CovarianceEval, t: f64) -> Result<Complex64> {
    Ok(eval.try_point(t)?.r)
}

/// `r'(t)` or `r''(t)`.
pub fn covariance_derivative(eval: &CovarianceEval, t: f64, order: u32) -> Result<Complex64> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    if !eval.measure.has_second_moment() {
        return Err(Error::Divergent(format!(
            "{}: the second spectral moment is infinite, r is not twice differentiable",
            eval.measure.name
        )));
    }
    let p = eval.try_point(t)?;
    Ok(if order == 1 { p.dr } else { p.ddr })
}

/// `r'(0)² - r''(0)`, the variance of the spectral measure; positive iff the
/// measure is not a single atom.
pub fn nondegeneracy_margin(eval: &CovarianceEval) -> Result<f64> {
    let dr = covariance_derivative(eval, 0.0, 1)?;
    let ddr = covariance_derivative(eval, 0.0, 2)?;
    let m = dr * dr - ddr;
    if m.im.abs() > 1e-9 {
        return Err(Error::InvalidMeasure(format!(
            "r'(0)² - r''(0) has imaginary part {}",
            m.im
        )));
    }
    Ok(m.re)
}

/// Outcome of the logarithmic moment check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCondition {
    pub alpha: f64,
    /// The integral when it converged.
    pub value: Option<f64>,
    pub finite: bool,
}

/// `∫ λ² log^{1+α}(1 + |λ|) dρ(λ)`. Non-compact tails are integrated over
/// dyadic shells; the integral is declared divergent when the shell
/// contributions stop shrinking.
pub fn moment_condition(measure: &SpectralMeasure, alpha: f64) -> Result<MomentCondition> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let weight = |l: f64| l * l * (l.abs().ln_1p()).powf(1.0 + alpha);
    let mut total: f64 = measure.atoms.iter().map(|a| a.mass * weight(a.freq)).sum();
    let Some(d) = measure.density else {
        return Ok(MomentCondition {
            alpha,
            value: Some(total),
            finite: true,
        });
    };
    let kind = d.kind;
    let f = move |l: f64| d.weight * weight(l) * kind.pdf(l);
    let tol = Tolerance::new(1e-13, 1e-11);
    let core = |lo: f64, hi: f64| -> Result<f64> {
        integrate_density(kind, &|l: f64| d.weight * weight(l), lo, hi, 1.0, tol)
            .map_err(|e| Error::Quadrature(format!("moment integral of {}: {e}", kind.name())))
    };
    match kind.tail() {
        Tail::Compact { lo, hi } => {
            total += core(lo, hi)?;
            Ok(MomentCondition {
                alpha,
                value: Some(total),
                finite: true,
            })
        }
        Tail::Exponential { cutoff } => {
            total += core(-cutoff, cutoff)?;
            Ok(MomentCondition {
                alpha,
                value: Some(total),
                finite: true,
            })
        }
        Tail::Algebraic { .. } => {
            let start = 8.0;
            total += core(-start, start)?;
            let mut prev_shell = f64::INFINITY;
            let mut growing = 0;
            let mut lo = start;
            for _ in 0..80 {
                let hi = 2.0 * lo;
                let shell = quad::integrate(&f, &[lo, hi], tol, 2000).value
                    + quad::integrate(&|x: f64| f(-x), &[lo, hi], tol, 2000).value;
                total += shell;
                if shell <= 1e-12 * total.abs() {
                    return Ok(MomentCondition {
                        alpha,
                        value: Some(total),
                        finite: true,
                    });
                }
                if shell >= 0.9 * prev_shell {
                    growing += 1;
                    if growing >= 4 {
                        return Ok(MomentCondition {
                            alpha,
                            value: None,
                            finite: false,
                        });
                    }
                } else {
                    growing = 0;
                }
                prev_shell = shell;
                lo = hi;
            }
            Ok(MomentCondition {
                alpha,
                value: None,
                finite: false,
            })
        }
    }
}

//! Built-in spectral densities and their closed-form covariance functions.
//!
//! Each density is a probability density `p(λ)`; its Fourier transform
//! `r(t) = ∫ e^{-iλt} p(λ) dλ` is known in closed form together with the
//! first two derivatives, which are written out by hand below.

use std::f64::consts::PI;

use crate::special::{
    bessel_j0, bessel_j1, bessel_j1_over_x, bessel_k, bessel_k_scaled, gamma, one_minus_j0,
};

/// Values of `r`, `r'`, `r''` and `1 - r^2` for a real, even covariance.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RealPoint {
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
    pub one_minus_r2: f64,
}

/// How the density decays for large `|λ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Supported on a bounded interval.
    Compact { lo: f64, hi: f64 },
    /// Negligible (below 1e-18 relative) beyond `cutoff`.
    Exponential { cutoff: f64 },
    /// Decays like `|λ|^{-power}`.
    Algebraic { power: f64, coefficient: f64 },
}

/// The built-in density families. All are symmetric, so their covariance
/// functions are real and even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    /// Uniform on `[-π, π]`; `r(t) = sin(πt) / (πt)`.
    Sinc,
    /// Standard normal; `r(t) = e^{-t²/2}`.
    Gaussian,
    /// Arcsine law on `(-1, 1)`; `r = J0`.
    BesselJ0,
    /// `r(t) = e^{a - sqrt(a² + t²)}`, a smooth approximation of `e^{-|t|}`.
    OuSmooth(f64),
    /// `p ∝ 1/(λ²+1) - 1/(λ²+M²)`; `r(t) = (M e^{-|t|} - e^{-M|t|}) / (M-1)`.
    OuSpectral(f64),
    /// `r(t) = cos t · (1 + t²)^{-b/2}`, polynomial decay `|t|^{-b}`.
    PowerCosine(f64),
    /// Cauchy density, `r(t) = e^{-|t|}`. Not differentiable; diagnostics only.
    Ou,
}

impl DensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            DensityKind::Sinc => "sinc",
            DensityKind::Gaussian => "gaussian",
            DensityKind::BesselJ0 => "bessel_j0",
            DensityKind::OuSmooth(_) => "ou_smooth",
            DensityKind::OuSpectral(_) => "ou_spectral",
            DensityKind::PowerCosine(_) => "power_cosine",
            DensityKind::Ou => "ou",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            DensityKind::OuSmooth(a) => vec![a],
            DensityKind::OuSpectral(m) => vec![m],
            DensityKind::PowerCosine(b) => vec![b],
            _ => vec![],
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        match *self {
            DensityKind::OuSmooth(a) if !(a > 0.0 && a.is_finite()) => {
                Err(format!("ou_smooth requires a > 0, got {a}"))
            }
            DensityKind::OuSpectral(m) if !(m > 1.0 && m.is_finite()) => {
                Err(format!("ou_spectral requires M > 1, got {m}"))
            }
            DensityKind::PowerCosine(b) if !(b > 0.0 && b < 0.5) => {
                Err(format!("power_cosine requires b in (0, 1/2), got {b}"))
            }
            _ => Ok(()),
        }
    }

    /// Probability density at `λ`.
    pub fn pdf(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        match *self {
            DensityKind::Sinc => {
                if l <= PI {
                    0.5 / PI
                } else {
                    0.0
                }
            }
            DensityKind::Gaussian => (-0.5 * l * l).exp() / (2.0 * PI).sqrt(),
            DensityKind::BesselJ0 => {
                if l < 1.0 {
                    1.0 / (PI * ((1.0 - l) * (1.0 + l)).sqrt())
                } else {
                    0.0
                }
            }
            DensityKind::OuSmooth(a) => {
                // (a e^a / π) K1(a sqrt(1+λ²)) / sqrt(1+λ²)
                let s = (1.0 + l * l).sqrt();
                let x = a * s;
                a / PI * bessel_k_scaled(1.0, x) * (a - x).exp() / s
            }
            DensityKind::OuSpectral(m) => {
                let l2 = l * l;
                m * (m + 1.0) / (PI * (l2 + 1.0) * (l2 + m * m))
            }
            DensityKind::PowerCosine(b) => {
                0.5 * (power_law_pdf(b, lambda - 1.0) + power_law_pdf(b, lambda + 1.0))
            }
            DensityKind::Ou => 1.0 / (PI * (1.0 + l * l)),
        }
    }

    /// Density at `center + offset`, keeping full accuracy in `offset` when
    /// `center` is one of the [`DensityKind::singular_points`].
    pub fn pdf_offset(&self, center: f64, offset: f64) -> f64 {
        match *self {
            DensityKind::BesselJ0 => {
                let (below, above) = ((1.0 - center) - offset, (1.0 + center) + offset);
                if below <= 0.0 || above <= 0.0 {
                    return 0.0;
                }
                1.0 / (PI * (below * above).sqrt())
            }
            DensityKind::PowerCosine(b) => {
                0.5 * (power_law_pdf(b, (center - 1.0) + offset)
                    + power_law_pdf(b, (center + 1.0) + offset))
            }
            _ => self.pdf(center + offset),
        }
    }

    pub fn tail(&self) -> Tail {
        match *self {
            DensityKind::Sinc => Tail::Compact { lo: -PI, hi: PI },
            DensityKind::BesselJ0 => Tail::Compact { lo: -1.0, hi: 1.0 },
            DensityKind::Gaussian => Tail::Exponential { cutoff: 12.0 },
            DensityKind::OuSmooth(a) => Tail::Exponential {
                cutoff: 45.0 / a + 2.0,
            },
            DensityKind::PowerCosine(_) => Tail::Exponential { cutoff: 48.0 },
            DensityKind::OuSpectral(m) => Tail::Algebraic {
                power: 4.0,
                coefficient: m * (m + 1.0) / PI,
            },
            DensityKind::Ou => Tail::Algebraic {
                power: 2.0,
                coefficient: 1.0 / PI,
            },
        }
    }

    /// Points where the density itself is unbounded (integrable singularities).
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            DensityKind::BesselJ0 | DensityKind::PowerCosine(_) => vec![-1.0, 1.0],
            _ => vec![],
        }
    }

    /// Smallest `L` such that the mass outside `[-L, L]` is below `mass_tol`
    /// (or the support bound for compact densities).
    pub fn effective_support(&self, mass_tol: f64) -> f64 {
        match self.tail() {
            Tail::Compact { lo, hi } => lo.abs().max(hi.abs()),
            Tail::Exponential { cutoff } => {
                let log_tol = (1.0 / mass_tol).ln();
                match *self {
                    DensityKind::Gaussian => (2.0 * log_tol).sqrt().max(1.0),
                    DensityKind::OuSmooth(a) => log_tol / a + 1.0,
                    DensityKind::PowerCosine(_) => log_tol + 2.0,
                    _ => cutoff,
                }
            }
            Tail::Algebraic { power, coefficient } => {
                // two tails of c λ^{-p}: 2 c L^{1-p} / (p - 1)
                (2.0 * coefficient / ((power - 1.0) * mass_tol)).powf(1.0 / (power - 1.0))
            }
        }
    }

    /// Largest finite spectral moment order (0, 1 or 2) of interest here.
    pub fn has_second_moment(&self) -> bool {
        match self.tail() {
            Tail::Algebraic { power, .. } => power > 3.0,
            _ => true,
        }
    }

    /// Closed-form covariance and its derivatives.
    pub(crate) fn covariance(&self, t: f64) -> RealPoint {
        match *self {
            DensityKind::Sinc => sinc_point(t),
            DensityKind::Gaussian => {
                let r = (-0.5 * t * t).exp();
                RealPoint {
                    r,
                    dr: -t * r,
                    ddr: (t * t - 1.0) * r,
                    one_minus_r2: -(-t * t).exp_m1(),
                }
            }
            DensityKind::BesselJ0 => {
                let j0 = bessel_j0(t);
                let omj0 = one_minus_j0(t);
                RealPoint {
                    r: j0,
                    dr: -bessel_j1(t),
                    // J0'' = J1/t - J0
                    ddr: bessel_j1_over_x(t) - j0,
                    one_minus_r2: omj0 * (1.0 + j0),
                }
            }
            DensityKind::OuSmooth(a) => {
                // r = exp(a - s), s = sqrt(a² + t²); a - s = -t² / (a + s)
                // r'  = -(t/s) r
                // r'' = (t²/s² - a²/s³) r
                let s = (a * a + t * t).sqrt();
                let e = -t * t / (a + s);
                let r = e.exp();
                RealPoint {
                    r,
                    dr: -(t / s) * r,
                    ddr: (t * t / (s * s) - a * a / (s * s * s)) * r,
                    one_minus_r2: -(2.0 * e).exp_m1(),
                }
            }
            DensityKind::OuSpectral(m) => ou_spectral_point(m, t),
            DensityKind::PowerCosine(b) => {
                // r = cos t · w, w = (1+t²)^{-b/2}
                // w'  = -b t / (1+t²) · w
                // w'' = (-b + (b + b²) t²) / (1+t²)² · w
                // r'  = -sin t · w + cos t · w'
                // r'' = -cos t · w - 2 sin t · w' + cos t · w''
                let u = 1.0 + t * t;
                let lw = -0.5 * b * (t * t).ln_1p();
                let w = lw.exp();
                let w1 = -b * t / u * w;
                let w2 = (-b + (b + b * b) * t * t) / (u * u) * w;
                let (s, c) = t.sin_cos();
                let r = c * w;
                // 1 - cos²t w² = sin²t + cos²t (1 - w²)
                let one_minus_w2 = -(2.0 * lw).exp_m1();
                RealPoint {
                    r,
                    dr: -s * w + c * w1,
                    ddr: -c * w - 2.0 * s * w1 + c * w2,
                    one_minus_r2: s * s + c * c * one_minus_w2,
                }
            }
            DensityKind::Ou => {
                let r = (-t.abs()).exp();
                RealPoint {
                    r,
                    dr: -t.signum() * r,
                    ddr: r,
                    one_minus_r2: -(-2.0 * t.abs()).exp_m1(),
                }
            }
        }
    }
}

/// Density of the Fourier pair `(1 + t²)^{-ν}` with `ν = b/2`:
/// `q(μ) = (1/2π) (2 sqrt(π)/Γ(ν)) (|μ|/2)^{ν - 1/2} K_{ν - 1/2}(|μ|)`.
fn power_law_pdf(b: f64, mu: f64) -> f64 {
    let nu = 0.5 * b;
    let x = mu.abs();
    if x == 0.0 {
        return f64::INFINITY;
    }
    let order = nu - 0.5;
    (1.0 / PI.sqrt()) / gamma(nu) * (0.5 * x).powf(order) * bessel_k(order, x)
}

fn sinc_point(t: f64) -> RealPoint {
    let z = PI * t;
    let (s, ds, dds, one_minus_s) = if z.abs() < 0.5 {
        let z2 = z * z;
        // Taylor series of sin z / z and its derivatives.
        let oms = z2 / 6.0
            * (1.0
                - z2 / 20.0
                    * (1.0
                        - z2 / 42.0 * (1.0 - z2 / 72.0 * (1.0 - z2 / 110.0 * (1.0 - z2 / 156.0)))));
        let s = 1.0 - oms;
        let ds = z
            * (-1.0 / 3.0
                + z2 * (1.0 / 30.0
                    + z2 * (-1.0 / 840.0
                        + z2 * (1.0 / 45360.0 + z2 * (-1.0 / 3991680.0 + z2 / 518918400.0)))));
        let dds = -1.0 / 3.0
            + z2 * (1.0 / 10.0
                + z2 * (-1.0 / 168.0
                    + z2 * (1.0 / 6480.0 + z2 * (-1.0 / 443520.0 + z2 / 47174400.0))));
        (s, ds, dds, oms)
    } else {
        let (sz, cz) = z.sin_cos();
        let s = sz / z;
        let ds = (z * cz - sz) / (z * z);
        let dds = ((2.0 - z * z) * sz - 2.0 * z * cz) / (z * z * z);
        (s, ds, dds, 1.0 - s)
    };
    RealPoint {
        r: s,
        dr: PI * ds,
        ddr: PI * PI * dds,
        one_minus_r2: one_minus_s * (1.0 + s),
    }
}

fn ou_spectral_point(m: f64, t: f64) -> RealPoint {
    let a = t.abs();
    let sg = if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    };
    let e1 = (-a).exp();
    let em = (-m * a).exp();
    let r = (m * e1 - em) / (m - 1.0);
    // e^{-a} - e^{-Ma} without cancellation near 0
    let diff = -e1 * (-(m - 1.0) * a).exp_m1();
    let dr = -m * sg * diff / (m - 1.0);
    let ddr = m * (e1 - m * em) / (m - 1.0);
    // 1 - r = sum_{k>=2} (-1)^k M (1 + M + ... + M^{k-2}) |t|^k / k!
    let one_minus_r = if m * a < 0.5 {
        let mut sum = 0.0;
        let mut geo = 1.0; // 1 + M + ... + M^{k-2}
        let mut mpow = 1.0; // M^{k-2}
        let mut tk = a * a / 2.0; // |t|^k / k!
        let mut sign = 1.0;
        for k in 2..40 {
            let term = sign * m * geo * tk;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            mpow *= m;
            geo += mpow;
            tk *= a / (k + 1) as f64;
            sign = -sign;
        }
        sum
    } else {
        1.0 - r
    };
    RealPoint {
        r,
        dr,
        ddr,
        one_minus_r2: one_minus_r * (1.0 + r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference_check(kind: DensityKind, ts: &[f64]) {
        for &t in ts {
            let h = 1e-5;
            let p = kind.covariance(t);
            let fd1 = (kind.covariance(t + h).r - kind.covariance(t - h).r) / (2.0 * h);
            let fd2 = (kind.covariance(t + h).dr - kind.covariance(t - h).dr) / (2.0 * h);
            assert!(
                (fd1 - p.dr).abs() < 1e-7,
                "{kind:?} r' at {t}: {fd1} vs {}",
                p.dr
            );
            assert!(
                (fd2 - p.ddr).abs() < 1e-6,
                "{kind:?} r'' at {t}: {fd2} vs {}",
                p.ddr
            );
            assert!(
                (p.one_minus_r2 - (1.0 - p.r * p.r)).abs() < 1e-12,
                "{kind:?} 1-r² at {t}"
            );
        }
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let ts = [0.013, 0.2, 0.9, 1.7, 3.3, 7.9, 8.1, 12.5, 31.0];
        for kind in [
            DensityKind::Sinc,
            DensityKind::Gaussian,
            DensityKind::BesselJ0,
            DensityKind::OuSmooth(0.5),
            DensityKind::OuSpectral(10.0),
            DensityKind::PowerCosine(0.25),
        ] {
            finite_difference_check(kind, &ts);
        }
    }

    #[test]
    fn values_at_origin() {
        for kind in [
            DensityKind::Sinc,
            DensityKind::Gaussian,
            DensityKind::BesselJ0,
            DensityKind::OuSmooth(0.5),
            DensityKind::OuSpectral(10.0),
            DensityKind::PowerCosine(0.25),
        ] {
            let p = kind.covariance(0.0);
            assert_eq!(p.r, 1.0, "{kind:?}");
            assert_eq!(p.dr, 0.0, "{kind:?}");
            assert_eq!(p.one_minus_r2, 0.0, "{kind:?}");
        }
        assert!((DensityKind::Sinc.covariance(0.0).ddr + PI * PI / 3.0).abs() < 1e-15);
        assert_eq!(DensityKind::Gaussian.covariance(0.0).ddr, -1.0);
        assert_eq!(DensityKind::BesselJ0.covariance(0.0).ddr, -0.5);
        assert!((DensityKind::OuSmooth(0.5).covariance(0.0).ddr + 2.0).abs() < 1e-15);
        assert!((DensityKind::OuSpectral(10.0).covariance(0.0).ddr + 10.0).abs() < 1e-12);
        assert!((DensityKind::PowerCosine(0.25).covariance(0.0).ddr + 1.25).abs() < 1e-15);
    }

    #[test]
    fn one_minus_r2_is_accurate_near_origin() {
        let t = 1e-7;
        let g = DensityKind::Gaussian.covariance(t).one_minus_r2;
        assert!((g / (t * t) - 1.0).abs() < 1e-9);
        let s = DensityKind::Sinc.covariance(t).one_minus_r2;
        assert!((s / (PI * PI * t * t / 3.0) - 1.0).abs() < 1e-9);
        let j = DensityKind::BesselJ0.covariance(t).one_minus_r2;
        assert!((j / (t * t / 2.0) - 1.0).abs() < 1e-9);
        let o = DensityKind::OuSpectral(10.0).covariance(t).one_minus_r2;
        assert!((o / (10.0 * t * t) - 1.0).abs() < 1e-6);
        let pc = DensityKind::PowerCosine(0.25).covariance(t).one_minus_r2;
        assert!((pc / (1.25 * t * t) - 1.0).abs() < 1e-6);
    }
}

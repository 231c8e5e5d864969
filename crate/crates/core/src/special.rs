//! Special functions used by the built-in kernels and the statistics code.
//!
//! Bessel functions of the first kind use the power series below `|x| = 8`;
//! above it the Hankel asymptotic expansion is used, except on `[8, 30)` where
//! the expansion is not yet accurate to double precision and the periodic
//! Bessel integral is summed with the trapezoidal rule instead (spectrally
//! accurate for periodic analytic integrands).

use std::f64::consts::PI;

const SERIES_SPLIT: f64 = 8.0;
const HANKEL_SPLIT: f64 = 30.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_SPLIT {
        j_series(0, ax)
    } else if ax < HANKEL_SPLIT {
        j_trapezoid(0, ax)
    } else {
        j_hankel(0, ax)
    }
}

/// Bessel function of the first kind, order one. Odd in `x`.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_SPLIT {
        j_series(1, ax)
    } else if ax < HANKEL_SPLIT {
        j_trapezoid(1, ax)
    } else {
        j_hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `1 - J0(x)`, accurate for small `x` where the naive difference cancels.
pub fn one_minus_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 1.0 {
        return 1.0 - bessel_j0(ax);
    }
    let q = 0.25 * ax * ax;
    // J0 = sum_k (-q)^k / (k!)^2; drop the k = 0 term.
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    -sum
}

/// `J1(x) / x`, continuous at the origin (value 1/2).
pub fn bessel_j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-3 {
        let q = 0.25 * ax * ax;
        0.5 * (1.0 - q / 2.0 + q * q / 12.0)
    } else {
        bessel_j1(ax) / ax
    }
}

fn j_series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * (kf + order as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 4 {
            break;
        }
    }
    sum
}

fn j_trapezoid(order: u32, x: f64) -> f64 {
    // J_n(x) = (1/pi) * int_0^pi cos(n t - x sin t) dt; the integrand is
    // periodic and even on [-pi, pi] so the trapezoidal rule on the half
    // period with endpoint halving is the full periodic rule.
    let n = (x.ceil() as usize) + 48;
    let h = PI / n as f64;
    let nf = order as f64;
    let f = |t: f64| (nf * t - x * t.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for j in 1..n {
        sum += f(j as f64 * h);
    }
    sum / n as f64
}

fn j_hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60u32 {
        let term = a / x.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-18 {
            break;
        }
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / (8.0 * (k + 1) as f64);
    }
    let chi = x - (0.5 * order as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponentially scaled modified Bessel function of the second kind,
/// `e^x K_nu(x)` for `x > 0`, from `K_nu(x) = int_0^inf e^{-x cosh u} cosh(nu u) du`
/// summed with the trapezoidal rule (the integrand decays double exponentially).
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_scaled requires x > 0");
    let nu = nu.abs();
    let h = (0.5 / x.sqrt()).min(0.2);
    let f = |u: f64| (-x * (u.cosh() - 1.0)).exp() * (nu * u).cosh();
    let mut sum = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let u = k as f64 * h;
        let v = f(u);
        sum += v;
        if x * (u.cosh() - 1.0) - nu * u > 45.0 {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Modified Bessel function of the second kind, `K_nu(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

/// Dilogarithm `Li2(y)` for `y` in `[0, 1]`.
pub fn dilog(y: f64) -> f64 {
    assert!((0.0..=1.0).contains(&y), "dilog argument outside [0, 1]");
    if y <= 0.5 {
        dilog_series(y)
    } else {
        // Euler reflection.
        let c = 1.0 - y;
        let log_term = if c == 0.0 { 0.0 } else { y.ln() * c.ln() };
        PI * PI / 6.0 - log_term - dilog_series(c)
    }
}

fn dilog_series(y: f64) -> f64 {
    let mut pow = y;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = pow / (kf * kf);
        sum += term;
        if term < 1e-18 * sum.max(1e-300) {
            break;
        }
        pow *= y;
    }
    sum
}

/// `int_y^1 log(1/(1-s)) ds / s = pi^2/6 - Li2(y)`, parameterised by
/// `c = 1 - y` so that arguments near `y = 1` keep full relative accuracy.
pub fn log_over_s_tail(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 {
        return 0.0;
    }
    let y = 1.0 - c;
    if c <= 0.5 {
        // pi^2/6 - Li2(1-c) = ln(1-c) ln(c) + Li2(c)
        (-c).ln_1p() * c.ln() + dilog_series(c)
    } else {
        PI * PI / 6.0 - dilog_series(y)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

use std::f64::consts::PI;

use gsp_winding::spectral::{
    builtin, covariance, covariance_derivative, moment_condition, nondegeneracy_margin, total_mass,
    Atom, CovarianceEval, SpectralMeasure,
};
use num_complex::Complex64;
use proptest::prelude::*;

const DENSITIES: [(&str, &[f64]); 6] = [
    ("sinc", &[]),
    ("gaussian", &[]),
    ("bessel_j0", &[]),
    ("ou_smooth", &[0.5]),
    ("ou_spectral", &[10.0]),
    ("power_cosine", &[0.25]),
];

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn total_masses() {
    for (name, params) in [
        ("sinc", &[][..]),
        ("atomic", &[1.0, 0.5, 3.0, 0.5]),
        ("gaussian", &[]),
    ] {
        let (m, _) = builtin(name, params).unwrap();
        assert!((total_mass(&m).unwrap() - 1.0).abs() < 1e-9, "{name}");
    }
}

#[test]
fn covariance_examples() {
    let (_, sinc) = builtin("sinc", &[]).unwrap();
    assert!(covariance(&sinc, 1.0).unwrap().norm() < 1e-15);
    assert_eq!(covariance(&sinc, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    let (m, g) = builtin("gaussian", &[]).unwrap();
    assert!((covariance(&g, 1.0).unwrap().re - (-0.5f64).exp()).abs() < 1e-15);
    let q = CovarianceEval::quadrature(m);
    assert!((covariance(&q, 1.0).unwrap() - (-0.5f64).exp()).norm() < 1e-9);

    let (_, a) = builtin("atomic", &[1.0, 0.5, 3.0, 0.5]).unwrap();
    for t in [0.0, 0.4, 2.0, 17.3] {
        let expected =
            0.5 * Complex64::from_polar(1.0, -t) + 0.5 * Complex64::from_polar(1.0, -3.0 * t);
        assert!((covariance(&a, t).unwrap() - expected).norm() < 1e-15);
    }
}

#[test]
fn bessel_density_transforms_to_j0() {
    let (m, eval) = builtin("bessel_j0", &[]).unwrap();
    let quad = CovarianceEval::quadrature(m);
    for t in [0.5f64, 1.0, 2.0] {
        // λ = sin θ removes the endpoint singularity of 1/(π√(1-λ²))
        let oracle = simpson(|th| (t * th.sin()).cos() / PI, -PI / 2.0, PI / 2.0, 2000);
        assert!(
            (covariance(&eval, t).unwrap().re - oracle).abs() < 1e-12,
            "t = {t}"
        );
        assert!(
            (covariance(&quad, t).unwrap() - oracle).norm() < 1e-9,
            "t = {t}"
        );
    }
}

#[test]
fn derivative_examples() {
    for (name, params) in DENSITIES {
        let (_, e) = builtin(name, params).unwrap();
        assert!(
            covariance_derivative(&e, 0.0, 1).unwrap().norm() < 1e-12,
            "{name}"
        );
    }
    let (_, a) = builtin("atomic", &[1.0, 0.5, 3.0, 0.5]).unwrap();
    assert!(
        (covariance_derivative(&a, 0.0, 1).unwrap() - Complex64::new(0.0, -2.0)).norm() < 1e-15
    );
    let (m, sinc) = builtin("sinc", &[]).unwrap();
    let second = -simpson(|l| l * l / (2.0 * PI), -PI, PI, 200);
    assert!((covariance_derivative(&sinc, 0.0, 2).unwrap().re - second).abs() < 1e-12);
    let q = CovarianceEval::quadrature(m);
    assert!((covariance_derivative(&q, 0.0, 2).unwrap().re + PI * PI / 3.0).abs() < 1e-9);
    assert!(covariance_derivative(&sinc, 0.0, 3).is_err());
}

#[test]
fn margins() {
    let (_, g) = builtin("gaussian", &[]).unwrap();
    assert!((nondegeneracy_margin(&g).unwrap() - 1.0).abs() < 1e-12);
    let (_, s) = builtin("sinc", &[]).unwrap();
    assert!((nondegeneracy_margin(&s).unwrap() - PI * PI / 3.0).abs() < 1e-12);
    let (_, a) = builtin("atomic", &[0.7, 1.0]).unwrap();
    assert!(nondegeneracy_margin(&a).unwrap().abs() < 1e-15);
    for (name, params) in DENSITIES {
        let (_, e) = builtin(name, params).unwrap();
        assert!(nondegeneracy_margin(&e).unwrap() > 0.0, "{name}");
    }
}

#[test]
fn moment_conditions() {
    for name in ["sinc", "gaussian"] {
        let (m, _) = builtin(name, &[]).unwrap();
        assert!(moment_condition(&m, 1.0).unwrap().finite, "{name}");
    }
    let (ou, _) = builtin("ou", &[]).unwrap();
    assert!(!moment_condition(&ou, 1.0).unwrap().finite);
}

#[test]
fn builtin_validation() {
    assert!(builtin("power_cosine", &[0.5]).is_err());
    assert!(builtin("power_cosine", &[0.0]).is_err());
    assert!(builtin("brownian", &[]).is_err());
    assert!(builtin("atomic", &[1.0]).is_err());
    assert!(builtin("atomic", &[1.0, 0.6]).is_err());
    let (m, _) = builtin("atomic", &[2.0, 1.0]).unwrap();
    assert!(m.is_degenerate());
}

#[test]
fn closed_forms_match_quadrature_on_a_grid() {
    for (name, params) in DENSITIES {
        let (m, closed) = builtin(name, params).unwrap();
        let quad = CovarianceEval::quadrature(m);
        let mut worst = 0.0f64;
        for i in 0..=40 {
            let t = -20.0 + i as f64;
            let (a, b) = (closed.point(t), quad.point(t));
            worst = worst
                .max((a.r - b.r).norm())
                .max((a.dr - b.dr).norm())
                .max((a.ddr - b.ddr).norm());
        }
        assert!(worst < 1e-6, "{name}: {worst}");
    }
}

fn measure_strategy() -> impl Strategy<Value = SpectralMeasure> {
    let atoms = prop::collection::vec((-6.0..6.0f64, 0.05..1.0f64), 0..4);
    (atoms, prop::option::of((0usize..6, 0.2..1.0f64))).prop_filter_map(
        "needs mass",
        |(atoms, dens)| {
            if atoms.is_empty() && dens.is_none() {
                return None;
            }
            let density_share = dens.map_or(0.0, |d| d.1);
            let raw: f64 = atoms.iter().map(|a| a.1).sum();
            let scale = if raw > 0.0 {
                (1.0 - density_share) / raw
            } else {
                0.0
            };
            let atoms: Vec<Atom> = atoms
                .into_iter()
                .map(|(freq, m)| Atom {
                    freq,
                    mass: m * scale,
                })
                .collect();
            let density = dens.map(|(k, w)| {
                let (name, params) = DENSITIES[k];
                let json =
                    format!(r#"{{"builtin": "{name}", "params": {params:?}, "weight": {w}}}"#);
                serde_json::from_str::<serde_json::Value>(&json).unwrap()
            });
            let mut doc = serde_json::json!({ "atoms": atoms });
            if let Some(d) = density {
                doc["density"] = d;
            }
            SpectralMeasure::from_json(&doc.to_string()).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_symmetry_and_bound(m in measure_strategy(), t in -40.0..40.0f64) {
        let e = CovarianceEval::closed_form(m);
        let (p, q) = (e.point(t), e.point(-t));
        prop_assert!((q.r - p.r.conj()).norm() < 1e-12);
        prop_assert!((q.dr + p.dr.conj()).norm() < 1e-12);
        prop_assert!((q.ddr - p.ddr.conj()).norm() < 1e-12);
        prop_assert!(p.r.norm() <= 1.0 + 1e-9);
        prop_assert!((e.point(0.0).r - 1.0).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip(m in measure_strategy()) {
        let back = SpectralMeasure::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }
}

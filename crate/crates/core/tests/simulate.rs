use gsp_winding::simulate::{self, FrequencyGrid};
use gsp_winding::spectral::builtin;
use gsp_winding::stats::{self, kolmogorov_p, McSettings};
use num_complex::Complex64;

fn single_atom(freq: f64) -> simulate::TrigSumProcess {
    let g = FrequencyGrid {
        frequencies: vec![freq],
        amplitudes: vec![1.0],
        periodization_period: f64::INFINITY,
    };
    simulate::sample_process(&g, 7)
}

#[test]
fn single_atom_winds_linearly() {
    let w = simulate::winding(&single_atom(2.0), 5.0, 0.1).unwrap();
    assert!((w.delta + 10.0).abs() < 1e-9, "{}", w.delta);
    let w = simulate::winding(&single_atom(-0.7), 30.0, 0.1).unwrap();
    assert!((w.delta - 21.0).abs() < 1e-9, "{}", w.delta);
}

#[test]
fn coarse_steps_are_refined() {
    // each unit step turns by -2 rad, more than the π/2 guard allows
    let w = simulate::winding(&single_atom(2.0), 5.0, 1.0).unwrap();
    assert!((w.delta + 10.0).abs() < 1e-9);
    assert!(w.refinements > 0);
    assert!(w.max_increment <= std::f64::consts::FRAC_PI_2);
}

fn gaussian_path(stream: u64) -> simulate::TrigSumProcess {
    let (m, _) = builtin("gaussian", &[]).unwrap();
    let g = stats::simulation_grid(&m, 40.0, &McSettings::default()).unwrap();
    simulate::sample_process_stream(&g, 11, stream)
}

#[test]
fn conjugate_path_negates_winding() {
    for s in 0..5 {
        let p = gaussian_path(s);
        let a = simulate::winding(&p, 40.0, 0.05).unwrap().delta;
        let b = simulate::winding(&p.conjugate(), 40.0, 0.05).unwrap().delta;
        assert!((a + b).abs() < 1e-9, "{a} {b}");
    }
}

#[test]
fn winding_is_stable_under_step_refinement() {
    for s in 0..5 {
        let p = gaussian_path(s);
        let a = simulate::winding(&p, 40.0, 0.1).unwrap().delta;
        let b = simulate::winding(&p, 40.0, 0.05).unwrap().delta;
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }
}

#[test]
fn winding_is_additive() {
    for s in 0..5 {
        let p = gaussian_path(s);
        let whole = simulate::winding_between(&p, 0.0, 40.0, 0.05)
            .unwrap()
            .delta;
        let left = simulate::winding_between(&p, 0.0, 13.7, 0.05)
            .unwrap()
            .delta;
        let right = simulate::winding_between(&p, 13.7, 40.0, 0.05)
            .unwrap()
            .delta;
        assert!((whole - left - right).abs() < 1e-9);
    }
}

#[test]
fn winding_matches_phase_difference_mod_two_pi() {
    let p = gaussian_path(3);
    let d = simulate::winding(&p, 40.0, 0.05).unwrap().delta;
    let net = (p.value(40.0) / p.value(0.0)).arg();
    let k = (d - net) / (2.0 * std::f64::consts::PI);
    assert!((k - k.round()).abs() < 1e-9);
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let (m, _) = builtin("sinc", &[]).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| stats::mc_winding(&m, 5.0, 64, 3, &McSettings::default()).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.deltas(), b.deltas());
    assert_eq!(a.report, b.report);
}

#[test]
fn derivative_matches_central_differences() {
    let p = gaussian_path(1);
    let t = 3.3;
    let (_, df) = simulate::evaluate(&p, t);
    let err = |h: f64| ((p.value(t + h) - p.value(t - h)) / (2.0 * h) - df).norm();
    let order = (err(0.02) / err(0.01)).log2();
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn coefficients_are_standard_complex_normal() {
    let n = 100_000u64;
    let z: Vec<Complex64> = (0..n)
        .map(|k| simulate::standard_complex_normal(5, 0, k))
        .collect();
    let nf = n as f64;
    let mean: Complex64 = z.iter().sum::<Complex64>() / nf;
    let second = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / nf;
    let pseudo: Complex64 = z.iter().map(|v| v * v).sum::<Complex64>() / nf;
    // se of the mean parts is sqrt(1/2n); E|ζ|⁴ = 2 so se of E|ζ|² is 1/sqrt(n)
    assert!(mean.norm() < 4.0 * (0.5 / nf).sqrt(), "{mean}");
    assert!((second - 1.0).abs() < 4.0 / nf.sqrt(), "{second}");
    assert!(pseudo.norm() < 4.0 * (1.0 / nf).sqrt(), "{pseudo}");
}

#[test]
fn empirical_covariance_matches_kernel() {
    for (name, t, expected) in [("sinc", 1.0, 0.0), ("gaussian", 1.0, (-0.5f64).exp())] {
        let (m, _) = builtin(name, &[]).unwrap();
        let g = stats::simulation_grid(&m, 10.0, &McSettings::default()).unwrap();
        let est = simulate::empirical_covariance(&g, 20_000, &[0.0, t], 17);
        assert!((est[0].value.re - 1.0).abs() < 3.0 * est[0].se_re);
        let e = est[1];
        assert!(
            (e.value.re - expected).abs() < 3.0 * e.se_re,
            "{name}: {e:?}"
        );
        assert!(e.value.im.abs() < 3.0 * e.se_im, "{name}: {e:?}");
    }
}

#[test]
fn symmetric_measure_has_zero_mean_winding() {
    let (m, _) = builtin("gaussian", &[]).unwrap();
    let r = stats::mc_winding(&m, 50.0, 2000, 23, &McSettings::default())
        .unwrap()
        .report;
    assert_eq!(r.failures, 0);
    assert!(r.mean.abs() < 4.0 * r.se_mean, "{r:?}");
}

fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn winding_law_is_stationary() {
    let (m, _) = builtin("sinc", &[]).unwrap();
    let n = 2000;
    let at = |start, seed| {
        let s = McSettings {
            start,
            ..McSettings::default()
        };
        stats::mc_winding(&m, 8.0, n, seed, &s).unwrap().deltas()
    };
    let d = two_sample_ks(&at(0.0, 1), &at(37.0, 2));
    let p = kolmogorov_p(d, n / 2);
    assert!(p > 1e-3, "D = {d}, p = {p}");
}

#[test]
fn paths_csv_has_one_row_per_path() {
    let (m, _) = builtin("gaussian", &[]).unwrap();
    let run = stats::mc_winding(&m, 2.0, 10, 1, &McSettings::default()).unwrap();
    let csv = simulate::paths_to_csv(&run.paths);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("path_index,T,delta,n_segments,refinements")
    );
    assert_eq!(lines.count(), 10);
}

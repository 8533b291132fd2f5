//! Binomial sequences against an independent running-sum oracle for log C(n, k).

use proptest::prelude::*;
use varadhan::functionals::ldp_term;
use varadhan::ldp_lab::{cramer_sequence, empirical_rate, tightness_scan, GridInterpolant};

fn exact_log_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut log_choose = 0.0;
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        if k > 0 {
            log_choose += ((n - k + 1) as f64 / k as f64).ln();
        }
        out.push(log_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln());
    }
    out
}

fn cramer(p: f64, x: f64) -> f64 {
    let part = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
    part(x, p) + part(1.0 - x, 1.0 - p)
}

#[test]
fn log_weights_match_the_oracle() {
    let seq = cramer_sequence(0.5, &[4096]).unwrap();
    let got = seq.entries()[0].measure.log_weights();
    let want = exact_log_pmf(4096, 0.5);
    for k in 0..=4096 {
        assert!((got[k] - want[k]).abs() < 1e-9, "k={k}: {} vs {}", got[k], want[k]);
    }
    // the value quoted for x = 0.25 is -n I(x) up to the half-log correction
    let approx = -4096.0 * 0.130812;
    assert!((want[1024] - approx).abs() < 10.0);
}

#[test]
fn weights_sum_to_one_up_to_2_pow_16() {
    let schedule: Vec<u64> = (0..=16).map(|e| 1u64 << e).collect();
    let seq = cramer_sequence(0.37, &schedule).unwrap();
    for e in seq.entries() {
        let s: f64 = e.measure.weights().iter().sum();
        assert!((s - 1.0).abs() <= 1e-12, "n={}: {s}", e.n);
    }
}

#[test]
fn rate_converges_inside_the_stirling_envelope() {
    for p in [0.5, 0.3, 0.01] {
        let seq = cramer_sequence(p, &[256, 1024, 4096, 65536]).unwrap();
        for e in seq.entries() {
            let n = e.n as f64;
            let rate = empirical_rate(e).unwrap();
            for (k, (&i_n, &lw)) in rate.values().iter().zip(e.measure.log_weights()).enumerate() {
                if lw < -10.0 * n {
                    continue;
                }
                let x = e.points[k];
                let diff = (i_n - cramer(p, x)).abs();
                let (k, m) = (k as f64, n - k as f64);
                let envelope = if k == 0.0 || m == 0.0 {
                    1e-12
                } else {
                    (2.0 * std::f64::consts::PI * n * x * (1.0 - x)).ln() / (2.0 * n)
                        + (1.0 / k + 1.0 / m) / (12.0 * n)
                        + 1e-6
                };
                assert!(diff <= envelope, "p={p} n={n} k={k}: {diff} > {envelope}");
            }
        }
    }
}

#[test]
fn empirical_rate_examples() {
    let seq = cramer_sequence(0.5, &[16, 64, 256, 1024, 4096]).unwrap();
    for e in seq.entries() {
        let rate = empirical_rate(e).unwrap();
        let n = e.n as f64;
        let at_mean = rate.values()[(e.n / 2) as usize];
        // only the half-log Stirling term survives at the mean
        let leading = (std::f64::consts::PI * n / 2.0).ln() / (2.0 * n);
        assert!((at_mean - leading).abs() <= 1.0 / (4.0 * n), "n={n}: {at_mean} vs {leading}");
        if e.n >= 1024 {
            assert!(at_mean <= 0.005, "n={n}: {at_mean}");
        }
    }
    let last = seq.entries().last().unwrap();
    let i = empirical_rate(last).unwrap().values()[1024];
    assert!((i - 0.130812).abs() <= 0.005);
    assert!(i > cramer(0.5, 0.25));
}

#[test]
fn tightness_diameters_approach_the_analytic_sublevel_set() {
    let a = cramer(0.5, 0.25);
    let seq = cramer_sequence(0.5, &[64, 256, 1024, 4096, 16384]).unwrap();
    let rows = tightness_scan(&seq, a).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| (r.diameter - 0.5).abs()).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errors:?}");
    assert!(errors.last().unwrap() < &0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_functions_are_exact_for_every_n(
        p in 0.05f64..0.95,
        alpha in -3.0f64..3.0,
        beta in -2.0f64..2.0,
        n in 1u64..3000,
    ) {
        let seq = cramer_sequence(p, &[n]).unwrap();
        let e = &seq.entries()[0];
        let f = GridInterpolant::from_fn(|x| alpha * x + beta).unwrap();
        let values: Vec<f64> = e.points.iter().map(|x| f.eval(*x)).collect();
        let got = ldp_term(&e.measure, n).unwrap().eval_values(&values);
        let want = beta + (1.0 - p + p * alpha.exp()).ln();
        prop_assert!((got - want).abs() <= 1e-10, "{} vs {}", got, want);
    }
}

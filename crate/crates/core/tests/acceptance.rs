//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use varadhan::axioms::{self, Property, Witness};
use varadhan::convex_duality::{conjugate_j, kl_divergence, exponential_tilt, recover_l_from_j, AscentOptions, RelativeEntropy};
use varadhan::duality::{dual_rate, PitSchedule};
use varadhan::functionals::{broken, ldp_term, log_integral, sup_form, tail_limsup, tail_witness};
use varadhan::ldp_lab::{cramer_sequence, empirical_rate, estimate_limit, reference_functions, GridInterpolant};
use varadhan::sampling::{rate_vec, rng, simplex_with_floor, uniform_vec};
use varadhan::space::{make_measure, validate_decreasing};
use varadhan::{BoundedFunction, FiniteSpace, RateFunction};

/// Outcome of one criterion: failures found and a serialized transcript used
/// for the determinism criterion.
struct Outcome {
    failures: Vec<String>,
    transcript: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: vec![],
            transcript: String::new(),
        }
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn record(&mut self, value: &impl serde::Serialize) {
        self.transcript.push_str(&serde_json::to_string(value).unwrap());
        self.transcript.push('\n');
    }
}

fn discrete(m: usize) -> Arc<FiniteSpace> {
    Arc::new(FiniteSpace::discrete(m).unwrap())
}

fn sup_form_round_trip() -> Outcome {
    let mut out = Outcome::new();
    let sched = PitSchedule::default();
    let mut r = rng(42);
    for inst in 0..50 {
        let m = r.gen_range(2..=50);
        let s = discrete(m);
        let rate = rate_vec(&mut r, m, 10.0, 0.2);
        let l0 = r.gen_range(-5.0..5.0);
        let l = sup_form(&RateFunction::new(&s, rate.clone()).unwrap(), l0).unwrap();
        let report = dual_rate(&l, &sched).unwrap();
        out.record(&report.to_json());
        out.require((report.base_value - l0).abs() <= 1e-9, || format!("instance {inst}: L0"));
        for (x, (got, want)) in report.rate.values().iter().zip(&rate).enumerate() {
            if want.is_finite() {
                out.require((got - want).abs() <= 1e-9, || {
                    format!("instance {inst} point {x}: rate {got} vs {want}")
                });
            } else {
                out.require(got.is_infinite() && report.convergence[x].divergent, || {
                    format!("instance {inst} point {x}: infinite entry not flagged divergent")
                });
            }
        }
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let f = BoundedFunction::new(&s, uniform_vec(&mut r, m, -5.0, 5.0)).unwrap();
            worst = worst.max(report.gap(&l, &f).unwrap().abs());
        }
        out.require(worst <= 1e-9, || format!("instance {inst}: gap {worst:e}"));
    }
    out
}

fn log_integral_dual() -> Outcome {
    let mut out = Outcome::new();
    let sched = PitSchedule::default();
    let mut r = rng(7);
    for inst in 0..20 {
        let m = r.gen_range(2..=20);
        let s = discrete(m);
        let w = simplex_with_floor(&mut r, m, 0.01);
        let nu = make_measure(&s, &w).unwrap();
        let l = log_integral(&nu);
        let report = dual_rate(&l, &sched).unwrap();
        out.record(&report.to_json());
        for (x, got) in report.rate.values().iter().enumerate() {
            let want = -w[x].ln();
            out.require((got - want).abs() <= 1e-9, || format!("instance {inst} point {x}: {got} vs {want}"));
        }
        let mut best = 0.0f64;
        for _ in 0..50 {
            let f = BoundedFunction::new(&s, uniform_vec(&mut r, m, -5.0, 5.0)).unwrap();
            best = best.max(report.gap(&l, &f).unwrap());
        }
        out.record(&best);
        out.require(best > 0.01, || format!("instance {inst}: largest gap only {best}"));
    }
    out
}

fn tail_counterexample() -> Outcome {
    let mut out = Outcome::new();
    let grid: Vec<f64> = (0..=32).map(f64::from).collect();
    let s = Arc::new(FiniteSpace::half_line(&grid).unwrap());
    let l = tail_limsup(&s).unwrap();
    for p in [Property::Monotone, Property::Translation, Property::Maximal] {
        let rep = axioms::check(&l, p, 1000, 42).unwrap();
        out.record(&rep);
        out.require(rep.violations == 0, || format!("{} has {} violations", p.name(), rep.violations));
    }
    let terms = (0..=40)
        .map(|k| tail_witness(&grid, 2f64.powi(k)).to_function(&s).unwrap())
        .collect();
    let seq = validate_decreasing(terms).unwrap();
    let rep = axioms::check_sigma_continuity(&l, &seq).unwrap();
    out.record(&rep);
    out.require(!rep.passed(), || "sigma-continuity check passed".into());
    let traj = rep.trajectory.unwrap_or_default();
    out.require(traj.iter().all(|v| *v == 1.0), || format!("trajectory {traj:?}"));
    out.require(l.base_value() == 0.0, || "L(0) is not 0".into());
    let report = dual_rate(&l, &PitSchedule::default()).unwrap();
    out.record(&report.to_json());
    for x in s.proper_points() {
        out.require(report.rate.values()[x].is_infinite() && report.convergence[x].divergent, || {
            format!("point {x}: rate {}", report.rate.values()[x])
        });
    }
    out
}

fn entropy_duality() -> Outcome {
    let mut out = Outcome::new();
    let opts = AscentOptions::default();
    let mut r = rng(2024);
    for inst in 0..100 {
        let m = r.gen_range(2..=10);
        let s = discrete(m);
        let nu = make_measure(&s, &simplex_with_floor(&mut r, m, 0.01)).unwrap();
        let mu = make_measure(&s, &simplex_with_floor(&mut r, m, 0.01)).unwrap();
        let f = BoundedFunction::new(&s, uniform_vec(&mut r, m, -5.0, 5.0)).unwrap();

        let j = conjugate_j(&log_integral(&nu), &mu, &opts).unwrap();
        let kl = kl_divergence(&mu, &nu).unwrap();
        out.record(&j.to_json());
        out.require((j.value - kl).abs() <= 1e-6, || format!("instance {inst}: J {} vs KL {kl}", j.value));

        let rec = recover_l_from_j(&RelativeEntropy::new(nu.clone()), 0.0, &f, &opts).unwrap();
        let want = log_integral(&nu).eval(&f).unwrap();
        out.record(&rec.to_json());
        out.require((rec.value - want).abs() <= 1e-6, || {
            format!("instance {inst}: recovered {} vs {want}", rec.value)
        });
        let tilt = exponential_tilt(&nu, &f).unwrap();
        let tv: f64 = 0.5
            * rec
                .maximizer
                .values()
                .iter()
                .zip(tilt.weights())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        out.require(tv <= 1e-5, || format!("instance {inst}: maximizer off the tilt by {tv:e}"));
    }
    out
}

fn cramer_rate(p: f64, x: f64) -> f64 {
    let part = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
    part(x, p) + part(1.0 - x, 1.0 - p)
}

fn dense_grid_sup(f: &GridInterpolant, p: f64) -> f64 {
    let k = 10_000;
    (0..k)
        .map(|i| {
            let x = i as f64 / (k - 1) as f64;
            f.eval(x) - cramer_rate(p, x)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn cramer_limit() -> Outcome {
    let mut out = Outcome::new();
    let seq = cramer_sequence(0.5, &[16, 64, 256, 1024, 4096]).unwrap();
    for (name, f) in reference_functions() {
        let rep = estimate_limit(&seq, &f).unwrap();
        let oracle = dense_grid_sup(&f, 0.5);
        out.record(&rep);
        out.require((rep.extrapolated - oracle).abs() <= 0.01, || {
            format!("{name}: extrapolated {} vs dense-grid {oracle}", rep.extrapolated)
        });
    }
    let linear = GridInterpolant::from_fn(|x| x).unwrap();
    let exact = ((1.0 + 1f64.exp()) / 2.0).ln();
    for e in seq.entries() {
        let values: Vec<f64> = e.points.iter().map(|x| linear.eval(*x)).collect();
        let v = ldp_term(&e.measure, e.n).unwrap().eval_values(&values);
        out.require((v - exact).abs() <= 1e-10, || format!("linear F at n={}: {v} vs {exact}", e.n));
    }
    let last = seq.entries().last().unwrap();
    let rate = empirical_rate(last).unwrap();
    let at = rate.values()[1024];
    out.record(&at);
    out.require((at - 0.130812).abs() <= 0.005, || format!("I_4096(0.25) = {at}"));
    out.require((cramer_rate(0.5, 0.25) - 0.130812).abs() <= 1e-6, || "analytic rate at 0.25".into());
    out
}

fn axiom_suite() -> Outcome {
    let mut out = Outcome::new();
    let s = discrete(6);
    let nu = make_measure(&s, &[0.05, 0.3, 0.1, 0.25, 0.2, 0.1]).unwrap();
    let grid: Vec<f64> = (0..=10).map(f64::from).collect();
    let t = Arc::new(FiniteSpace::half_line(&grid).unwrap());
    let handles = [
        log_integral(&nu),
        sup_form(&RateFunction::new(&s, vec![0.0, 2.0, f64::INFINITY, 0.5, 7.0, 1.0]).unwrap(), 0.7).unwrap(),
        ldp_term(&nu, 100).unwrap(),
        tail_limsup(&t).unwrap(),
    ];
    for l in &handles {
        for p in [Property::Monotone, Property::Translation, Property::Lipschitz] {
            let rep = axioms::check(l, p, 1000, 42).unwrap();
            out.record(&rep);
            out.require(rep.violations == 0, || format!("{} {}: {} violations", l.name(), p.name(), rep.violations));
        }
    }
    let two = discrete(2);
    let uniform = log_integral(&make_measure(&two, &[0.5, 0.5]).unwrap());
    let gap = axioms::witness_excess(&uniform, Property::Maximal, &Witness::pair(vec![1.0, 0.0], vec![0.0, 1.0]));
    out.record(&gap);
    out.require((gap - 0.379885).abs() <= 1e-6, || format!("maximality gap {gap}"));
    let rep = axioms::check_maximal(&uniform, 1000, 42).unwrap();
    out.record(&rep);
    out.require(rep.violations > 0 && rep.witness.is_some(), || "log_integral passed maximality".into());

    let b = discrete(4);
    for (l, p) in [
        (broken::negated_evaluation(&b), Property::Monotone),
        (broken::exp_sum(&b), Property::Translation),
        (broken::doubled_max(&b), Property::Lipschitz),
    ] {
        let rep = axioms::check(&l, p, 1000, 42).unwrap();
        out.record(&rep);
        out.require(rep.witness.is_some(), || format!("{} produced no witness", l.name()));
    }
    out
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 6] = [
        (1, "sup-form round trip through the pit dual", sup_form_round_trip, Some(Duration::from_secs(10))),
        (2, "log-integral dual is -log weights with a strict gap", log_integral_dual, None),
        (3, "tail limsup counterexample", tail_counterexample, None),
        (4, "entropy duality and tilt maximizer", entropy_duality, Some(Duration::from_secs(30))),
        (5, "binomial limit against the dense-grid sup", cramer_limit, Some(Duration::from_secs(20))),
        (6, "axiom suite and broken handles", axiom_suite, None),
    ];
    let mut all_ok = true;
    let mut transcripts = Vec::new();
    for (id, title, run, limit) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            outcome.require(elapsed <= limit, || format!("took {elapsed:?}, limit {limit:?}"));
        }
        report(id, title, elapsed, &outcome.failures);
        all_ok &= outcome.failures.is_empty();
        transcripts.push((run, outcome.transcript));
    }

    let start = Instant::now();
    let drift: Vec<String> = transcripts
        .iter()
        .enumerate()
        .filter(|(_, (run, first))| run().transcript != *first)
        .map(|(i, _)| format!("criterion {} output changed on rerun", i + 1))
        .collect();
    report(7, "identical reports on rerun", start.elapsed(), &drift);
    all_ok &= drift.is_empty();

    if !all_ok {
        std::process::exit(1);
    }
}

fn report(id: usize, title: &str, elapsed: Duration, failures: &[String]) {
    let tag = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {title} ({:.2}s)", elapsed.as_secs_f64());
    for f in failures.iter().take(10) {
        println!("       {f}");
    }
    if failures.len() > 10 {
        println!("       ... {} more", failures.len() - 10);
    }
}

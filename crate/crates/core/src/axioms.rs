//! Randomized, seeded checks of the functional axioms.
//!
//! Every check draws one independent input per trial from a generator seeded
//! with `seed + trial`, computes an *excess* (how far the inequality or
//! identity is violated, positive means violated) and counts trials whose
//! excess is above the tolerance. The worst trial becomes the witness, and
//! [`witness_excess`] recomputes its excess from the witness alone.
//!
//! Input distribution: function entries uniform on `[-5, 5]`, order
//! perturbations uniform on `[0, 5]`, constants uniform on `[-10, 10]`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::FunctionalHandle;
use crate::numeric::{max_of, min_of};
use crate::sampling::{rng, uniform_vec};
use crate::space::{sup_distance_values, DecreasingSequence};

/// Tolerance for exact identities.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Largest residual for which a decreasing sequence counts as reaching zero.
pub const VANISHING_RESIDUAL: f64 = 1e-6;

const THETAS: [f64; 3] = [0.5, 0.25, 0.125];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// `F ≤ G ⇒ L(F) ≤ L(G)`.
    Monotone,
    /// `L(F ∨ G) ≥ L(F) ∨ L(G)`, equivalent to monotonicity.
    MonotoneLattice,
    /// `L(F + c) = L(F) + c`.
    Translation,
    /// `L(F ∨ G) = L(F) ∨ L(G)`.
    Maximal,
    /// `inf(F − G) ≤ L(F) − L(G)` and `|L(F) − L(G)| ≤ ‖F − G‖∞`.
    Lipschitz,
    /// `L(θF + (1−θ)G) ≤ θL(F) + (1−θ)L(G)`.
    Convex,
    /// `L(F_n) → L(0)` along a sequence decreasing to zero.
    SigmaContinuity,
    /// Translation plus `Φ(F+c) ≤ Φ(F) + c + θ(Φ(2F)/2 − Φ(F))`.
    ConstPreservingTranslation,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Monotone => "monotone",
            Property::MonotoneLattice => "monotone_lattice",
            Property::Translation => "translation",
            Property::Maximal => "maximal",
            Property::Lipschitz => "lipschitz",
            Property::Convex => "convex",
            Property::SigmaContinuity => "sigma_continuity",
            Property::ConstPreservingTranslation => "const_preserving_translation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Property::Monotone,
            Property::MonotoneLattice,
            Property::Translation,
            Property::Maximal,
            Property::Lipschitz,
            Property::Convex,
            Property::SigmaContinuity,
            Property::ConstPreservingTranslation,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

/// The inputs of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub functions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Witness {
    pub fn pair(f: Vec<f64>, g: Vec<f64>) -> Self {
        Self {
            trial: 0,
            functions: vec![f, g],
            constant: None,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub property: Property,
    pub functional: String,
    pub trials: usize,
    pub violations: usize,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// `L(F_n)` along the sequence, for σ-continuity checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<f64>>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn max_pointwise(f: &[f64], g: &[f64]) -> Vec<f64> {
    f.iter().zip(g).map(|(a, b)| a.max(*b)).collect()
}

/// Recomputes the excess of a witness; positive means the property fails.
pub fn witness_excess(l: &FunctionalHandle, property: Property, w: &Witness) -> f64 {
    let eval = |v: &[f64]| l.eval_values(v);
    let fs = &w.functions;
    match property {
        Property::Monotone => eval(&fs[0]) - eval(&fs[1]),
        Property::MonotoneLattice => {
            eval(&fs[0]).max(eval(&fs[1])) - eval(&max_pointwise(&fs[0], &fs[1]))
        }
        Property::Translation => translation_excess(l, &fs[0], w.constant.unwrap_or(0.0)),
        Property::Maximal => {
            (eval(&max_pointwise(&fs[0], &fs[1])) - eval(&fs[0]).max(eval(&fs[1]))).abs()
        }
        Property::Lipschitz => {
            let (lf, lg) = (eval(&fs[0]), eval(&fs[1]));
            let diff: Vec<f64> = fs[0].iter().zip(&fs[1]).map(|(a, b)| a - b).collect();
            let lower = min_of(&diff) - (lf - lg);
            let lipschitz = (lf - lg).abs() - sup_distance_values(&fs[0], &fs[1]);
            lower.max(lipschitz)
        }
        Property::Convex => {
            let t = w.theta.unwrap_or(0.5);
            let mix: Vec<f64> = fs[0]
                .iter()
                .zip(&fs[1])
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect();
            eval(&mix) - t * eval(&fs[0]) - (1.0 - t) * eval(&fs[1])
        }
        Property::SigmaContinuity => {
            let last = fs.last().expect("sequence witness has terms");
            let space = l.space();
            let residual = space.proper_points().fold(0.0f64, |a, i| a.max(last[i].abs()));
            (eval(last) - l.base_value()).abs() - residual
        }
        Property::ConstPreservingTranslation => {
            let c = w.constant.unwrap_or(0.0);
            let t = w.theta.unwrap_or(0.5);
            let f = &fs[0];
            let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
            let doubled: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
            let phi_f = eval(f);
            let chain = eval(&shifted) - phi_f - c - t * (eval(&doubled) / 2.0 - phi_f);
            chain.max(translation_excess(l, f, c))
        }
    }
}

fn translation_excess(l: &FunctionalHandle, f: &[f64], c: f64) -> f64 {
    let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
    (l.eval_values(&shifted) - l.eval_values(f) - c).abs()
}

fn sample(property: Property, m: usize, trial: usize, seed: u64) -> Witness {
    let mut r = rng(seed.wrapping_add(trial as u64));
    let f = uniform_vec(&mut r, m, -5.0, 5.0);
    let mut w = Witness {
        trial,
        functions: vec![],
        constant: None,
        theta: None,
    };
    match property {
        Property::Monotone => {
            let g = f.iter().map(|v| v + r.gen_range(0.0..5.0)).collect();
            w.functions = vec![f, g];
        }
        Property::MonotoneLattice | Property::Maximal | Property::Lipschitz => {
            let g = uniform_vec(&mut r, m, -5.0, 5.0);
            w.functions = vec![f, g];
        }
        Property::Convex => {
            let g = uniform_vec(&mut r, m, -5.0, 5.0);
            w.functions = vec![f, g];
            w.theta = Some(r.gen_range(0.0..=1.0));
        }
        Property::Translation => {
            w.constant = Some(r.gen_range(-10.0..10.0));
            w.functions = vec![f];
        }
        Property::ConstPreservingTranslation => {
            w.constant = Some(r.gen_range(-10.0..10.0));
            w.theta = Some(THETAS[trial % THETAS.len()]);
            w.functions = vec![f];
        }
        Property::SigmaContinuity => unreachable!("sequences are supplied, not sampled"),
    }
    w
}

fn run_randomized(l: &FunctionalHandle, property: Property, trials: usize, seed: u64) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::InvalidOptions("trials must be at least 1".into()));
    }
    let m = l.space().len();
    let outcomes: Vec<(f64, Witness)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = sample(property, m, t, seed);
            (witness_excess(l, property, &w), w)
        })
        .collect();
    Ok(summarize(l, property, trials, seed, outcomes))
}

fn summarize(
    l: &FunctionalHandle,
    property: Property,
    trials: usize,
    seed: u64,
    outcomes: Vec<(f64, Witness)>,
) -> CheckReport {
    let mut violations = 0;
    let mut worst: Option<(f64, Witness)> = None;
    for (excess, w) in outcomes {
        if excess > IDENTITY_TOL || excess.is_nan() {
            violations += 1;
        }
        let beats = match &worst {
            None => true,
            Some((best, _)) => excess > *best || (excess.is_nan() && !best.is_nan()),
        };
        if beats {
            worst = Some((excess, w));
        }
    }
    let (worst_excess, witness) = worst.expect("at least one trial");
    CheckReport {
        property,
        functional: l.name().to_string(),
        trials,
        violations,
        worst_violation: if worst_excess.is_nan() { f64::NAN } else { worst_excess.max(0.0) },
        tolerance: IDENTITY_TOL,
        seed,
        witness: (violations > 0).then_some(witness),
        trajectory: None,
    }
}

pub fn check_monotone(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::Monotone, trials, seed)
}

/// Monotonicity in its lattice form, `L(F ∨ G) ≥ max(L(F), L(G))`.
pub fn check_monotone_lattice(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::MonotoneLattice, trials, seed)
}

pub fn check_translation(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::Translation, trials, seed)
}

pub fn check_maximal(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::Maximal, trials, seed)
}

pub fn check_lipschitz(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::Lipschitz, trials, seed)
}

pub fn check_convex(l: &FunctionalHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    run_randomized(l, Property::Convex, trials, seed)
}

/// Checks `|L(F_last) − L(0)| ≤ tol + ‖F_last‖` along a supplied sequence.
///
/// A pass is evidence for σ-continuity; a failure is a counterexample.
pub fn check_sigma_continuity(l: &FunctionalHandle, seq: &DecreasingSequence) -> Result<CheckReport> {
    if !l.space().same_as(seq.space()) {
        return Err(Error::SpaceMismatch);
    }
    if seq.residual() > VANISHING_RESIDUAL {
        return Err(Error::SequenceNotVanishing {
            residual: seq.residual(),
        });
    }
    let trajectory: Vec<f64> = seq.terms().iter().map(|t| l.eval_values(t.values())).collect();
    let witness = Witness {
        trial: 0,
        functions: seq.terms().iter().map(|t| t.values().to_vec()).collect(),
        constant: None,
        theta: None,
    };
    let excess = witness_excess(l, Property::SigmaContinuity, &witness);
    let violated = !(excess <= IDENTITY_TOL);
    Ok(CheckReport {
        property: Property::SigmaContinuity,
        functional: l.name().to_string(),
        trials: seq.terms().len(),
        violations: usize::from(violated),
        worst_violation: excess.max(0.0),
        tolerance: IDENTITY_TOL,
        seed: 0,
        witness: violated.then_some(witness),
        trajectory: Some(trajectory),
    })
}

/// For a convex `Φ` with `Φ(c) = c`, checks translation together with the
/// convexity bound it is derived from, at `θ ∈ {1/2, 1/4, 1/8}`.
pub fn check_const_preserving_implies_translation(
    phi: &FunctionalHandle,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !phi.capabilities().convex {
        return Err(Error::PreconditionFailed(format!(
            "{} does not claim convexity",
            phi.name()
        )));
    }
    let m = phi.space().len();
    let mut r = rng(seed);
    let mut constants = vec![0.0];
    constants.extend(uniform_vec(&mut r, 16, -10.0, 10.0));
    for c in constants {
        let value = phi.eval_values(&vec![c; m]);
        if !((value - c).abs() <= IDENTITY_TOL) {
            return Err(Error::PreconditionFailed(format!(
                "Φ({c}) = {value}, not the constant itself"
            )));
        }
    }
    run_randomized(phi, Property::ConstPreservingTranslation, trials, seed)
}

/// Runs a randomized check by property name.
pub fn check(l: &FunctionalHandle, property: Property, trials: usize, seed: u64) -> Result<CheckReport> {
    match property {
        Property::ConstPreservingTranslation => check_const_preserving_implies_translation(l, trials, seed),
        Property::SigmaContinuity => Err(Error::InvalidOptions(
            "sigma continuity is checked along a supplied sequence".into(),
        )),
        p => run_randomized(l, p, trials, seed),
    }
}

/// Largest excess of the monotonicity check when a constant of the given
/// size is added, a convenience for callers probing `F = G + c`.
pub fn translation_gap(l: &FunctionalHandle, g: &[f64], c: f64) -> (f64, f64) {
    let f: Vec<f64> = g.iter().map(|v| v + c).collect();
    let diff = l.eval_values(&f) - l.eval_values(g);
    let lower = min_of(&f.iter().zip(g).map(|(a, b)| a - b).collect::<Vec<_>>());
    let upper = max_of(&f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>());
    (diff - lower, upper - diff.abs())
}

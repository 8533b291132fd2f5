//! Conjugation between functionals on functions and rates on measures.
//!
//! * [`conjugate_j`] computes `J(μ) = L(0) + sup_F { ⟨μ, F⟩ − L(F) }` by
//!   gradient ascent over real vectors.
//! * [`recover_l_from_j`] computes `L0 + sup_μ { ⟨μ, F⟩ − J(μ) }` by entropic
//!   mirror ascent on the simplex.
//! * [`kl_divergence`] and [`exponential_tilt`] are the closed forms for the
//!   log-integral functional, where `J` is relative entropy and the maximizing
//!   measure is the tilt `e^F ν / ∫ e^F dν`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended;
use crate::functionals::FunctionalHandle;
use crate::numeric::{dot, max_of, min_of};
use crate::space::{make_measure, BoundedFunction, ProbabilityMeasure};

/// Which representative of `F + const` the conjugate ascent keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// `mean(F) = 0`.
    Mean,
    /// `F(point) = 0`.
    Anchor(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions {
    pub step_init: f64,
    pub max_iters: usize,
    pub grad_tolerance: f64,
    /// Objective values above this are declared `+∞`.
    pub value_cap: f64,
    pub finite_difference_h: f64,
    /// Use closed-form gradients when the functional or rate provides them.
    pub exact_gradient: bool,
    pub gauge: Gauge,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            step_init: 1.0,
            max_iters: 10_000,
            grad_tolerance: 1e-8,
            value_cap: 1e6,
            finite_difference_h: 1e-6,
            exact_gradient: true,
            gauge: Gauge::Mean,
        }
    }
}

impl AscentOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_init", self.step_init),
            ("grad_tolerance", self.grad_tolerance),
            ("value_cap", self.value_cap),
            ("finite_difference_h", self.finite_difference_h),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidOptions(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Maximizer {
    Function(BoundedFunction),
    Measure(ProbabilityMeasure),
}

impl Maximizer {
    pub fn values(&self) -> &[f64] {
        match self {
            Maximizer::Function(f) => f.values(),
            Maximizer::Measure(m) => m.weights(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConjugateReport {
    /// The optimal value, `+∞` when the objective passed the value cap.
    pub value: f64,
    pub maximizer: Maximizer,
    pub iterations: usize,
    pub converged: bool,
    /// Stationarity measure at the returned maximizer.
    pub gradient_norm: f64,
}

/// JSON form: `{"value": r|"inf", "maximizer": [...], "iterations": k, "converged": b}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugateReportDoc {
    #[serde(with = "extended::scalar")]
    pub value: f64,
    pub maximizer: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ConjugateReport {
    pub fn to_json(&self) -> ConjugateReportDoc {
        ConjugateReportDoc {
            value: self.value,
            maximizer: self.maximizer.values().to_vec(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn pin(values: &mut [f64], gauge: Gauge) {
    match gauge {
        Gauge::Mean => {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.iter_mut().for_each(|v| *v -= mean);
        }
        Gauge::Anchor(i) => {
            let shift = values[i];
            values.iter_mut().for_each(|v| *v -= shift);
        }
    }
}

fn project(grad: &mut [f64], gauge: Gauge) {
    match gauge {
        Gauge::Mean => {
            let mean = grad.iter().sum::<f64>() / grad.len() as f64;
            grad.iter_mut().for_each(|v| *v -= mean);
        }
        Gauge::Anchor(i) => grad[i] = 0.0,
    }
}

/// Barzilai-Borwein step from the last move, doubling the old step when the
/// curvature estimate is not negative. Plain doubling zigzags on ridges.
fn next_step(f: &[f64], cand: &[f64], g: &[f64], g_c: &[f64], step: f64) -> f64 {
    let s: Vec<f64> = cand.iter().zip(f).map(|(a, b)| a - b).collect();
    let y: Vec<f64> = g_c.iter().zip(g).map(|(a, b)| a - b).collect();
    let curvature = -dot(&s, &y);
    if curvature > 0.0 {
        (dot(&s, &s) / curvature).clamp(1e-12, 1e12)
    } else {
        step * 2.0
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut x = at.to_vec();
    (0..at.len())
        .map(|i| {
            x[i] = at[i] + h;
            let up = f(&x);
            x[i] = at[i] - h;
            let down = f(&x);
            x[i] = at[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `J(μ) = L(0) + sup_F { ⟨μ, F⟩ − L(F) }`.
///
/// The objective is invariant under `F ↦ F + c` (for probability `μ` and a
/// translation-equivariant `L`), so the ascent works in the gauge chosen by
/// `opts.gauge`. Backtracking accepts a step when it satisfies the Armijo
/// condition or when the directional derivative at the trial point is still
/// nonnegative, which for a concave objective already certifies ascent.
pub fn conjugate_j(l: &FunctionalHandle, mu: &ProbabilityMeasure, opts: &AscentOptions) -> Result<ConjugateReport> {
    opts.validate()?;
    if !l.space().same_as(mu.space()) {
        return Err(Error::SpaceMismatch);
    }
    let m = l.space().len();
    if let Gauge::Anchor(i) = opts.gauge {
        if i >= m {
            return Err(Error::PointNotInSpace(i));
        }
    }
    if !l.capabilities().convex {
        log::warn!(
            "{} does not claim convexity; computing the conjugate anyway",
            l.name()
        );
    }
    let weights = mu.weights();
    let base = l.base_value();
    let objective = |f: &[f64]| dot(weights, f) - l.eval_values(f) + base;
    let gradient = |f: &[f64]| {
        let grad_l = match l.gradient(f) {
            Some(g) if opts.exact_gradient => g,
            _ => central_difference(|v| l.eval_values(v), f, opts.finite_difference_h),
        };
        let mut g: Vec<f64> = weights.iter().zip(&grad_l).map(|(w, d)| w - d).collect();
        project(&mut g, opts.gauge);
        g
    };

    let mut f = vec![0.0; m];
    let mut phi = objective(&f);
    let mut g = gradient(&f);
    let mut step = opts.step_init;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        let gn = norm(&g);
        if gn <= opts.grad_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while step > 1e-20 {
            let mut cand: Vec<f64> = f.iter().zip(&g).map(|(x, d)| x + step * d).collect();
            pin(&mut cand, opts.gauge);
            let phi_c = objective(&cand);
            if phi_c > opts.value_cap {
                return Ok(ConjugateReport {
                    value: f64::INFINITY,
                    maximizer: Maximizer::Function(BoundedFunction::new(l.space(), cand)?),
                    iterations,
                    converged: true,
                    gradient_norm: gn,
                });
            }
            let g_c = gradient(&cand);
            let armijo = phi_c >= phi + 1e-4 * step * gn * gn;
            let still_ascending =
                phi_c >= phi - 4.0 * f64::EPSILON * phi.abs().max(1.0) && dot(&g_c, &g) >= 0.0;
            if armijo || still_ascending {
                step = next_step(&f, &cand, &g, &g_c, step);
                f = cand;
                phi = phi_c;
                g = g_c;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = norm(&g) <= opts.grad_tolerance;
            break;
        }
    }
    if !converged && norm(&g) <= opts.grad_tolerance {
        converged = true;
    }
    let gradient_norm = norm(&g);
    Ok(ConjugateReport {
        value: phi,
        maximizer: Maximizer::Function(BoundedFunction::new(l.space(), f)?),
        iterations,
        converged,
        gradient_norm,
    })
}

/// Relative entropy `Σ μ log(μ/ν)`; `+∞` unless `μ ≪ ν`.
pub fn kl_divergence(mu: &ProbabilityMeasure, nu: &ProbabilityMeasure) -> Result<f64> {
    if !mu.space().same_as(nu.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(kl_values(mu.weights(), mu.log_weights(), nu.log_weights()))
}

fn kl_values(mu: &[f64], log_mu: &[f64], log_nu: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((&w, &lw), &lv) in mu.iter().zip(log_mu).zip(log_nu) {
        if w == 0.0 {
            continue;
        }
        if lv == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        total += w * (lw - lv);
    }
    total
}

/// The measure proportional to `e^F ν`.
pub fn exponential_tilt(nu: &ProbabilityMeasure, f: &BoundedFunction) -> Result<ProbabilityMeasure> {
    if !nu.space().same_as(f.space()) {
        return Err(Error::SpaceMismatch);
    }
    let lw: Vec<f64> = nu
        .log_weights()
        .iter()
        .zip(f.values())
        .map(|(a, b)| a + b)
        .collect();
    ProbabilityMeasure::from_log_weights(nu.space(), &lw)
}

/// A `[0, ∞]`-valued function on the probability simplex of a space.
///
/// Inputs are weight vectors that sum to one.
pub trait MeasureRate: Send + Sync {
    fn value(&self, mu: &[f64]) -> f64;

    /// Gradient of an extension of `J` off the simplex, if known. Only its
    /// tangential part is used.
    fn gradient(&self, _mu: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// The finitely many measures where `J < ∞`, when that set is finite.
    fn effective_domain(&self) -> Option<Vec<Vec<f64>>> {
        None
    }
}

impl<F> MeasureRate for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, mu: &[f64]) -> f64 {
        self(mu)
    }
}

/// `J(μ) = KL(μ ‖ ν)`.
#[derive(Debug, Clone)]
pub struct RelativeEntropy {
    reference: ProbabilityMeasure,
}

impl RelativeEntropy {
    pub fn new(reference: ProbabilityMeasure) -> Self {
        Self { reference }
    }
}

impl MeasureRate for RelativeEntropy {
    fn value(&self, mu: &[f64]) -> f64 {
        let log_mu: Vec<f64> = mu.iter().map(|w| w.ln()).collect();
        kl_values(mu, &log_mu, self.reference.log_weights())
    }

    fn gradient(&self, mu: &[f64]) -> Option<Vec<f64>> {
        if mu.iter().any(|w| *w <= 0.0) {
            return None;
        }
        Some(
            mu.iter()
                .zip(self.reference.log_weights())
                .map(|(w, lv)| w.ln() - lv + 1.0)
                .collect(),
        )
    }
}

/// `J(μ₀) = 0` and `J = ∞` elsewhere.
#[derive(Debug, Clone)]
pub struct DiracRate {
    at: Vec<f64>,
}

impl DiracRate {
    pub fn new(at: &ProbabilityMeasure) -> Self {
        Self {
            at: at.weights().to_vec(),
        }
    }
}

impl MeasureRate for DiracRate {
    fn value(&self, mu: &[f64]) -> f64 {
        let same = mu.len() == self.at.len() && mu.iter().zip(&self.at).all(|(a, b)| (a - b).abs() <= 1e-12);
        if same {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn effective_domain(&self) -> Option<Vec<Vec<f64>>> {
        Some(vec![self.at.clone()])
    }
}

const INTERIOR_MASS: f64 = 1e-9;
const SNAP_MASS: f64 = 1e-7;

/// Directional derivatives of `J` toward each vertex, `∂_i J − ⟨μ, ∇J⟩`,
/// by central differences that stay on the simplex.
fn tangent_difference(j: &dyn MeasureRate, mu: &[f64], h: f64) -> Vec<f64> {
    let m = mu.len();
    let mut out = Vec::with_capacity(m);
    let mut buf = vec![0.0; m];
    let eval_along = |i: usize, t: f64, buf: &mut Vec<f64>| {
        for k in 0..m {
            buf[k] = mu[k] * (1.0 - t);
        }
        buf[i] += t;
        j.value(buf)
    };
    let center = j.value(mu);
    for i in 0..m {
        let back = if mu[i] < 1.0 { mu[i] / (1.0 - mu[i]) } else { h };
        let hi = h.min(0.5 * back);
        let up = eval_along(i, h, &mut buf);
        let d = if hi > 0.0 {
            let down = eval_along(i, -hi, &mut buf);
            // unequal steps: fit a parabola through the three samples
            (hi * hi * (up - center) + h * h * (center - down)) / (h * hi * (h + hi))
        } else {
            (up - center) / h
        };
        out.push(d);
    }
    out
}

/// `L0 + sup_μ { ⟨μ, F⟩ − J(μ) }` over the probability simplex.
///
/// Uses multiplicative-weights updates `μ ← μ e^{t g} / Z` with `g` the
/// objective's gradient. Iterates start at the uniform measure; when `J` is
/// infinite there, at the centre of the face spanned by the vertices where `J`
/// is finite, and failing that `1e-9`-inside the best such vertex.
/// Coordinates whose mass ends below `1e-7` are snapped to zero if that does
/// not lower the objective.
pub fn recover_l_from_j(
    j: &dyn MeasureRate,
    l0: f64,
    f: &BoundedFunction,
    opts: &AscentOptions,
) -> Result<ConjugateReport> {
    opts.validate()?;
    let space = f.space();
    let fv = f.values();
    let m = fv.len();
    let objective = |mu: &[f64]| dot(mu, fv) - j.value(mu);

    if let Some(domain) = j.effective_domain() {
        let best = domain
            .into_iter()
            .map(|mu| (objective(&mu), mu))
            .filter(|(v, _)| v.is_finite())
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let (value, mu) = best.ok_or(Error::InfeasibleJ)?;
        let n = 1;
        return Ok(ConjugateReport {
            value: l0 + value,
            maximizer: Maximizer::Measure(make_measure(space, &mu)?),
            iterations: n,
            converged: true,
            gradient_norm: 0.0,
        });
    }

    let uniform = vec![1.0 / m as f64; m];
    let mut start = None;
    if objective(&uniform).is_finite() {
        start = Some(uniform);
    } else {
        let vertices: Vec<(f64, Vec<f64>)> = (0..m)
            .map(|i| {
                let mut v = vec![0.0; m];
                v[i] = 1.0;
                (objective(&v), v)
            })
            .filter(|(v, _)| v.is_finite())
            .collect();
        if !vertices.is_empty() {
            // centre of the face spanned by the feasible vertices
            let k = vertices.len() as f64;
            let centre: Vec<f64> = (0..m)
                .map(|i| vertices.iter().map(|(_, v)| v[i]).sum::<f64>() / k)
                .collect();
            let (_, best) = vertices
                .iter()
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("nonempty");
            let mixed: Vec<f64> = best
                .iter()
                .map(|x| x * (1.0 - m as f64 * INTERIOR_MASS) + INTERIOR_MASS)
                .collect();
            start = [centre, mixed, best.clone()]
                .into_iter()
                .find(|c| objective(c).is_finite());
        }
    }
    let mut mu = start.ok_or(Error::InfeasibleJ)?;
    let mut phi = objective(&mu);

    let gradient = |mu: &[f64]| -> Vec<f64> {
        let dj = match j.gradient(mu) {
            Some(g) if opts.exact_gradient => g,
            _ => tangent_difference(j, mu, opts.finite_difference_h),
        };
        fv.iter().zip(&dj).map(|(a, b)| a - b).collect()
    };
    // measured on the support: off it `g` may be -inf (J infinite there)
    let stationarity = |mu: &[f64], g: &[f64]| {
        let on_support = || mu.iter().zip(g).filter(|(w, _)| **w > 0.0);
        let mean: f64 = on_support().map(|(w, x)| w * x).sum();
        on_support()
            .map(|(w, x)| w * (x - mean) * (x - mean))
            .sum::<f64>()
            .sqrt()
    };

    let mut step = opts.step_init;
    let mut iterations = 0;
    let mut g = gradient(&mu);
    let mut s = stationarity(&mu, &g);
    while iterations < opts.max_iters && s > opts.grad_tolerance {
        iterations += 1;
        let top = max_of(&g);
        let mut accepted = false;
        while step > 1e-20 {
            let raw: Vec<f64> = mu
                .iter()
                .zip(&g)
                .map(|(w, x)| w * (step * (x - top)).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            let cand: Vec<f64> = raw.iter().map(|w| w / z).collect();
            let phi_c = objective(&cand);
            if phi_c.is_finite() {
                let armijo = phi_c >= phi + 1e-4 * step * s * s;
                let flat = phi_c >= phi - 4.0 * f64::EPSILON * phi.abs().max(1.0);
                let g_c = gradient(&cand);
                let s_c = stationarity(&cand, &g_c);
                if armijo || (flat && s_c < s) {
                    mu = cand;
                    phi = phi_c;
                    g = g_c;
                    s = s_c;
                    step = (step * 2.0).min(1e12);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = s <= opts.grad_tolerance;

    if min_of(&mu) < SNAP_MASS {
        let kept: Vec<f64> = mu.iter().map(|w| if *w < SNAP_MASS { 0.0 } else { *w }).collect();
        let z: f64 = kept.iter().sum();
        let snapped: Vec<f64> = kept.iter().map(|w| w / z).collect();
        let phi_s = objective(&snapped);
        if phi_s >= phi {
            mu = snapped;
            phi = phi_s;
        }
    }

    Ok(ConjugateReport {
        value: l0 + phi,
        maximizer: Maximizer::Measure(make_measure(space, &mu)?),
        iterations,
        converged,
        gradient_norm: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{linear, log_integral};
    use crate::space::FiniteSpace;
    use std::sync::Arc;

    fn space(m: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::discrete(m).unwrap())
    }

    fn measure(s: &Arc<FiniteSpace>, w: &[f64]) -> ProbabilityMeasure {
        make_measure(s, w).unwrap()
    }

    #[test]
    fn kl_examples() {
        let s = space(2);
        let nu = measure(&s, &[0.5, 0.5]);
        assert_eq!(kl_divergence(&nu, &nu).unwrap(), 0.0);
        let mu = measure(&s, &[0.75, 0.25]);
        let direct = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
        let got = kl_divergence(&mu, &nu).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.130812).abs() < 1e-6);
        let point = measure(&s, &[1.0, 0.0]);
        assert_eq!(kl_divergence(&nu, &point).unwrap(), f64::INFINITY);
        assert!((kl_divergence(&point, &nu).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn tilt_examples() {
        let s = space(3);
        let nu = measure(&s, &[0.2, 0.3, 0.5]);
        let c = BoundedFunction::constant(&s, 4.2).unwrap();
        let t = exponential_tilt(&nu, &c).unwrap();
        assert!(t.total_variation(&nu).unwrap() < 1e-15);

        let s2 = space(2);
        let nu = measure(&s2, &[0.5, 0.5]);
        let f = BoundedFunction::new(&s2, vec![3f64.ln(), 0.0]).unwrap();
        let t = exponential_tilt(&nu, &f).unwrap();
        assert!((t.weights()[0] - 0.75).abs() < 1e-15);
        let point = measure(&s2, &[1.0, 0.0]);
        let t = exponential_tilt(&point, &BoundedFunction::new(&s2, vec![-3.0, 50.0]).unwrap()).unwrap();
        assert_eq!(t.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn conjugate_vanishes_at_base_measure() {
        let s = space(3);
        let nu = measure(&s, &[0.2, 0.3, 0.5]);
        let r = conjugate_j(&log_integral(&nu), &nu, &AscentOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert!(r.converged);
        assert!(r.maximizer.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn conjugate_matches_kl() {
        let s = space(2);
        let nu = measure(&s, &[0.5, 0.5]);
        let mu = measure(&s, &[0.75, 0.25]);
        let r = conjugate_j(&log_integral(&nu), &mu, &AscentOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - kl_divergence(&mu, &nu).unwrap()).abs() < 1e-10);
        // maximizer is log(dμ/dν) with mean zero
        let want = [1.5f64.ln(), 0.5f64.ln()];
        let mean = (want[0] + want[1]) / 2.0;
        for (got, w) in r.maximizer.values().iter().zip(want) {
            assert!((got - (w - mean)).abs() < 1e-6);
        }
    }

    #[test]
    fn conjugate_at_the_boundary() {
        let s = space(2);
        let nu = measure(&s, &[0.5, 0.5]);
        let mu = measure(&s, &[1.0, 0.0]);
        let r = conjugate_j(&log_integral(&nu), &mu, &AscentOptions::default()).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn conjugate_with_finite_differences() {
        let s = space(3);
        let nu = measure(&s, &[0.2, 0.3, 0.5]);
        let mu = measure(&s, &[0.5, 0.1, 0.4]);
        let opts = AscentOptions {
            exact_gradient: false,
            grad_tolerance: 1e-7,
            ..Default::default()
        };
        let r = conjugate_j(&log_integral(&nu), &mu, &opts).unwrap();
        assert!((r.value - kl_divergence(&mu, &nu).unwrap()).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn conjugate_of_linear_functional_is_infinite_off_its_measure() {
        let s = space(2);
        let w = measure(&s, &[0.5, 0.5]);
        let r = conjugate_j(&linear(&w), &measure(&s, &[0.6, 0.4]), &AscentOptions::default()).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        let r = conjugate_j(&linear(&w), &w, &AscentOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn recover_entropy_example() {
        let s = space(2);
        let nu = measure(&s, &[0.5, 0.5]);
        let f = BoundedFunction::new(&s, vec![3f64.ln(), 0.0]).unwrap();
        let r = recover_l_from_j(&RelativeEntropy::new(nu), 0.0, &f, &AscentOptions::default()).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-6);
        assert!((r.maximizer.values()[0] - 0.75).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn recover_with_finite_differences() {
        let s = space(3);
        let nu = measure(&s, &[0.2, 0.3, 0.5]);
        let f = BoundedFunction::new(&s, vec![1.0, -0.5, 0.2]).unwrap();
        let opts = AscentOptions {
            exact_gradient: false,
            grad_tolerance: 1e-7,
            ..Default::default()
        };
        let r = recover_l_from_j(&RelativeEntropy::new(nu.clone()), 0.0, &f, &opts).unwrap();
        let want = log_integral(&nu).eval(&f).unwrap();
        assert!((r.value - want).abs() < 1e-8, "{r:?} vs {want}");
    }

    #[test]
    fn recover_dirac_rate() {
        let s = space(3);
        let mu0 = measure(&s, &[0.1, 0.6, 0.3]);
        let f = BoundedFunction::new(&s, vec![2.0, -1.0, 0.5]).unwrap();
        let r = recover_l_from_j(&DiracRate::new(&mu0), 1.5, &f, &AscentOptions::default()).unwrap();
        assert!((r.value - (1.5 + mu0.integrate(&f).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn recover_constant_function() {
        let s = space(4);
        let nu = measure(&s, &[0.1, 0.2, 0.3, 0.4]);
        let c = BoundedFunction::constant(&s, -2.5).unwrap();
        let r = recover_l_from_j(&RelativeEntropy::new(nu), 0.75, &c, &AscentOptions::default()).unwrap();
        assert!((r.value - (0.75 - 2.5)).abs() < 1e-12);
    }

    #[test]
    fn recover_infeasible() {
        let s = space(2);
        let f = BoundedFunction::zero(&s);
        let never = |_: &[f64]| f64::INFINITY;
        assert!(matches!(
            recover_l_from_j(&never, 0.0, &f, &AscentOptions::default()),
            Err(Error::InfeasibleJ)
        ));
    }

    #[test]
    fn recover_snaps_to_the_boundary() {
        // linear J: the sup sits at a vertex, interior mass decays geometrically
        let s = space(3);
        let cost = [0.5, 0.0, 1.0];
        let j = move |mu: &[f64]| dot(mu, &cost);
        let f = BoundedFunction::new(&s, vec![1.0, 0.0, 0.2]).unwrap();
        let r = recover_l_from_j(&j, 0.0, &f, &AscentOptions::default()).unwrap();
        assert_eq!(r.maximizer.values(), &[1.0, 0.0, 0.0]);
        assert!((r.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn recover_starts_on_the_feasible_face() {
        // J = KL(·‖ν) with ν on a face: J is infinite at the centre
        let s = space(3);
        let nu = measure(&s, &[0.5, 0.5, 0.0]);
        let f = BoundedFunction::new(&s, vec![0.0, 1.0, 3.0]).unwrap();
        let r = recover_l_from_j(&RelativeEntropy::new(nu.clone()), 0.0, &f, &AscentOptions::default()).unwrap();
        assert_eq!(r.maximizer.values()[2], 0.0);
        let want = log_integral(&nu).eval(&f).unwrap();
        assert!((r.value - want).abs() < 1e-6, "{} vs {want}", r.value);
    }

    #[test]
    fn options_validation() {
        let bad = AscentOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AscentOptions {
            grad_tolerance: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_json() {
        let s = space(2);
        let w = measure(&s, &[0.5, 0.5]);
        let r = conjugate_j(&linear(&w), &measure(&s, &[0.9, 0.1]), &AscentOptions::default()).unwrap();
        let j = serde_json::to_value(r.to_json()).unwrap();
        assert_eq!(j["value"], "inf");
        assert_eq!(j["converged"], true);
    }
}

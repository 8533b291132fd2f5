//! Functionals `L: C_b(X) → R` on finite spaces.
//!
//! A [`Functional`] is anything that maps a value vector to a real number.
//! [`FunctionalHandle`] wraps one behind an `Arc`, caches `L(0)` and checks
//! that inputs live on the right space. The capability flags are what the
//! functional *claims* about itself; [`crate::axioms`] is what checks them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{max_of, tilt, weighted_log_sum_exp};
use crate::space::{BoundedFunction, FiniteSpace, ProbabilityMeasure, RateFunction};

/// Declared structural properties of a functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Capabilities {
    pub maximal: bool,
    pub convex: bool,
    pub sigma_continuous: bool,
}

pub trait Functional: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn space(&self) -> &Arc<FiniteSpace>;

    fn capabilities(&self) -> Capabilities;

    /// `L(F)` for a value vector of the space's length. Must be deterministic.
    fn evaluate(&self, values: &[f64]) -> f64;

    /// Exact gradient at `values`, if the functional knows it.
    fn gradient(&self, _values: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Shared, immutable handle to a functional with `L(0)` cached.
#[derive(Clone)]
pub struct FunctionalHandle {
    inner: Arc<dyn Functional>,
    base_value: f64,
}

impl fmt::Debug for FunctionalHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalHandle")
            .field("name", &self.inner.name())
            .field("base_value", &self.base_value)
            .field("capabilities", &self.inner.capabilities())
            .finish()
    }
}

impl FunctionalHandle {
    pub fn new(functional: impl Functional + 'static) -> Self {
        Self::from_arc(Arc::new(functional))
    }

    pub fn from_arc(inner: Arc<dyn Functional>) -> Self {
        let zero = vec![0.0; inner.space().len()];
        let base_value = inner.evaluate(&zero);
        Self { inner, base_value }
    }

    /// Wraps a closure; handy for ad-hoc and deliberately broken functionals.
    pub fn from_fn<E>(
        name: impl Into<String>,
        space: &Arc<FiniteSpace>,
        capabilities: Capabilities,
        eval: E,
    ) -> Self
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(ClosureFunctional {
            name: name.into(),
            space: Arc::clone(space),
            capabilities,
            eval: Box::new(eval),
        })
    }

    pub fn name(&self) -> &str {
        self.inner.name()
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.inner.space()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    /// `L(0)`.
    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn eval(&self, f: &BoundedFunction) -> Result<f64> {
        if !self.space().same_as(f.space()) {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.inner.evaluate(f.values()))
    }

    /// Evaluates on a raw value vector. Panics on a length mismatch.
    pub fn eval_values(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.space().len(), "value vector length");
        self.inner.evaluate(values)
    }

    pub fn gradient(&self, values: &[f64]) -> Option<Vec<f64>> {
        self.inner.gradient(values)
    }
}

struct ClosureFunctional {
    name: String,
    space: Arc<FiniteSpace>,
    capabilities: Capabilities,
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for ClosureFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFunctional").field("name", &self.name).finish()
    }
}

impl Functional for ClosureFunctional {
    fn name(&self) -> &str {
        &self.name
    }
    fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }
    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }
    fn evaluate(&self, values: &[f64]) -> f64 {
        (self.eval)(values)
    }
}

/// `(1/n) log Σ_x exp(n F(x)) ν(x)` for a finite nonnegative measure `ν`.
///
/// `n = 1` is the log-integral functional; larger `n` gives the terms of the
/// large-deviation limit. Summation is always shifted by the maximum exponent.
#[derive(Debug, Clone)]
pub struct ScaledLogIntegral {
    space: Arc<FiniteSpace>,
    log_weights: Vec<f64>,
    scale: u64,
    name: &'static str,
}

impl ScaledLogIntegral {
    /// Log-integral against a finite, not necessarily normalized, measure.
    pub fn with_mass(space: &Arc<FiniteSpace>, weights: &[f64]) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::LengthMismatch {
                expected: space.len(),
                found: weights.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(Error::NegativeWeight { index: i, value: w });
            }
            if w.is_infinite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::AllZero);
        }
        Ok(Self {
            space: Arc::clone(space),
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            scale: 1,
            name: "log_integral",
        })
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }
}

impl Functional for ScaledLogIntegral {
    fn name(&self) -> &str {
        self.name
    }
    fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            maximal: false,
            convex: true,
            sigma_continuous: true,
        }
    }
    fn evaluate(&self, values: &[f64]) -> f64 {
        let n = self.scale as f64;
        weighted_log_sum_exp(&self.log_weights, values, n) / n
    }
    /// The tilted measure `e^{nF} ν / ∫ e^{nF} dν`.
    fn gradient(&self, values: &[f64]) -> Option<Vec<f64>> {
        Some(tilt(&self.log_weights, values, self.scale as f64))
    }
}

/// `L(F) = log ∫ e^F dν`.
pub fn log_integral(nu: &ProbabilityMeasure) -> FunctionalHandle {
    FunctionalHandle::new(ScaledLogIntegral {
        space: Arc::clone(nu.space()),
        log_weights: nu.log_weights().to_vec(),
        scale: 1,
        name: "log_integral",
    })
}

/// `L(F) = log ∫ e^F dν` for a finite measure of arbitrary total mass.
pub fn log_integral_with_mass(space: &Arc<FiniteSpace>, weights: &[f64]) -> Result<FunctionalHandle> {
    Ok(FunctionalHandle::new(ScaledLogIntegral::with_mass(space, weights)?))
}

/// `L_n(F) = (1/n) log ∫ e^{nF} dμ`.
pub fn ldp_term(mu: &ProbabilityMeasure, n: u64) -> Result<FunctionalHandle> {
    if n == 0 {
        return Err(Error::InvalidOptions("ldp_term needs n >= 1".into()));
    }
    Ok(FunctionalHandle::new(ScaledLogIntegral {
        space: Arc::clone(mu.space()),
        log_weights: mu.log_weights().to_vec(),
        scale: n,
        name: if n == 1 { "log_integral" } else { "ldp_term" },
    }))
}

/// `L(F) = L0 + max_x { F(x) − I(x) }`.
#[derive(Debug, Clone)]
pub struct SupForm {
    rate: RateFunction,
    l0: f64,
}

impl SupForm {
    pub fn rate(&self) -> &RateFunction {
        &self.rate
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }
}

pub(crate) fn sup_minus_rate(rate: &[f64], values: &[f64]) -> f64 {
    rate.iter()
        .zip(values)
        .filter(|(r, _)| r.is_finite())
        .map(|(r, v)| v - r)
        .fold(f64::NEG_INFINITY, f64::max)
}

impl Functional for SupForm {
    fn name(&self) -> &str {
        "sup_form"
    }
    fn space(&self) -> &Arc<FiniteSpace> {
        self.rate.space()
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            maximal: true,
            convex: true,
            sigma_continuous: true,
        }
    }
    fn evaluate(&self, values: &[f64]) -> f64 {
        self.l0 + sup_minus_rate(self.rate.values(), values)
    }
}

pub fn sup_form(rate: &RateFunction, l0: f64) -> Result<FunctionalHandle> {
    if rate.is_all_infinite() {
        return Err(Error::AllInfiniteRate);
    }
    if !l0.is_finite() {
        return Err(Error::InvalidOptions("L0 must be finite".into()));
    }
    Ok(FunctionalHandle::new(SupForm {
        rate: rate.clone(),
        l0,
    }))
}

/// A function on a half-line grid that is constant beyond the last grid
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFunction {
    grid_values: Vec<f64>,
    tail_value: f64,
}

impl TailFunction {
    pub fn new(grid_values: Vec<f64>, tail_value: f64) -> Result<Self> {
        if let Some(i) = grid_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if !tail_value.is_finite() {
            return Err(Error::NonFinite {
                index: grid_values.len(),
            });
        }
        Ok(Self {
            grid_values,
            tail_value,
        })
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    pub fn tail_value(&self) -> f64 {
        self.tail_value
    }

    /// Encodes the function on a [`FiniteSpace::half_line`] space: grid values
    /// followed by the tail value at the horizon point.
    pub fn to_function(&self, space: &Arc<FiniteSpace>) -> Result<BoundedFunction> {
        let h = space.horizon().ok_or(Error::NotTailSpace)?;
        if h != self.grid_values.len() || space.len() != h + 1 {
            return Err(Error::LengthMismatch {
                expected: space.len().saturating_sub(1),
                found: self.grid_values.len(),
            });
        }
        let mut v = self.grid_values.clone();
        v.push(self.tail_value);
        BoundedFunction::new(space, v)
    }
}

/// `L(F) = limsup_{x→∞} F(x)` on eventually-constant functions: the value at
/// the horizon.
#[derive(Debug, Clone)]
pub struct TailLimsup {
    space: Arc<FiniteSpace>,
    horizon: usize,
}

impl Functional for TailLimsup {
    fn name(&self) -> &str {
        "tail_limsup"
    }
    fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            maximal: true,
            convex: true,
            sigma_continuous: false,
        }
    }
    fn evaluate(&self, values: &[f64]) -> f64 {
        values[self.horizon]
    }
}

pub fn tail_limsup(space: &Arc<FiniteSpace>) -> Result<FunctionalHandle> {
    let horizon = space.horizon().ok_or(Error::NotTailSpace)?;
    Ok(FunctionalHandle::new(TailLimsup {
        space: Arc::clone(space),
        horizon,
    }))
}

/// Evaluates the tail functional on a [`TailFunction`] directly.
pub fn eval_tail(handle: &FunctionalHandle, f: &TailFunction) -> Result<f64> {
    handle.eval(&f.to_function(handle.space())?)
}

/// The witness family `F_n(x) = min(1, x/n)` with limit 1 at infinity.
pub fn tail_witness(grid: &[f64], n: f64) -> TailFunction {
    TailFunction {
        grid_values: grid.iter().map(|x| (x / n).min(1.0)).collect(),
        tail_value: 1.0,
    }
}

/// `L(F) = ⟨μ, F⟩`, a linear functional.
pub fn linear(mu: &ProbabilityMeasure) -> FunctionalHandle {
    let w = mu.weights().to_vec();
    FunctionalHandle::from_fn(
        "linear",
        mu.space(),
        Capabilities {
            maximal: false,
            convex: true,
            sigma_continuous: true,
        },
        move |v| crate::numeric::dot(&w, v),
    )
}

/// Deliberately broken functionals used to exercise the checkers.
pub mod broken {
    use super::*;

    /// `L(F) = −F(x₀)`: reverses order.
    pub fn negated_evaluation(space: &Arc<FiniteSpace>) -> FunctionalHandle {
        FunctionalHandle::from_fn("negated_evaluation", space, Capabilities::default(), |v| -v[0])
    }

    /// `L(F) = Σ e^F`: monotone, but not additive in constants.
    pub fn exp_sum(space: &Arc<FiniteSpace>) -> FunctionalHandle {
        FunctionalHandle::from_fn("exp_sum", space, Capabilities::default(), |v| {
            v.iter().map(|x| x.exp()).sum()
        })
    }

    /// `L(F) = 2 max F`: slope two.
    pub fn doubled_max(space: &Arc<FiniteSpace>) -> FunctionalHandle {
        FunctionalHandle::from_fn("doubled_max", space, Capabilities::default(), |v| 2.0 * max_of(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::make_measure;

    fn space(m: usize) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::discrete(m).unwrap())
    }

    fn f(s: &Arc<FiniteSpace>, v: &[f64]) -> BoundedFunction {
        BoundedFunction::new(s, v.to_vec()).unwrap()
    }

    #[test]
    fn log_integral_examples() {
        let s = space(2);
        let nu = make_measure(&s, &[0.5, 0.5]).unwrap();
        let l = log_integral(&nu);
        assert_eq!(l.eval(&f(&s, &[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(l.base_value(), 0.0);
        // oracle: ln(0.5·3 + 0.5·1)
        let direct = (0.5f64 * 3.0 + 0.5 * 1.0).ln();
        let got = l.eval(&f(&s, &[3f64.ln(), 0.0])).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.693147).abs() < 1e-6);

        let point = log_integral(&make_measure(&s, &[1.0, 0.0]).unwrap());
        assert_eq!(point.eval(&f(&s, &[-1.3, 42.0])).unwrap(), -1.3);
        assert!(!l.capabilities().maximal && l.capabilities().convex);
    }

    #[test]
    fn log_integral_handles_huge_arguments() {
        let s = space(2);
        let l = log_integral(&make_measure(&s, &[0.5, 0.5]).unwrap());
        let v = l.eval(&f(&s, &[1000.0, 1000.0])).unwrap();
        assert!((v - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn sup_form_examples() {
        let s = space(2);
        let l = sup_form(&RateFunction::new(&s, vec![0.0, f64::INFINITY]).unwrap(), 0.0).unwrap();
        assert_eq!(l.eval(&f(&s, &[0.7, 99.0])).unwrap(), 0.7);
        let l = sup_form(&RateFunction::new(&s, vec![0.0, 1.0]).unwrap(), 0.0).unwrap();
        assert_eq!(l.eval(&f(&s, &[0.2, 1.5])).unwrap(), 0.5);
        let l = sup_form(&RateFunction::new(&s, vec![0.0, 3.0]).unwrap(), 2.5).unwrap();
        assert_eq!(l.eval(&f(&s, &[1.25, 1.25])).unwrap(), 3.75);
        assert_eq!(l.base_value(), 2.5);
    }

    #[test]
    fn sup_form_rejects_all_infinite_rate() {
        let s = space(2);
        let r = RateFunction::new(&s, vec![f64::INFINITY; 2]).unwrap();
        assert!(matches!(sup_form(&r, 0.0), Err(Error::AllInfiniteRate)));
    }

    #[test]
    fn ldp_term_examples() {
        let s = space(3);
        let mu = make_measure(&s, &[0.2, 0.3, 0.5]).unwrap();
        let x = f(&s, &[0.4, -2.0, 1.1]);
        let one = ldp_term(&mu, 1).unwrap().eval(&x).unwrap();
        assert_eq!(one.to_bits(), log_integral(&mu).eval(&x).unwrap().to_bits());

        let s2 = space(2);
        let mu = make_measure(&s2, &[0.5, 0.5]).unwrap();
        let got = ldp_term(&mu, 64).unwrap().eval(&f(&s2, &[1.0, 0.0])).unwrap();
        let oracle = 1.0 + (0.5 * (1.0 + (-64f64).exp())).ln() / 64.0;
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.98917).abs() < 1e-5);

        for n in [1, 7, 300, 5000] {
            let c = ldp_term(&mu, n).unwrap().eval(&f(&s2, &[-0.8, -0.8])).unwrap();
            assert!((c + 0.8).abs() < 1e-15, "n={n}: {c}");
        }
        assert!(ldp_term(&mu, 0).is_err());
    }

    #[test]
    fn ldp_term_stays_in_range() {
        let s = space(4);
        let mu = make_measure(&s, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = f(&s, &[0.5, -1.0, 2.0, 0.0]);
        for n in 1..200 {
            let v = ldp_term(&mu, n).unwrap().eval(&x).unwrap();
            assert!((-1.0..=2.0).contains(&v));
        }
    }

    #[test]
    fn tail_limsup_examples() {
        let grid: Vec<f64> = (0..=8).map(f64::from).collect();
        let s = Arc::new(FiniteSpace::half_line(&grid).unwrap());
        let l = tail_limsup(&s).unwrap();
        let anything = TailFunction::new(grid.iter().map(|x| x.sin()).collect(), 0.0).unwrap();
        assert_eq!(eval_tail(&l, &anything).unwrap(), 0.0);
        for n in [1.0, 2.0, 100.0, 1e9] {
            assert_eq!(eval_tail(&l, &tail_witness(&grid, n)).unwrap(), 1.0);
        }
        let c = TailFunction::new(vec![-2.0; grid.len()], -2.0).unwrap();
        assert_eq!(eval_tail(&l, &c).unwrap(), -2.0);
        assert!(!l.capabilities().sigma_continuous);
        assert!(tail_limsup(&space(3)).is_err());
    }

    #[test]
    fn eval_refuses_other_spaces() {
        let l = log_integral(&ProbabilityMeasure::uniform(&space(2)));
        let other = Arc::new(FiniteSpace::line(&[0.0, 1.0]).unwrap());
        assert!(matches!(l.eval(&f(&other, &[0.0, 0.0])), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn non_probability_mass_shifts_base_value() {
        let s = space(2);
        let l = log_integral_with_mass(&s, &[1.0, 1.0]).unwrap();
        assert!((l.base_value() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_integral_gradient_is_the_tilt() {
        let s = space(3);
        let l = log_integral(&make_measure(&s, &[0.2, 0.3, 0.5]).unwrap());
        let x = [0.3, -0.7, 1.2];
        let g = l.gradient(&x).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = x;
            let mut dn = x;
            up[i] += h;
            dn[i] -= h;
            let fd = (l.eval_values(&up) - l.eval_values(&dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }
}

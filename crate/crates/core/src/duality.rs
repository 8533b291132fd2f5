//! Rate functions from functionals and back.
//!
//! The dual formula `I(x) = L(0) + sup_F { F(x) − L(F) }` is evaluated with
//! *pit functions*: `pit_{x,M}` is `0` at `x` and `−M` everywhere else. By
//! translation invariance the sup may be taken over `F` with `F(x) = 0`, and
//! every such `F` is bounded below by a deep enough pit; monotonicity then
//! makes `−L(pit_{x,M})` nondecreasing in `M` with limit equal to the sup.
//! The depth schedule therefore computes the sup exactly up to stall
//! detection, and a value that keeps growing linearly in `M` is reported as
//! `+∞`.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended;
use crate::functionals::{sup_minus_rate, FunctionalHandle};
use crate::space::{BoundedFunction, FiniteSpace, RateFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct PitSchedule {
    depths: Vec<f64>,
    stall_tolerance: f64,
    divergence_slope: f64,
}

impl Default for PitSchedule {
    fn default() -> Self {
        Self::doubling(40).expect("default schedule is valid")
    }
}

impl PitSchedule {
    pub fn new(depths: Vec<f64>, stall_tolerance: f64, divergence_slope: f64) -> Result<Self> {
        if depths.len() < 2 {
            return Err(Error::InvalidSchedule("need at least two pit depths".into()));
        }
        if depths.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidSchedule("pit depths must be finite and positive".into()));
        }
        if depths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("pit depths must increase strictly".into()));
        }
        if !(stall_tolerance > 0.0) || !(divergence_slope > 0.0) {
            return Err(Error::InvalidSchedule("tolerances must be positive".into()));
        }
        Ok(Self {
            depths,
            stall_tolerance,
            divergence_slope,
        })
    }

    /// Depths `1, 2, 4, …, 2^max_exponent` with the default tolerances.
    pub fn doubling(max_exponent: u32) -> Result<Self> {
        if max_exponent == 0 || max_exponent > 1000 {
            return Err(Error::InvalidSchedule(format!(
                "depth cap 2^{max_exponent} is out of range"
            )));
        }
        Self::new((0..=max_exponent).map(|k| 2f64.powi(k as i32)).collect(), 1e-10, 0.5)
    }

    pub fn with_stall_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidSchedule("stall tolerance must be positive".into()));
        }
        self.stall_tolerance = tol;
        Ok(self)
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn stall_tolerance(&self) -> f64 {
        self.stall_tolerance
    }

    pub fn divergence_slope(&self) -> f64 {
        self.divergence_slope
    }
}

/// How the pit iteration ended at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointConvergence {
    /// Last depth evaluated.
    pub depth: f64,
    /// Change of `−L(pit)` over the last step.
    pub increment: f64,
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointDual {
    pub value: f64,
    pub convergence: PointConvergence,
}

fn pit(m: usize, x: usize, depth: f64) -> Vec<f64> {
    let mut v = vec![-depth; m];
    v[x] = 0.0;
    v
}

/// `L(0) − L(pit_{x,M})` for every depth of the schedule.
pub fn pit_trajectory(l: &FunctionalHandle, x: usize, sched: &PitSchedule) -> Result<Vec<f64>> {
    let m = l.space().len();
    if x >= m {
        return Err(Error::PointNotInSpace(x));
    }
    Ok(sched
        .depths
        .iter()
        .map(|&d| l.base_value() - l.eval_values(&pit(m, x, d)))
        .collect())
}

/// The dual rate `I(x)` at a single point.
///
/// Deepens the pit until the estimate stalls. Without a stall, the point is
/// divergent when the last increment is at least `divergence_slope · ΔM` or
/// no smaller than the increment before it.
pub fn dual_rate_at(l: &FunctionalHandle, x: usize, sched: &PitSchedule) -> Result<PointDual> {
    let m = l.space().len();
    if x >= m {
        return Err(Error::PointNotInSpace(x));
    }
    if m == 1 {
        return Ok(PointDual {
            value: 0.0,
            convergence: PointConvergence {
                depth: 0.0,
                increment: 0.0,
                divergent: false,
            },
        });
    }
    let base = l.base_value();
    let mut prev: Option<(f64, f64)> = None;
    let mut last_step = (0.0, 0.0);
    let mut earlier_increment = None;
    for &depth in &sched.depths {
        let value = base - l.eval_values(&pit(m, x, depth));
        if let Some((prev_depth, prev_value)) = prev {
            let increment = value - prev_value;
            if increment.abs() < sched.stall_tolerance {
                return Ok(PointDual {
                    value,
                    convergence: PointConvergence {
                        depth,
                        increment,
                        divergent: false,
                    },
                });
            }
            if prev_depth != sched.depths[0] {
                earlier_increment = Some(last_step.1);
            }
            last_step = (depth - prev_depth, increment);
        }
        prev = Some((depth, value));
    }
    let (depth, value) = prev.expect("schedule has at least two depths");
    let (step, increment) = last_step;
    // a bounded nondecreasing sequence has vanishing increments, so one that
    // stopped shrinking is growing without bound, however slowly
    let not_shrinking = earlier_increment.is_some_and(|e: f64| increment >= e);
    let divergent = increment >= sched.divergence_slope * step || not_shrinking;
    Ok(PointDual {
        value: if divergent { f64::INFINITY } else { value },
        convergence: PointConvergence {
            depth,
            increment,
            divergent,
        },
    })
}

/// Rate function of a functional together with its split-off `L(0)`.
#[derive(Debug, Clone)]
pub struct DualReport {
    pub rate: RateFunction,
    pub base_value: f64,
    pub convergence: Vec<PointConvergence>,
}

/// Applies [`dual_rate_at`] to every point. Points are processed in parallel
/// and assembled in point order.
pub fn dual_rate(l: &FunctionalHandle, sched: &PitSchedule) -> Result<DualReport> {
    let m = l.space().len();
    let per_point: Vec<PointDual> = (0..m)
        .into_par_iter()
        .map(|x| dual_rate_at(l, x, sched))
        .collect::<Result<_>>()?;
    // pits are ≤ 0, so monotonicity gives I ≥ 0; clamp only rounding noise
    let values = per_point
        .iter()
        .map(|p| if p.value < 0.0 && p.value > -1e-12 { 0.0 } else { p.value })
        .collect();
    let rate = RateFunction::new(l.space(), values).map_err(|e| match e {
        Error::NegativeRate { index, value } => Error::InvariantViolation(format!(
            "dual rate {value} < 0 at point {index}: the functional is not monotone"
        )),
        other => other,
    })?;
    Ok(DualReport {
        rate,
        base_value: l.base_value(),
        convergence: per_point.into_iter().map(|p| p.convergence).collect(),
    })
}

/// `L0 + max_x { F(x) − I(x) }` over the points with finite rate.
pub fn reconstruct(rate: &RateFunction, l0: f64, f: &BoundedFunction) -> Result<f64> {
    if !rate.space().same_as(f.space()) {
        return Err(Error::SpaceMismatch);
    }
    if rate.is_all_infinite() {
        return Err(Error::AllInfiniteRate);
    }
    Ok(l0 + sup_minus_rate(rate.values(), f.values()))
}

impl DualReport {
    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.rate.space()
    }

    /// `L(F) − reconstruct(I, L(0), F)` against this report.
    pub fn gap(&self, l: &FunctionalHandle, f: &BoundedFunction) -> Result<f64> {
        Ok(l.eval(f)? - reconstruct(&self.rate, self.base_value, f)?)
    }

    pub fn to_json(&self) -> DualReportDoc {
        DualReportDoc {
            l0: self.base_value,
            rate: self.rate.values().to_vec(),
            convergence: self.convergence.clone(),
        }
    }

    /// One row per point: `point,rate,depth,increment,divergent`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["point", "rate", "depth", "increment", "divergent"])
            .map_err(io)?;
        for ((label, r), c) in self
            .space()
            .labels()
            .iter()
            .zip(self.rate.values())
            .zip(&self.convergence)
        {
            w.write_record([
                label.clone(),
                extended::format_ext(*r),
                format!("{}", c.depth),
                extended::format_ext(c.increment),
                c.divergent.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON form: `{"L0": r, "rate": [r|"inf"], "convergence": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualReportDoc {
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(with = "extended::vec")]
    pub rate: Vec<f64>,
    #[serde(default)]
    pub convergence: Vec<PointConvergence>,
}

/// Gap `L(F) − reconstruction`. Recomputes the dual on every call; use
/// [`DualReport::gap`] when evaluating many `F`.
pub fn representation_gap(l: &FunctionalHandle, f: &BoundedFunction, sched: &PitSchedule) -> Result<f64> {
    dual_rate(l, sched)?.gap(l, f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublevelSet {
    pub points: Vec<usize>,
    pub diameter: f64,
}

/// `{x : I(x) ≤ a}` and its diameter.
pub fn sublevel_set(rate: &RateFunction, a: f64) -> Result<SublevelSet> {
    if !(a > 0.0) {
        return Err(Error::InvalidOptions(format!("sublevel threshold {a} must be positive")));
    }
    let points: Vec<usize> = rate
        .values()
        .iter()
        .enumerate()
        .filter(|(_, r)| **r <= a)
        .map(|(i, _)| i)
        .collect();
    let diameter = rate.space().diameter(&points);
    Ok(SublevelSet { points, diameter })
}

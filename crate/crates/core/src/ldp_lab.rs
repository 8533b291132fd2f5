//! Large-deviation experiments on exact binomial sequences.
//!
//! `μ_n` is the law of the mean of `n` Bernoulli(p) variables, living on the
//! grid `{k/n}`. Its log-weights come from log-gamma and stay finite long
//! after the linear weights underflow.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::duality::sublevel_set;
use crate::error::{Error, Result};
use crate::extended;
use crate::functionals::ldp_term;
use crate::space::{FiniteSpace, Metric, ProbabilityMeasure, RateFunction, STRUCTURAL_TOL};

/// How far an ingested weight vector may sum away from one.
pub const INGEST_TOL: f64 = 1e-6;

/// Resolution of the reference grid used for test functions on `[0, 1]`.
pub const REFERENCE_POINTS: usize = 1025;

#[derive(Debug, Clone)]
pub struct SequenceEntry {
    pub n: u64,
    pub points: Vec<f64>,
    pub measure: ProbabilityMeasure,
}

impl SequenceEntry {
    pub fn new(n: u64, points: Vec<f64>, measure: ProbabilityMeasure) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvariantViolation("n must be positive".into()));
        }
        if points.len() != measure.space().len() {
            return Err(Error::LengthMismatch {
                expected: measure.space().len(),
                found: points.len(),
            });
        }
        Ok(Self { n, points, measure })
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.measure.space()
    }
}

#[derive(Debug, Clone)]
pub struct MeasureSequence {
    description: String,
    entries: Vec<SequenceEntry>,
}

impl MeasureSequence {
    pub fn new(description: impl Into<String>, entries: Vec<SequenceEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(w) = entries.windows(2).find(|w| w[1].n <= w[0].n) {
            return Err(Error::InvariantViolation(format!(
                "n must increase strictly, got {} after {}",
                w[1].n, w[0].n
            )));
        }
        Ok(Self {
            description: description.into(),
            entries,
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn entries(&self) -> &[SequenceEntry] {
        &self.entries
    }

    pub fn to_doc(&self) -> SequenceDoc {
        SequenceDoc {
            description: self.description.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryDoc {
                    n: e.n,
                    points: e.points.clone(),
                    weights: e.measure.weights().to_vec(),
                    log_weights: e.measure.log_weights().to_vec(),
                })
                .collect(),
        }
    }

    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer(out, &self.to_doc()).map_err(|e| Error::parse(e.to_string()))
    }

    /// Long-format CSV with columns `n,point,weight`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::parse(e.to_string());
        w.write_record(["n", "point", "weight"]).map_err(io)?;
        for e in &self.entries {
            for (x, p) in e.points.iter().zip(e.measure.weights()) {
                w.write_record([e.n.to_string(), x.to_string(), p.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON form of a measure sequence.
///
/// `log_weights` is optional on input; when present it takes precedence over
/// `weights`, which may have underflowed to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    #[serde(default)]
    pub description: String,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub n: u64,
    pub points: Vec<f64>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default, with = "extended::vec", skip_serializing_if = "Vec::is_empty")]
    pub log_weights: Vec<f64>,
}

impl EntryDoc {
    fn into_entry(self) -> Result<SequenceEntry> {
        let space = Arc::new(FiniteSpace::new(
            self.points.iter().map(|x| format!("{x}")).collect(),
            Metric::Line(self.points.clone()),
        )?);
        let measure = if !self.log_weights.is_empty() {
            ProbabilityMeasure::from_log_weights(&space, &self.log_weights)?
        } else {
            ingest_weights(&space, self.weights)?
        };
        SequenceEntry::new(self.n, self.points, measure)
    }
}

fn ingest_weights(space: &Arc<FiniteSpace>, weights: Vec<f64>) -> Result<ProbabilityMeasure> {
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() <= STRUCTURAL_TOL {
        ProbabilityMeasure::new(space, weights)
    } else if (sum - 1.0).abs() <= INGEST_TOL {
        crate::space::make_measure(space, &weights)
    } else {
        Err(Error::InvariantViolation(format!(
            "weights sum to {sum}, outside the ingest tolerance"
        )))
    }
}

impl SequenceDoc {
    pub fn into_sequence(self) -> Result<MeasureSequence> {
        let entries = self
            .entries
            .into_iter()
            .map(EntryDoc::into_entry)
            .collect::<Result<Vec<_>>>()?;
        MeasureSequence::new(self.description, entries)
    }
}

fn binomial_log_pmf(n: u64, p: f64) -> Vec<f64> {
    let nf = n as f64;
    let head = ln_gamma(nf + 1.0);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    (0..=n)
        .map(|k| {
            let k = k as f64;
            head - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0) + k * lp + (nf - k) * lq
        })
        .collect()
}

/// `Binomial(n, p)/n` on `{k/n : k = 0..n}` for each `n` of the schedule.
pub fn cramer_sequence(p: f64, schedule: &[u64]) -> Result<MeasureSequence> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidP(p));
    }
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule(
            "schedule must be positive and strictly increasing".into(),
        ));
    }
    let entries = schedule
        .par_iter()
        .map(|&n| {
            let points: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
            let space = Arc::new(FiniteSpace::line(&points)?);
            let measure = ProbabilityMeasure::from_log_weights(&space, &binomial_log_pmf(n, p))?;
            SequenceEntry::new(n, points, measure)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasureSequence::new(format!("binomial mean, p = {p}"), entries)
}

/// `x log(x/p) + (1−x) log((1−x)/(1−p))`, infinite off `[0, 1]`.
pub fn bernoulli_rate(p: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::INFINITY;
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(x, p) + term(1.0 - x, 1.0 - p)
}

/// Piecewise-linear function on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInterpolant {
    values: Vec<f64>,
}

impl GridInterpolant {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidOptions("an interpolant needs at least two grid values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(Self { values })
    }

    /// Samples `f` on the reference grid.
    pub fn from_fn(f: impl Fn(f64) -> f64) -> Result<Self> {
        let last = (REFERENCE_POINTS - 1) as f64;
        Self::new((0..REFERENCE_POINTS).map(|i| f(i as f64 / last)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates at `x`, clamped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let t = x.clamp(0.0, 1.0) * last as f64;
        let i = (t.floor() as usize).min(last - 1);
        let frac = t - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        if frac == 0.0 {
            a
        } else {
            a + frac * (b - a)
        }
    }
}

/// The fixed test functions of the Cramér experiment.
pub fn reference_functions() -> Vec<(&'static str, GridInterpolant)> {
    let build = |f: fn(f64) -> f64| GridInterpolant::from_fn(f).expect("finite on [0, 1]");
    vec![
        ("constant", build(|_| 0.3)),
        ("linear", build(|x| x)),
        ("parabola", build(|x| -4.0 * (x - 0.25).powi(2))),
        ("bump", build(|x| 0.5 * (-(x - 0.8).powi(2) / 0.02).exp())),
        ("spike", build(|x| 0.8 * (-(x - 0.1).powi(2) / 0.005).exp())),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub terms: Vec<(u64, f64)>,
    pub extrapolated: f64,
    pub converged: bool,
    /// Coefficient of the `log(n)/n` correction.
    pub fit_slope: f64,
    /// Largest absolute residual of the fit.
    pub fit_residual: f64,
}

impl LimitReport {
    /// `n,value` rows followed by an `extrapolated,<value>` footer.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "n,value")?;
        for (n, v) in &self.terms {
            writeln!(out, "{n},{}", extended::format_ext(*v))?;
        }
        writeln!(out, "extrapolated,{}", extended::format_ext(self.extrapolated))?;
        Ok(())
    }
}

/// Fit residual and last-step thresholds for declaring convergence.
pub const FIT_RESIDUAL_TOL: f64 = 1e-3;
pub const LAST_STEP_TOL: f64 = 1e-2;

/// Least squares `y ≈ a + b·x`; returns `(a, b, max |residual|)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 1e-300 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).abs())
        .fold(0.0, f64::max);
    (a, b, res)
}

/// Per-n values of `(1/n) log ∫ e^{nF} dμ_n` and their extrapolated limit.
///
/// The model `a + b·log(n)/n` is fitted on the last half of the schedule.
pub fn estimate_limit(seq: &MeasureSequence, f: &GridInterpolant) -> Result<LimitReport> {
    let entries = seq.entries();
    if entries.len() < 3 {
        return Err(Error::ScheduleTooShort(entries.len()));
    }
    let terms: Vec<(u64, f64)> = entries
        .par_iter()
        .map(|e| {
            let values: Vec<f64> = e.points.iter().map(|x| f.eval(*x)).collect();
            Ok((e.n, ldp_term(&e.measure, e.n)?.eval_values(&values)))
        })
        .collect::<Result<_>>()?;
    let tail = &terms[terms.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|(n, _)| (*n as f64).ln() / *n as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, v)| *v).collect();
    let (a, b, residual) = fit_line(&xs, &ys);
    let last_step = (ys[ys.len() - 1] - ys[ys.len() - 2]).abs();
    let converged = residual <= FIT_RESIDUAL_TOL && last_step <= LAST_STEP_TOL && a.is_finite();
    if !converged {
        log::info!("limit fit residual {residual:e}, last step {last_step:e}");
    }
    Ok(LimitReport {
        terms,
        extrapolated: a,
        converged,
        fit_slope: b,
        fit_residual: residual,
    })
}

/// `I_n(x) = −(1/n) log μ_n({x})`.
pub fn empirical_rate(entry: &SequenceEntry) -> Result<RateFunction> {
    let n = entry.n as f64;
    let values: Vec<f64> = entry
        .measure
        .log_weights()
        .iter()
        .map(|lw| (-lw / n).max(0.0))
        .collect();
    RateFunction::new(entry.space(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: u64,
    pub points: usize,
    pub diameter: f64,
}

/// Diameter of `{x : I_n(x) ≤ a}` for each `n`.
pub fn tightness_scan(seq: &MeasureSequence, a: f64) -> Result<Vec<TightnessRow>> {
    seq.entries()
        .iter()
        .map(|e| {
            let set = sublevel_set(&empirical_rate(e)?, a)?;
            Ok(TightnessRow {
                n: e.n,
                points: set.points.len(),
                diameter: set.diameter,
            })
        })
        .collect()
}

pub fn read_sequence_json(reader: impl Read) -> Result<MeasureSequence> {
    let doc: SequenceDoc = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        line: Some(e.line()),
        field: None,
        message: e.to_string(),
    })?;
    doc.into_sequence()
}

/// Reads `n,point,weight` rows; a leading header row is skipped.
pub fn read_sequence_csv(reader: impl Read) -> Result<MeasureSequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut groups: Vec<EntryDoc> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(e.to_string()))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let field = |idx: usize, name: &str| -> Result<&str> {
            rec.get(idx).ok_or_else(|| Error::Parse {
                line: Some(line),
                field: Some(name.into()),
                message: "missing column".into(),
            })
        };
        let n_text = field(0, "n")?;
        let n: u64 = match n_text.parse() {
            Ok(n) => n,
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: Some(line),
                    field: Some("n".into()),
                    message: e.to_string(),
                })
            }
        };
        let num = |idx: usize, name: &str| -> Result<f64> {
            field(idx, name)?.parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                line: Some(line),
                field: Some(name.into()),
                message: e.to_string(),
            })
        };
        let (x, w) = (num(1, "point")?, num(2, "weight")?);
        match groups.last_mut() {
            Some(g) if g.n == n => {
                g.points.push(x);
                g.weights.push(w);
            }
            _ => groups.push(EntryDoc {
                n,
                points: vec![x],
                weights: vec![w],
                log_weights: vec![],
            }),
        }
    }
    SequenceDoc {
        description: String::new(),
        entries: groups,
    }
    .into_sequence()
}

/// Reads a sequence file, choosing CSV by the `.csv` extension.
pub fn ingest_sequence(path: &Path) -> Result<MeasureSequence> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_sequence_csv(file)
    } else {
        read_sequence_json(file)
    }
}

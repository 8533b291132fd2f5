//! Finite metric spaces and the function, measure and rate vectors that live
//! on them.
//!
//! Every object holds an `Arc` to its [`FiniteSpace`]; binary operations
//! refuse to mix objects from structurally different spaces.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Absolute tolerance for structural checks (simplex sums, metric axioms).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Pairwise distances between the points of a [`FiniteSpace`].
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// Explicit symmetric distance matrix.
    Matrix(Vec<Vec<f64>>),
    /// Points embedded in the real line; `d(i, j) = |c_i - c_j|`.
    Line(Vec<f64>),
    /// `d(i, j) = 1` for `i != j`.
    Discrete,
}

/// A finite set of labelled points with a metric.
///
/// A space may carry a *horizon* point: an ideal point standing for the limit
/// at infinity of a half-line. It is a point of the compactification rather
/// than of the space proper, so pointwise limits (see
/// [`validate_decreasing`]) ignore it.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    labels: Vec<String>,
    metric: Metric,
    horizon: Option<usize>,
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, metric: Metric) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one point".into()));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        validate_metric(&metric, labels.len())?;
        Ok(Self {
            labels,
            metric,
            horizon: None,
        })
    }

    /// Points `0..m` under the discrete metric.
    pub fn discrete(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| format!("x{i}")).collect(), Metric::Discrete)
    }

    /// Points on the real line, labelled by their coordinate.
    pub fn line(coords: &[f64]) -> Result<Self> {
        Self::new(
            coords.iter().map(|c| format!("{c}")).collect(),
            Metric::Line(coords.to_vec()),
        )
    }

    /// Grid points on `[0, ∞)` plus a horizon point for `+∞`.
    ///
    /// Distances are measured after the map `x ↦ atan x`, which sends the
    /// horizon to `π/2`; this is a genuine metric on the compactified line.
    pub fn half_line(grid: &[f64]) -> Result<Self> {
        if grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidSpace(
                "half-line grid points must be finite and nonnegative".into(),
            ));
        }
        let mut labels: Vec<String> = grid.iter().map(|c| format!("{c}")).collect();
        labels.push("inf".into());
        let mut coords: Vec<f64> = grid.iter().map(|x| x.atan()).collect();
        coords.push(std::f64::consts::FRAC_PI_2);
        let mut space = Self::new(labels, Metric::Line(coords))?;
        space.horizon = Some(grid.len());
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn is_horizon(&self, i: usize) -> bool {
        self.horizon == Some(i)
    }

    /// Indices of the points of the space proper (everything but the horizon).
    pub fn proper_points(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.is_horizon(i))
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Matrix(d) => d[i][j],
            Metric::Line(c) => (c[i] - c[j]).abs(),
            Metric::Discrete => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Largest pairwise distance within `points` (0 for fewer than two).
    pub fn diameter(&self, points: &[usize]) -> f64 {
        if let Metric::Line(c) = &self.metric {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(c[i]), hi.max(c[i]))
                });
            return if points.len() < 2 { 0.0 } else { hi - lo };
        }
        let mut d = 0.0f64;
        for (a, &i) in points.iter().enumerate() {
            for &j in &points[a + 1..] {
                d = d.max(self.distance(i, j));
            }
        }
        d
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }

    pub fn to_doc(&self) -> SpaceDoc {
        match &self.metric {
            Metric::Line(c)
                if self.horizon.is_none()
                    && self.labels.iter().zip(c).all(|(l, x)| *l == format!("{x}")) =>
            {
                SpaceDoc {
                    points: c.iter().map(|&x| Label::Number(x)).collect(),
                    metric: None,
                }
            }
            Metric::Discrete if self.labels.iter().all(|l| l.parse::<f64>().is_err()) => SpaceDoc {
                points: self.labels.iter().cloned().map(Label::Text).collect(),
                metric: None,
            },
            _ => {
                let m = self.len();
                SpaceDoc {
                    points: self.labels.iter().cloned().map(Label::Text).collect(),
                    metric: Some(
                        (0..m)
                            .map(|i| (0..m).map(|j| self.distance(i, j)).collect())
                            .collect(),
                    ),
                }
            }
        }
    }
}

fn validate_metric(metric: &Metric, m: usize) -> Result<()> {
    match metric {
        Metric::Discrete => Ok(()),
        Metric::Line(c) => {
            if c.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    found: c.len(),
                });
            }
            if let Some(i) = c.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            let mut sorted = c.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSpace(
                    "two points share a coordinate, so their distance is zero".into(),
                ));
            }
            Ok(())
        }
        Metric::Matrix(d) => {
            if d.len() != m || d.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidSpace(format!("metric must be a {m}x{m} matrix")));
            }
            for i in 0..m {
                if d[i][i] != 0.0 {
                    return Err(Error::InvalidSpace(format!("d({i},{i}) is not zero")));
                }
                for j in 0..m {
                    let v = d[i][j];
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::InvalidSpace(format!(
                            "d({i},{j}) = {v} is not a finite nonnegative distance"
                        )));
                    }
                    if i != j && v == 0.0 {
                        return Err(Error::InvalidSpace(format!("d({i},{j}) is zero off the diagonal")));
                    }
                    if (v - d[j][i]).abs() > STRUCTURAL_TOL {
                        return Err(Error::InvalidSpace(format!("metric is not symmetric at ({i},{j})")));
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        if d[i][k] > d[i][j] + d[j][k] + STRUCTURAL_TOL {
                            return Err(Error::InvalidSpace(format!(
                                "triangle inequality fails for ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

/// Point label in the JSON schema: either free text or a coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Number(f64),
    Text(String),
}

/// JSON form of a space: `{"points": [...], "metric": [[...]]}`.
///
/// Without a metric, all-numeric labels are placed on the real line and
/// anything else gets the discrete metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub points: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

impl SpaceDoc {
    pub fn into_space(self) -> Result<FiniteSpace> {
        let numeric: Option<Vec<f64>> = self
            .points
            .iter()
            .map(|p| match p {
                Label::Number(x) => Some(*x),
                Label::Text(_) => None,
            })
            .collect();
        let labels: Vec<String> = self
            .points
            .into_iter()
            .map(|p| match p {
                Label::Number(x) => format!("{x}"),
                Label::Text(s) => s,
            })
            .collect();
        match (self.metric, numeric) {
            (Some(d), _) => FiniteSpace::new(labels, Metric::Matrix(d)),
            (None, Some(c)) => FiniteSpace::new(labels, Metric::Line(c)),
            (None, None) => FiniteSpace::new(labels, Metric::Discrete),
        }
    }
}

/// A real function on a finite space.
#[derive(Debug, Clone)]
pub struct BoundedFunction {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
}

impl BoundedFunction {
    pub fn new(space: &Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        check_len(space, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(Self {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn constant(space: &Arc<FiniteSpace>, c: f64) -> Result<Self> {
        Self::new(space, vec![c; space.len()])
    }

    pub fn zero(space: &Arc<FiniteSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            values: vec![0.0; space.len()],
        }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `F + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(&self.space, self.values.iter().map(|v| v + c).collect())
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.space, self.values.iter().map(|v| v * s).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

impl PartialEq for BoundedFunction {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.values == other.values
    }
}

fn check_len(space: &FiniteSpace, found: usize) -> Result<()> {
    if found != space.len() {
        return Err(Error::LengthMismatch {
            expected: space.len(),
            found,
        });
    }
    Ok(())
}

fn check_same(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// `F ∨ G`, the pointwise maximum.
pub fn pointwise_max(f: &BoundedFunction, g: &BoundedFunction) -> Result<BoundedFunction> {
    check_same(&f.space, &g.space)?;
    Ok(BoundedFunction {
        space: Arc::clone(&f.space),
        values: f.values.iter().zip(&g.values).map(|(a, b)| a.max(*b)).collect(),
    })
}

/// `‖F − G‖∞`.
pub fn sup_distance(f: &BoundedFunction, g: &BoundedFunction) -> Result<f64> {
    check_same(&f.space, &g.space)?;
    Ok(sup_distance_values(&f.values, &g.values))
}

pub(crate) fn sup_distance_values(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
}

/// A probability vector over the points of a space.
///
/// Weights are kept in both linear and log form: measures such as
/// `Binomial(4096, 1/2)` have atoms far below the smallest positive double,
/// and the exponential functionals only ever read the log form.
#[derive(Debug, Clone)]
pub struct ProbabilityMeasure {
    space: Arc<FiniteSpace>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    normalization: f64,
}

/// Normalizes `weights` into a probability measure.
pub fn make_measure(space: &Arc<FiniteSpace>, weights: &[f64]) -> Result<ProbabilityMeasure> {
    check_len(space, weights.len())?;
    for (i, &w) in weights.iter().enumerate() {
        if w.is_nan() || w < 0.0 {
            return Err(Error::NegativeWeight { index: i, value: w });
        }
        if !w.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        return Err(Error::AllZero);
    }
    let normalized: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    Ok(ProbabilityMeasure {
        space: Arc::clone(space),
        log_weights: normalized.iter().map(|w| w.ln()).collect(),
        weights: normalized,
        normalization: sum,
    })
}

impl ProbabilityMeasure {
    /// Accepts weights that already sum to one within [`STRUCTURAL_TOL`],
    /// storing them unchanged.
    pub fn new(space: &Arc<FiniteSpace>, weights: Vec<f64>) -> Result<Self> {
        let m = make_measure(space, &weights)?;
        if (m.normalization - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::NotSimplex {
                sum: m.normalization,
            });
        }
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights,
            normalization: 1.0,
            ..m
        })
    }

    /// Builds a measure from unnormalized log-weights (`-inf` allowed).
    pub fn from_log_weights(space: &Arc<FiniteSpace>, log_weights: &[f64]) -> Result<Self> {
        check_len(space, log_weights.len())?;
        if let Some(i) = log_weights
            .iter()
            .position(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(Error::NonFinite { index: i });
        }
        let lse = log_sum_exp(log_weights.iter().copied());
        if lse == f64::NEG_INFINITY {
            return Err(Error::AllZero);
        }
        let log_weights: Vec<f64> = log_weights.iter().map(|v| v - lse).collect();
        Ok(Self {
            space: Arc::clone(space),
            weights: log_weights.iter().map(|v| v.exp()).collect(),
            log_weights,
            normalization: lse.exp(),
        })
    }

    pub fn uniform(space: &Arc<FiniteSpace>) -> Self {
        let m = space.len();
        make_measure(space, &vec![1.0; m]).expect("uniform weights are valid")
    }

    pub fn dirac(space: &Arc<FiniteSpace>, at: usize) -> Result<Self> {
        if at >= space.len() {
            return Err(Error::PointNotInSpace(at));
        }
        let mut w = vec![0.0; space.len()];
        w[at] = 1.0;
        make_measure(space, &w)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Total mass of the input before normalization.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `∫ F dμ`.
    pub fn integrate(&self, f: &BoundedFunction) -> Result<f64> {
        check_same(&self.space, f.space())?;
        Ok(crate::numeric::dot(&self.weights, f.values()))
    }

    pub fn total_variation(&self, other: &ProbabilityMeasure) -> Result<f64> {
        check_same(&self.space, &other.space)?;
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// A `[0, ∞]`-valued function on a space.
#[derive(Debug, Clone)]
pub struct RateFunction {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
}

impl RateFunction {
    pub fn new(space: &Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        check_len(space, values.len())?;
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::NegativeRate { index: i, value: v });
            }
        }
        Ok(Self {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_all_infinite(&self) -> bool {
        self.values.iter().all(|v| v.is_infinite())
    }

    /// Minimum over the finite entries, `None` when every entry is infinite.
    pub fn finite_min(&self) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .reduce(f64::min)
    }
}

/// A pointwise nonincreasing, nonnegative sequence of functions meant to
/// decrease to zero.
#[derive(Debug, Clone)]
pub struct DecreasingSequence {
    terms: Vec<BoundedFunction>,
    residual: f64,
}

impl DecreasingSequence {
    pub fn terms(&self) -> &[BoundedFunction] {
        &self.terms
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.terms[0].space()
    }

    /// Sup-norm of the last term over the proper points of the space.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

pub fn validate_decreasing(terms: Vec<BoundedFunction>) -> Result<DecreasingSequence> {
    let first = terms.first().ok_or(Error::EmptySequence)?;
    let space = Arc::clone(first.space());
    for (k, t) in terms.iter().enumerate() {
        check_same(&space, t.space())?;
        if let Some(p) = t.values.iter().position(|v| *v < 0.0) {
            return Err(Error::NegativeTerm { term: k, point: p });
        }
        if k > 0 {
            let prev = &terms[k - 1].values;
            if let Some(p) = t.values.iter().zip(prev).position(|(now, before)| now > before) {
                return Err(Error::NotMonotone { term: k, point: p });
            }
        }
    }
    let last = terms.last().expect("nonempty");
    let residual = space
        .proper_points()
        .fold(0.0f64, |a, i| a.max(last.values[i].abs()));
    Ok(DecreasingSequence { terms, residual })
}

/// `{"values": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub values: Vec<f64>,
}

/// `{"weights": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub weights: Vec<f64>,
}

/// Reads `label,weight` rows and orders them by the labels of `space`.
///
/// A header row is accepted when its second column is not a number.
pub fn measure_from_csv(space: &Arc<FiniteSpace>, reader: impl Read) -> Result<ProbabilityMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut by_label: HashMap<String, f64> = HashMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: Some(line + 1),
            field: None,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line: Some(line + 1),
                field: None,
                message: format!("expected 2 columns (label, weight), found {}", rec.len()),
            });
        }
        let weight = match rec[1].parse::<f64>() {
            Ok(w) => w,
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: Some(line + 1),
                    field: Some("weight".into()),
                    message: e.to_string(),
                })
            }
        };
        if by_label.insert(rec[0].to_string(), weight).is_some() {
            return Err(Error::Parse {
                line: Some(line + 1),
                field: Some("label".into()),
                message: format!("label {:?} repeated", &rec[0]),
            });
        }
    }
    let mut weights = Vec::with_capacity(space.len());
    for l in space.labels() {
        weights.push(by_label.remove(l).ok_or_else(|| Error::Parse {
            line: None,
            field: Some("label".into()),
            message: format!("no weight for point {l:?}"),
        })?);
    }
    if let Some(extra) = by_label.keys().next() {
        return Err(Error::Parse {
            line: None,
            field: Some("label".into()),
            message: format!("point {extra:?} is not in the space"),
        });
    }
    make_measure(space, &weights)
}

//! Input documents accepted by the command line.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use varadhan::convex_duality::{DiracRate, MeasureRate, RelativeEntropy};
use varadhan::extended;
use varadhan::functionals::{ldp_term, linear, log_integral_with_mass, sup_form, tail_limsup};
use varadhan::ldp_lab::INGEST_TOL;
use varadhan::space::{make_measure, measure_from_csv, SpaceDoc, STRUCTURAL_TOL};
use varadhan::{BoundedFunction, Error, FiniteSpace, FunctionalHandle, ProbabilityMeasure, RateFunction, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    serde_json::from_reader(file).map_err(|e| Error::Parse {
        line: Some(e.line()),
        field: None,
        message: format!("{}: {e}", path.display()),
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Probability weights: kept if they sum to one, renormalized if they are
/// off by at most the ingest tolerance, rejected otherwise.
pub fn probability(space: &Arc<FiniteSpace>, weights: &[f64]) -> Result<ProbabilityMeasure> {
    let normalized = make_measure(space, weights)?;
    let off = (normalized.normalization() - 1.0).abs();
    if off <= STRUCTURAL_TOL {
        ProbabilityMeasure::new(space, weights.to_vec())
    } else if off <= INGEST_TOL {
        Ok(normalized)
    } else {
        Err(Error::NotSimplex {
            sum: normalized.normalization(),
        })
    }
}

/// `{"kind": ..., "space": {...}, ...}` describing a functional.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalDoc {
    /// `log ∫ e^F dν` for the measure given by `weights`, of any total mass.
    LogIntegral { space: SpaceDoc, weights: Vec<f64> },
    LdpTerm { space: SpaceDoc, weights: Vec<f64>, n: u64 },
    SupForm {
        space: SpaceDoc,
        #[serde(with = "extended::vec")]
        rate: Vec<f64>,
        #[serde(rename = "L0", default)]
        l0: f64,
    },
    /// Grid points on the half-line; a horizon point is appended.
    TailLimsup { grid: Vec<f64> },
    Linear { space: SpaceDoc, weights: Vec<f64> },
}

impl FunctionalDoc {
    pub fn build(self) -> Result<FunctionalHandle> {
        let space = |doc: SpaceDoc| doc.into_space().map(Arc::new);
        match self {
            FunctionalDoc::LogIntegral { space: s, weights } => log_integral_with_mass(&space(s)?, &weights),
            FunctionalDoc::LdpTerm { space: s, weights, n } => ldp_term(&probability(&space(s)?, &weights)?, n),
            FunctionalDoc::SupForm { space: s, rate, l0 } => sup_form(&RateFunction::new(&space(s)?, rate)?, l0),
            FunctionalDoc::TailLimsup { grid } => tail_limsup(&Arc::new(FiniteSpace::half_line(&grid)?)),
            FunctionalDoc::Linear { space: s, weights } => Ok(linear(&probability(&space(s)?, &weights)?)),
        }
    }
}

pub fn functional(path: &Path) -> Result<FunctionalHandle> {
    read_json::<FunctionalDoc>(path)?.build()
}

/// `{"values": [...]}` on the given space.
pub fn function(path: &Path, space: &Arc<FiniteSpace>) -> Result<BoundedFunction> {
    let doc: varadhan::space::FunctionDoc = read_json(path)?;
    BoundedFunction::new(space, doc.values)
}

/// `{"weights": [...]}` or `label,weight` CSV rows.
pub fn measure(path: &Path, space: &Arc<FiniteSpace>) -> Result<ProbabilityMeasure> {
    if is_csv(path) {
        measure_from_csv(space, BufReader::new(File::open(path)?))
    } else {
        let doc: varadhan::space::MeasureDoc = read_json(path)?;
        probability(space, &doc.weights)
    }
}

/// A rate function with its base value, e.g. the output of `dual`.
#[derive(Debug, Deserialize)]
pub struct RateDoc {
    #[serde(default)]
    pub space: Option<SpaceDoc>,
    #[serde(with = "extended::vec")]
    pub rate: Vec<f64>,
    #[serde(rename = "L0", default)]
    pub l0: f64,
}

impl RateDoc {
    /// Without a space, the points are `x0, x1, ...` under the discrete metric.
    pub fn build(self) -> Result<(RateFunction, f64)> {
        let space = match self.space {
            Some(doc) => doc.into_space()?,
            None => FiniteSpace::discrete(self.rate.len())?,
        };
        Ok((RateFunction::new(&Arc::new(space), self.rate)?, self.l0))
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MeasureRateKind {
    RelativeEntropy { space: SpaceDoc, weights: Vec<f64> },
    Dirac { space: SpaceDoc, weights: Vec<f64> },
}

/// A rate on measures, `{"kind": "relative_entropy" | "dirac", "space", "weights", "L0"?}`.
#[derive(Debug, Deserialize)]
pub struct MeasureRateDoc {
    #[serde(flatten)]
    kind: MeasureRateKind,
    #[serde(rename = "L0", default)]
    l0: f64,
}

pub struct MeasureRateInput {
    pub rate: Box<dyn MeasureRate>,
    pub space: Arc<FiniteSpace>,
    pub l0: f64,
}

pub fn measure_rate(path: &Path) -> Result<MeasureRateInput> {
    let doc: MeasureRateDoc = read_json(path)?;
    let (space, weights, dirac) = match doc.kind {
        MeasureRateKind::RelativeEntropy { space, weights } => (space, weights, false),
        MeasureRateKind::Dirac { space, weights } => (space, weights, true),
    };
    let space = Arc::new(space.into_space()?);
    let mu = probability(&space, &weights)?;
    let rate: Box<dyn MeasureRate> = if dirac {
        Box::new(DiracRate::new(&mu))
    } else {
        Box::new(RelativeEntropy::new(mu))
    };
    Ok(MeasureRateInput {
        rate,
        space,
        l0: doc.l0,
    })
}

/// `{"terms": [[...], ...]}`, a decreasing sequence of functions.
#[derive(Debug, Deserialize)]
pub struct SequenceDoc {
    pub terms: Vec<Vec<f64>>,
}

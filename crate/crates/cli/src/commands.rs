use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use varadhan::axioms::{self, CheckReport, Property};
use varadhan::convex_duality::{conjugate_j, recover_l_from_j, AscentOptions, ConjugateReport};
use varadhan::duality::{dual_rate, reconstruct, PitSchedule};
use varadhan::extended::{self, format_ext};
use varadhan::functionals::tail_witness;
use varadhan::ldp_lab::{cramer_sequence, estimate_limit, ingest_sequence, tightness_scan, GridInterpolant, MeasureSequence};
use varadhan::space::{validate_decreasing, FunctionDoc, Metric};
use varadhan::{BoundedFunction, Error, FunctionalHandle, Result};

use crate::inputs;
use crate::{AscentArgs, Command, Format, Output, PitArgs, SequenceArgs, Status};

const DEFAULT_SAMPLE_SIZES: [u64; 5] = [16, 64, 256, 1024, 4096];

pub fn run(command: Command) -> Result<Status> {
    match command {
        Command::Eval { functional, f, out } => {
            let l = inputs::functional(&functional)?;
            let f = inputs::function(&f, l.space())?;
            emit_value(&out, &Scalar { value: l.eval(&f)? })?;
            Ok(Status::Ok)
        }
        Command::Dual { functional, pit, out } => {
            let l = inputs::functional(&functional)?;
            let report = dual_rate(&l, &pit_schedule(&pit)?)?;
            match out.format {
                Format::Json => write_json(&out, &report.to_json())?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    write_bytes(&out, &buf)?;
                }
            }
            Ok(Status::Ok)
        }
        Command::Reconstruct { rate, f, out } => {
            let (rate, l0) = inputs::read_json::<inputs::RateDoc>(&rate)?.build()?;
            let f = inputs::function(&f, rate.space())?;
            emit_value(&out, &Scalar {
                value: reconstruct(&rate, l0, &f)?,
            })?;
            Ok(Status::Ok)
        }
        Command::Gap { functional, f, pit, out } => {
            let l = inputs::functional(&functional)?;
            let f = inputs::function(&f, l.space())?;
            let report = dual_rate(&l, &pit_schedule(&pit)?)?;
            let value = l.eval(&f)?;
            let gap = report.gap(&l, &f)?;
            emit_value(&out, &Gap {
                value,
                reconstruction: value - gap,
                gap,
            })?;
            Ok(Status::Ok)
        }
        Command::Conjugate {
            functional,
            measure,
            ascent,
            out,
        } => {
            let l = inputs::functional(&functional)?;
            let mu = inputs::measure(&measure, l.space())?;
            let report = conjugate_j(&l, &mu, &ascent_options(&ascent))?;
            emit_conjugate(&out, &report)
        }
        Command::Recover { rate, f, ascent, out } => {
            let j = inputs::measure_rate(&rate)?;
            let f = inputs::function(&f, &j.space)?;
            let report = recover_l_from_j(j.rate.as_ref(), j.l0, &f, &ascent_options(&ascent))?;
            emit_conjugate(&out, &report)
        }
        Command::Check {
            functional,
            property,
            trials,
            seed,
            f,
            out,
        } => {
            let l = inputs::functional(&functional)?;
            let p = Property::from_name(&property)
                .ok_or_else(|| Error::InvalidOptions(format!("unknown property {property:?}")))?;
            let report = if p == Property::SigmaContinuity {
                sigma_check(&l, f.as_deref())?
            } else {
                axioms::check(&l, p, trials, seed)?
            };
            match out.format {
                Format::Json => write_json(&out, &report)?,
                Format::Csv => write_bytes(&out, check_csv(&report).as_bytes())?,
            }
            Ok(if report.passed() { Status::Ok } else { Status::Violations })
        }
        Command::Cramer { seq, f, out } => {
            let seq = sequence(&seq)?;
            let doc: FunctionDoc = inputs::read_json(&f)?;
            let report = estimate_limit(&seq, &GridInterpolant::new(doc.values)?)?;
            match out.format {
                Format::Json => write_json(&out, &report)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    write_bytes(&out, &buf)?;
                }
            }
            Ok(if report.converged { Status::Ok } else { Status::NotConverged })
        }
        Command::Tightness { seq, a, out } => {
            let rows = tightness_scan(&sequence(&seq)?, a)?;
            match out.format {
                Format::Json => write_json(&out, &rows)?,
                Format::Csv => {
                    let mut text = String::from("n,points,diameter\n");
                    for r in &rows {
                        text.push_str(&format!("{},{},{}\n", r.n, r.points, r.diameter));
                    }
                    write_bytes(&out, text.as_bytes())?;
                }
            }
            Ok(Status::Ok)
        }
    }
}

#[derive(Serialize)]
struct Scalar {
    #[serde(with = "extended::scalar")]
    value: f64,
}

#[derive(Serialize)]
struct Gap {
    #[serde(with = "extended::scalar")]
    value: f64,
    #[serde(with = "extended::scalar")]
    reconstruction: f64,
    #[serde(with = "extended::scalar")]
    gap: f64,
}

fn pit_schedule(args: &PitArgs) -> Result<PitSchedule> {
    let base = match (args.cmax, args.schedule.as_str()) {
        (Some(k), "default") => PitSchedule::doubling(k)?,
        (Some(_), _) => {
            return Err(Error::InvalidOptions("give either --cmax or an explicit --schedule".into()))
        }
        (None, "default") => PitSchedule::default(),
        (None, list) => {
            let d = PitSchedule::default();
            PitSchedule::new(parse_list(list)?, d.stall_tolerance(), d.divergence_slope())?
        }
    };
    match args.tol {
        Some(t) => base.with_stall_tolerance(t),
        None => Ok(base),
    }
}

fn parse_list<T: std::str::FromStr>(list: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    list.split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|e| Error::Parse {
                line: None,
                field: Some("schedule".into()),
                message: format!("{s:?}: {e}"),
            })
        })
        .collect()
}

fn ascent_options(args: &AscentArgs) -> AscentOptions {
    let mut opts = AscentOptions {
        exact_gradient: args.exact_gradient,
        ..Default::default()
    };
    if let Some(t) = args.tol {
        opts.grad_tolerance = t;
    }
    opts
}

fn sequence(args: &SequenceArgs) -> Result<MeasureSequence> {
    if let Some(path) = &args.measure {
        return ingest_sequence(path);
    }
    let p = args.p.expect("clap requires --p without --measure");
    let schedule: Vec<u64> = if args.schedule == "default" {
        DEFAULT_SAMPLE_SIZES.to_vec()
    } else {
        parse_list(&args.schedule)?
    };
    cramer_sequence(p, &schedule)
}

/// Without a sequence file: the escaping bump `min(1, x/2^k)` on a tail
/// space, `2^{-k}` times the constant one elsewhere.
fn sigma_check(l: &FunctionalHandle, path: Option<&Path>) -> Result<CheckReport> {
    let space = l.space();
    let terms = match path {
        Some(p) => inputs::read_json::<inputs::SequenceDoc>(p)?
            .terms
            .into_iter()
            .map(|t| BoundedFunction::new(space, t))
            .collect::<Result<Vec<_>>>()?,
        None => match (space.horizon(), space.metric()) {
            (Some(h), Metric::Line(c)) => {
                let grid: Vec<f64> = c[..h].iter().map(|a| a.tan()).collect();
                (0..=40)
                    .map(|k| tail_witness(&grid, 2f64.powi(k)).to_function(space))
                    .collect::<Result<Vec<_>>>()?
            }
            _ => (0..=40)
                .map(|k| BoundedFunction::constant(space, 0.5f64.powi(k)))
                .collect::<Result<Vec<_>>>()?,
        },
    };
    axioms::check_sigma_continuity(l, &validate_decreasing(terms)?)
}

fn check_csv(r: &CheckReport) -> String {
    format!(
        "property,functional,trials,violations,worst_violation,seed\n{},{},{},{},{},{}\n",
        r.property.name(),
        r.functional,
        r.trials,
        r.violations,
        format_ext(r.worst_violation),
        r.seed
    )
}

fn emit_conjugate(out: &Output, report: &ConjugateReport) -> Result<Status> {
    match out.format {
        Format::Json => write_json(out, &report.to_json())?,
        Format::Csv => {
            let mut text = String::from("index,maximizer\n");
            for (i, v) in report.maximizer.values().iter().enumerate() {
                text.push_str(&format!("{i},{v}\n"));
            }
            text.push_str(&format!("value,{}\n", format_ext(report.value)));
            write_bytes(out, text.as_bytes())?;
        }
    }
    Ok(if report.converged { Status::Ok } else { Status::NotConverged })
}

fn emit_value<T: Serialize>(out: &Output, value: &T) -> Result<()> {
    match out.format {
        Format::Json => write_json(out, value),
        Format::Csv => {
            let json = serde_json::to_value(value).map_err(|e| Error::parse(e.to_string()))?;
            let obj = json.as_object().expect("scalar reports are objects");
            let header: Vec<&str> = obj.keys().map(String::as_str).collect();
            let row: Vec<String> = obj
                .values()
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                .collect();
            write_bytes(out, format!("{}\n{}\n", header.join(","), row.join(",")).as_bytes())
        }
    }
}

fn write_json<T: Serialize>(out: &Output, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(e.to_string()))?;
    text.push('\n');
    write_bytes(out, text.as_bytes())
}

fn write_bytes(out: &Output, bytes: &[u8]) -> Result<()> {
    match &out.output {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

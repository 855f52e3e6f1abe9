//! The `splashkit` command line.
//!
//! Every flag can also be set through an environment variable named
//! `SPLASHKIT_<FLAG>`, e.g. `SPLASHKIT_SCHEMAS`. Output is human-readable by
//! default; `--format machine` prints one JSON document instead.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dataset::{load_dataset, summary_stats, LoadedDataset, Split, Strictness};
use crate::diff::{classify_edit, diff_schema_items, error_report, query_segments, Rollup};
use crate::error::{Error, Result};
use crate::explain::{coverage, explain, load_library, TemplateLibrary};
use crate::metrics::{end_to_end_accuracy, exact_set_match, EvalOutcome};
use crate::rerank::{load_beams, rerank, RerankMethod};
use crate::service::{serve, ServiceConfig};
use crate::sql::{parse_sql, render_sql, SchemaSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "splashkit",
    version,
    about = "Explain, diff, evaluate and re-rank text-to-SQL parses"
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value = "human", env = "SPLASHKIT_FORMAT")]
    pub format: Format,
    /// Schema file or directory.
    #[arg(long, global = true, env = "SPLASHKIT_SCHEMAS")]
    pub schemas: Option<PathBuf>,
    /// Skip invalid dataset records instead of failing.
    #[arg(long, global = true, env = "SPLASHKIT_LENIENT")]
    pub lenient: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the numbered explanation of a query.
    Explain {
        #[arg(long, env = "SPLASHKIT_SQL")]
        sql: String,
        #[arg(long, env = "SPLASHKIT_DB")]
        db: String,
        #[arg(long, env = "SPLASHKIT_TEMPLATES")]
        templates: Option<PathBuf>,
    },
    /// Edit segments between two queries, or a corpus error report.
    Diff(DiffArgs),
    /// Correction accuracy of predictions against a dataset's gold parses.
    Eval(EvalArgs),
    /// Run a re-ranking baseline over beams.
    Rerank {
        #[arg(long, env = "SPLASHKIT_BEAMS")]
        beams: PathBuf,
        #[arg(long, env = "SPLASHKIT_DATA")]
        data: PathBuf,
        #[arg(long, env = "SPLASHKIT_METHOD")]
        method: String,
        #[arg(long, default_value_t = 0, env = "SPLASHKIT_SEED")]
        seed: u64,
    },
    /// Per-split dataset statistics.
    Stats {
        #[arg(long, env = "SPLASHKIT_DATA")]
        data: PathBuf,
    },
    /// Template coverage of the wrong parses in a dataset.
    Coverage {
        #[arg(long, env = "SPLASHKIT_DATA")]
        data: PathBuf,
        #[arg(long, env = "SPLASHKIT_TEMPLATES")]
        templates: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SPLASHKIT_CONFIG")]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    #[arg(long, env = "SPLASHKIT_PRED", required_unless_present = "report")]
    pub pred: Option<String>,
    #[arg(long, env = "SPLASHKIT_GOLD", required_unless_present = "report")]
    pub gold: Option<String>,
    #[arg(long, env = "SPLASHKIT_DB", required_unless_present = "report")]
    pub db: Option<String>,
    /// Report over every record of `--data` instead.
    #[arg(long, requires = "data")]
    pub report: bool,
    #[arg(long, env = "SPLASHKIT_DATA")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// One predicted SQL per line, aligned with the dataset records.
    #[arg(long, env = "SPLASHKIT_PRED_FILE")]
    pub pred_file: PathBuf,
    #[arg(long, env = "SPLASHKIT_DATA")]
    pub data: PathBuf,
    #[arg(long, requires_all = ["supported", "total"])]
    pub base_correct: Option<u64>,
    #[arg(long, requires_all = ["base_correct", "total"])]
    pub supported: Option<u64>,
    #[arg(long, requires_all = ["base_correct", "supported"])]
    pub total: Option<u64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn schemas(cli: &Cli) -> Result<SchemaSet> {
    let path = cli
        .schemas
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--schemas (or SPLASHKIT_SCHEMAS) is required".into()))?;
    SchemaSet::load(path)
}

fn dataset(cli: &Cli, path: &Path, schemas: &SchemaSet) -> Result<LoadedDataset> {
    let strictness = if cli.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    load_dataset(path, schemas, strictness)
}

fn library(path: Option<&PathBuf>) -> Result<TemplateLibrary> {
    match path {
        Some(p) => load_library(p),
        None => Ok(TemplateLibrary::default()),
    }
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{value}").map_err(io_err)
}

/// Runs an already parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let machine = cli.format == Format::Machine;
    match &cli.command {
        Command::Explain { sql, db, templates } => {
            let schemas = schemas(cli)?;
            let schema = schemas.require(db)?;
            let query = parse_sql(sql, schema)?;
            let e = explain(&query, schema, &library(templates.as_ref())?)?;
            if machine {
                print_json(out, &json!({ "steps": e.steps }))?;
            } else {
                for line in e.numbered() {
                    writeln!(out, "{line}").map_err(io_err)?;
                }
            }
        }
        Command::Diff(args) if args.report => {
            let schemas = schemas(cli)?;
            let data = dataset(cli, args.data.as_ref().expect("clap requires data"), &schemas)?;
            let pairs: Vec<_> = data
                .examples
                .iter()
                .map(|e| (e.predicted.clone(), e.gold.clone()))
                .collect();
            let report = error_report(&pairs, &schemas, &Rollup::default())?;
            if machine {
                print_json(out, &serde_json::to_value(&report)?)?;
            } else {
                write!(out, "{}", report.to_table()).map_err(io_err)?;
            }
        }
        Command::Diff(args) => {
            let schemas = schemas(cli)?;
            let db = args.db.as_deref().expect("clap requires db");
            let schema = schemas.require(db)?;
            let pred = parse_sql(args.pred.as_deref().expect("clap requires pred"), schema)?;
            let gold = parse_sql(args.gold.as_deref().expect("clap requires gold"), schema)?;
            let segments = query_segments(&pred, &gold);
            let items: Vec<String> = diff_schema_items(&pred, &gold).into_iter().collect();
            if machine {
                let segs: Vec<_> = segments
                    .iter()
                    .map(|s| {
                        json!({
                            "kind": s.kind.name(),
                            "position": s.position,
                            "removed": s.removed,
                            "added": s.added,
                            "category": classify_edit(s, schema).category.name(),
                        })
                    })
                    .collect();
                print_json(
                    out,
                    &json!({ "distance": segments.len(), "segments": segs, "schema_items": items }),
                )?;
            } else {
                let noun = if segments.len() == 1 { "edit" } else { "edits" };
                writeln!(out, "{} {noun}", segments.len()).map_err(io_err)?;
                for s in &segments {
                    writeln!(
                        out,
                        "  {} at {}: [{}] -> [{}] ({})",
                        s.kind.name(),
                        s.position,
                        s.removed.join(" "),
                        s.added.join(" "),
                        classify_edit(s, schema).category.name()
                    )
                    .map_err(io_err)?;
                }
                writeln!(out, "schema items: {{{}}}", items.join(", ")).map_err(io_err)?;
            }
        }
        Command::Eval(args) => {
            let schemas = schemas(cli)?;
            let data = dataset(cli, &args.data, &schemas)?;
            let path = &args.pred_file;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let preds: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            if preds.is_empty() {
                return Err(Error::InvalidArgument(format!("{}: no predictions", path.display())));
            }
            if preds.len() != data.examples.len() {
                return Err(Error::LengthMismatch(preds.len(), data.examples.len()));
            }
            let mut flags = Vec::with_capacity(preds.len());
            for (p, ex) in preds.iter().zip(&data.examples) {
                let q = parse_sql(p, schemas.require(&ex.record.db_id)?)?;
                flags.push(exact_set_match(&q, &ex.gold)?);
            }
            let outcome = EvalOutcome::from_flags(flags);
            let pct = 100.0 * outcome.correction_accuracy;
            let e2e = match (args.base_correct, args.supported, args.total) {
                (Some(b), Some(s), Some(t)) => Some(end_to_end_accuracy(b, s, t, pct)?),
                _ => None,
            };
            if machine {
                print_json(
                    out,
                    &json!({ "examples": outcome.matches.len(), "correction_accuracy": pct, "end_to_end_accuracy": e2e }),
                )?;
            } else {
                writeln!(out, "examples: {}", outcome.matches.len()).map_err(io_err)?;
                writeln!(out, "correction accuracy: {pct:.2}").map_err(io_err)?;
                if let Some(v) = e2e {
                    writeln!(out, "end-to-end accuracy: {v:.2}").map_err(io_err)?;
                }
            }
        }
        Command::Rerank {
            beams,
            data,
            method,
            seed,
        } => {
            let method: RerankMethod = method.parse()?;
            let schemas = schemas(cli)?;
            let data = dataset(cli, data, &schemas)?;
            let beams: std::collections::BTreeMap<String, _> =
                load_beams(beams)?.into_iter().map(|b| (b.id.clone(), b)).collect();
            let mut rows = Vec::new();
            let mut flags = Vec::new();
            for (i, ex) in data.examples.iter().enumerate() {
                let Some(id) = &ex.record.beam else { continue };
                let record = beams.get(id).ok_or_else(|| Error::InvalidRecord {
                    record: id.clone(),
                    reason: "no beam with this id".into(),
                })?;
                let beam = record.parse(schemas.require(&ex.record.db_id)?)?;
                let choice = rerank(
                    method,
                    &beam,
                    &ex.predicted,
                    &ex.record.feedback,
                    seed.wrapping_add(i as u64),
                )?;
                let hit = exact_set_match(&choice.chosen.query, &ex.gold)?;
                flags.push(hit);
                rows.push((id.clone(), choice.chosen.rank, render_sql(&choice.chosen.query), hit));
            }
            let outcome = EvalOutcome::from_flags(flags);
            let pct = 100.0 * outcome.correction_accuracy;
            if machine {
                let choices: Vec<_> = rows
                    .iter()
                    .map(|(id, rank, sql, hit)| json!({ "id": id, "rank": rank, "sql": sql, "correct": hit }))
                    .collect();
                print_json(
                    out,
                    &json!({ "method": method.name(), "seed": seed, "choices": choices, "correction_accuracy": pct }),
                )?;
            } else {
                for (id, rank, sql, hit) in &rows {
                    let mark = if *hit { "correct" } else { "wrong" };
                    writeln!(out, "{id}\trank {rank}\t{mark}\t{sql}").map_err(io_err)?;
                }
                writeln!(out, "method: {}", method.name()).map_err(io_err)?;
                writeln!(out, "correction accuracy: {pct:.2}").map_err(io_err)?;
            }
        }
        Command::Stats { data } => {
            let schemas = schemas(cli)?;
            let data = dataset(cli, data, &schemas)?;
            let summary = summary_stats(&data.records());
            if machine {
                print_json(out, &serde_json::to_value(&summary)?)?;
            } else {
                writeln!(
                    out,
                    "{:<6} {:>8} {:>9} {:>9} {:>11} {:>11} {:>9} {:>10}",
                    "split",
                    "examples",
                    "databases",
                    "questions",
                    "wrong_parses",
                    "gold_parses",
                    "feedbacks",
                    "avg_tokens"
                )
                .map_err(io_err)?;
                for split in Split::ALL {
                    let s = summary.get(split);
                    writeln!(
                        out,
                        "{:<6} {:>8} {:>9} {:>9} {:>11} {:>11} {:>9} {:>10.2}",
                        split.name(),
                        s.examples,
                        s.databases,
                        s.unique_questions,
                        s.unique_wrong_parses,
                        s.unique_gold_parses,
                        s.unique_feedbacks,
                        s.avg_feedback_tokens
                    )
                    .map_err(io_err)?;
                }
                if !data.rejected.is_empty() {
                    writeln!(out, "skipped {} invalid record(s)", data.rejected.len()).map_err(io_err)?;
                }
            }
        }
        Command::Coverage { data, templates } => {
            let schemas = schemas(cli)?;
            let data = dataset(cli, data, &schemas)?;
            let lib = load_library(templates)?;
            let queries: Vec<_> = data.examples.iter().map(|e| e.predicted.clone()).collect();
            let report = coverage(&queries, &lib);
            if machine {
                print_json(out, &serde_json::to_value(&report)?)?;
            } else {
                writeln!(
                    out,
                    "coverage: {}/{} ({:.2}%)",
                    report.matched,
                    report.total,
                    100.0 * report.fraction
                )
                .map_err(io_err)?;
                for (key, n) in &report.unmatched {
                    writeln!(out, "{n:>5}  {key}").map_err(io_err)?;
                }
            }
        }
        Command::Serve { config } => {
            let cfg = ServiceConfig::load(config)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            rt.block_on(serve(cfg))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flags_are_rejected() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["splashkit", "stats", "--data", "x", "--bogus"], &mut out, &mut err);
        assert_ne!(code, 0);
        assert!(String::from_utf8(err).unwrap().contains("--bogus"));
    }

    #[test]
    fn bad_method_is_an_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            ["splashkit", "rerank", "--beams", "b", "--data", "d", "--method", "best"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 1);
        assert!(String::from_utf8(err).unwrap().contains("unknown re-ranking method"));
    }
}

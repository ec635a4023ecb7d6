//! `slicekit` — anonymize microdata by slicing and measure what the
//! release gives up (classifier accuracy) and what it protects
//! (membership disclosure), with generalization and bucketization
//! baselines for comparison.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slicekit::membership::DEFAULT_CANDIDATE_CAP;
use slicekit::SliceError;

use commands::{need, AnonymizeArgs, Ctx, MembershipArgs, ReportKind, UtilityArgs};
use config::{CellVariant, Preset, RunConfig, Technique};

#[derive(Parser)]
#[command(
    name = "slicekit",
    version,
    about = "Microdata anonymization by slicing, with baselines and evaluation suites"
)]
struct Cli {
    /// TOML file of defaults; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; every randomized step derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop incomplete rows, project an attribute preset, bin continuous
    /// attributes, and persist the result with its realized schema.
    Prepare {
        /// Raw CSV file.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Schema TOML describing the raw file.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Attribute subset to keep.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Write the pairwise attribute-association matrix of a prepared table.
    Correlate {
        /// Prepared CSV file.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Schema TOML for the prepared file.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Produce an anonymized release with the chosen technique.
    Anonymize {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, value_enum)]
        technique: Option<Technique>,
        /// Diversity requirement.
        #[arg(long)]
        l: Option<f64>,
        /// Column count for slicing (sensitive column included).
        #[arg(long)]
        columns: Option<usize>,
        /// QIs kept alongside the sensitive attribute in its column.
        #[arg(long)]
        alpha: Option<usize>,
        /// Generalized cell rendering.
        #[arg(long, value_enum)]
        variant: Option<CellVariant>,
        /// Minimum rows per coarsened column region; 1 leaves columns exact.
        #[arg(long)]
        min_column_rows: Option<usize>,
    },
    /// Classifier accuracy per technique and diversity level.
    Utility {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Technique to evaluate (repeatable).
        #[arg(long = "technique", value_enum)]
        techniques: Vec<Technique>,
        /// Attribute the classifier predicts.
        #[arg(long)]
        target: Option<String>,
        /// Diversity level to evaluate (repeatable).
        #[arg(long = "l")]
        ls: Vec<f64>,
        #[arg(long)]
        columns: Option<usize>,
        #[arg(long)]
        alpha: Option<usize>,
        /// Cross-validation folds.
        #[arg(long)]
        folds: Option<usize>,
        /// Fresh releases averaged per randomized technique.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Fake-tuple counts of sliced releases over random bucket groupings.
    Membership {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Rows per bucket (repeatable).
        #[arg(long = "bucket-size")]
        bucket_sizes: Vec<usize>,
        #[arg(long)]
        columns: Option<usize>,
        #[arg(long)]
        alpha: Option<usize>,
        /// Candidate-space ceiling before the analysis refuses to enumerate.
        #[arg(long)]
        cap: Option<u128>,
    },
    /// Merge result CSVs of one kind into a single sorted table on stdout.
    Report {
        #[arg(long, value_enum)]
        kind: ReportKind,
        /// Result files to merge.
        inputs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out: cli
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
    };
    match cli.command {
        Command::Prepare {
            data,
            schema,
            preset,
        } => {
            let data = need(data.or(file.dataset.data), "--data")?;
            let schema = need(schema.or(file.dataset.schema), "--schema")?;
            let preset = preset.or(file.dataset.preset).unwrap_or(Preset::Custom);
            commands::prepare(&ctx, &data, &schema, preset)
        }
        Command::Correlate { data, schema } => {
            let data = need(data.or(file.dataset.data), "--data")?;
            let schema = need(schema.or(file.dataset.schema), "--schema")?;
            commands::correlate(&ctx, &data, &schema)
        }
        Command::Anonymize {
            data,
            schema,
            technique,
            l,
            columns,
            alpha,
            variant,
            min_column_rows,
        } => {
            let data = need(data.or(file.dataset.data), "--data")?;
            let schema = need(schema.or(file.dataset.schema), "--schema")?;
            let args = AnonymizeArgs {
                technique: need(technique.or(file.anonymize.technique), "--technique")?,
                l: need(l.or(file.anonymize.l), "--l")?,
                columns: columns.or(file.anonymize.columns).unwrap_or(2),
                alpha: alpha.or(file.anonymize.alpha).unwrap_or(2),
                variant: variant
                    .or(file.anonymize.variant)
                    .unwrap_or(CellVariant::Interval),
                min_column_rows: min_column_rows
                    .or(file.anonymize.min_column_rows)
                    .unwrap_or(1),
            };
            commands::anonymize(&ctx, &data, &schema, &args)
        }
        Command::Utility {
            data,
            schema,
            techniques,
            target,
            ls,
            columns,
            alpha,
            folds,
            repeats,
        } => {
            let data = need(data.or(file.dataset.data), "--data")?;
            let schema = need(schema.or(file.dataset.schema), "--schema")?;
            let techniques = if techniques.is_empty() {
                need(file.anonymize.technique.map(|t| vec![t]), "--technique")?
            } else {
                techniques
            };
            let ls = if ls.is_empty() {
                file.anonymize.l.map(|l| vec![l]).unwrap_or_default()
            } else {
                ls
            };
            let args = UtilityArgs {
                techniques,
                target: need(target.or(file.utility.target), "--target")?,
                ls,
                columns: columns.or(file.anonymize.columns).unwrap_or(2),
                alpha: alpha.or(file.anonymize.alpha).unwrap_or(2),
                folds: folds.or(file.utility.folds).unwrap_or(10),
                repeats: repeats.or(file.utility.repeats).unwrap_or(5),
            };
            commands::utility(&ctx, &data, &schema, &args)
        }
        Command::Membership {
            data,
            schema,
            bucket_sizes,
            columns,
            alpha,
            cap,
        } => {
            let data = need(data.or(file.dataset.data), "--data")?;
            let schema = need(schema.or(file.dataset.schema), "--schema")?;
            let bucket_sizes = if bucket_sizes.is_empty() {
                need(file.membership.bucket_size, "--bucket-size")?
            } else {
                bucket_sizes
            };
            let args = MembershipArgs {
                bucket_sizes,
                columns: columns.or(file.membership.columns).unwrap_or(2),
                alpha: alpha.or(file.membership.alpha).unwrap_or(2),
                cap: cap.or(file.membership.cap).unwrap_or(DEFAULT_CANDIDATE_CAP),
            };
            commands::membership(&ctx, &data, &schema, &args)
        }
        Command::Report { kind, inputs } => commands::report(&ctx, kind, &inputs),
    }
}

/// Map failures to the documented exit statuses: 2 for configuration
/// problems, 3 when no bucketing can meet the diversity requirement, 4 when
/// a resource cap refuses the computation, 1 for everything else.
fn exit_status(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SliceError>() {
        Some(SliceError::Unsatisfiable { .. }) => 3,
        Some(SliceError::CapExceeded { .. }) => 4,
        Some(SliceError::Io(_)) | Some(SliceError::Csv(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_status(&err))
        }
    }
}

//! The six subcommands: dataset preparation, correlation measurement,
//! anonymization, the two evaluation suites, and result merging.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::Result;
use slicekit::baselines::{bucketize, mondrian_generalize, GenVariant};
use slicekit::correlation::correlation_matrix;
use slicekit::membership::{membership_report, random_group};
use slicekit::partition::{special_partition, AttributePartition};
use slicekit::seed::derive_seed;
use slicekit::slicing::{
    column_generalize, diversity_check, generalize_columns, slice, tuple_partition, SlicedTable,
};
use slicekit::table::{AttrKind, DiscretizationSpec, SchemaConfig, Value};
use slicekit::workload::{run_workload, WorkloadInput};
use slicekit::{SliceError, Table};

use crate::config::{CellVariant, Preset, Technique};
use crate::output::{
    correlation_csv, generalized_csv, rows_csv, sliced_csv, table_csv, write_atomic, Manifest, NA,
};

/// Settings shared by every command.
pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    SliceError::Config(msg.into()).into()
}

/// Unwrap a required setting with a config error naming the flag.
pub fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| config_err(format!("missing required setting: {flag}")))
}

fn load_table(data: &Path, schema: &Path) -> Result<Table> {
    let config = SchemaConfig::from_toml_file(schema)?;
    Ok(Table::load_csv(data, &config)?)
}

/// Load raw data, drop rows with missing values, apply the preset's
/// projection, and bin every continuous attribute so downstream stages see a
/// fully categorical table. Writes the prepared CSV, its realized schema,
/// and a manifest of row and distinct-value counts.
pub fn prepare(ctx: &Ctx, data: &Path, schema: &Path, preset: Preset) -> Result<()> {
    let config = SchemaConfig::from_toml_file(schema)?;
    let raw = Table::load_csv(data, &config)?;
    let rows_raw = raw.n_rows();
    let mut table = raw.filter_missing();
    if let Some(keep) = preset.projection() {
        table = table.project_names(keep)?;
    }

    let mut manifest = Manifest::new("prepare");
    manifest
        .put("data", data.display())
        .put("schema", schema.display())
        .put("preset", format!("{preset:?}").to_lowercase())
        .put("rows_raw", rows_raw)
        .put("rows", table.n_rows())
        .put("attributes", table.n_attrs());

    // Bin continuous attributes; bin counts come from the schema config
    // (default 8), clamped to one bin for constant attributes.
    let bins_by_name: Vec<(String, usize)> = config
        .attributes
        .iter()
        .map(|a| (a.name.clone(), a.bins.unwrap_or(8)))
        .collect();
    for a in 0..table.n_attrs() {
        if table.schema().attr(a).kind() != AttrKind::Continuous {
            continue;
        }
        let name = table.schema().attr(a).name.clone();
        let (lo, hi) = table.schema().attr(a).continuous_bounds()?;
        let configured = bins_by_name
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, b)| b)
            .unwrap_or(8);
        let bins = if hi > lo { configured } else { 1 };
        let spec = DiscretizationSpec::equal_width(table.schema(), a, bins)?;
        table = table.discretize(&spec)?;
        manifest.put(&format!("bins.{name}"), bins);
    }

    for a in 0..table.n_attrs() {
        let distinct: BTreeSet<Value> = (0..table.n_rows())
            .map(|r| table.value(r, a))
            .filter(|v| *v != Value::Missing)
            .collect();
        manifest.put(
            &format!("distinct.{}", table.schema().attr(a).name),
            distinct.len(),
        );
    }

    let data_out = ctx.path("prepared.csv");
    let schema_out = ctx.path("prepared-schema.toml");
    write_atomic(&data_out, &table_csv(&table)?)?;
    write_atomic(
        &schema_out,
        table.to_schema_config(NA).to_toml_string().as_bytes(),
    )?;
    manifest
        .put("output.data", data_out.display())
        .put("output.schema", schema_out.display());
    manifest.write(&ctx.path("prepare.manifest"))?;
    println!(
        "prepared {} rows x {} attributes -> {}",
        table.n_rows(),
        table.n_attrs(),
        data_out.display()
    );
    Ok(())
}

/// Pairwise association matrix of the prepared table.
pub fn correlate(ctx: &Ctx, data: &Path, schema: &Path) -> Result<()> {
    let table = load_table(data, schema)?;
    let matrix = correlation_matrix(&table)?;
    let out = ctx.path("correlation.csv");
    write_atomic(&out, &correlation_csv(&matrix)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn render_partition(table: &Table, partition: &AttributePartition) -> String {
    partition
        .columns()
        .iter()
        .map(|col| {
            col.iter()
                .map(|&a| table.schema().attr(a).name.as_str())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Build a sliced release: cluster attributes into columns, optionally
/// coarsen the non-sensitive columns, partition tuples under the diversity
/// requirement, and permute. Returns the release and the manifest entries
/// describing every decision.
fn build_sliced(
    table: &Table,
    l: f64,
    columns: usize,
    alpha: usize,
    min_column_rows: usize,
    seed: u64,
    manifest: &mut Manifest,
) -> Result<SlicedTable> {
    let cluster_seed = derive_seed(seed, "cluster");
    let permute_seed = derive_seed(seed, "permute");
    manifest
        .put("seed.cluster", cluster_seed)
        .put("seed.permute", permute_seed);

    let partition = special_partition(table, columns, alpha, cluster_seed)?;
    manifest.put("partition", render_partition(table, &partition));

    let (worked, working_partition);
    if min_column_rows > 1 {
        // Coarsen each non-sensitive column into regions of at least the
        // requested population, then re-aim the partition at the merged
        // attributes by name.
        let sensitive = table.schema().require_sensitive()?;
        let plain: Vec<Vec<usize>> = partition
            .columns()
            .iter()
            .take(partition.n_columns() - 1)
            .cloned()
            .collect();
        let gens = plain
            .iter()
            .map(|col| column_generalize(table, col, min_column_rows))
            .collect::<Result<Vec<_>, _>>()?;
        let merged = generalize_columns(table, &gens)?;
        for (col, g) in plain.iter().zip(&gens) {
            let name: Vec<&str> = col
                .iter()
                .map(|&a| table.schema().attr(a).name.as_str())
                .collect();
            manifest.put(&format!("regions.{}", name.join("+")), g.n_regions());
        }
        let mut new_columns: Vec<Vec<usize>> = plain
            .iter()
            .map(|col| {
                let name = col
                    .iter()
                    .map(|&a| table.schema().attr(a).name.as_str())
                    .collect::<Vec<_>>()
                    .join("+");
                Ok(vec![merged.schema().index_of(&name)?])
            })
            .collect::<Result<_, SliceError>>()?;
        let last: Result<Vec<usize>, SliceError> = partition
            .column(partition.sensitive_column())
            .iter()
            .map(|&a| {
                let name = &table.schema().attr(a).name;
                if a == sensitive {
                    Ok(merged.schema().require_sensitive()?)
                } else {
                    Ok(merged.schema().index_of(name)?)
                }
            })
            .collect();
        new_columns.push(last?);
        working_partition = AttributePartition::new(new_columns, merged.schema())?;
        worked = merged;
    } else {
        worked = table.clone();
        working_partition = partition;
    }

    let buckets = tuple_partition(&worked, &working_partition, l)?;
    manifest.put("buckets", buckets.len());
    manifest.put(
        "bucket_sizes",
        buckets
            .iter()
            .map(|b| b.len().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    let sliced = slice(&worked, &working_partition, &buckets, permute_seed)?;
    // Belt and braces: the published release re-checks its own requirement.
    debug_assert!(diversity_check(
        &worked,
        sliced.partition(),
        &buckets,
        l
    )?);
    Ok(sliced)
}

pub struct AnonymizeArgs {
    pub technique: Technique,
    pub l: f64,
    pub columns: usize,
    pub alpha: usize,
    pub variant: CellVariant,
    pub min_column_rows: usize,
}

/// Anonymize a prepared table and write the release plus a manifest that
/// pins every parameter and derived seed; identical runs are byte-identical.
pub fn anonymize(ctx: &Ctx, data: &Path, schema: &Path, args: &AnonymizeArgs) -> Result<()> {
    let table = load_table(data, schema)?;
    let mut manifest = Manifest::new("anonymize");
    manifest
        .put("technique", args.technique.name())
        .put("data", data.display())
        .put("schema", schema.display())
        .put("rows", table.n_rows())
        .put("l", args.l)
        .put("seed", ctx.seed);

    let out = ctx.path(&format!("{}.csv", args.technique.name()));
    let bytes = match args.technique {
        Technique::Original => {
            return Err(config_err(
                "anonymize needs a technique that changes the data; \
                 `original` is only for utility runs",
            ));
        }
        Technique::Generalize => {
            let variant = match args.variant {
                CellVariant::Interval => GenVariant::Interval,
                CellVariant::Multiset => GenVariant::Multiset,
            };
            manifest.put("variant", format!("{:?}", args.variant).to_lowercase());
            let gen = mondrian_generalize(&table, args.l, variant)?;
            manifest.put("buckets", gen.n_buckets());
            generalized_csv(&gen)?
        }
        Technique::Bucketize => {
            let permute_seed = derive_seed(ctx.seed, "permute");
            manifest.put("seed.permute", permute_seed);
            let bucketized = bucketize(&table, args.l, permute_seed)?;
            manifest.put("buckets", bucketized.n_buckets());
            sliced_csv(bucketized.sliced())?
        }
        Technique::Slice => {
            manifest
                .put("columns", args.columns)
                .put("alpha", args.alpha)
                .put("min_column_rows", args.min_column_rows);
            let sliced = build_sliced(
                &table,
                args.l,
                args.columns,
                args.alpha,
                args.min_column_rows,
                ctx.seed,
                &mut manifest,
            )?;
            sliced_csv(&sliced)?
        }
    };
    write_atomic(&out, &bytes)?;
    manifest.put("output", out.display());
    manifest.write(&ctx.path(&format!("{}.manifest", args.technique.name())))?;
    println!("wrote {}", out.display());
    Ok(())
}

pub struct UtilityArgs {
    pub techniques: Vec<Technique>,
    pub target: String,
    pub ls: Vec<f64>,
    pub columns: usize,
    pub alpha: usize,
    pub folds: usize,
    pub repeats: usize,
}

pub const UTILITY_HEADER: [&str; 9] = [
    "technique", "l", "columns", "alpha", "target", "folds", "repeats", "mean", "stddev",
];

/// Classifier accuracy per technique and diversity level; one CSV row per
/// configuration.
pub fn utility(ctx: &Ctx, data: &Path, schema: &Path, args: &UtilityArgs) -> Result<()> {
    let table = load_table(data, schema)?;
    let mut rows = Vec::new();
    for &technique in &args.techniques {
        let ls: &[f64] = if technique == Technique::Original {
            &[f64::NAN]
        } else {
            if args.ls.is_empty() {
                return Err(config_err(format!(
                    "technique {} needs at least one --l",
                    technique.name()
                )));
            }
            &args.ls
        };
        for &l in ls {
            let tag = if technique == Technique::Original {
                technique.name().to_string()
            } else {
                format!("{}/l{l}", technique.name())
            };
            let workload_seed = derive_seed(ctx.seed, &format!("{tag}/workload"));
            let result = match technique {
                Technique::Original => run_workload(
                    WorkloadInput::Original(&table),
                    &args.target,
                    args.folds,
                    args.repeats,
                    workload_seed,
                )?,
                Technique::Generalize => {
                    let gen = mondrian_generalize(&table, l, GenVariant::Interval)?;
                    run_workload(
                        WorkloadInput::Generalized(&gen),
                        &args.target,
                        args.folds,
                        args.repeats,
                        workload_seed,
                    )?
                }
                Technique::Bucketize => {
                    let bucketized =
                        bucketize(&table, l, derive_seed(ctx.seed, &format!("{tag}/permute")))?;
                    run_workload(
                        WorkloadInput::Bucketized(&bucketized),
                        &args.target,
                        args.folds,
                        args.repeats,
                        workload_seed,
                    )?
                }
                Technique::Slice => {
                    let mut scratch = Manifest::default();
                    let sliced = build_sliced(
                        &table,
                        l,
                        args.columns,
                        args.alpha,
                        1,
                        derive_seed(ctx.seed, &tag),
                        &mut scratch,
                    )?;
                    run_workload(
                        WorkloadInput::Sliced(&sliced),
                        &args.target,
                        args.folds,
                        args.repeats,
                        workload_seed,
                    )?
                }
            };
            let not_applicable = technique == Technique::Original;
            rows.push(vec![
                technique.name().to_string(),
                if not_applicable { String::new() } else { l.to_string() },
                if technique == Technique::Slice {
                    args.columns.to_string()
                } else {
                    String::new()
                },
                if technique == Technique::Slice {
                    args.alpha.to_string()
                } else {
                    String::new()
                },
                args.target.clone(),
                args.folds.to_string(),
                result.repeats.to_string(),
                format!("{:.6}", result.mean),
                format!("{:.6}", result.stddev),
            ]);
            println!(
                "{} l={} accuracy {:.4} +/- {:.4}",
                technique.name(),
                if not_applicable { "-".to_string() } else { l.to_string() },
                result.mean,
                result.stddev
            );
        }
    }
    let out = ctx.path("utility.csv");
    write_atomic(&out, &rows_csv(&UTILITY_HEADER, &rows)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub struct MembershipArgs {
    pub bucket_sizes: Vec<usize>,
    pub columns: usize,
    pub alpha: usize,
    pub cap: u128,
}

pub const MEMBERSHIP_HEADER: [&str; 12] = [
    "bucket_size",
    "columns",
    "alpha",
    "n_original",
    "n_original_distinct",
    "n_fake",
    "original_le10",
    "original_11_20",
    "original_gt20",
    "fake_le10",
    "fake_11_20",
    "fake_gt20",
];

/// Fake-tuple counts and matching histograms over randomly grouped buckets,
/// one CSV row per bucket size.
pub fn membership(ctx: &Ctx, data: &Path, schema: &Path, args: &MembershipArgs) -> Result<()> {
    let table = load_table(data, schema)?;
    let partition = special_partition(
        &table,
        args.columns,
        args.alpha,
        derive_seed(ctx.seed, "cluster"),
    )?;
    let mut rows = Vec::new();
    for &p in &args.bucket_sizes {
        let buckets = random_group(&table, p, derive_seed(ctx.seed, &format!("group/p{p}")))?;
        let sliced = slice(
            &table,
            &partition,
            &buckets,
            derive_seed(ctx.seed, &format!("permute/p{p}")),
        )?;
        let report = membership_report(&sliced, &table, args.cap)?;
        println!(
            "p={p}: {} original, {} fake",
            report.n_original, report.n_fake
        );
        rows.push(vec![
            p.to_string(),
            args.columns.to_string(),
            args.alpha.to_string(),
            report.n_original.to_string(),
            report.n_original_distinct.to_string(),
            report.n_fake.to_string(),
            report.histogram_original.low.to_string(),
            report.histogram_original.mid.to_string(),
            report.histogram_original.high.to_string(),
            report.histogram_fake.low.to_string(),
            report.histogram_fake.mid.to_string(),
            report.histogram_fake.high.to_string(),
        ]);
    }
    let out = ctx.path("membership.csv");
    write_atomic(&out, &rows_csv(&MEMBERSHIP_HEADER, &rows)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportKind {
    Utility,
    Membership,
}

/// Merge result CSVs of one kind into a single sorted table on stdout (and
/// into the output directory when inputs were given).
pub fn report(ctx: &Ctx, kind: ReportKind, inputs: &[PathBuf]) -> Result<()> {
    let header: &[&str] = match kind {
        ReportKind::Utility => &UTILITY_HEADER,
        ReportKind::Membership => &MEMBERSHIP_HEADER,
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    for path in inputs {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| config_err(format!("reading {}: {e}", path.display())))?;
        let got = reader
            .headers()
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        if got.iter().collect::<Vec<_>>() != header {
            return Err(config_err(format!(
                "{} does not look like a {kind:?} results file",
                path.display()
            )));
        }
        for record in reader.records() {
            let record = record.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            rows.push(record.iter().map(|s| s.to_string()).collect());
        }
    }
    let key = |row: &Vec<String>| -> (String, f64) {
        match kind {
            ReportKind::Utility => (row[0].clone(), row[1].parse().unwrap_or(f64::MAX)),
            ReportKind::Membership => (String::new(), row[0].parse().unwrap_or(f64::MAX)),
        }
    };
    rows.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });

    let bytes = rows_csv(header, &rows)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    if !inputs.is_empty() {
        let out = ctx.path(&format!("report-{}.csv", format!("{kind:?}").to_lowercase()));
        write_atomic(&out, &bytes)?;
    }
    Ok(())
}

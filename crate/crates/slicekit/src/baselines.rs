//! Comparison baselines: Mondrian generalization (interval and multiset
//! variants) and bucketization.
//!
//! Both share one bucketing rule: median cuts over the quasi-identifier
//! attributes, keeping every bucket's most frequent sensitive value strictly
//! below a `1/l` share. Generalization then blurs each bucket's
//! quasi-identifier cells into ranges, sets or multisets; bucketization keeps
//! them exact and only severs their link to the sensitive values.

use crate::error::{Result, SliceError};
use crate::mondrian::{median_split, split_order};
use crate::partition::AttributePartition;
use crate::slicing::{slice, validate_buckets, Bucket, SlicedTable};
use crate::table::{AttrKind, Schema, Table, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

/// How generalized quasi-identifier cells are published.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenVariant {
    /// Continuous cells become min..max intervals, categorical cells become
    /// value sets.
    Interval,
    /// Every cell becomes the bucket's exact value multiset.
    Multiset,
}

/// One generalized quasi-identifier cell, shared by all rows of its bucket.
#[derive(Debug, Clone, PartialEq)]
pub enum GenCell {
    /// Narrowest interval containing the bucket's values.
    Interval(Value, Value),
    /// Distinct values present, ascending.
    Set(Vec<Value>),
    /// (value, occurrence count) pairs, ascending by value.
    Multiset(Vec<(Value, usize)>),
}

impl GenCell {
    /// Whether the original value is still accounted for by this cell.
    pub fn contains(&self, v: Value) -> bool {
        match self {
            GenCell::Interval(lo, hi) => *lo <= v && v <= *hi,
            GenCell::Set(values) => values.contains(&v),
            GenCell::Multiset(counts) => counts.iter().any(|&(x, _)| x == v),
        }
    }

    /// Render for CSV output: `lo..hi`, `{a|b}`, or `a:2;b:1`.
    pub fn render(&self, schema: &Schema, attr: usize, missing: &str) -> String {
        match self {
            GenCell::Interval(lo, hi) => format!(
                "{}..{}",
                schema.format_value(attr, *lo, missing),
                schema.format_value(attr, *hi, missing)
            ),
            GenCell::Set(values) => {
                let parts: Vec<String> = values
                    .iter()
                    .map(|&v| schema.format_value(attr, v, missing))
                    .collect();
                format!("{{{}}}", parts.join("|"))
            }
            GenCell::Multiset(counts) => counts
                .iter()
                .map(|&(v, n)| format!("{}:{n}", schema.format_value(attr, v, missing)))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

/// One bucket of a generalized release: which source rows it holds, one
/// generalized cell per quasi-identifier, and the untouched sensitive values
/// in row order.
#[derive(Debug, Clone)]
pub struct GenBucket {
    pub rows: Vec<usize>,
    /// Indexed parallel to [`GeneralizedTable::qi_attrs`].
    pub cells: Vec<GenCell>,
    pub sa_values: Vec<Value>,
}

/// A generalization of a table: every row is published with its bucket's
/// shared quasi-identifier cells and its own sensitive value.
#[derive(Debug, Clone)]
pub struct GeneralizedTable {
    schema: Arc<Schema>,
    variant: GenVariant,
    qi_attrs: Vec<usize>,
    sensitive: usize,
    buckets: Vec<GenBucket>,
}

impl GeneralizedTable {
    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn variant(&self) -> GenVariant {
        self.variant
    }

    /// Quasi-identifier attribute indices, ascending.
    pub fn qi_attrs(&self) -> &[usize] {
        &self.qi_attrs
    }

    pub fn sensitive_attr(&self) -> usize {
        self.sensitive
    }

    pub fn buckets(&self) -> &[GenBucket] {
        &self.buckets
    }

    pub fn n_buckets(&self) -> usize {
        self.buckets.len()
    }
}

fn sa_frequencies(source: &Table, rows: &[usize], sensitive: usize) -> BTreeMap<Value, usize> {
    let mut counts = BTreeMap::new();
    for &r in rows {
        *counts.entry(source.value(r, sensitive)).or_insert(0) += 1;
    }
    counts
}

/// Strictly-below-`1/l` rule on the bucket's most frequent sensitive value.
fn sa_diverse(source: &Table, rows: &[usize], sensitive: usize, l: f64) -> bool {
    let max = sa_frequencies(source, rows, sensitive)
        .values()
        .copied()
        .max()
        .unwrap_or(0);
    (max as f64) * l < rows.len() as f64
}

/// Median-cut bucketing over the quasi-identifiers, refusing any cut that
/// would push a side's most frequent sensitive value to `1/l` or beyond.
/// Unlike the slicing partitioner this tries every attribute (widest
/// normalized range first) before giving up on a bucket, since the stop rule
/// here is per-bucket and cheap.
///
/// Errors when the table as a whole already violates the rule.
pub fn diverse_mondrian_buckets(source: &Table, l: f64) -> Result<Vec<Bucket>> {
    if source.n_rows() == 0 {
        return Err(SliceError::EmptyTable);
    }
    if !l.is_finite() || l <= 1.0 {
        return Err(SliceError::InvalidParameter(format!(
            "diversity level must be a finite number above 1, got {l}"
        )));
    }
    let sensitive = source.schema().require_sensitive()?;
    let qis: Vec<usize> = (0..source.n_attrs()).filter(|&a| a != sensitive).collect();
    if qis.is_empty() {
        return Err(SliceError::InvalidParameter(
            "need at least one quasi-identifier".into(),
        ));
    }

    let all: Vec<usize> = (0..source.n_rows()).collect();
    if !sa_diverse(source, &all, sensitive, l) {
        let counts = sa_frequencies(source, &all, sensitive);
        let max = counts.values().copied().max().unwrap_or(0);
        return Err(SliceError::Unsatisfiable {
            max_p: max as f64 / source.n_rows() as f64,
            threshold: 1.0 / l,
        });
    }

    let mut done = Vec::new();
    let mut work = vec![all];
    while let Some(rows) = work.pop() {
        let mut cut = None;
        for attr in split_order(source, &rows, &qis) {
            if let Some(split) = median_split(source, &rows, attr) {
                if sa_diverse(source, &split.lower, sensitive, l)
                    && sa_diverse(source, &split.upper, sensitive, l)
                {
                    cut = Some(split);
                    break;
                }
            }
        }
        match cut {
            Some(split) => {
                work.push(split.upper);
                work.push(split.lower);
            }
            None => done.push(rows),
        }
    }
    done.sort_by_key(|b| b[0]);
    Ok(done)
}

/// Generalize explicit buckets: one shared cell per quasi-identifier per
/// bucket, sensitive values passed through in row order.
pub fn generalize_buckets(
    source: &Table,
    buckets: &[Bucket],
    variant: GenVariant,
) -> Result<GeneralizedTable> {
    let schema = source.schema();
    let sensitive = schema.require_sensitive()?;
    let qi_attrs: Vec<usize> = (0..schema.len()).filter(|&a| a != sensitive).collect();
    validate_buckets(source.n_rows(), buckets)?;

    let mut out = Vec::with_capacity(buckets.len());
    for rows in buckets {
        let cells = qi_attrs
            .iter()
            .map(|&a| {
                let mut counts: BTreeMap<Value, usize> = BTreeMap::new();
                for &r in rows {
                    *counts.entry(source.value(r, a)).or_insert(0) += 1;
                }
                match variant {
                    GenVariant::Multiset => GenCell::Multiset(counts.into_iter().collect()),
                    GenVariant::Interval => match schema.attr(a).kind() {
                        AttrKind::Continuous => {
                            let lo = *counts.keys().next().unwrap();
                            let hi = *counts.keys().last().unwrap();
                            GenCell::Interval(lo, hi)
                        }
                        AttrKind::Categorical => GenCell::Set(counts.into_keys().collect()),
                    },
                }
            })
            .collect();
        let sa_values = rows.iter().map(|&r| source.value(r, sensitive)).collect();
        out.push(GenBucket {
            rows: rows.clone(),
            cells,
            sa_values,
        });
    }
    Ok(GeneralizedTable {
        schema: schema.clone(),
        variant,
        qi_attrs,
        sensitive,
        buckets: out,
    })
}

/// The generalization baseline: diverse median-cut buckets, then per-bucket
/// blurred quasi-identifier cells.
pub fn mondrian_generalize(
    source: &Table,
    l: f64,
    variant: GenVariant,
) -> Result<GeneralizedTable> {
    let buckets = diverse_mondrian_buckets(source, l)?;
    generalize_buckets(source, &buckets, variant)
}

/// A bucketized release: exact quasi-identifier rows with sensitive values
/// shuffled within each bucket. Represented as the two-column slicing it is
/// equivalent to: one column holding every quasi-identifier, one holding the
/// sensitive attribute.
#[derive(Debug, Clone)]
pub struct BucketizedTable {
    sliced: SlicedTable,
}

impl BucketizedTable {
    /// View a two-column slicing as a bucketized table.
    pub fn from_sliced(sliced: SlicedTable) -> Result<BucketizedTable> {
        let shape = AttributePartition::bucketization(sliced.schema())?;
        if sliced.partition() != &shape {
            return Err(SliceError::InvalidParameter(
                "not a quasi-identifiers-versus-sensitive slicing".into(),
            ));
        }
        Ok(BucketizedTable { sliced })
    }

    pub fn sliced(&self) -> &SlicedTable {
        &self.sliced
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.sliced.schema()
    }

    pub fn n_buckets(&self) -> usize {
        self.sliced.n_buckets()
    }

    /// The published rows of one bucket, full width: quasi-identifier tuples
    /// paired positionally with shuffled sensitive values.
    pub fn bucket_rows(&self, bucket: usize) -> Vec<Vec<Value>> {
        let schema = self.sliced.schema();
        let partition = self.sliced.partition();
        let qi_attrs = partition.column(0);
        let sensitive = partition.column(1)[0];
        let b = self.sliced.bucket(bucket);
        (0..b.size())
            .map(|r| {
                let mut row = vec![Value::Missing; schema.len()];
                for (j, &a) in qi_attrs.iter().enumerate() {
                    row[a] = b.column_store(0)[r][j];
                }
                row[sensitive] = b.column_store(1)[r][0];
                row
            })
            .collect()
    }
}

/// The bucketization baseline: diverse median-cut buckets, quasi-identifiers
/// published verbatim, sensitive values shuffled per bucket.
pub fn bucketize(source: &Table, l: f64, seed: u64) -> Result<BucketizedTable> {
    let buckets = diverse_mondrian_buckets(source, l)?;
    let partition = AttributePartition::bucketization(source.schema())?;
    let sliced = slice(source, &partition, &buckets, seed)?;
    BucketizedTable::from_sliced(sliced)
}

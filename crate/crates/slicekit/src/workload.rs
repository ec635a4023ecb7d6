//! Classifier-based utility evaluation.
//!
//! An anonymized release is only useful if models trained on it still work,
//! so each release format is first flattened back into a plain table — sliced
//! buckets by randomly re-linking their column stores, generalized cells by
//! splitting into lower/upper bound attributes — and then scored by k-fold
//! cross-validation of a categorical Naive Bayes classifier.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::baselines::{BucketizedTable, GenCell, GenVariant, GeneralizedTable};
use crate::error::{Result, SliceError};
use crate::seed::derive_seed;
use crate::slicing::SlicedTable;
use crate::table::{AttrKind, Attribute, Schema, Table, Value};

/// Rebuild a plain table from a sliced release: within each bucket, give
/// every column store an independent seeded shuffle, then link values by
/// position. Per-bucket per-column value multisets survive exactly; the
/// cross-column pairings are freshly randomized. Rows come out bucket by
/// bucket.
pub fn reconstruct(sliced: &SlicedTable, seed: u64) -> Table {
    let schema = sliced.schema().clone();
    let columns = sliced.partition().columns();
    let mut rows = Vec::with_capacity(sliced.source_n());
    for (bi, bucket) in sliced.buckets().iter().enumerate() {
        let mut relinked: Vec<Vec<&Vec<Value>>> = Vec::with_capacity(columns.len());
        for ci in 0..columns.len() {
            let mut store: Vec<&Vec<Value>> = bucket.column_store(ci).iter().collect();
            let mut rng =
                ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("relink/b{bi}/c{ci}")));
            store.shuffle(&mut rng);
            relinked.push(store);
        }
        let mut linked: Vec<Vec<Value>> = vec![vec![Value::Missing; schema.len()]; bucket.size()];
        for (col, store) in columns.iter().zip(&relinked) {
            for (row, vt) in linked.iter_mut().zip(store) {
                for (&a, &v) in col.iter().zip(vt.iter()) {
                    row[a] = v;
                }
            }
        }
        rows.append(&mut linked);
    }
    Table::new(schema, rows).expect("re-linked rows carry values from the same schema")
}

/// Flatten an interval-variant generalized release into a plain table by
/// replacing each quasi-identifier X with two attributes Lower-X and Upper-X
/// holding its cell's bounds (a set cell contributes its first and last
/// element). The sensitive attribute passes through unchanged and rows come
/// out in source order.
pub fn expand_generalized(gen: &GeneralizedTable) -> Result<Table> {
    if gen.variant() == GenVariant::Multiset {
        return Err(SliceError::InvalidParameter(
            "multiset cells have no bounds to expand; use the interval variant".into(),
        ));
    }
    let schema = gen.schema();
    let sensitive = gen.sensitive_attr();

    let mut attributes = Vec::new();
    for (a, attr) in schema.attributes().iter().enumerate() {
        if a == sensitive {
            attributes.push(attr.clone());
        } else {
            for prefix in ["Lower-", "Upper-"] {
                attributes.push(Attribute {
                    name: format!("{prefix}{}", attr.name),
                    domain: attr.domain.clone(),
                    sensitive: false,
                });
            }
        }
    }
    let expanded = Arc::new(Schema::new(attributes)?);

    let n: usize = gen.buckets().iter().map(|b| b.rows.len()).sum();
    let mut rows = vec![Vec::new(); n];
    for bucket in gen.buckets() {
        for (k, &r) in bucket.rows.iter().enumerate() {
            let mut row = Vec::with_capacity(expanded.len());
            let mut qi = 0;
            for a in 0..schema.len() {
                if a == sensitive {
                    row.push(bucket.sa_values[k]);
                } else {
                    let (lo, hi) = match &bucket.cells[qi] {
                        GenCell::Interval(lo, hi) => (*lo, *hi),
                        GenCell::Set(values) => (values[0], *values.last().unwrap()),
                        GenCell::Multiset(_) => unreachable!("variant checked above"),
                    };
                    row.push(lo);
                    row.push(hi);
                    qi += 1;
                }
            }
            rows[r] = row;
        }
    }
    Table::new(expanded, rows)
}

/// Categorical Naive Bayes. Class priors are plain training frequencies over
/// the target's declared values; every other attribute is a predictor whose
/// per-class value counts get add-one smoothing over the attribute's domain,
/// so unseen (value, class) pairs keep a nonzero likelihood.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    target: usize,
    predictors: Vec<usize>,
    classes: Vec<Value>,
    priors: Vec<f64>,
    class_totals: Vec<usize>,
    /// counts[p][class] maps a value of predictor p to its training count.
    counts: Vec<Vec<BTreeMap<Value, usize>>>,
    domain_sizes: Vec<usize>,
}

impl NaiveBayesModel {
    pub fn target(&self) -> usize {
        self.target
    }

    /// Target values in declaration order, the order ties are broken in.
    pub fn classes(&self) -> &[Value] {
        &self.classes
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Posterior class distribution for one row, parallel to [`classes`].
    ///
    /// [`classes`]: NaiveBayesModel::classes
    pub fn posterior(&self, row: &[Value]) -> Vec<f64> {
        let mut joint = Vec::with_capacity(self.classes.len());
        for c in 0..self.classes.len() {
            let mut p = self.priors[c];
            for (pi, &attr) in self.predictors.iter().enumerate() {
                let count = self.counts[pi][c].get(&row[attr]).copied().unwrap_or(0);
                p *= (count + 1) as f64 / (self.class_totals[c] + self.domain_sizes[pi]) as f64;
            }
            joint.push(p);
        }
        let total: f64 = joint.iter().sum();
        for p in &mut joint {
            *p /= total;
        }
        joint
    }

    /// Most probable class for one row; ties go to the earlier declared one.
    pub fn predict(&self, row: &[Value]) -> Value {
        let posterior = self.posterior(row);
        let mut best = 0;
        for c in 1..posterior.len() {
            if posterior[c] > posterior[best] {
                best = c;
            }
        }
        self.classes[best]
    }
}

/// Fit a Naive Bayes model predicting `target` from every other attribute.
/// All attributes must be categorical — discretize continuous ones first.
pub fn nb_train(train: &Table, target: usize) -> Result<NaiveBayesModel> {
    if train.n_rows() == 0 {
        return Err(SliceError::EmptyTable);
    }
    if target >= train.n_attrs() {
        return Err(SliceError::InvalidParameter(format!(
            "target attribute index {target} is out of range"
        )));
    }
    let schema = train.schema();
    for attr in schema.attributes() {
        if attr.kind() != AttrKind::Categorical {
            return Err(SliceError::NotCategorical(attr.name.clone()));
        }
    }
    let classes: Vec<Value> = (0..schema.attr(target).domain_size() as u32)
        .map(Value::Cat)
        .collect();
    let class_index: BTreeMap<Value, usize> =
        classes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let predictors: Vec<usize> = (0..train.n_attrs()).filter(|&a| a != target).collect();
    let domain_sizes: Vec<usize> = predictors
        .iter()
        .map(|&a| schema.attr(a).domain_size())
        .collect();

    let mut class_totals = vec![0usize; classes.len()];
    let mut counts: Vec<Vec<BTreeMap<Value, usize>>> =
        vec![vec![BTreeMap::new(); classes.len()]; predictors.len()];
    for row in train.rows() {
        let c = *class_index.get(&row[target]).ok_or_else(|| {
            SliceError::InvalidParameter("target value outside its domain".into())
        })?;
        class_totals[c] += 1;
        for (pi, &attr) in predictors.iter().enumerate() {
            *counts[pi][c].entry(row[attr]).or_insert(0) += 1;
        }
    }
    let n = train.n_rows() as f64;
    let priors = class_totals.iter().map(|&t| t as f64 / n).collect();
    Ok(NaiveBayesModel {
        target,
        predictors,
        classes,
        priors,
        class_totals,
        counts,
        domain_sizes,
    })
}

/// Seeded k-fold cross-validation accuracy: shuffle rows, deal them into
/// folds of as-equal-as-possible size, and score each fold with a model
/// trained on the rest. Every row is tested exactly once; the result is the
/// overall fraction predicted correctly.
pub fn cross_validate(table: &Table, target: usize, folds: usize, seed: u64) -> Result<f64> {
    if folds < 2 {
        return Err(SliceError::InvalidParameter(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if table.n_rows() < folds {
        return Err(SliceError::InvalidParameter(format!(
            "cannot cut {} rows into {folds} folds",
            table.n_rows()
        )));
    }
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "folds"));
    order.shuffle(&mut rng);

    let n = table.n_rows();
    let base = n / folds;
    let extra = n % folds;
    let mut correct = 0usize;
    let mut start = 0usize;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let test = &order[start..start + size];
        start += size;
        let train_rows: Vec<Vec<Value>> = order[..start - size]
            .iter()
            .chain(&order[start..])
            .map(|&r| table.row(r).to_vec())
            .collect();
        let train = Table::new(table.schema().clone(), train_rows)?;
        let model = nb_train(&train, target)?;
        for &r in test {
            if model.predict(table.row(r)) == table.value(r, target) {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / n as f64)
}

/// An anonymized (or raw) release a classifier can be scored on.
#[derive(Debug, Clone, Copy)]
pub enum WorkloadInput<'a> {
    /// Plain table, scored as-is.
    Original(&'a Table),
    /// Interval-generalized release, expanded into bound attributes first.
    Generalized(&'a GeneralizedTable),
    /// Sliced release, re-linked afresh for every repeat.
    Sliced(&'a SlicedTable),
    /// Bucketized release, re-linked afresh for every repeat.
    Bucketized(&'a BucketizedTable),
}

/// Cross-validated accuracy of one release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    /// Population standard deviation across repeats; 0 for single runs.
    pub stddev: f64,
    pub repeats: usize,
    pub folds: usize,
}

/// Score a release by Naive Bayes cross-validation. Deterministic inputs are
/// evaluated once; sliced and bucketized releases are reconstructed and
/// scored `repeats` times under derived seeds and the accuracies averaged.
pub fn run_workload(
    input: WorkloadInput,
    target: &str,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalResult> {
    if repeats == 0 {
        return Err(SliceError::InvalidParameter(
            "need at least one repeat".into(),
        ));
    }
    let single = |table: &Table| -> Result<EvalResult> {
        let target = table.schema().index_of(target)?;
        let mean = cross_validate(table, target, folds, derive_seed(seed, "cv0"))?;
        Ok(EvalResult {
            mean,
            stddev: 0.0,
            repeats: 1,
            folds,
        })
    };
    let repeated = |sliced: &SlicedTable| -> Result<EvalResult> {
        let target = sliced.schema().index_of(target)?;
        let mut accuracies = Vec::with_capacity(repeats);
        for i in 0..repeats {
            let table = reconstruct(sliced, derive_seed(seed, &format!("recon{i}")));
            accuracies.push(cross_validate(
                &table,
                target,
                folds,
                derive_seed(seed, &format!("cv{i}")),
            )?);
        }
        let mean = accuracies.iter().sum::<f64>() / repeats as f64;
        let variance =
            accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / repeats as f64;
        Ok(EvalResult {
            mean,
            stddev: variance.sqrt(),
            repeats,
            folds,
        })
    };
    match input {
        WorkloadInput::Original(table) => single(table),
        WorkloadInput::Generalized(gen) => single(&expand_generalized(gen)?),
        WorkloadInput::Sliced(sliced) => repeated(sliced),
        WorkloadInput::Bucketized(bucketized) => repeated(bucketized.sliced()),
    }
}

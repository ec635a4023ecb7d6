//! The slicing engine: horizontal bucketing under a per-tuple disclosure
//! bound, seeded per-bucket column permutation, and optional coarsening of a
//! column into value regions.
//!
//! The threat model: an adversary knows a target's quasi-identifier values
//! and sees the published buckets. Each bucket matches the target to some
//! degree (how often its column projections occur there), which induces a
//! probability that the target resides in each bucket and, within a bucket,
//! a distribution over the sensitive values that could be the target's. A
//! bucketing is `l`-diverse when no single sensitive value reaches
//! probability `1/l` for any tuple; [`tuple_partition`] grows buckets by
//! median cuts while keeping every intermediate state `l`-diverse.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Result, SliceError};
use crate::mondrian::choose_split;
use crate::partition::AttributePartition;
use crate::seed::derive_seed;
use crate::table::{Attribute, Domain, Schema, Table, Value};

/// Tolerance added to `1/l` so a probability that sits exactly on the bound,
/// up to floating-point error, still counts as satisfying it.
const DIVERSITY_SLACK: f64 = 1e-12;

/// Row indices forming one bucket of the horizontal partition.
pub type Bucket = Vec<usize>;

/// Every row in exactly one non-empty bucket.
pub(crate) fn validate_buckets(n: usize, buckets: &[Bucket]) -> Result<()> {
    let mut seen = vec![false; n];
    for (i, b) in buckets.iter().enumerate() {
        if b.is_empty() {
            return Err(SliceError::MalformedBuckets(format!("bucket {i} is empty")));
        }
        for &r in b {
            if r >= n {
                return Err(SliceError::MalformedBuckets(format!(
                    "bucket {i} references row {r} of a {n}-row table"
                )));
            }
            if seen[r] {
                return Err(SliceError::MalformedBuckets(format!(
                    "row {r} appears in more than one bucket"
                )));
            }
            seen[r] = true;
        }
    }
    if let Some(r) = seen.iter().position(|&s| !s) {
        return Err(SliceError::MalformedBuckets(format!(
            "row {r} is not in any bucket"
        )));
    }
    Ok(())
}

fn project(row: &[Value], attrs: &[usize]) -> Vec<Value> {
    attrs.iter().map(|&a| row[a]).collect()
}

/// The partition resolved against a concrete schema.
struct Layout {
    columns: Vec<Vec<usize>>,
    sensitive: usize,
    /// The sensitive column's attributes with the sensitive one removed:
    /// the part of that column an adversary can know.
    sensitive_qi: Vec<usize>,
}

impl Layout {
    fn new(source: &Table, partition: &AttributePartition) -> Result<Layout> {
        let schema = source.schema();
        let sensitive = schema.require_sensitive()?;
        let covered: usize = partition.columns().iter().map(|c| c.len()).sum();
        let fits = covered == schema.len()
            && partition.columns().iter().flatten().all(|&a| a < schema.len())
            && partition.columns().last().unwrap().contains(&sensitive);
        if !fits {
            return Err(SliceError::InvalidParameter(
                "attribute partition does not fit this table's schema".into(),
            ));
        }
        let sensitive_qi = partition
            .columns()
            .last()
            .unwrap()
            .iter()
            .copied()
            .filter(|&a| a != sensitive)
            .collect();
        Ok(Layout {
            columns: partition.columns().to_vec(),
            sensitive,
            sensitive_qi,
        })
    }
}

/// Sensitive-column rows sharing one quasi-identifier projection.
#[derive(Debug, Clone, Default)]
pub(crate) struct SensitiveGroup {
    pub(crate) count: usize,
    pub(crate) sa_counts: BTreeMap<Value, usize>,
}

/// Occurrence counts of one bucket's column projections. Ordered maps keep
/// every iteration (and so every floating-point summation order)
/// reproducible across runs.
#[derive(Debug, Clone)]
pub(crate) struct BucketStats {
    pub(crate) size: usize,
    /// Per column, counts of full value tuples.
    pub(crate) full_counts: Vec<BTreeMap<Vec<Value>, usize>>,
    /// The sensitive column grouped by its non-sensitive part.
    pub(crate) groups: BTreeMap<Vec<Value>, SensitiveGroup>,
}

impl BucketStats {
    fn collect(source: &Table, rows: &[usize], layout: &Layout) -> BucketStats {
        let mut full_counts = vec![BTreeMap::new(); layout.columns.len()];
        let mut groups: BTreeMap<Vec<Value>, SensitiveGroup> = BTreeMap::new();
        for &r in rows {
            let row = source.row(r);
            for (i, col) in layout.columns.iter().enumerate() {
                *full_counts[i].entry(project(row, col)).or_insert(0) += 1;
            }
            let g = groups.entry(project(row, &layout.sensitive_qi)).or_default();
            g.count += 1;
            *g.sa_counts.entry(row[layout.sensitive]).or_insert(0) += 1;
        }
        BucketStats {
            size: rows.len(),
            full_counts,
            groups,
        }
    }
}

/// Shared context for disclosure computations over one table and partition.
struct Checker {
    layout: Layout,
    sa_values: Vec<Value>,
    sa_ids: HashMap<Value, usize>,
    threshold: f64,
}

impl Checker {
    fn new(source: &Table, partition: &AttributePartition, l: f64) -> Result<Checker> {
        if !l.is_finite() || l <= 1.0 {
            return Err(SliceError::InvalidParameter(format!(
                "diversity level must be a finite number above 1, got {l}"
            )));
        }
        let layout = Layout::new(source, partition)?;
        let sa_values: Vec<Value> = source
            .rows()
            .iter()
            .map(|row| row[layout.sensitive])
            .collect::<BTreeSet<Value>>()
            .into_iter()
            .collect();
        let sa_ids = sa_values.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Ok(Checker {
            layout,
            sa_values,
            sa_ids,
            threshold: 1.0 / l + DIVERSITY_SLACK,
        })
    }

    /// How strongly `row` matches a bucket: its matching degree `f` (product
    /// over columns of the projection's occurrence fraction, with only the
    /// non-sensitive part counted on the sensitive column) plus the split of
    /// that weight over candidate sensitive values. The weights sum to `f`;
    /// `None` when some column does not match at all.
    fn weights(&self, stats: &BucketStats, row: &[Value]) -> Option<(f64, Vec<(usize, f64)>)> {
        let size = stats.size as f64;
        let last = self.layout.columns.len() - 1;
        let mut base = 1.0;
        for (i, col) in self.layout.columns.iter().enumerate().take(last) {
            let cnt = *stats.full_counts[i].get(&project(row, col))?;
            base *= cnt as f64 / size;
        }
        let group = stats.groups.get(&project(row, &self.layout.sensitive_qi))?;
        let f = base * group.count as f64 / size;
        let weights = group
            .sa_counts
            .iter()
            .map(|(v, &cnt)| (self.sa_ids[v], base * cnt as f64 / size))
            .collect();
        Some((f, weights))
    }
}

/// Decide whether the given bucketing keeps every tuple's posterior over
/// sensitive values within `1/l`.
///
/// Three passes: per-bucket occurrence counts, accumulation of every tuple's
/// matching weight against every bucket, then the per-tuple verdict.
pub fn diversity_check(
    source: &Table,
    partition: &AttributePartition,
    buckets: &[Bucket],
    l: f64,
) -> Result<bool> {
    let checker = Checker::new(source, partition, l)?;
    validate_buckets(source.n_rows(), buckets)?;
    let stats: Vec<BucketStats> = buckets
        .iter()
        .map(|rows| BucketStats::collect(source, rows, &checker.layout))
        .collect();

    let n = source.n_rows();
    let mut f = vec![0.0f64; n];
    let mut acc = vec![vec![0.0f64; checker.sa_values.len()]; n];
    for st in &stats {
        for t in 0..n {
            if let Some((fb, weights)) = checker.weights(st, source.row(t)) {
                f[t] += fb;
                for (s, x) in weights {
                    acc[t][s] += x;
                }
            }
        }
    }

    for t in 0..n {
        if f[t] > 0.0 && acc[t].iter().any(|&x| x / f[t] > checker.threshold) {
            return Ok(false);
        }
    }
    Ok(true)
}

struct LiveBucket {
    rows: Vec<usize>,
    stats: BucketStats,
    /// Tuples (table-wide) with nonzero matching degree against this bucket.
    /// Splitting can only shrink this set, so children inherit from parents.
    matchers: Vec<usize>,
}

/// Grow a bucketing by repeated median cuts, keeping it `l`-diverse
/// throughout.
///
/// Buckets wait in a FIFO queue; each gets one cut attempt per turn, chosen
/// by the widest-normalized-range rule over all attributes. A cut is kept
/// only if the whole state (queue, the two halves, and the finished buckets)
/// still passes the diversity bound; otherwise the bucket is finished. The
/// check is incremental: per tuple we maintain the total matching degree and
/// the per-sensitive-value weights, and a cut only perturbs the tuples that
/// matched the bucket being cut.
///
/// Errors with the worst posterior when even the single root bucket violates
/// the bound, since no refinement can then satisfy it.
pub fn tuple_partition(
    source: &Table,
    partition: &AttributePartition,
    l: f64,
) -> Result<Vec<Bucket>> {
    if source.n_rows() == 0 {
        return Err(SliceError::EmptyTable);
    }
    let checker = Checker::new(source, partition, l)?;
    let n = source.n_rows();
    let all: Vec<usize> = (0..n).collect();
    let root_stats = BucketStats::collect(source, &all, &checker.layout);

    let mut f = vec![0.0f64; n];
    let mut acc = vec![vec![0.0f64; checker.sa_values.len()]; n];
    // Exact matching-bucket counts; floating-point residue cannot tell us
    // whether a tuple still matches anything, an integer count can.
    let mut matches = vec![1u32; n];
    let mut worst = 0.0f64;
    for t in 0..n {
        let (fb, weights) = checker
            .weights(&root_stats, source.row(t))
            .expect("a tuple always matches a bucket containing it");
        f[t] = fb;
        for (s, x) in weights {
            acc[t][s] += x;
            worst = worst.max(acc[t][s] / fb);
        }
    }
    if worst > checker.threshold {
        return Err(SliceError::Unsatisfiable {
            max_p: worst,
            threshold: 1.0 / l,
        });
    }

    let candidates: Vec<usize> = (0..source.n_attrs()).collect();
    let mut queue = VecDeque::new();
    queue.push_back(LiveBucket {
        matchers: all.clone(),
        rows: all,
        stats: root_stats,
    });
    let mut done: Vec<Bucket> = Vec::new();

    while let Some(bucket) = queue.pop_front() {
        let Some(split) = choose_split(source, &bucket.rows, &candidates, 1) else {
            done.push(bucket.rows);
            continue;
        };
        let lower_stats = BucketStats::collect(source, &split.lower, &checker.layout);
        let upper_stats = BucketStats::collect(source, &split.upper, &checker.layout);

        let mut ok = true;
        let mut updates = Vec::with_capacity(bucket.matchers.len());
        let mut lower_matchers = Vec::new();
        let mut upper_matchers = Vec::new();
        for &t in &bucket.matchers {
            let row = source.row(t);
            let Some((f_old, w_old)) = checker.weights(&bucket.stats, row) else {
                continue;
            };
            let mut new_f = f[t] - f_old;
            let mut new_m = matches[t] - 1;
            let mut new_acc = acc[t].clone();
            for (s, x) in w_old {
                new_acc[s] -= x;
            }
            for (side_stats, side_matchers) in [
                (&lower_stats, &mut lower_matchers),
                (&upper_stats, &mut upper_matchers),
            ] {
                if let Some((fb, weights)) = checker.weights(side_stats, row) {
                    side_matchers.push(t);
                    new_f += fb;
                    new_m += 1;
                    for (s, x) in weights {
                        new_acc[s] += x;
                    }
                }
            }
            if new_m == 0 {
                // The bucket being cut was this tuple's last match; zero the
                // state exactly rather than keeping cancellation residue.
                updates.push((t, 0.0, vec![0.0; new_acc.len()], 0));
                continue;
            }
            if new_acc.iter().any(|&x| x / new_f > checker.threshold) {
                ok = false;
                break;
            }
            updates.push((t, new_f, new_acc, new_m));
        }

        if ok {
            for (t, nf, na, nm) in updates {
                f[t] = nf;
                acc[t] = na;
                matches[t] = nm;
            }
            queue.push_back(LiveBucket {
                rows: split.lower,
                stats: lower_stats,
                matchers: lower_matchers,
            });
            queue.push_back(LiveBucket {
                rows: split.upper,
                stats: upper_stats,
                matchers: upper_matchers,
            });
        } else {
            done.push(bucket.rows);
        }
    }

    done.sort_by_key(|b| b[0]);
    Ok(done)
}

/// One published bucket: per-column value-tuple stores, each independently
/// permuted, plus the occurrence counts matching computations need.
#[derive(Debug, Clone)]
pub struct SlicedBucket {
    pub(crate) size: usize,
    /// `stores[i][r]` is the `r`-th published value tuple of column `i`.
    pub(crate) stores: Vec<Vec<Vec<Value>>>,
    pub(crate) stats: BucketStats,
}

impl SlicedBucket {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_columns(&self) -> usize {
        self.stores.len()
    }

    pub fn column_store(&self, column: usize) -> &[Vec<Value>] {
        &self.stores[column]
    }
}

/// A sliced release: the attribute partition plus per-bucket permuted column
/// stores. Row-to-row linkage across columns is gone; within a column the
/// original value combinations survive.
#[derive(Debug, Clone)]
pub struct SlicedTable {
    pub(crate) schema: Arc<Schema>,
    pub(crate) partition: AttributePartition,
    pub(crate) sensitive_qi: Vec<usize>,
    pub(crate) buckets: Vec<SlicedBucket>,
    pub(crate) source_n: usize,
}

/// How one bucket accounts for a tuple: the matching degree `f`, the
/// residence probability given all buckets, and the distribution over the
/// sensitive values the bucket offers that tuple.
#[derive(Debug, Clone)]
pub struct BucketMatch {
    pub bucket: usize,
    pub degree: f64,
    pub probability: f64,
    pub distribution: Vec<(Value, f64)>,
}

/// All matching buckets of one tuple. Residence probabilities sum to 1, as
/// does each per-bucket distribution.
#[derive(Debug, Clone)]
pub struct MatchStats {
    /// Total matching degree across buckets.
    pub total_degree: f64,
    pub matches: Vec<BucketMatch>,
}

impl MatchStats {
    /// Posterior over sensitive values: residence-weighted mix of the
    /// per-bucket candidate distributions. Sums to 1.
    pub fn sensitive_probabilities(&self) -> Vec<(Value, f64)> {
        let mut out: BTreeMap<Value, f64> = BTreeMap::new();
        for m in &self.matches {
            for &(v, d) in &m.distribution {
                *out.entry(v).or_insert(0.0) += m.probability * d;
            }
        }
        out.into_iter().collect()
    }

    /// The largest posterior any single sensitive value reaches.
    pub fn max_probability(&self) -> f64 {
        self.sensitive_probabilities()
            .into_iter()
            .map(|(_, p)| p)
            .fold(0.0, f64::max)
    }
}

impl SlicedTable {
    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn partition(&self) -> &AttributePartition {
        &self.partition
    }

    pub fn buckets(&self) -> &[SlicedBucket] {
        &self.buckets
    }

    pub fn n_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, i: usize) -> &SlicedBucket {
        &self.buckets[i]
    }

    /// Row count of the table this release was computed from.
    pub fn source_n(&self) -> usize {
        self.source_n
    }

    /// Whether every column projection of `row` occurs in the bucket,
    /// sensitive value included — the test an outsider applies to a fully
    /// known record.
    pub fn is_matching_bucket(&self, bucket: usize, row: &[Value]) -> bool {
        let b = &self.buckets[bucket];
        self.partition
            .columns()
            .iter()
            .enumerate()
            .all(|(i, col)| b.stats.full_counts[i].contains_key(&project(row, col)))
    }

    /// Fraction of the bucket's rows matching `row` on one column. On the
    /// sensitive column only the non-sensitive part is compared, since that
    /// is all an adversary knows about their target.
    pub fn matching_degree(&self, bucket: usize, column: usize, row: &[Value]) -> f64 {
        let b = &self.buckets[bucket];
        let cnt = if column + 1 == self.partition.n_columns() {
            b.stats
                .groups
                .get(&project(row, &self.sensitive_qi))
                .map_or(0, |g| g.count)
        } else {
            let col = self.partition.column(column);
            b.stats
                .full_counts[column]
                .get(&project(row, col))
                .copied()
                .unwrap_or(0)
        };
        cnt as f64 / b.size as f64
    }

    /// Distribution over sensitive values the bucket offers for `row`:
    /// the sensitive values co-published with quasi-identifier projections
    /// equal to the row's, duplicates weighted. Empty when nothing matches.
    pub fn candidate_distribution(&self, bucket: usize, row: &[Value]) -> Vec<(Value, f64)> {
        let b = &self.buckets[bucket];
        match b.stats.groups.get(&project(row, &self.sensitive_qi)) {
            None => Vec::new(),
            Some(g) => g
                .sa_counts
                .iter()
                .map(|(&v, &cnt)| (v, cnt as f64 / g.count as f64))
                .collect(),
        }
    }

    /// Full matching breakdown for `row`, or `None` when no bucket matches.
    pub fn match_stats(&self, row: &[Value]) -> Option<MatchStats> {
        let last = self.partition.n_columns() - 1;
        let mut matches = Vec::new();
        let mut total = 0.0;
        for (bi, b) in self.buckets.iter().enumerate() {
            let size = b.size as f64;
            let mut degree = 1.0;
            for (i, col) in self.partition.columns().iter().enumerate().take(last) {
                degree *= match b.stats.full_counts[i].get(&project(row, col)) {
                    Some(&cnt) => cnt as f64 / size,
                    None => 0.0,
                };
                if degree == 0.0 {
                    break;
                }
            }
            if degree == 0.0 {
                continue;
            }
            let Some(g) = b.stats.groups.get(&project(row, &self.sensitive_qi)) else {
                continue;
            };
            degree *= g.count as f64 / size;
            let distribution = g
                .sa_counts
                .iter()
                .map(|(&v, &cnt)| (v, cnt as f64 / g.count as f64))
                .collect();
            total += degree;
            matches.push(BucketMatch {
                bucket: bi,
                degree,
                probability: 0.0,
                distribution,
            });
        }
        if matches.is_empty() || total <= 0.0 {
            return None;
        }
        for m in &mut matches {
            m.probability = m.degree / total;
        }
        Some(MatchStats {
            total_degree: total,
            matches,
        })
    }

    /// Residence probabilities over matching buckets, or `None` when no
    /// bucket matches. Non-matching buckets are omitted rather than listed
    /// as zero.
    pub fn residence_probabilities(&self, row: &[Value]) -> Option<Vec<(usize, f64)>> {
        Some(
            self.match_stats(row)?
                .matches
                .into_iter()
                .map(|m| (m.bucket, m.probability))
                .collect(),
        )
    }

    /// Posterior over sensitive values for `row`, or `None` when no bucket
    /// matches.
    pub fn sensitive_value_probability(&self, row: &[Value]) -> Option<Vec<(Value, f64)>> {
        Some(self.match_stats(row)?.sensitive_probabilities())
    }
}

/// Publish `buckets` of `source` under `partition`: per bucket, project each
/// column and shuffle it with its own generator derived from `seed`. The
/// multiset of each column store equals the projection it came from;
/// everything is reproducible from the same seed.
pub fn slice(
    source: &Table,
    partition: &AttributePartition,
    buckets: &[Bucket],
    seed: u64,
) -> Result<SlicedTable> {
    let layout = Layout::new(source, partition)?;
    validate_buckets(source.n_rows(), buckets)?;

    let mut out = Vec::with_capacity(buckets.len());
    for (bi, rows) in buckets.iter().enumerate() {
        let stats = BucketStats::collect(source, rows, &layout);
        let mut stores = Vec::with_capacity(layout.columns.len());
        for (ci, col) in layout.columns.iter().enumerate() {
            let mut store: Vec<Vec<Value>> = rows
                .iter()
                .map(|&r| project(source.row(r), col))
                .collect();
            let mut rng =
                ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("permute/b{bi}/c{ci}")));
            store.shuffle(&mut rng);
            stores.push(store);
        }
        out.push(SlicedBucket {
            size: rows.len(),
            stores,
            stats,
        });
    }
    Ok(SlicedTable {
        schema: source.schema().clone(),
        partition: partition.clone(),
        sensitive_qi: layout.sensitive_qi,
        buckets: out,
        source_n: source.n_rows(),
    })
}

/// One region of a column coarsening: the narrowest per-attribute value
/// range its rows span, and how many rows it holds.
#[derive(Debug, Clone)]
pub struct GenRegion {
    pub bounds: Vec<(Value, Value)>,
    pub row_count: usize,
}

#[derive(Debug, Clone)]
enum GenNode {
    Split {
        /// Position within the generalized column's attribute list.
        attr_pos: usize,
        at: Value,
        below: usize,
        above: usize,
    },
    Leaf(usize),
}

/// A coarsening of one column into disjoint regions covering its whole
/// domain product. Region membership is decided by the cut tree, so any
/// value tuple — present in the data or not — maps to exactly one region.
#[derive(Debug, Clone)]
pub struct ColumnGeneralization {
    column: Vec<usize>,
    nodes: Vec<GenNode>,
    regions: Vec<GenRegion>,
}

impl ColumnGeneralization {
    pub fn column(&self) -> &[usize] {
        &self.column
    }

    pub fn regions(&self) -> &[GenRegion] {
        &self.regions
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// The region a full-width row falls into.
    pub fn region_of(&self, row: &[Value]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                GenNode::Leaf(r) => return *r,
                GenNode::Split {
                    attr_pos,
                    at,
                    below,
                    above,
                } => {
                    i = if row[self.column[*attr_pos]] <= *at {
                        *below
                    } else {
                        *above
                    };
                }
            }
        }
    }

    /// Render a region as `name=lo..hi` segments joined by `|`.
    pub fn region_label(&self, schema: &Schema, region: usize) -> String {
        self.column
            .iter()
            .zip(&self.regions[region].bounds)
            .map(|(&a, &(lo, hi))| {
                let name = &schema.attr(a).name;
                let l = schema.format_value(a, lo, "?");
                if lo == hi {
                    format!("{name}={l}")
                } else {
                    format!("{name}={l}..{}", schema.format_value(a, hi, "?"))
                }
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn tight_bounds(source: &Table, column: &[usize], rows: &[usize]) -> Vec<(Value, Value)> {
    column
        .iter()
        .map(|&a| {
            let mut lo = source.value(rows[0], a);
            let mut hi = lo;
            for &r in &rows[1..] {
                let v = source.value(r, a);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (lo, hi)
        })
        .collect()
}

/// Coarsen the given column so every region covers at least `min_rows` rows:
/// median cuts on the column's attributes, refused when a side would fall
/// below the minimum.
pub fn column_generalize(
    source: &Table,
    column: &[usize],
    min_rows: usize,
) -> Result<ColumnGeneralization> {
    let n = source.n_rows();
    let mut col = column.to_vec();
    col.sort_unstable();
    col.dedup();
    if col.is_empty() || col.len() != column.len() {
        return Err(SliceError::InvalidParameter(
            "generalization needs a non-empty set of distinct attributes".into(),
        ));
    }
    if col.iter().any(|&a| a >= source.n_attrs()) {
        return Err(SliceError::InvalidParameter(
            "generalization column references an unknown attribute".into(),
        ));
    }
    if min_rows == 0 {
        return Err(SliceError::InvalidParameter(
            "minimum region population must be at least 1".into(),
        ));
    }
    if min_rows > n {
        return Err(SliceError::InvalidParameter(format!(
            "minimum region population {min_rows} exceeds the {n} rows available"
        )));
    }

    let mut nodes = vec![GenNode::Leaf(0)];
    let mut regions = Vec::new();
    let mut work: Vec<(Vec<usize>, usize)> = vec![((0..n).collect(), 0)];
    while let Some((rows, slot)) = work.pop() {
        match choose_split(source, &rows, &col, min_rows) {
            Some(split) => {
                let below = nodes.len();
                nodes.push(GenNode::Leaf(0));
                let above = nodes.len();
                nodes.push(GenNode::Leaf(0));
                let attr_pos = col.iter().position(|&a| a == split.attr).unwrap();
                nodes[slot] = GenNode::Split {
                    attr_pos,
                    at: split.split_value,
                    below,
                    above,
                };
                // Lower side last so it is processed first and regions come
                // out in left-to-right order.
                work.push((split.upper, above));
                work.push((split.lower, below));
            }
            None => {
                regions.push(GenRegion {
                    bounds: tight_bounds(source, &col, &rows),
                    row_count: rows.len(),
                });
                nodes[slot] = GenNode::Leaf(regions.len() - 1);
            }
        }
    }

    Ok(ColumnGeneralization {
        column: col,
        nodes,
        regions,
    })
}

/// Rewrite the table so each coarsened column becomes a single categorical
/// attribute whose values are region labels. Attributes outside any
/// coarsening, the sensitive one included, pass through unchanged.
pub fn generalize_columns(source: &Table, gens: &[ColumnGeneralization]) -> Result<Table> {
    let schema = source.schema();
    let mut owner: Vec<Option<usize>> = vec![None; schema.len()];
    for (gi, g) in gens.iter().enumerate() {
        for &a in g.column() {
            if schema.attr(a).sensitive {
                return Err(SliceError::InvalidParameter(
                    "the sensitive attribute cannot be generalized away".into(),
                ));
            }
            if owner[a].is_some() {
                return Err(SliceError::InvalidParameter(format!(
                    "attribute {:?} appears in two generalized columns",
                    schema.attr(a).name
                )));
            }
            owner[a] = Some(gi);
        }
    }

    enum Emit {
        Keep(usize),
        Region(usize),
    }
    let mut attributes = Vec::new();
    let mut emit = Vec::new();
    for (a, own) in owner.iter().enumerate() {
        match *own {
            None => {
                attributes.push(schema.attr(a).clone());
                emit.push(Emit::Keep(a));
            }
            Some(gi) if gens[gi].column()[0] == a => {
                let g = &gens[gi];
                let mut labels: Vec<String> = (0..g.n_regions())
                    .map(|r| g.region_label(schema, r))
                    .collect();
                let mut seen = HashSet::new();
                for (i, label) in labels.iter_mut().enumerate() {
                    if !seen.insert(label.clone()) {
                        *label = format!("{label}#{i}");
                        seen.insert(label.clone());
                    }
                }
                let name = g
                    .column()
                    .iter()
                    .map(|&a| schema.attr(a).name.as_str())
                    .collect::<Vec<_>>()
                    .join("+");
                attributes.push(Attribute {
                    name,
                    domain: Domain::Categorical(labels),
                    sensitive: false,
                });
                emit.push(Emit::Region(gi));
            }
            Some(_) => {}
        }
    }

    let out_schema = Arc::new(Schema::new(attributes)?);
    let rows = source
        .rows()
        .iter()
        .map(|row| {
            emit.iter()
                .map(|e| match e {
                    Emit::Keep(a) => row[*a],
                    Emit::Region(gi) => Value::Cat(gens[*gi].region_of(row) as u32),
                })
                .collect()
        })
        .collect();
    Table::new(out_schema, rows)
}

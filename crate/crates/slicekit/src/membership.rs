//! Membership-disclosure analysis.
//!
//! A sliced bucket's candidate space — every combination of one value tuple
//! per column — is larger than the rows it came from, and the surplus
//! combinations ("fake tuples") are indistinguishable from real ones to an
//! outsider checking whether a known record was published. These routines
//! count the fakes and compare how many buckets original versus fake tuples
//! match: the more evenly both populations spread over many buckets, the
//! less a match reveals about membership.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Result, SliceError};
use crate::seed::derive_seed;
use crate::slicing::{Bucket, SlicedBucket, SlicedTable};
use crate::table::{Table, Value};

/// Default bound on how many distinct candidate tuples one bucket may be
/// asked to enumerate.
pub const DEFAULT_CANDIDATE_CAP: u128 = 100_000_000;

/// Partition rows into buckets of size `p` by a seeded shuffle; only the last
/// bucket may be smaller. Each bucket's rows are listed ascending.
pub fn random_group(source: &Table, p: usize, seed: u64) -> Result<Vec<Bucket>> {
    if p == 0 {
        return Err(SliceError::InvalidParameter(
            "bucket size must be at least 1".into(),
        ));
    }
    let mut order: Vec<usize> = (0..source.n_rows()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "random-group"));
    order.shuffle(&mut rng);
    let mut buckets: Vec<Bucket> = order.chunks(p).map(|c| c.to_vec()).collect();
    for b in &mut buckets {
        b.sort_unstable();
    }
    Ok(buckets)
}

/// Size of one bucket's candidate space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateCount {
    /// Combinations of store positions: |B| to the power of the column count.
    pub positional: u128,
    /// Combinations of distinct column values.
    pub distinct: u128,
}

/// How many candidate tuples the bucket offers, counted both by store
/// position and by distinct value. Saturates rather than overflowing.
pub fn candidate_count(bucket: &SlicedBucket) -> CandidateCount {
    let positional = (bucket.size() as u128)
        .checked_pow(bucket.n_columns() as u32)
        .unwrap_or(u128::MAX);
    let mut distinct: u128 = 1;
    for counts in &bucket.stats.full_counts {
        distinct = distinct.saturating_mul(counts.len() as u128);
    }
    CandidateCount {
        positional,
        distinct,
    }
}

/// Fake-tuple accounting over a whole sliced table.
#[derive(Debug, Clone)]
pub struct FakeTupleStats {
    /// Source rows.
    pub n_original: usize,
    /// Distinct source rows.
    pub n_original_distinct: usize,
    /// Distinct candidate tuples matching some bucket but absent from the
    /// source.
    pub n_fake: usize,
    pub per_bucket: Vec<CandidateCount>,
}

/// A candidate tuple as the concatenation of its per-column value tuples, in
/// column order — the cheapest canonical form for cross-bucket dedup.
type ConcatTuple = Vec<Value>;

fn concat_projection(sliced: &SlicedTable, row: &[Value]) -> ConcatTuple {
    sliced
        .partition
        .columns()
        .iter()
        .flat_map(|col| col.iter().map(|&a| row[a]))
        .collect()
}

/// Enumerate the distinct candidate tuples of every bucket into one set.
/// Errors when any single bucket's distinct space exceeds `cap`, naming that
/// bucket; the union itself is also kept under `cap`.
fn candidate_union(sliced: &SlicedTable, cap: u128) -> Result<HashSet<ConcatTuple>> {
    let mut union: HashSet<ConcatTuple> = HashSet::new();
    for (bi, bucket) in sliced.buckets().iter().enumerate() {
        let distinct = candidate_count(bucket).distinct;
        if distinct > cap {
            return Err(SliceError::CapExceeded {
                bucket: bi,
                required: distinct,
                cap,
            });
        }
        // Distinct value tuples per column, in map order.
        let choices: Vec<Vec<&Vec<Value>>> = bucket
            .stats
            .full_counts
            .iter()
            .map(|counts| counts.keys().collect())
            .collect();
        let mut odometer = vec![0usize; choices.len()];
        loop {
            let mut tuple = Vec::new();
            for (ci, &pos) in odometer.iter().enumerate() {
                tuple.extend_from_slice(choices[ci][pos]);
            }
            union.insert(tuple);
            if union.len() as u128 > cap {
                return Err(SliceError::CapExceeded {
                    bucket: bi,
                    required: union.len() as u128,
                    cap,
                });
            }
            // Advance, last column fastest.
            let mut ci = choices.len();
            loop {
                if ci == 0 {
                    break;
                }
                ci -= 1;
                odometer[ci] += 1;
                if odometer[ci] < choices[ci].len() {
                    break;
                }
                odometer[ci] = 0;
            }
            if odometer.iter().all(|&p| p == 0) {
                break;
            }
        }
    }
    Ok(union)
}

/// Count the distinct fake tuples across all buckets: the candidate union
/// minus the source's distinct rows (each of which necessarily appears in its
/// own bucket's candidates).
pub fn count_fake_tuples(
    sliced: &SlicedTable,
    source: &Table,
    cap: u128,
) -> Result<FakeTupleStats> {
    let union = candidate_union(sliced, cap)?;
    let originals: HashSet<ConcatTuple> = source
        .rows()
        .iter()
        .map(|row| concat_projection(sliced, row))
        .collect();
    Ok(FakeTupleStats {
        n_original: source.n_rows(),
        n_original_distinct: originals.len(),
        n_fake: union.len() - originals.len(),
        per_bucket: sliced.buckets().iter().map(candidate_count).collect(),
    })
}

/// Which population a matching histogram is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// The source rows, matched the way an adversary who knows everything
    /// but the sensitive value would: the sensitive column matches on its
    /// non-sensitive part only.
    Original,
    /// The distinct fake tuples. A fake carries a concrete sensitive value,
    /// so it matches on full column projections everywhere.
    Fake,
}

/// Tuples binned by how many buckets they match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BandCounts {
    /// At most 10 matching buckets.
    pub low: usize,
    /// 11 to 20.
    pub mid: usize,
    /// More than 20.
    pub high: usize,
}

impl BandCounts {
    fn add(&mut self, matches: usize) {
        if matches <= 10 {
            self.low += 1;
        } else if matches <= 20 {
            self.mid += 1;
        } else {
            self.high += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.low + self.mid + self.high
    }
}

/// Whether `row` matches the bucket from the standpoint of an adversary who
/// does not know the sensitive value: full projections on all columns except
/// the last, whose non-sensitive part alone must occur.
fn matches_without_sensitive(sliced: &SlicedTable, bucket: usize, row: &[Value]) -> bool {
    let b = &sliced.buckets[bucket];
    let last = sliced.partition.n_columns() - 1;
    for (i, col) in sliced.partition.columns().iter().enumerate().take(last) {
        let proj: Vec<Value> = col.iter().map(|&a| row[a]).collect();
        if !b.stats.full_counts[i].contains_key(&proj) {
            return false;
        }
    }
    let qi: Vec<Value> = sliced.sensitive_qi.iter().map(|&a| row[a]).collect();
    b.stats.groups.contains_key(&qi)
}

/// Histogram of matching-bucket counts over the chosen population.
pub fn matching_histogram(
    sliced: &SlicedTable,
    source: &Table,
    population: Population,
    cap: u128,
) -> Result<BandCounts> {
    let mut bands = BandCounts::default();
    match population {
        Population::Original => {
            for row in source.rows() {
                let matches = (0..sliced.n_buckets())
                    .filter(|&b| matches_without_sensitive(sliced, b, row))
                    .count();
                bands.add(matches);
            }
        }
        Population::Fake => {
            let union = candidate_union(sliced, cap)?;
            let originals: HashSet<ConcatTuple> = source
                .rows()
                .iter()
                .map(|row| concat_projection(sliced, row))
                .collect();
            // Map concatenated tuples back to full-width rows once.
            let attr_order: Vec<usize> = sliced
                .partition
                .columns()
                .iter()
                .flatten()
                .copied()
                .collect();
            let mut row = vec![Value::Missing; sliced.schema().len()];
            for tuple in union {
                if originals.contains(&tuple) {
                    continue;
                }
                for (k, &a) in attr_order.iter().enumerate() {
                    row[a] = tuple[k];
                }
                let matches = (0..sliced.n_buckets())
                    .filter(|&b| sliced.is_matching_bucket(b, &row))
                    .count();
                bands.add(matches);
            }
        }
    }
    Ok(bands)
}

/// Full membership-disclosure accounting for one sliced release.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub n_original: usize,
    pub n_original_distinct: usize,
    pub n_fake: usize,
    pub per_bucket: Vec<CandidateCount>,
    pub histogram_original: BandCounts,
    pub histogram_fake: BandCounts,
}

pub fn membership_report(
    sliced: &SlicedTable,
    source: &Table,
    cap: u128,
) -> Result<MembershipReport> {
    let fakes = count_fake_tuples(sliced, source, cap)?;
    let histogram_original = matching_histogram(sliced, source, Population::Original, cap)?;
    let histogram_fake = matching_histogram(sliced, source, Population::Fake, cap)?;
    Ok(MembershipReport {
        n_original: fakes.n_original,
        n_original_distinct: fakes.n_original_distinct,
        n_fake: fakes.n_fake,
        per_bucket: fakes.per_bucket,
        histogram_original,
        histogram_fake,
    })
}

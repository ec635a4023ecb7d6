//! Shared fixtures and independent oracles for the integration suites.
//!
//! Everything here recomputes expected results from first principles — raw
//! row counting in exact rational arithmetic, exhaustive candidate
//! enumeration, brute-force clusterings — so the library is checked against
//! definitions rather than against itself.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use num::{BigRational, FromPrimitive, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use slicekit::membership::BandCounts;
use slicekit::partition::AttributePartition;
use slicekit::slicing::{Bucket, SlicedTable};
use slicekit::table::{Attribute, Domain, Schema, Value};
use slicekit::Table;

pub fn cat_attr(name: &str, values: &[&str], sensitive: bool) -> Attribute {
    Attribute {
        name: name.into(),
        domain: Domain::Categorical(values.iter().map(|s| s.to_string()).collect()),
        sensitive,
    }
}

pub fn num_attr(name: &str, min: f64, max: f64) -> Attribute {
    Attribute {
        name: name.into(),
        domain: Domain::Continuous { min, max },
        sensitive: false,
    }
}

/// The eight-row clinic example used across the suites: three
/// quasi-identifiers (Age, Sex, Zipcode) and a sensitive Disease.
pub fn clinic_table() -> Table {
    let schema = Arc::new(
        Schema::new(vec![
            num_attr("Age", 22.0, 64.0),
            cat_attr("Sex", &["M", "F"], false),
            cat_attr("Zipcode", &["47906", "47905", "47302", "47304"], false),
            cat_attr(
                "Disease",
                &["dyspepsia", "flu", "bronchitis", "gastritis"],
                true,
            ),
        ])
        .unwrap(),
    );
    let ages = [22.0, 22.0, 33.0, 52.0, 54.0, 60.0, 60.0, 64.0];
    let sexes = [0, 1, 1, 1, 0, 0, 0, 1];
    let zips = [0, 0, 1, 1, 2, 2, 3, 3];
    let diseases = [0, 1, 1, 2, 1, 0, 0, 3];
    let rows = (0..8)
        .map(|i| {
            vec![
                Value::num(ages[i]),
                Value::Cat(sexes[i]),
                Value::Cat(zips[i]),
                Value::Cat(diseases[i]),
            ]
        })
        .collect();
    Table::new(schema, rows).unwrap()
}

/// Random all-categorical table with the sensitive attribute last.
pub fn random_cat_table(
    rng: &mut StdRng,
    max_rows: usize,
    max_attrs: usize,
    max_domain: usize,
) -> Table {
    let n_attrs = rng.gen_range(2..=max_attrs.max(2));
    let n_rows = rng.gen_range(2..=max_rows.max(2));
    let domains: Vec<usize> = (0..n_attrs)
        .map(|_| rng.gen_range(2..=max_domain.max(2)))
        .collect();
    let attributes = (0..n_attrs)
        .map(|i| Attribute {
            name: format!("a{i}"),
            domain: Domain::Categorical((0..domains[i]).map(|v| format!("v{v}")).collect()),
            sensitive: i == n_attrs - 1,
        })
        .collect();
    let schema = Arc::new(Schema::new(attributes).unwrap());
    let rows = (0..n_rows)
        .map(|_| {
            (0..n_attrs)
                .map(|i| Value::Cat(rng.gen_range(0..domains[i] as u32)))
                .collect()
        })
        .collect();
    Table::new(schema, rows).unwrap()
}

/// Random attribute partition with at most `max_columns` columns, sensitive
/// column last.
pub fn random_partition(
    rng: &mut StdRng,
    table: &Table,
    max_columns: usize,
) -> AttributePartition {
    let sensitive = table.schema().sensitive_index().unwrap();
    let qis: Vec<usize> = (0..table.n_attrs()).filter(|&a| a != sensitive).collect();
    let c = rng.gen_range(1..=max_columns.min(qis.len() + 1));
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); c];
    for &a in &qis {
        let g = rng.gen_range(0..c);
        columns[g].push(a);
    }
    columns[c - 1].push(sensitive);
    columns.retain(|col| !col.is_empty());
    AttributePartition::new(columns, table.schema()).unwrap()
}

/// Random bucketing of all rows into non-empty groups.
pub fn random_buckets(rng: &mut StdRng, n: usize) -> Vec<Bucket> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut buckets = Vec::new();
    let mut start = 0;
    while start < n {
        let size = rng.gen_range(1..=(n - start).min(5));
        let mut b: Vec<usize> = order[start..start + size].to_vec();
        b.sort_unstable();
        buckets.push(b);
        start += size;
    }
    buckets
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Exact posterior sensitive-value distribution of every source row, computed
/// by literal counting over the raw rows in rational arithmetic.
pub fn rational_disclosure(
    table: &Table,
    partition: &AttributePartition,
    buckets: &[Bucket],
) -> Vec<BTreeMap<Value, BigRational>> {
    let columns = partition.columns();
    let c = columns.len();
    let sensitive = table.schema().sensitive_index().unwrap();
    let qi: Vec<usize> = columns[c - 1]
        .iter()
        .copied()
        .filter(|&a| a != sensitive)
        .collect();
    let proj = |r: usize, attrs: &[usize]| -> Vec<Value> {
        attrs.iter().map(|&a| table.value(r, a)).collect()
    };

    (0..table.n_rows())
        .map(|t| {
            // f(t, B) and D(t, B) per bucket, exactly.
            let mut total = BigRational::zero();
            let mut acc: BTreeMap<Value, BigRational> = BTreeMap::new();
            for bucket in buckets {
                let mut f = BigRational::new(1.into(), 1.into());
                for col in columns.iter().take(c - 1) {
                    let want = proj(t, col);
                    let hits = bucket.iter().filter(|&&r| proj(r, col) == want).count();
                    f *= ratio(hits, bucket.len());
                }
                let want_qi = proj(t, &qi);
                let qi_rows: Vec<usize> = bucket
                    .iter()
                    .copied()
                    .filter(|&r| proj(r, &qi) == want_qi)
                    .collect();
                f *= ratio(qi_rows.len(), bucket.len());
                if f.is_zero() {
                    continue;
                }
                total += f.clone();
                for &r in &qi_rows {
                    let share = f.clone() * ratio(1, qi_rows.len());
                    *acc.entry(table.value(r, sensitive))
                        .or_insert_with(BigRational::zero) += share;
                }
            }
            acc.into_iter().map(|(s, w)| (s, w / total.clone())).collect()
        })
        .collect()
}

/// Exact diversity verdict: every posterior at or below 1/l.
pub fn rational_verdict(disclosure: &[BTreeMap<Value, BigRational>], l: f64) -> bool {
    let bound = BigRational::from_f64(l).unwrap().recip();
    disclosure
        .iter()
        .all(|dist| dist.values().all(|p| *p <= bound))
}

/// Fake-tuple count and matching histograms recomputed from the published
/// column stores alone.
pub fn membership_oracle(sliced: &SlicedTable, source: &Table) -> (usize, BandCounts, BandCounts) {
    let columns = sliced.partition().columns();
    let sensitive = source.schema().sensitive_index().unwrap();

    // Candidate tuples per bucket by direct cross-product of the stores.
    let mut union: BTreeSet<Vec<Value>> = BTreeSet::new();
    for b in sliced.buckets() {
        let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
        for ci in 0..columns.len() {
            let mut next = Vec::new();
            for prefix in &combos {
                for vt in b.column_store(ci) {
                    let mut row = prefix.clone();
                    row.extend_from_slice(vt);
                    next.push(row);
                }
            }
            combos = next;
        }
        union.extend(combos);
    }
    let concat = |row: &[Value]| -> Vec<Value> {
        columns.iter().flat_map(|col| col.iter().map(|&a| row[a])).collect()
    };
    let originals: HashSet<Vec<Value>> = source.rows().iter().map(|r| concat(r)).collect();
    let fakes: Vec<&Vec<Value>> = union.iter().filter(|t| !originals.contains(*t)).collect();

    // A concatenated tuple matches a bucket when every column store holds its
    // projection; for originals the sensitive position is ignored.
    let sa_pos = {
        let mut pos = 0;
        let mut found = 0;
        for col in columns {
            for &a in col {
                if a == sensitive {
                    found = pos;
                }
                pos += 1;
            }
        }
        found
    };
    let matches = |tuple: &[Value], skip_sa: bool| -> usize {
        sliced
            .buckets()
            .iter()
            .filter(|b| {
                let mut start = 0;
                columns.iter().enumerate().all(|(ci, col)| {
                    let seg = start..start + col.len();
                    start += col.len();
                    b.column_store(ci).iter().any(|vt| {
                        vt.iter().zip(seg.clone()).all(|(&v, k)| {
                            (skip_sa && k == sa_pos) || v == tuple[k]
                        })
                    })
                })
            })
            .count()
    };

    let mut orig_bands = BandCounts::default();
    for row in source.rows() {
        add_band(&mut orig_bands, matches(&concat(row), true));
    }
    let mut fake_bands = BandCounts::default();
    for t in &fakes {
        add_band(&mut fake_bands, matches(t, false));
    }
    (fakes.len(), orig_bands, fake_bands)
}

fn add_band(bands: &mut BandCounts, matches: usize) {
    if matches <= 10 {
        bands.low += 1;
    } else if matches <= 20 {
        bands.mid += 1;
    } else {
        bands.high += 1;
    }
}

/// Clustering cost of a medoid set: each point contributes its distance to
/// the nearest medoid.
pub fn medoid_cost(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..dist.len())
        .map(|p| {
            medoids
                .iter()
                .map(|&m| dist[p][m])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Whether no single medoid-for-non-medoid swap strictly lowers the cost.
pub fn single_swap_optimal(dist: &[Vec<f64>], medoids: &[usize]) -> bool {
    let base = medoid_cost(dist, medoids);
    for mi in 0..medoids.len() {
        for cand in 0..dist.len() {
            if medoids.contains(&cand) {
                continue;
            }
            let mut swapped = medoids.to_vec();
            swapped[mi] = cand;
            if medoid_cost(dist, &swapped) < base - 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Globally optimal k-medoid cost by enumerating every medoid set.
pub fn global_medoid_cost(dist: &[Vec<f64>], k: usize) -> f64 {
    let n = dist.len();
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..k).collect();
    loop {
        best = best.min(medoid_cost(dist, &choice));
        // Advance the combination lexicographically.
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if choice[i] < n - k + i {
                choice[i] += 1;
                for j in i + 1..k {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

//! Randomized cross-checks of the library against independent oracles:
//! exact rational recomputation of disclosure probabilities, exhaustive
//! candidate enumeration, and brute-force clustering.

mod common;

use std::collections::BTreeMap;

use num::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use slicekit::baselines::{bucketize, diverse_mondrian_buckets};
use slicekit::correlation::correlation_matrix;
use slicekit::membership::{
    count_fake_tuples, matching_histogram, Population, DEFAULT_CANDIDATE_CAP,
};
use slicekit::partition::pam_cluster;
use slicekit::slicing::{diversity_check, slice, tuple_partition};
use slicekit::table::Value;
use slicekit::SliceError;

#[test]
fn posterior_distributions_sum_to_one() {
    let mut rng = StdRng::seed_from_u64(2001);
    for trial in 0..1000 {
        let t = random_cat_table(&mut rng, 30, 5, 4);
        let p = random_partition(&mut rng, &t, 3);
        let buckets = random_buckets(&mut rng, t.n_rows());
        let sliced = slice(&t, &p, &buckets, trial).unwrap();
        for r in 0..t.n_rows() {
            let posterior = sliced.sensitive_value_probability(t.row(r)).unwrap();
            let total: f64 = posterior.iter().map(|&(_, x)| x).sum();
            assert!(
                (total - 1.0).abs() < 1e-9,
                "trial {trial} row {r}: posterior sums to {total}"
            );
        }
    }
}

#[test]
fn probabilities_and_verdicts_match_exact_rational_counting() {
    let mut rng = StdRng::seed_from_u64(2002);
    for trial in 0..500 {
        let t = random_cat_table(&mut rng, 12, 4, 3);
        let p = random_partition(&mut rng, &t, 3);
        let buckets = random_buckets(&mut rng, t.n_rows());
        let sliced = slice(&t, &p, &buckets, trial).unwrap();
        let oracle = rational_disclosure(&t, &p, &buckets);

        for (r, exact) in oracle.iter().enumerate() {
            let got: BTreeMap<Value, f64> = sliced
                .sensitive_value_probability(t.row(r))
                .unwrap()
                .into_iter()
                .collect();
            let want: BTreeMap<Value, f64> =
                exact.iter().map(|(&s, x)| (s, x.to_f64().unwrap())).collect();
            assert_eq!(
                got.keys().collect::<Vec<_>>(),
                want.keys().collect::<Vec<_>>(),
                "trial {trial} row {r}: support differs"
            );
            for (s, x) in &want {
                assert!(
                    (got[s] - x).abs() < 1e-9,
                    "trial {trial} row {r} value {s:?}: {} vs {x}",
                    got[s]
                );
            }
        }
        for l in [1.5, 2.0, 3.0, 4.0] {
            assert_eq!(
                diversity_check(&t, &p, &buckets, l).unwrap(),
                rational_verdict(&oracle, l),
                "trial {trial}: verdict differs at l={l}"
            );
        }
    }
}

#[test]
fn full_candidate_space_weights_sum_to_one_per_bucket() {
    let mut rng = StdRng::seed_from_u64(2003);
    let mut checked = 0;
    while checked < 100 {
        let t = random_cat_table(&mut rng, 10, 4, 3);
        let p = random_partition(&mut rng, &t, 3);
        let buckets = random_buckets(&mut rng, t.n_rows());
        let sliced = slice(&t, &p, &buckets, checked as u64).unwrap();
        for b in sliced.buckets() {
            // Enumerate every candidate tuple — one distinct value tuple per
            // column — and weight it by the product over columns of the
            // fraction of bucket rows holding that projection. The weights
            // form a probability distribution over the candidate space.
            let size = b.size() as f64;
            let counts: Vec<Vec<usize>> = (0..b.n_columns())
                .map(|ci| {
                    let mut m: BTreeMap<&Vec<Value>, usize> = BTreeMap::new();
                    for vt in b.column_store(ci) {
                        *m.entry(vt).or_insert(0) += 1;
                    }
                    m.into_values().collect()
                })
                .collect();
            let mut choice = vec![0usize; counts.len()];
            let mut total = 0.0;
            loop {
                let weight: f64 = choice
                    .iter()
                    .enumerate()
                    .map(|(ci, &x)| counts[ci][x] as f64 / size)
                    .product();
                total += weight;
                let mut ci = counts.len();
                loop {
                    if ci == 0 {
                        break;
                    }
                    ci -= 1;
                    choice[ci] += 1;
                    if choice[ci] < counts[ci].len() {
                        break;
                    }
                    choice[ci] = 0;
                }
                if choice.iter().all(|&x| x == 0) {
                    break;
                }
            }
            assert!(
                (total - 1.0).abs() < 1e-9,
                "candidate weights sum to {total}"
            );
            checked += 1;
            if checked == 100 {
                break;
            }
        }
    }
}

#[test]
fn clustering_is_single_swap_optimal_and_near_global() {
    let mut rng = StdRng::seed_from_u64(2004);
    let mut instances = 0;
    let mut global_hits = 0;
    while instances < 40 {
        let t = random_cat_table(&mut rng, 25, 6, 4);
        if t.n_attrs() < 3 {
            continue;
        }
        let matrix = match correlation_matrix(&t) {
            Ok(m) => m,
            // An attribute with a single present value has no association to
            // measure; draw again.
            Err(SliceError::DegenerateDomain(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let k = rng.gen_range(1..t.n_attrs());
        let seed = rng.gen();
        let got = pam_cluster(&matrix, k, seed).unwrap();
        let again = pam_cluster(&matrix, k, seed).unwrap();
        assert_eq!(got.medoids, again.medoids, "same seed, same clustering");
        assert!(
            single_swap_optimal(&matrix.distance, &got.medoids),
            "improving swap left behind for k={k}"
        );
        let best = global_medoid_cost(&matrix.distance, k);
        assert!(
            got.cost >= best - 1e-12,
            "reported cost {} beats the true optimum {best}",
            got.cost
        );
        if got.cost - best < 1e-9 {
            global_hits += 1;
        }
        instances += 1;
    }
    // Local search should land on the global optimum in the vast majority of
    // these tiny instances.
    assert!(
        global_hits * 2 > instances,
        "only {global_hits}/{instances} runs reached the global optimum"
    );
}

#[test]
fn bucketization_equals_slicing_with_the_two_column_partition() {
    let mut rng = StdRng::seed_from_u64(2005);
    let mut done = 0;
    let mut attempts = 0;
    while done < 50 {
        attempts += 1;
        assert!(attempts < 2000, "generator starved");
        let t = random_cat_table(&mut rng, 20, 4, 4);
        if t.n_rows() != 20 {
            continue;
        }
        let l = 1.0 + rng.gen_range(1..=9) as f64 / 10.0;
        let seed = rng.gen();
        let buckets = match diverse_mondrian_buckets(&t, l) {
            Ok(b) => b,
            Err(SliceError::Unsatisfiable { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let bucketized = bucketize(&t, l, seed).unwrap();
        assert_eq!(bucketized.n_buckets(), buckets.len());

        let sensitive = t.schema().sensitive_index().unwrap();
        let qis: Vec<usize> = (0..t.n_attrs()).filter(|&a| a != sensitive).collect();
        for (bi, rows) in buckets.iter().enumerate() {
            // QI multiset: source rows vs the bucketized release's first
            // column store.
            let mut want_qi: Vec<Vec<Value>> = rows
                .iter()
                .map(|&r| qis.iter().map(|&a| t.value(r, a)).collect())
                .collect();
            want_qi.sort();
            let mut got_qi = bucketized.sliced().bucket(bi).column_store(0).to_vec();
            got_qi.sort();
            assert_eq!(got_qi, want_qi, "QI multiset differs in bucket {bi}");

            let mut want_sa: Vec<Value> =
                rows.iter().map(|&r| t.value(r, sensitive)).collect();
            want_sa.sort();
            let mut got_sa: Vec<Value> = bucketized
                .sliced()
                .bucket(bi)
                .column_store(1)
                .iter()
                .map(|vt| vt[0])
                .collect();
            got_sa.sort();
            assert_eq!(got_sa, want_sa, "SA multiset differs in bucket {bi}");
        }
        done += 1;
    }
}

#[test]
fn membership_counts_match_exhaustive_enumeration() {
    let mut rng = StdRng::seed_from_u64(2006);
    for trial in 0..200 {
        let t = random_cat_table(&mut rng, 12, 4, 3);
        let p = random_partition(&mut rng, &t, 3);
        let buckets = random_buckets(&mut rng, t.n_rows());
        let sliced = slice(&t, &p, &buckets, trial).unwrap();

        let (want_fakes, want_orig, want_fake_bands) = membership_oracle(&sliced, &t);
        let fakes = count_fake_tuples(&sliced, &t, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(fakes.n_fake, want_fakes, "trial {trial}");
        assert_eq!(
            matching_histogram(&sliced, &t, Population::Original, DEFAULT_CANDIDATE_CAP).unwrap(),
            want_orig,
            "trial {trial} original bands"
        );
        assert_eq!(
            matching_histogram(&sliced, &t, Population::Fake, DEFAULT_CANDIDATE_CAP).unwrap(),
            want_fake_bands,
            "trial {trial} fake bands"
        );
    }
}

#[test]
fn partitioner_output_is_diverse_on_satisfiable_random_tables() {
    let mut rng = StdRng::seed_from_u64(2007);
    let mut done = 0;
    let mut attempts = 0;
    while done < 60 {
        attempts += 1;
        assert!(attempts < 3000, "generator starved");
        let t = random_cat_table(&mut rng, 16, 4, 4);
        let p = random_partition(&mut rng, &t, 3);
        let l = [1.2, 1.5, 2.0][done % 3];
        let buckets = match tuple_partition(&t, &p, l) {
            Ok(b) => b,
            Err(SliceError::Unsatisfiable { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(
            diversity_check(&t, &p, &buckets, l).unwrap(),
            "partition fails its own diversity check at l={l}"
        );
        let oracle = rational_disclosure(&t, &p, &buckets);
        assert!(rational_verdict(&oracle, l), "exact recount disagrees at l={l}");
        done += 1;
    }
}

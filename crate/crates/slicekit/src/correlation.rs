//! Attribute association via the mean-square contingency coefficient.
//!
//! For two categorical attributes with d1 and d2 observed values, the
//! coefficient is
//!
//! ```text
//! phi2 = 1/(min(d1,d2) - 1) * sum_ij (f_ij - f_i. * f_.j)^2 / (f_i. * f_.j)
//! ```
//!
//! which lies in [0, 1]; 0 means independent, 1 means one attribute
//! determines the other. Attribute distance for clustering is `1 - phi2`.

use crate::error::{Result, SliceError};
use crate::table::{Table, Value};

/// Joint relative frequencies of two categorical attributes, with marginals.
/// Rows with a missing cell in either attribute are skipped.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// d1 x d2 joint relative frequencies (sums to 1).
    pub joint: Vec<Vec<f64>>,
    pub row_marginals: Vec<f64>,
    pub col_marginals: Vec<f64>,
    /// Number of rows counted.
    pub n: usize,
}

/// Count the joint distribution of attributes `a` and `b` over the table.
pub fn contingency(table: &Table, a: usize, b: usize) -> Result<ContingencyTable> {
    let d1 = table.schema().attr(a).categorical_values()?.len();
    let d2 = table.schema().attr(b).categorical_values()?.len();

    let mut counts = vec![vec![0u64; d2]; d1];
    let mut n = 0u64;
    for row in table.rows() {
        match (row[a], row[b]) {
            (Value::Cat(i), Value::Cat(j)) => {
                counts[i as usize][j as usize] += 1;
                n += 1;
            }
            _ => continue, // missing in either attribute
        }
    }
    if n == 0 {
        return Err(SliceError::EmptyTable);
    }

    let joint: Vec<Vec<f64>> = counts
        .iter()
        .map(|r| r.iter().map(|&c| c as f64 / n as f64).collect())
        .collect();
    let row_marginals: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let col_marginals: Vec<f64> = (0..d2).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    Ok(ContingencyTable {
        joint,
        row_marginals,
        col_marginals,
        n: n as usize,
    })
}

/// Mean-square contingency of a joint distribution. Domain values that never
/// occur are dropped first; if either attribute then has fewer than two
/// values the coefficient is undefined.
pub fn phi2(ct: &ContingencyTable) -> Result<f64> {
    let rows: Vec<usize> = (0..ct.row_marginals.len())
        .filter(|&i| ct.row_marginals[i] > 0.0)
        .collect();
    let cols: Vec<usize> = (0..ct.col_marginals.len())
        .filter(|&j| ct.col_marginals[j] > 0.0)
        .collect();
    let d = rows.len().min(cols.len());
    if d < 2 {
        return Err(SliceError::DegenerateDomain(String::new()));
    }

    let mut sum = 0.0;
    for &i in &rows {
        for &j in &cols {
            let expect = ct.row_marginals[i] * ct.col_marginals[j];
            let dev = ct.joint[i][j] - expect;
            sum += dev * dev / expect;
        }
    }
    // The sum is bounded by min(d1,d2)-1 mathematically; clamp away rounding.
    Ok((sum / (d - 1) as f64).clamp(0.0, 1.0))
}

/// Pairwise phi2 and distance over all attributes of a table.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Symmetric, diagonal fixed at 1.
    pub phi2: Vec<Vec<f64>>,
    /// `1 - phi2`, diagonal 0.
    pub distance: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Compute phi2 for every attribute pair. All attributes must be categorical
/// (discretize continuous ones first); a degenerate attribute is reported by
/// name.
pub fn correlation_matrix(table: &Table) -> Result<CorrelationMatrix> {
    let d = table.n_attrs();
    let mut phi = vec![vec![1.0; d]; d];
    // Index loops: each pair writes both mirror cells of the matrix.
    #[allow(clippy::needless_range_loop)]
    for i in 0..d {
        for j in (i + 1)..d {
            let ct = contingency(table, i, j)?;
            let v = phi2(&ct).map_err(|e| match e {
                // Name whichever side collapsed (fewer than two observed values).
                SliceError::DegenerateDomain(_) => {
                    let live = |m: &[f64]| m.iter().filter(|&&x| x > 0.0).count();
                    let name = if live(&ct.row_marginals) < 2 {
                        table.schema().attr(i).name.clone()
                    } else {
                        table.schema().attr(j).name.clone()
                    };
                    SliceError::DegenerateDomain(name)
                }
                other => other,
            })?;
            phi[i][j] = v;
            phi[j][i] = v;
        }
    }
    let distance = phi
        .iter()
        .map(|row| row.iter().map(|v| 1.0 - v).collect())
        .collect();
    Ok(CorrelationMatrix {
        names: table.schema().names().iter().map(|s| s.to_string()).collect(),
        phi2: phi,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Attribute, Domain, Schema, Value};
    use std::sync::Arc;

    const EPS: f64 = 1e-12;

    fn cat_table(domains: &[usize], rows: &[&[u32]]) -> Table {
        let attributes = domains
            .iter()
            .enumerate()
            .map(|(i, &d)| Attribute {
                name: format!("a{i}"),
                domain: Domain::Categorical((0..d).map(|v| format!("v{v}")).collect()),
                sensitive: false,
            })
            .collect();
        let schema = Arc::new(Schema::new(attributes).unwrap());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Value::Cat(v)).collect())
            .collect();
        Table::new(schema, rows).unwrap()
    }

    #[test]
    fn uniform_pairs_have_uniform_joint() {
        let t = cat_table(&[2, 2], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        let ct = contingency(&t, 0, 1).unwrap();
        for row in &ct.joint {
            for &f in row {
                assert!((f - 0.25).abs() < EPS);
            }
        }
        assert_eq!(ct.n, 4);
        let total: f64 = ct.joint.iter().flatten().sum();
        assert!((total - 1.0).abs() < EPS);
    }

    #[test]
    fn single_pair_is_a_point_mass() {
        let t = cat_table(&[2, 2], &[&[1, 0]]);
        let ct = contingency(&t, 0, 1).unwrap();
        assert_eq!(ct.joint[1][0], 1.0);
        assert_eq!(ct.joint[0][0], 0.0);
    }

    #[test]
    fn identical_attributes_have_phi2_one() {
        // Any marginal distribution: pairing an attribute with itself is 1.
        let t = cat_table(&[3, 3], &[&[0, 0], &[0, 0], &[1, 1], &[2, 2], &[2, 2], &[2, 2]]);
        let ct = contingency(&t, 0, 1).unwrap();
        assert!((phi2(&ct).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn exact_independence_has_phi2_zero() {
        let t = cat_table(&[2, 2], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        let ct = contingency(&t, 0, 1).unwrap();
        assert!(phi2(&ct).unwrap().abs() < EPS);
    }

    #[test]
    fn worked_two_by_two_joint() {
        // Joint [[0.4, 0.1], [0.1, 0.4]]: every cell deviates from the
        // product of its 0.5 marginals by 0.15, so each of the four terms is
        // 0.15^2 / 0.25 = 0.09 and phi2 = 0.36.
        let ct = ContingencyTable {
            joint: vec![vec![0.4, 0.1], vec![0.1, 0.4]],
            row_marginals: vec![0.5, 0.5],
            col_marginals: vec![0.5, 0.5],
            n: 10,
        };
        assert!((phi2(&ct).unwrap() - 0.36).abs() < EPS);
    }

    #[test]
    fn zero_frequency_values_are_dropped() {
        // Second attribute has a 3-value domain but only 2 observed values;
        // effective size is 2 and the result stays defined and in range.
        let t = cat_table(&[2, 3], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        let ct = contingency(&t, 0, 1).unwrap();
        let v = phi2(&ct).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!(v.abs() < EPS); // still independent after dropping
    }

    #[test]
    fn constant_attribute_is_degenerate_and_named() {
        let t = cat_table(&[2, 2], &[&[0, 0], &[0, 1]]);
        let err = correlation_matrix(&t).unwrap_err();
        match err {
            SliceError::DegenerateDomain(name) => assert_eq!(name, "a0"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn continuous_attribute_is_rejected() {
        let attributes = vec![
            Attribute {
                name: "x".into(),
                domain: Domain::Continuous { min: 0.0, max: 1.0 },
                sensitive: false,
            },
            Attribute {
                name: "y".into(),
                domain: Domain::Categorical(vec!["a".into(), "b".into()]),
                sensitive: false,
            },
        ];
        let schema = Arc::new(Schema::new(attributes).unwrap());
        let t = Table::new(schema, vec![vec![Value::num(0.5), Value::Cat(0)]]).unwrap();
        assert!(matches!(
            contingency(&t, 0, 1),
            Err(SliceError::NotCategorical(_))
        ));
    }

    #[test]
    fn matrix_shape_and_symmetry() {
        let t = cat_table(
            &[2, 2, 3],
            &[&[0, 0, 0], &[0, 1, 1], &[1, 0, 2], &[1, 1, 0], &[0, 0, 1], &[1, 1, 2]],
        );
        let m = correlation_matrix(&t).unwrap();
        assert_eq!(m.len(), 3);
        for i in 0..3 {
            assert_eq!(m.phi2[i][i], 1.0);
            assert_eq!(m.distance[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(m.phi2[i][j], m.phi2[j][i]);
                assert!((m.distance[i][j] - (1.0 - m.phi2[i][j])).abs() < EPS);
                assert!((0.0..=1.0).contains(&m.phi2[i][j]));
            }
        }
    }

    #[test]
    fn single_attribute_matrix_is_identity() {
        let t = cat_table(&[2], &[&[0], &[1]]);
        let m = correlation_matrix(&t).unwrap();
        assert_eq!(m.phi2, vec![vec![1.0]]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        // Independent oracle: the same formula, written as one literal
        // double loop over the full observed support.
        fn phi2_oracle(joint: &[Vec<f64>]) -> f64 {
            let d1 = joint.len();
            let d2 = joint[0].len();
            let fi: Vec<f64> = (0..d1).map(|i| joint[i].iter().sum()).collect();
            let fj: Vec<f64> = (0..d2).map(|j| (0..d1).map(|i| joint[i][j]).sum()).collect();
            let live1 = fi.iter().filter(|&&x| x > 0.0).count();
            let live2 = fj.iter().filter(|&&x| x > 0.0).count();
            let mut s = 0.0;
            for i in 0..d1 {
                for j in 0..d2 {
                    if fi[i] > 0.0 && fj[j] > 0.0 {
                        s += (joint[i][j] - fi[i] * fj[j]).powi(2) / (fi[i] * fj[j]);
                    }
                }
            }
            (s / (live1.min(live2) - 1) as f64).clamp(0.0, 1.0)
        }

        proptest! {
            #[test]
            fn phi2_matches_oracle_and_stays_in_range(
                (d2, flat) in (2usize..5, 2usize..5).prop_flat_map(|(d1, d2)| {
                    (Just(d2), proptest::collection::vec(0u32..7, d1 * d2))
                })
            ) {
                let counts: Vec<Vec<u32>> =
                    flat.chunks(d2).map(|c| c.to_vec()).collect();
                // Need at least two live rows and columns.
                let total: u32 = counts.iter().flatten().sum();
                prop_assume!(total > 0);
                let live_rows = counts.iter().filter(|r| r.iter().any(|&c| c > 0)).count();
                let live_cols = (0..d2)
                    .filter(|&j| counts.iter().any(|r| r[j] > 0))
                    .count();
                prop_assume!(live_rows >= 2 && live_cols >= 2);

                let joint: Vec<Vec<f64>> = counts
                    .iter()
                    .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
                    .collect();
                let ct = ContingencyTable {
                    row_marginals: joint.iter().map(|r| r.iter().sum()).collect(),
                    col_marginals: (0..d2).map(|j| joint.iter().map(|r| r[j]).sum()).collect(),
                    joint: joint.clone(),
                    n: total as usize,
                };
                let got = phi2(&ct).unwrap();
                prop_assert!((0.0..=1.0).contains(&got));
                prop_assert!((got - phi2_oracle(&joint)).abs() < 1e-9);
            }

            #[test]
            fn phi2_is_invariant_under_value_relabeling(
                rows in proptest::collection::vec((0u32..3, 0u32..3), 8..40),
                perm_seed in 0u64..1000,
            ) {
                // Relabel the first attribute's values by a permutation; the
                // coefficient only depends on the joint counts, not labels.
                let table = |f: &dyn Fn(u32) -> u32| {
                    let data: Vec<Vec<u32>> =
                        rows.iter().map(|&(a, b)| vec![f(a), b]).collect();
                    let slices: Vec<&[u32]> = data.iter().map(|r| r.as_slice()).collect();
                    cat_table(&[3, 3], &slices)
                };
                let perms = [[0u32, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                let p = perms[(perm_seed % 6) as usize];
                let a = contingency(&table(&|v| v), 0, 1).unwrap();
                let b = contingency(&table(&|v| p[v as usize]), 0, 1).unwrap();
                match (phi2(&a), phi2(&b)) {
                    (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-9),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "one side degenerate, the other not"),
                }
            }
        }
    }
}

//! Grouping attributes into columns.
//!
//! Highly correlated attributes should share a column: within a column the
//! original value combinations survive slicing, across columns they are
//! broken up. [`pam_cluster`] runs PAM (k-medoids) over the `1 - phi2`
//! distance; [`special_partition`] additionally pairs the sensitive attribute
//! with the QIs most correlated with it so the published sensitive column
//! retains those associations.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::correlation::{correlation_matrix, CorrelationMatrix};
use crate::error::{Result, SliceError};
use crate::table::{Schema, Table};

/// Disjoint attribute columns covering the schema; the sensitive attribute
/// lives in the last column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributePartition {
    columns: Vec<Vec<usize>>,
}

impl AttributePartition {
    /// Validate and canonicalize (attributes ascending within each column).
    pub fn new(mut columns: Vec<Vec<usize>>, schema: &Schema) -> Result<AttributePartition> {
        let sensitive = schema.require_sensitive()?;
        if columns.is_empty() {
            return Err(SliceError::InvalidParameter(
                "attribute partition has no columns".into(),
            ));
        }
        let mut seen = vec![false; schema.len()];
        for col in &mut columns {
            if col.is_empty() {
                return Err(SliceError::InvalidParameter(
                    "attribute partition contains an empty column".into(),
                ));
            }
            col.sort_unstable();
            for &a in col.iter() {
                if a >= schema.len() {
                    return Err(SliceError::InvalidParameter(format!(
                        "attribute index {a} out of range"
                    )));
                }
                if seen[a] {
                    return Err(SliceError::InvalidParameter(format!(
                        "attribute {:?} appears in two columns",
                        schema.attr(a).name
                    )));
                }
                seen[a] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(SliceError::InvalidParameter(format!(
                "attribute {:?} is not covered by the partition",
                schema.attr(missing).name
            )));
        }
        if !columns.last().unwrap().contains(&sensitive) {
            return Err(SliceError::InvalidParameter(
                "the sensitive attribute must be in the last column".into(),
            ));
        }
        Ok(AttributePartition { columns })
    }

    /// The bucketization shape: all QIs in one column, the sensitive
    /// attribute alone in the other.
    pub fn bucketization(schema: &Schema) -> Result<AttributePartition> {
        let sensitive = schema.require_sensitive()?;
        let qis: Vec<usize> = (0..schema.len()).filter(|&a| a != sensitive).collect();
        if qis.is_empty() {
            return Err(SliceError::InvalidParameter(
                "bucketization needs at least one quasi-identifier".into(),
            ));
        }
        AttributePartition::new(vec![qis, vec![sensitive]], schema)
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Index of the column holding the sensitive attribute (always the last).
    pub fn sensitive_column(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.columns[i]
    }
}

/// Outcome of one PAM run.
#[derive(Debug, Clone)]
pub struct PamResult {
    /// Medoid attribute indices, ascending.
    pub medoids: Vec<usize>,
    /// One cluster per medoid, in medoid order; members ascending.
    pub clusters: Vec<Vec<usize>>,
    /// Sum over points of the distance to their medoid.
    pub cost: f64,
}

fn pam_cost(dist: &[Vec<f64>], medoids: &[usize]) -> f64 {
    dist.iter()
        .map(|row| {
            medoids
                .iter()
                .map(|&m| row[m])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn pam_assign(dist: &[Vec<f64>], medoids: &[usize]) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); medoids.len()];
    for (p, row) in dist.iter().enumerate() {
        // Nearest medoid, ties to the lowest index — except that a medoid
        // always claims itself, so no cluster can end up empty even when two
        // medoids sit at distance 0.
        let slot = if let Some(own) = medoids.iter().position(|&m| m == p) {
            own
        } else {
            let mut best = 0;
            for (i, &m) in medoids.iter().enumerate() {
                if row[m] < row[medoids[best]] {
                    best = i;
                }
            }
            best
        };
        clusters[slot].push(p);
    }
    clusters
}

/// PAM over an explicit distance matrix. Initial medoids are a seeded uniform
/// sample; each round scans (medoid, non-medoid) pairs in index order and
/// applies the first strictly improving swap, until none improves.
pub(crate) fn pam_over(dist: &[Vec<f64>], k: usize, seed: u64) -> Result<PamResult> {
    let n = dist.len();
    if k == 0 || k > n {
        return Err(SliceError::InvalidParameter(format!(
            "cannot pick {k} medoids out of {n} attributes"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut medoids: Vec<usize> = sample(&mut rng, n, k).into_iter().collect();
    medoids.sort_unstable();
    let mut cost = pam_cost(dist, &medoids);

    loop {
        let mut improved = false;
        'scan: for mi in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[mi] = cand;
                let trial_cost = pam_cost(dist, &trial);
                if trial_cost < cost {
                    trial.sort_unstable();
                    medoids = trial;
                    cost = trial_cost;
                    improved = true;
                    break 'scan;
                }
            }
        }
        if !improved {
            break;
        }
    }

    Ok(PamResult {
        clusters: pam_assign(dist, &medoids),
        medoids,
        cost,
    })
}

/// Cluster attributes into `k` groups by correlation distance.
pub fn pam_cluster(matrix: &CorrelationMatrix, k: usize, seed: u64) -> Result<PamResult> {
    pam_over(&matrix.distance, k, seed)
}

/// Build the column partition for slicing: the sensitive attribute plus the
/// `alpha - 1` QIs most correlated with it form the last column; the
/// remaining QIs are PAM-clustered into `c - 1` columns (ordered by their
/// smallest attribute index).
pub fn special_partition(
    table: &Table,
    c: usize,
    alpha: usize,
    seed: u64,
) -> Result<AttributePartition> {
    let schema = table.schema();
    let sensitive = schema.require_sensitive()?;
    let d = schema.len();
    if alpha < 1 {
        return Err(SliceError::InvalidParameter(
            "alpha must be at least 1".into(),
        ));
    }
    if c < 2 {
        return Err(SliceError::InvalidParameter(
            "need at least 2 columns (one of them sensitive)".into(),
        ));
    }
    if d < alpha || d - alpha < c - 1 {
        return Err(SliceError::InvalidParameter(format!(
            "infeasible partition: {d} attributes cannot give {c} columns with \
             alpha = {alpha} (need d - alpha >= c - 1)"
        )));
    }

    let matrix = correlation_matrix(table)?;

    // QIs ranked by decreasing correlation with the sensitive attribute,
    // schema order breaking ties.
    let mut ranked: Vec<usize> = (0..d).filter(|&a| a != sensitive).collect();
    ranked.sort_by(|&x, &y| {
        matrix.phi2[y][sensitive]
            .partial_cmp(&matrix.phi2[x][sensitive])
            .unwrap()
            .then(x.cmp(&y))
    });
    let mut sensitive_col: Vec<usize> = ranked[..alpha - 1].to_vec();
    sensitive_col.push(sensitive);

    let rest: Vec<usize> = {
        let mut rest = ranked[alpha - 1..].to_vec();
        rest.sort_unstable();
        rest
    };

    // PAM over the sub-matrix of the remaining QIs.
    let sub: Vec<Vec<f64>> = rest
        .iter()
        .map(|&a| rest.iter().map(|&b| matrix.distance[a][b]).collect())
        .collect();
    let pam = pam_over(&sub, c - 1, seed)?;

    let mut columns: Vec<Vec<usize>> = pam
        .clusters
        .iter()
        .map(|cluster| cluster.iter().map(|&i| rest[i]).collect::<Vec<usize>>())
        .collect();
    columns.sort_by_key(|col| col[0]);
    columns.push(sensitive_col);
    AttributePartition::new(columns, schema)
}

//! File output: atomic writes, key-value manifests, and the CSV renderings
//! of each release format.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use slicekit::baselines::GeneralizedTable;
use slicekit::correlation::CorrelationMatrix;
use slicekit::slicing::SlicedTable;
use slicekit::Table;

/// Rendering used for missing cells.
pub const NA: &str = "?";

/// Write a file atomically: everything lands under a temporary name first
/// and is renamed into place, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("moving {} into place", path.display()))?;
    Ok(())
}

/// Ordered `key = value` lines describing one run; every random decision a
/// command makes is reconstructible from the seeds recorded here.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        let mut m = Manifest::default();
        m.put("command", command);
        m
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

fn csv_bytes(rows: Vec<Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

/// A sliced release as CSV: one row per bucket position, attribute columns
/// in column-partition order, prefixed by the bucket index. Rows within a
/// bucket carry no cross-column linkage beyond the published permutation.
pub fn sliced_csv(sliced: &SlicedTable) -> anyhow::Result<Vec<u8>> {
    let schema = sliced.schema();
    let mut header = vec!["bucket".to_string()];
    for col in sliced.partition().columns() {
        for &a in col {
            header.push(schema.attr(a).name.clone());
        }
    }
    let mut rows = vec![header];
    for (bi, bucket) in sliced.buckets().iter().enumerate() {
        for k in 0..bucket.size() {
            let mut row = vec![bi.to_string()];
            for (ci, col) in sliced.partition().columns().iter().enumerate() {
                let tuple = &bucket.column_store(ci)[k];
                for (j, &a) in col.iter().enumerate() {
                    row.push(schema.format_value(a, tuple[j], NA));
                }
            }
            rows.push(row);
        }
    }
    csv_bytes(rows)
}

/// A generalized release as CSV: one row per source row with its bucket's
/// shared quasi-identifier cells and its own sensitive value.
pub fn generalized_csv(gen: &GeneralizedTable) -> anyhow::Result<Vec<u8>> {
    let schema = gen.schema();
    let mut header = vec!["bucket".to_string()];
    for &a in gen.qi_attrs() {
        header.push(schema.attr(a).name.clone());
    }
    header.push(schema.attr(gen.sensitive_attr()).name.clone());
    let mut rows = vec![header];
    for (bi, bucket) in gen.buckets().iter().enumerate() {
        let cells: Vec<String> = gen
            .qi_attrs()
            .iter()
            .zip(&bucket.cells)
            .map(|(&a, cell)| cell.render(schema, a, NA))
            .collect();
        for (k, _) in bucket.rows.iter().enumerate() {
            let mut row = vec![bi.to_string()];
            row.extend(cells.iter().cloned());
            row.push(schema.format_value(gen.sensitive_attr(), bucket.sa_values[k], NA));
            rows.push(row);
        }
    }
    csv_bytes(rows)
}

/// Pairwise association matrix as CSV, one row per attribute.
pub fn correlation_csv(matrix: &CorrelationMatrix) -> anyhow::Result<Vec<u8>> {
    let mut header = vec!["attribute".to_string()];
    header.extend(matrix.names.iter().cloned());
    let mut rows = vec![header];
    for (i, name) in matrix.names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(matrix.phi2[i].iter().map(|v| format!("{v:.6}")));
        rows.push(row);
    }
    csv_bytes(rows)
}

/// A plain table as CSV bytes.
pub fn table_csv(table: &Table) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf, NA)?;
    Ok(buf)
}

/// Generic rows-with-header CSV (results files).
pub fn rows_csv(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut all = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    all.extend(rows.iter().cloned());
    csv_bytes(all)
}

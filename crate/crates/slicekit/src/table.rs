//! Tables, schemas and cell values.
//!
//! A [`Table`] is an immutable grid of [`Value`]s described by a [`Schema`].
//! Attributes are categorical (ordered list of distinct string values; the
//! order of first appearance is the attribute's total order) or continuous
//! (an `[min, max]` interval). At most one attribute is flagged sensitive.
//!
//! Transformations ([`Table::filter_missing`], [`Table::discretize`],
//! [`Table::project`]) return new tables and never mutate in place.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SliceError};

/// Default marker for missing cells in CSV input.
pub const DEFAULT_NA: &str = "?";

/// A single cell. Categorical cells store an index into the attribute's
/// value list; continuous cells store the number itself. `Missing` sorts
/// before everything else so sorting a column with stray missing cells is
/// still well-defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Missing,
    Cat(u32),
    Num(OrderedFloat<f64>),
}

impl Value {
    pub fn num(x: f64) -> Value {
        Value::Num(OrderedFloat(x))
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

/// Attribute kind, as written in schema config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Categorical,
    Continuous,
}

/// An attribute's domain, realized from the schema declaration plus the data.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Distinct values in a fixed total order (declaration order first, then
    /// first appearance in the data).
    Categorical(Vec<String>),
    /// Closed interval covering every observed value.
    Continuous { min: f64, max: f64 },
}

/// One attribute of a realized schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub domain: Domain,
    pub sensitive: bool,
}

impl Attribute {
    pub fn kind(&self) -> AttrKind {
        match self.domain {
            Domain::Categorical(_) => AttrKind::Categorical,
            Domain::Continuous { .. } => AttrKind::Continuous,
        }
    }

    /// Number of distinct values (categorical) — used for normalized ranges
    /// and smoothing denominators.
    pub fn domain_size(&self) -> usize {
        match &self.domain {
            Domain::Categorical(values) => values.len(),
            Domain::Continuous { .. } => 0,
        }
    }

    pub fn categorical_values(&self) -> Result<&[String]> {
        match &self.domain {
            Domain::Categorical(values) => Ok(values),
            Domain::Continuous { .. } => Err(SliceError::NotCategorical(self.name.clone())),
        }
    }

    pub fn continuous_bounds(&self) -> Result<(f64, f64)> {
        match self.domain {
            Domain::Continuous { min, max } => Ok((min, max)),
            Domain::Categorical(_) => Err(SliceError::NotContinuous(self.name.clone())),
        }
    }
}

/// A realized schema: named attributes with concrete domains, at most one of
/// them sensitive.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Schema> {
        if attributes.is_empty() {
            return Err(SliceError::Config("schema declares no attributes".into()));
        }
        let mut seen = HashMap::new();
        for (i, a) in attributes.iter().enumerate() {
            if let Some(prev) = seen.insert(a.name.clone(), i) {
                return Err(SliceError::Config(format!(
                    "attribute name {:?} declared twice (positions {} and {})",
                    a.name, prev, i
                )));
            }
        }
        if attributes.iter().filter(|a| a.sensitive).count() > 1 {
            return Err(SliceError::Config(
                "more than one attribute flagged sensitive".into(),
            ));
        }
        Ok(Schema { attributes })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attr(&self, i: usize) -> &Attribute {
        &self.attributes[i]
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| SliceError::UnknownAttribute(name.to_string()))
    }

    /// Index of the sensitive attribute, if one is flagged.
    pub fn sensitive_index(&self) -> Option<usize> {
        self.attributes.iter().position(|a| a.sensitive)
    }

    pub fn require_sensitive(&self) -> Result<usize> {
        self.sensitive_index().ok_or(SliceError::NoSensitive)
    }

    /// Render a cell for output. Missing is rendered as the given marker.
    pub fn format_value(&self, attr: usize, v: Value, missing: &str) -> String {
        match v {
            Value::Missing => missing.to_string(),
            Value::Cat(i) => match &self.attributes[attr].domain {
                Domain::Categorical(values) => values[i as usize].clone(),
                Domain::Continuous { .. } => format!("#{i}"),
            },
            Value::Num(x) => format!("{}", x.0),
        }
    }
}

fn default_na() -> String {
    DEFAULT_NA.to_string()
}

fn default_true() -> bool {
    true
}

/// Declared shape of one attribute in a schema config file. `values`,
/// `min`/`max` and `bins` are optional; whatever is left open is realized
/// from the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub name: String,
    pub kind: AttrKind,
    #[serde(default)]
    pub sensitive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Equal-width bin count used when this continuous attribute is
    /// discretized during preparation (default 8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

/// Schema config file: the missing-value sentinel, whether the CSV carries a
/// header row, and the attribute declarations in column order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default = "default_na")]
    pub na_sentinel: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(rename = "attribute", default)]
    pub attributes: Vec<AttributeConfig>,
}

impl SchemaConfig {
    pub fn from_toml_str(s: &str) -> Result<SchemaConfig> {
        toml::from_str(s).map_err(|e| SliceError::Config(e.to_string()))
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<SchemaConfig> {
        let mut buf = String::new();
        File::open(path)?.read_to_string(&mut buf)?;
        SchemaConfig::from_toml_str(&buf)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema config serializes")
    }
}

/// An immutable table: shared schema plus row-major cells.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Arc<Schema>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    /// Build a table from parts, validating row arity and cell/domain
    /// consistency.
    pub fn new(schema: Arc<Schema>, rows: Vec<Vec<Value>>) -> Result<Table> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(SliceError::Arity {
                    row: r + 1,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                let ok = match (v, &schema.attr(c).domain) {
                    (Value::Missing, _) => true,
                    (Value::Cat(i), Domain::Categorical(values)) => (*i as usize) < values.len(),
                    (Value::Num(_), Domain::Continuous { .. }) => true,
                    _ => false,
                };
                if !ok {
                    return Err(SliceError::UnknownValue {
                        row: r + 1,
                        attribute: schema.attr(c).name.clone(),
                        value: format!("{v:?}"),
                    });
                }
            }
        }
        Ok(Table { schema, rows })
    }

    /// Load a CSV file against a schema config. Cells are trimmed; the
    /// sentinel and unparseable continuous cells become missing markers;
    /// values outside a *declared* domain are rejected with their location.
    pub fn load_csv(path: impl AsRef<Path>, config: &SchemaConfig) -> Result<Table> {
        let file = File::open(path)?;
        Table::from_reader(file, config)
    }

    /// Same as [`Table::load_csv`] but from any reader (handy in tests).
    pub fn from_reader(reader: impl Read, config: &SchemaConfig) -> Result<Table> {
        if config.attributes.is_empty() {
            return Err(SliceError::Config("schema declares no attributes".into()));
        }
        let d = config.attributes.len();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);

        let mut records = rdr.records();
        if config.has_header {
            match records.next() {
                Some(header) => {
                    let header = header?;
                    for (i, a) in config.attributes.iter().enumerate() {
                        let found = header.get(i).unwrap_or("");
                        if found != a.name {
                            return Err(SliceError::HeaderMismatch {
                                position: i + 1,
                                expected: a.name.clone(),
                                found: found.to_string(),
                            });
                        }
                    }
                    if header.len() != d {
                        return Err(SliceError::HeaderMismatch {
                            position: d + 1,
                            expected: String::new(),
                            found: header.get(d).unwrap_or("").to_string(),
                        });
                    }
                }
                None => {
                    return Err(SliceError::HeaderMismatch {
                        position: 1,
                        expected: config.attributes[0].name.clone(),
                        found: String::new(),
                    })
                }
            }
        }

        // Per-attribute interners. Declared values come first and close the
        // domain; otherwise the domain is open and grows in data order.
        let mut interner: Vec<HashMap<String, u32>> = Vec::with_capacity(d);
        let mut cat_values: Vec<Vec<String>> = Vec::with_capacity(d);
        let mut closed: Vec<bool> = Vec::with_capacity(d);
        for a in &config.attributes {
            let declared = a.values.clone().unwrap_or_default();
            let mut map = HashMap::new();
            for (i, v) in declared.iter().enumerate() {
                if map.insert(v.clone(), i as u32).is_some() {
                    return Err(SliceError::Config(format!(
                        "attribute {:?} declares duplicate value {:?}",
                        a.name, v
                    )));
                }
            }
            interner.push(map);
            cat_values.push(declared);
            closed.push(a.values.is_some());
        }
        let mut observed_min = vec![f64::INFINITY; d];
        let mut observed_max = vec![f64::NEG_INFINITY; d];

        let mut rows: Vec<Vec<Value>> = Vec::new();
        for (r, record) in records.enumerate() {
            let record = record?;
            if record.len() != d {
                return Err(SliceError::Arity {
                    row: r + 1,
                    expected: d,
                    found: record.len(),
                });
            }
            let mut row = Vec::with_capacity(d);
            for (c, cell) in record.iter().enumerate() {
                let a = &config.attributes[c];
                if cell == config.na_sentinel {
                    row.push(Value::Missing);
                    continue;
                }
                match a.kind {
                    AttrKind::Categorical => {
                        if let Some(&idx) = interner[c].get(cell) {
                            row.push(Value::Cat(idx));
                        } else if closed[c] {
                            return Err(SliceError::UnknownValue {
                                row: r + 1,
                                attribute: a.name.clone(),
                                value: cell.to_string(),
                            });
                        } else {
                            let idx = cat_values[c].len() as u32;
                            interner[c].insert(cell.to_string(), idx);
                            cat_values[c].push(cell.to_string());
                            row.push(Value::Cat(idx));
                        }
                    }
                    AttrKind::Continuous => match cell.parse::<f64>() {
                        Ok(x) if x.is_finite() => {
                            if let Some(min) = a.min {
                                if x < min {
                                    return Err(SliceError::OutOfBounds {
                                        row: r + 1,
                                        attribute: a.name.clone(),
                                        value: x,
                                        min,
                                        max: a.max.unwrap_or(f64::INFINITY),
                                    });
                                }
                            }
                            if let Some(max) = a.max {
                                if x > max {
                                    return Err(SliceError::OutOfBounds {
                                        row: r + 1,
                                        attribute: a.name.clone(),
                                        value: x,
                                        min: a.min.unwrap_or(f64::NEG_INFINITY),
                                        max,
                                    });
                                }
                            }
                            observed_min[c] = observed_min[c].min(x);
                            observed_max[c] = observed_max[c].max(x);
                            row.push(Value::num(x));
                        }
                        // Unparseable (or non-finite) numeric cells are
                        // treated like the sentinel.
                        _ => row.push(Value::Missing),
                    },
                }
            }
            rows.push(row);
        }

        let mut attributes = Vec::with_capacity(d);
        for (c, a) in config.attributes.iter().enumerate() {
            let domain = match a.kind {
                AttrKind::Categorical => Domain::Categorical(std::mem::take(&mut cat_values[c])),
                AttrKind::Continuous => {
                    let min = a.min.unwrap_or(if observed_min[c].is_finite() {
                        observed_min[c]
                    } else {
                        0.0
                    });
                    let max = a.max.unwrap_or(if observed_max[c].is_finite() {
                        observed_max[c]
                    } else {
                        min
                    });
                    Domain::Continuous { min, max }
                }
            };
            attributes.push(Attribute {
                name: a.name.clone(),
                domain,
                sensitive: a.sensitive,
            });
        }
        Ok(Table {
            schema: Arc::new(Schema::new(attributes)?),
            rows,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attrs(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[Value] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn value(&self, row: usize, attr: usize) -> Value {
        self.rows[row][attr]
    }

    pub fn sensitive_index(&self) -> Option<usize> {
        self.schema.sensitive_index()
    }

    /// Drop every row containing at least one missing cell. The schema is
    /// unchanged; the operation is idempotent.
    pub fn filter_missing(&self) -> Table {
        let rows = self
            .rows
            .iter()
            .filter(|row| !row.iter().any(Value::is_missing))
            .cloned()
            .collect();
        Table {
            schema: Arc::clone(&self.schema),
            rows,
        }
    }

    /// Replace one continuous attribute by its equal-width binned categorical
    /// counterpart. Missing cells stay missing; other attributes and the row
    /// count are untouched.
    pub fn discretize(&self, spec: &DiscretizationSpec) -> Result<Table> {
        let attr = spec.attribute;
        if attr >= self.schema.len() {
            return Err(SliceError::InvalidParameter(format!(
                "attribute index {} out of range",
                attr
            )));
        }
        let (min, max) = self.schema.attr(attr).continuous_bounds()?;
        let labels = spec.labels(min, max);

        let mut attributes = self.schema.attributes().to_vec();
        attributes[attr] = Attribute {
            name: attributes[attr].name.clone(),
            domain: Domain::Categorical(labels),
            sensitive: attributes[attr].sensitive,
        };
        let schema = Arc::new(Schema::new(attributes)?);

        let mut rows = self.rows.clone();
        for row in &mut rows {
            row[attr] = match row[attr] {
                Value::Missing => Value::Missing,
                Value::Num(x) => Value::Cat(spec.bin_of(x.0, min) as u32),
                Value::Cat(_) => {
                    return Err(SliceError::NotContinuous(
                        self.schema.attr(attr).name.clone(),
                    ))
                }
            };
        }
        Ok(Table { schema, rows })
    }

    /// Keep only the given attributes, in the given order.
    pub fn project(&self, attrs: &[usize]) -> Result<Table> {
        let mut seen = vec![false; self.schema.len()];
        for &a in attrs {
            if a >= self.schema.len() {
                return Err(SliceError::InvalidParameter(format!(
                    "attribute index {} out of range",
                    a
                )));
            }
            if seen[a] {
                return Err(SliceError::InvalidParameter(format!(
                    "attribute {:?} selected twice",
                    self.schema.attr(a).name
                )));
            }
            seen[a] = true;
        }
        let attributes = attrs
            .iter()
            .map(|&a| self.schema.attr(a).clone())
            .collect();
        let schema = Arc::new(Schema::new(attributes)?);
        let rows = self
            .rows
            .iter()
            .map(|row| attrs.iter().map(|&a| row[a]).collect())
            .collect();
        Ok(Table { schema, rows })
    }

    /// Project by attribute names.
    pub fn project_names(&self, names: &[&str]) -> Result<Table> {
        let idx: Result<Vec<usize>> = names.iter().map(|n| self.schema.index_of(n)).collect();
        self.project(&idx?)
    }

    /// Seeded sample of `n` rows without replacement (original relative
    /// order preserved). Returns the whole table when `n >= n_rows`.
    pub fn subsample(&self, n: usize, seed: u64) -> Table {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        if n >= self.rows.len() {
            return self.clone();
        }
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx.sort_unstable();
        let rows = idx.iter().map(|&i| self.rows[i].clone()).collect();
        Table {
            schema: Arc::clone(&self.schema),
            rows,
        }
    }

    /// Write the table as CSV with a header row.
    pub fn write_csv(&self, writer: impl Write, missing: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.names())?;
        for row in &self.rows {
            let record: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, &v)| self.schema.format_value(c, v, missing))
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Derived schema config with fully realized domains, suitable for
    /// reloading CSV written by [`Table::write_csv`].
    pub fn to_schema_config(&self, na_sentinel: &str) -> SchemaConfig {
        let attributes = self
            .schema
            .attributes()
            .iter()
            .map(|a| match &a.domain {
                Domain::Categorical(values) => AttributeConfig {
                    name: a.name.clone(),
                    kind: AttrKind::Categorical,
                    sensitive: a.sensitive,
                    values: Some(values.clone()),
                    min: None,
                    max: None,
                    bins: None,
                },
                Domain::Continuous { min, max } => AttributeConfig {
                    name: a.name.clone(),
                    kind: AttrKind::Continuous,
                    sensitive: a.sensitive,
                    values: None,
                    min: Some(*min),
                    max: Some(*max),
                    bins: None,
                },
            })
            .collect();
        SchemaConfig {
            na_sentinel: na_sentinel.to_string(),
            has_header: true,
            attributes,
        }
    }
}

/// Equal-width binning plan for one continuous attribute.
#[derive(Debug, Clone)]
pub struct DiscretizationSpec {
    pub attribute: usize,
    pub bin_count: usize,
    /// Interior cut points, strictly increasing (`bin_count - 1` of them).
    pub boundaries: Vec<f64>,
}

impl DiscretizationSpec {
    /// Equal-width bins over the attribute's domain interval.
    pub fn equal_width(schema: &Schema, attribute: usize, bin_count: usize) -> Result<Self> {
        if attribute >= schema.len() {
            return Err(SliceError::InvalidParameter(format!(
                "attribute index {} out of range",
                attribute
            )));
        }
        let a = schema.attr(attribute);
        let (min, max) = a.continuous_bounds()?;
        if bin_count == 0 {
            return Err(SliceError::InvalidParameter(
                "bin count must be at least 1".into(),
            ));
        }
        if bin_count > 1 && max <= min {
            return Err(SliceError::InvalidParameter(format!(
                "attribute {:?} has a zero-width domain; cannot cut {} bins",
                a.name, bin_count
            )));
        }
        let width = (max - min) / bin_count as f64;
        let boundaries = (1..bin_count).map(|i| min + width * i as f64).collect();
        Ok(DiscretizationSpec {
            attribute,
            bin_count,
            boundaries,
        })
    }

    /// Bin index of a value: `floor((v - min) / width)` clamped into range,
    /// so the last bin is closed on the right.
    pub fn bin_of(&self, v: f64, min: f64) -> usize {
        if self.bin_count == 1 {
            return 0;
        }
        // All widths are equal by construction; recover one from the cuts.
        let width = self.boundaries[0] - min;
        let raw = ((v - min) / width).floor();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.bin_count - 1)
        }
    }

    /// Interval labels, half-open except the last: `[lo..hi)`, `[lo..hi]`.
    fn labels(&self, min: f64, max: f64) -> Vec<String> {
        let mut out = Vec::with_capacity(self.bin_count);
        for i in 0..self.bin_count {
            let lo = if i == 0 { min } else { self.boundaries[i - 1] };
            let mut s = String::new();
            if i + 1 == self.bin_count {
                write!(s, "[{lo}..{max}]").unwrap();
            } else {
                let hi = self.boundaries[i];
                write!(s, "[{lo}..{hi})").unwrap();
            }
            out.push(s);
        }
        out
    }
}

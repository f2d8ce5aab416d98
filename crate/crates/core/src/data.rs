//! Column-typed datasets with attribute roles, plus CSV ingestion and
//! emission.
//!
//! Numeric columns live in a `d × n` matrix (one row per attribute, one
//! column per record). Categorical and boolean columns keep their raw
//! labels.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Boolean,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Identifier,
    QuasiIdentifier,
    Sensitive,
    #[default]
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub role: Role,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: Role) -> Self {
        Self {
            name: name.into(),
            kind,
            role,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", c.name)));
            }
        }
        Ok(Self { columns })
    }

    /// All-numeric schema with role `other`.
    pub fn numeric<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| ColumnSpec::new(n.as_ref(), ColumnKind::Numeric, Role::Other))
                .collect(),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            columns: Vec<ColumnSpec>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        Self::new(raw.columns)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn numeric_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Numeric)
    }

    pub fn label_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.kind != ColumnKind::Numeric)
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(move |c| c.role == role)
    }
}

/// Position of a schema column inside its storage block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Numeric(usize),
    Label(usize),
}

fn slots(schema: &Schema) -> Vec<Slot> {
    let (mut num, mut lab) = (0, 0);
    schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => {
                num += 1;
                Slot::Numeric(num - 1)
            }
            _ => {
                lab += 1;
                Slot::Label(lab - 1)
            }
        })
        .collect()
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" | "t" => Some(true),
        "false" | "0" | "no" | "n" | "f" => Some(false),
        _ => None,
    }
}

/// Immutable table: schema, `d × n` numeric block and per-column label
/// sequences for categorical/boolean columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    numeric: Array2<f64>,
    labels: Vec<Vec<String>>,
    n_records: usize,
}

impl Dataset {
    pub fn new(schema: Schema, numeric: Array2<f64>, labels: Vec<Vec<String>>) -> Result<Self> {
        let d = schema.numeric_columns().count();
        let c = schema.label_columns().count();
        if numeric.nrows() != d {
            return Err(Error::Dataset(format!(
                "numeric block has {} rows but schema has {d} numeric columns",
                numeric.nrows()
            )));
        }
        if labels.len() != c {
            return Err(Error::Dataset(format!(
                "{} label columns supplied but schema has {c}",
                labels.len()
            )));
        }
        let n = if d > 0 {
            numeric.ncols()
        } else {
            labels.first().map_or(0, Vec::len)
        };
        if labels.iter().any(|l| l.len() != n) {
            return Err(Error::Dataset("columns disagree on record count".into()));
        }
        if let Some(((i, j), v)) = numeric.indexed_iter().find(|(_, v)| !v.is_finite()) {
            let name = &schema.numeric_columns().nth(i).expect("row in range").name;
            return Err(Error::Dataset(format!(
                "non-finite value {v} at record {}, column {name:?}",
                j + 1
            )));
        }
        for (spec, col) in schema.label_columns().zip(&labels) {
            if let Some(pos) = col.iter().position(|s| s.is_empty()) {
                return Err(Error::Missing {
                    row: pos + 1,
                    column: spec.name.clone(),
                });
            }
            if spec.kind == ColumnKind::Boolean {
                if let Some(pos) = col.iter().position(|s| parse_bool(s).is_none()) {
                    return Err(Error::Parse {
                        row: pos + 1,
                        column: spec.name.clone(),
                        value: col[pos].clone(),
                        kind: "boolean",
                    });
                }
            }
        }
        Ok(Self {
            schema,
            numeric,
            labels,
            n_records: n,
        })
    }

    /// All-numeric dataset from a `d × n` matrix.
    pub fn from_numeric<S: AsRef<str>>(names: &[S], numeric: Array2<f64>) -> Result<Self> {
        Self::new(Schema::numeric(names)?, numeric, Vec::new())
    }

    /// Same schema and labels, new numeric block of identical shape.
    pub fn with_numeric(&self, numeric: Array2<f64>) -> Result<Self> {
        if numeric.dim() != self.numeric.dim() {
            return Err(Error::Dimension(format!(
                "replacement numeric block {:?} differs from {:?}",
                numeric.dim(),
                self.numeric.dim()
            )));
        }
        Self::new(self.schema.clone(), numeric, self.labels.clone())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// `d × n` numeric block.
    pub fn numeric(&self) -> ArrayView2<'_, f64> {
        self.numeric.view()
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn n_numeric(&self) -> usize {
        self.numeric.nrows()
    }

    pub fn is_all_numeric(&self) -> bool {
        self.labels.is_empty() && self.numeric.nrows() > 0
    }

    /// Error unless every column is numeric and there is at least one.
    pub fn require_all_numeric(&self, what: &str) -> Result<()> {
        if self.is_all_numeric() {
            Ok(())
        } else {
            Err(Error::Dataset(format!("{what} requires an all-numeric dataset")))
        }
    }

    pub fn numeric_column(&self, name: &str) -> Result<ArrayView1<'_, f64>> {
        match self.slot(name)? {
            Slot::Numeric(i) => Ok(self.numeric.row(i)),
            Slot::Label(_) => Err(Error::Dataset(format!("column {name:?} is not numeric"))),
        }
    }

    pub fn label_column(&self, name: &str) -> Result<&[String]> {
        match self.slot(name)? {
            Slot::Label(i) => Ok(&self.labels[i]),
            Slot::Numeric(_) => Err(Error::Dataset(format!("column {name:?} is numeric"))),
        }
    }

    pub fn boolean_column(&self, name: &str) -> Result<Vec<bool>> {
        let spec = self
            .schema
            .column(name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))?;
        if spec.kind != ColumnKind::Boolean {
            return Err(Error::Dataset(format!("column {name:?} is not boolean")));
        }
        Ok(self
            .label_column(name)?
            .iter()
            .map(|s| parse_bool(s).expect("validated at construction"))
            .collect())
    }

    /// Replace a label column (categorical or boolean) with new labels.
    pub fn with_label_column(&self, name: &str, values: Vec<String>) -> Result<Self> {
        let Slot::Label(i) = self.slot(name)? else {
            return Err(Error::Dataset(format!("column {name:?} is numeric")));
        };
        if values.len() != self.n_records {
            return Err(Error::Dimension(format!(
                "column {name:?} needs {} values, got {}",
                self.n_records,
                values.len()
            )));
        }
        let mut labels = self.labels.clone();
        labels[i] = values;
        Self::new(self.schema.clone(), self.numeric.clone(), labels)
    }

    /// Text of one cell as it would appear in CSV.
    pub fn cell_text(&self, record: usize, column: usize) -> String {
        match slots(&self.schema)[column] {
            Slot::Numeric(i) => format_number(self.numeric[[i, record]]),
            Slot::Label(i) => self.labels[i][record].clone(),
        }
    }

    /// Subset of records, in the given order.
    pub fn select_records(&self, records: &[usize]) -> Self {
        let numeric = self.numeric.select(Axis(1), records);
        let labels = self
            .labels
            .iter()
            .map(|col| records.iter().map(|&r| col[r].clone()).collect())
            .collect();
        Self {
            schema: self.schema.clone(),
            numeric,
            n_records: records.len(),
            labels,
        }
    }

    fn slot(&self, name: &str) -> Result<Slot> {
        let pos = self
            .schema
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))?;
        Ok(slots(&self.schema)[pos])
    }
}

/// Round to 13 significant digits and print the shortest text that parses
/// back to that rounded value. Reloading is exact to 12 significant digits
/// with relative error below 1e-12.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.12e}").parse().expect("float text parses");
    let a = rounded.abs();
    if (1e-6..1e16).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let expected: Vec<String> = schema.columns.iter().map(|c| c.name.clone()).collect();
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let mismatch = header.len() != expected.len()
        || index.len() != header.len()
        || expected.iter().any(|e| !index.contains_key(e.as_str()));
    if mismatch {
        return Err(Error::HeaderMismatch {
            expected,
            found: header,
        });
    }
    let positions: Vec<usize> = expected.iter().map(|e| index[e.as_str()]).collect();
    let slots = slots(schema);
    let d = schema.numeric_columns().count();
    let mut numeric_cols: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); schema.label_columns().count()];

    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = row + 1;
        for ((spec, &pos), slot) in schema.columns.iter().zip(&positions).zip(&slots) {
            let cell = rec.get(pos).unwrap_or("");
            if cell.trim().is_empty() {
                return Err(Error::Missing {
                    row,
                    column: spec.name.clone(),
                });
            }
            match *slot {
                Slot::Numeric(i) => {
                    let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                        Error::Parse {
                            row,
                            column: spec.name.clone(),
                            value: cell.to_string(),
                            kind: "number",
                        }
                    })?;
                    numeric_cols[i].push(v);
                }
                Slot::Label(i) => labels[i].push(cell.to_string()),
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyBody);
    }
    let flat: Vec<f64> = numeric_cols.into_iter().flatten().collect();
    let numeric = Array2::from_shape_vec((d, n), flat).expect("rectangular numeric block");
    Dataset::new(schema.clone(), numeric, labels)
}

/// Schema guessed from a CSV: a column is numeric when every non-empty cell
/// parses as a finite number, categorical otherwise. Roles are `other`.
pub fn infer_schema<R: Read>(reader: R) -> Result<Schema> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let mut numeric = vec![true; header.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (i, flag) in numeric.iter_mut().enumerate() {
            let cell = rec.get(i).unwrap_or("").trim();
            if !cell.is_empty() && !cell.parse::<f64>().is_ok_and(f64::is_finite) {
                *flag = false;
            }
        }
    }
    Schema::new(
        header
            .into_iter()
            .zip(numeric)
            .map(|(name, num)| {
                let kind = if num { ColumnKind::Numeric } else { ColumnKind::Categorical };
                ColumnSpec::new(name, kind, Role::Other)
            })
            .collect(),
    )
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(dataset.schema.names())?;
    let ncols = dataset.schema.columns.len();
    for r in 0..dataset.n_records {
        wtr.write_record((0..ncols).map(|c| dataset.cell_text(r, c)))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, std::io::BufWriter::new(file))
}

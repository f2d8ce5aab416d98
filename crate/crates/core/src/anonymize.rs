//! k-anonymization by greedy top-down partitioning, plus verifiers for
//! k-anonymity, distinct l-diversity and t-closeness.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{format_number, ColumnKind, ColumnSpec, Dataset, Role, Schema};
use crate::error::{Error, Result};

/// Label of the root used when a categorical QI column has no hierarchy.
pub const ANY_VALUE: &str = "*";

/// Rooted tree over the labels of one categorical column.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy {
    root: String,
    parent: HashMap<String, String>,
    depth: HashMap<String, usize>,
    leaf_rank: HashMap<String, usize>,
    n_leaves: usize,
}

impl Hierarchy {
    /// Build from a `node → children` map; the root is the only node that
    /// is nobody's child.
    pub fn from_children(column: &str, children: &BTreeMap<String, Vec<String>>) -> Result<Self> {
        let fail = |reason: String| Error::Hierarchy {
            column: column.into(),
            reason,
        };
        let mut parent = HashMap::new();
        for (node, kids) in children {
            for kid in kids {
                if kid == node {
                    return Err(fail(format!("{node:?} is its own child")));
                }
                if let Some(prev) = parent.insert(kid.clone(), node.clone()) {
                    return Err(fail(format!("{kid:?} has two parents ({prev:?}, {node:?})")));
                }
            }
        }
        let roots: Vec<&String> = children.keys().filter(|n| !parent.contains_key(*n)).collect();
        let root = match roots.as_slice() {
            [r] => (*r).clone(),
            [] => return Err(fail("no root (cycle)".into())),
            many => return Err(fail(format!("several roots: {many:?}"))),
        };

        // depth-first walk from the root; ranks leaves in visiting order
        let mut depth = HashMap::new();
        let mut leaf_rank = HashMap::new();
        let mut stack = vec![(root.clone(), 0usize)];
        while let Some((node, dep)) = stack.pop() {
            if depth.insert(node.clone(), dep).is_some() {
                return Err(fail(format!("{node:?} reached twice (cycle)")));
            }
            match children.get(&node) {
                Some(kids) if !kids.is_empty() => {
                    stack.extend(kids.iter().rev().map(|k| (k.clone(), dep + 1)));
                }
                _ => {
                    let r = leaf_rank.len();
                    leaf_rank.insert(node, r);
                }
            }
        }
        let all: HashSet<&String> = children.keys().chain(parent.keys()).collect();
        if all.len() != depth.len() {
            return Err(fail("tree is not connected (cycle detached from root)".into()));
        }
        let n_leaves = leaf_rank.len();
        Ok(Self {
            root,
            parent,
            depth,
            leaf_rank,
            n_leaves,
        })
    }

    /// `*` with every value as a direct child, leaves in sorted order.
    pub fn flat<S: AsRef<str>>(values: &[S]) -> Self {
        let mut leaves: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        leaves.sort();
        leaves.dedup();
        leaves.retain(|v| v != ANY_VALUE);
        let mut children = BTreeMap::new();
        children.insert(ANY_VALUE.to_string(), leaves);
        Self::from_children("", &children).expect("flat tree is valid")
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn leaf_rank(&self, label: &str) -> Option<usize> {
        self.leaf_rank.get(label).copied()
    }

    pub fn is_leaf(&self, label: &str) -> bool {
        self.leaf_rank.contains_key(label)
    }

    /// Lowest common ancestor of a non-empty set of nodes.
    pub fn lowest_common_ancestor<'a>(&'a self, nodes: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
        let mut it = nodes.into_iter();
        let mut acc = self.depth.get_key_value(it.next()?)?.0.as_str();
        for node in it {
            let mut b = self.depth.get_key_value(node)?.0.as_str();
            let mut a = acc;
            while self.depth[a] > self.depth[b] {
                a = &self.parent[a];
            }
            while self.depth[b] > self.depth[a] {
                b = &self.parent[b];
            }
            while a != b {
                a = &self.parent[a];
                b = &self.parent[b];
            }
            acc = a;
        }
        Some(acc)
    }
}

/// Hierarchies for the categorical QI columns, keyed by column name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeneralizationHierarchy {
    trees: BTreeMap<String, Hierarchy>,
}

impl GeneralizationHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    /// `{"column": {"node": ["child", ...], ...}, ...}`
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, BTreeMap<String, Vec<String>>> = serde_json::from_str(s)?;
        let mut trees = BTreeMap::new();
        for (column, children) in &raw {
            trees.insert(column.clone(), Hierarchy::from_children(column, children)?);
        }
        Ok(Self { trees })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn insert(&mut self, column: impl Into<String>, tree: Hierarchy) {
        self.trees.insert(column.into(), tree);
    }

    pub fn get(&self, column: &str) -> Option<&Hierarchy> {
        self.trees.get(column)
    }
}

/// One output cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cell {
    Interval { lo: f64, hi: f64 },
    Label { value: String },
    Number { value: f64 },
}

impl Cell {
    pub fn text(&self) -> String {
        match self {
            Cell::Interval { lo, hi } => format!("[{},{}]", format_number(*lo), format_number(*hi)),
            Cell::Label { value } => value.clone(),
            Cell::Number { value } => format_number(*value),
        }
    }

    fn label(value: impl Into<String>) -> Self {
        Cell::Label { value: value.into() }
    }
}

fn parse_interval(s: &str) -> Option<(f64, f64)> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (lo, hi) = inner.split_once(',')?;
    let (lo, hi) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
    (lo <= hi).then_some((lo, hi))
}

/// Generalized table. Identifier columns are gone; QI cells are intervals
/// (numeric) or hierarchy labels (categorical); everything else is copied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnonymizedTable {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<Cell>>,
    /// Original record index of each output row.
    pub source_rows: Vec<usize>,
    pub suppressed_count: usize,
    /// Output-row indices grouped by identical QI tuple, ordered by first row.
    pub equivalence_classes: Vec<Vec<usize>>,
}

impl AnonymizedTable {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<Vec<Cell>>, source_rows: Vec<usize>, suppressed_count: usize) -> Self {
        let mut table = Self {
            columns,
            rows,
            source_rows,
            suppressed_count,
            equivalence_classes: Vec::new(),
        };
        table.equivalence_classes = table.compute_classes();
        table
    }

    fn qi_positions(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == Role::QuasiIdentifier)
            .map(|(i, _)| i)
            .collect()
    }

    fn compute_classes(&self) -> Vec<Vec<usize>> {
        let qi = self.qi_positions();
        let mut index: HashMap<Vec<String>, usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            let key: Vec<String> = qi.iter().map(|&c| row[c].text()).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[slot].push(r);
        }
        classes
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.equivalence_classes.iter().map(Vec::len).collect()
    }

    fn column_position(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Parse a generalized CSV produced by [`AnonymizedTable::write_csv_to`]
    /// against the schema of the original data. Identifier columns may be
    /// absent; other columns may appear in any order.
    pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let columns: Vec<ColumnSpec> = schema
            .columns()
            .iter()
            .filter(|c| c.role != Role::Identifier)
            .cloned()
            .collect();
        let mut expected: Vec<String> = columns.iter().map(|c| c.name.clone()).collect();
        let mut found = header.clone();
        expected.sort();
        found.sort();
        if expected != found {
            return Err(Error::HeaderMismatch { expected, found });
        }
        let order: Vec<usize> = columns
            .iter()
            .map(|c| header.iter().position(|h| *h == c.name).expect("checked"))
            .collect();

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut row = Vec::with_capacity(columns.len());
            for (spec, &pos) in columns.iter().zip(&order) {
                let raw = rec.get(pos).unwrap_or("").trim();
                let bad = |kind| Error::Parse {
                    row: i + 1,
                    column: spec.name.clone(),
                    value: raw.into(),
                    kind,
                };
                let cell = match (spec.kind, spec.role) {
                    (ColumnKind::Numeric, Role::QuasiIdentifier) => {
                        let (lo, hi) = parse_interval(raw)
                            .or_else(|| raw.parse::<f64>().ok().map(|v| (v, v)))
                            .ok_or_else(|| bad("interval"))?;
                        Cell::Interval { lo, hi }
                    }
                    (ColumnKind::Numeric, _) => Cell::Number {
                        value: raw.parse().map_err(|_| bad("number"))?,
                    },
                    _ if raw.is_empty() => {
                        return Err(Error::Missing {
                            row: i + 1,
                            column: spec.name.clone(),
                        })
                    }
                    _ => Cell::label(raw),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyBody);
        }
        let source_rows = (0..rows.len()).collect();
        Ok(Self::new(columns, rows, source_rows, 0))
    }
}

/// Per-column generalization state used while partitioning.
enum QiColumn<'a> {
    Numeric { values: Vec<f64>, range: f64 },
    Categorical { labels: &'a [String], ranks: Vec<usize>, tree: Hierarchy },
}

impl QiColumn<'_> {
    /// Sort key of a record along this column.
    fn key(&self, r: usize) -> f64 {
        match self {
            QiColumn::Numeric { values, .. } => values[r],
            QiColumn::Categorical { ranks, .. } => ranks[r] as f64,
        }
    }

    /// Spread of the group normalized by the spread of the whole column.
    fn normalized_span(&self, group: &[usize]) -> f64 {
        let (lo, hi) = group.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            let k = self.key(r);
            (lo.min(k), hi.max(k))
        });
        let full = match self {
            QiColumn::Numeric { range, .. } => *range,
            QiColumn::Categorical { tree, .. } => tree.n_leaves().saturating_sub(1) as f64,
        };
        if full > 0.0 {
            (hi - lo) / full
        } else {
            0.0
        }
    }

    fn generalize(&self, group: &[usize]) -> Cell {
        match self {
            QiColumn::Numeric { values, .. } => {
                let lo = group.iter().map(|&r| values[r]).fold(f64::INFINITY, f64::min);
                let hi = group.iter().map(|&r| values[r]).fold(f64::NEG_INFINITY, f64::max);
                Cell::Interval { lo, hi }
            }
            QiColumn::Categorical { labels, tree, .. } => {
                let lca = tree
                    .lowest_common_ancestor(group.iter().map(|&r| labels[r].as_str()))
                    .expect("labels validated against the hierarchy");
                Cell::label(lca)
            }
        }
    }
}

/// Split `group` along `col` at the (lower) median key. Tries `≤ median`
/// first, then `< median`; returns halves only if both have `≥ k` records.
fn median_split(col: &QiColumn<'_>, group: &[usize], k: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut keys: Vec<f64> = group.iter().map(|&r| col.key(r)).collect();
    keys.sort_by(f64::total_cmp);
    let median = keys[(keys.len() - 1) / 2];
    let le = |r: &usize| col.key(*r) <= median;
    let lt = |r: &usize| col.key(*r) < median;
    for rule in [&le as &dyn Fn(&usize) -> bool, &lt] {
        let (left, right): (Vec<usize>, Vec<usize>) = group.iter().partition(|r| rule(r));
        if left.len() >= k && right.len() >= k {
            return Some((left, right));
        }
    }
    None
}

fn partition(cols: &[QiColumn<'_>], group: Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut order: Vec<(usize, f64)> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.normalized_span(&group)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    // widest span first, leftmost column on ties (stable sort)
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (i, _) in order {
        if let Some((left, right)) = median_split(&cols[i], &group, k) {
            partition(cols, left, k, out);
            partition(cols, right, k, out);
            return;
        }
    }
    out.push(group);
}

/// Generalize the quasi-identifiers so each QI tuple is shared by at least
/// `k` records. Identifier columns are dropped.
///
/// Categorical QI columns without an entry in `hierarchies` generalize
/// directly to [`ANY_VALUE`].
pub fn k_anonymize(
    dataset: &Dataset,
    k: usize,
    hierarchies: &GeneralizationHierarchy,
    max_suppression_fraction: f64,
) -> Result<AnonymizedTable> {
    let n = dataset.n_records();
    if !(0.0..=1.0).contains(&max_suppression_fraction) {
        return Err(Error::InvalidParameter(format!(
            "max_suppression_fraction {max_suppression_fraction} outside [0, 1]"
        )));
    }
    let schema = dataset.schema();
    let qi_specs: Vec<&ColumnSpec> = schema.with_role(Role::QuasiIdentifier).collect();
    if qi_specs.is_empty() {
        return Err(Error::InvalidParameter("dataset has no quasi-identifier columns".into()));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Infeasible(format!("k={k} exceeds the {n} available records")));
    }

    let mut cols = Vec::new();
    for spec in &qi_specs {
        let col = if spec.kind == ColumnKind::Numeric {
            let values = dataset.numeric_column(&spec.name)?.to_vec();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            QiColumn::Numeric { values, range: hi - lo }
        } else {
            let labels = dataset.label_column(&spec.name)?;
            let tree = hierarchies.get(&spec.name).cloned().unwrap_or_else(|| Hierarchy::flat(labels));
            let ranks = labels
                .iter()
                .map(|l| {
                    tree.leaf_rank(l).ok_or_else(|| Error::Hierarchy {
                        column: spec.name.clone(),
                        reason: format!("value {l:?} is not a leaf"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            QiColumn::Categorical { labels, ranks, tree }
        };
        cols.push(col);
    }

    // The whole table is always a valid group when k ≤ n, so partitioning
    // never leaves records that need suppressing.
    let mut groups = Vec::new();
    partition(&cols, (0..n).collect(), k, &mut groups);

    let qi_index: HashMap<&str, usize> = qi_specs.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
    let kept: Vec<(usize, &ColumnSpec)> = schema
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role != Role::Identifier)
        .collect();
    let mut rows: Vec<Vec<Cell>> = vec![Vec::new(); n];
    for group in &groups {
        let generalized: Vec<Cell> = cols.iter().map(|c| c.generalize(group)).collect();
        for &r in group {
            rows[r] = kept
                .iter()
                .map(|&(pos, spec)| match qi_index.get(spec.name.as_str()) {
                    Some(&q) => generalized[q].clone(),
                    None if spec.kind == ColumnKind::Numeric => Cell::Number {
                        value: dataset.numeric_column(&spec.name).expect("numeric")[r],
                    },
                    None => Cell::label(dataset.cell_text(r, pos)),
                })
                .collect();
        }
    }
    let columns = kept.into_iter().map(|(_, c)| c.clone()).collect();
    Ok(AnonymizedTable::new(columns, rows, (0..n).collect(), 0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum KVerdict {
    Holds,
    /// The first smallest class.
    Violated { class: usize, size: usize },
}

impl KVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, KVerdict::Holds)
    }
}

pub fn check_k_anonymity(table: &AnonymizedTable, k: usize) -> KVerdict {
    let smallest = table
        .equivalence_classes
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (c.len(), *i));
    match smallest {
        Some((class, c)) if c.len() < k => KVerdict::Violated { class, size: c.len() },
        _ => KVerdict::Holds,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityVerdict {
    pub holds: bool,
    /// Distinct sensitive values per class.
    pub distinct: Vec<usize>,
    pub failing_classes: Vec<usize>,
}

/// Distinct l-diversity: every class holds at least `l` distinct values of
/// the sensitive column.
pub fn check_l_diversity(table: &AnonymizedTable, sensitive: &str, l: usize) -> Result<DiversityVerdict> {
    let col = table.column_position(sensitive)?;
    let distinct: Vec<usize> = table
        .equivalence_classes
        .iter()
        .map(|class| class.iter().map(|&r| table.rows[r][col].text()).collect::<HashSet<_>>().len())
        .collect();
    let failing_classes: Vec<usize> = distinct
        .iter()
        .enumerate()
        .filter(|(_, &d)| d < l)
        .map(|(i, _)| i)
        .collect();
    Ok(DiversityVerdict {
        holds: failing_classes.is_empty(),
        distinct,
        failing_classes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessVerdict {
    pub holds: bool,
    /// Distance of each class distribution from the whole-table one.
    pub distances: Vec<f64>,
    pub failing_classes: Vec<usize>,
}

/// Total variation `½ Σ |p − q|` between two label samples.
pub fn total_variation<S: AsRef<str>>(class: &[S], global: &[S]) -> f64 {
    let mut mass: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for v in class {
        mass.entry(v.as_ref()).or_default().0 += 1.0 / class.len() as f64;
    }
    for v in global {
        mass.entry(v.as_ref()).or_default().1 += 1.0 / global.len() as f64;
    }
    0.5 * mass.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// 1-D earth mover's distance between two samples with ground distance
/// `|x − y| / (max − min)` over the global sample. Zero range gives 0.
pub fn normalized_emd(class: &[f64], global: &[f64]) -> f64 {
    let mut support: Vec<f64> = global.iter().chain(class).copied().collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let range = global.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - global.iter().copied().fold(f64::INFINITY, f64::min);
    if support.len() < 2 || !(range > 0.0) {
        return 0.0;
    }
    let cdf = |sample: &[f64], x: f64| sample.iter().filter(|&&v| v <= x).count() as f64 / sample.len() as f64;
    support
        .windows(2)
        .map(|w| (cdf(class, w[0]) - cdf(global, w[0])).abs() * (w[1] - w[0]))
        .sum::<f64>()
        / range
}

/// t-closeness with total variation (label columns) or normalized EMD
/// (numeric columns) against the whole-table distribution.
pub fn check_t_closeness(table: &AnonymizedTable, sensitive: &str, t: f64) -> Result<ClosenessVerdict> {
    let col = table.column_position(sensitive)?;
    let distances: Vec<f64> = match &table.rows.first().map(|r| &r[col]) {
        Some(Cell::Number { .. }) => {
            let value = |r: usize| match table.rows[r][col] {
                Cell::Number { value } => value,
                _ => f64::NAN,
            };
            let global: Vec<f64> = (0..table.n_rows()).map(value).collect();
            table
                .equivalence_classes
                .iter()
                .map(|c| normalized_emd(&c.iter().map(|&r| value(r)).collect::<Vec<_>>(), &global))
                .collect()
        }
        Some(Cell::Interval { .. }) => {
            return Err(Error::InvalidParameter(format!(
                "sensitive column {sensitive:?} is a generalized quasi-identifier"
            )))
        }
        _ => {
            let global: Vec<String> = table.rows.iter().map(|r| r[col].text()).collect();
            table
                .equivalence_classes
                .iter()
                .map(|c| total_variation(&c.iter().map(|&r| global[r].clone()).collect::<Vec<_>>(), &global))
                .collect()
        }
    };
    let failing_classes: Vec<usize> = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > t)
        .map(|(i, _)| i)
        .collect();
    Ok(ClosenessVerdict {
        holds: failing_classes.is_empty(),
        distances,
        failing_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn qi_numeric(values: &[f64]) -> Dataset {
        let schema = Schema::new(vec![ColumnSpec::new("age", ColumnKind::Numeric, Role::QuasiIdentifier)]).unwrap();
        Dataset::new(schema, Array2::from_shape_vec((1, values.len()), values.to_vec()).unwrap(), vec![]).unwrap()
    }

    /// Table with one categorical QI `g` and a sensitive label column `s`.
    fn table_from(classes: &[(&str, &[&str])]) -> AnonymizedTable {
        let columns = vec![
            ColumnSpec::new("g", ColumnKind::Categorical, Role::QuasiIdentifier),
            ColumnSpec::new("s", ColumnKind::Categorical, Role::Sensitive),
        ];
        let mut rows = Vec::new();
        for (g, values) in classes {
            for v in *values {
                rows.push(vec![Cell::label(*g), Cell::label(*v)]);
            }
        }
        let n = rows.len();
        AnonymizedTable::new(columns, rows, (0..n).collect(), 0)
    }

    #[test]
    fn median_split_example() {
        let ds = qi_numeric(&[7.0, 1.0, 9.0, 2.0, 8.0, 3.0]);
        let t = k_anonymize(&ds, 3, &GeneralizationHierarchy::new(), 0.0).unwrap();
        let mut cells: Vec<String> = t.equivalence_classes.iter().map(|c| t.rows[c[0]][0].text()).collect();
        cells.sort();
        assert_eq!(cells, vec!["[1,3]", "[7,9]"]);
        assert_eq!(t.class_sizes(), vec![3, 3]);
        assert_eq!(t.suppressed_count, 0);
    }

    #[test]
    fn k_one_copies_everything_but_identifiers() {
        let schema = Schema::new(vec![
            ColumnSpec::new("id", ColumnKind::Categorical, Role::Identifier),
            ColumnSpec::new("age", ColumnKind::Numeric, Role::QuasiIdentifier),
            ColumnSpec::new("zip", ColumnKind::Categorical, Role::QuasiIdentifier),
            ColumnSpec::new("disease", ColumnKind::Categorical, Role::Sensitive),
        ])
        .unwrap();
        let labels = vec![
            vec!["a".into(), "b".into(), "c".into()],
            vec!["100".into(), "200".into(), "100".into()],
            vec!["flu".into(), "cold".into(), "flu".into()],
        ];
        let ds = Dataset::new(schema, ndarray::array![[30.0, 40.0, 50.0]], labels).unwrap();
        let t = k_anonymize(&ds, 1, &GeneralizationHierarchy::new(), 0.0).unwrap();
        assert_eq!(t.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["age", "zip", "disease"]);
        assert_eq!(t.rows[1][0].text(), "[40,40]");
        assert_eq!(t.rows[1][1].text(), "200");
        assert_eq!(t.rows[2][2].text(), "flu");
        assert_eq!(t.suppressed_count, 0);
        assert_eq!(t.equivalence_classes.len(), 3);
    }

    #[test]
    fn infeasible_and_missing_qi() {
        let ds = qi_numeric(&[1.0, 2.0]);
        let err = k_anonymize(&ds, 3, &GeneralizationHierarchy::new(), 0.0).unwrap_err();
        assert!(err.to_string().starts_with("infeasible"));
        let plain = Dataset::from_numeric(&["x"], ndarray::array![[1.0, 2.0]]).unwrap();
        assert!(k_anonymize(&plain, 1, &GeneralizationHierarchy::new(), 0.0).is_err());
    }

    #[test]
    fn hierarchy_validation() {
        let ok = r#"{"zip": {"*": ["10*", "20*"], "10*": ["100", "101"], "20*": ["200"]}}"#;
        let h = GeneralizationHierarchy::from_json_str(ok).unwrap();
        let tree = h.get("zip").unwrap();
        assert_eq!(tree.root(), "*");
        assert_eq!(tree.n_leaves(), 3);
        assert_eq!(tree.lowest_common_ancestor(["100", "101"]), Some("10*"));
        assert_eq!(tree.lowest_common_ancestor(["100", "200"]), Some("*"));
        assert_eq!(tree.lowest_common_ancestor(["200"]), Some("200"));

        let two_parents = r#"{"z": {"*": ["a", "b"], "a": ["x"], "b": ["x"]}}"#;
        assert!(GeneralizationHierarchy::from_json_str(two_parents).is_err());
        let cycle = r#"{"z": {"*": ["a"], "b": ["c"], "c": ["b"]}}"#;
        assert!(GeneralizationHierarchy::from_json_str(cycle).is_err());
        let forest = r#"{"z": {"p": ["a"], "q": ["b"]}}"#;
        assert!(GeneralizationHierarchy::from_json_str(forest).is_err());
    }

    #[test]
    fn categorical_qi_uses_hierarchy() {
        let schema = Schema::new(vec![
            ColumnSpec::new("zip", ColumnKind::Categorical, Role::QuasiIdentifier),
            ColumnSpec::new("s", ColumnKind::Categorical, Role::Sensitive),
        ])
        .unwrap();
        let zips = ["100", "101", "100", "200", "201", "200"];
        let labels = vec![
            zips.iter().map(|s| s.to_string()).collect(),
            ["a", "b", "c", "d", "e", "f"].iter().map(|s| s.to_string()).collect(),
        ];
        let ds = Dataset::new(schema, Array2::zeros((0, 6)), labels).unwrap();
        let h = GeneralizationHierarchy::from_json_str(
            r#"{"zip": {"*": ["1**", "2**"], "1**": ["100", "101"], "2**": ["200", "201"]}}"#,
        )
        .unwrap();
        let t = k_anonymize(&ds, 3, &h, 0.0).unwrap();
        let got: Vec<String> = t.rows.iter().map(|r| r[0].text()).collect();
        assert_eq!(got, ["1**", "1**", "1**", "2**", "2**", "2**"]);
        // a value outside the tree is rejected
        let bad = ds.with_label_column("zip", ["100", "101", "100", "200", "201", "999"].map(String::from).to_vec()).unwrap();
        assert!(matches!(k_anonymize(&bad, 3, &h, 0.0), Err(Error::Hierarchy { .. })));
    }

    #[test]
    fn k_verdicts() {
        let t = table_from(&[("a", &["x", "y", "z"]), ("b", &["x", "y", "z"])]);
        assert!(check_k_anonymity(&t, 3).holds());
        let t = table_from(&[("a", &["x", "y", "z"]), ("b", &["x", "y"])]);
        assert_eq!(check_k_anonymity(&t, 3), KVerdict::Violated { class: 1, size: 2 });
        assert!(check_k_anonymity(&t, 2).holds());
    }

    #[test]
    fn l_diversity_examples() {
        let t = table_from(&[("a", &["flu", "flu", "flu"]), ("b", &["flu", "cancer", "flu"])]);
        let v = check_l_diversity(&t, "s", 2).unwrap();
        assert!(!v.holds);
        assert_eq!(v.failing_classes, vec![0]);
        assert_eq!(v.distinct, vec![1, 2]);
        assert!(check_l_diversity(&t, "s", 1).unwrap().holds);
        assert!(check_l_diversity(&t, "nope", 1).is_err());
    }

    #[test]
    fn t_closeness_tv_example() {
        // global {A: .5, B: .5}, class 0 = {A}
        let t = table_from(&[("c0", &["A", "A"]), ("c1", &["B", "B"])]);
        let v = check_t_closeness(&t, "s", 0.4).unwrap();
        assert!(!v.holds);
        assert_eq!(v.distances[0], 0.5);
        assert!(check_t_closeness(&t, "s", 0.5).unwrap().holds);
    }

    #[test]
    fn t_closeness_identical_distribution() {
        let t = table_from(&[("c0", &["A", "B"]), ("c1", &["B", "A"])]);
        let v = check_t_closeness(&t, "s", 0.0).unwrap();
        assert!(v.holds);
        assert_eq!(v.distances, vec![0.0, 0.0]);
    }

    #[test]
    fn emd_properties() {
        let global = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(normalized_emd(&[4.0, 3.0, 2.0, 1.0], &global), 0.0);
        assert_eq!(normalized_emd(&[5.0, 5.0], &[5.0, 5.0, 5.0]), 0.0);
        // all mass at the bottom vs uniform on 1..4: mean shift 1.5 over range 3
        assert!((normalized_emd(&[1.0], &global) - 0.5).abs() < 1e-15);
        assert!((normalized_emd(&[1.0, 4.0], &[1.0, 1.0, 4.0, 4.0])).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let ds = qi_numeric(&[7.0, 1.0, 9.0, 2.0, 8.0, 3.0]);
        let t = k_anonymize(&ds, 3, &GeneralizationHierarchy::new(), 0.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().nth(1), Some("\"[7,9]\""));
        let back = AnonymizedTable::read_csv(buf.as_slice(), ds.schema()).unwrap();
        assert_eq!(back.rows, t.rows);
        assert_eq!(back.equivalence_classes, t.equivalence_classes);
    }
}

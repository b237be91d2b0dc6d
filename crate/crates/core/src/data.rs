//! Tabular data: schema, ingestion, and the sampling primitives used by the
//! ensembles and the cross-validation harness.
//!
//! Cells are stored row-major as `f64`. Numeric attributes hold their value,
//! nominal attributes hold the index of the category in the attribute's
//! domain, and a missing cell is `NaN` (see [`MISSING`]).

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Marker stored in a cell whose value is unknown.
pub const MISSING: f64 = f64::NAN;

#[inline]
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Negative, Label::Positive];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Negative
        } else {
            Label::Positive
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind {
    Nominal(Vec<String>),
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Nominal(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn is_nominal(&self) -> bool {
        matches!(self.kind, AttributeKind::Nominal(_))
    }

    /// Number of categories for a nominal attribute, `None` for numeric ones.
    pub fn arity(&self) -> Option<usize> {
        match &self.kind {
            AttributeKind::Nominal(values) => Some(values.len()),
            AttributeKind::Numeric => None,
        }
    }

    /// Human-readable rendering of a cell of this attribute.
    pub fn format_value(&self, v: f64) -> String {
        if is_missing(v) {
            return "?".to_string();
        }
        match &self.kind {
            AttributeKind::Nominal(values) => values
                .get(v as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{v}")),
            AttributeKind::Numeric => format!("{v}"),
        }
    }
}

/// Conditional attributes plus the binary class, shared by every table
/// derived from the same source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
    class_name: String,
    /// `[negative, positive]`
    class_labels: [String; 2],
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>, class_name: impl Into<String>, class_labels: [String; 2]) -> Result<Self> {
        let mut seen = HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute name `{}`", attr.name)));
            }
            if let AttributeKind::Nominal(values) = &attr.kind {
                if values.is_empty() {
                    return Err(Error::Schema(format!("nominal attribute `{}` has no values", attr.name)));
                }
                let distinct: HashSet<_> = values.iter().collect();
                if distinct.len() != values.len() {
                    return Err(Error::Schema(format!(
                        "nominal attribute `{}` has duplicate values",
                        attr.name
                    )));
                }
            }
        }
        if class_labels[0] == class_labels[1] {
            return Err(Error::Schema("class labels must differ".into()));
        }
        Ok(Schema {
            attributes,
            class_name: class_name.into(),
            class_labels,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, i: usize) -> &Attribute {
        &self.attributes[i]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn class_labels(&self) -> &[String; 2] {
        &self.class_labels
    }

    pub fn class_label(&self, label: Label) -> &str {
        &self.class_labels[label.index()]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Stable 64-bit digest of names, kinds, domains and class labels.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for attr in &self.attributes {
            hasher.update(attr.name.as_bytes());
            hasher.update([0u8]);
            match &attr.kind {
                AttributeKind::Numeric => hasher.update(b"numeric"),
                AttributeKind::Nominal(values) => {
                    hasher.update(b"nominal");
                    for v in values {
                        hasher.update([0x1f]);
                        hasher.update(v.as_bytes());
                    }
                }
            }
            hasher.update([0x1e]);
        }
        hasher.update(self.class_name.as_bytes());
        for label in &self.class_labels {
            hasher.update([0x1f]);
            hasher.update(label.as_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
    }

    /// The schema restricted to `mask`.
    pub fn project(&self, mask: &FeatureMask) -> Result<Schema> {
        mask.check(self.len())?;
        Ok(Schema {
            attributes: mask.indices().iter().map(|&i| self.attributes[i].clone()).collect(),
            class_name: self.class_name.clone(),
            class_labels: self.class_labels.clone(),
        })
    }

    /// The schema with one extra numeric attribute appended. The name gets a
    /// numeric suffix if it is already taken.
    pub fn with_numeric(&self, name: &str) -> Schema {
        let mut candidate = name.to_string();
        let mut n = 1;
        while self.position(&candidate).is_some() {
            candidate = format!("{name}_{n}");
            n += 1;
        }
        let mut attributes = self.attributes.clone();
        attributes.push(Attribute::numeric(candidate));
        Schema {
            attributes,
            class_name: self.class_name.clone(),
            class_labels: self.class_labels.clone(),
        }
    }

    fn check_cell(&self, attr: usize, v: f64) -> std::result::Result<(), String> {
        if is_missing(v) {
            return Ok(());
        }
        match &self.attributes[attr].kind {
            AttributeKind::Numeric if v.is_finite() => Ok(()),
            AttributeKind::Numeric => Err(format!("non-finite value {v}")),
            AttributeKind::Nominal(values) => {
                if v >= 0.0 && v.fract() == 0.0 && (v as usize) < values.len() {
                    Ok(())
                } else {
                    Err(format!("{v} is not a category index below {}", values.len()))
                }
            }
        }
    }
}

/// Sorted, non-empty set of attribute indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    indices: Vec<usize>,
}

impl FeatureMask {
    pub fn new(mut indices: Vec<usize>, n_attributes: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        let mask = FeatureMask { indices };
        mask.check(n_attributes)?;
        Ok(mask)
    }

    pub fn full(n_attributes: usize) -> Result<Self> {
        FeatureMask::new((0..n_attributes).collect(), n_attributes)
    }

    /// Mask from a bitstring, one flag per attribute.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let indices = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        FeatureMask::new(indices, bits.len())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_full(&self, n_attributes: usize) -> bool {
        self.indices.len() == n_attributes
    }

    pub fn check(&self, n_attributes: usize) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::invalid("feature mask is empty"));
        }
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= n_attributes) {
            return Err(Error::invalid(format!(
                "feature index {bad} out of range for {n_attributes} attributes"
            )));
        }
        Ok(())
    }

    /// Maps `inner`, expressed in this mask's projected coordinates, back to
    /// the original attribute indices.
    pub fn compose(&self, inner: &FeatureMask) -> Result<FeatureMask> {
        inner.check(self.len())?;
        Ok(FeatureMask {
            indices: inner.indices.iter().map(|&i| self.indices[i]).collect(),
        })
    }

    /// Picks the masked cells out of a full instance.
    pub fn select(&self, instance: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| instance[i]).collect()
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// An immutable binary-class dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: Arc<Schema>,
    values: Vec<f64>,
    labels: Vec<Label>,
    weights: Vec<f64>,
    /// Row index in the table this one was ultimately derived from. Used to
    /// check train/test disjointness.
    origin: Vec<u32>,
}

impl DataTable {
    /// Builds a table from row-major cells; every row gets weight 1.
    pub fn new(schema: Arc<Schema>, values: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        let n = labels.len();
        let weights = vec![1.0; n];
        DataTable::with_weights(schema, values, labels, weights)
    }

    pub fn with_weights(schema: Arc<Schema>, values: Vec<f64>, labels: Vec<Label>, weights: Vec<f64>) -> Result<Self> {
        let m = schema.len();
        let n = labels.len();
        if values.len() != n * m {
            return Err(Error::invalid(format!(
                "{} cells for {n} rows of {m} attributes",
                values.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::invalid("one weight per row required"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("instance weight {w} is not a non-negative number")));
        }
        for (k, &v) in values.iter().enumerate() {
            if let Err(msg) = schema.check_cell(k % m, v) {
                return Err(Error::invalid(format!(
                    "row {}, attribute `{}`: {msg}",
                    k / m,
                    schema.attribute(k % m).name
                )));
            }
        }
        Ok(DataTable {
            schema,
            values,
            labels,
            weights,
            origin: (0..n as u32).collect(),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.schema.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    #[inline]
    pub fn value(&self, row: usize, attr: usize) -> f64 {
        self.values[row * self.schema.len() + attr]
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn origin(&self) -> &[u32] {
        &self.origin
    }

    /// Weighted `[negative, positive]` totals.
    pub fn class_counts(&self) -> [f64; 2] {
        let mut counts = [0.0; 2];
        for (label, w) in self.labels.iter().zip(&self.weights) {
            counts[label.index()] += w;
        }
        counts
    }

    /// Unweighted `[negative, positive]` row counts.
    pub fn class_row_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for label in &self.labels {
            counts[label.index()] += 1;
        }
        counts
    }

    /// Rows picked by index, in the given order; indices may repeat.
    pub fn select_rows(&self, indices: &[usize]) -> DataTable {
        let m = self.schema.len();
        let mut values = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        DataTable {
            schema: Arc::clone(&self.schema),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    /// Appends one numeric column. The column must hold one finite value or
    /// `NaN` per row.
    pub fn with_numeric_column(&self, name: &str, column: &[f64]) -> Result<DataTable> {
        if column.len() != self.n_rows() {
            return Err(Error::invalid("column length differs from row count"));
        }
        if let Some(v) = column.iter().find(|v| v.is_infinite()) {
            return Err(Error::invalid(format!("non-finite column value {v}")));
        }
        let m = self.schema.len();
        let mut values = Vec::with_capacity(self.n_rows() * (m + 1));
        for (i, &extra) in column.iter().enumerate() {
            values.extend_from_slice(self.row(i));
            values.push(extra);
        }
        Ok(DataTable {
            schema: Arc::new(self.schema.with_numeric(name)),
            values,
            labels: self.labels.clone(),
            weights: self.weights.clone(),
            origin: self.origin.clone(),
        })
    }
}

/// Restricts `table` to the attributes in `mask`, keeping class, weights and
/// row order.
pub fn project(table: &DataTable, mask: &FeatureMask) -> Result<DataTable> {
    let schema = table.schema.project(mask)?;
    if mask.is_full(table.n_attributes()) {
        return Ok(table.clone());
    }
    let mut values = Vec::with_capacity(table.n_rows() * mask.len());
    for row in table.rows() {
        values.extend(mask.indices().iter().map(|&i| row[i]));
    }
    Ok(DataTable {
        schema: Arc::new(schema),
        values,
        labels: table.labels.clone(),
        weights: table.weights.clone(),
        origin: table.origin.clone(),
    })
}

/// Draws `n` rows uniformly with replacement, `n` being the table size.
pub fn bootstrap_sample(table: &DataTable, seed: u64) -> Result<DataTable> {
    let n = table.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot bootstrap an empty table"));
    }
    let mut rng = rng_from_seed(seed);
    let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n as u64) as usize).collect();
    Ok(table.select_rows(&picks))
}

/// Size of a random subspace: `fraction * n` rounded half-up, at least 1.
pub fn subspace_size(n_attributes: usize, fraction: f64) -> usize {
    ((fraction * n_attributes as f64).round() as usize).clamp(1, n_attributes.max(1))
}

/// A uniformly random attribute subset of size [`subspace_size`].
pub fn random_subspace(schema: &Schema, fraction: f64, seed: u64) -> Result<FeatureMask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("subspace fraction {fraction} is outside (0, 1]")));
    }
    let m = schema.len();
    if m == 0 {
        return Err(Error::invalid("schema has no attributes"));
    }
    let size = subspace_size(m, fraction);
    let mut rng = rng_from_seed(seed);
    let mut indices: Vec<usize> = (0..m).collect();
    let (chosen, _) = indices.partial_shuffle(&mut rng, size);
    FeatureMask::new(chosen.to_vec(), m)
}

/// Fold assignment for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

fn check_fold_count(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} folds requested for {n} rows")));
    }
    Ok(())
}

/// Stratified k-fold assignment.
///
/// Rows of each class are shuffled, the negative rows are laid out followed
/// by the positive rows, and position `p` in that sequence goes to fold
/// `p mod k`. Each class occupies a contiguous run of positions, so per-class
/// fold counts differ by at most one, and so do total fold sizes. A class
/// with fewer than `k` rows simply leaves some folds without that class.
pub fn stratified_folds(table: &DataTable, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = table.n_rows();
    check_fold_count(n, k)?;
    let mut rng = rng_from_seed(seed);
    let mut assignments = vec![0; n];
    let mut position = 0;
    for label in Label::BOTH {
        let mut members: Vec<usize> = (0..n).filter(|&i| table.label(i) == label).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Unstratified k-fold assignment: a shuffled round-robin.
pub fn random_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check_fold_count(n, k)?;
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignments = vec![0; n];
    for (p, i) in order.into_iter().enumerate() {
        assignments[i] = p % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// A freshly loaded table and the number of cells that were imputed.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub table: DataTable,
    pub imputed_cells: usize,
}

/// The 13 conditional attributes of the processed Cleveland file, in file
/// order. Nominal domains use the numeric codes that appear in the file.
pub fn cleveland_schema() -> Schema {
    let attributes = vec![
        Attribute::numeric("age"),
        Attribute::nominal("sex", ["0", "1"]),
        Attribute::nominal("cp", ["1", "2", "3", "4"]),
        Attribute::numeric("trestbps"),
        Attribute::numeric("chol"),
        Attribute::nominal("fbs", ["0", "1"]),
        Attribute::nominal("restecg", ["0", "1", "2"]),
        Attribute::numeric("thalach"),
        Attribute::nominal("exang", ["0", "1"]),
        Attribute::numeric("oldpeak"),
        Attribute::nominal("slope", ["1", "2", "3"]),
        Attribute::numeric("ca"),
        Attribute::nominal("thal", ["3", "6", "7"]),
    ];
    Schema::new(attributes, "num", ["absent".to_string(), "present".to_string()])
        .expect("static schema is valid")
}

/// Reads the processed Cleveland layout: 13 comma-separated features plus
/// the 0-4 `num` diagnosis, `?` for missing. `num` is binarized (0 is
/// negative, 1-4 positive) and missing cells are imputed with
/// [`impute_missing`].
pub fn load_cleveland<R: Read>(mut source: R) -> Result<Ingested> {
    let schema = cleveland_schema();
    let m = schema.len();
    let mut text = String::new();
    source.read_to_string(&mut text)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != m + 1 {
            return Err(Error::Ingest {
                line: lineno,
                field: "<line>".into(),
                message: format!("expected {} fields, found {}", m + 1, fields.len()),
            });
        }
        for (attr, raw) in schema.attributes().iter().zip(&fields) {
            values.push(parse_cell(attr, raw, lineno)?);
        }
        let class = fields[m];
        let code: f64 = class.parse().map_err(|_| Error::Ingest {
            line: lineno,
            field: "num".into(),
            message: format!("unparsable class value `{class}`"),
        })?;
        let label = match code {
            c if c == 0.0 => Label::Negative,
            c if c.fract() == 0.0 && (1.0..=4.0).contains(&c) => Label::Positive,
            _ => {
                return Err(Error::Ingest {
                    line: lineno,
                    field: "num".into(),
                    message: format!("class value `{class}` is not in 0-4"),
                })
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Ingest {
            line: 0,
            field: "<file>".into(),
            message: "no instances".into(),
        });
    }
    let imputed_cells = impute_missing(&schema, &mut values);
    let table = DataTable::new(Arc::new(schema), values, labels)?;
    Ok(Ingested { table, imputed_cells })
}

/// Parses one cell. Nominal cells may be given either as the category label
/// or as a number equal to a numeric label ("1.0" matches "1").
fn parse_cell(attr: &Attribute, raw: &str, line: usize) -> Result<f64> {
    if raw == "?" || raw.is_empty() {
        return Ok(MISSING);
    }
    let err = |message: String| Error::Ingest {
        line,
        field: attr.name.clone(),
        message,
    };
    match &attr.kind {
        AttributeKind::Numeric => raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("unparsable numeric value `{raw}`"))),
        AttributeKind::Nominal(domain) => {
            if let Some(i) = domain.iter().position(|d| d == raw) {
                return Ok(i as f64);
            }
            if let Ok(x) = raw.parse::<f64>() {
                if let Some(i) = domain.iter().position(|d| d.parse::<f64>().ok() == Some(x)) {
                    return Ok(i as f64);
                }
            }
            Err(err(format!("value `{raw}` is outside the domain {domain:?}")))
        }
    }
}

/// Replaces missing cells in row-major `values`: nominal attributes take the
/// most frequent category (lowest index on ties), numeric attributes the
/// median of the observed values. Returns the number of cells filled.
pub fn impute_missing(schema: &Schema, values: &mut [f64]) -> usize {
    let m = schema.len();
    if m == 0 {
        return 0;
    }
    let mut filled = 0;
    for (a, attr) in schema.attributes().iter().enumerate() {
        let observed: Vec<f64> = values.iter().skip(a).step_by(m).copied().filter(|v| !is_missing(*v)).collect();
        let n_rows = values.len() / m;
        if observed.len() == n_rows || observed.is_empty() {
            continue;
        }
        let fill = match &attr.kind {
            AttributeKind::Nominal(domain) => {
                let mut counts = vec![0usize; domain.len()];
                for v in &observed {
                    counts[*v as usize] += 1;
                }
                let best = counts
                    .iter()
                    .enumerate()
                    .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
                best.0 as f64
            }
            AttributeKind::Numeric => median(&observed),
        };
        for v in values.iter_mut().skip(a).step_by(m) {
            if is_missing(*v) {
                *v = fill;
                filled += 1;
            }
        }
    }
    filled
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Parses a schema sidecar for [`load_csv`].
///
/// One declaration per line; blank lines and `#` comments are ignored:
///
/// ```text
/// age: numeric
/// cp: nominal typical,atypical,non-anginal,asymptomatic
/// class num: 0,1
/// ```
///
/// The `class` line names the class column and lists the negative label
/// followed by the positive label.
pub fn parse_schema_sidecar(text: &str) -> Result<Schema> {
    let mut attributes = Vec::new();
    let mut class: Option<(String, [String; 2])> = None;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line
            .split_once(':')
            .ok_or_else(|| Error::Schema(format!("line {lineno}: expected `name: kind`")))?;
        let lhs = lhs.trim();
        let rhs = rhs.trim();
        if let Some(name) = lhs.strip_prefix("class ") {
            let labels: Vec<String> = rhs.split(',').map(|s| s.trim().to_string()).collect();
            if labels.len() != 2 || labels.iter().any(String::is_empty) {
                return Err(Error::Schema(format!(
                    "line {lineno}: class needs exactly two labels (negative,positive)"
                )));
            }
            class = Some((name.trim().to_string(), [labels[0].clone(), labels[1].clone()]));
        } else if rhs == "numeric" {
            attributes.push(Attribute::numeric(lhs));
        } else if let Some(domain) = rhs.strip_prefix("nominal") {
            let values: Vec<String> = domain
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            attributes.push(Attribute::nominal(lhs, values));
        } else {
            return Err(Error::Schema(format!("line {lineno}: unknown kind `{rhs}`")));
        }
    }
    let (class_name, labels) = class.ok_or_else(|| Error::Schema("no `class` declaration".into()))?;
    if attributes.is_empty() {
        return Err(Error::Schema("no attributes declared".into()));
    }
    Schema::new(attributes, class_name, labels)
}

/// Reads a headed CSV whose columns are described by `schema` (usually from
/// [`parse_schema_sidecar`]). Columns not named in the schema are ignored.
/// Missing cells (`?` or empty) are imputed as in [`load_cleveland`].
pub fn load_csv<R: Read>(source: R, schema: Schema) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| Error::Ingest {
            line: 1,
            field: "<header>".into(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Ingest {
            line: 1,
            field: name.to_string(),
            message: "column missing from header".into(),
        })
    };
    let columns: Vec<usize> = schema
        .attributes()
        .iter()
        .map(|a| column(&a.name))
        .collect::<Result<_>>()?;
    let class_column = column(schema.class_name())?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| Error::Ingest {
            line,
            field: "<line>".into(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::Ingest {
                line,
                field: "<line>".into(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (attr, &c) in schema.attributes().iter().zip(&columns) {
            values.push(parse_cell(attr, &record[c], line)?);
        }
        let raw = &record[class_column];
        let label = match schema.class_labels().iter().position(|l| l == raw) {
            Some(i) => Label::from_index(i),
            None => {
                return Err(Error::Ingest {
                    line,
                    field: schema.class_name().to_string(),
                    message: format!("class value `{raw}` is not one of {:?}", schema.class_labels()),
                })
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Ingest {
            line: 0,
            field: "<file>".into(),
            message: "no instances".into(),
        });
    }
    let imputed_cells = impute_missing(&schema, &mut values);
    let table = DataTable::new(Arc::new(schema), values, labels)?;
    Ok(Ingested { table, imputed_cells })
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Table with nominal attributes of the given arities, cells as category
    /// indices.
    pub fn nominal_table(arities: &[usize], rows: &[(Vec<usize>, Label)]) -> DataTable {
        let attributes = arities
            .iter()
            .enumerate()
            .map(|(i, &k)| Attribute::nominal(format!("a{i}"), (0..k).map(|v| format!("v{v}"))))
            .collect();
        let schema = Schema::new(attributes, "class", ["neg".into(), "pos".into()]).unwrap();
        let values = rows.iter().flat_map(|(r, _)| r.iter().map(|&v| v as f64)).collect();
        let labels = rows.iter().map(|(_, l)| *l).collect();
        DataTable::new(Arc::new(schema), values, labels).unwrap()
    }

    pub fn numeric_table(n_attrs: usize, rows: &[(Vec<f64>, Label)]) -> DataTable {
        let attributes = (0..n_attrs).map(|i| Attribute::numeric(format!("x{i}"))).collect();
        let schema = Schema::new(attributes, "class", ["neg".into(), "pos".into()]).unwrap();
        let values = rows.iter().flat_map(|(r, _)| r.iter().copied()).collect();
        let labels = rows.iter().map(|(_, l)| *l).collect();
        DataTable::new(Arc::new(schema), values, labels).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use Label::{Negative as N, Positive as P};

    const SAMPLE: &str = "\
63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0
67.0,1.0,4.0,160.0,286.0,0.0,2.0,108.0,1.0,1.5,2.0,3.0,3.0,2
67.0,1.0,4.0,120.0,229.0,0.0,2.0,129.0,1.0,2.6,2.0,2.0,7.0,1
37.0,1.0,3.0,130.0,250.0,0.0,0.0,187.0,0.0,3.5,3.0,?,3.0,0
41.0,0.0,2.0,130.0,204.0,0.0,2.0,172.0,0.0,1.4,1.0,0.0,?,4
";

    #[test]
    fn cleveland_sample_loads_and_binarizes() {
        let ing = load_cleveland(SAMPLE.as_bytes()).unwrap();
        let t = &ing.table;
        assert_eq!(t.n_rows(), 5);
        assert_eq!(t.n_attributes(), 13);
        assert_eq!(t.labels(), &[N, P, P, N, P]);
        assert_eq!(ing.imputed_cells, 2);
        // ca median of {0,3,2,0} = 1.0; thal mode of {6,3,7,3} = "3" (index 0)
        assert_eq!(t.value(3, 11), 1.0);
        assert_eq!(t.value(4, 12), 0.0);
        assert_eq!(t.value(0, 2), 0.0); // cp "1" is index 0
    }

    #[test]
    fn cleveland_errors_name_line_and_field() {
        let bad_count = "63.0,1.0\n";
        match load_cleveland(bad_count.as_bytes()) {
            Err(Error::Ingest { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad_nominal = SAMPLE.replacen("6.0,0\n", "5.0,0\n", 1);
        match load_cleveland(bad_nominal.as_bytes()) {
            Err(Error::Ingest { line: 1, field, .. }) => assert_eq!(field, "thal"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_number = SAMPLE.replacen("145.0", "abc", 1);
        match load_cleveland(bad_number.as_bytes()) {
            Err(Error::Ingest { field, .. }) => assert_eq!(field, "trestbps"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_class = SAMPLE.replacen("6.0,0\n", "6.0,5\n", 1);
        assert!(load_cleveland(bad_class.as_bytes()).is_err());
        assert!(load_cleveland("".as_bytes()).is_err());
    }

    #[test]
    fn schema_invariants_enforced() {
        let dup = Schema::new(
            vec![Attribute::numeric("a"), Attribute::numeric("a")],
            "c",
            ["n".into(), "p".into()],
        );
        assert!(dup.is_err());
        let empty_domain = Schema::new(
            vec![Attribute::nominal("a", Vec::<String>::new())],
            "c",
            ["n".into(), "p".into()],
        );
        assert!(empty_domain.is_err());
        let dup_values = Schema::new(vec![Attribute::nominal("a", ["x", "x"])], "c", ["n".into(), "p".into()]);
        assert!(dup_values.is_err());
    }

    #[test]
    fn invalid_cells_rejected() {
        let schema = Arc::new(Schema::new(vec![Attribute::nominal("a", ["x", "y"])], "c", ["n".into(), "p".into()]).unwrap());
        assert!(DataTable::new(schema.clone(), vec![2.0], vec![N]).is_err());
        assert!(DataTable::new(schema.clone(), vec![0.5], vec![N]).is_err());
        assert!(DataTable::new(schema, vec![MISSING], vec![N]).is_ok());
    }

    #[test]
    fn folds_of_303_rows() {
        let rows: Vec<_> = (0..303).map(|i| (vec![i as f64], if i < 164 { N } else { P })).collect();
        let t = numeric_table(1, &rows);
        let plan = stratified_folds(&t, 10, 42).unwrap();
        let sizes = plan.fold_sizes();
        assert!(sizes.iter().all(|&s| s == 30 || s == 31), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 303);
        assert_eq!(plan, stratified_folds(&t, 10, 42).unwrap());
        assert!(stratified_folds(&t, 304, 1).is_err());
        assert!(stratified_folds(&t, 1, 1).is_err());
    }

    #[test]
    fn five_five_split_into_five_folds() {
        let rows: Vec<_> = (0..10).map(|i| (vec![i as f64], if i % 2 == 0 { N } else { P })).collect();
        let t = numeric_table(1, &rows);
        let plan = stratified_folds(&t, 5, 9).unwrap();
        for f in 0..5 {
            let test = plan.test_indices(f);
            assert_eq!(test.len(), 2);
            assert_ne!(t.label(test[0]), t.label(test[1]));
        }
    }

    #[test]
    fn bootstrap_basics() {
        let t = numeric_table(1, &[(vec![1.5], P)]);
        let b = bootstrap_sample(&t, 11).unwrap();
        assert_eq!(b, t);
        let rows: Vec<_> = (0..50).map(|i| (vec![i as f64], N)).collect();
        let t = numeric_table(1, &rows);
        assert_eq!(bootstrap_sample(&t, 5).unwrap(), bootstrap_sample(&t, 5).unwrap());
        let empty = t.select_rows(&[]);
        assert!(bootstrap_sample(&empty, 1).is_err());
    }

    #[test]
    fn bootstrap_distinct_fraction_matches_closed_form() {
        let rows: Vec<_> = (0..303).map(|i| (vec![i as f64], N)).collect();
        let t = numeric_table(1, &rows);
        let trials = 10_000;
        let mut total = 0.0;
        for seed in 0..trials {
            let b = bootstrap_sample(&t, seed).unwrap();
            let distinct: HashSet<u32> = b.origin().iter().copied().collect();
            total += distinct.len() as f64 / 303.0;
        }
        let expected = 1.0 - (1.0 - 1.0 / 303.0f64).powi(303);
        assert!((total / trials as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn subspace_sizes_and_marginals() {
        let schema = cleveland_schema();
        assert_eq!(random_subspace(&schema, 0.5, 1).unwrap().len(), 7);
        assert!(random_subspace(&schema, 1.0, 1).unwrap().is_full(13));
        assert!(random_subspace(&schema, 0.0, 1).is_err());
        assert!(random_subspace(&schema, -0.2, 1).is_err());
        assert_eq!(random_subspace(&schema, 0.01, 1).unwrap().len(), 1);

        let mut hits = [0usize; 13];
        let trials = 10_000;
        for seed in 0..trials {
            for &i in random_subspace(&schema, 0.5, seed).unwrap().indices() {
                hits[i] += 1;
            }
        }
        for h in hits {
            assert!((h as f64 / trials as f64 - 7.0 / 13.0).abs() < 0.02);
        }
    }

    #[test]
    fn projection_laws() {
        let ing = load_cleveland(SAMPLE.as_bytes()).unwrap();
        let t = ing.table;
        assert_eq!(project(&t, &FeatureMask::full(13).unwrap()).unwrap(), t);
        let one = project(&t, &FeatureMask::new(vec![0], 13).unwrap()).unwrap();
        assert_eq!(one.n_attributes(), 1);
        assert_eq!(one.n_rows(), 5);
        assert!(project(&t, &FeatureMask { indices: vec![13] }).is_err());

        let outer = FeatureMask::new(vec![1, 4, 7, 9, 12], 13).unwrap();
        let inner = FeatureMask::new(vec![0, 3, 4], 5).unwrap();
        let twice = project(&project(&t, &outer).unwrap(), &inner).unwrap();
        let composed = project(&t, &outer.compose(&inner).unwrap()).unwrap();
        assert_eq!(twice, composed);
    }

    #[test]
    fn sidecar_and_csv() {
        let sidecar = "# demo\nage: numeric\ncolor: nominal red, green\nclass sick: no,yes\n";
        let schema = parse_schema_sidecar(sidecar).unwrap();
        assert_eq!(schema.len(), 2);
        let csv = "id,age,color,sick\n1,30,red,no\n2,?,green,yes\n3,50,red,yes\n";
        let ing = load_csv(csv.as_bytes(), schema.clone()).unwrap();
        assert_eq!(ing.imputed_cells, 1);
        assert_eq!(ing.table.value(1, 0), 40.0);
        assert_eq!(ing.table.labels(), &[N, P, P]);
        let bad = "age,color,sick\n1,blue,no\n";
        assert!(load_csv(bad.as_bytes(), schema.clone()).is_err());
        let bad_class = "age,color,sick\n1,red,maybe\n";
        assert!(load_csv(bad_class.as_bytes(), schema).is_err());
        assert!(parse_schema_sidecar("age: numeric\n").is_err());
        assert!(parse_schema_sidecar("age: weird\nclass c: a,b\n").is_err());
    }

    #[test]
    fn nominal_helper_round_trip() {
        let t = nominal_table(&[2, 3], &[(vec![1, 2], P), (vec![0, 0], N)]);
        assert_eq!(t.row(0), &[1.0, 2.0]);
        assert_eq!(t.class_counts(), [1.0, 1.0]);
    }
}

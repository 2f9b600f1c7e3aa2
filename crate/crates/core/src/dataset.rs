//! Column-typed tabular data with one binary sensitive attribute `S` and one
//! binary outcome `Y`.
//!
//! A [`Dataset`] is immutable once built. Transformations (splits, scenario
//! generators) return new datasets that share nothing mutable with the input.
//! Each row carries a stable unit identifier which survives row selection and
//! is used wherever a deterministic tie-break is needed.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Sensitive,
    Outcome,
}

/// Raw levels of a binary attribute that map to 1. Levels listed in `zero`
/// map to 0; when `zero` is empty every other level maps to 0, but the column
/// may then hold only one such level.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryLevels {
    pub one: Vec<String>,
    #[serde(default)]
    pub zero: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default = "default_role")]
    pub role: Role,
    /// Required for the sensitive and outcome attributes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<BinaryLevels>,
}

fn default_role() -> Role {
    Role::Feature
}

impl AttributeSchema {
    pub fn numeric(name: &str) -> Self {
        Self { name: name.into(), kind: AttributeKind::Numeric, role: Role::Feature, levels: None }
    }

    pub fn categorical(name: &str) -> Self {
        Self { name: name.into(), kind: AttributeKind::Categorical, role: Role::Feature, levels: None }
    }

    pub fn sensitive(name: &str, protected: &[&str], unprotected: &[&str]) -> Self {
        Self::binary(name, Role::Sensitive, protected, unprotected)
    }

    pub fn outcome(name: &str, positive: &[&str], negative: &[&str]) -> Self {
        Self::binary(name, Role::Outcome, positive, negative)
    }

    fn binary(name: &str, role: Role, one: &[&str], zero: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            role,
            levels: Some(BinaryLevels {
                one: one.iter().map(|s| (*s).to_owned()).collect(),
                zero: zero.iter().map(|s| (*s).to_owned()).collect(),
            }),
        }
    }
}

/// Checks the attribute list: unique names, exactly one sensitive and one
/// outcome attribute, both categorical with a level mapping.
pub fn validate_schema(attributes: &[AttributeSchema]) -> Result<()> {
    for (i, a) in attributes.iter().enumerate() {
        if a.name.is_empty() {
            return Err(Error::Schema("attribute with empty name".into()));
        }
        if attributes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
        }
    }
    for role in [Role::Sensitive, Role::Outcome] {
        let matching: Vec<&AttributeSchema> = attributes.iter().filter(|a| a.role == role).collect();
        if matching.len() != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one {:?} attribute, found {}",
                role,
                matching.len()
            )));
        }
        let a = matching[0];
        if a.kind != AttributeKind::Categorical {
            return Err(Error::Schema(format!("`{}` must be categorical", a.name)));
        }
        match &a.levels {
            Some(l) if !l.one.is_empty() => {
                if l.one.iter().any(|x| l.zero.contains(x)) {
                    return Err(Error::Schema(format!("`{}`: a level maps to both 0 and 1", a.name)));
                }
            }
            _ => {
                return Err(Error::Schema(format!("`{}` needs a non-empty `levels.one` list", a.name)));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Codes index into `levels`; levels are kept in order of first appearance.
    Categorical { levels: Vec<String>, codes: Vec<u32> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            Column::Numeric(_) => AttributeKind::Numeric,
            Column::Categorical { .. } => AttributeKind::Categorical,
        }
    }

    pub fn value(&self, row: usize) -> Value<'_> {
        match self {
            Column::Numeric(v) => Value::Numeric(v[row]),
            Column::Categorical { levels, codes } => Value::Categorical(&levels[codes[row] as usize]),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Numeric(f64),
    Categorical(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub column: Column,
}

/// A binary column with the raw labels used when writing 0 and 1 back out.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryColumn {
    pub name: String,
    pub values: Vec<u8>,
    pub labels: [String; 2],
}

/// Which S group to look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    All,
    Unprotected,
    Protected,
}

impl Group {
    pub fn contains(self, s: u8) -> bool {
        match self {
            Group::All => true,
            Group::Unprotected => s == 0,
            Group::Protected => s == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Serialization order of all attributes (features, S and Y).
    order: Vec<(String, Role)>,
    features: Vec<Feature>,
    sensitive: BinaryColumn,
    outcome: BinaryColumn,
    ids: Vec<u64>,
}

impl Dataset {
    /// Assembles a dataset from columns. Column order for serialization is
    /// features first, then S, then Y.
    pub fn from_columns(
        features: Vec<Feature>,
        sensitive: BinaryColumn,
        outcome: BinaryColumn,
        ids: Option<Vec<u64>>,
    ) -> Result<Self> {
        let mut order: Vec<(String, Role)> = features.iter().map(|f| (f.name.clone(), Role::Feature)).collect();
        order.push((sensitive.name.clone(), Role::Sensitive));
        order.push((outcome.name.clone(), Role::Outcome));
        let n = sensitive.values.len();
        let ids = ids.unwrap_or_else(|| (0..n as u64).collect());
        let ds = Self { order, features, sensitive, outcome, ids };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        let n = self.sensitive.values.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if self.outcome.values.len() != n || self.ids.len() != n {
            return Err(Error::InvalidArgument("column lengths differ".into()));
        }
        for f in &self.features {
            if f.column.len() != n {
                return Err(Error::InvalidArgument(format!("column `{}` has wrong length", f.name)));
            }
            match &f.column {
                Column::Numeric(v) => {
                    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                        return Err(Error::NonFinite { row, column: f.name.clone() });
                    }
                }
                Column::Categorical { levels, codes } => {
                    if codes.iter().any(|&c| c as usize >= levels.len()) {
                        return Err(Error::InvalidArgument(format!("column `{}` has a bad level code", f.name)));
                    }
                }
            }
        }
        for col in [&self.sensitive, &self.outcome] {
            if col.values.iter().any(|&v| v > 1) {
                return Err(Error::NonBinary { column: col.name.clone(), level: "value > 1".into() });
            }
        }
        let mut names: Vec<&str> = self.order.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Schema("duplicate attribute name".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.sensitive.values.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &Feature {
        &self.features[index]
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive.values
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome.values
    }

    pub fn sensitive_column(&self) -> &BinaryColumn {
        &self.sensitive
    }

    pub fn outcome_column(&self) -> &BinaryColumn {
        &self.outcome
    }

    /// Stable unit identifiers, aligned with rows.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Attribute names and roles in serialization order.
    pub fn column_order(&self) -> &[(String, Role)] {
        &self.order
    }

    pub fn count(&self, group: Group) -> usize {
        self.sensitive.values.iter().filter(|&&s| group.contains(s)).count()
    }

    /// Relative frequency of `Y = 1` within `group`.
    pub fn positive_rate(&self, group: Group) -> Result<f64> {
        let (mut pos, mut tot) = (0usize, 0usize);
        for (&s, &y) in self.sensitive.values.iter().zip(&self.outcome.values) {
            if group.contains(s) {
                tot += 1;
                pos += y as usize;
            }
        }
        if tot == 0 {
            return Err(Error::EmptyGroup(format!("{group:?}")));
        }
        Ok(pos as f64 / tot as f64)
    }

    /// New dataset holding `rows` (in the given order), keeping unit ids.
    pub fn select(&self, rows: &[usize]) -> Result<Dataset> {
        let ds = Dataset {
            order: self.order.clone(),
            features: self
                .features
                .iter()
                .map(|f| Feature { name: f.name.clone(), column: f.column.select(rows) })
                .collect(),
            sensitive: BinaryColumn {
                name: self.sensitive.name.clone(),
                values: rows.iter().map(|&r| self.sensitive.values[r]).collect(),
                labels: self.sensitive.labels.clone(),
            },
            outcome: BinaryColumn {
                name: self.outcome.name.clone(),
                values: rows.iter().map(|&r| self.outcome.values[r]).collect(),
                labels: self.outcome.labels.clone(),
            },
            ids: rows.iter().map(|&r| self.ids[r]).collect(),
        };
        if ds.n() == 0 {
            return Err(Error::Empty);
        }
        Ok(ds)
    }

    /// Same rows with a replaced outcome column.
    pub fn with_outcome(&self, values: Vec<u8>) -> Result<Dataset> {
        let mut ds = self.clone();
        ds.outcome.values = values;
        ds.check()?;
        Ok(ds)
    }

    /// Same rows with a replaced sensitive column.
    pub fn with_sensitive(&self, values: Vec<u8>) -> Result<Dataset> {
        let mut ds = self.clone();
        ds.sensitive.values = values;
        ds.check()?;
        Ok(ds)
    }

    /// Appends a feature column; it is serialized after the existing columns.
    pub fn with_feature(&self, feature: Feature) -> Result<Dataset> {
        if self.order.iter().any(|(n, _)| *n == feature.name) {
            return Err(Error::Schema(format!("attribute `{}` already exists", feature.name)));
        }
        let mut ds = self.clone();
        ds.order.push((feature.name.clone(), Role::Feature));
        ds.features.push(feature);
        ds.check()?;
        Ok(ds)
    }

    /// Keeps only the named features (in the given order).
    pub fn with_features(&self, names: &[&str]) -> Result<Dataset> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("feature list is empty".into()));
        }
        let mut ds = self.clone();
        ds.features = names
            .iter()
            .map(|n| self.feature_index(n).map(|i| self.features[i].clone()))
            .collect::<Result<_>>()?;
        ds.order.retain(|(n, r)| *r != Role::Feature || names.contains(&n.as_str()));
        Ok(ds)
    }

    /// Drops the named feature.
    pub fn without_feature(&self, name: &str) -> Result<Dataset> {
        let idx = self.feature_index(name)?;
        let mut ds = self.clone();
        ds.features.remove(idx);
        ds.order.retain(|(n, _)| n != name);
        Ok(ds)
    }

    /// Cell value for attribute `col` (position in [`column_order`](Self::column_order))
    /// rendered as text, as written to CSV.
    pub fn render(&self, row: usize, col: usize) -> String {
        let (name, role) = &self.order[col];
        match role {
            Role::Sensitive => self.sensitive.labels[self.sensitive.values[row] as usize].clone(),
            Role::Outcome => self.outcome.labels[self.outcome.values[row] as usize].clone(),
            Role::Feature => {
                let f = self.features.iter().find(|f| &f.name == name).expect("feature in order list");
                match f.column.value(row) {
                    Value::Numeric(x) => format!("{x}"),
                    Value::Categorical(s) => s.to_owned(),
                }
            }
        }
    }

    /// Schema describing this dataset, suitable for re-ingesting its CSV output.
    pub fn schema(&self) -> Vec<AttributeSchema> {
        self.order
            .iter()
            .map(|(name, role)| match role {
                Role::Sensitive => binary_schema(&self.sensitive, Role::Sensitive),
                Role::Outcome => binary_schema(&self.outcome, Role::Outcome),
                Role::Feature => {
                    let f = self.features.iter().find(|f| &f.name == name).expect("feature in order list");
                    AttributeSchema { name: name.clone(), kind: f.column.kind(), role: Role::Feature, levels: None }
                }
            })
            .collect()
    }

    /// Random train/test split. `train` receives `round(train_fraction * n)`
    /// rows. Both sides keep the parent row order. With `stratify`, the split
    /// is drawn within each (S, Y) cell and cell quotas are allocated by
    /// largest remainder so the total still matches.
    pub fn split(&self, train_fraction: f64, seed: u64, stratify: bool) -> Result<SplitPair> {
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidArgument("split needs at least two rows".into()));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside (0, 1)")));
        }
        let n_train = libm::round(train_fraction * n as f64) as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} leaves one side empty for n = {n}"
            )));
        }
        let mut rng = seed::rng(seed);
        let mut in_train = vec![false; n];
        if stratify {
            let mut cells: [Vec<usize>; 4] = Default::default();
            for i in 0..n {
                cells[(self.sensitive.values[i] * 2 + self.outcome.values[i]) as usize].push(i);
            }
            let quotas = largest_remainder(&cells.iter().map(|c| c.len()).collect::<Vec<_>>(), n_train);
            for (cell, quota) in cells.iter_mut().zip(quotas) {
                cell.shuffle(&mut rng);
                for &i in &cell[..quota] {
                    in_train[i] = true;
                }
            }
        } else {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            for &i in &perm[..n_train] {
                in_train[i] = true;
            }
        }
        let train_rows: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
        Ok(SplitPair { train: self.select(&train_rows)?, test: self.select(&test_rows)?, seed })
    }

    /// Uniform random subsample of `size` rows without replacement, in parent order.
    pub fn subsample(&self, size: usize, seed: u64) -> Result<Dataset> {
        if size == 0 || size > self.n() {
            return Err(Error::InvalidArgument(format!("subsample size {size} not in 1..={}", self.n())));
        }
        let mut perm: Vec<usize> = (0..self.n()).collect();
        perm.shuffle(&mut seed::rng(seed));
        let mut rows = perm[..size].to_vec();
        rows.sort_unstable();
        self.select(&rows)
    }
}

fn binary_schema(col: &BinaryColumn, role: Role) -> AttributeSchema {
    AttributeSchema {
        name: col.name.clone(),
        kind: AttributeKind::Categorical,
        role,
        levels: Some(BinaryLevels { one: vec![col.labels[1].clone()], zero: vec![col.labels[0].clone()] }),
    }
}

fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * total as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|&e| libm::floor(e) as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - quotas[b] as f64).total_cmp(&(exact[a] - quotas[a] as f64)).then(a.cmp(&b)));
    let mut missing = total - quotas.iter().sum::<usize>();
    for i in order {
        if missing == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            missing -= 1;
        }
    }
    quotas
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
}

/// Builds a [`Dataset`] from text records, one call per data row.
///
/// Missing-value handling is the caller's job (the CSV reader decides whether
/// to drop or reject a row); the builder only sees complete records.
pub struct DatasetBuilder {
    schema: Vec<AttributeSchema>,
    /// For each schema attribute, its position in the input record.
    positions: Vec<usize>,
    cols: Vec<ColumnBuilder>,
    ids: Vec<u64>,
}

enum ColumnBuilder {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Binary(BinaryBuilder),
}

struct BinaryBuilder {
    map: BinaryLevels,
    values: Vec<u8>,
    label_one: Option<String>,
    label_zero: Option<String>,
}

impl DatasetBuilder {
    /// `header` lists the record's column names; every schema attribute must
    /// appear in it. Extra record columns are ignored.
    pub fn new(schema: Vec<AttributeSchema>, header: &[&str]) -> Result<Self> {
        validate_schema(&schema)?;
        let positions = schema
            .iter()
            .map(|a| {
                header
                    .iter()
                    .position(|h| *h == a.name)
                    .ok_or_else(|| Error::UnknownColumn(a.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let cols = schema
            .iter()
            .map(|a| match (a.role, a.kind) {
                (Role::Sensitive | Role::Outcome, _) => ColumnBuilder::Binary(BinaryBuilder {
                    map: a.levels.clone().unwrap_or_default(),
                    values: Vec::new(),
                    label_one: None,
                    label_zero: None,
                }),
                (Role::Feature, AttributeKind::Numeric) => ColumnBuilder::Numeric(Vec::new()),
                (Role::Feature, AttributeKind::Categorical) => {
                    ColumnBuilder::Categorical { levels: Vec::new(), codes: Vec::new() }
                }
            })
            .collect();
        Ok(Self { schema, positions, cols, ids: Vec::new() })
    }

    /// Schema attributes in order, with the record position each is read from.
    pub fn positions(&self) -> impl Iterator<Item = (&AttributeSchema, usize)> {
        self.schema.iter().zip(self.positions.iter().copied())
    }

    /// Adds one record. `id` is the unit identifier (usually the data-row
    /// index in the source file). On error the builder is left unchanged.
    pub fn push(&mut self, id: u64, record: &[&str]) -> Result<()> {
        let row = self.ids.len();
        // Validate everything first so a failing record leaves no partial row.
        let mut parsed: Vec<Parsed> = Vec::with_capacity(self.cols.len());
        for ((attr, col), &pos) in self.schema.iter().zip(&self.cols).zip(&self.positions) {
            let raw = record.get(pos).copied().unwrap_or("");
            parsed.push(match col {
                ColumnBuilder::Numeric(_) => {
                    let x: f64 = raw.parse().map_err(|_| Error::ParseNumeric {
                        row,
                        column: attr.name.clone(),
                        value: raw.to_owned(),
                    })?;
                    if !x.is_finite() {
                        return Err(Error::NonFinite { row, column: attr.name.clone() });
                    }
                    Parsed::Number(x)
                }
                ColumnBuilder::Categorical { .. } => Parsed::Level,
                ColumnBuilder::Binary(b) => Parsed::Bit(b.classify(&attr.name, raw)?),
            });
        }
        for ((col, &pos), p) in self.cols.iter_mut().zip(&self.positions).zip(parsed) {
            let raw = record.get(pos).copied().unwrap_or("");
            match (col, p) {
                (ColumnBuilder::Numeric(v), Parsed::Number(x)) => v.push(x),
                (ColumnBuilder::Categorical { levels, codes }, _) => {
                    let code = match levels.iter().position(|l| l == raw) {
                        Some(c) => c,
                        None => {
                            levels.push(raw.to_owned());
                            levels.len() - 1
                        }
                    };
                    codes.push(code as u32);
                }
                (ColumnBuilder::Binary(b), Parsed::Bit(bit)) => {
                    let slot = if bit == 1 { &mut b.label_one } else { &mut b.label_zero };
                    if slot.is_none() {
                        *slot = Some(raw.to_owned());
                    }
                    b.values.push(bit);
                }
                _ => unreachable!("parsed value matches column type"),
            }
        }
        self.ids.push(id);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn finish(self) -> Result<Dataset> {
        if self.ids.is_empty() {
            return Err(Error::Empty);
        }
        let mut features = Vec::new();
        let mut sensitive = None;
        let mut outcome = None;
        let mut order = Vec::new();
        for (attr, col) in self.schema.into_iter().zip(self.cols) {
            order.push((attr.name.clone(), attr.role));
            match col {
                ColumnBuilder::Numeric(v) => features.push(Feature { name: attr.name, column: Column::Numeric(v) }),
                ColumnBuilder::Categorical { levels, codes } => {
                    features.push(Feature { name: attr.name, column: Column::Categorical { levels, codes } })
                }
                ColumnBuilder::Binary(b) => {
                    let label_one = b.label_one.unwrap_or_else(|| b.map.one[0].clone());
                    let label_zero = b.label_zero.or_else(|| b.map.zero.first().cloned()).unwrap_or_else(|| "0".into());
                    let col = BinaryColumn { name: attr.name, values: b.values, labels: [label_zero, label_one] };
                    if attr.role == Role::Sensitive {
                        sensitive = Some(col);
                    } else {
                        outcome = Some(col);
                    }
                }
            }
        }
        let ds = Dataset {
            order,
            features,
            sensitive: sensitive.expect("validated schema has a sensitive attribute"),
            outcome: outcome.expect("validated schema has an outcome attribute"),
            ids: self.ids,
        };
        ds.check()?;
        Ok(ds)
    }
}

enum Parsed {
    Number(f64),
    Level,
    Bit(u8),
}

impl BinaryBuilder {
    fn classify(&self, column: &str, raw: &str) -> Result<u8> {
        if self.map.one.iter().any(|l| l == raw) {
            return Ok(1);
        }
        if self.map.zero.is_empty() {
            // Any single other level is 0; a second distinct one is an error.
            match &self.label_zero {
                Some(z) if z != raw => Err(Error::NonBinary { column: column.into(), level: raw.into() }),
                _ => Ok(0),
            }
        } else if self.map.zero.iter().any(|l| l == raw) {
            Ok(0)
        } else {
            Err(Error::NonBinary { column: column.into(), level: raw.into() })
        }
    }
}

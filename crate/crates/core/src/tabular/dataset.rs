use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttributeKind, Schema, TabularError};

/// A single cell: a finite real number or a category string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    /// Numbers use the shortest decimal text that parses back to the same bits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

/// One record: a value per schema attribute plus the resolved class index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Value>,
    pub class: usize,
}

impl Row {
    pub fn num(&self, column: usize) -> f64 {
        self.values[column].as_num().expect("numeric column")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn empty(schema: Schema) -> Self {
        Self { schema, rows: Vec::new() }
    }

    /// Validates raw value vectors against the schema and resolves class indices.
    pub fn new(schema: Schema, values: Vec<Vec<Value>>) -> Result<Self, TabularError> {
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| validate_row(&schema, v).map_err(|e| e.at_row(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { schema, rows })
    }

    /// Builds a dataset from rows that already satisfy the schema.
    ///
    /// Rows are re-checked; a mismatch is reported rather than trusted.
    pub fn from_rows(schema: Schema, rows: Vec<Row>) -> Result<Self, TabularError> {
        Self::new(schema, rows.into_iter().map(|r| r.values).collect())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.class).collect()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.num(index)).collect()
    }

    /// A dataset holding clones of the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn push(&mut self, row: Row) -> Result<(), TabularError> {
        let row = validate_row(&self.schema, row.values).map_err(|e| e.at_row(self.rows.len()))?;
        self.rows.push(row);
        Ok(())
    }

    pub fn extend_from(&mut self, other: &Dataset) -> Result<(), TabularError> {
        if other.schema != self.schema {
            return Err(TabularError::SchemaMismatch("cannot concatenate datasets with different schemas".into()));
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    /// Row indices grouped by class, each group in dataset order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.schema.n_classes()];
        for (i, r) in self.rows.iter().enumerate() {
            out[r.class].push(i);
        }
        out
    }

    pub(crate) fn with_rows_unchecked(schema: Schema, rows: Vec<Row>) -> Self {
        Self { schema, rows }
    }
}

pub(crate) fn validate_row(schema: &Schema, values: Vec<Value>) -> Result<Row, TabularError> {
    if values.len() != schema.len() {
        return Err(TabularError::Arity {
            row: None,
            expected: schema.len(),
            found: values.len(),
        });
    }
    for (attr, v) in schema.attributes().iter().zip(&values) {
        match (attr.kind, v) {
            (AttributeKind::Numeric, Value::Num(x)) if x.is_finite() => {}
            (AttributeKind::Numeric, Value::Num(x)) => {
                return Err(TabularError::Numeric {
                    row: None,
                    attribute: attr.name.clone(),
                    text: x.to_string(),
                })
            }
            (AttributeKind::Categorical, Value::Cat(c)) if attr.category_index(c).is_some() => {}
            (AttributeKind::Categorical, Value::Cat(c)) => {
                return Err(TabularError::UnknownCategory {
                    row: None,
                    attribute: attr.name.clone(),
                    value: c.clone(),
                })
            }
            (kind, _) => {
                return Err(TabularError::KindMismatch {
                    row: None,
                    attribute: attr.name.clone(),
                    expected: kind,
                })
            }
        }
    }
    let label = values[schema.label_index()].as_cat().expect("validated categorical");
    let class = schema.class_index(label).expect("validated category");
    Ok(Row { values, class })
}

/// Per-class counts and the imbalance ratio (majority count / minority count).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub classes: Vec<String>,
    pub counts: Vec<usize>,
    /// `None` when some class has no rows.
    pub imbalance_ratio: Option<f64>,
    pub empty_classes: Vec<String>,
}

pub fn class_stats(ds: &Dataset) -> ClassStats {
    let mut counts = vec![0usize; ds.schema().n_classes()];
    for r in ds.rows() {
        counts[r.class] += 1;
    }
    counts_to_stats(ds.schema().classes().to_vec(), counts)
}

pub fn counts_to_stats(classes: Vec<String>, counts: Vec<usize>) -> ClassStats {
    let empty_classes: Vec<String> = classes
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n == 0)
        .map(|(c, _)| c.clone())
        .collect();
    let imbalance_ratio = if empty_classes.is_empty() && !counts.is_empty() {
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        Some(max / min)
    } else {
        None
    };
    ClassStats {
        classes,
        counts,
        imbalance_ratio,
        empty_classes,
    }
}

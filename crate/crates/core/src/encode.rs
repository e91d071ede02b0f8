//! Numeric feature encoding shared by the probe network and the baseline
//! classifiers: z-scored numerics and one-hot categoricals, label excluded.

use serde::{Deserialize, Serialize};

use crate::tabular::{AttributeKind, Dataset, Row, Schema, StandardizationParams, TabularError, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Slot {
    Numeric { column: usize, mean: f64, scale: f64 },
    OneHot { column: usize, categories: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    schema: Schema,
    slots: Vec<Slot>,
    width: usize,
}

impl FeatureEncoder {
    /// Fits z-score parameters on `ds`. Zero-variance numerics are centred
    /// but not scaled.
    pub fn fit(ds: &Dataset) -> Result<Self, TabularError> {
        let schema = ds.schema().clone();
        let params = if schema.numeric_indices().is_empty() {
            None
        } else {
            Some(StandardizationParams::fit(ds)?)
        };
        let mut slots = Vec::new();
        let mut width = 0;
        for column in schema.feature_indices() {
            let attr = schema.attribute(column);
            match attr.kind {
                AttributeKind::Numeric => {
                    let p = params.as_ref().and_then(|p| p.get(&attr.name)).expect("numeric params");
                    let mean = if p.mean.is_finite() { p.mean } else { 0.0 };
                    let scale = if p.std > 0.0 { p.std } else { 1.0 };
                    slots.push(Slot::Numeric { column, mean, scale });
                    width += 1;
                }
                AttributeKind::Categorical => {
                    width += attr.categories.len();
                    slots.push(Slot::OneHot {
                        column,
                        categories: attr.categories.clone(),
                    });
                }
            }
        }
        Ok(Self { schema, slots, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn encode_row(&self, row: &Row) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width);
        for slot in &self.slots {
            match slot {
                Slot::Numeric { column, mean, scale } => out.push((row.num(*column) - mean) / scale),
                Slot::OneHot { column, categories } => {
                    let v = match &row.values[*column] {
                        Value::Cat(c) => c.as_str(),
                        Value::Num(_) => "",
                    };
                    out.extend(categories.iter().map(|c| if c == v { 1.0 } else { 0.0 }));
                }
            }
        }
        out
    }

    pub fn encode(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>, TabularError> {
        if ds.schema() != &self.schema {
            return Err(TabularError::SchemaMismatch("encoder was fitted on a different schema".into()));
        }
        Ok(ds.rows().iter().map(|r| self.encode_row(r)).collect())
    }
}

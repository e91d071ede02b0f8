use serde::{Deserialize, Serialize};

use super::{Dataset, Row, TabularError, Value};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnParams {
    pub attribute: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl ColumnParams {
    /// Zero-variance columns are passed through unchanged.
    pub fn is_degenerate(&self) -> bool {
        !(self.std > 0.0)
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            x
        } else {
            (x - self.mean) / self.std
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        if self.is_degenerate() {
            z
        } else {
            z * self.std + self.mean
        }
    }
}

/// Per-numeric-attribute mean and population std, in schema order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub columns: Vec<ColumnParams>,
}

impl StandardizationParams {
    pub fn fit(ds: &Dataset) -> Result<Self, TabularError> {
        let numeric = ds.schema().numeric_indices();
        if numeric.is_empty() {
            return Err(TabularError::NoNumeric);
        }
        let columns = numeric
            .into_iter()
            .map(|c| {
                let col = ds.column(c);
                ColumnParams {
                    attribute: ds.schema().attribute(c).name.clone(),
                    mean: stats::mean(&col),
                    std: stats::population_std(&col),
                }
            })
            .collect();
        Ok(Self { columns })
    }

    pub fn get(&self, attribute: &str) -> Option<&ColumnParams> {
        self.columns.iter().find(|c| c.attribute == attribute)
    }

    /// Names of zero-variance columns.
    pub fn degenerate(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.is_degenerate())
            .map(|c| c.attribute.as_str())
            .collect()
    }

    fn check(&self, ds: &Dataset) -> Result<Vec<usize>, TabularError> {
        let numeric = ds.schema().numeric_indices();
        let names: Vec<&str> = numeric.iter().map(|&i| ds.schema().attribute(i).name.as_str()).collect();
        let ours: Vec<&str> = self.columns.iter().map(|c| c.attribute.as_str()).collect();
        if names != ours {
            return Err(TabularError::SchemaMismatch(format!(
                "standardization params cover [{}] but the dataset's numeric attributes are [{}]",
                ours.join(","),
                names.join(",")
            )));
        }
        Ok(numeric)
    }
}

/// Z-scores every numeric column, fitting parameters on `ds` unless `params`
/// is given.
pub fn standardize(
    ds: &Dataset,
    params: Option<&StandardizationParams>,
) -> Result<(Dataset, StandardizationParams), TabularError> {
    let params = match params {
        Some(p) => p.clone(),
        None => StandardizationParams::fit(ds)?,
    };
    let numeric = params.check(ds)?;
    for name in params.degenerate() {
        log::warn!("attribute '{name}' has zero variance; left unstandardized");
    }
    let rows = ds
        .rows()
        .iter()
        .map(|r| {
            let mut values = r.values.clone();
            for (col, p) in numeric.iter().zip(&params.columns) {
                values[*col] = Value::Num(p.apply(r.num(*col)));
            }
            Row { values, class: r.class }
        })
        .collect();
    Ok((Dataset::with_rows_unchecked(ds.schema().clone(), rows), params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AttributeSpec, Schema};

    fn ds(a: &[f64], b: &[f64]) -> Dataset {
        let schema = Schema::new(
            vec![
                AttributeSpec::numeric("a", ""),
                AttributeSpec::numeric("b", ""),
                AttributeSpec::categorical("y", "", ["p", "q"]),
            ],
            "y",
        )
        .unwrap();
        let rows = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| vec![Value::Num(x), Value::Num(y), Value::Cat("p".into())])
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn hand_computed_values() {
        let (z, params) = standardize(&ds(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), None).unwrap();
        let p = &params.columns[0];
        assert_eq!(p.mean, 2.0);
        assert!((p.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let col = z.column(0);
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((col[0] + expect).abs() < 1e-12 && col[1].abs() < 1e-12 && (col[2] - expect).abs() < 1e-12);
        assert!((expect - 1.2247).abs() < 1e-4);
        // constant column passes through and is flagged
        assert_eq!(z.column(1), vec![5.0, 5.0, 5.0]);
        assert_eq!(params.degenerate(), vec!["b"]);
    }

    #[test]
    fn reapplying_params_centres_the_fit_set() {
        let data = ds(&[0.3, 9.1, -4.0, 2.2, 7.7], &[1.0, 1.5, -2.0, 8.0, 3.3]);
        let (_, params) = standardize(&data, None).unwrap();
        let (z, _) = standardize(&data, Some(&params)).unwrap();
        for c in 0..2 {
            assert!(stats::mean(&z.column(c)).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_params_rejected() {
        let (_, mut params) = standardize(&ds(&[1.0, 2.0], &[3.0, 4.0]), None).unwrap();
        params.columns.pop();
        assert!(matches!(
            standardize(&ds(&[1.0], &[1.0]), Some(&params)),
            Err(TabularError::SchemaMismatch(_))
        ));
    }
}

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::dataset::validate_row;
use super::{AttributeKind, Dataset, Schema, TabularError, Value};

/// Loads a UTF-8, comma-separated file whose header names the schema
/// attributes in order.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset, TabularError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TabularError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, TabularError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| TabularError::Csv(e.to_string()))?.clone();
    let expected: Vec<&str> = schema.names().collect();
    let found: Vec<&str> = header.iter().collect();
    if expected != found {
        return Err(TabularError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let record = record.map_err(|e| TabularError::Csv(e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        let values = parse_record(schema, &fields).map_err(|e| e.at_line(line))?;
        rows.push(validate_row(schema, values).map_err(|e| e.at_line(line))?);
    }
    Ok(Dataset::with_rows_unchecked(schema.clone(), rows))
}

pub(crate) fn parse_record<'a>(
    schema: &Schema,
    fields: &[&'a str],
) -> Result<Vec<Value>, TabularError> {
    if fields.len() != schema.len() {
        return Err(TabularError::Arity {
            row: None,
            expected: schema.len(),
            found: fields.len(),
        });
    }
    schema
        .attributes()
        .iter()
        .zip(fields)
        .map(|(attr, &text)| match attr.kind {
            AttributeKind::Numeric => text
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Value::Num)
                .ok_or_else(|| TabularError::Numeric {
                    row: None,
                    attribute: attr.name.clone(),
                    text: text.to_string(),
                }),
            AttributeKind::Categorical => Ok(Value::Cat(text.to_string())),
        })
        .collect()
}

/// Writes the header and rows in canonical schema order. Numbers are emitted
/// in shortest round-trip form; only fields that need it are quoted.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<(), TabularError> {
    let mut wtr = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    let csv_err = |e: csv::Error| TabularError::Csv(e.to_string());
    wtr.write_record(ds.schema().names()).map_err(csv_err)?;
    for row in ds.rows() {
        wtr.write_record(row.values.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| TabularError::Csv(e.to_string()))?;
    Ok(())
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

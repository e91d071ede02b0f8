use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassCodeMap;
use crate::tabular::{AttributeKind, Dataset, Row, Schema, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Row appears before any class marker.
    NoMarker,
    /// Row sits under a marker that names no class.
    UnknownMarker,
    Arity,
    NumericParse,
    UnknownCategory,
    /// The row's label field disagrees with its section marker.
    LabelMismatch,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::NoMarker => "no marker",
            RejectReason::UnknownMarker => "unknown marker",
            RejectReason::Arity => "arity",
            RejectReason::NumericParse => "numeric parse",
            RejectReason::UnknownCategory => "unknown category",
            RejectReason::LabelMismatch => "label mismatch",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line number of the (first physical line of the) candidate.
    pub line: usize,
    pub text: String,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParsedBatch {
    pub accepted: Dataset,
    pub rejects: Vec<Reject>,
    /// Accepted rows per class, in schema class order.
    pub per_class: Vec<usize>,
    /// Set when no row at all could be accepted.
    pub diagnostic: Option<String>,
}

impl ParsedBatch {
    pub fn candidates(&self) -> usize {
        self.accepted.len() + self.rejects.len()
    }

    /// One JSON object per reject.
    pub fn rejects_jsonl(&self) -> String {
        self.rejects
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

enum Section {
    None,
    Class(usize),
    Unknown(String),
}

/// Marker line such as "A.", "B:" or a bare "C".
fn marker_token(line: &str) -> Option<&str> {
    let t = line.trim_end_matches(['.', ':', ')']).trim();
    (!t.is_empty() && t.len() <= 3 && t.bytes().all(|b| b.is_ascii_uppercase())).then_some(t)
}

fn is_header(line: &str, schema: &Schema) -> bool {
    let names: Vec<&str> = schema.names().collect();
    let by_comma: Vec<&str> = line.split(',').map(str::trim).collect();
    if by_comma == names {
        return true;
    }
    let by_space: Vec<&str> = line.split_whitespace().collect();
    by_space == names
}

fn split_fields(line: &str) -> Vec<String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    match rdr.records().next() {
        Some(Ok(rec)) => rec.iter().map(str::to_string).collect(),
        _ => line.split(',').map(|f| f.trim().to_string()).collect(),
    }
}

/// Joins physical lines ending in a comma with the line that follows.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (start, joined) = match pending.take() {
            Some((start, mut acc)) => {
                acc.push_str(line);
                (start, acc)
            }
            None => (i + 1, line.to_string()),
        };
        if joined.ends_with(',') {
            pending = Some((start, joined));
        } else {
            out.push((start, joined));
        }
    }
    out.extend(pending);
    out
}

fn parse_row(fields: &[String], class: usize, schema: &Schema, codes: &ClassCodeMap) -> Result<Row, (RejectReason, String)> {
    if fields.len() != schema.len() {
        return Err((
            RejectReason::Arity,
            format!("expected {} fields, found {}", schema.len(), fields.len()),
        ));
    }
    let mut values = Vec::with_capacity(fields.len());
    for (i, (attr, text)) in schema.attributes().iter().zip(fields).enumerate() {
        match attr.kind {
            AttributeKind::Numeric => match text.parse::<f64>() {
                Ok(x) if x.is_finite() => values.push(Value::Num(x)),
                _ => return Err((RejectReason::NumericParse, format!("{}: '{text}'", attr.name))),
            },
            AttributeKind::Categorical => match codes.decode(schema, i, text) {
                Some(v) => values.push(Value::Cat(v.to_string())),
                None => return Err((RejectReason::UnknownCategory, format!("{}: '{text}'", attr.name))),
            },
        }
    }
    let label = values[schema.label_index()].as_cat().expect("label is categorical");
    if schema.class_index(label) != Some(class) {
        return Err((
            RejectReason::LabelMismatch,
            format!("label '{label}' under the marker of class '{}'", schema.classes()[class]),
        ));
    }
    Ok(Row { values, class })
}

/// Reads rows grouped under class markers. Malformed lines are collected as
/// rejects; nothing here is fatal.
pub fn parse_generated_rows(text: &str, schema: &Schema, codes: &ClassCodeMap) -> ParsedBatch {
    let mut section = Section::None;
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    let mut per_class = vec![0; schema.n_classes()];
    let mut reject = |line: usize, text: &str, reason, detail: String| {
        rejects.push(Reject {
            line,
            text: text.to_string(),
            reason,
            detail,
        })
    };

    for (line_no, line) in logical_lines(text) {
        if line.starts_with("```") || is_header(&line, schema) {
            continue;
        }
        if let Some(token) = marker_token(&line) {
            section = match codes.class_of_marker(token) {
                Some(c) => Section::Class(c),
                None => Section::Unknown(token.to_string()),
            };
            continue;
        }
        match &section {
            Section::None => reject(line_no, &line, RejectReason::NoMarker, "row before any class marker".into()),
            Section::Unknown(m) => reject(line_no, &line, RejectReason::UnknownMarker, format!("marker '{m}'")),
            Section::Class(c) => match parse_row(&split_fields(&line), *c, schema, codes) {
                Ok(row) => {
                    per_class[row.class] += 1;
                    rows.push(row);
                }
                Err((reason, detail)) => reject(line_no, &line, reason, detail),
            },
        }
    }

    let diagnostic = rows.is_empty().then(|| {
        if rejects.is_empty() {
            "no candidate rows found in the response".to_string()
        } else {
            format!("all {} candidate rows were rejected", rejects.len())
        }
    });
    ParsedBatch {
        accepted: Dataset::with_rows_unchecked(schema.clone(), rows),
        rejects,
        per_class,
        diagnostic,
    }
}

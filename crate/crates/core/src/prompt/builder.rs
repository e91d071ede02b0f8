use super::templates::Template;
use super::{ClassCodeMap, ConstraintSet, PromptError, RelationshipAnalysis};
use crate::feedback::FeedbackReport;
use crate::tabular::{AttributeKind, Dataset, Row, Schema};

/// Dataset context, attribute semantics and class identifiers.
pub fn build_metadata_prompt(schema: &Schema, domain: &str, codes: &ClassCodeMap) -> Result<String, PromptError> {
    if let Some(a) = schema.attributes().iter().find(|a| a.description.trim().is_empty()) {
        return Err(PromptError::MissingDescription(a.name.clone()));
    }
    let attribute_lines: Vec<String> = schema
        .attributes()
        .iter()
        .enumerate()
        .map(|(i, a)| match a.kind {
            AttributeKind::Numeric => format!("- {} (numeric): {}", a.name, a.description),
            AttributeKind::Categorical => {
                let values: Vec<&str> = a.categories.iter().map(|c| codes.encode(schema, i, c)).collect();
                format!("- {} (categorical; values: {}): {}", a.name, values.join(", "), a.description)
            }
        })
        .collect();
    let label = schema.label_index();
    let class_lines: Vec<String> = schema
        .classes()
        .iter()
        .enumerate()
        .map(|(c, value)| {
            let shown = codes.encode(schema, label, value);
            if shown == value {
                format!("{}. {} = {}", codes.marker(c), schema.label(), value)
            } else {
                format!("{}. {} = {} (written as {})", codes.marker(c), schema.label(), value, shown)
            }
        })
        .collect();
    let n_attributes = schema.len().to_string();
    Template::Metadata.render(&[
        ("domain", domain),
        ("n_attributes", &n_attributes),
        ("attribute_lines", &attribute_lines.join("\n")),
        ("label", schema.label()),
        ("class_lines", &class_lines.join("\n")),
    ])
}

/// Asks for feature/class relationships over the core-set rows.
pub fn build_relationship_prompt(core: &Dataset, metadata: &str, codes: &ClassCodeMap) -> Result<String, PromptError> {
    if core.is_empty() {
        return Err(PromptError::EmptyCoreSet);
    }
    let rows = rows_csv(core, codes);
    Template::Relationship.render(&[("metadata", metadata), ("rows", rows.trim_end()), ("label", core.schema().label())])
}

pub fn build_constraint_prompt(analysis: &RelationshipAnalysis) -> Result<String, PromptError> {
    Template::Constraint.render(&[("analysis", analysis.text().trim_end())])
}

/// Generation request for one batch. A non-empty feedback report is appended
/// after the base prompt, separated by a blank line.
pub fn build_generation_prompt(
    constraints: &ConstraintSet,
    reference: &Dataset,
    feedback: Option<&FeedbackReport>,
    codes: &ClassCodeMap,
    per_class: usize,
) -> Result<String, PromptError> {
    if reference.is_empty() {
        return Err(PromptError::EmptyReference);
    }
    let reference_text = render_rows(reference, codes);
    let per_class = per_class.to_string();
    let mut prompt = Template::Generation.render(&[
        ("constraints", constraints.text().trim_end()),
        ("reference", reference_text.trim_end()),
        ("per_class", &per_class),
        ("first_marker", codes.marker(0)),
    ])?;
    if let Some(report) = feedback.filter(|f| !f.is_empty()) {
        prompt.push_str("\n\n");
        prompt.push_str(&report.render());
    }
    Ok(prompt)
}

fn encoded_fields<'a>(schema: &'a Schema, row: &'a Row, codes: &'a ClassCodeMap) -> Vec<String> {
    row.values
        .iter()
        .enumerate()
        .map(|(i, v)| match v.as_cat() {
            Some(c) => codes.encode(schema, i, c).to_string(),
            None => v.to_string(),
        })
        .collect()
}

fn csv_line<S: AsRef<[u8]>>(fields: &[S]) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    wtr.write_record(fields).expect("writing to memory");
    let mut s = String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("UTF-8");
    s.pop();
    s
}

/// Header line plus one CSV line per row, in dataset order.
pub fn rows_csv(ds: &Dataset, codes: &ClassCodeMap) -> String {
    let schema = ds.schema();
    let mut out = csv_line(&schema.names().collect::<Vec<_>>());
    out.push('\n');
    for row in ds.rows() {
        out.push_str(&csv_line(&encoded_fields(schema, row, codes)));
        out.push('\n');
    }
    out
}

/// Header line, then for each class that has rows its marker ("A.") followed
/// by the class's rows in dataset order.
pub fn render_rows(ds: &Dataset, codes: &ClassCodeMap) -> String {
    let schema = ds.schema();
    let mut out = csv_line(&schema.names().collect::<Vec<_>>());
    out.push('\n');
    for (c, idx) in ds.indices_by_class().iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        out.push_str(codes.marker(c));
        out.push_str(".\n");
        for &i in idx {
            out.push_str(&csv_line(&encoded_fields(schema, &ds.rows()[i], codes)));
            out.push('\n');
        }
    }
    out
}

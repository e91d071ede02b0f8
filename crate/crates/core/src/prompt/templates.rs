use super::PromptError;

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Template {
    Metadata,
    Relationship,
    Constraint,
    Generation,
}

impl Template {
    pub fn source(self) -> &'static str {
        match self {
            Template::Metadata => include_str!("../../templates/v1/metadata.txt"),
            Template::Relationship => include_str!("../../templates/v1/relationship.txt"),
            Template::Constraint => include_str!("../../templates/v1/constraint.txt"),
            Template::Generation => include_str!("../../templates/v1/generation.txt"),
        }
    }

    pub fn render(self, vars: &[(&str, &str)]) -> Result<String, PromptError> {
        fill(self.source().trim_end(), vars)
    }
}

/// Replaces every `{name}` with its value in one left-to-right pass, so
/// substituted text is never re-expanded. Braces not enclosing an identifier
/// are copied through.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .bytes()
            .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
            .count();
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            let value = vars
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| PromptError::Placeholder(name.to_string()))?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

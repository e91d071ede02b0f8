//! Prompt chain assembly and parsing of generated rows.

mod builder;
mod codes;
mod parser;
mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builder::{
    build_constraint_prompt, build_generation_prompt, build_metadata_prompt, build_relationship_prompt, render_rows,
    rows_csv,
};
pub use codes::{marker_for, ClassCodeMap};
pub use parser::{parse_generated_rows, ParsedBatch, Reject, RejectReason};
pub use templates::{fill, Template, TEMPLATE_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("attribute '{0}' has no description")]
    MissingDescription(String),
    #[error("core set is empty")]
    EmptyCoreSet,
    #[error("relationship analysis is empty")]
    EmptyAnalysis,
    #[error("constraint set is empty")]
    EmptyConstraints,
    #[error("reference batch is empty")]
    EmptyReference,
    #[error("class code map: {0}")]
    Codes(String),
    #[error("template placeholder {{{0}}} has no value")]
    Placeholder(String),
}

/// Text of the relationship-analysis response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationshipAnalysis {
    text: String,
}

impl RelationshipAnalysis {
    pub fn new(text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(PromptError::EmptyAnalysis);
        }
        Ok(Self { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Generation constraints: the raw response plus any "Rule n:" items found
/// in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    text: String,
    rules: Vec<(u32, String)>,
}

impl ConstraintSet {
    pub fn new(text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(PromptError::EmptyConstraints);
        }
        let rules = parse_rules(&text);
        Ok(Self { text, rules })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Parsed rules with strictly increasing indices.
    pub fn rules(&self) -> &[(u32, String)] {
        &self.rules
    }
}

/// Splits text at "Rule n:" markers. A marker whose index does not exceed the
/// previous one is treated as ordinary text of the current rule.
fn parse_rules(text: &str) -> Vec<(u32, String)> {
    let mut starts: Vec<(usize, usize, u32)> = Vec::new();
    let mut last = 0u32;
    let mut from = 0;
    while let Some(pos) = text[from..].find("Rule ") {
        let at = from + pos;
        let rest = &text[at + 5..];
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        from = at + 5;
        if digits == 0 || !rest[digits..].starts_with(':') {
            continue;
        }
        let Ok(n) = rest[..digits].parse::<u32>() else { continue };
        if n <= last {
            continue;
        }
        last = n;
        starts.push((at, at + 5 + digits + 1, n));
    }
    starts
        .iter()
        .enumerate()
        .map(|(k, &(_, body, n))| {
            let end = starts.get(k + 1).map_or(text.len(), |s| s.0);
            (n, text[body..end].trim().to_string())
        })
        .collect()
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::tabular::Schema;

/// Spreadsheet-style section marker for a class index: A..Z, AA, AB, ...
pub fn marker_for(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ASCII")
}

/// Bijections between class labels and section markers, and (when
/// obfuscation is on) between category values and opaque codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCodeMap {
    markers: Vec<String>,
    /// Per attribute: the code of each category, parallel to the schema's
    /// category list. `None` for numeric attributes or plain mode.
    codes: Vec<Option<Vec<String>>>,
}

impl ClassCodeMap {
    /// Markers only; category values are shown as-is.
    pub fn plain(schema: &Schema) -> Self {
        Self {
            markers: (0..schema.n_classes()).map(marker_for).collect(),
            codes: vec![None; schema.len()],
        }
    }

    /// Seeded three-character alphanumeric codes for every categorical value,
    /// unique within each attribute.
    pub fn obfuscated(schema: &Schema, seed: u64) -> Self {
        const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codes = schema
            .attributes()
            .iter()
            .map(|a| {
                if a.is_numeric() {
                    return None;
                }
                let mut used: Vec<String> = Vec::new();
                for _ in &a.categories {
                    loop {
                        let code: String = std::iter::once(ALNUM[rng.random_range(0..26)])
                            .chain((0..2).map(|_| ALNUM[rng.random_range(0..ALNUM.len())]))
                            .map(char::from)
                            .collect();
                        if !used.contains(&code) {
                            used.push(code);
                            break;
                        }
                    }
                }
                Some(used)
            })
            .collect();
        Self {
            markers: (0..schema.n_classes()).map(marker_for).collect(),
            codes,
        }
    }

    /// Explicit codes keyed by attribute name, then by category value.
    /// Attributes not listed stay plain.
    pub fn with_codes(schema: &Schema, table: &BTreeMap<String, BTreeMap<String, String>>) -> Result<Self, PromptError> {
        let mut map = Self::plain(schema);
        for (name, values) in table {
            let idx = schema
                .index_of(name)
                .ok_or_else(|| PromptError::Codes(format!("unknown attribute '{name}'")))?;
            let attr = schema.attribute(idx);
            if attr.is_numeric() {
                return Err(PromptError::Codes(format!("numeric attribute '{name}' cannot be coded")));
            }
            let mut codes = Vec::with_capacity(attr.categories.len());
            for cat in &attr.categories {
                let code = values
                    .get(cat)
                    .ok_or_else(|| PromptError::Codes(format!("no code for '{name}' value '{cat}'")))?;
                if codes.contains(code) {
                    return Err(PromptError::Codes(format!("code '{code}' used twice for '{name}'")));
                }
                codes.push(code.clone());
            }
            map.codes[idx] = Some(codes);
        }
        Ok(map)
    }

    pub fn is_obfuscated(&self) -> bool {
        self.codes.iter().any(Option::is_some)
    }

    pub fn marker(&self, class: usize) -> &str {
        &self.markers[class]
    }

    pub fn markers(&self) -> &[String] {
        &self.markers
    }

    pub fn class_of_marker(&self, marker: &str) -> Option<usize> {
        self.markers.iter().position(|m| m == marker)
    }

    /// Text shown for category `value` of attribute `column`.
    pub fn encode<'a>(&'a self, schema: &'a Schema, column: usize, value: &'a str) -> &'a str {
        match &self.codes[column] {
            Some(codes) => schema
                .attribute(column)
                .category_index(value)
                .map(|i| codes[i].as_str())
                .unwrap_or(value),
            None => value,
        }
    }

    /// Category value for shown text, or `None` if the text is not a known
    /// code (or category, in plain mode).
    pub fn decode<'a>(&'a self, schema: &'a Schema, column: usize, text: &str) -> Option<&'a str> {
        let attr = schema.attribute(column);
        match &self.codes[column] {
            Some(codes) => codes.iter().position(|c| c == text).map(|i| attr.categories[i].as_str()),
            None => attr.category_index(text).map(|i| attr.categories[i].as_str()),
        }
    }
}

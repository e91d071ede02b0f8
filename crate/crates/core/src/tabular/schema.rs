use serde::{Deserialize, Serialize};

use super::TabularError;

/// Whether an attribute carries real numbers or one of a fixed set of labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    /// Free text shown to the language model in the metadata prompt.
    #[serde(default)]
    pub description: String,
    /// Ordered category domain; empty for numeric attributes.
    #[serde(default)]
    pub categories: Vec<String>,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric,
            description: description.into(),
            categories: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        description: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            description: description.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == AttributeKind::Numeric
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

/// Ordered attribute list plus the designated class attribute.
///
/// Attribute order is the canonical column order used by every reader and
/// writer in the crate. The class list is the label attribute's category list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    label: String,
    label_index: usize,
    classes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    attributes: Vec<AttributeSpec>,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<String>>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = TabularError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        let schema = Schema::new(raw.attributes, raw.label)?;
        if let Some(classes) = raw.classes {
            if classes != schema.classes {
                return Err(TabularError::InvalidSchema(format!(
                    "declared classes {classes:?} differ from the categories of label '{}' ({:?})",
                    schema.label, schema.classes
                )));
            }
        }
        Ok(schema)
    }
}

impl From<Schema> for RawSchema {
    fn from(s: Schema) -> Self {
        RawSchema {
            attributes: s.attributes,
            label: s.label,
            classes: Some(s.classes),
        }
    }
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>, label: impl Into<String>) -> Result<Self, TabularError> {
        let label = label.into();
        for (i, a) in attributes.iter().enumerate() {
            if a.name.trim().is_empty() {
                return Err(TabularError::InvalidSchema(format!("attribute {i} has an empty name")));
            }
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(TabularError::InvalidSchema(format!("duplicate attribute name '{}'", a.name)));
            }
            match a.kind {
                AttributeKind::Categorical if a.categories.is_empty() => {
                    return Err(TabularError::InvalidSchema(format!(
                        "categorical attribute '{}' has no categories",
                        a.name
                    )));
                }
                AttributeKind::Numeric if !a.categories.is_empty() => {
                    return Err(TabularError::InvalidSchema(format!(
                        "numeric attribute '{}' declares categories",
                        a.name
                    )));
                }
                _ => {}
            }
            for (j, c) in a.categories.iter().enumerate() {
                if a.categories[..j].contains(c) {
                    return Err(TabularError::InvalidSchema(format!(
                        "attribute '{}' repeats category '{c}'",
                        a.name
                    )));
                }
            }
        }
        let label_index = attributes
            .iter()
            .position(|a| a.name == label)
            .ok_or_else(|| TabularError::InvalidSchema(format!("label '{label}' is not an attribute")))?;
        let label_attr = &attributes[label_index];
        if label_attr.kind != AttributeKind::Categorical {
            return Err(TabularError::InvalidSchema(format!("label '{label}' must be categorical")));
        }
        if label_attr.categories.len() < 2 {
            return Err(TabularError::InvalidSchema(format!("label '{label}' needs at least two classes")));
        }
        let classes = label_attr.categories.clone();
        Ok(Self {
            attributes,
            label,
            label_index,
            classes,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> &AttributeSpec {
        &self.attributes[index]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn label_index(&self) -> usize {
        self.label_index
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, value: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == value)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Column indices of numeric attributes, in schema order.
    pub fn numeric_indices(&self) -> Vec<usize> {
        (0..self.attributes.len()).filter(|&i| self.attributes[i].is_numeric()).collect()
    }

    /// Column indices of every attribute except the label, in schema order.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.attributes.len()).filter(|&i| i != self.label_index).collect()
    }
}

//! Schema files: the attribute list plus the CSV dialect of the data file.
//!
//! ```toml
//! delimiter = ","
//! na_values = ["?", ""]
//!
//! [[attribute]]
//! name = "age"
//! kind = "numeric"
//!
//! [[attribute]]
//! name = "race"
//! kind = "categorical"
//! role = "sensitive"
//! levels = { one = ["Black", "Other"], zero = ["White"] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use seqcem_core::dataset::{validate_schema, AttributeSchema, Role};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Cell values treated as missing (compared after trimming).
    #[serde(default = "default_na_values")]
    pub na_values: Vec<String>,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeSchema>,
}

fn default_delimiter() -> char {
    ','
}

fn default_na_values() -> Vec<String> {
    vec!["?".into(), String::new()]
}

impl SchemaFile {
    pub fn new(attributes: Vec<AttributeSchema>) -> Self {
        Self { delimiter: default_delimiter(), na_values: default_na_values(), attributes }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let schema: SchemaFile = toml::from_str(text).map_err(|e| e.to_string())?;
        validate_schema(&schema.attributes).map_err(|e| e.to_string())?;
        if !schema.delimiter.is_ascii() {
            return Err(format!("delimiter `{}` is not a single ASCII character", schema.delimiter));
        }
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|message| Error::Config { path: path.into(), message })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.attributes.iter().filter(|a| a.role == Role::Feature).map(|a| a.name.as_str()).collect()
    }

    /// Keeps `S`, `Y` and the listed features only, in schema order.
    pub fn restrict_features(&self, keep: &[String]) -> Result<SchemaFile> {
        for name in keep {
            if !self.attributes.iter().any(|a| a.role == Role::Feature && &a.name == name) {
                return Err(Error::Usage(format!("`{name}` is not a feature attribute of the schema")));
            }
        }
        let attributes = self
            .attributes
            .iter()
            .filter(|a| a.role != Role::Feature || keep.contains(&a.name))
            .cloned()
            .collect();
        Ok(SchemaFile { attributes, ..self.clone() })
    }
}

//! Mediator configuration file.
//!
//! One `key = value` pair per line; blank lines and lines starting with `#`
//! are ignored. Relative paths resolve against the config file's directory.
//!
//! ```text
//! global_schema = global_schema.xml
//! mapping_document = mapping.xml
//! strict_format = false
//! partial_results = false
//! source.sql.data_location = students.tsv
//! source.sql.replica_group = registry
//! source.sql.id = registry_db
//! ```
//!
//! `source.<id>.*` keys override the section attributes of the mapping
//! document source named `<id>`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::SourceCatalog;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config is missing required key {0}")]
    MissingKey(&'static str),
    #[error("config overrides unknown source {0}")]
    UnknownSource(String),
    #[error("config renames two sources to {0}")]
    DuplicateSourceId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceOverride {
    /// Id of the source in the mapping document.
    pub source_id: String,
    pub id: Option<String>,
    pub data_location: Option<PathBuf>,
    pub replica_group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediatorConfig {
    pub global_schema_path: PathBuf,
    pub mapping_document_path: PathBuf,
    pub overrides: Vec<SourceOverride>,
    pub strict_format: bool,
    pub partial_results: bool,
}

impl MediatorConfig {
    pub fn new(global_schema_path: impl Into<PathBuf>, mapping_document_path: impl Into<PathBuf>) -> Self {
        Self {
            global_schema_path: global_schema_path.into(),
            mapping_document_path: mapping_document_path.into(),
            overrides: Vec::new(),
            strict_format: false,
            partial_results: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut global_schema = None;
        let mut mapping_document = None;
        let mut strict_format = None;
        let mut partial_results = None;
        let mut overrides: Vec<SourceOverride> = Vec::new();
        let mut seen = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let syntax = |message: String| ConfigError::Syntax { line, message };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(syntax(format!("expected key = value, found {trimmed:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax(format!("{key} has an empty value")));
            }
            if !seen.insert(key.to_string()) {
                return Err(syntax(format!("duplicate key {key}")));
            }
            let flag = |v: &str| {
                v.parse::<bool>()
                    .map_err(|_| syntax(format!("{key} must be true or false")))
            };
            match key {
                "global_schema" => global_schema = Some(base_dir.join(value)),
                "mapping_document" => mapping_document = Some(base_dir.join(value)),
                "strict_format" => strict_format = Some(flag(value)?),
                "partial_results" => partial_results = Some(flag(value)?),
                _ => {
                    let Some(rest) = key.strip_prefix("source.") else {
                        return Err(syntax(format!("unknown key {key}")));
                    };
                    let Some((source_id, field)) = rest.rsplit_once('.') else {
                        return Err(syntax(format!("unknown key {key}")));
                    };
                    if source_id.is_empty() {
                        return Err(syntax(format!("{key} names no source")));
                    }
                    let entry = match overrides.iter_mut().position(|o| o.source_id == source_id) {
                        Some(i) => &mut overrides[i],
                        None => {
                            overrides.push(SourceOverride {
                                source_id: source_id.to_string(),
                                ..SourceOverride::default()
                            });
                            overrides.last_mut().expect("just pushed")
                        }
                    };
                    match field {
                        "id" => entry.id = Some(value.to_string()),
                        "data_location" => entry.data_location = Some(base_dir.join(value)),
                        "replica_group" => entry.replica_group = Some(value.to_string()),
                        _ => return Err(syntax(format!("unknown source field {field}"))),
                    }
                }
            }
        }
        Ok(Self {
            global_schema_path: global_schema.ok_or(ConfigError::MissingKey("global_schema"))?,
            mapping_document_path: mapping_document.ok_or(ConfigError::MissingKey("mapping_document"))?,
            overrides,
            strict_format: strict_format.unwrap_or(false),
            partial_results: partial_results.unwrap_or(false),
        })
    }

    /// Applies the per-source overrides. Every overridden id must name a
    /// source of the catalog, and renamed ids must stay unique.
    pub fn apply_overrides(&self, catalog: &mut SourceCatalog) -> Result<(), ConfigError> {
        for o in &self.overrides {
            if catalog.source(&o.source_id).is_none() {
                return Err(ConfigError::UnknownSource(o.source_id.clone()));
            }
        }
        let original: Vec<String> = catalog.sources.iter().map(|s| s.id.clone()).collect();
        for (source, id) in catalog.sources.iter_mut().zip(&original) {
            let Some(o) = self.overrides.iter().find(|o| &o.source_id == id) else {
                continue;
            };
            if let Some(new_id) = &o.id {
                source.id = new_id.clone();
            }
            if let Some(location) = &o.data_location {
                source.data_location = Some(location.clone());
            }
            if let Some(group) = &o.replica_group {
                source.replica_group = Some(group.clone());
            }
        }
        let mut ids = BTreeSet::new();
        for source in &catalog.sources {
            if !ids.insert(source.id.as_str()) {
                return Err(ConfigError::DuplicateSourceId(source.id.clone()));
            }
        }
        Ok(())
    }
}

//! Final result generation: rename local columns to global names, merge the
//! per-source tables and write the XML result document.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::catalog::ConceptMapping;
use crate::constraints::Literal;
use crate::engines::LocalResultSet;
use crate::xml::{escape_attr, escape_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrationError {
    #[error("source {source_id}: column {column} has no mapping")]
    UnmappedColumn { source_id: String, column: String },
    #[error("cannot merge columns [{}] with [{}]", .expected.join(", "), .found.join(", "))]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRow {
    pub values: Vec<Literal>,
    /// Ids of the sources that returned this tuple.
    pub sources: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobalResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

/// Renames a local result set to global attribute names. Values are left
/// untouched.
pub fn normalize(
    local: &LocalResultSet,
    mapping: &ConceptMapping,
) -> Result<GlobalResultTable, IntegrationError> {
    let columns = local
        .columns
        .iter()
        .map(|c| {
            mapping
                .by_local(c)
                .map(|m| m.global_name.clone())
                .ok_or_else(|| IntegrationError::UnmappedColumn {
                    source_id: local.source_id.clone(),
                    column: c.clone(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = local
        .rows
        .iter()
        .map(|values| ResultRow {
            values: values.clone(),
            sources: BTreeSet::from([local.source_id.clone()]),
        })
        .collect();
    Ok(GlobalResultTable { columns, rows })
}

fn same_columns(a: &[String], b: &[String]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_ignore_ascii_case(y))
}

/// Unions the parts, collapsing equal tuples and their provenance. Rows come
/// back sorted by value tuple, so the output does not depend on part order.
/// Column names are taken from the first part.
pub fn merge(parts: &[GlobalResultTable]) -> Result<GlobalResultTable, IntegrationError> {
    let Some(first) = parts.first() else {
        return Ok(GlobalResultTable::default());
    };
    let mut merged: BTreeMap<Vec<Literal>, BTreeSet<String>> = BTreeMap::new();
    for part in parts {
        if !same_columns(&first.columns, &part.columns) {
            return Err(IntegrationError::ColumnMismatch {
                expected: first.columns.clone(),
                found: part.columns.clone(),
            });
        }
        for row in &part.rows {
            merged
                .entry(row.values.clone())
                .or_default()
                .extend(row.sources.iter().cloned());
        }
    }
    Ok(GlobalResultTable {
        columns: first.columns.clone(),
        rows: merged
            .into_iter()
            .map(|(values, sources)| ResultRow { values, sources })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultDocument(pub String);

impl ResultDocument {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// ```text
/// <result concept="Student">
///   <row sources="oql,sql">
///     <registration_number>aa11111</registration_number>
///   </row>
/// </result>
/// ```
pub fn emit_result_document(table: &GlobalResultTable, concept: &str) -> ResultDocument {
    let mut out = format!("<result concept=\"{}\">\n", escape_attr(concept));
    for row in &table.rows {
        let sources: Vec<&str> = row.sources.iter().map(String::as_str).collect();
        out.push_str(&format!("  <row sources=\"{}\">\n", escape_attr(&sources.join(","))));
        for (column, value) in table.columns.iter().zip(&row.values) {
            out.push_str(&format!(
                "    <{column}>{}</{column}>\n",
                escape_text(&value.render())
            ));
        }
        out.push_str("  </row>\n");
    }
    out.push_str("</result>\n");
    ResultDocument(out)
}

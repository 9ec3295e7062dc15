//! Embedded local query processors. Each one parses a dialect query and
//! evaluates it over a flat data file:
//!
//! - xpath: an XML document whose root holds one child element per record,
//!   each record holding one element per attribute;
//! - sql: a tab-separated table with a header line of column names;
//! - oql: a JSON array of flat objects.
//!
//! XML and tabular values that lex as decimal integers load as `Int`,
//! everything else as `Text`. JSON numbers load as `Int`, strings as `Text`.
//! Attribute names resolve case-insensitively.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::constraints::Literal;
use crate::dialects::{Dialect, DialectQuery};
use crate::planner::SourcePlan;
use crate::query::{parse_query, Predicate};
use crate::syntax::{bare_attr, Parser, SyntaxError, Token};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dialect syntax error: {0}")]
    DialectSyntax(#[from] SyntaxError),
    #[error("{}: {message}", path.display())]
    DataFormat { path: PathBuf, message: String },
    #[error("{}: unknown attribute {attribute}", path.display())]
    UnknownAttribute { path: PathBuf, attribute: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRecord {
    pub concept: String,
    pub values: Vec<(String, Literal)>,
}

impl LocalRecord {
    pub fn get(&self, name: &str) -> Option<&Literal> {
        self.values
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalResultSet {
    pub source_id: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Literal>>,
}

/// What a local processor understood from a dialect query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnginePlan {
    pub concept: String,
    pub projection: String,
    pub predicate: Option<Predicate>,
}

impl EnginePlan {
    pub fn eq_ignore_case(&self, other: &EnginePlan) -> bool {
        self.concept.eq_ignore_ascii_case(&other.concept)
            && self.projection.eq_ignore_ascii_case(&other.projection)
            && match (&self.predicate, &other.predicate) {
                (None, None) => true,
                (Some(a), Some(b)) => a.eq_ignore_case(b),
                _ => false,
            }
    }

    /// Attributes referenced by the projection and predicate.
    fn attributes(&self) -> Vec<&str> {
        let mut out = vec![self.projection.as_str()];
        if let Some(pred) = &self.predicate {
            out.extend(pred.atoms().into_iter().map(|a| a.attr.as_str()));
        }
        out
    }
}

impl From<&SourcePlan> for EnginePlan {
    fn from(plan: &SourcePlan) -> Self {
        Self {
            concept: plan.local_concept.clone(),
            projection: plan.local_projection.clone(),
            predicate: plan.local_predicate.clone(),
        }
    }
}

pub fn parse_dialect(q: &DialectQuery) -> Result<EnginePlan, SyntaxError> {
    match q.dialect {
        Dialect::XPath => {
            let ast = parse_query(&q.text)?;
            Ok(EnginePlan {
                concept: ast.concept,
                projection: ast.projection,
                predicate: ast.predicate,
            })
        }
        Dialect::Sql => parse_sql(&q.text),
        Dialect::Oql => parse_oql(&q.text),
    }
}

/// `SELECT proj FROM table [WHERE pred]`
fn parse_sql(text: &str) -> Result<EnginePlan, SyntaxError> {
    let mut p = Parser::new(text)?;
    p.expect_keyword("select")?;
    let projection = p.ident("projected column")?;
    p.expect_keyword("from")?;
    let concept = p.ident("table name")?;
    let predicate = if p.eat_keyword("where") {
        Some(p.predicate(&bare_attr)?)
    } else {
        None
    };
    p.expect_end()?;
    Ok(EnginePlan {
        concept,
        projection,
        predicate,
    })
}

/// `SELECT v.proj FROM v IN Class [WHERE v.attr op lit ...]`
fn parse_oql(text: &str) -> Result<EnginePlan, SyntaxError> {
    let mut p = Parser::new(text)?;
    p.expect_keyword("select")?;
    let alias = p.ident("range variable")?;
    p.expect(&Token::Dot)?;
    let projection = p.ident("projected attribute")?;
    p.expect_keyword("from")?;
    let declared = p.ident("range variable")?;
    if !declared.eq_ignore_ascii_case(&alias) {
        return Err(p.error(format!(
            "range variable {declared} does not match {alias} used in SELECT"
        )));
    }
    p.expect_keyword("in")?;
    let concept = p.ident("class name")?;
    let predicate = if p.eat_keyword("where") {
        let qualified = |p: &mut Parser<'_>| -> Result<String, SyntaxError> {
            let var = p.ident("range variable")?;
            if !var.eq_ignore_ascii_case(&alias) {
                return Err(p.error(format!("unknown range variable {var}")));
            }
            p.expect(&Token::Dot)?;
            p.ident("attribute name")
        };
        Some(p.predicate(&qualified)?)
    } else {
        None
    };
    p.expect_end()?;
    Ok(EnginePlan {
        concept,
        projection,
        predicate,
    })
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

struct LocalData {
    /// Declared column set, when the format has one.
    header: Option<Vec<String>>,
    records: Vec<LocalRecord>,
}

fn format_error(path: &Path, message: impl Into<String>) -> EngineError {
    EngineError::DataFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn push_value(
    path: &Path,
    values: &mut Vec<(String, Literal)>,
    name: &str,
    value: Literal,
) -> Result<(), EngineError> {
    if values.iter().any(|(n, _)| n.eq_ignore_ascii_case(name)) {
        return Err(format_error(path, format!("duplicate attribute {name}")));
    }
    values.push((name.to_string(), value));
    Ok(())
}

fn load(dialect: Dialect, path: &Path) -> Result<LocalData, EngineError> {
    let text = fs::read_to_string(path).map_err(|source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match dialect {
        Dialect::XPath => load_xml(path, &text),
        Dialect::Sql => load_table(path, &text),
        Dialect::Oql => load_json(path, &text),
    }
}

fn load_xml(path: &Path, text: &str) -> Result<LocalData, EngineError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| format_error(path, e.to_string()))?;
    let mut records = Vec::new();
    for record in doc.root_element().children().filter(|n| n.is_element()) {
        let mut values = Vec::new();
        for field in record.children().filter(|n| n.is_element()) {
            if field.children().any(|n| n.is_element()) {
                return Err(format_error(
                    path,
                    format!("attribute element <{}> has nested elements", field.tag_name().name()),
                ));
            }
            let raw: String = field.children().filter_map(|n| n.text()).collect();
            push_value(path, &mut values, field.tag_name().name(), Literal::from_raw(&raw))?;
        }
        records.push(LocalRecord {
            concept: record.tag_name().name().to_string(),
            values,
        });
    }
    Ok(LocalData {
        header: None,
        records,
    })
}

fn load_table(path: &Path, text: &str) -> Result<LocalData, EngineError> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header: Vec<String> = match lines.next() {
        Some(h) if !h.is_empty() => h.split('\t').map(str::to_string).collect(),
        _ => return Err(format_error(path, "missing header line")),
    };
    for (i, name) in header.iter().enumerate() {
        if header[..i].iter().any(|n| n.eq_ignore_ascii_case(name)) {
            return Err(format_error(path, format!("duplicate column {name}")));
        }
    }
    let concept = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let body: Vec<&str> = lines.collect();
    // a final newline leaves one empty trailing segment
    let body = match body.split_last() {
        Some((&"", rest)) => rest,
        _ => &body[..],
    };
    let mut records = Vec::with_capacity(body.len());
    for (i, line) in body.iter().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(format_error(
                path,
                format!(
                    "line {}: expected {} fields, found {}",
                    i + 2,
                    header.len(),
                    fields.len()
                ),
            ));
        }
        let values = header
            .iter()
            .zip(fields)
            .map(|(name, raw)| (name.clone(), Literal::from_raw(raw)))
            .collect();
        records.push(LocalRecord {
            concept: concept.clone(),
            values,
        });
    }
    Ok(LocalData {
        header: Some(header),
        records,
    })
}

fn load_json(path: &Path, text: &str) -> Result<LocalData, EngineError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format_error(path, e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(format_error(path, "expected a JSON array of objects"));
    };
    let concept = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut records = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let serde_json::Value::Object(fields) = item else {
            return Err(format_error(path, format!("element {i} is not an object")));
        };
        let mut values = Vec::with_capacity(fields.len());
        for (name, v) in fields {
            let literal = match v {
                serde_json::Value::String(s) => Literal::Text(s),
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(v) => Literal::Int(v),
                    None => {
                        return Err(format_error(
                            path,
                            format!("element {i}: {name} = {n} is not a 64-bit integer"),
                        ))
                    }
                },
                other => {
                    return Err(format_error(
                        path,
                        format!("element {i}: {name} has unsupported value {other}"),
                    ))
                }
            };
            push_value(path, &mut values, &name, literal)?;
        }
        records.push(LocalRecord {
            concept: concept.clone(),
            values,
        });
    }
    Ok(LocalData {
        header: None,
        records,
    })
}

/// Parses the records of a data file in the given source format.
pub fn load_records(dialect: Dialect, path: &Path) -> Result<Vec<LocalRecord>, EngineError> {
    load(dialect, path).map(|d| d.records)
}

fn eval(pred: &Predicate, record: &LocalRecord) -> bool {
    match pred {
        Predicate::Atom(atom) => record
            .get(&atom.attr)
            .is_some_and(|v| v.compare(atom.op, &atom.literal)),
        Predicate::And(cs) => cs.iter().all(|c| eval(c, record)),
        Predicate::Or(cs) => cs.iter().any(|c| eval(c, record)),
    }
}

/// Runs a dialect query over a data file. Rows come back in file order.
/// The file is only read.
pub fn execute(q: &DialectQuery, data_location: &Path) -> Result<LocalResultSet, EngineError> {
    let plan = parse_dialect(q)?;
    let data = load(q.dialect, data_location)?;
    let unknown = |attribute: &str| EngineError::UnknownAttribute {
        path: data_location.to_path_buf(),
        attribute: attribute.to_string(),
    };
    for attr in plan.attributes() {
        if let Some(header) = &data.header {
            if !header.iter().any(|h| h.eq_ignore_ascii_case(attr)) {
                return Err(unknown(attr));
            }
        }
        if data.records.iter().any(|r| r.get(attr).is_none()) {
            return Err(unknown(attr));
        }
    }
    let rows = data
        .records
        .iter()
        .filter(|r| plan.predicate.as_ref().is_none_or(|p| eval(p, r)))
        .map(|r| vec![r.get(&plan.projection).expect("checked above").clone()])
        .collect();
    Ok(LocalResultSet {
        source_id: q.source_id.clone(),
        columns: vec![plan.projection],
        rows,
    })
}

//! Local query generators: render a [`SourcePlan`] as XPath, SQL or OQL text.
//!
//! Canonical forms:
//!
//! ```text
//! xpath  /Student[batchno="cs08" or did=13]/id
//! sql    SELECT regno FROM Students WHERE batch = 'cs08' OR dep_id = 13
//! oql    SELECT s.student_id FROM s IN Student WHERE s.bat_no = 'cs08'
//! ```
//!
//! Generation happens in two steps: [`emit_skeleton`] writes the
//! condition-free query and [`attach_predicate`] splices the conditions in.

use std::fmt;

use crate::planner::SourcePlan;
use crate::query::Predicate;
use crate::syntax::{render_predicate, RenderStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    XPath,
    Sql,
    Oql,
}

impl Dialect {
    pub const ALL: [Dialect; 3] = [Dialect::XPath, Dialect::Sql, Dialect::Oql];

    /// Section tag in the mapping document.
    pub fn from_section_tag(tag: &str) -> Option<Self> {
        match tag {
            "XML" => Some(Dialect::XPath),
            "SQL" => Some(Dialect::Sql),
            "OQL" => Some(Dialect::Oql),
            _ => None,
        }
    }

    pub fn section_tag(self) -> &'static str {
        match self {
            Dialect::XPath => "XML",
            Dialect::Sql => "SQL",
            Dialect::Oql => "OQL",
        }
    }

    /// Source id used when the mapping document does not name the source.
    pub fn default_source_id(self) -> &'static str {
        match self {
            Dialect::XPath => "xml",
            Dialect::Sql => "sql",
            Dialect::Oql => "oql",
        }
    }

    fn style(self) -> RenderStyle<'static> {
        match self {
            Dialect::XPath => RenderStyle {
                and: "and",
                or: "or",
                op_spacing: false,
                quote: '"',
                attr_prefix: "",
            },
            Dialect::Sql => RenderStyle {
                and: "AND",
                or: "OR",
                op_spacing: true,
                quote: '\'',
                attr_prefix: "",
            },
            Dialect::Oql => RenderStyle {
                and: "AND",
                or: "OR",
                op_spacing: true,
                quote: '\'',
                attr_prefix: OQL_ALIAS_PREFIX,
            },
        }
    }
}

pub(crate) const OQL_ALIAS: &str = "s";
const OQL_ALIAS_PREFIX: &str = "s.";

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::XPath => "xpath",
            Dialect::Sql => "sql",
            Dialect::Oql => "oql",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialectQuery {
    pub source_id: String,
    pub dialect: Dialect,
    pub text: String,
}

/// The query without any conditions, e.g. `SELECT regno FROM Students`.
pub fn emit_skeleton(concept: &str, projection: &str, dialect: Dialect) -> String {
    match dialect {
        Dialect::XPath => format!("/{concept}/{projection}"),
        Dialect::Sql => format!("SELECT {projection} FROM {concept}"),
        Dialect::Oql => format!("SELECT {OQL_ALIAS}.{projection} FROM {OQL_ALIAS} IN {concept}"),
    }
}

/// Value attacher: splices a rendered predicate into a skeleton produced by
/// [`emit_skeleton`] for the same dialect.
pub fn attach_predicate(skeleton: &str, predicate: &Predicate, dialect: Dialect) -> String {
    let rendered = render_predicate(predicate, &dialect.style());
    match dialect {
        Dialect::XPath => {
            // skeleton is /concept/projection; the filter goes on the concept step
            let split = skeleton.rfind('/').unwrap_or(skeleton.len());
            format!("{}[{rendered}]{}", &skeleton[..split], &skeleton[split..])
        }
        Dialect::Sql | Dialect::Oql => format!("{skeleton} WHERE {rendered}"),
    }
}

pub fn emit_query(plan: &SourcePlan, dialect: Dialect) -> DialectQuery {
    let skeleton = emit_skeleton(&plan.local_concept, &plan.local_projection, dialect);
    let text = match &plan.local_predicate {
        Some(pred) => attach_predicate(&skeleton, pred, dialect),
        None => skeleton,
    };
    DialectQuery {
        source_id: plan.source_id.clone(),
        dialect,
        text,
    }
}

//! Constraint-aware federated query mediator.
//!
//! A global query such as
//! `/student[batch_no="cs08" or department_id=13]/registration_number` is
//! validated against a global schema, rewritten per source using a mapping
//! document, pruned by each source's declared constraints, emitted as XPath,
//! SQL or OQL, evaluated by embedded engines and merged into one XML result
//! document.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod constraints;
pub mod dialects;
pub mod engines;
pub mod integrator;
pub mod mediator;
pub mod planner;
pub mod query;
pub(crate) mod syntax;
pub(crate) mod xml;

pub use catalog::{
    cross_check, merge_attribute_constraints, parse_global_schema, parse_mapping_document, CatalogError,
    Finding, GlobalSchema, Severity, SourceCatalog,
};
pub use config::{ConfigError, MediatorConfig};
pub use constraints::{CanonicalType, CompareOp, ConstraintTuple, Literal};
pub use dialects::{emit_query, Dialect, DialectQuery};
pub use engines::{execute, parse_dialect, EngineError};
pub use integrator::{emit_result_document, merge, normalize, GlobalResultTable, ResultDocument};
pub use mediator::{Mediator, MediatorError, SourceExecutor};
pub use planner::{plan, PlanError, PlanSet, SourcePlan};
pub use query::{parse_query, validate_query, Predicate, QueryAst};
pub use syntax::SyntaxError;

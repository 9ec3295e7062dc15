//! End-to-end pipeline: parse, validate, plan, emit, execute, integrate.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use thiserror::Error;

use crate::catalog::{
    cross_check, parse_global_schema, parse_mapping_document, CatalogError, Finding, GlobalSchema,
    SourceCatalog, SourceDef,
};
use crate::config::{ConfigError, MediatorConfig};
use crate::dialects::{emit_query, DialectQuery};
use crate::engines::{execute, EngineError, LocalResultSet};
use crate::integrator::{
    emit_result_document, merge, normalize, GlobalResultTable, IntegrationError, ResultDocument,
};
use crate::planner::{plan, PlanError, PlanSet};
use crate::query::{parse_query, validate_query, QueryAst, Violation};
use crate::syntax::SyntaxError;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("no data location configured")]
    NoDataLocation,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Debug, Error)]
pub enum MediatorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Catalog {
        path: PathBuf,
        #[source]
        source: CatalogError,
    },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid query: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{}", format_failures(.0))]
    Execution(Vec<(String, SourceError)>),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

fn format_failures(failures: &[(String, SourceError)]) -> String {
    failures
        .iter()
        .map(|(id, e)| format!("source {id} failed: {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl MediatorError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            MediatorError::Config(_) | MediatorError::Read { .. } | MediatorError::Catalog { .. } => 1,
            MediatorError::Syntax(_) | MediatorError::Invalid(_) => 2,
            MediatorError::Execution(_) | MediatorError::Integration(_) => 3,
            MediatorError::Plan(_) => 4,
        }
    }
}

/// Runs one dialect query against one source.
pub trait SourceExecutor: Sync {
    fn execute(&self, source: &SourceDef, query: &DialectQuery) -> Result<LocalResultSet, SourceError>;
}

/// Evaluates queries with the embedded engines over each source's data file.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedExecutor;

impl SourceExecutor for EmbeddedExecutor {
    fn execute(&self, source: &SourceDef, query: &DialectQuery) -> Result<LocalResultSet, SourceError> {
        let path = source.data_location.as_ref().ok_or(SourceError::NoDataLocation)?;
        Ok(execute(query, path)?)
    }
}

/// A query after planning and emission. `queries[i]` is the text sent to
/// `plan_set.plans[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepared {
    pub ast: QueryAst,
    pub plan_set: PlanSet,
    pub queries: Vec<DialectQuery>,
}

#[derive(Debug)]
pub struct QueryOutcome {
    pub table: GlobalResultTable,
    pub document: ResultDocument,
    /// Sources dropped under partial results.
    pub failures: Vec<(String, SourceError)>,
}

#[derive(Debug, Clone)]
pub struct Mediator {
    schema: GlobalSchema,
    catalog: SourceCatalog,
    strict_format: bool,
    partial_results: bool,
}

fn read(path: &Path) -> Result<String, MediatorError> {
    fs::read_to_string(path).map_err(|source| MediatorError::Read {
        path: path.to_path_buf(),
        source,
    })
}

impl Mediator {
    pub fn new(schema: GlobalSchema, catalog: SourceCatalog) -> Self {
        Self {
            schema,
            catalog,
            strict_format: false,
            partial_results: false,
        }
    }

    /// Loads both catalog documents and applies the config's overrides.
    /// Relative data locations in the mapping document resolve against the
    /// mapping document's directory.
    pub fn from_config(config: &MediatorConfig) -> Result<Self, MediatorError> {
        let schema_path = &config.global_schema_path;
        let schema = parse_global_schema(&read(schema_path)?).map_err(|source| MediatorError::Catalog {
            path: schema_path.clone(),
            source,
        })?;
        let mapping_path = &config.mapping_document_path;
        let mut catalog =
            parse_mapping_document(&read(mapping_path)?).map_err(|source| MediatorError::Catalog {
                path: mapping_path.clone(),
                source,
            })?;
        let base = mapping_path.parent().unwrap_or(Path::new(""));
        for source in &mut catalog.sources {
            if let Some(location) = &mut source.data_location {
                *location = base.join(&*location);
            }
        }
        config.apply_overrides(&mut catalog)?;
        Ok(Self::new(schema, catalog)
            .with_strict_format(config.strict_format)
            .with_partial_results(config.partial_results))
    }

    pub fn with_strict_format(mut self, on: bool) -> Self {
        self.strict_format = on;
        self
    }

    pub fn with_partial_results(mut self, on: bool) -> Self {
        self.partial_results = on;
        self
    }

    pub fn schema(&self) -> &GlobalSchema {
        &self.schema
    }

    pub fn catalog(&self) -> &SourceCatalog {
        &self.catalog
    }

    pub fn validate(&self) -> Vec<Finding> {
        cross_check(&self.schema, &self.catalog)
    }

    /// Parses, validates, plans and emits a global query.
    ///
    /// A concept missing from the global schema cannot be mapped by any
    /// source and is reported as a plan error.
    pub fn prepare(&self, text: &str) -> Result<Prepared, MediatorError> {
        let ast = parse_query(text)?;
        if self.schema.relation(&ast.concept).is_none() {
            return Err(PlanError::NoSources(format!(
                "concept {} is not in the global schema",
                ast.concept
            ))
            .into());
        }
        validate_query(&ast, &self.schema).map_err(MediatorError::Invalid)?;
        let plan_set = plan(&ast, &self.catalog, &self.schema, self.strict_format)?;
        let queries = plan_set
            .plans
            .iter()
            .map(|p| emit_query(p, p.dialect))
            .collect();
        Ok(Prepared {
            ast,
            plan_set,
            queries,
        })
    }

    /// Plan report, one block per source in catalog order.
    pub fn explain(&self, text: &str) -> Result<String, MediatorError> {
        Ok(render_explain(&self.prepare(text)?, &self.catalog))
    }

    pub fn query(&self, text: &str) -> Result<QueryOutcome, MediatorError> {
        self.query_with(text, &EmbeddedExecutor)
    }

    /// Runs the kept source queries concurrently and integrates the results.
    pub fn query_with(
        &self,
        text: &str,
        executor: &dyn SourceExecutor,
    ) -> Result<QueryOutcome, MediatorError> {
        let prepared = self.prepare(text)?;
        let concept = &prepared.ast.concept;
        let results: Vec<Result<GlobalResultTable, SourceError>> = thread::scope(|scope| {
            let handles: Vec<_> = prepared
                .plan_set
                .plans
                .iter()
                .zip(&prepared.queries)
                .map(|(plan, query)| {
                    let source = self
                        .catalog
                        .source(&plan.source_id)
                        .expect("plans name catalog sources");
                    scope.spawn(move || {
                        let local = executor.execute(source, query)?;
                        let mapping = source.concept(concept).expect("planned sources map the concept");
                        Ok(normalize(&local, mapping)?)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("source execution panicked"))
                .collect()
        });

        let mut parts = Vec::new();
        let mut failures = Vec::new();
        for (plan, result) in prepared.plan_set.plans.iter().zip(results) {
            match result {
                Ok(part) => parts.push(part),
                Err(e) => failures.push((plan.source_id.clone(), e)),
            }
        }
        if !failures.is_empty() && !self.partial_results {
            return Err(MediatorError::Execution(failures));
        }

        let relation = self.schema.relation(concept).expect("checked in prepare");
        let projection = relation
            .attribute(&prepared.ast.projection)
            .expect("validated projection")
            .name
            .clone();
        let mut table = merge(&parts)?;
        table.columns = vec![projection];
        let document = emit_result_document(&table, &relation.name);
        Ok(QueryOutcome {
            table,
            document,
            failures,
        })
    }
}

/// ```text
/// source=oql status=kept reason=ok
///   query: SELECT s.student_id FROM s IN Student WHERE s.bat_no = 'cs08'
///   dropped: (department_id = 13) rule lt12 rejects 13
/// ```
pub fn render_explain(prepared: &Prepared, catalog: &SourceCatalog) -> String {
    let mut out = String::new();
    for source in &catalog.sources {
        let kept = prepared
            .plan_set
            .plans
            .iter()
            .zip(&prepared.queries)
            .find(|(p, _)| p.source_id == source.id);
        if let Some((plan, query)) = kept {
            writeln!(out, "source={} status=kept reason=ok", source.id).unwrap();
            writeln!(out, "  query: {}", query.text).unwrap();
            for d in &plan.dropped {
                writeln!(out, "  dropped: {} {}", d.conjunct, d.reason).unwrap();
            }
        } else if let Some(e) = prepared
            .plan_set
            .excluded
            .iter()
            .find(|e| e.source_id == source.id)
        {
            writeln!(out, "source={} status=excluded reason={}", source.id, e.reason).unwrap();
            for d in &e.dropped {
                writeln!(out, "  dropped: {} {}", d.conjunct, d.reason).unwrap();
            }
        }
    }
    out
}

//! Global query generation: rewrite a validated global query into one plan
//! per capable source.
//!
//! The predicate is normalized to disjunctive form; each disjunct that a
//! source's constraints rule out (or that names an attribute the source does
//! not map) is dropped for that source, and a source left with no disjunct is
//! not queried at all. Replicated sources then collapse to one survivor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::catalog::{ConceptMapping, GlobalSchema, SourceCatalog, SourceDef};
use crate::constraints::{check_atom, ConstraintTuple};
use crate::dialects::Dialect;
use crate::query::{Atom, Predicate, QueryAst};

/// Upper bound on disjuncts produced by normalization.
pub const MAX_CONJUNCTS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no source can answer the query ({0})")]
    NoSources(String),
    #[error("predicate expands to more than {MAX_CONJUNCTS} disjuncts")]
    TooManyConjuncts,
}

/// One disjunct of a normalized predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Conjunct {
    pub atoms: Vec<Atom>,
}

impl Conjunct {
    pub fn to_predicate(&self) -> Predicate {
        Predicate::and(self.atoms.iter().cloned().map(Predicate::Atom).collect())
            .expect("conjuncts are non-empty")
    }
}

/// `(department_id = 13)`, atoms joined by `and`.
impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", atoms.join(" and "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedConjunct {
    /// In global names.
    pub conjunct: Conjunct,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePlan {
    pub source_id: String,
    pub dialect: Dialect,
    pub local_concept: String,
    pub local_projection: String,
    pub local_predicate: Option<Predicate>,
    pub dropped: Vec<DroppedConjunct>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExclusionReason {
    ConceptUnmapped,
    ProjectionUnmapped,
    NoSatisfiableDisjunct,
    ReplicaOf(String),
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionReason::ConceptUnmapped => f.write_str("concept unmapped"),
            ExclusionReason::ProjectionUnmapped => f.write_str("projection unmapped"),
            ExclusionReason::NoSatisfiableDisjunct => f.write_str("no satisfiable disjunct"),
            ExclusionReason::ReplicaOf(id) => write!(f, "replica-of:{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    pub source_id: String,
    pub reason: ExclusionReason,
    pub dropped: Vec<DroppedConjunct>,
}

/// Plans and exclusions, each in catalog order. Every source appears in
/// exactly one of the two lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanSet {
    pub plans: Vec<SourcePlan>,
    pub excluded: Vec<Exclusion>,
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

fn push_unique<T: PartialEq>(out: &mut Vec<T>, item: T) {
    if !out.contains(&item) {
        out.push(item);
    }
}

/// Distributes `And` over `Or`. Atom order inside a conjunct follows the
/// source order; repeated atoms and repeated conjuncts are removed.
pub fn to_dnf(p: &Predicate) -> Result<Vec<Conjunct>, PlanError> {
    let conjuncts = match p {
        Predicate::Atom(a) => vec![Conjunct { atoms: vec![a.clone()] }],
        Predicate::Or(children) => {
            let mut out = Vec::new();
            for child in children {
                for c in to_dnf(child)? {
                    push_unique(&mut out, c);
                }
            }
            out
        }
        Predicate::And(children) => {
            let mut acc = vec![Conjunct { atoms: Vec::new() }];
            for child in children {
                let rhs = to_dnf(child)?;
                if acc.len().saturating_mul(rhs.len()) > MAX_CONJUNCTS {
                    return Err(PlanError::TooManyConjuncts);
                }
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for left in &acc {
                    for right in &rhs {
                        let mut atoms = left.atoms.clone();
                        for a in &right.atoms {
                            push_unique(&mut atoms, a.clone());
                        }
                        push_unique(&mut next, Conjunct { atoms });
                    }
                }
                acc = next;
            }
            acc
        }
    };
    if conjuncts.len() > MAX_CONJUNCTS {
        return Err(PlanError::TooManyConjuncts);
    }
    Ok(conjuncts)
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pruning {
    /// Renamed to local attribute names.
    pub kept: Vec<Conjunct>,
    pub dropped: Vec<DroppedConjunct>,
}

/// Splits disjuncts into those a source can satisfy (renamed to local names)
/// and those its mapping or constraints rule out.
pub fn prune_for_source(dnf: &[Conjunct], mapping: &ConceptMapping, strict_format: bool) -> Pruning {
    let mut out = Pruning::default();
    'conjuncts: for conjunct in dnf {
        let mut local_atoms = Vec::with_capacity(conjunct.atoms.len());
        for atom in &conjunct.atoms {
            let Some(attr) = mapping.by_global(&atom.attr) else {
                out.dropped.push(DroppedConjunct {
                    conjunct: conjunct.clone(),
                    reason: "attribute unmapped".to_string(),
                });
                continue 'conjuncts;
            };
            if let Err(rejection) = check_atom(atom.op, &atom.literal, &attr.constraints(), strict_format) {
                out.dropped.push(DroppedConjunct {
                    conjunct: conjunct.clone(),
                    reason: rejection.to_string(),
                });
                continue 'conjuncts;
            }
            local_atoms.push(Atom::new(attr.local_name.clone(), atom.op, atom.literal.clone()));
        }
        out.kept.push(Conjunct { atoms: local_atoms });
    }
    out
}

// ---------------------------------------------------------------------------
// Replicas
// ---------------------------------------------------------------------------

/// Groups sources holding the same data for this query.
///
/// Sources sharing an explicit `replica_group` form one group. Remaining
/// sources that map the concept are grouped when their constraint tuples
/// for every queried attribute are identical. Groups come back in catalog
/// order of their first member; singletons are included.
pub fn detect_replicas(
    concept: &str,
    queried_attrs: &BTreeSet<String>,
    catalog: &SourceCatalog,
) -> Vec<BTreeSet<String>> {
    let mut groups: Vec<BTreeSet<String>> = Vec::new();
    let mut explicit: BTreeMap<&str, usize> = BTreeMap::new();
    let mut by_signature: Vec<(Vec<ConstraintTuple>, usize)> = Vec::new();

    for source in catalog.sources.iter().filter(|s| s.concept(concept).is_some()) {
        let mapping = source.concept(concept).expect("filtered");
        if let Some(group) = &source.replica_group {
            match explicit.get(group.as_str()) {
                Some(&idx) => {
                    groups[idx].insert(source.id.clone());
                }
                None => {
                    explicit.insert(group, groups.len());
                    groups.push(BTreeSet::from([source.id.clone()]));
                }
            }
            continue;
        }
        let signature: Option<Vec<ConstraintTuple>> = queried_attrs
            .iter()
            .map(|a| mapping.by_global(a).map(|m| m.constraints()))
            .collect();
        match signature {
            Some(sig) if !sig.is_empty() => {
                if let Some((_, idx)) = by_signature.iter().find(|(s, _)| *s == sig) {
                    groups[*idx].insert(source.id.clone());
                } else {
                    by_signature.push((sig, groups.len()));
                    groups.push(BTreeSet::from([source.id.clone()]));
                }
            }
            _ => groups.push(BTreeSet::from([source.id.clone()])),
        }
    }
    groups
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

enum Outcome {
    Plan(SourcePlan),
    Excluded(Exclusion),
}

fn plan_source(
    source: &SourceDef,
    ast: &QueryAst,
    dnf: Option<&[Conjunct]>,
    strict_format: bool,
) -> Outcome {
    let exclude = |reason, dropped| {
        Outcome::Excluded(Exclusion {
            source_id: source.id.clone(),
            reason,
            dropped,
        })
    };
    let Some(mapping) = source.concept(&ast.concept) else {
        return exclude(ExclusionReason::ConceptUnmapped, Vec::new());
    };
    let Some(projection) = mapping.by_global(&ast.projection) else {
        return exclude(ExclusionReason::ProjectionUnmapped, Vec::new());
    };
    let (local_predicate, dropped) = match dnf {
        None => (None, Vec::new()),
        Some(dnf) => {
            let pruning = prune_for_source(dnf, mapping, strict_format);
            if pruning.kept.is_empty() {
                return exclude(ExclusionReason::NoSatisfiableDisjunct, pruning.dropped);
            }
            let disjuncts = pruning.kept.iter().map(Conjunct::to_predicate).collect();
            (Predicate::or(disjuncts), pruning.dropped)
        }
    };
    Outcome::Plan(SourcePlan {
        source_id: source.id.clone(),
        dialect: source.dialect,
        local_concept: mapping.local_name.clone(),
        local_projection: projection.local_name.clone(),
        local_predicate,
        dropped,
    })
}

/// Builds the per-source plans for a validated query.
///
/// The schema is consulted only to resolve the concept's canonical
/// attribute names for replica detection.
pub fn plan(
    ast: &QueryAst,
    catalog: &SourceCatalog,
    schema: &GlobalSchema,
    strict_format: bool,
) -> Result<PlanSet, PlanError> {
    let dnf = ast.predicate.as_ref().map(to_dnf).transpose()?;
    let mut outcomes: Vec<Outcome> = catalog
        .sources
        .iter()
        .map(|s| plan_source(s, ast, dnf.as_deref(), strict_format))
        .collect();

    let relation = schema.relation(&ast.concept);
    let queried: BTreeSet<String> = ast
        .attributes()
        .into_iter()
        .map(|a| {
            relation
                .and_then(|r| r.attribute(a))
                .map_or_else(|| a.to_ascii_lowercase(), |g| g.name.to_ascii_lowercase())
        })
        .collect();
    for group in detect_replicas(&ast.concept, &queried, catalog) {
        let planned: Vec<usize> = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o, Outcome::Plan(p) if group.contains(&p.source_id)))
            .map(|(i, _)| i)
            .collect();
        let survivor = planned
            .iter()
            .filter_map(|&i| match &outcomes[i] {
                Outcome::Plan(p) => Some(p.source_id.clone()),
                Outcome::Excluded(_) => None,
            })
            .min();
        let Some(survivor) = survivor else { continue };
        for i in planned {
            let Outcome::Plan(p) = &outcomes[i] else { continue };
            if p.source_id != survivor {
                outcomes[i] = Outcome::Excluded(Exclusion {
                    source_id: p.source_id.clone(),
                    reason: ExclusionReason::ReplicaOf(survivor.clone()),
                    dropped: p.dropped.clone(),
                });
            }
        }
    }

    let mut plans = Vec::new();
    let mut excluded = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Plan(p) => plans.push(p),
            Outcome::Excluded(e) => excluded.push(e),
        }
    }
    if plans.is_empty() {
        let reasons: Vec<String> = excluded
            .iter()
            .map(|e| format!("{}: {}", e.source_id, e.reason))
            .collect();
        let detail = if reasons.is_empty() {
            "catalog is empty".to_string()
        } else {
            reasons.join("; ")
        };
        return Err(PlanError::NoSources(detail));
    }
    Ok(PlanSet { plans, excluded })
}

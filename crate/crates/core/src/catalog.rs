//! The two catalog documents: the extended global schema (`Globalmapping`)
//! and the ontology-extractor mapping document (`OntologyExtractorChanges`).
//!
//! Names are matched case-insensitively everywhere. Constraint tokens
//! `"null"` and `""` both mean "absent".

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::constraints::{
    parse_format, parse_rule, CanonicalType, ConstraintParseError, ConstraintTuple, FormatPattern,
    RuleSet,
};
use crate::dialects::Dialect;
use crate::xml::escape_attr;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("unexpected element <{found}> in {context}")]
    UnexpectedElement { found: String, context: String },
    #[error("<{element}> is missing attribute {attribute}")]
    MissingAttribute { element: String, attribute: String },
    #[error("duplicate {kind} {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("length {value:?} is not a positive integer")]
    InvalidLength { value: String },
    #[error("unknown type {0:?} (expected text, string, number or decimal)")]
    UnknownType(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintParseError),
    #[error("attribute {name}: {message}")]
    Inconsistent { name: String, message: String },
    #[error("relation {0} declares more than one primary key")]
    MultiplePrimaryKeys(String),
    #[error("no sources")]
    NoSources,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Primary,
    Foreign,
    None,
}

impl KeyRole {
    fn tag(self) -> &'static str {
        match self {
            KeyRole::Primary => "PKAttribute",
            KeyRole::Foreign => "FKAttribute",
            KeyRole::None => "attribute",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalAttribute {
    pub name: String,
    /// Type token as written, e.g. `decimal`.
    pub type_token: String,
    pub canonical_type: CanonicalType,
    pub length: Option<u32>,
    pub format: Option<FormatPattern>,
    pub rule: RuleSet,
    pub key_role: KeyRole,
}

impl GlobalAttribute {
    pub fn constraints(&self) -> ConstraintTuple {
        ConstraintTuple {
            canonical_type: self.canonical_type,
            length: self.length,
            format: self.format.clone(),
            rule: self.rule.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalRelation {
    pub name: String,
    pub attributes: Vec<GlobalAttribute>,
}

impl GlobalRelation {
    pub fn attribute(&self, name: &str) -> Option<&GlobalAttribute> {
        self.attributes
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GlobalSchema {
    pub relations: Vec<GlobalRelation>,
}

impl GlobalSchema {
    pub fn relation(&self, name: &str) -> Option<&GlobalRelation> {
        self.relations
            .iter()
            .find(|r| r.name.eq_ignore_ascii_case(name))
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\"?>\n<Globalmapping>\n");
        for relation in &self.relations {
            out.push_str(&format!("  <relation name=\"{}\">\n", escape_attr(&relation.name)));
            for a in &relation.attributes {
                out.push_str(&format!(
                    "    <{} name=\"{}\" type=\"{}\" length=\"{}\" format=\"{}\" rule=\"{}\"/>\n",
                    a.key_role.tag(),
                    escape_attr(&a.name),
                    escape_attr(&a.type_token),
                    length_token(a.length),
                    format_token(&a.format),
                    a.rule,
                ));
            }
            out.push_str("  </relation>\n");
        }
        out.push_str("</Globalmapping>\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeMapping {
    /// `CDM_name`.
    pub local_name: String,
    /// `ontology_name`.
    pub global_name: String,
    pub local_type: String,
    pub global_type: String,
    pub canonical_type: CanonicalType,
    pub length: Option<u32>,
    pub format: Option<FormatPattern>,
    pub rule: RuleSet,
}

impl AttributeMapping {
    pub fn constraints(&self) -> ConstraintTuple {
        ConstraintTuple {
            canonical_type: self.canonical_type,
            length: self.length,
            format: self.format.clone(),
            rule: self.rule.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptMapping {
    pub local_name: String,
    pub global_name: String,
    pub attributes: Vec<AttributeMapping>,
}

impl ConceptMapping {
    pub fn by_global(&self, global_name: &str) -> Option<&AttributeMapping> {
        self.attributes
            .iter()
            .find(|a| a.global_name.eq_ignore_ascii_case(global_name))
    }

    pub fn by_local(&self, local_name: &str) -> Option<&AttributeMapping> {
        self.attributes
            .iter()
            .find(|a| a.local_name.eq_ignore_ascii_case(local_name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDef {
    pub id: String,
    pub dialect: Dialect,
    pub data_location: Option<PathBuf>,
    pub replica_group: Option<String>,
    pub concepts: Vec<ConceptMapping>,
}

impl SourceDef {
    pub fn concept(&self, global_name: &str) -> Option<&ConceptMapping> {
        self.concepts
            .iter()
            .find(|c| c.global_name.eq_ignore_ascii_case(global_name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceCatalog {
    pub sources: Vec<SourceDef>,
}

impl SourceCatalog {
    pub fn source(&self, id: &str) -> Option<&SourceDef> {
        self.sources.iter().find(|s| s.id == id)
    }

    pub fn source_mut(&mut self, id: &str) -> Option<&mut SourceDef> {
        self.sources.iter_mut().find(|s| s.id == id)
    }

    /// Serializes to the mapping document form. Section attributes `id`,
    /// `data_location` and `replica_group` are written only when they differ
    /// from the defaults.
    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\"?>\n<OntologyExtractorChanges>\n");
        for source in &self.sources {
            let tag = source.dialect.section_tag();
            out.push('<');
            out.push_str(tag);
            if source.id != source.dialect.default_source_id() {
                out.push_str(&format!(" id=\"{}\"", escape_attr(&source.id)));
            }
            if let Some(location) = &source.data_location {
                out.push_str(&format!(
                    " data_location=\"{}\"",
                    escape_attr(&location.to_string_lossy())
                ));
            }
            if let Some(group) = &source.replica_group {
                out.push_str(&format!(" replica_group=\"{}\"", escape_attr(group)));
            }
            out.push_str(">\n");
            for concept in &source.concepts {
                out.push_str(&format!(
                    "  <Concept CDM_name=\"{}\" ontology_name=\"{}\">\n",
                    escape_attr(&concept.local_name),
                    escape_attr(&concept.global_name)
                ));
                for a in &concept.attributes {
                    out.push_str(&format!(
                        "    <attribute CDM_name=\"{}\" ontology_name=\"{}\" CDM_type=\"{}\" ontology_type=\"{}\" length=\"{}\" format=\"{}\" rule=\"{}\"/>\n",
                        escape_attr(&a.local_name),
                        escape_attr(&a.global_name),
                        escape_attr(&a.local_type),
                        escape_attr(&a.global_type),
                        length_token(a.length),
                        format_token(&a.format),
                        a.rule,
                    ));
                }
                out.push_str("  </Concept>\n");
            }
            out.push_str(&format!("</{tag}>\n"));
        }
        out.push_str("</OntologyExtractorChanges>\n");
        out
    }
}

fn length_token(length: Option<u32>) -> String {
    length.map_or_else(|| "null".to_string(), |l| l.to_string())
}

fn format_token(format: &Option<FormatPattern>) -> String {
    format
        .as_ref()
        .map_or_else(|| "null".to_string(), |f| f.to_string())
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

fn required<'a>(node: Node<'a, '_>, attribute: &str) -> Result<&'a str, CatalogError> {
    node.attribute(attribute)
        .map(str::trim)
        .ok_or_else(|| CatalogError::MissingAttribute {
            element: node.tag_name().name().to_string(),
            attribute: attribute.to_string(),
        })
}

fn optional<'a>(node: Node<'a, '_>, attribute: &str) -> &'a str {
    node.attribute(attribute).map_or("", str::trim)
}

fn parse_length(token: &str) -> Result<Option<u32>, CatalogError> {
    if token.is_empty() || token == "null" {
        return Ok(None);
    }
    match token.parse::<u32>() {
        Ok(v) if v > 0 => Ok(Some(v)),
        _ => Err(CatalogError::InvalidLength {
            value: token.to_string(),
        }),
    }
}

fn parse_type(token: &str) -> Result<CanonicalType, CatalogError> {
    CanonicalType::from_token(token).ok_or_else(|| CatalogError::UnknownType(token.to_string()))
}

fn unexpected(node: Node<'_, '_>, context: &str) -> CatalogError {
    CatalogError::UnexpectedElement {
        found: node.tag_name().name().to_string(),
        context: context.to_string(),
    }
}

/// Length, format and rule attributes, checked for format/length agreement.
fn parse_constraint_fields(
    node: Node<'_, '_>,
    name: &str,
    canonical_type: CanonicalType,
) -> Result<ConstraintTuple, CatalogError> {
    let tuple = ConstraintTuple {
        canonical_type,
        length: parse_length(optional(node, "length"))?,
        format: parse_format(optional(node, "format"))?,
        rule: parse_rule(optional(node, "rule"))?,
    };
    if let Some(message) = tuple.consistency_error() {
        return Err(CatalogError::Inconsistent {
            name: name.to_string(),
            message,
        });
    }
    Ok(tuple)
}

pub fn parse_global_schema(xml_text: &str) -> Result<GlobalSchema, CatalogError> {
    let doc = Document::parse(xml_text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "Globalmapping" {
        return Err(unexpected(root, "document root (expected Globalmapping)"));
    }
    let mut relations: Vec<GlobalRelation> = Vec::new();
    for rel in elements(root) {
        if rel.tag_name().name() != "relation" {
            return Err(unexpected(rel, "Globalmapping"));
        }
        let name = required(rel, "name")?.to_string();
        if relations.iter().any(|r| r.name.eq_ignore_ascii_case(&name)) {
            return Err(CatalogError::DuplicateName { kind: "relation", name });
        }
        let mut attributes: Vec<GlobalAttribute> = Vec::new();
        for node in elements(rel) {
            let key_role = match node.tag_name().name() {
                "PKAttribute" => KeyRole::Primary,
                "FKAttribute" => KeyRole::Foreign,
                "attribute" => KeyRole::None,
                _ => return Err(unexpected(node, &format!("relation {name}"))),
            };
            let attr_name = required(node, "name")?.to_string();
            if attributes.iter().any(|a| a.name.eq_ignore_ascii_case(&attr_name)) {
                return Err(CatalogError::DuplicateName {
                    kind: "attribute",
                    name: format!("{name}.{attr_name}"),
                });
            }
            if key_role == KeyRole::Primary && attributes.iter().any(|a| a.key_role == KeyRole::Primary) {
                return Err(CatalogError::MultiplePrimaryKeys(name));
            }
            let type_token = required(node, "type")?.to_string();
            let tuple = parse_constraint_fields(node, &attr_name, parse_type(&type_token)?)?;
            attributes.push(GlobalAttribute {
                name: attr_name,
                type_token,
                canonical_type: tuple.canonical_type,
                length: tuple.length,
                format: tuple.format,
                rule: tuple.rule,
                key_role,
            });
        }
        relations.push(GlobalRelation { name, attributes });
    }
    Ok(GlobalSchema { relations })
}

pub fn parse_mapping_document(xml_text: &str) -> Result<SourceCatalog, CatalogError> {
    let doc = Document::parse(xml_text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "OntologyExtractorChanges" {
        return Err(unexpected(root, "document root (expected OntologyExtractorChanges)"));
    }
    let mut sources: Vec<SourceDef> = Vec::new();
    for section in elements(root) {
        let dialect = Dialect::from_section_tag(section.tag_name().name())
            .ok_or_else(|| unexpected(section, "OntologyExtractorChanges (expected XML, SQL or OQL)"))?;
        let id = match optional(section, "id") {
            "" => dialect.default_source_id().to_string(),
            id => id.to_string(),
        };
        if sources.iter().any(|s| s.id == id) {
            return Err(CatalogError::DuplicateName { kind: "source id", name: id });
        }
        let data_location = match optional(section, "data_location") {
            "" => None,
            path => Some(PathBuf::from(path)),
        };
        let replica_group = match optional(section, "replica_group") {
            "" => None,
            group => Some(group.to_string()),
        };
        let mut concepts: Vec<ConceptMapping> = Vec::new();
        for concept in elements(section) {
            if concept.tag_name().name() != "Concept" {
                return Err(unexpected(concept, &format!("section {}", dialect.section_tag())));
            }
            let mapping = parse_concept(concept)?;
            if concepts
                .iter()
                .any(|c| c.global_name.eq_ignore_ascii_case(&mapping.global_name))
            {
                return Err(CatalogError::DuplicateName {
                    kind: "concept",
                    name: format!("{id}:{}", mapping.global_name),
                });
            }
            concepts.push(mapping);
        }
        sources.push(SourceDef {
            id,
            dialect,
            data_location,
            replica_group,
            concepts,
        });
    }
    if sources.is_empty() {
        return Err(CatalogError::NoSources);
    }
    Ok(SourceCatalog { sources })
}

fn parse_concept(node: Node<'_, '_>) -> Result<ConceptMapping, CatalogError> {
    let local_name = required(node, "CDM_name")?.to_string();
    let global_name = required(node, "ontology_name")?.to_string();
    let mut attributes: Vec<AttributeMapping> = Vec::new();
    for attr in elements(node) {
        if attr.tag_name().name() != "attribute" {
            return Err(unexpected(attr, &format!("Concept {local_name}")));
        }
        let a_local = required(attr, "CDM_name")?.to_string();
        let a_global = required(attr, "ontology_name")?.to_string();
        if attributes.iter().any(|a| a.global_name.eq_ignore_ascii_case(&a_global)) {
            return Err(CatalogError::DuplicateName {
                kind: "mapped attribute",
                name: format!("{global_name}.{a_global}"),
            });
        }
        let local_type = required(attr, "CDM_type")?.to_string();
        let global_type = required(attr, "ontology_type")?.to_string();
        parse_type(&global_type)?;
        let tuple = parse_constraint_fields(attr, &a_local, parse_type(&local_type)?)?;
        attributes.push(AttributeMapping {
            local_name: a_local,
            global_name: a_global,
            local_type,
            global_type,
            canonical_type: tuple.canonical_type,
            length: tuple.length,
            format: tuple.format,
            rule: tuple.rule,
        });
    }
    Ok(ConceptMapping {
        local_name,
        global_name,
        attributes,
    })
}

// ---------------------------------------------------------------------------
// Constraint merging and cross-checks
// ---------------------------------------------------------------------------

/// Resolves the constraints of several matched local elements into one
/// global tuple: the longest length, the more general type, the union of
/// rules, and the format only when every input declares the same one.
///
/// Returns `None` for an empty input.
pub fn merge_attribute_constraints(inputs: &[ConstraintTuple]) -> Option<ConstraintTuple> {
    let (first, rest) = inputs.split_first()?;
    let mut merged = first.clone();
    for t in rest {
        merged.canonical_type = merged.canonical_type.generalize(t.canonical_type);
        merged.length = match (merged.length, t.length) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        merged.rule = merged.rule.union(&t.rule);
    }
    let formats: Vec<&FormatPattern> = inputs.iter().filter_map(|t| t.format.as_ref()).collect();
    merged.format = match formats.split_first() {
        Some((f, others)) if others.iter().all(|o| o == f) => Some((*f).clone()),
        _ => None,
    };
    Some(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warn,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warn => "WARN",
            Severity::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warn(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warn,
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.severity, self.message)
    }
}

/// Checks a mapping document against the global schema.
///
/// Unresolved names, local lengths exceeding the global length, and merged
/// types or rules the global declaration cannot hold are errors. A declared
/// global format that the local formats do not agree on is only a warning.
pub fn cross_check(schema: &GlobalSchema, catalog: &SourceCatalog) -> Vec<Finding> {
    let mut findings = Vec::new();
    if catalog.sources.is_empty() {
        findings.push(Finding::error("no sources"));
        return findings;
    }
    if catalog.sources.iter().all(|s| s.concepts.is_empty()) {
        findings.push(Finding::error("no sources map any concept"));
    }
    // (relation, attribute) -> local tuples, in catalog order
    let mut tuples: BTreeMap<(String, String), Vec<(String, ConstraintTuple)>> = BTreeMap::new();
    for source in &catalog.sources {
        if source.concepts.is_empty() {
            findings.push(Finding::warn(format!("source {} maps no concepts", source.id)));
        }
        for concept in &source.concepts {
            let Some(relation) = schema.relation(&concept.global_name) else {
                findings.push(Finding::error(format!(
                    "source {}: concept {} maps to unknown relation {}",
                    source.id, concept.local_name, concept.global_name
                )));
                continue;
            };
            for a in &concept.attributes {
                let Some(global) = relation.attribute(&a.global_name) else {
                    findings.push(Finding::error(format!(
                        "source {}: {}.{} maps to unknown attribute {}.{}",
                        source.id, concept.local_name, a.local_name, relation.name, a.global_name
                    )));
                    continue;
                };
                if let (Some(local), Some(declared)) = (a.length, global.length) {
                    if local > declared {
                        findings.push(Finding::error(format!(
                            "source {}: {}.{} length {local} exceeds {}.{} length {declared}",
                            source.id, concept.local_name, a.local_name, relation.name, global.name
                        )));
                    }
                }
                tuples
                    .entry((relation.name.clone(), global.name.clone()))
                    .or_default()
                    .push((source.id.clone(), a.constraints()));
            }
        }
    }
    for relation in &schema.relations {
        for global in &relation.attributes {
            let Some(locals) = tuples.get(&(relation.name.clone(), global.name.clone())) else {
                continue;
            };
            let local_tuples: Vec<ConstraintTuple> = locals.iter().map(|(_, t)| t.clone()).collect();
            let Some(merged) = merge_attribute_constraints(&local_tuples) else {
                continue;
            };
            let qualified = format!("{}.{}", relation.name, global.name);
            if merged.canonical_type.generalize(global.canonical_type) != global.canonical_type {
                findings.push(Finding::error(format!(
                    "{qualified}: declared type {} cannot hold merged type {}",
                    global.canonical_type, merged.canonical_type
                )));
            }
            if let (Some(m), Some(d)) = (merged.length, global.length) {
                if m > d {
                    findings.push(Finding::error(format!(
                        "{qualified}: declared length {d} is shorter than merged length {m}"
                    )));
                }
            }
            if !merged.rule.admitted().is_subset_of(&global.rule.admitted()) {
                findings.push(Finding::error(format!(
                    "{qualified}: declared rule {} does not cover merged rule {}",
                    global.rule, merged.rule
                )));
            }
            if let Some(declared) = &global.format {
                if merged.format.as_ref() != Some(declared) {
                    let local_formats: Vec<String> = locals
                        .iter()
                        .map(|(id, t)| format!("{id}={}", format_token(&t.format)))
                        .collect();
                    findings.push(Finding::warn(format!(
                        "{qualified}: declared format {declared} differs from merged format {} (local formats {})",
                        format_token(&merged.format),
                        local_formats.join(", ")
                    )));
                }
            }
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{RuleAtom, RuleOp};

    const SCHEMA: &str = r#"<Globalmapping>
<relation name="Student">
  <PKAttribute name="registration_number" type="string" length="8" format="aa999999" rule="null"/>
  <FKAttribute name="department_id" type="decimal" length="null" format="null" rule="lt20"/>
</relation>
</Globalmapping>"#;

    #[test]
    fn parses_schema_attributes() {
        let schema = parse_global_schema(SCHEMA).unwrap();
        let student = schema.relation("student").unwrap();
        let reg = student.attribute("REGISTRATION_NUMBER").unwrap();
        assert_eq!(reg.key_role, KeyRole::Primary);
        assert_eq!(reg.length, Some(8));
        assert_eq!(reg.format.as_ref().unwrap().to_string(), "aa999999");
        assert!(reg.rule.is_unconstrained());
        let dep = student.attribute("department_id").unwrap();
        assert_eq!(dep.key_role, KeyRole::Foreign);
        assert_eq!(dep.canonical_type, CanonicalType::Number);
        assert_eq!(dep.rule.atoms(), &[RuleAtom::new(RuleOp::Lt, 20)]);
    }

    #[test]
    fn empty_schema() {
        assert!(parse_global_schema("<Globalmapping/>").unwrap().relations.is_empty());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse_global_schema("<Globalmapping>"), Err(CatalogError::Xml(_))));
        assert!(matches!(
            parse_global_schema("<Globalmapping><table name=\"x\"/></Globalmapping>"),
            Err(CatalogError::UnexpectedElement { .. })
        ));
        let dup = r#"<Globalmapping><relation name="A"/><relation name="a"/></Globalmapping>"#;
        assert!(matches!(parse_global_schema(dup), Err(CatalogError::DuplicateName { .. })));
        let bad_len = r#"<Globalmapping><relation name="A"><attribute name="x" type="string" length="eight"/></relation></Globalmapping>"#;
        assert!(matches!(parse_global_schema(bad_len), Err(CatalogError::InvalidLength { .. })));
        let bad_rule = r#"<Globalmapping><relation name="A"><attribute name="x" type="decimal" rule="lq3"/></relation></Globalmapping>"#;
        assert!(matches!(parse_global_schema(bad_rule), Err(CatalogError::Constraint(_))));
        let mismatch = r#"<Globalmapping><relation name="A"><attribute name="x" type="string" length="3" format="aa"/></relation></Globalmapping>"#;
        assert!(matches!(parse_global_schema(mismatch), Err(CatalogError::Inconsistent { .. })));
        let two_pk = r#"<Globalmapping><relation name="A"><PKAttribute name="x" type="string"/><PKAttribute name="y" type="string"/></relation></Globalmapping>"#;
        assert!(matches!(parse_global_schema(two_pk), Err(CatalogError::MultiplePrimaryKeys(_))));
    }

    #[test]
    fn mapping_errors() {
        assert!(matches!(
            parse_mapping_document("<OntologyExtractorChanges/>"),
            Err(CatalogError::NoSources)
        ));
        assert!(matches!(
            parse_mapping_document("<OntologyExtractorChanges><CSV/></OntologyExtractorChanges>"),
            Err(CatalogError::UnexpectedElement { .. })
        ));
        assert!(matches!(
            parse_mapping_document("<OntologyExtractorChanges><SQL/><SQL/></OntologyExtractorChanges>"),
            Err(CatalogError::DuplicateName { .. })
        ));
    }

    #[test]
    fn section_attributes_override_defaults() {
        let doc = r#"<OntologyExtractorChanges><SQL id="a" data_location="a.tsv" replica_group="r1"/><SQL id="b"/></OntologyExtractorChanges>"#;
        let catalog = parse_mapping_document(doc).unwrap();
        assert_eq!(catalog.sources[0].id, "a");
        assert_eq!(catalog.sources[0].replica_group.as_deref(), Some("r1"));
        assert_eq!(catalog.sources[0].data_location, Some(PathBuf::from("a.tsv")));
        assert_eq!(parse_mapping_document(&catalog.to_xml()).unwrap(), catalog);
    }

    fn tuple(ty: CanonicalType, length: Option<u32>, format: &str, rule: &str) -> ConstraintTuple {
        ConstraintTuple {
            canonical_type: ty,
            length,
            format: parse_format(format).unwrap(),
            rule: parse_rule(rule).unwrap(),
        }
    }

    #[test]
    fn merge_takes_general_type_max_length_rule_union() {
        let merged = merge_attribute_constraints(&[
            tuple(CanonicalType::Number, None, "99", "lt12"),
            tuple(CanonicalType::String, Some(3), "99", "eq20"),
            tuple(CanonicalType::Number, Some(5), "null", "gt40"),
        ])
        .unwrap();
        assert_eq!(merged.canonical_type, CanonicalType::String);
        assert_eq!(merged.length, Some(5));
        assert_eq!(merged.rule.to_string(), "lt12|eq20|gt40");
        assert_eq!(merged.format.unwrap().to_string(), "99");
        assert!(merge_attribute_constraints(&[]).is_none());
    }

    #[test]
    fn merge_drops_conflicting_formats_and_absorbs_unconstrained_rules() {
        let merged = merge_attribute_constraints(&[
            tuple(CanonicalType::String, Some(4), "aaaa", "null"),
            tuple(CanonicalType::String, Some(4), "aa99", "lt3"),
        ])
        .unwrap();
        assert_eq!(merged.format, None);
        assert!(merged.rule.is_unconstrained());
    }
}

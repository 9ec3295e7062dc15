//! Shared fixtures, random catalog generation and brute-force oracles.
//!
//! The oracles here evaluate predicates, rules, lengths and formats directly
//! from their definitions and never call into the crate's evaluators.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mediator::constraints::CompareOp;
use mediator::query::{Atom, Predicate};
use mediator::{Dialect, Literal};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const CASE_STUDY_QUERY: &str =
    r#"/student[batch_no="cs08" or department_id = 13]/registration_number"#;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    fs::read_to_string(fixture(rel)).unwrap()
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mediator").chain(args.iter().copied());
    let code = mediator::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Rows of a result document as (value, provenance) pairs, in document order.
pub fn document_rows(doc: &str) -> Vec<(String, BTreeSet<String>)> {
    let parsed = roxmltree::Document::parse(doc).expect("result document is well-formed");
    parsed
        .root_element()
        .children()
        .filter(|n| n.is_element())
        .map(|row| {
            let sources = row
                .attribute("sources")
                .unwrap_or("")
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            let value = row
                .children()
                .find(|n| n.is_element())
                .and_then(|c| c.text())
                .unwrap_or("")
                .to_string();
            (value, sources)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Constraint oracles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl RuleKind {
    pub const ALL: [RuleKind; 5] = [RuleKind::Lt, RuleKind::Le, RuleKind::Gt, RuleKind::Ge, RuleKind::Eq];

    pub fn token(self) -> &'static str {
        match self {
            RuleKind::Lt => "lt",
            RuleKind::Le => "le",
            RuleKind::Gt => "gt",
            RuleKind::Ge => "ge",
            RuleKind::Eq => "eq",
        }
    }

    pub fn holds(self, v: i64, bound: i64) -> bool {
        match self {
            RuleKind::Lt => v < bound,
            RuleKind::Le => v <= bound,
            RuleKind::Gt => v > bound,
            RuleKind::Ge => v >= bound,
            RuleKind::Eq => v == bound,
        }
    }
}

/// A validation rule as a list of alternatives; empty means unconstrained.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleRule(pub Vec<(RuleKind, i64)>);

impl OracleRule {
    pub fn admits(&self, v: i64) -> bool {
        self.0.is_empty() || self.0.iter().any(|(k, b)| k.holds(v, *b))
    }

    pub fn token(&self) -> String {
        if self.0.is_empty() {
            return "null".into();
        }
        self.0
            .iter()
            .map(|(k, b)| format!("{}{b}", k.token()))
            .collect::<Vec<_>>()
            .join("|")
    }
}

pub fn oracle_format_ok(format: &str, rendered: &str) -> bool {
    rendered.chars().count() == format.chars().count()
        && rendered.chars().zip(format.chars()).all(|(c, f)| match f {
            'a' => c.is_ascii_alphabetic(),
            '9' => c.is_ascii_digit(),
            _ => false,
        })
}

pub fn oracle_compare(lhs: &Literal, op: CompareOp, rhs: &Literal) -> bool {
    use std::cmp::Ordering::*;
    let ord = match (lhs, rhs) {
        (Literal::Int(a), Literal::Int(b)) => a.cmp(b),
        (Literal::Text(a), Literal::Text(b)) => a.as_bytes().cmp(b.as_bytes()),
        _ => return false,
    };
    match op {
        CompareOp::Eq => ord == Equal,
        CompareOp::Ne => ord != Equal,
        CompareOp::Lt => ord == Less,
        CompareOp::Le => ord != Greater,
        CompareOp::Gt => ord == Greater,
        CompareOp::Ge => ord != Less,
    }
}

/// Evaluates a global predicate over a record keyed by lowercase global
/// attribute name. A missing attribute makes its atoms false.
pub fn oracle_eval(pred: &Predicate, record: &BTreeMap<String, Literal>) -> bool {
    match pred {
        Predicate::Atom(a) => record
            .get(&a.attr.to_ascii_lowercase())
            .is_some_and(|v| oracle_compare(v, a.op, &a.literal)),
        Predicate::And(cs) => cs.iter().all(|c| oracle_eval(c, record)),
        Predicate::Or(cs) => cs.iter().any(|c| oracle_eval(c, record)),
    }
}

// ---------------------------------------------------------------------------
// Random catalogs
// ---------------------------------------------------------------------------

pub const INT_DOMAIN: std::ops::RangeInclusive<i64> = -64..=64;
pub const TEXT_ALPHABET: [char; 5] = ['a', 'c', 's', '0', '8'];
const LETTERS: [char; 3] = ['a', 'c', 's'];
const DIGITS: [char; 2] = ['0', '8'];
pub const KEY_POOL: [&str; 8] = ["ka", "kb", "kc", "kd", "ke", "kf", "kg", "kh"];

/// Global attributes of the random concept: `k` (text key, the
/// projection), `x` and `y` (numbers), `c` (text).
pub const GLOBAL_ATTRS: [(&str, bool); 4] = [("k", false), ("x", true), ("y", true), ("c", false)];

#[derive(Debug, Clone)]
pub struct RandomAttr {
    pub global: String,
    pub local: String,
    pub numeric: bool,
    pub length: Option<u32>,
    pub format: Option<String>,
    pub rule: OracleRule,
}

impl RandomAttr {
    /// Whether `value` respects this attribute's declared constraints.
    pub fn respects(&self, value: &Literal, strict_format: bool) -> bool {
        match value {
            Literal::Int(v) => {
                self.numeric
                    && self.rule.admits(*v)
                    && (!strict_format
                        || self
                            .format
                            .as_ref()
                            .is_none_or(|f| oracle_format_ok(f, &v.unsigned_abs().to_string())))
            }
            Literal::Text(s) => {
                !self.numeric
                    && self.length.is_none_or(|l| s.chars().count() <= l as usize)
                    && (!strict_format || self.format.as_ref().is_none_or(|f| oracle_format_ok(f, s)))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    pub id: String,
    pub dialect: Dialect,
    pub concept: String,
    pub attrs: Vec<RandomAttr>,
    /// Records keyed by lowercase global name.
    pub records: Vec<BTreeMap<String, Literal>>,
}

impl RandomSource {
    pub fn attr(&self, global: &str) -> Option<&RandomAttr> {
        self.attrs.iter().find(|a| a.global.eq_ignore_ascii_case(global))
    }
}

#[derive(Debug, Clone)]
pub struct RandomCatalog {
    pub sources: Vec<RandomSource>,
}

pub fn random_rule(rng: &mut StdRng) -> OracleRule {
    if rng.random_bool(0.25) {
        return OracleRule::default();
    }
    let n = rng.random_range(1..=2);
    OracleRule(
        (0..n)
            .map(|_| (*RuleKind::ALL.choose(rng).unwrap(), rng.random_range(0..=31)))
            .collect(),
    )
}

fn random_int_format(rng: &mut StdRng) -> Option<String> {
    match rng.random_range(0..6) {
        0 => Some("9".into()),
        1 => Some("99".into()),
        _ => None,
    }
}

fn random_text_format(rng: &mut StdRng) -> Option<String> {
    if rng.random_bool(0.7) {
        return None;
    }
    let len = rng.random_range(1..=4);
    // text values always start with a letter so they never lex as integers
    let mut f = String::from("a");
    for _ in 1..len {
        f.push(if rng.random_bool(0.5) { 'a' } else { '9' });
    }
    Some(f)
}

fn random_local_name(rng: &mut StdRng, global: &str, idx: usize) -> String {
    match rng.random_range(0..3) {
        0 => global.to_string(),
        1 => format!("{global}_{idx}"),
        _ => format!("{}{idx}", global.to_ascii_uppercase()),
    }
}

/// Constraint-respecting integers in the oracle domain.
pub fn admitted_ints(attr: &RandomAttr, strict_format: bool) -> Vec<i64> {
    INT_DOMAIN
        .filter(|v| attr.respects(&Literal::Int(*v), strict_format))
        .collect()
}

/// All strings over the test alphabet with length in `1..=max_len`.
pub fn all_strings(max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &layer {
            for c in TEXT_ALPHABET {
                let mut s = prefix.clone();
                s.push(c);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn random_text_value(rng: &mut StdRng, attr: &RandomAttr) -> String {
    if let Some(f) = &attr.format {
        return f
            .chars()
            .map(|c| {
                if c == 'a' {
                    *LETTERS.choose(rng).unwrap()
                } else {
                    *DIGITS.choose(rng).unwrap()
                }
            })
            .collect();
    }
    let max = attr.length.map_or(4, |l| l.min(4) as usize);
    let len = rng.random_range(1..=max);
    let mut s = String::new();
    s.push(*LETTERS.choose(rng).unwrap());
    for _ in 1..len {
        s.push(*TEXT_ALPHABET.choose(rng).unwrap());
    }
    s
}

/// A catalog of 1..=4 sources over concept `Item`, with records that
/// respect every declared constraint (formats included).
pub fn random_catalog(rng: &mut StdRng, max_records: usize) -> RandomCatalog {
    let n = rng.random_range(1..=4);
    let mut sources = Vec::with_capacity(n);
    for i in 0..n {
        let dialect = *Dialect::ALL.choose(rng).unwrap();
        let concept = ["Item", "items", "ITEM_T"].choose(rng).unwrap().to_string();
        let mut attrs = Vec::new();
        for (global, numeric) in GLOBAL_ATTRS {
            // the projection is always mapped; other attributes sometimes not
            if global != "k" && rng.random_bool(0.1) {
                continue;
            }
            let mut attr = RandomAttr {
                global: global.to_string(),
                local: random_local_name(rng, global, i),
                numeric,
                length: None,
                format: None,
                rule: OracleRule::default(),
            };
            if numeric {
                attr.rule = random_rule(rng);
                attr.format = random_int_format(rng);
                if admitted_ints(&attr, true).is_empty() {
                    attr.format = None;
                }
                if admitted_ints(&attr, true).is_empty() {
                    attr.rule = OracleRule::default();
                }
            } else if global == "c" {
                attr.format = random_text_format(rng);
                attr.length = match &attr.format {
                    Some(f) => Some(f.len() as u32),
                    None if rng.random_bool(0.6) => Some(rng.random_range(1..=4)),
                    None => None,
                };
            }
            attrs.push(attr);
        }
        let mut source = RandomSource {
            id: format!("s{i}"),
            dialect,
            concept,
            attrs,
            records: Vec::new(),
        };
        let count = rng.random_range(0..=max_records);
        for _ in 0..count {
            let mut record = BTreeMap::new();
            for attr in &source.attrs {
                let value = if attr.global == "k" {
                    Literal::text(*KEY_POOL.choose(rng).unwrap())
                } else if attr.numeric {
                    Literal::Int(*admitted_ints(attr, true).choose(rng).unwrap())
                } else {
                    Literal::text(random_text_value(rng, attr))
                };
                debug_assert!(attr.respects(&value, true));
                record.insert(attr.global.clone(), value);
            }
            source.records.push(record);
        }
        sources.push(source);
    }
    RandomCatalog { sources }
}

impl RandomCatalog {
    pub fn schema_xml() -> String {
        let mut out = String::from("<Globalmapping>\n<relation name=\"Item\">\n");
        for (name, numeric) in GLOBAL_ATTRS {
            let tag = if name == "k" { "PKAttribute" } else { "attribute" };
            let ty = if numeric { "decimal" } else { "string" };
            writeln!(
                out,
                "  <{tag} name=\"{name}\" type=\"{ty}\" length=\"null\" format=\"null\" rule=\"null\"/>"
            )
            .unwrap();
        }
        out.push_str("</relation>\n</Globalmapping>\n");
        out
    }

    pub fn mapping_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\"?>\n<OntologyExtractorChanges>\n");
        for s in &self.sources {
            let tag = s.dialect.section_tag();
            writeln!(out, "<{tag} id=\"{}\" data_location=\"{}\">", s.id, data_file_name(s)).unwrap();
            writeln!(out, "<Concept CDM_name=\"{}\" ontology_name=\"Item\">", s.concept).unwrap();
            for a in &s.attrs {
                let (lt, gt) = if a.numeric {
                    ("number", "decimal")
                } else {
                    ("text", "string")
                };
                writeln!(
                    out,
                    "<attribute CDM_name=\"{}\" ontology_name=\"{}\" CDM_type=\"{lt}\" ontology_type=\"{gt}\" length=\"{}\" format=\"{}\" rule=\"{}\"/>",
                    a.local,
                    a.global,
                    a.length.map_or("null".to_string(), |l| l.to_string()),
                    a.format.as_deref().unwrap_or("null"),
                    a.rule.token()
                )
                .unwrap();
            }
            writeln!(out, "</Concept>\n</{tag}>").unwrap();
        }
        out.push_str("</OntologyExtractorChanges>\n");
        out
    }

    /// Writes schema, mapping, config and data files; returns the config path.
    pub fn write_to(&self, dir: &Path, strict_format: bool) -> PathBuf {
        fs::write(dir.join("schema.xml"), Self::schema_xml()).unwrap();
        fs::write(dir.join("mapping.xml"), self.mapping_xml()).unwrap();
        for s in &self.sources {
            fs::write(dir.join(data_file_name(s)), data_file(s)).unwrap();
        }
        let config = dir.join("mediator.conf");
        fs::write(
            &config,
            format!("global_schema = schema.xml\nmapping_document = mapping.xml\nstrict_format = {strict_format}\n"),
        )
        .unwrap();
        config
    }
}

fn data_file_name(s: &RandomSource) -> String {
    let ext = match s.dialect {
        Dialect::XPath => "xml",
        Dialect::Sql => "tsv",
        Dialect::Oql => "json",
    };
    format!("{}.{ext}", s.id)
}

fn local_record(s: &RandomSource, r: &BTreeMap<String, Literal>) -> Vec<(String, Literal)> {
    s.attrs
        .iter()
        .map(|a| (a.local.clone(), r[&a.global].clone()))
        .collect()
}

pub fn data_file(s: &RandomSource) -> String {
    let mut out = String::new();
    match s.dialect {
        Dialect::XPath => {
            out.push_str("<data>\n");
            for r in &s.records {
                write!(out, "<{}>", s.concept).unwrap();
                for (name, v) in local_record(s, r) {
                    write!(out, "<{name}>{}</{name}>", v.render()).unwrap();
                }
                writeln!(out, "</{}>", s.concept).unwrap();
            }
            out.push_str("</data>\n");
        }
        Dialect::Sql => {
            let header: Vec<&str> = s.attrs.iter().map(|a| a.local.as_str()).collect();
            writeln!(out, "{}", header.join("\t")).unwrap();
            for r in &s.records {
                let fields: Vec<String> = local_record(s, r).iter().map(|(_, v)| v.render()).collect();
                writeln!(out, "{}", fields.join("\t")).unwrap();
            }
        }
        Dialect::Oql => {
            let items: Vec<serde_json::Value> = s
                .records
                .iter()
                .map(|r| {
                    let obj: serde_json::Map<String, serde_json::Value> = local_record(s, r)
                        .into_iter()
                        .map(|(n, v)| {
                            let json = match v {
                                Literal::Int(i) => serde_json::Value::from(i),
                                Literal::Text(t) => serde_json::Value::from(t),
                            };
                            (n, json)
                        })
                        .collect();
                    serde_json::Value::Object(obj)
                })
                .collect();
            out = serde_json::to_string_pretty(&items).unwrap();
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random predicates
// ---------------------------------------------------------------------------

pub const OPS: [CompareOp; 6] = [
    CompareOp::Eq,
    CompareOp::Ne,
    CompareOp::Lt,
    CompareOp::Le,
    CompareOp::Gt,
    CompareOp::Ge,
];

pub fn random_text(rng: &mut StdRng, min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| *TEXT_ALPHABET.choose(rng).unwrap()).collect()
}

/// A type-correct atom over the random concept's attributes.
pub fn random_atom(rng: &mut StdRng, attrs: &[&str]) -> Atom {
    let attr = *attrs.choose(rng).unwrap();
    let op = *OPS.choose(rng).unwrap();
    let literal = match attr {
        "x" | "y" => Literal::Int(rng.random_range(-40..=40)),
        "k" => Literal::text(*KEY_POOL.choose(rng).unwrap()),
        _ => {
            let mut s = String::new();
            s.push(*LETTERS.choose(rng).unwrap());
            s.push_str(&random_text(rng, 0, 4));
            Literal::Text(s)
        }
    };
    let name = if rng.random_bool(0.2) {
        attr.to_ascii_uppercase()
    } else {
        attr.to_string()
    };
    Atom::new(name, op, literal)
}

pub fn random_predicate(rng: &mut StdRng, depth: u32) -> Predicate {
    if depth == 0 || rng.random_bool(0.35) {
        return Predicate::Atom(random_atom(rng, &["k", "x", "y", "c"]));
    }
    let n = rng.random_range(2..=3);
    let children = (0..n).map(|_| random_predicate(rng, depth - 1)).collect();
    if rng.random_bool(0.5) {
        Predicate::And(children)
    } else {
        Predicate::Or(children)
    }
}

/// Renders a predicate in global query syntax, parenthesizing every
/// compound child.
pub fn render_global(pred: &Predicate) -> String {
    let child = |p: &Predicate| match p {
        Predicate::Atom(_) => render_global(p),
        _ => format!("({})", render_global(p)),
    };
    match pred {
        Predicate::Atom(a) => {
            let lit = match &a.literal {
                Literal::Int(v) => v.to_string(),
                Literal::Text(s) => format!("\"{s}\""),
            };
            format!("{} {} {lit}", a.attr, a.op.symbol())
        }
        Predicate::And(cs) => cs.iter().map(child).collect::<Vec<_>>().join(" and "),
        Predicate::Or(cs) => cs.iter().map(child).collect::<Vec<_>>().join(" or "),
    }
}

/// Brute-force answer: projected `k` values with the sources that hold them.
pub fn oracle_answer<'a>(
    sources: impl IntoIterator<Item = &'a RandomSource>,
    pred: Option<&Predicate>,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in sources {
        for r in &s.records {
            if pred.is_none_or(|p| oracle_eval(p, r)) {
                out.entry(r["k"].render()).or_default().insert(s.id.clone());
            }
        }
    }
    out
}

/// Whether some constraint-respecting value of `attr` satisfies every atom.
/// Integers range over the oracle domain, text over the test alphabet up to
/// length 4 plus the atoms' own literals.
pub fn attribute_witness(attr: &RandomAttr, atoms: &[&Atom], strict_format: bool) -> bool {
    attribute_witness_in(attr, atoms, strict_format, INT_DOMAIN)
}

pub fn attribute_witness_in(
    attr: &RandomAttr,
    atoms: &[&Atom],
    strict_format: bool,
    ints: std::ops::RangeInclusive<i64>,
) -> bool {
    let candidates: Vec<Literal> = if attr.numeric {
        ints.map(Literal::Int).collect()
    } else {
        let mut c: Vec<Literal> = all_strings(4).into_iter().map(Literal::Text).collect();
        c.extend(atoms.iter().map(|a| a.literal.clone()));
        c
    };
    candidates.iter().any(|v| {
        attr.respects(v, strict_format) && atoms.iter().all(|a| oracle_compare(v, a.op, &a.literal))
    })
}

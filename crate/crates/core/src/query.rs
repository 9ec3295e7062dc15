//! The global query language: a single-concept, single-projection XPath
//! subset such as `/student[batch_no="cs08" or department_id = 13]/registration_number`.
//!
//! Besides parsing and validation this module implements the condition
//! splitter: a flat predicate chain is taken apart into [`ConditionObject`]s
//! and a [`SkeletonQuery`], and [`attach_conditions`] reassembles them.

use std::fmt;

use thiserror::Error;

use crate::catalog::GlobalSchema;
use crate::constraints::{check_atom, CompareOp, Literal};
use crate::syntax::{bare_attr, render_predicate, Parser, RenderStyle, SyntaxError, Token};

/// `attr <op> literal`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub attr: String,
    pub op: CompareOp,
    pub literal: Literal,
}

impl Atom {
    pub fn new(attr: impl Into<String>, op: CompareOp, literal: Literal) -> Self {
        Self {
            attr: attr.into(),
            op,
            literal,
        }
    }
}

/// `department_id = 13`, text quoted with `"`.
impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.attr, self.op, self.literal)
    }
}

/// Predicate tree. `And`/`Or` always hold at least two children.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Atom(Atom),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    /// Atoms in source order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Predicate::Atom(a) => out.push(a),
            Predicate::And(cs) | Predicate::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    /// Same tree shape and literals, attribute names compared case-insensitively.
    pub fn eq_ignore_case(&self, other: &Predicate) -> bool {
        match (self, other) {
            (Predicate::Atom(a), Predicate::Atom(b)) => {
                a.attr.eq_ignore_ascii_case(&b.attr) && a.op == b.op && a.literal == b.literal
            }
            (Predicate::And(a), Predicate::And(b)) | (Predicate::Or(a), Predicate::Or(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_ignore_case(y))
            }
            _ => false,
        }
    }

    /// Builds `Or`/`And` over `children`, collapsing a single child.
    pub fn or(mut children: Vec<Predicate>) -> Option<Predicate> {
        match children.len() {
            0 => None,
            1 => children.pop(),
            _ => Some(Predicate::Or(children)),
        }
    }

    pub fn and(mut children: Vec<Predicate>) -> Option<Predicate> {
        match children.len() {
            0 => None,
            1 => children.pop(),
            _ => Some(Predicate::And(children)),
        }
    }
}

pub(crate) const QUERY_STYLE: RenderStyle<'static> = RenderStyle {
    and: "and",
    or: "or",
    op_spacing: false,
    quote: '"',
    attr_prefix: "",
};

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_predicate(self, &QUERY_STYLE))
    }
}

/// Parsed global query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub concept: String,
    pub predicate: Option<Predicate>,
    pub projection: String,
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}", self.concept)?;
        if let Some(pred) = &self.predicate {
            write!(f, "[{pred}]")?;
        }
        write!(f, "/{}", self.projection)
    }
}

impl QueryAst {
    /// Attribute names the query touches: the projection, then atom attributes.
    pub fn attributes(&self) -> Vec<&str> {
        let mut out = vec![self.projection.as_str()];
        if let Some(pred) = &self.predicate {
            for atom in pred.atoms() {
                if !out.iter().any(|a| a.eq_ignore_ascii_case(&atom.attr)) {
                    out.push(&atom.attr);
                }
            }
        }
        out
    }
}

/// Parses `/concept[predicate]/projection`; `or` binds looser than `and`.
pub fn parse_query(text: &str) -> Result<QueryAst, SyntaxError> {
    let mut p = Parser::new(text)?;
    p.expect(&Token::Slash)?;
    let concept = p.ident("concept name")?;
    let predicate = if p.eat(&Token::LBracket) {
        let pred = p.predicate(&bare_attr)?;
        p.expect(&Token::RBracket)?;
        Some(pred)
    } else {
        None
    };
    p.expect(&Token::Slash)?;
    let projection = p.ident("projection attribute")?;
    p.expect_end()?;
    Ok(QueryAst {
        concept,
        predicate,
        projection,
    })
}

// ---------------------------------------------------------------------------
// Condition splitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connective::And => "and",
            Connective::Or => "or",
        })
    }
}

/// One predicate atom plus the connective joining it to the next one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionObject {
    pub element: String,
    pub sub_element: String,
    pub element_operator: CompareOp,
    pub element_value: Literal,
    pub connective: Option<Connective>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonQuery {
    pub concept: String,
    pub projection: String,
}

impl fmt::Display for SkeletonQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}", self.concept, self.projection)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("predicate mixes nested and/or groups; only flat chains split into condition objects")]
pub struct NestedPredicate;

/// Takes a query apart into its skeleton and one condition object per atom.
pub fn split_conditions(
    ast: &QueryAst,
) -> Result<(SkeletonQuery, Vec<ConditionObject>), NestedPredicate> {
    let skeleton = SkeletonQuery {
        concept: ast.concept.clone(),
        projection: ast.projection.clone(),
    };
    let (atoms, connective) = match &ast.predicate {
        None => return Ok((skeleton, Vec::new())),
        Some(Predicate::Atom(a)) => (vec![a], None),
        Some(Predicate::And(cs)) => (flat_atoms(cs)?, Some(Connective::And)),
        Some(Predicate::Or(cs)) => (flat_atoms(cs)?, Some(Connective::Or)),
    };
    let last = atoms.len() - 1;
    let objects = atoms
        .into_iter()
        .enumerate()
        .map(|(i, atom)| ConditionObject {
            element: ast.concept.clone(),
            sub_element: atom.attr.clone(),
            element_operator: atom.op,
            element_value: atom.literal.clone(),
            connective: if i == last { None } else { connective },
        })
        .collect();
    Ok((skeleton, objects))
}

fn flat_atoms(children: &[Predicate]) -> Result<Vec<&Atom>, NestedPredicate> {
    children
        .iter()
        .map(|c| match c {
            Predicate::Atom(a) => Ok(a),
            _ => Err(NestedPredicate),
        })
        .collect()
}

/// Rebuilds the predicate carried by a flat chain of condition objects.
///
/// Returns `NestedPredicate` when the chain mixes connectives, since a mixed
/// chain has no single flat reading.
pub fn conditions_predicate(objects: &[ConditionObject]) -> Result<Option<Predicate>, NestedPredicate> {
    let connectives: Vec<Connective> = objects.iter().filter_map(|o| o.connective).collect();
    if connectives.len() + 1 != objects.len().max(1) || connectives.windows(2).any(|w| w[0] != w[1]) {
        return Err(NestedPredicate);
    }
    let atoms: Vec<Predicate> = objects
        .iter()
        .map(|o| {
            Predicate::Atom(Atom::new(
                o.sub_element.clone(),
                o.element_operator,
                o.element_value.clone(),
            ))
        })
        .collect();
    Ok(match connectives.first() {
        Some(Connective::And) => Predicate::and(atoms),
        _ => Predicate::or(atoms),
    })
}

/// Value attacher for the global query: skeleton plus conditions back into a query.
pub fn attach_conditions(
    skeleton: &SkeletonQuery,
    objects: &[ConditionObject],
) -> Result<QueryAst, NestedPredicate> {
    Ok(QueryAst {
        concept: skeleton.concept.clone(),
        predicate: conditions_predicate(objects)?,
        projection: skeleton.projection.clone(),
    })
}

// ---------------------------------------------------------------------------
// Validation against the global schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub message: String,
}

impl Violation {
    fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Checks names and literal values against the global schema.
///
/// Formats are checked strictly here. Each atom's literal must itself be an
/// admissible value of the attribute, and the comparison as a whole must be
/// satisfiable.
pub fn validate_query(ast: &QueryAst, schema: &GlobalSchema) -> Result<(), Vec<Violation>> {
    let Some(relation) = schema.relation(&ast.concept) else {
        return Err(vec![Violation::new(format!("unknown concept {}", ast.concept))]);
    };
    let mut violations = Vec::new();
    if relation.attribute(&ast.projection).is_none() {
        violations.push(Violation::new(format!(
            "unknown projection {} in concept {}",
            ast.projection, relation.name
        )));
    }
    if let Some(pred) = &ast.predicate {
        for atom in pred.atoms() {
            let Some(attribute) = relation.attribute(&atom.attr) else {
                violations.push(Violation::new(format!(
                    "unknown attribute {} in concept {}",
                    atom.attr, relation.name
                )));
                continue;
            };
            let constraints = attribute.constraints();
            let outcome = check_atom(CompareOp::Eq, &atom.literal, &constraints, true)
                .and_then(|()| check_atom(atom.op, &atom.literal, &constraints, true));
            if let Err(rejection) = outcome {
                violations.push(Violation::new(format!("{}: {rejection}", attribute.name)));
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(attr: &str, op: CompareOp, lit: Literal) -> Predicate {
        Predicate::Atom(Atom::new(attr, op, lit))
    }

    const CASE_STUDY: &str = r#"/student[batch_no="cs08" or department_id = 13]/registration_number"#;

    #[test]
    fn parses_case_study_query() {
        let ast = parse_query(CASE_STUDY).unwrap();
        assert_eq!(ast.concept, "student");
        assert_eq!(ast.projection, "registration_number");
        assert_eq!(
            ast.predicate,
            Some(Predicate::Or(vec![
                atom("batch_no", CompareOp::Eq, Literal::text("cs08")),
                atom("department_id", CompareOp::Eq, Literal::Int(13)),
            ]))
        );
    }

    #[test]
    fn parses_query_split_over_lines() {
        let ast = parse_query("/student[batch_no=\"cs08\" or department_id = 13]\n/registration_number").unwrap();
        assert_eq!(ast, parse_query(CASE_STUDY).unwrap());
    }

    #[test]
    fn predicate_free_query() {
        let ast = parse_query("/student/registration_number").unwrap();
        assert_eq!(ast.predicate, None);
        assert_eq!(ast.to_string(), "/student/registration_number");
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let ast = parse_query("/student[x=1 or y=2 and z=3]/p").unwrap();
        assert_eq!(
            ast.predicate,
            Some(Predicate::Or(vec![
                atom("x", CompareOp::Eq, Literal::Int(1)),
                Predicate::And(vec![
                    atom("y", CompareOp::Eq, Literal::Int(2)),
                    atom("z", CompareOp::Eq, Literal::Int(3)),
                ]),
            ]))
        );
    }

    #[test]
    fn parenthesized_groups_stay_nested() {
        let ast = parse_query("/d[(a=1 and b=2) and c=3]/p").unwrap();
        let Some(Predicate::And(children)) = &ast.predicate else {
            panic!("expected And");
        };
        assert!(matches!(children[0], Predicate::And(_)));
        assert_eq!(parse_query(&ast.to_string()).unwrap(), ast);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_query("/student[batch_no=]/x").unwrap_err();
        assert_eq!(e.position, 18);
        assert!(parse_query("student/x").is_err());
        assert!(parse_query("/student[a=1/x").is_err());
        assert!(parse_query("/student/x/y").is_err());
        assert!(parse_query("/student[a=1 or]/x").is_err());
        assert!(parse_query("").is_err());
    }

    #[test]
    fn splits_case_study_conditions() {
        let ast = parse_query(CASE_STUDY).unwrap();
        let (skeleton, objects) = split_conditions(&ast).unwrap();
        assert_eq!(skeleton.to_string(), "/student/registration_number");
        assert_eq!(
            objects,
            vec![
                ConditionObject {
                    element: "student".into(),
                    sub_element: "batch_no".into(),
                    element_operator: CompareOp::Eq,
                    element_value: Literal::text("cs08"),
                    connective: Some(Connective::Or),
                },
                ConditionObject {
                    element: "student".into(),
                    sub_element: "department_id".into(),
                    element_operator: CompareOp::Eq,
                    element_value: Literal::Int(13),
                    connective: None,
                },
            ]
        );
        assert_eq!(attach_conditions(&skeleton, &objects).unwrap(), ast);
    }

    #[test]
    fn splits_and_chain() {
        let ast = parse_query("/d[a=1 and b=2 and c=3]/p").unwrap();
        let (_, objects) = split_conditions(&ast).unwrap();
        let connectives: Vec<_> = objects.iter().map(|o| o.connective).collect();
        assert_eq!(connectives, vec![Some(Connective::And), Some(Connective::And), None]);
    }

    #[test]
    fn split_of_predicate_free_query_is_empty() {
        let ast = parse_query("/student/registration_number").unwrap();
        let (skeleton, objects) = split_conditions(&ast).unwrap();
        assert!(objects.is_empty());
        assert_eq!(attach_conditions(&skeleton, &objects).unwrap(), ast);
    }

    #[test]
    fn nested_predicates_do_not_split() {
        let ast = parse_query("/d[a=1 or b=2 and c=3]/p").unwrap();
        assert_eq!(split_conditions(&ast), Err(NestedPredicate));
    }
}

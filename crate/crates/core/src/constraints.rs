//! Length, format and validation-rule constraints attached to attributes, and
//! the satisfiability test used for query validation and source pruning.
//!
//! Integer reasoning is done over [`IntervalSet`]s: every rule atom, format
//! pattern and comparison selects a union of closed integer intervals, so an
//! atom is satisfiable exactly when the intersection of those unions is
//! non-empty.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintParseError {
    #[error("invalid format token {token:?}: unexpected character {ch:?}")]
    Format { token: String, ch: char },
    #[error("invalid rule token {token:?}: {message}")]
    Rule { token: String, message: String },
}

/// Raised when a literal's kind contradicts the attribute's canonical type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type mismatch: {literal} is not a {expected} value")]
pub struct TypeMismatch {
    pub expected: CanonicalType,
    pub literal: Literal,
}

/// A query or data value.
///
/// The derived ordering puts every `Int` before every `Text`, compares
/// integers numerically and text bytewise. Result ordering relies on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Text(String),
}

impl Literal {
    pub fn text(s: impl Into<String>) -> Self {
        Literal::Text(s.into())
    }

    pub fn kind(&self) -> CanonicalType {
        match self {
            Literal::Int(_) => CanonicalType::Number,
            Literal::Text(_) => CanonicalType::String,
        }
    }

    /// Plain rendering: integers in decimal, text verbatim.
    pub fn render(&self) -> String {
        match self {
            Literal::Int(v) => v.to_string(),
            Literal::Text(s) => s.clone(),
        }
    }

    /// Lexes a raw data value: decimal integers become `Int`, anything else `Text`.
    pub fn from_raw(raw: &str) -> Self {
        if is_decimal_integer(raw) {
            if let Ok(v) = raw.parse::<i64>() {
                return Literal::Int(v);
            }
        }
        Literal::Text(raw.to_string())
    }

    /// Equality/ordering comparison with mixed kinds evaluating to false.
    pub fn compare(&self, op: CompareOp, other: &Literal) -> bool {
        match (self, other) {
            (Literal::Int(a), Literal::Int(b)) => op.apply(a, b),
            (Literal::Text(a), Literal::Text(b)) => op.apply(a.as_bytes(), b.as_bytes()),
            _ => false,
        }
    }
}

fn is_decimal_integer(raw: &str) -> bool {
    let digits = raw.strip_prefix('-').unwrap_or(raw);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Quoted with `"` (inner quotes doubled) for text; decimal for integers.
impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Text(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalType {
    String,
    Number,
}

impl CanonicalType {
    /// Maps a raw CDM/ontology type token onto its canonical class.
    pub fn from_token(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "text" | "string" => Some(CanonicalType::String),
            "number" | "decimal" => Some(CanonicalType::Number),
            _ => None,
        }
    }

    /// The more general of two types; string can hold anything a number can.
    pub fn generalize(self, other: Self) -> Self {
        if self == CanonicalType::String || other == CanonicalType::String {
            CanonicalType::String
        } else {
            CanonicalType::Number
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CanonicalType::String => "string",
            CanonicalType::Number => "number",
        }
    }
}

impl fmt::Display for CanonicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [
        CompareOp::Eq,
        CompareOp::Ne,
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    /// Evaluates `lhs <op> rhs`.
    pub fn apply<T: Ord + ?Sized>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

// ---------------------------------------------------------------------------
// Formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatCell {
    Alpha,
    Digit,
}

/// Positional character-class template: `a` for a letter, `9` for a digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormatPattern {
    cells: Vec<FormatCell>,
}

impl FormatPattern {
    /// Returns `None` for an empty cell list; patterns are never empty.
    pub fn new(cells: Vec<FormatCell>) -> Option<Self> {
        (!cells.is_empty()).then_some(Self { cells })
    }

    pub fn cells(&self) -> &[FormatCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Integers whose unsigned decimal rendering fits this pattern.
    pub fn admitted_integers(&self) -> IntervalSet {
        if self.cells.contains(&FormatCell::Alpha) {
            return IntervalSet::empty();
        }
        let k = self.cells.len() as u32;
        // i64 magnitudes have at most 19 digits
        if k > 19 {
            return IntervalSet::empty();
        }
        let lo: i128 = if k == 1 { 0 } else { 10i128.pow(k - 1) };
        let hi: i128 = 10i128.pow(k) - 1;
        IntervalSet::from_ranges([(lo, hi), (-hi, -lo)])
    }
}

impl fmt::Display for FormatPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cell in &self.cells {
            f.write_str(match cell {
                FormatCell::Alpha => "a",
                FormatCell::Digit => "9",
            })?;
        }
        Ok(())
    }
}

fn is_absent_token(token: &str) -> bool {
    token.is_empty() || token == "null"
}

pub fn parse_format(token: &str) -> Result<Option<FormatPattern>, ConstraintParseError> {
    let token = token.trim();
    if is_absent_token(token) {
        return Ok(None);
    }
    let cells = token
        .chars()
        .map(|ch| match ch {
            'a' => Ok(FormatCell::Alpha),
            '9' => Ok(FormatCell::Digit),
            _ => Err(ConstraintParseError::Format {
                token: token.to_string(),
                ch,
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FormatPattern::new(cells))
}

pub fn matches_format(pattern: &FormatPattern, value: &Literal) -> bool {
    let rendered = match value {
        Literal::Int(v) => v.unsigned_abs().to_string(),
        Literal::Text(s) => s.clone(),
    };
    rendered.chars().count() == pattern.len()
        && rendered.chars().zip(pattern.cells()).all(|(ch, cell)| match cell {
            FormatCell::Alpha => ch.is_ascii_alphabetic(),
            FormatCell::Digit => ch.is_ascii_digit(),
        })
}

// ---------------------------------------------------------------------------
// Validation rules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl RuleOp {
    pub fn token(self) -> &'static str {
        match self {
            RuleOp::Lt => "lt",
            RuleOp::Le => "le",
            RuleOp::Gt => "gt",
            RuleOp::Ge => "ge",
            RuleOp::Eq => "eq",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token {
            "lt" => Some(RuleOp::Lt),
            "le" => Some(RuleOp::Le),
            "gt" => Some(RuleOp::Gt),
            "ge" => Some(RuleOp::Ge),
            "eq" => Some(RuleOp::Eq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleAtom {
    pub op: RuleOp,
    pub bound: i64,
}

impl RuleAtom {
    pub fn new(op: RuleOp, bound: i64) -> Self {
        Self { op, bound }
    }

    pub fn admits(&self, value: i64) -> bool {
        match self.op {
            RuleOp::Lt => value < self.bound,
            RuleOp::Le => value <= self.bound,
            RuleOp::Gt => value > self.bound,
            RuleOp::Ge => value >= self.bound,
            RuleOp::Eq => value == self.bound,
        }
    }

    pub fn admitted(&self) -> IntervalSet {
        let b = i128::from(self.bound);
        match self.op {
            RuleOp::Lt => IntervalSet::range(MIN, b - 1),
            RuleOp::Le => IntervalSet::range(MIN, b),
            RuleOp::Gt => IntervalSet::range(b + 1, MAX),
            RuleOp::Ge => IntervalSet::range(b, MAX),
            RuleOp::Eq => IntervalSet::range(b, b),
        }
    }
}

impl fmt::Display for RuleAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.op.token(), self.bound)
    }
}

/// A union of rule atoms. The empty set is unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RuleSet {
    atoms: Vec<RuleAtom>,
}

impl RuleSet {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = RuleAtom>) -> Self {
        let mut set = Self::default();
        for atom in atoms {
            if !set.atoms.contains(&atom) {
                set.atoms.push(atom);
            }
        }
        set
    }

    pub fn atoms(&self) -> &[RuleAtom] {
        &self.atoms
    }

    pub fn is_unconstrained(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn admits(&self, value: i64) -> bool {
        self.atoms.is_empty() || self.atoms.iter().any(|a| a.admits(value))
    }

    /// Union of two rule sets; unconstrained absorbs everything.
    pub fn union(&self, other: &RuleSet) -> RuleSet {
        if self.is_unconstrained() || other.is_unconstrained() {
            return RuleSet::unconstrained();
        }
        RuleSet::from_atoms(self.atoms.iter().chain(&other.atoms).copied())
    }

    pub fn admitted(&self) -> IntervalSet {
        if self.atoms.is_empty() {
            return IntervalSet::full();
        }
        self.atoms
            .iter()
            .fold(IntervalSet::empty(), |acc, a| acc.union(&a.admitted()))
    }
}

/// `null` when unconstrained, otherwise atoms joined with `|`.
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("null");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

pub fn parse_rule(token: &str) -> Result<RuleSet, ConstraintParseError> {
    let token = token.trim();
    if is_absent_token(token) {
        return Ok(RuleSet::unconstrained());
    }
    let err = |message: String| ConstraintParseError::Rule {
        token: token.to_string(),
        message,
    };
    let mut atoms = Vec::new();
    for segment in token.split('|') {
        let segment = segment.trim();
        let (op, bound) = segment
            .char_indices()
            .nth(2)
            .map(|(i, _)| segment.split_at(i))
            .ok_or_else(|| err(format!("segment {segment:?} is too short")))?;
        let op = RuleOp::from_token(op).ok_or_else(|| err(format!("unknown operator {op:?}")))?;
        if !is_decimal_integer(bound) {
            return Err(err(format!("bound {bound:?} is not an integer")));
        }
        let bound = bound
            .parse::<i64>()
            .map_err(|e| err(format!("bound {bound:?}: {e}")))?;
        atoms.push(RuleAtom::new(op, bound));
    }
    Ok(RuleSet::from_atoms(atoms))
}

pub fn rule_admits(rules: &RuleSet, value: i64) -> bool {
    rules.admits(value)
}

// ---------------------------------------------------------------------------
// Interval sets
// ---------------------------------------------------------------------------

const MIN: i128 = i64::MIN as i128;
const MAX: i128 = i64::MAX as i128;

/// A finite union of closed integer intervals within the `i64` range, kept
/// sorted and coalesced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    ranges: Vec<(i128, i128)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self::range(MIN, MAX)
    }

    pub fn point(v: i64) -> Self {
        Self::range(v.into(), v.into())
    }

    fn range(lo: i128, hi: i128) -> Self {
        Self::from_ranges([(lo, hi)])
    }

    fn from_ranges(ranges: impl IntoIterator<Item = (i128, i128)>) -> Self {
        let mut ranges: Vec<_> = ranges
            .into_iter()
            .map(|(lo, hi)| (lo.max(MIN), hi.min(MAX)))
            .filter(|(lo, hi)| lo <= hi)
            .collect();
        ranges.sort_unstable();
        let mut merged: Vec<(i128, i128)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self { ranges: merged }
    }

    /// The integers `x` with `x <op> value`.
    pub fn selection(op: CompareOp, value: i64) -> Self {
        let v = i128::from(value);
        match op {
            CompareOp::Eq => Self::range(v, v),
            CompareOp::Ne => Self::from_ranges([(MIN, v - 1), (v + 1, MAX)]),
            CompareOp::Lt => Self::range(MIN, v - 1),
            CompareOp::Le => Self::range(MIN, v),
            CompareOp::Gt => Self::range(v + 1, MAX),
            CompareOp::Ge => Self::range(v, MAX),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn contains(&self, value: i64) -> bool {
        let v = i128::from(value);
        self.ranges.iter().any(|&(lo, hi)| lo <= v && v <= hi)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_ranges(self.ranges.iter().chain(&other.ranges).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ranges.len() && j < other.ranges.len() {
            let (a_lo, a_hi) = self.ranges[i];
            let (b_lo, b_hi) = other.ranges[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a_hi < b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_ranges(out)
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intersect(other) == *self
    }
}

// ---------------------------------------------------------------------------
// Constraint tuples and atom satisfiability
// ---------------------------------------------------------------------------

/// Per-attribute metadata used for validation, source selection and pruning.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintTuple {
    pub canonical_type: CanonicalType,
    pub length: Option<u32>,
    pub format: Option<FormatPattern>,
    pub rule: RuleSet,
}

impl ConstraintTuple {
    pub fn unconstrained(canonical_type: CanonicalType) -> Self {
        Self {
            canonical_type,
            length: None,
            format: None,
            rule: RuleSet::unconstrained(),
        }
    }

    /// Checks that a declared format agrees with a declared length.
    pub fn consistency_error(&self) -> Option<String> {
        match (&self.format, self.length) {
            (Some(format), Some(length)) if format.len() != length as usize => Some(format!(
                "format {format} has {} positions but length is {length}",
                format.len()
            )),
            _ => None,
        }
    }

    /// Integers a value of this attribute may take.
    pub fn admitted_integers(&self, strict_format: bool) -> IntervalSet {
        let by_rule = self.rule.admitted();
        match (&self.format, strict_format) {
            (Some(format), true) => by_rule.intersect(&format.admitted_integers()),
            _ => by_rule,
        }
    }
}

/// Why an atom cannot hold under an attribute's constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Type {
        expected: CanonicalType,
        literal: Literal,
    },
    Rule {
        rule: RuleSet,
        op: CompareOp,
        literal: Literal,
    },
    Length {
        length: u32,
        literal: Literal,
    },
    Format {
        format: FormatPattern,
        op: CompareOp,
        literal: Literal,
    },
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, op: CompareOp, literal: &Literal) -> fmt::Result {
    if op == CompareOp::Eq {
        write!(f, "{literal}")
    } else {
        write!(f, "{op} {literal}")
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Type { expected, literal } => write!(f, "type {expected} rejects {literal}"),
            Rejection::Rule { rule, op, literal } => {
                write!(f, "rule {rule} rejects ")?;
                fmt_operand(f, *op, literal)
            }
            Rejection::Length { length, literal } => write!(f, "length {length} rejects {literal}"),
            Rejection::Format { format, op, literal } => {
                write!(f, "format {format} rejects ")?;
                fmt_operand(f, *op, literal)
            }
        }
    }
}

/// Checks `attribute <op> literal` against `constraints`, reporting the
/// first constraint that makes it unsatisfiable.
///
/// Integer atoms are decided exactly: the comparison's selection must meet
/// the rule's admitted set (and, in strict mode, the integers fitting the
/// format). Text atoms are only checked for `=`, against length and, in
/// strict mode, format; other text comparisons are always satisfiable.
pub fn check_atom(
    op: CompareOp,
    literal: &Literal,
    constraints: &ConstraintTuple,
    strict_format: bool,
) -> Result<(), Rejection> {
    if literal.kind() != constraints.canonical_type {
        return Err(Rejection::Type {
            expected: constraints.canonical_type,
            literal: literal.clone(),
        });
    }
    match literal {
        Literal::Int(v) => {
            let selected = IntervalSet::selection(op, *v);
            let by_rule = selected.intersect(&constraints.rule.admitted());
            if by_rule.is_empty() {
                return Err(Rejection::Rule {
                    rule: constraints.rule.clone(),
                    op,
                    literal: literal.clone(),
                });
            }
            if let (true, Some(format)) = (strict_format, &constraints.format) {
                if by_rule.intersect(&format.admitted_integers()).is_empty() {
                    return Err(Rejection::Format {
                        format: format.clone(),
                        op,
                        literal: literal.clone(),
                    });
                }
            }
            Ok(())
        }
        Literal::Text(s) => {
            if op != CompareOp::Eq {
                return Ok(());
            }
            if let Some(length) = constraints.length {
                if s.chars().count() > length as usize {
                    return Err(Rejection::Length {
                        length,
                        literal: literal.clone(),
                    });
                }
            }
            if let (true, Some(format)) = (strict_format, &constraints.format) {
                if !matches_format(format, literal) {
                    return Err(Rejection::Format {
                        format: format.clone(),
                        op,
                        literal: literal.clone(),
                    });
                }
            }
            Ok(())
        }
    }
}

pub fn atom_satisfiable(
    op: CompareOp,
    literal: &Literal,
    constraints: &ConstraintTuple,
    strict_format: bool,
) -> Result<bool, TypeMismatch> {
    match check_atom(op, literal, constraints, strict_format) {
        Ok(()) => Ok(true),
        Err(Rejection::Type { expected, literal }) => Err(TypeMismatch { expected, literal }),
        Err(_) => Ok(false),
    }
}

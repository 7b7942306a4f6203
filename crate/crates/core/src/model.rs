//! Model representation: variables, linear expressions, typed constraints
//! and the objective, together with validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::lowering::{self, LowerError, LowerOptions};
use crate::rational::Rational;

/// Identifier of an OMT node.
pub type NodeId = u32;

/// Prefix reserved for auxiliary variables introduced by lowering.
pub const AUX_PREFIX: &str = "__aux";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// A decision variable. `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub kind: VarKind,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }

    pub fn has_finite_box(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no value for variable {0}")]
pub struct MissingValue(pub VarId);

/// Values for (some of) a model's variables, indexed by [`VarId`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<Rational>>,
}

impl Assignment {
    pub fn with_len(len: usize) -> Self {
        Assignment { values: vec![None; len] }
    }

    pub fn from_values(values: impl IntoIterator<Item = Rational>) -> Self {
        Assignment { values: values.into_iter().map(Some).collect() }
    }

    pub fn from_ints(values: impl IntoIterator<Item = i64>) -> Self {
        Self::from_values(values.into_iter().map(Rational::from))
    }

    pub fn set(&mut self, id: VarId, value: Rational) {
        if id.0 >= self.values.len() {
            self.values.resize(id.0 + 1, None);
        }
        self.values[id.0] = Some(value);
    }

    pub fn unset(&mut self, id: VarId) {
        if let Some(slot) = self.values.get_mut(id.0) {
            *slot = None;
        }
    }

    pub fn get(&self, id: VarId) -> Option<Rational> {
        self.values.get(id.0).copied().flatten()
    }

    pub fn value(&self, id: VarId) -> Result<Rational, MissingValue> {
        self.get(id).ok_or(MissingValue(id))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The assignment restricted to the first `len` variables.
    pub fn truncated(&self, len: usize) -> Assignment {
        Assignment { values: self.values.iter().take(len).copied().collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Rational)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (VarId(i), v)))
    }
}

/// `constant + Σ coefficient · variable`, with no zero coefficients stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinearExpr {
    terms: BTreeMap<VarId, Rational>,
    constant: Rational,
}

impl LinearExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: impl Into<Rational>) -> Self {
        LinearExpr { terms: BTreeMap::new(), constant: value.into() }
    }

    pub fn var(id: VarId) -> Self {
        Self::term(id, Rational::ONE)
    }

    pub fn term(id: VarId, coefficient: impl Into<Rational>) -> Self {
        let mut expr = Self::zero();
        expr.add_term(id, coefficient.into());
        expr
    }

    pub fn sum_of(ids: impl IntoIterator<Item = VarId>) -> Self {
        let mut expr = Self::zero();
        for id in ids {
            expr.add_term(id, Rational::ONE);
        }
        expr
    }

    pub fn from_terms<C: Into<Rational>>(terms: impl IntoIterator<Item = (VarId, C)>) -> Self {
        let mut expr = Self::zero();
        for (id, c) in terms {
            expr.add_term(id, c.into());
        }
        expr
    }

    pub fn add_term(&mut self, id: VarId, coefficient: Rational) {
        let entry = self.terms.entry(id).or_insert(Rational::ZERO);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&id);
        }
    }

    pub fn add_constant(&mut self, value: Rational) {
        self.constant += value;
    }

    pub fn with_constant(mut self, value: impl Into<Rational>) -> Self {
        self.constant += value.into();
        self
    }

    pub fn terms(&self) -> &BTreeMap<VarId, Rational> {
        &self.terms
    }

    pub fn constant_term(&self) -> Rational {
        self.constant
    }

    pub fn coefficient(&self, id: VarId) -> Rational {
        self.terms.get(&id).copied().unwrap_or(Rational::ZERO)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }

    pub fn scaled(&self, factor: Rational) -> LinearExpr {
        if factor.is_zero() {
            return LinearExpr::zero();
        }
        LinearExpr {
            terms: self.terms.iter().map(|(&id, &c)| (id, c * factor)).collect(),
            constant: self.constant * factor,
        }
    }

    /// `constant + Σ coefficient · value`, exactly.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<Rational, MissingValue> {
        let mut total = self.constant;
        for (&id, &c) in &self.terms {
            total += c * assignment.value(id)?;
        }
        Ok(total)
    }
}

pub fn evaluate_expr(expr: &LinearExpr, assignment: &Assignment) -> Result<Rational, MissingValue> {
    expr.evaluate(assignment)
}

impl Add for LinearExpr {
    type Output = LinearExpr;

    fn add(mut self, rhs: LinearExpr) -> LinearExpr {
        for (id, c) in rhs.terms {
            self.add_term(id, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinearExpr {
    type Output = LinearExpr;

    fn sub(self, rhs: LinearExpr) -> LinearExpr {
        self + (-rhs)
    }
}

impl Neg for LinearExpr {
    type Output = LinearExpr;

    fn neg(self) -> LinearExpr {
        self.scaled(-Rational::ONE)
    }
}

impl Mul<Rational> for LinearExpr {
    type Output = LinearExpr;

    fn mul(self, rhs: Rational) -> LinearExpr {
        self.scaled(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "ge")]
    Ge,
}

impl Sense {
    pub fn holds(self, lhs: Rational, rhs: Rational) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Eq => lhs == rhs,
            Sense::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoundSpec {
    Constant(Rational),
    Expr(LinearExpr),
}

impl BoundSpec {
    pub fn as_expr(&self) -> LinearExpr {
        match self {
            BoundSpec::Constant(c) => LinearExpr::constant(*c),
            BoundSpec::Expr(e) => e.clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundSpec::Constant(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffBehavior {
    /// The bounded expression must be zero when the indicator is off.
    ForceZero,
    /// The bound is simply dropped when the indicator is off.
    Free,
}

/// Usage tag of a balance; all flavors share equality semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceFlavor {
    Interperiod,
    Assignment,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    Packing,
    Partitioning,
    Covering,
}

impl SetFamily {
    pub fn sense(self) -> Sense {
        match self {
            SetFamily::Packing => Sense::Le,
            SetFamily::Partitioning => Sense::Eq,
            SetFamily::Covering => Sense::Ge,
        }
    }
}

/// Members of a packing/partitioning/covering row. Weights default to 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetSelection {
    pub members: Vec<VarId>,
    pub weights: Option<Vec<Rational>>,
    pub rhs: u32,
}

impl SetSelection {
    pub fn new(members: Vec<VarId>) -> Self {
        SetSelection { members, weights: None, rhs: 1 }
    }

    pub fn weight(&self, index: usize) -> Rational {
        self.weights.as_ref().map_or(Rational::ONE, |w| w[index])
    }

    pub fn expr(&self) -> LinearExpr {
        let mut expr = LinearExpr::zero();
        for (i, &m) in self.members.iter().enumerate() {
            expr.add_term(m, self.weight(i));
        }
        expr
    }

    /// True when the row is anything other than "one out of many" with unit weights.
    pub fn is_weighted(&self) -> bool {
        self.rhs != 1 || self.weights.as_ref().is_some_and(|w| w.iter().any(|&x| x != Rational::ONE))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alternative {
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// Supply (`Le`) or demand (`Ge`) limit.
    Bound { expr: LinearExpr, sense: Sense, bound: BoundSpec },
    ConditionalBound {
        expr: LinearExpr,
        sense: Sense,
        bound: BoundSpec,
        indicator: VarId,
        off_behavior: OffBehavior,
    },
    Balance { lhs: LinearExpr, rhs: LinearExpr, flavor: BalanceFlavor },
    SetPacking(SetSelection),
    SetPartitioning(SetSelection),
    SetCovering(SetSelection),
    VariableFix { var: VarId, value: Rational },
    IfThen { antecedents: Vec<VarId>, consequents: Vec<VarId> },
    EitherOr { alternatives: Vec<Alternative> },
    RawRow { expr: LinearExpr, sense: Sense, rhs: Rational },
}

impl ConstraintKind {
    pub fn family_name(&self) -> &'static str {
        match self {
            ConstraintKind::Bound { .. } => "bound",
            ConstraintKind::ConditionalBound { .. } => "conditional_bound",
            ConstraintKind::Balance { .. } => "balance",
            ConstraintKind::SetPacking(_) => "set_packing",
            ConstraintKind::SetPartitioning(_) => "set_partitioning",
            ConstraintKind::SetCovering(_) => "set_covering",
            ConstraintKind::VariableFix { .. } => "variable_fix",
            ConstraintKind::IfThen { .. } => "if_then",
            ConstraintKind::EitherOr { .. } => "either_or",
            ConstraintKind::RawRow { .. } => "raw_row",
        }
    }

    pub fn set_selection(&self) -> Option<(SetFamily, &SetSelection)> {
        match self {
            ConstraintKind::SetPacking(s) => Some((SetFamily::Packing, s)),
            ConstraintKind::SetPartitioning(s) => Some((SetFamily::Partitioning, s)),
            ConstraintKind::SetCovering(s) => Some((SetFamily::Covering, s)),
            _ => None,
        }
    }
}

/// A constraint with its semantic family and provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedConstraint {
    pub kind: ConstraintKind,
    pub label: String,
    pub omt_node: Option<NodeId>,
}

impl TypedConstraint {
    pub fn new(kind: ConstraintKind) -> Self {
        TypedConstraint { kind, label: String::new(), omt_node: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn at_node(mut self, node: NodeId) -> Self {
        self.omt_node = Some(node);
        self
    }

    pub fn bound(expr: LinearExpr, sense: Sense, bound: BoundSpec) -> Self {
        Self::new(ConstraintKind::Bound { expr, sense, bound })
    }

    pub fn upper(expr: LinearExpr, limit: impl Into<Rational>) -> Self {
        Self::bound(expr, Sense::Le, BoundSpec::Constant(limit.into()))
    }

    pub fn lower(expr: LinearExpr, requirement: impl Into<Rational>) -> Self {
        Self::bound(expr, Sense::Ge, BoundSpec::Constant(requirement.into()))
    }

    pub fn conditional(
        expr: LinearExpr,
        sense: Sense,
        bound: BoundSpec,
        indicator: VarId,
        off_behavior: OffBehavior,
    ) -> Self {
        Self::new(ConstraintKind::ConditionalBound { expr, sense, bound, indicator, off_behavior })
    }

    pub fn balance(lhs: LinearExpr, rhs: LinearExpr, flavor: BalanceFlavor) -> Self {
        Self::new(ConstraintKind::Balance { lhs, rhs, flavor })
    }

    pub fn set_packing(members: Vec<VarId>) -> Self {
        Self::new(ConstraintKind::SetPacking(SetSelection::new(members)))
    }

    pub fn set_partitioning(members: Vec<VarId>) -> Self {
        Self::new(ConstraintKind::SetPartitioning(SetSelection::new(members)))
    }

    pub fn set_covering(members: Vec<VarId>) -> Self {
        Self::new(ConstraintKind::SetCovering(SetSelection::new(members)))
    }

    pub fn fix(var: VarId, value: impl Into<Rational>) -> Self {
        Self::new(ConstraintKind::VariableFix { var, value: value.into() })
    }

    pub fn if_then(antecedents: Vec<VarId>, consequents: Vec<VarId>) -> Self {
        Self::new(ConstraintKind::IfThen { antecedents, consequents })
    }

    pub fn either_or(alternatives: Vec<Alternative>) -> Self {
        Self::new(ConstraintKind::EitherOr { alternatives })
    }

    pub fn raw(expr: LinearExpr, sense: Sense, rhs: impl Into<Rational>) -> Self {
        Self::new(ConstraintKind::RawRow { expr, sense, rhs: rhs.into() })
    }

    /// Every variable referenced by the constraint, sorted and deduplicated.
    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        match &self.kind {
            ConstraintKind::Bound { expr, bound, .. } => {
                out.extend(expr.variables());
                if let BoundSpec::Expr(b) = bound {
                    out.extend(b.variables());
                }
            }
            ConstraintKind::ConditionalBound { expr, bound, indicator, .. } => {
                out.extend(expr.variables());
                if let BoundSpec::Expr(b) = bound {
                    out.extend(b.variables());
                }
                out.insert(*indicator);
            }
            ConstraintKind::Balance { lhs, rhs, .. } => {
                out.extend(lhs.variables());
                out.extend(rhs.variables());
            }
            ConstraintKind::SetPacking(s) | ConstraintKind::SetPartitioning(s) | ConstraintKind::SetCovering(s) => {
                out.extend(s.members.iter().copied());
            }
            ConstraintKind::VariableFix { var, .. } => {
                out.insert(*var);
            }
            ConstraintKind::IfThen { antecedents, consequents } => {
                out.extend(antecedents.iter().chain(consequents).copied());
            }
            ConstraintKind::EitherOr { alternatives } => {
                for alt in alternatives {
                    out.extend(alt.expr.variables());
                }
            }
            ConstraintKind::RawRow { expr, .. } => out.extend(expr.variables()),
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub direction: Direction,
    pub expr: LinearExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// Closed set of diagnostic codes reported by [`Model::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    DuplicateName,
    InvalidName,
    InvalidBounds,
    UnknownVariable,
    NonBinaryLiteral,
    EmptyMemberList,
    WeightMismatch,
    NonPositiveWeight,
    ZeroRhs,
    InvalidSense,
    TooFewAlternatives,
    BigMUnderivable,
    RawRowUsed,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::DuplicateName => "DuplicateName",
            DiagnosticCode::InvalidName => "InvalidName",
            DiagnosticCode::InvalidBounds => "InvalidBounds",
            DiagnosticCode::UnknownVariable => "UnknownVariable",
            DiagnosticCode::NonBinaryLiteral => "NonBinaryLiteral",
            DiagnosticCode::EmptyMemberList => "EmptyMemberList",
            DiagnosticCode::WeightMismatch => "WeightMismatch",
            DiagnosticCode::NonPositiveWeight => "NonPositiveWeight",
            DiagnosticCode::ZeroRhs => "ZeroRhs",
            DiagnosticCode::InvalidSense => "InvalidSense",
            DiagnosticCode::TooFewAlternatives => "TooFewAlternatives",
            DiagnosticCode::BigMUnderivable => "BigMUnderivable",
            DiagnosticCode::RawRowUsed => "RawRowUsed",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            DiagnosticCode::BigMUnderivable | DiagnosticCode::RawRowUsed => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Subject {
    Model,
    Variable(usize),
    Constraint(usize),
    Objective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub subject: Subject,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, subject: Subject, message: impl Into<String>) -> Self {
        Diagnostic { severity: code.severity(), code, message: message.into(), subject }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}: {}", self.severity, self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("variable name {0:?} is already used")]
    DuplicateName(String),
    #[error("invalid variable name {0:?}")]
    InvalidName(String),
    #[error("invalid bounds for variable {0:?}")]
    InvalidBounds(String),
    #[error("{0}")]
    Invalid(Diagnostic),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::DuplicateName(_) => "DuplicateName",
            ModelError::InvalidName(_) => "InvalidName",
            ModelError::InvalidBounds(_) => "InvalidBounds",
            ModelError::Invalid(d) => d.code.as_str(),
        }
    }
}

/// Names must be usable verbatim in LP and MPS files.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name.len() <= 255 && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']'))
}

fn bounds_consistent(kind: VarKind, lower: Option<Rational>, upper: Option<Rational>) -> bool {
    if kind == VarKind::Binary {
        return lower == Some(Rational::ZERO) && upper == Some(Rational::ONE);
    }
    match (lower, upper) {
        (Some(l), Some(u)) => l <= u,
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    name: String,
    variables: Vec<Variable>,
    constraints: Vec<TypedConstraint>,
    objective: Option<Objective>,
    by_name: HashMap<String, VarId>,
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Model {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: None,
            by_name: HashMap::new(),
        }
    }

    /// Assembles a model without any checks; run [`Model::validate`] before use.
    pub fn from_parts(
        name: impl Into<String>,
        variables: Vec<Variable>,
        constraints: Vec<TypedConstraint>,
        objective: Option<Objective>,
    ) -> Self {
        let by_name = variables.iter().map(|v| (v.name.clone(), v.id)).collect();
        Model { name: name.into(), variables, constraints, objective, by_name }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> Option<&Variable> {
        self.variables.get(id.0)
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[TypedConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> Option<&TypedConstraint> {
        self.constraints.get(id.0)
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if !is_valid_name(&name) || name.starts_with(AUX_PREFIX) {
            return Err(ModelError::InvalidName(name));
        }
        if self.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        if !bounds_consistent(kind, lower, upper) {
            return Err(ModelError::InvalidBounds(name));
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable { id, name, kind, lower, upper });
        Ok(id)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_variable(name, VarKind::Binary, Some(Rational::ZERO), Some(Rational::ONE))
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> Result<VarId, ModelError> {
        self.add_variable(name, VarKind::Integer, Some(lower.into()), Some(upper.into()))
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: Option<Rational>,
        upper: Option<Rational>,
    ) -> Result<VarId, ModelError> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_constraint(&mut self, constraint: TypedConstraint) -> Result<ConstraintId, ModelError> {
        let id = ConstraintId(self.constraints.len());
        if let Some(d) = self.constraint_errors(&constraint, id).into_iter().next() {
            return Err(ModelError::Invalid(d));
        }
        self.constraints.push(constraint);
        Ok(id)
    }

    pub fn set_objective(&mut self, direction: Direction, expr: LinearExpr) -> Result<(), ModelError> {
        if let Some(id) = expr.variables().find(|&id| self.variable(id).is_none()) {
            return Err(ModelError::Invalid(Diagnostic::new(
                DiagnosticCode::UnknownVariable,
                Subject::Objective,
                format!("objective references unknown variable {id}"),
            )));
        }
        self.objective = Some(Objective { direction, expr });
        Ok(())
    }

    pub fn name_of(&self, id: VarId) -> String {
        self.variable(id).map_or_else(|| id.to_string(), |v| v.name.clone())
    }

    fn constraint_errors(&self, constraint: &TypedConstraint, id: ConstraintId) -> Vec<Diagnostic> {
        let subject = Subject::Constraint(id.0);
        let mut out = Vec::new();
        let mut push = |code, message: String| out.push(Diagnostic::new(code, subject, message));

        let mut unknown = false;
        for var in constraint.variables() {
            if self.variable(var).is_none() {
                unknown = true;
                push(DiagnosticCode::UnknownVariable, format!("constraint references unknown variable {var}"));
            }
        }
        if unknown {
            return out;
        }
        let require_binary = |ids: &[VarId], push: &mut dyn FnMut(DiagnosticCode, String)| {
            for &v in ids {
                if !self.variables[v.0].is_binary() {
                    push(
                        DiagnosticCode::NonBinaryLiteral,
                        format!("variable {:?} must be binary", self.variables[v.0].name),
                    );
                }
            }
        };
        let check_sense = |sense: Sense, push: &mut dyn FnMut(DiagnosticCode, String)| {
            if sense == Sense::Eq {
                push(DiagnosticCode::InvalidSense, "bound sense must be le or ge".into());
            }
        };

        match &constraint.kind {
            ConstraintKind::Bound { sense, .. } => check_sense(*sense, &mut push),
            ConstraintKind::ConditionalBound { sense, indicator, .. } => {
                check_sense(*sense, &mut push);
                require_binary(&[*indicator], &mut push);
            }
            ConstraintKind::SetPacking(s) | ConstraintKind::SetPartitioning(s) | ConstraintKind::SetCovering(s) => {
                if s.members.is_empty() {
                    push(DiagnosticCode::EmptyMemberList, "set constraint has no members".into());
                }
                require_binary(&s.members, &mut push);
                if let Some(w) = &s.weights {
                    if w.len() != s.members.len() {
                        push(
                            DiagnosticCode::WeightMismatch,
                            format!("{} weights for {} members", w.len(), s.members.len()),
                        );
                    }
                    if w.iter().any(|x| !x.is_positive()) {
                        push(DiagnosticCode::NonPositiveWeight, "set weights must be positive".into());
                    }
                }
                if s.rhs == 0 {
                    push(DiagnosticCode::ZeroRhs, "set right-hand side must be a positive integer".into());
                }
            }
            ConstraintKind::IfThen { antecedents, consequents } => {
                if antecedents.is_empty() || consequents.is_empty() {
                    push(DiagnosticCode::EmptyMemberList, "if-then needs antecedents and consequents".into());
                }
                require_binary(antecedents, &mut push);
                require_binary(consequents, &mut push);
            }
            ConstraintKind::EitherOr { alternatives } => {
                if alternatives.len() < 2 {
                    push(DiagnosticCode::TooFewAlternatives, "either-or needs at least two alternatives".into());
                }
                for alt in alternatives {
                    check_sense(alt.sense, &mut push);
                }
            }
            ConstraintKind::Balance { .. } | ConstraintKind::VariableFix { .. } | ConstraintKind::RawRow { .. } => {}
        }
        out
    }

    /// All problems with the model, ordered by subject insertion order.
    ///
    /// An empty list means the model is well-formed. Warnings do not block
    /// lowering by themselves.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut seen = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            let subject = Subject::Variable(i);
            if v.id != VarId(i) {
                out.push(Diagnostic::new(
                    DiagnosticCode::UnknownVariable,
                    subject,
                    format!("variable {:?} has id {} at position {i}", v.name, v.id),
                ));
            }
            if !is_valid_name(&v.name) || v.name.starts_with(AUX_PREFIX) {
                out.push(Diagnostic::new(DiagnosticCode::InvalidName, subject, format!("invalid name {:?}", v.name)));
            }
            if seen.insert(v.name.as_str(), i).is_some() {
                out.push(Diagnostic::new(DiagnosticCode::DuplicateName, subject, format!("duplicate name {:?}", v.name)));
            }
            if !bounds_consistent(v.kind, v.lower, v.upper) {
                out.push(Diagnostic::new(
                    DiagnosticCode::InvalidBounds,
                    subject,
                    format!("inconsistent bounds on {:?}", v.name),
                ));
            }
        }
        let options = LowerOptions::default();
        for (i, c) in self.constraints.iter().enumerate() {
            let id = ConstraintId(i);
            let errors = self.constraint_errors(c, id);
            let clean = errors.is_empty();
            out.extend(errors);
            if matches!(c.kind, ConstraintKind::RawRow { .. }) {
                out.push(Diagnostic::new(
                    DiagnosticCode::RawRowUsed,
                    Subject::Constraint(i),
                    "raw row bypasses the constraint typology",
                ));
            }
            if clean {
                if let Err(LowerError::UnboundedVariable { variable, .. }) =
                    lowering::lower_constraint(c, id, &self.variables, &options, self.variables.len())
                {
                    out.push(Diagnostic::new(
                        DiagnosticCode::BigMUnderivable,
                        Subject::Constraint(i),
                        format!("cannot derive big-M: variable {:?} has an infinite bound", self.name_of(variable)),
                    ));
                }
            }
        }
        if let Some(obj) = &self.objective {
            if let Some(id) = obj.expr.variables().find(|&id| self.variable(id).is_none()) {
                out.push(Diagnostic::new(
                    DiagnosticCode::UnknownVariable,
                    Subject::Objective,
                    format!("objective references unknown variable {id}"),
                ));
            }
        }
        out
    }

    pub fn has_errors(&self) -> bool {
        self.validate().iter().any(Diagnostic::is_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn add_variable_rules() {
        let mut m = Model::new("t");
        let x = m.add_variable("x", VarKind::Binary, Some(0.into()), Some(1.into())).unwrap();
        assert_eq!(m.variable(x).unwrap().upper, Some(Rational::ONE));
        let s = m.add_continuous("s", Some(Rational::ZERO), None).unwrap();
        assert_eq!(s, VarId(1));
        assert_eq!(
            m.add_variable("x", VarKind::Binary, Some(0.into()), Some(1.into())),
            Err(ModelError::DuplicateName("x".into()))
        );
        assert_eq!(
            m.add_variable("y", VarKind::Binary, Some(0.into()), Some(2.into())),
            Err(ModelError::InvalidBounds("y".into()))
        );
        assert_eq!(m.add_integer("z", 3, 2), Err(ModelError::InvalidBounds("z".into())));
        assert!(matches!(m.add_binary("__aux0"), Err(ModelError::InvalidName(_))));
        assert!(matches!(m.add_binary("a b"), Err(ModelError::InvalidName(_))));
        assert!(matches!(m.add_binary("1x"), Err(ModelError::InvalidName(_))));
    }

    #[test]
    fn add_constraint_rules() {
        let mut m = Model::new("t");
        let x1 = m.add_binary("x1").unwrap();
        let x2 = m.add_binary("x2").unwrap();
        let y = m.add_binary("y").unwrap();
        let z = m.add_binary("z").unwrap();
        let c = m.add_continuous("c", Some(Rational::ZERO), Some(10.into())).unwrap();

        assert_eq!(m.add_constraint(TypedConstraint::set_packing(vec![x1, x2])), Ok(ConstraintId(0)));
        assert_eq!(m.add_constraint(TypedConstraint::if_then(vec![x1], vec![y, z])), Ok(ConstraintId(1)));

        let err = m.add_constraint(TypedConstraint::if_then(vec![c], vec![y])).unwrap_err();
        assert_eq!(err.code(), "NonBinaryLiteral");
        let err = m.add_constraint(TypedConstraint::set_covering(vec![])).unwrap_err();
        assert_eq!(err.code(), "EmptyMemberList");
        let err = m.add_constraint(TypedConstraint::fix(VarId(42), 0)).unwrap_err();
        assert_eq!(err.code(), "UnknownVariable");
        assert_eq!(m.constraints().len(), 2);
    }

    #[test]
    fn evaluate_examples() {
        let (x, y, z) = (VarId(0), VarId(1), VarId(2));
        let e = LinearExpr::from_terms([(x, 3), (y, 4)]);
        assert_eq!(e.evaluate(&Assignment::from_ints([1, 0])), Ok(Rational::integer(3)));
        assert_eq!(LinearExpr::constant(5).evaluate(&Assignment::default()), Ok(Rational::integer(5)));
        let weak = LinearExpr::from_terms([(x, 2), (y, -1), (z, -1)]);
        let a = Assignment::from_values([r(1, 2), Rational::ONE, Rational::ZERO]);
        assert_eq!(weak.evaluate(&a), Ok(Rational::ZERO));
        assert_eq!(e.evaluate(&Assignment::from_ints([1])), Err(MissingValue(y)));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let x = VarId(0);
        let e = LinearExpr::term(x, 2) + LinearExpr::term(x, -2);
        assert!(e.is_constant());
        assert_eq!(e, LinearExpr::zero());
    }

    #[test]
    fn validate_examples() {
        let mut m = Model::new("knapsack");
        let x1 = m.add_binary("x1").unwrap();
        let x2 = m.add_binary("x2").unwrap();
        m.add_constraint(TypedConstraint::upper(LinearExpr::from_terms([(x1, 1), (x2, 2)]), 2)).unwrap();
        m.set_objective(Direction::Max, LinearExpr::from_terms([(x1, 3), (x2, 4)])).unwrap();
        assert!(m.validate().is_empty());

        let broken = Model::from_parts(
            "broken",
            m.variables().to_vec(),
            vec![TypedConstraint::fix(VarId(7), 1)],
            None,
        );
        let diags = broken.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::UnknownVariable);
        assert!(diags[0].is_error());

        let mut free = Model::new("free");
        let b = free.add_continuous("b", Some(Rational::ZERO), None).unwrap();
        let s = free.add_binary("s").unwrap();
        free.add_constraint(TypedConstraint::conditional(
            LinearExpr::var(b),
            Sense::Le,
            BoundSpec::Constant(10.into()),
            s,
            OffBehavior::Free,
        ))
        .unwrap();
        let diags = free.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::BigMUnderivable);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn raw_rows_warn() {
        let mut m = Model::new("raw");
        let x = m.add_integer("x", 0, 3).unwrap();
        m.add_constraint(TypedConstraint::raw(LinearExpr::var(x), Sense::Le, 2)).unwrap();
        let diags = m.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::RawRowUsed);
    }

    #[test]
    fn order_stability() {
        let build = || {
            let mut m = Model::new("m");
            let a = m.add_binary("a").unwrap();
            let b = m.add_binary("b").unwrap();
            m.add_constraint(TypedConstraint::set_partitioning(vec![a, b]).labeled("p")).unwrap();
            m.add_constraint(TypedConstraint::fix(a, 0).at_node(19)).unwrap();
            m
        };
        assert_eq!(build(), build());
    }

    fn small_expr() -> impl Strategy<Value = LinearExpr> {
        (prop::collection::vec((0usize..4, -20i128..20), 0..5), -20i128..20).prop_map(|(terms, c)| {
            LinearExpr::from_terms(terms.into_iter().map(|(i, k)| (VarId(i), Rational::integer(k))))
                .with_constant(Rational::integer(c))
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_linear(
            e1 in small_expr(),
            e2 in small_expr(),
            an in -10i128..10, ad in 1i128..6,
            vals in prop::collection::vec((-10i128..10, 1i128..4), 4),
        ) {
            let a = r(an, ad);
            let assignment = Assignment::from_values(vals.iter().map(|&(n, d)| r(n, d)));
            let combined = e1.clone() * a + e2.clone();
            prop_assert_eq!(
                combined.evaluate(&assignment).unwrap(),
                a * e1.evaluate(&assignment).unwrap() + e2.evaluate(&assignment).unwrap()
            );
        }
    }
}

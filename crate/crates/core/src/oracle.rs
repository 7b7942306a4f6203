//! Ground truth for the lowering: the direct meaning of each constraint
//! family, exhaustive equivalence checks against lowered rows, and an exact
//! enumeration solver for small pure-integer models.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::Serialize;
use serde_json::json;

use crate::lowering::{self, CanonicalForm, CanonicalRow, LowerOptions, LoweredConstraint};
use crate::model::{
    Assignment, ConstraintId, ConstraintKind, Diagnostic, Direction, LinearExpr, MissingValue, Model, Objective,
    OffBehavior, TypedConstraint, VarId, Variable,
};
use crate::rational::Rational;

pub const DEFAULT_BOX_CAP: u128 = 1_000_000;
pub const DEFAULT_MAX_POINTS: u128 = 10_000_000;
pub const MAX_AUXILIARIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    MissingValue(#[from] MissingValue),
    #[error("box of {points} points x {combos} auxiliary combinations exceeds cap {cap}")]
    BoxTooLarge { points: u128, combos: u128, cap: u128 },
    #[error("{0} auxiliary variables exceed the limit of {MAX_AUXILIARIES}")]
    TooManyAuxiliaries(usize),
    #[error("variable {0} is continuous; enumeration needs integer variables")]
    ContinuousUnsupported(VarId),
    #[error("variable {0} needs finite bounds")]
    UnboundedVariable(VarId),
    #[error("search space of {points} points exceeds limit {limit}")]
    TooLarge { points: u128, limit: u128 },
    #[error("sample box has no valid values for variable {0}")]
    InvalidBox(VarId),
    #[error("model has {} validation error(s)", .0.len())]
    InvalidModel(Vec<Diagnostic>),
    #[error(transparent)]
    Lowering(#[from] lowering::LowerError),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::MissingValue(_) => "MissingValue",
            OracleError::BoxTooLarge { .. } => "BoxTooLarge",
            OracleError::TooManyAuxiliaries(_) => "TooManyAuxiliaries",
            OracleError::ContinuousUnsupported(_) => "ContinuousUnsupported",
            OracleError::UnboundedVariable(_) => "UnboundedVariable",
            OracleError::TooLarge { .. } => "TooLarge",
            OracleError::InvalidBox(_) => "InvalidBox",
            OracleError::InvalidModel(_) => "ValidationFailed",
            OracleError::Lowering(e) => e.code(),
        }
    }
}

/// Direct (non-linearized) meaning of a typed constraint.
pub fn satisfies(constraint: &TypedConstraint, assignment: &Assignment) -> Result<bool, MissingValue> {
    let eval = |e: &LinearExpr| e.evaluate(assignment);
    Ok(match &constraint.kind {
        ConstraintKind::Bound { expr, sense, bound } => sense.holds(eval(expr)?, eval(&bound.as_expr())?),
        ConstraintKind::ConditionalBound { expr, sense, bound, indicator, off_behavior } => {
            if assignment.value(*indicator)? == Rational::ONE {
                sense.holds(eval(expr)?, eval(&bound.as_expr())?)
            } else {
                match off_behavior {
                    OffBehavior::ForceZero => eval(expr)?.is_zero(),
                    OffBehavior::Free => true,
                }
            }
        }
        ConstraintKind::Balance { lhs, rhs, .. } => eval(lhs)? == eval(rhs)?,
        ConstraintKind::SetPacking(s) | ConstraintKind::SetPartitioning(s) | ConstraintKind::SetCovering(s) => {
            let (family, _) = constraint.kind.set_selection().expect("set family");
            let mut total = Rational::ZERO;
            for (i, &m) in s.members.iter().enumerate() {
                total += s.weight(i) * assignment.value(m)?;
            }
            family.sense().holds(total, Rational::from(s.rhs))
        }
        ConstraintKind::VariableFix { var, value } => assignment.value(*var)? == *value,
        ConstraintKind::IfThen { antecedents, consequents } => {
            let mut all_on = true;
            for &a in antecedents {
                all_on &= assignment.value(a)? == Rational::ONE;
            }
            let mut all_follow = true;
            for &c in consequents {
                all_follow &= assignment.value(c)? == Rational::ONE;
            }
            !all_on || all_follow
        }
        ConstraintKind::EitherOr { alternatives } => {
            let mut any = false;
            for alt in alternatives {
                any |= alt.sense.holds(eval(&alt.expr)?, alt.rhs);
            }
            any
        }
        ConstraintKind::RawRow { expr, sense, rhs } => sense.holds(eval(expr)?, *rhs),
    })
}

/// Finite sample values per variable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleBox {
    values: BTreeMap<VarId, Vec<Rational>>,
}

fn integer_range(lower: Rational, upper: Rational) -> Vec<Rational> {
    (lower.ceil()..=upper.floor()).map(Rational::integer).collect()
}

impl SampleBox {
    /// Every integer in range for integral variables; for continuous ones,
    /// `continuous_steps + 1` evenly spaced points from lower to upper.
    pub fn for_variables(
        ids: impl IntoIterator<Item = VarId>,
        variables: &[Variable],
        continuous_steps: u32,
    ) -> Result<SampleBox, OracleError> {
        let mut values = BTreeMap::new();
        for id in ids {
            let v = &variables[id.0];
            let (lo, hi) = match (v.lower, v.upper) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => return Err(OracleError::UnboundedVariable(id)),
            };
            let list = if v.kind.is_integral() {
                integer_range(lo, hi)
            } else if lo == hi || continuous_steps == 0 {
                vec![lo, hi].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect()
            } else {
                let steps = Rational::from(continuous_steps);
                (0..=continuous_steps).map(|i| lo + (hi - lo) * Rational::from(i) / steps).collect()
            };
            if list.is_empty() {
                return Err(OracleError::InvalidBox(id));
            }
            values.insert(id, list);
        }
        Ok(SampleBox { values })
    }

    pub fn for_constraint(
        constraint: &TypedConstraint,
        variables: &[Variable],
        continuous_steps: u32,
    ) -> Result<SampleBox, OracleError> {
        Self::for_variables(constraint.variables(), variables, continuous_steps)
    }

    /// Explicit sample lists; every list must be nonempty and inside the variable's bounds.
    pub fn from_lists(lists: BTreeMap<VarId, Vec<Rational>>, variables: &[Variable]) -> Result<SampleBox, OracleError> {
        for (&id, list) in &lists {
            let v = variables.get(id.0).ok_or(OracleError::InvalidBox(id))?;
            let inside = |x: &Rational| v.lower.is_none_or(|l| *x >= l) && v.upper.is_none_or(|u| *x <= u);
            if list.is_empty() || !list.iter().all(inside) {
                return Err(OracleError::InvalidBox(id));
            }
        }
        Ok(SampleBox { values: lists })
    }

    pub fn values(&self, id: VarId) -> Option<&[Rational]> {
        self.values.get(&id).map(Vec::as_slice)
    }

    /// Cartesian size, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.values.values().fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub assignment: Vec<(VarId, Rational)>,
    pub semantics: bool,
    pub lowered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub points_checked: u128,
    pub mismatches: Vec<Mismatch>,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Calls `visit` with every point of the box over `ids`, in odometer order
/// (last variable fastest).
fn for_each_point(
    ids: &[VarId],
    sample: &SampleBox,
    assignment: &mut Assignment,
    visit: &mut dyn FnMut(&mut Assignment) -> Result<(), OracleError>,
) -> Result<(), OracleError> {
    let lists: Vec<&[Rational]> =
        ids.iter().map(|id| sample.values(*id).ok_or(OracleError::InvalidBox(*id))).collect::<Result<_, _>>()?;
    let mut index = vec![0usize; ids.len()];
    for (id, list) in ids.iter().zip(&lists) {
        assignment.set(*id, list[0]);
    }
    loop {
        visit(assignment)?;
        let mut pos = ids.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < lists[pos].len() {
                assignment.set(ids[pos], lists[pos][index[pos]]);
                break;
            }
            index[pos] = 0;
            assignment.set(ids[pos], lists[pos][0]);
        }
    }
}

fn rows_hold(rows: &[CanonicalRow], assignment: &Assignment) -> Result<bool, MissingValue> {
    for row in rows {
        if !row.is_satisfied(assignment)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares the typed semantics with the lowered rows at every box point,
/// projecting the auxiliary binaries out existentially.
pub fn check_equivalence(
    constraint: &TypedConstraint,
    lowered: &LoweredConstraint,
    sample: &SampleBox,
    cap: u128,
) -> Result<EquivalenceReport, OracleError> {
    let ids: Vec<VarId> = constraint.variables().into_iter().collect();
    let aux: Vec<VarId> = lowered.aux.iter().map(|v| v.id).collect();
    if aux.len() > MAX_AUXILIARIES {
        return Err(OracleError::TooManyAuxiliaries(aux.len()));
    }
    let points = ids.iter().try_fold(1u128, |acc, id| {
        sample.values(*id).map(|l| acc.saturating_mul(l.len() as u128)).ok_or(OracleError::InvalidBox(*id))
    })?;
    let combos = 1u128 << aux.len();
    if points.saturating_mul(combos) > cap {
        return Err(OracleError::BoxTooLarge { points, combos, cap });
    }

    let width = ids.iter().chain(&aux).map(|id| id.0 + 1).max().unwrap_or(0);
    let mut assignment = Assignment::with_len(width);
    let mut report = EquivalenceReport { points_checked: 0, mismatches: Vec::new() };
    for_each_point(&ids, sample, &mut assignment, &mut |a| {
        let semantic = satisfies(constraint, a)?;
        let mut lowered_ok = false;
        for mask in 0..combos {
            for (bit, id) in aux.iter().enumerate() {
                a.set(*id, Rational::integer(((mask >> bit) & 1) as i128));
            }
            if rows_hold(&lowered.rows, a)? {
                lowered_ok = true;
                break;
            }
        }
        report.points_checked += 1;
        if semantic != lowered_ok {
            report.mismatches.push(Mismatch {
                assignment: ids.iter().map(|id| (*id, a.get(*id).expect("assigned"))).collect(),
                semantics: semantic,
                lowered: lowered_ok,
            });
        }
        Ok(())
    })?;
    Ok(report)
}

/// Equivalence report for one constraint of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintCheck {
    pub constraint: ConstraintId,
    pub label: String,
    pub report: EquivalenceReport,
}

/// Lowers every constraint of `model` and checks it against its semantics
/// over the box induced by the variable bounds.
pub fn check_model(
    model: &Model,
    options: &LowerOptions,
    cap: u128,
    continuous_steps: u32,
) -> Result<Vec<ConstraintCheck>, OracleError> {
    let diagnostics: Vec<Diagnostic> = model.validate().into_iter().filter(Diagnostic::is_error).collect();
    if !diagnostics.is_empty() {
        return Err(OracleError::InvalidModel(diagnostics));
    }
    let mut out = Vec::with_capacity(model.constraints().len());
    for (i, c) in model.constraints().iter().enumerate() {
        let id = ConstraintId(i);
        let lowered = lowering::lower_constraint(c, id, model.variables(), options, model.variables().len())?;
        let sample = SampleBox::for_constraint(c, model.variables(), continuous_steps)?;
        let report = check_equivalence(c, &lowered, &sample, cap)?;
        out.push(ConstraintCheck { constraint: id, label: c.label.clone(), report });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Upper bound on the cartesian size of the search space.
    pub max_points: u128,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_points: DEFAULT_MAX_POINTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimumReport {
    pub status: SolveStatus,
    pub objective_value: Option<Rational>,
    pub witness: Option<Assignment>,
    /// Box points covered, including those ruled out by pruned subtrees.
    pub points_enumerated: u128,
}

impl OptimumReport {
    pub fn to_json(&self, variables: &[Variable]) -> serde_json::Value {
        let witness = self.witness.as_ref().map(|w| {
            variables
                .iter()
                .filter_map(|v| w.get(v.id).map(|x| (v.name.clone(), serde_json::to_value(x).expect("rational"))))
                .collect::<serde_json::Map<_, _>>()
        });
        json!({
            "status": self.status,
            "value": self.objective_value,
            "witness": witness,
            "points_enumerated": self.points_enumerated,
        })
    }
}

/// Depth-first enumeration over integer domains in variable order.
///
/// Each check runs as soon as its last variable is assigned, so an
/// infeasible prefix discards its whole subtree at once.
struct Search<'a> {
    domains: Vec<Vec<Rational>>,
    /// Checks that become decidable after assigning the variable at each depth.
    checks_at: Vec<Vec<usize>>,
    check: &'a dyn Fn(usize, &Assignment) -> bool,
    suffix: Vec<u128>,
    points: u128,
}

impl Search<'_> {
    fn new<'a>(domains: Vec<Vec<Rational>>, scopes: &[Vec<VarId>], check: &'a dyn Fn(usize, &Assignment) -> bool) -> (Search<'a>, Vec<usize>) {
        let n = domains.len();
        let mut checks_at = vec![Vec::new(); n];
        let mut immediate = Vec::new();
        for (i, scope) in scopes.iter().enumerate() {
            match scope.iter().map(|v| v.0).max() {
                Some(depth) => checks_at[depth].push(i),
                None => immediate.push(i),
            }
        }
        let mut suffix = vec![1u128; n + 1];
        for d in (0..n).rev() {
            suffix[d] = suffix[d + 1].saturating_mul(domains[d].len() as u128);
        }
        (Search { domains, checks_at, check, suffix, points: 0 }, immediate)
    }

    fn run(
        &mut self,
        depth: usize,
        assignment: &mut Assignment,
        leaf: &mut dyn FnMut(&Assignment) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if depth == self.domains.len() {
            self.points += 1;
            return leaf(assignment);
        }
        for k in 0..self.domains[depth].len() {
            assignment.set(VarId(depth), self.domains[depth][k]);
            if self.checks_at[depth].iter().all(|&c| (self.check)(c, assignment)) {
                self.run(depth + 1, assignment, leaf)?;
            } else {
                self.points = self.points.saturating_add(self.suffix[depth + 1]);
            }
        }
        assignment.unset(VarId(depth));
        ControlFlow::Continue(())
    }
}

fn integer_domains(variables: &[Variable], limits: &EnumerationLimits) -> Result<Vec<Vec<Rational>>, OracleError> {
    let mut domains = Vec::with_capacity(variables.len());
    for v in variables {
        if !v.kind.is_integral() {
            return Err(OracleError::ContinuousUnsupported(v.id));
        }
        match (v.lower, v.upper) {
            (Some(lo), Some(hi)) => domains.push(integer_range(lo, hi)),
            _ => return Err(OracleError::UnboundedVariable(v.id)),
        }
    }
    let points = domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
    if points > limits.max_points {
        return Err(OracleError::TooLarge { points, limit: limits.max_points });
    }
    Ok(domains)
}

fn better(direction: Direction, candidate: Rational, incumbent: Rational) -> bool {
    match direction {
        Direction::Max => candidate > incumbent,
        Direction::Min => candidate < incumbent,
    }
}

fn optimize(
    domains: Vec<Vec<Rational>>,
    scopes: &[Vec<VarId>],
    check: &dyn Fn(usize, &Assignment) -> bool,
    objective: Option<&Objective>,
) -> Result<OptimumReport, OracleError> {
    let n = domains.len();
    let (mut search, immediate) = Search::new(domains, scopes, check);
    let mut assignment = Assignment::with_len(n);
    if !immediate.iter().all(|&c| check(c, &assignment)) {
        return Ok(OptimumReport {
            status: SolveStatus::Infeasible,
            objective_value: None,
            witness: None,
            points_enumerated: search.suffix[0],
        });
    }
    let mut best: Option<(Rational, Assignment)> = None;
    let mut failure = None;
    let _ = search.run(0, &mut assignment, &mut |a| {
        let value = match objective.map(|o| o.expr.evaluate(a)) {
            None => Rational::ZERO,
            Some(Ok(v)) => v,
            Some(Err(e)) => {
                failure = Some(e);
                return ControlFlow::Break(());
            }
        };
        // Strict improvement only: the first optimum found is lexicographically smallest.
        let direction = objective.map_or(Direction::Min, |o| o.direction);
        if best.as_ref().is_none_or(|(b, _)| better(direction, value, *b)) {
            best = Some((value, a.clone()));
        }
        ControlFlow::Continue(())
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(match best {
        Some((value, witness)) => OptimumReport {
            status: SolveStatus::Optimal,
            objective_value: Some(value),
            witness: Some(witness),
            points_enumerated: search.points,
        },
        None => OptimumReport {
            status: SolveStatus::Infeasible,
            objective_value: None,
            witness: None,
            points_enumerated: search.points,
        },
    })
}

fn validated(model: &Model) -> Result<(), OracleError> {
    let errors: Vec<Diagnostic> = model.validate().into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(OracleError::InvalidModel(errors))
    }
}

/// Exact optimum of a pure-integer model by enumeration of its box, using
/// the typed semantics of each constraint.
///
/// Ties are broken toward the lexicographically smallest witness in
/// variable insertion order.
pub fn solve_by_enumeration(model: &Model, limits: &EnumerationLimits) -> Result<OptimumReport, OracleError> {
    validated(model)?;
    let domains = integer_domains(model.variables(), limits)?;
    let constraints = model.constraints();
    let scopes: Vec<Vec<VarId>> = constraints.iter().map(|c| c.variables().into_iter().collect()).collect();
    let check = |i: usize, a: &Assignment| satisfies(&constraints[i], a).unwrap_or(false);
    optimize(domains, &scopes, &check, model.objective())
}

/// Same search over a canonical form's rows (auxiliaries enumerated as ordinary binaries).
pub fn solve_canonical(form: &CanonicalForm, limits: &EnumerationLimits) -> Result<OptimumReport, OracleError> {
    let domains = integer_domains(&form.variables, limits)?;
    let scopes: Vec<Vec<VarId>> = form.rows.iter().map(|r| r.coefficients.keys().copied().collect()).collect();
    let check = |i: usize, a: &Assignment| form.rows[i].is_satisfied(a).unwrap_or(false);
    optimize(domains, &scopes, &check, Some(&form.objective))
}

/// Visits every feasible point of a pure-integer model in lexicographic order.
/// Returns the number of box points covered.
pub fn for_each_feasible(
    model: &Model,
    limits: &EnumerationLimits,
    mut visit: impl FnMut(&Assignment) -> ControlFlow<()>,
) -> Result<u128, OracleError> {
    validated(model)?;
    let domains = integer_domains(model.variables(), limits)?;
    let constraints = model.constraints();
    let scopes: Vec<Vec<VarId>> = constraints.iter().map(|c| c.variables().into_iter().collect()).collect();
    let check = |i: usize, a: &Assignment| satisfies(&constraints[i], a).unwrap_or(false);
    let n = domains.len();
    let (mut search, immediate) = Search::new(domains, &scopes, &check);
    let mut assignment = Assignment::with_len(n);
    if !immediate.iter().all(|&c| check(c, &assignment)) {
        return Ok(search.suffix[0]);
    }
    let _ = search.run(0, &mut assignment, &mut visit);
    Ok(search.points)
}

//! Compilation of typed constraints into canonical rows `a·x {<=,=,>=} b`.
//!
//! Big-M constants are derived per row from the variable boxes by interval
//! arithmetic, so they are the smallest values that keep every box point
//! reachable when a row is switched off.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    Alternative, BoundSpec, ConstraintId, ConstraintKind, Diagnostic, Direction, LinearExpr, MissingValue, Model,
    NodeId, Objective, OffBehavior, Sense, TypedConstraint, VarId, VarKind, Variable, AUX_PREFIX,
};
use crate::model::Assignment;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfThenStrength {
    /// One aggregated row, e.g. `2X - Y - Z <= 0`.
    Weak,
    /// One row per consequent, e.g. `X - Y <= 0`, `X - Z <= 0`.
    #[default]
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalStyle {
    /// Big-M constants derived from variable boxes.
    #[default]
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LowerOptions {
    #[serde(default)]
    pub if_then_strength: IfThenStrength,
    #[serde(default)]
    pub conditional_style: ConditionalStyle,
}

impl LowerOptions {
    pub fn with_strength(strength: IfThenStrength) -> Self {
        LowerOptions { if_then_strength: strength, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalRow {
    pub coefficients: BTreeMap<VarId, Rational>,
    pub sense: Sense,
    pub rhs: Rational,
    pub source: ConstraintId,
    pub omt_node: Option<NodeId>,
}

impl CanonicalRow {
    pub fn activity(&self, assignment: &Assignment) -> Result<Rational, MissingValue> {
        let mut total = Rational::ZERO;
        for (&id, &c) in &self.coefficients {
            total += c * assignment.value(id)?;
        }
        Ok(total)
    }

    pub fn is_satisfied(&self, assignment: &Assignment) -> Result<bool, MissingValue> {
        Ok(self.sense.holds(self.activity(assignment)?, self.rhs))
    }

    /// The row multiplied through by a positive factor.
    pub fn scaled(&self, factor: Rational) -> CanonicalRow {
        assert!(factor.is_positive(), "row scaling factor must be positive");
        CanonicalRow {
            coefficients: self.coefficients.iter().map(|(&id, &c)| (id, c * factor)).collect(),
            rhs: self.rhs * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub name: String,
    /// Model variables first, then auxiliaries.
    pub variables: Vec<Variable>,
    pub rows: Vec<CanonicalRow>,
    pub objective: Objective,
}

impl CanonicalForm {
    pub fn is_aux(variable: &Variable) -> bool {
        variable.name.starts_with(AUX_PREFIX)
    }

    pub fn aux_count(&self) -> usize {
        self.variables.iter().filter(|v| Self::is_aux(v)).count()
    }
}

/// Rows and auxiliary binaries produced for a single typed constraint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoweredConstraint {
    pub rows: Vec<CanonicalRow>,
    pub aux: Vec<Variable>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("constraint {constraint} needs a finite box but variable {variable} is unbounded")]
    UnboundedVariable { constraint: ConstraintId, variable: VarId },
    #[error("model has {} validation error(s)", .0.len())]
    ValidationFailed(Vec<Diagnostic>),
}

impl LowerError {
    pub fn code(&self) -> &'static str {
        match self {
            LowerError::UnboundedVariable { .. } => "UnboundedVariable",
            LowerError::ValidationFailed(_) => "ValidationFailed",
        }
    }
}

/// A variable without the finite bound an interval computation needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("variable {0} is unbounded")]
pub struct Unbounded(pub VarId);

fn lookup(variables: &[Variable], id: VarId) -> &Variable {
    &variables[id.0]
}

/// Largest value of `expr` over the variable box.
pub fn sup_box(expr: &LinearExpr, variables: &[Variable]) -> Result<Rational, Unbounded> {
    let mut total = expr.constant_term();
    for (&id, &c) in expr.terms() {
        let v = lookup(variables, id);
        let end = if c.is_positive() { v.upper } else { v.lower };
        total += c * end.ok_or(Unbounded(id))?;
    }
    Ok(total)
}

/// Smallest value of `expr` over the variable box.
pub fn inf_box(expr: &LinearExpr, variables: &[Variable]) -> Result<Rational, Unbounded> {
    sup_box(&-expr.clone(), variables).map(|s| -s)
}

/// Smallest M such that `expr sense rhs` relaxed by M holds on the whole box.
pub fn derive_big_m(expr: &LinearExpr, sense: Sense, rhs: Rational, variables: &[Variable]) -> Result<Rational, Unbounded> {
    let le = || sup_box(expr, variables).map(|s| (s - rhs).max(Rational::ZERO));
    let ge = || inf_box(expr, variables).map(|i| (rhs - i).max(Rational::ZERO));
    match sense {
        Sense::Le => le(),
        Sense::Ge => ge(),
        Sense::Eq => Ok(le()?.max(ge()?)),
    }
}

struct Lowerer<'a> {
    source: ConstraintId,
    omt_node: Option<NodeId>,
    variables: &'a [Variable],
    next_aux: usize,
    site: usize,
    adjust: &'a dyn Fn(usize, Rational) -> Rational,
    out: LoweredConstraint,
}

impl Lowerer<'_> {
    fn bounded(&self, r: Result<Rational, Unbounded>) -> Result<Rational, LowerError> {
        r.map_err(|Unbounded(variable)| LowerError::UnboundedVariable { constraint: self.source, variable })
    }

    /// Passes a derived big-M style constant through the adjustment hook.
    fn big_m(&mut self, value: Result<Rational, Unbounded>) -> Result<Rational, LowerError> {
        let value = self.bounded(value)?;
        let adjusted = (self.adjust)(self.site, value);
        self.site += 1;
        Ok(adjusted)
    }

    fn row(&mut self, expr: LinearExpr, sense: Sense, rhs: Rational) {
        let rhs = rhs - expr.constant_term();
        self.out.rows.push(CanonicalRow {
            coefficients: expr.terms().clone(),
            sense,
            rhs,
            source: self.source,
            omt_node: self.omt_node,
        });
    }

    fn aux(&mut self) -> VarId {
        let id = VarId(self.next_aux);
        self.next_aux += 1;
        self.out.aux.push(Variable {
            id,
            name: format!("{AUX_PREFIX}{}", id.0),
            kind: VarKind::Binary,
            lower: Some(Rational::ZERO),
            upper: Some(Rational::ONE),
        });
        id
    }

    fn lower(&mut self, kind: &ConstraintKind, options: &LowerOptions) -> Result<(), LowerError> {
        match kind {
            ConstraintKind::Bound { expr, sense, bound } => {
                self.row(expr.clone() - bound.as_expr(), *sense, Rational::ZERO);
            }
            ConstraintKind::RawRow { expr, sense, rhs } => self.row(expr.clone(), *sense, *rhs),
            ConstraintKind::Balance { lhs, rhs, .. } => {
                self.row(lhs.clone() - rhs.clone(), Sense::Eq, Rational::ZERO);
            }
            ConstraintKind::SetPacking(s) | ConstraintKind::SetPartitioning(s) | ConstraintKind::SetCovering(s) => {
                let (family, _) = kind.set_selection().expect("set family");
                self.row(s.expr(), family.sense(), Rational::from(s.rhs));
            }
            ConstraintKind::VariableFix { var, value } => self.row(LinearExpr::var(*var), Sense::Eq, *value),
            ConstraintKind::ConditionalBound { expr, sense, bound, indicator, off_behavior } => {
                self.conditional(expr, *sense, bound, *indicator, *off_behavior)?;
            }
            ConstraintKind::IfThen { antecedents, consequents } => {
                let k = Rational::integer(antecedents.len() as i128);
                let ante = LinearExpr::sum_of(antecedents.iter().copied());
                match options.if_then_strength {
                    IfThenStrength::Weak => {
                        let m = Rational::integer(consequents.len() as i128);
                        let expr = ante * m - LinearExpr::sum_of(consequents.iter().copied());
                        self.row(expr, Sense::Le, m * (k - Rational::ONE));
                    }
                    IfThenStrength::Strong => {
                        for &c in consequents {
                            self.row(ante.clone() - LinearExpr::var(c), Sense::Le, k - Rational::ONE);
                        }
                    }
                }
            }
            ConstraintKind::EitherOr { alternatives } => self.either_or(alternatives)?,
        }
        Ok(())
    }

    fn conditional(
        &mut self,
        expr: &LinearExpr,
        sense: Sense,
        bound: &BoundSpec,
        indicator: VarId,
        off: OffBehavior,
    ) -> Result<(), LowerError> {
        let ind = LinearExpr::var(indicator);
        match (off, bound) {
            (OffBehavior::ForceZero, BoundSpec::Constant(c)) => {
                // expr - c·ind <= 0 (or >= 0) gives the bound when on and one
                // side of expr = 0 when off; the other side needs a box constant.
                self.row(expr.clone() - ind.scaled(*c), sense, Rational::ZERO);
                match sense {
                    Sense::Ge => {
                        let upper = self.big_m(sup_box(expr, self.variables))?;
                        self.row(expr.clone() - ind.scaled(upper), Sense::Le, Rational::ZERO);
                    }
                    _ => {
                        let lower = self.bounded(inf_box(expr, self.variables))?;
                        if lower.is_negative() {
                            let depth = self.big_m(Ok(-lower))?;
                            self.row(expr.clone() + ind.scaled(depth), Sense::Ge, Rational::ZERO);
                        }
                    }
                }
            }
            (OffBehavior::ForceZero, BoundSpec::Expr(b)) => {
                // The two indicator rows pin expr to 0 when off, so the
                // relaxation only has to absorb `0 sense b` over the box.
                let m = self.big_m(derive_big_m(&-b.clone(), sense, Rational::ZERO, self.variables))?;
                self.relax_with(expr.clone() - b.clone(), sense, Rational::ZERO, &ind, m);
                let upper = self.bounded(sup_box(expr, self.variables))?;
                let lower = self.bounded(inf_box(expr, self.variables))?;
                if upper.is_positive() {
                    let upper = self.big_m(Ok(upper))?;
                    self.row(expr.clone() - ind.scaled(upper), Sense::Le, Rational::ZERO);
                }
                if lower.is_negative() {
                    let depth = self.big_m(Ok(-lower))?;
                    self.row(expr.clone() + ind.scaled(depth), Sense::Ge, Rational::ZERO);
                }
            }
            (OffBehavior::Free, bound) => {
                self.relaxed(expr.clone() - bound.as_expr(), sense, Rational::ZERO, &ind)?;
            }
        }
        Ok(())
    }

    /// `expr sense rhs` enforced when `on` is 1 and relaxed by big-M when 0.
    fn relaxed(&mut self, expr: LinearExpr, sense: Sense, rhs: Rational, on: &LinearExpr) -> Result<(), LowerError> {
        let m = self.big_m(derive_big_m(&expr, sense, rhs, self.variables))?;
        self.relax_with(expr, sense, rhs, on, m);
        Ok(())
    }

    fn relax_with(&mut self, expr: LinearExpr, sense: Sense, rhs: Rational, on: &LinearExpr, m: Rational) {
        match sense {
            // expr <= rhs + M(1 - on)
            Sense::Le => self.row(expr + on.scaled(m), Sense::Le, rhs + m),
            // expr >= rhs - M(1 - on)
            Sense::Ge => self.row(expr - on.scaled(m), Sense::Ge, rhs - m),
            Sense::Eq => {
                self.row(expr.clone() + on.scaled(m), Sense::Le, rhs + m);
                self.row(expr - on.scaled(m), Sense::Ge, rhs - m);
            }
        }
    }

    fn either_or(&mut self, alternatives: &[Alternative]) -> Result<(), LowerError> {
        // z_i = 1 relaxes alternative i; at least one alternative stays enforced.
        let selectors: Vec<VarId> = alternatives.iter().map(|_| self.aux()).collect();
        for (alt, &z) in alternatives.iter().zip(&selectors) {
            let m = self.big_m(derive_big_m(&alt.expr, alt.sense, alt.rhs, self.variables))?;
            let z = LinearExpr::var(z);
            match alt.sense {
                Sense::Ge => self.row(alt.expr.clone() + z.scaled(m), Sense::Ge, alt.rhs),
                _ => self.row(alt.expr.clone() - z.scaled(m), Sense::Le, alt.rhs),
            }
        }
        let r = Rational::integer(alternatives.len() as i128);
        self.row(LinearExpr::sum_of(selectors), Sense::Le, r - Rational::ONE);
        Ok(())
    }
}

/// Lowers one constraint. Auxiliary variables get ids from `first_aux` on.
pub fn lower_constraint(
    constraint: &TypedConstraint,
    source: ConstraintId,
    variables: &[Variable],
    options: &LowerOptions,
    first_aux: usize,
) -> Result<LoweredConstraint, LowerError> {
    lower_constraint_adjusted(constraint, source, variables, options, first_aux, &|_, m| m)
}

/// Like [`lower_constraint`], but every derived big-M constant is passed
/// through `adjust(site, derived)` first, where `site` counts the constants
/// of this constraint in emission order. Constants are magnitudes: a
/// smaller value always gives a tighter row.
///
/// This exists to probe tightness: shrinking a derived M must cut off a
/// point the typed semantics allow.
pub fn lower_constraint_adjusted(
    constraint: &TypedConstraint,
    source: ConstraintId,
    variables: &[Variable],
    options: &LowerOptions,
    first_aux: usize,
    adjust: &dyn Fn(usize, Rational) -> Rational,
) -> Result<LoweredConstraint, LowerError> {
    let mut lowerer = Lowerer {
        source,
        omt_node: constraint.omt_node,
        variables,
        next_aux: first_aux,
        site: 0,
        adjust,
        out: LoweredConstraint::default(),
    };
    lowerer.lower(&constraint.kind, options)?;
    Ok(lowerer.out)
}

/// Number of derived big-M constants [`lower_constraint`] would use.
pub fn big_m_sites(constraint: &TypedConstraint, variables: &[Variable]) -> Result<usize, LowerError> {
    let count = std::cell::Cell::new(0usize);
    lower_constraint_adjusted(
        constraint,
        ConstraintId(0),
        variables,
        &LowerOptions::default(),
        variables.len(),
        &|_, m| {
            count.set(count.get() + 1);
            m
        },
    )?;
    Ok(count.get())
}

pub fn lower_model(model: &Model, options: &LowerOptions) -> Result<CanonicalForm, LowerError> {
    let diagnostics = model.validate();
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(LowerError::ValidationFailed(diagnostics.into_iter().filter(Diagnostic::is_error).collect()));
    }
    let mut variables = model.variables().to_vec();
    let mut rows = Vec::new();
    for (i, c) in model.constraints().iter().enumerate() {
        let lowered = lower_constraint(c, ConstraintId(i), model.variables(), options, variables.len())?;
        rows.extend(lowered.rows);
        variables.extend(lowered.aux);
    }
    let objective = model
        .objective()
        .cloned()
        .unwrap_or(Objective { direction: Direction::Min, expr: LinearExpr::zero() });
    Ok(CanonicalForm { name: model.name().to_string(), variables, rows, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BalanceFlavor;

    fn int_var(id: usize, lo: i64, hi: i64) -> Variable {
        Variable {
            id: VarId(id),
            name: format!("v{id}"),
            kind: VarKind::Integer,
            lower: Some(lo.into()),
            upper: Some(hi.into()),
        }
    }

    fn bin_var(id: usize) -> Variable {
        Variable { kind: VarKind::Binary, ..int_var(id, 0, 1) }
    }

    fn coeffs(row: &CanonicalRow) -> Vec<(usize, i128)> {
        row.coefficients.iter().map(|(id, c)| (id.0, c.numer())).collect()
    }

    /// Exhaustive max of an expression over an integer box.
    fn brute_sup(expr: &LinearExpr, vars: &[Variable]) -> Rational {
        let ids: Vec<VarId> = expr.variables().collect();
        let mut best: Option<Rational> = None;
        let mut values = vec![0i64; ids.len()];
        let lo: Vec<i64> = ids.iter().map(|id| vars[id.0].lower.unwrap().floor() as i64).collect();
        let hi: Vec<i64> = ids.iter().map(|id| vars[id.0].upper.unwrap().floor() as i64).collect();
        values.copy_from_slice(&lo);
        loop {
            let mut a = Assignment::with_len(vars.len());
            for (id, &v) in ids.iter().zip(&values) {
                a.set(*id, v.into());
            }
            let val = expr.evaluate(&a).unwrap();
            best = Some(best.map_or(val, |b| b.max(val)));
            let mut i = 0;
            loop {
                if i == ids.len() {
                    return best.unwrap();
                }
                if values[i] < hi[i] {
                    values[i] += 1;
                    break;
                }
                values[i] = lo[i];
                i += 1;
            }
        }
    }

    #[test]
    fn big_m_time_window_example() {
        let vars = vec![int_var(0, 0, 10), int_var(1, 0, 10)];
        let (ti, tj) = (VarId(0), VarId(1));
        // t_j >= t_i + 3, relaxed: t_i + 3 - t_j <= 0
        let le_form = LinearExpr::from_terms([(ti, 1), (tj, -1)]).with_constant(3);
        let oracle = brute_sup(&le_form, &vars);
        assert_eq!(oracle, Rational::integer(13));
        assert_eq!(derive_big_m(&le_form, Sense::Le, Rational::ZERO, &vars), Ok(oracle));
        let ge_form = LinearExpr::from_terms([(tj, 1), (ti, -1)]).with_constant(-3);
        assert_eq!(derive_big_m(&ge_form, Sense::Ge, Rational::ZERO, &vars), Ok(oracle));
    }

    #[test]
    fn big_m_degenerate_cases() {
        let vars = vec![int_var(0, 0, 10)];
        assert_eq!(derive_big_m(&LinearExpr::constant(5), Sense::Le, 7.into(), &vars), Ok(Rational::ZERO));
        let unbounded = vec![Variable { upper: None, ..int_var(0, 0, 0) }];
        assert_eq!(
            derive_big_m(&LinearExpr::var(VarId(0)), Sense::Le, 1.into(), &unbounded),
            Err(Unbounded(VarId(0)))
        );
    }

    #[test]
    fn if_then_weak_and_strong() {
        let vars = vec![bin_var(0), bin_var(1), bin_var(2)];
        let c = TypedConstraint::if_then(vec![VarId(0)], vec![VarId(1), VarId(2)]);
        let weak =
            lower_constraint(&c, ConstraintId(0), &vars, &LowerOptions::with_strength(IfThenStrength::Weak), 3).unwrap();
        assert_eq!(weak.rows.len(), 1);
        assert_eq!(coeffs(&weak.rows[0]), vec![(0, 2), (1, -1), (2, -1)]);
        assert_eq!((weak.rows[0].sense, weak.rows[0].rhs), (Sense::Le, Rational::ZERO));

        let strong = lower_constraint(&c, ConstraintId(0), &vars, &LowerOptions::default(), 3).unwrap();
        assert_eq!(strong.rows.len(), 2);
        assert_eq!(coeffs(&strong.rows[0]), vec![(0, 1), (1, -1)]);
        assert_eq!(coeffs(&strong.rows[1]), vec![(0, 1), (2, -1)]);
        assert!(strong.rows.iter().all(|r| r.rhs.is_zero() && r.sense == Sense::Le));
        assert!(strong.aux.is_empty());
    }

    #[test]
    fn batch_capacity_row() {
        let vars = vec![int_var(0, 0, 12), bin_var(1)];
        let c = TypedConstraint::conditional(
            LinearExpr::var(VarId(0)),
            Sense::Le,
            BoundSpec::Constant(10.into()),
            VarId(1),
            OffBehavior::ForceZero,
        );
        let out = lower_constraint(&c, ConstraintId(0), &vars, &LowerOptions::default(), 2).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(coeffs(&out.rows[0]), vec![(0, 1), (1, -10)]);
        assert_eq!((out.rows[0].sense, out.rows[0].rhs), (Sense::Le, Rational::ZERO));
    }

    #[test]
    fn conditional_ge_force_zero_adds_upper_row() {
        let vars = vec![int_var(0, 0, 12), bin_var(1)];
        let c = TypedConstraint::conditional(
            LinearExpr::var(VarId(0)),
            Sense::Ge,
            BoundSpec::Constant(3.into()),
            VarId(1),
            OffBehavior::ForceZero,
        );
        let out = lower_constraint(&c, ConstraintId(0), &vars, &LowerOptions::default(), 2).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(coeffs(&out.rows[0]), vec![(0, 1), (1, -3)]);
        assert_eq!(out.rows[0].sense, Sense::Ge);
        assert_eq!(coeffs(&out.rows[1]), vec![(0, 1), (1, -12)]);
        assert_eq!(out.rows[1].sense, Sense::Le);
    }

    #[test]
    fn either_or_rows() {
        let vars = vec![int_var(0, 0, 7)];
        let x = LinearExpr::var(VarId(0));
        let c = TypedConstraint::either_or(vec![
            Alternative { expr: x.clone(), sense: Sense::Le, rhs: 2.into() },
            Alternative { expr: x, sense: Sense::Ge, rhs: 5.into() },
        ]);
        let out = lower_constraint(&c, ConstraintId(0), &vars, &LowerOptions::default(), 1).unwrap();
        assert_eq!(out.aux.len(), 2);
        assert_eq!(out.aux[0].name, "__aux1");
        assert_eq!(out.rows.len(), 3);
        // x - 5 z1 <= 2 ; x + 5 z2 >= 5 ; z1 + z2 <= 1
        assert_eq!(coeffs(&out.rows[0]), vec![(0, 1), (1, -5)]);
        assert_eq!(coeffs(&out.rows[1]), vec![(0, 1), (2, 5)]);
        assert_eq!(coeffs(&out.rows[2]), vec![(1, 1), (2, 1)]);
        assert_eq!(out.rows[2].rhs, Rational::ONE);
        assert_eq!(big_m_sites(&c, &vars), Ok(2));
    }

    #[test]
    fn model_row_counts_and_provenance() {
        let mut m = Model::new("m");
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        let x = m.add_integer("x", 0, 7).unwrap();
        m.add_constraint(TypedConstraint::set_partitioning(vec![a, b]).at_node(17)).unwrap();
        m.add_constraint(TypedConstraint::upper(LinearExpr::var(x), 6).at_node(1)).unwrap();
        let form = lower_model(&m, &LowerOptions::default()).unwrap();
        assert_eq!(form.rows.len(), 2);
        assert_eq!(form.aux_count(), 0);
        assert_eq!(form.rows[0].omt_node, Some(17));
        assert_eq!(form.rows[1].source, ConstraintId(1));

        m.add_constraint(TypedConstraint::either_or(vec![
            Alternative { expr: LinearExpr::var(x), sense: Sense::Le, rhs: 2.into() },
            Alternative { expr: LinearExpr::var(x), sense: Sense::Ge, rhs: 5.into() },
        ]))
        .unwrap();
        m.add_constraint(TypedConstraint::balance(LinearExpr::var(a), LinearExpr::var(b), BalanceFlavor::Flow)).unwrap();
        let form = lower_model(&m, &LowerOptions::default()).unwrap();
        assert_eq!(form.rows.len(), 6);
        assert_eq!(form.variables.len(), 5);
        assert_eq!(form.variables[3].name, "__aux3");
        let sources: Vec<usize> = form.rows.iter().map(|r| r.source.0).collect();
        assert_eq!(sources, vec![0, 1, 2, 2, 2, 3]);
    }

    #[test]
    fn validation_failure_blocks_lowering() {
        let m = Model::from_parts("bad", vec![], vec![TypedConstraint::fix(VarId(0), 1)], None);
        assert!(matches!(lower_model(&m, &LowerOptions::default()), Err(LowerError::ValidationFailed(_))));
    }

    #[test]
    fn unbounded_is_reported_with_constraint() {
        let mut m = Model::new("u");
        let y = m.add_continuous("y", Some(Rational::ZERO), None).unwrap();
        let s = m.add_binary("s").unwrap();
        m.add_constraint(TypedConstraint::upper(LinearExpr::var(y), 3)).unwrap();
        m.add_constraint(TypedConstraint::conditional(
            LinearExpr::var(y),
            Sense::Ge,
            BoundSpec::Constant(1.into()),
            s,
            OffBehavior::ForceZero,
        ))
        .unwrap();
        assert_eq!(
            lower_model(&m, &LowerOptions::default()),
            Err(LowerError::UnboundedVariable { constraint: ConstraintId(1), variable: y })
        );
    }
}

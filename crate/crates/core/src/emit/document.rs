use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EmitError;
use crate::model::{
    Alternative, BalanceFlavor, BoundSpec, ConstraintKind, Diagnostic, DiagnosticCode, Direction, LinearExpr, Model,
    NodeId, Objective, OffBehavior, Sense, SetSelection, Subject, TypedConstraint, VarId, VarKind, Variable,
};
use crate::rational::Rational;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    schema_version: String,
    name: String,
    variables: Vec<DocVariable>,
    constraints: Vec<DocConstraint>,
    objective: Option<DocObjective>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocVariable {
    name: String,
    kind: VarKind,
    lower: Option<Rational>,
    upper: Option<Rational>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocTerm {
    var: String,
    coef: Rational,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocExpr {
    terms: Vec<DocTerm>,
    constant: Rational,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum DocBound {
    Constant(Rational),
    Expr(DocExpr),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocSelection {
    members: Vec<String>,
    weights: Option<Vec<Rational>>,
    rhs: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocAlternative {
    expr: DocExpr,
    sense: Sense,
    rhs: Rational,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum DocKind {
    Bound {
        expr: DocExpr,
        sense: Sense,
        bound: DocBound,
    },
    ConditionalBound {
        expr: DocExpr,
        sense: Sense,
        bound: DocBound,
        indicator: String,
        off_behavior: OffBehavior,
    },
    Balance {
        lhs: DocExpr,
        rhs: DocExpr,
        flavor: BalanceFlavor,
    },
    SetPacking(DocSelection),
    SetPartitioning(DocSelection),
    SetCovering(DocSelection),
    VariableFix {
        var: String,
        value: Rational,
    },
    IfThen {
        antecedents: Vec<String>,
        consequents: Vec<String>,
    },
    EitherOr {
        alternatives: Vec<DocAlternative>,
    },
    RawRow {
        expr: DocExpr,
        sense: Sense,
        rhs: Rational,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct DocConstraint {
    label: String,
    omt_node: Option<NodeId>,
    #[serde(flatten)]
    kind: DocKind,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocObjective {
    direction: Direction,
    expr: DocExpr,
}

struct Writer<'a> {
    model: &'a Model,
}

impl Writer<'_> {
    fn name(&self, id: VarId) -> String {
        self.model.name_of(id)
    }

    fn names(&self, ids: &[VarId]) -> Vec<String> {
        ids.iter().map(|&id| self.name(id)).collect()
    }

    fn expr(&self, e: &LinearExpr) -> DocExpr {
        DocExpr {
            terms: e.terms().iter().map(|(&id, &coef)| DocTerm { var: self.name(id), coef }).collect(),
            constant: e.constant_term(),
        }
    }

    fn bound(&self, b: &BoundSpec) -> DocBound {
        match b {
            BoundSpec::Constant(c) => DocBound::Constant(*c),
            BoundSpec::Expr(e) => DocBound::Expr(self.expr(e)),
        }
    }

    fn selection(&self, s: &SetSelection) -> DocSelection {
        DocSelection { members: self.names(&s.members), weights: s.weights.clone(), rhs: s.rhs }
    }

    fn kind(&self, k: &ConstraintKind) -> DocKind {
        match k {
            ConstraintKind::Bound { expr, sense, bound } => {
                DocKind::Bound { expr: self.expr(expr), sense: *sense, bound: self.bound(bound) }
            }
            ConstraintKind::ConditionalBound { expr, sense, bound, indicator, off_behavior } => {
                DocKind::ConditionalBound {
                    expr: self.expr(expr),
                    sense: *sense,
                    bound: self.bound(bound),
                    indicator: self.name(*indicator),
                    off_behavior: *off_behavior,
                }
            }
            ConstraintKind::Balance { lhs, rhs, flavor } => {
                DocKind::Balance { lhs: self.expr(lhs), rhs: self.expr(rhs), flavor: *flavor }
            }
            ConstraintKind::SetPacking(s) => DocKind::SetPacking(self.selection(s)),
            ConstraintKind::SetPartitioning(s) => DocKind::SetPartitioning(self.selection(s)),
            ConstraintKind::SetCovering(s) => DocKind::SetCovering(self.selection(s)),
            ConstraintKind::VariableFix { var, value } => DocKind::VariableFix { var: self.name(*var), value: *value },
            ConstraintKind::IfThen { antecedents, consequents } => DocKind::IfThen {
                antecedents: self.names(antecedents),
                consequents: self.names(consequents),
            },
            ConstraintKind::EitherOr { alternatives } => DocKind::EitherOr {
                alternatives: alternatives
                    .iter()
                    .map(|a| DocAlternative { expr: self.expr(&a.expr), sense: a.sense, rhs: a.rhs })
                    .collect(),
            },
            ConstraintKind::RawRow { expr, sense, rhs } => {
                DocKind::RawRow { expr: self.expr(expr), sense: *sense, rhs: *rhs }
            }
        }
    }
}

/// Serializes `model` as a pretty-printed JSON document ending in a newline.
pub fn write_model(model: &Model) -> String {
    let w = Writer { model };
    let doc = Document {
        schema_version: SCHEMA_VERSION.to_string(),
        name: model.name().to_string(),
        variables: model
            .variables()
            .iter()
            .map(|v| DocVariable { name: v.name.clone(), kind: v.kind, lower: v.lower, upper: v.upper })
            .collect(),
        constraints: model
            .constraints()
            .iter()
            .map(|c| DocConstraint { label: c.label.clone(), omt_node: c.omt_node, kind: w.kind(&c.kind) })
            .collect(),
        objective: model.objective().map(|o| DocObjective { direction: o.direction, expr: w.expr(&o.expr) }),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("documents serialize");
    text.push('\n');
    text
}

struct Reader {
    ids: HashMap<String, VarId>,
    subject: Subject,
}

impl Reader {
    fn id(&self, name: &str) -> Result<VarId, EmitError> {
        self.ids.get(name).copied().ok_or_else(|| {
            EmitError::Invalid(vec![Diagnostic::new(
                DiagnosticCode::UnknownVariable,
                self.subject,
                format!("unknown variable {name:?}"),
            )])
        })
    }

    fn ids(&self, names: &[String]) -> Result<Vec<VarId>, EmitError> {
        names.iter().map(|n| self.id(n)).collect()
    }

    fn expr(&self, e: DocExpr) -> Result<LinearExpr, EmitError> {
        let mut out = LinearExpr::constant(e.constant);
        for t in e.terms {
            out.add_term(self.id(&t.var)?, t.coef);
        }
        Ok(out)
    }

    fn bound(&self, b: DocBound) -> Result<BoundSpec, EmitError> {
        Ok(match b {
            DocBound::Constant(c) => BoundSpec::Constant(c),
            DocBound::Expr(e) => BoundSpec::Expr(self.expr(e)?),
        })
    }

    fn selection(&self, s: DocSelection) -> Result<SetSelection, EmitError> {
        Ok(SetSelection { members: self.ids(&s.members)?, weights: s.weights, rhs: s.rhs })
    }

    fn kind(&self, k: DocKind) -> Result<ConstraintKind, EmitError> {
        Ok(match k {
            DocKind::Bound { expr, sense, bound } => {
                ConstraintKind::Bound { expr: self.expr(expr)?, sense, bound: self.bound(bound)? }
            }
            DocKind::ConditionalBound { expr, sense, bound, indicator, off_behavior } => {
                ConstraintKind::ConditionalBound {
                    expr: self.expr(expr)?,
                    sense,
                    bound: self.bound(bound)?,
                    indicator: self.id(&indicator)?,
                    off_behavior,
                }
            }
            DocKind::Balance { lhs, rhs, flavor } => {
                ConstraintKind::Balance { lhs: self.expr(lhs)?, rhs: self.expr(rhs)?, flavor }
            }
            DocKind::SetPacking(s) => ConstraintKind::SetPacking(self.selection(s)?),
            DocKind::SetPartitioning(s) => ConstraintKind::SetPartitioning(self.selection(s)?),
            DocKind::SetCovering(s) => ConstraintKind::SetCovering(self.selection(s)?),
            DocKind::VariableFix { var, value } => ConstraintKind::VariableFix { var: self.id(&var)?, value },
            DocKind::IfThen { antecedents, consequents } => ConstraintKind::IfThen {
                antecedents: self.ids(&antecedents)?,
                consequents: self.ids(&consequents)?,
            },
            DocKind::EitherOr { alternatives } => ConstraintKind::EitherOr {
                alternatives: alternatives
                    .into_iter()
                    .map(|a| Ok(Alternative { expr: self.expr(a.expr)?, sense: a.sense, rhs: a.rhs }))
                    .collect::<Result<_, EmitError>>()?,
            },
            DocKind::RawRow { expr, sense, rhs } => ConstraintKind::RawRow { expr: self.expr(expr)?, sense, rhs },
        })
    }
}

/// Reads a document written by [`write_model`] and validates the result.
/// Warnings are allowed; any error diagnostic rejects the document.
pub fn parse_model(text: &str) -> Result<Model, EmitError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| EmitError::MalformedDocument(e.to_string()))?;
    match value.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => {
            return Err(EmitError::SchemaMismatch { found: v.clone(), expected: SCHEMA_VERSION.to_string() })
        }
        Some(_) => return Err(EmitError::MalformedDocument("schema_version must be a string".into())),
        None => return Err(EmitError::MalformedDocument("missing schema_version".into())),
    }
    let doc: Document = serde_json::from_value(value).map_err(|e| EmitError::MalformedDocument(e.to_string()))?;
    let variables: Vec<Variable> = doc
        .variables
        .into_iter()
        .enumerate()
        .map(|(i, v)| Variable { id: VarId(i), name: v.name, kind: v.kind, lower: v.lower, upper: v.upper })
        .collect();
    let mut reader = Reader { ids: HashMap::new(), subject: Subject::Model };
    for v in &variables {
        reader.ids.entry(v.name.clone()).or_insert(v.id);
    }
    let mut constraints = Vec::with_capacity(doc.constraints.len());
    for (i, c) in doc.constraints.into_iter().enumerate() {
        reader.subject = Subject::Constraint(i);
        constraints.push(TypedConstraint { kind: reader.kind(c.kind)?, label: c.label, omt_node: c.omt_node });
    }
    reader.subject = Subject::Objective;
    let objective = match doc.objective {
        Some(o) => Some(Objective { direction: o.direction, expr: reader.expr(o.expr)? }),
        None => None,
    };
    let model = Model::from_parts(doc.name, variables, constraints, objective);
    let errors: Vec<Diagnostic> = model.validate().into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(EmitError::Invalid(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BalanceFlavor, OffBehavior};

    fn sample() -> Model {
        let mut m = Model::new("sample");
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        let q = m.add_integer("q", 0, 9).unwrap();
        let s = m.add_continuous("s", Some(Rational::new(-1, 2).unwrap()), None).unwrap();
        m.add_constraint(TypedConstraint::set_packing(vec![x, y]).labeled("pack").at_node(11)).unwrap();
        m.add_constraint(
            TypedConstraint::conditional(LinearExpr::var(q), Sense::Le, BoundSpec::Constant(7.into()), x, OffBehavior::ForceZero)
                .at_node(3),
        )
        .unwrap();
        m.add_constraint(TypedConstraint::balance(LinearExpr::var(s), LinearExpr::var(q).with_constant(1), BalanceFlavor::Flow))
            .unwrap();
        m.add_constraint(TypedConstraint::if_then(vec![x], vec![y])).unwrap();
        m.set_objective(Direction::Max, LinearExpr::from_terms([(x, 2), (q, 1)])).unwrap();
        m
    }

    #[test]
    fn round_trip_and_shape() {
        let m = sample();
        let text = write_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert_eq!(write_model(&parse_model(&text).unwrap()), text);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["constraints"][0]["family"], "set_packing");
        assert_eq!(v["constraints"][0]["omt_node"], 11);
        assert_eq!(v["variables"][3]["lower"], serde_json::json!({"num": -1, "den": 2}));
    }

    #[test]
    fn document_errors() {
        let text = write_model(&sample());
        let unknown = text.replace("\"set_packing\"", "\"set_juggling\"");
        assert!(matches!(parse_model(&unknown), Err(EmitError::MalformedDocument(_))));
        let old = text.replace("\"schema_version\": \"1\"", "\"schema_version\": \"0.0\"");
        assert!(matches!(parse_model(&old), Err(EmitError::SchemaMismatch { .. })));
        assert!(matches!(parse_model("{"), Err(EmitError::MalformedDocument(_))));
        let dangling = text.replacen("\"members\": [\n        \"x\"", "\"members\": [\n        \"nope\"", 1);
        assert_ne!(dangling, text);
        assert!(matches!(parse_model(&dangling), Err(EmitError::Invalid(_))));
    }
}

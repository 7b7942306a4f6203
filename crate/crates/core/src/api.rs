//! Operations shared by the command line, the HTTP service and the C
//! interface, so all three return the same bytes for the same model.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::corpus::CorpusError;
use crate::emit::{self, EmitError};
use crate::implicit::ImplicitError;
use crate::lowering::{self, IfThenStrength, LowerError, LowerOptions};
use crate::model::{Diagnostic, Model, ModelError, Subject};
use crate::omt::TreeError;
use crate::oracle::{self, ConstraintCheck, EnumerationLimits, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Implicit(#[from] ImplicitError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Model(e) => e.code(),
            Error::Lower(e) => e.code(),
            Error::Oracle(e) => e.code(),
            Error::Emit(e) => e.code(),
            Error::Tree(e) => e.code(),
            Error::Implicit(e) => e.code(),
            Error::Corpus(e) => e.code(),
        }
    }

    /// The part of the model the error is about, when there is one.
    pub fn subject(&self) -> Option<Subject> {
        let first = |d: &[Diagnostic]| d.first().map(|d| d.subject);
        match self {
            Error::Model(ModelError::Invalid(d)) => Some(d.subject),
            Error::Lower(LowerError::UnboundedVariable { constraint, .. }) => Some(Subject::Constraint(constraint.0)),
            Error::Lower(LowerError::ValidationFailed(d)) => first(d),
            Error::Oracle(OracleError::InvalidModel(d)) => first(d),
            Error::Oracle(OracleError::Lowering(LowerError::ValidationFailed(d))) => first(d),
            Error::Emit(EmitError::Invalid(d)) => first(d),
            _ => None,
        }
    }

    /// Error envelope shared by the service and the `--json` CLI output.
    pub fn envelope(&self) -> Value {
        json!({ "code": self.code(), "message": self.to_string(), "subject": self.subject() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Lp,
    Mps,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(Format::Lp),
            "mps" => Ok(Format::Mps),
            other => Err(format!("unknown format {other:?} (expected lp or mps)")),
        }
    }
}

impl FromStr for IfThenStrength {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "weak" => Ok(IfThenStrength::Weak),
            "strong" => Ok(IfThenStrength::Strong),
            other => Err(format!("unknown if-then strength {other:?} (expected weak or strong)")),
        }
    }
}

pub fn compile(model: &Model, format: Format, options: &LowerOptions) -> Result<String, Error> {
    let form = lowering::lower_model(model, options)?;
    Ok(match format {
        Format::Lp => emit::emit_lp(&form)?,
        Format::Mps => emit::emit_mps(&form)?,
    })
}

pub fn solve(model: &Model, limits: &EnumerationLimits) -> Result<Value, Error> {
    let report = oracle::solve_by_enumeration(model, limits)?;
    Ok(report.to_json(model.variables()))
}

/// Settings for [`check`]: the equivalence box cap and how many intervals
/// each continuous range is sampled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSettings {
    pub cap: u128,
    pub continuous_steps: u32,
    pub options: LowerOptions,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings { cap: oracle::DEFAULT_BOX_CAP, continuous_steps: 2, options: LowerOptions::default() }
    }
}

fn check_json(model: &Model, checks: &[ConstraintCheck]) -> Value {
    let constraints: Vec<Value> = checks
        .iter()
        .map(|c| {
            let mismatches: Vec<Value> = c
                .report
                .mismatches
                .iter()
                .map(|m| {
                    let point: serde_json::Map<String, Value> = m
                        .assignment
                        .iter()
                        .map(|(id, v)| (model.name_of(*id), serde_json::to_value(v).expect("rational")))
                        .collect();
                    json!({ "assignment": point, "semantics": m.semantics, "lowered": m.lowered })
                })
                .collect();
            json!({
                "constraint": c.constraint.0,
                "label": c.label,
                "points_checked": c.report.points_checked,
                "mismatches": mismatches,
            })
        })
        .collect();
    json!({
        "holds": checks.iter().all(|c| c.report.holds()),
        "points_checked": checks.iter().map(|c| c.report.points_checked).sum::<u128>(),
        "constraints": constraints,
    })
}

pub fn check(model: &Model, settings: &CheckSettings) -> Result<Value, Error> {
    let checks = oracle::check_model(model, &settings.options, settings.cap, settings.continuous_steps)?;
    Ok(check_json(model, &checks))
}

pub fn parse_model(text: &str) -> Result<Model, Error> {
    Ok(emit::parse_model(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, LinearExpr, TypedConstraint};

    fn knapsack() -> Model {
        let mut m = Model::new("knapsack");
        let x1 = m.add_binary("x1").unwrap();
        let x2 = m.add_binary("x2").unwrap();
        m.add_constraint(TypedConstraint::raw(LinearExpr::from_terms([(x1, 1), (x2, 2)]), crate::model::Sense::Le, 2))
            .unwrap();
        m.set_objective(Direction::Max, LinearExpr::from_terms([(x1, 3), (x2, 4)])).unwrap();
        m
    }

    #[test]
    fn solve_json_shape() {
        let v = solve(&knapsack(), &EnumerationLimits::default()).unwrap();
        assert_eq!(v["status"], "optimal");
        assert_eq!(v["value"], json!({"num": 4, "den": 1}));
        assert_eq!(v["witness"]["x2"], json!({"num": 1, "den": 1}));
    }

    #[test]
    fn check_and_errors() {
        let v = check(&knapsack(), &CheckSettings::default()).unwrap();
        assert_eq!(v["holds"], true);
        assert_eq!(v["points_checked"], 4);
        let tiny = CheckSettings { cap: 2, ..CheckSettings::default() };
        let err = check(&knapsack(), &tiny).unwrap_err();
        assert_eq!(err.code(), "BoxTooLarge");
        assert_eq!(err.envelope()["code"], "BoxTooLarge");
        assert_eq!("mps".parse::<Format>(), Ok(Format::Mps));
        assert!("xml".parse::<Format>().is_err());
    }
}

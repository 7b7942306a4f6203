//! Implicit constraints: requirements an end user states in words ("visit
//! every city exactly once") that only become MILP rows through a known
//! reformulation. Each mapping expands into typed constraints tagged with
//! the OMT leaves they belong to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{BalanceFlavor, LinearExpr, Model, NodeId, TypedConstraint, VarId, VarKind, Variable};
use crate::omt::{SlotKind, SlotSpec};
use crate::rational::Rational;

/// Largest city count accepted by `atsp-tour`; the cut rows grow as 2^n.
pub const MAX_TOUR_CITIES: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImplicitMapping {
    pub id: &'static str,
    pub description: &'static str,
    pub parameters: Vec<SlotSpec>,
    pub target_nodes: Vec<NodeId>,
}

/// Parameters shared by the routing mappings.
///
/// `arcs` names the existing binary arc variables row by row with the
/// diagonal left out, so it holds `n * (n - 1)` names. When it is absent,
/// fresh binaries `{prefix}_{i}_{j}` are declared.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingParams {
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

impl MappingParams {
    pub fn cities(n: u32) -> Self {
        MappingParams { n, arcs: None, prefix: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionResult {
    /// Variables to declare before the constraints; their ids continue the
    /// model's numbering in order.
    pub new_variables: Vec<Variable>,
    pub constraints: Vec<TypedConstraint>,
    /// Arc variable for each ordered pair `(i, j)`, `i != j`.
    pub arcs: BTreeMap<(usize, usize), VarId>,
}

impl ExpansionResult {
    /// Declares the new variables and appends the constraints to `model`.
    pub fn apply(self, model: &mut Model) -> Result<(), crate::model::ModelError> {
        for v in self.new_variables {
            let id = model.add_variable(v.name, v.kind, v.lower, v.upper)?;
            debug_assert_eq!(id, v.id);
        }
        for c in self.constraints {
            model.add_constraint(c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImplicitError {
    #[error("unknown implicit mapping {0:?}")]
    UnknownMapping(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("{n} cities exceed the limit of {limit}")]
    TooLarge { n: u32, limit: u32 },
}

impl ImplicitError {
    pub fn code(&self) -> &'static str {
        match self {
            ImplicitError::UnknownMapping(_) => "UnknownMapping",
            ImplicitError::BadParams(_) => "BadParams",
            ImplicitError::TooLarge { .. } => "TooLarge",
        }
    }
}

fn routing_parameters() -> Vec<SlotSpec> {
    vec![
        SlotSpec { name: "n".into(), kind: SlotKind::PositiveInteger },
        SlotSpec { name: "arcs".into(), kind: SlotKind::VariableList },
    ]
}

pub fn list_mappings() -> Vec<ImplicitMapping> {
    vec![
        ImplicitMapping {
            id: "atsp-tour",
            description: "visit each city exactly once and return to the home city",
            parameters: routing_parameters(),
            target_nodes: vec![17, 18],
        },
        ImplicitMapping {
            id: "routing-flow-balance",
            description: "every visited node has one arc that arrives before it and one that leaves after it",
            parameters: routing_parameters(),
            target_nodes: vec![14],
        },
    ]
}

pub fn find_mapping(id: &str) -> Result<ImplicitMapping, ImplicitError> {
    list_mappings()
        .into_iter()
        .find(|m| m.id == id)
        .ok_or_else(|| ImplicitError::UnknownMapping(id.to_string()))
}

pub fn expand(model: &Model, mapping: &str, params: &MappingParams) -> Result<ExpansionResult, ImplicitError> {
    find_mapping(mapping)?;
    let n = params.n;
    if n < 3 {
        return Err(ImplicitError::BadParams(format!("need at least 3 nodes, got {n}")));
    }
    if mapping == "atsp-tour" && n > MAX_TOUR_CITIES {
        return Err(ImplicitError::TooLarge { n, limit: MAX_TOUR_CITIES });
    }
    let (arcs, new_variables) = resolve_arcs(model, params)?;
    let n = n as usize;
    let constraints = match mapping {
        "atsp-tour" => tour_rows(n, &arcs),
        _ => flow_rows(n, &arcs),
    };
    Ok(ExpansionResult { new_variables, constraints, arcs })
}

type ArcMap = BTreeMap<(usize, usize), VarId>;

fn resolve_arcs(model: &Model, params: &MappingParams) -> Result<(ArcMap, Vec<Variable>), ImplicitError> {
    let n = params.n as usize;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut arcs = BTreeMap::new();
    let mut fresh = Vec::new();
    match &params.arcs {
        Some(names) => {
            if params.prefix.is_some() {
                return Err(ImplicitError::BadParams("give either arcs or prefix, not both".into()));
            }
            if names.len() != pairs.len() {
                return Err(ImplicitError::BadParams(format!(
                    "expected {} arc variables, got {}",
                    pairs.len(),
                    names.len()
                )));
            }
            for (&pair, name) in pairs.iter().zip(names) {
                let id = model
                    .find(name)
                    .ok_or_else(|| ImplicitError::BadParams(format!("unknown variable {name:?}")))?;
                if !model.variables()[id.0].is_binary() {
                    return Err(ImplicitError::BadParams(format!("arc variable {name:?} is not binary")));
                }
                arcs.insert(pair, id);
            }
        }
        None => {
            let prefix = params.prefix.as_deref().unwrap_or("x");
            let base = model.variables().len();
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let name = format!("{prefix}_{i}_{j}");
                if model.find(&name).is_some() {
                    return Err(ImplicitError::BadParams(format!("variable {name:?} already exists")));
                }
                if !crate::model::is_valid_name(&name) {
                    return Err(ImplicitError::BadParams(format!("invalid variable name {name:?}")));
                }
                let id = VarId(base + k);
                fresh.push(Variable {
                    id,
                    name,
                    kind: VarKind::Binary,
                    lower: Some(Rational::ZERO),
                    upper: Some(Rational::ONE),
                });
                arcs.insert((i, j), id);
            }
        }
    }
    Ok((arcs, fresh))
}

fn outgoing(n: usize, i: usize, arcs: &ArcMap) -> Vec<VarId> {
    (0..n).filter(|&j| j != i).map(|j| arcs[&(i, j)]).collect()
}

fn incoming(n: usize, j: usize, arcs: &ArcMap) -> Vec<VarId> {
    (0..n).filter(|&i| i != j).map(|i| arcs[&(i, j)]).collect()
}

fn tour_rows(n: usize, arcs: &ArcMap) -> Vec<TypedConstraint> {
    let mut rows = Vec::new();
    for i in 0..n {
        rows.push(TypedConstraint::set_partitioning(outgoing(n, i, arcs)).labeled(format!("atsp:out[{i}]")).at_node(17));
        rows.push(TypedConstraint::set_partitioning(incoming(n, i, arcs)).labeled(format!("atsp:in[{i}]")).at_node(17));
    }
    for size in 2..n {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let inside = |k: usize| mask & (1 << k) != 0;
            let leaving: Vec<VarId> = arcs
                .iter()
                .filter(|(&(i, j), _)| inside(i) && !inside(j))
                .map(|(_, &v)| v)
                .collect();
            let members: Vec<String> = (0..n).filter(|&k| inside(k)).map(|k| k.to_string()).collect();
            rows.push(
                TypedConstraint::set_covering(leaving)
                    .labeled(format!("atsp:cut{{{}}}", members.join(",")))
                    .at_node(18),
            );
        }
    }
    rows
}

fn flow_rows(n: usize, arcs: &ArcMap) -> Vec<TypedConstraint> {
    (0..n)
        .map(|k| {
            TypedConstraint::balance(
                LinearExpr::sum_of(incoming(n, k, arcs)),
                LinearExpr::sum_of(outgoing(n, k, arcs)),
                BalanceFlavor::Flow,
            )
            .labeled(format!("flow[{k}]"))
            .at_node(14)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstraintKind;
    use crate::omt::classify;

    fn count(result: &ExpansionResult, pred: impl Fn(&ConstraintKind) -> bool) -> usize {
        result.constraints.iter().filter(|c| pred(&c.kind)).count()
    }

    #[test]
    fn registry_contents() {
        let maps = list_mappings();
        let ids: Vec<&str> = maps.iter().map(|m| m.id).collect();
        assert_eq!(ids, ["atsp-tour", "routing-flow-balance"]);
        assert!(maps[0].target_nodes.contains(&17) && maps[0].target_nodes.contains(&18));
        assert_eq!(maps[1].target_nodes, [14]);
        assert_eq!(list_mappings(), maps);
    }

    #[test]
    fn tour_row_counts() {
        let model = Model::new("t");
        for (n, parts, cuts) in [(3, 6, 3), (4, 8, 10), (5, 10, 25)] {
            let r = expand(&model, "atsp-tour", &MappingParams::cities(n)).unwrap();
            assert_eq!(count(&r, |k| matches!(k, ConstraintKind::SetPartitioning(_))), parts);
            assert_eq!(count(&r, |k| matches!(k, ConstraintKind::SetCovering(_))), cuts);
            assert_eq!(r.new_variables.len(), (n * (n - 1)) as usize);
            for c in &r.constraints {
                assert!(list_mappings()[0].target_nodes.contains(&classify(c).unwrap()));
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let model = Model::new("t");
        assert!(matches!(expand(&model, "atsp-tour", &MappingParams::cities(2)), Err(ImplicitError::BadParams(_))));
        assert_eq!(
            expand(&model, "atsp-tour", &MappingParams::cities(13)),
            Err(ImplicitError::TooLarge { n: 13, limit: 12 })
        );
        assert!(matches!(expand(&model, "mtz", &MappingParams::cities(4)), Err(ImplicitError::UnknownMapping(_))));
        let short = MappingParams { n: 3, arcs: Some(vec!["a".into()]), prefix: None };
        assert!(matches!(expand(&model, "atsp-tour", &short), Err(ImplicitError::BadParams(_))));
    }

    #[test]
    fn existing_arcs_and_apply() {
        let mut model = Model::new("t");
        let mut names = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let name = format!("arc_{i}_{j}");
                    model.add_binary(&name).unwrap();
                    names.push(name);
                }
            }
        }
        let params = MappingParams { n: 3, arcs: Some(names), prefix: None };
        let r = expand(&model, "routing-flow-balance", &params).unwrap();
        assert!(r.new_variables.is_empty());
        assert_eq!(r.constraints.len(), 3);
        assert!(r.constraints.iter().all(|c| classify(c) == Ok(14)));
        r.apply(&mut model).unwrap();
        assert_eq!(model.constraints().len(), 3);

        let fresh = expand(&model, "atsp-tour", &MappingParams::cities(3)).unwrap();
        let first = fresh.new_variables[0].id;
        fresh.apply(&mut model).unwrap();
        assert_eq!(model.find("x_0_1"), Some(first));
        assert_eq!(model.constraints().len(), 12);
    }
}

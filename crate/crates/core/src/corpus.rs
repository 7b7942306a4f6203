//! Desk-scale reconstructions of four published MILP case studies, tagged
//! with the OMT leaves their constraint sets map to.
//!
//! Only the set-to-node mapping is taken from the literature; index sets,
//! coefficients and data below are small invented integers chosen so that
//! every default instance is feasible and solvable by enumeration. Each
//! constraint label starts with its set name (`set3a:...`).

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::lowering::{IfThenStrength, LowerOptions};
use crate::omt::classify;
use crate::model::{
    Assignment, BalanceFlavor, BoundSpec, Direction, LinearExpr, Model, ModelError, NodeId, OffBehavior, Sense,
    TypedConstraint, VarId,
};
use crate::rational::Rational;

pub type Scale = BTreeMap<String, u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    ChemicalScheduling,
    SupplyChainPlanning,
    CourseTimetabling,
    VrptwMultitrip,
}

impl Serialize for CaseId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

pub const ALL_CASES: [CaseId; 4] =
    [CaseId::ChemicalScheduling, CaseId::SupplyChainPlanning, CaseId::CourseTimetabling, CaseId::VrptwMultitrip];

impl CaseId {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::ChemicalScheduling => "chemical-scheduling",
            CaseId::SupplyChainPlanning => "supply-chain-planning",
            CaseId::CourseTimetabling => "course-timetabling",
            CaseId::VrptwMultitrip => "vrptw-multitrip",
        }
    }

    /// Scale parameters with their default and largest accepted values.
    pub fn scale_limits(self) -> &'static [(&'static str, u32, u32)] {
        match self {
            CaseId::ChemicalScheduling => &[("units", 2, 3), ("tasks", 2, 3), ("periods", 3, 4)],
            CaseId::SupplyChainPlanning => &[("products", 2, 3), ("periods", 2, 3)],
            CaseId::CourseTimetabling => &[("courses", 2, 3), ("professors", 2, 3), ("slots", 2, 3)],
            CaseId::VrptwMultitrip => &[("customers", 2, 3), ("trips", 2, 3)],
        }
    }

    pub fn default_scale(self) -> Scale {
        self.scale_limits().iter().map(|&(k, d, _)| (k.to_string(), d)).collect()
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        ALL_CASES.into_iter().find(|c| c.as_str() == s).ok_or_else(|| CorpusError::UnknownCase(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown case study {0:?}")]
    UnknownCase(String),
    #[error("scale parameter {name} = {value} exceeds the limit of {limit}")]
    ScaleTooLarge { name: String, value: u32, limit: u32 },
    #[error("bad scale: {0}")]
    BadParams(String),
    #[error("building the model failed: {0}")]
    Model(#[from] ModelError),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::UnknownCase(_) => "UnknownCase",
            CorpusError::ScaleTooLarge { .. } => "ScaleTooLarge",
            CorpusError::BadParams(_) => "BadParams",
            CorpusError::Model(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMap {
    /// Constraint set name to the OMT leaves its rows belong to, in set order.
    pub sets: IndexMap<String, Vec<NodeId>>,
    /// Sets of the original model left out of the reconstruction.
    pub omitted: Vec<String>,
}

pub const NODE_MAPS_JSON: &str = include_str!("../data/corpus_node_maps.json");

fn node_maps() -> &'static IndexMap<String, NodeMap> {
    static MAPS: OnceLock<IndexMap<String, NodeMap>> = OnceLock::new();
    MAPS.get_or_init(|| serde_json::from_str(NODE_MAPS_JSON).expect("built-in node maps are valid"))
}

pub fn expected_node_map(case: CaseId) -> &'static NodeMap {
    &node_maps()[case.as_str()]
}

/// The set name a corpus label belongs to (`"set3a:S[1,2]"` gives `"set3a"`).
pub fn set_of(label: &str) -> &str {
    label.split_once(':').map_or(label, |(set, _)| set)
}

/// Lowering options the case is meant to be compiled with. Timetabling keeps
/// its implications in the aggregated single-row form.
pub fn default_lower_options(case: CaseId) -> LowerOptions {
    match case {
        CaseId::CourseTimetabling => LowerOptions::with_strength(IfThenStrength::Weak),
        _ => LowerOptions::default(),
    }
}

/// Per-set OMT leaves found by `classify`, next to the expected ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FidelityReport {
    pub case: CaseId,
    pub expected: IndexMap<String, BTreeSet<NodeId>>,
    pub observed: IndexMap<String, BTreeSet<NodeId>>,
    /// Labels of constraints that could not be classified.
    pub unclassified: Vec<String>,
}

impl FidelityReport {
    pub fn holds(&self) -> bool {
        self.unclassified.is_empty() && self.expected == self.observed
    }
}

/// Classifies every constraint of `model` and groups the leaves by set name.
pub fn check_fidelity(case: CaseId, model: &Model) -> FidelityReport {
    let mut observed: IndexMap<String, BTreeSet<NodeId>> = IndexMap::new();
    let mut unclassified = Vec::new();
    for c in model.constraints() {
        match classify(c) {
            Ok(node) => {
                observed.entry(set_of(&c.label).to_string()).or_default().insert(node);
            }
            Err(_) => unclassified.push(c.label.clone()),
        }
    }
    let expected =
        expected_node_map(case).sets.iter().map(|(k, v)| (k.clone(), v.iter().copied().collect())).collect();
    FidelityReport { case, expected, observed, unclassified }
}

/// A built case: the model plus a feasible point constructed by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseModel {
    pub model: Model,
    pub witness: Assignment,
}

pub fn build(case: CaseId, scale: &Scale) -> Result<Model, CorpusError> {
    build_with_witness(case, scale).map(|c| c.model)
}

pub fn build_with_witness(case: CaseId, scale: &Scale) -> Result<CaseModel, CorpusError> {
    let dims = resolve_scale(case, scale)?;
    let d = |k: &str| dims[k] as usize;
    let mut b = match case {
        CaseId::ChemicalScheduling => chemical(d("units"), d("tasks"), d("periods"))?,
        CaseId::SupplyChainPlanning => supply_chain(d("products"), d("periods"))?,
        CaseId::CourseTimetabling => timetabling(d("courses"), d("professors"), d("slots"))?,
        CaseId::VrptwMultitrip => vrptw(d("customers"), d("trips"))?,
    };
    let witness = Assignment::from_values(b.witness.drain(..));
    Ok(CaseModel { model: b.model, witness })
}

fn resolve_scale(case: CaseId, scale: &Scale) -> Result<Scale, CorpusError> {
    let limits = case.scale_limits();
    for name in scale.keys() {
        if !limits.iter().any(|(k, _, _)| k == name) {
            return Err(CorpusError::BadParams(format!("{case} has no scale parameter {name:?}")));
        }
    }
    let mut out = Scale::new();
    for &(name, default, limit) in limits {
        let value = scale.get(name).copied().unwrap_or(default);
        if value == 0 {
            return Err(CorpusError::BadParams(format!("{name} must be positive")));
        }
        if value > limit {
            return Err(CorpusError::ScaleTooLarge { name: name.to_string(), value, limit });
        }
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

struct Builder {
    model: Model,
    witness: Vec<Rational>,
}

impl Builder {
    fn new(name: &str) -> Self {
        Builder { model: Model::new(name), witness: Vec::new() }
    }

    fn binary(&mut self, name: String, value: bool) -> Result<VarId, CorpusError> {
        self.witness.push(Rational::from(i64::from(value)));
        Ok(self.model.add_binary(name)?)
    }

    fn integer(&mut self, name: String, upper: i64, value: i64) -> Result<VarId, CorpusError> {
        self.witness.push(value.into());
        Ok(self.model.add_integer(name, 0, upper)?)
    }

    fn add(&mut self, set: &str, detail: impl fmt::Display, node: NodeId, c: TypedConstraint) -> Result<(), CorpusError> {
        self.model.add_constraint(c.labeled(format!("{set}:{detail}")).at_node(node))?;
        Ok(())
    }
}

fn var(id: VarId) -> LinearExpr {
    LinearExpr::var(id)
}

fn force_zero(expr: LinearExpr, sense: Sense, bound: i64, indicator: VarId) -> TypedConstraint {
    TypedConstraint::conditional(expr, sense, BoundSpec::Constant(bound.into()), indicator, OffBehavior::ForceZero)
}

/// Batch plant: units start at most one task per period, batch sizes are
/// gated by the start decision, and material inventories carry over.
/// Task `i` turns material `i` into material `i + 1`; material 0 starts
/// with a stock of 4 and batches complete within their period.
fn chemical(units: usize, tasks: usize, periods: usize) -> Result<Builder, CorpusError> {
    const MIN_BATCH: i64 = 1;
    const MAX_BATCH: i64 = 2;
    const STORAGE: i64 = 4;
    const STOCK_BOX: i64 = 6;
    const INITIAL_RAW: i64 = 4;
    let mut b = Builder::new("chemical-scheduling");
    let materials = tasks + 1;
    let mut start = vec![vec![Vec::new(); tasks]; units];
    let mut batch = vec![vec![Vec::new(); tasks]; units];
    let mut stock: Vec<Vec<VarId>> = vec![Vec::new(); materials];
    for t in 0..periods {
        for u in 0..units {
            for i in 0..tasks {
                start[u][i].push(b.binary(format!("X_{u}_{i}_{t}"), false)?);
                batch[u][i].push(b.integer(format!("B_{u}_{i}_{t}"), MAX_BATCH, 0)?);
            }
        }
        for (m, s) in stock.iter_mut().enumerate() {
            let held = if m == 0 { INITIAL_RAW } else { 0 };
            s.push(b.integer(format!("S_{m}_{t}"), STOCK_BOX, held)?);
        }
    }
    for t in 0..periods {
        for u in 0..units {
            let members = (0..tasks).map(|i| start[u][i][t]).collect();
            b.add("set1", format!("unit{u},t{t}"), 11, TypedConstraint::set_packing(members))?;
        }
    }
    for t in 0..periods {
        for u in 0..units {
            for i in 0..tasks {
                let (x, q) = (start[u][i][t], batch[u][i][t]);
                b.add("set2", format!("max[{u},{i},{t}]"), 3, force_zero(var(q), Sense::Le, MAX_BATCH, x))?;
                b.add("set2", format!("min[{u},{i},{t}]"), 9, force_zero(var(q), Sense::Ge, MIN_BATCH, x))?;
            }
        }
    }
    for t in 0..periods {
        for m in 0..materials {
            let mut inflow = if t == 0 {
                LinearExpr::constant(if m == 0 { INITIAL_RAW } else { 0 })
            } else {
                var(stock[m][t - 1])
            };
            for u in 0..units {
                if m > 0 {
                    inflow = inflow + var(batch[u][m - 1][t]);
                }
                if m < tasks {
                    inflow = inflow - var(batch[u][m][t]);
                }
            }
            let balance = TypedConstraint::balance(var(stock[m][t]), inflow, BalanceFlavor::Flow);
            b.add("set3a", format!("S[{m},{t}]"), 14, balance)?;
        }
    }
    for t in 0..periods {
        for m in 0..materials {
            b.add("set3b", format!("S[{m},{t}]"), 7, TypedConstraint::upper(var(stock[m][t]), STORAGE))?;
        }
    }
    b.model.set_objective(Direction::Max, var(stock[tasks][periods - 1]))?;
    Ok(b)
}

/// Multi-period production planning with setups, a workforce level per
/// period and ramping limits on production.
fn supply_chain(products: usize, periods: usize) -> Result<Builder, CorpusError> {
    const Q_MAX: i64 = 3;
    const RAMP: i64 = 2;
    let demand = |p: usize, t: usize| 1 + ((p + t) % 2) as i64;
    let total = |t: usize| (0..products).map(|p| demand(p, t)).sum::<i64>();
    let cap = Q_MAX * products as i64;
    let mut b = Builder::new("supply-chain-planning");
    let mut q = vec![Vec::new(); products];
    let mut inv = vec![Vec::new(); products];
    let mut setup = vec![Vec::new(); products];
    let mut ship = vec![Vec::new(); products];
    let mut work = Vec::new();
    let mut made = Vec::new();
    for t in 0..periods {
        work.push(b.integer(format!("w_{t}"), cap, total(t))?);
        for p in 0..products {
            setup[p].push(b.binary(format!("y_{p}_{t}"), true)?);
            q[p].push(b.integer(format!("q_{p}_{t}"), Q_MAX, demand(p, t))?);
            ship[p].push(b.integer(format!("ship_{p}_{t}"), Q_MAX, demand(p, t))?);
            inv[p].push(b.integer(format!("I_{p}_{t}"), Q_MAX, 0)?);
        }
        made.push(b.integer(format!("r_{t}"), cap, total(t))?);
    }
    for t in 0..periods {
        for p in 0..products {
            let previous = if t == 0 { LinearExpr::zero() } else { var(inv[p][t - 1]) };
            let rhs = previous + var(q[p][t]) - var(ship[p][t]);
            let c = TypedConstraint::balance(var(inv[p][t]), rhs, BalanceFlavor::Interperiod);
            b.add("set1", format!("I[{p},{t}]"), 12, c)?;
        }
    }
    for t in 0..periods {
        for p in 0..products {
            let c = TypedConstraint::balance(
                var(ship[p][t]),
                LinearExpr::constant(demand(p, t)),
                BalanceFlavor::Assignment,
            );
            b.add("set2", format!("ship[{p},{t}]"), 13, c)?;
        }
    }
    for t in 0..periods {
        let produced = LinearExpr::sum_of((0..products).map(|p| q[p][t]));
        let upper = TypedConstraint::bound(produced.clone(), Sense::Le, BoundSpec::Expr(var(work[t])));
        b.add("set3", format!("cap[{t}]"), 2, upper)?;
        let lower = TypedConstraint::bound(produced, Sense::Ge, BoundSpec::Expr(var(work[t]).with_constant(-1)));
        b.add("set3", format!("use[{t}]"), 8, lower)?;
    }
    for t in 0..periods {
        for p in 0..products {
            b.add("set4", format!("max[{p},{t}]"), 3, force_zero(var(q[p][t]), Sense::Le, Q_MAX, setup[p][t]))?;
            b.add("set4", format!("min[{p},{t}]"), 9, force_zero(var(q[p][t]), Sense::Ge, 1, setup[p][t]))?;
        }
    }
    for t in 0..periods {
        let produced = LinearExpr::sum_of((0..products).map(|p| q[p][t]));
        let c = TypedConstraint::balance(var(made[t]), produced, BalanceFlavor::Assignment);
        b.add("set5", format!("r[{t}]"), 13, c)?;
    }
    for t in 1..periods {
        for p in 0..products {
            let up = BoundSpec::Expr(var(q[p][t - 1]).with_constant(RAMP));
            b.add("set6", format!("up[{p},{t}]"), 2, TypedConstraint::bound(var(q[p][t]), Sense::Le, up))?;
            let down = BoundSpec::Expr(var(q[p][t - 1]).with_constant(-RAMP));
            b.add("set6", format!("down[{p},{t}]"), 8, TypedConstraint::bound(var(q[p][t]), Sense::Ge, down))?;
        }
    }
    let mut cost = LinearExpr::zero();
    for t in 0..periods {
        cost.add_term(work[t], 2.into());
        for p in 0..products {
            cost.add_term(setup[p][t], 3.into());
            cost.add_term(q[p][t], 1.into());
            cost.add_term(inv[p][t], 1.into());
        }
    }
    b.model.set_objective(Direction::Min, cost)?;
    Ok(b)
}

/// Course-to-professor-and-slot assignment with professor, room and flag
/// bookkeeping. Every course needs its own professor and slot, so the
/// scale must have as many professors as courses and at least as many
/// slots (and at least two).
fn timetabling(courses: usize, professors: usize, slots: usize) -> Result<Builder, CorpusError> {
    if courses != professors {
        return Err(CorpusError::BadParams("course-timetabling needs as many professors as courses".into()));
    }
    if slots < courses.max(2) {
        return Err(CorpusError::BadParams("course-timetabling needs at least max(courses, 2) slots".into()));
    }
    let last = slots - 1;
    let mut b = Builder::new("course-timetabling");
    let mut x = BTreeMap::new();
    for c in 0..courses {
        for p in 0..professors {
            for s in 0..slots {
                x.insert((c, p, s), b.binary(format!("x_{c}_{p}_{s}"), c == p && p == s)?);
            }
        }
    }
    let mut busy = BTreeMap::new();
    for p in 0..professors {
        for s in 0..slots {
            busy.insert((p, s), b.binary(format!("y_{p}_{s}"), p == s)?);
        }
    }
    let used: Vec<VarId> = (0..professors).map(|p| b.binary(format!("z_{p}"), true)).collect::<Result<_, _>>()?;
    let early: Vec<VarId> = (0..courses).map(|c| b.binary(format!("o_{c}"), c == 0)).collect::<Result<_, _>>()?;
    let late: Vec<VarId> = (0..courses).map(|c| b.binary(format!("l_{c}"), c == last)).collect::<Result<_, _>>()?;
    let open: Vec<VarId> = (0..slots).map(|s| b.binary(format!("r_{s}"), s < courses)).collect::<Result<_, _>>()?;

    for c in 0..courses {
        let members = (0..professors).flat_map(|p| (0..slots).map(move |s| (p, s))).map(|(p, s)| x[&(c, p, s)]).collect();
        b.add("set2", format!("course{c}"), 17, TypedConstraint::set_partitioning(members))?;
    }
    for p in 0..professors {
        let members = (0..courses).flat_map(|c| (0..slots).map(move |s| (c, s))).map(|(c, s)| x[&(c, p, s)]).collect();
        b.add("set3", format!("prof{p}"), 17, TypedConstraint::set_partitioning(members))?;
    }
    for p in 0..professors {
        for s in 0..slots {
            let members = (0..courses).map(|c| x[&(c, p, s)]).collect();
            b.add("set4", format!("prof{p},slot{s}"), 11, TypedConstraint::set_packing(members))?;
        }
    }
    for s in 0..slots {
        let members = (0..courses).flat_map(|c| (0..professors).map(move |p| (c, p))).map(|(c, p)| x[&(c, p, s)]).collect();
        b.add("set5", format!("room,slot{s}"), 11, TypedConstraint::set_packing(members))?;
    }
    for c in 0..courses {
        for s in 0..slots {
            let members = (0..professors).map(|p| x[&(c, p, s)]).collect();
            b.add("set6", format!("course{c},slot{s}"), 11, TypedConstraint::set_packing(members))?;
        }
    }
    for p in 0..professors {
        let members = (0..slots).map(|s| busy[&(p, s)]).collect();
        b.add("set7", format!("prof{p}"), 11, TypedConstraint::set_packing(members))?;
    }
    for s in 0..slots {
        let members = (0..professors).map(|p| busy[&(p, s)]).collect();
        b.add("set8", format!("slot{s}"), 11, TypedConstraint::set_packing(members))?;
    }
    for c in 0..courses {
        b.add("set9", format!("course{c}"), 11, TypedConstraint::set_packing(vec![early[c], late[c]]))?;
    }
    for ((c, p, s), &xv) in &x {
        let c11 = TypedConstraint::if_then(vec![xv], vec![busy[&(*p, *s)], used[*p]]);
        b.add("set11", format!("x[{c},{p},{s}]"), 24, c11)?;
    }
    for c in 0..courses {
        for p in 0..professors {
            let c12 = TypedConstraint::if_then(vec![x[&(c, p, 0)]], vec![early[c], open[0]]);
            b.add("set12", format!("x[{c},{p},0]"), 24, c12)?;
        }
    }
    for ((p, s), &yv) in &busy {
        b.add("set13", format!("y[{p},{s}]"), 24, TypedConstraint::if_then(vec![yv], vec![used[*p], open[*s]]))?;
    }
    for c in 0..courses {
        for p in 0..professors {
            let c15 = TypedConstraint::if_then(vec![x[&(c, p, last)]], vec![late[c], open[last]]);
            b.add("set15", format!("x[{c},{p},{last}]"), 24, c15)?;
        }
    }
    let mut cost = LinearExpr::zero();
    for (&(c, p, s), &xv) in &x {
        cost.add_term(xv, Rational::from(1 + ((c + 2 * p + s) % 3) as i64));
    }
    for &z in &used {
        cost.add_term(z, Rational::ONE);
    }
    for &r in &open {
        cost.add_term(r, Rational::ONE);
    }
    b.model.set_objective(Direction::Min, cost)?;
    Ok(b)
}

/// Multi-trip vehicle routing with service start times. Node 0 is the
/// depot; customers are `1..=customers`. Every trip serves at most one
/// customer, so the scale needs at least as many trips as customers.
fn vrptw(customers: usize, trips: usize) -> Result<Builder, CorpusError> {
    const SERVICE: i64 = 1;
    const FIRST_TRIP_DEADLINE: i64 = 6;
    if customers < 2 {
        return Err(CorpusError::BadParams("vrptw-multitrip needs at least two customers".into()));
    }
    if trips < customers {
        return Err(CorpusError::BadParams("vrptw-multitrip needs at least as many trips as customers".into()));
    }
    let n = customers;
    let dist = |i: usize, j: usize| -> i64 {
        match (i, j) {
            (0, j) => 1 + j as i64,
            (i, 0) => 1 + i as i64,
            (i, j) if i < j => 1 + (j - i) as i64,
            (i, j) => 2 + 2 * (i - j) as i64,
        }
    };
    let horizon = 4 * n as i64 + 4;
    let latest = (1..=n).map(|j| dist(0, j) + SERVICE + dist(j, 0)).max().unwrap_or(0);
    let mut b = Builder::new("vrptw-multitrip");
    let mut arc = BTreeMap::new();
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                let used = (i == 0) != (j == 0);
                arc.insert((i, j), b.binary(format!("x_{i}_{j}"), used)?);
            }
        }
    }
    let mut assign = BTreeMap::new();
    for j in 1..=n {
        for k in 0..trips {
            assign.insert((j, k), b.binary(format!("a_{j}_{k}"), k == j - 1)?);
        }
    }
    let mut time = BTreeMap::new();
    for j in 1..=n {
        time.insert(j, b.integer(format!("t_{j}"), horizon, dist(0, j))?);
    }
    let tmax = b.integer("Tmax".into(), horizon, latest)?;

    for j in 1..=n {
        let members = (0..trips).map(|k| assign[&(j, k)]).collect();
        b.add("set1", format!("customer{j}"), 17, TypedConstraint::set_partitioning(members))?;
    }
    b.add("set2", "x[2,1]", 19, TypedConstraint::fix(arc[&(2, 1)], 0))?;
    for j in 1..=n {
        let members = (0..=n).filter(|&i| i != j).map(|i| arc[&(i, j)]).collect();
        b.add("set3", format!("in{j}"), 17, TypedConstraint::set_partitioning(members))?;
    }
    for j in 1..=n {
        let members = (0..=n).filter(|&i| i != j).map(|i| arc[&(j, i)]).collect();
        b.add("set4", format!("out{j}"), 17, TypedConstraint::set_partitioning(members))?;
    }
    let into_depot = LinearExpr::sum_of((1..=n).map(|i| arc[&(i, 0)]));
    let out_of_depot = LinearExpr::sum_of((1..=n).map(|j| arc[&(0, j)]));
    b.add("set5", "depot", 14, TypedConstraint::balance(into_depot, out_of_depot, BalanceFlavor::Flow))?;
    for j in 1..=n {
        let c = TypedConstraint::conditional(
            var(time[&j]),
            Sense::Ge,
            BoundSpec::Constant(dist(0, j).into()),
            arc[&(0, j)],
            OffBehavior::Free,
        );
        b.add("set6", format!("t[{j}]"), 9, c)?;
    }
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                let reach = var(time[&i]).with_constant(SERVICE + dist(i, j));
                let c = TypedConstraint::conditional(
                    var(time[&j]),
                    Sense::Ge,
                    BoundSpec::Expr(reach),
                    arc[&(i, j)],
                    OffBehavior::Free,
                );
                b.add("set7", format!("{i}->{j}"), 9, c)?;
            }
        }
    }
    for j in 1..=n {
        let c = TypedConstraint::conditional(
            var(time[&j]),
            Sense::Le,
            BoundSpec::Constant(FIRST_TRIP_DEADLINE.into()),
            assign[&(j, 0)],
            OffBehavior::Free,
        );
        b.add("set8", format!("customer{j}"), 3, c)?;
    }
    for k in 0..trips {
        let members = (1..=n).map(|j| assign[&(j, k)]).collect();
        b.add("set9", format!("trip{k}"), 11, TypedConstraint::set_packing(members))?;
    }
    for j in 1..=n {
        let back = var(time[&j]).with_constant(SERVICE + dist(j, 0));
        b.add("set10", format!("t[{j}]"), 2, TypedConstraint::bound(back, Sense::Le, BoundSpec::Expr(var(tmax))))?;
    }
    let mut cost = var(tmax);
    for (&(i, j), &a) in &arc {
        cost.add_term(a, dist(i, j).into());
    }
    b.model.set_objective(Direction::Min, cost)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omt::classify;
    use crate::oracle::satisfies;
    use std::collections::BTreeSet;

    #[test]
    fn default_cases_are_valid_with_feasible_witness() {
        for case in ALL_CASES {
            let built = build_with_witness(case, &case.default_scale()).unwrap();
            assert!(built.model.validate().iter().all(|d| !d.is_error()), "{case}");
            assert_eq!(built.witness.len(), built.model.variables().len());
            for c in built.model.constraints() {
                assert!(satisfies(c, &built.witness).unwrap(), "{case}: witness violates {}", c.label);
            }
        }
    }

    #[test]
    fn node_maps_match_builders() {
        for case in ALL_CASES {
            let model = build(case, &case.default_scale()).unwrap();
            let report = check_fidelity(case, &model);
            assert!(report.unclassified.is_empty(), "{case}");
            assert_eq!(report.observed, report.expected, "{case}");
        }
    }

    #[test]
    fn scale_errors() {
        let scale = |pairs: &[(&str, u32)]| pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect::<Scale>();
        assert!(matches!(build(CaseId::VrptwMultitrip, &scale(&[("customers", 0)])), Err(CorpusError::BadParams(_))));
        assert!(matches!(
            build(CaseId::ChemicalScheduling, &scale(&[("units", 9)])),
            Err(CorpusError::ScaleTooLarge { .. })
        ));
        assert!(matches!(build(CaseId::SupplyChainPlanning, &scale(&[("bogus", 1)])), Err(CorpusError::BadParams(_))));
        assert!(matches!("nope".parse::<CaseId>(), Err(CorpusError::UnknownCase(_))));
        assert_eq!("vrptw-multitrip".parse::<CaseId>(), Ok(CaseId::VrptwMultitrip));
    }

    #[test]
    fn other_scales_keep_the_node_map() {
        let scale = |pairs: &[(&str, u32)]| pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect::<Scale>();
        for (case, s) in [
            (CaseId::ChemicalScheduling, scale(&[("units", 1), ("tasks", 3), ("periods", 2)])),
            (CaseId::SupplyChainPlanning, scale(&[("products", 3), ("periods", 3)])),
            (CaseId::CourseTimetabling, scale(&[("courses", 3), ("professors", 3), ("slots", 3)])),
            (CaseId::VrptwMultitrip, scale(&[("customers", 3), ("trips", 3)])),
        ] {
            let built = build_with_witness(case, &s).unwrap();
            let sets: BTreeSet<&str> = built.model.constraints().iter().map(|c| set_of(&c.label)).collect();
            let expected: BTreeSet<&str> = expected_node_map(case).sets.keys().map(String::as_str).collect();
            assert_eq!(sets, expected, "{case}");
            for c in built.model.constraints() {
                assert!(satisfies(c, &built.witness).unwrap(), "{case}: witness violates {}", c.label);
                assert!(expected_node_map(case).sets[set_of(&c.label)].contains(&classify(c).unwrap()));
            }
        }
    }
}

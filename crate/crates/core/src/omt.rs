//! The optimization modelling tree: elicitation questions at internal
//! nodes, constraint templates at leaves.
//!
//! The tree is static data shipped as `data/omt_tree.json`. Leaves are
//! grouped by usage rather than algebra, so several leaves can share one
//! algebraic shape (a resource limit and a storage limit are both
//! `expr <= constant`); [`classify`] uses a constraint's `omt_node` tag to
//! pick among leaves of the same shape and otherwise falls back to the
//! first leaf listed for that shape.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::model::{
    Alternative, BalanceFlavor, BoundSpec, ConstraintKind, LinearExpr, NodeId, OffBehavior, Sense, SetSelection,
    TypedConstraint, VarId,
};
use crate::rational::Rational;

pub const TREE_SCHEMA_VERSION: &str = "1";

/// Canonical JSON text of the built-in tree.
pub const TREE_JSON: &str = include_str!("../data/omt_tree.json");

/// Node ids whose meaning is fixed by the published case-study mapping.
pub const ANCHORED_NODES: [NodeId; 12] = [2, 3, 7, 8, 9, 11, 12, 13, 14, 17, 19, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Internal,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotKind {
    Variable,
    VariableList,
    Expression,
    Rational,
    PositiveInteger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bound,
    ConditionalBound,
    Balance,
    SetPacking,
    SetPartitioning,
    SetCovering,
    VariableFix,
    IfThen,
    EitherOr,
    RawRow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub family: Family,
    pub slots: Vec<SlotSpec>,
    pub fixed: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Child {
    pub answer: String,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmtNode {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    pub question: Option<String>,
    pub children: Vec<Child>,
    pub template: Option<TemplateSpec>,
    pub anchored: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TreeDocument {
    schema_version: String,
    root: NodeId,
    nodes: Vec<OmtNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmtTree {
    root: NodeId,
    nodes: BTreeMap<NodeId, OmtNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("unknown OMT node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is a leaf")]
    NotInternal(NodeId),
    #[error("node {0} is not a leaf")]
    NotLeaf(NodeId),
    #[error("node {node} has no answer {answer:?}")]
    UnknownAnswer { node: NodeId, answer: String },
    #[error("slot {0:?} is not bound")]
    MissingSlot(String),
    #[error("slot {slot:?} expects a {expected:?} value")]
    KindMismatch { slot: String, expected: SlotKind },
    #[error("template has no slot {0:?}")]
    UnknownSlot(String),
    #[error("bad value for slot {slot:?}: {reason}")]
    InvalidBinding { slot: String, reason: String },
    #[error("raw rows have no OMT node")]
    Unclassifiable,
    #[error("malformed tree document: {0}")]
    Malformed(String),
}

impl TreeError {
    pub fn code(&self) -> &'static str {
        match self {
            TreeError::UnknownNode(_) => "UnknownNode",
            TreeError::NotInternal(_) => "NotInternal",
            TreeError::NotLeaf(_) => "NotLeaf",
            TreeError::UnknownAnswer { .. } => "UnknownAnswer",
            TreeError::MissingSlot(_) => "MissingSlot",
            TreeError::KindMismatch { .. } => "KindMismatch",
            TreeError::UnknownSlot(_) => "UnknownSlot",
            TreeError::InvalidBinding { .. } => "InvalidBinding",
            TreeError::Unclassifiable => "Unclassifiable",
            TreeError::Malformed(_) => "MalformedDocument",
        }
    }
}

/// A value bound to a template slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotValue {
    Variable(VarId),
    VariableList(Vec<VarId>),
    Expression(LinearExpr),
    Rational(Rational),
    PositiveInteger(u32),
}

impl SlotValue {
    pub fn kind(&self) -> SlotKind {
        match self {
            SlotValue::Variable(_) => SlotKind::Variable,
            SlotValue::VariableList(_) => SlotKind::VariableList,
            SlotValue::Expression(_) => SlotKind::Expression,
            SlotValue::Rational(_) => SlotKind::Rational,
            SlotValue::PositiveInteger(_) => SlotKind::PositiveInteger,
        }
    }
}

pub type Bindings = BTreeMap<String, SlotValue>;

impl OmtTree {
    pub fn parse(text: &str) -> Result<OmtTree, TreeError> {
        let doc: TreeDocument = serde_json::from_str(text).map_err(|e| TreeError::Malformed(e.to_string()))?;
        if doc.schema_version != TREE_SCHEMA_VERSION {
            return Err(TreeError::Malformed(format!("unsupported schema version {:?}", doc.schema_version)));
        }
        let mut nodes = BTreeMap::new();
        for node in doc.nodes {
            let id = node.id;
            if (node.kind == NodeKind::Leaf) != node.template.is_some() {
                return Err(TreeError::Malformed(format!("node {id}: leaf iff template present")));
            }
            if nodes.insert(id, node).is_some() {
                return Err(TreeError::Malformed(format!("duplicate node id {id}")));
            }
        }
        if !nodes.contains_key(&doc.root) {
            return Err(TreeError::UnknownNode(doc.root));
        }
        Ok(OmtTree { root: doc.root, nodes })
    }

    /// Canonical JSON serialization (nodes ordered by id, trailing newline).
    pub fn to_json(&self) -> String {
        let doc = TreeDocument {
            schema_version: TREE_SCHEMA_VERSION.to_string(),
            root: self.root,
            nodes: self.nodes.values().cloned().collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("tree serializes");
        text.push('\n');
        text
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Result<&OmtNode, TreeError> {
        self.nodes.get(&id).ok_or(TreeError::UnknownNode(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &OmtNode> {
        self.nodes.values()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &OmtNode> {
        self.nodes.values().filter(|n| n.kind == NodeKind::Leaf)
    }

    pub fn descend(&self, node: NodeId, answer: &str) -> Result<NodeId, TreeError> {
        let n = self.node(node)?;
        if n.kind != NodeKind::Internal {
            return Err(TreeError::NotInternal(node));
        }
        n.children
            .iter()
            .find(|c| c.answer == answer)
            .map(|c| c.child)
            .ok_or_else(|| TreeError::UnknownAnswer { node, answer: answer.to_string() })
    }

    /// The answer sequence leading from the root to `target`.
    pub fn path_to(&self, target: NodeId) -> Result<Vec<String>, TreeError> {
        self.node(target)?;
        let mut parent: BTreeMap<NodeId, (NodeId, &str)> = BTreeMap::new();
        for n in self.nodes.values() {
            for c in &n.children {
                parent.insert(c.child, (n.id, c.answer.as_str()));
            }
        }
        let mut answers = Vec::new();
        let mut at = target;
        while at != self.root {
            let &(p, answer) = parent.get(&at).ok_or(TreeError::UnknownNode(at))?;
            answers.push(answer.to_string());
            at = p;
        }
        answers.reverse();
        Ok(answers)
    }

    /// Fills the template at `leaf`; the result is tagged with the leaf id.
    pub fn instantiate(&self, leaf: NodeId, bindings: &Bindings) -> Result<TypedConstraint, TreeError> {
        let node = self.node(leaf)?;
        let template = node.template.as_ref().ok_or(TreeError::NotLeaf(leaf))?;
        for name in bindings.keys() {
            if !template.slots.iter().any(|s| &s.name == name) {
                return Err(TreeError::UnknownSlot(name.clone()));
            }
        }
        for slot in &template.slots {
            let value = bindings.get(&slot.name).ok_or_else(|| TreeError::MissingSlot(slot.name.clone()))?;
            if value.kind() != slot.kind {
                return Err(TreeError::KindMismatch { slot: slot.name.clone(), expected: slot.kind });
            }
        }
        let filler = Filler { template, bindings };
        let kind = filler.build()?;
        Ok(TypedConstraint::new(kind).at_node(leaf))
    }
}

struct Filler<'a> {
    template: &'a TemplateSpec,
    bindings: &'a Bindings,
}

impl Filler<'_> {
    fn slot(&self, name: &str) -> Result<&SlotValue, TreeError> {
        self.bindings.get(name).ok_or_else(|| TreeError::MissingSlot(name.to_string()))
    }

    fn has_slot(&self, name: &str) -> bool {
        self.template.slots.iter().any(|s| s.name == name)
    }

    fn expr(&self, name: &str) -> Result<LinearExpr, TreeError> {
        match self.slot(name)? {
            SlotValue::Expression(e) => Ok(e.clone()),
            _ => Err(TreeError::KindMismatch { slot: name.into(), expected: SlotKind::Expression }),
        }
    }

    fn rational(&self, name: &str) -> Result<Rational, TreeError> {
        match self.slot(name)? {
            SlotValue::Rational(r) => Ok(*r),
            _ => Err(TreeError::KindMismatch { slot: name.into(), expected: SlotKind::Rational }),
        }
    }

    fn var(&self, name: &str) -> Result<VarId, TreeError> {
        match self.slot(name)? {
            SlotValue::Variable(v) => Ok(*v),
            _ => Err(TreeError::KindMismatch { slot: name.into(), expected: SlotKind::Variable }),
        }
    }

    fn vars(&self, name: &str) -> Result<Vec<VarId>, TreeError> {
        match self.slot(name)? {
            SlotValue::VariableList(v) => Ok(v.clone()),
            _ => Err(TreeError::KindMismatch { slot: name.into(), expected: SlotKind::VariableList }),
        }
    }

    fn count(&self, name: &str) -> Result<u32, TreeError> {
        match self.slot(name)? {
            SlotValue::PositiveInteger(0) => {
                Err(TreeError::InvalidBinding { slot: name.into(), reason: "must be positive".into() })
            }
            SlotValue::PositiveInteger(n) => Ok(*n),
            _ => Err(TreeError::KindMismatch { slot: name.into(), expected: SlotKind::PositiveInteger }),
        }
    }

    fn fixed<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T, TreeError> {
        let value = self
            .template
            .fixed
            .get(key)
            .ok_or_else(|| TreeError::Malformed(format!("template lacks fixed value {key:?}")))?;
        serde_json::from_value(value.clone()).map_err(|e| TreeError::Malformed(e.to_string()))
    }

    /// A constant-only expression binds as a constant bound.
    fn bound(&self) -> Result<BoundSpec, TreeError> {
        Ok(match self.slot("bound") {
            Ok(SlotValue::Expression(e)) if e.is_constant() => BoundSpec::Constant(e.constant_term()),
            Ok(SlotValue::Expression(e)) => BoundSpec::Expr(e.clone()),
            _ if self.has_slot("limit") => BoundSpec::Constant(self.rational("limit")?),
            _ => BoundSpec::Constant(self.rational("requirement")?),
        })
    }

    fn selection(&self) -> Result<SetSelection, TreeError> {
        if self.has_slot("members") {
            let rhs = self.fixed::<u32>("rhs")?;
            return Ok(SetSelection { members: self.vars("members")?, weights: None, rhs });
        }
        let sum = self.expr("weighted_sum")?;
        if !sum.constant_term().is_zero() {
            return Err(TreeError::InvalidBinding {
                slot: "weighted_sum".into(),
                reason: "weighted sum must not have a constant term".into(),
            });
        }
        let (members, weights): (Vec<VarId>, Vec<Rational>) = sum.terms().iter().map(|(&v, &w)| (v, w)).unzip();
        Ok(SetSelection { members, weights: Some(weights), rhs: self.count("count")? })
    }

    fn build(&self) -> Result<ConstraintKind, TreeError> {
        Ok(match self.template.family {
            Family::Bound => ConstraintKind::Bound {
                expr: self.expr("expr")?,
                sense: self.fixed("sense")?,
                bound: self.bound()?,
            },
            Family::ConditionalBound => ConstraintKind::ConditionalBound {
                expr: self.expr("expr")?,
                sense: self.fixed("sense")?,
                bound: self.bound()?,
                indicator: self.var("indicator")?,
                off_behavior: self.fixed::<OffBehavior>("off_behavior")?,
            },
            Family::Balance => ConstraintKind::Balance {
                lhs: self.expr("lhs")?,
                rhs: self.expr("rhs")?,
                flavor: self.fixed::<BalanceFlavor>("flavor")?,
            },
            Family::SetPacking => ConstraintKind::SetPacking(self.selection()?),
            Family::SetPartitioning => ConstraintKind::SetPartitioning(self.selection()?),
            Family::SetCovering => ConstraintKind::SetCovering(self.selection()?),
            Family::VariableFix => ConstraintKind::VariableFix { var: self.var("var")?, value: self.rational("value")? },
            Family::IfThen => ConstraintKind::IfThen {
                antecedents: self.vars("antecedents")?,
                consequents: if self.has_slot("consequent") {
                    vec![self.var("consequent")?]
                } else {
                    self.vars("consequents")?
                },
            },
            Family::EitherOr => ConstraintKind::EitherOr {
                alternatives: vec![
                    Alternative {
                        expr: self.expr("first")?,
                        sense: self.fixed::<Sense>("first_sense")?,
                        rhs: self.rational("first_limit")?,
                    },
                    Alternative {
                        expr: self.expr("second")?,
                        sense: self.fixed::<Sense>("second_sense")?,
                        rhs: self.rational("second_requirement")?,
                    },
                ],
            },
            Family::RawRow => return Err(TreeError::Malformed("raw rows have no template".into())),
        })
    }
}

/// The built-in tree, parsed once.
pub fn load_tree() -> &'static OmtTree {
    static TREE: OnceLock<OmtTree> = OnceLock::new();
    TREE.get_or_init(|| OmtTree::parse(TREE_JSON).expect("built-in OMT document is valid"))
}

/// Leaves sharing the algebraic shape of `kind`, default first.
fn candidates(kind: &ConstraintKind) -> Result<&'static [NodeId], TreeError> {
    let has_vars = |b: &BoundSpec| matches!(b, BoundSpec::Expr(e) if !e.is_constant());
    Ok(match kind {
        ConstraintKind::ConditionalBound { sense: Sense::Le, .. } => &[3],
        ConstraintKind::ConditionalBound { sense: Sense::Ge, .. } => &[9],
        ConstraintKind::Bound { sense: Sense::Le, bound, .. } if has_vars(bound) => &[2],
        ConstraintKind::Bound { sense: Sense::Ge, bound, .. } if has_vars(bound) => &[8],
        ConstraintKind::Bound { sense: Sense::Le, .. } => &[1, 7],
        ConstraintKind::Bound { sense: Sense::Ge, .. } => &[4, 5],
        ConstraintKind::Balance { flavor: BalanceFlavor::Interperiod, .. } => &[12],
        ConstraintKind::Balance { flavor: BalanceFlavor::Assignment, .. } => &[13, 16],
        ConstraintKind::Balance { flavor: BalanceFlavor::Flow, .. } => &[14, 15],
        ConstraintKind::SetPacking(s) if s.is_weighted() => &[20],
        ConstraintKind::SetPacking(_) => &[11, 20],
        ConstraintKind::SetPartitioning(s) if s.is_weighted() => &[21],
        ConstraintKind::SetPartitioning(_) => &[17, 21],
        ConstraintKind::SetCovering(s) if s.is_weighted() => &[10],
        ConstraintKind::SetCovering(_) => &[18, 10],
        ConstraintKind::VariableFix { .. } => &[19],
        ConstraintKind::IfThen { consequents, .. } if consequents.len() == 1 => &[23, 24],
        ConstraintKind::IfThen { .. } => &[24],
        ConstraintKind::EitherOr { .. } => &[22],
        ConstraintKind::RawRow { .. } | ConstraintKind::Bound { sense: Sense::Eq, .. } => {
            return Err(TreeError::Unclassifiable)
        }
        ConstraintKind::ConditionalBound { sense: Sense::Eq, .. } => return Err(TreeError::Unclassifiable),
    })
}

/// The OMT leaf a constraint belongs to.
///
/// Precedence: conditional bounds, then variable bounds, then constant
/// bounds; set families before the raw-row fallback, which is rejected.
pub fn classify(constraint: &TypedConstraint) -> Result<NodeId, TreeError> {
    let options = candidates(&constraint.kind)?;
    Ok(match constraint.omt_node {
        Some(tag) if options.contains(&tag) => tag,
        _ => options[0],
    })
}

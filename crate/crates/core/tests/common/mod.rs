#![allow(dead_code)]

use std::path::PathBuf;

use omt_milp::model::{ConstraintKind, Direction, LinearExpr, Model, TypedConstraint};
use omt_milp::rational::Rational;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Compares `actual` with a golden file; `OMT_BLESS=1` rewrites the file instead.
pub fn assert_golden(name: &str, actual: &str) {
    if std::env::var_os("OMT_BLESS").is_some() {
        std::fs::write(fixture_path(name), actual).unwrap();
    }
    assert_eq!(actual, fixture(name), "golden file {name} differs");
}

/// max 3 x1 + 4 x2 subject to "x1 + 2 x2 <= 2" as a packing row, x binary.
pub fn knapsack() -> Model {
    let mut m = Model::new("knapsack");
    let x1 = m.add_binary("x1").unwrap();
    let x2 = m.add_binary("x2").unwrap();
    let mut c = TypedConstraint::set_packing(vec![x1, x2]);
    if let ConstraintKind::SetPacking(sel) = &mut c.kind {
        sel.weights = Some(vec![Rational::integer(1), Rational::integer(2)]);
        sel.rhs = 2;
    }
    m.add_constraint(c.at_node(20)).unwrap();
    m.set_objective(Direction::Max, LinearExpr::from_terms([(x1, 3), (x2, 4)])).unwrap();
    m
}

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{decimal, parse_provenance, provenance, row_name, tokens, EmitError};
use crate::lowering::{CanonicalForm, CanonicalRow};
use crate::model::{is_valid_name, ConstraintId, Direction, LinearExpr, NodeId, Objective, Sense, VarId, VarKind, Variable};
use crate::rational::Rational;

const OBJECTIVE_ROW: &str = "obj";
const RHS_SET: &str = "RHS";
const BOUND_SET: &str = "BND";
const FOREIGN_SECTIONS: [&str; 7] = ["RANGES", "SOS", "QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX", "INDICATORS"];

fn row_type(sense: Sense) -> &'static str {
    match sense {
        Sense::Le => "L",
        Sense::Eq => "E",
        Sense::Ge => "G",
    }
}

/// Writes `form` as free-format MPS. Integer and binary columns are
/// wrapped in `INTORG`/`INTEND` markers, binaries get `BV` bounds, and
/// every other column lists its bounds explicitly.
pub fn emit_mps(form: &CanonicalForm) -> Result<String, EmitError> {
    let mut out = String::new();
    let name = form.name.replace(['\n', '\r'], " ");
    if name.trim().is_empty() {
        out.push_str("NAME\n");
    } else {
        let _ = writeln!(out, "NAME {name}");
    }
    out.push_str("OBJSENSE\n");
    out.push_str(match form.objective.direction {
        Direction::Max => "    MAX\n",
        Direction::Min => "    MIN\n",
    });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJECTIVE_ROW}");
    for (k, row) in form.rows.iter().enumerate() {
        let _ = writeln!(out, "* {}", provenance(k, row.source.0, row.omt_node));
        let _ = writeln!(out, " {} {}", row_type(row.sense), row_name(k));
    }

    let mut columns: Vec<Vec<(String, Rational)>> = vec![Vec::new(); form.variables.len()];
    for (&id, &c) in form.objective.expr.terms() {
        columns[id.0].push((OBJECTIVE_ROW.to_string(), c));
    }
    for (k, row) in form.rows.iter().enumerate() {
        for (&id, &c) in &row.coefficients {
            columns[id.0].push((row_name(k), c));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    for (v, entries) in form.variables.iter().zip(&columns) {
        let integral = v.kind.is_integral();
        if integral != in_integer_block {
            let marker = if integral { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER 'MARKER' '{marker}'");
            in_integer_block = integral;
        }
        if entries.is_empty() {
            let _ = writeln!(out, "    {} {OBJECTIVE_ROW} 0", v.name);
        }
        for (row, c) in entries {
            let value = decimal(*c, || format!("column {} row {row}", v.name))?;
            let _ = writeln!(out, "    {} {row} {value}", v.name);
        }
    }
    if in_integer_block {
        out.push_str("    MARKER 'MARKER' 'INTEND'\n");
    }

    out.push_str("RHS\n");
    for (k, row) in form.rows.iter().enumerate() {
        if !row.rhs.is_zero() {
            let value = decimal(row.rhs, || format!("row {}", row_name(k)))?;
            let _ = writeln!(out, "    {RHS_SET} {} {value}", row_name(k));
        }
    }
    let constant = form.objective.expr.constant_term();
    if !constant.is_zero() {
        let value = decimal(-constant, || "objective constant".to_string())?;
        let _ = writeln!(out, "    {RHS_SET} {OBJECTIVE_ROW} {value}");
    }

    out.push_str("BOUNDS\n");
    for v in &form.variables {
        let ctx = || format!("bounds of {}", v.name);
        let dec = |r: Rational| decimal(r, ctx);
        if v.kind == VarKind::Binary {
            let _ = writeln!(out, " BV {BOUND_SET} {}", v.name);
            continue;
        }
        match (v.lower, v.upper) {
            (Some(l), Some(u)) if l == u => {
                let _ = writeln!(out, " FX {BOUND_SET} {} {}", v.name, dec(l)?);
            }
            (None, None) => {
                let _ = writeln!(out, " FR {BOUND_SET} {}", v.name);
            }
            (lower, upper) => {
                match lower {
                    Some(l) => writeln!(out, " LO {BOUND_SET} {} {}", v.name, dec(l)?),
                    None => writeln!(out, " MI {BOUND_SET} {}", v.name),
                }
                .expect("writing to a String");
                match upper {
                    Some(u) => writeln!(out, " UP {BOUND_SET} {} {}", v.name, dec(u)?),
                    None => writeln!(out, " PL {BOUND_SET} {}", v.name),
                }
                .expect("writing to a String");
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

struct Column {
    name: String,
    integral: bool,
    binary: bool,
    lower: Option<Rational>,
    upper: Option<Rational>,
}

fn value(line: usize, col: usize, text: &str) -> Result<Rational, EmitError> {
    Rational::parse_decimal(text).map_err(|_| EmitError::parse(line, col, format!("expected a number, found {text:?}")))
}

/// Reads the free-MPS subset written by [`emit_mps`].
pub fn parse_mps(text: &str) -> Result<CanonicalForm, EmitError> {
    let mut section = Section::Start;
    let mut name = String::new();
    let mut direction = Direction::Min;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<CanonicalRow> = Vec::new();
    let mut pending: Option<(usize, usize, Option<NodeId>)> = None;
    let mut columns: Vec<Column> = Vec::new();
    let mut column_index: HashMap<String, usize> = HashMap::new();
    let mut objective = LinearExpr::zero();
    let mut in_integer_block = false;
    let mut last_line = 0;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        last_line = line;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.trim_start().strip_prefix('*') {
            if section == Section::Rows {
                pending = parse_provenance(comment.trim());
            }
            continue;
        }
        if section == Section::End {
            return Err(EmitError::parse(line, 1, "content after ENDATA"));
        }
        let toks = tokens(raw);
        let head = toks[0].1;
        if !raw.starts_with(char::is_whitespace) {
            if FOREIGN_SECTIONS.contains(&head) {
                return Err(EmitError::UnsupportedDialect(format!("section {head} on line {line}")));
            }
            let next = match head {
                "NAME" if section == Section::Start => {
                    name = raw.trim_start()[4..].trim().to_string();
                    Section::Name
                }
                "OBJSENSE" if matches!(section, Section::Start | Section::Name) => {
                    if let Some(&(col, sense)) = toks.get(1) {
                        direction = match sense {
                            "MAX" | "MAXIMIZE" => Direction::Max,
                            "MIN" | "MINIMIZE" => Direction::Min,
                            other => return Err(EmitError::parse(line, col, format!("unknown sense {other:?}"))),
                        };
                    }
                    Section::ObjSense
                }
                "ROWS" if matches!(section, Section::Start | Section::Name | Section::ObjSense) => Section::Rows,
                "COLUMNS" if section == Section::Rows => Section::Columns,
                "RHS" if section == Section::Columns => Section::Rhs,
                "BOUNDS" if matches!(section, Section::Columns | Section::Rhs) => Section::Bounds,
                "ENDATA" if matches!(section, Section::Columns | Section::Rhs | Section::Bounds) => Section::End,
                other => return Err(EmitError::parse(line, 1, format!("unexpected section {other:?}"))),
            };
            section = next;
            continue;
        }
        match section {
            Section::Start | Section::Name => return Err(EmitError::parse(line, toks[0].0, "data outside a section")),
            Section::ObjSense => {
                direction = match head {
                    "MAX" | "MAXIMIZE" => Direction::Max,
                    "MIN" | "MINIMIZE" => Direction::Min,
                    other => return Err(EmitError::parse(line, toks[0].0, format!("unknown sense {other:?}"))),
                };
            }
            Section::Rows => {
                let [(_, kind), (col, row)] = toks[..] else {
                    return Err(EmitError::parse(line, toks[0].0, "expected a row type and a row name"));
                };
                let sense = match kind {
                    "N" if objective_row.is_none() => {
                        objective_row = Some(row.to_string());
                        continue;
                    }
                    "N" => return Err(EmitError::UnsupportedDialect(format!("second objective row on line {line}"))),
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(EmitError::parse(line, toks[0].0, format!("unknown row type {other:?}"))),
                };
                let k = rows.len();
                if row_index.insert(row.to_string(), k).is_some() {
                    return Err(EmitError::parse(line, col, format!("duplicate row {row:?}")));
                }
                let (source, node) = match pending.take() {
                    Some((i, source, node)) if i == k => (source, node),
                    _ => (k, None),
                };
                rows.push(CanonicalRow {
                    coefficients: BTreeMap::new(),
                    sense,
                    rhs: Rational::ZERO,
                    source: ConstraintId(source),
                    omt_node: node,
                });
            }
            Section::Columns => {
                if toks.get(1).map(|t| t.1) == Some("'MARKER'") {
                    in_integer_block = match toks.get(2).map(|t| t.1) {
                        Some("'INTORG'") => true,
                        Some("'INTEND'") => false,
                        _ => return Err(EmitError::parse(line, toks[0].0, "unknown marker")),
                    };
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(EmitError::parse(line, toks[0].0, "expected a column and one or two entries"));
                }
                if !is_valid_name(head) {
                    return Err(EmitError::parse(line, toks[0].0, format!("invalid name {head:?}")));
                }
                let j = *column_index.entry(head.to_string()).or_insert_with(|| {
                    columns.push(Column {
                        name: head.to_string(),
                        integral: in_integer_block,
                        binary: false,
                        lower: Some(Rational::ZERO),
                        upper: None,
                    });
                    columns.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let (col, row) = pair[0];
                    let c = value(line, pair[1].0, pair[1].1)?;
                    if Some(row) == objective_row.as_deref() {
                        objective.add_term(VarId(j), c);
                    } else {
                        let k = *row_index
                            .get(row)
                            .ok_or_else(|| EmitError::parse(line, col, format!("unknown row {row:?}")))?;
                        *rows[k].coefficients.entry(VarId(j)).or_insert(Rational::ZERO) += c;
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(EmitError::parse(line, toks[0].0, "expected a set name and one or two entries"));
                }
                for pair in toks[1..].chunks(2) {
                    let (col, row) = pair[0];
                    let v = value(line, pair[1].0, pair[1].1)?;
                    if Some(row) == objective_row.as_deref() {
                        objective.add_constant(-v);
                    } else {
                        let k = *row_index
                            .get(row)
                            .ok_or_else(|| EmitError::parse(line, col, format!("unknown row {row:?}")))?;
                        rows[k].rhs = v;
                    }
                }
            }
            Section::Bounds => {
                let (kind, column) = match toks.as_slice() {
                    [(_, kind), _, column] | [(_, kind), _, column, _] => (*kind, *column),
                    _ => return Err(EmitError::parse(line, toks[0].0, "malformed bound")),
                };
                let j = *column_index
                    .get(column.1)
                    .ok_or_else(|| EmitError::parse(line, column.0, format!("unknown column {:?}", column.1)))?;
                let amount = match toks.get(3) {
                    Some(&(col, t)) => Some(value(line, col, t)?),
                    None => None,
                };
                let needs_value = matches!(kind, "UP" | "LO" | "FX");
                if needs_value != amount.is_some() {
                    return Err(EmitError::parse(line, toks[0].0, format!("wrong arity for bound type {kind}")));
                }
                let c = &mut columns[j];
                match kind {
                    "UP" => c.upper = amount,
                    "LO" => c.lower = amount,
                    "FX" => (c.lower, c.upper) = (amount, amount),
                    "FR" => (c.lower, c.upper) = (None, None),
                    "MI" => c.lower = None,
                    "PL" => c.upper = None,
                    "BV" => {
                        c.binary = true;
                        (c.lower, c.upper) = (Some(Rational::ZERO), Some(Rational::ONE));
                    }
                    other => return Err(EmitError::UnsupportedDialect(format!("bound type {other} on line {line}"))),
                }
            }
            Section::End => unreachable!(),
        }
    }
    if section != Section::End {
        return Err(EmitError::parse(last_line + 1, 1, "unexpected end of file, expected ENDATA"));
    }
    let variables = columns
        .into_iter()
        .enumerate()
        .map(|(i, c)| Variable {
            id: VarId(i),
            name: c.name,
            kind: if c.binary {
                VarKind::Binary
            } else if c.integral {
                VarKind::Integer
            } else {
                VarKind::Continuous
            },
            lower: c.lower,
            upper: c.upper,
        })
        .collect();
    Ok(CanonicalForm { name, variables, rows, objective: Objective { direction, expr: objective } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::lp::tests::knapsack;

    #[test]
    fn knapsack_sections() {
        let text = emit_mps(&knapsack()).unwrap();
        let expected = "NAME knapsack
OBJSENSE
    MAX
ROWS
 N obj
* c0 source=0 omt=20
 L c0
COLUMNS
    MARKER 'MARKER' 'INTORG'
    x1 obj 3
    x1 c0 1
    x2 obj 4
    x2 c0 2
    MARKER 'MARKER' 'INTEND'
RHS
    RHS c0 2
BOUNDS
 BV BND x1
 BV BND x2
ENDATA
";
        assert_eq!(text, expected);
        assert_eq!(parse_mps(&text).unwrap(), knapsack());
    }

    #[test]
    fn equality_rows_and_general_bounds() {
        let mut form = knapsack();
        form.name = String::new();
        form.rows[0].sense = Sense::Eq;
        form.rows[0].omt_node = None;
        form.variables.push(Variable {
            id: VarId(2),
            name: "s".into(),
            kind: VarKind::Continuous,
            lower: None,
            upper: Some(Rational::new(-1, 4).unwrap()),
        });
        form.variables.push(Variable { id: VarId(3), name: "n".into(), kind: VarKind::Integer, lower: None, upper: None });
        form.variables.push(Variable {
            id: VarId(4),
            name: "f".into(),
            kind: VarKind::Continuous,
            lower: Some(Rational::integer(3)),
            upper: Some(Rational::integer(3)),
        });
        form.objective.expr = form.objective.expr.clone().with_constant(5);
        let text = emit_mps(&form).unwrap();
        for needle in [" E c0\n", " MI BND s\n UP BND s -0.25\n", " FR BND n\n", " FX BND f 3\n", "RHS obj -5\n"] {
            assert!(text.contains(needle), "missing {needle:?} in\n{text}");
        }
        assert_eq!(parse_mps(&text).unwrap(), form);
    }

    #[test]
    fn reader_errors() {
        let text = emit_mps(&knapsack()).unwrap();
        let ranged = text.replace("BOUNDS", "RANGES\n    RNG c0 1\nBOUNDS");
        assert!(matches!(parse_mps(&ranged), Err(EmitError::UnsupportedDialect(_))));
        let truncated = &text[..text.find("RHS").unwrap()];
        assert!(matches!(parse_mps(truncated), Err(EmitError::ParseError { .. })));
        let unknown = text.replace("x2 c0 2", "x2 c9 2");
        assert!(matches!(parse_mps(&unknown), Err(EmitError::ParseError { line: 13, col: 8, .. })));
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{decimal, parse_provenance, provenance, row_name, tokens, EmitError};
use crate::lowering::{CanonicalForm, CanonicalRow};
use crate::model::{is_valid_name, ConstraintId, Direction, LinearExpr, NodeId, Objective, Sense, VarId, VarKind, Variable};
use crate::rational::Rational;

const PROBLEM_NAME: &str = "Problem name:";

/// Section headings of other LP dialects that this reader refuses.
const FOREIGN_SECTIONS: [&str; 9] = [
    "semi-continuous",
    "semis",
    "semi",
    "sos",
    "general constraints",
    "lazy constraints",
    "user cuts",
    "pwlobj",
    "integers",
];

fn write_terms<'a>(
    terms: impl Iterator<Item = (&'a str, Rational)>,
    constant: Rational,
    context: &dyn Fn() -> String,
) -> Result<String, EmitError> {
    let mut out = String::new();
    for (name, c) in terms {
        push_term(&mut out, Some(name), c, context)?;
    }
    if !constant.is_zero() || out.is_empty() {
        push_term(&mut out, None, constant, context)?;
    }
    Ok(out)
}

fn push_term(out: &mut String, name: Option<&str>, c: Rational, context: &dyn Fn() -> String) -> Result<(), EmitError> {
    let first = out.is_empty();
    let magnitude = if first { c } else { c.abs() };
    if !first {
        out.push_str(if c.is_negative() { " - " } else { " + " });
    }
    match name {
        Some(n) if magnitude == Rational::ONE => out.push_str(n),
        Some(n) if magnitude == -Rational::ONE => {
            out.push('-');
            out.push_str(n);
        }
        Some(n) => {
            let _ = write!(out, "{} {n}", decimal(magnitude, context)?);
        }
        None => out.push_str(&decimal(magnitude, context)?),
    }
    Ok(())
}

fn bound_line(v: &Variable) -> Result<String, EmitError> {
    let ctx = || format!("bounds of {}", v.name);
    let dec = |r: Rational| decimal(r, ctx);
    Ok(match (v.lower, v.upper) {
        (Some(l), Some(u)) if l == u => format!("{} = {}", v.name, dec(l)?),
        (Some(l), Some(u)) => format!("{} <= {} <= {}", dec(l)?, v.name, dec(u)?),
        (Some(l), None) => format!("{} >= {}", v.name, dec(l)?),
        (None, Some(u)) => format!("-inf <= {} <= {}", v.name, dec(u)?),
        (None, None) => format!("{} free", v.name),
    })
}

/// Writes `form` in the LP dialect. Every variable gets a line in
/// `Bounds`, which also fixes the variable order for the reader.
pub fn emit_lp(form: &CanonicalForm) -> Result<String, EmitError> {
    let name = |id: VarId| form.variables[id.0].name.as_str();
    let mut out = String::new();
    out.push_str(match form.objective.direction {
        Direction::Max => "Maximize\n",
        Direction::Min => "Minimize\n",
    });
    let objective = write_terms(
        form.objective.expr.terms().iter().map(|(&id, &c)| (name(id), c)),
        form.objective.expr.constant_term(),
        &|| "objective".to_string(),
    )?;
    let _ = writeln!(out, " obj: {objective}");
    let _ = writeln!(out, "\\ {PROBLEM_NAME} {}", form.name.replace(['\n', '\r'], " "));
    out.push_str("Subject To\n");
    for (k, row) in form.rows.iter().enumerate() {
        let ctx = || format!("row {}", row_name(k));
        let lhs = write_terms(row.coefficients.iter().map(|(&id, &c)| (name(id), c)), Rational::ZERO, &ctx)?;
        let rhs = decimal(row.rhs, ctx)?;
        let _ = writeln!(out, "\\ {}", provenance(k, row.source.0, row.omt_node));
        let _ = writeln!(out, " {}: {lhs} {} {rhs}", row_name(k), row.sense.symbol());
    }
    out.push_str("Bounds\n");
    for v in &form.variables {
        let _ = writeln!(out, " {}", bound_line(v)?);
    }
    for (heading, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = form.variables.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if !names.is_empty() {
            let _ = writeln!(out, "{heading}");
            for n in names {
                let _ = writeln!(out, " {n}");
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

struct RawRow {
    terms: Vec<(String, Rational)>,
    sense: Sense,
    rhs: Rational,
    source: usize,
    node: Option<NodeId>,
}

#[derive(Default)]
struct Names {
    order: Vec<String>,
    seen: HashMap<String, usize>,
}

impl Names {
    fn touch(&mut self, name: &str) -> usize {
        if let Some(&i) = self.seen.get(name) {
            return i;
        }
        self.order.push(name.to_string());
        self.seen.insert(name.to_string(), self.order.len() - 1);
        self.order.len() - 1
    }
}

fn number(line: usize, col: usize, text: &str) -> Result<Rational, EmitError> {
    Rational::parse_decimal(text).map_err(|_| EmitError::parse(line, col, format!("expected a number, found {text:?}")))
}

fn is_number_start(body: &str) -> bool {
    body.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

/// Parses `a x + b y - z + c`; returns the variable terms and the constant.
fn parse_terms(line: usize, toks: &[(usize, &str)]) -> Result<(Vec<(String, Rational)>, Rational), EmitError> {
    let mut terms = Vec::new();
    let mut constant = Rational::ZERO;
    let mut sign: Option<Rational> = None;
    let mut coef: Option<Rational> = None;
    let mut expect_operator = false;
    for &(col, tok) in toks {
        if tok == "+" || tok == "-" {
            if let Some(c) = coef.take() {
                constant += c;
            } else if sign.is_some() || (!expect_operator && !terms.is_empty()) {
                return Err(EmitError::parse(line, col, "unexpected operator"));
            }
            sign = Some(if tok == "-" { -Rational::ONE } else { Rational::ONE });
            expect_operator = false;
            continue;
        }
        let (attached, body) = match tok.strip_prefix('-') {
            Some(rest) => (-Rational::ONE, rest),
            None => (Rational::ONE, tok.strip_prefix('+').unwrap_or(tok)),
        };
        let attached_sign = body.len() != tok.len();
        if expect_operator && !attached_sign {
            return Err(EmitError::parse(line, col, format!("expected '+' or '-' before {tok:?}")));
        }
        if attached_sign && sign.is_some() {
            return Err(EmitError::parse(line, col, "unexpected operator"));
        }
        let factor = sign.take().unwrap_or(Rational::ONE) * attached;
        if is_number_start(body) {
            if coef.is_some() {
                return Err(EmitError::parse(line, col, "two numbers in a row"));
            }
            coef = Some(factor * number(line, col, body)?);
            expect_operator = false;
        } else {
            if !is_valid_name(body) {
                return Err(EmitError::parse(line, col, format!("invalid name {body:?}")));
            }
            let c = match coef.take() {
                Some(c) => c * factor,
                None => factor,
            };
            terms.push((body.to_string(), c));
            expect_operator = true;
        }
    }
    if let Some(c) = coef {
        constant += c;
    } else if sign.is_some() {
        let col = toks.last().map_or(1, |t| t.0);
        return Err(EmitError::parse(line, col, "operator without operand"));
    }
    Ok((terms, constant))
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

fn infinite(tok: &str) -> Option<bool> {
    match tok.to_ascii_lowercase().as_str() {
        "-inf" | "-infinity" => Some(false),
        "inf" | "+inf" | "infinity" | "+infinity" => Some(true),
        _ => None,
    }
}

type BoundPair = (Option<Rational>, Option<Rational>);

fn parse_bound(line: usize, toks: &[(usize, &str)]) -> Result<(String, BoundPair), EmitError> {
    let limit = |(col, tok): (usize, &str)| -> Result<Option<Rational>, EmitError> {
        match infinite(tok) {
            Some(_) => Ok(None),
            None => number(line, col, tok).map(Some),
        }
    };
    let name = |(col, tok): (usize, &str)| -> Result<String, EmitError> {
        if is_valid_name(tok) {
            Ok(tok.to_string())
        } else {
            Err(EmitError::parse(line, col, format!("invalid name {tok:?}")))
        }
    };
    match toks {
        [v, (_, "free")] => Ok((name(*v)?, (None, None))),
        [v, (col, op), b] => {
            let value = limit(*b)?;
            let n = name(*v)?;
            match sense_of(op) {
                Some(Sense::Le) => Ok((n, (Some(Rational::ZERO), value))),
                Some(Sense::Ge) => Ok((n, (value, None))),
                Some(Sense::Eq) => Ok((n, (value, value))),
                None => Err(EmitError::parse(line, *col, format!("expected a comparison, found {op:?}"))),
            }
        }
        [l, (c1, op1), v, (c2, op2), u] => {
            for (col, op) in [(c1, op1), (c2, op2)] {
                if sense_of(op) != Some(Sense::Le) {
                    return Err(EmitError::parse(line, *col, format!("expected '<=', found {op:?}")));
                }
            }
            Ok((name(*v)?, (limit(*l)?, limit(*u)?)))
        }
        _ => Err(EmitError::parse(line, toks.first().map_or(1, |t| t.0), "unrecognized bound")),
    }
}

/// Reads the LP subset written by [`emit_lp`].
pub fn parse_lp(text: &str) -> Result<CanonicalForm, EmitError> {
    let mut section = Section::Start;
    let mut direction = Direction::Min;
    let mut problem = String::new();
    let mut objective: Option<(Vec<(String, Rational)>, Rational)> = None;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut pending: Option<(usize, usize, Option<NodeId>)> = None;
    let mut bounds: HashMap<String, BoundPair> = HashMap::new();
    let mut bound_names = Names::default();
    let mut other_names = Names::default();
    let mut generals = BTreeSet::new();
    let mut binaries = BTreeSet::new();
    let mut last_line = 0;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(name) = comment.strip_prefix(PROBLEM_NAME) {
                problem = name.trim().to_string();
            } else if section == Section::Constraints {
                pending = parse_provenance(comment);
            }
            continue;
        }
        if section == Section::End {
            return Err(EmitError::parse(line, 1, "content after End"));
        }
        let heading = match trimmed {
            "Maximize" | "Minimize" if section == Section::Start => {
                direction = if trimmed == "Maximize" { Direction::Max } else { Direction::Min };
                Some(Section::Objective)
            }
            "Subject To" if section == Section::Objective => Some(Section::Constraints),
            "Bounds" if section == Section::Constraints => Some(Section::Bounds),
            "Generals" if matches!(section, Section::Constraints | Section::Bounds) => Some(Section::Generals),
            "Binaries" if matches!(section, Section::Constraints | Section::Bounds | Section::Generals) => {
                Some(Section::Binaries)
            }
            "End" if section != Section::Start && section != Section::Objective => Some(Section::End),
            _ => None,
        };
        if let Some(next) = heading {
            section = next;
            continue;
        }
        if FOREIGN_SECTIONS.contains(&trimmed.to_ascii_lowercase().as_str()) {
            return Err(EmitError::UnsupportedDialect(format!("section {trimmed:?} on line {line}")));
        }
        let offset = raw.len() - raw.trim_start().len();
        let toks: Vec<(usize, &str)> = tokens(trimmed).into_iter().map(|(c, t)| (c + offset, t)).collect();
        match section {
            Section::Start => return Err(EmitError::parse(line, 1, "expected Maximize or Minimize")),
            Section::Objective => {
                if objective.is_some() {
                    return Err(EmitError::parse(line, 1, "objective spans several lines"));
                }
                let body = match toks.first() {
                    Some((_, t)) if t.ends_with(':') => &toks[1..],
                    _ => &toks[..],
                };
                let parsed = parse_terms(line, body)?;
                for (n, _) in &parsed.0 {
                    other_names.touch(n);
                }
                objective = Some(parsed);
            }
            Section::Constraints => {
                let Some((_, head)) = toks.first().filter(|(_, t)| t.ends_with(':')) else {
                    return Err(EmitError::parse(line, offset + 1, "expected a row name followed by ':'"));
                };
                let _ = head;
                let body = &toks[1..];
                let ops: Vec<usize> = (0..body.len()).filter(|&i| sense_of(body[i].1).is_some()).collect();
                let at = match ops.as_slice() {
                    [i] => *i,
                    [] => return Err(EmitError::parse(line, offset + 1, "row has no comparison")),
                    _ => return Err(EmitError::UnsupportedDialect(format!("ranged row on line {line}"))),
                };
                let (terms, constant) = parse_terms(line, &body[..at])?;
                if !constant.is_zero() {
                    return Err(EmitError::parse(line, body[0].0, "constant on the left-hand side"));
                }
                let (rhs_col, rhs_text) = match &body[at + 1..] {
                    [one] => *one,
                    [] => return Err(EmitError::parse(line, body[at].0, "missing right-hand side")),
                    more => return Err(EmitError::parse(line, more[1].0, "unexpected token after right-hand side")),
                };
                let rhs = number(line, rhs_col, rhs_text)?;
                let k = rows.len();
                let (source, node) = match pending.take() {
                    Some((i, source, node)) if i == k => (source, node),
                    _ => (k, None),
                };
                for (n, _) in &terms {
                    other_names.touch(n);
                }
                rows.push(RawRow { terms, sense: sense_of(body[at].1).unwrap(), rhs, source, node });
            }
            Section::Bounds => {
                let (name, pair) = parse_bound(line, &toks)?;
                bound_names.touch(&name);
                bounds.insert(name, pair);
            }
            Section::Generals | Section::Binaries => {
                for &(col, tok) in &toks {
                    if !is_valid_name(tok) {
                        return Err(EmitError::parse(line, col, format!("invalid name {tok:?}")));
                    }
                    other_names.touch(tok);
                    if section == Section::Generals {
                        generals.insert(tok.to_string());
                    } else {
                        binaries.insert(tok.to_string());
                    }
                }
            }
            Section::End => unreachable!(),
        }
    }
    if section != Section::End {
        return Err(EmitError::parse(last_line + 1, 1, "unexpected end of file, expected End"));
    }

    let mut order = bound_names;
    for n in &other_names.order {
        order.touch(n);
    }
    let variables: Vec<Variable> = order
        .order
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let kind = if binaries.contains(name) {
                VarKind::Binary
            } else if generals.contains(name) {
                VarKind::Integer
            } else {
                VarKind::Continuous
            };
            let default = match kind {
                VarKind::Binary => (Some(Rational::ZERO), Some(Rational::ONE)),
                _ => (Some(Rational::ZERO), None),
            };
            let (lower, upper) = bounds.get(name).copied().unwrap_or(default);
            Variable { id: VarId(i), name: name.clone(), kind, lower, upper }
        })
        .collect();
    let id = |name: &str| VarId(order.seen[name]);
    let (obj_terms, obj_constant) = objective.unwrap_or_default();
    let mut expr = LinearExpr::constant(obj_constant);
    for (n, c) in obj_terms {
        expr.add_term(id(&n), c);
    }
    let rows = rows
        .into_iter()
        .map(|r| {
            let mut coefficients = BTreeMap::new();
            for (n, c) in r.terms {
                *coefficients.entry(id(&n)).or_insert(Rational::ZERO) += c;
            }
            CanonicalRow {
                coefficients,
                sense: r.sense,
                rhs: r.rhs,
                source: ConstraintId(r.source),
                omt_node: r.node,
            }
        })
        .collect();
    Ok(CanonicalForm { name: problem, variables, rows, objective: Objective { direction, expr } })
}

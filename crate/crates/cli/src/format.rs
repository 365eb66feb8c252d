//! Text formats for instances and plans.
//!
//! Instance: `d 2`, `metric l1|l2|linf`, then `r <x> <y> <supply>` and
//! `b <x> <y> <demand>` lines. Plan: `t <red> <blue> <amount>` lines and a
//! final `cost <value>`. `#` starts a comment, blank lines are ignored.

use std::fmt::Write as _;

use geotrans_core::mcf::FlowNetwork;
use geotrans_core::{Metric, PlanEntry, Point, Site, TransportInstance, TransportPlan};

use crate::CliError;

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { line, msg: msg.into() }
}

/// Non-comment lines as `(line number, tokens)`.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn number<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, CliError> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn coordinate(line: usize, tok: &str) -> Result<f64, CliError> {
    let v: f64 = number(line, tok, "coordinate")?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("coordinate `{tok}` is not finite")));
    }
    Ok(v)
}

pub fn parse_instance(text: &str) -> Result<TransportInstance, CliError> {
    let mut metric: Option<Metric> = None;
    let mut dim_seen = false;
    let mut reds = Vec::new();
    let mut blues = Vec::new();
    for (line, tok) in records(text) {
        match tok[0] {
            "d" => {
                if tok.len() != 2 || dim_seen {
                    return Err(parse_err(line, "expected a single `d 2` header"));
                }
                if tok[1] != "2" {
                    return Err(parse_err(line, format!("only dimension 2 is supported, got `{}`", tok[1])));
                }
                dim_seen = true;
            }
            "metric" => {
                if tok.len() != 2 || metric.is_some() {
                    return Err(parse_err(line, "expected a single `metric <l1|l2|linf>` header"));
                }
                metric = Some(Metric::parse(tok[1]).ok_or_else(|| parse_err(line, format!("unknown metric `{}`", tok[1])))?);
            }
            kind @ ("r" | "b") => {
                if tok.len() != 4 {
                    return Err(parse_err(line, format!("expected `{kind} <x> <y> <mass>`, got {} fields", tok.len() - 1)));
                }
                let p = Point::new(coordinate(line, tok[1])?, coordinate(line, tok[2])?);
                let mass: u64 = number(line, tok[3], "mass")?;
                if mass == 0 {
                    return Err(parse_err(line, "mass must be at least 1"));
                }
                if kind == "r" { &mut reds } else { &mut blues }.push(Site::new(p, mass));
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(TransportInstance::new(reds, blues, metric.unwrap_or_default())?)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_instance(inst: &TransportInstance) -> String {
    let mut out = String::new();
    writeln!(out, "d 2").unwrap();
    writeln!(out, "metric {}", inst.metric().name()).unwrap();
    for (tag, sites) in [("r", inst.reds()), ("b", inst.blues())] {
        for s in sites {
            writeln!(out, "{tag} {} {} {}", num(s.point.x), num(s.point.y), s.mass).unwrap();
        }
    }
    out
}

/// Plan entries and the recorded cost, if any.
pub fn parse_plan(text: &str) -> Result<(TransportPlan, Option<f64>), CliError> {
    let mut entries = Vec::new();
    let mut cost = None;
    let mut last_line = 0;
    for (line, tok) in records(text) {
        last_line = line;
        match (tok[0], tok.len()) {
            ("t", 4) => entries.push(PlanEntry::new(
                number(line, tok[1], "red index")?,
                number(line, tok[2], "blue index")?,
                number(line, tok[3], "amount")?,
            )),
            ("cost", 2) if cost.is_none() => cost = Some(number(line, tok[1], "cost")?),
            _ => return Err(parse_err(line, format!("unexpected record `{}`", tok.join(" ")))),
        }
    }
    let plan = TransportPlan::new(entries).map_err(|e| parse_err(last_line, e.to_string()))?;
    Ok((plan, cost))
}

pub fn write_plan(plan: &TransportPlan, cost: f64) -> String {
    let mut out = String::new();
    for e in plan.entries() {
        writeln!(out, "t {} {} {}", e.red, e.blue, e.amount).unwrap();
    }
    writeln!(out, "cost {}", num(cost)).unwrap();
    out
}

/// `n <vertices>`, one `v <id> <balance>` per vertex, one
/// `a <tail> <head> <cost>` per arc.
pub fn write_network(net: &FlowNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", net.vertex_count()).unwrap();
    for (v, b) in net.balances().iter().enumerate() {
        writeln!(out, "v {v} {b}").unwrap();
    }
    for a in net.arcs() {
        writeln!(out, "a {} {} {}", a.tail, a.head, num(a.cost)).unwrap();
    }
    out
}

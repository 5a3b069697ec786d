//! Line-oriented text formats for circuits and device topologies.
//!
//! ```text
//! qubits 7
//! label eight_gate
//! layout 4 5 8 6 10 9 7
//! h q0
//! cx q0 q4
//! rzz(-pi/3.5) q4 q6
//! ```
//!
//! `label` and `layout` are optional and must precede the gates.

use crate::circuit::{Circuit, Gate, QubitId};
use crate::error::{Error, Result};
use crate::topology::Topology;
use std::f64::consts::PI;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parse an angle: a decimal, or `[-][N*]pi[/D]`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    let (num, rest) = match body.split_once('*') {
        Some((n, r)) => (n.trim().parse::<f64>().ok()?, r.trim()),
        None => (1.0, body),
    };
    let rest = rest.strip_prefix("pi")?.trim();
    let den = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/')?.trim().parse::<f64>().ok()?
    };
    let v = sign * num * PI / den;
    (v.is_finite() && den != 0.0).then_some(v)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

fn parse_qubit(tok: &str, line: usize, n: usize) -> Result<usize> {
    let idx = tok
        .strip_prefix('q')
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| perr(line, format!("bad qubit operand '{tok}'")))?;
    if idx >= n {
        return Err(perr(line, format!("qubit q{idx} out of range for {n} qubits")));
    }
    Ok(idx)
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some(c) = circuit.as_mut() else {
            if toks.len() == 2 && toks[0] == "qubits" {
                let n = toks[1].parse::<usize>().map_err(|_| perr(ln, "bad qubit count"))?;
                circuit = Some(Circuit::new(n));
                continue;
            }
            return Err(perr(ln, "expected 'qubits N' header"));
        };
        let n = c.num_qubits;
        match toks[0] {
            "label" => {
                if !c.gates.is_empty() {
                    return Err(perr(ln, "label must precede gates"));
                }
                c.label = toks[1..].join(" ");
                continue;
            }
            "layout" => {
                if !c.gates.is_empty() {
                    return Err(perr(ln, "layout must precede gates"));
                }
                let map: std::result::Result<Vec<usize>, _> = toks[1..].iter().map(|t| t.parse()).collect();
                let map = map.map_err(|_| perr(ln, "bad layout entry"))?;
                if map.len() != n {
                    return Err(perr(ln, format!("layout has {} entries, expected {n}", map.len())));
                }
                c.layout = Some(map);
                continue;
            }
            _ => {}
        }
        let (name, angle) = match toks[0].split_once('(') {
            Some((nm, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| perr(ln, "unclosed '('"))?;
                let a = parse_angle(inner).ok_or_else(|| perr(ln, format!("bad angle '{inner}'")))?;
                (nm, Some(a))
            }
            None => (toks[0], None),
        };
        let arity = match name {
            "h" | "x" | "y" | "z" | "s" | "sdg" | "rz" => 1,
            "cx" | "rzz" => 2,
            other => return Err(perr(ln, format!("unknown gate '{other}'"))),
        };
        let wants_angle = matches!(name, "rz" | "rzz");
        if wants_angle != angle.is_some() {
            return Err(perr(ln, format!("gate '{name}' angle mismatch")));
        }
        if toks.len() != 1 + arity {
            return Err(perr(ln, format!("gate '{name}' takes {arity} operand(s)")));
        }
        let a = parse_qubit(toks[1], ln, n)?;
        let q = QubitId(a);
        let gate = match name {
            "h" => Gate::H(q),
            "x" => Gate::X(q),
            "y" => Gate::Y(q),
            "z" => Gate::Z(q),
            "s" => Gate::S(q),
            "sdg" => Gate::Sdg(q),
            "rz" => Gate::Rz(angle.unwrap(), q),
            _ => {
                let b = parse_qubit(toks[2], ln, n)?;
                if a == b {
                    return Err(perr(ln, format!("duplicate operand q{a}")));
                }
                if name == "cx" {
                    Gate::cx(a, b)
                } else {
                    Gate::rzz(angle.unwrap(), a, b)
                }
            }
        };
        c.push(gate).map_err(|e| perr(ln, e.to_string()))?;
    }
    circuit.ok_or_else(|| perr(0, "missing 'qubits N' header"))
}

fn fmt_angle(t: f64) -> String {
    // Debug formatting is the shortest string that parses back to the same f64.
    format!("{t:?}")
}

pub fn emit_gate(g: &Gate) -> String {
    match *g {
        Gate::Rz(t, q) => format!("rz({}) {q}", fmt_angle(t)),
        Gate::Rzz(t, a, b) => format!("rzz({}) {a} {b}", fmt_angle(t)),
        Gate::Cnot { control, target } => format!("cx {control} {target}"),
        _ => format!("{} q{}", g.name(), g.qubits()[0]),
    }
}

pub fn emit_circuit(c: &Circuit) -> String {
    let mut out = format!("qubits {}\n", c.num_qubits);
    if !c.label.is_empty() {
        out.push_str(&format!("label {}\n", c.label));
    }
    if let Some(m) = &c.layout {
        let parts: Vec<String> = m.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("layout {}\n", parts.join(" ")));
    }
    for g in &c.gates {
        out.push_str(&emit_gate(g));
        out.push('\n');
    }
    out
}

pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match (n, toks.as_slice()) {
            (None, ["qubits", k]) => n = Some(k.parse().map_err(|_| perr(ln, "bad qubit count"))?),
            (None, _) => return Err(perr(ln, "expected 'qubits N' header")),
            (Some(_), ["edge", a, b]) => {
                let a: usize = a.parse().map_err(|_| perr(ln, "bad edge endpoint"))?;
                let b: usize = b.parse().map_err(|_| perr(ln, "bad edge endpoint"))?;
                edges.push((a, b));
            }
            (Some(_), _) => return Err(perr(ln, format!("unexpected line '{line}'"))),
        }
    }
    let n = n.ok_or_else(|| perr(0, "missing 'qubits N' header"))?;
    Topology::new(n, &edges)
}

pub fn emit_topology(t: &Topology) -> String {
    let mut out = format!("qubits {}\n", t.num_qubits);
    for (a, b) in t.edges() {
        out.push_str(&format!("edge {a} {b}\n"));
    }
    out
}

//! Circuit representation: gates over numbered qubits, in execution order.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub usize);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Supported gates. Rz(t) = exp(-i t Z/2), Rzz(t) = exp(-i t ZZ/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(QubitId),
    X(QubitId),
    Y(QubitId),
    Z(QubitId),
    S(QubitId),
    Sdg(QubitId),
    Rz(f64, QubitId),
    Cnot { control: QubitId, target: QubitId },
    Rzz(f64, QubitId, QubitId),
}

impl Gate {
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::Cnot { control: QubitId(control), target: QubitId(target) }
    }

    pub fn rzz(theta: f64, a: usize, b: usize) -> Gate {
        Gate::Rzz(theta, QubitId(a), QubitId(b))
    }

    pub fn rz(theta: f64, q: usize) -> Gate {
        Gate::Rz(theta, QubitId(q))
    }

    pub fn h(q: usize) -> Gate {
        Gate::H(QubitId(q))
    }

    pub fn x(q: usize) -> Gate {
        Gate::X(QubitId(q))
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) | Gate::Sdg(q) => {
                vec![q.0]
            }
            Gate::Rz(_, q) => vec![q.0],
            Gate::Cnot { control, target } => vec![control.0, target.0],
            Gate::Rzz(_, a, b) => vec![a.0, b.0],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Rzz(..))
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits().contains(&q)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::Rz(..) => "rz",
            Gate::Cnot { .. } => "cx",
            Gate::Rzz(..) => "rzz",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Gate::Rz(t, _) | Gate::Rzz(t, _, _) => Some(t),
            _ => None,
        }
    }

    /// Same gate with operands renamed through `f`.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Gate {
        let m = |q: QubitId| QubitId(f(q.0));
        match *self {
            Gate::H(q) => Gate::H(m(q)),
            Gate::X(q) => Gate::X(m(q)),
            Gate::Y(q) => Gate::Y(m(q)),
            Gate::Z(q) => Gate::Z(m(q)),
            Gate::S(q) => Gate::S(m(q)),
            Gate::Sdg(q) => Gate::Sdg(m(q)),
            Gate::Rz(t, q) => Gate::Rz(t, m(q)),
            Gate::Cnot { control, target } => Gate::Cnot { control: m(control), target: m(target) },
            Gate::Rzz(t, a, b) => Gate::Rzz(t, m(a), m(b)),
        }
    }

    /// Build a gate from its text name, optional angle and operands.
    pub fn from_parts(name: &str, theta: Option<f64>, qubits: &[usize]) -> Result<Gate> {
        let arity = match name {
            "h" | "x" | "y" | "z" | "s" | "sdg" | "rz" => 1,
            "cx" | "rzz" => 2,
            other => return Err(Error::InvalidGate(format!("unknown gate '{other}'"))),
        };
        if qubits.len() != arity {
            return Err(Error::InvalidGate(format!("{name} takes {arity} operand(s)")));
        }
        let wants_angle = matches!(name, "rz" | "rzz");
        let t = match (wants_angle, theta) {
            (true, Some(t)) => t,
            (false, None) => 0.0,
            _ => return Err(Error::InvalidGate(format!("{name}: angle mismatch"))),
        };
        let q = QubitId(qubits[0]);
        Ok(match name {
            "h" => Gate::H(q),
            "x" => Gate::X(q),
            "y" => Gate::Y(q),
            "z" => Gate::Z(q),
            "s" => Gate::S(q),
            "sdg" => Gate::Sdg(q),
            "rz" => Gate::Rz(t, q),
            "cx" => Gate::cx(qubits[0], qubits[1]),
            _ => Gate::rzz(t, qubits[0], qubits[1]),
        })
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, size: num_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidGate(format!("{} with duplicate operand q{}", self.name(), qs[0])));
        }
        if let Some(t) = self.theta() {
            if !t.is_finite() {
                return Err(Error::InvalidGate(format!("{} with non-finite angle", self.name())));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    gate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    qubits: Vec<usize>,
}

/// JSON form: {"gate":"rzz","theta":-0.89,"qubits":[4,6]}.
impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GateJson { gate: self.name().to_string(), theta: self.theta(), qubits: self.qubits() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GateJson::deserialize(d)?;
        Gate::from_parts(&j.gate, j.theta, &j.qubits).map_err(serde::de::Error::custom)
    }
}

/// A two-qubit gate with its 1-based index and its position in the gate list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexedGate {
    pub index: usize,
    pub position: usize,
    pub gate: Gate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub label: String,
    /// Physical qubit for each circuit qubit, when the circuit is mapped onto a device.
    pub layout: Option<Vec<usize>>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Circuit {
        Circuit { num_qubits, gates: Vec::new(), label: String::new(), layout: None }
    }

    pub fn with_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Circuit> {
        let mut c = Circuit::new(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.num_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn labeled(mut self, label: &str) -> Circuit {
        self.label = label.to_string();
        self
    }

    pub fn indexed_schedule(&self) -> Vec<IndexedGate> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_two_qubit())
            .enumerate()
            .map(|(i, (pos, g))| IndexedGate { index: i + 1, position: pos, gate: *g })
            .collect()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Gate-list position of indexed gate `index` (1-based).
    pub fn position_of(&self, index: usize) -> Option<usize> {
        self.indexed_schedule().get(index.checked_sub(1)?).map(|ig| ig.position)
    }

    /// Truncate right after indexed gate `i`; `prefix(0)` keeps the single-qubit gates
    /// that precede the first two-qubit gate.
    pub fn prefix(&self, i: usize) -> Result<Circuit> {
        let sched = self.indexed_schedule();
        if i > sched.len() {
            return Err(Error::IndexOutOfRange { index: i, max: sched.len() });
        }
        let end = if i == sched.len() {
            self.gates.len()
        } else if i == 0 {
            sched[0].position
        } else {
            sched[i - 1].position + 1
        };
        Ok(Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates[..end].to_vec(),
            label: self.label.clone(),
            layout: self.layout.clone(),
        })
    }

    /// Number of layers of two-qubit gates under greedy as-soon-as-possible scheduling.
    pub fn two_qubit_depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for g in self.gates.iter().filter(|g| g.is_two_qubit()) {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for &q in &qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    pub fn physical(&self, q: usize) -> usize {
        match &self.layout {
            Some(m) => m[q],
            None => q,
        }
    }

    pub fn with_gate_list(&self, gates: Vec<Gate>) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates, label: self.label.clone(), layout: self.layout.clone() }
    }
}

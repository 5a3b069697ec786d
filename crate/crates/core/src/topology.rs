//! Device connectivity, topology checks and local partitions.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use std::collections::BTreeSet;

const MELBOURNE: &str = include_str!("../data/melbourne.topo");
const LAGOS: &str = include_str!("../data/lagos.topo");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

fn norm(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Topology {
    pub fn new(num_qubits: usize, edges: &[(usize, usize)]) -> Result<Topology> {
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Topology(format!("self-loop on {a}")));
            }
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, size: num_qubits });
                }
            }
            set.insert(norm(a, b));
        }
        Ok(Topology { num_qubits, edges: set })
    }

    /// The 15-qubit ladder device.
    pub fn melbourne() -> Topology {
        crate::format::parse_topology(MELBOURNE).expect("shipped topology parses")
    }

    /// The 7-qubit H-shaped device.
    pub fn lagos() -> Topology {
        crate::format::parse_topology(LAGOS).expect("shipped topology parses")
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&norm(a, b))
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == q { Some(b) } else if b == q { Some(a) } else { None })
            .collect()
    }

    pub fn induced_edges(&self, qubits: &[usize]) -> Vec<(usize, usize)> {
        self.edges.iter().copied().filter(|(a, b)| qubits.contains(a) && qubits.contains(b)).collect()
    }

    pub fn is_connected_subset(&self, qubits: &[usize]) -> bool {
        let Some(&start) = qubits.first() else { return true };
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(q) = stack.pop() {
            for n in self.neighbors(q) {
                if qubits.contains(&n) && !seen.contains(&n) {
                    seen.push(n);
                    stack.push(n);
                }
            }
        }
        seen.len() == qubits.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// 1-based index in the circuit's two-qubit schedule.
    pub gate_index: usize,
    pub qubits: (usize, usize),
}

/// Two-qubit gates whose (physical) operand pair is not a device edge.
pub fn validate_against_topology(c: &Circuit, t: &Topology) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for ig in c.indexed_schedule() {
        let qs = ig.gate.qubits();
        let (a, b) = (c.physical(qs[0]), c.physical(qs[1]));
        for q in [a, b] {
            if q >= t.num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, size: t.num_qubits });
            }
        }
        if !t.has_edge(a, b) {
            out.push(Violation { gate_index: ig.index, qubits: (a, b) });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub qubits: Vec<usize>,
    pub induced_edges: Vec<(usize, usize)>,
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn partitions_where(t: &Topology, k: usize, keep: impl Fn(&[usize]) -> bool) -> Vec<Partition> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    combinations(t.num_qubits, k, |s| {
        if t.is_connected_subset(s) && keep(s) {
            out.push(Partition { qubits: s.to_vec(), induced_edges: t.induced_edges(s) });
        }
    });
    out
}

/// All connected induced `k`-qubit subgraphs, in lexicographic order of sorted qubits.
pub fn enumerate_local_partitions(t: &Topology, k: usize) -> Vec<Partition> {
    partitions_where(t, k, |_| true)
}

/// Connected `k`-subsets that can host a circuit whose two-qubit gates touch the role
/// pairs in `pattern` (roles `0..k`) without any swap.
pub fn enumerate_supporting_partitions(t: &Topology, k: usize, pattern: &[(usize, usize)]) -> Vec<Partition> {
    partitions_where(t, k, |s| embed_pattern(t, s, k, pattern).is_some())
}

/// Find role → qubit assignments within `qubits` so every pattern pair lands on an edge.
/// Returns the first assignment in lexicographic search order.
pub fn embed_pattern(t: &Topology, qubits: &[usize], roles: usize, pattern: &[(usize, usize)]) -> Option<Vec<usize>> {
    if qubits.len() < roles {
        return None;
    }
    let mut assign = vec![usize::MAX; roles];
    let mut used = vec![false; qubits.len()];
    fn rec(
        r: usize,
        t: &Topology,
        qubits: &[usize],
        pattern: &[(usize, usize)],
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if r == assign.len() {
            return true;
        }
        for (i, &q) in qubits.iter().enumerate() {
            if used[i] {
                continue;
            }
            let ok = pattern.iter().all(|&(a, b)| {
                let other = if a == r { b } else if b == r { a } else { return true };
                other > r || t.has_edge(q, assign[other])
            });
            if !ok {
                continue;
            }
            used[i] = true;
            assign[r] = q;
            if rec(r + 1, t, qubits, pattern, assign, used) {
                return true;
            }
            used[i] = false;
        }
        false
    }
    rec(0, t, qubits, pattern, &mut assign, &mut used).then_some(assign)
}

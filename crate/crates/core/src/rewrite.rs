//! Commutation analysis and the CNOT identities used to rewrite encoders.

use crate::circuit::{Circuit, Gate, QubitId};
use crate::error::{Error, Result};
use crate::sim::circuit_unitary;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Action {
    /// Diagonal in the computational basis on this qubit.
    Zlike,
    /// Diagonal in the X basis on this qubit.
    Xlike,
    Other,
}

fn actions(g: &Gate) -> Vec<(usize, Action)> {
    use Action::*;
    match *g {
        Gate::Z(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Rz(_, q) => vec![(q.0, Zlike)],
        Gate::X(q) => vec![(q.0, Xlike)],
        Gate::H(q) | Gate::Y(q) => vec![(q.0, Other)],
        Gate::Cnot { control, target } => vec![(control.0, Zlike), (target.0, Xlike)],
        Gate::Rzz(_, a, b) => vec![(a.0, Zlike), (b.0, Zlike)],
    }
}

/// Rz and Rzz at multiples of 2*pi are ±I.
fn is_scalar(g: &Gate) -> bool {
    match g.theta() {
        Some(t) => {
            let r = (t / (2.0 * PI)).round();
            (t - r * 2.0 * PI).abs() < 1e-12
        }
        None => false,
    }
}

fn same_gate(a: &Gate, b: &Gate) -> bool {
    match (a, b) {
        (Gate::Rzz(_, a0, a1), Gate::Rzz(_, b0, b1)) => (a0, a1) == (b0, b1) || (a0, a1) == (b1, b0),
        _ => a == b,
    }
}

/// Whether the two gate unitaries commute exactly.
pub fn commutes(g1: &Gate, g2: &Gate) -> bool {
    if is_scalar(g1) || is_scalar(g2) || same_gate(g1, g2) {
        return true;
    }
    let a1 = actions(g1);
    let a2 = actions(g2);
    for &(q, x) in &a1 {
        for &(p, y) in &a2 {
            if p == q && (x != y || x == Action::Other) {
                return false;
            }
        }
    }
    true
}

/// Precedence constraints between the two-qubit gates of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyDag {
    /// Indices (1-based) of the two-qubit gates.
    pub nodes: Vec<usize>,
    /// Covering relations (i, j): i must precede j and nothing is forced in between.
    pub arcs: Vec<(usize, usize)>,
}

/// How single-qubit gates travel during reordering.
#[derive(Clone, Debug)]
struct Blocks {
    /// Single-qubit gates ahead of any two-qubit gate on their qubit.
    head: Vec<Gate>,
    /// For each two-qubit gate: the single-qubit gates that ride in front of it.
    riders: Vec<Vec<Gate>>,
    twoq: Vec<Gate>,
    /// Single-qubit gates after the last two-qubit gate on their qubit.
    tail: Vec<Gate>,
    /// reach[i][j]: gate i must precede gate j (0-based).
    before: Vec<Vec<bool>>,
}

fn blocks(c: &Circuit) -> Blocks {
    let twoq_pos: Vec<usize> = c.indexed_schedule().iter().map(|g| g.position).collect();
    let twoq: Vec<Gate> = twoq_pos.iter().map(|&p| c.gates[p]).collect();
    let m = twoq.len();
    let mut head = Vec::new();
    let mut tail = Vec::new();
    let mut riders = vec![Vec::new(); m];
    let mut before = vec![vec![false; m]; m];
    let mut rider_of = vec![None; c.gates.len()];
    for (pos, g) in c.gates.iter().enumerate() {
        if g.is_two_qubit() {
            continue;
        }
        let q = g.qubits()[0];
        let earlier = twoq_pos.iter().any(|&p| p < pos && c.gates[p].acts_on(q));
        let next = twoq_pos.iter().position(|&p| p > pos && c.gates[p].acts_on(q));
        match next {
            None if earlier => tail.push(*g),
            None => head.push(*g),
            Some(_) if !earlier => head.push(*g),
            Some(j) => {
                riders[j].push(*g);
                rider_of[pos] = Some(j);
            }
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            if !commutes(&twoq[i], &twoq[j]) {
                before[i][j] = true;
            }
        }
    }
    // A rider of gate j must stay behind every earlier two-qubit gate it does not commute
    // with, and ahead of every later one.
    for (pos, r) in rider_of.iter().enumerate() {
        if let Some(j) = *r {
            let g = c.gates[pos];
            for i in 0..j {
                if twoq_pos[i] < pos && !commutes(&twoq[i], &g) {
                    before[i][j] = true;
                }
            }
            for k in j + 1..m {
                if !commutes(&twoq[k], &g) {
                    before[j][k] = true;
                }
            }
        }
    }
    // transitive closure
    for k in 0..m {
        for i in 0..m {
            if before[i][k] {
                for j in 0..m {
                    if before[k][j] {
                        before[i][j] = true;
                    }
                }
            }
        }
    }
    Blocks { head, riders, twoq, tail, before }
}

pub fn dependency_dag(c: &Circuit) -> DependencyDag {
    let b = blocks(c);
    let m = b.twoq.len();
    let mut arcs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if b.before[i][j] && !(0..m).any(|k| b.before[i][k] && b.before[k][j]) {
                arcs.push((i + 1, j + 1));
            }
        }
    }
    DependencyDag { nodes: (1..=m).collect(), arcs }
}

fn assemble(c: &Circuit, b: &Blocks, order: &[usize]) -> Circuit {
    let mut gates = b.head.clone();
    for &j in order {
        gates.extend(b.riders[j].iter().copied());
        gates.push(b.twoq[j]);
    }
    gates.extend(b.tail.iter().copied());
    c.with_gate_list(gates)
}

/// Up to `limit` linear extensions of the dependency order, in lexicographic order of
/// gate indices; the first is always the original circuit.
pub fn valid_reorderings(c: &Circuit, limit: usize) -> Vec<Circuit> {
    let b = blocks(c);
    let m = b.twoq.len();
    let mut out = Vec::new();
    let mut order = Vec::with_capacity(m);
    let mut placed = vec![false; m];
    fn rec(b: &Blocks, order: &mut Vec<usize>, placed: &mut Vec<bool>, limit: usize, emit: &mut dyn FnMut(&[usize])) -> usize {
        let m = placed.len();
        if order.len() == m {
            emit(order);
            return 1;
        }
        let mut made = 0;
        for j in 0..m {
            if made >= limit {
                break;
            }
            if placed[j] || (0..m).any(|i| !placed[i] && b.before[i][j]) {
                continue;
            }
            placed[j] = true;
            order.push(j);
            made += rec(b, order, placed, limit - made, emit);
            order.pop();
            placed[j] = false;
        }
        made
    }
    if limit == 0 {
        return out;
    }
    rec(&b, &mut order, &mut placed, limit, &mut |o| out.push(assemble(c, &b, o)));
    out
}

/// Rebuild `c` with its two-qubit gates in the given order (1-based indices), carrying
/// single-qubit gates along. Fails if the order violates a dependency.
pub fn reorder(c: &Circuit, order: &[usize]) -> Result<Circuit> {
    let b = blocks(c);
    let m = b.twoq.len();
    let mut seen = vec![false; m];
    let zero: Vec<usize> = order.iter().map(|&i| i.wrapping_sub(1)).collect();
    if order.len() != m || zero.iter().any(|&i| i >= m) {
        return Err(Error::InvalidArgument("order is not a permutation of the gate indices".into()));
    }
    for (k, &j) in zero.iter().enumerate() {
        if seen[j] {
            return Err(Error::InvalidArgument("order is not a permutation of the gate indices".into()));
        }
        if let Some(i) = (0..m).find(|&i| b.before[i][j] && !seen[i]) {
            return Err(Error::PatternMismatch { at: k, msg: format!("gate {} must precede gate {}", i + 1, j + 1) });
        }
        seen[j] = true;
    }
    Ok(assemble(c, &b, &zero))
}

fn cnot_at(c: &Circuit, pos: usize) -> Option<(usize, usize)> {
    match c.gates.get(pos) {
        Some(Gate::Cnot { control, target }) => Some((control.0, target.0)),
        _ => None,
    }
}

fn splice(c: &Circuit, at: usize, len: usize, with: Vec<Gate>) -> Circuit {
    let mut gates = c.gates[..at].to_vec();
    gates.extend(with);
    gates.extend_from_slice(&c.gates[at + len..]);
    c.with_gate_list(gates)
}

/// CNOT(a,c); CNOT(b,c); CNOT(a,b) at gate-list positions at..at+3 becomes
/// CNOT(a,b); CNOT(b,c).
pub fn forced_commute_reduce(c: &Circuit, at: usize) -> Result<Circuit> {
    let mismatch = |msg: &str| Error::PatternMismatch { at, msg: msg.into() };
    let (g1, g2, g3) = match (cnot_at(c, at), cnot_at(c, at + 1), cnot_at(c, at + 2)) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(mismatch("expected three consecutive CNOTs")),
    };
    let (a, cc) = g1;
    let (b, c2) = g2;
    if c2 != cc || g3 != (a, b) {
        return Err(mismatch("expected CNOT(a,c); CNOT(b,c); CNOT(a,b)"));
    }
    Ok(splice(c, at, 3, vec![Gate::cx(a, b), Gate::cx(b, cc)]))
}

/// CNOT(a,b); CNOT(b,c) at positions at..at+2 becomes CNOT(a,c); CNOT(b,c); CNOT(a,b).
pub fn forced_commute_expand(c: &Circuit, at: usize) -> Result<Circuit> {
    let mismatch = |msg: &str| Error::PatternMismatch { at, msg: msg.into() };
    let ((a, b), (b2, cc)) = match (cnot_at(c, at), cnot_at(c, at + 1)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(mismatch("expected two consecutive CNOTs")),
    };
    if b2 != b || cc == a {
        return Err(mismatch("expected CNOT(a,b); CNOT(b,c)"));
    }
    Ok(splice(c, at, 2, vec![Gate::cx(a, cc), Gate::cx(b, cc), Gate::cx(a, b)]))
}

/// Moves an Rzz through its neighbouring CNOT on the same pair, where it becomes an Rz on
/// the target: CNOT(a,b); Rzz(t)(a,b) = Rz(t)_b; CNOT(a,b) and
/// Rzz(t)(a,b); CNOT(a,b) = CNOT(a,b); Rz(t)_b. `at` is the position of the first of the two.
pub fn crosstalk_pushthrough(c: &Circuit, at: usize) -> Result<Circuit> {
    let mismatch = |msg: &str| Error::PatternMismatch { at, msg: msg.into() };
    let (g1, g2) = match (c.gates.get(at), c.gates.get(at + 1)) {
        (Some(x), Some(y)) => (*x, *y),
        _ => return Err(mismatch("site runs past the end of the circuit")),
    };
    let same_pair = |a: QubitId, b: QubitId, p: QubitId, q: QubitId| (a, b) == (p, q) || (a, b) == (q, p);
    match (g1, g2) {
        (Gate::Cnot { control, target }, Gate::Rzz(t, p, q)) if same_pair(control, target, p, q) => {
            Ok(splice(c, at, 2, vec![Gate::Rz(t, target), g1]))
        }
        (Gate::Rzz(t, p, q), Gate::Cnot { control, target }) if same_pair(control, target, p, q) => {
            Ok(splice(c, at, 2, vec![g2, Gate::Rz(t, target)]))
        }
        _ => Err(mismatch("expected a CNOT next to an Rzz on the same pair")),
    }
}

/// Max-norm distance between U1 and e^{i phi} U2, with phi taken from the overlap tr(U2^dag U1).
pub fn unitary_distance(c1: &Circuit, c2: &Circuit) -> Result<f64> {
    if c1.num_qubits != c2.num_qubits {
        return Err(Error::QubitCountMismatch(c1.num_qubits, c2.num_qubits));
    }
    let u1 = circuit_unitary(c1)?;
    let u2 = circuit_unitary(c2)?;
    let mut overlap = C64::new(0.0, 0.0);
    for (col1, col2) in u1.iter().zip(&u2) {
        for (a, b) in col1.iter().zip(col2) {
            overlap += b.conj() * a;
        }
    }
    let phase = if overlap.norm() > 1e-12 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let mut worst: f64 = 0.0;
    for (col1, col2) in u1.iter().zip(&u2) {
        for (a, b) in col1.iter().zip(col2) {
            worst = worst.max((a - phase * b).norm());
        }
    }
    Ok(worst)
}

pub fn unitary_equivalent(c1: &Circuit, c2: &Circuit, tol: f64) -> Result<bool> {
    Ok(unitary_distance(c1, c2)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;

    fn circ(n: usize, g: Vec<Gate>) -> Circuit {
        Circuit::with_gates(n, g).unwrap()
    }

    #[test]
    fn cnot_commutation_rules() {
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(0, 2)));
        assert!(commutes(&Gate::cx(0, 2), &Gate::cx(1, 2)));
        assert!(!commutes(&Gate::cx(0, 1), &Gate::cx(1, 2)));
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(2, 3)));
        assert!(!commutes(&Gate::cx(0, 1), &Gate::rzz(0.4, 0, 1)));
        assert!(commutes(&Gate::cx(0, 1), &Gate::rzz(2.0 * PI, 0, 1)));
    }

    /// Brute-force commutator on the union of supports, as an independent oracle.
    fn matrix_commutes(g1: &Gate, g2: &Gate, n: usize) -> bool {
        (0..1usize << n).all(|k| {
            let mut a = StateVector::basis(n, k);
            a.apply(g1);
            a.apply(g2);
            let mut b = StateVector::basis(n, k);
            b.apply(g2);
            b.apply(g1);
            a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() < 1e-10)
        })
    }

    fn all_gates(n: usize) -> Vec<Gate> {
        let thetas = [0.0, 0.37, PI, -PI / 3.5, 2.0 * PI, 4.0 * PI];
        let mut out = Vec::new();
        for q in 0..n {
            let id = QubitId(q);
            out.extend([Gate::H(id), Gate::X(id), Gate::Y(id), Gate::Z(id), Gate::S(id), Gate::Sdg(id)]);
            out.extend(thetas.iter().map(|&t| Gate::Rz(t, id)));
            for p in 0..n {
                if p != q {
                    out.push(Gate::cx(q, p));
                    out.extend(thetas.iter().map(|&t| Gate::rzz(t, q, p)));
                }
            }
        }
        out
    }

    #[test]
    fn commutes_matches_matrix_oracle_on_three_qubits() {
        let gates = all_gates(3);
        for a in &gates {
            for b in &gates {
                assert_eq!(commutes(a, b), matrix_commutes(a, b, 3), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn reorderings_of_small_circuits() {
        let two = circ(4, vec![Gate::cx(0, 1), Gate::cx(2, 3)]);
        let r = valid_reorderings(&two, 10);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], two);
        let chain = circ(4, vec![Gate::cx(0, 1), Gate::cx(1, 2), Gate::cx(2, 3)]);
        assert_eq!(valid_reorderings(&chain, 10).len(), 1);
        let three = circ(6, vec![Gate::cx(0, 1), Gate::cx(2, 3), Gate::cx(4, 5)]);
        assert_eq!(valid_reorderings(&three, 4).len(), 4);
        assert_eq!(valid_reorderings(&three, 100).len(), 6);
    }

    #[test]
    fn single_qubit_gates_keep_their_place() {
        let c = circ(
            3,
            vec![Gate::h(0), Gate::cx(0, 1), Gate::h(2), Gate::cx(2, 1), Gate::h(0), Gate::cx(0, 2), Gate::x(1)],
        );
        let all = valid_reorderings(&c, 50);
        assert!(all.len() >= 2);
        for r in &all {
            assert!(unitary_equivalent(r, &c, 1e-10).unwrap());
        }
        // The H riding with CNOT(0,2) must stay behind CNOT(0,1) although the CNOTs commute.
        let dag = dependency_dag(&c);
        assert!(dag.arcs.contains(&(1, 3)));
    }

    #[test]
    fn dag_arcs_are_covering_pairs() {
        let chain = circ(4, vec![Gate::cx(0, 1), Gate::cx(1, 2), Gate::cx(2, 3)]);
        assert_eq!(dependency_dag(&chain).arcs, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn reorder_checks_dependencies() {
        let c = circ(3, vec![Gate::cx(0, 1), Gate::cx(1, 2)]);
        assert!(reorder(&c, &[2, 1]).is_err());
        assert_eq!(reorder(&c, &[1, 2]).unwrap(), c);
        assert!(reorder(&c, &[1, 1]).is_err());
    }

    #[test]
    fn forced_commutation_all_labelings() {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for [a, b, c] in perms {
            let lhs = circ(3, vec![Gate::cx(a, b), Gate::cx(b, c)]);
            let rhs = circ(3, vec![Gate::cx(a, c), Gate::cx(b, c), Gate::cx(a, b)]);
            assert!(unitary_distance(&lhs, &rhs).unwrap() <= 1e-12);
            assert_eq!(forced_commute_expand(&lhs, 0).unwrap(), rhs);
            assert_eq!(forced_commute_reduce(&rhs, 0).unwrap(), lhs);
            assert_eq!(forced_commute_reduce(&forced_commute_expand(&lhs, 0).unwrap(), 0).unwrap(), lhs);
        }
        let bad = circ(3, vec![Gate::cx(0, 1), Gate::cx(0, 2), Gate::cx(1, 2)]);
        assert!(forced_commute_reduce(&bad, 0).is_err());
        assert!(forced_commute_expand(&bad, 1).is_err());
    }

    #[test]
    fn pushthrough_identities() {
        let t = -PI / 3.5;
        let c = circ(2, vec![Gate::cx(0, 1), Gate::rzz(t, 0, 1)]);
        let p = crosstalk_pushthrough(&c, 0).unwrap();
        assert_eq!(p.gates, vec![Gate::rz(t, 1), Gate::cx(0, 1)]);
        assert!(unitary_distance(&c, &p).unwrap() < 1e-12);
        let c2 = circ(2, vec![Gate::rzz(t, 1, 0), Gate::cx(0, 1)]);
        let p2 = crosstalk_pushthrough(&c2, 0).unwrap();
        assert!(unitary_distance(&c2, &p2).unwrap() < 1e-12);
        // inverse rotation in front cancels the crosstalk exactly
        let mut fixed = circ(2, vec![Gate::rz(-t, 1)]);
        fixed.gates.extend(c.gates.iter().copied());
        assert!(unitary_distance(&fixed, &circ(2, vec![Gate::cx(0, 1)])).unwrap() < 1e-12);
        let zero = crosstalk_pushthrough(&circ(2, vec![Gate::cx(0, 1), Gate::rzz(0.0, 0, 1)]), 0).unwrap();
        assert_eq!(zero.gates, vec![Gate::rz(0.0, 1), Gate::cx(0, 1)]);
        assert!(crosstalk_pushthrough(&circ(3, vec![Gate::cx(0, 1), Gate::rzz(t, 0, 2)]), 0).is_err());
    }

    #[test]
    fn hadamard_conjugation_swaps_cnot() {
        let lhs = circ(2, vec![Gate::h(0), Gate::h(1), Gate::cx(0, 1), Gate::h(0), Gate::h(1)]);
        assert!(unitary_equivalent(&lhs, &circ(2, vec![Gate::cx(1, 0)]), 1e-12).unwrap());
        assert!(!unitary_equivalent(&circ(2, vec![Gate::cx(0, 1)]), &circ(2, vec![Gate::cx(1, 0)]), 1e-6).unwrap());
    }

    #[test]
    fn hcnot_fixes_xx_stabilized_states() {
        // Two-qubit stabilizer states with X_a X_b in the stabilizer group.
        let hcnot = [Gate::h(0), Gate::cx(0, 1), Gate::h(0), Gate::x(1)];
        let preps: Vec<Vec<Gate>> = vec![
            vec![Gate::h(0), Gate::h(1)],
            vec![Gate::x(0), Gate::x(1), Gate::h(0), Gate::h(1)],
            vec![Gate::h(0), Gate::cx(0, 1)],
            vec![Gate::h(0), Gate::cx(0, 1), Gate::x(1)],
        ];
        for prep in preps {
            let mut s = StateVector::zero(2);
            s.apply_all(&prep);
            let mut t = s.clone();
            t.apply_all(&hcnot);
            assert!((s.inner(&t).norm() - 1.0).abs() < 1e-12, "{prep:?}");
        }
        let mut z = StateVector::zero(2);
        let before = z.clone();
        z.apply_all(&hcnot);
        assert!(before.inner(&z).norm() < 0.99);
    }

    #[test]
    fn size_bound() {
        assert!(unitary_equivalent(&Circuit::new(13), &Circuit::new(13), 1e-9).is_err());
        assert!(unitary_equivalent(&Circuit::new(2), &Circuit::new(3), 1e-9).is_err());
    }
}

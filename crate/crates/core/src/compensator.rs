//! Search for compensating insertions: direct Rz rotations and indirect HCNOTs that carry
//! their own counter-rotating crosstalk.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::sim::{self, Basis, Injection, NoiseSpec, StateVector};
use crate::steane::{self, ErrorEstimate};
use crate::topology::Topology;
use crate::tracer::Evaluation;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gates placed after the first `location` gates of the original circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub location: usize,
    pub gates: Vec<Gate>,
    /// Rzz angle riding on the insertion's CNOT, modelling its own crosstalk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion_theta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rz,
    Hcnot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensationPlan {
    pub method: Method,
    pub insertions: Vec<Insertion>,
    pub objective: f64,
    pub baseline: f64,
    pub reduction: f64,
}

impl CompensationPlan {
    pub fn empty(method: Method) -> CompensationPlan {
        CompensationPlan { method, insertions: Vec::new(), objective: 0.0, baseline: 0.0, reduction: 0.0 }
    }
}

pub fn reduction(baseline: f64, objective: f64) -> f64 {
    if baseline > 0.0 {
        (baseline - objective) / baseline
    } else {
        0.0
    }
}

/// H(a); CNOT(a,b); H(a); X(b).
pub fn hcnot(a: usize, b: usize) -> Vec<Gate> {
    vec![Gate::h(a), Gate::cx(a, b), Gate::h(a), Gate::x(b)]
}

/// Angles {±pi/k : k = 2..16} ∪ {±pi/3.5}, ordered by magnitude then sign.
pub fn default_theta_grid() -> Vec<f64> {
    let mut mags: Vec<f64> = (2..=16).map(|k| PI / k as f64).collect();
    mags.push(PI / 3.5);
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mags.iter().flat_map(|&m| [-m, m]).collect()
}

/// Locations p (0..=len) where running `candidate` after the first p gates leaves the
/// ideal state unchanged up to a global phase.
pub fn trivial_locations(c: &Circuit, candidate: &[Gate]) -> Result<Vec<usize>> {
    for g in candidate {
        g.validate(c.num_qubits)?;
    }
    let mut s = StateVector::zero(c.num_qubits);
    let mut out = Vec::new();
    for p in 0..=c.gates.len() {
        if p > 0 {
            s.apply(&c.gates[p - 1]);
        }
        let mut t = s.clone();
        t.apply_all(candidate);
        if s.inner(&t).norm() >= 1.0 - 1e-9 {
            out.push(p);
        }
    }
    Ok(out)
}

/// The compensated circuit, the noise remapped onto its gate indices, and for each original
/// indexed gate its new index.
pub struct Applied {
    pub circuit: Circuit,
    pub noise: NoiseSpec,
    pub index_map: Vec<usize>,
}

pub fn apply_plan(c: &Circuit, ns: &NoiseSpec, insertions: &[Insertion]) -> Result<Applied> {
    let len = c.gates.len();
    for ins in insertions {
        if ins.location > len {
            return Err(Error::IndexOutOfRange { index: ins.location, max: len });
        }
        for g in &ins.gates {
            g.validate(c.num_qubits)?;
        }
        if ins.companion_theta.is_some() && !ins.gates.iter().any(|g| matches!(g, Gate::Cnot { .. })) {
            return Err(Error::InvalidArgument("companion rotation needs a CNOT in the insertion".into()));
        }
    }
    let mut gates = Vec::with_capacity(len + insertions.len() * 4);
    let mut index_map = Vec::new();
    let mut companions = Vec::new();
    let mut idx = 0;
    let mut place = |gates: &mut Vec<Gate>, idx: &mut usize, at: usize| {
        for ins in insertions.iter().filter(|i| i.location == at) {
            let mut carried = false;
            for g in &ins.gates {
                gates.push(*g);
                if g.is_two_qubit() {
                    *idx += 1;
                    if let (Gate::Cnot { control, target }, Some(t), false) = (g, ins.companion_theta, carried) {
                        companions.push(Injection { after_gate: *idx, gate: Gate::rzz(t, control.0, target.0) });
                        carried = true;
                    }
                }
            }
        }
    };
    for (pos, g) in c.gates.iter().enumerate() {
        place(&mut gates, &mut idx, pos);
        gates.push(*g);
        if g.is_two_qubit() {
            idx += 1;
            index_map.push(idx);
        }
    }
    place(&mut gates, &mut idx, len);
    let mut inject: Vec<Injection> = ns
        .inject
        .iter()
        .map(|j| {
            let after_gate = index_map.get(j.after_gate.wrapping_sub(1)).copied().ok_or_else(|| {
                Error::Noise(format!("injection after gate {} but circuit has {}", j.after_gate, index_map.len()))
            })?;
            Ok(Injection { after_gate, gate: j.gate })
        })
        .collect::<Result<_>>()?;
    inject.extend(companions);
    inject.sort_by_key(|j| j.after_gate);
    let circuit = c.with_gate_list(gates);
    let noise = NoiseSpec { inject, ..ns.clone() };
    Ok(Applied { circuit, noise, index_map })
}

/// Compensated circuit; two-qubit insertions must sit on device edges when a topology is given.
pub fn insert(c: &Circuit, plan: &CompensationPlan, topology: Option<&Topology>) -> Result<Circuit> {
    if let Some(t) = topology {
        for ins in &plan.insertions {
            for g in ins.gates.iter().filter(|g| g.is_two_qubit()) {
                let q = g.qubits();
                let (a, b) = (c.physical(q[0]), c.physical(q[1]));
                if !t.has_edge(a, b) {
                    return Err(Error::Topology(format!("inserted {} on non-edge {a}-{b}", g.name())));
                }
            }
        }
    }
    Ok(apply_plan(c, &NoiseSpec::default(), &plan.insertions)?.circuit)
}

/// pz of the circuit under the noise, exactly or from seeded X-basis shots.
pub fn evaluate_pz(c: &Circuit, ns: &NoiseSpec, eval: Evaluation) -> Result<ErrorEstimate> {
    match eval {
        Evaluation::Exact => Ok(ErrorEstimate::exact(steane::exact_pz(c, ns)?)),
        Evaluation::Sampled { shots, seed } => {
            steane::pz_from_counts(&sim::sample_counts(c, ns, Basis::X, shots, seed)?)
        }
    }
}

fn plan_objective(c: &Circuit, ns: &NoiseSpec, ins: &[Insertion], eval: Evaluation) -> Result<ErrorEstimate> {
    let a = apply_plan(c, ns, ins)?;
    evaluate_pz(&a.circuit, &a.noise, eval)
}

fn beats(cand: &ErrorEstimate, best: &ErrorEstimate, eval: Evaluation) -> bool {
    match eval {
        Evaluation::Exact => cand.p < best.p - 1e-12,
        Evaluation::Sampled { .. } => cand.ci_high < best.ci_low,
    }
}

/// Exhaustive search over sets of up to `max_insertions` candidates, visited in candidate
/// order; candidates must already be sorted by the tie-break key.
fn search(
    c: &Circuit,
    ns: &NoiseSpec,
    method: Method,
    candidates: &[Insertion],
    max_insertions: usize,
    eval: Evaluation,
) -> Result<CompensationPlan> {
    let base = plan_objective(c, ns, &[], eval)?;
    let mut combos: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_insertions {
        let mut next = Vec::new();
        for combo in &frontier {
            let start = combo.last().map_or(0, |&l| l + 1);
            for k in start..candidates.len() {
                let mut v = combo.clone();
                v.push(k);
                next.push(v);
            }
        }
        combos.extend(next.iter().cloned());
        frontier = next;
    }
    // Evaluate in parallel, then reduce sequentially so the winner is deterministic.
    let scores: Vec<Result<ErrorEstimate>> = combos
        .par_iter()
        .map(|combo| {
            let ins: Vec<Insertion> = combo.iter().map(|&k| candidates[k].clone()).collect();
            plan_objective(c, ns, &ins, eval)
        })
        .collect();
    let mut best = base;
    let mut best_combo: Option<&Vec<usize>> = None;
    for (combo, score) in combos.iter().zip(scores) {
        let score = score?;
        if beats(&score, &best, eval) {
            best = score;
            best_combo = Some(combo);
        }
    }
    let insertions: Vec<Insertion> =
        best_combo.map(|v| v.iter().map(|&k| candidates[k].clone()).collect()).unwrap_or_default();
    Ok(CompensationPlan {
        method,
        insertions,
        objective: best.p,
        baseline: base.p,
        reduction: reduction(base.p, best.p),
    })
}

fn sort_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap().then(a.partial_cmp(b).unwrap()));
    g.dedup();
    g
}

/// Best set of single-qubit Rz insertions (earliest location, then smallest |theta| wins ties).
///
/// An Rz that cancels a coherent error cannot act trivially on the ideal state, so every
/// gate boundary is a candidate location.
pub fn search_rz(
    c: &Circuit,
    ns: &NoiseSpec,
    theta_grid: &[f64],
    max_insertions: usize,
    eval: Evaluation,
) -> Result<CompensationPlan> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    let grid = sort_grid(theta_grid);
    let mut candidates = Vec::new();
    for location in 0..=c.gates.len() {
        for &t in &grid {
            for q in 0..c.num_qubits {
                candidates.push(Insertion { location, gates: vec![Gate::rz(t, q)], companion_theta: None });
            }
        }
    }
    search(c, ns, Method::Rz, &candidates, max_insertions, eval)
}

/// Best set of HCNOT insertions at trivial locations. Each HCNOT's CNOT carries an Rzz with
/// angle from `companion_grid`; with no grid the HCNOTs are ideal.
pub fn search_hcnot(
    c: &Circuit,
    ns: &NoiseSpec,
    companion_grid: Option<&[f64]>,
    max_insertions: usize,
    topology: Option<&Topology>,
    eval: Evaluation,
) -> Result<CompensationPlan> {
    let thetas: Vec<Option<f64>> = match companion_grid {
        Some(g) if !g.is_empty() => sort_grid(g).into_iter().map(Some).collect(),
        Some(_) => return Err(Error::InvalidArgument("companion grid is empty".into())),
        None => vec![None],
    };
    let mut sites = Vec::new();
    for a in 0..c.num_qubits {
        for b in 0..c.num_qubits {
            if a == b || topology.is_some_and(|t| !t.has_edge(c.physical(a), c.physical(b))) {
                continue;
            }
            for l in trivial_locations(c, &hcnot(a, b))? {
                sites.push((l, a, b));
            }
        }
    }
    if sites.is_empty() {
        return Err(Error::NoTrivialLocation);
    }
    sites.sort();
    let mut candidates = Vec::new();
    // Group by location first, then angle magnitude, then pair.
    let mut by_loc: Vec<usize> = sites.iter().map(|s| s.0).collect();
    by_loc.dedup();
    for loc in by_loc {
        for t in &thetas {
            for &(_, a, b) in sites.iter().filter(|s| s.0 == loc) {
                candidates.push(Insertion { location: loc, gates: hcnot(a, b), companion_theta: *t });
            }
        }
    }
    search(c, ns, Method::Hcnot, &candidates, max_insertions, eval)
}

//! Ready-made crosstalk regimes on the shipped encoders.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::rewrite::reorder;
use crate::sim::NoiseSpec;
use crate::steane::{encoder, exact_pz, EncoderVariant};
use std::f64::consts::PI;

/// Crosstalk angle accompanying a cross-resonance CNOT.
pub const CROSSTALK_THETA: f64 = -PI / 3.5;

/// The CNOT carrying crosstalk in the reorder regime, as roles (control, target).
pub const REORDER_SITE: (usize, usize) = (6, 2);

/// Indexed-gate order of ordering (b): gates 5 and 6 of the nine-gate encoder swapped.
pub const ORDERING_B: [usize; 9] = [1, 2, 3, 4, 6, 5, 7, 8, 9];

/// A circuit with its crosstalk model.
#[derive(Clone, Debug)]
pub struct Regime {
    pub circuit: Circuit,
    pub noise: NoiseSpec,
}

fn index_of(c: &Circuit, control: usize, target: usize) -> Option<usize> {
    c.indexed_schedule().iter().find(|g| g.gate == Gate::cx(control, target)).map(|g| g.index)
}

fn crosstalk_after(c: &Circuit, (a, b): (usize, usize)) -> Result<NoiseSpec> {
    let k = index_of(c, a, b).ok_or_else(|| Error::InvalidArgument(format!("no CNOT({a},{b})")))?;
    Ok(NoiseSpec::injection(k, Gate::rzz(CROSSTALK_THETA, a, b)))
}

/// Ordering (a): the nine-gate encoder, where the crosstalk on CNOT(6,2) acts trivially.
pub fn ordering_a() -> Regime {
    let circuit = encoder(EncoderVariant::NineGate).labeled("ordering_a");
    let noise = crosstalk_after(&circuit, REORDER_SITE).expect("site present");
    Regime { circuit, noise }
}

/// Ordering (b): a valid reordering in which the same crosstalk flips the phase of the code state.
pub fn ordering_b() -> Regime {
    let circuit = reorder(&encoder(EncoderVariant::NineGate), &ORDERING_B).expect("valid order").labeled("ordering_b");
    let noise = crosstalk_after(&circuit, REORDER_SITE).expect("site present");
    Regime { circuit, noise }
}

/// Rzz(-pi/3.5) after indexed gate `k` of the eight-gate encoder. The crosstalk sits on
/// gate k's operands unless that is invisible to a Steane measurement, in which case the
/// first other CNOT pair of the encoder that makes it visible is used.
pub fn eight_gate_injection(k: usize) -> Result<Regime> {
    let circuit = encoder(EncoderVariant::EightGate);
    let sched = circuit.indexed_schedule();
    let g = sched.iter().find(|g| g.index == k).ok_or(Error::IndexOutOfRange { index: k, max: sched.len() })?;
    let own = g.gate.qubits();
    let mut pairs = vec![(own[0], own[1])];
    for s in &sched {
        let q = s.gate.qubits();
        let p = (q[0], q[1]);
        if !pairs.contains(&p) && !pairs.contains(&(p.1, p.0)) {
            pairs.push(p);
        }
    }
    for (a, b) in pairs {
        let noise = NoiseSpec::injection(k, Gate::rzz(CROSSTALK_THETA, a, b));
        if exact_pz(&circuit, &noise)? > 1e-6 {
            return Ok(Regime { circuit: circuit.clone(), noise });
        }
    }
    Err(Error::InvalidArgument(format!("no visible crosstalk site after gate {k}")))
}

/// Crosstalk after gate 7 of the eight-gate encoder, partially undone by a counter-rotation
/// after gate 8, so the traced curve falls and then rises again.
pub fn resurrection() -> Result<Regime> {
    let mut r = eight_gate_injection(7)?;
    let Gate::Rzz(theta, a, b) = r.noise.inject[0].gate else { unreachable!() };
    r.noise.inject.push(crate::sim::Injection { after_gate: 8, gate: Gate::Rzz(-theta / 2.0, a, b) });
    r.circuit = r.circuit.labeled("resurrection");
    Ok(r)
}

//! Hamming-code machinery and Steane |+> encoders.
//!
//! Codeword bit i is qubit (role) i of an encoder circuit and is printed i-th from the
//! left, matching simulator bitstrings.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::rewrite::forced_commute_reduce;
use crate::sim::{self, Basis, Counts, Distribution, NoiseSpec, StateVector};
use crate::topology::{validate_against_topology, Topology};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const N: usize = 7;

pub fn parse_word(s: &str) -> Option<u8> {
    if s.len() != N {
        return None;
    }
    sim::parse_bitstring(s).map(|k| k as u8)
}

pub fn word_string(w: u8) -> String {
    sim::bitstring(w as usize, N)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    pub generators: Vec<u8>,
    member: [bool; 128],
}

impl LinearCode {
    pub fn span(generators: &[u8]) -> LinearCode {
        let mut member = [false; 128];
        for mask in 0u32..(1 << generators.len()) {
            let w = generators.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0u8, |acc, (_, g)| acc ^ g);
            member[w as usize] = true;
        }
        LinearCode { generators: generators.to_vec(), member }
    }

    pub fn contains(&self, w: u8) -> bool {
        self.member[(w & 0x7f) as usize]
    }

    pub fn codewords(&self) -> Vec<u8> {
        (0u8..128).filter(|&w| self.member[w as usize]).collect()
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_distance(&self) -> u32 {
        self.codewords().iter().filter(|&&w| w != 0).map(|w| w.count_ones()).min().unwrap_or(0)
    }

    /// Coefficient k is the number of codewords of weight k.
    pub fn weight_enumerator(&self) -> [usize; N + 1] {
        let mut a = [0; N + 1];
        for w in self.codewords() {
            a[w.count_ones() as usize] += 1;
        }
        a
    }
}

pub const CHECK_ROWS: [&str; 3] = ["0001111", "0110011", "1010101"];

/// The [7,4,3] Hamming code C and its dual [7,3,4].
pub fn hamming_codes() -> (LinearCode, LinearCode) {
    let checks: Vec<u8> = CHECK_ROWS.iter().map(|s| parse_word(s).unwrap()).collect();
    let dual = LinearCode::span(&checks);
    let mut gens = checks.clone();
    gens.push(parse_word("1111111").unwrap());
    (LinearCode::span(&gens), dual)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderVariant {
    NineGate,
    EightGate,
    Sparse17,
    Sparse18,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 4] =
        [EncoderVariant::NineGate, EncoderVariant::EightGate, EncoderVariant::Sparse17, EncoderVariant::Sparse18];

    pub fn name(&self) -> &'static str {
        match self {
            EncoderVariant::NineGate => "nine_gate",
            EncoderVariant::EightGate => "eight_gate",
            EncoderVariant::Sparse17 => "sparse_17",
            EncoderVariant::Sparse18 => "sparse_18",
        }
    }

    pub fn parse(s: &str) -> Option<EncoderVariant> {
        let s = s.replace('-', "_");
        EncoderVariant::ALL.into_iter().find(|v| v.name() == s)
    }

    /// The device the shipped map targets.
    pub fn default_topology(&self) -> Topology {
        match self {
            EncoderVariant::NineGate | EncoderVariant::EightGate => Topology::melbourne(),
            _ => Topology::lagos(),
        }
    }

    pub fn default_map(&self) -> RoleMap {
        match self {
            EncoderVariant::NineGate | EncoderVariant::EightGate => RoleMap([4, 5, 8, 6, 10, 9, 7]),
            _ => RoleMap([0, 1, 2, 3, 6, 4, 5]),
        }
    }
}

/// Physical qubit hosting each codeword role.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoleMap(pub [usize; N]);

const NINE_H: [usize; 4] = [0, 1, 3, 6];
const NINE_CX: [(usize, usize); 9] = [(0, 4), (1, 5), (0, 1), (5, 4), (6, 2), (5, 2), (3, 1), (1, 5), (2, 3)];

const EIGHT_H: [usize; 4] = [0, 1, 3, 5];
/// Nine-gate precursor whose last three CNOTs collapse by forced commutation.
const EIGHT_PRE_CX: [(usize, usize); 9] = [(0, 4), (3, 2), (2, 6), (1, 3), (5, 4), (5, 2), (0, 5), (1, 5), (0, 1)];

const SPARSE_H: [usize; 4] = [0, 2, 3, 4];
const SPARSE17_CX: [(usize, usize); 17] = [
    (4, 6),
    (2, 1),
    (3, 1),
    (1, 3),
    (1, 2),
    (0, 1),
    (3, 6),
    (6, 3),
    (3, 6),
    (6, 5),
    (3, 1),
    (1, 3),
    (3, 1),
    (0, 1),
    (6, 4),
    (4, 6),
    (3, 6),
];

fn role_circuit(h: &[usize], cx: &[(usize, usize)]) -> Circuit {
    let mut gates: Vec<Gate> = h.iter().map(|&q| Gate::h(q)).collect();
    gates.extend(cx.iter().map(|&(a, b)| Gate::cx(a, b)));
    Circuit::with_gates(N, gates).expect("role circuits are well formed")
}

/// The nine-CNOT precursor of the eight-gate encoder. Its CNOT(role 0, role 5) has no
/// device edge under the shipped map, so it only exists as an intermediate.
pub fn eight_gate_precursor() -> Circuit {
    role_circuit(&EIGHT_H, &EIGHT_PRE_CX).labeled("eight_gate_precursor")
}

/// Gate-list position of the forced-commutation site in the precursor.
pub const EIGHT_GATE_SITE: usize = 4 + 6;

fn role_encoder(variant: EncoderVariant) -> Circuit {
    let c = match variant {
        EncoderVariant::NineGate => role_circuit(&NINE_H, &NINE_CX),
        EncoderVariant::EightGate => {
            forced_commute_reduce(&eight_gate_precursor(), EIGHT_GATE_SITE).expect("precursor matches pattern")
        }
        EncoderVariant::Sparse17 => role_circuit(&SPARSE_H, &SPARSE17_CX),
        EncoderVariant::Sparse18 => {
            let mut cx = SPARSE17_CX.to_vec();
            // One redundant CNOT(1,3); the prepared state is the same.
            cx.insert(2, (1, 3));
            role_circuit(&SPARSE_H, &cx)
        }
    };
    c.labeled(variant.name())
}

/// Steane logical |+> encoder with roles placed on physical qubits by `map`.
pub fn steane_plus_encoder(variant: EncoderVariant, map: &RoleMap, topology: &Topology) -> Result<Circuit> {
    let mut seen = std::collections::BTreeSet::new();
    for &p in &map.0 {
        if p >= topology.num_qubits {
            return Err(Error::IncompatibleMap(format!("qubit {p} not on a {}-qubit device", topology.num_qubits)));
        }
        if !seen.insert(p) {
            return Err(Error::IncompatibleMap(format!("qubit {p} assigned twice")));
        }
    }
    let mut c = role_encoder(variant);
    c.layout = Some(map.0.to_vec());
    let bad = validate_against_topology(&c, topology)?;
    if let Some(v) = bad.first() {
        return Err(Error::IncompatibleMap(format!(
            "gate {} needs edge {}-{} which the device lacks",
            v.gate_index, v.qubits.0, v.qubits.1
        )));
    }
    Ok(c)
}

/// Encoder on its shipped device and map.
pub fn encoder(variant: EncoderVariant) -> Circuit {
    steane_plus_encoder(variant, &variant.default_map(), &variant.default_topology()).expect("shipped maps fit")
}

/// Role pairs touched by the variant's CNOTs.
pub fn adjacency(variant: EncoderVariant) -> Vec<(usize, usize)> {
    let mut v: Vec<(usize, usize)> = role_encoder(variant)
        .indexed_schedule()
        .iter()
        .map(|g| {
            let q = g.gate.qubits();
            (q[0].min(q[1]), q[0].max(q[1]))
        })
        .collect();
    v.sort();
    v.dedup();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shots: u64,
}

const Z95: f64 = 1.959963984540054;

/// Wilson score 95% interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> ErrorEstimate {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ErrorEstimate { p, ci_low: (center - half).clamp(0.0, p), ci_high: (center + half).clamp(p, 1.0), shots: n }
}

impl ErrorEstimate {
    /// A probability known exactly.
    pub fn exact(p: f64) -> ErrorEstimate {
        let p = p.clamp(0.0, 1.0);
        ErrorEstimate { p, ci_low: p, ci_high: p, shots: 0 }
    }
}

fn check_width(c: &Counts, basis: Basis) -> Result<()> {
    if c.width != N {
        return Err(Error::InvalidArgument(format!("counts have width {}, expected {N}", c.width)));
    }
    if c.shots == 0 {
        return Err(Error::InvalidArgument("counts have zero shots".into()));
    }
    if c.basis != basis {
        return Err(Error::InvalidArgument(format!("expected {basis:?}-basis counts")));
    }
    Ok(())
}

fn failures(c: &Counts, code: &LinearCode) -> u64 {
    c.histogram.iter().filter(|(&k, _)| !code.contains(k as u8)).map(|(_, &v)| v).sum()
}

/// (px, pz) from Z- and X-basis readouts.
pub fn error_probs(zc: &Counts, xc: &Counts) -> Result<(ErrorEstimate, ErrorEstimate)> {
    check_width(zc, Basis::Z)?;
    check_width(xc, Basis::X)?;
    let (c, cd) = hamming_codes();
    Ok((wilson(failures(zc, &c), zc.shots), wilson(failures(xc, &cd), xc.shots)))
}

pub fn pz_from_counts(xc: &Counts) -> Result<ErrorEstimate> {
    check_width(xc, Basis::X)?;
    Ok(wilson(failures(xc, &hamming_codes().1), xc.shots))
}

/// 1 - probability mass on `code`.
pub fn outside_mass(d: &Distribution, code: &LinearCode) -> f64 {
    let inside: f64 = code.codewords().iter().map(|&w| d.probs[w as usize]).sum();
    (1.0 - inside).max(0.0)
}

/// Exact (px, pz) for a unitary-only noise model.
pub fn exact_error_probs(c: &Circuit, ns: &NoiseSpec) -> Result<(f64, f64)> {
    if c.num_qubits != N {
        return Err(Error::InvalidArgument(format!("encoder must have {N} qubits")));
    }
    let (code, dual) = hamming_codes();
    let dz = sim::outcome_distribution(c, ns, Basis::Z)?;
    let dx = sim::outcome_distribution(c, ns, Basis::X)?;
    Ok((outside_mass(&dz, &code), outside_mass(&dx, &dual)))
}

pub fn exact_pz(c: &Circuit, ns: &NoiseSpec) -> Result<f64> {
    let dx = sim::outcome_distribution(c, ns, Basis::X)?;
    Ok(outside_mass(&dx, &hamming_codes().1))
}

pub fn fidelity_simple(pz: f64, px: f64) -> Result<f64> {
    for p in [pz, px] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0,1]")));
        }
    }
    Ok(((1.0 - pz) * (1.0 - px)).sqrt())
}

/// The 128 elements X^g Z^h (g in C, h in C-dual) of the stabilizer group of |+>_L,
/// all with sign +1.
pub fn stabilizer_group() -> Vec<(u8, u8)> {
    let (c, cd) = hamming_codes();
    let mut out = Vec::with_capacity(128);
    for g in c.codewords() {
        for h in cd.codewords() {
            out.push((g, h));
        }
    }
    out
}

/// <phi| X^g Z^h |phi>.
pub fn pauli_expectation(s: &StateVector, g: u8, h: u8) -> f64 {
    let mut acc = 0.0;
    for (x, a) in s.amps.iter().enumerate() {
        let sign = if (h as usize & x).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (s.amps[x ^ g as usize].conj() * a).re;
    }
    acc
}

/// <psi_ideal| phi><phi |psi_ideal> via the stabilizer-projector average.
pub fn stabilizer_overlap(s: &StateVector) -> f64 {
    let group = stabilizer_group();
    group.iter().map(|&(g, h)| pauli_expectation(s, g, h)).sum::<f64>() / group.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FidelityMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

/// sqrt(<psi|rho|psi>) from the 128 stabilizer expectations of the noisy state.
pub fn fidelity_stabilizer(c: &Circuit, ns: &NoiseSpec, mode: FidelityMode) -> Result<f64> {
    if c.num_qubits != N {
        return Err(Error::InvalidArgument(format!("encoder must have {N} qubits")));
    }
    let overlap = match mode {
        FidelityMode::Exact => stabilizer_overlap(&sim::run_state(c, ns)?),
        FidelityMode::Sampled { shots, seed } => {
            if shots == 0 {
                return Err(Error::InvalidArgument("shots must be at least 1".into()));
            }
            ns.validate(c)?;
            let total: f64 = (0..shots)
                .into_par_iter()
                .map(|s| {
                    let mut rng = sim::shot_rng(seed, s);
                    let st = sim::trajectory(c, ns, &mut rng).expect("validated");
                    stabilizer_overlap(&st)
                })
                .sum();
            total / shots as f64
        }
    };
    Ok(overlap.clamp(0.0, 1.0).sqrt())
}

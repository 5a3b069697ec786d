//! Dense statevector simulation with injected unitary noise and Monte Carlo channels.
//!
//! Qubit 0 is the least-significant bit of an amplitude index. Bitstrings print
//! qubit 0 leftmost, so index 0b0001 on 4 qubits prints as "1000".

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

pub const MAX_QUBITS: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn basis(n: usize, index: usize) -> StateVector {
        let mut s = StateVector::zero(n);
        s.amps[0] = C64::new(0.0, 0.0);
        s.amps[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn for_pairs(&mut self, q: usize, mut f: impl FnMut(&mut C64, &mut C64)) {
        let m = 1usize << q;
        let len = self.amps.len();
        let mut i = 0;
        while i < len {
            if i & m == 0 {
                let (lo, hi) = self.amps.split_at_mut(i + m);
                f(&mut lo[i], &mut hi[0]);
            }
            i += 1;
        }
    }

    fn scale_ones(&mut self, q: usize, z0: C64, z1: C64) {
        let m = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & m == 0 { z0 } else { z1 };
        }
    }

    pub fn apply(&mut self, g: &Gate) {
        let i = C64::new(0.0, 1.0);
        match *g {
            Gate::H(q) => self.for_pairs(q.0, |a, b| {
                let (x, y) = (*a, *b);
                *a = (x + y) * FRAC_1_SQRT_2;
                *b = (x - y) * FRAC_1_SQRT_2;
            }),
            Gate::X(q) => self.for_pairs(q.0, std::mem::swap),
            Gate::Y(q) => self.for_pairs(q.0, |a, b| {
                let (x, y) = (*a, *b);
                *a = -i * y;
                *b = i * x;
            }),
            Gate::Z(q) => self.scale_ones(q.0, C64::new(1.0, 0.0), C64::new(-1.0, 0.0)),
            Gate::S(q) => self.scale_ones(q.0, C64::new(1.0, 0.0), i),
            Gate::Sdg(q) => self.scale_ones(q.0, C64::new(1.0, 0.0), -i),
            Gate::Rz(t, q) => self.scale_ones(q.0, C64::from_polar(1.0, -t / 2.0), C64::from_polar(1.0, t / 2.0)),
            Gate::Cnot { control, target } => {
                let (c, t) = (1usize << control.0, 1usize << target.0);
                for k in 0..self.amps.len() {
                    if k & c != 0 && k & t == 0 {
                        self.amps.swap(k, k | t);
                    }
                }
            }
            Gate::Rzz(t, a, b) => {
                let (ma, mb) = (1usize << a.0, 1usize << b.0);
                let even = C64::from_polar(1.0, -t / 2.0);
                let odd = C64::from_polar(1.0, t / 2.0);
                for (k, amp) in self.amps.iter_mut().enumerate() {
                    let parity = ((k & ma != 0) as u8) ^ ((k & mb != 0) as u8);
                    *amp *= if parity == 0 { even } else { odd };
                }
            }
        }
    }

    pub fn apply_all(&mut self, gates: &[Gate]) {
        for g in gates {
            self.apply(g);
        }
    }

    /// Probability mass with qubit `q` set, and the total mass.
    fn masses(&self, q: usize) -> (f64, f64) {
        let m = 1usize << q;
        let (mut one, mut all) = (0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            all += p;
            if k & m != 0 {
                one += p;
            }
        }
        (one, all)
    }

    /// One Kraus-sampled step of amplitude damping (rate `gamma`) on qubit `q`.
    fn amplitude_damp(&mut self, q: usize, gamma: f64, u: f64) {
        if gamma <= 0.0 {
            return;
        }
        let m = 1usize << q;
        let (one, all) = self.masses(q);
        if u * all < gamma * one {
            // K1 = sqrt(gamma)|0><1| : every bit-0 amplitude is replaced by its bit-1 partner.
            let f = 1.0 / one.sqrt();
            for k in 0..self.amps.len() {
                if k & m != 0 {
                    self.amps[k ^ m] = self.amps[k] * f;
                    self.amps[k] = C64::new(0.0, 0.0);
                }
            }
        } else {
            let f = 1.0 / (all - gamma * one).sqrt();
            self.scale_ones(q, C64::new(f, 0.0), C64::new((1.0 - gamma).sqrt() * f, 0.0));
        }
    }

    /// One Kraus-sampled step of phase damping (rate `lambda`) on qubit `q`.
    fn phase_damp(&mut self, q: usize, lambda: f64, u: f64) {
        if lambda <= 0.0 {
            return;
        }
        let (one, all) = self.masses(q);
        if u * all < lambda * one {
            self.scale_ones(q, C64::new(0.0, 0.0), C64::new(1.0 / one.sqrt(), 0.0));
        } else {
            let f = 1.0 / (all - lambda * one).sqrt();
            self.scale_ones(q, C64::new(f, 0.0), C64::new((1.0 - lambda).sqrt() * f, 0.0));
        }
    }
}

pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::QubitCountMismatch(a.n, b.n));
    }
    Ok(a.inner(b).norm().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// A unitary gate applied right after a numbered two-qubit gate of the circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Injection {
    pub after_gate: usize,
    pub gate: Gate,
}

#[derive(Serialize, Deserialize)]
struct InjectionJson {
    after_gate: usize,
    #[serde(flatten)]
    gate: Gate,
}

impl Serialize for Injection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InjectionJson { after_gate: self.after_gate, gate: self.gate }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Injection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = InjectionJson::deserialize(d)?;
        Ok(Injection { after_gate: j.after_gate, gate: j.gate })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub inject: Vec<Injection>,
    #[serde(default)]
    pub depol_1q: f64,
    #[serde(default)]
    pub depol_2q: f64,
    /// (amplitude damping rate, phase damping rate) per qubit per two-qubit layer.
    #[serde(default)]
    pub damping: [f64; 2],
    /// Per qubit (P(read 1 | 0), P(read 0 | 1)); empty means perfect readout.
    #[serde(default)]
    pub readout_flip: Vec<[f64; 2]>,
}

impl NoiseSpec {
    pub fn injection(after_gate: usize, gate: Gate) -> NoiseSpec {
        NoiseSpec { inject: vec![Injection { after_gate, gate }], ..Default::default() }
    }

    pub fn is_stochastic(&self) -> bool {
        self.depol_1q > 0.0 || self.depol_2q > 0.0 || self.damping.iter().any(|&r| r > 0.0)
    }

    pub fn has_readout_noise(&self) -> bool {
        self.readout_flip.iter().flatten().any(|&p| p > 0.0)
    }

    pub fn without_injections(&self) -> NoiseSpec {
        NoiseSpec { inject: Vec::new(), ..self.clone() }
    }

    pub fn without_readout(&self) -> NoiseSpec {
        NoiseSpec { readout_flip: Vec::new(), ..self.clone() }
    }

    /// Drops injections placed after indexed gates beyond `i`.
    pub fn truncated(&self, i: usize) -> NoiseSpec {
        NoiseSpec { inject: self.inject.iter().copied().filter(|j| j.after_gate <= i).collect(), ..self.clone() }
    }

    pub fn validate(&self, c: &Circuit) -> Result<()> {
        let n2 = c.two_qubit_count();
        for p in [self.depol_1q, self.depol_2q, self.damping[0], self.damping[1]]
            .into_iter()
            .chain(self.readout_flip.iter().flatten().copied())
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Noise(format!("probability {p} outside [0,1]")));
            }
        }
        if !self.readout_flip.is_empty() && self.readout_flip.len() != c.num_qubits {
            return Err(Error::Noise(format!(
                "readout_flip has {} entries for {} qubits",
                self.readout_flip.len(),
                c.num_qubits
            )));
        }
        for j in &self.inject {
            if j.after_gate == 0 || j.after_gate > n2 {
                return Err(Error::Noise(format!("injection after gate {} but circuit has {n2}", j.after_gate)));
            }
            j.gate.validate(c.num_qubits)?;
        }
        Ok(())
    }

    pub fn flips(&self, n: usize) -> Vec<[f64; 2]> {
        if self.readout_flip.is_empty() {
            vec![[0.0, 0.0]; n]
        } else {
            self.readout_flip.clone()
        }
    }
}

#[derive(Clone, Copy)]
enum Step {
    Gate(Gate),
    Injected(Gate),
    Layer,
}

fn program(c: &Circuit, ns: &NoiseSpec) -> Result<Vec<Step>> {
    ns.validate(c)?;
    if c.num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(c.num_qubits));
    }
    let mut steps = Vec::with_capacity(c.gates.len() + ns.inject.len());
    let mut idx = 0;
    for g in &c.gates {
        steps.push(Step::Gate(*g));
        if g.is_two_qubit() {
            idx += 1;
            for j in ns.inject.iter().filter(|j| j.after_gate == idx) {
                steps.push(Step::Injected(j.gate));
            }
            steps.push(Step::Layer);
        }
    }
    Ok(steps)
}

/// Exact final state; stochastic rates must be zero. Readout flips are ignored.
pub fn run_state(c: &Circuit, ns: &NoiseSpec) -> Result<StateVector> {
    if ns.is_stochastic() {
        return Err(Error::Noise("run_state requires zero stochastic rates".into()));
    }
    let mut s = StateVector::zero(c.num_qubits);
    for step in program(c, ns)? {
        match step {
            Step::Gate(g) | Step::Injected(g) => s.apply(&g),
            Step::Layer => {}
        }
    }
    Ok(s)
}

pub fn ideal_state(c: &Circuit) -> Result<StateVector> {
    run_state(c, &NoiseSpec::default())
}

fn apply_pauli(s: &mut StateVector, q: usize, p: u8) {
    let qid = crate::circuit::QubitId(q);
    match p {
        1 => s.apply(&Gate::X(qid)),
        2 => s.apply(&Gate::Y(qid)),
        3 => s.apply(&Gate::Z(qid)),
        _ => {}
    }
}

/// One Monte Carlo trajectory; returns the pre-measurement state.
pub fn trajectory(c: &Circuit, ns: &NoiseSpec, rng: &mut impl Rng) -> Result<StateVector> {
    let steps = program(c, ns)?;
    Ok(run_steps(c.num_qubits, &steps, ns, rng))
}

fn run_steps(n: usize, steps: &[Step], ns: &NoiseSpec, rng: &mut impl Rng) -> StateVector {
    let mut s = StateVector::zero(n);
    for step in steps {
        match *step {
            Step::Gate(g) => {
                s.apply(&g);
                let qs = g.qubits();
                if qs.len() == 1 {
                    if ns.depol_1q > 0.0 && rng.gen::<f64>() < ns.depol_1q {
                        apply_pauli(&mut s, qs[0], rng.gen_range(1..4));
                    }
                } else if ns.depol_2q > 0.0 && rng.gen::<f64>() < ns.depol_2q {
                    let k: u8 = rng.gen_range(1..16);
                    apply_pauli(&mut s, qs[0], k & 3);
                    apply_pauli(&mut s, qs[1], k >> 2);
                }
            }
            Step::Injected(g) => s.apply(&g),
            Step::Layer => {
                let [gamma, lambda] = ns.damping;
                if gamma > 0.0 || lambda > 0.0 {
                    for q in 0..n {
                        s.amplitude_damp(q, gamma, rng.gen());
                        s.phase_damp(q, lambda, rng.gen());
                    }
                }
            }
        }
    }
    s
}

/// Exact outcome probabilities indexed by basis-state index.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, bits: &str) -> f64 {
        parse_bitstring(bits).map(|k| self.probs[k]).unwrap_or(0.0)
    }

    /// Nonzero entries as (bitstring, probability).
    pub fn support(&self, eps: f64) -> Vec<(String, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > eps)
            .map(|(k, &p)| (bitstring(k, self.n), p))
            .collect()
    }
}

pub fn bitstring(index: usize, n: usize) -> String {
    (0..n).map(|q| if index >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Option<usize> {
    let mut k = 0;
    for (q, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => k |= 1 << q,
            _ => return None,
        }
    }
    Some(k)
}

fn measure_basis(s: &mut StateVector, basis: Basis) {
    if basis == Basis::X {
        for q in 0..s.n {
            s.apply(&Gate::h(q));
        }
    }
}

/// Push a distribution through independent per-qubit readout flips.
pub fn apply_readout(probs: &mut [f64], flips: &[[f64; 2]]) {
    for (q, &[p01, p10]) in flips.iter().enumerate() {
        if p01 == 0.0 && p10 == 0.0 {
            continue;
        }
        let m = 1usize << q;
        for k in 0..probs.len() {
            if k & m == 0 {
                let (a, b) = (probs[k], probs[k | m]);
                probs[k] = a * (1.0 - p01) + b * p10;
                probs[k | m] = a * p01 + b * (1.0 - p10);
            }
        }
    }
}

/// Born-rule outcome probabilities, including readout flips (which are exact).
pub fn outcome_distribution(c: &Circuit, ns: &NoiseSpec, basis: Basis) -> Result<Distribution> {
    let mut s = run_state(c, ns)?;
    measure_basis(&mut s, basis);
    let mut probs = s.probabilities();
    apply_readout(&mut probs, &ns.flips(c.num_qubits));
    Ok(Distribution { n: c.num_qubits, probs })
}

/// Shot histogram keyed by basis-state index (bit q = qubit q).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    pub basis: Basis,
    pub width: usize,
    pub shots: u64,
    pub histogram: BTreeMap<usize, u64>,
}

#[derive(Serialize, Deserialize)]
struct CountsJson {
    basis: Basis,
    shots: u64,
    histogram: BTreeMap<String, u64>,
}

impl Serialize for Counts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CountsJson {
            basis: self.basis,
            shots: self.shots,
            histogram: self.histogram.iter().map(|(&k, &v)| (bitstring(k, self.width), v)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = CountsJson::deserialize(d)?;
        let width = j.histogram.keys().next().map(|k| k.len()).unwrap_or(0);
        let mut histogram = BTreeMap::new();
        let mut total = 0;
        for (k, v) in j.histogram {
            if k.len() != width {
                return Err(D::Error::custom("histogram keys have mixed widths"));
            }
            let idx = parse_bitstring(&k).ok_or_else(|| D::Error::custom(format!("bad bitstring '{k}'")))?;
            total += v;
            histogram.insert(idx, v);
        }
        if total != j.shots {
            return Err(D::Error::custom(format!("counts sum to {total}, expected {}", j.shots)));
        }
        Ok(Counts { basis: j.basis, width, shots: j.shots, histogram })
    }
}

impl Counts {
    pub fn get(&self, bits: &str) -> u64 {
        parse_bitstring(bits).and_then(|k| self.histogram.get(&k).copied()).unwrap_or(0)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.width];
        for (&k, &c) in &self.histogram {
            v[k] = c as f64 / self.shots as f64;
        }
        v
    }

    fn from_bins(basis: Basis, width: usize, bins: &[u64]) -> Counts {
        let histogram: BTreeMap<usize, u64> =
            bins.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c)).collect();
        Counts { basis, width, shots: bins.iter().sum(), histogram }
    }
}

/// RNG for one shot: the stream index separates shots under a common seed.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(shot);
    r
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap();
    cdf.partition_point(|&x| x <= u * total).min(cdf.len() - 1)
}

fn flip_bits(k: usize, flips: &[[f64; 2]], rng: &mut impl Rng) -> usize {
    let mut out = k;
    for (q, &[p01, p10]) in flips.iter().enumerate() {
        let p = if k >> q & 1 == 0 { p01 } else { p10 };
        if p > 0.0 && rng.gen::<f64>() < p {
            out ^= 1 << q;
        }
    }
    out
}

const CHUNK: u64 = 512;

/// Parallel shots; each shot draws from its own stream so results do not depend on
/// thread scheduling.
fn parallel_bins(shots: u64, dim: usize, shot: impl Fn(u64) -> usize + Sync) -> Vec<u64> {
    let chunks = shots.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut bins = vec![0u64; dim];
            for s in ch * CHUNK..((ch + 1) * CHUNK).min(shots) {
                bins[shot(s)] += 1;
            }
            bins
        })
        .reduce(
            || vec![0u64; dim],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

pub fn sample_counts(c: &Circuit, ns: &NoiseSpec, basis: Basis, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let n = c.num_qubits;
    let dim = 1usize << n;
    let flips = ns.flips(n);
    let bins = if ns.is_stochastic() {
        let steps = program(c, ns)?;
        parallel_bins(shots, dim, |s| {
            let mut rng = shot_rng(seed, s);
            let mut st = run_steps(n, &steps, ns, &mut rng);
            measure_basis(&mut st, basis);
            let cdf = cumulative(&st.probabilities());
            let k = sample_index(&cdf, rng.gen());
            flip_bits(k, &flips, &mut rng)
        })
    } else {
        let d = outcome_distribution(c, &ns.without_readout(), basis)?;
        let cdf = cumulative(&d.probs);
        parallel_bins(shots, dim, |s| {
            let mut rng = shot_rng(seed, s);
            let k = sample_index(&cdf, rng.gen());
            flip_bits(k, &flips, &mut rng)
        })
    };
    Ok(Counts::from_bins(basis, n, &bins))
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Dense unitary of `c` (column k = image of basis state k).
pub fn circuit_unitary(c: &Circuit) -> Result<Vec<Vec<C64>>> {
    if c.num_qubits > 12 {
        return Err(Error::TooManyQubits(c.num_qubits));
    }
    Ok((0..1usize << c.num_qubits)
        .map(|k| {
            let mut s = StateVector::basis(c.num_qubits, k);
            s.apply_all(&c.gates);
            s.amps
        })
        .collect())
}

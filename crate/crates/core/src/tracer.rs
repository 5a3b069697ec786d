//! Prefix tracing of phase fidelity with classical completion of the missing CNOTs.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::sim::{self, Basis, Counts, NoiseSpec};
use crate::steane::{self, hamming_codes, ErrorEstimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gate_index: usize,
    pub phase_fidelity: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleyReport {
    pub valley_index: usize,
    pub depth: f64,
    pub recovered: bool,
}

/// How a probability is obtained: exactly from amplitudes, or from seeded shots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluation {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

impl Evaluation {
    /// Exact when the noise allows it, sampled otherwise.
    pub fn for_noise(ns: &NoiseSpec, shots: u64, seed: u64) -> Evaluation {
        if ns.is_stochastic() {
            Evaluation::Sampled { shots, seed }
        } else {
            Evaluation::Exact
        }
    }
}

fn complete_index(mut k: usize, missing: &[(usize, usize)], basis: Basis) -> usize {
    for &(c, t) in missing {
        let (src, dst) = match basis {
            Basis::Z => (c, t),
            Basis::X => (t, c),
        };
        if k >> src & 1 == 1 {
            k ^= 1 << dst;
        }
    }
    k
}

/// Apply CNOTs (control, target) to readout strings as XORs: bit[t] ^= bit[c] in the Z
/// basis and bit[c] ^= bit[t] in the X basis.
pub fn xor_complete(counts: &Counts, missing: &[(usize, usize)], basis: Basis) -> Result<Counts> {
    for &(c, t) in missing {
        for q in [c, t] {
            if q >= counts.width {
                return Err(Error::QubitOutOfRange { qubit: q, size: counts.width });
            }
        }
    }
    let mut out = Counts { histogram: Default::default(), ..counts.clone() };
    for (&k, &v) in &counts.histogram {
        *out.histogram.entry(complete_index(k, missing, basis)).or_insert(0) += v;
    }
    Ok(out)
}

/// CNOTs among the indexed gates after `i`, as (control, target). Source Rzz gates are
/// diagonal and have no classical counterpart, so they are skipped.
pub fn missing_gates(c: &Circuit, i: usize) -> Vec<(usize, usize)> {
    c.indexed_schedule()
        .iter()
        .filter(|g| g.index > i)
        .filter_map(|g| match g.gate {
            Gate::Cnot { control, target } => Some((control.0, target.0)),
            _ => None,
        })
        .collect()
}

fn prefix_seed(seed: u64, i: usize) -> u64 {
    seed ^ ((i as u64) << 40)
}

/// pz of prefix `i` after completion.
pub fn prefix_pz(c: &Circuit, ns: &NoiseSpec, i: usize, eval: Evaluation) -> Result<ErrorEstimate> {
    let pc = c.prefix(i)?;
    let nsi = ns.truncated(i);
    let missing = missing_gates(c, i);
    match eval {
        Evaluation::Exact => {
            let d = sim::outcome_distribution(&pc, &nsi, Basis::X)?;
            let mut probs = vec![0.0; d.probs.len()];
            for (k, &p) in d.probs.iter().enumerate() {
                probs[complete_index(k, &missing, Basis::X)] += p;
            }
            let completed = sim::Distribution { n: d.n, probs };
            Ok(ErrorEstimate::exact(steane::outside_mass(&completed, &hamming_codes().1)))
        }
        Evaluation::Sampled { shots, seed } => {
            let counts = sim::sample_counts(&pc, &nsi, Basis::X, shots, prefix_seed(seed, i))?;
            steane::pz_from_counts(&xor_complete(&counts, &missing, Basis::X)?)
        }
    }
}

pub fn point_from_pz(i: usize, e: &ErrorEstimate) -> CurvePoint {
    CurvePoint {
        gate_index: i,
        phase_fidelity: (1.0 - e.p).max(0.0).sqrt(),
        ci_low: (1.0 - e.ci_high).max(0.0).sqrt(),
        ci_high: (1.0 - e.ci_low).max(0.0).sqrt(),
    }
}

/// Phase-fidelity sqrt(1 - pz) for every prefix 1..=n. Injections after later gates are
/// dropped from each prefix run.
pub fn trace_curve(c: &Circuit, ns: &NoiseSpec, eval: Evaluation) -> Result<Curve> {
    let n = c.two_qubit_count();
    if n == 0 {
        return Err(Error::InvalidArgument("circuit has no two-qubit gates to trace".into()));
    }
    ns.validate(c)?;
    let points: Result<Vec<CurvePoint>> =
        (1..=n).into_par_iter().map(|i| prefix_pz(c, ns, i, eval).map(|e| point_from_pz(i, &e))).collect();
    Ok(Curve { label: c.label.clone(), points: points? })
}

/// The same trace with every injection removed.
pub fn reference_curve(c: &Circuit, ns: &NoiseSpec, eval: Evaluation) -> Result<Curve> {
    let mut r = trace_curve(c, &ns.without_injections(), eval)?;
    r.label = format!("{} reference", c.label).trim().to_string();
    Ok(r)
}

pub const MIN_THRESHOLD: f64 = 0.02;

/// Largest dip of `observed` below `reference`, if it clears max(3 pooled CI
/// half-widths, 0.02).
pub fn detect_valley(observed: &Curve, reference: &Curve) -> Result<Option<ValleyReport>> {
    if observed.points.len() != reference.points.len()
        || observed.points.iter().zip(&reference.points).any(|(a, b)| a.gate_index != b.gate_index)
    {
        return Err(Error::CurveMismatch);
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, (o, r)) in observed.points.iter().zip(&reference.points).enumerate() {
        let gap = r.phase_fidelity - o.phase_fidelity;
        if best.map_or(true, |(_, g)| gap > g + 1e-12) {
            best = Some((j, gap));
        }
    }
    let Some((j, gap)) = best else { return Ok(None) };
    let (o, r) = (&observed.points[j], &reference.points[j]);
    let threshold = (3.0 * o.half_width().hypot(r.half_width())).max(MIN_THRESHOLD);
    if gap <= threshold {
        return Ok(None);
    }
    let rise = observed.points[j + 1..].iter().map(|p| p.phase_fidelity - o.phase_fidelity).fold(0.0, f64::max);
    Ok(Some(ValleyReport { valley_index: o.gate_index, depth: gap, recovered: rise > threshold }))
}

pub const CSV_HEADER: &str = "gate_index,phase_fidelity,ci_low,ci_high";

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for p in &self.points {
            s.push_str(&format!("{},{:?},{:?},{:?}\n", p.gate_index, p.phase_fidelity, p.ci_low, p.ci_high));
        }
        s
    }

    pub fn from_csv(label: &str, text: &str) -> Result<Curve> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(Error::Parse { line: 1, msg: format!("expected header '{CSV_HEADER}'") }),
        }
        let mut points: Vec<CurvePoint> = Vec::new();
        for (i, line) in lines {
            let bad = |m: &str| Error::Parse { line: i + 1, msg: m.to_string() };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let gate_index = f[0].parse().map_err(|_| bad("bad gate index"))?;
            let v: std::result::Result<Vec<f64>, _> = f[1..].iter().map(|x| x.parse::<f64>()).collect();
            let v = v.map_err(|_| bad("bad number"))?;
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(bad("value outside [0,1]"));
            }
            if points.last().is_some_and(|p| p.gate_index >= gate_index) {
                return Err(bad("gate indices must increase"));
            }
            points.push(CurvePoint { gate_index, phase_fidelity: v[0], ci_low: v[1], ci_high: v[2] });
        }
        Ok(Curve { label: label.to_string(), points })
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phase_fidelity).collect()
    }
}

use std::f64::consts::PI;
use zzcomp::format::parse_circuit;
use zzcomp::mitigation::{apply_filter, calibration_matrix};
use zzcomp::scenario::{eight_gate_injection, ordering_a, ordering_b, resurrection};
use zzcomp::sim::{ideal_state, outcome_distribution, run_state, sample_counts, Injection};
use zzcomp::steane::{
    encoder, exact_error_probs, exact_pz, fidelity_simple, fidelity_stabilizer, hamming_codes, pz_from_counts,
    stabilizer_overlap, EncoderVariant, FidelityMode,
};
use zzcomp::topology::validate_against_topology;
use zzcomp::tracer::{detect_valley, missing_gates, prefix_pz, reference_curve, trace_curve, Evaluation};
use zzcomp::{Basis, Circuit, Gate, NoiseSpec, Topology};

#[test]
fn shipped_encoders_fit_their_devices() {
    for v in EncoderVariant::ALL {
        let c = encoder(v);
        assert!(validate_against_topology(&c, &v.default_topology()).unwrap().is_empty(), "{}", v.name());
    }
    let eight = encoder(EncoderVariant::EightGate);
    assert_eq!(missing_gates(&eight, 7).len(), 1);
    assert_eq!(eight.prefix(7).unwrap().two_qubit_count(), 7);
    assert!(!validate_against_topology(&encoder(EncoderVariant::NineGate), &Topology::lagos()).is_ok_and(|v| v.is_empty()));
}

#[test]
fn completed_ideal_prefixes_have_no_phase_flips() {
    for v in EncoderVariant::ALL {
        let c = encoder(v);
        for i in 1..=c.two_qubit_count() {
            let p = prefix_pz(&c, &NoiseSpec::default(), i, Evaluation::Exact).unwrap().p;
            assert!(p < 1e-12, "{} prefix {i}: {p}", v.name());
        }
        let sampled = trace_curve(&c, &NoiseSpec::default(), Evaluation::Sampled { shots: 500, seed: 3 }).unwrap();
        assert!(sampled.values().iter().all(|&f| f == 1.0));
    }
}

#[test]
fn last_point_is_the_full_circuit() {
    let r = ordering_b();
    let curve = trace_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let full = exact_pz(&r.circuit, &r.noise).unwrap();
    let last = curve.points.last().unwrap();
    assert_eq!(last.gate_index, 9);
    assert!((last.phase_fidelity - (1.0 - full).sqrt()).abs() < 1e-12);
}

#[test]
fn valley_sits_on_the_gate_seven_injection() {
    let r = eight_gate_injection(7).unwrap();
    let observed = trace_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let reference = reference_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let v = detect_valley(&observed, &reference).unwrap().unwrap();
    assert_eq!(v.valley_index, 7);
    let min = observed.points.iter().min_by(|a, b| a.phase_fidelity.total_cmp(&b.phase_fidelity)).unwrap();
    assert_eq!(min.gate_index, 7);
    assert!(!v.recovered);

    let r = resurrection().unwrap();
    let observed = trace_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let reference = reference_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let v = detect_valley(&observed, &reference).unwrap().unwrap();
    assert_eq!(v.valley_index, 7);
    assert!(v.recovered);
}

#[test]
fn sampled_curve_approaches_exact() {
    let r = ordering_b();
    let exact = trace_curve(&r.circuit, &r.noise, Evaluation::Exact).unwrap();
    let sampled = trace_curve(&r.circuit, &r.noise, Evaluation::Sampled { shots: 100_000, seed: 11 }).unwrap();
    for (e, s) in exact.points.iter().zip(&sampled.points) {
        let pz = 1.0 - e.phase_fidelity.powi(2);
        let sigma = (pz * (1.0 - pz) / 100_000.0).sqrt();
        let spz = 1.0 - s.phase_fidelity.powi(2);
        assert!((spz - pz).abs() <= 5.0 * sigma + 1e-12, "index {}: {spz} vs {pz}", e.gate_index);
    }
}

#[test]
fn depolarizing_curve_declines_smoothly() {
    let c = encoder(EncoderVariant::EightGate);
    let ns = NoiseSpec { depol_1q: 0.002, depol_2q: 0.02, ..NoiseSpec::default() };
    let curve = trace_curve(&c, &ns, Evaluation::Sampled { shots: 100_000, seed: 5 }).unwrap();
    for w in curve.points.windows(2) {
        let slack = w[0].half_width() + w[1].half_width();
        assert!(w[1].phase_fidelity <= w[0].phase_fidelity + slack, "rise at {}", w[1].gate_index);
    }
    assert!(detect_valley(&curve, &reference_curve(&c, &ns, Evaluation::Sampled { shots: 100_000, seed: 5 }).unwrap())
        .unwrap()
        .is_none());
}

#[test]
fn orderings_differ_by_a_relative_phase() {
    let (a, b) = (ordering_a(), ordering_b());
    let ideal = ideal_state(&a.circuit).unwrap();
    let sa = run_state(&a.circuit, &a.noise).unwrap();
    let sb = run_state(&b.circuit, &b.noise).unwrap();
    assert!((ideal.inner(&sa).norm() - 1.0).abs() < 1e-12);
    let ob = ideal.inner(&sb).norm();
    assert!(ob < 1.0 - 1e-3);
    // same magnitudes, different phases
    for (x, y) in ideal.amps.iter().zip(&sb.amps) {
        assert!((x.norm() - y.norm()).abs() < 1e-12);
    }
    assert!((exact_pz(&b.circuit, &b.noise).unwrap() - (PI / 7.0).sin().powi(2)).abs() < 1e-12);
}

#[test]
fn full_depolarizing_cnot_gives_uniform_outcomes() {
    let c = Circuit::with_gates(2, vec![Gate::cx(0, 1)]).unwrap();
    let ns = NoiseSpec { depol_2q: 1.0, ..NoiseSpec::default() };
    let shots = 60_000;
    let counts = sample_counts(&c, &ns, Basis::Z, shots, 9).unwrap();
    // each of the 15 non-identity Paulis is equally likely; count which bits they flip
    let mut expect = [0.0; 4];
    for k in 1u32..16 {
        let (p0, p1) = (k & 3, k >> 2);
        let flip = |p: u32| (p == 1 || p == 2) as usize;
        expect[flip(p0) | flip(p1) << 1] += 1.0 / 15.0;
    }
    for (i, &p) in expect.iter().enumerate() {
        let got = *counts.histogram.get(&i).unwrap_or(&0) as f64 / shots as f64;
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((got - p).abs() <= 5.0 * sigma, "outcome {i}: {got} vs {p}");
    }
}

#[test]
fn zero_angle_injection_is_bit_exact() {
    let c = encoder(EncoderVariant::NineGate);
    let clean = outcome_distribution(&c, &NoiseSpec::default(), Basis::X).unwrap();
    let zero = outcome_distribution(&c, &NoiseSpec::injection(4, Gate::rzz(0.0, 5, 4)), Basis::X).unwrap();
    assert_eq!(clean, zero);
}

#[test]
fn fidelities_agree_for_unitary_errors() {
    let c = encoder(EncoderVariant::NineGate);
    let last = c.two_qubit_count();
    for q in 0..7 {
        let ns = NoiseSpec::injection(last, Gate::rz(PI, q));
        let overlap = stabilizer_overlap(&run_state(&c, &ns).unwrap());
        let f = fidelity_stabilizer(&c, &ns, FidelityMode::Exact).unwrap();
        assert!((f * f - overlap).abs() < 1e-12);
        let (px, pz) = exact_error_probs(&c, &ns).unwrap();
        assert!((fidelity_simple(pz, px).unwrap().powi(2) - overlap).abs() < 1e-12);
    }
    let b = ordering_b();
    let (px, pz) = exact_error_probs(&b.circuit, &b.noise).unwrap();
    let f = fidelity_stabilizer(&b.circuit, &b.noise, FidelityMode::Exact).unwrap();
    assert!((fidelity_simple(pz, px).unwrap() - f).abs() < 1e-9);
}

#[test]
fn fidelity_simple_is_monotone() {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for &a in &grid {
        for w in grid.windows(2) {
            assert!(fidelity_simple(w[1], a).unwrap() <= fidelity_simple(w[0], a).unwrap());
            assert!(fidelity_simple(a, w[1]).unwrap() <= fidelity_simple(a, w[0]).unwrap());
        }
    }
}

#[test]
fn mitigation_recovers_sampled_readout() {
    let c = encoder(EncoderVariant::EightGate);
    let flips = vec![[0.04, 0.08]; 7];
    let ns = NoiseSpec { readout_flip: flips.clone(), ..NoiseSpec::default() };
    let shots = 1_000_000;
    let counts = sample_counts(&c, &ns, Basis::X, shots, 21).unwrap();
    let raw_pz = pz_from_counts(&counts).unwrap().p;
    assert!(raw_pz > 0.2);
    let b = calibration_matrix(&flips).unwrap();
    let r = apply_filter(&b, &counts.frequencies()).unwrap();
    let ideal = outcome_distribution(&c, &NoiseSpec::default(), Basis::X).unwrap();
    for (k, (&got, &want)) in r.raw.iter().zip(&ideal.probs).enumerate() {
        // the filter amplifies sampling noise by at most the inverse's row norm
        let sigma = (0.2 / shots as f64).sqrt();
        assert!((got - want).abs() < 5.0 * sigma * 3.0, "state {k}: {got} vs {want}");
    }
    let dual = hamming_codes().1;
    let inside: f64 = dual.codewords().iter().map(|&w| r.v[w as usize]).sum();
    assert!(inside > 0.99);
}

#[test]
fn text_format_drives_the_pipeline() {
    let text = "qubits 7\nlabel demo\nh q0\nh q1\nh q3\nh q6\ncx q0 q4\ncx q1 q5\ncx q0 q1\ncx q5 q4\n\
                cx q6 q2\ncx q5 q2\ncx q3 q1\ncx q1 q5\ncx q2 q3\n";
    let c = parse_circuit(text).unwrap();
    assert_eq!(c.gates, encoder(EncoderVariant::NineGate).gates);
    let mut ns = NoiseSpec::default();
    ns.inject.push(Injection { after_gate: 5, gate: Gate::rzz(-PI / 3.5, 6, 2) });
    assert!(exact_pz(&c, &ns).unwrap() < 1e-10);
}

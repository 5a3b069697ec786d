use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use zzcomp::compensator::{apply_plan, default_theta_grid, search_hcnot, search_rz, CompensationPlan};
use zzcomp::format::{emit_circuit, parse_circuit, parse_topology};
use zzcomp::mitigation::{apply_filter, calibration_matrix, ConfusionMatrix};
use zzcomp::sim::{bitstring, outcome_distribution, sample_counts, Distribution};
use zzcomp::steane::{
    self, adjacency, fidelity_simple, fidelity_stabilizer, hamming_codes, outside_mass, steane_plus_encoder,
    EncoderVariant, FidelityMode, RoleMap,
};
use zzcomp::topology::{enumerate_local_partitions, enumerate_supporting_partitions};
use zzcomp::tracer::{detect_valley, reference_curve, trace_curve, Curve, Evaluation};
use zzcomp::{Basis, Circuit, Counts, Error, NoiseSpec, Topology};

#[derive(Parser)]
#[command(name = "zzcomp", version, about = "Trace and compensate ZZ crosstalk in Steane |+> encoders")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit an encoder circuit.
    Gen {
        /// nine_gate, eight_gate, sparse_17 or sparse_18
        #[arg(long)]
        variant: String,
        /// Physical qubit for each of the 7 roles, comma separated.
        #[arg(long, value_delimiter = ',')]
        map: Option<Vec<usize>>,
        /// Topology file, or `melbourne` / `lagos`.
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List connected k-qubit regions of a device.
    Partitions {
        #[arg(long, default_value = "melbourne")]
        topology: String,
        #[arg(long, default_value_t = 7)]
        k: usize,
        /// Keep only regions that host this encoder variant without swaps.
        #[arg(long)]
        supporting: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample Steane measurement counts.
    Sample {
        circuit: PathBuf,
        noise: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BasisArg::X)]
        basis: BasisArg,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace the phase-fidelity curve and locate valleys.
    Trace {
        circuit: PathBuf,
        noise: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG plot next to the CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Search for compensating insertions.
    Compensate {
        circuit: PathBuf,
        noise: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Rz)]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        max_insertions: usize,
        /// Restrict HCNOT pairs to device edges (file, `melbourne` or `lagos`).
        #[arg(long)]
        topology: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply readout mitigation to a counts file.
    Mitigate {
        counts: PathBuf,
        /// Noise file whose readout_flip defines the confusion matrix.
        #[arg(long, conflicts_with = "matrix")]
        noise: Option<PathBuf>,
        /// Confusion matrix CSV, one row per actual readout.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write the confusion matrix used.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Merge CSV outputs with a shared header into one file.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    X,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rz,
    Hcnot,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    let mut c = parse_circuit(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if c.label.is_empty() {
        c.label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(c)
}

fn load_noise(path: Option<&Path>, c: &Circuit) -> Result<NoiseSpec> {
    let ns: NoiseSpec = match path {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => NoiseSpec::default(),
    };
    ns.validate(c)?;
    Ok(ns)
}

fn load_topology(name: &str) -> Result<Topology> {
    match name {
        "melbourne" => Ok(Topology::melbourne()),
        "lagos" => Ok(Topology::lagos()),
        path => Ok(parse_topology(&read(Path::new(path))?)?),
    }
}

fn variant(name: &str) -> Result<EncoderVariant> {
    EncoderVariant::parse(name).ok_or_else(|| anyhow!("unknown encoder variant '{name}'"))
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn gen(name: &str, map: Option<Vec<usize>>, topology: Option<&str>, out: Option<&Path>) -> Result<()> {
    let v = variant(name)?;
    let topo = match topology {
        Some(t) => load_topology(t)?,
        None => v.default_topology(),
    };
    let map = match map {
        Some(m) => RoleMap(m.try_into().map_err(|m: Vec<usize>| anyhow!("map needs 7 qubits, got {}", m.len()))?),
        None => v.default_map(),
    };
    let text = emit_circuit(&steane_plus_encoder(v, &map, &topo)?);
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn partitions(topology: &str, k: usize, supporting: Option<&str>, out: Option<&Path>) -> Result<()> {
    let topo = load_topology(topology)?;
    let parts = match supporting {
        Some(name) => enumerate_supporting_partitions(&topo, k, &adjacency(variant(name)?)),
        None => enumerate_local_partitions(&topo, k),
    };
    let mut text = String::from("qubits,edges\n");
    for p in &parts {
        let q: Vec<String> = p.qubits.iter().map(|q| q.to_string()).collect();
        let e: Vec<String> = p.induced_edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        text.push_str(&format!("{},{}\n", q.join(" "), e.join(" ")));
    }
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn svg(curves: &[&Curve]) -> String {
    let (w, h, m) = (480.0, 320.0, 40.0);
    let n = curves.iter().flat_map(|c| c.points.iter().map(|p| p.gate_index)).max().unwrap_or(1).max(2);
    let x = |i: usize| m + (i - 1) as f64 / (n - 1) as f64 * (w - 2.0 * m);
    let y = |v: f64| h - m - v * (h - 2.0 * m);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    s.push_str(&format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    ));
    for (c, color) in curves.iter().zip(["#c0392b", "#7f8c8d", "#2471a3"]) {
        let pts: Vec<String> =
            c.points.iter().map(|p| format!("{:.2},{:.2}", x(p.gate_index), y(p.phase_fidelity))).collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"><title>{}</title></polyline>\n",
            pts.join(" "),
            c.label
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn trace(circuit: &Path, noise: Option<&Path>, shots: u64, seed: u64, out: &Path, plot: bool) -> Result<()> {
    let c = load_circuit(circuit)?;
    let ns = load_noise(noise, &c)?;
    let eval = Evaluation::for_noise(&ns, shots, seed);
    let observed = trace_curve(&c, &ns, eval)?;
    let reference = reference_curve(&c, &ns, eval)?;
    let valley = detect_valley(&observed, &reference)?;
    write(out, &observed.to_csv())?;
    write(&with_suffix(out, ".reference.csv"), &reference.to_csv())?;
    write(&with_suffix(out, ".valley.json"), &json(&valley)?)?;
    if plot {
        write(&out.with_extension("svg"), &svg(&[&observed, &reference]))?;
    }
    Ok(())
}

/// (pz, px) from the X- and Z-basis readouts, optionally through the readout filter.
fn readout_errors(c: &Circuit, ns: &NoiseSpec, eval: Evaluation, mitigate: bool) -> Result<(f64, f64)> {
    let (code, dual) = hamming_codes();
    let b = calibration_matrix(&ns.flips(c.num_qubits))?;
    let mut out = [0.0; 2];
    for (slot, (basis, set, salt)) in [(Basis::X, &dual, 0u64), (Basis::Z, &code, 1)].into_iter().enumerate() {
        let mut probs = match eval {
            Evaluation::Exact => outcome_distribution(c, ns, basis)?.probs,
            Evaluation::Sampled { shots, seed } => {
                sample_counts(c, ns, basis, shots, seed.wrapping_add(salt << 32))?.frequencies()
            }
        };
        if mitigate {
            probs = apply_filter(&b, &probs)?.v;
        }
        out[slot] = outside_mass(&Distribution { n: c.num_qubits, probs }, set);
    }
    Ok((out[0], out[1]))
}

fn report_rows(label: &str, c: &Circuit, ns: &NoiseSpec, eval: Evaluation, shots: u64, seed: u64) -> Result<String> {
    let mode = if ns.is_stochastic() { FidelityMode::Sampled { shots, seed } } else { FidelityMode::Exact };
    let fstab = fidelity_stabilizer(c, ns, mode)?;
    let mut rows = String::new();
    for mitigated in [false, true] {
        let (pz, px) = readout_errors(c, ns, eval, mitigated)?;
        let fs = fidelity_simple(pz, px)?;
        rows.push_str(&format!("{label},{mitigated},{pz:?},{px:?},{fs:?},{fstab:?}\n"));
    }
    Ok(rows)
}

struct SearchArgs<'a> {
    method: MethodArg,
    max_insertions: usize,
    topology: Option<&'a str>,
    shots: u64,
    seed: u64,
}

fn compensate(circuit: &Path, noise: Option<&Path>, a: SearchArgs, out: &Path) -> Result<()> {
    let c = load_circuit(circuit)?;
    let ns = load_noise(noise, &c)?;
    let eval = Evaluation::for_noise(&ns, a.shots, a.seed);
    let topo = a.topology.map(load_topology).transpose()?;
    let plan: CompensationPlan = match a.method {
        MethodArg::Rz => search_rz(&c, &ns, &default_theta_grid(), a.max_insertions, eval)?,
        MethodArg::Hcnot => {
            search_hcnot(&c, &ns, Some(&default_theta_grid()), a.max_insertions, topo.as_ref(), eval)?
        }
    };
    let applied = apply_plan(&c, &ns, &plan.insertions)?;
    write(out, &json(&plan)?)?;
    write(&with_suffix(out, ".circuit"), &emit_circuit(&applied.circuit))?;
    let mut csv = String::from("circuit,mitigated,pz,px,fidelity_simple,fidelity_stabilizer\n");
    csv += &report_rows("original", &c, &ns, eval, a.shots, a.seed)?;
    csv += &report_rows("compensated", &applied.circuit, &applied.noise, eval, a.shots, a.seed)?;
    write(&with_suffix(out, ".report.csv"), &csv)?;
    Ok(())
}

#[derive(Serialize)]
struct MitigationOutput {
    basis: Basis,
    shots: u64,
    condition: f64,
    error_before: Option<f64>,
    error_after: Option<f64>,
    raw_solution: BTreeMap<String, f64>,
    mitigated: BTreeMap<String, f64>,
}

fn mitigate(counts: &Path, noise: Option<&Path>, matrix: Option<&Path>, out: &Path, matrix_out: Option<&Path>) -> Result<()> {
    let counts: Counts =
        serde_json::from_str(&read(counts)?).with_context(|| format!("in {}", counts.display()))?;
    let b = match (noise, matrix) {
        (_, Some(m)) => ConfusionMatrix::from_csv(&read(m)?)?,
        (Some(n), None) => {
            let ns: NoiseSpec = serde_json::from_str(&read(n)?).with_context(|| format!("in {}", n.display()))?;
            if !ns.readout_flip.is_empty() && ns.readout_flip.len() != counts.width {
                bail!("readout_flip has {} entries for {}-bit counts", ns.readout_flip.len(), counts.width);
            }
            calibration_matrix(&ns.flips(counts.width))?
        }
        (None, None) => bail!("give either --noise or --matrix"),
    };
    if let Some(p) = matrix_out {
        write(p, &b.to_csv())?;
    }
    let e = counts.frequencies();
    let r = apply_filter(&b, &e)?;
    let keyed = |v: &[f64]| -> BTreeMap<String, f64> {
        v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(k, &x)| (bitstring(k, counts.width), x)).collect()
    };
    let error = |v: &[f64]| {
        (counts.width == steane::N).then(|| {
            let (code, dual) = hamming_codes();
            let set = if counts.basis == Basis::X { dual } else { code };
            outside_mass(&Distribution { n: counts.width, probs: v.to_vec() }, &set)
        })
    };
    let output = MitigationOutput {
        basis: counts.basis,
        shots: counts.shots,
        condition: r.condition,
        error_before: error(&e),
        error_after: error(&r.v),
        raw_solution: keyed(&r.raw),
        mitigated: keyed(&r.v),
    };
    write(out, &json(&output)?)
}

fn sample(circuit: &Path, noise: Option<&Path>, basis: BasisArg, shots: u64, seed: u64, out: &Path) -> Result<()> {
    let c = load_circuit(circuit)?;
    let ns = load_noise(noise, &c)?;
    let basis = match basis {
        BasisArg::X => Basis::X,
        BasisArg::Z => Basis::Z,
    };
    write(out, &json(&sample_counts(&c, &ns, basis, shots, seed)?)?)
}

fn report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let mut header: Option<String> = None;
    let mut body = String::new();
    for p in inputs {
        let text = read(p)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let h = lines.next().ok_or_else(|| anyhow!("{} is empty", p.display()))?.trim().to_string();
        match &header {
            Some(prev) if *prev != h => bail!("{} has header '{h}', expected '{prev}'", p.display()),
            _ => header = Some(h),
        }
        let run = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for l in lines {
            body.push_str(&format!("{run},{l}\n"));
        }
    }
    write(out, &format!("run,{}\n{body}", header.unwrap_or_default()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { variant, map, topology, out } => gen(&variant, map, topology.as_deref(), out.as_deref()),
        Cmd::Partitions { topology, k, supporting, out } => {
            partitions(&topology, k, supporting.as_deref(), out.as_deref())
        }
        Cmd::Sample { circuit, noise, basis, shots, seed, out } => {
            sample(&circuit, noise.as_deref(), basis, shots, seed, &out)
        }
        Cmd::Trace { circuit, noise, shots, seed, out, svg } => {
            trace(&circuit, noise.as_deref(), shots, seed, &out, svg)
        }
        Cmd::Compensate { circuit, noise, method, max_insertions, topology, shots, seed, out } => {
            let args = SearchArgs { method, max_insertions, topology: topology.as_deref(), shots, seed };
            compensate(&circuit, noise.as_deref(), args, &out)
        }
        Cmd::Mitigate { counts, noise, matrix, out, matrix_out } => {
            mitigate(&counts, noise.as_deref(), matrix.as_deref(), &out, matrix_out.as_deref())
        }
        Cmd::Report { inputs, out } => report(&inputs, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref::<Error>(), Some(Error::NoTrivialLocation)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! `dmps`: command-line front end for the MPS-based VQE toolkit.
//!
//! Four subcommands: `ham build` turns an FCIDUMP into a Pauli text file,
//! `vqe run` optimizes an ansatz, `grad check` cross-validates the three
//! gradient paths and sweeps the bond dimension, and `bench` times back
//! propagation against the estimated parameter-shift cost. Every flag can
//! also be set through a `DMPS_`-prefixed environment variable. Exit codes:
//! 0 success, 2 bad input, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use dmps::ansatz::{hf_reference, trotterized_circuit, uccsd_pool};
use dmps::circuit::{parse_circuit_text, route_to_nearest_neighbor, Param, ParametricCircuit};
use dmps::error::Error;
use dmps::fcidump::{build_fermionic_hamiltonian, parse_fcidump};
use dmps::fermion::jordan_wigner;
use dmps::grad::{
    energy, grad_finite_difference, grad_psr, grad_total, mean_relative_error,
};
use dmps::mps::MpsSettings;
use dmps::optim::{gradient_free_baseline, minimize, Method, OptimizerConfig};
use dmps::oracle::exact_ground_energy;
use dmps::pauli::{parse_pauli_text, serialize_pauli_text, QubitHamiltonian};

#[derive(Parser)]
#[command(name = "dmps", version, about = "Matrix-product-state VQE toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hamiltonian construction
    Ham {
        #[command(subcommand)]
        cmd: HamCmd,
    },
    /// Variational optimization runs
    Vqe {
        #[command(subcommand)]
        cmd: VqeCmd,
    },
    /// Gradient validation campaigns
    Grad {
        #[command(subcommand)]
        cmd: GradCmd,
    },
    /// Back propagation vs parameter-shift timing table
    Bench(RunArgs),
}

#[derive(Subcommand)]
enum HamCmd {
    /// FCIDUMP -> Pauli text file plus a term-count summary
    Build {
        #[arg(long, env = "DMPS_FCIDUMP")]
        fcidump: PathBuf,
        #[arg(long, env = "DMPS_OUT", default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum VqeCmd {
    /// Optimize the ansatz and write trajectory.csv + run.json
    Run(RunArgs),
}

#[derive(Subcommand)]
enum GradCmd {
    /// Compare BP/PSR/FD and sweep bond dimension and group size
    Check(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OptChoice {
    Gd,
    Adam,
    Bfgs,
    NelderMead,
}

#[derive(Args, Clone, Serialize)]
struct RunArgs {
    /// FCIDUMP integrals file (exclusive with --pauli)
    #[arg(long, env = "DMPS_FCIDUMP")]
    fcidump: Option<PathBuf>,
    /// Pauli text Hamiltonian file (exclusive with --fcidump)
    #[arg(long, env = "DMPS_PAULI")]
    pauli: Option<PathBuf>,
    /// `uccsd` or a circuit text file path
    #[arg(long, env = "DMPS_ANSATZ", default_value = "uccsd")]
    ansatz: String,
    #[arg(long, env = "DMPS_BOND_DIM", default_value_t = 128)]
    bond_dim: usize,
    #[arg(long, env = "DMPS_SVD_TOL", default_value_t = 1e-6)]
    svd_tol: f64,
    #[arg(long, env = "DMPS_GROUP_SIZE", default_value_t = 4)]
    group_size: usize,
    #[arg(long, env = "DMPS_OPTIMIZER", value_enum, default_value_t = OptChoice::Bfgs)]
    optimizer: OptChoice,
    /// Learning rate for gd/adam
    #[arg(long, env = "DMPS_LR", default_value_t = 0.01)]
    lr: f64,
    #[arg(long, env = "DMPS_MAX_ITER", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, env = "DMPS_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Seed for the initial parameter draw
    #[arg(long, env = "DMPS_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, env = "DMPS_OUT", default_value = ".")]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: 2, message: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

/// The problem a run operates on: Hamiltonian, routed circuit, start state.
struct Problem {
    h: QubitHamiltonian,
    circuit: ParametricCircuit,
    bits: Vec<u8>,
}

impl RunArgs {
    fn check(&self) -> Result<(), Failure> {
        match (&self.fcidump, &self.pauli) {
            (Some(_), Some(_)) => Err(Failure::input("--fcidump and --pauli are mutually exclusive")),
            (None, None) => Err(Failure::input("one of --fcidump or --pauli is required")),
            _ => Ok(()),
        }?;
        if self.workers < 1 {
            return Err(Failure::input("--workers must be >= 1"));
        }
        if self.bond_dim < 1 {
            return Err(Failure::input("--bond-dim must be >= 1"));
        }
        if !(self.svd_tol >= 0.0 && self.svd_tol < 1.0) {
            return Err(Failure::input("--svd-tol must be in [0, 1)"));
        }
        Ok(())
    }

    fn settings(&self) -> MpsSettings {
        MpsSettings::new(self.bond_dim, self.svd_tol)
    }

    /// SHA-256 over the serialized flag set; stamped into every output so a
    /// result can be traced back to its exact configuration.
    fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialization");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &digest[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    fn load_problem(&self) -> Result<Problem, Failure> {
        if let Some(path) = &self.fcidump {
            let mi = parse_fcidump(&read(path)?)?;
            let n_qubits = 2 * mi.n_orbitals;
            let op = build_fermionic_hamiltonian(&mi);
            let h = jordan_wigner(&op, n_qubits)?;
            if h.terms.is_empty() {
                return Err(Failure::input("FCIDUMP produced an empty Hamiltonian"));
            }
            let (circuit, bits) = if self.ansatz == "uccsd" {
                let pool = uccsd_pool(mi.n_electrons, n_qubits)?;
                let c = trotterized_circuit(&pool, n_qubits, 1)?;
                (route_to_nearest_neighbor(&c), hf_reference(mi.n_electrons, n_qubits)?)
            } else {
                let c = parse_circuit_text(&read(Path::new(&self.ansatz))?)?;
                if c.n_qubits != n_qubits {
                    return Err(Failure::input(format!(
                        "ansatz acts on {} qubits but the Hamiltonian has {n_qubits}",
                        c.n_qubits
                    )));
                }
                (route_to_nearest_neighbor(&c), vec![0u8; n_qubits])
            };
            Ok(Problem { h, circuit, bits })
        } else {
            let path = self.pauli.as_ref().expect("checked");
            let h = parse_pauli_text(&read(path)?)?;
            if self.ansatz == "uccsd" {
                return Err(Failure::input(
                    "uccsd needs electron counts; use --fcidump or pass a circuit file as --ansatz",
                ));
            }
            let c = parse_circuit_text(&read(Path::new(&self.ansatz))?)?;
            if c.n_qubits != h.n_qubits {
                return Err(Failure::input(format!(
                    "ansatz acts on {} qubits but the Hamiltonian has {}",
                    c.n_qubits, h.n_qubits
                )));
            }
            let bits = vec![0u8; h.n_qubits];
            Ok(Problem { h, circuit: route_to_nearest_neighbor(&c), bits })
        }
    }

    fn initial_params(&self, n_slots: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n_slots).map(|_| rng.gen_range(-0.05..0.05)).collect()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn cmd_ham_build(fcidump: &Path, out: &Path) -> Result<(), Failure> {
    let mi = parse_fcidump(&read(fcidump)?)?;
    let n_qubits = 2 * mi.n_orbitals;
    let op = build_fermionic_hamiltonian(&mi);
    let h = jordan_wigner(&op, n_qubits)?;
    if h.terms.is_empty() {
        return Err(Failure::input("FCIDUMP produced an empty Hamiltonian"));
    }
    let path = write_out(out, "hamiltonian.pauli", &serialize_pauli_text(&h))?;
    println!(
        "wrote {} (N = {}, strings = {})",
        path.display(),
        h.n_qubits,
        h.n_strings()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunRecord<'a> {
    energy: f64,
    reference: Option<f64>,
    error_vs_reference: Option<f64>,
    epochs: usize,
    status: dmps::optim::StopReason,
    n_qubits: usize,
    n_strings: usize,
    n_slots: usize,
    wall_time_s: f64,
    config_hash: String,
    config: &'a RunArgs,
}

fn cmd_vqe_run(args: &RunArgs) -> Result<(), Failure> {
    args.check()?;
    let start = Instant::now();
    let p = args.load_problem()?;
    let settings = args.settings();
    let init = args.initial_params(p.circuit.n_slots);

    let eg = |x: &[f64]| {
        let rep = grad_total(&p.circuit, x, &p.h, args.group_size, &p.bits, settings, args.workers)?;
        Ok((rep.energy, rep.grads))
    };
    let mut cfg = OptimizerConfig::new(match args.optimizer {
        OptChoice::Gd => Method::Gd,
        OptChoice::Adam => Method::Adam,
        OptChoice::Bfgs => Method::Bfgs,
        OptChoice::NelderMead => Method::GradientFree,
    });
    cfg.learning_rate = args.lr;
    cfg.max_iter = args.max_iter;
    cfg.seed = args.seed;
    let (params, traj) = if args.optimizer == OptChoice::NelderMead {
        gradient_free_baseline(|x: &[f64]| energy(&p.circuit, x, &p.h, &p.bits, settings), &init, &cfg)?
    } else {
        minimize(eg, &init, &cfg)?
    };

    let e_final = energy(&p.circuit, &params, &p.h, &p.bits, settings)?;
    let reference = if p.h.n_qubits <= 16 {
        Some(exact_ground_energy(&p.h)?)
    } else {
        None
    };
    let record = RunRecord {
        energy: e_final,
        reference,
        error_vs_reference: reference.map(|r| e_final - r),
        epochs: traj.records.len(),
        status: traj.status,
        n_qubits: p.h.n_qubits,
        n_strings: p.h.n_strings(),
        n_slots: p.circuit.n_slots,
        wall_time_s: start.elapsed().as_secs_f64(),
        config_hash: args.config_hash(),
        config: args,
    };
    write_out(&args.out, "trajectory.csv", &traj.to_csv())?;
    let json = serde_json::to_string_pretty(&record).expect("record serialization");
    write_out(&args.out, "run.json", &json)?;
    match record.error_vs_reference {
        Some(err) => println!(
            "E = {e_final:.10}, reference = {:.10}, error = {err:.3e} ({} epochs)",
            record.reference.unwrap(),
            record.epochs
        ),
        None => println!("E = {e_final:.10} ({} epochs)", record.epochs),
    }
    Ok(())
}

#[derive(Serialize)]
struct GradCheckReport<'a> {
    mre_bp_vs_fd: f64,
    max_abs_bp_vs_psr: f64,
    /// (D, mean relative error vs the full-bond-dimension gradient)
    bond_dim_sweep: Vec<(usize, f64)>,
    /// (group size, mean relative error at the configured bond dimension)
    group_size_sweep: Vec<(usize, f64)>,
    config_hash: String,
    config: &'a RunArgs,
}

fn cmd_grad_check(args: &RunArgs) -> Result<(), Failure> {
    args.check()?;
    let p = args.load_problem()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let params: Vec<f64> = (0..p.circuit.n_slots)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    if params.is_empty() {
        return Err(Failure::input("grad check needs a parametric ansatz"));
    }

    // the cross-validation itself runs at the configured settings
    let settings = args.settings();
    let bp = grad_total(&p.circuit, &params, &p.h, args.group_size, &p.bits, settings, args.workers)?;
    let fd = grad_finite_difference(&p.circuit, &params, &p.h, &p.bits, settings, 1e-5)?;
    let psr = grad_psr(&p.circuit, &params, &p.h, &p.bits, settings)?;
    let mre_bp_vs_fd = mean_relative_error(&bp.grads, &fd)?;
    let max_abs_bp_vs_psr = bp
        .grads
        .iter()
        .zip(&psr)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // R(D): doubling sweep up to the configured bond dimension, measured
    // against the gradient at that top dimension
    let reference =
        grad_total(&p.circuit, &params, &p.h, args.group_size, &p.bits, MpsSettings::new(args.bond_dim, 0.0), args.workers)?;
    let mut bond_dim_sweep = Vec::new();
    let mut d = 2;
    while d < args.bond_dim {
        let g = grad_total(&p.circuit, &params, &p.h, args.group_size, &p.bits, MpsSettings::new(d, 0.0), args.workers)?;
        bond_dim_sweep.push((d, mean_relative_error(&g.grads, &reference.grads)?));
        d *= 2;
    }
    bond_dim_sweep.push((args.bond_dim, 0.0));

    // R vs group size at the configured bond dimension
    let mut group_size_sweep = Vec::new();
    let mut gs = 1;
    while gs <= p.h.n_strings() {
        let g = grad_total(&p.circuit, &params, &p.h, gs, &p.bits, settings, args.workers)?;
        group_size_sweep.push((gs, mean_relative_error(&g.grads, &reference.grads)?));
        gs *= 2;
    }

    let report = GradCheckReport {
        mre_bp_vs_fd,
        max_abs_bp_vs_psr,
        bond_dim_sweep,
        group_size_sweep,
        config_hash: args.config_hash(),
        config: args,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    write_out(&args.out, "grad_check.json", &json)?;
    println!(
        "MRE(BP, FD) = {mre_bp_vs_fd:.3e}, max |BP - PSR| = {max_abs_bp_vs_psr:.3e}"
    );
    for (d, r) in &report.bond_dim_sweep {
        println!("D = {d:4}: R = {r:.3e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    m: usize,
    t_bp_s: f64,
    t_forward_s: f64,
    t_psr_estimate_s: f64,
    speedup: f64,
}

fn cmd_bench(args: &RunArgs) -> Result<(), Failure> {
    args.check()?;
    let p = args.load_problem()?;
    let settings = args.settings();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let params: Vec<f64> = (0..p.circuit.n_slots)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let m_full = p.circuit.n_parametric_gates();
    if m_full == 0 {
        return Err(Failure::input("bench needs a parametric ansatz"));
    }

    // Shrink the parameter count without touching the gate count by freezing
    // trailing slots; t_BP should stay flat while the estimated PSR cost
    // (forward time x 2M) grows linearly.
    let mut rows = Vec::new();
    for denom in [4usize, 2, 1] {
        let keep = (p.circuit.n_slots / denom).max(1);
        let (variant, vparams) = freeze_tail(&p.circuit, &params, keep);
        let m = variant.n_parametric_gates();
        let mut t_bp = f64::INFINITY;
        let mut t_fwd = f64::INFINITY;
        for _ in 0..3 {
            let rep = grad_total(&variant, &vparams, &p.h, args.group_size, &p.bits, settings, args.workers)?;
            t_bp = t_bp.min(rep.wall_time_s);
            let start = Instant::now();
            energy(&variant, &vparams, &p.h, &p.bits, settings)?;
            t_fwd = t_fwd.min(start.elapsed().as_secs_f64());
        }
        let t_psr = t_fwd * 2.0 * m as f64;
        rows.push(BenchRow { m, t_bp_s: t_bp, t_forward_s: t_fwd, t_psr_estimate_s: t_psr, speedup: t_psr / t_bp });
    }
    rows.dedup_by_key(|r| r.m);

    let mut csv = String::from("m,t_bp_s,t_forward_s,t_psr_estimate_s,speedup\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.3}\n",
            r.m, r.t_bp_s, r.t_forward_s, r.t_psr_estimate_s, r.speedup
        ));
    }
    write_out(&args.out, "bench.csv", &csv)?;
    let json = serde_json::to_string_pretty(&rows).expect("bench serialization");
    write_out(&args.out, "bench.json", &json)?;
    print!("{csv}");
    Ok(())
}

/// Keep the first `keep` slots parametric and freeze the rest at their
/// current values; gate count and unitaries are unchanged.
fn freeze_tail(c: &ParametricCircuit, params: &[f64], keep: usize) -> (ParametricCircuit, Vec<f64>) {
    let mut out = ParametricCircuit::new(c.n_qubits, keep.min(c.n_slots));
    for g in &c.gates {
        match g.param() {
            Some(Param::Slot { slot, scale }) if *slot >= keep => {
                let angle = scale * params[*slot];
                out.push(g.with_fixed_angle(angle).expect("rotation gate"));
            }
            _ => out.push(g.clone()),
        }
    }
    (out, params[..keep.min(c.n_slots)].to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Ham { cmd: HamCmd::Build { fcidump, out } } => cmd_ham_build(fcidump, out),
        Cmd::Vqe { cmd: VqeCmd::Run(args) } => cmd_vqe_run(args),
        Cmd::Grad { cmd: GradCmd::Check(args) } => cmd_grad_check(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let payload = serde_json::json!({
                "error": { "code": f.code, "message": f.message }
            });
            eprintln!("{payload}");
            ExitCode::from(f.code)
        }
    }
}

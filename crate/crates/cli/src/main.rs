//! `ndsense` command-line interface: scene ingestion, bound computation with
//! an independent simulation cross-check, verification suites, figure-data
//! sweeps, and constrained pmf optimization.
//!
//! Exit codes: 0 on success, 1 on a verification or internal-consistency
//! failure, 2 on usage or input errors.

mod builtins;

use clap::{Args, Parser, Subcommand};
use ndsense::fmt::sig12;
use ndsense::fock::{mean_energy, PhotonPmf};
use ndsense::gram::{nds_bound_binary, sub_ensembles, write_sub_ensembles_csv};
use ndsense::optimize::{grid_minimize, local_refine, EnergyConstraint};
use ndsense::oracle::{make_nds_state, oracle_min_error};
use ndsense::phase::write_triangle_csv;
use ndsense::scene::SceneFile;
use ndsense::verify::{run_all, VerifyConfig};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "ndsense",
    version,
    about = "Exact minimum-error bounds for lossy pixelated image sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// NDS bound for a pmf on a binary scene, cross-checked against the
    /// Fock-space simulation, with the per-leak sub-ensemble table.
    Bound(BoundArgs),
    /// CSV of the 0-vs-pi example surfaces (NDS closed form, signal-only,
    /// difference) over the probability triangle.
    SweepTriangle(SweepArgs),
    /// Run the seeded randomized verification suites.
    Verify(VerifyArgs),
    /// Minimize the NDS bound over photon pmfs under energy constraints.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// Path to a scene JSON file, or a built-in name: "phase01pi"
    /// (0-vs-pi phase discrimination at --eta) or "reading"
    /// (transmittance discrimination between --eta and --eta2).
    #[arg(long)]
    scene: String,
    /// Transmittance parameter for the built-in scenes.
    #[arg(long, default_value_t = 0.6)]
    eta: f64,
    /// Second transmittance for the "reading" built-in.
    #[arg(long, default_value_t = 0.3)]
    eta2: f64,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Photon pmf: inline JSON (`[{"pattern":[1],"p":0.5},...]`) or a path
    /// to a JSON file.
    #[arg(long)]
    pmf: String,
    /// Write the sub-ensemble table here (default: stdout report only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format for --out.
    #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
    format: String,
    /// Drop table rows with leak weight below this threshold; the cut is
    /// recorded in the output. The bound itself is always exact.
    #[arg(long)]
    prune: Option<f64>,
    /// Cross-check tolerance between the bound and the simulation.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Transmittance of the 0-vs-pi scene.
    #[arg(long, default_value_t = 0.6)]
    eta: f64,
    /// Lattice step over the triangle; must divide 1.
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for every randomized suite.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Trials per suite.
    #[arg(long, default_value_t = 100)]
    trials: u32,
    /// Override each suite's default comparison tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Cap on the total photon number of any support pattern.
    #[arg(long)]
    peak: Option<u32>,
    /// Per-mode photon caps, comma separated (e.g. "2,1").
    #[arg(long, value_delimiter = ',')]
    per_mode_peak: Option<Vec<u32>>,
    /// Cap on the mean signal energy (needs a peak cap as well).
    #[arg(long)]
    mean_energy: Option<f64>,
    /// Simplex lattice step; must divide 1.
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    /// Output JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Bad flags, unreadable files, invalid scenes or pmfs: exit 2.
    Usage(String),
    /// A computed consistency check failed: exit 1.
    Internal(String),
}

impl From<ndsense::Error> for Failure {
    fn from(err: ndsense::Error) -> Self {
        Failure::Usage(err.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::SweepTriangle(args) => cmd_sweep_triangle(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Optimize(args) => cmd_optimize(args),
    };
    match outcome {
        Ok(()) => {}
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}

fn load_pmf(arg: &str) -> Result<PhotonPmf, Failure> {
    let json = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| Failure::Usage(format!("cannot read pmf file {arg}: {e}")))?
    };
    PhotonPmf::from_json(&json).map_err(|e| Failure::Usage(format!("invalid pmf: {e}")))
}

fn binary_error_scene(args: &SceneArgs) -> Result<SceneFile, Failure> {
    let file = builtins::resolve_scene(args)?;
    if file.scene.hypothesis_count() != 2 {
        return Err(Failure::Usage(format!(
            "this command needs a binary scene; got {} images",
            file.scene.hypothesis_count()
        )));
    }
    if !file.effective_cost().is_error_probability() {
        return Err(Failure::Usage(
            "this command supports only the error-probability cost".into(),
        ));
    }
    Ok(file)
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Internal(format!("stdout: {e}"))),
    }
}

fn cmd_bound(args: BoundArgs) -> CmdResult {
    let file = binary_error_scene(&args.scene)?;
    let scene = &file.scene;
    let pmf = load_pmf(&args.pmf)?;

    let bound = nds_bound_binary(scene, &pmf)?;
    let nds = make_nds_state(scene.layout(), &pmf)?;
    let simulated = oracle_min_error(&nds, scene)?;
    let difference = (bound - simulated).abs();

    println!("nds_bound_binary      = {}", sig12(bound));
    println!("oracle (NDS state)    = {}", sig12(simulated));
    println!("difference            = {}", sig12(difference));

    let subs = sub_ensembles(scene, &pmf)?;
    let lambda_total: f64 = subs.iter().map(|s| s.lambda).sum();
    println!();
    println!("l,lambda,pi_1,pi_2,overlap_abs");
    for sub in &subs {
        if let Some(eps) = args.prune {
            if sub.lambda < eps {
                continue;
            }
        }
        println!(
            "{},{},{},{},{}",
            sub.leak.render(),
            sig12(sub.lambda),
            sig12(sub.cond_priors[0]),
            sig12(sub.cond_priors[1]),
            sig12(sub.normalized_overlap(0, 1).norm()),
        );
    }
    if let Some(eps) = args.prune {
        println!("# pruned rows with lambda < {}", sig12(eps));
    }
    println!("# sum lambda = {}", sig12(lambda_total));

    if let Some(out) = &args.out {
        let bytes = match args.format.as_str() {
            "csv" => {
                let mut buf = Vec::new();
                write_sub_ensembles_csv(&mut buf, scene, &pmf, args.prune)?;
                buf
            }
            _ => {
                let value = serde_json::json!({
                    "bound": bound,
                    "oracle_cross_check": simulated,
                    "difference": difference,
                    "pruned_below": args.prune,
                    "sub_ensembles": subs
                        .iter()
                        .filter(|s| args.prune.is_none_or(|eps| s.lambda >= eps))
                        .map(|s| serde_json::json!({
                            "l": s.leak.counts(),
                            "lambda": s.lambda,
                            "cond_priors": s.cond_priors,
                            "overlap_abs": s.normalized_overlap(0, 1).norm(),
                            "gram": ndsense::decision::matrix_to_json(&s.gram),
                        }))
                        .collect::<Vec<_>>(),
                });
                let mut bytes = serde_json::to_vec_pretty(&value).expect("report serializes");
                bytes.push(b'\n');
                bytes
            }
        };
        write_output(&args.out, &bytes)?;
        println!("# wrote {}", out.display());
    }

    if difference > args.tol {
        return Err(Failure::Internal(format!(
            "cross-check failed: |bound - oracle| = {} > {}",
            sig12(difference),
            sig12(args.tol)
        )));
    }
    println!("cross-check OK (tolerance {})", sig12(args.tol));
    Ok(())
}

fn cmd_sweep_triangle(args: SweepArgs) -> CmdResult {
    let mut buf = Vec::new();
    write_triangle_csv(&mut buf, args.eta, args.grid_step)?;
    write_output(&args.out, &buf)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let cfg = VerifyConfig {
        seed: args.seed,
        trials: args.trials,
        tol: args.tol,
    };
    let reports = run_all(&cfg);
    let mut all_passed = true;
    for report in &reports {
        let passed = report.trials - report.failures.len() as u32;
        println!(
            "suite {:<24} {:>4}/{} pass{}",
            report.name,
            passed,
            report.trials,
            if report.passed() { "" } else { "  FAILED" }
        );
        all_passed &= report.passed();
    }
    if all_passed {
        return Ok(());
    }
    for report in &reports {
        if let Some(first) = report.failures.first() {
            eprintln!(
                "first counterexample in {} (trial {}): {}",
                report.name, first.trial, first.description
            );
            eprintln!(
                "{}",
                serde_json::to_string_pretty(first).expect("counterexample serializes")
            );
            break;
        }
    }
    Err(Failure::Internal("verification suites failed".into()))
}

fn cmd_optimize(args: OptimizeArgs) -> CmdResult {
    let file = binary_error_scene(&args.scene)?;
    let scene = &file.scene;
    let constraint = EnergyConstraint {
        mean_at_most: args.mean_energy,
        peak_at_most: args.peak,
        per_mode_peak: args.per_mode_peak.clone(),
    };
    if constraint.peak_at_most.is_none() && constraint.per_mode_peak.is_none() {
        return Err(Failure::Usage(
            "a mean-energy cap alone does not bound the support; add --peak or --per-mode-peak"
                .into(),
        ));
    }

    let started = Instant::now();
    let grid = grid_minimize(scene, &constraint, args.grid_step)?;
    let (refined_pmf, refined_cost) = local_refine(scene, &constraint, &grid.best_pmf)?;
    let wall_time_ms = started.elapsed().as_millis() as u64;

    let pmf_json = |pmf: &PhotonPmf| serde_json::to_value(pmf).expect("pmf serializes");
    let value = serde_json::json!({
        "constraint": constraint,
        "grid_step": args.grid_step,
        "best": {
            "pmf": pmf_json(&refined_pmf),
            "cost": refined_cost,
            "mean_energy": mean_energy(&refined_pmf),
        },
        "grid_best": {
            "pmf": pmf_json(&grid.best_pmf),
            "cost": grid.best_cost,
        },
        "ties": grid
            .ties
            .iter()
            .map(|(pmf, cost)| serde_json::json!({"pmf": pmf_json(pmf), "cost": cost}))
            .collect::<Vec<_>>(),
        "evaluations": grid.evaluations,
        "wall_time_ms": wall_time_ms,
    });
    let mut bytes = serde_json::to_vec_pretty(&value).expect("results serialize");
    bytes.push(b'\n');
    write_output(&args.out, &bytes)
}

//! `hppsim`: generate Hadamard promise problem instances, synthesize gates,
//! run the solvers and sweep their query counts.
//!
//! Results go to stdout (or `--out`) as JSON or CSV; diagnostics go to stderr.

mod failure;
mod solvers;
mod sweep;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hppsim_core::formats::{GatesDoc, InstanceDoc, ReportDoc};
use hppsim_core::hpp::{
    build_from_tree, census, reference_gates, synthesize_gates, verify_promise_with_tol, CompositionTree,
    GateAssignment, HppInstance, SynthOptions, Synthesis, TreePath,
};
use serde::Serialize;

use failure::Failure;
use solvers::SolverChoice;
use sweep::{Family, CSV_HEADER};

const HARD_MAX_N: usize = 20;
const TOL_RANGE: (f64, f64) = (1e-12, 1e-6);

#[derive(Parser)]
#[command(name = "hppsim", version, about = "Exact simulator for Hadamard promise problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instance JSON for a composition tree.
    Gen {
        #[arg(long)]
        tree: String,
        #[command(flatten)]
        common: Common,
    },
    /// Write a gates JSON for a tree and label.
    Gates {
        #[arg(long)]
        tree: String,
        #[command(flatten)]
        label: LabelArgs,
        /// `paper` for the tabulated rows, `synth` for synthesized gates.
        #[arg(long, value_enum, default_value = "synth")]
        source: GateSource,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the promise, run the solvers and write a report.
    Solve {
        /// Composition tree; alternative to `--instance`.
        #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
        tree: Option<String>,
        /// Instance JSON written by `gen`.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// `paper`, `synth`, or a path to a gates JSON file.
        #[arg(long, default_value = "synth")]
        gates: String,
        #[command(flatten)]
        label: LabelArgs,
        #[arg(long, value_enum, default_value = "all")]
        solver: SolverChoice,
        /// Promise-check tolerance.
        #[arg(long, default_value_t = hppsim_core::TOLERANCE)]
        tol: f64,
        /// Also write the executed causal circuits as JSON.
        #[arg(long)]
        dump_circuit: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Query counts of every solver over a family of trees, as CSV.
    Sweep {
        #[arg(long, value_enum, default_value = "balanced")]
        family: Family,
        #[arg(long, default_value_t = 2)]
        min_n: usize,
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "all")]
        solver: SolverChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Which labels of a tree admit synthesized qubit gates.
    Census {
        #[arg(long)]
        tree: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Largest accepted gate count.
    #[arg(long, default_value_t = 16)]
    max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    /// Comma-separated label, one entry per tree node, e.g. `1,0`.
    #[arg(long, value_delimiter = ',')]
    y: Option<Vec<usize>>,
    /// Seeds the random rotation in synthesized gates.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GateSource {
    Paper,
    Synth,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { tree, common } => {
            let tree = parse_tree(&tree, common.max_n)?;
            let hpp = build_from_tree(&tree)?;
            write_json(&InstanceDoc::from_instance(&hpp), common.out.as_deref())
        }
        Command::Gates {
            tree,
            label,
            source,
            common,
        } => {
            let tree = parse_tree(&tree, common.max_n)?;
            let gates = match source {
                GateSource::Paper => paper_gates(&tree, &label)?,
                GateSource::Synth => synth_gates(&tree, &label)?,
            };
            write_json(&GatesDoc::from_assignment(&gates), common.out.as_deref())
        }
        Command::Solve {
            tree,
            instance,
            gates,
            label,
            solver,
            tol,
            dump_circuit,
            common,
        } => {
            if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
                return Err(Failure::other(format!(
                    "--tol must lie in [{:e}, {:e}]",
                    TOL_RANGE.0, TOL_RANGE.1
                )));
            }
            let (hpp, instance_ref) = load_instance(tree.as_deref(), instance.as_deref(), common.max_n)?;
            let tree = hpp.tree().cloned();
            let gates = load_gates(&gates, tree.as_ref(), &label)?;
            let y = verify_promise_with_tol(&hpp, &gates, tol)?;
            let chosen = solvers::select(solver, &hpp, tree.as_ref())?;
            if let Some(path) = dump_circuit {
                let mut circuits = BTreeMap::new();
                for s in &chosen {
                    if let Some(c) = s.circuit(&hpp, tree.as_ref())? {
                        circuits.insert(s.name(), c);
                    }
                }
                write_json(&circuits, Some(&path))?;
            }
            let mut report = ReportDoc {
                instance_ref,
                solvers: BTreeMap::new(),
            };
            for s in chosen {
                report.solvers.insert(s.name().to_string(), s.run(&hpp, tree.as_ref(), &gates)?);
            }
            write_json(&report, common.out.as_deref())?;
            let wrong: Vec<&str> = report
                .solvers
                .iter()
                .filter(|(_, e)| e.y != y)
                .map(|(name, _)| name.as_str())
                .collect();
            if wrong.is_empty() {
                Ok(())
            } else {
                Err(Failure::other(format!("solvers {wrong:?} disagree with the promise label {y:?}")))
            }
        }
        Command::Sweep {
            family,
            min_n,
            max_n,
            trials,
            seed,
            solver,
            out,
        } => {
            if min_n < 2 || max_n < min_n || max_n > HARD_MAX_N || trials == 0 {
                return Err(Failure::other(format!(
                    "need 2 <= --min-n <= --max-n <= {HARD_MAX_N} and --trials >= 1"
                )));
            }
            let rows = sweep::sweep(family, solver, min_n..=max_n, trials, seed)?;
            let mut csv = String::from(CSV_HEADER);
            csv.push('\n');
            for r in &rows {
                csv.push_str(&r.to_csv());
                csv.push('\n');
            }
            emit(&csv, out.as_deref())?;
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| r.success_rate < 1.0)
                .map(|r| format!("n={} {}", r.n, r.solver.name()))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::other(format!("success rate below 1 for {}", failed.join(", "))))
            }
        }
        Command::Census { tree, common } => {
            let tree = parse_tree(&tree, common.max_n)?;
            write_json(&census(&tree)?, common.out.as_deref())
        }
    }
}

fn check_max_n(max_n: usize) -> Result<(), Failure> {
    if max_n > HARD_MAX_N {
        return Err(Failure::other(format!("--max-n is capped at {HARD_MAX_N}")));
    }
    Ok(())
}

fn check_size(n: usize, max_n: usize) -> Result<(), Failure> {
    check_max_n(max_n)?;
    if n > max_n {
        return Err(Failure::other(format!("instance has {n} gates, above --max-n {max_n}")));
    }
    Ok(())
}

fn parse_tree(spec: &str, max_n: usize) -> Result<CompositionTree, Failure> {
    let tree: CompositionTree = spec.parse()?;
    check_size(tree.leaf_count(), max_n)?;
    Ok(tree)
}

fn load_instance(
    tree: Option<&str>,
    instance: Option<&Path>,
    max_n: usize,
) -> Result<(HppInstance, String), Failure> {
    match (tree, instance) {
        (Some(spec), _) => {
            let tree = parse_tree(spec, max_n)?;
            Ok((build_from_tree(&tree)?, tree.to_string()))
        }
        (None, Some(path)) => {
            let doc: InstanceDoc = serde_json::from_str(&read(path)?)?;
            check_size(doc.n, max_n)?;
            Ok((doc.to_instance()?, path.display().to_string()))
        }
        (None, None) => Err(Failure::other("one of --tree or --instance is required")),
    }
}

fn require_label(label: &LabelArgs) -> Result<&[usize], Failure> {
    label
        .y
        .as_deref()
        .ok_or_else(|| Failure::other("--y is required for paper and synthesized gates"))
}

fn paper_gates(tree: &CompositionTree, label: &LabelArgs) -> Result<GateAssignment, Failure> {
    let y = require_label(label)?;
    reference_gates(tree, y).ok_or_else(|| {
        Failure::other(format!(
            "no tabulated gates for {tree} with y = {y:?}; tabulated trees are pair, pair(slot1:pair) and triple"
        ))
    })
}

fn synth_gates(tree: &CompositionTree, label: &LabelArgs) -> Result<GateAssignment, Failure> {
    let y = require_label(label)?;
    match synthesize_gates(tree, y, SynthOptions { seed: label.seed })? {
        Synthesis::Gates(g) => Ok(g),
        Synthesis::Unsatisfiable { path, label } => Err(Failure::Unsatisfiable(format!(
            "label {label:?} has no qubit gates: blocked at {}",
            TreePath(&path)
        ))),
    }
}

fn load_gates(source: &str, tree: Option<&CompositionTree>, label: &LabelArgs) -> Result<GateAssignment, Failure> {
    let need_tree = || tree.ok_or_else(|| Failure::other(format!("--gates {source} needs an instance with a tree")));
    match source {
        "paper" => paper_gates(need_tree()?, label),
        "synth" => synth_gates(need_tree()?, label),
        path => {
            let doc: GatesDoc = serde_json::from_str(&read(Path::new(path))?)?;
            Ok(doc.to_assignment()?)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::other(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::other(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(&text, out)
}

use clap::ValueEnum;
use hppsim_core::causal::query_bound;
use hppsim_core::hpp::{build_from_tree, synthesize_gates, CompositionTree, NodeKind, SynthOptions, Synthesis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::failure::Failure;
use crate::solvers::{select, Solver, SolverChoice, ALL};

pub const CSV_HEADER: &str = "n,solver,mean_queries,bound_2n_minus_1,bound_n2,bound_cnlogn,success_rate";

const LABEL_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Balanced binary trees of `pair` nodes.
    Balanced,
    /// Random trees of `pair` nodes.
    RandomPair,
    /// Random trees mixing `pair` and `triple` nodes.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n: usize,
    pub solver: Solver,
    pub mean_queries: f64,
    pub bound_2n_minus_1: f64,
    pub bound_n2: f64,
    pub bound_cnlogn: f64,
    pub success_rate: f64,
}

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.solver.name(),
            fmt_g12(self.mean_queries),
            fmt_g12(self.bound_2n_minus_1),
            fmt_g12(self.bound_n2),
            fmt_g12(self.bound_cnlogn),
            fmt_g12(self.success_rate)
        )
    }
}

/// `printf("%.12g")`.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..P).contains(&exp) {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (P - 1 - exp) as usize, x))
    }
}

struct Cell {
    n: usize,
    bound: f64,
    results: Vec<(Solver, usize, bool)>,
}

fn family_tree(family: Family, n: usize, rng: &mut ChaCha8Rng) -> Result<CompositionTree, Failure> {
    Ok(match family {
        Family::Balanced => CompositionTree::balanced_pairs(n)?,
        Family::RandomPair => CompositionTree::random(n, &[NodeKind::Pair], rng)?,
        Family::Random => CompositionTree::random(n, &[NodeKind::Pair, NodeKind::Triple], rng)?,
    })
}

fn run_cell(family: Family, choice: SolverChoice, n: usize, seed: u64) -> Result<Cell, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = family_tree(family, n, &mut rng)?;
    let hpp = build_from_tree(&tree)?;
    let shape = tree.label_shape();
    let (y, gates) = (0..LABEL_ATTEMPTS)
        .find_map(|_| {
            let y: Vec<usize> = shape.iter().map(|&c| rng.random_range(0..c)).collect();
            let opts = SynthOptions { seed: Some(rng.random()) };
            match synthesize_gates(&tree, &y, opts) {
                Ok(Synthesis::Gates(g)) => Some(Ok((y, g))),
                Ok(Synthesis::Unsatisfiable { .. }) => None,
                Err(e) => Some(Err(Failure::from(e))),
            }
        })
        .ok_or_else(|| Failure::Unsatisfiable(format!("no satisfiable label found for {tree}")))??;
    let solvers = match choice {
        SolverChoice::All => select(choice, &hpp, Some(&tree))?,
        _ => select(choice, &hpp, Some(&tree)).unwrap_or_default(),
    };
    let results = solvers
        .into_iter()
        .map(|s| match s.run(&hpp, Some(&tree), &gates) {
            Ok(entry) => (s, entry.total_queries(), entry.y == y),
            Err(e) => {
                eprintln!("n={n} {}: {e}", s.name());
                (s, 0, false)
            }
        })
        .collect();
    Ok(Cell {
        n,
        bound: query_bound(&tree),
        results,
    })
}

/// One row per `(n, solver)` that ran, averaging over `trials` cells.
pub fn sweep(
    family: Family,
    choice: SolverChoice,
    ns: std::ops::RangeInclusive<usize>,
    trials: usize,
    seed: u64,
) -> Result<Vec<Row>, Failure> {
    let jobs: Vec<(usize, usize)> = ns.clone().flat_map(|n| (0..trials).map(move |t| (n, t))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, t)| {
            let cell_seed = seed ^ ((n as u64) << 32 | t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            run_cell(family, choice, n, cell_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for n in ns {
        let here: Vec<&Cell> = cells.iter().filter(|c| c.n == n).collect();
        let bound = here.iter().map(|c| c.bound).sum::<f64>() / here.len().max(1) as f64;
        for solver in ALL {
            let runs: Vec<(usize, bool)> = here
                .iter()
                .flat_map(|c| c.results.iter().filter(|r| r.0 == solver).map(|r| (r.1, r.2)))
                .collect();
            if runs.is_empty() {
                continue;
            }
            let count = runs.len() as f64;
            rows.push(Row {
                n,
                solver,
                mean_queries: runs.iter().map(|r| r.0 as f64).sum::<f64>() / count,
                bound_2n_minus_1: (2 * n - 1) as f64,
                bound_n2: (n * n) as f64,
                bound_cnlogn: bound,
                success_rate: runs.iter().filter(|r| r.1).count() as f64 / count,
            });
        }
    }
    Ok(rows)
}

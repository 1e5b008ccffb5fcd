use std::time::Instant;

use clap::ValueEnum;
use hppsim_core::causal::{
    build_circuit_fig3, build_circuit_fig4, build_recursive_circuit, build_sim_switch_circuit, recursive_solve,
    solve_fig3, solve_fig4, solve_sim_switch, table_two_tree, CausalCircuit,
};
use hppsim_core::formats::SolverEntry;
use hppsim_core::hpp::{build_from_tree, triple_hpp, CompositionTree, GateAssignment, HppInstance};
use hppsim_core::switch::switch_solve;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Switch,
    Fig3,
    Fig4,
    #[value(name = "sim-n2")]
    SimN2,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Switch,
    Fig3,
    Fig4,
    #[value(name = "sim-n2")]
    SimN2,
    Recursive,
    All,
}

pub const ALL: [Solver; 5] = [Solver::Switch, Solver::Fig3, Solver::Fig4, Solver::SimN2, Solver::Recursive];

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Switch => "switch",
            Solver::Fig3 => "fig3",
            Solver::Fig4 => "fig4",
            Solver::SimN2 => "sim-n2",
            Solver::Recursive => "recursive",
        }
    }

    /// `Err` explains why this solver cannot run on the instance.
    pub fn check(self, hpp: &HppInstance, tree: Option<&CompositionTree>) -> Result<(), String> {
        let same = |other: &HppInstance| other.perms() == hpp.perms() && other.signs() == hpp.signs();
        match self {
            Solver::Switch => Ok(()),
            Solver::Fig3 => build_from_tree(&table_two_tree())
                .ok()
                .filter(|t| same(t))
                .map(|_| ())
                .ok_or_else(|| "fig3 only solves the pair(slot1:pair) instance".into()),
            Solver::Fig4 => {
                if same(&triple_hpp()) {
                    Ok(())
                } else {
                    Err("fig4 only solves the triple instance".into())
                }
            }
            Solver::SimN2 => {
                if (0..hpp.n_x()).all(|x| hpp.signs().entry(x, 0) == 1) {
                    Ok(())
                } else {
                    Err("sim-n2 needs s(x, 0) = +1 for every x".into())
                }
            }
            Solver::Recursive => tree.map(|_| ()).ok_or_else(|| "recursive needs a composition tree".into()),
        }
    }

    pub fn run(
        self,
        hpp: &HppInstance,
        tree: Option<&CompositionTree>,
        gates: &GateAssignment,
    ) -> Result<SolverEntry, Failure> {
        self.check(hpp, tree).map_err(Failure::Other)?;
        let start = Instant::now();
        let elapsed = || start.elapsed().as_secs_f64() * 1e3;
        Ok(match self {
            Solver::Switch => {
                let r = switch_solve(hpp, gates, None)?;
                SolverEntry::from_switch(&r, elapsed())
            }
            Solver::Fig3 => SolverEntry::from_causal(&solve_fig3(gates)?, elapsed()),
            Solver::Fig4 => SolverEntry::from_causal(&solve_fig4(gates)?, elapsed()),
            Solver::SimN2 => SolverEntry::from_causal(&solve_sim_switch(hpp, gates)?, elapsed()),
            Solver::Recursive => {
                let tree = tree.expect("checked above");
                SolverEntry::from_causal(&recursive_solve(tree, gates)?, elapsed())
            }
        })
    }

    /// The executed circuit; for the recursive solver this is the root stage.
    pub fn circuit(self, hpp: &HppInstance, tree: Option<&CompositionTree>) -> Result<Option<CausalCircuit>, Failure> {
        Ok(match self {
            Solver::Switch => None,
            Solver::Fig3 => Some(build_circuit_fig3()?),
            Solver::Fig4 => Some(build_circuit_fig4()?),
            Solver::SimN2 => Some(build_sim_switch_circuit(hpp)?),
            Solver::Recursive => match tree {
                Some(t) => Some(build_recursive_circuit(t)?.circuit),
                None => None,
            },
        })
    }
}

/// Solvers to run; an explicit choice that cannot run is an error, `all`
/// silently skips inapplicable ones.
pub fn select(
    choice: SolverChoice,
    hpp: &HppInstance,
    tree: Option<&CompositionTree>,
) -> Result<Vec<Solver>, Failure> {
    let single = match choice {
        SolverChoice::All => {
            return Ok(ALL.into_iter().filter(|s| s.check(hpp, tree).is_ok()).collect());
        }
        SolverChoice::Switch => Solver::Switch,
        SolverChoice::Fig3 => Solver::Fig3,
        SolverChoice::Fig4 => Solver::Fig4,
        SolverChoice::SimN2 => Solver::SimN2,
        SolverChoice::Recursive => Solver::Recursive,
    };
    single.check(hpp, tree).map_err(Failure::Other)?;
    Ok(vec![single])
}

//! The minimal three-gate circuits and the n²-query switch simulation.

use super::{run_circuit, CausalCircuit, CausalError, CausalReport, CircuitBuilder, ProductState, RunResult};
use crate::hadamard::{sylvester, SignMatrix};
use crate::hpp::{CompositionTree, GateAssignment, HppInstance, Permutation};
use crate::qmat::product_of_permutation;
use crate::C64;

/// `pair(slot1:pair)`, the three-gate instance solved by [`build_circuit_fig3`].
pub fn table_two_tree() -> CompositionTree {
    CompositionTree::pair()
        .with_child(1, CompositionTree::pair())
        .expect("slot 1 exists")
}

fn one_qubit_signs() -> SignMatrix {
    sylvester(1).expect("order 1")
}

/// Two control qubits: `c1` decides where `U_0` lands, `c2` where `U_1` lands.
pub fn build_circuit_fig3() -> Result<CausalCircuit, CausalError> {
    let mut b = CircuitBuilder::new(3);
    let c1 = b.control("c1", 2)?;
    let c2 = b.control("c2", 2)?;
    let t = b.data("target", 2)?;
    let a0 = b.data("a0", 2)?;
    let a1 = b.data("a1", 2)?;
    let h = one_qubit_signs();
    b.hadamard(c1, h.clone()).hadamard(c2, h.clone());
    b.controlled_swap(c1, &[1], t, a0).black_box(0, t).controlled_swap(c1, &[1], t, a0);
    b.controlled_swap(c2, &[1], t, a1).black_box(1, t).controlled_swap(c2, &[1], t, a1);
    b.black_box(2, t);
    b.controlled_swap(c2, &[0], t, a1).black_box(1, t).controlled_swap(c2, &[0], t, a1);
    b.controlled_swap(c1, &[0], t, a0).black_box(0, t).controlled_swap(c1, &[0], t, a0);
    b.inverse_hadamard(c1, h.clone()).inverse_hadamard(c2, h);
    b.measure(c1).measure(c2);
    b.build()
}

/// One control qubit choosing between `U_2 U_1 U_0` and `U_0 U_1 U_2`.
pub fn build_circuit_fig4() -> Result<CausalCircuit, CausalError> {
    let mut b = CircuitBuilder::new(3);
    let c = b.control("c", 2)?;
    let t = b.data("target", 2)?;
    let a0 = b.data("a0", 2)?;
    let a1 = b.data("a1", 2)?;
    let h = one_qubit_signs();
    b.hadamard(c, h.clone());
    b.controlled_swap(c, &[1], t, a0).black_box(0, t).controlled_swap(c, &[1], t, a0);
    b.controlled_swap(c, &[1], t, a1).black_box(1, t).controlled_swap(c, &[1], t, a1);
    b.black_box(2, t);
    b.controlled_swap(c, &[0], t, a1).black_box(1, t).controlled_swap(c, &[0], t, a1);
    b.controlled_swap(c, &[0], t, a0).black_box(0, t).controlled_swap(c, &[0], t, a0);
    b.inverse_hadamard(c, h);
    b.measure(c);
    b.build()
}

/// Emits the n²-query simulation of all `perms` acting on `target`.
///
/// Step `i` swaps the target into auxiliary `a_g` on exactly the control
/// values whose permutation puts gate `g` at position `i`, calls every gate
/// on its auxiliary, and swaps back.
pub(super) fn emit_sim_switch(
    b: &mut CircuitBuilder,
    prefix: &str,
    perms: &[Permutation],
    signs: &SignMatrix,
    gate_ids: &[usize],
    target: usize,
) -> Result<usize, CausalError> {
    if (0..signs.size()).any(|x| signs.entry(x, 0) != 1) {
        return Err(CausalError::UnsupportedSigns);
    }
    let n = gate_ids.len();
    let control = b.control(&format!("{prefix}c"), perms.len())?;
    let auxiliaries = (0..n)
        .map(|g| b.data(&format!("{prefix}a{g}"), 2))
        .collect::<Result<Vec<_>, _>>()?;
    b.hadamard(control, signs.clone());
    for i in 0..n {
        let routes: Vec<Vec<usize>> = (0..n)
            .map(|g| (0..perms.len()).filter(|&x| perms[x][i] == g).collect())
            .collect();
        for (g, values) in routes.iter().enumerate() {
            if !values.is_empty() {
                b.controlled_swap(control, values, target, auxiliaries[g]);
            }
        }
        for (g, &aux) in auxiliaries.iter().enumerate() {
            b.black_box(gate_ids[g], aux);
        }
        for (g, values) in routes.iter().enumerate() {
            if !values.is_empty() {
                b.controlled_swap(control, values, target, auxiliaries[g]);
            }
        }
    }
    b.inverse_hadamard(control, signs.clone());
    b.measure(control);
    Ok(control)
}

/// Registers `c` (dimension `n_x`), `target`, `a0 .. a{n-1}`; `n²` calls.
pub fn build_sim_switch_circuit(hpp: &HppInstance) -> Result<CausalCircuit, CausalError> {
    let mut b = CircuitBuilder::new(hpp.n());
    let target = b.data("target", 2)?;
    let ids: Vec<usize> = (0..hpp.n()).collect();
    emit_sim_switch(&mut b, "", hpp.perms(), hpp.signs(), &ids, target)?;
    b.build()
}

pub(super) fn reference_fidelity(
    run: &RunResult,
    target: usize,
    gates: &GateAssignment,
    order: &[usize],
) -> Result<f64, CausalError> {
    let psi = product_of_permutation(gates.gates(), order)?
        .apply(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
    run.state.wire_fidelity(target, &psi)
}

fn finish(
    circuit: &CausalCircuit,
    gates: &GateAssignment,
    labels: impl Fn(&RunResult) -> Result<Vec<usize>, CausalError>,
    reference: &[usize],
    bound: f64,
) -> Result<CausalReport, CausalError> {
    let run = run_circuit(circuit, gates, &ProductState::zeros(circuit))?;
    let target = circuit.register_index("target").expect("every solver circuit has a target");
    Ok(CausalReport {
        recovered_y: labels(&run)?,
        target_fidelity: reference_fidelity(&run, target, gates, reference)?,
        residual: run.max_residual(),
        ledger: run.ledger,
        bound,
    })
}

/// Solves the `pair(slot1:pair)` instance with the five-call circuit.
pub fn solve_fig3(gates: &GateAssignment) -> Result<CausalReport, CausalError> {
    let circuit = build_circuit_fig3()?;
    finish(
        &circuit,
        gates,
        |run| Ok(vec![run.outcome(0).unwrap_or(0), run.outcome(1).unwrap_or(0)]),
        &[0, 1, 2],
        5.0,
    )
}

/// Solves the three-gate two-permutation instance with one control qubit.
pub fn solve_fig4(gates: &GateAssignment) -> Result<CausalReport, CausalError> {
    let circuit = build_circuit_fig4()?;
    finish(&circuit, gates, |run| Ok(vec![run.outcome(0).unwrap_or(0)]), &[0, 1, 2], 5.0)
}

/// Solves any instance whose sign matrix has an all-`+1` first column by
/// simulating every permutation.
pub fn solve_sim_switch(hpp: &HppInstance, gates: &GateAssignment) -> Result<CausalReport, CausalError> {
    let circuit = build_sim_switch_circuit(hpp)?;
    let control = circuit.register_index("c").expect("declared");
    let n = hpp.n() as f64;
    finish(
        &circuit,
        gates,
        |run| Ok(hpp.decode_label(run.outcome(control).unwrap_or(0))?),
        &hpp.perms()[0],
        n * n,
    )
}

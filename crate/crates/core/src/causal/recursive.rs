//! The recursive `C n log2(n)` causal solver.
//!
//! At a node with blocks `0..k` (one per slot; a plain gate is a block of
//! size 1, a subtree child is a block whose reference product is its
//! `Pi_0`), the largest block `j` is applied once, in the middle. Every
//! other block gets its own auxiliary wire and is called `k - 1` times
//! before and `k - 1` times after block `j`; controlled swaps route the
//! target into the auxiliary of whichever block the node's permutation puts
//! at the current position. Block `j` itself is solved in place by recursing
//! on the same target, and the other subtree blocks are solved by separate
//! runs that share one ledger. Nodes without subtree children fall back to
//! the n²-query simulation.

use super::circuits::{emit_sim_switch, reference_fidelity};
use super::{run_circuit, CausalCircuit, CausalError, CausalReport, CircuitBuilder, ProductState, QueryLedger};
use crate::hpp::{fundamental_hpp, CompositionTree, GateAssignment};

/// Auxiliary wire of a non-middle block at some stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAuxiliary {
    pub register: usize,
    /// Gate indices of the block, in application order.
    pub gates: Vec<usize>,
    /// How often the block's product ends up applied to the auxiliary.
    pub power: usize,
}

/// A subtree block whose labels come from a separate run.
#[derive(Debug, Clone, PartialEq)]
pub struct SideJob {
    pub tree: CompositionTree,
    pub gate_offset: usize,
    pub label_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursivePlan {
    pub circuit: CausalCircuit,
    pub target: usize,
    /// `(label position in tree order, control register)`.
    pub label_registers: Vec<(usize, usize)>,
    pub block_auxiliaries: Vec<BlockAuxiliary>,
    pub side_jobs: Vec<SideJob>,
}

/// `C n log2(n)` with `C = 2 (k_max - 1)`; zero for a single gate.
pub fn query_bound(tree: &CompositionTree) -> f64 {
    let n = tree.leaf_count();
    if n <= 1 {
        return 0.0;
    }
    let c = 2.0 * (tree.max_fundamental_size() as f64 - 1.0);
    c * n as f64 * (n as f64).log2()
}

struct Emitter {
    builder: CircuitBuilder,
    label_registers: Vec<(usize, usize)>,
    block_auxiliaries: Vec<BlockAuxiliary>,
    side_jobs: Vec<SideJob>,
}

impl Emitter {
    fn node(
        &mut self,
        tree: &CompositionTree,
        prefix: &str,
        gate_offset: usize,
        label_offset: usize,
        target: usize,
    ) -> Result<(), CausalError> {
        let base = fundamental_hpp(tree.kind())?;
        if tree.is_fundamental() {
            let ids: Vec<usize> = (gate_offset..gate_offset + base.n()).collect();
            let control = emit_sim_switch(&mut self.builder, prefix, base.perms(), base.signs(), &ids, target)?;
            self.label_registers.push((label_offset, control));
            return Ok(());
        }

        let k = base.n();
        let mut sizes = Vec::with_capacity(k);
        let mut gate_starts = Vec::with_capacity(k);
        let mut label_starts = Vec::with_capacity(k);
        let (mut g, mut l) = (gate_offset, label_offset + 1);
        for child in tree.children() {
            let size = child.as_ref().map_or(1, CompositionTree::leaf_count);
            sizes.push(size);
            gate_starts.push(g);
            label_starts.push(l);
            g += size;
            l += child.as_ref().map_or(0, CompositionTree::node_count);
        }
        let j = (0..k).fold(0, |best, b| if sizes[b] > sizes[best] { b } else { best });
        let block_gates = |b: usize| -> Vec<usize> { (gate_starts[b]..gate_starts[b] + sizes[b]).collect() };

        if (0..base.n_x()).any(|x| base.signs().entry(x, 0) != 1) {
            return Err(CausalError::UnsupportedSigns);
        }
        let b = &mut self.builder;
        let control = b.control(&format!("{prefix}c"), base.n_x())?;
        let mut aux = vec![None; k];
        for (blk, slot) in aux.iter_mut().enumerate() {
            if blk != j {
                *slot = Some(b.data(&format!("{prefix}blk{blk}"), 2)?);
            }
        }
        let positions: Vec<usize> = base
            .perms()
            .iter()
            .map(|p| p.position(j).expect("permutation contains every block"))
            .collect();
        b.hadamard(control, base.signs().clone());

        // blocks before j: step i serves position i
        let before = |x: usize, i: usize| (i < positions[x]).then_some(i);
        // blocks after j: step i serves position pos_j + 1 + i
        let after = |x: usize, i: usize| Some(positions[x] + 1 + i).filter(|&p| p < k);
        for (part, pick) in [(0, &before as &dyn Fn(usize, usize) -> Option<usize>), (1, &after)] {
            if part == 1 {
                let child = tree.children()[j].as_ref().expect("the largest block is a subtree");
                self.node(child, &format!("{prefix}s{j}."), gate_starts[j], label_starts[j], target)?;
            }
            let b = &mut self.builder;
            for i in 0..k - 1 {
                let routes: Vec<(usize, Vec<usize>)> = (0..k)
                    .filter(|&blk| blk != j)
                    .map(|blk| {
                        let values = (0..base.n_x())
                            .filter(|&x| pick(x, i).is_some_and(|p| base.perms()[x][p] == blk))
                            .collect();
                        (blk, values)
                    })
                    .collect();
                for (blk, values) in &routes {
                    if !values.is_empty() {
                        b.controlled_swap(control, values, target, aux[*blk].expect("non-middle block"));
                    }
                }
                for blk in (0..k).filter(|&blk| blk != j) {
                    for gate in block_gates(blk) {
                        b.black_box(gate, aux[blk].expect("non-middle block"));
                    }
                }
                for (blk, values) in &routes {
                    if !values.is_empty() {
                        b.controlled_swap(control, values, target, aux[*blk].expect("non-middle block"));
                    }
                }
            }
        }
        let b = &mut self.builder;
        b.inverse_hadamard(control, base.signs().clone());
        b.measure(control);
        self.label_registers.push((label_offset, control));

        for blk in (0..k).filter(|&blk| blk != j) {
            self.block_auxiliaries.push(BlockAuxiliary {
                register: aux[blk].expect("non-middle block"),
                gates: block_gates(blk),
                power: 2 * (k - 1) - 1,
            });
            if let Some(child) = &tree.children()[blk] {
                self.side_jobs.push(SideJob {
                    tree: child.clone(),
                    gate_offset: gate_starts[blk],
                    label_offset: label_starts[blk],
                });
            }
        }
        Ok(())
    }
}

/// The main circuit for `tree` (labels along the chain of largest blocks)
/// plus the subtrees left for separate runs. Gate and label offsets are
/// relative to `tree`.
pub fn build_recursive_circuit(tree: &CompositionTree) -> Result<RecursivePlan, CausalError> {
    tree.validate()?;
    let mut e = Emitter {
        builder: CircuitBuilder::new(tree.leaf_count()),
        label_registers: Vec::new(),
        block_auxiliaries: Vec::new(),
        side_jobs: Vec::new(),
    };
    let target = e.builder.data("target", 2)?;
    e.node(tree, "", 0, 0, target)?;
    Ok(RecursivePlan {
        circuit: e.builder.build()?,
        target,
        label_registers: e.label_registers,
        block_auxiliaries: e.block_auxiliaries,
        side_jobs: e.side_jobs,
    })
}

struct Outcome {
    target_fidelity: f64,
    residual: f64,
}

fn solve_into(
    tree: &CompositionTree,
    gates: &GateAssignment,
    gate_offset: usize,
    label_offset: usize,
    ledger: &mut QueryLedger,
    labels: &mut [usize],
) -> Result<Outcome, CausalError> {
    let plan = build_recursive_circuit(tree)?;
    let n = tree.leaf_count();
    let local = GateAssignment::new(gates.gates()[gate_offset..gate_offset + n].to_vec())?;
    let run = run_circuit(&plan.circuit, &local, &ProductState::zeros(&plan.circuit))?;
    ledger.absorb(&run.ledger, gate_offset);
    for &(pos, reg) in &plan.label_registers {
        labels[label_offset + pos] = run.outcome(reg).expect("every label register is measured");
    }
    let order: Vec<usize> = (0..n).collect();
    let mut out = Outcome {
        target_fidelity: reference_fidelity(&run, plan.target, &local, &order)?,
        residual: run.max_residual(),
    };
    for job in &plan.side_jobs {
        let sub = solve_into(
            &job.tree,
            gates,
            gate_offset + job.gate_offset,
            label_offset + job.label_offset,
            ledger,
            labels,
        )?;
        out.residual = out.residual.max(sub.residual);
    }
    Ok(out)
}

/// Recovers every sub-label of `tree` with the recursive construction.
pub fn recursive_solve(tree: &CompositionTree, gates: &GateAssignment) -> Result<CausalReport, CausalError> {
    tree.validate()?;
    let n = tree.leaf_count();
    if gates.len() != n {
        return Err(crate::hpp::HppError::GateCount {
            expected: n,
            got: gates.len(),
        }
        .into());
    }
    let mut ledger = QueryLedger::new(n);
    let mut labels = vec![0; tree.node_count()];
    let out = solve_into(tree, gates, 0, 0, &mut ledger, &mut labels)?;
    Ok(CausalReport {
        recovered_y: labels,
        ledger,
        residual: out.residual,
        bound: query_bound(tree),
        target_fidelity: out.target_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpp::{build_from_tree, synthesize_gates, verify_promise, NodeKind, SynthOptions};
    use crate::qmat::{product_of_permutation, Pauli};
    use crate::C64;

    fn synth(tree: &CompositionTree, y: &[usize]) -> Option<GateAssignment> {
        synthesize_gates(tree, y, SynthOptions { seed: Some(5) })
            .unwrap()
            .gates()
            .cloned()
    }

    #[test]
    fn bound_formula() {
        let four = CompositionTree::balanced_pairs(4).unwrap();
        assert_eq!(query_bound(&four), 16.0);
        assert_eq!(query_bound(&CompositionTree::pair()), 4.0);
        let mixed: CompositionTree = "triple(slot0:pair(slot1:pair))".parse().unwrap();
        assert!((query_bound(&mixed) - 4.0 * 5.0 * 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn balanced_counts() {
        for (n, want) in [(2, 4), (3, 6), (4, 12), (8, 32)] {
            let tree = CompositionTree::balanced_pairs(n).unwrap();
            let gates = GateAssignment::new(vec![Pauli::I.gate(); n]).unwrap();
            let r = recursive_solve(&tree, &gates).unwrap();
            assert_eq!(r.ledger.total(), want, "n = {n}");
            assert_eq!(r.recovered_y, vec![0; n - 1]);
            assert!(r.ledger.total() as f64 <= r.bound);
        }
    }

    #[test]
    fn recovers_labels_on_small_trees() {
        let kinds = [NodeKind::Pair, NodeKind::Triple];
        for tree in CompositionTree::enumerate_up_to(5, &kinds) {
            let hpp = build_from_tree(&tree).unwrap();
            let m = tree.node_count();
            for y in 0..1usize << m {
                let labels: Vec<usize> = (0..m).map(|i| (y >> i) & 1).collect();
                let Some(gates) = synth(&tree, &labels) else { continue };
                let r = recursive_solve(&tree, &gates).unwrap();
                assert_eq!(r.recovered_y, verify_promise(&hpp, &gates).unwrap(), "{tree}");
                assert!(r.ledger.total() as f64 <= query_bound(&tree) + 1e-9, "{tree}");
                assert!((r.target_fidelity - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn block_auxiliaries_end_in_powers() {
        let tree: CompositionTree = "triple(slot0:pair,slot2:pair)".parse().unwrap();
        let gates = synth(&tree, &[1, 1, 0]).unwrap();
        let plan = build_recursive_circuit(&tree).unwrap();
        assert_eq!(plan.side_jobs.len(), 1);
        let mut init = ProductState::zeros(&plan.circuit);
        let probe = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        for a in &plan.block_auxiliaries {
            init.set(a.register, probe.clone()).unwrap();
        }
        let run = run_circuit(&plan.circuit, &gates, &init).unwrap();
        for a in &plan.block_auxiliaries {
            assert_eq!(a.power, 3);
            let block = product_of_permutation(gates.gates(), &a.gates).unwrap();
            let mut want = probe.clone();
            for _ in 0..a.power {
                want = block.apply(&want).unwrap();
            }
            let f = run.state.wire_fidelity(a.register, &want).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "fidelity {f}");
        }
    }
}

use hppsim_core::causal::{
    build_circuit_fig3, build_recursive_circuit, build_sim_switch_circuit, query_bound, recursive_solve,
    run_circuit, run_circuit_dense, solve_fig3, solve_fig4, solve_sim_switch, table_two_tree, ProductState,
};
use hppsim_core::hadamard::{kron_sign, sylvester, SignMatrix};
use hppsim_core::hpp::{
    build_from_tree, compose_hpp, decode_label, encode_label, fundamental_hpp, pair_hpp, synthesize_gates,
    triple_hpp, verify_promise, CompositionTree, GateAssignment, NodeKind, SynthOptions, Synthesis,
};
use hppsim_core::qmat::{hadamard_gate, rz, UnitaryGate};
use hppsim_core::switch::{switch_solve, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [NodeKind; 2] = [NodeKind::Pair, NodeKind::Triple];

fn tree_strategy(max_leaves: usize) -> impl Strategy<Value = CompositionTree> {
    (2..=max_leaves, any::<u64>()).prop_map(|(leaves, seed)| {
        CompositionTree::random(leaves, &KINDS, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    })
}

fn synthesize(tree: &CompositionTree, y: &[usize], seed: u64) -> Option<GateAssignment> {
    match synthesize_gates(tree, y, SynthOptions { seed: Some(seed) }).unwrap() {
        Synthesis::Gates(g) => Some(g),
        Synthesis::Unsatisfiable { .. } => None,
    }
}

fn generic_gate(rng: &mut ChaCha8Rng) -> UnitaryGate {
    rz(rng.random_range(0.0..6.3))
        .compose(&hadamard_gate())
        .compose(&rz(rng.random_range(0.0..6.3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_of_sylvester_is_hadamard(a in 0u32..4, b in 0u32..4) {
        let k = kron_sign(&sylvester(a).unwrap(), &sylvester(b).unwrap()).unwrap();
        prop_assert_eq!(k.size(), 1usize << (a + b));
        prop_assert!(k.is_hadamard());
        prop_assert_eq!(&k, &sylvester(a + b).unwrap());
    }

    #[test]
    fn kron_entries_factor(a in 0u32..3, b in 0u32..3, x in 0usize..64, y in 0usize..64) {
        let (s1, s2) = (sylvester(a).unwrap(), sylvester(b).unwrap());
        let k = kron_sign(&s1, &s2).unwrap();
        let (x, y) = (x % k.size(), y % k.size());
        let m = s1.size();
        prop_assert_eq!(k.entry(x, y), s1.entry(x % m, y % m) * s2.entry(x / m, y / m));
    }

    #[test]
    fn labels_round_trip(shape in prop::collection::vec(1usize..5, 1..5), y in 0usize..1000) {
        let total: usize = shape.iter().product();
        let y = y % total;
        let labels = decode_label(&shape, y).unwrap();
        prop_assert_eq!(encode_label(&shape, &labels).unwrap(), y);
        prop_assert!(encode_label(&shape, &shape).is_err());
    }

    #[test]
    fn composition_sizes_multiply(outer in tree_strategy(4), slot in 0usize..3, inner in tree_strategy(4)) {
        let (o, i) = (build_from_tree(&outer).unwrap(), build_from_tree(&inner).unwrap());
        let slot = slot % o.n();
        let c = compose_hpp(&o, slot, &i).unwrap();
        prop_assert_eq!(c.n(), o.n() + i.n() - 1);
        prop_assert_eq!(c.n_x(), o.n_x() * i.n_x());
        prop_assert!(c.signs().is_hadamard());
        let identity: Vec<usize> = (0..c.n()).collect();
        prop_assert_eq!(&*c.perms()[0], identity.as_slice());
    }

    #[test]
    fn solvers_agree(tree in tree_strategy(7), pick in any::<u64>(), seed in any::<u64>()) {
        let hpp = build_from_tree(&tree).unwrap();
        let y = hpp.decode_label((pick % hpp.n_x() as u64) as usize).unwrap();
        let Some(gates) = synthesize(&tree, &y, seed) else { return Ok(()) };
        prop_assert_eq!(verify_promise(&hpp, &gates).unwrap(), y.clone());
        prop_assert_eq!(switch_solve(&hpp, &gates, None).unwrap().recovered_y, y.clone());
        let sim = solve_sim_switch(&hpp, &gates).unwrap();
        prop_assert_eq!(&sim.recovered_y, &y);
        prop_assert_eq!(sim.ledger.total(), hpp.n() * hpp.n());
        let rec = recursive_solve(&tree, &gates).unwrap();
        prop_assert_eq!(&rec.recovered_y, &y);
        prop_assert!(rec.ledger.total() as f64 <= query_bound(&tree) + 1e-9);
        prop_assert!(rec.ledger.total() >= 2 * hpp.n() - 1);
        prop_assert!((rec.target_fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn branched_executor_matches_dense(tree in tree_strategy(4), pick in any::<u64>(), seed in any::<u64>()) {
        let hpp = build_from_tree(&tree).unwrap();
        let y = hpp.decode_label((pick % hpp.n_x() as u64) as usize).unwrap();
        let Some(gates) = synthesize(&tree, &y, seed) else { return Ok(()) };
        let circuit = build_sim_switch_circuit(&hpp).unwrap();
        let run = run_circuit(&circuit, &gates, &ProductState::zeros(&circuit)).unwrap();
        let dims: Vec<usize> = circuit.registers.iter().map(|r| r.dim).collect();
        let (meas, ledger, dense) =
            run_circuit_dense(&circuit, &gates, &StateVector::basis(dims, 0).unwrap()).unwrap();
        prop_assert_eq!(&ledger, &run.ledger);
        prop_assert_eq!(meas[0].value, run.measurements[0].value);
        let got = run.state.to_dense().unwrap();
        let diff = got.amplitudes().iter().zip(dense.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "max amplitude difference {}", diff);
    }
}

#[test]
fn static_ledger_matches_executed_ledger() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let tree = CompositionTree::random(rng.random_range(2..=8), &KINDS, &mut rng).unwrap();
        let hpp = build_from_tree(&tree).unwrap();
        let y = hpp.decode_label(rng.random_range(0..hpp.n_x())).unwrap();
        let Some(gates) = synthesize(&tree, &y, rng.random()) else { continue };
        let sim = build_sim_switch_circuit(&hpp).unwrap();
        let run = run_circuit(&sim, &gates, &ProductState::zeros(&sim)).unwrap();
        assert_eq!(run.ledger, sim.static_ledger());
        let plan = build_recursive_circuit(&tree).unwrap();
        let run = run_circuit(&plan.circuit, &gates, &ProductState::zeros(&plan.circuit)).unwrap();
        assert_eq!(run.ledger, plan.circuit.static_ledger());
    }
}

#[test]
fn fixed_circuits_on_random_synthesized_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let table = table_two_tree();
    let table_hpp = build_from_tree(&table).unwrap();
    let triple: CompositionTree = "triple".parse().unwrap();
    for _ in 0..100 {
        let y = vec![rng.random_range(0..2), rng.random_range(0..2)];
        let gates = synthesize(&table, &y, rng.random()).expect("all rows satisfiable");
        let r = solve_fig3(&gates).unwrap();
        assert_eq!(r.recovered_y, y);
        assert_eq!(r.ledger.counts(), &[2, 2, 1]);
        assert!(r.target_fidelity >= 1.0 - 1e-9);
        assert_eq!(switch_solve(&table_hpp, &gates, None).unwrap().recovered_y, y);

        let y = vec![rng.random_range(0..2)];
        let gates = synthesize(&triple, &y, rng.random()).expect("triples always satisfiable");
        let r = solve_fig4(&gates).unwrap();
        assert_eq!(r.recovered_y, y);
        assert_eq!(r.ledger.total(), 5);
        assert!(r.target_fidelity >= 1.0 - 1e-9);
        assert_eq!(verify_promise(&triple_hpp(), &gates).unwrap(), y);
    }
    assert_eq!(build_circuit_fig3().unwrap().static_ledger().total(), 5);
}

#[test]
fn recursive_matches_verify_on_large_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for leaves in 9..=12 {
        for _ in 0..3 {
            let tree = CompositionTree::random(leaves, &KINDS, &mut rng).unwrap();
            let hpp = build_from_tree(&tree).unwrap();
            loop {
                let y = hpp.decode_label(rng.random_range(0..hpp.n_x())).unwrap();
                let Some(gates) = synthesize(&tree, &y, rng.random()) else { continue };
                let r = recursive_solve(&tree, &gates).unwrap();
                assert_eq!(r.recovered_y, verify_promise(&hpp, &gates).unwrap(), "{tree}");
                assert!(r.ledger.total() as f64 <= query_bound(&tree) + 1e-9, "{tree}");
                break;
            }
        }
    }
}

#[test]
fn promise_violations_are_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let gates = GateAssignment::new(vec![generic_gate(&mut rng), generic_gate(&mut rng)]).unwrap();
    assert!(verify_promise(&pair_hpp(), &gates).is_err());
    assert!(switch_solve(&pair_hpp(), &gates, None).is_err());
    assert!(solve_sim_switch(&pair_hpp(), &gates).is_err());
}

#[test]
fn fundamental_instances_have_sylvester_signs() {
    for kind in KINDS {
        let h = fundamental_hpp(kind).unwrap();
        assert_eq!(h.signs(), &sylvester(1).unwrap());
        assert_eq!(h.n_x(), 2);
    }
    let flipped = SignMatrix::from_rows(vec![vec![1, 1], vec![-1, 1]]).unwrap();
    assert!(flipped.is_hadamard());
    assert!(kron_sign(&flipped, &flipped).unwrap().is_hadamard());
}

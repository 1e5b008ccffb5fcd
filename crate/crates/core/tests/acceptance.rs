//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use hppsim_core::causal::{
    build_recursive_circuit, build_sim_switch_circuit, recursive_solve, run_circuit,
    solve_fig3, solve_fig4, solve_sim_switch, ProductState,
};
use hppsim_core::hadamard::{kron_sign, sylvester, SignMatrix};
use hppsim_core::hpp::{
    build_from_tree, census, pair_hpp, synthesize_gates, triple_hpp, verify_promise, CompositionTree,
    GateAssignment, HppInstance, NodeKind, SynthOptions, Synthesis,
};
use hppsim_core::qmat::{product_of_permutation, ComplexMatrix, Pauli, UnitaryGate};
use hppsim_core::switch::{switch_solve, StateVector};
use hppsim_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gates(list: Vec<ComplexMatrix>) -> GateAssignment {
    GateAssignment::new(list.into_iter().map(|m| UnitaryGate::new(m).unwrap()).collect()).unwrap()
}

fn rot(sign: f64) -> ComplexMatrix {
    (&Pauli::Y.matrix() + &Pauli::Z.matrix().scale(C64::new(sign, 0.0))).scale(C64::new(FRAC_1_SQRT_2, 0.0))
}

fn table_two_rows() -> Vec<(Vec<usize>, GateAssignment)> {
    use Pauli::*;
    vec![
        (vec![0, 0], gates(vec![X.matrix(), X.matrix(), I.matrix()])),
        (vec![0, 1], gates(vec![X.matrix(), rot(1.0), rot(-1.0)])),
        (vec![1, 0], gates(vec![Y.matrix(), X.matrix(), I.matrix()])),
        (vec![1, 1], gates(vec![Y.matrix(), rot(1.0), rot(-1.0)])),
    ]
}

fn within(elapsed: Duration, limit_ms: f64) -> Result<(), String> {
    let ms = elapsed.as_secs_f64() * 1e3;
    ensure(ms < limit_ms, || format!("took {ms:.1} ms, limit {limit_ms} ms"))
}

/// `max_x || Pi_x - s(x, y) Pi_0 ||_max` for the label the gates claim.
fn promise_residual(hpp: &HppInstance, g: &GateAssignment, y: &[usize]) -> f64 {
    let y = hpp.encode_label(y).unwrap();
    let p0 = product_of_permutation(g.gates(), &hpp.perms()[0]).unwrap();
    hpp.perms()
        .iter()
        .enumerate()
        .map(|(x, p)| {
            let px = product_of_permutation(g.gates(), p).unwrap();
            let s = f64::from(hpp.signs().entry(x, y));
            px.max_abs_diff(&p0.scale(C64::new(s, 0.0))).unwrap()
        })
        .fold(0.0, f64::max)
}

fn random_state(rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..2)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn random_label(tree: &CompositionTree, rng: &mut ChaCha8Rng) -> Vec<usize> {
    tree.label_shape().iter().map(|&c| rng.random_range(0..c)).collect()
}

/// A random label that synthesis can realize, with its gates.
fn random_satisfiable(tree: &CompositionTree, rng: &mut ChaCha8Rng) -> (Vec<usize>, GateAssignment) {
    loop {
        let y = random_label(tree, rng);
        let seed = rng.random();
        if let Synthesis::Gates(g) = synthesize_gates(tree, &y, SynthOptions { seed: Some(seed) }).unwrap() {
            return (y, g);
        }
    }
}

fn all_labels(tree: &CompositionTree) -> Vec<Vec<usize>> {
    let shape = tree.label_shape();
    let total: usize = shape.iter().product();
    (0..total)
        .map(|y| hppsim_core::hpp::decode_label(&shape, y).unwrap())
        .collect()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let hpp = pair_hpp();
    let rows = [
        (0, gates(vec![Pauli::X.matrix(), Pauli::X.matrix()])),
        (1, gates(vec![Pauli::Y.matrix(), Pauli::X.matrix()])),
    ];
    let mut worst: f64 = 0.0;
    for (y, g) in &rows {
        let r = switch_solve(&hpp, g, None).map_err(|e| e.to_string())?;
        ensure(r.recovered_y == [*y], || format!("row y={y}: got {:?}", r.recovered_y))?;
        ensure(r.query_count == 2, || format!("query count {}", r.query_count))?;
        ensure(r.residual <= 1e-8, || format!("residual {:e}", r.residual))?;
        worst = worst.max(r.residual);
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("both rows recovered, 2 queries, max residual {worst:.1e}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let tree: CompositionTree = "pair(slot1:pair)".parse().unwrap();
    let hpp = build_from_tree(&tree).unwrap();
    for (y, g) in table_two_rows() {
        let v = verify_promise(&hpp, &g).map_err(|e| e.to_string())?;
        ensure(v == y, || format!("verify {y:?} -> {v:?}"))?;
        let s = switch_solve(&hpp, &g, None).map_err(|e| e.to_string())?;
        ensure(s.recovered_y == y && s.query_count == 3, || {
            format!("switch {y:?} -> {:?} with {} queries", s.recovered_y, s.query_count)
        })?;
        let f = solve_fig3(&g).map_err(|e| e.to_string())?;
        ensure(f.recovered_y == y, || format!("fig3 {y:?} -> {:?}", f.recovered_y))?;
        ensure(f.ledger.counts() == [2, 2, 1] && f.ledger.total() == 5, || {
            format!("fig3 ledger {:?}", f.ledger.counts())
        })?;
    }
    use Pauli::*;
    let triple = triple_hpp();
    for (y, g) in [
        (0, gates(vec![Y.matrix(), Z.matrix(), Z.matrix()])),
        (1, gates(vec![X.matrix(), Y.matrix(), Z.matrix()])),
    ] {
        ensure(verify_promise(&triple, &g) == Ok(vec![y]), || format!("triple row {y}"))?;
        let f = solve_fig4(&g).map_err(|e| e.to_string())?;
        ensure(f.recovered_y == [y] && f.ledger.total() == 5, || {
            format!("fig4 row {y}: {:?}, {} calls", f.recovered_y, f.ledger.total())
        })?;
    }
    within(start.elapsed(), 50.0)?;
    Ok("4 rows via verify/switch(3)/fig3{2,2,1}; fig4 totals 5 on both triple rows".into())
}

fn rows_orthogonal(s: &SignMatrix) -> bool {
    let rows = s.to_rows();
    let n = rows.len() as i64;
    rows.iter().enumerate().all(|(a, ra)| {
        rows.iter().enumerate().all(|(b, rb)| {
            let dot: i64 = ra.iter().zip(rb).map(|(&p, &q)| i64::from(p) * i64::from(q)).sum();
            dot == if a == b { n } else { 0 }
        })
    })
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pool: Vec<SignMatrix> = (0..=3).map(|k| sylvester(k).unwrap()).collect();
    for _ in 0..20 {
        let k = rng.random_range(0..=3);
        let n = 1usize << k;
        let rows: Vec<Vec<i64>> = sylvester(k)
            .unwrap()
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(i64::from).collect())
            .collect();
        let rflip: Vec<i64> = (0..n).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect();
        let cflip: Vec<i64> = (0..n).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect();
        let flipped: Vec<Vec<i64>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, v)| v * rflip[i] * cflip[j]).collect())
            .collect();
        pool.push(SignMatrix::from_rows(flipped).map_err(|e| e.to_string())?);
    }
    let mut pairs = 0;
    for a in &pool {
        for b in &pool {
            let k = kron_sign(a, b).map_err(|e| e.to_string())?;
            ensure(k.size() == a.size() * b.size() && rows_orthogonal(&k), || {
                format!("kron of sizes {} and {} not Hadamard", a.size(), b.size())
            })?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} ordered pairs from {} matrices, exact integer Gram check", pool.len()))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let kinds = [NodeKind::Pair, NodeKind::Triple];
    let mut trees = CompositionTree::enumerate_up_to(5, &kinds);
    let exhaustive = trees.len();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let leaves = rng.random_range(6..=8);
        trees.push(CompositionTree::random(leaves, &kinds, &mut rng).map_err(|e| e.to_string())?);
    }
    let (mut checked, mut unsat, mut worst) = (0usize, 0usize, 0.0f64);
    for tree in &trees {
        let hpp = build_from_tree(tree).unwrap();
        for y in all_labels(tree) {
            let seed = rng.random();
            match synthesize_gates(tree, &y, SynthOptions { seed: Some(seed) }).map_err(|e| e.to_string())? {
                Synthesis::Unsatisfiable { .. } => unsat += 1,
                Synthesis::Gates(g) => {
                    let v = verify_promise(&hpp, &g).map_err(|e| format!("{tree} {y:?}: {e}"))?;
                    ensure(v == y, || format!("{tree}: verify {y:?} -> {v:?}"))?;
                    let s = switch_solve(&hpp, &g, None).map_err(|e| format!("{tree} {y:?}: {e}"))?;
                    ensure(s.recovered_y == y, || format!("{tree}: switch {y:?} -> {:?}", s.recovered_y))?;
                    let r = promise_residual(&hpp, &g, &y);
                    ensure(r <= 1e-9, || format!("{tree} {y:?}: promise residual {r:e}"))?;
                    worst = worst.max(r);
                    checked += 1;
                }
            }
        }
    }
    within(start.elapsed(), 30_000.0)?;
    Ok(format!(
        "{} trees ({exhaustive} exhaustive), {checked} satisfiable labels round-trip, {unsat} unsatisfiable, max promise residual {worst:.1e}, {:.1} s",
        trees.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    for n in 2..=12usize {
        let tree = CompositionTree::balanced_pairs(n).unwrap();
        let hpp = build_from_tree(&tree).unwrap();
        let (y, g) = random_satisfiable(&tree, &mut rng);
        let s = switch_solve(&hpp, &g, None).map_err(|e| format!("n={n}: {e}"))?;
        let sim = solve_sim_switch(&hpp, &g).map_err(|e| format!("n={n}: {e}"))?;
        let rec = recursive_solve(&tree, &g).map_err(|e| format!("n={n}: {e}"))?;
        for (name, got) in [("switch", &s.recovered_y), ("sim-n2", &sim.recovered_y), ("recursive", &rec.recovered_y)] {
            ensure(got == &y, || format!("n={n}: {name} recovered {got:?}, expected {y:?}"))?;
        }
        ensure(s.query_count == n, || format!("n={n}: switch used {}", s.query_count))?;
        ensure(sim.ledger.total() == n * n, || format!("n={n}: sim-n2 used {}", sim.ledger.total()))?;
        let total = rec.ledger.total();
        let bound = 2.0 * n as f64 * (n as f64).log2();
        ensure(total as f64 <= bound, || format!("n={n}: recursive {total} > 2n log2 n = {bound:.2}"))?;
        ensure(n < 8 || total < n * n, || format!("n={n}: recursive {total} not below n^2"))?;
        ensure(total >= 2 * n - 1 && sim.ledger.total() >= 2 * n - 1, || {
            format!("n={n}: a causal solver used fewer than 2n-1 calls")
        })?;
        rows.push(format!("{n}:{}/{}/{}", s.query_count, total, sim.ledger.total()));
    }
    within(start.elapsed(), 60_000.0)?;
    Ok(format!(
        "n:switch/recursive/sim-n2 = {} , {:.1} s",
        rows.join(" "),
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let kinds = [NodeKind::Pair, NodeKind::Triple];
    let (mut worst_sv, mut worst_fid) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let leaves = rng.random_range(2..=8);
        let tree = CompositionTree::random(leaves, &kinds, &mut rng).unwrap();
        let hpp = build_from_tree(&tree).unwrap();
        let (y, g) = random_satisfiable(&tree, &mut rng);
        let target = StateVector::new(vec![2], random_state(&mut rng)).unwrap();
        let r = switch_solve(&hpp, &g, Some(&target)).map_err(|e| format!("{tree}: {e}"))?;
        ensure(r.recovered_y == y, || format!("{tree}: recovered {:?}", r.recovered_y))?;
        ensure(r.factorization_defect <= 1e-8, || {
            format!("{tree}: second singular value {:e}", r.factorization_defect)
        })?;
        ensure(r.final_target_fidelity >= 1.0 - 1e-9, || {
            format!("{tree}: target fidelity {}", r.final_target_fidelity)
        })?;
        worst_sv = worst_sv.max(r.factorization_defect);
        worst_fid = worst_fid.max(1.0 - r.final_target_fidelity);
    }
    Ok(format!("50 instances: max sigma_2 {worst_sv:.1e}, max 1-fidelity {worst_fid:.1e}"))
}

fn power_apply(m: &ComplexMatrix, v: &[C64], times: usize) -> Vec<C64> {
    let mut out = v.to_vec();
    for _ in 0..times {
        out = m.apply(&out).unwrap();
    }
    out
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kinds = [NodeKind::Pair, NodeKind::Triple];
    let mut worst = 0.0f64;
    let (mut sims, mut stages) = (0, 0);
    for leaves in 2..=6usize {
        for _ in 0..4 {
            let tree = CompositionTree::random(leaves, &kinds, &mut rng).unwrap();
            let hpp = build_from_tree(&tree).unwrap();
            let (y, g) = random_satisfiable(&tree, &mut rng);

            let circuit = build_sim_switch_circuit(&hpp).map_err(|e| e.to_string())?;
            let mut init = ProductState::zeros(&circuit);
            let mut expected = Vec::new();
            for gate in 0..leaves {
                let reg = circuit.register_index(&format!("a{gate}")).unwrap();
                let a = random_state(&mut rng);
                init.set(reg, a.clone()).unwrap();
                expected.push((reg, power_apply(g.gates()[gate].matrix(), &a, leaves - 1)));
            }
            let run = run_circuit(&circuit, &g, &init).map_err(|e| format!("{tree}: {e}"))?;
            let control = circuit.register_index("c").unwrap();
            ensure(hpp.decode_label(run.outcome(control).unwrap()).unwrap() == y, || format!("{tree}: sim-n2 label"))?;
            for (reg, want) in expected {
                let f = run.state.wire_fidelity(reg, &want).unwrap();
                ensure(f >= 1.0 - 1e-9, || format!("{tree}: sim-n2 auxiliary fidelity {f}"))?;
                worst = worst.max(1.0 - f);
            }
            sims += 1;

            let plan = build_recursive_circuit(&tree).map_err(|e| e.to_string())?;
            if plan.block_auxiliaries.is_empty() {
                continue;
            }
            let mut init = ProductState::zeros(&plan.circuit);
            let mut expected = Vec::new();
            for aux in &plan.block_auxiliaries {
                let a = random_state(&mut rng);
                init.set(aux.register, a.clone()).unwrap();
                let block = product_of_permutation(g.gates(), &aux.gates).unwrap();
                expected.push((aux.register, power_apply(&block, &a, aux.power)));
            }
            let run = run_circuit(&plan.circuit, &g, &init).map_err(|e| format!("{tree}: {e}"))?;
            for (reg, want) in expected {
                let f = run.state.wire_fidelity(reg, &want).unwrap();
                ensure(f >= 1.0 - 1e-9, || format!("{tree}: block auxiliary fidelity {f}"))?;
                worst = worst.max(1.0 - f);
            }
            stages += 1;
        }
    }
    Ok(format!(
        "{sims} switch simulations (n <= 6) and {stages} recursive stages, max 1-fidelity {worst:.1e}"
    ))
}

fn criterion_8() -> Check {
    let tree: CompositionTree = "pair(slot1:pair(slot1:pair))".parse().unwrap();
    let s = synthesize_gates(&tree, &[0, 0, 1], SynthOptions::default()).map_err(|e| e.to_string())?;
    ensure(
        matches!(&s, Synthesis::Unsatisfiable { path, .. } if path == &[1, 1]),
        || format!("expected Unsatisfiable at root/slot1/slot1, got {s:?}"),
    )?;
    let triples = CompositionTree::enumerate_up_to(5, &[NodeKind::Triple]);
    let mut labels = 0;
    for t in &triples {
        let c = census(t).map_err(|e| e.to_string())?;
        ensure(c.unsatisfiable.is_empty(), || format!("{t}: {:?}", c.unsatisfiable))?;
        labels += c.satisfiable.len();
    }
    Ok(format!(
        "identity split into anticommuting pair reported at root/slot1/slot1; {} all-triple trees, {labels} labels all satisfiable",
        triples.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 two-gate switch", criterion_1),
        ("2 three-gate circuits", criterion_2),
        ("3 Kronecker composition of Hadamard matrices", criterion_3),
        ("4 synthesis round-trip", criterion_4),
        ("5 query-count scaling", criterion_5),
        ("6 switch factorization", criterion_6),
        ("7 auxiliary end states", criterion_7),
        ("8 unsatisfiability detection", criterion_8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Gate synthesis by replacement rules.
//!
//! Every live gate carries a form tag: either `U sigma_z U^dag` (with its
//! frame `U` recorded) or the identity. The root is seeded with the table
//! examples for its own label; each subtree child then replaces the gate in
//! its slot by gates whose reference product is proportional to it.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{build_from_tree, decode_label, verify_promise, CompositionTree, GateAssignment, HppError, NodeKind};
use crate::qmat::{hadamard_gate, phase_gate, rz, su2_from_rotation, ComplexMatrix, Pauli, UnitaryGate};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthOptions {
    /// Seeds the z-rotation `V` inserted into each rule. `None` keeps `V = I`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthesis {
    Gates(GateAssignment),
    /// No rule applies: the node at `path` (slots from the root) would have
    /// to split an identity gate into anticommuting factors.
    Unsatisfiable { path: Vec<usize>, label: Vec<usize> },
}

impl Synthesis {
    pub fn gates(&self) -> Option<&GateAssignment> {
        match self {
            Synthesis::Gates(g) => Some(g),
            Synthesis::Unsatisfiable { .. } => None,
        }
    }

    pub fn is_satisfiable(&self) -> bool {
        matches!(self, Synthesis::Gates(_))
    }
}

/// Tree path rendered as `root`, `root/slot1`, `root/slot1/slot0`, ...
pub struct TreePath<'a>(pub &'a [usize]);

impl fmt::Display for TreePath<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for slot in self.0 {
            write!(f, "/slot{slot}")?;
        }
        Ok(())
    }
}

#[derive(Clone)]
enum Form {
    /// `gate` is proportional to `frame sigma_z frame^dag`.
    Sigma { gate: ComplexMatrix, frame: UnitaryGate },
    Identity,
}

impl Form {
    fn sigma(frame: UnitaryGate, p: Pauli) -> Self {
        Form::Sigma {
            gate: frame.conjugate(&p.matrix()),
            frame: rotate_frame(&frame, p),
        }
    }

    fn literal(p: Pauli, frame: UnitaryGate) -> Self {
        Form::Sigma {
            gate: p.matrix(),
            frame,
        }
    }

    fn matrix(&self) -> ComplexMatrix {
        match self {
            Form::Sigma { gate, .. } => gate.clone(),
            Form::Identity => ComplexMatrix::identity(2),
        }
    }
}

/// Frame `W` with `W sigma_z W^dag = U p U^dag`.
fn rotate_frame(u: &UnitaryGate, p: Pauli) -> UnitaryGate {
    match p {
        Pauli::Z | Pauli::I => u.clone(),
        Pauli::X => u.compose(&hadamard_gate()),
        Pauli::Y => u.compose(&phase_gate().compose(&hadamard_gate())),
    }
}

/// Maps `z -> -x`, `x -> (y + z)/sqrt2`, `y -> (y - z)/sqrt2`.
fn x_frame() -> UnitaryGate {
    let r = FRAC_1_SQRT_2;
    su2_from_rotation([[0.0, 0.0, -1.0], [r, r, 0.0], [r, -r, 0.0]])
}

fn y_frame() -> UnitaryGate {
    phase_gate().compose(&hadamard_gate())
}

fn identity_frame() -> UnitaryGate {
    Pauli::I.gate()
}

fn root_forms(kind: NodeKind, y: usize) -> Result<Vec<Form>, HppError> {
    use Pauli::*;
    let arity = match kind {
        NodeKind::TwoPerm(n) if n > 3 => {
            return Err(HppError::NoSynthesisRule(format!(
                "a two-permutation root with {n} gates"
            )))
        }
        k => k.arity(),
    };
    Ok(match (arity, y) {
        (2, 0) => vec![Form::literal(X, x_frame()), Form::literal(X, x_frame())],
        (2, _) => vec![Form::literal(Y, y_frame()), Form::literal(X, x_frame())],
        (_, 0) => vec![
            Form::literal(Y, y_frame()),
            Form::literal(Z, identity_frame()),
            Form::literal(Z, identity_frame()),
        ],
        (_, _) => vec![
            Form::literal(X, x_frame()),
            Form::literal(Y, y_frame()),
            Form::literal(Z, identity_frame()),
        ],
    })
}

fn replace(kind: NodeKind, parent: &Form, y: usize, v: UnitaryGate) -> Option<Vec<Form>> {
    use Pauli::*;
    match (kind, parent) {
        (NodeKind::Pair, Form::Sigma { gate, frame }) => {
            let u = frame.compose(&v);
            Some(if y == 0 {
                vec![
                    Form::Sigma {
                        gate: gate.clone(),
                        frame: frame.clone(),
                    },
                    Form::Identity,
                ]
            } else {
                vec![Form::sigma(u.clone(), X), Form::sigma(u, Y)]
            })
        }
        (NodeKind::Pair, Form::Identity) => {
            (y == 0).then(|| vec![Form::sigma(v.clone(), Z), Form::sigma(v, Z)])
        }
        (NodeKind::Triple, Form::Sigma { gate, frame }) => {
            let u = frame.compose(&v);
            Some(if y == 0 {
                vec![
                    Form::Sigma {
                        gate: gate.clone(),
                        frame: frame.clone(),
                    },
                    Form::sigma(u.clone(), X),
                    Form::sigma(u, X),
                ]
            } else {
                vec![Form::Identity, Form::sigma(u.clone(), X), Form::sigma(u, Y)]
            })
        }
        (NodeKind::Triple, Form::Identity) => Some(if y == 0 {
            vec![Form::sigma(v.clone(), X), Form::sigma(v, X), Form::Identity]
        } else {
            vec![
                Form::sigma(v.clone(), X),
                Form::sigma(v.clone(), Y),
                Form::sigma(v, Z),
            ]
        }),
        (NodeKind::TwoPerm(_), _) => None,
    }
}

struct Walker<'a> {
    labels: &'a [usize],
    cursor: usize,
    rng: Option<ChaCha8Rng>,
    path: Vec<usize>,
    out: Vec<Form>,
}

enum Step {
    Done,
    Blocked(Vec<usize>),
}

impl Walker<'_> {
    fn twist(&mut self) -> UnitaryGate {
        match &mut self.rng {
            Some(rng) => rz(rng.random_range(0.0..TAU)),
            None => identity_frame(),
        }
    }

    fn node(&mut self, tree: &CompositionTree, parent: Option<&Form>) -> Result<Step, HppError> {
        let y = self.labels[self.cursor];
        self.cursor += 1;
        let forms = match parent {
            None => root_forms(tree.kind(), y)?,
            Some(p) => {
                let v = self.twist();
                match replace(tree.kind(), p, y, v) {
                    Some(f) => f,
                    None if matches!(tree.kind(), NodeKind::TwoPerm(_)) => {
                        return Err(HppError::InvalidTree(
                            "two-permutation nodes must be the root".into(),
                        ))
                    }
                    None => return Ok(Step::Blocked(self.path.clone())),
                }
            }
        };
        for (slot, (form, child)) in forms.iter().zip(tree.children()).enumerate() {
            match child {
                Some(child) => {
                    self.path.push(slot);
                    let step = self.node(child, Some(form))?;
                    self.path.pop();
                    if let Step::Blocked(p) = step {
                        return Ok(Step::Blocked(p));
                    }
                }
                None => self.out.push(form.clone()),
            }
        }
        Ok(Step::Done)
    }
}

/// Synthesizes qubit gates realizing sub-labels `y` (tree order) on the
/// instance built from `tree`.
///
/// The result is checked against [`verify_promise`] before it is returned.
pub fn synthesize_gates(
    tree: &CompositionTree,
    y: &[usize],
    options: SynthOptions,
) -> Result<Synthesis, HppError> {
    tree.validate()?;
    let shape = tree.label_shape();
    if y.len() != shape.len() || y.iter().zip(&shape).any(|(&l, &c)| l >= c) {
        return Err(HppError::LabelShape {
            labels: y.to_vec(),
            shape,
        });
    }
    let mut walker = Walker {
        labels: y,
        cursor: 0,
        rng: options.seed.map(ChaCha8Rng::seed_from_u64),
        path: Vec::new(),
        out: Vec::new(),
    };
    if let Step::Blocked(path) = walker.node(tree, None)? {
        return Ok(Synthesis::Unsatisfiable {
            path,
            label: y.to_vec(),
        });
    }
    let gates = walker
        .out
        .iter()
        .map(|f| UnitaryGate::new(f.matrix()))
        .collect::<Result<Vec<_>, _>>()?;
    let gates = GateAssignment::new(gates)?;
    let hpp = build_from_tree(tree)?;
    let recovered = verify_promise(&hpp, &gates)?;
    if recovered != y {
        return Err(HppError::PromiseViolated(format!(
            "synthesized gates give label {recovered:?} instead of {y:?}"
        )));
    }
    Ok(Synthesis::Gates(gates))
}

/// Largest label count [`census`] will enumerate.
pub const CENSUS_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnsatisfiableLabel {
    pub label: Vec<usize>,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub tree: String,
    pub satisfiable: Vec<Vec<usize>>,
    pub unsatisfiable: Vec<UnsatisfiableLabel>,
}

/// Attempts synthesis (with `V = I`) for every label of `tree`.
pub fn census(tree: &CompositionTree) -> Result<Census, HppError> {
    let shape = tree.label_shape();
    let total = shape
        .iter()
        .try_fold(1usize, |a, &c| a.checked_mul(c))
        .filter(|&t| t <= CENSUS_LIMIT)
        .ok_or_else(|| {
            HppError::InvalidInstance(format!("census is limited to {CENSUS_LIMIT} labels"))
        })?;
    let mut out = Census {
        tree: tree.to_string(),
        satisfiable: Vec::new(),
        unsatisfiable: Vec::new(),
    };
    for y in 0..total {
        let label = decode_label(&shape, y)?;
        match synthesize_gates(tree, &label, SynthOptions::default())? {
            Synthesis::Gates(_) => out.satisfiable.push(label),
            Synthesis::Unsatisfiable { path, label } => out.unsatisfiable.push(UnsatisfiableLabel {
                label,
                path: TreePath(&path).to_string(),
            }),
        }
    }
    Ok(out)
}

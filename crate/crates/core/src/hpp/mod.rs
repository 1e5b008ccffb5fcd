//! Hadamard promise problem instances, their composition, promise
//! verification and gate synthesis.
//!
//! An instance fixes `n_x` permutations `Pi_x` of `n` gates together with a
//! sign matrix `s`. Gates satisfy label `y` when `Pi_x = s(x, y) Pi_0` for
//! every `x`. Labels of composed instances are tuples `(y_1, y_2, ...)`; the
//! linear index is mixed radix with the first sub-label varying fastest,
//! matching [`crate::hadamard::kron_sign`].

mod reference;
mod synth;
mod tree;

use std::ops::Deref;

use thiserror::Error;

use crate::hadamard::{kron_sign, sylvester, HadamardError, SignMatrix};
use crate::qmat::{product_of_permutation, proportionality_sign, QmatError, UnitaryGate};
use crate::TOLERANCE;

pub use reference::reference_gates;
pub use synth::{census, synthesize_gates, Census, SynthOptions, Synthesis, TreePath, UnsatisfiableLabel, CENSUS_LIMIT};
pub use tree::{CompositionTree, NodeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HppError {
    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid composition tree: {0}")]
    InvalidTree(String),
    #[error("tree syntax error at byte {position}: {message}")]
    TreeSyntax { position: usize, message: String },
    #[error("slot {slot} out of range for a node with {n} gates")]
    SlotOutOfRange { slot: usize, n: usize },
    #[error("expected {expected} gates, got {got}")]
    GateCount { expected: usize, got: usize },
    #[error("label {labels:?} does not fit label shape {shape:?}")]
    LabelShape { labels: Vec<usize>, shape: Vec<usize> },
    #[error("promise violated: {0}")]
    PromiseViolated(String),
    #[error("no gate synthesis rule for {0}")]
    NoSynthesisRule(String),
    #[error(transparent)]
    Hadamard(#[from] HadamardError),
    #[error(transparent)]
    Matrix(#[from] QmatError),
}

/// Gate indices in application order (first applied first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, HppError> {
        let mut seen = vec![false; order.len()];
        for &g in &order {
            match seen.get_mut(g) {
                Some(s) if !*s => *s = true,
                _ => return Err(HppError::InvalidPermutation(order)),
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn reversed(n: usize) -> Self {
        Self((0..n).rev().collect())
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Position of `gate` in the order.
    pub fn position(&self, gate: usize) -> Option<usize> {
        self.0.iter().position(|&g| g == gate)
    }
}

impl Deref for Permutation {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Gates indexed by gate number.
#[derive(Debug, Clone, PartialEq)]
pub struct GateAssignment(Vec<UnitaryGate>);

impl GateAssignment {
    pub fn new(gates: Vec<UnitaryGate>) -> Result<Self, HppError> {
        if gates.iter().any(|g| g.dim() != 2) {
            return Err(HppError::InvalidInstance("gates must be 2x2".into()));
        }
        Ok(Self(gates))
    }

    pub fn gates(&self) -> &[UnitaryGate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&UnitaryGate> {
        self.0.get(index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HppInstance {
    n: usize,
    perms: Vec<Permutation>,
    signs: SignMatrix,
    label_shape: Vec<usize>,
    tree: Option<CompositionTree>,
}

impl HppInstance {
    pub fn new(
        n: usize,
        perms: Vec<Permutation>,
        signs: SignMatrix,
        label_shape: Vec<usize>,
    ) -> Result<Self, HppError> {
        let bad = |m: String| Err(HppError::InvalidInstance(m));
        if n == 0 {
            return bad("at least one gate is required".into());
        }
        if perms.is_empty() {
            return bad("at least one permutation is required".into());
        }
        if perms.len() != signs.size() {
            return bad(format!(
                "{} permutations but sign matrix of size {}",
                perms.len(),
                signs.size()
            ));
        }
        if let Some(p) = perms.iter().find(|p| p.len() != n) {
            return bad(format!("permutation {:?} does not have length {n}", &**p));
        }
        if !fits_factorial(perms.len(), n) {
            return bad(format!("{} permutations exceed {n}!", perms.len()));
        }
        if label_shape.contains(&0)
            || label_shape.iter().try_fold(1usize, |a, &c| a.checked_mul(c)) != Some(perms.len())
        {
            return bad(format!(
                "label shape {label_shape:?} does not multiply to {}",
                perms.len()
            ));
        }
        if !signs.is_hadamard() {
            return Err(HadamardError::NotHadamard.into());
        }
        Ok(Self {
            n,
            perms,
            signs,
            label_shape,
            tree: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_x(&self) -> usize {
        self.perms.len()
    }

    pub fn gate_dim(&self) -> usize {
        2
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn signs(&self) -> &SignMatrix {
        &self.signs
    }

    pub fn label_shape(&self) -> &[usize] {
        &self.label_shape
    }

    /// The composition tree this instance was built from, if known.
    pub fn tree(&self) -> Option<&CompositionTree> {
        self.tree.as_ref()
    }

    pub fn with_tree(mut self, tree: CompositionTree) -> Result<Self, HppError> {
        if tree.leaf_count() != self.n || tree.label_shape() != self.label_shape {
            return Err(HppError::InvalidTree(format!(
                "tree {tree} does not match an instance with {} gates and labels {:?}",
                self.n, self.label_shape
            )));
        }
        self.tree = Some(tree);
        Ok(self)
    }

    pub fn decode_label(&self, y: usize) -> Result<Vec<usize>, HppError> {
        decode_label(&self.label_shape, y)
    }

    pub fn encode_label(&self, labels: &[usize]) -> Result<usize, HppError> {
        encode_label(&self.label_shape, labels)
    }
}

fn fits_factorial(count: usize, n: usize) -> bool {
    let mut f: usize = 1;
    for k in 2..=n {
        match f.checked_mul(k) {
            Some(v) => f = v,
            None => return true,
        }
        if f >= count {
            return true;
        }
    }
    count <= f
}

/// Splits a linear label into sub-labels, first sub-label fastest.
pub fn decode_label(shape: &[usize], mut y: usize) -> Result<Vec<usize>, HppError> {
    let total: usize = shape.iter().product();
    if y >= total {
        return Err(HppError::LabelShape {
            labels: vec![y],
            shape: shape.to_vec(),
        });
    }
    Ok(shape
        .iter()
        .map(|&c| {
            let digit = y % c;
            y /= c;
            digit
        })
        .collect())
}

/// Inverse of [`decode_label`].
pub fn encode_label(shape: &[usize], labels: &[usize]) -> Result<usize, HppError> {
    if labels.len() != shape.len() || labels.iter().zip(shape).any(|(&l, &c)| l >= c) {
        return Err(HppError::LabelShape {
            labels: labels.to_vec(),
            shape: shape.to_vec(),
        });
    }
    Ok(labels
        .iter()
        .zip(shape)
        .rev()
        .fold(0, |acc, (&l, &c)| acc * c + l))
}

/// Two gates: `Pi_0 = U1 U0`, `Pi_1 = U0 U1`.
pub fn pair_hpp() -> HppInstance {
    two_permutation_hpp(2).expect("two gates are valid")
}

/// Three gates: `Pi_0 = U2 U1 U0`, `Pi_1 = U0 U1 U2`.
pub fn triple_hpp() -> HppInstance {
    two_permutation_hpp(3).expect("three gates are valid")
}

/// `n` gates: forward order against reversed order.
pub fn two_permutation_hpp(n: usize) -> Result<HppInstance, HppError> {
    if n < 2 {
        return Err(HppError::InvalidInstance(format!(
            "two-permutation problem needs at least 2 gates, got {n}"
        )));
    }
    HppInstance::new(
        n,
        vec![Permutation::identity(n), Permutation::reversed(n)],
        sylvester(1)?,
        vec![2],
    )
}

/// The single-gate instance with one permutation; neutral for composition.
pub fn trivial_hpp() -> HppInstance {
    HppInstance::new(1, vec![Permutation::identity(1)], SignMatrix::trivial(), vec![1])
        .expect("trivial instance is valid")
}

/// The instance of a single tree node.
pub fn fundamental_hpp(kind: NodeKind) -> Result<HppInstance, HppError> {
    match kind {
        NodeKind::Pair => Ok(pair_hpp()),
        NodeKind::Triple => Ok(triple_hpp()),
        NodeKind::TwoPerm(n) => two_permutation_hpp(n),
    }
}

/// Replaces gate `slot` of `outer` by the permutations of `inner`.
///
/// Inner gates take indices `slot..slot + inner.n`; outer gates above `slot`
/// shift up by `inner.n - 1`. Permutation `(x1, x2)` sits at index
/// `x2 * outer.n_x + x1`.
pub fn compose_hpp(
    outer: &HppInstance,
    slot: usize,
    inner: &HppInstance,
) -> Result<HppInstance, HppError> {
    if slot >= outer.n {
        return Err(HppError::SlotOutOfRange { slot, n: outer.n });
    }
    if outer.gate_dim() != inner.gate_dim() {
        return Err(HppError::InvalidInstance("gate dimensions differ".into()));
    }
    let shift = inner.n - 1;
    let remap_outer = |g: usize| if g > slot { g + shift } else { g };
    let mut perms = Vec::with_capacity(outer.n_x() * inner.n_x());
    for p2 in &inner.perms {
        for p1 in &outer.perms {
            let mut order = Vec::with_capacity(outer.n + shift);
            for &g in p1.iter() {
                if g == slot {
                    order.extend(p2.iter().map(|&h| h + slot));
                } else {
                    order.push(remap_outer(g));
                }
            }
            perms.push(Permutation(order));
        }
    }
    let signs = kron_sign(&outer.signs, &inner.signs)?;
    let mut label_shape = outer.label_shape.clone();
    label_shape.extend(&inner.label_shape);
    HppInstance::new(outer.n + shift, perms, signs, label_shape)
}

/// Folds [`compose_hpp`] over the tree: each node's fundamental instance is
/// composed with its subtree children in slot order.
pub fn build_from_tree(tree: &CompositionTree) -> Result<HppInstance, HppError> {
    tree.validate()?;
    let built = build_node(tree)?;
    built.with_tree(tree.clone())
}

fn build_node(tree: &CompositionTree) -> Result<HppInstance, HppError> {
    let mut current = fundamental_hpp(tree.kind())?;
    let mut offset = 0;
    for (slot, child) in tree.children().iter().enumerate() {
        if let Some(child) = child {
            let inner = build_node(child)?;
            current = compose_hpp(&current, slot + offset, &inner)?;
            offset += inner.n - 1;
        }
    }
    Ok(current)
}

/// Finds the label `y` with `Pi_x = s(x, y) Pi_0` for all `x`, decoded into
/// sub-labels.
pub fn verify_promise(hpp: &HppInstance, gates: &GateAssignment) -> Result<Vec<usize>, HppError> {
    verify_promise_with_tol(hpp, gates, TOLERANCE)
}

pub fn verify_promise_with_tol(
    hpp: &HppInstance,
    gates: &GateAssignment,
    tol: f64,
) -> Result<Vec<usize>, HppError> {
    hpp.decode_label(promise_index(hpp, gates, tol)?)
}

/// Linear label index for the gates, or `PromiseViolated`.
pub fn promise_index(hpp: &HppInstance, gates: &GateAssignment, tol: f64) -> Result<usize, HppError> {
    if gates.len() != hpp.n {
        return Err(HppError::GateCount {
            expected: hpp.n,
            got: gates.len(),
        });
    }
    let reference = product_of_permutation(gates.gates(), &hpp.perms[0])?;
    let mut signs = Vec::with_capacity(hpp.n_x());
    for (x, perm) in hpp.perms.iter().enumerate() {
        let product = product_of_permutation(gates.gates(), perm)?;
        match proportionality_sign(&product, &reference, tol) {
            Ok(s) => signs.push(s.value()),
            Err(QmatError::NotProportional) => {
                return Err(HppError::PromiseViolated(format!(
                    "Pi_{x} is not +-Pi_0"
                )))
            }
            Err(e) => return Err(e.into()),
        }
    }
    hpp.signs.find_row(&signs)?.ok_or_else(|| {
        HppError::PromiseViolated("sign pattern matches no row of the sign matrix".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{ComplexMatrix, Pauli};
    use crate::C64;

    fn gates(list: Vec<ComplexMatrix>) -> GateAssignment {
        GateAssignment::new(list.into_iter().map(|m| UnitaryGate::new(m).unwrap()).collect())
            .unwrap()
    }

    fn rot(sign: f64) -> ComplexMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        (&Pauli::Y.matrix() + &Pauli::Z.matrix().scale(C64::new(sign, 0.0)))
            .scale(C64::new(r, 0.0))
    }

    fn table_two() -> HppInstance {
        build_from_tree(&"pair(slot1:pair)".parse().unwrap()).unwrap()
    }

    #[test]
    fn pair_instance_table_one() {
        let p = pair_hpp();
        assert_eq!(p.n(), 2);
        assert_eq!(&*p.perms()[0], &[0, 1]);
        assert_eq!(&*p.perms()[1], &[1, 0]);
        let (x, y, i) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::I.matrix());
        assert_eq!(verify_promise(&p, &gates(vec![x.clone(), x.clone()])), Ok(vec![0]));
        assert_eq!(verify_promise(&p, &gates(vec![y, x])), Ok(vec![1]));
        assert_eq!(verify_promise(&p, &gates(vec![i.clone(), i])), Ok(vec![0]));
    }

    #[test]
    fn triple_instance_table_four() {
        let t = triple_hpp();
        assert_eq!(&*t.perms()[1], &[2, 1, 0]);
        let (x, y, z, i) = (
            Pauli::X.matrix(),
            Pauli::Y.matrix(),
            Pauli::Z.matrix(),
            Pauli::I.matrix(),
        );
        assert_eq!(
            verify_promise(&t, &gates(vec![y.clone(), z.clone(), z.clone()])),
            Ok(vec![0])
        );
        assert_eq!(verify_promise(&t, &gates(vec![x, y, z])), Ok(vec![1]));
        assert_eq!(
            verify_promise(&t, &gates(vec![i.clone(), i.clone(), i])),
            Ok(vec![0])
        );
    }

    #[test]
    fn two_permutation_family() {
        assert_eq!(two_permutation_hpp(2).unwrap(), pair_hpp());
        assert!(two_permutation_hpp(1).is_err());
        let (x, y, z, i) = (
            Pauli::X.matrix(),
            Pauli::Y.matrix(),
            Pauli::Z.matrix(),
            Pauli::I.matrix(),
        );
        let three = two_permutation_hpp(3).unwrap();
        assert_eq!(
            verify_promise(&three, &gates(vec![x.clone(), y.clone(), z.clone()])),
            verify_promise(&triple_hpp(), &gates(vec![x.clone(), y, z]))
        );
        let four = two_permutation_hpp(4).unwrap();
        assert_eq!(
            verify_promise(&four, &gates(vec![x.clone(), x, i.clone(), i])),
            Ok(vec![0])
        );
    }

    #[test]
    fn compose_pair_into_pair() {
        let t = compose_hpp(&pair_hpp(), 1, &pair_hpp()).unwrap();
        let orders: Vec<Vec<usize>> = t.perms().iter().map(|p| p.to_vec()).collect();
        assert_eq!(
            orders,
            vec![vec![0, 1, 2], vec![1, 2, 0], vec![0, 2, 1], vec![2, 1, 0]]
        );
        assert_eq!(t.signs(), &sylvester(2).unwrap());
        assert_eq!(t.label_shape(), &[2, 2]);
        assert_eq!(t, table_two().clone_without_tree());
    }

    impl HppInstance {
        fn clone_without_tree(&self) -> Self {
            let mut c = self.clone();
            c.tree = None;
            c
        }
    }

    #[test]
    fn compose_with_trivial_inner() {
        let p = pair_hpp();
        for slot in 0..2 {
            assert_eq!(compose_hpp(&p, slot, &trivial_hpp()).unwrap().perms(), p.perms());
        }
        assert_eq!(
            compose_hpp(&p, 2, &p),
            Err(HppError::SlotOutOfRange { slot: 2, n: 2 })
        );
    }

    #[test]
    fn compose_triple_with_pair_at_slot_zero() {
        let t = compose_hpp(&triple_hpp(), 0, &pair_hpp()).unwrap();
        assert_eq!(t.n(), 4);
        assert_eq!(t.n_x(), 4);
        let orders: Vec<Vec<usize>> = t.perms().iter().map(|p| p.to_vec()).collect();
        assert_eq!(
            orders,
            vec![vec![0, 1, 2, 3], vec![3, 2, 0, 1], vec![1, 0, 2, 3], vec![3, 2, 1, 0]]
        );
    }

    #[test]
    fn table_two_rows_verify() {
        let hpp = table_two();
        let (x, y, i) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::I.matrix());
        let rows = [
            (vec![x.clone(), x.clone(), i.clone()], vec![0, 0]),
            (vec![x.clone(), rot(1.0), rot(-1.0)], vec![0, 1]),
            (vec![y.clone(), x.clone(), i.clone()], vec![1, 0]),
            (vec![y.clone(), rot(1.0), rot(-1.0)], vec![1, 1]),
        ];
        for (g, want) in rows {
            let g = gates(g);
            assert_eq!(verify_promise(&hpp, &g), Ok(want.clone()));
            // sign law: Pi_x = (-1)^(x1 y1 + x2 y2) Pi_0
            let p0 = product_of_permutation(g.gates(), &hpp.perms()[0]).unwrap();
            for x in 0..4 {
                let (x1, x2) = (x % 2, x / 2);
                let expected = if (x1 * want[0] + x2 * want[1]) % 2 == 0 { 1 } else { -1 };
                let px = product_of_permutation(g.gates(), &hpp.perms()[x]).unwrap();
                assert_eq!(
                    proportionality_sign(&px, &p0, TOLERANCE).unwrap().value(),
                    expected
                );
            }
        }
    }

    #[test]
    fn violated_promises() {
        let p = pair_hpp();
        let bad = gates(vec![Pauli::X.matrix(), Pauli::Z.matrix().scale(C64::new(0.0, 1.0))]);
        // X and iZ anticommute, so this one is fine
        assert_eq!(verify_promise(&p, &bad), Ok(vec![1]));
        let h = crate::qmat::hadamard_gate().into_matrix();
        assert!(matches!(
            verify_promise(&p, &gates(vec![Pauli::X.matrix(), h])),
            Err(HppError::PromiseViolated(_))
        ));
        assert!(matches!(
            verify_promise(&p, &gates(vec![Pauli::X.matrix()])),
            Err(HppError::GateCount { .. })
        ));
    }

    #[test]
    fn all_identity_gives_zero_label() {
        for n in 2..=6 {
            let hpp = build_from_tree(&CompositionTree::balanced_pairs(n).unwrap()).unwrap();
            let g = gates(vec![Pauli::I.matrix(); n]);
            assert_eq!(verify_promise(&hpp, &g), Ok(vec![0; n - 1]));
        }
    }

    #[test]
    fn balanced_five_leaf_tree() {
        let hpp = build_from_tree(&CompositionTree::balanced_pairs(5).unwrap()).unwrap();
        assert_eq!(hpp.n(), 5);
        assert_eq!(hpp.n_x(), 16);
        assert_eq!(hpp.signs(), &sylvester(4).unwrap());
        assert!(hpp.signs().is_hadamard());
    }

    #[test]
    fn reference_permutation_is_identity_order() {
        for t in CompositionTree::enumerate_up_to(5, &[NodeKind::Pair, NodeKind::Triple]) {
            let hpp = build_from_tree(&t).unwrap();
            assert_eq!(hpp.perms()[0], Permutation::identity(hpp.n()));
        }
    }

    #[test]
    fn labels_round_trip() {
        let shape = [2, 3, 2];
        for y in 0..12 {
            let l = decode_label(&shape, y).unwrap();
            assert_eq!(encode_label(&shape, &l).unwrap(), y);
        }
        assert_eq!(decode_label(&shape, 1).unwrap(), vec![1, 0, 0]);
        assert_eq!(decode_label(&shape, 2).unwrap(), vec![0, 1, 0]);
        assert!(decode_label(&shape, 12).is_err());
        assert!(encode_label(&shape, &[0, 3, 0]).is_err());
        assert!(encode_label(&shape, &[0, 0]).is_err());
    }

    #[test]
    fn instance_validation() {
        let s = sylvester(1).unwrap();
        assert!(HppInstance::new(2, vec![Permutation::identity(2)], s.clone(), vec![2]).is_err());
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(HppInstance::new(
            1,
            vec![Permutation::identity(1), Permutation::identity(1)],
            s.clone(),
            vec![2]
        )
        .is_err());
        assert!(HppInstance::new(
            2,
            vec![Permutation::identity(2), Permutation::reversed(2)],
            s,
            vec![3]
        )
        .is_err());
    }
}

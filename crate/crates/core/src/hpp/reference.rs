//! Hand-picked gate rows for the three smallest instances.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{CompositionTree, GateAssignment};
use crate::qmat::{ComplexMatrix, Pauli, UnitaryGate};
use crate::C64;

fn row(mats: Vec<ComplexMatrix>) -> GateAssignment {
    GateAssignment::new(mats.into_iter().map(|m| UnitaryGate::new(m).expect("unitary")).collect())
        .expect("qubit gates")
}

/// `(sigma_y + sign * sigma_z) / sqrt(2)`.
fn tilted(sign: f64) -> ComplexMatrix {
    (&Pauli::Y.matrix() + &Pauli::Z.matrix().scale(C64::new(sign, 0.0))).scale(C64::new(FRAC_1_SQRT_2, 0.0))
}

/// Reference gates for `pair`, `pair(slot1:pair)` and `triple` with label
/// `y`; `None` for any other tree or an out-of-range label.
pub fn reference_gates(tree: &CompositionTree, y: &[usize]) -> Option<GateAssignment> {
    use Pauli::*;
    let spec = tree.to_string();
    let gates = match (spec.as_str(), y) {
        ("pair", [0]) => row(vec![X.matrix(), X.matrix()]),
        ("pair", [1]) => row(vec![Y.matrix(), X.matrix()]),
        ("pair(slot1:pair)", [y1, y2]) if *y1 < 2 && *y2 < 2 => {
            let first = if *y1 == 0 { X } else { Y };
            if *y2 == 0 {
                row(vec![first.matrix(), X.matrix(), I.matrix()])
            } else {
                row(vec![first.matrix(), tilted(1.0), tilted(-1.0)])
            }
        }
        ("triple", [0]) => row(vec![Y.matrix(), Z.matrix(), Z.matrix()]),
        ("triple", [1]) => row(vec![X.matrix(), Y.matrix(), Z.matrix()]),
        _ => return None,
    };
    Some(gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpp::{build_from_tree, verify_promise};

    #[test]
    fn reference_rows_satisfy_their_labels() {
        for spec in ["pair", "pair(slot1:pair)", "triple"] {
            let tree: CompositionTree = spec.parse().unwrap();
            let hpp = build_from_tree(&tree).unwrap();
            for y in 0..hpp.n_x() {
                let labels = hpp.decode_label(y).unwrap();
                let gates = reference_gates(&tree, &labels).unwrap();
                assert_eq!(verify_promise(&hpp, &gates).unwrap(), labels);
            }
        }
        let bigger: CompositionTree = "pair(slot0:pair)".parse().unwrap();
        assert!(reference_gates(&bigger, &[0, 0]).is_none());
        assert!(reference_gates(&"pair".parse().unwrap(), &[2]).is_none());
    }
}

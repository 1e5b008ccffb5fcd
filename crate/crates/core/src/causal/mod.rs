//! Fixed-order circuits with quantum-controlled swaps and an exact query
//! ledger.
//!
//! A [`CausalCircuit`] lists registers (control qudits and data wires) and
//! instructions. Black boxes sit at fixed positions, so every
//! [`Instruction::BlackBox`] is one query whatever the control state. The
//! circuits of this module route the target through auxiliary wires with
//! controlled swaps so that different control branches see different gate
//! orders.

mod circuits;
mod exec;
mod recursive;

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::hadamard::{HadamardError, SignMatrix};
use crate::hpp::HppError;
use crate::qmat::QmatError;
use crate::switch::SwitchError;

pub use circuits::{
    build_circuit_fig3, build_circuit_fig4, build_sim_switch_circuit, solve_fig3, solve_fig4,
    solve_sim_switch, table_two_tree,
};
pub use exec::{run_circuit, run_circuit_dense, BranchedState, Measurement, ProductState, RunResult, DENSE_LIMIT};
pub use recursive::{
    build_recursive_circuit, query_bound, recursive_solve, BlockAuxiliary, RecursivePlan, SideJob,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CausalError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("measurement of `{register}` is not deterministic (largest probability {max_probability})")]
    NonDeterministicMeasurement { register: String, max_probability: f64 },
    #[error("state too large for the dense executor: {0} amplitudes")]
    TooLarge(usize),
    #[error("sign matrix column 0 must be all +1 to prepare the uniform control state")]
    UnsupportedSigns,
    #[error(transparent)]
    Hpp(#[from] HppError),
    #[error(transparent)]
    Hadamard(#[from] HadamardError),
    #[error(transparent)]
    Matrix(#[from] QmatError),
    #[error(transparent)]
    Switch(#[from] SwitchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterKind {
    Control,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
    pub kind: RegisterKind,
}

/// Register operands are indices into [`CausalCircuit::registers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    Hadamard { control: usize, signs: SignMatrix },
    /// Swaps data wires `a` and `b` on the control values listed in `values`.
    ControlledSwap { control: usize, values: Vec<usize>, a: usize, b: usize },
    BlackBox { gate: usize, wire: usize },
    InverseHadamard { control: usize, signs: SignMatrix },
    Measure { control: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalCircuit {
    pub gate_count: usize,
    pub registers: Vec<Register>,
    pub instructions: Vec<Instruction>,
}

impl CausalCircuit {
    pub fn register_index(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name == name)
    }

    /// Black-box calls counted from the instruction list.
    pub fn static_ledger(&self) -> QueryLedger {
        let mut ledger = QueryLedger::new(self.gate_count);
        for ins in &self.instructions {
            if let Instruction::BlackBox { gate, .. } = ins {
                ledger.record(*gate);
            }
        }
        ledger
    }

    pub fn validate(&self) -> Result<(), CausalError> {
        let bad = |m: String| Err(CausalError::InvalidCircuit(m));
        for (i, r) in self.registers.iter().enumerate() {
            if r.dim == 0 {
                return bad(format!("register `{}` has dimension 0", r.name));
            }
            if self.registers[..i].iter().any(|o| o.name == r.name) {
                return bad(format!("duplicate register name `{}`", r.name));
            }
        }
        let reg = |i: usize, kind: RegisterKind| -> Result<&Register, CausalError> {
            match self.registers.get(i) {
                Some(r) if r.kind == kind => Ok(r),
                Some(r) => Err(CausalError::InvalidCircuit(format!(
                    "register `{}` is not a {kind:?} register",
                    r.name
                ))),
                None => Err(CausalError::InvalidCircuit(format!("no register {i}"))),
            }
        };
        for (pos, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instruction::Hadamard { control, signs }
                | Instruction::InverseHadamard { control, signs } => {
                    let c = reg(*control, RegisterKind::Control)?;
                    if c.dim != signs.size() {
                        return bad(format!(
                            "instruction {pos}: sign matrix of size {} on register `{}` of dimension {}",
                            signs.size(),
                            c.name,
                            c.dim
                        ));
                    }
                    if !signs.is_hadamard() {
                        return Err(HadamardError::NotHadamard.into());
                    }
                }
                Instruction::ControlledSwap { control, values, a, b } => {
                    let c = reg(*control, RegisterKind::Control)?;
                    let (ra, rb) = (reg(*a, RegisterKind::Data)?, reg(*b, RegisterKind::Data)?);
                    if a == b || ra.dim != rb.dim {
                        return bad(format!(
                            "instruction {pos}: cannot swap `{}` with `{}`",
                            ra.name, rb.name
                        ));
                    }
                    if values.windows(2).any(|w| w[0] >= w[1]) || values.last().is_some_and(|&v| v >= c.dim) {
                        return bad(format!(
                            "instruction {pos}: control values must be sorted, distinct and below {}",
                            c.dim
                        ));
                    }
                }
                Instruction::BlackBox { gate, wire } => {
                    let w = reg(*wire, RegisterKind::Data)?;
                    if *gate >= self.gate_count {
                        return bad(format!("instruction {pos}: gate {gate} not declared"));
                    }
                    if w.dim != 2 {
                        return bad(format!("instruction {pos}: black box on non-qubit wire `{}`", w.name));
                    }
                }
                Instruction::Measure { control } => {
                    reg(*control, RegisterKind::Control)?;
                }
            }
        }
        Ok(())
    }
}

/// Incremental, validating construction of a [`CausalCircuit`].
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    circuit: CausalCircuit,
}

impl CircuitBuilder {
    pub fn new(gate_count: usize) -> Self {
        Self {
            circuit: CausalCircuit {
                gate_count,
                registers: Vec::new(),
                instructions: Vec::new(),
            },
        }
    }

    fn register(&mut self, name: &str, dim: usize, kind: RegisterKind) -> Result<usize, CausalError> {
        if dim == 0 || self.circuit.register_index(name).is_some() {
            return Err(CausalError::InvalidCircuit(format!(
                "cannot declare register `{name}` of dimension {dim}"
            )));
        }
        self.circuit.registers.push(Register {
            name: name.to_string(),
            dim,
            kind,
        });
        Ok(self.circuit.registers.len() - 1)
    }

    pub fn control(&mut self, name: &str, dim: usize) -> Result<usize, CausalError> {
        self.register(name, dim, RegisterKind::Control)
    }

    pub fn data(&mut self, name: &str, dim: usize) -> Result<usize, CausalError> {
        self.register(name, dim, RegisterKind::Data)
    }

    fn push(&mut self, ins: Instruction) -> &mut Self {
        self.circuit.instructions.push(ins);
        self
    }

    pub fn hadamard(&mut self, control: usize, signs: SignMatrix) -> &mut Self {
        self.push(Instruction::Hadamard { control, signs })
    }

    pub fn inverse_hadamard(&mut self, control: usize, signs: SignMatrix) -> &mut Self {
        self.push(Instruction::InverseHadamard { control, signs })
    }

    pub fn controlled_swap(&mut self, control: usize, values: &[usize], a: usize, b: usize) -> &mut Self {
        let mut values = values.to_vec();
        values.sort_unstable();
        values.dedup();
        self.push(Instruction::ControlledSwap { control, values, a, b })
    }

    pub fn black_box(&mut self, gate: usize, wire: usize) -> &mut Self {
        self.push(Instruction::BlackBox { gate, wire })
    }

    pub fn measure(&mut self, control: usize) -> &mut Self {
        self.push(Instruction::Measure { control })
    }

    pub fn build(self) -> Result<CausalCircuit, CausalError> {
        self.circuit.validate()?;
        Ok(self.circuit)
    }
}

/// Per-gate black-box call counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryLedger {
    counts: Vec<usize>,
}

impl QueryLedger {
    pub fn new(gate_count: usize) -> Self {
        Self {
            counts: vec![0; gate_count],
        }
    }

    pub fn record(&mut self, gate: usize) {
        if gate >= self.counts.len() {
            self.counts.resize(gate + 1, 0);
        }
        self.counts[gate] += 1;
    }

    pub fn record_many(&mut self, gate: usize, times: usize) {
        for _ in 0..times {
            self.record(gate);
        }
    }

    /// Adds `other`, whose gate `g` is this ledger's gate `g + offset`.
    pub fn absorb(&mut self, other: &QueryLedger, offset: usize) {
        for (g, &c) in other.counts.iter().enumerate() {
            self.record_many(g + offset, c);
        }
    }

    pub fn count(&self, gate: usize) -> usize {
        self.counts.get(gate).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `{"0": c0, "1": c1, ..., "total": t}`.
    pub fn to_map(&self) -> BTreeMap<String, usize> {
        let mut m: BTreeMap<String, usize> = self
            .counts
            .iter()
            .enumerate()
            .map(|(g, &c)| (g.to_string(), c))
            .collect();
        m.insert("total".into(), self.total());
        m
    }
}

impl Serialize for QueryLedger {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.counts.len() + 1))?;
        for (g, c) in self.counts.iter().enumerate() {
            map.serialize_entry(&g.to_string(), c)?;
        }
        map.serialize_entry("total", &self.total())?;
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalReport {
    pub recovered_y: Vec<usize>,
    pub ledger: QueryLedger,
    /// Largest `| sqrt(P(v)) - [v == outcome] |` over all measurements.
    pub residual: f64,
    pub bound: f64,
    /// `|<Pi_0 psi | target>|` for the main circuit's target wire.
    pub target_fidelity: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::sylvester;

    #[test]
    fn builder_validates() {
        let mut b = CircuitBuilder::new(1);
        let c = b.control("c", 2).unwrap();
        let t = b.data("t", 2).unwrap();
        assert!(b.control("c", 2).is_err());
        b.hadamard(c, sylvester(1).unwrap()).black_box(0, t).measure(c);
        let circuit = b.build().unwrap();
        assert_eq!(circuit.static_ledger().total(), 1);

        let mut b = CircuitBuilder::new(1);
        b.control("c", 2).unwrap();
        let t = b.data("t", 2).unwrap();
        b.black_box(1, t);
        assert!(b.build().is_err());

        let mut b = CircuitBuilder::new(1);
        let c2 = b.control("c", 4).unwrap();
        b.hadamard(c2, sylvester(1).unwrap());
        assert!(b.build().is_err());

        let mut b = CircuitBuilder::new(1);
        b.control("c", 2).unwrap();
        let t = b.data("t", 2).unwrap();
        b.controlled_swap(c, &[1], t, t);
        assert!(b.build().is_err());
    }

    #[test]
    fn ledger_json() {
        let mut l = QueryLedger::new(3);
        l.record_many(0, 2);
        l.record_many(1, 2);
        l.record(2);
        assert_eq!(
            serde_json::to_string(&l).unwrap(),
            r#"{"0":2,"1":2,"2":1,"total":5}"#
        );
        let mut sum = QueryLedger::new(1);
        sum.absorb(&l, 1);
        assert_eq!(sum.counts(), &[0, 2, 2, 1]);
        assert_eq!(sum.to_map()["total"], 5);
    }

    #[test]
    fn circuit_json_round_trip() {
        let c = build_circuit_fig3().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: CausalCircuit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        back.validate().unwrap();
    }
}

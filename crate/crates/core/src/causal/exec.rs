//! Circuit executors.
//!
//! [`run_circuit`] keeps the state as a sum of branches
//! `sum_t |c_t> (x) |phi_t^1> (x) ... (x) |phi_t^m>`, where `c_t` is a sparse
//! vector over the joint control index and every data wire carries its own
//! qubit vector. Swaps split branches, black boxes act wire-wise, and
//! branches whose data parts agree up to a scalar are merged before any
//! control transform or measurement so they can interfere. The memory cost
//! follows the number of distinct data configurations instead of the full
//! Hilbert space.
//!
//! [`run_circuit_dense`] is a plain state-vector reference for small circuits.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{CausalCircuit, CausalError, Instruction, QueryLedger, Register, RegisterKind};
use crate::hadamard::{apply_hadamard, apply_inverse_hadamard, SignMatrix};
use crate::hpp::GateAssignment;
use crate::qmat::ComplexMatrix;
use crate::switch::{StateVector, READOUT_THRESHOLD};
use crate::C64;

/// Largest state the dense executor and [`BranchedState::to_dense`] accept.
pub const DENSE_LIMIT: usize = 1 << 22;

const PRUNE: f64 = 1e-14;
const MERGE_TOL: f64 = 1e-10;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// One normalized vector per register, in register order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    vectors: Vec<Vec<C64>>,
}

impl ProductState {
    pub fn new(vectors: Vec<Vec<C64>>) -> Result<Self, CausalError> {
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if v.is_empty() || (norm - 1.0).abs() > 1e-9 {
                return Err(CausalError::Dimension(format!(
                    "register vector has norm {norm}"
                )));
            }
            out.push(v.into_iter().map(|a| a / norm).collect());
        }
        Ok(Self { vectors: out })
    }

    /// Every register in `|0>`.
    pub fn zeros(circuit: &CausalCircuit) -> Self {
        Self {
            vectors: circuit
                .registers
                .iter()
                .map(|r| {
                    let mut v = vec![zero(); r.dim];
                    v[0] = C64::new(1.0, 0.0);
                    v
                })
                .collect(),
        }
    }

    pub fn set(&mut self, register: usize, vector: Vec<C64>) -> Result<(), CausalError> {
        let slot = self
            .vectors
            .get_mut(register)
            .ok_or_else(|| CausalError::Dimension(format!("no register {register}")))?;
        if slot.len() != vector.len() {
            return Err(CausalError::Dimension(format!(
                "register {register} has dimension {}, got {}",
                slot.len(),
                vector.len()
            )));
        }
        let checked = ProductState::new(vec![vector])?;
        *slot = checked.vectors.into_iter().next().expect("one vector");
        Ok(())
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub register: usize,
    pub name: String,
    pub value: usize,
    pub probability: f64,
    /// `max_v | sqrt(P(v)) - [v == value] |`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub measurements: Vec<Measurement>,
    pub ledger: QueryLedger,
    pub state: BranchedState,
}

impl RunResult {
    pub fn outcome(&self, register: usize) -> Option<usize> {
        self.measurements
            .iter()
            .rev()
            .find(|m| m.register == register)
            .map(|m| m.value)
    }

    pub fn max_residual(&self) -> f64 {
        self.measurements.iter().map(|m| m.residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
struct Branch {
    control: BTreeMap<usize, C64>,
    wires: Vec<Vec<C64>>,
}

/// Sum of control-sparse product branches; see the module docs.
#[derive(Debug, Clone)]
pub struct BranchedState {
    registers: Vec<Register>,
    /// Position of each register among the controls or among the wires.
    slot: Vec<usize>,
    control_dims: Vec<usize>,
    control_strides: Vec<usize>,
    branches: Vec<Branch>,
}

impl BranchedState {
    pub fn new(registers: &[Register], initial: &ProductState) -> Result<Self, CausalError> {
        if initial.vectors.len() != registers.len()
            || registers.iter().zip(&initial.vectors).any(|(r, v)| r.dim != v.len())
        {
            return Err(CausalError::Dimension(
                "initial product state does not match the registers".into(),
            ));
        }
        let mut slot = Vec::with_capacity(registers.len());
        let mut control_dims = Vec::new();
        let mut wires = Vec::new();
        let mut controls = Vec::new();
        for (r, v) in registers.iter().zip(&initial.vectors) {
            match r.kind {
                RegisterKind::Control => {
                    slot.push(control_dims.len());
                    control_dims.push(r.dim);
                    controls.push(v);
                }
                RegisterKind::Data => {
                    slot.push(wires.len());
                    wires.push(v.clone());
                }
            }
        }
        control_dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| CausalError::Dimension("joint control space overflows".into()))?;
        let mut control_strides = vec![1; control_dims.len()];
        for k in (0..control_dims.len().saturating_sub(1)).rev() {
            control_strides[k] = control_strides[k + 1] * control_dims[k + 1];
        }
        let mut control = BTreeMap::new();
        control.insert(0usize, C64::new(1.0, 0.0));
        for (k, v) in controls.iter().enumerate() {
            let mut next = BTreeMap::new();
            for (&idx, &a) in &control {
                for (digit, &b) in v.iter().enumerate() {
                    let amp = a * b;
                    if amp.norm() > PRUNE {
                        next.insert(idx + digit * control_strides[k], amp);
                    }
                }
            }
            control = next;
        }
        Ok(Self {
            registers: registers.to_vec(),
            slot,
            control_dims,
            control_strides,
            branches: vec![Branch { control, wires }],
        })
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    fn check_kind(&self, register: usize, kind: RegisterKind) -> Result<usize, CausalError> {
        match self.registers.get(register) {
            Some(r) if r.kind == kind => Ok(self.slot[register]),
            _ => Err(CausalError::Dimension(format!(
                "register {register} is not a {kind:?} register"
            ))),
        }
    }

    fn digit(&self, k: usize, idx: usize) -> usize {
        (idx / self.control_strides[k]) % self.control_dims[k]
    }

    pub fn swap(&mut self, control: usize, values: &[usize], a: usize, b: usize) -> Result<(), CausalError> {
        let k = self.check_kind(control, RegisterKind::Control)?;
        let (wa, wb) = (
            self.check_kind(a, RegisterKind::Data)?,
            self.check_kind(b, RegisterKind::Data)?,
        );
        let mut mask = vec![false; self.control_dims[k]];
        for &v in values {
            mask[v] = true;
        }
        let mut out = Vec::with_capacity(self.branches.len());
        for mut br in std::mem::take(&mut self.branches) {
            let (hit, miss): (BTreeMap<_, _>, BTreeMap<_, _>) = br
                .control
                .iter()
                .map(|(&i, &v)| (i, v))
                .partition(|(i, _)| mask[self.digit(k, *i)]);
            if miss.is_empty() {
                br.wires.swap(wa, wb);
                out.push(br);
            } else if hit.is_empty() {
                out.push(br);
            } else {
                let mut swapped = br.wires.clone();
                swapped.swap(wa, wb);
                out.push(Branch {
                    control: miss,
                    wires: br.wires,
                });
                out.push(Branch {
                    control: hit,
                    wires: swapped,
                });
            }
        }
        self.branches = out;
        Ok(())
    }

    pub fn apply_gate(&mut self, wire: usize, m: &ComplexMatrix) -> Result<(), CausalError> {
        let w = self.check_kind(wire, RegisterKind::Data)?;
        for br in &mut self.branches {
            br.wires[w] = m.apply(&br.wires[w])?;
        }
        Ok(())
    }

    /// Folds together branches whose wire states agree up to a scalar.
    pub fn merge(&mut self) {
        let mut reps: Vec<Branch> = Vec::new();
        'outer: for br in std::mem::take(&mut self.branches) {
            for rep in &mut reps {
                if let Some(alpha) = proportional(&rep.wires, &br.wires) {
                    for (idx, a) in br.control {
                        *rep.control.entry(idx).or_insert_with(zero) += alpha * a;
                    }
                    continue 'outer;
                }
            }
            reps.push(br);
        }
        for rep in &mut reps {
            rep.control.retain(|_, a| a.norm() > PRUNE);
        }
        reps.retain(|r| !r.control.is_empty());
        self.branches = reps;
    }

    /// Applies `H` (or `H^{-1}`) built from `signs` to one control register.
    pub fn control_transform(
        &mut self,
        control: usize,
        signs: &SignMatrix,
        inverse: bool,
    ) -> Result<(), CausalError> {
        let k = self.check_kind(control, RegisterKind::Control)?;
        let (dim, stride) = (self.control_dims[k], self.control_strides[k]);
        if signs.size() != dim {
            return Err(CausalError::Dimension(format!(
                "sign matrix of size {} on a control of dimension {dim}",
                signs.size()
            )));
        }
        self.merge();
        for br in &mut self.branches {
            let mut groups: BTreeMap<usize, Vec<C64>> = BTreeMap::new();
            for (&idx, &a) in &br.control {
                let digit = (idx / stride) % dim;
                groups
                    .entry(idx - digit * stride)
                    .or_insert_with(|| vec![zero(); dim])[digit] = a;
            }
            let mut control = BTreeMap::new();
            for (base, mut v) in groups {
                if inverse {
                    apply_inverse_hadamard(signs, &mut v, 1)?;
                } else {
                    apply_hadamard(signs, &mut v, 1)?;
                }
                for (digit, a) in v.into_iter().enumerate() {
                    if a.norm() > PRUNE {
                        control.insert(base + digit * stride, a);
                    }
                }
            }
            br.control = control;
        }
        self.branches.retain(|b| !b.control.is_empty());
        Ok(())
    }

    fn wire_overlap(&self, s: usize, t: usize, skip: Option<usize>) -> C64 {
        self.branches[s]
            .wires
            .iter()
            .zip(&self.branches[t].wires)
            .enumerate()
            .filter(|(w, _)| Some(*w) != skip)
            .map(|(_, (a, b))| dot(a, b))
            .product()
    }

    fn control_overlap(&self, s: usize, t: usize) -> C64 {
        let (a, b) = (&self.branches[s].control, &self.branches[t].control);
        a.iter()
            .filter_map(|(idx, x)| b.get(idx).map(|y| x.conj() * y))
            .sum()
    }

    /// Outcome distribution of one control register.
    pub fn control_probabilities(&self, control: usize) -> Result<Vec<f64>, CausalError> {
        let k = self.check_kind(control, RegisterKind::Control)?;
        let mut probs = vec![0.0; self.control_dims[k]];
        for s in 0..self.branches.len() {
            for (&idx, a) in &self.branches[s].control {
                probs[self.digit(k, idx)] += a.norm_sqr();
            }
            for t in s + 1..self.branches.len() {
                let g = self.wire_overlap(s, t, None);
                if g.norm() == 0.0 {
                    continue;
                }
                let other = &self.branches[t].control;
                for (&idx, a) in &self.branches[s].control {
                    if let Some(b) = other.get(&idx) {
                        probs[self.digit(k, idx)] += 2.0 * (a.conj() * b * g).re;
                    }
                }
            }
        }
        Ok(probs)
    }

    /// Reads a control register that must be (numerically) in a basis state
    /// and projects onto the outcome.
    pub fn measure(&mut self, control: usize) -> Result<Measurement, CausalError> {
        self.merge();
        let probs = self.control_probabilities(control)?;
        let name = self.registers[control].name.clone();
        let (value, &p) = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| CausalError::Dimension("empty control register".into()))?;
        if p < READOUT_THRESHOLD {
            return Err(CausalError::NonDeterministicMeasurement {
                register: name,
                max_probability: p,
            });
        }
        let residual = probs
            .iter()
            .enumerate()
            .map(|(v, q)| (q.max(0.0).sqrt() - if v == value { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let k = self.slot[control];
        let scale = 1.0 / p.sqrt();
        let (strides, dims) = (&self.control_strides, &self.control_dims);
        for br in &mut self.branches {
            br.control
                .retain(|&idx, _| (idx / strides[k]) % dims[k] == value);
            br.control.values_mut().for_each(|a| *a *= scale);
        }
        self.branches.retain(|b| !b.control.is_empty());
        Ok(Measurement {
            register: control,
            name,
            value,
            probability: p,
            residual,
        })
    }

    /// `<psi| rho_w |psi>` for the reduced state of a data wire.
    pub fn wire_fidelity(&self, wire: usize, psi: &[C64]) -> Result<f64, CausalError> {
        let w = self.check_kind(wire, RegisterKind::Data)?;
        if psi.len() != self.registers[wire].dim {
            return Err(CausalError::Dimension("probe vector has the wrong length".into()));
        }
        let mut f = zero();
        for s in 0..self.branches.len() {
            let ps = dot(psi, &self.branches[s].wires[w]);
            for t in 0..self.branches.len() {
                let k = self.control_overlap(t, s) * self.wire_overlap(t, s, Some(w));
                if k.norm() == 0.0 {
                    continue;
                }
                let pt = dot(psi, &self.branches[t].wires[w]);
                f += k * ps * pt.conj();
            }
        }
        Ok(f.re)
    }

    pub fn norm(&self) -> f64 {
        let mut total = zero();
        for s in 0..self.branches.len() {
            for t in 0..self.branches.len() {
                total += self.control_overlap(s, t) * self.wire_overlap(s, t, None);
            }
        }
        total.re.max(0.0).sqrt()
    }

    /// Full state vector over all registers in declaration order (first
    /// register most significant).
    pub fn to_dense(&self) -> Result<StateVector, CausalError> {
        let dims: Vec<usize> = self.registers.iter().map(|r| r.dim).collect();
        let len = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&l| l <= DENSE_LIMIT)
            .ok_or(CausalError::TooLarge(usize::MAX))?;
        let mut strides = vec![1; dims.len()];
        for r in (0..dims.len().saturating_sub(1)).rev() {
            strides[r] = strides[r + 1] * dims[r + 1];
        }
        let data_regs: Vec<usize> = (0..self.registers.len())
            .filter(|&r| self.registers[r].kind == RegisterKind::Data)
            .collect();
        let control_regs: Vec<usize> = (0..self.registers.len())
            .filter(|&r| self.registers[r].kind == RegisterKind::Control)
            .collect();
        let mut amps = vec![zero(); len];
        for br in &self.branches {
            // (offset, amplitude) over the data wires
            let mut data = vec![(0usize, C64::new(1.0, 0.0))];
            for &r in &data_regs {
                let v = &br.wires[self.slot[r]];
                let stride = strides[r];
                data = data
                    .iter()
                    .flat_map(|&(off, a)| {
                        v.iter()
                            .enumerate()
                            .map(move |(d, &b)| (off + d * stride, a * b))
                    })
                    .collect();
            }
            for (&idx, &c) in &br.control {
                let off: usize = control_regs
                    .iter()
                    .enumerate()
                    .map(|(k, &r)| self.digit(k, idx) * strides[r])
                    .sum();
                for &(d, a) in &data {
                    amps[off + d] += c * a;
                }
            }
        }
        StateVector::normalized(dims, amps).map_err(CausalError::from)
    }
}

/// `alpha` with `b = alpha a` wire by wire, if it exists.
fn proportional(a: &[Vec<C64>], b: &[Vec<C64>]) -> Option<C64> {
    let mut alpha = C64::new(1.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let lambda = dot(x, y);
        let resid: f64 = x
            .iter()
            .zip(y)
            .map(|(p, q)| (q - lambda * p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if resid > MERGE_TOL {
            return None;
        }
        alpha *= lambda;
    }
    Some(alpha)
}

fn check_gates(circuit: &CausalCircuit, gates: &GateAssignment) -> Result<(), CausalError> {
    circuit.validate()?;
    if gates.len() != circuit.gate_count {
        return Err(crate::hpp::HppError::GateCount {
            expected: circuit.gate_count,
            got: gates.len(),
        }
        .into());
    }
    Ok(())
}

/// Executes `circuit` on the branched representation.
pub fn run_circuit(
    circuit: &CausalCircuit,
    gates: &GateAssignment,
    initial: &ProductState,
) -> Result<RunResult, CausalError> {
    check_gates(circuit, gates)?;
    let mut state = BranchedState::new(&circuit.registers, initial)?;
    let mut ledger = QueryLedger::new(circuit.gate_count);
    let mut measurements = Vec::new();
    for ins in &circuit.instructions {
        match ins {
            Instruction::Hadamard { control, signs } => state.control_transform(*control, signs, false)?,
            Instruction::InverseHadamard { control, signs } => {
                state.control_transform(*control, signs, true)?
            }
            Instruction::ControlledSwap { control, values, a, b } => state.swap(*control, values, *a, *b)?,
            Instruction::BlackBox { gate, wire } => {
                ledger.record(*gate);
                state.apply_gate(*wire, gates.gates()[*gate].matrix())?;
            }
            Instruction::Measure { control } => measurements.push(state.measure(*control)?),
        }
    }
    state.merge();
    Ok(RunResult {
        measurements,
        ledger,
        state,
    })
}

/// Executes `circuit` on a dense state vector (registers in declaration
/// order, first most significant).
pub fn run_circuit_dense(
    circuit: &CausalCircuit,
    gates: &GateAssignment,
    initial: &StateVector,
) -> Result<(Vec<Measurement>, QueryLedger, StateVector), CausalError> {
    check_gates(circuit, gates)?;
    let dims: Vec<usize> = circuit.registers.iter().map(|r| r.dim).collect();
    if initial.dims() != dims.as_slice() {
        return Err(CausalError::Dimension(format!(
            "initial state dims {:?} do not match registers {dims:?}",
            initial.dims()
        )));
    }
    if initial.amplitudes().len() > DENSE_LIMIT {
        return Err(CausalError::TooLarge(initial.amplitudes().len()));
    }
    let mut strides = vec![1; dims.len()];
    for r in (0..dims.len().saturating_sub(1)).rev() {
        strides[r] = strides[r + 1] * dims[r + 1];
    }
    let digit = |idx: usize, r: usize| (idx / strides[r]) % dims[r];
    let mut v = initial.amplitudes().to_vec();
    let mut ledger = QueryLedger::new(circuit.gate_count);
    let mut measurements = Vec::new();
    for ins in &circuit.instructions {
        match ins {
            Instruction::Hadamard { control, signs } => apply_hadamard(signs, &mut v, strides[*control])?,
            Instruction::InverseHadamard { control, signs } => {
                apply_inverse_hadamard(signs, &mut v, strides[*control])?
            }
            Instruction::ControlledSwap { control, values, a, b } => {
                let (sa, sb) = (strides[*a], strides[*b]);
                for idx in 0..v.len() {
                    let (da, db) = (digit(idx, *a), digit(idx, *b));
                    if da < db && values.binary_search(&digit(idx, *control)).is_ok() {
                        let j = idx - da * sa - db * sb + db * sa + da * sb;
                        v.swap(idx, j);
                    }
                }
            }
            Instruction::BlackBox { gate, wire } => {
                ledger.record(*gate);
                let m = gates.gates()[*gate].matrix();
                let s = strides[*wire];
                for idx in 0..v.len() {
                    if digit(idx, *wire) == 0 {
                        let (x, y) = (v[idx], v[idx + s]);
                        v[idx] = m[(0, 0)] * x + m[(0, 1)] * y;
                        v[idx + s] = m[(1, 0)] * x + m[(1, 1)] * y;
                    }
                }
            }
            Instruction::Measure { control } => {
                let mut probs = vec![0.0; dims[*control]];
                for (idx, a) in v.iter().enumerate() {
                    probs[digit(idx, *control)] += a.norm_sqr();
                }
                let (value, &p) = probs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("dimension >= 1");
                let name = circuit.registers[*control].name.clone();
                if p < READOUT_THRESHOLD {
                    return Err(CausalError::NonDeterministicMeasurement {
                        register: name,
                        max_probability: p,
                    });
                }
                let residual = probs
                    .iter()
                    .enumerate()
                    .map(|(u, q)| (q.sqrt() - if u == value { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max);
                let scale = 1.0 / p.sqrt();
                for (idx, a) in v.iter_mut().enumerate() {
                    *a = if digit(idx, *control) == value { *a * scale } else { zero() };
                }
                measurements.push(Measurement {
                    register: *control,
                    name,
                    value,
                    probability: p,
                    residual,
                });
            }
        }
    }
    Ok((measurements, ledger, StateVector::new(dims, v)?))
}

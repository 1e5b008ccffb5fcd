//! The quantum-n-switch solver.
//!
//! `S_n |x>_c |psi> = |x>_c Pi_x |psi>`. Starting from the uniform control
//! superposition, a promise with label `y` leaves the control in the
//! Hadamard-transformed basis state `|y>`, so `H^{-1}` on the control reveals
//! `y` with each gate called once.

use serde::Serialize;
use thiserror::Error;

use crate::hadamard::{apply_inverse_hadamard, HadamardError};
use crate::hpp::{GateAssignment, HppError, HppInstance};
use crate::qmat::{product_of_permutation, QmatError};
use crate::C64;

/// Readout threshold on the largest control probability.
pub const READOUT_THRESHOLD: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwitchError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("control readout is ambiguous: largest probability {max_probability}")]
    ReadoutAmbiguous { max_probability: f64 },
    #[error(transparent)]
    Hpp(#[from] HppError),
    #[error(transparent)]
    Hadamard(#[from] HadamardError),
    #[error(transparent)]
    Matrix(#[from] QmatError),
}

/// Amplitudes over a register product; the last register varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self, SwitchError> {
        let len = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if dims.contains(&0) || len != Some(amplitudes.len()) {
            return Err(SwitchError::Dimension(format!(
                "dims {dims:?} do not match {} amplitudes",
                amplitudes.len()
            )));
        }
        let state = Self { dims, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SwitchError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Normalizes `amplitudes` before validation.
    pub fn normalized(dims: Vec<usize>, mut amplitudes: Vec<C64>) -> Result<Self, SwitchError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SwitchError::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(dims, amplitudes)
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self, SwitchError> {
        let len: usize = dims.iter().product();
        if index >= len {
            return Err(SwitchError::Dimension(format!(
                "basis index {index} out of range {len}"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); len];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self::new(dims, amplitudes)
    }

    /// Tensor product, `self` most significant.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        let mut dims = self.dims.clone();
        dims.extend(&other.dims);
        Self { dims, amplitudes }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64, SwitchError> {
        if self.dims != other.dims {
            return Err(SwitchError::Dimension(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchReport {
    pub recovered_y: Vec<usize>,
    pub label_index: usize,
    pub query_count: usize,
    /// `max_x | sqrt(P(x)) - [x == y] |` for the final control distribution.
    pub residual: f64,
    pub final_target_fidelity: f64,
    /// Second singular value of the control-target amplitude matrix after the switch.
    pub factorization_defect: f64,
}

/// Applies `S_n` to a `[n_x, gate_dim]` state.
pub fn apply_n_switch(
    hpp: &HppInstance,
    gates: &GateAssignment,
    state: &StateVector,
) -> Result<StateVector, SwitchError> {
    let d = hpp.gate_dim();
    if state.dims != [hpp.n_x(), d] {
        return Err(SwitchError::Dimension(format!(
            "switch state must have dims [{}, {d}], got {:?}",
            hpp.n_x(),
            state.dims
        )));
    }
    if gates.len() != hpp.n() {
        return Err(HppError::GateCount {
            expected: hpp.n(),
            got: gates.len(),
        }
        .into());
    }
    let mut out = state.amplitudes.clone();
    for (x, perm) in hpp.perms().iter().enumerate() {
        let block = &mut out[x * d..(x + 1) * d];
        if block.iter().all(|a| a.norm_sqr() == 0.0) {
            continue;
        }
        let product = product_of_permutation(gates.gates(), perm)?;
        let moved = product.apply(block)?;
        block.copy_from_slice(&moved);
    }
    Ok(StateVector {
        dims: state.dims.clone(),
        amplitudes: out,
    })
}

fn uniform_control(n_x: usize, target: &StateVector) -> StateVector {
    let w = 1.0 / (n_x as f64).sqrt();
    let mut amplitudes = Vec::with_capacity(n_x * target.amplitudes.len());
    for _ in 0..n_x {
        amplitudes.extend(target.amplitudes.iter().map(|a| a * w));
    }
    StateVector {
        dims: vec![n_x, target.amplitudes.len()],
        amplitudes,
    }
}

/// Full switch pipeline. `target` defaults to `|0>`.
pub fn switch_solve(
    hpp: &HppInstance,
    gates: &GateAssignment,
    target: Option<&StateVector>,
) -> Result<SwitchReport, SwitchError> {
    let d = hpp.gate_dim();
    let default_target;
    let target = match target {
        Some(t) => t,
        None => {
            default_target = StateVector::basis(vec![d], 0)?;
            &default_target
        }
    };
    if target.dims != [d] {
        return Err(SwitchError::Dimension(format!(
            "target must have dims [{d}], got {:?}",
            target.dims
        )));
    }
    let prepared = uniform_control(hpp.n_x(), target);
    let switched = apply_n_switch(hpp, gates, &prepared)?;
    let factorization_defect = second_singular_value(&switched.amplitudes, d);

    let mut amps = switched.amplitudes;
    apply_inverse_hadamard(hpp.signs(), &mut amps, d)?;
    let probs: Vec<f64> = amps
        .chunks(d)
        .map(|c| c.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    let (y, &p_max) = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("n_x >= 1");
    if p_max < READOUT_THRESHOLD {
        return Err(SwitchError::ReadoutAmbiguous {
            max_probability: p_max,
        });
    }
    let residual = probs
        .iter()
        .enumerate()
        .map(|(x, p)| (p.sqrt() - if x == y { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    let reference = product_of_permutation(gates.gates(), &hpp.perms()[0])?.apply(&target.amplitudes)?;
    let overlap: C64 = reference
        .iter()
        .zip(&amps[y * d..(y + 1) * d])
        .map(|(a, b)| a.conj() * b)
        .sum();

    Ok(SwitchReport {
        recovered_y: hpp.decode_label(y)?,
        label_index: y,
        query_count: hpp.n(),
        residual,
        final_target_fidelity: overlap.norm(),
        factorization_defect,
    })
}

/// Second singular value of the row-major `rows x 2` matrix `data`
/// (columns beyond two are not supported; `cols == 1` gives 0).
///
/// The weak right singular vector `w` comes from the 2x2 Gram matrix and the
/// value itself is `|A w|`, which keeps full relative accuracy near zero.
pub fn second_singular_value(data: &[C64], cols: usize) -> f64 {
    assert!(cols == 1 || cols == 2, "only one or two columns are supported");
    if cols == 1 {
        return 0.0;
    }
    let (mut p, mut q, mut c) = (0.0, 0.0, C64::new(0.0, 0.0));
    for row in data.chunks(2) {
        p += row[0].norm_sqr();
        q += row[1].norm_sqr();
        c += row[0].conj() * row[1];
    }
    let half = 0.5 * (p - q);
    let lambda = 0.5 * (p + q) + (half * half + c.norm_sqr()).sqrt();
    let a = (c, C64::new(lambda - p, 0.0));
    let b = (C64::new(lambda - q, 0.0), c.conj());
    let norm = |v: &(C64, C64)| (v.0.norm_sqr() + v.1.norm_sqr()).sqrt();
    let (v, n) = if norm(&a) >= norm(&b) { (a, norm(&a)) } else { (b, norm(&b)) };
    let w = if n == 0.0 {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    } else {
        (-v.1.conj() / n, v.0.conj() / n)
    };
    data.chunks(2)
        .map(|row| (row[0] * w.0 + row[1] * w.1).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

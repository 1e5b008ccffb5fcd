//! JSON documents: instances, gate lists and solver reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::causal::CausalReport;
use crate::hadamard::SignMatrix;
use crate::hpp::{build_from_tree, CompositionTree, GateAssignment, HppError, HppInstance, Permutation};
use crate::qmat::{ComplexMatrix, UnitaryGate};
use crate::switch::SwitchReport;
use crate::C64;

/// Instances with more permutations than this store their signs factored.
pub const DENSE_SIGNS_LIMIT: usize = 1024;

/// Either the full ±1 matrix (rows indexed by `y`) or its Kronecker factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignsDoc {
    Dense(Vec<Vec<i8>>),
    Factored(SignMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub n: usize,
    pub n_x: usize,
    pub gate_dim: usize,
    pub perms: Vec<Vec<usize>>,
    pub signs: SignsDoc,
    pub label_shape: Vec<usize>,
    pub tree: Option<String>,
}

impl InstanceDoc {
    pub fn from_instance(hpp: &HppInstance) -> Self {
        let signs = if hpp.n_x() <= DENSE_SIGNS_LIMIT {
            SignsDoc::Dense(hpp.signs().to_rows())
        } else {
            SignsDoc::Factored(hpp.signs().clone())
        };
        Self {
            n: hpp.n(),
            n_x: hpp.n_x(),
            gate_dim: hpp.gate_dim(),
            perms: hpp.perms().iter().map(|p| p.to_vec()).collect(),
            signs,
            label_shape: hpp.label_shape().to_vec(),
            tree: hpp.tree().map(ToString::to_string),
        }
    }

    pub fn to_instance(&self) -> Result<HppInstance, HppError> {
        if self.gate_dim != 2 {
            return Err(HppError::InvalidInstance(format!(
                "only qubit gates are supported, got gate_dim {}",
                self.gate_dim
            )));
        }
        let signs = match &self.signs {
            SignsDoc::Dense(rows) => SignMatrix::from_rows(rows.clone())?,
            SignsDoc::Factored(s) => s.clone(),
        };
        let perms = self
            .perms
            .iter()
            .map(|p| Permutation::new(p.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        if perms.len() != self.n_x {
            return Err(HppError::InvalidInstance(format!(
                "n_x = {} but {} permutations",
                self.n_x,
                perms.len()
            )));
        }
        let hpp = HppInstance::new(self.n, perms, signs, self.label_shape.clone())?;
        match &self.tree {
            None => Ok(hpp),
            Some(spec) => {
                let tree: CompositionTree = spec.parse()?;
                let built = build_from_tree(&tree)?;
                if built.perms() != hpp.perms() || built.signs() != hpp.signs() {
                    return Err(HppError::InvalidInstance(format!(
                        "instance does not match its tree `{spec}`"
                    )));
                }
                Ok(built)
            }
        }
    }
}

/// `{"gates": [ [[ [re, im], [re, im] ], [[...], [...]]], ... ]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatesDoc {
    pub gates: Vec<Vec<Vec<[f64; 2]>>>,
}

impl GatesDoc {
    pub fn from_assignment(gates: &GateAssignment) -> Self {
        Self {
            gates: gates
                .gates()
                .iter()
                .map(|g| {
                    g.matrix()
                        .to_rows()
                        .into_iter()
                        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_assignment(&self) -> Result<GateAssignment, HppError> {
        let gates = self
            .gates
            .iter()
            .map(|rows| {
                let rows = rows
                    .iter()
                    .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
                    .collect();
                Ok(UnitaryGate::new(ComplexMatrix::from_rows(rows)?)?)
            })
            .collect::<Result<Vec<_>, HppError>>()?;
        GateAssignment::new(gates)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub y: Vec<usize>,
    /// Per-gate call counts keyed by gate index, plus `"total"`.
    pub queries: BTreeMap<String, usize>,
    pub residual: f64,
    pub bound: f64,
    pub wall_ms: f64,
}

impl SolverEntry {
    pub fn from_switch(report: &SwitchReport, wall_ms: f64) -> Self {
        let mut queries: BTreeMap<String, usize> =
            (0..report.query_count).map(|g| (g.to_string(), 1)).collect();
        queries.insert("total".into(), report.query_count);
        Self {
            y: report.recovered_y.clone(),
            queries,
            residual: report.residual,
            bound: report.query_count as f64,
            wall_ms,
        }
    }

    pub fn from_causal(report: &CausalReport, wall_ms: f64) -> Self {
        Self {
            y: report.recovered_y.clone(),
            queries: report.ledger.to_map(),
            residual: report.residual,
            bound: report.bound,
            wall_ms,
        }
    }

    pub fn total_queries(&self) -> usize {
        self.queries.get("total").copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub instance_ref: String,
    pub solvers: BTreeMap<String, SolverEntry>,
}

//! Dense complex matrices and the small unitary toolbox the other modules use.
//!
//! Matrices are stored row-major. Gate lists are always kept in application
//! order (first applied first); [`product_of_permutation`] reverses that order
//! when it builds the operator, so the first applied gate is the rightmost
//! factor.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

use crate::{C64, TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmatError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{rows}x{cols} matrix cannot hold {len} entries")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("unknown Pauli name `{0}` (expected I, X, Y or Z)")]
    UnknownPauli(String),
    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("matrices are not equal up to a sign")]
    NotProportional,
    #[error("gate index {index} out of range for {count} gates")]
    GateIndex { index: usize, count: usize },
    #[error("empty gate list")]
    Empty,
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, QmatError> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(QmatError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, QmatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(QmatError::BadShape {
                rows: r,
                cols: c,
                len: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, QmatError> {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&v| C64::new(v, 0.0)).collect())
                .collect(),
        )
    }

    /// A column vector.
    pub fn column(entries: Vec<C64>) -> Result<Self, QmatError> {
        let n = entries.len();
        Self::new(n, 1, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols).map(<[C64]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, QmatError> {
        matmul(self, other)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>, QmatError> {
        if v.len() != self.cols {
            return Err(QmatError::DimensionMismatch {
                op: "apply",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok(self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, QmatError> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entrywise modulus of `self + other`.
    pub fn max_abs_sum(&self, other: &Self) -> Result<f64, QmatError> {
        self.check_same_shape(other, "max_abs_sum")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a + b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).is_ok_and(|d| d <= tol)
    }

    /// `max |U^dag U - I|`, or infinity for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<(), QmatError> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(QmatError::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            })
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Panics on shape mismatch; use [`matmul`] for the fallible form.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        matmul(self, rhs).expect("shape mismatch in mul")
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, QmatError> {
    if a.cols != b.rows {
        return Err(QmatError::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Kronecker product; entry `(i*b.rows + k, j*b.cols + l)` is `a[i,j] * b[k,l]`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// A square matrix checked to be unitary within [`TOLERANCE`].
#[derive(Clone, PartialEq)]
pub struct UnitaryGate {
    matrix: ComplexMatrix,
}

impl UnitaryGate {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QmatError> {
        let deviation = matrix.unitarity_deviation();
        if deviation > TOLERANCE {
            return Err(QmatError::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    /// Skips the unitarity check. Only for matrices unitary by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_unitary(1e-8), "untrusted gate: {matrix:?}");
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self * m * self^dag`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.matrix * m) * &self.matrix.adjoint()
    }

    /// Gate product `self * other` (other acts first).
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_trusted(&self.matrix * &other.matrix)
    }
}

impl fmt::Debug for UnitaryGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitaryGate({:?})", self.matrix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let data = match self {
            Pauli::I => vec![l, o, o, l],
            Pauli::X => vec![o, l, l, o],
            Pauli::Y => vec![o, -i, i, o],
            Pauli::Z => vec![l, o, o, -l],
        };
        ComplexMatrix { rows: 2, cols: 2, data }
    }

    pub fn gate(self) -> UnitaryGate {
        UnitaryGate::from_trusted(self.matrix())
    }
}

impl FromStr for Pauli {
    type Err = QmatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            other => Err(QmatError::UnknownPauli(other.to_string())),
        }
    }
}

/// Standard 2x2 Pauli matrix by name (`I`, `X`, `Y`, `Z`).
pub fn pauli(name: &str) -> Result<UnitaryGate, QmatError> {
    Ok(name.parse::<Pauli>()?.gate())
}

/// `(1/sqrt2) [[1, 1], [1, -1]]`.
pub fn hadamard_gate() -> UnitaryGate {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    UnitaryGate::from_trusted(
        ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).expect("static shape"),
    )
}

/// `diag(1, i)`.
pub fn phase_gate() -> UnitaryGate {
    let o = C64::new(0.0, 0.0);
    UnitaryGate::from_trusted(ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![C64::new(1.0, 0.0), o, o, C64::new(0.0, 1.0)],
    })
}

/// Rotation about the z axis by `theta`: `diag(e^{-i theta/2}, e^{i theta/2})`.
pub fn rz(theta: f64) -> UnitaryGate {
    let o = C64::new(0.0, 0.0);
    UnitaryGate::from_trusted(ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![
            C64::from_polar(1.0, -theta / 2.0),
            o,
            o,
            C64::from_polar(1.0, theta / 2.0),
        ],
    })
}

/// The SU(2) element `U` with `U (v . sigma) U^dag = (R v) . sigma` for a
/// proper rotation `R` (row-major 3x3).
pub fn su2_from_rotation(r: [[f64; 3]; 3]) -> UnitaryGate {
    let trace = r[0][0] + r[1][1] + r[2][2];
    let (w, x, y, z) = if trace > 0.0 {
        let s = (1.0 + trace).sqrt() * 2.0;
        (
            0.25 * s,
            (r[2][1] - r[1][2]) / s,
            (r[0][2] - r[2][0]) / s,
            (r[1][0] - r[0][1]) / s,
        )
    } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        (
            (r[2][1] - r[1][2]) / s,
            0.25 * s,
            (r[0][1] + r[1][0]) / s,
            (r[0][2] + r[2][0]) / s,
        )
    } else if r[1][1] > r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        (
            (r[0][2] - r[2][0]) / s,
            (r[0][1] + r[1][0]) / s,
            0.25 * s,
            (r[1][2] + r[2][1]) / s,
        )
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        (
            (r[1][0] - r[0][1]) / s,
            (r[0][2] + r[2][0]) / s,
            (r[1][2] + r[2][1]) / s,
            0.25 * s,
        )
    };
    // U = w I - i (x X + y Y + z Z)
    let m = ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![
            C64::new(w, -z),
            C64::new(-y, -x),
            C64::new(y, -x),
            C64::new(w, z),
        ],
    };
    UnitaryGate::from_trusted(m)
}

/// Builds the operator of a gate sequence given in application order:
/// `order = [a, b, c]` yields `U_c U_b U_a`.
pub fn product_of_permutation(
    gates: &[UnitaryGate],
    order: &[usize],
) -> Result<ComplexMatrix, QmatError> {
    let first = gates.first().ok_or(QmatError::Empty)?;
    let dim = first.dim();
    if let Some(g) = gates.iter().find(|g| g.dim() != dim) {
        return Err(QmatError::DimensionMismatch {
            op: "product_of_permutation",
            left: (dim, dim),
            right: (g.dim(), g.dim()),
        });
    }
    let mut acc = ComplexMatrix::identity(dim);
    for &index in order {
        let gate = gates.get(index).ok_or(QmatError::GateIndex {
            index,
            count: gates.len(),
        })?;
        acc = matmul(gate.matrix(), &acc)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Decides whether `a = +b` or `a = -b` entrywise within `tol`.
///
/// `b` must be unitary. The overlap `tr(b^dag a)/dim` picks which sign is
/// tested first; the decision itself is the entrywise comparison.
pub fn proportionality_sign(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: f64,
) -> Result<Sign, QmatError> {
    if a.shape() != b.shape() || !b.is_square() {
        return Err(QmatError::DimensionMismatch {
            op: "proportionality_sign",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let deviation = b.unitarity_deviation();
    if deviation > tol {
        return Err(QmatError::NotUnitary { deviation });
    }
    let overlap = matmul(&b.adjoint(), a)?.trace() / b.rows() as f64;
    let plus = || a.max_abs_diff(b).map(|d| d <= tol);
    let minus = || a.max_abs_sum(b).map(|d| d <= tol);
    if overlap.re >= 0.0 {
        if plus()? {
            return Ok(Sign::Plus);
        }
        if minus()? {
            return Ok(Sign::Minus);
        }
    } else {
        if minus()? {
            return Ok(Sign::Minus);
        }
        if plus()? {
            return Ok(Sign::Plus);
        }
    }
    Err(QmatError::NotProportional)
}

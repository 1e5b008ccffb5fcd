//! Sign matrices `s(x, y)` and the unitaries `H` built from them.
//!
//! Entries are indexed by column `x` and row `y`. A [`SignMatrix`] is kept as
//! a Kronecker product of small dense factors. Composite indices are mixed
//! radix with the first factor varying fastest: for two factors of sizes `m`
//! and `n`, `x = x2 * m + x1`. Sylvester matrices are `k` copies of the 2x2
//! factor, which matches `(-1)^popcount(x & y)` exactly.
//!
//! The transforms below apply `H` and `H^T` factor by factor, so applying
//! either to a vector costs `O(size * sum of factor sizes)`.

use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmat::ComplexMatrix;
use crate::C64;

/// Largest Sylvester order accepted by [`sylvester`].
pub const MAX_SYLVESTER_ORDER: u32 = 20;
/// Largest composite size accepted by [`kron_sign`].
pub const MAX_SIGN_SIZE: usize = 1 << 20;
/// Largest size for which dense unitaries are materialized.
pub const MAX_DENSE_UNITARY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HadamardError {
    #[error("Sylvester order {0} exceeds the maximum of {MAX_SYLVESTER_ORDER}")]
    OrderTooLarge(u32),
    #[error("sign matrix size {0} exceeds the cap")]
    TooLarge(usize),
    #[error("sign matrix must be square and non-empty")]
    NotSquare,
    #[error("entry at row {row}, column {col} is {value}, expected +1 or -1")]
    BadEntry { row: usize, col: usize, value: i64 },
    #[error("rows of the sign matrix are not pairwise orthogonal")]
    NotHadamard,
    #[error("vector length {got} does not fit a sign matrix of size {size}")]
    Length { got: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Factor {
    n: usize,
    /// Row-major by `y`: `rows[y * n + x] = s(x, y)`.
    rows: Vec<i8>,
}

impl Factor {
    fn sylvester2() -> Self {
        Self {
            n: 2,
            rows: vec![1, 1, 1, -1],
        }
    }

    fn entry(&self, x: usize, y: usize) -> i8 {
        self.rows[y * self.n + x]
    }

    fn is_hadamard(&self) -> bool {
        let n = self.n;
        (0..n).all(|y| {
            (y..n).all(|y2| {
                let dot: i64 = (0..n)
                    .map(|x| i64::from(self.entry(x, y)) * i64::from(self.entry(x, y2)))
                    .sum();
                dot == if y == y2 { n as i64 } else { 0 }
            })
        })
    }
}

/// A square ±1 matrix, stored as a Kronecker product of dense factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SignMatrixRepr", try_from = "SignMatrixRepr")]
pub struct SignMatrix {
    size: usize,
    factors: Vec<Factor>,
}

#[derive(Serialize, Deserialize)]
struct SignMatrixRepr {
    size: usize,
    factors: Vec<Vec<Vec<i8>>>,
}

impl From<SignMatrix> for SignMatrixRepr {
    fn from(s: SignMatrix) -> Self {
        Self {
            size: s.size,
            factors: s
                .factors
                .iter()
                .map(|f| f.rows.chunks(f.n).map(<[i8]>::to_vec).collect())
                .collect(),
        }
    }
}

impl TryFrom<SignMatrixRepr> for SignMatrix {
    type Error = HadamardError;

    fn try_from(repr: SignMatrixRepr) -> Result<Self, Self::Error> {
        let mut out = SignMatrix::trivial();
        for rows in repr.factors {
            let f = SignMatrix::from_rows(rows)?;
            out = out.kron_unchecked(&f)?;
        }
        if out.size != repr.size {
            return Err(HadamardError::Length {
                got: repr.size,
                size: out.size,
            });
        }
        Ok(out)
    }
}

impl SignMatrix {
    /// The 1x1 matrix `[[+1]]`.
    pub fn trivial() -> Self {
        Self {
            size: 1,
            factors: Vec::new(),
        }
    }

    /// Builds a sign matrix from rows (`rows[y][x] = s(x, y)`). Entries must be
    /// ±1; orthogonality is not required here (see [`SignMatrix::is_hadamard`]).
    /// Dense Sylvester input is recognized and stored in factored form.
    pub fn from_rows<T>(rows: Vec<Vec<T>>) -> Result<Self, HadamardError>
    where
        T: Copy + Into<i64>,
    {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(HadamardError::NotSquare);
        }
        if n > MAX_SIGN_SIZE {
            return Err(HadamardError::TooLarge(n));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            for (col, &v) in r.iter().enumerate() {
                match v.into() {
                    1 => flat.push(1i8),
                    -1 => flat.push(-1i8),
                    value => return Err(HadamardError::BadEntry { row, col, value }),
                }
            }
        }
        if n.is_power_of_two() {
            let k = n.trailing_zeros();
            let syl = sylvester(k)?;
            if flat
                .iter()
                .enumerate()
                .all(|(i, &v)| v == syl.entry(i % n, i / n))
            {
                return Ok(syl);
            }
        }
        Ok(Self {
            size: n,
            factors: vec![Factor { n, rows: flat }],
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Sizes of the Kronecker factors, first (fastest varying) first.
    pub fn factor_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.n).collect()
    }

    /// `s(x, y)`: column `x`, row `y`.
    pub fn entry(&self, mut x: usize, mut y: usize) -> i8 {
        assert!(x < self.size && y < self.size, "sign index out of range");
        let mut v = 1i8;
        for f in &self.factors {
            v *= f.entry(x % f.n, y % f.n);
            x /= f.n;
            y /= f.n;
        }
        v
    }

    /// Row `y`, i.e. `s(., y)`.
    pub fn row(&self, y: usize) -> Vec<i8> {
        (0..self.size).map(|x| self.entry(x, y)).collect()
    }

    /// Dense rows `rows[y][x]`.
    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        (0..self.size).map(|y| self.row(y)).collect()
    }

    /// Row orthogonality, decided exactly. The Gram matrix of a Kronecker
    /// product is the Kronecker product of the factor Gram matrices, so it is
    /// diagonal exactly when every factor's is.
    pub fn is_hadamard(&self) -> bool {
        self.factors.iter().all(Factor::is_hadamard)
    }

    pub fn is_sylvester(&self) -> bool {
        self.factors.iter().all(|f| *f == Factor::sylvester2())
    }

    fn kron_unchecked(&self, inner: &Self) -> Result<Self, HadamardError> {
        let size = self
            .size
            .checked_mul(inner.size)
            .filter(|&s| s <= MAX_SIGN_SIZE)
            .ok_or(HadamardError::TooLarge(self.size.saturating_mul(inner.size)))?;
        let mut factors = self.factors.clone();
        factors.extend(inner.factors.iter().cloned());
        Ok(Self { size, factors })
    }

    fn check_len(&self, len: usize, inner: usize) -> Result<(), HadamardError> {
        if inner == 0 || !len.is_multiple_of(self.size * inner) {
            return Err(HadamardError::Length {
                got: len,
                size: self.size,
            });
        }
        Ok(())
    }

    /// Applies the unnormalized sign transform along one axis of `data`.
    ///
    /// `data` is viewed as `[outer][size][inner]`. With `transpose == false`
    /// this computes `out[x] = sum_y s(x, y) v[y]`; with `transpose == true`,
    /// `out[y] = sum_x s(x, y) v[x]`.
    pub fn transform_axis<T>(
        &self,
        data: &mut [T],
        inner: usize,
        transpose: bool,
    ) -> Result<(), HadamardError>
    where
        T: Copy + Default + Add<Output = T> + Neg<Output = T>,
    {
        self.check_len(data.len(), inner)?;
        let mut stride = inner;
        let mut scratch_in: Vec<T> = Vec::new();
        let mut scratch_out: Vec<T> = Vec::new();
        for f in &self.factors {
            let m = f.n;
            let block = m * stride;
            scratch_in.resize(m, T::default());
            scratch_out.resize(m, T::default());
            for start in (0..data.len()).step_by(block) {
                for lo in 0..stride {
                    for (j, slot) in scratch_in.iter_mut().enumerate() {
                        *slot = data[start + lo + j * stride];
                    }
                    for (i, out) in scratch_out.iter_mut().enumerate() {
                        let mut acc = T::default();
                        for (j, &v) in scratch_in.iter().enumerate() {
                            let s = if transpose { f.entry(j, i) } else { f.entry(i, j) };
                            acc = if s > 0 { acc + v } else { acc + (-v) };
                        }
                        *out = acc;
                    }
                    for (i, &v) in scratch_out.iter().enumerate() {
                        data[start + lo + i * stride] = v;
                    }
                }
            }
            stride *= m;
        }
        Ok(())
    }

    /// `t[y] = sum_x s(x, y) sigma[x]` in exact integer arithmetic.
    pub fn correlate_rows(&self, sigma: &[i8]) -> Result<Vec<i64>, HadamardError> {
        if sigma.len() != self.size {
            return Err(HadamardError::Length {
                got: sigma.len(),
                size: self.size,
            });
        }
        let mut t: Vec<i64> = sigma.iter().map(|&v| i64::from(v)).collect();
        self.transform_axis(&mut t, 1, true)?;
        Ok(t)
    }

    /// The unique row `y` with `s(x, y) = sigma[x]` for all `x`, if any.
    pub fn find_row(&self, sigma: &[i8]) -> Result<Option<usize>, HadamardError> {
        let t = self.correlate_rows(sigma)?;
        let n = self.size as i64;
        let mut hits = t.iter().enumerate().filter(|(_, &v)| v == n).map(|(y, _)| y);
        let first = hits.next();
        // distinct rows of a Hadamard matrix cannot both match
        debug_assert!(hits.next().is_none() || !self.is_hadamard());
        Ok(first)
    }
}

/// The `2^k x 2^k` Sylvester matrix, `s(x, y) = (-1)^popcount(x & y)`.
pub fn sylvester(k: u32) -> Result<SignMatrix, HadamardError> {
    if k > MAX_SYLVESTER_ORDER {
        return Err(HadamardError::OrderTooLarge(k));
    }
    Ok(SignMatrix {
        size: 1 << k,
        factors: vec![Factor::sylvester2(); k as usize],
    })
}

/// Composite sign matrix `s((x1, x2), (y1, y2)) = s2(x2, y2) * s1(x1, y1)`
/// with `x = x2 * m + x1`, `y = y2 * m + y1` where `m = s1.size()`.
pub fn kron_sign(s1: &SignMatrix, s2: &SignMatrix) -> Result<SignMatrix, HadamardError> {
    if !s1.is_hadamard() || !s2.is_hadamard() {
        return Err(HadamardError::NotHadamard);
    }
    s1.kron_unchecked(s2)
}

/// `H` with `H|y> = (1/sqrt n) sum_x s(x, y) |x>`: column `y` holds `s(., y)/sqrt n`.
pub fn hadamard_unitary(s: &SignMatrix) -> Result<ComplexMatrix, HadamardError> {
    dense_unitary(s, false)
}

/// `H^{-1} = H^T` (entries are real).
pub fn inverse_hadamard_unitary(s: &SignMatrix) -> Result<ComplexMatrix, HadamardError> {
    dense_unitary(s, true)
}

fn dense_unitary(s: &SignMatrix, transpose: bool) -> Result<ComplexMatrix, HadamardError> {
    if !s.is_hadamard() {
        return Err(HadamardError::NotHadamard);
    }
    let n = s.size();
    if n > MAX_DENSE_UNITARY {
        return Err(HadamardError::TooLarge(n));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let v = if transpose { s.entry(r, c) } else { s.entry(c, r) };
            data.push(C64::new(f64::from(v) * norm, 0.0));
        }
    }
    Ok(ComplexMatrix::new(n, n, data).expect("square by construction"))
}

/// Applies `H` to the `size`-long axis of `data` viewed as `[outer][size][inner]`.
pub fn apply_hadamard(s: &SignMatrix, data: &mut [C64], inner: usize) -> Result<(), HadamardError> {
    normalized_transform(s, data, inner, false)
}

/// Applies `H^{-1}` to the `size`-long axis of `data` viewed as `[outer][size][inner]`.
pub fn apply_inverse_hadamard(
    s: &SignMatrix,
    data: &mut [C64],
    inner: usize,
) -> Result<(), HadamardError> {
    normalized_transform(s, data, inner, true)
}

fn normalized_transform(
    s: &SignMatrix,
    data: &mut [C64],
    inner: usize,
    transpose: bool,
) -> Result<(), HadamardError> {
    if !s.is_hadamard() {
        return Err(HadamardError::NotHadamard);
    }
    s.transform_axis(data, inner, transpose)?;
    let norm = 1.0 / (s.size() as f64).sqrt();
    for v in data.iter_mut() {
        *v *= norm;
    }
    Ok(())
}

//! Dense complex linear algebra.
//!
//! This is the exact classical reference path: every quantity the circuit
//! estimators produce is checked against what these routines compute directly.
//! Matrices are small (at most `2^12` on a side), so plain row-major storage
//! with partial-pivot LU and one-sided Jacobi SVD is sufficient.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Complex amplitude / inner-product value.
pub type ComplexScalar = Complex64;

/// A pivot (or singular value) below this fraction of the largest one marks
/// the matrix as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Largest register, in qubits, the dense oracle path will materialize.
pub const MAX_ORACLE_QUBITS: usize = 12;

/// Largest side length for which error reports carry a full SVD condition
/// number; above it the pivot ratio is reported instead.
const SVD_CONDITION_MAX_DIM: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("matrix is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("A is singular (condition estimate {condition:e})")]
    SingularA { condition: f64 },
    #[error("C is singular (condition estimate {condition:e})")]
    SingularC { condition: f64 },
    #[error("capacitance matrix C^-1 + V A^-1 U is singular (condition estimate {condition:e})")]
    SingularCapacitance { condition: f64 },
    #[error("complex entry in a vector that must be real")]
    ComplexInput,
    #[error("x - y/2 = {0:e} is negative; outside the conjectured formula's domain")]
    ConjectureDomain(f64),
    #[error("dense oracle dimension {dim} exceeds the 2^{max_qubits} cap", max_qubits = MAX_ORACLE_QUBITS)]
    TooLarge { dim: usize },
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Shape("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[DenseVector]) -> Result<Self, LinalgError> {
        let rows = columns.first().map_or(0, DenseVector::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::Shape("columns of unequal length".into()));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> DenseVector {
        DenseVector((0..self.rows).map(|r| self[(r, c)]).collect())
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &DenseVector) -> Result<DenseVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {}x{} by a length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(DenseVector(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<DenseMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut t = self.transpose();
        t.data.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    /// Largest entrywise modulus of `self - other`; `inf` on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<Complex64>);

impl DenseVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        if let Some(i) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &DenseVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    /// Real parts, or `ComplexInput` if any imaginary part is nonzero.
    pub fn to_real(&self) -> Result<Vec<f64>, LinalgError> {
        if !self.is_real() {
            return Err(LinalgError::ComplexInput);
        }
        Ok(self.0.iter().map(|z| z.re).collect())
    }

    pub fn scale(&self, s: Complex64) -> DenseVector {
        DenseVector(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn axpy(&self, s: Complex64, other: &DenseVector) -> DenseVector {
        DenseVector(self.0.iter().zip(&other.0).map(|(&a, &b)| a + s * b).collect())
    }

    pub fn max_abs_diff(&self, other: &DenseVector) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for DenseVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Partial-pivot LU factorization `P M = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: DenseMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

/// `a / b` without the underflow of `|b|²` for tiny `b`.
fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.norm();
    a * (b.conj() / m) / m
}

impl LuDecomposition {
    /// Factors `m`; fails with [`LinalgError::Singular`] when the smallest
    /// pivot is below [`SINGULAR_RTOL`] times the largest.
    pub fn new(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::Shape(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0_f64;

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for c in 0..n {
                    lu.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            min_pivot = min_pivot.min(pmag);
            max_pivot = max_pivot.max(pmag);
            if pmag == 0.0 {
                continue;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = cdiv(lu[(i, k)], pivot);
                lu[(i, k)] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in (k + 1)..n {
                    let sub = factor * lu[(k, c)];
                    lu[(i, c)] -= sub;
                }
            }
        }

        if n == 0 || max_pivot == 0.0 || min_pivot < SINGULAR_RTOL * max_pivot {
            return Err(LinalgError::Singular {
                condition: condition_estimate(m, min_pivot, max_pivot),
            });
        }
        Ok(Self {
            lu,
            perm,
            min_pivot,
            max_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.max_pivot / self.min_pivot
    }

    pub fn solve(&self, b: &DenseVector) -> Result<DenseVector, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::Shape(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        self.substitute(&mut x);
        Ok(DenseVector(x))
    }

    fn substitute(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: Complex64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: Complex64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = cdiv(x[i] - s, row[i]);
        }
    }

    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        let n = self.dim();
        if b.rows != n {
            return Err(LinalgError::Shape(format!(
                "right-hand side with {} rows for a {n}x{n} system",
                b.rows
            )));
        }
        let mut out = DenseMatrix::zeros(n, b.cols);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..b.cols {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.substitute(&mut col);
            for (i, &c) in col.iter().enumerate() {
                out[(i, j)] = c;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve_matrix(&DenseMatrix::identity(self.dim()))
            .expect("identity has matching shape")
    }
}

fn condition_estimate(m: &DenseMatrix, min_pivot: f64, max_pivot: f64) -> f64 {
    if m.rows <= SVD_CONDITION_MAX_DIM {
        condition_number(m)
    } else if min_pivot > 0.0 {
        max_pivot / min_pivot
    } else {
        f64::INFINITY
    }
}

/// 2-norm condition number `s_max / s_min` (infinite for singular input).
pub fn condition_number(m: &DenseMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn inverse(m: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Ok(LuDecomposition::new(m)?.inverse())
}

/// Solves `m x = b` by partial-pivot Gaussian elimination.
pub fn direct_solve(m: &DenseMatrix, b: &DenseVector) -> Result<DenseVector, LinalgError> {
    LuDecomposition::new(m)?.solve(b)
}

/// `(A + U C V)^-1` through the Woodbury identity
/// `A^-1 - A^-1 U (C^-1 + V A^-1 U)^-1 V A^-1`.
pub fn woodbury_inverse(
    a: &DenseMatrix,
    u: &DenseMatrix,
    c: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<DenseMatrix, LinalgError> {
    let n = a.rows;
    let k = c.rows;
    if !a.is_square() || !c.is_square() {
        return Err(LinalgError::Shape("A and C must be square".into()));
    }
    if u.rows != n || u.cols != k || v.rows != k || v.cols != n {
        return Err(LinalgError::Shape(format!(
            "expected U {n}x{k} and V {k}x{n}, got U {}x{} and V {}x{}",
            u.rows, u.cols, v.rows, v.cols
        )));
    }
    let a_lu = LuDecomposition::new(a).map_err(|e| match e {
        LinalgError::Singular { condition } => LinalgError::SingularA { condition },
        other => other,
    })?;
    let c_inv = inverse(c).map_err(|e| match e {
        LinalgError::Singular { condition } => LinalgError::SingularC { condition },
        other => other,
    })?;
    let a_inv = a_lu.inverse();
    let a_inv_u = a_inv.matmul(u)?;
    let capacitance = c_inv.add(&v.matmul(&a_inv_u)?)?;
    let cap_lu = LuDecomposition::new(&capacitance).map_err(|e| match e {
        LinalgError::Singular { condition } => LinalgError::SingularCapacitance { condition },
        other => other,
    })?;
    let v_a_inv = v.matmul(&a_inv)?;
    let correction = a_inv_u.matmul(&cap_lu.solve_matrix(&v_a_inv)?)?;
    a_inv.sub(&correction)
}

/// Singular values in descending order, by one-sided Jacobi rotations.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    // Work on whichever orientation has no more columns than rows.
    let work = if m.cols > m.rows { m.adjoint() } else { m.clone() };
    let (rows, cols) = (work.rows, work.cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut columns: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| work[(i, j)]).collect())
        .collect();

    const MAX_SWEEPS: usize = 80;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (left, right) = columns.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                let alpha: f64 = cp.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cq.iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cp.iter().zip(cq.iter()).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rephase column q so the pair's Gram entry is real, then
                // apply the real Jacobi rotation that zeroes it.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let bq = *b * phase;
                    let ap = *a;
                    *a = ap * c - bq * s;
                    *b = ap * s + bq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// The closed-form singular-value conjecture for `I + u vᵀ` with real `u, v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjecturedConditioning {
    pub kappa: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub x_aux: f64,
    pub y_aux: f64,
}

/// Evaluates
/// `x = |u|²|v|²/2 + u·v + 1`, `y = |u||v| sqrt(|u|²|v|² + 4u·v + 4)`,
/// `S1 = sqrt(x + y/2)`, `S2 = sqrt(x - y/2)`, `κ = S1/S2`.
pub fn conjectured_condition(
    u: &DenseVector,
    v: &DenseVector,
) -> Result<ConjecturedConditioning, LinalgError> {
    if u.len() != v.len() {
        return Err(LinalgError::Shape(format!(
            "u has length {}, v has length {}",
            u.len(),
            v.len()
        )));
    }
    let u = u.to_real()?;
    let v = v.to_real()?;
    let nu2: f64 = u.iter().map(|x| x * x).sum();
    let nv2: f64 = v.iter().map(|x| x * x).sum();
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let prod2 = nu2 * nv2;

    let x_aux = prod2 / 2.0 + dot + 1.0;
    let y_aux = prod2.sqrt() * (prod2 + 4.0 * dot + 4.0).max(0.0).sqrt();
    let lower = x_aux - y_aux / 2.0;
    if lower < -1e-12 * x_aux.abs().max(1.0) {
        return Err(LinalgError::ConjectureDomain(lower));
    }
    let s_max = (x_aux + y_aux / 2.0).sqrt();
    let s_min = lower.max(0.0).sqrt();
    if s_min <= SINGULAR_RTOL * s_max {
        return Err(LinalgError::Singular {
            condition: f64::INFINITY,
        });
    }
    Ok(ConjecturedConditioning {
        kappa: s_max / s_min,
        s_max,
        s_min,
        x_aux,
        y_aux,
    })
}

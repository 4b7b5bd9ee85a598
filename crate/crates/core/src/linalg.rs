//! Small dense linear algebra: LU with partial pivoting for the mobility
//! systems of the explicit large-circle treatment.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "dense matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: "entries must be finite",
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = DenseMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                what: "matrix-vector product",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::LengthMismatch {
                what: "matrix product inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Packed `P·A = L·U` factors: unit-diagonal `L` below the diagonal, `U` on
/// and above it. `perm[i]` is the row of `A` that ended up in row `i`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> DenseMatrix {
        let n = self.dim();
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l.set(i, j, self.lu.get(i, j));
            }
        }
        l
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.dim();
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u.set(i, j, self.lu.get(i, j));
            }
        }
        u
    }

    /// Applies the row permutation to `a`, returning `P·A`.
    pub fn permute_rows(&self, a: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows, a.cols);
        for (i, &p) in self.perm.iter().enumerate() {
            out.data[i * a.cols..(i + 1) * a.cols].copy_from_slice(a.row(p));
        }
        out
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        check_rhs(n, b)?;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu.get(k, i) * y[k];
            }
            y[i] = s / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu.get(k, i) * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }
}

fn check_rhs(n: usize, b: &[f64]) -> Result<()> {
    if b.len() != n {
        return Err(Error::LengthMismatch {
            what: "right-hand side",
            expected: n,
            found: b.len(),
        });
    }
    Ok(())
}

/// LU factorization with partial (row) pivoting.
pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::LengthMismatch {
            what: "LU factorization requires a square matrix; columns",
            expected: a.rows,
            found: a.cols,
        });
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|r| (r, lu.get(r, k).abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs == 0.0 {
            return Err(Error::SingularMatrix { column: k });
        }
        if pivot_row != k {
            for c in 0..n {
                lu.data.swap(k * n + c, pivot_row * n + c);
            }
            perm.swap(k, pivot_row);
        }
        let pivot = lu.get(k, k);
        for r in k + 1..n {
            let factor = lu.get(r, k) / pivot;
            lu.set(r, k, factor);
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = lu.data.split_at_mut(r * n);
            let src = &upper[k * n + k + 1..k * n + n];
            let dst = &mut lower[k + 1..n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= factor * s;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

/// Solves `A x = b` from a factorization of `A`.
pub fn lu_solve(factors: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    let n = factors.dim();
    check_rhs(n, b)?;
    let lu = &factors.lu;
    let mut x: Vec<f64> = factors.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        let row = lu.row(i);
        let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let row = lu.row(i);
        let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
        x[i] = (x[i] - s) / row[i];
    }
    Ok(x)
}

/// Estimate of the 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁` using Hager's
/// iteration on the LU-solved action of `A⁻¹` and `A⁻ᵀ`.
pub fn condition_estimate(a: &DenseMatrix) -> Result<f64> {
    let factors = lu_factor(a)?;
    Ok(a.norm1() * inverse_norm1_estimate(&factors)?)
}

/// Hager / Higham estimate of `‖A⁻¹‖₁` (a lower bound, usually exact).
pub fn inverse_norm1_estimate(factors: &LuFactors) -> Result<f64> {
    let n = factors.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = lu_solve(factors, &x)?;
        estimate = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = factors.solve_transpose(&xi)?;
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    // Higham's alternating test vector guards against unlucky sign patterns.
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let y = lu_solve(factors, &alt)?;
    let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
    Ok(if alt_est > estimate { alt_est } else { estimate })
}

//! Sparse linear algebra: CSR matrices, BiCGSTAB with Jacobi preconditioning,
//! and dense LU with partial pivoting (local systems and small-system fallback).

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("dimension mismatch between matrix and vector")]
    DimensionMismatch,
}

/// Compressed-sparse-row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        // Sort each row by column and merge duplicates.
        let mut row_ptr = vec![0usize; n + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            scratch.extend(
                cols[counts[r]..counts[r + 1]]
                    .iter()
                    .copied()
                    .zip(vals[counts[r]..counts[r + 1]].iter().copied()),
            );
            scratch.sort_by_key(|&(c, _)| c);
            for &(c, v) in scratch.iter() {
                if let Some(last) = out_cols.last() {
                    if *last == c && out_cols.len() > row_ptr[r] {
                        *out_vals.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_cols.push(c);
                out_vals.push(v);
            }
            row_ptr[r + 1] = out_cols.len();
        }
        Self {
            n,
            row_ptr,
            cols: out_cols,
            vals: out_vals,
        }
    }

    /// `y = A x`. Rows are independent, so the parallel version is bitwise
    /// deterministic.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut s = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[idx] * x[self.cols[idx]];
            }
            *out = s;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] == r {
                    d[r] = self.vals[idx];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[r][self.cols[idx]] = self.vals[idx];
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// BiCGSTAB with Jacobi (diagonal) preconditioning.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolverError> {
    if b.len() != a.n {
        return Err(SolverError::DimensionMismatch);
    }
    let n = a.n;
    let diag = a.diagonal();
    let minv: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best_res = f64::INFINITY;

    for it in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            y[i] = minv[i] * p[i];
        }
        a.matvec(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol * b_norm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        for i in 0..n {
            z[i] = minv[i] * s[i];
        }
        a.matvec(&z, &mut t);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        let res = norm(&r) / b_norm;
        best_res = best_res.min(res);
        if res <= tol {
            return Ok(x);
        }
        if omega.abs() < 1e-300 {
            break;
        }
        let _ = it;
    }

    // Report the true residual of the current iterate.
    let mut ax = vec![0.0; n];
    a.matvec(&x, &mut ax);
    let res: f64 = norm(
        &ax.iter()
            .zip(b)
            .map(|(axi, bi)| axi - bi)
            .collect::<Vec<_>>(),
    ) / b_norm;
    if res <= tol {
        return Ok(x);
    }
    Err(SolverError::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}

/// Dense LU solve with partial pivoting; `a` is row-major `n×n`, consumed.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, SolverError> {
    let n = a.len();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch);
    }
    for col in 0..n {
        // Pivot.
        let mut piv = col;
        let mut max = a[col][col].abs();
        for row in (col + 1)..n {
            if a[row][col].abs() > max {
                max = a[row][col].abs();
                piv = row;
            }
        }
        if max < 1e-300 {
            return Err(SolverError::Singular);
        }
        if piv != col {
            a.swap(col, piv);
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] * inv;
            if factor == 0.0 {
                continue;
            }
            a[row][col] = 0.0;
            for k in (col + 1)..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in (row + 1)..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Threshold below which the dense fallback is attempted after an iterative
/// failure (kept small enough that the dense matrix stays in memory).
pub const DENSE_FALLBACK_LIMIT: usize = 4000;

/// Solve `Ax = b` to relative residual `tol`: BiCGSTAB first, dense LU as a
/// fallback for small systems.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, SolverError> {
    match bicgstab(a, b, tol, max_iter) {
        Ok(x) => Ok(x),
        Err(err) => {
            if a.n <= DENSE_FALLBACK_LIMIT {
                dense_solve(a.to_dense(), b.to_vec())
            } else {
                Err(err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn csr_merges_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (0, 1, 4.0)]);
        let d = m.to_dense();
        assert_eq!(d[0], vec![3.0, 4.0]);
        assert_eq!(d[1], vec![0.0, 1.0]);
    }

    #[test]
    fn bicgstab_solves_laplacian() {
        let n = 120;
        let a = laplacian_1d(n);
        // Manufactured solution.
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&xs, &mut b);
        let x = bicgstab(&a, &b, 1e-12, 10_000).unwrap();
        for (got, want) in x.iter().zip(&xs) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn dense_matches_iterative_on_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 40;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if v.abs() > 0.7 || i == j {
                    let v = if i == j { v.abs() + 10.0 } else { v };
                    triplets.push((i, j, v));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, &triplets);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi = bicgstab(&a, &b, 1e-12, 10_000).unwrap();
        let xd = dense_solve(a.to_dense(), b.clone()).unwrap();
        for (a, b) in xi.iter().zip(&xd) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_dense_rejected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            dense_solve(a, vec![1.0, 0.0]),
            Err(SolverError::Singular)
        ));
    }

    #[test]
    fn fallback_rescues_small_hard_system() {
        // Give the iterative path no budget; the dense fallback must solve it.
        let a = laplacian_1d(64);
        let b = vec![1.0; 64];
        let x = solve(&a, &b, 1e-12, 1).unwrap();
        let mut ax = vec![0.0; 64];
        a.matvec(&x, &mut ax);
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_solutions() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let x1 = bicgstab(&a, &b, 1e-11, 10_000).unwrap();
        let x2 = bicgstab(&a, &b, 1e-11, 10_000).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let a = laplacian_1d(10);
        let x = bicgstab(&a, &vec![0.0; 10], 1e-12, 100).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }
}

//! Dense row-major matrices, ridge least squares and spectral radius.

use rayon::prelude::*;

use crate::distributions::derive_stream;
use crate::error::{Error, Result};

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        crate::ts::check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn count_zeros(&self) -> usize {
        self.data.iter().filter(|v| **v == 0.0).count()
    }

    /// Keep only the listed columns, in the given order (repeats allowed).
    pub fn select_columns(&self, indices: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols) {
            return Err(Error::Dimension(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(indices.iter().map(|&j| row[j]));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: indices.len(),
            data,
        })
    }
}

/// Dot product with four independent accumulators; the summation order is
/// fixed, so results do not depend on the caller's threading.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0_f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `A v`.
pub fn matvec(a: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if a.cols != v.len() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix times vector of length {}",
            a.rows,
            a.cols,
            v.len()
        )));
    }
    let mut out = vec![0.0; a.rows];
    matvec_into(a, v, &mut out);
    Ok(out)
}

/// `out = A v` without dimension checks beyond debug assertions.
pub(crate) fn matvec_into(a: &Matrix, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.cols, v.len());
    debug_assert_eq!(a.rows, out.len());
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(a.row(i), v);
    }
}

/// `A B`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let bt = b.transpose();
    let mut data = vec![0.0; a.rows * b.cols];
    data.par_chunks_mut(b.cols.max(1))
        .enumerate()
        .for_each(|(i, out)| {
            for (j, o) in out.iter_mut().enumerate() {
                *o = dot(a.row(i), bt.row(j));
            }
        });
    Ok(Matrix {
        rows: a.rows,
        cols: b.cols,
        data,
    })
}

/// `S S^T + beta I` for row-major `S`; only dot products of contiguous rows.
fn gram_plus_ridge(s: &Matrix, beta: f64) -> Matrix {
    const BLOCK: usize = 32;
    let d = s.rows;
    let mut g = Matrix::zeros(d, d);
    if d == 0 {
        return g;
    }
    g.data
        .par_chunks_mut(d * BLOCK)
        .enumerate()
        .for_each(|(bi, chunk)| {
            let i0 = bi * BLOCK;
            let rows_here = chunk.len() / d;
            for j0 in (0..=i0 + rows_here - 1).step_by(BLOCK) {
                for di in 0..rows_here {
                    let i = i0 + di;
                    let ri = s.row(i);
                    for j in j0..(j0 + BLOCK).min(i + 1) {
                        chunk[di * d + j] = dot(ri, s.row(j));
                    }
                }
            }
        });
    for i in 0..d {
        for j in 0..i {
            g.data[j * d + i] = g.data[i * d + j];
        }
        g.data[i * d + i] += beta;
    }
    g
}

/// In-place Cholesky factor (lower triangle) of an SPD matrix.
fn cholesky(mut g: Matrix) -> Result<Matrix> {
    let n = g.rows;
    for i in 0..n {
        {
            let (upper, lower) = g.data.split_at_mut(i * n);
            let row_i = &mut lower[..n];
            for j in 0..i {
                let row_j = &upper[j * n..j * n + n];
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let s = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Singular { pivot: i, value: s });
            }
            row_i[i] = s.sqrt();
        }
        for v in &mut g.data[i * n + i + 1..(i + 1) * n] {
            *v = 0.0;
        }
    }
    Ok(g)
}

/// Solve `L L^T x = b` given the lower Cholesky factor.
fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s = b[i] - dot(&l.row(i)[..i], &y[..i]);
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Gaussian elimination with partial pivoting; multiple right-hand sides as
/// columns of `rhs` (n x m, row-major). Used when rounding defeats Cholesky
/// on a regularised system.
fn lu_solve(mut a: Matrix, mut rhs: Matrix) -> Result<Matrix> {
    let n = a.rows;
    let m = rhs.cols;
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, a.get(i, k).abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pv > 0.0) {
            return Err(Error::Singular { pivot: k, value: 0.0 });
        }
        if p != k {
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                rhs.data.swap(k * m + j, p * m + j);
            }
        }
        let akk = a.get(k, k);
        for i in k + 1..n {
            let f = a.get(i, k) / akk;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a.data[i * n + j] -= f * a.data[k * n + j];
            }
            for j in 0..m {
                rhs.data[i * m + j] -= f * rhs.data[k * m + j];
            }
        }
    }
    let mut x = Matrix::zeros(n, m);
    for c in 0..m {
        for i in (0..n).rev() {
            let mut s = rhs.get(i, c);
            for k in i + 1..n {
                s -= a.get(i, k) * x.get(k, c);
            }
            x.set(i, c, s / a.get(i, i));
        }
    }
    Ok(x)
}

/// Ridge readout: minimiser of `||W S - Y||^2 + beta ||W||^2`.
///
/// `S` holds one regressor vector per column (d x T), `Y` one target vector
/// per column (L x T). Solved through the regularised normal equations
/// `W (S S^T + beta I) = Y S^T` with a Cholesky factorisation and one step
/// of refinement.
pub fn ridge_solve(s: &Matrix, y: &Matrix, beta: f64) -> Result<Matrix> {
    if s.cols == 0 {
        return Err(Error::usage("ridge regression needs at least one sample"));
    }
    if s.cols != y.cols {
        return Err(Error::Dimension(format!(
            "regressors have {} samples, targets {}",
            s.cols, y.cols
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::usage(format!("ridge parameter must be >= 0, got {beta}")));
    }
    let d = s.rows;
    let gram = gram_plus_ridge(s, beta);
    // Y S^T, stored transposed (d x L) as right-hand sides
    let rhs = Matrix::from_fn(d, y.rows, |i, l| dot(y.row(l), s.row(i)));
    let solution = match cholesky(gram.clone()) {
        Ok(factor) => {
            let mut x = Matrix::zeros(d, y.rows);
            for l in 0..y.rows {
                let mut col = cholesky_solve(&factor, &rhs.column(l));
                // one corrected semi-normal step: residual taken from the data, not the Gram matrix
                let r: Vec<f64> = (0..s.cols)
                    .map(|t| y.get(l, t) - (0..d).map(|i| s.get(i, t) * col[i]).sum::<f64>())
                    .collect();
                let g: Vec<f64> = (0..d).map(|i| dot(&r, s.row(i)) - beta * col[i]).collect();
                for (c, delta) in col.iter_mut().zip(cholesky_solve(&factor, &g)) {
                    *c += delta;
                }
                for (i, v) in col.into_iter().enumerate() {
                    x.set(i, l, v);
                }
            }
            x
        }
        Err(err) if beta == 0.0 => return Err(err),
        Err(_) => lu_solve(gram, rhs)?,
    };
    let w_out = solution.transpose();
    crate::ts::check_finite(&w_out.data)?;
    Ok(w_out)
}

/// Result of a spectral radius estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    pub converged: bool,
    /// Products with `W` performed.
    pub iterations: usize,
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-6;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;
const START_VECTOR_SEED: u64 = 0x5eed_0f_5eed;
const MAX_BASIS: usize = 400;
const SCHUR_MAX_SWEEPS: usize = 10_000;

/// Largest eigenvalue modulus of the leading `k x k` block of `h`, with the
/// eigenvalue itself.
fn ritz_dominant(h: &[Vec<f64>], k: usize) -> Option<nalgebra::Complex<f64>> {
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| h[j].get(i).copied().unwrap_or(0.0));
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, SCHUR_MAX_SWEEPS)?;
    schur
        .complex_eigenvalues()
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
}

/// Real vector spanning the dominant Ritz pair, as coefficients in the basis.
fn ritz_restart(h: &[Vec<f64>], k: usize, theta: nalgebra::Complex<f64>) -> Option<Vec<f64>> {
    use nalgebra::{Complex, DMatrix, DVector};
    // inverse iteration with a slightly perturbed shift
    let shift = theta * Complex::new(1.0 + 1e-10, 0.0);
    let a = DMatrix::from_fn(k, k, |i, j| {
        let v = Complex::new(h[j].get(i).copied().unwrap_or(0.0), 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = a.lu();
    let mut y = DVector::from_element(k, Complex::new(1.0, 0.0));
    for _ in 0..2 {
        y = lu.solve(&y)?;
        let n = y.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        y /= Complex::new(n, 0.0);
    }
    Some(y.iter().map(|c| c.re + c.im).collect())
}

/// Spectral radius by the Arnoldi process.
///
/// Starting from a fixed seeded vector, the Krylov basis
/// `v, W v, W^2 v, ...` (the power-iteration sequence) is orthonormalised
/// and the estimate is the largest modulus among the eigenvalues of the
/// projected Hessenberg matrix. The estimate is checked at geometrically
/// spaced basis sizes and declared converged once it moves by less than
/// `tol / 10` relative between checks, or exactly when the basis becomes
/// invariant. A full basis of `MAX_BASIS` vectors restarts from the
/// dominant Ritz vector. `max_iter` bounds the number of products with `W`.
pub fn spectral_radius(w: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    spectral_radius_arnoldi(w, tol, max_iter, MAX_BASIS)
}

fn spectral_radius_arnoldi(w: &Matrix, tol: f64, max_iter: usize, max_basis: usize) -> Result<SpectralEstimate> {
    if !w.is_square() {
        return Err(Error::Dimension(format!(
            "spectral radius needs a square matrix, got {}x{}",
            w.rows, w.cols
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::usage("spectral radius tolerance must be positive"));
    }
    let n = w.rows;
    if n == 0 || w.data.iter().all(|v| *v == 0.0) {
        return Ok(SpectralEstimate {
            radius: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let cap = max_basis.clamp(2, n.max(2));
    let mut rng = derive_stream(START_VECTOR_SEED, 0);
    let mut start: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let mut products = 0;
    let mut estimate = 0.0_f64;
    let mut previous: Option<f64> = None;

    while products < max_iter {
        let ns = norm(&start);
        start.iter_mut().for_each(|x| *x /= ns);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        // h[j] is column j of the Hessenberg matrix (length j + 2)
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut next_check = 8.min(cap);
        let mut z = vec![0.0; n];
        let mut theta = None;
        loop {
            let j = h.len();
            matvec_into(w, &basis[j], &mut z);
            products += 1;
            let scale = norm(&z);
            let mut col = vec![0.0; j + 2];
            // classical Gram-Schmidt, twice
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &z)).collect();
                for (q, c) in basis.iter().zip(&coeffs) {
                    for (zi, qi) in z.iter_mut().zip(q) {
                        *zi -= c * qi;
                    }
                }
                for (h_ij, c) in col.iter_mut().zip(&coeffs) {
                    *h_ij += c;
                }
            }
            let beta = norm(&z);
            col[j + 1] = beta;
            h.push(col);
            let k = j + 1;
            let invariant = beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) || k == n;
            if invariant || k >= next_check || k == cap || products >= max_iter {
                next_check = (k + k / 4).max(k + 1);
                if let Some(t) = ritz_dominant(&h, k) {
                    estimate = t.norm();
                    theta = Some(t);
                    if !estimate.is_finite() {
                        return Err(Error::usage("spectral radius iteration produced a non-finite value"));
                    }
                    let settled = previous.is_some_and(|p| (estimate - p).abs() <= 0.1 * tol * estimate);
                    if invariant || settled {
                        return Ok(SpectralEstimate {
                            radius: estimate,
                            converged: true,
                            iterations: products,
                        });
                    }
                    previous = Some(estimate);
                }
            }
            if k == cap || products >= max_iter {
                break;
            }
            basis.push(z.iter().map(|v| v / beta).collect());
        }
        let coeffs = match theta.and_then(|t| ritz_restart(&h, h.len(), t)) {
            Some(c) => c,
            None => break,
        };
        start = vec![0.0; n];
        for (q, c) in basis.iter().zip(&coeffs) {
            for (s, qi) in start.iter_mut().zip(q) {
                *s += c * qi;
            }
        }
        if !(norm(&start) > 0.0) {
            break;
        }
    }
    Ok(SpectralEstimate {
        radius: estimate,
        converged: false,
        iterations: products,
    })
}

/// `W * rho / spectral_radius(W)` together with the pre-scaling estimate.
pub fn scale_to_spectral_radius_with(
    w: &Matrix,
    rho: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Matrix, SpectralEstimate)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::usage(format!("target spectral radius must be positive, got {rho}")));
    }
    let est = spectral_radius(w, tol, max_iter)?;
    // Ritz values of defective (nilpotent) blocks sit near sqrt(eps) * ||W||.
    if !(est.radius > f64::EPSILON.sqrt() * w.frobenius_norm()) {
        return Err(Error::CannotScale(
            "matrix has zero spectral radius (all-zero or nilpotent)".into(),
        ));
    }
    Ok((w.scaled(rho / est.radius), est))
}

pub fn scale_to_spectral_radius(w: &Matrix, rho: f64) -> Result<Matrix> {
    scale_to_spectral_radius_with(w, rho, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)
        .map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = derive_stream(seed, 0);
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_in(-0.5, 0.5))
    }

    #[test]
    fn matvec_examples() {
        let v = vec![1.5, -2.0, 0.25];
        assert_eq!(matvec(&Matrix::identity(3), &v).unwrap(), v);
        assert_eq!(matvec(&Matrix::zeros(3, 3), &v).unwrap(), vec![0.0; 3]);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(matvec(&a, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(matches!(matvec(&a, &[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn matmul_examples() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(matmul(&a, &i).unwrap(), a);
        let p = matmul(&a, &a).unwrap();
        assert_eq!(p.data(), &[7.0, 10.0, 15.0, 22.0]);
        assert!(matmul(&a, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn gram_matches_naive() {
        let s = random_matrix(70, 33, 1);
        let g = gram_plus_ridge(&s, 0.5);
        for i in 0..70 {
            for j in 0..70 {
                let mut naive = 0.0;
                for t in 0..33 {
                    naive += s.get(i, t) * s.get(j, t);
                }
                if i == j {
                    naive += 0.5;
                }
                assert!((g.get(i, j) - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ridge_examples() {
        let w = ridge_solve(
            &Matrix::identity(2),
            &Matrix::from_rows(&[vec![3.0, 5.0]]).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(w.data(), &[3.0, 5.0]);
        let w = ridge_solve(
            &Matrix::identity(2),
            &Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!((w.get(0, 0) - 0.5).abs() < 1e-15 && (w.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ridge_exact_recovery() {
        let s = random_matrix(5, 50, 2);
        let w_true = random_matrix(2, 5, 3);
        let y = matmul(&w_true, &s).unwrap();
        let w = ridge_solve(&s, &y, 0.0).unwrap();
        for (a, b) in w.data().iter().zip(w_true.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn ridge_singular_names_pivot() {
        // second regressor row duplicates the first
        let s = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        match ridge_solve(&s, &y, 0.0) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(ridge_solve(&s, &y, 1e-8).is_ok());
    }

    #[test]
    fn ridge_is_local_minimum() {
        let s = random_matrix(6, 40, 4);
        let y = random_matrix(1, 40, 5);
        let beta = 0.1;
        let objective = |w: &Matrix| {
            let r = matmul(w, &s).unwrap();
            let fit: f64 = r.data().iter().zip(y.data()).map(|(a, b)| (a - b).powi(2)).sum();
            fit + beta * w.data().iter().map(|v| v * v).sum::<f64>()
        };
        let w = ridge_solve(&s, &y, beta).unwrap();
        let base = objective(&w);
        for j in 0..6 {
            for delta in [1e-4, -1e-4] {
                let mut p = w.clone();
                p.set(0, j, p.get(0, j) + delta);
                assert!(objective(&p) >= base);
            }
        }
    }

    #[test]
    fn spectral_examples() {
        let d = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let est = spectral_radius(&d, 1e-10, 10_000).unwrap();
        assert!((est.radius - 2.0).abs() < 1e-8 && est.converged);
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let est = spectral_radius(&s, 1e-10, 10_000).unwrap();
        assert!((est.radius - 3.0).abs() < 1e-8);
        // rotation by 90 degrees scaled by 2: eigenvalues +-2i
        let r = Matrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]).unwrap();
        let est = spectral_radius(&r, 1e-10, 10_000).unwrap();
        assert!((est.radius - 2.0).abs() < 1e-12 && est.converged);
        assert!(spectral_radius(&Matrix::zeros(2, 3), 1e-6, 10).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let w = random_matrix(50, 50, 9);
        let est = spectral_radius(&w, 1e-14, 3).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
        assert!(est.radius > 0.0);
    }

    #[test]
    fn restarts_reach_the_full_basis_answer() {
        let w = random_matrix(150, 150, 12);
        let exact = spectral_radius(&w, 1e-10, 10_000).unwrap();
        assert!(exact.converged);
        let restarted = spectral_radius_arnoldi(&w, 1e-8, 20_000, 30).unwrap();
        assert!(restarted.converged, "{restarted:?}");
        assert!((restarted.radius - exact.radius).abs() < 1e-7 * exact.radius);
    }

    #[test]
    fn scaling_examples() {
        let s = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let scaled = scale_to_spectral_radius(&s, 1.25).unwrap();
        for (a, b) in scaled.data().iter().zip(s.data()) {
            assert!((a - b * 1.25 / 3.0).abs() < 1e-9);
        }
        let w = random_matrix(40, 40, 6);
        let rho = spectral_radius(&w, 1e-6, 10_000).unwrap().radius;
        let same = scale_to_spectral_radius(&w, rho).unwrap();
        for (a, b) in same.data().iter().zip(w.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            scale_to_spectral_radius(&Matrix::zeros(3, 3), 1.0),
            Err(Error::CannotScale(_))
        ));
        // strictly upper triangular: nilpotent
        let nil = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            scale_to_spectral_radius(&nil, 1.0),
            Err(Error::CannotScale(_))
        ));
    }

    #[test]
    fn spectral_scaling_is_linear() {
        let w = random_matrix(60, 60, 10);
        let base = spectral_radius(&w, 1e-6, 10_000).unwrap().radius;
        for c in [0.3, -2.5, 7.0] {
            let r = spectral_radius(&w.scaled(c), 1e-6, 10_000).unwrap().radius;
            assert!((r - c.abs() * base).abs() <= 1e-9 * c.abs() * base, "c={c}");
        }
    }
}

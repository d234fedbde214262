//! Dense double-precision linear algebra: just enough for the estimators.
//!
//! Row-major matrices, modified Gram-Schmidt QR with dependent-column
//! detection, one-sided Jacobi SVD, and a Cholesky solver for ridge systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == p), "ragged rows");
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self {
            rows: n,
            cols: p,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec shape");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Xᵀv without forming the transpose.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "t_matvec shape");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        out
    }

    pub fn col_means(&self) -> Vec<f64> {
        assert!(self.rows > 0);
        let mut means = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, m) in means.iter_mut().enumerate() {
                *m += self.get(i, j);
            }
        }
        for m in &mut means {
            *m /= self.rows as f64;
        }
        means
    }

    /// XᵀX (symmetric Gram matrix).
    pub fn gram(&self) -> Mat {
        let p = self.cols;
        let mut g = Mat::zeros(p, p);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..p {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    let v = g.get(a, b) + ra * row[b];
                    g.set(a, b, v);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.set(a, b, g.get(b, a));
            }
        }
        g
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// QR of the columns of `a`, taken in original order, with near-dependent
/// columns skipped. Modified Gram-Schmidt with one reorthogonalization pass.
///
/// A column whose residual norm falls at or below `tol_rel` times the largest
/// original column norm is recorded in `aliased` and excluded from the basis.
/// Later collinear columns are the ones dropped, matching the usual aliasing
/// convention in ANOVA output.
pub struct Qr {
    /// Orthonormal basis vectors, one per kept column.
    pub q: Vec<Vec<f64>>,
    /// Upper-triangular factor over kept columns: r[i][j] for j >= i.
    pub r: Vec<Vec<f64>>,
    /// Indices of kept columns, in original order.
    pub kept: Vec<usize>,
    /// Indices of dropped (dependent) columns.
    pub aliased: Vec<usize>,
}

pub fn qr_rank_revealing(a: &Mat, tol_rel: f64) -> Qr {
    let p = a.cols();
    let max_norm = (0..p)
        .map(|j| norm2(&a.col(j)))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = tol_rel * max_norm;

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut aliased = Vec::new();

    for j in 0..p {
        let mut v = a.col(j);
        let mut coeffs = vec![0.0; q.len()];
        for pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= c * qk;
                }
                if pass == 0 {
                    coeffs[i] = c;
                } else {
                    coeffs[i] += c;
                }
            }
        }
        let nrm = norm2(&v);
        if nrm <= tol {
            aliased.push(j);
            continue;
        }
        for vk in &mut v {
            *vk /= nrm;
        }
        for (row, &c) in r.iter_mut().zip(&coeffs) {
            row.push(c);
        }
        let mut new_row = vec![0.0; q.len()];
        new_row.push(nrm);
        r.push(new_row);
        q.push(v);
        kept.push(j);
    }

    // pad r rows to square over kept columns
    let k = kept.len();
    for row in &mut r {
        row.resize(k, 0.0);
    }
    Qr {
        q,
        r,
        kept,
        aliased,
    }
}

impl Qr {
    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// Least-squares coefficients for the kept columns: solve R beta = Qᵀy.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let k = self.rank();
        let c: Vec<f64> = self.q.iter().map(|qi| dot(qi, y)).collect();
        let mut beta = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r[i][j] * beta[j];
            }
            beta[i] = s / self.r[i][i];
        }
        beta
    }

    /// Diagonal of (RᵀR)⁻¹ = R⁻¹R⁻ᵀ, i.e. the unscaled coefficient variances.
    pub fn xtx_inv_diag(&self) -> Vec<f64> {
        let k = self.rank();
        // invert the upper triangular R by back substitution, column by column
        let mut rinv = vec![vec![0.0; k]; k];
        for col in 0..k {
            let mut e = vec![0.0; k];
            e[col] = 1.0;
            for i in (0..=col).rev() {
                let mut s = e[i];
                for j in i + 1..=col {
                    s -= self.r[i][j] * rinv[j][col];
                }
                rinv[i][col] = s / self.r[i][i];
            }
        }
        (0..k)
            .map(|i| (0..k).map(|j| rinv[i][j] * rinv[i][j]).sum())
            .collect()
    }
}

/// Thin SVD by one-sided Jacobi. Returns (u, s, v) with `a = u diag(s) vᵀ`,
/// singular values sorted descending. Columns with zero norm get zero u
/// columns. Converges to ~1e-15 relative accuracy on the singular values.
pub fn svd_jacobi(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let n = a.rows();
    let p = a.cols();
    let mut work = a.clone();
    let mut v = Mat::identity(p);

    let eps = 1e-15;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..n {
                    let ai = work.get(r, i);
                    let aj = work.get(r, j);
                    alpha += ai * ai;
                    beta += aj * aj;
                    gamma += ai * aj;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let ai = work.get(r, i);
                    let aj = work.get(r, j);
                    work.set(r, i, c * ai - s * aj);
                    work.set(r, j, s * ai + c * aj);
                }
                for r in 0..p {
                    let vi = v.get(r, i);
                    let vj = v.get(r, j);
                    v.set(r, i, c * vi - s * vj);
                    v.set(r, j, s * vi + c * vj);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    let norms: Vec<f64> = (0..p).map(|j| norm2(&work.col(j))).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut u = Mat::zeros(n, p);
    let mut s = vec![0.0; p];
    let mut vs = Mat::zeros(p, p);
    for (jj, &j) in order.iter().enumerate() {
        s[jj] = norms[j];
        if norms[j] > 0.0 {
            for r in 0..n {
                u.set(r, jj, work.get(r, j) / norms[j]);
            }
        }
        for r in 0..p {
            vs.set(r, jj, v.get(r, j));
        }
    }
    (u, s, vs)
}

/// Solve the symmetric positive-definite system `g x = b` by Cholesky.
pub fn cholesky_solve(g: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = g.rows();
    assert_eq!(g.cols(), n);
    assert_eq!(b.len(), n);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 1e-12 * g.get(i, i).abs().max(f64::MIN_POSITIVE) {
                    return Err(Error::Singular(format!(
                        "near-zero pivot {s:e} at row {i}"
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn qr_reconstructs_full_rank() {
        let a = Mat::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![0.0, 1.0, -1.0],
            vec![3.0, -1.0, 2.0],
            vec![2.0, 2.0, 2.0],
        ]);
        let qr = qr_rank_revealing(&a, 1e-10);
        assert_eq!(qr.rank(), 3);
        assert!(qr.aliased.is_empty());
        for i in 0..4 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += qr.q[k][i] * qr.r[k][j];
                }
                assert_close(s, a.get(i, j), 1e-12);
            }
        }
    }

    #[test]
    fn qr_drops_duplicate_column() {
        let a = Mat::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![2.0, 2.0, 1.0],
            vec![3.0, 3.0, 0.0],
        ]);
        let qr = qr_rank_revealing(&a, 1e-10);
        assert_eq!(qr.aliased, vec![1]);
        assert_eq!(qr.kept, vec![0, 2]);
    }

    #[test]
    fn qr_solve_exact_line() {
        let a = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let qr = qr_rank_revealing(&a, 1e-10);
        let beta = qr.solve(&[2.0, 4.0, 6.0]);
        assert_close(beta[0], 2.0, 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let a = Mat::from_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![-1.0, 3.0, 0.5],
            vec![0.0, 1.0, 1.0],
            vec![4.0, -2.0, 0.0],
            vec![1.0, 1.0, 1.0],
        ]);
        let (u, s, v) = svd_jacobi(&a);
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += u.get(i, k) * s[k] * v.get(j, k);
                }
                assert_close(acc, a.get(i, j), 1e-10);
            }
        }
        assert!(s[0] >= s[1] && s[1] >= s[2]);
        // left singular vectors orthonormal
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&u.col(i), &u.col(j));
                assert_close(d, if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves_spd() {
        let x = Mat::from_rows(&[
            vec![1.0, 0.5],
            vec![0.0, 2.0],
            vec![1.0, 1.0],
            vec![3.0, -1.0],
        ]);
        let g = x.gram();
        let b = vec![1.0, 2.0];
        let sol = cholesky_solve(&g, &b).unwrap();
        let back = g.matvec(&sol);
        assert_close(back[0], 1.0, 1e-10);
        assert_close(back[1], 2.0, 1e-10);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let g = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(cholesky_solve(&g, &[1.0, 1.0]).is_err());
    }
}

//! Estimators on centered designs: OLS with inference, principal component
//! regression, PLS1 by NIPALS, and L2 ridge. Coefficients are always mapped
//! back to the original column space, with the intercept recovered from the
//! column and response means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{dot, qr_rank_revealing, svd_jacobi, cholesky_solve, Mat};
use crate::stats;

/// Relative pivot tolerance for detecting aliased (dependent) columns.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Ols,
    Pcr,
    Pls,
    Ridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Hyper {
    None,
    Components(usize),
    Lambda(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub hyper: Hyper,
    pub intercept: f64,
    pub col_names: Vec<String>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CenteredDesign {
    pub x_centered: Mat,
    pub col_means: Vec<f64>,
    pub y_centered: Vec<f64>,
    pub y_mean: f64,
}

pub fn center(x: &Mat, y: &[f64]) -> CenteredDesign {
    assert_eq!(x.rows(), y.len());
    assert!(x.rows() >= 2, "need at least two rows to center");
    let col_means = x.col_means();
    let mut xc = x.clone();
    for i in 0..x.rows() {
        for (j, &m) in col_means.iter().enumerate() {
            xc.set(i, j, x.get(i, j) - m);
        }
    }
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let y_centered = y.iter().map(|v| v - y_mean).collect();
    CenteredDesign {
        x_centered: xc,
        col_means,
        y_centered,
        y_mean,
    }
}

fn intercept_from_means(design: &CenteredDesign, beta: &[f64]) -> f64 {
    design.y_mean - dot(&design.col_means, beta)
}

fn model(
    method: Method,
    hyper: Hyper,
    design: &CenteredDesign,
    beta: Vec<f64>,
    col_names: &[String],
) -> FittedModel {
    FittedModel {
        method,
        hyper,
        intercept: intercept_from_means(design, &beta),
        col_names: col_names.to_vec(),
        coefficients: beta,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsInference {
    /// Names of the retained (non-aliased) columns; the vectors below are
    /// parallel to this list.
    pub retained_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub df_model: usize,
    pub df_resid: usize,
    pub dropped_aliased: Vec<String>,
}

/// Least squares on the centered design. Perfectly collinear columns are
/// detected by the rank-revealing QR and dropped; they appear with a zero
/// coefficient in the model and are listed in `dropped_aliased`.
pub fn ols_fit(x: &FeatureMatrix, y: &[f64]) -> Result<(FittedModel, OlsInference)> {
    let n = x.n_rows();
    if n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows vs {} responses",
            y.len()
        )));
    }
    let design = center(&x.values, y);
    let qr = qr_rank_revealing(&design.x_centered, PIVOT_TOL);
    let rank = qr.rank();
    if rank == 0 {
        return Err(Error::Singular("design has rank 0 after centering".into()));
    }
    if n <= rank + 1 {
        return Err(Error::Domain(format!(
            "n = {n} too small for {rank} retained columns plus intercept"
        )));
    }

    let beta_kept = qr.solve(&design.y_centered);
    let mut beta = vec![0.0; x.n_cols()];
    for (&j, &b) in qr.kept.iter().zip(&beta_kept) {
        beta[j] = b;
    }

    let x_kept = design.x_centered.select_cols(&qr.kept);
    let fitted = x_kept.matvec(&beta_kept);
    let rss: f64 = design
        .y_centered
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .sum();
    let tss: f64 = design.y_centered.iter().map(|v| v * v).sum();
    if tss <= 0.0 {
        return Err(Error::Domain("response has zero variance".into()));
    }

    let df_model = rank;
    let df_resid = n - rank - 1;
    let sigma2 = rss / df_resid as f64;
    let xtx_inv_diag = qr.xtx_inv_diag();
    let tq = stats::t_quantile(0.975, df_resid)?;

    let mut standard_errors = Vec::with_capacity(rank);
    let mut t_values = Vec::with_capacity(rank);
    let mut p_values = Vec::with_capacity(rank);
    let mut ci_low = Vec::with_capacity(rank);
    let mut ci_high = Vec::with_capacity(rank);
    for (b, d) in beta_kept.iter().zip(&xtx_inv_diag) {
        let se = (sigma2 * d).sqrt();
        let t = if se > 0.0 {
            b / se
        } else if *b >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        standard_errors.push(se);
        t_values.push(t);
        p_values.push(if se > 0.0 {
            stats::t_two_sided_p(t, df_resid)
        } else {
            0.0
        });
        ci_low.push(b - tq * se);
        ci_high.push(b + tq * se);
    }

    let r_squared = 1.0 - rss / tss;
    let f_statistic = ((tss - rss) / df_model as f64) / sigma2.max(f64::MIN_POSITIVE);
    let f_p_value = stats::f_pvalue(f_statistic, df_model, df_resid)?;

    let inference = OlsInference {
        retained_names: qr.kept.iter().map(|&j| x.col_names[j].clone()).collect(),
        coefficients: beta_kept,
        standard_errors,
        t_values,
        p_values,
        ci_low,
        ci_high,
        r_squared,
        f_statistic,
        f_p_value,
        df_model,
        df_resid,
        dropped_aliased: qr.aliased.iter().map(|&j| x.col_names[j].clone()).collect(),
    };
    Ok((
        model(Method::Ols, Hyper::None, &design, beta, &x.col_names),
        inference,
    ))
}

/// Rank of the centered design, per the shared pivot tolerance.
pub fn design_rank(x: &Mat, y_len: usize) -> usize {
    let design = center(x, &vec![0.0; y_len]);
    qr_rank_revealing(&design.x_centered, PIVOT_TOL).rank()
}

/// Principal component regression for every requested component count,
/// sharing one SVD of the centered design. The response is regressed on the
/// leading score directions and the coefficients back-mapped through the
/// right singular vectors.
pub fn pcr_fit_path(x: &FeatureMatrix, y: &[f64], ks: &[usize]) -> Vec<Result<FittedModel>> {
    let design = center(&x.values, y);
    let (u, s, v) = svd_jacobi(&design.x_centered);
    let rank = if s.is_empty() || s[0] == 0.0 {
        0
    } else {
        s.iter().filter(|&&sv| sv > PIVOT_TOL * s[0]).count()
    };
    let max_k = ks.iter().copied().filter(|&k| k <= rank).max().unwrap_or(0);

    // cumulative coefficients: beta after the first k components
    let mut betas_by_k: Vec<Vec<f64>> = Vec::with_capacity(max_k);
    let mut beta = vec![0.0; x.n_cols()];
    for comp in 0..max_k {
        // score t_i = s_i u_i, so the regression weight on component i is
        // (t_i . y) / (t_i . t_i) = (u_i . y) / s_i
        let gamma = dot(&u.col(comp), &design.y_centered) / s[comp];
        for j in 0..x.n_cols() {
            beta[j] += v.get(j, comp) * gamma;
        }
        betas_by_k.push(beta.clone());
    }

    ks.iter()
        .map(|&k| {
            if k < 1 || k > rank {
                Err(Error::HyperOutOfRange(format!(
                    "pcr components {k} outside [1, {rank}]"
                )))
            } else {
                Ok(model(
                    Method::Pcr,
                    Hyper::Components(k),
                    &design,
                    betas_by_k[k - 1].clone(),
                    &x.col_names,
                ))
            }
        })
        .collect()
}

pub fn pcr_fit(x: &FeatureMatrix, y: &[f64], k: usize) -> Result<FittedModel> {
    pcr_fit_path(x, y, &[k]).pop().expect("one requested fit")
}

/// PLS1 by NIPALS with deflation, for every requested component count from
/// one pass. Per component: w = Xᵀy normalized, t = Xw, p = Xᵀt/(tᵀt),
/// q = yᵀt/(tᵀt), then X and y are deflated. Coefficients are W(PᵀW)⁻¹q in
/// the original column space.
pub fn pls1_fit_path(x: &FeatureMatrix, y: &[f64], ks: &[usize]) -> Vec<Result<FittedModel>> {
    let p = x.n_cols();
    let n = x.n_rows();
    let k_limit = p.min(n.saturating_sub(1));
    let max_k = ks.iter().copied().filter(|&k| k <= k_limit).max().unwrap_or(0);

    let design = center(&x.values, y);
    let mut xw = design.x_centered.clone();
    let mut yw = design.y_centered.clone();

    let mut weights: Vec<Vec<f64>> = Vec::new();
    let mut loadings: Vec<Vec<f64>> = Vec::new();
    let mut q: Vec<f64> = Vec::new();
    let mut betas_by_k: Vec<Result<Vec<f64>>> = Vec::with_capacity(max_k);
    let mut degenerate = false;

    for _ in 0..max_k {
        if !degenerate {
            let mut w = xw.t_matvec(&yw);
            let wn = crate::linalg::norm2(&w);
            if wn <= 1e-300 {
                degenerate = true;
            } else {
                for wi in &mut w {
                    *wi /= wn;
                }
                let t = xw.matvec(&w);
                let tt = dot(&t, &t);
                if tt <= 1e-300 {
                    degenerate = true;
                } else {
                    let p_load: Vec<f64> = xw.t_matvec(&t).iter().map(|v| v / tt).collect();
                    let q_i = dot(&yw, &t) / tt;
                    for i in 0..n {
                        for j in 0..p {
                            xw.set(i, j, xw.get(i, j) - t[i] * p_load[j]);
                        }
                        yw[i] -= q_i * t[i];
                    }
                    weights.push(w);
                    loadings.push(p_load);
                    q.push(q_i);
                }
            }
        }
        if degenerate {
            betas_by_k.push(Err(Error::NoRemainingCovariance));
            continue;
        }
        // beta = W (PᵀW)⁻¹ q over the components so far
        let kc = weights.len();
        let mut ptw = Mat::zeros(kc, kc);
        for a in 0..kc {
            for b in 0..kc {
                ptw.set(a, b, dot(&loadings[a], &weights[b]));
            }
        }
        betas_by_k.push(solve_square(&ptw, &q).map(|z| {
            let mut beta = vec![0.0; p];
            for (wc, &zc) in weights.iter().zip(&z) {
                for (bj, wj) in beta.iter_mut().zip(wc) {
                    *bj += wj * zc;
                }
            }
            beta
        }));
    }

    ks.iter()
        .map(|&k| {
            if k < 1 || k > k_limit {
                return Err(Error::HyperOutOfRange(format!(
                    "pls components {k} outside [1, {k_limit}]"
                )));
            }
            match &betas_by_k[k - 1] {
                Ok(beta) => Ok(model(
                    Method::Pls,
                    Hyper::Components(k),
                    &design,
                    beta.clone(),
                    &x.col_names,
                )),
                Err(_) => Err(Error::NoRemainingCovariance),
            }
        })
        .collect()
}

pub fn pls1_fit(x: &FeatureMatrix, y: &[f64], k: usize) -> Result<FittedModel> {
    pls1_fit_path(x, y, &[k]).pop().expect("one requested fit")
}

/// Small dense solve with partial pivoting, used for the k×k PLS system.
fn solve_square(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::Singular("pls inner system singular".into()));
        }
        m.swap(col, pivot);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..=n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Ok(x)
}

/// Ridge: solve (XᵀX + λI)β = Xᵀy on the centered design, sharing the Gram
/// matrix across penalties. The intercept is not penalized; it comes from
/// the means.
pub fn ridge_fit_path(x: &FeatureMatrix, y: &[f64], lambdas: &[f64]) -> Vec<Result<FittedModel>> {
    let design = center(&x.values, y);
    let gram = design.x_centered.gram();
    let xty = design.x_centered.t_matvec(&design.y_centered);
    lambdas
        .iter()
        .map(|&lambda| {
            if lambda < 0.0 {
                return Err(Error::HyperOutOfRange(format!("lambda {lambda} < 0")));
            }
            let mut g = gram.clone();
            for j in 0..g.rows() {
                g.set(j, j, g.get(j, j) + lambda);
            }
            let beta = cholesky_solve(&g, &xty).map_err(|e| {
                if lambda == 0.0 {
                    Error::Singular("ridge with lambda = 0 requires full column rank".into())
                } else {
                    e
                }
            })?;
            Ok(model(
                Method::Ridge,
                Hyper::Lambda(lambda),
                &design,
                beta,
                &x.col_names,
            ))
        })
        .collect()
}

pub fn ridge_fit(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Result<FittedModel> {
    ridge_fit_path(x, y, &[lambda]).pop().expect("one requested fit")
}

/// intercept + X·β, with the column layout checked against the model.
pub fn predict(model: &FittedModel, x_new: &FeatureMatrix) -> Result<Vec<f64>> {
    if x_new.col_names != model.col_names {
        return Err(Error::ShapeMismatch(
            "prediction columns do not match the fitted model".into(),
        ));
    }
    Ok(x_new
        .values
        .matvec(&model.coefficients)
        .into_iter()
        .map(|v| v + model.intercept)
        .collect())
}

//! Train/test split, 5-fold cross-validated hyperparameter search by RMSE,
//! and the feature-set x estimator comparison grid reported with MAEs.

use serde::{Deserialize, Serialize};

use crate::corpus::{log_fines, Corpus};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linreg::{pcr_fit, pls1_fit, predict, ridge_fit, design_rank, FittedModel, Hyper};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            test_fraction: 0.20,
            folds: 5,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.test_fraction && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction {} not in (0, 1)",
                self.test_fraction
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be >= 2".into()));
        }
        Ok(())
    }
}

/// Seeded shuffle of 0..n; the last ⌈n·test_fraction⌉ shuffled indices form
/// the test set. Both halves are returned sorted ascending.
pub fn split(n: usize, spec: &SplitSpec) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(spec.seed);
    rng.shuffle(&mut idx);
    let test_len = (n as f64 * spec.test_fraction).ceil() as usize;
    let mut test = idx.split_off(n - test_len);
    let mut train = idx;
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Seeded shuffle, then contiguous blocks with sizes differing by at most 1.
pub fn kfold(indices: &[usize], k: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(k >= 1 && indices.len() >= k, "need at least k indices");
    let mut shuffled = indices.to_vec();
    SplitMix64::new(seed).shuffle(&mut shuffled);
    let base = shuffled.len() / k;
    let rem = shuffled.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < rem);
        folds.push(shuffled[start..start + size].to_vec());
        start += size;
    }
    folds
}

pub fn rmse(obs: &[f64], pred: &[f64]) -> f64 {
    assert_eq!(obs.len(), pred.len());
    assert!(!obs.is_empty());
    let mse: f64 = obs
        .iter()
        .zip(pred)
        .map(|(o, p)| (o - p) * (o - p))
        .sum::<f64>()
        / obs.len() as f64;
    mse.sqrt()
}

pub fn mae(obs: &[f64], pred: &[f64]) -> f64 {
    assert_eq!(obs.len(), pred.len());
    assert!(!obs.is_empty());
    obs.iter().zip(pred).map(|(o, p)| (o - p).abs()).sum::<f64>() / obs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    Pcr,
    Pls,
    Ridge,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Pcr, EstimatorKind::Pls, EstimatorKind::Ridge];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Pcr => "PCR",
            EstimatorKind::Pls => "PLS",
            EstimatorKind::Ridge => "Ridge",
        }
    }
}

pub fn fit_estimator(
    kind: EstimatorKind,
    x: &FeatureMatrix,
    y: &[f64],
    hyper: Hyper,
) -> Result<FittedModel> {
    match (kind, hyper) {
        (EstimatorKind::Pcr, Hyper::Components(k)) => pcr_fit(x, y, k),
        (EstimatorKind::Pls, Hyper::Components(k)) => pls1_fit(x, y, k),
        (EstimatorKind::Ridge, Hyper::Lambda(l)) => ridge_fit(x, y, l),
        _ => Err(Error::HyperOutOfRange(format!(
            "{:?} cannot take {:?}",
            kind, hyper
        ))),
    }
}

/// Fit one estimator at every grid point, sharing the heavy work (SVD,
/// NIPALS deflation, Gram matrix) across the grid.
pub fn fit_estimator_path(
    kind: EstimatorKind,
    x: &FeatureMatrix,
    y: &[f64],
    grid: &[Hyper],
) -> Result<Vec<Result<FittedModel>>> {
    match kind {
        EstimatorKind::Pcr | EstimatorKind::Pls => {
            let ks: Vec<usize> = grid
                .iter()
                .map(|h| match h {
                    Hyper::Components(k) => Ok(*k),
                    other => Err(Error::HyperOutOfRange(format!(
                        "{kind:?} cannot take {other:?}"
                    ))),
                })
                .collect::<Result<_>>()?;
            Ok(match kind {
                EstimatorKind::Pcr => crate::linreg::pcr_fit_path(x, y, &ks),
                _ => crate::linreg::pls1_fit_path(x, y, &ks),
            })
        }
        EstimatorKind::Ridge => {
            let lambdas: Vec<f64> = grid
                .iter()
                .map(|h| match h {
                    Hyper::Lambda(l) => Ok(*l),
                    other => Err(Error::HyperOutOfRange(format!(
                        "Ridge cannot take {other:?}"
                    ))),
                })
                .collect::<Result<_>>()?;
            Ok(crate::linreg::ridge_fit_path(x, y, &lambdas))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: Hyper,
    /// (grid point, mean held-out RMSE) for every evaluated point.
    pub table: Vec<(Hyper, f64)>,
    pub skipped: Vec<Hyper>,
}

fn simpler(a: Hyper, b: Hyper) -> bool {
    // tie-break: fewer components, or a larger shrinkage penalty
    match (a, b) {
        (Hyper::Components(x), Hyper::Components(y)) => x < y,
        (Hyper::Lambda(x), Hyper::Lambda(y)) => x > y,
        _ => false,
    }
}

/// Mean held-out RMSE over k folds for every grid point; the best point is
/// the smallest mean, ties going to the simpler model. Grid points that are
/// infeasible on some fold (components beyond the fold-train rank, or a fit
/// failure) are skipped with a warning.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &[f64],
    kind: EstimatorKind,
    grid: &[Hyper],
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty hyperparameter grid".into()));
    }
    let n = x.n_rows();
    assert_eq!(n, y.len());
    let indices: Vec<usize> = (0..n).collect();
    let folds = kfold(&indices, k, seed);

    // fold-train designs shared across grid points
    let mut fold_sets = Vec::with_capacity(k);
    for fold in &folds {
        let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|i| !in_fold.contains(i))
            .collect();
        let x_train = x.select_rows(&train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let x_val = x.select_rows(fold);
        let y_val: Vec<f64> = fold.iter().map(|&i| y[i]).collect();
        fold_sets.push((x_train, y_train, x_val, y_val));
    }

    let min_fold_rank = fold_sets
        .iter()
        .map(|(xt, yt, _, _)| design_rank(&xt.values, yt.len()))
        .min()
        .unwrap_or(0);

    // None marks a skipped grid point
    let mut sums: Vec<Option<f64>> = grid
        .iter()
        .map(|hyper| {
            if let Hyper::Components(c) = hyper {
                if *c > min_fold_rank {
                    eprintln!(
                        "warning: skipping {c} components (fold-train rank is {min_fold_rank})"
                    );
                    return None;
                }
            }
            Some(0.0)
        })
        .collect();
    for (x_train, y_train, x_val, y_val) in &fold_sets {
        let fits = fit_estimator_path(kind, x_train, y_train, grid)?;
        for ((sum, fit), hyper) in sums.iter_mut().zip(fits).zip(grid) {
            if sum.is_none() {
                continue;
            }
            match fit {
                Ok(model) => {
                    let preds = predict(&model, x_val)?;
                    *sum = sum.map(|s| s + rmse(y_val, &preds));
                }
                Err(e) => {
                    eprintln!("warning: skipping {hyper:?}: {e}");
                    *sum = None;
                }
            }
        }
    }
    let mut table = Vec::new();
    let mut skipped = Vec::new();
    for (&hyper, sum) in grid.iter().zip(sums) {
        match sum {
            Some(s) => table.push((hyper, s / k as f64)),
            None => skipped.push(hyper),
        }
    }
    if table.is_empty() {
        return Err(Error::InvalidConfig(
            "every grid point was infeasible".into(),
        ));
    }

    let mut best = table[0];
    for &(hyper, score) in &table[1..] {
        if score < best.1 || (score == best.1 && simpler(hyper, best.0)) {
            best = (hyper, score);
        }
    }
    Ok(CvOutcome {
        best: best.0,
        table,
        skipped,
    })
}

/// Components 1..min(cap, p, smallest fold-train size − 1).
pub fn default_component_grid(p: usize, min_fold_train: usize, cap: usize) -> Vec<Hyper> {
    let hi = cap.min(p).min(min_fold_train.saturating_sub(1));
    (1..=hi).map(Hyper::Components).collect()
}

/// 25 logarithmically spaced penalties in [1e-3, 1e3].
pub fn default_lambda_grid() -> Vec<Hyper> {
    let lo = 1e-3_f64.ln();
    let hi = 1e3_f64.ln();
    (0..25)
        .map(|i| Hyper::Lambda((lo + (hi - lo) * i as f64 / 24.0).exp()))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CasePrediction {
    pub case_id: String,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigResult {
    pub feature_set: String,
    pub estimator: String,
    pub hyper: Hyper,
    pub cv_rmse: f64,
    pub train_mae: f64,
    pub test_mae: f64,
    pub test_predictions: Vec<CasePrediction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub configs: Vec<ConfigResult>,
}

pub struct GridOptions {
    pub component_cap: usize,
    pub lambda_grid: Vec<Hyper>,
    /// When set, overrides the derived component grid.
    pub component_grid: Option<Vec<Hyper>>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            component_cap: 20,
            lambda_grid: default_lambda_grid(),
            component_grid: None,
        }
    }
}

/// One shared train/test split; for every (feature set, estimator) pair:
/// cross-validate on the training portion, refit the winner on the full
/// training portion, report train and test MAE plus per-case test pairs.
pub fn run_grid(
    corpus: &Corpus,
    feature_sets: &[(String, FeatureMatrix)],
    estimators: &[EstimatorKind],
    spec: &SplitSpec,
    options: &GridOptions,
) -> Result<EvalReport> {
    spec.validate()?;
    let n = corpus.len();
    if n < 5 {
        return Err(Error::InvalidConfig("need at least 5 cases".into()));
    }
    let y = log_fines(corpus);
    let (train, test) = split(n, spec);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();

    let fold_sizes = kfold(&train, spec.folds, spec.seed.wrapping_add(1));
    let max_fold = fold_sizes.iter().map(Vec::len).max().unwrap_or(0);
    let min_fold_train = train.len() - max_fold;

    let mut configs = Vec::new();
    for (name, matrix) in feature_sets {
        if matrix.row_ids != corpus.case_ids() {
            return Err(Error::ShapeMismatch(format!(
                "feature set {name} rows do not match corpus order"
            )));
        }
        let x_train = matrix.select_rows(&train);
        let x_test = matrix.select_rows(&test);
        for &kind in estimators {
            let grid = match kind {
                EstimatorKind::Ridge => options.lambda_grid.clone(),
                _ => options.component_grid.clone().unwrap_or_else(|| {
                    default_component_grid(matrix.n_cols(), min_fold_train, options.component_cap)
                }),
            };
            let cv = cross_validate(
                &x_train,
                &y_train,
                kind,
                &grid,
                spec.folds,
                spec.seed.wrapping_add(1),
            )?;
            let cv_rmse = cv
                .table
                .iter()
                .find(|(h, _)| *h == cv.best)
                .map(|&(_, r)| r)
                .expect("best is in table");
            let model = fit_estimator(kind, &x_train, &y_train, cv.best)?;
            let train_preds = predict(&model, &x_train)?;
            let test_preds = predict(&model, &x_test)?;
            let test_predictions = test
                .iter()
                .zip(&y_test)
                .zip(&test_preds)
                .map(|((&i, &obs), &pred)| CasePrediction {
                    case_id: corpus.cases[i].case_id.clone(),
                    observed: obs,
                    predicted: pred,
                })
                .collect();
            configs.push(ConfigResult {
                feature_set: name.clone(),
                estimator: kind.name().to_string(),
                hyper: cv.best,
                cv_rmse,
                train_mae: mae(&y_train, &train_preds),
                test_mae: mae(&y_test, &test_preds),
                test_predictions,
            });
        }
    }
    Ok(EvalReport {
        schema_version: 1,
        seed: spec.seed,
        test_fraction: spec.test_fraction,
        folds: spec.folds,
        n_train: train.len(),
        n_test: test.len(),
        configs,
    })
}

/// Fixed-width histogram of log-fines: bin width 0.5 over [0, 18].
/// Returns (bin_low, bin_high, count); values outside the range are dropped.
pub fn log_fine_histogram(log_fines: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut bins = vec![0usize; 36];
    for &v in log_fines {
        if (0.0..18.0).contains(&v) {
            bins[(v / 0.5) as usize] += 1;
        }
    }
    bins.into_iter()
        .enumerate()
        .map(|(i, c)| (0.5 * i as f64, 0.5 * (i + 1) as f64, c))
        .collect()
}

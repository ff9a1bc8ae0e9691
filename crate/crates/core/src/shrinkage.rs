//! Ridge regression through the SVD and elastic net by coordinate descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::dataset::{self, ModelMatrix, Standardization};
use crate::error::{Error, Result};
use crate::linalg::{self, SvdFactors};
use crate::ols::OlsFit;

/// Ridge fits over a grid of penalties, on the standardized scale.
#[derive(Debug, Clone)]
pub struct RidgePath {
    pub lambdas: Vec<f64>,
    /// Row k holds the coefficients at `lambdas[k]`.
    pub coefs: Array2<f64>,
    pub df: Vec<f64>,
    pub gcv: Vec<f64>,
    pub press: Vec<f64>,
    /// Original-scale intercepts; filled by [`RidgePath::back_transform`].
    pub intercept_back: Vec<f64>,
    pub svd: SvdFactors,
    pub y: Array1<f64>,
    /// Number of columns of the design.
    pub p: usize,
}

fn ridge_shrink(d: &Array1<f64>, lambda: f64) -> Array1<f64> {
    d.mapv(|dk| dk * dk / (dk * dk + lambda))
}

impl RidgePath {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Leverages `h_i(lambda)` of the ridge hat matrix.
    pub fn leverage(&self, lambda: f64) -> Array1<f64> {
        let s = ridge_shrink(&self.svd.d, lambda);
        let u2 = self.svd.u.mapv(|v| v * v);
        u2.dot(&s)
    }

    pub fn fitted(&self, lambda: f64) -> Array1<f64> {
        let uty = self.svd.u.t().dot(&self.y);
        self.svd.u.dot(&(ridge_shrink(&self.svd.d, lambda) * uty))
    }

    /// Fills `intercept_back` and returns original-scale slopes per lambda.
    pub fn back_transform(&mut self, st: &Standardization) -> Array2<f64> {
        let mut slopes = Array2::zeros(self.coefs.dim());
        self.intercept_back.clear();
        for (k, row) in self.coefs.rows().into_iter().enumerate() {
            let (b0, b) = st.back_transform(&row.to_owned());
            self.intercept_back.push(b0);
            slopes.row_mut(k).assign(&b);
        }
        slopes
    }
}

/// Ridge path on an already standardized design (no intercept column).
pub fn ridge_path(mm_std: &ModelMatrix, lambdas: &[f64]) -> Result<RidgePath> {
    if let Some(l) = lambdas.iter().find(|&&l| !(l >= 0.0)) {
        return Err(Error::Spec(format!("ridge penalty {l} is negative")));
    }
    let svd = linalg::thin_svd(mm_std.x.view());
    let y = mm_std.y.clone();
    let n = y.len() as f64;
    let uty = svd.u.t().dot(&y);
    let u2 = svd.u.mapv(|v| v * v);
    let p = mm_std.p();
    let mut coefs = Array2::zeros((lambdas.len(), p));
    let (mut df, mut gcv, mut press) = (Vec::new(), Vec::new(), Vec::new());
    for (k, &lam) in lambdas.iter().enumerate() {
        let dd = svd.d.mapv(|d| d / (d * d + lam));
        coefs.row_mut(k).assign(&svd.v.dot(&(&dd * &uty)));
        let s = ridge_shrink(&svd.d, lam);
        let fitted = svd.u.dot(&(&s * &uty));
        let resid = &y - &fitted;
        let tr = s.sum();
        let rss = resid.dot(&resid);
        let h = u2.dot(&s);
        df.push(tr);
        gcv.push(rss / (1.0 - tr / n).powi(2));
        press.push(resid.iter().zip(&h).map(|(e, h)| (e / (1.0 - h)).powi(2)).sum());
    }
    Ok(RidgePath {
        lambdas: lambdas.to_vec(),
        coefs,
        df,
        gcv,
        press,
        intercept_back: vec![0.0; lambdas.len()],
        svd,
        y,
        p,
    })
}

/// Log-spaced grid from `1e-4 n` to `1e3 n`, the scale of a standardized design.
pub fn default_ridge_grid(n: usize, len: usize) -> Vec<f64> {
    log_grid(1e3 * n as f64, 7.0, len).into_iter().rev().collect()
}

/// `len` values from `top` down `decades` powers of ten.
pub fn log_grid(top: f64, decades: f64, len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![top];
    }
    (0..len)
        .map(|k| top * 10f64.powf(-decades * k as f64 / (len - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeTuning {
    pub gcv_lambda: f64,
    pub hkb_lambda: f64,
    pub lw_lambda: f64,
}

/// Grid minimizer of GCV; ties go to the smallest penalty.
pub fn gcv_lambda(path: &RidgePath) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    for (&l, &g) in path.lambdas.iter().zip(&path.gcv) {
        if !g.is_finite() {
            continue;
        }
        best = match best {
            Some((bl, bg)) if g > bg || (g == bg && l >= bl) => Some((bl, bg)),
            _ => Some((l, g)),
        };
    }
    best.map_or(f64::NAN, |b| b.0)
}

/// `p sigma2 / |beta|^2`.
pub fn hkb_lambda(p: usize, sigma2: f64, beta: ArrayView1<f64>) -> f64 {
    p as f64 * sigma2 / beta.dot(&beta)
}

/// `p sigma2 / |X beta|^2`.
pub fn lw_lambda(p: usize, sigma2: f64, x: ArrayView2<f64>, beta: ArrayView1<f64>) -> f64 {
    let xb = x.dot(&beta);
    p as f64 * sigma2 / xb.dot(&xb)
}

/// GCV, HKB and LW penalties. Without `fit0` the OLS fit is read off the
/// SVD, with `n - p - 1` residual degrees of freedom for the centered response.
pub fn ridge_tune(path: &RidgePath, fit0: Option<&OlsFit>) -> Result<RidgeTuning> {
    let (n, p) = (path.n(), path.p);
    let gcv = gcv_lambda(path);
    let (beta, sigma2) = match fit0 {
        Some(f) => {
            let start = usize::from(f.has_intercept);
            (f.beta.slice(ndarray::s![start..]).to_owned(), f.sigma2_hat)
        }
        None => {
            if n <= p + 1 || path.svd.d.len() < p {
                return Err(Error::InsufficientData("HKB and LW need a full-rank OLS fit".into()));
            }
            let uty = path.svd.u.t().dot(&path.y);
            let beta = path.svd.v.dot(&(&uty / &path.svd.d));
            let rss = path.y.dot(&path.y) - uty.dot(&uty);
            (beta, rss / (n - p - 1) as f64)
        }
    };
    let d2 = path.svd.d.mapv(|d| d * d);
    let vtb = path.svd.v.t().dot(&beta);
    let quad = (&vtb * &vtb * &d2).sum();
    Ok(RidgeTuning {
        gcv_lambda: gcv,
        hkb_lambda: hkb_lambda(beta.len(), sigma2, beta.view()),
        lw_lambda: beta.len() as f64 * sigma2 / quad,
    })
}

/// Leave-one-out prediction residuals, one row per lambda.
pub fn ridge_loo(path: &RidgePath) -> Array2<f64> {
    let mut out = Array2::zeros((path.lambdas.len(), path.n()));
    for (k, &lam) in path.lambdas.iter().enumerate() {
        let e = &path.y - &path.fitted(lam);
        let h = path.leverage(lam);
        out.row_mut(k).assign(&(&e / &h.mapv(|v| 1.0 - v)));
    }
    out
}

pub fn soft_threshold(b0: f64, lam: f64) -> f64 {
    b0.signum() * (b0.abs() - lam).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_sweeps: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct CdResult {
    pub beta: Array1<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Penalized objective `(2n)^{-1} RSS + lambda (alpha/2 |b|^2 + (1 - alpha)|b|_1)`.
pub fn enet_objective(x: ArrayView2<f64>, y: ArrayView1<f64>, beta: ArrayView1<f64>, lambda: f64, alpha: f64) -> f64 {
    let r = &y - &x.dot(&beta);
    let n = y.len() as f64;
    r.dot(&r) / (2.0 * n)
        + lambda * (alpha / 2.0 * beta.dot(&beta) + (1.0 - alpha) * beta.iter().map(|b| b.abs()).sum::<f64>())
}

/// Coordinate descent state shared along a path. With a precomputed Gram
/// matrix the gradient `X'r / n` is updated in O(p) per changed coordinate;
/// wide designs fall back to residual updates.
enum Cd<'a> {
    Gram { gram: Array2<f64>, xty: Array1<f64> },
    Resid { x: ArrayView2<'a, f64>, y: ArrayView1<'a, f64>, c: Array1<f64> },
}

const GRAM_MAX_P: usize = 2000;

impl<'a> Cd<'a> {
    fn new(x: ArrayView2<'a, f64>, y: ArrayView1<'a, f64>) -> Self {
        let n = x.nrows() as f64;
        if x.ncols() <= GRAM_MAX_P {
            Cd::Gram { gram: x.t().dot(&x) / n, xty: x.t().dot(&y) / n }
        } else {
            let c = x.columns().into_iter().map(|col| col.dot(&col) / n).collect();
            Cd::Resid { x, y, c }
        }
    }

    fn solve(&self, lambda: f64, alpha: f64, opts: CdOptions, warm: Option<&Array1<f64>>) -> CdResult {
        let p = match self {
            Cd::Gram { xty, .. } => xty.len(),
            Cd::Resid { c, .. } => c.len(),
        };
        let mut beta = warm.cloned().unwrap_or_else(|| Array1::zeros(p));
        // gradient for Gram, residual otherwise
        let mut state = match self {
            Cd::Gram { gram, xty } => xty - &gram.dot(&beta),
            Cd::Resid { x, y, .. } => y - &x.dot(&beta),
        };
        let (l1, l2) = (lambda * (1.0 - alpha), lambda * alpha);
        let all: Vec<usize> = (0..p).collect();
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            if self.sweep(&all, &mut beta, &mut state, l1, l2) < opts.tol {
                return CdResult { beta, sweeps, converged: true };
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            while sweeps < opts.max_sweeps {
                sweeps += 1;
                if self.sweep(&active, &mut beta, &mut state, l1, l2) < opts.tol {
                    break;
                }
            }
        }
        CdResult { beta, sweeps, converged: false }
    }

    /// One pass over `idx`; returns the largest coefficient change.
    fn sweep(&self, idx: &[usize], beta: &mut Array1<f64>, state: &mut Array1<f64>, l1: f64, l2: f64) -> f64 {
        let mut max_change = 0.0f64;
        for &j in idx {
            let old = beta[j];
            let (cj, grad) = match self {
                Cd::Gram { gram, .. } => (gram[[j, j]], state[j]),
                Cd::Resid { x, c, .. } => (c[j], x.column(j).dot(state) / x.nrows() as f64),
            };
            let denom = cj + l2;
            let new = if denom > 0.0 { soft_threshold(grad + cj * old, l1) / denom } else { 0.0 };
            if new != old {
                match self {
                    Cd::Gram { gram, .. } => state.scaled_add(old - new, &gram.row(j)),
                    Cd::Resid { x, .. } => state.scaled_add(old - new, &x.column(j)),
                }
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    }
}

fn check_penalty(lambda: f64, alpha: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::Spec(format!("penalty {lambda} is negative")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Spec(format!("mixing parameter {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Coordinate descent without the convergence check turned into an error.
pub fn enet_cd_raw(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
    alpha: f64,
    opts: CdOptions,
    warm: Option<&Array1<f64>>,
) -> Result<CdResult> {
    check_penalty(lambda, alpha)?;
    Ok(Cd::new(x, y).solve(lambda, alpha, opts, warm))
}

/// Elastic net by cyclic coordinate descent; `alpha = 0` is the lasso and
/// `alpha = 1` ridge.
pub fn enet_cd(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
    alpha: f64,
    opts: CdOptions,
    warm: Option<&Array1<f64>>,
) -> Result<Array1<f64>> {
    let res = enet_cd_raw(x, y, lambda, alpha, opts, warm)?;
    if res.converged {
        Ok(res.beta)
    } else {
        Err(Error::Convergence {
            iterations: res.sweeps,
            msg: format!("coordinate descent at lambda {lambda}"),
        })
    }
}

/// Smallest penalty with an all-zero solution. The lasso share is floored
/// at 1e-3 so that pure ridge still gets a finite grid.
pub fn lambda_max(x: ArrayView2<f64>, y: ArrayView1<f64>, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let g = x.t().dot(&y).fold(0.0f64, |m, v| m.max(v.abs())) / n;
    g / (1.0 - alpha).max(1e-3)
}

/// Largest violation of the stationarity conditions.
pub fn kkt_violation(x: ArrayView2<f64>, y: ArrayView1<f64>, beta: ArrayView1<f64>, lambda: f64, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let r = &y - &x.dot(&beta);
    let g = x.t().dot(&r) / n - &(&beta * (lambda * alpha));
    let l1 = lambda * (1.0 - alpha);
    g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj == 0.0 {
                (gj.abs() - l1).max(0.0)
            } else {
                (gj - l1 * bj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Augmented design that turns an elastic net into a lasso:
/// `([X; sqrt(n lambda alpha) I], [y; 0], n lambda (1 - alpha) / (n + p))`.
pub fn enet_as_lasso(x: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64, alpha: f64) -> (Array2<f64>, Array1<f64>, f64) {
    let (n, p) = x.dim();
    let s = (n as f64 * lambda * alpha).sqrt();
    let mut xa = Array2::zeros((n + p, p));
    xa.slice_mut(ndarray::s![..n, ..]).assign(&x);
    for j in 0..p {
        xa[[n + j, j]] = s;
    }
    let mut ya = Array1::zeros(n + p);
    ya.slice_mut(ndarray::s![..n]).assign(&y);
    let lt = n as f64 / (n + p) as f64 * lambda * (1.0 - alpha);
    (xa, ya, lt)
}

#[derive(Debug, Clone)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefs: Array2<f64>,
    pub alpha: f64,
    pub n_iter: Vec<usize>,
    pub converged: Vec<bool>,
}

/// Warm-started path over a decreasing grid.
pub fn lasso_path(x: ArrayView2<f64>, y: ArrayView1<f64>, alpha: f64, lambdas: &[f64], opts: CdOptions) -> Result<LassoPath> {
    let p = x.ncols();
    let mut coefs = Array2::zeros((lambdas.len(), p));
    let mut n_iter = Vec::with_capacity(lambdas.len());
    let mut converged = Vec::with_capacity(lambdas.len());
    let mut warm = Array1::zeros(p);
    let cd = Cd::new(x, y);
    for (k, &lam) in lambdas.iter().enumerate() {
        check_penalty(lam, alpha)?;
        let res = cd.solve(lam, alpha, opts, Some(&warm));
        coefs.row_mut(k).assign(&res.beta);
        n_iter.push(res.sweeps);
        converged.push(res.converged);
        warm = res.beta;
    }
    Ok(LassoPath { lambdas: lambdas.to_vec(), coefs, alpha, n_iter, converged })
}

#[derive(Debug, Clone)]
pub struct CvPath {
    /// Path on the full standardized data.
    pub path: LassoPath,
    /// Pooled mean held-out squared error per lambda.
    pub cv_errors: Vec<f64>,
    /// Standard error of the fold-level mean errors.
    pub cv_se: Vec<f64>,
    pub lambda_min: f64,
    pub index_min: usize,
    pub standardization: Standardization,
}

impl CvPath {
    /// Original-scale `(intercept, slopes)` at grid index `k`.
    pub fn coefficients(&self, k: usize) -> (f64, Array1<f64>) {
        self.standardization.back_transform(&self.path.coefs.row(k).to_owned())
    }
}

/// K-fold cross-validated elastic-net path. Each training fold is
/// standardized on its own; the grid starts at the largest `lambda_max`
/// over the full data and all training folds and runs down four decades.
pub fn cv_path(mm: &ModelMatrix, alpha: f64, k: usize, seed: u64, n_lambda: usize) -> Result<CvPath> {
    cv_path_with(mm, alpha, k, seed, n_lambda, CdOptions::default())
}

pub fn cv_path_with(mm: &ModelMatrix, alpha: f64, k: usize, seed: u64, n_lambda: usize, opts: CdOptions) -> Result<CvPath> {
    if n_lambda == 0 {
        return Err(Error::Spec("empty lambda grid".into()));
    }
    let folds = dataset::kfold_indices(mm.n(), k, seed)?;
    let (full, st) = dataset::standardize(mm)?;
    let mut train = Vec::with_capacity(k);
    for fold in &folds {
        let rows: Vec<usize> = (0..mm.n()).filter(|i| fold.binary_search(i).is_err()).collect();
        let (std_tr, st_tr) = dataset::standardize(&mm.subset(&rows))?;
        train.push((std_tr, st_tr));
    }
    let top = train
        .iter()
        .map(|(s, _)| lambda_max(s.x.view(), s.y.view(), alpha))
        .fold(lambda_max(full.x.view(), full.y.view(), alpha), f64::max);
    let lambdas = log_grid(top, 4.0, n_lambda);
    let path = lasso_path(full.x.view(), full.y.view(), alpha, &lambdas, opts)?;

    let per_fold: Vec<Result<Vec<f64>>> = folds
        .par_iter()
        .zip(train.par_iter())
        .map(|(fold, (std_tr, st_tr))| {
            let fp = lasso_path(std_tr.x.view(), std_tr.y.view(), alpha, &lambdas, opts)?;
            let held = mm.subset(fold);
            let xh = held.covariates();
            Ok((0..lambdas.len())
                .map(|l| {
                    let (b0, b) = st_tr.back_transform(&fp.coefs.row(l).to_owned());
                    let pred = xh.dot(&b) + b0;
                    let e = &held.y - &pred;
                    e.dot(&e)
                })
                .collect())
        })
        .collect();
    let per_fold: Vec<Vec<f64>> = per_fold.into_iter().collect::<Result<_>>()?;

    let n = mm.n() as f64;
    let cv_errors: Vec<f64> = (0..lambdas.len()).map(|l| per_fold.iter().map(|f| f[l]).sum::<f64>() / n).collect();
    let cv_se: Vec<f64> = (0..lambdas.len())
        .map(|l| {
            let means = Array1::from_iter(folds.iter().zip(&per_fold).map(|(fo, f)| f[l] / fo.len() as f64));
            means.std(1.0) / (k as f64).sqrt()
        })
        .collect();
    let index_min = argmin_smallest_lambda(&lambdas, &cv_errors);
    Ok(CvPath { lambda_min: lambdas[index_min], index_min, path, cv_errors, cv_se, standardization: st })
}

fn argmin_smallest_lambda(lambdas: &[f64], err: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..err.len() {
        if err[k] < err[best] || (err[k] == err[best] && lambdas[k] < lambdas[best]) {
            best = k;
        }
    }
    best
}

/// Rows of `x` predicted from an original-scale intercept and slopes.
pub fn predict_linear(x: ArrayView2<f64>, intercept: f64, slopes: ArrayView1<f64>) -> Array1<f64> {
    x.dot(&slopes) + intercept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ols;
    use crate::rng;
    use ndarray::array;

    fn max_abs<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn std_data(n: usize, p: usize, seed: u64) -> ModelMatrix {
        let mut g = rng::seeded(seed);
        let mut x = rng::normal_matrix(&mut g, n, p + 1);
        x.column_mut(0).fill(1.0);
        let beta = Array1::from_shape_fn(p + 1, |j| if j % 2 == 0 { 1.0 } else { -0.5 });
        let y = x.dot(&beta) + rng::normal_vec(&mut g, n);
        dataset::standardize(&ModelMatrix::new(x, y)).unwrap().0
    }

    /// n x p design with orthonormal columns scaled so that n^{-1} X'X = I.
    fn orthonormal(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut g = rng::seeded(seed);
        let z = rng::normal_matrix(&mut g, n, p);
        linalg::gram_schmidt_qr(z.view()).unwrap().q * (n as f64).sqrt()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }

    #[test]
    fn ridge_zero_is_ols() {
        let mm = std_data(40, 5, 1);
        let path = ridge_path(&mm, &[0.0, 1.0, 10.0]).unwrap();
        let b = ols::ols_beta(mm.x.view(), mm.y.view()).unwrap();
        assert!(max_abs(&(&path.coefs.row(0) - &b)) < 1e-8);
        assert!(ridge_path(&mm, &[-1.0]).is_err());
    }

    #[test]
    fn ridge_orthonormal_shrinks() {
        let mut g = rng::seeded(2);
        let x = orthonormal(30, 3, 2) / (30f64).sqrt();
        let y = rng::normal_vec(&mut g, 30);
        let mm = ModelMatrix::new(x.clone(), y.clone());
        let path = ridge_path(&mm, &[0.5]).unwrap();
        let b = x.t().dot(&y);
        assert!(max_abs(&(&path.coefs.row(0) - &(b / 1.5))) < 1e-12);
    }

    #[test]
    fn ridge_norm_decreases() {
        let mm = std_data(40, 6, 3);
        let grid = default_ridge_grid(40, 30);
        let path = ridge_path(&mm, &grid).unwrap();
        let norms: Vec<f64> = path.coefs.rows().into_iter().map(|r| r.dot(&r)).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn ridge_augmented_and_dual() {
        for (n, p) in [(30usize, 5usize), (10, 25)] {
            let mut g = rng::seeded((n * p) as u64);
            let x = rng::normal_matrix(&mut g, n, p);
            let y = rng::normal_vec(&mut g, n);
            let lam = 2.5;
            let mm = ModelMatrix::new(x.clone(), y.clone());
            let path = ridge_path(&mm, &[lam]).unwrap();
            let primal = linalg::spd_inverse((x.t().dot(&x) + Array2::<f64>::eye(p) * lam).view())
                .unwrap()
                .dot(&x.t().dot(&y));
            let dual = x.t().dot(&linalg::spd_inverse((x.dot(&x.t()) + Array2::<f64>::eye(n) * lam).view()).unwrap().dot(&y));
            assert!(max_abs(&(&primal - &dual)) < 1e-8);
            assert!(max_abs(&(&path.coefs.row(0) - &primal)) < 1e-8);
            let mut xa = Array2::zeros((n + p, p));
            xa.slice_mut(ndarray::s![..n, ..]).assign(&x);
            for j in 0..p {
                xa[[n + j, j]] = lam.sqrt();
            }
            let mut ya = Array1::zeros(n + p);
            ya.slice_mut(ndarray::s![..n]).assign(&y);
            let aug = ols::ols_beta(xa.view(), ya.view()).unwrap();
            assert!(max_abs(&(&aug - &primal)) < 1e-8);
        }
    }

    #[test]
    fn ridge_loo_matches_refit() {
        let mm = std_data(25, 4, 4);
        let lams = [0.0, 0.7, 5.0];
        let path = ridge_path(&mm, &lams).unwrap();
        let loo = ridge_loo(&path);
        let ols_loo = crate::diagnostics::loo_all(&ols::fit_xy(mm.x.view(), mm.y.view(), &mm.names).unwrap()).unwrap();
        assert!(max_abs(&(&loo.row(0) - &ols_loo.pred_residuals)) < 1e-8);
        for (k, &lam) in lams.iter().enumerate() {
            for i in 0..25 {
                let rows: Vec<usize> = (0..25).filter(|&r| r != i).collect();
                let xs = mm.x.select(ndarray::Axis(0), &rows);
                let ys = mm.y.select(ndarray::Axis(0), &rows);
                let b = linalg::spd_inverse((xs.t().dot(&xs) + Array2::<f64>::eye(4) * lam).view())
                    .unwrap()
                    .dot(&xs.t().dot(&ys));
                assert!((mm.y[i] - mm.x.row(i).dot(&b) - loo[[k, i]]).abs() < 1e-8);
            }
        }
        let big = ridge_path(&mm, &[1e8]).unwrap();
        assert!(max_abs(&(&ridge_loo(&big).row(0) - &mm.y)) < 1e-3);
    }

    #[test]
    fn ridge_tuning_rules() {
        assert!((hkb_lambda(2, 1.0, array![2.0, 0.0].view()) - 0.5).abs() < 1e-15);
        let mm = std_data(50, 4, 5);
        let path = ridge_path(&mm, &default_ridge_grid(50, 40)).unwrap();
        let t = ridge_tune(&path, None).unwrap();
        let k = path.lambdas.iter().position(|&l| l == t.gcv_lambda).unwrap();
        assert!(path.gcv.iter().all(|&g| g >= path.gcv[k]));
        assert!(t.hkb_lambda > 0.0 && t.lw_lambda > 0.0);
        let wide = std_data(5, 8, 6);
        let wp = ridge_path(&wide, &[1.0]).unwrap();
        assert!(matches!(ridge_tune(&wp, None), Err(Error::InsufficientData(_))));
        // ties go to the smallest lambda
        let mut tied = wp.clone();
        tied.lambdas = vec![3.0, 1.0, 2.0];
        tied.gcv = vec![1.0, 1.0, 2.0];
        assert_eq!(gcv_lambda(&tied), 1.0);
    }

    #[test]
    fn lasso_orthonormal_soft_threshold() {
        let mut g = rng::seeded(7);
        let n = 50;
        let x = orthonormal(n, 4, 7);
        let y = x.dot(&array![2.0, -0.3, 0.05, 1.0]) + rng::normal_vec(&mut g, n);
        let b_ols = x.t().dot(&y) / n as f64;
        for lam in [0.01, 0.2, 0.7] {
            let b = enet_cd(x.view(), y.view(), lam, 0.0, CdOptions { tol: 1e-13, max_sweeps: 1000 }, None).unwrap();
            let closed = b_ols.mapv(|v| soft_threshold(v, lam));
            assert!(max_abs(&(&b - &closed)) < 1e-10);
        }
    }

    #[test]
    fn lasso_zero_above_lambda_max() {
        let mm = std_data(40, 6, 8);
        for alpha in [0.0, 0.5] {
            let lm = lambda_max(mm.x.view(), mm.y.view(), alpha);
            let b = enet_cd(mm.x.view(), mm.y.view(), lm, alpha, CdOptions::default(), None).unwrap();
            assert!(b.iter().all(|&v| v == 0.0));
            let b = enet_cd(mm.x.view(), mm.y.view(), lm * 0.9, alpha, CdOptions::default(), None).unwrap();
            assert!(b.iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn lasso_tiny_lambda_is_ols() {
        let mm = std_data(60, 5, 9);
        let b = enet_cd(mm.x.view(), mm.y.view(), 1e-8, 0.0, CdOptions { tol: 1e-12, max_sweeps: 100_000 }, None).unwrap();
        let o = ols::ols_beta(mm.x.view(), mm.y.view()).unwrap();
        assert!(max_abs(&(&b - &o)) < 1e-4);
    }

    #[test]
    fn kkt_and_objective_monotone() {
        let mm = std_data(40, 10, 10);
        let lm = lambda_max(mm.x.view(), mm.y.view(), 0.3);
        for frac in [0.5, 0.1, 0.01] {
            let lam = lm * frac;
            let b = enet_cd(mm.x.view(), mm.y.view(), lam, 0.3, CdOptions { tol: 1e-10, max_sweeps: 100_000 }, None).unwrap();
            assert!(kkt_violation(mm.x.view(), mm.y.view(), b.view(), lam, 0.3) < 1e-8);
        }
        // objective never increases sweep over sweep
        let lam = lm * 0.05;
        let mut prev = f64::INFINITY;
        let mut beta = Array1::zeros(10);
        for _ in 0..30 {
            let r = enet_cd_raw(mm.x.view(), mm.y.view(), lam, 0.3, CdOptions { tol: 0.0, max_sweeps: 1 }, Some(&beta)).unwrap();
            beta = r.beta;
            let obj = enet_objective(mm.x.view(), mm.y.view(), beta.view(), lam, 0.3);
            assert!(obj <= prev + 1e-14);
            prev = obj;
        }
    }

    #[test]
    fn enet_reduces_to_lasso() {
        let mm = std_data(30, 8, 11);
        let (lam, alpha) = (0.05, 0.4);
        let opts = CdOptions { tol: 1e-12, max_sweeps: 100_000 };
        let b = enet_cd(mm.x.view(), mm.y.view(), lam, alpha, opts, None).unwrap();
        let (xa, ya, lt) = enet_as_lasso(mm.x.view(), mm.y.view(), lam, alpha);
        let bl = enet_cd(xa.view(), ya.view(), lt, 0.0, opts, None).unwrap();
        assert!(max_abs(&(&b - &bl)) < 1e-6);
    }

    #[test]
    fn non_convergence_reported() {
        let mm = std_data(30, 8, 12);
        let err = enet_cd(mm.x.view(), mm.y.view(), 1e-4, 0.0, CdOptions { tol: 1e-15, max_sweeps: 2 }, None);
        assert!(matches!(err, Err(Error::Convergence { .. })));
    }

    #[test]
    fn cv_path_null_model_and_determinism() {
        let mut g = rng::seeded(13);
        let n = 47;
        let mut x = rng::normal_matrix(&mut g, n, 6);
        x.column_mut(0).fill(1.0);
        let y = x.column(1).to_owned() + rng::normal_vec(&mut g, n);
        let mm = ModelMatrix::new(x, y.clone());
        let cv = cv_path(&mm, 0.0, 5, 3, 20).unwrap();
        let again = cv_path(&mm, 0.0, 5, 3, 20).unwrap();
        assert_eq!(cv.cv_errors, again.cv_errors);
        assert_eq!(cv.lambda_min, again.lambda_min);
        let folds = dataset::kfold_indices(n, 5, 3).unwrap();
        let mut sse = 0.0;
        for f in &folds {
            let rest: Vec<f64> = (0..n).filter(|i| !f.contains(i)).map(|i| y[i]).collect();
            let m = rest.iter().sum::<f64>() / rest.len() as f64;
            sse += f.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>();
        }
        assert!((cv.cv_errors[0] - sse / n as f64).abs() < 1e-8);
        assert!(cv.path.coefs.row(0).iter().all(|&v| v == 0.0));
        assert!(cv.cv_errors[cv.index_min] <= cv.cv_errors[0]);
    }
}

//! Ordinary least squares via QR, with Normal-theory inference.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dataset::ModelMatrix;
use crate::dist;
use crate::error::{Error, Result};
use crate::linalg::{self, QrFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    T,
    F,
    ChiSq,
    Normal,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::T => "t",
            TestKind::F => "F",
            TestKind::ChiSq => "chisq",
            TestKind::Normal => "normal",
        }
    }
}

/// A test statistic with its reference distribution. `df2 = None` stands
/// for infinite denominator degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df1: f64,
    pub df2: Option<f64>,
    pub p_value: f64,
    pub kind: TestKind,
}

impl TestResult {
    pub fn t(statistic: f64, df: f64) -> Self {
        Self { statistic, df1: df, df2: None, p_value: dist::t_two_sided(statistic, Some(df)), kind: TestKind::T }
    }

    pub fn normal(statistic: f64) -> Self {
        Self { statistic, df1: 1.0, df2: None, p_value: dist::t_two_sided(statistic, None), kind: TestKind::Normal }
    }

    pub fn f(statistic: f64, df1: f64, df2: f64) -> Self {
        Self { statistic, df1, df2: Some(df2), p_value: dist::f_sf(statistic, df1, Some(df2)), kind: TestKind::F }
    }

    pub fn chisq(statistic: f64, df: f64) -> Self {
        Self { statistic, df1: df, df2: None, p_value: dist::chisq_sf(statistic, df), kind: TestKind::ChiSq }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionKind {
    Mean,
    Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub point: f64,
    pub interval: (f64, f64),
    pub se: f64,
    pub level: f64,
    pub kind: PredictionKind,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub names: Vec<String>,
    pub beta: Array1<f64>,
    pub fitted: Array1<f64>,
    pub residuals: Array1<f64>,
    pub sigma2_hat: f64,
    pub df_residual: usize,
    pub xtx_inv: Array2<f64>,
    pub leverage: Array1<f64>,
    /// `None` when the design has no intercept.
    pub r2: Option<f64>,
    pub adj_r2: Option<f64>,
    pub has_intercept: bool,
    pub qr: QrFactors,
}

impl OlsFit {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.dot(&self.residuals)
    }

    /// `sigma2_hat * (X'X)^{-1}`.
    pub fn classic_cov(&self) -> Array2<f64> {
        &self.xtx_inv * self.sigma2_hat
    }

    pub fn classic_se(&self) -> Array1<f64> {
        self.xtx_inv.diag().mapv(|v| (v * self.sigma2_hat).sqrt())
    }
}

/// Coefficients only, for inner loops that need nothing else.
pub fn ols_beta(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    let qr = linalg::gram_schmidt_qr(x)?;
    linalg::back_solve(qr.r.view(), qr.q.t().dot(&y).view())
}

/// Residuals of the least-squares fit of every column of `b` on `a`.
pub fn residualize(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    if a.ncols() == 0 {
        return Ok(b.to_owned());
    }
    let qr = linalg::gram_schmidt_qr(a)?;
    let proj = qr.q.dot(&qr.q.t().dot(&b));
    Ok(&b - &proj)
}

pub fn fit_ols(mm: &ModelMatrix) -> Result<OlsFit> {
    fit_xy(mm.x.view(), mm.y.view(), &mm.names)
}

pub fn fit_xy(x: ArrayView2<f64>, y: ArrayView1<f64>, names: &[String]) -> Result<OlsFit> {
    let (n, p) = x.dim();
    if n <= p {
        return Err(Error::InsufficientData(format!("n = {n} must exceed p = {p}")));
    }
    let qr = linalg::gram_schmidt_qr(x)?;
    let beta = linalg::back_solve(qr.r.view(), qr.q.t().dot(&y).view())?;
    let fitted = x.dot(&beta);
    let residuals = &y - &fitted;
    let df = n - p;
    let sigma2_hat = residuals.dot(&residuals) / df as f64;
    let xtx_inv = linalg::xtx_inverse(&qr)?;
    let leverage = linalg::hat_diagonals(&qr);
    let has_intercept = x.column(0).iter().all(|&v| v == 1.0);
    let (r2, adj_r2) = if has_intercept {
        let ybar = y.mean().unwrap_or(0.0);
        let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let ess: f64 = fitted.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let r2 = if tss > 0.0 { ess / tss } else { 0.0 };
        (Some(r2), Some(1.0 - (n as f64 - 1.0) / df as f64 * (1.0 - r2)))
    } else {
        (None, None)
    };
    Ok(OlsFit {
        x: x.to_owned(),
        y: y.to_owned(),
        names: names.to_vec(),
        beta,
        fitted,
        residuals,
        sigma2_hat,
        df_residual: df,
        xtx_inv,
        leverage,
        r2,
        adj_r2,
        has_intercept,
        qr,
    })
}

/// `(R^2, adjusted R^2)`; requires an intercept.
pub fn r_squared(fit: &OlsFit) -> Result<(f64, f64)> {
    match (fit.r2, fit.adj_r2) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Spec("R^2 needs an intercept".into())),
    }
}

fn require_sigma(fit: &OlsFit) -> Result<()> {
    let scale = fit.y.dot(&fit.y).max(f64::MIN_POSITIVE);
    if fit.rss() > 1e-26 * scale {
        Ok(())
    } else {
        Err(Error::Degenerate("residual variance is zero".into()))
    }
}

/// t test of `c'beta = 0` with a two-sided interval at `level`.
pub fn t_inference(fit: &OlsFit, c: ArrayView1<f64>, level: f64) -> Result<(TestResult, (f64, f64))> {
    require_sigma(fit)?;
    let est = c.dot(&fit.beta);
    let se = (fit.sigma2_hat * c.dot(&fit.xtx_inv.dot(&c))).sqrt();
    let df = fit.df_residual as f64;
    let q = dist::t_quantile(0.5 + level / 2.0, Some(df));
    Ok((TestResult::t(est / se, df), (est - q * se, est + q * se)))
}

/// t statistics for every coefficient.
pub fn coefficient_tests(fit: &OlsFit, se: &Array1<f64>) -> Vec<TestResult> {
    let df = fit.df_residual as f64;
    fit.beta.iter().zip(se).map(|(b, s)| TestResult::t(b / s, df)).collect()
}

/// Wald F test of `C beta = r` under homoskedastic Normal errors.
pub fn wald_f_test(fit: &OlsFit, c: ArrayView2<f64>, r: ArrayView1<f64>) -> Result<TestResult> {
    let l = c.nrows();
    if l == 0 {
        return Err(Error::Spec("constraint matrix has no rows".into()));
    }
    if c.ncols() != fit.p() || r.len() != l {
        return Err(Error::Spec("constraint dimensions do not match the fit".into()));
    }
    require_sigma(fit)?;
    let q = wald_quadratic(fit.beta.view(), fit.xtx_inv.view(), c, r)?;
    Ok(TestResult::f(q / (l as f64 * fit.sigma2_hat), l as f64, fit.df_residual as f64))
}

/// `(C b - r)' (C V C')^{-1} (C b - r)`.
pub fn wald_quadratic(
    beta: ArrayView1<f64>,
    v: ArrayView2<f64>,
    c: ArrayView2<f64>,
    r: ArrayView1<f64>,
) -> Result<f64> {
    let diff = c.dot(&beta) - r;
    let m = c.dot(&v).dot(&c.t());
    let sol = linalg::solve_spd(m.view(), diff.view())
        .map_err(|_| Error::Spec("constraint rows are linearly dependent".into()))?;
    Ok(diff.dot(&sol))
}

/// F test comparing nested fits (column names of the short model must be a
/// subset of the long model's).
pub fn anova_f(short: &OlsFit, long: &OlsFit) -> Result<TestResult> {
    if short.y != long.y {
        return Err(Error::Spec("models use different responses".into()));
    }
    if !short.names.iter().all(|n| long.names.contains(n)) {
        return Err(Error::Spec("models are not nested".into()));
    }
    let l = long.p() - short.p();
    if l == 0 {
        return Err(Error::Spec("models have the same columns".into()));
    }
    require_sigma(long)?;
    let f = (short.rss() - long.rss()) / l as f64 / long.sigma2_hat;
    Ok(TestResult::f(f, l as f64, long.df_residual as f64))
}

pub fn predict(fit: &OlsFit, x_new: ArrayView1<f64>, kind: PredictionKind, level: f64) -> Result<PredictionResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Spec(format!("level {level} outside (0, 1)")));
    }
    if x_new.len() != fit.p() {
        return Err(Error::Spec("new covariate vector has the wrong length".into()));
    }
    let point = x_new.dot(&fit.beta);
    let quad = x_new.dot(&fit.xtx_inv.dot(&x_new));
    let se = match kind {
        PredictionKind::Mean => (fit.sigma2_hat * quad).sqrt(),
        PredictionKind::Observation => (fit.sigma2_hat * (1.0 + quad)).sqrt(),
    };
    let q = dist::t_quantile(0.5 + level / 2.0, Some(fit.df_residual as f64));
    Ok(PredictionResult { point, interval: (point - q * se, point + q * se), se, level, kind })
}

#[derive(Debug, Clone)]
pub struct FwlResult {
    pub beta2: Array1<f64>,
    pub x2_tilde: Array2<f64>,
    pub y_tilde: Array1<f64>,
    /// OLS of `y_tilde` on `x2_tilde` (no intercept).
    pub partial: OlsFit,
}

/// Partial regression of the columns in `split` after removing the rest.
pub fn fwl_partial(mm: &ModelMatrix, split: &[usize]) -> Result<FwlResult> {
    if split.is_empty() {
        return Err(Error::Spec("empty column split".into()));
    }
    if split.iter().any(|&j| j >= mm.p()) {
        return Err(Error::Spec("column index out of range".into()));
    }
    let rest: Vec<usize> = (0..mm.p()).filter(|j| !split.contains(j)).collect();
    let x1 = mm.x.select(Axis(1), &rest);
    let x2 = mm.x.select(Axis(1), split);
    let x2_tilde = residualize(x1.view(), x2.view())?;
    let y_tilde = residualize(x1.view(), mm.y.view().insert_axis(Axis(1)))?.column(0).to_owned();
    let names: Vec<String> = split.iter().map(|&j| mm.names[j].clone()).collect();
    let partial = fit_xy(x2_tilde.view(), y_tilde.view(), &names)?;
    Ok(FwlResult { beta2: partial.beta.clone(), x2_tilde, y_tilde, partial })
}

#[derive(Debug, Clone)]
pub struct Cochran {
    /// Coefficient of X2 in the short regression `y ~ X2`.
    pub beta_short2: Array1<f64>,
    /// Coefficient of X2 in the long regression `y ~ X1 + X2`.
    pub beta_long2: Array1<f64>,
    /// Coefficients of `X1 ~ X2`, one column per X1 column.
    pub delta_hat: Array2<f64>,
    pub identity_gap: f64,
}

/// Omitted-variable decomposition of the short-regression coefficient.
pub fn cochran_decompose(y: ArrayView1<f64>, x1: ArrayView2<f64>, x2: ArrayView2<f64>) -> Result<Cochran> {
    let (k1, k2) = (x1.ncols(), x2.ncols());
    let long_x = ndarray::concatenate(Axis(1), &[x1, x2]).map_err(|e| Error::Spec(e.to_string()))?;
    let long = ols_beta(long_x.view(), y)?;
    let short = ols_beta(x2, y)?;
    let qr = linalg::gram_schmidt_qr(x2)?;
    let qtx1 = qr.q.t().dot(&x1);
    let mut delta = Array2::<f64>::zeros((k2, k1));
    for j in 0..k1 {
        delta.column_mut(j).assign(&linalg::back_solve(qr.r.view(), qtx1.column(j))?);
    }
    let beta1 = long.slice(s![..k1]).to_owned();
    let beta2 = long.slice(s![k1..]).to_owned();
    let implied = &beta2 + &delta.dot(&beta1);
    let gap = (&short - &implied).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Cochran { beta_short2: short, beta_long2: beta2, delta_hat: delta, identity_gap: gap })
}

#[derive(Debug, Clone)]
pub struct RestrictedFit {
    pub beta: Array1<f64>,
    pub residuals: Array1<f64>,
    pub rss: f64,
    /// `RSS_r / (n - p + l)`.
    pub sigma2_hat: f64,
    /// Unrestricted `RSS / (n - p)`, for comparison.
    pub sigma2_unrestricted: f64,
    pub df_residual: usize,
    /// `sigma2_hat * (V - V C'(C V C')^{-1} C V)`.
    pub cov: Array2<f64>,
}

/// OLS subject to `C beta = r`.
pub fn restricted_fit(mm: &ModelMatrix, c: ArrayView2<f64>, r: ArrayView1<f64>) -> Result<RestrictedFit> {
    let l = c.nrows();
    if l == 0 || c.ncols() != mm.p() || r.len() != l {
        return Err(Error::Spec("constraint dimensions do not match the design".into()));
    }
    let fit = fit_ols(mm)?;
    let v = &fit.xtx_inv;
    let cv = c.dot(v);
    let m = cv.dot(&c.t());
    let minv = linalg::spd_inverse(m.view())
        .map_err(|_| Error::Spec("constraint rows are linearly dependent".into()))?;
    let diff = c.dot(&fit.beta) - r;
    let beta = &fit.beta - &cv.t().dot(&minv.dot(&diff));
    let residuals = &mm.y - &mm.x.dot(&beta);
    let rss = residuals.dot(&residuals);
    let df = fit.df_residual + l;
    let sigma2 = rss / df as f64;
    let cov = (v - &cv.t().dot(&minv).dot(&cv)) * sigma2;
    Ok(RestrictedFit {
        beta,
        residuals,
        rss,
        sigma2_hat: sigma2,
        sigma2_unrestricted: fit.sigma2_hat,
        df_residual: df,
        cov: linalg::symmetrize(&cov),
    })
}

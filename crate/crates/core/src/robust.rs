//! Sandwich covariances for OLS, weighted least squares and feasible GLS.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dataset::ModelMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ols::{self, OlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    Classic,
    Hc0,
    Hc1,
    Hc2,
    Hc3,
    Hc4,
    WlsSandwich,
    Cluster,
    Sandwich,
    Model,
    Jackknife,
    Powell,
    Bootstrap,
}

impl CovKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovKind::Classic => "classic",
            CovKind::Hc0 => "hc0",
            CovKind::Hc1 => "hc1",
            CovKind::Hc2 => "hc2",
            CovKind::Hc3 => "hc3",
            CovKind::Hc4 => "hc4",
            CovKind::WlsSandwich => "wls_sandwich",
            CovKind::Cluster => "cluster",
            CovKind::Sandwich => "sandwich",
            CovKind::Model => "model",
            CovKind::Jackknife => "jackknife",
            CovKind::Powell => "powell",
            CovKind::Bootstrap => "bootstrap",
        }
    }
}

/// A labeled covariance matrix and its standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub matrix: Array2<f64>,
    pub kind: CovKind,
    pub se: Array1<f64>,
}

impl CovEstimate {
    pub fn new(matrix: Array2<f64>, kind: CovKind) -> Self {
        let matrix = linalg::symmetrize(&matrix);
        let se = matrix.diag().mapv(|v| v.max(0.0).sqrt());
        Self { matrix, kind, se }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcKind {
    Hc0,
    Hc1,
    Hc2,
    Hc3,
    Hc4,
}

impl HcKind {
    pub const ALL: [HcKind; 5] = [HcKind::Hc0, HcKind::Hc1, HcKind::Hc2, HcKind::Hc3, HcKind::Hc4];

    fn cov_kind(self) -> CovKind {
        match self {
            HcKind::Hc0 => CovKind::Hc0,
            HcKind::Hc1 => CovKind::Hc1,
            HcKind::Hc2 => CovKind::Hc2,
            HcKind::Hc3 => CovKind::Hc3,
            HcKind::Hc4 => CovKind::Hc4,
        }
    }
}

pub fn classic_cov(fit: &OlsFit) -> CovEstimate {
    CovEstimate::new(fit.classic_cov(), CovKind::Classic)
}

/// Squared adjusted residuals for each HC variant.
pub fn hc_weights(
    residuals: ArrayView1<f64>,
    leverage: ArrayView1<f64>,
    p: usize,
    kind: HcKind,
) -> Result<Array1<f64>> {
    let n = residuals.len();
    let nf = n as f64;
    if matches!(kind, HcKind::Hc2 | HcKind::Hc3 | HcKind::Hc4) {
        if let Some(i) = leverage.iter().position(|&h| h >= 1.0 - 1e-10) {
            return Err(Error::LeverageOne(i));
        }
    }
    let w = residuals
        .iter()
        .zip(leverage)
        .map(|(&e, &h)| {
            let e2 = e * e;
            match kind {
                HcKind::Hc0 => e2,
                HcKind::Hc1 => e2 * nf / (nf - p as f64),
                HcKind::Hc2 => e2 / (1.0 - h),
                HcKind::Hc3 => e2 / ((1.0 - h) * (1.0 - h)),
                HcKind::Hc4 => {
                    let delta = (nf * h / p as f64).min(4.0);
                    e2 / (1.0 - h).powf(delta)
                }
            }
        })
        .collect();
    Ok(w)
}

/// Eicker-Huber-White covariance with the chosen residual adjustment.
pub fn hc_covariance(fit: &OlsFit, kind: HcKind) -> Result<CovEstimate> {
    let w = hc_weights(fit.residuals.view(), fit.leverage.view(), fit.p(), kind)?;
    let meat = linalg::weighted_gram(fit.x.view(), w.view());
    Ok(CovEstimate::new(linalg::sandwich(&fit.xtx_inv, &meat), kind.cov_kind()))
}

/// Cluster-summed score meat `sum_g s_g s_g'` with `s_g = sum_{i in g} x_i u_i`.
pub fn cluster_meat(x: ArrayView2<f64>, u: ArrayView1<f64>, clusters: &[String]) -> Array2<f64> {
    let p = x.ncols();
    let mut order: Vec<&str> = Vec::new();
    let mut sums: HashMap<&str, Array1<f64>> = HashMap::new();
    for (i, label) in clusters.iter().enumerate() {
        let s = sums.entry(label.as_str()).or_insert_with(|| {
            order.push(label.as_str());
            Array1::zeros(p)
        });
        s.scaled_add(u[i], &x.row(i));
    }
    let mut meat = Array2::<f64>::zeros((p, p));
    for label in order {
        let s = &sums[label];
        meat += &(s.view().insert_axis(Axis(1)).dot(&s.view().insert_axis(Axis(0))));
    }
    meat
}

/// Cluster-robust OLS covariance without small-sample correction.
pub fn ols_cluster_cov(fit: &OlsFit, clusters: &[String]) -> Result<CovEstimate> {
    if clusters.len() != fit.n() {
        return Err(Error::Spec("one cluster label per row required".into()));
    }
    let meat = cluster_meat(fit.x.view(), fit.residuals.view(), clusters);
    Ok(CovEstimate::new(linalg::sandwich(&fit.xtx_inv, &meat), CovKind::Cluster))
}

#[derive(Debug, Clone)]
pub struct WlsFit {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub names: Vec<String>,
    pub beta_w: Array1<f64>,
    /// `y - X beta_w` on the original scale.
    pub residuals_w: Array1<f64>,
    pub weights: Array1<f64>,
    /// Leverages of the square-root-weighted design.
    pub hat_w_diag: Array1<f64>,
    /// `(X'WX)^{-1}`.
    pub xtwx_inv: Array2<f64>,
    /// Weighted RSS over n - p.
    pub sigma2_hat: f64,
}

pub fn wls_fit(mm: &ModelMatrix) -> Result<WlsFit> {
    let w = mm
        .weights
        .as_ref()
        .ok_or_else(|| Error::Spec("weighted fit needs a weights column".into()))?;
    wls_fit_weights(mm.x.view(), mm.y.view(), w.view(), &mm.names)
}

/// OLS of `sqrt(w) y` on `sqrt(w) X`.
pub fn wls_fit_weights(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    w: ArrayView1<f64>,
    names: &[String],
) -> Result<WlsFit> {
    if let Some(i) = w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Spec(format!("weight {i} is not positive")));
    }
    let sw = w.mapv(f64::sqrt);
    let xs = &x * &sw.view().insert_axis(Axis(1));
    let ys = &y * &sw;
    let fit = ols::fit_xy(xs.view(), ys.view(), names)?;
    let residuals_w = &y - &x.dot(&fit.beta);
    Ok(WlsFit {
        x: x.to_owned(),
        y: y.to_owned(),
        names: names.to_vec(),
        beta_w: fit.beta,
        residuals_w,
        weights: w.to_owned(),
        hat_w_diag: fit.leverage,
        xtwx_inv: fit.xtx_inv,
        sigma2_hat: fit.sigma2_hat,
    })
}

/// `(X'WX)^{-1} (sum w^2 e^2 x x') (X'WX)^{-1}`.
pub fn wls_sandwich(fit: &WlsFit) -> CovEstimate {
    let m = (&fit.weights * &fit.residuals_w).mapv(|v| v * v);
    let meat = linalg::weighted_gram(fit.x.view(), m.view());
    CovEstimate::new(linalg::sandwich(&fit.xtwx_inv, &meat), CovKind::WlsSandwich)
}

/// Feasible GLS: log squared OLS residuals regressed on X give the weights.
/// Returns the weighted fit and the variance-model coefficients.
pub fn fgls_fit(mm: &ModelMatrix) -> Result<(WlsFit, Array1<f64>)> {
    let fit = ols::fit_ols(mm)?;
    let floor = 1e-12 * fit.sigma2_hat.max(f64::MIN_POSITIVE);
    let log_e2 = fit.residuals.mapv(|e| (e * e).max(floor).ln());
    let gamma = ols::ols_beta(mm.x.view(), log_e2.view())?;
    let w = mm.x.dot(&gamma).mapv(|v| (-v).exp());
    let wfit = wls_fit_weights(mm.x.view(), mm.y.view(), w.view(), &mm.names)?;
    Ok((wfit, gamma))
}

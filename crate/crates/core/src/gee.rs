//! Generalized estimating equations with independence or exchangeable
//! working correlation, fitted by Gauss-Newton, and the Liang-Zeger
//! covariance.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::dataset::ModelMatrix;
use crate::error::{Error, Result};
use crate::glm::{self, link_eval, Family};
use crate::linalg;
use crate::robust::{CovEstimate, CovKind};

/// Rows grouped by cluster, clusters in order of first appearance.
#[derive(Debug, Clone)]
pub struct PanelData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub names: Vec<String>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<usize>>,
}

impl PanelData {
    pub fn new(x: Array2<f64>, y: Array1<f64>, names: Vec<String>, clusters: &[String]) -> Result<Self> {
        if clusters.len() != x.nrows() || y.len() != x.nrows() {
            return Err(Error::Spec("one cluster label per row required".into()));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut rows: Vec<Vec<usize>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for (i, c) in clusters.iter().enumerate() {
            let k = *index.entry(c.clone()).or_insert_with(|| {
                labels.push(c.clone());
                rows.push(Vec::new());
                labels.len() - 1
            });
            rows[k].push(i);
        }
        Ok(Self { x, y, names, labels, rows })
    }

    pub fn from_model_matrix(mm: &ModelMatrix) -> Result<Self> {
        let cl = mm.cluster.as_ref().ok_or_else(|| Error::Spec("a cluster column is required".into()))?;
        Self::new(mm.x.clone(), mm.y.clone(), mm.names.clone(), cl)
    }

    pub fn n_clusters(&self) -> usize {
        self.rows.len()
    }

    pub fn max_size(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Row labels expanded back to one per observation.
    pub fn row_labels(&self) -> Vec<String> {
        let mut out = vec![String::new(); self.y.len()];
        for (k, rows) in self.rows.iter().enumerate() {
            for &i in rows {
                out[i] = self.labels[k].clone();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorStruct {
    Independence,
    Exchangeable,
}

impl CorStruct {
    pub fn as_str(self) -> &'static str {
        match self {
            CorStruct::Independence => "independence",
            CorStruct::Exchangeable => "exchangeable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeeFit {
    pub family: Family,
    pub corstr: CorStruct,
    pub beta: Array1<f64>,
    pub rho: Option<f64>,
    /// Pearson scale; 1 except for the Gaussian family.
    pub scale: f64,
    pub naive_cov: Array2<f64>,
    pub robust_cov: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn check_family(family: Family) -> Result<()> {
    match family {
        Family::Gaussian | Family::Poisson | Family::Binary(glm::Link::Logit) => Ok(()),
        _ => Err(Error::Spec("GEE supports the linear, logistic and Poisson families".into())),
    }
}

fn pearson(family: Family, y: ArrayView1<f64>, eta: ArrayView1<f64>) -> Array1<f64> {
    let link = family.link();
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            let mu = link_eval(link, e).0;
            (yi - mu) / family.variance(mu).sqrt()
        })
        .collect()
}

/// Moment estimator of the exchangeable correlation from Pearson residuals,
/// unclamped. Normalized by the pooled Pearson scale.
pub fn estimate_exchangeable_rho(panel: &PanelData, family: Family, beta: ArrayView1<f64>) -> Result<f64> {
    let eta = panel.x.dot(&beta);
    let e = pearson(family, panel.y.view(), eta.view());
    let mut cross = 0.0;
    let mut pairs = 0.0;
    for rows in &panel.rows {
        let m = rows.len();
        for a in 0..m {
            for b in a + 1..m {
                cross += e[rows[a]] * e[rows[b]];
            }
        }
        pairs += (m * m.saturating_sub(1)) as f64 / 2.0;
    }
    if pairs == 0.0 {
        return Err(Error::Spec("exchangeable correlation needs a cluster with two or more rows".into()));
    }
    let phi = e.dot(&e) / e.len() as f64;
    Ok(cross / pairs / phi)
}

/// Admissible range of an exchangeable correlation for the largest cluster.
fn rho_bounds(max_size: usize) -> (f64, f64) {
    let lo = if max_size > 1 { -1.0 / (max_size as f64 - 1.0) } else { -1.0 };
    ((1.0 - 1e-6) * lo, 1.0 - 1e-6)
}

/// Inverse of the exchangeable matrix `(1 - r) I + r 11'` of size m.
fn exch_inverse(m: usize, r: f64) -> Array2<f64> {
    let a = 1.0 / (1.0 - r);
    let b = r / ((1.0 - r) * (1.0 + (m as f64 - 1.0) * r));
    Array2::from_shape_fn((m, m), |(i, j)| if i == j { a - b } else { -b })
}

struct Pieces {
    bread: Array2<f64>,
    score: Array1<f64>,
    meat: Array2<f64>,
}

/// Accumulates `sum D' V^{-1} D`, `sum D' V^{-1} e` and the score outer
/// products in cluster order.
fn accumulate(panel: &PanelData, family: Family, beta: ArrayView1<f64>, rho: f64) -> Pieces {
    let p = panel.x.ncols();
    let link = family.link();
    let mut bread = Array2::zeros((p, p));
    let mut score = Array1::zeros(p);
    let mut meat = Array2::zeros((p, p));
    for rows in &panel.rows {
        let xi = panel.x.select(Axis(0), rows);
        let m = rows.len();
        let mut d = xi.clone();
        let mut sd = Array1::zeros(m);
        let mut resid = Array1::zeros(m);
        for (k, &i) in rows.iter().enumerate() {
            let (mu, g) = link_eval(link, xi.row(k).dot(&beta));
            d.row_mut(k).mapv_inplace(|v| v * g);
            sd[k] = family.variance(mu).sqrt();
            resid[k] = panel.y[i] - mu;
        }
        // V = A^{1/2} R A^{1/2}
        let rinv = if rho == 0.0 { Array2::eye(m) } else { exch_inverse(m, rho) };
        let vinv = Array2::from_shape_fn((m, m), |(a, b)| rinv[[a, b]] / (sd[a] * sd[b]));
        let dv = d.t().dot(&vinv);
        bread += &dv.dot(&d);
        let u = dv.dot(&resid);
        score += &u;
        meat += &u.view().insert_axis(Axis(1)).dot(&u.view().insert_axis(Axis(0)));
    }
    Pieces { bread, score, meat }
}

pub fn gee_fit(panel: &PanelData, family: Family, corstr: CorStruct, tol: f64, max_iter: usize) -> Result<GeeFit> {
    check_family(family)?;
    family.check_response(panel.y.view())?;
    let pooled = glm::glm_fit_xy(family, panel.x.view(), panel.y.view(), &panel.names)?;
    let mut beta = pooled.beta.clone();
    let mut warnings = Vec::new();
    let exch = corstr == CorStruct::Exchangeable && panel.max_size() > 1;
    if corstr == CorStruct::Exchangeable && !exch {
        warnings.push("all clusters have one row; exchangeable reduces to independence".to_string());
    }
    let (lo, hi) = rho_bounds(panel.max_size());
    let mut rho = 0.0;
    let mut clamped = false;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        if exch {
            let raw = estimate_exchangeable_rho(panel, family, beta.view())?;
            clamped = !(lo..=hi).contains(&raw);
            rho = raw.clamp(lo, hi);
        }
        let pc = accumulate(panel, family, beta.view(), rho);
        let step = linalg::solve_spd(pc.bread.view(), pc.score.view())?;
        beta += &step;
        if step.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iterations, msg: "GEE Gauss-Newton".into() });
    }
    if clamped {
        warnings.push(format!("exchangeable correlation clamped to {rho:.6}"));
    }
    let eta = panel.x.dot(&beta);
    let scale = match family {
        Family::Gaussian => {
            let e = pearson(family, panel.y.view(), eta.view());
            e.dot(&e) / (e.len().saturating_sub(beta.len())).max(1) as f64
        }
        _ => 1.0,
    };
    let pc = accumulate(panel, family, beta.view(), rho);
    let binv = linalg::spd_inverse(pc.bread.view())?;
    let robust_cov = linalg::symmetrize(&linalg::sandwich(&binv, &pc.meat));
    Ok(GeeFit {
        family,
        corstr,
        beta,
        rho: exch.then_some(rho),
        scale,
        naive_cov: binv * scale,
        robust_cov,
        iterations,
        converged,
        warnings,
    })
}

/// Liang-Zeger covariance of a GEE fit on the given panel.
pub fn lz_cov(fit: &GeeFit, panel: &PanelData) -> Result<CovEstimate> {
    let pc = accumulate(panel, fit.family, fit.beta.view(), fit.rho.unwrap_or(0.0));
    let binv = linalg::spd_inverse(pc.bread.view())?;
    Ok(CovEstimate::new(linalg::sandwich(&binv, &pc.meat), CovKind::Cluster))
}

pub fn naive_cov(fit: &GeeFit) -> CovEstimate {
    CovEstimate::new(fit.naive_cov.clone(), CovKind::Model)
}

/// Closed-form cluster-robust variance of the slope when the only regressor
/// besides the intercept is a cluster-constant binary indicator.
pub fn cluster_binary_variance(x: ArrayView1<f64>, resid: ArrayView1<f64>, clusters: &[String]) -> f64 {
    let panel_rows = {
        let mut order: Vec<&String> = Vec::new();
        let mut map: std::collections::HashMap<&String, Vec<usize>> = Default::default();
        for (i, c) in clusters.iter().enumerate() {
            map.entry(c).or_insert_with(|| {
                order.push(c);
                Vec::new()
            });
            map.get_mut(c).unwrap().push(i);
        }
        order.into_iter().map(|c| map.remove(c).unwrap()).collect::<Vec<_>>()
    };
    let n1 = x.iter().filter(|&&v| v == 1.0).count() as f64;
    let n0 = x.len() as f64 - n1;
    let (mut a, mut b) = (0.0, 0.0);
    for rows in panel_rows {
        let r: f64 = rows.iter().map(|&i| resid[i]).sum();
        if x[rows[0]] == 1.0 {
            a += r * r;
        } else {
            b += r * r;
        }
    }
    a / (n1 * n1) + b / (n0 * n0)
}

//! Generalized linear models fitted by Fisher scoring with step-halving:
//! binary outcomes under four links, Poisson, negative binomial, and the
//! Gaussian identity model.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use statrs::function::gamma::ln_gamma;

use crate::dataset::ModelMatrix;
use crate::dist;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ols::{self, TestResult};
use crate::robust::{CovEstimate, CovKind};

pub const MAX_ITER: usize = 50;
pub const SCORE_TOL: f64 = 1e-8;
pub const DEV_TOL: f64 = 1e-10;
pub const STEP_TOL: f64 = 1e-6;
pub const THETA_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logit,
    Probit,
    Cauchit,
    Cloglog,
    Log,
    Identity,
}

/// Mean function and its derivative at `z`.
pub fn link_eval(link: Link, z: f64) -> (f64, f64) {
    match link {
        Link::Logit => {
            let m = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
            (m, m * (1.0 - m))
        }
        Link::Probit => (dist::normal_cdf(z), dist::normal_pdf(z)),
        Link::Cauchit => (z.atan() / PI + 0.5, 1.0 / (PI * (1.0 + z * z))),
        Link::Cloglog => {
            let ez = z.exp();
            (-(-ez).exp_m1(), (z - ez).exp())
        }
        Link::Log => {
            let m = z.exp();
            (m, m)
        }
        Link::Identity => (z, 1.0),
    }
}

/// `1 - g(z)` without cancellation.
fn complement(link: Link, z: f64) -> f64 {
    match link {
        Link::Logit => link_eval(Link::Logit, -z).0,
        Link::Probit => dist::normal_cdf(-z),
        Link::Cauchit => 0.5 - z.atan() / PI,
        Link::Cloglog => (-z.exp()).exp(),
        Link::Log | Link::Identity => 1.0 - link_eval(link, z).0,
    }
}

/// Inverse of the mean function, used for starting values.
fn link_inverse(link: Link, mu: f64) -> f64 {
    match link {
        Link::Logit => (mu / (1.0 - mu)).ln(),
        Link::Probit => dist::normal_quantile(mu),
        Link::Cauchit => (PI * (mu - 0.5)).tan(),
        Link::Cloglog => (-(1.0 - mu).ln()).ln(),
        Link::Log => mu.ln(),
        Link::Identity => mu,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Binary(Link),
    Poisson,
    /// Negative binomial with a fixed dispersion `theta`.
    NegBin(f64),
    Gaussian,
}

impl Family {
    pub fn link(self) -> Link {
        match self {
            Family::Binary(l) => l,
            Family::Poisson | Family::NegBin(_) => Link::Log,
            Family::Gaussian => Link::Identity,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Binary(Link::Logit) => "logit",
            Family::Binary(Link::Probit) => "probit",
            Family::Binary(Link::Cauchit) => "cauchit",
            Family::Binary(Link::Cloglog) => "cloglog",
            Family::Binary(_) => "binary",
            Family::Poisson => "poisson",
            Family::NegBin(_) => "negbin",
            Family::Gaussian => "gaussian",
        }
    }

    pub fn is_canonical(self) -> bool {
        matches!(self, Family::Binary(Link::Logit) | Family::Poisson | Family::Gaussian)
    }

    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::Binary(_) => mu * (1.0 - mu),
            Family::Poisson => mu,
            Family::NegBin(theta) => mu + mu * mu / theta,
            Family::Gaussian => 1.0,
        }
    }

    /// Extra parameters counted in the AIC.
    fn extra_params(self) -> usize {
        match self {
            Family::NegBin(_) | Family::Gaussian => 1,
            _ => 0,
        }
    }

    pub(crate) fn check_response(self, y: ArrayView1<f64>) -> Result<()> {
        let ok = match self {
            Family::Binary(_) => y.iter().all(|&v| v == 0.0 || v == 1.0),
            Family::Poisson | Family::NegBin(_) => y.iter().all(|&v| v >= 0.0 && v.fract() == 0.0),
            Family::Gaussian => y.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Spec(format!("response not valid for the {} family", self.name())))
        }
    }

    fn start_mean(self, y: f64) -> f64 {
        match self {
            Family::Binary(_) => (y + 0.5) / 2.0,
            Family::Poisson | Family::NegBin(_) => y + 0.1,
            Family::Gaussian => y,
        }
    }
}

/// Log-likelihood of one observation given its linear predictor.
fn loglik_i(family: Family, y: f64, eta: f64) -> f64 {
    match family {
        Family::Binary(link) => {
            let (mu, _) = link_eval(link, eta);
            if y == 1.0 {
                mu.ln()
            } else {
                complement(link, eta).ln()
            }
        }
        Family::Poisson => y * eta - eta.exp() - ln_gamma(y + 1.0),
        Family::NegBin(theta) => {
            let mu = eta.exp();
            ln_gamma(y + theta) - ln_gamma(theta) - ln_gamma(y + 1.0)
                + theta * (theta / (theta + mu)).ln()
                + if y > 0.0 { y * (mu / (theta + mu)).ln() } else { 0.0 }
        }
        // profiled over the variance in `loglik`
        Family::Gaussian => 0.0,
    }
}

fn loglik(family: Family, y: ArrayView1<f64>, eta: ArrayView1<f64>) -> f64 {
    match family {
        Family::Gaussian => {
            let n = y.len() as f64;
            let rss: f64 = y.iter().zip(eta).map(|(a, b)| (a - b) * (a - b)).sum();
            -0.5 * n * ((2.0 * PI * rss / n).ln() + 1.0)
        }
        _ => y.iter().zip(eta).map(|(&yi, &e)| loglik_i(family, yi, e)).sum(),
    }
}

#[derive(Debug, Clone)]
pub struct GlmFit {
    pub family: Family,
    pub names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub beta: Array1<f64>,
    /// Estimated negative-binomial dispersion.
    pub theta: Option<f64>,
    pub theta_se: Option<f64>,
    pub linear_predictor: Array1<f64>,
    pub fitted_mean: Array1<f64>,
    pub working_weights: Array1<f64>,
    /// `X'WX` with Fisher weights `g'^2 / V`.
    pub fisher_info: Array2<f64>,
    pub loglik: f64,
    /// `-2 loglik`.
    pub deviance: f64,
    /// Deviance of the intercept-only model when the design has an intercept.
    pub null_deviance: Option<f64>,
    pub aic: f64,
    /// Pearson dispersion; fixed at 1 except for the Gaussian family.
    pub dispersion: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl GlmFit {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn has_intercept(&self) -> bool {
        self.x.ncols() > 0 && self.x.column(0).iter().all(|&v| v == 1.0)
    }

    /// Per-observation score contributions `(y - mu) g' / V`.
    pub fn score_residuals(&self) -> Array1<f64> {
        score_parts(self.family, self.y.view(), self.linear_predictor.view()).0
    }

    /// `X' s` at the fitted coefficients.
    pub fn score(&self) -> Array1<f64> {
        self.x.t().dot(&self.score_residuals())
    }
}

/// Score residuals and Fisher weights at `eta`.
fn score_parts(family: Family, y: ArrayView1<f64>, eta: ArrayView1<f64>) -> (Array1<f64>, Array1<f64>) {
    let link = family.link();
    let n = y.len();
    let mut s = Array1::zeros(n);
    let mut w = Array1::zeros(n);
    for i in 0..n {
        let (mu, d) = link_eval(link, eta[i]);
        match family {
            Family::Binary(_) => {
                let v = mu * complement(link, eta[i]);
                if v > 0.0 {
                    s[i] = (y[i] - mu) * d / v;
                    w[i] = d * d / v;
                }
            }
            _ => {
                let v = family.variance(mu);
                s[i] = (y[i] - mu) * d / v;
                w[i] = d * d / v;
            }
        }
    }
    (s, w)
}

struct Iterate {
    beta: Array1<f64>,
    eta: Array1<f64>,
    ll: f64,
    iterations: usize,
    converged: bool,
}

fn fisher_scoring(family: Family, x: ArrayView2<f64>, y: ArrayView1<f64>, start: Option<Array1<f64>>) -> Result<Iterate> {
    let link = family.link();
    let mut beta = match start {
        Some(b) => b,
        None => {
            let z = y.mapv(|v| link_inverse(link, family.start_mean(v)));
            ols::ols_beta(x, z.view())?
        }
    };
    let mut eta = x.dot(&beta);
    let mut ll = loglik(family, y, eta.view());
    if !ll.is_finite() {
        beta.fill(0.0);
        eta = x.dot(&beta);
        ll = loglik(family, y, eta.view());
    }
    for it in 1..=MAX_ITER {
        let (s, w) = score_parts(family, y, eta.view());
        let score = x.t().dot(&s);
        if let Family::Binary(_) = family {
            let resid = y.iter().zip(&eta).map(|(&yi, &e)| (yi - link_eval(link, e).0).abs()).fold(0.0, f64::max);
            if resid < 1e-8 && beta.iter().any(|b| b.abs() > 10.0) {
                return Err(Error::Separation("fitted probabilities are numerically 0 or 1".into()));
            }
        }
        let info = linalg::weighted_gram(x, w.view());
        let step = linalg::solve_spd(info.view(), score.view()).map_err(|_| {
            if matches!(family, Family::Binary(_) | Family::Poisson) && w.iter().any(|&v| v < 1e-12) {
                Error::Separation("working weights underflow".into())
            } else {
                Error::Singular("Fisher information is singular".into())
            }
        })?;
        // under separation the score vanishes like the weights while the
        // step stays of order one
        let max_abs = |a: &Array1<f64>| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_abs(&score) < SCORE_TOL && max_abs(&step) < STEP_TOL {
            return Ok(Iterate { beta, eta, ll, iterations: it - 1, converged: true });
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let cand = &beta + &(&step * t);
            let cand_eta = x.dot(&cand);
            let cand_ll = loglik(family, y, cand_eta.view());
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs() {
                accepted = Some((cand, cand_eta, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((nb, ne, nl)) = accepted else {
            // no ascent direction left: the current point is as good as it gets
            return Ok(Iterate { beta, eta, ll, iterations: it, converged: true });
        };
        if nb.iter().any(|b| b.abs() > 1e3) {
            return Err(Error::Separation("coefficients diverge".into()));
        }
        let rel = ((nl - ll) * 2.0).abs() / (2.0 * nl.abs() + 0.1);
        let moved = (&nb - &beta).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        beta = nb;
        eta = ne;
        ll = nl;
        // scoring converges linearly off the canonical link, so a flat
        // deviance alone is not enough
        if rel < DEV_TOL && moved < 1e-8 {
            return Ok(Iterate { beta, eta, ll, iterations: it, converged: true });
        }
    }
    if let Family::Binary(_) = family {
        let (_, w) = score_parts(family, y, eta.view());
        if w.iter().any(|&v| v < 1e-10) {
            return Err(Error::Separation("quasi-complete separation".into()));
        }
    }
    Err(Error::Convergence { iterations: MAX_ITER, msg: "Fisher scoring".into() })
}

fn assemble(family: Family, x: ArrayView2<f64>, y: ArrayView1<f64>, names: &[String], it: Iterate) -> Result<GlmFit> {
    let link = family.link();
    let fitted_mean = it.eta.mapv(|e| link_eval(link, e).0);
    let (_, w) = score_parts(family, y, it.eta.view());
    let fisher_info = linalg::weighted_gram(x, w.view());
    let (n, p) = x.dim();
    let dispersion = match family {
        Family::Gaussian => {
            let r = &y - &fitted_mean;
            r.dot(&r) / (n.saturating_sub(p)).max(1) as f64
        }
        _ => 1.0,
    };
    let deviance = -2.0 * it.ll;
    let has_intercept = p > 0 && x.column(0).iter().all(|&v| v == 1.0);
    let null_deviance = if has_intercept {
        let ones = Array2::ones((n, 1));
        fisher_scoring(family, ones.view(), y, None).ok().map(|f| -2.0 * f.ll)
    } else {
        None
    };
    Ok(GlmFit {
        family,
        names: names.to_vec(),
        x: x.to_owned(),
        y: y.to_owned(),
        beta: it.beta,
        theta: None,
        theta_se: None,
        linear_predictor: it.eta,
        fitted_mean,
        working_weights: w,
        fisher_info,
        loglik: it.ll,
        deviance,
        null_deviance,
        aic: deviance + 2.0 * (p + family.extra_params()) as f64,
        dispersion,
        iterations: it.iterations,
        converged: it.converged,
        warnings: Vec::new(),
    })
}

pub fn glm_fit(family: Family, mm: &ModelMatrix) -> Result<GlmFit> {
    glm_fit_xy(family, mm.x.view(), mm.y.view(), &mm.names)
}

pub fn glm_fit_xy(family: Family, x: ArrayView2<f64>, y: ArrayView1<f64>, names: &[String]) -> Result<GlmFit> {
    family.check_response(y)?;
    if let Family::NegBin(t) = family {
        if !(t > 0.0) {
            return Err(Error::Spec("negative binomial theta must be positive".into()));
        }
    }
    if x.nrows() < x.ncols() {
        return Err(Error::InsufficientData("fewer rows than coefficients".into()));
    }
    linalg::gram_schmidt_qr(x)?;
    let it = fisher_scoring(family, x, y, None)?;
    assemble(family, x, y, names, it)
}

/// Profile log-likelihood of theta and its first two derivatives in theta.
fn theta_profile(y: ArrayView1<f64>, mu: ArrayView1<f64>, theta: f64) -> (f64, f64, f64) {
    let (mut l, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (&yi, &m) in y.iter().zip(mu) {
        // psi(y + t) - psi(t) and its derivative as finite sums over 0..y
        let (mut dg, mut tg) = (0.0, 0.0);
        for k in 0..yi as usize {
            let a = theta + k as f64;
            dg += 1.0 / a;
            tg -= 1.0 / (a * a);
        }
        let tm = theta + m;
        l += ln_gamma(yi + theta) - ln_gamma(theta) + theta * (theta / tm).ln()
            + if yi > 0.0 { yi * (m / tm).ln() } else { 0.0 };
        d1 += dg + (theta / tm).ln() + 1.0 - (yi + theta) / tm;
        d2 += tg + 1.0 / theta - 2.0 / tm + (yi + theta) / (tm * tm);
    }
    (l, d1, d2)
}

/// Newton on `log theta` for fixed means.
fn update_theta(y: ArrayView1<f64>, mu: ArrayView1<f64>, theta0: f64) -> f64 {
    let mut t = theta0.ln();
    for _ in 0..50 {
        let th = t.exp();
        let (l, d1, d2) = theta_profile(y, mu, th);
        let g = th * d1;
        let h = th * th * d2 + th * d1;
        let mut step = if h < 0.0 { -g / h } else { g.signum() };
        step = step.clamp(-2.0, 2.0);
        let mut accepted = false;
        for _ in 0..30 {
            let cand = t + step;
            if cand.exp() > 10.0 * THETA_CAP {
                return cand.exp();
            }
            if theta_profile(y, mu, cand.exp()).0 >= l - 1e-12 * l.abs() {
                t = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-10 {
            break;
        }
    }
    t.exp()
}

/// Negative binomial regression with dispersion estimated by alternating
/// Fisher scoring for beta and profile Newton for theta.
pub fn negbin_fit(mm: &ModelMatrix) -> Result<GlmFit> {
    negbin_fit_xy(mm.x.view(), mm.y.view(), &mm.names)
}

pub fn negbin_fit_xy(x: ArrayView2<f64>, y: ArrayView1<f64>, names: &[String]) -> Result<GlmFit> {
    let pois = glm_fit_xy(Family::Poisson, x, y, names)?;
    let ybar = y.mean().unwrap_or(0.0);
    let var = y.var(1.0);
    let mut theta = if var > ybar { ybar * ybar / (var - ybar) } else { 10.0 };
    let mut beta = pois.beta.clone();
    let mut mu = pois.fitted_mean.clone();
    for alt in 1..=100 {
        let new_theta = update_theta(y, mu.view(), theta);
        if new_theta > THETA_CAP {
            let mut fit = pois;
            fit.theta = Some(THETA_CAP);
            fit.warnings.push(format!("theta exceeded {THETA_CAP:e}; Poisson fit returned"));
            return Ok(fit);
        }
        let it = fisher_scoring(Family::NegBin(new_theta), x, y, Some(beta.clone()))?;
        let db = (&it.beta - &beta).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dt = (new_theta.ln() - theta.ln()).abs();
        beta = it.beta.clone();
        mu = it.eta.mapv(f64::exp);
        theta = new_theta;
        if db < 1e-8 && dt < 1e-8 {
            let mut fit = assemble(Family::NegBin(theta), x, y, names, it)?;
            fit.iterations = alt;
            let (_, _, d2) = theta_profile(y, mu.view(), theta);
            fit.theta = Some(theta);
            fit.theta_se = (d2 < 0.0).then(|| (-1.0 / d2).sqrt());
            return Ok(fit);
        }
    }
    Err(Error::Convergence { iterations: 100, msg: "negative binomial alternation".into() })
}

/// Inverse Fisher information, scaled by the dispersion.
pub fn glm_model_cov(fit: &GlmFit) -> Result<CovEstimate> {
    let inv = linalg::spd_inverse(fit.fisher_info.view())?;
    Ok(CovEstimate::new(inv * fit.dispersion, CovKind::Model))
}

/// `B^{-1} M B^{-1}` with `B = X'WX` and `M = sum s_i^2 x_i x_i'`.
pub fn glm_sandwich(fit: &GlmFit) -> Result<CovEstimate> {
    let bread = linalg::spd_inverse(fit.fisher_info.view())?;
    let s2 = fit.score_residuals().mapv(|v| v * v);
    let meat = linalg::weighted_gram(fit.x.view(), s2.view());
    Ok(CovEstimate::new(linalg::sandwich(&bread, &meat), CovKind::Sandwich))
}

/// Cluster-robust covariance for a pooled GLM fit.
pub fn glm_cluster_cov(fit: &GlmFit, clusters: &[String]) -> Result<CovEstimate> {
    if clusters.len() != fit.n() {
        return Err(Error::Spec("one cluster label per row required".into()));
    }
    let bread = linalg::spd_inverse(fit.fisher_info.view())?;
    let meat = crate::robust::cluster_meat(fit.x.view(), fit.score_residuals().view(), clusters);
    Ok(CovEstimate::new(linalg::sandwich(&bread, &meat), CovKind::Cluster))
}

/// Wald tests: t with `n - p` df for the Gaussian family, Normal otherwise.
pub fn coefficient_tests(fit: &GlmFit, se: &Array1<f64>) -> Vec<TestResult> {
    fit.beta
        .iter()
        .zip(se)
        .map(|(b, s)| match fit.family {
            Family::Gaussian => TestResult::t(b / s, (fit.n() - fit.p()) as f64),
            _ => TestResult::normal(b / s),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DevianceSummary {
    pub deviance: f64,
    pub null_deviance: f64,
    pub lr_test: TestResult,
    pub aic: f64,
}

/// Deviance, null deviance, likelihood-ratio test against the
/// intercept-only model, and AIC.
pub fn deviance_aic(fit: &GlmFit) -> Result<DevianceSummary> {
    let null = fit
        .null_deviance
        .ok_or_else(|| Error::Spec("likelihood-ratio test needs an intercept".into()))?;
    let lr = (null - fit.deviance).max(0.0);
    let df = fit.p().saturating_sub(1).max(1) as f64;
    Ok(DevianceSummary { deviance: fit.deviance, null_deviance: null, lr_test: TestResult::chisq(lr, df), aic: fit.aic })
}

/// Point prediction with a delta-method standard error under the model
/// covariance, on the linear or response scale.
pub fn glm_predict(fit: &GlmFit, x_new: ArrayView1<f64>, response_scale: bool) -> Result<(f64, f64)> {
    if x_new.len() != fit.p() {
        return Err(Error::Spec("new covariate vector has the wrong length".into()));
    }
    let v = glm_model_cov(fit)?.matrix;
    let eta = x_new.dot(&fit.beta);
    let se = x_new.dot(&v.dot(&x_new)).sqrt();
    if response_scale {
        let (mu, d) = link_eval(fit.family.link(), eta);
        Ok((mu, d.abs() * se))
    } else {
        Ok((eta, se))
    }
}

/// Intercept-only design of length n.
pub fn intercept_design(n: usize) -> Array2<f64> {
    Array2::ones((n, 1))
}

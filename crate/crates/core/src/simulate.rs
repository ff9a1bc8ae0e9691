//! Monte-Carlo experiments. Every suite is a pure function of its
//! parameters and seed: the fixed design comes from stream
//! `replicate(seed, u64::MAX)` and replicate `r` from `replicate(seed, r)`.

use ndarray::{s, Array1, Array2, Axis};
use rayon::prelude::*;

use crate::dataset::{self, ModelMatrix};
use crate::diagnostics::{self, AugmentedResiduals};
use crate::dist;
use crate::error::{Error, Result};
use crate::ols;
use crate::rng::{self, SimRng};
use crate::robust::{self, HcKind};
use crate::shrinkage;

pub const SUITES: [&str; 6] =
    ["freedman", "ehw-compare", "hc2-unbiased", "conformal-coverage", "ridge-tradeoff", "sparse-compare"];

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub suite: String,
    pub seed: u64,
    pub params: Vec<(String, f64)>,
    pub stats: Vec<(String, f64)>,
}

impl SimReport {
    fn new(suite: &str, seed: u64, params: &[(&str, f64)]) -> Self {
        Self {
            suite: suite.to_string(),
            seed,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            stats: Vec::new(),
        }
    }

    fn push(&mut self, key: impl Into<String>, value: f64) {
        self.stats.push((key.into(), value));
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Suite parameters; a suite reads the fields it needs and falls back to
/// its own defaults for the rest.
#[derive(Debug, Clone, Default)]
pub struct SimParams {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub reps: Option<usize>,
    pub alpha: Option<f64>,
}

pub fn run_suite(name: &str, params: &SimParams, seed: u64) -> Result<SimReport> {
    match name {
        "freedman" => freedman(params.n.unwrap_or(100), params.p.unwrap_or(50), params.reps.unwrap_or(5000), seed),
        "ehw-compare" => ehw_compare(params.n.unwrap_or(200), params.reps.unwrap_or(5000), seed),
        "hc2-unbiased" => hc2_unbiased(params.n.unwrap_or(30), params.p.unwrap_or(3), params.reps.unwrap_or(10000), seed),
        "conformal-coverage" => conformal_coverage(
            params.n.unwrap_or(24),
            params.p.unwrap_or(3),
            params.reps.unwrap_or(1000),
            params.alpha.unwrap_or(0.1),
            seed,
        ),
        "ridge-tradeoff" => ridge_tradeoff(params.n.unwrap_or(50), params.p.unwrap_or(10), params.reps.unwrap_or(2000), seed),
        "sparse-compare" => sparse_compare(params.n.unwrap_or(500), params.reps.unwrap_or(200), seed),
        other => Err(Error::Spec(format!("unknown simulation suite `{other}`; expected one of {}", SUITES.join(", ")))),
    }
}

fn design_rng(seed: u64) -> SimRng {
    rng::replicate(seed, u64::MAX)
}

/// Intercept plus `p - 1` standard Normal columns.
fn gaussian_design(r: &mut SimRng, n: usize, p: usize) -> Array2<f64> {
    let mut x = rng::normal_matrix(r, n, p);
    x.column_mut(0).fill(1.0);
    x
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let a = Array1::from(v.to_vec());
    (a.mean().unwrap_or(f64::NAN), a.var(1.0))
}

/// Null regression: `R^2` follows `Beta((p-1)/2, (n-p)/2)` when `p`
/// counts the intercept.
pub fn freedman(n: usize, p: usize, reps: usize, seed: u64) -> Result<SimReport> {
    if p < 2 || n <= p {
        return Err(Error::Spec("freedman needs 2 <= p < n".into()));
    }
    let r2: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::replicate(seed, r as u64);
            let x = gaussian_design(&mut g, n, p);
            let y = rng::normal_vec(&mut g, n);
            let fit = ols::fit_xy(x.view(), y.view(), &names(p))?;
            Ok(fit.r2.unwrap_or(f64::NAN))
        })
        .collect::<Result<_>>()?;
    let (a, b) = ((p - 1) as f64 / 2.0, (n - p) as f64 / 2.0);
    let (mean, var) = mean_var(&r2);
    let (d, pv) = dist::ks_test(&r2, |v| dist::beta_cdf(v, a, b));
    let mut rep = SimReport::new("freedman", seed, &[("n", n as f64), ("p", p as f64), ("reps", reps as f64)]);
    rep.push("r2_mean", mean);
    rep.push("r2_mean_theory", a / (a + b));
    rep.push("r2_var", var);
    rep.push("r2_var_theory", a * b / ((a + b) * (a + b) * (a + b + 1.0)));
    rep.push("ks_distance", d);
    rep.push("ks_p_value", pv);
    Ok(rep)
}

/// The four error designs: Normal, centered exponential, Normal with sd
/// `|x|`, and uniform on `(-x^2, x^2)`.
fn ehw_error(panel: usize, x: f64, g: &mut SimRng) -> f64 {
    match panel {
        0 => rng::normal(g),
        1 => -rng::uniform(g, 0.0, 1.0).ln() - 1.0,
        2 => x.abs() * rng::normal(g),
        _ => rng::uniform(g, -x * x, x * x),
    }
}

/// `y = x + e` with `x ~ U(-2, 2)` fixed; true, classical and HC2 standard
/// errors of the slope and 95% coverage under each error design.
pub fn ehw_compare(n: usize, reps: usize, seed: u64) -> Result<SimReport> {
    if n < 4 {
        return Err(Error::Spec("ehw-compare needs n >= 4".into()));
    }
    let mut dg = design_rng(seed);
    let mut x = Array2::ones((n, 2));
    for i in 0..n {
        x[[i, 1]] = rng::uniform(&mut dg, -2.0, 2.0);
    }
    let crit = dist::t_quantile(0.975, Some((n - 2) as f64));
    let mut rep = SimReport::new("ehw-compare", seed, &[("n", n as f64), ("reps", reps as f64)]);
    for panel in 0..4 {
        let draws: Vec<[f64; 3]> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut g = rng::replicate(seed, (panel * reps + r) as u64);
                let y: Array1<f64> = x.column(1).iter().map(|&xi| xi + ehw_error(panel, xi, &mut g)).collect();
                let fit = ols::fit_xy(x.view(), y.view(), &names(2))?;
                let hc2 = robust::hc_covariance(&fit, HcKind::Hc2)?;
                Ok([fit.beta[1], fit.classic_se()[1], hc2.se[1]])
            })
            .collect::<Result<_>>()?;
        let b: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let se0 = mean_var(&b).1.sqrt();
        let cover = |k: usize| draws.iter().filter(|d| (d[0] - 1.0).abs() <= crit * d[k]).count() as f64 / reps as f64;
        let tag = format!("panel{}", panel + 1);
        rep.push(format!("{tag}.se0"), se0);
        rep.push(format!("{tag}.se1"), draws.iter().map(|d| d[1]).sum::<f64>() / reps as f64);
        rep.push(format!("{tag}.se2"), draws.iter().map(|d| d[2]).sum::<f64>() / reps as f64);
        rep.push(format!("{tag}.coverage_classic"), cover(1));
        rep.push(format!("{tag}.coverage_hc2"), cover(2));
    }
    Ok(rep)
}

/// Homoskedastic fixed design: mean HC0 and HC2 matrices against
/// `sigma^2 (X'X)^{-1}`, in Monte-Carlo standard errors.
pub fn hc2_unbiased(n: usize, p: usize, reps: usize, seed: u64) -> Result<SimReport> {
    if p < 1 || n <= p {
        return Err(Error::Spec("hc2-unbiased needs p < n".into()));
    }
    let mut dg = design_rng(seed);
    let x = gaussian_design(&mut dg, n, p);
    let beta = Array1::<f64>::ones(p);
    let mu = x.dot(&beta);
    let draws: Vec<(Array2<f64>, Array2<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::replicate(seed, r as u64);
            let y = &mu + &rng::normal_vec(&mut g, n);
            let fit = ols::fit_xy(x.view(), y.view(), &names(p))?;
            Ok((
                robust::hc_covariance(&fit, HcKind::Hc0)?.matrix,
                robust::hc_covariance(&fit, HcKind::Hc2)?.matrix,
            ))
        })
        .collect::<Result<_>>()?;
    let truth = ols::fit_xy(x.view(), mu.view(), &names(p))?.xtx_inv;
    type Pair = (Array2<f64>, Array2<f64>);
    let summarize = |pick: &dyn Fn(&Pair) -> &Array2<f64>| {
        let stack: Vec<_> = draws.iter().map(|d| pick(d).view().insert_axis(Axis(0))).collect();
        let all = ndarray::concatenate(Axis(0), &stack).expect("same shapes");
        let mean = all.mean_axis(Axis(0)).expect("reps > 0");
        let sd = all.std_axis(Axis(0), 1.0);
        let z = (&mean - &truth) / &(sd / (reps as f64).sqrt());
        (mean, z)
    };
    let (m0, z0) = summarize(&|d| &d.0);
    let (m2, z2) = summarize(&|d| &d.1);
    let mut rep = SimReport::new("hc2-unbiased", seed, &[("n", n as f64), ("p", p as f64), ("reps", reps as f64)]);
    rep.push("hc2_max_abs_z", z2.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    rep.push("hc0_max_abs_z", z0.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let ratio = |m: &Array2<f64>| (0..p).map(|j| m[[j, j]] / truth[[j, j]]).collect::<Vec<_>>();
    let (r0, r2) = (ratio(&m0), ratio(&m2));
    rep.push("hc0_diag_ratio_max", r0.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
    rep.push("hc2_diag_ratio_min", r2.iter().fold(f64::INFINITY, |m, &v| m.min(v)));
    rep.push("hc2_diag_ratio_max", r2.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
    rep.push("hc0_diag_z_max", (0..p).map(|j| z0[[j, j]]).fold(f64::NEG_INFINITY, f64::max));
    Ok(rep)
}

/// Full conformal intervals on exchangeable Normal data: coverage of a new
/// response and the chi-square test of uniform ranks.
pub fn conformal_coverage(n: usize, p: usize, reps: usize, alpha: f64, seed: u64) -> Result<SimReport> {
    if p < 1 || n <= p {
        return Err(Error::Spec("conformal-coverage needs p < n".into()));
    }
    let beta = Array1::<f64>::ones(p);
    let draws: Vec<(bool, usize, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::replicate(seed, r as u64);
            let all = gaussian_design(&mut g, n + 1, p);
            let yall = all.dot(&beta) + rng::normal_vec(&mut g, n + 1);
            let mm = ModelMatrix::new(all.slice(s![..n, ..]).to_owned(), yall.slice(s![..n]).to_owned());
            let x_new = all.row(n);
            let iv = diagnostics::conformal_interval(&mm, x_new, alpha, None)?;
            let rank = AugmentedResiduals::new(mm.x.view(), mm.y.view(), x_new)?.rank(yall[n]);
            Ok((iv.lo <= yall[n] && yall[n] <= iv.hi, rank, iv.hi - iv.lo))
        })
        .collect::<Result<_>>()?;
    let covered = draws.iter().filter(|d| d.0).count() as f64 / reps as f64;
    let mut counts = vec![0.0; n + 1];
    for d in &draws {
        counts[d.1 - 1] += 1.0;
    }
    let expected = vec![reps as f64 / (n + 1) as f64; n + 1];
    let (chi, pv) = dist::chisq_gof(&counts, &expected);
    let cutoff = diagnostics::conformal_cutoff(n, alpha);
    let mut rep = SimReport::new(
        "conformal-coverage",
        seed,
        &[("n", n as f64), ("p", p as f64), ("reps", reps as f64), ("alpha", alpha)],
    );
    rep.push("coverage", covered);
    rep.push("rank_coverage", draws.iter().filter(|d| d.1 <= cutoff).count() as f64 / reps as f64);
    rep.push("nominal", 1.0 - alpha);
    rep.push("mean_width", draws.iter().map(|d| d.2).sum::<f64>() / reps as f64);
    rep.push("rank_chisq", chi);
    rep.push("rank_chisq_p_value", pv);
    Ok(rep)
}

/// Ridge on a fixed standardized design: Monte-Carlo squared bias, variance
/// and MSE of the coefficients across a penalty grid, with the closed forms.
pub fn ridge_tradeoff(n: usize, p: usize, reps: usize, seed: u64) -> Result<SimReport> {
    if p < 1 || n <= p + 1 {
        return Err(Error::Spec("ridge-tradeoff needs p + 1 < n".into()));
    }
    let mut dg = design_rng(seed);
    let raw = rng::normal_matrix(&mut dg, n, p);
    let mut x = Array2::ones((n, p + 1));
    x.slice_mut(s![.., 1..]).assign(&raw);
    let base = ModelMatrix::new(x, Array1::zeros(n));
    let (std0, _) = dataset::standardize(&base)?;
    let z = std0.x;
    let beta: Array1<f64> = (0..p).map(|j| if j % 2 == 0 { 0.5 } else { -0.5 }).collect();
    let sigma = 2.0;
    let lambdas: Vec<f64> = std::iter::once(0.0).chain(shrinkage::log_grid(10.0 * n as f64, 4.0, 9).into_iter().rev()).collect();
    let mu = z.dot(&beta);
    let coefs: Vec<Array2<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::replicate(seed, r as u64);
            let y = &mu + &rng::normal_vec(&mut g, n).mapv(|e| e * sigma);
            let yc = &y - y.mean().unwrap_or(0.0);
            let mm = ModelMatrix::with_names(z.clone(), yc, names(p));
            Ok(shrinkage::ridge_path(&mm, &lambdas)?.coefs)
        })
        .collect::<Result<_>>()?;
    let svd = crate::linalg::thin_svd(z.view());
    let vtb = svd.v.t().dot(&beta);
    let mut rep = SimReport::new("ridge-tradeoff", seed, &[("n", n as f64), ("p", p as f64), ("reps", reps as f64), ("sigma", sigma)]);
    let mut best = (f64::INFINITY, 0.0);
    for (k, &lam) in lambdas.iter().enumerate() {
        let rows: Vec<Array1<f64>> = coefs.iter().map(|c| c.row(k).to_owned()).collect();
        let mean = rows.iter().fold(Array1::<f64>::zeros(p), |a, b| a + b) / reps as f64;
        let bias2 = (&mean - &beta).mapv(|v| v * v).sum();
        let var = rows.iter().map(|b| (b - &mean).mapv(|v| v * v).sum()).sum::<f64>() / (reps as f64 - 1.0);
        // closed forms in the eigenbasis of Z'Z
        let (mut tb, mut tv) = (0.0, 0.0);
        for (j, &d) in svd.d.iter().enumerate() {
            let d2 = d * d;
            tb += (lam / (d2 + lam) * vtb[j]).powi(2);
            tv += sigma * sigma * d2 / ((d2 + lam) * (d2 + lam));
        }
        let tag = format!("lambda{k}");
        rep.push(format!("{tag}.lambda"), lam);
        rep.push(format!("{tag}.bias2"), bias2);
        rep.push(format!("{tag}.variance"), var);
        rep.push(format!("{tag}.mse"), bias2 + var);
        rep.push(format!("{tag}.mse_theory"), tb + tv);
        if tb + tv < best.0 {
            best = (tb + tv, lam);
        }
    }
    rep.push("best_lambda_theory", best.1);
    Ok(rep)
}

/// Test-set MSE of OLS, GCV-tuned ridge and 5-fold CV lasso when the truth
/// has 10 nonzero coefficients among 40 real columns and 200 noise columns.
pub fn sparse_compare(n_train: usize, reps: usize, seed: u64) -> Result<SimReport> {
    let (p_real, p_noise, n_test) = (40usize, 200usize, 200usize);
    let p = p_real + p_noise;
    if n_train <= p + 1 {
        return Err(Error::Spec(format!("sparse-compare needs more than {} training rows", p + 1)));
    }
    let beta: Array1<f64> = (0..p).map(|j| if j < 10 { 1.0 } else { 0.0 }).collect();
    let sigma = 3.0;
    let draws: Vec<[f64; 3]> = (0..reps)
        .into_par_iter()
        .map(|r| sparse_rep(n_train, n_test, &beta, sigma, rng::replicate(seed, r as u64), seed ^ (r as u64)))
        .collect::<Result<_>>()?;
    let mean = |k: usize| draws.iter().map(|d| d[k]).sum::<f64>() / reps as f64;
    let frac = |f: &dyn Fn(&[f64; 3]) -> bool| draws.iter().filter(|d| f(d)).count() as f64 / reps as f64;
    let mut rep = SimReport::new(
        "sparse-compare",
        seed,
        &[("n_train", n_train as f64), ("n_test", n_test as f64), ("p", p as f64), ("reps", reps as f64)],
    );
    rep.push("ols_mse", mean(0));
    rep.push("ridge_mse", mean(1));
    rep.push("lasso_mse", mean(2));
    rep.push("frac_ridge_beats_ols", frac(&|d| d[1] < d[0]));
    rep.push("frac_lasso_beats_ols", frac(&|d| d[2] < d[0]));
    rep.push("frac_both_beat_ols", frac(&|d| d[1] < d[0] && d[2] < d[0]));
    Ok(rep)
}

fn sparse_rep(n_train: usize, n_test: usize, beta: &Array1<f64>, sigma: f64, mut g: SimRng, cv_seed: u64) -> Result<[f64; 3]> {
    let p = beta.len();
    let n = n_train + n_test;
    let mut x = Array2::ones((n, p + 1));
    x.slice_mut(s![.., 1..]).assign(&rng::normal_matrix(&mut g, n, p));
    let y = x.slice(s![.., 1..]).dot(beta) + rng::normal_vec(&mut g, n).mapv(|e| e * sigma);
    let mut cols = vec![dataset::INTERCEPT.to_string()];
    cols.extend((1..=p).map(|j| format!("x{j}")));
    let train = ModelMatrix::with_names(x.slice(s![..n_train, ..]).to_owned(), y.slice(s![..n_train]).to_owned(), cols);
    let xt = x.slice(s![n_train.., ..]);
    let yt = y.slice(s![n_train..]);
    let mse = |pred: Array1<f64>| (&yt - &pred).mapv(|v| v * v).mean().unwrap_or(f64::NAN);

    let ols_fit = ols::fit_ols(&train)?;
    let e_ols = mse(xt.dot(&ols_fit.beta));

    let (std_tr, st) = dataset::standardize(&train)?;
    let grid = shrinkage::default_ridge_grid(n_train, 60);
    let mut path = shrinkage::ridge_path(&std_tr, &grid)?;
    let lam = shrinkage::gcv_lambda(&path);
    let k = path.lambdas.iter().position(|&l| l == lam).unwrap_or(0);
    let slopes = path.back_transform(&st);
    let xs = xt.slice(s![.., 1..]);
    let e_ridge = mse(shrinkage::predict_linear(xs, path.intercept_back[k], slopes.row(k)));

    let cv = shrinkage::cv_path(&train, 0.0, 5, cv_seed, 40)?;
    let (b0, b) = cv.coefficients(cv.index_min);
    let e_lasso = mse(shrinkage::predict_linear(xs, b0, b.view()));
    Ok([e_ols, e_ridge, e_lasso])
}

//! Regression quantiles: the check-loss LP solved by a simplex walk over
//! basic solutions, with Powell and pairs-bootstrap covariances.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::ModelMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ols;
use crate::rng;
use crate::robust::{CovEstimate, CovKind};

pub fn check_loss(u: f64, tau: f64) -> f64 {
    if u >= 0.0 {
        u * tau
    } else {
        -u * (1.0 - tau)
    }
}

pub fn objective(x: ArrayView2<f64>, y: ArrayView1<f64>, beta: ArrayView1<f64>, tau: f64) -> f64 {
    let fitted = x.dot(&beta);
    y.iter().zip(&fitted).map(|(a, b)| check_loss(a - b, tau)).sum()
}

#[derive(Debug, Clone)]
pub struct QuantFit {
    pub tau: f64,
    pub names: Vec<String>,
    pub beta: Array1<f64>,
    pub objective: f64,
    pub residuals: Array1<f64>,
    /// Rows interpolated by the returned vertex.
    pub basis: Vec<usize>,
    pub iterations: usize,
    pub cov: Option<CovEstimate>,
}

impl QuantFit {
    /// Counts of residuals below and at-or-below zero, with zero judged
    /// relative to the response scale.
    pub fn bracket_counts(&self) -> (usize, usize) {
        let scale = self.residuals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-10 * scale;
        let below = self.residuals.iter().filter(|&&r| r < -eps).count();
        let at_or_below = self.residuals.iter().filter(|&&r| r <= eps).count();
        (below, at_or_below)
    }

    /// `#{r < 0} <= n tau <= #{r <= 0} + p`.
    pub fn bracket_holds(&self) -> bool {
        let (lo, hi) = self.bracket_counts();
        let nt = self.residuals.len() as f64 * self.tau;
        lo as f64 <= nt + 1e-9 && nt <= (hi + self.beta.len()) as f64 + 1e-9
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// Greedy choice of p linearly independent rows in the given order.
fn independent_rows(x: ArrayView2<f64>, order: &[usize]) -> Option<Vec<usize>> {
    let p = x.ncols();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(p);
    let mut rows = Vec::with_capacity(p);
    for &i in order {
        let mut v = x.row(i).to_owned();
        let norm0 = v.dot(&v).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 * norm0 {
            basis.push(v / norm);
            rows.push(i);
            if rows.len() == p {
                return Some(rows);
            }
        }
    }
    None
}

/// Directional derivative of `rho_tau(u)` at zero along `du`.
fn kink_slope(du: f64, tau: f64) -> f64 {
    if du >= 0.0 {
        tau * du
    } else {
        (tau - 1.0) * du
    }
}

pub fn rq_fit(mm: &ModelMatrix, tau: f64) -> Result<QuantFit> {
    rq_fit_xy(mm.x.view(), mm.y.view(), &mm.names, tau)
}

pub fn rq_fit_xy(x: ArrayView2<f64>, y: ArrayView1<f64>, names: &[String], tau: f64) -> Result<QuantFit> {
    check_tau(tau)?;
    let (n, p) = x.dim();
    if n < p || p == 0 {
        return Err(Error::InsufficientData("fewer rows than coefficients".into()));
    }
    let start = ols::ols_beta(x, y)?;
    let r0 = &y - &x.dot(&start);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r0[a].abs().total_cmp(&r0[b].abs()).then(a.cmp(&b)));
    let mut basis = independent_rows(x, &order).ok_or(Error::RankDeficient(p))?;

    let yscale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-12 * yscale;
    let max_iter = 50 * n + 1000;
    for it in 0..max_iter {
        let xh = x.select(Axis(0), &basis);
        let xh_inv = linalg::inverse(xh.view()).map_err(|_| Error::Solver("basis lost full rank".into()))?;
        let yh: Array1<f64> = basis.iter().map(|&i| y[i]).collect();
        let beta = xh_inv.dot(&yh);
        let mut resid = &y - &x.dot(&beta);
        for &i in &basis {
            resid[i] = 0.0;
        }
        let mut in_basis = vec![false; n];
        for &i in &basis {
            in_basis[i] = true;
        }

        // steepest descent edge out of this vertex
        let mut best: Option<(f64, usize, f64, Array1<f64>)> = None;
        for (j, _) in basis.iter().enumerate() {
            for s in [1.0, -1.0] {
                let d = xh_inv.column(j).mapv(|v| v * s);
                let a = x.dot(&d);
                let mut slope = kink_slope(-s, tau);
                for i in 0..n {
                    if in_basis[i] {
                        continue;
                    }
                    slope += if resid[i].abs() <= zero_tol {
                        kink_slope(-a[i], tau)
                    } else if resid[i] > 0.0 {
                        -tau * a[i]
                    } else {
                        (1.0 - tau) * a[i]
                    };
                }
                let dnorm = d.dot(&d).sqrt();
                let rate = slope / dnorm;
                if slope < -1e-12 * (1.0 + n as f64) && best.as_ref().is_none_or(|b| rate < b.0) {
                    best = Some((rate, j, slope, a));
                }
            }
        }
        let Some((_, j, slope0, a)) = best else {
            let objective = resid.iter().map(|&r| check_loss(r, tau)).sum();
            return Ok(QuantFit {
                tau,
                names: names.to_vec(),
                beta,
                objective,
                residuals: resid,
                basis,
                iterations: it,
                cov: None,
            });
        };

        // line search over the breakpoints of the convex piecewise-linear ray
        let mut bps: Vec<(f64, usize)> = (0..n)
            .filter(|&i| !in_basis[i] && resid[i].abs() > zero_tol && a[i] != 0.0)
            .filter_map(|i| {
                let t = resid[i] / a[i];
                (t > 0.0).then_some((t, i))
            })
            .collect();
        bps.sort_by(|u, v| u.0.total_cmp(&v.0).then(u.1.cmp(&v.1)));
        let mut slope = slope0;
        let mut entering = None;
        for &(_, i) in &bps {
            slope += a[i].abs();
            if slope >= 0.0 {
                entering = Some(i);
                break;
            }
        }
        let Some(i) = entering else {
            return Err(Error::Solver("objective unbounded along an edge".into()));
        };
        basis[j] = i;
    }
    Err(Error::Solver(format!("simplex did not terminate in {max_iter} pivots")))
}

/// Powell kernel covariance with bandwidth `1.06 sd(e) n^{-1/3}`.
pub fn rq_powell_cov(fit: &QuantFit, x: ArrayView2<f64>) -> Result<CovEstimate> {
    let n = x.nrows();
    let sd = fit.residuals.std(1.0);
    let h = 1.06 * sd * (n as f64).powf(-1.0 / 3.0);
    rq_powell_cov_with(fit, x, h)
}

pub fn rq_powell_cov_with(fit: &QuantFit, x: ArrayView2<f64>, h: f64) -> Result<CovEstimate> {
    if !(h > 0.0) {
        return Err(Error::Bandwidth(format!("bandwidth {h} is not positive; use a larger h")));
    }
    let tau = fit.tau;
    let within = fit.residuals.iter().filter(|r| r.abs() <= h).count();
    if within <= fit.beta.len() {
        // only the interpolated rows fall inside the window
        return Err(Error::Bandwidth(format!("no residuals beyond the basis within h = {h:.3e}; use a larger h")));
    }
    let inside = fit.residuals.mapv(|r| if r.abs() <= h { 1.0 / (2.0 * h) } else { 0.0 });
    let psi2 = fit.residuals.mapv(|r| {
        let v = tau - f64::from(r <= 0.0);
        v * v
    });
    let b = linalg::weighted_gram(x, inside.view());
    let m = linalg::weighted_gram(x, psi2.view());
    let binv = linalg::spd_inverse(b.view())
        .map_err(|_| Error::Bandwidth(format!("kernel information singular at h = {h:.3e}; use a larger h")))?;
    Ok(CovEstimate::new(linalg::sandwich(&binv, &m), CovKind::Powell))
}

/// Pairs bootstrap. Replicate `b` draws from the stream `seed ^ b` and
/// redraws rank-deficient resamples; the total number of draws is capped
/// at `10 B`.
pub fn rq_bootstrap_cov(mm: &ModelMatrix, tau: f64, reps: usize, seed: u64) -> Result<CovEstimate> {
    rq_bootstrap_cov_xy(mm.x.view(), mm.y.view(), tau, reps, seed)
}

pub fn rq_bootstrap_cov_xy(x: ArrayView2<f64>, y: ArrayView1<f64>, tau: f64, reps: usize, seed: u64) -> Result<CovEstimate> {
    check_tau(tau)?;
    if reps < 100 {
        return Err(Error::Spec("at least 100 bootstrap replicates are required".into()));
    }
    let (n, p) = x.dim();
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let draws: Vec<Result<(Array1<f64>, usize)>> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::replicate(seed, b as u64);
            for attempt in 1..=10 {
                let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
                let xb = x.select(Axis(0), &idx);
                let yb = y.select(Axis(0), &idx);
                match rq_fit_xy(xb.view(), yb.view(), &names, tau) {
                    Ok(f) => return Ok((f.beta, attempt)),
                    Err(Error::RankDeficient(_)) | Err(Error::Singular(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Solver("bootstrap resamples repeatedly rank-deficient".into()))
        })
        .collect();
    let mut coefs = Array2::zeros((reps, p));
    let mut attempts = 0;
    for (b, d) in draws.into_iter().enumerate() {
        let (beta, a) = d?;
        attempts += a;
        coefs.row_mut(b).assign(&beta);
    }
    if attempts > 10 * reps {
        return Err(Error::Solver("too many rank-deficient bootstrap resamples".into()));
    }
    let mean = coefs.mean_axis(Axis(0)).expect("reps > 0");
    let centered = &coefs - &mean;
    let cov = centered.t().dot(&centered) / (reps as f64 - 1.0);
    Ok(CovEstimate::new(cov, CovKind::Bootstrap))
}

/// Best objective over all basic solutions; exponential in n, for testing.
pub fn brute_force_objective(x: ArrayView2<f64>, y: ArrayView1<f64>, tau: f64) -> Option<f64> {
    let (n, p) = x.dim();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let xh = x.select(Axis(0), &idx);
        if let Ok(inv) = linalg::inverse(xh.view()) {
            let yh = y.select(Axis(0), &idx);
            let b = inv.dot(&yh);
            let f = objective(x, y, b.view(), tau);
            best = Some(best.map_or(f, |v: f64| v.min(f)));
        }
        // next combination in lexicographic order
        let mut k = p;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < n - p + k {
                idx[k] += 1;
                for m in k + 1..p {
                    idx[m] = idx[m - 1] + 1;
                }
                break;
            }
        }
    }
}

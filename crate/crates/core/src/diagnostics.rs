//! Leave-one-out algebra: deletion coefficients, PRESS/GCV, influence
//! measures, jackknife, online updating and conformal intervals.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dataset::ModelMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ols::OlsFit;
use crate::robust::{CovEstimate, CovKind};

#[derive(Debug, Clone)]
pub struct LooResult {
    /// Row i is the coefficient vector without observation i.
    pub beta_loo: Array2<f64>,
    pub pred_residuals: Array1<f64>,
    pub press: f64,
    pub gcv: f64,
}

fn check_leverage(fit: &OlsFit) -> Result<()> {
    match fit.leverage.iter().position(|&h| h >= 1.0 - 1e-10) {
        Some(i) => Err(Error::LeverageOne(i)),
        None => Ok(()),
    }
}

pub fn loo_all(fit: &OlsFit) -> Result<LooResult> {
    check_leverage(fit)?;
    let (n, p) = (fit.n(), fit.p());
    let scale = &fit.residuals / &fit.leverage.mapv(|h| 1.0 - h);
    // V x_i for every row, as columns of V X'
    let vx = fit.xtx_inv.dot(&fit.x.t());
    let mut beta_loo = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        let row = &fit.beta - &(&vx.column(i) * scale[i]);
        beta_loo.row_mut(i).assign(&row);
    }
    let press = scale.dot(&scale);
    let shrink = 1.0 - p as f64 / n as f64;
    let gcv = fit.rss() / (shrink * shrink);
    Ok(LooResult { beta_loo, pred_residuals: scale, press, gcv })
}

#[derive(Debug, Clone)]
pub struct InfluenceReport {
    pub standardized: Array1<f64>,
    pub studentized: Array1<f64>,
    pub cook: Array1<f64>,
    pub sigma2_loo: Array1<f64>,
}

pub fn influence(fit: &OlsFit) -> Result<InfluenceReport> {
    let (n, p) = (fit.n(), fit.p());
    if n <= p + 1 {
        return Err(Error::InsufficientData(format!("influence needs n > p + 1 (n = {n}, p = {p})")));
    }
    check_leverage(fit)?;
    let s2 = fit.sigma2_hat;
    let mut standardized = Array1::zeros(n);
    let mut studentized = Array1::zeros(n);
    let mut cook = Array1::zeros(n);
    let mut sigma2_loo = Array1::zeros(n);
    for i in 0..n {
        let (e, h) = (fit.residuals[i], fit.leverage[i]);
        let sl = (((n - p) as f64) * s2 - e * e / (1.0 - h)) / (n - p - 1) as f64;
        sigma2_loo[i] = sl;
        let r = if s2 > 0.0 { e / (s2 * (1.0 - h)).sqrt() } else { 0.0 };
        standardized[i] = r;
        studentized[i] = if e == 0.0 { 0.0 } else { e / (sl * (1.0 - h)).sqrt() };
        cook[i] = r * r * h / (p as f64 * (1.0 - h));
    }
    Ok(InfluenceReport { standardized, studentized, cook, sigma2_loo })
}

/// Jackknife covariance from pseudo-values `n beta - (n - 1) beta_(-i)`.
pub fn jackknife_cov(fit: &OlsFit) -> Result<CovEstimate> {
    let loo = loo_all(fit)?;
    let n = fit.n() as f64;
    let pseudo = (&fit.beta * n) - &(&loo.beta_loo * (n - 1.0));
    let centered = &pseudo - &pseudo.mean_axis(Axis(0)).expect("nonempty");
    let v = centered.t().dot(&centered) / (n * (n - 1.0));
    Ok(CovEstimate::new(v, CovKind::Jackknife))
}

/// Variance inflation factors for the non-intercept columns.
pub fn vif(fit: &OlsFit) -> Result<Vec<(String, f64)>> {
    if !fit.has_intercept {
        return Err(Error::Spec("variance inflation factors need an intercept".into()));
    }
    let out = (1..fit.p())
        .map(|j| {
            let col = fit.x.column(j);
            let m = col.mean().unwrap_or(0.0);
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            (fit.names[j].clone(), fit.xtx_inv[[j, j]] * ss)
        })
        .collect();
    Ok(out)
}

/// Recursive least-squares state: `(X'X)^{-1}` and `beta` after `n_seen` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineOlsState {
    pub v: Array2<f64>,
    pub beta: Array1<f64>,
    pub n_seen: usize,
}

impl OnlineOlsState {
    /// Starts from a batch of at least p full-rank rows.
    pub fn from_batch(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Self> {
        let qr = linalg::gram_schmidt_qr(x)?;
        let beta = linalg::back_solve(qr.r.view(), qr.q.t().dot(&y).view())?;
        Ok(Self { v: linalg::xtx_inverse(&qr)?, beta, n_seen: x.nrows() })
    }

    pub fn update(&mut self, x_new: ArrayView1<f64>, y_new: f64) {
        let vx = self.v.dot(&x_new);
        let denom = 1.0 + x_new.dot(&vx);
        let gamma = &vx / denom;
        let pred_resid = y_new - x_new.dot(&self.beta);
        self.beta.scaled_add(pred_resid, &gamma);
        let outer = gamma.view().insert_axis(Axis(1)).dot(&vx.view().insert_axis(Axis(0)));
        self.v = linalg::symmetrize(&(&self.v - &outer));
        self.n_seen += 1;
    }
}

pub fn gauss_update(state: &OnlineOlsState, x_new: ArrayView1<f64>, y_new: f64) -> OnlineOlsState {
    let mut next = state.clone();
    next.update(x_new, y_new);
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ConformalGrid {
    /// `[min y - 3 sd, max y + 3 sd]` in 200 steps.
    pub fn default_for(y: ArrayView1<f64>) -> Self {
        let sd = y.std(1.0);
        let lo = y.fold(f64::INFINITY, |m, &v| m.min(v)) - 3.0 * sd;
        let hi = y.fold(f64::NEG_INFINITY, |m, &v| m.max(v)) + 3.0 * sd;
        Self { lo, hi, step: (hi - lo) / 200.0 }
    }

    fn points(&self) -> Vec<f64> {
        let k = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=k).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalInterval {
    pub lo: f64,
    pub hi: f64,
    pub accepted: usize,
    pub grid_points: usize,
    /// The accepted set reaches the edge of the grid.
    pub at_boundary: bool,
}

/// Residuals of the augmented fit are affine in the candidate value:
/// `e(y*) = a + y* b`, the last entry being the new point.
pub struct AugmentedResiduals {
    pub a: Array1<f64>,
    pub b: Array1<f64>,
}

impl AugmentedResiduals {
    pub fn new(x: ArrayView2<f64>, y: ArrayView1<f64>, x_new: ArrayView1<f64>) -> Result<Self> {
        let qr = linalg::gram_schmidt_qr(x)?;
        let v = linalg::xtx_inverse(&qr)?;
        let vx0 = v.dot(&x_new);
        let denom = 1.0 + x_new.dot(&vx0);
        let outer = vx0.view().insert_axis(Axis(1)).dot(&vx0.view().insert_axis(Axis(0))) / denom;
        let va = &v - &outer;
        let beta0 = va.dot(&x.t().dot(&y));
        let b1 = va.dot(&x_new);
        let n = x.nrows();
        let mut a = Array1::zeros(n + 1);
        let mut b = Array1::zeros(n + 1);
        a.slice_mut(s![..n]).assign(&(&y - &x.dot(&beta0)));
        b.slice_mut(s![..n]).assign(&(-x.dot(&b1)));
        a[n] = -x_new.dot(&beta0);
        b[n] = 1.0 - x_new.dot(&b1);
        Ok(Self { a, b })
    }

    /// `1 + #{i <= n : |e_i| <= |e_{n+1}|}`.
    pub fn rank(&self, y_star: f64) -> usize {
        let n = self.a.len() - 1;
        let last = (self.a[n] + y_star * self.b[n]).abs();
        1 + (0..n)
            .filter(|&i| (self.a[i] + y_star * self.b[i]).abs() <= last)
            .count()
    }
}

/// Largest accepted rank `ceil((1 - alpha)(n + 1))`.
pub fn conformal_cutoff(n: usize, alpha: f64) -> usize {
    let k = ((1.0 - alpha) * (n as f64 + 1.0) - 1e-12).ceil() as usize;
    k.min(n + 1)
}

/// Full conformal prediction interval over a grid of candidate responses.
pub fn conformal_interval(
    mm: &ModelMatrix,
    x_new: ArrayView1<f64>,
    alpha: f64,
    grid: Option<ConformalGrid>,
) -> Result<ConformalInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Spec(format!("alpha {alpha} outside (0, 1)")));
    }
    if x_new.len() != mm.p() {
        return Err(Error::Spec("new covariate vector has the wrong length".into()));
    }
    let grid = grid.unwrap_or_else(|| ConformalGrid::default_for(mm.y.view()));
    if !(grid.step > 0.0 && grid.hi >= grid.lo) {
        return Err(Error::Spec("grid needs lo <= hi and a positive step".into()));
    }
    let aug = AugmentedResiduals::new(mm.x.view(), mm.y.view(), x_new)?;
    let cutoff = conformal_cutoff(mm.n(), alpha);
    let points = grid.points();
    let accepted: Vec<usize> = (0..points.len()).filter(|&k| aug.rank(points[k]) <= cutoff).collect();
    match (accepted.first(), accepted.last()) {
        (Some(&first), Some(&last)) => Ok(ConformalInterval {
            lo: points[first],
            hi: points[last],
            accepted: accepted.len(),
            grid_points: points.len(),
            at_boundary: first == 0 || last == points.len() - 1,
        }),
        _ => Err(Error::ConformalEmpty),
    }
}

//! Kaplan-Meier curves, the log-rank test, and Cox regression on the
//! partial likelihood.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::dataset::ModelMatrix;
use crate::dist;
use crate::error::{Error, Result};
use crate::linalg;
use crate::ols::TestResult;

#[derive(Debug, Clone)]
pub struct SurvData {
    pub time: Array1<f64>,
    /// 1 for an observed failure, 0 for censoring.
    pub event: Array1<f64>,
    pub group: Option<Vec<String>>,
    /// Covariates without an intercept column.
    pub x: Option<Array2<f64>>,
    pub names: Vec<String>,
}

impl SurvData {
    pub fn new(time: Array1<f64>, event: Array1<f64>) -> Result<Self> {
        if time.len() != event.len() {
            return Err(Error::Spec("time and event lengths differ".into()));
        }
        if time.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Spec("survival times must be positive".into()));
        }
        if event.iter().any(|&d| d != 0.0 && d != 1.0) {
            return Err(Error::Spec("event indicator must be 0 or 1".into()));
        }
        if !event.iter().any(|&d| d == 1.0) {
            return Err(Error::InsufficientData("no failures observed".into()));
        }
        Ok(Self { time, event, group: None, x: None, names: Vec::new() })
    }

    pub fn with_group(mut self, group: Vec<String>) -> Result<Self> {
        if group.len() != self.time.len() {
            return Err(Error::Spec("one group label per row required".into()));
        }
        self.group = Some(group);
        Ok(self)
    }

    pub fn with_covariates(mut self, x: Array2<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() != self.time.len() {
            return Err(Error::Spec("covariate rows differ from the number of times".into()));
        }
        self.x = Some(x);
        self.names = names;
        Ok(self)
    }

    /// Times from the response, events from the event column, and the
    /// non-intercept columns as covariates.
    pub fn from_model_matrix(mm: &ModelMatrix) -> Result<Self> {
        let event = mm.event.clone().ok_or_else(|| Error::Spec("an event column is required".into()))?;
        Self::new(mm.y.clone(), event)?.with_covariates(mm.covariates().to_owned(), mm.covariate_names().to_vec())
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    /// Distinct failure times ascending with risk-set sizes and failure counts.
    fn failure_table(&self, rows: &[usize]) -> Vec<(f64, usize, usize)> {
        let mut fails: Vec<f64> = rows.iter().filter(|&&i| self.event[i] == 1.0).map(|&i| self.time[i]).collect();
        fails.sort_by(f64::total_cmp);
        fails.dedup();
        fails
            .into_iter()
            .map(|t| {
                let r = rows.iter().filter(|&&i| self.time[i] >= t).count();
                let d = rows.iter().filter(|&&i| self.time[i] == t && self.event[i] == 1.0).count();
                (t, r, d)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiKind {
    Log,
    LogLog,
}

#[derive(Debug, Clone)]
pub struct KmCurve {
    pub times: Vec<f64>,
    pub n_risk: Vec<usize>,
    pub n_event: Vec<usize>,
    pub surv: Vec<f64>,
    /// Greenwood variance of `log S`; infinite once `S` reaches zero.
    pub greenwood_var_log: Vec<f64>,
    pub conf_level: f64,
    pub ci_log: Vec<Option<(f64, f64)>>,
    pub ci_loglog: Vec<Option<(f64, f64)>>,
    pub ci_kind: CiKind,
}

impl KmCurve {
    /// Right-continuous step function.
    pub fn surv_at(&self, t: f64) -> f64 {
        match self.times.iter().rposition(|&tk| tk <= t) {
            Some(k) => self.surv[k],
            None => 1.0,
        }
    }

    /// Greenwood variance of `S` itself.
    pub fn var_surv(&self) -> Vec<f64> {
        self.surv
            .iter()
            .zip(&self.greenwood_var_log)
            .map(|(s, v)| if *s > 0.0 { s * s * v } else { 0.0 })
            .collect()
    }

    /// Band of the requested kind.
    pub fn ci(&self) -> &[Option<(f64, f64)>] {
        match self.ci_kind {
            CiKind::Log => &self.ci_log,
            CiKind::LogLog => &self.ci_loglog,
        }
    }
}

pub fn km_fit(data: &SurvData, conf_level: f64, ci_kind: CiKind) -> Result<KmCurve> {
    let rows: Vec<usize> = (0..data.n()).collect();
    km_rows(data, &rows, conf_level, ci_kind)
}

fn km_rows(data: &SurvData, rows: &[usize], conf_level: f64, ci_kind: CiKind) -> Result<KmCurve> {
    if !(conf_level > 0.0 && conf_level < 1.0) {
        return Err(Error::Spec("confidence level must lie in (0, 1)".into()));
    }
    let z = dist::normal_quantile(0.5 + conf_level / 2.0);
    let table = data.failure_table(rows);
    let k = table.len();
    let mut curve = KmCurve {
        times: Vec::with_capacity(k),
        n_risk: Vec::with_capacity(k),
        n_event: Vec::with_capacity(k),
        surv: Vec::with_capacity(k),
        greenwood_var_log: Vec::with_capacity(k),
        conf_level,
        ci_log: Vec::with_capacity(k),
        ci_loglog: Vec::with_capacity(k),
        ci_kind,
    };
    let mut s = 1.0;
    let mut gw = 0.0;
    // the product telescopes across stretches without censoring; evaluating
    // it per stretch keeps uncensored curves equal to empirical fractions
    let (mut base, mut r_base) = (1.0, data.n().max(1));
    let mut r_next = None;
    for (t, r, d) in table {
        if r_next != Some(r) {
            base = s;
            r_base = r;
        }
        r_next = Some(r - d);
        s = base * (r - d) as f64 / r_base as f64;
        gw += if r > d { d as f64 / (r as f64 * (r - d) as f64) } else { f64::INFINITY };
        curve.times.push(t);
        curve.n_risk.push(r);
        curve.n_event.push(d);
        curve.surv.push(s);
        curve.greenwood_var_log.push(gw);
        if s > 0.0 && gw.is_finite() {
            let se = gw.sqrt();
            let ls = s.ln();
            curve.ci_log.push(Some(((ls - z * se).exp().clamp(0.0, 1.0), (ls + z * se).exp().clamp(0.0, 1.0))));
            if ls < 0.0 {
                let sev = se / ls.abs();
                curve.ci_loglog.push(Some((s.powf((z * sev).exp()), s.powf((-z * sev).exp()))));
            } else {
                curve.ci_loglog.push(None);
            }
        } else {
            curve.ci_log.push(None);
            curve.ci_loglog.push(None);
        }
    }
    Ok(curve)
}

/// One curve per group label, groups in order of first appearance.
pub fn km_by_group(data: &SurvData, conf_level: f64, ci_kind: CiKind) -> Result<Vec<(String, KmCurve)>> {
    let groups = data.group.as_ref().ok_or_else(|| Error::Spec("a group column is required".into()))?;
    let mut out = Vec::new();
    for label in distinct(groups) {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| groups[i] == label).collect();
        out.push((label, km_rows(data, &rows, conf_level, ci_kind)?));
    }
    Ok(out)
}

fn distinct(labels: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for l in labels {
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    out
}

/// Two-sample log-rank test with hypergeometric variance at tied times.
pub fn logrank_test(data: &SurvData) -> Result<TestResult> {
    let groups = data.group.as_ref().ok_or_else(|| Error::Spec("a group column is required".into()))?;
    let levels = distinct(groups);
    if levels.len() != 2 {
        return Err(Error::Spec(format!("log-rank needs exactly two groups, found {}", levels.len())));
    }
    let in1: Vec<bool> = groups.iter().map(|g| *g == levels[0]).collect();
    let rows: Vec<usize> = (0..data.n()).collect();
    let (mut oe, mut var) = (0.0, 0.0);
    for (t, r, d) in data.failure_table(&rows) {
        let r1 = rows.iter().filter(|&&i| in1[i] && data.time[i] >= t).count() as f64;
        let x1 = rows.iter().filter(|&&i| in1[i] && data.time[i] == t && data.event[i] == 1.0).count() as f64;
        let (r, d) = (r as f64, d as f64);
        let frac = r1 / r;
        oe += x1 - d * frac;
        if r > 1.0 {
            var += d * frac * (1.0 - frac) * (r - d) / (r - 1.0);
        }
    }
    if var <= 0.0 {
        return Err(Error::Degenerate("log-rank variance is zero".into()));
    }
    Ok(TestResult::chisq(oe * oe / var, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieMethod {
    Breslow,
    Efron,
}

impl TieMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TieMethod::Breslow => "breslow",
            TieMethod::Efron => "efron",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoxFit {
    pub names: Vec<String>,
    pub beta: Array1<f64>,
    pub loglik: f64,
    pub loglik_null: f64,
    /// Observed information `-H` at the estimate.
    pub information: Array2<f64>,
    pub cov: Array2<f64>,
    pub se: Array1<f64>,
    pub score_test: TestResult,
    pub ties: TieMethod,
    pub converged: bool,
    pub iterations: usize,
}

struct PartialLik {
    loglik: f64,
    score: Array1<f64>,
    info: Array2<f64>,
}

/// Rows ordered by time with each block of equal times.
fn time_blocks(time: ArrayView1<f64>) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..time.len()).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match blocks.last_mut() {
            Some(b) if time[b[0]] == time[i] => b.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

fn outer_add(m: &mut Array2<f64>, x: ArrayView1<f64>, w: f64) {
    let p = x.len();
    for a in 0..p {
        for b in 0..p {
            m[[a, b]] += w * x[a] * x[b];
        }
    }
}

fn partial_lik(data: &SurvData, x: ArrayView2<f64>, beta: ArrayView1<f64>, ties: TieMethod, blocks: &[Vec<usize>]) -> PartialLik {
    let p = x.ncols();
    let eta = x.dot(&beta);
    // center the linear predictor to keep exp in range; cancels in ratios
    let shift = eta.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let w: Array1<f64> = eta.mapv(|e| (e - shift).exp());
    let mut s0 = 0.0;
    let mut s1 = Array1::<f64>::zeros(p);
    let mut s2 = Array2::<f64>::zeros((p, p));
    let mut loglik = 0.0;
    let mut score = Array1::<f64>::zeros(p);
    let mut info = Array2::<f64>::zeros((p, p));
    // blocks run from the largest time down, so the risk set only grows
    for block in blocks {
        for &i in block {
            s0 += w[i];
            s1.scaled_add(w[i], &x.row(i));
            outer_add(&mut s2, x.row(i), w[i]);
        }
        let deaths: Vec<usize> = block.iter().copied().filter(|&i| data.event[i] == 1.0).collect();
        if deaths.is_empty() {
            continue;
        }
        let d = deaths.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = Array1::<f64>::zeros(p);
        let mut d2 = Array2::<f64>::zeros((p, p));
        for &i in &deaths {
            loglik += eta[i] - shift;
            score += &x.row(i);
            d0 += w[i];
            d1.scaled_add(w[i], &x.row(i));
            outer_add(&mut d2, x.row(i), w[i]);
        }
        for l in 0..deaths.len() {
            let frac = match ties {
                TieMethod::Breslow => 0.0,
                TieMethod::Efron => l as f64 / d,
            };
            let den = s0 - frac * d0;
            let num1 = &s1 - &(&d1 * frac);
            let num2 = &s2 - &(&d2 * frac);
            loglik -= den.ln();
            let mean = &num1 / den;
            score -= &mean;
            info += &(&num2 / den);
            outer_add(&mut info, mean.view(), -1.0);
        }
    }
    PartialLik { loglik, score, info }
}

fn cox_design(data: &SurvData) -> Result<ArrayView2<'_, f64>> {
    let x = data.x.as_ref().ok_or_else(|| Error::Spec("Cox regression needs covariates".into()))?;
    if x.ncols() == 0 {
        return Err(Error::Spec("Cox regression needs covariates".into()));
    }
    if (0..x.ncols()).any(|j| x.column(j).iter().all(|&v| v == 1.0)) {
        return Err(Error::Spec("Cox design must not contain an intercept column".into()));
    }
    Ok(x.view())
}

/// Score test of `beta = 0`.
pub fn cox_score_test(data: &SurvData, ties: TieMethod) -> Result<TestResult> {
    let x = cox_design(data)?;
    let blocks = time_blocks(data.time.view());
    let pl = partial_lik(data, x, Array1::zeros(x.ncols()).view(), ties, &blocks);
    let u = linalg::solve_spd(pl.info.view(), pl.score.view())
        .map_err(|_| Error::Singular("information at zero is singular".into()))?;
    Ok(TestResult::chisq(pl.score.dot(&u), x.ncols() as f64))
}

pub const COX_TOL: f64 = 1e-8;
pub const COX_MAX_ITER: usize = 50;

pub fn cox_fit(data: &SurvData, ties: TieMethod) -> Result<CoxFit> {
    let x = cox_design(data)?;
    let p = x.ncols();
    let blocks = time_blocks(data.time.view());
    let ranges: Vec<f64> = (0..p)
        .map(|j| {
            let c = x.column(j);
            c.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - c.iter().fold(f64::INFINITY, |m, &v| m.min(v))
        })
        .collect();
    let score_test = cox_score_test(data, ties)?;
    let mut beta = Array1::<f64>::zeros(p);
    let mut pl = partial_lik(data, x, beta.view(), ties, &blocks);
    let loglik_null = pl.loglik;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=COX_MAX_ITER {
        if pl.score.iter().fold(0.0f64, |m, v| m.max(v.abs())) < COX_TOL {
            converged = true;
            iterations = it - 1;
            break;
        }
        iterations = it;
        let step = linalg::solve_spd(pl.info.view(), pl.score.view())
            .map_err(|_| Error::Separation("partial-likelihood information became singular".into()))?;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..=20 {
            let cand = &beta + &(&step * t);
            let cpl = partial_lik(data, x, cand.view(), ties, &blocks);
            if cpl.loglik.is_finite() && cpl.loglik >= pl.loglik - 1e-12 * pl.loglik.abs() {
                next = Some((cand, cpl));
                break;
            }
            t *= 0.5;
        }
        let Some((nb, npl)) = next else {
            converged = pl.score.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-6;
            break;
        };
        if nb.iter().zip(&ranges).any(|(b, r)| (b * r).abs() > 50.0) {
            return Err(Error::Separation("coefficients diverge: monotone partial likelihood".into()));
        }
        beta = nb;
        pl = npl;
    }
    if !converged {
        return Err(Error::Convergence { iterations, msg: "Cox Newton".into() });
    }
    let cov = linalg::spd_inverse(pl.info.view())?;
    let se = cov.diag().mapv(f64::sqrt);
    Ok(CoxFit {
        names: data.names.clone(),
        beta,
        loglik: pl.loglik,
        loglik_null,
        information: pl.info,
        cov,
        se,
        score_test,
        ties,
        converged,
        iterations,
    })
}

/// Score vector at `beta` (exposed for optimality checks).
pub fn cox_score(data: &SurvData, beta: ArrayView1<f64>, ties: TieMethod) -> Result<Array1<f64>> {
    let x = cox_design(data)?;
    Ok(partial_lik(data, x, beta, ties, &time_blocks(data.time.view())).score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_design, load_csv, DesignSpec, Term};
    use crate::rng;
    use ndarray::array;
    use rand::Rng;

    fn gehan() -> SurvData {
        let table = load_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/gehan.csv")).unwrap();
        let mut spec = DesignSpec::new("time", vec![Term::dummy("treat", Some("6-MP"))]);
        spec.intercept = false;
        spec.event = Some("cens".into());
        let mm = build_design(&table, &spec).unwrap();
        let group = table.column("treat").unwrap().labels();
        SurvData::from_model_matrix(&mm).unwrap().with_group(group).unwrap()
    }

    #[test]
    fn km_hand_example() {
        let d = SurvData::new(array![1.0, 2.0, 3.0, 4.0], array![1.0, 0.0, 1.0, 0.0]).unwrap();
        let km = km_fit(&d, 0.95, CiKind::LogLog).unwrap();
        assert_eq!(km.times, vec![1.0, 3.0]);
        assert_eq!(km.n_risk, vec![4, 2]);
        assert!((km.surv_at(3.0) - 0.375).abs() < 1e-15);
        assert_eq!(km.surv_at(0.5), 1.0);
        assert_eq!(km.surv_at(2.9), 0.75);
    }

    #[test]
    fn km_without_censoring() {
        let mut r = rng::seeded(1);
        let n = 25;
        let t: Array1<f64> = (0..n).map(|_| (r.random::<f64>() * 10.0).ceil()).collect();
        let d = SurvData::new(t.clone(), Array1::ones(n)).unwrap();
        let km = km_fit(&d, 0.9, CiKind::Log).unwrap();
        for (k, &tk) in km.times.iter().enumerate() {
            let frac = t.iter().filter(|&&v| v > tk).count() as f64 / n as f64;
            assert_eq!(km.surv[k], frac);
            if frac > 0.0 {
                let gw = km.var_surv()[k];
                assert!((gw - frac * (1.0 - frac) / n as f64).abs() < 1e-10);
            } else {
                assert!(km.ci_log[k].is_none() && km.ci_loglog[k].is_none());
            }
        }
        assert!(km.surv.windows(2).all(|w| w[1] <= w[0]));
        assert!(km.n_risk.windows(2).all(|w| w[1] < w[0]));
        for (s, ci) in km.surv.iter().zip(&km.ci_loglog) {
            if let Some((lo, hi)) = ci {
                assert!(*lo <= *s && *s <= *hi && *lo >= 0.0 && *hi <= 1.0);
            }
        }
    }

    #[test]
    fn gehan_logrank_and_cox() {
        let d = gehan();
        let lr = logrank_test(&d).unwrap();
        assert!((lr.statistic - 16.8).abs() < 0.1, "{}", lr.statistic);
        assert!(lr.p_value < 1e-4 && lr.p_value > 1e-5);
        let fit = cox_fit(&d, TieMethod::Efron).unwrap();
        assert!((fit.beta[0] - 1.5721).abs() < 1e-3, "{}", fit.beta[0]);
        assert!((fit.se[0] - 0.4124).abs() < 1e-3, "{}", fit.se[0]);
        assert!((fit.score_test.statistic - 17.25).abs() < 0.1, "{}", fit.score_test.statistic);
        assert!(cox_score(&d, fit.beta.view(), TieMethod::Efron).unwrap()[0].abs() < 1e-8);
        assert!(fit.information[[0, 0]] > 0.0);
        let b = cox_fit(&d, TieMethod::Breslow).unwrap();
        assert!((b.beta[0] - 1.5).abs() < 0.1);
    }

    #[test]
    fn logrank_symmetries() {
        let d = gehan();
        let a = logrank_test(&d).unwrap().statistic;
        let swapped: Vec<String> = d.group.as_ref().unwrap().iter().rev().cloned().collect();
        let rows: Vec<usize> = (0..d.n()).rev().collect();
        let d2 = SurvData::new(d.time.select(ndarray::Axis(0), &rows), d.event.select(ndarray::Axis(0), &rows))
            .unwrap()
            .with_group(swapped)
            .unwrap();
        assert!((logrank_test(&d2).unwrap().statistic - a).abs() < 1e-10);

        // two identical copies, one per group
        let t = array![3.0, 5.0, 5.0, 8.0, 9.0];
        let e = array![1.0, 1.0, 0.0, 1.0, 1.0];
        let tt = ndarray::concatenate![ndarray::Axis(0), t, t];
        let ee = ndarray::concatenate![ndarray::Axis(0), e, e];
        let g: Vec<String> = (0..10).map(|i| if i < 5 { "a" } else { "b" }.to_string()).collect();
        let d3 = SurvData::new(tt, ee).unwrap().with_group(g).unwrap();
        let r = logrank_test(&d3).unwrap();
        assert!(r.statistic.abs() < 1e-15 && (r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_test_equals_logrank_without_ties() {
        let mut r = rng::seeded(3);
        let n = 60;
        let grp: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let t: Array1<f64> = grp.iter().map(|&g| -r.random::<f64>().ln() / (1.0 + g)).collect();
        let e: Array1<f64> = (0..n).map(|_| f64::from(r.random::<f64>() < 0.8)).collect();
        let labels: Vec<String> = grp.iter().map(|g| g.to_string()).collect();
        let x = Array2::from_shape_vec((n, 1), grp).unwrap();
        let d = SurvData::new(t, e).unwrap().with_group(labels).unwrap().with_covariates(x, vec!["g".into()]).unwrap();
        let lr = logrank_test(&d).unwrap().statistic;
        for ties in [TieMethod::Breslow, TieMethod::Efron] {
            let sc = cox_score_test(&d, ties).unwrap().statistic;
            assert!((lr - sc).abs() < 1e-10);
        }
    }

    #[test]
    fn score_at_zero_is_risk_set_contrast() {
        let d = SurvData::new(array![2.0, 4.0, 1.0, 3.0], array![1.0, 1.0, 0.0, 1.0])
            .unwrap()
            .with_covariates(array![[1.0], [3.0], [2.0], [0.5]], vec!["x".into()])
            .unwrap();
        let u = cox_score(&d, array![0.0].view(), TieMethod::Breslow).unwrap();
        // deaths at 2 (risk {2,4,3}), 3 (risk {4,3}), 4 (risk {4})
        let expect = (1.0 - (1.0 + 3.0 + 0.5) / 3.0) + (0.5 - (3.0 + 0.5) / 2.0) + (3.0 - 3.0);
        assert!((u[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn time_transform_invariance() {
        let d = gehan();
        let d2 = SurvData {
            time: d.time.mapv(|t| (t * 0.3).exp()),
            ..d.clone()
        };
        let (a, b) = (cox_fit(&d, TieMethod::Efron).unwrap(), cox_fit(&d2, TieMethod::Efron).unwrap());
        assert!((a.beta[0] - b.beta[0]).abs() < 1e-10);
        assert!((logrank_test(&d).unwrap().statistic - logrank_test(&d2).unwrap().statistic).abs() < 1e-10);
        let (k1, k2) = (km_fit(&d, 0.95, CiKind::Log).unwrap(), km_fit(&d2, 0.95, CiKind::Log).unwrap());
        for (u, v) in k1.surv.iter().zip(&k2.surv) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn separation_and_singular_information() {
        let t = array![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let d = SurvData::new(t.clone(), Array1::ones(6))
            .unwrap()
            .with_covariates(array![[6.0], [5.0], [4.0], [3.0], [2.0], [1.0]], vec!["x".into()])
            .unwrap();
        assert!(matches!(cox_fit(&d, TieMethod::Efron), Err(Error::Separation(_))));
        let flat = SurvData::new(t, Array1::ones(6)).unwrap().with_covariates(Array2::from_elem((6, 1), 2.0), vec!["x".into()]).unwrap();
        assert!(matches!(cox_score_test(&flat, TieMethod::Efron), Err(Error::Singular(_))));
    }

    #[test]
    fn minimum_of_exponentials() {
        let c = [1.0, 2.0, 3.0, 4.0];
        let total: f64 = c.iter().sum();
        let reps = 20_000;
        let mut r = rng::seeded(9);
        let mut wins = [0usize; 4];
        for _ in 0..reps {
            let (k, _) = c
                .iter()
                .map(|ci| -r.random::<f64>().ln() / (0.7 * ci))
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            wins[k] += 1;
        }
        for (ci, w) in c.iter().zip(wins) {
            let p = ci / total;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((w as f64 / reps as f64 - p).abs() < 3.0 * se);
        }
    }

    #[test]
    fn input_validation() {
        assert!(SurvData::new(array![0.0, 1.0], array![1.0, 1.0]).is_err());
        assert!(matches!(SurvData::new(array![1.0, 2.0], array![0.0, 0.0]), Err(Error::InsufficientData(_))));
        let d = SurvData::new(array![1.0, 2.0], array![1.0, 1.0]).unwrap().with_group(vec!["a".into(), "a".into()]).unwrap();
        assert!(matches!(logrank_test(&d), Err(Error::Spec(_))));
    }
}

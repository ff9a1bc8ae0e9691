use linmod::dataset::{self, build_design, load_csv, DataTable, DesignSpec, ModelMatrix, Term};
use linmod::diagnostics;
use linmod::gee::{self, CorStruct, PanelData};
use linmod::glm::{self, Family, Link};
use linmod::ols::{self, OlsFit, PredictionKind, TestResult};
use linmod::quantile;
use linmod::robust::{self, CovEstimate, HcKind};
use linmod::shrinkage::{self, CdOptions};
use linmod::simulate::{self, SimParams};
use linmod::survival::{self, CiKind, SurvData, TieMethod};
use linmod::{dist, Error, Result};
use ndarray::Array1;
use serde_json::{Map, Value};

use crate::report::{num, nums, Coef, Report};
use crate::{
    CiArg, Command, CoxArgs, DataArgs, DiagnoseArgs, FamilyArg, FitArgs, GeeArgs, GlmArgs, KmArgs, LassoArgs,
    LogrankArgs, RidgeArgs, RqArgs, SeKind, SimulateArgs, SurvCommand, SurvDataArgs, TiesArg, WlsArgs,
};

pub fn run(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Wls(a) => wls(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Ridge(a) => ridge(a),
        Command::Lasso(a) => lasso(a),
        Command::Glm(a) => glm_cmd(a),
        Command::Gee(a) => gee_cmd(a),
        Command::Rq(a) => rq(a),
        Command::Surv(SurvCommand::Km(a)) => km(a),
        Command::Surv(SurvCommand::Logrank(a)) => logrank(a),
        Command::Surv(SurvCommand::Cox(a)) => cox(a),
        Command::Simulate(a) => simulate_cmd(a),
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("level {level} outside (0, 1)")))
    }
}

fn parse_terms(covariates: &[String], dummies: &[String], interactions: &[String]) -> Result<Vec<Term>> {
    let mut terms: Vec<Term> = covariates.iter().filter(|c| !c.is_empty()).map(|c| Term::numeric(c)).collect();
    for d in dummies {
        terms.push(match d.split_once(':') {
            Some((col, reference)) => Term::dummy(col, Some(reference)),
            None => Term::dummy(d, None),
        });
    }
    for spec in interactions {
        let mut parts = spec.split(':').filter(|s| !s.is_empty()).map(Term::numeric);
        let first = parts.next();
        let term = parts.fold(first, |acc, t| acc.map(|a| Term::interaction(a, t)));
        match term {
            Some(t @ Term::Interaction(..)) => terms.push(t),
            _ => return Err(Error::Spec(format!("interaction `{spec}` needs at least two columns"))),
        }
    }
    Ok(terms)
}

fn design(d: &DataArgs, cmd: &str, weights_ok: bool, cluster_ok: bool) -> Result<(DataTable, ModelMatrix)> {
    if d.weights.is_some() && !weights_ok {
        return Err(Error::Spec(format!("--weights is not used by `{cmd}`")));
    }
    if d.cluster.is_some() && !cluster_ok {
        return Err(Error::Spec(format!("--cluster is not used by `{cmd}`")));
    }
    let table = load_csv(&d.data)?;
    let mut spec = DesignSpec::new(&d.response, parse_terms(&d.covariates, &d.dummy, &d.interaction)?);
    spec.intercept = !d.no_intercept;
    spec.weights = d.weights.clone();
    spec.cluster = d.cluster.clone();
    let mm = build_design(&table, &spec)?;
    Ok((table, mm))
}

fn clusters(mm: &ModelMatrix) -> Result<&[String]> {
    mm.cluster
        .as_deref()
        .ok_or_else(|| Error::Spec("cluster standard errors need --cluster".into()))
}

fn unsupported(se: SeKind, cmd: &str) -> Error {
    let name = format!("{se:?}").to_lowercase();
    Error::Spec(format!("--se {name} is not available for `{cmd}`"))
}

/// Parses a comma-separated `--new-x` value and prepends the intercept when
/// the design has one.
fn new_row(mm: &ModelMatrix, text: &str) -> Result<Array1<f64>> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::Spec(format!("--new-x `{text}`: {e}")))?;
    let mut row = Vec::with_capacity(mm.p());
    if mm.has_intercept() {
        row.push(1.0);
    }
    row.extend_from_slice(&values);
    if row.len() != mm.p() {
        return Err(Error::Spec(format!(
            "--new-x has {} values but the design has {} covariate columns",
            values.len(),
            mm.covariate_names().len()
        )));
    }
    Ok(Array1::from(row))
}

fn push_tests(report: &mut Report, names: &[String], beta: &Array1<f64>, se: &Array1<f64>, tests: &[TestResult]) {
    for (j, name) in names.iter().enumerate() {
        report.coefficients.push(Coef::new(name, beta[j], se[j], tests.get(j)));
    }
}

fn normal_tests(beta: &Array1<f64>, se: &Array1<f64>) -> Vec<TestResult> {
    beta.iter().zip(se).map(|(b, s)| TestResult::normal(b / s)).collect()
}

fn ols_cov(fit: &OlsFit, mm: &ModelMatrix, se: SeKind, cmd: &str) -> Result<CovEstimate> {
    let hc = |k| robust::hc_covariance(fit, k);
    match se {
        SeKind::Classic => Ok(robust::classic_cov(fit)),
        SeKind::Hc0 | SeKind::Sandwich => hc(HcKind::Hc0),
        SeKind::Hc1 => hc(HcKind::Hc1),
        SeKind::Hc2 => hc(HcKind::Hc2),
        SeKind::Hc3 => hc(HcKind::Hc3),
        SeKind::Hc4 => hc(HcKind::Hc4),
        SeKind::Cluster => robust::ols_cluster_cov(fit, clusters(mm)?),
        SeKind::Jackknife => diagnostics::jackknife_cov(fit),
        other => Err(unsupported(other, cmd)),
    }
}

fn ols_report(kind: &str, fit: &OlsFit, cov: &CovEstimate) -> Report {
    let mut r = Report::new(kind);
    r.stat_label = "t value";
    r.covariance_kind = Some(cov.kind.as_str().to_string());
    let tests = ols::coefficient_tests(fit, &cov.se);
    push_tests(&mut r, &fit.names, &fit.beta, &cov.se, &tests);
    r.stat("n", fit.n() as f64);
    r.stat("df_residual", fit.df_residual as f64);
    r.stat("sigma2", fit.sigma2_hat);
    if let (Some(r2), Some(adj)) = (fit.r2, fit.adj_r2) {
        r.stat("r2", r2);
        r.stat("adj_r2", adj);
        let (n, p) = (fit.n() as f64, fit.p() as f64);
        if fit.p() > 1 && r2 < 1.0 {
            let f = (r2 / (p - 1.0)) / ((1.0 - r2) / (n - p));
            r.stat("f_statistic", f);
            r.stat("f_p_value", dist::f_sf(f, p - 1.0, Some(n - p)));
        }
    }
    r
}

fn fit(a: &FitArgs) -> Result<Report> {
    check_level(a.common.level)?;
    let (_, mm) = design(&a.data, "fit", false, true)?;
    let fit = ols::fit_ols(&mm)?;
    let cov = ols_cov(&fit, &mm, a.se, "fit")?;
    let mut r = ols_report("ols", &fit, &cov);
    if !a.new_x.is_empty() {
        let mut cols: Vec<(&str, Vec<f64>)> = ["fit", "se_fit", "ci_lower", "ci_upper", "pi_lower", "pi_upper"]
            .iter()
            .map(|k| (*k, Vec::new()))
            .collect();
        for values in &a.new_x {
            let row = new_row(&mm, values)?;
            let ci = ols::predict(&fit, row.view(), PredictionKind::Mean, a.common.level)?;
            let pi = ols::predict(&fit, row.view(), PredictionKind::Observation, a.common.level)?;
            for (k, v) in [ci.point, ci.se, ci.interval.0, ci.interval.1, pi.interval.0, pi.interval.1].into_iter().enumerate() {
                cols[k].1.push(v);
            }
        }
        let block: Map<String, Value> = cols.into_iter().map(|(k, v)| (k.to_string(), nums(v))).collect();
        r.diag("predictions", Value::Object(block));
    }
    Ok(r)
}

fn wls(a: &WlsArgs) -> Result<Report> {
    let (_, mm) = design(&a.data, "wls", !a.fgls, false)?;
    let (wfit, kind, gamma) = if a.fgls {
        let (w, g) = robust::fgls_fit(&mm)?;
        (w, "fgls", Some(g))
    } else {
        (robust::wls_fit(&mm)?, "wls", None)
    };
    let cov = match a.se {
        SeKind::Classic => CovEstimate::new(&wfit.xtwx_inv * wfit.sigma2_hat, robust::CovKind::Classic),
        SeKind::Sandwich | SeKind::Hc0 => robust::wls_sandwich(&wfit),
        other => return Err(unsupported(other, "wls")),
    };
    let mut r = Report::new(kind);
    r.stat_label = "t value";
    r.covariance_kind = Some(cov.kind.as_str().to_string());
    let df = (wfit.y.len() - wfit.beta_w.len()) as f64;
    let tests: Vec<TestResult> = wfit.beta_w.iter().zip(&cov.se).map(|(b, s)| TestResult::t(b / s, df)).collect();
    push_tests(&mut r, &wfit.names, &wfit.beta_w, &cov.se, &tests);
    r.stat("n", wfit.y.len() as f64);
    r.stat("df_residual", df);
    r.stat("sigma2", wfit.sigma2_hat);
    if let Some(g) = gamma {
        let block: Map<String, Value> = wfit.names.iter().zip(g.iter()).map(|(n, v)| (n.clone(), num(*v))).collect();
        r.diag("variance_model", Value::Object(block));
    }
    Ok(r)
}

fn diagnose(a: &DiagnoseArgs) -> Result<Report> {
    check_level(a.common.level)?;
    let (_, mm) = design(&a.data, "diagnose", false, false)?;
    let fit = ols::fit_ols(&mm)?;
    let mut r = ols_report("ols", &fit, &robust::classic_cov(&fit));
    let loo = diagnostics::loo_all(&fit)?;
    let infl = diagnostics::influence(&fit)?;
    r.stat("press", loo.press);
    r.stat("gcv", loo.gcv);
    let mut obs = Map::new();
    obs.insert("leverage".into(), nums(fit.leverage.iter().copied()));
    obs.insert("residual".into(), nums(fit.residuals.iter().copied()));
    obs.insert("loo_residual".into(), nums(loo.pred_residuals.iter().copied()));
    obs.insert("standardized".into(), nums(infl.standardized.iter().copied()));
    obs.insert("studentized".into(), nums(infl.studentized.iter().copied()));
    obs.insert("cook".into(), nums(infl.cook.iter().copied()));
    r.diag("observations", Value::Object(obs));
    let jk = diagnostics::jackknife_cov(&fit)?;
    let block: Map<String, Value> = fit.names.iter().zip(jk.se.iter()).map(|(n, v)| (n.clone(), num(*v))).collect();
    r.diag("jackknife_se", Value::Object(block));
    match diagnostics::vif(&fit) {
        Ok(v) => {
            let block: Map<String, Value> = v.into_iter().map(|(n, x)| (n, num(x))).collect();
            r.diag("vif", Value::Object(block));
        }
        Err(e) => r.warnings.push(format!("vif skipped: {e}")),
    }
    if !a.new_x.is_empty() {
        let (mut lo, mut hi, mut edge) = (Vec::new(), Vec::new(), Vec::new());
        for values in &a.new_x {
            let row = new_row(&mm, values)?;
            let ci = diagnostics::conformal_interval(&mm, row.view(), 1.0 - a.common.level, None)?;
            lo.push(ci.lo);
            hi.push(ci.hi);
            edge.push(Value::Bool(ci.at_boundary));
            if ci.at_boundary {
                r.warnings.push("conformal interval reaches the edge of the grid".into());
            }
        }
        let mut block = Map::new();
        block.insert("lower".into(), nums(lo));
        block.insert("upper".into(), nums(hi));
        block.insert("at_grid_edge".into(), Value::Array(edge));
        r.diag("conformal", Value::Object(block));
    }
    Ok(r)
}

fn ridge(a: &RidgeArgs) -> Result<Report> {
    let (_, mm) = design(&a.data, "ridge", false, false)?;
    let (std_mm, st) = dataset::standardize(&mm)?;
    let lambdas = match a.lambda {
        Some(l) => vec![l],
        None => shrinkage::default_ridge_grid(mm.n(), 100),
    };
    let mut path = shrinkage::ridge_path(&std_mm, &lambdas)?;
    let lam = if a.lambda.is_some() { lambdas[0] } else { shrinkage::gcv_lambda(&path) };
    let k = path.lambdas.iter().position(|&l| l == lam).unwrap_or(0);
    let mut r = Report::new("ridge");
    match shrinkage::ridge_tune(&path, None) {
        Ok(t) => {
            r.stat("gcv_lambda", t.gcv_lambda);
            r.stat("hkb_lambda", t.hkb_lambda);
            r.stat("lw_lambda", t.lw_lambda);
        }
        Err(e) => r.warnings.push(format!("HKB and LW penalties skipped: {e}")),
    }
    let slopes = path.back_transform(&st);
    r.coefficients.push(Coef::bare(dataset::INTERCEPT, path.intercept_back[k]));
    for (name, b) in std_mm.names.iter().zip(slopes.row(k)) {
        r.coefficients.push(Coef::bare(name, *b));
    }
    r.stat("lambda", lam);
    r.stat("df", path.df[k]);
    r.stat("gcv", path.gcv[k]);
    r.stat("press", path.press[k]);
    if a.lambda.is_none() {
        let mut block = Map::new();
        block.insert("lambda".into(), nums(path.lambdas.iter().copied()));
        block.insert("df".into(), nums(path.df.iter().copied()));
        block.insert("gcv".into(), nums(path.gcv.iter().copied()));
        r.diag("path", Value::Object(block));
    }
    Ok(r)
}

fn lasso(a: &LassoArgs) -> Result<Report> {
    let (_, mm) = design(&a.data, "lasso", false, false)?;
    let mut r = Report::new(if a.alpha == 0.0 { "lasso" } else { "elastic-net" });
    r.stat("alpha", a.alpha);
    let (b0, b, names) = match (a.lambda, a.cv) {
        (Some(lam), None) => {
            let (std_mm, st) = dataset::standardize(&mm)?;
            let beta = shrinkage::enet_cd(std_mm.x.view(), std_mm.y.view(), lam, a.alpha, CdOptions::default(), None)?;
            r.stat("lambda", lam);
            let (b0, b) = st.back_transform(&beta);
            (b0, b, std_mm.names)
        }
        (None, Some(k)) => {
            let cv = shrinkage::cv_path(&mm, a.alpha, k, a.common.seed, 100)?;
            let i = cv.index_min;
            r.stat("lambda", cv.lambda_min);
            r.stat("cv_error", cv.cv_errors[i]);
            r.stat("cv_se", cv.cv_se[i]);
            r.stat("folds", k as f64);
            if cv.path.converged.iter().any(|c| !c) {
                r.warnings.push("coordinate descent hit the sweep limit on part of the path".into());
            }
            let mut block = Map::new();
            block.insert("lambda".into(), nums(cv.path.lambdas.iter().copied()));
            block.insert("cv_error".into(), nums(cv.cv_errors.iter().copied()));
            block.insert("cv_se".into(), nums(cv.cv_se.iter().copied()));
            r.diag("path", Value::Object(block));
            let (b0, b) = cv.coefficients(i);
            (b0, b, mm.covariate_names().to_vec())
        }
        _ => return Err(Error::Spec("lasso needs --lambda or --cv".into())),
    };
    r.stat("nonzero", b.iter().filter(|v| **v != 0.0).count() as f64);
    r.coefficients.push(Coef::bare(dataset::INTERCEPT, b0));
    for (name, v) in names.iter().zip(b.iter()) {
        r.coefficients.push(Coef::bare(name, *v));
    }
    Ok(r)
}

fn family(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Logit => Family::Binary(Link::Logit),
        FamilyArg::Probit => Family::Binary(Link::Probit),
        FamilyArg::Cloglog => Family::Binary(Link::Cloglog),
        FamilyArg::Cauchit => Family::Binary(Link::Cauchit),
        FamilyArg::Poisson => Family::Poisson,
        FamilyArg::Negbin => Family::NegBin(1.0),
        FamilyArg::Gaussian => Family::Gaussian,
    }
}

fn glm_cmd(a: &GlmArgs) -> Result<Report> {
    let (_, mm) = design(&a.data, "glm", false, true)?;
    let fit = match a.family {
        FamilyArg::Negbin => glm::negbin_fit(&mm)?,
        f => glm::glm_fit(family(f), &mm)?,
    };
    let cov = match a.se {
        SeKind::Model | SeKind::Classic => glm::glm_model_cov(&fit)?,
        SeKind::Sandwich | SeKind::Hc0 => glm::glm_sandwich(&fit)?,
        SeKind::Cluster => glm::glm_cluster_cov(&fit, clusters(&mm)?)?,
        other => return Err(unsupported(other, "glm")),
    };
    let mut r = Report::new("glm");
    r.stat_label = "z value";
    r.covariance_kind = Some(cov.kind.as_str().to_string());
    r.diag("family", Value::String(fit.family.name().to_string()));
    let tests = glm::coefficient_tests(&fit, &cov.se);
    push_tests(&mut r, &fit.names, &fit.beta, &cov.se, &tests);
    r.stat("n", fit.n() as f64);
    r.stat("loglik", fit.loglik);
    r.stat("deviance", fit.deviance);
    r.stat("aic", fit.aic);
    r.stat("iterations", fit.iterations as f64);
    if matches!(fit.family, Family::Gaussian) {
        r.stat("dispersion", fit.dispersion);
    }
    if let Some(t) = fit.theta {
        r.stat("theta", t);
        r.stat("theta_se", fit.theta_se.unwrap_or(f64::NAN));
    }
    if fit.has_intercept() && fit.p() > 1 {
        let d = glm::deviance_aic(&fit)?;
        r.stat("null_deviance", d.null_deviance);
        r.stat("lr_statistic", d.lr_test.statistic);
        r.stat("lr_df", d.lr_test.df1);
        r.stat("lr_p_value", d.lr_test.p_value);
    }
    if !a.new_x.is_empty() {
        let (mut mean, mut se) = (Vec::new(), Vec::new());
        for values in &a.new_x {
            let row = new_row(&mm, values)?;
            let (m, s) = glm::glm_predict(&fit, row.view(), true)?;
            mean.push(m);
            se.push(s);
        }
        let mut block = Map::new();
        block.insert("mean".into(), nums(mean));
        block.insert("se".into(), nums(se));
        r.diag("predictions", Value::Object(block));
    }
    r.warnings.extend(fit.warnings.iter().cloned());
    Ok(r)
}

fn gee_cmd(a: &GeeArgs) -> Result<Report> {
    if a.data.cluster.is_none() {
        return Err(Error::Spec("gee needs --cluster".into()));
    }
    let (_, mm) = design(&a.data, "gee", false, true)?;
    let panel = PanelData::from_model_matrix(&mm)?;
    let corstr = match a.corstr {
        crate::CorArg::Independence => CorStruct::Independence,
        crate::CorArg::Exchangeable => CorStruct::Exchangeable,
    };
    let fit = gee::gee_fit(&panel, family(a.family), corstr, a.tol, a.max_iter)?;
    let cov = match a.se {
        SeKind::Sandwich | SeKind::Cluster => gee::lz_cov(&fit, &panel)?,
        SeKind::Model => gee::naive_cov(&fit),
        other => return Err(unsupported(other, "gee")),
    };
    let mut r = Report::new("gee");
    r.stat_label = "z value";
    r.covariance_kind = Some(cov.kind.as_str().to_string());
    r.diag("family", Value::String(fit.family.name().to_string()));
    r.diag("corstr", Value::String(fit.corstr.as_str().to_string()));
    let tests = normal_tests(&fit.beta, &cov.se);
    push_tests(&mut r, &panel.names, &fit.beta, &cov.se, &tests);
    r.stat("n", panel.y.len() as f64);
    r.stat("clusters", panel.n_clusters() as f64);
    r.stat("max_cluster_size", panel.max_size() as f64);
    r.stat("scale", fit.scale);
    r.stat("iterations", fit.iterations as f64);
    if let Some(rho) = fit.rho {
        r.stat("rho", rho);
    }
    r.warnings.extend(fit.warnings.iter().cloned());
    Ok(r)
}

fn rq(a: &RqArgs) -> Result<Report> {
    let (_, mm) = design(&a.data, "rq", false, false)?;
    let fit = quantile::rq_fit(&mm, a.tau)?;
    let cov = match a.se {
        SeKind::Powell | SeKind::Sandwich => match a.bandwidth {
            Some(h) => quantile::rq_powell_cov_with(&fit, mm.x.view(), h)?,
            None => quantile::rq_powell_cov(&fit, mm.x.view())?,
        },
        SeKind::Boot => quantile::rq_bootstrap_cov(&mm, a.tau, a.reps, a.common.seed)?,
        other => return Err(unsupported(other, "rq")),
    };
    let mut r = Report::new("rq");
    r.stat_label = "z value";
    r.covariance_kind = Some(cov.kind.as_str().to_string());
    let tests = normal_tests(&fit.beta, &cov.se);
    push_tests(&mut r, &fit.names, &fit.beta, &cov.se, &tests);
    r.stat("tau", fit.tau);
    r.stat("n", mm.n() as f64);
    r.stat("objective", fit.objective);
    r.stat("iterations", fit.iterations as f64);
    if !fit.bracket_holds() {
        r.warnings.push("subgradient bracket check failed".into());
    }
    Ok(r)
}

fn surv_columns(s: &SurvDataArgs) -> Result<(DataTable, SurvData)> {
    let table = load_csv(&s.data)?;
    let time = Array1::from(table.numeric(&s.time)?.to_vec());
    let event = Array1::from(table.numeric(&s.event)?.to_vec());
    Ok((table, SurvData::new(time, event)?))
}

fn curve_block(c: &survival::KmCurve) -> Value {
    let var = c.var_surv();
    let mut m = Map::new();
    m.insert("time".into(), nums(c.times.iter().copied()));
    m.insert("n_risk".into(), nums(c.n_risk.iter().map(|&v| v as f64)));
    m.insert("n_event".into(), nums(c.n_event.iter().map(|&v| v as f64)));
    m.insert("surv".into(), nums(c.surv.iter().copied()));
    m.insert("std_err".into(), nums(var.iter().map(|v| v.sqrt())));
    m.insert("lower".into(), nums(c.ci().iter().map(|ci| ci.map_or(f64::NAN, |x| x.0))));
    m.insert("upper".into(), nums(c.ci().iter().map(|ci| ci.map_or(f64::NAN, |x| x.1))));
    Value::Object(m)
}

fn km(a: &KmArgs) -> Result<Report> {
    check_level(a.common.level)?;
    let (table, mut data) = surv_columns(&a.surv)?;
    let kind = match a.ci {
        CiArg::Log => CiKind::Log,
        CiArg::Loglog => CiKind::LogLog,
    };
    let mut r = Report::new("km");
    r.stat("n", data.n() as f64);
    r.stat("events", data.event.sum());
    r.stat("level", a.common.level);
    r.diag("ci", Value::String(format!("{:?}", a.ci).to_lowercase()));
    let mut curves = Map::new();
    match &a.group {
        Some(g) => {
            data = data.with_group(table.column(g)?.labels())?;
            for (label, curve) in survival::km_by_group(&data, a.common.level, kind)? {
                curves.insert(label, curve_block(&curve));
            }
        }
        None => {
            curves.insert("all".into(), curve_block(&survival::km_fit(&data, a.common.level, kind)?));
        }
    }
    r.diag("curves", Value::Object(curves));
    Ok(r)
}

fn logrank(a: &LogrankArgs) -> Result<Report> {
    let (table, data) = surv_columns(&a.surv)?;
    let data = data.with_group(table.column(&a.group)?.labels())?;
    let t = survival::logrank_test(&data)?;
    let mut r = Report::new("logrank");
    r.stat("n", data.n() as f64);
    r.stat("statistic", t.statistic);
    r.stat("df", t.df1);
    r.stat("p_value", t.p_value);
    Ok(r)
}

fn cox(a: &CoxArgs) -> Result<Report> {
    check_level(a.common.level)?;
    let table = load_csv(&a.surv.data)?;
    let mut spec = DesignSpec::new(&a.surv.time, parse_terms(&a.covariates, &a.dummy, &a.interaction)?);
    spec.intercept = false;
    spec.event = Some(a.surv.event.clone());
    let mm = build_design(&table, &spec)?;
    if mm.p() == 0 {
        return Err(Error::Spec("cox needs at least one covariate".into()));
    }
    let data = SurvData::from_model_matrix(&mm)?;
    let ties = match a.ties {
        TiesArg::Efron => TieMethod::Efron,
        TiesArg::Breslow => TieMethod::Breslow,
    };
    let fit = survival::cox_fit(&data, ties)?;
    let mut r = Report::new("cox");
    r.stat_label = "z value";
    r.covariance_kind = Some("model".into());
    let tests = normal_tests(&fit.beta, &fit.se);
    push_tests(&mut r, &fit.names, &fit.beta, &fit.se, &tests);
    let lr = 2.0 * (fit.loglik - fit.loglik_null);
    let df = fit.beta.len() as f64;
    let wald = fit.beta.dot(&fit.information.dot(&fit.beta));
    r.stat("n", data.n() as f64);
    r.stat("events", data.event.sum());
    r.stat("loglik", fit.loglik);
    r.stat("loglik_null", fit.loglik_null);
    r.stat("lr_statistic", lr);
    r.stat("lr_p_value", dist::chisq_sf(lr, df));
    r.stat("score_statistic", fit.score_test.statistic);
    r.stat("score_p_value", fit.score_test.p_value);
    r.stat("wald_statistic", wald);
    r.stat("wald_p_value", dist::chisq_sf(wald, df));
    r.stat("iterations", fit.iterations as f64);
    r.diag("ties", Value::String(fit.ties.as_str().to_string()));
    let z = dist::normal_quantile(0.5 + a.common.level / 2.0);
    let mut hr = Map::new();
    hr.insert("name".into(), Value::Array(fit.names.iter().cloned().map(Value::String).collect()));
    hr.insert("exp_coef".into(), nums(fit.beta.iter().map(|b| b.exp())));
    hr.insert("lower".into(), nums(fit.beta.iter().zip(&fit.se).map(|(b, s)| (b - z * s).exp())));
    hr.insert("upper".into(), nums(fit.beta.iter().zip(&fit.se).map(|(b, s)| (b + z * s).exp())));
    r.diag("hazard_ratio", Value::Object(hr));
    Ok(r)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Report> {
    if !simulate::SUITES.contains(&a.suite.as_str()) {
        return Err(Error::Spec(format!(
            "unknown suite `{}`; expected one of {}",
            a.suite,
            simulate::SUITES.join(", ")
        )));
    }
    let params = SimParams { n: a.n, p: a.p, reps: a.reps, alpha: a.alpha };
    let rep = simulate::run_suite(&a.suite, &params, a.seed)?;
    let mut r = Report::new("simulate");
    for (k, v) in &rep.stats {
        r.stat(k, *v);
    }
    r.diag("suite", Value::String(rep.suite.clone()));
    r.diag("seed", Value::from(rep.seed));
    let params: Map<String, Value> = rep.params.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
    r.diag("params", Value::Object(params));
    Ok(r)
}

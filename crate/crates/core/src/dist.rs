//! Reference distributions (tail areas via statrs) and goodness-of-fit tests.

use statrs::distribution::{
    Beta, ChiSquared, Continuous, ContinuousCDF, FisherSnedecor, Normal, StudentsT,
};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn normal_sf(z: f64) -> f64 {
    std_normal().sf(z)
}

pub fn normal_pdf(z: f64) -> f64 {
    std_normal().pdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided p-value of a t statistic; `df = None` means the Normal limit.
pub fn t_two_sided(t: f64, df: Option<f64>) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    let tail = match df {
        Some(d) => StudentsT::new(0.0, 1.0, d)
            .expect("positive df")
            .sf(t.abs()),
        None => normal_sf(t.abs()),
    };
    (2.0 * tail).min(1.0)
}

pub fn t_quantile(p: f64, df: Option<f64>) -> f64 {
    match df {
        Some(d) => StudentsT::new(0.0, 1.0, d)
            .expect("positive df")
            .inverse_cdf(p),
        None => normal_quantile(p),
    }
}

pub fn t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive df").cdf(t)
}

/// Upper tail of F(d1, d2); `d2 = None` gives chi-square(d1)/d1.
pub fn f_sf(f: f64, d1: f64, d2: Option<f64>) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    match d2 {
        Some(d2) => FisherSnedecor::new(d1, d2).expect("positive df").sf(f),
        None => chisq_sf(f * d1, d1),
    }
}

pub fn chisq_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive df").sf(x)
}

pub fn chisq_quantile(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").inverse_cdf(p)
}

pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    Beta::new(a, b).expect("positive shape").cdf(x)
}

/// Kolmogorov limiting survival function `Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test. Returns `(D, p)`; the p-value uses
/// the Stephens small-sample adjustment of the limiting law.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d))
}

/// Pearson chi-square goodness of fit. Returns `(statistic, p)`.
pub fn chisq_gof(observed: &[f64], expected: &[f64]) -> (f64, f64) {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (observed.len() as f64 - 1.0).max(1.0);
    (stat, chisq_sf(stat, df))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails() {
        assert!((t_two_sided(0.0, Some(5.0)) - 1.0).abs() < 1e-12);
        assert!((t_two_sided(1.959963984540054, None) - 0.05).abs() < 1e-10);
        assert!((t_quantile(0.975, Some(10.0)) - 2.228138851986274).abs() < 1e-9);
        assert!((chisq_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-10);
        assert!((f_sf(4.964602743730711, 1.0, Some(10.0)) - 0.05).abs() < 1e-9);
        // F(1, d) tail equals two-sided t tail
        assert!((f_sf(2.5f64.powi(2), 1.0, Some(7.0)) - t_two_sided(2.5, Some(7.0))).abs() < 1e-12);
    }

    #[test]
    fn ks_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = ks_test(&xs, |x| x);
        assert!(d <= 0.0005 + 1e-12);
        assert!(p > 0.99);
        let (_, p) = ks_test(&xs, |x| x * x);
        assert!(p < 1e-6);
    }

    #[test]
    fn gof_exact() {
        let (s, p) = chisq_gof(&[10.0, 10.0], &[10.0, 10.0]);
        assert_eq!(s, 0.0);
        assert_eq!(p, 1.0);
    }
}

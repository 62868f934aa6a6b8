//! Summary statistics and two-sample t-tests with a self-contained
//! Student-t CDF.
//!
//! The CDF is computed through the regularized incomplete beta function
//! I_x(df/2, 1/2) with x = df/(df + t^2), evaluated by a modified-Lentz
//! continued fraction. No external statistics dependency; agreement with an
//! independent oracle is pinned in the test fixtures.

use serde::Serialize;
use thiserror::Error;

const BETA_EPS: f64 = 1e-14;
const BETA_MAX_ITER: usize = 200;
const FPMIN: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degrees of freedom must be positive, got {0}")]
    DomainError(f64),
    #[error("incomplete beta failed to converge within {BETA_MAX_ITER} iterations (a={a}, b={b}, x={x})")]
    NoConvergence { a: f64, b: f64, x: f64 },
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Welch (or pooled) two-sample t-test result.
#[derive(Debug, Clone, Serialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Set when both sample variances are zero; t and p are then reported by
    /// convention (t=0,p=1 for equal means; p=0 otherwise) rather than by the
    /// usual formulas.
    pub degenerate: bool,
}

/// Sample mean and unbiased (n-1) variance via the corrected two-pass
/// algorithm, stable for large offsets.
pub fn mean_and_variance(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData { needed: 2, got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sum_sq = 0.0;
    let mut sum_dev = 0.0;
    for v in values {
        let d = v - mean;
        sum_sq += d * d;
        sum_dev += d;
    }
    let var = (sum_sq - sum_dev * sum_dev / n) / (n - 1.0);
    Ok((mean, var.max(0.0)))
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom and a two-sided p-value.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    let (mean_a, var_a) = mean_and_variance(a)?;
    let (mean_b, var_b) = mean_and_variance(b)?;
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);

    if var_a == 0.0 && var_b == 0.0 {
        return Ok(degenerate_result(mean_a, mean_b, a.len(), b.len()));
    }
    let se2_a = var_a / n_a;
    let se2_b = var_b / n_b;
    let t = (mean_a - mean_b) / (se2_a + se2_b).sqrt();
    let df = (se2_a + se2_b).powi(2)
        / (se2_a.powi(2) / (n_a - 1.0) + se2_b.powi(2) / (n_b - 1.0));
    let p_value = two_sided_p(t, df)?;
    Ok(TTestResult {
        t_statistic: t,
        df,
        p_value,
        mean_a,
        mean_b,
        n_a: a.len(),
        n_b: b.len(),
        degenerate: false,
    })
}

/// Pooled-variance Student t-test (classic equal-variance form), exposed for
/// sensitivity checks next to [`welch_t`].
pub fn pooled_t(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    let (mean_a, var_a) = mean_and_variance(a)?;
    let (mean_b, var_b) = mean_and_variance(b)?;
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);

    if var_a == 0.0 && var_b == 0.0 {
        return Ok(degenerate_result(mean_a, mean_b, a.len(), b.len()));
    }
    let df = n_a + n_b - 2.0;
    let pooled = ((n_a - 1.0) * var_a + (n_b - 1.0) * var_b) / df;
    let t = (mean_a - mean_b) / (pooled * (1.0 / n_a + 1.0 / n_b)).sqrt();
    let p_value = two_sided_p(t, df)?;
    Ok(TTestResult {
        t_statistic: t,
        df,
        p_value,
        mean_a,
        mean_b,
        n_a: a.len(),
        n_b: b.len(),
        degenerate: false,
    })
}

fn degenerate_result(mean_a: f64, mean_b: f64, n_a: usize, n_b: usize) -> TTestResult {
    let equal = mean_a == mean_b;
    TTestResult {
        t_statistic: if equal {
            0.0
        } else if mean_a > mean_b {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        },
        df: (n_a + n_b - 2) as f64,
        p_value: if equal { 1.0 } else { 0.0 },
        mean_a,
        mean_b,
        n_a,
        n_b,
        degenerate: true,
    }
}

/// Two-sided p-value: exactly I_x(df/2, 1/2) with x = df/(df + t^2).
fn two_sided_p(t: f64, df: f64) -> Result<f64, StatsError> {
    if df <= 0.0 {
        return Err(StatsError::DomainError(df));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let x = df / (df + t * t);
    reg_inc_beta(df / 2.0, 0.5, x)
}

/// Student-t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    if df <= 0.0 {
        return Err(StatsError::DomainError(df));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let x = df / (df + t * t);
    let tail = reg_inc_beta(df / 2.0, 0.5, x)? / 2.0;
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Regularized incomplete beta I_x(a, b) by continued fraction.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(StatsError::DomainError(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    // Continued fraction converges fastest on the side of the symmetry point.
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cont_frac(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cont_frac(b, a, 1.0 - x)? / b)
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cont_frac(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_EPS {
            return Ok(h);
        }
    }
    Err(StatsError::NoConvergence { a, b, x })
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection formula
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().abs().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Spearman rank correlation with average ranks for ties.
///
/// Returns `None` when fewer than two points or when either side is
/// constant (zero rank variance).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mean_variance_hand_cases() {
        assert_eq!(mean_and_variance(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        assert_eq!(mean_and_variance(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        assert_eq!(
            mean_and_variance(&[1.0]),
            Err(StatsError::InsufficientData { needed: 2, got: 1 })
        );
        assert_eq!(mean_and_variance(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    #[test]
    fn variance_stable_under_large_offset() {
        // One million values of 1e8 + structured noise; exact moments were
        // computed with 60-digit arithmetic beforehand.
        let values: Vec<f64> = (0u64..1_000_000)
            .map(|i| 1e8 + (((i * 2_654_435_761) % 1000) as f64 - 500.0) / 1000.0)
            .collect();
        let (mean, var) = mean_and_variance(&values).unwrap();
        assert!(close(mean, 99_999_999.999_5, 1e-6), "mean {mean}");
        let expected = 0.083_333_333_333_333_33;
        assert!((var - expected).abs() / expected < 1e-6, "var {var}");
    }

    #[test]
    fn cdf_trivial_and_cauchy_cases() {
        assert_eq!(student_t_cdf(0.0, 5.0).unwrap(), 0.5);
        // df=1 is Cauchy: 1/2 + atan(t)/pi, closed form.
        for t in [-50.0f64, -3.5, -1.0, -0.1, 0.1, 1.0, 3.5, 50.0] {
            let expected = 0.5 + t.atan() / std::f64::consts::PI;
            let got = student_t_cdf(t, 1.0).unwrap();
            assert!(close(got, expected, 1e-12), "t={t}: {got} vs {expected}");
        }
        assert!(close(student_t_cdf(1.0, 1.0).unwrap(), 0.75, 1e-12));
        assert_eq!(student_t_cdf(1.0, 0.0), Err(StatsError::DomainError(0.0)));
        assert_eq!(student_t_cdf(1.0, -3.0), Err(StatsError::DomainError(-3.0)));
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        for df in [1.0, 2.5, 7.0, 30.0, 400.0] {
            let mut prev = 0.0;
            for i in 0..200 {
                let t = -10.0 + i as f64 * 0.1;
                let c = student_t_cdf(t, df).unwrap();
                assert!(c >= prev, "cdf not monotone at t={t}, df={df}");
                prev = c;
                let sym = student_t_cdf(-t, df).unwrap();
                assert!(close(c + sym, 1.0, 1e-12), "symmetry broke at t={t}, df={df}");
            }
        }
    }

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn welch_antisymmetry_and_scale_equivariance() {
        let a = [3.1, 4.5, 2.2, 5.6, 4.4, 3.3];
        let b = [7.0, 6.1, 8.3, 5.9];
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        assert!(close(ab.t_statistic, -ba.t_statistic, 1e-12));
        assert!(close(ab.p_value, ba.p_value, 1e-12));
        assert!(close(ab.df, ba.df, 1e-12));

        let scale = 37.5;
        let sa: Vec<f64> = a.iter().map(|v| v * scale).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * scale).collect();
        let scaled = welch_t(&sa, &sb).unwrap();
        assert!(close(ab.t_statistic, scaled.t_statistic, 1e-9));
        assert!(close(ab.df, scaled.df, 1e-9));
        assert!(close(ab.p_value, scaled.p_value, 1e-9));
    }

    #[test]
    fn degenerate_cases_are_flagged() {
        let r = welch_t(&[2.0, 2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = welch_t(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert!(r.t_statistic.is_infinite() && r.t_statistic < 0.0);
    }

    #[test]
    fn insufficient_data_is_an_error() {
        assert!(matches!(
            welch_t(&[1.0], &[1.0, 2.0]),
            Err(StatsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(close(spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0, 1e-12));
        assert!(close(spearman(&x, &[9.0, 7.0, 5.0, 3.0]).unwrap(), -1.0, 1e-12));
        assert_eq!(spearman(&x, &[5.0, 5.0, 5.0, 5.0]), None);
        // ties get average ranks
        let r = spearman(&[1.0, 1.0, 2.0, 3.0], &[4.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(close(r, 1.0, 1e-12));
    }
}

//! Estimators and hypothesis tests used by the Monte-Carlo checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pass thresholds: `|z| <= z_max` for mean tests, `p >= p_min` for
/// distribution tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub z_max: f64,
    pub p_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { z_max: 3.0, p_min: 0.01 }
    }
}

/// Outcome of one statistical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: String,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub replicates: usize,
    pub sample_size: usize,
    pub thresholds: Thresholds,
}

impl TestReport {
    /// Mean test: `estimate ± se` against `target`.
    pub fn mean(
        statistic: impl Into<String>,
        estimate: f64,
        se: f64,
        target: f64,
        replicates: usize,
        sample_size: usize,
        th: Thresholds,
    ) -> TestReport {
        let z = if se > 0.0 { (estimate - target) / se } else if estimate == target { 0.0 } else { f64::INFINITY };
        TestReport {
            statistic: statistic.into(),
            estimate,
            standard_error: Some(se),
            target: Some(target),
            z_score: Some(z),
            p_value: None,
            pass: z.abs() <= th.z_max,
            replicates,
            sample_size,
            thresholds: th,
        }
    }

    /// Distribution test with statistic value `estimate` and p-value `p`.
    pub fn distribution(
        statistic: impl Into<String>,
        estimate: f64,
        p: f64,
        replicates: usize,
        sample_size: usize,
        th: Thresholds,
    ) -> TestReport {
        TestReport {
            statistic: statistic.into(),
            estimate,
            standard_error: None,
            target: None,
            z_score: None,
            p_value: Some(p),
            pass: p >= th.p_min,
            replicates,
            sample_size,
            thresholds: th,
        }
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match (self.z_score, self.p_value) {
            (Some(z), _) => format!(
                "{verdict} {}: {:.6} ± {:.6} vs {:.6} (z = {:.2}, n = {})",
                self.statistic,
                self.estimate,
                self.standard_error.unwrap_or(f64::NAN),
                self.target.unwrap_or(f64::NAN),
                z,
                self.sample_size
            ),
            (None, Some(p)) => format!(
                "{verdict} {}: statistic {:.6}, p = {:.4} (n = {})",
                self.statistic, self.estimate, p, self.sample_size
            ),
            _ => format!("{verdict} {}", self.statistic),
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Ratio estimator `Σ num / Σ den` over replicates with its delta-method
/// standard error.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> (f64, f64) {
    assert_eq!(num.len(), den.len());
    let n = num.len() as f64;
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    let r = sn / sd;
    if num.len() < 2 {
        return (r, f64::NAN);
    }
    let dbar = sd / n;
    let s2 = num.iter().zip(den).map(|(a, b)| (a - r * b).powi(2)).sum::<f64>() / (n - 1.0);
    (r, (s2 / n).sqrt() / dbar)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..20).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> (f64, f64) {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let en = n.sqrt();
    (d, kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    (d, kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

/// Result of a chi-square test after pooling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
}

/// Groups consecutive indices until every group's `weight` reaches `min`;
/// a short tail joins the last group.
fn pool(weights: &[f64], min: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cur.push(i);
        acc += w;
        if acc >= min {
            groups.push(std::mem::take(&mut cur));
            acc = 0.0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(g) => g.extend(cur),
            None => groups.push(cur),
        }
    }
    groups
}

/// Goodness of fit of `observed` counts against `expected` counts, pooling
/// adjacent bins to expected count `>= 5`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> ChiSquare {
    let groups = pool(expected, 5.0);
    let mut stat = 0.0;
    for g in &groups {
        let o: f64 = g.iter().map(|&i| observed[i] as f64).sum();
        let e: f64 = g.iter().map(|&i| expected[i]).sum();
        stat += (o - e).powi(2) / e;
    }
    let dof = groups.len().saturating_sub(1);
    ChiSquare { statistic: stat, dof, p_value: chi_p(stat, dof) }
}

/// Two-sample homogeneity test for discrete values (2 × K contingency),
/// pooling adjacent categories until both expected counts are `>= 5`.
pub fn chi_square_two_sample(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>) -> ChiSquare {
    let keys: Vec<u64> = a.keys().chain(b.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let ca: Vec<f64> = keys.iter().map(|k| *a.get(k).unwrap_or(&0) as f64).collect();
    let cb: Vec<f64> = keys.iter().map(|k| *b.get(k).unwrap_or(&0) as f64).collect();
    let (na, nb): (f64, f64) = (ca.iter().sum(), cb.iter().sum());
    let n = na + nb;
    let frac = na.min(nb) / n;
    // Pooling on the smaller row's expectation guarantees both rows reach 5.
    let weights: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) * frac).collect();
    let groups = pool(&weights, 5.0);
    let mut stat = 0.0;
    for g in &groups {
        let oa: f64 = g.iter().map(|&i| ca[i]).sum();
        let ob: f64 = g.iter().map(|&i| cb[i]).sum();
        let col = oa + ob;
        let ea = col * na / n;
        let eb = col * nb / n;
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let dof = groups.len().saturating_sub(1);
    ChiSquare { statistic: stat, dof, p_value: chi_p(stat, dof) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_agree() {
        // Both series are valid around the switch point.
        for &l in &[0.9, 1.0, 1.1, 1.18, 1.25] {
            let y = (-std::f64::consts::PI.powi(2) / (8.0 * l * l)).exp();
            let s: f64 = (0..20).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
            let a = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / l * s;
            let b: f64 = 2.0 * (1..100).map(|k| if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * (k * k) as f64 * l * l).exp()).sum::<f64>();
            assert!((a - b).abs() < 1e-12, "{l}: {a} {b}");
        }
        // Familiar critical values.
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ks_two_sample_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (d, p) = ks_two_sample(&a, &a);
        assert_eq!(d, 0.0);
        assert!(p > 0.99);
        // Integer grid so the shift creates exact ties.
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 200.0).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert!((d - 0.2).abs() < 1e-9);
        assert!(p < 1e-10);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let a: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = ks_one_sample(&a, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(p > 0.99);
    }

    #[test]
    fn chi_square_known_value() {
        // (10-8)²/8 + (6-8)²/8 = 1, one degree of freedom.
        let c = chi_square_gof(&[10, 6], &[8.0, 8.0]);
        assert_eq!(c.dof, 1);
        assert!((c.statistic - 1.0).abs() < 1e-12);
        assert!((c.p_value - 0.317_310_507_862_914_1).abs() < 1e-9);
    }

    #[test]
    fn pooling_small_bins() {
        let c = chi_square_gof(&[1, 1, 1, 1, 1, 1, 10], &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0]);
        assert_eq!(c.dof, 1);
        assert!(c.statistic.abs() < 1e-12);
    }

    #[test]
    fn two_sample_chi_square_homogeneous() {
        let a: BTreeMap<u64, u64> = [(4, 50), (5, 200), (6, 300), (7, 200), (8, 50), (12, 1)].into_iter().collect();
        let c = chi_square_two_sample(&a, &a);
        assert!(c.statistic.abs() < 1e-12);
        assert!(c.p_value > 0.999);
        let b: BTreeMap<u64, u64> = [(4, 200), (5, 200), (6, 200), (7, 200), (8, 200)].into_iter().collect();
        assert!(chi_square_two_sample(&a, &b).p_value < 1e-10);
    }

    #[test]
    fn ratio_estimator() {
        let (r, se) = ratio_estimate(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert_eq!(r, 2.0);
        assert_eq!(se, 0.0);
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn report_pass_rules() {
        let th = Thresholds::default();
        assert!(TestReport::mean("m", 1.0, 0.1, 1.29, 1, 1, th).pass);
        assert!(!TestReport::mean("m", 1.0, 0.1, 1.31, 1, 1, th).pass);
        assert!(TestReport::distribution("ks", 0.1, 0.01, 1, 1, th).pass);
        assert!(!TestReport::distribution("ks", 0.1, 0.009, 1, 1, th).pass);
    }
}

//! Goodness-of-fit helpers used by the distributional checks: one- and
//! two-sample Kolmogorov-Smirnov tests and a two-proportion z statistic.
//!
//! P-values come from the asymptotic Kolmogorov distribution, which is
//! adequate at the sample sizes used here (hundreds and up).

/// Outcome of a KS comparison.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    /// Supremum distance between the empirical and reference CDFs.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    /// Effective sample count entering the asymptotic scaling.
    pub n_eff: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against the CDF `cdf`.
pub fn ks_test_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    assert!(!samples.is_empty(), "KS test needs samples");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    KsResult { statistic: d, p_value: kolmogorov_sf(n.sqrt() * d), n_eff: n }
}

/// Two-sample KS test.
pub fn ks_test_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs samples");
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    KsResult { statistic: d, p_value: kolmogorov_sf(n_eff.sqrt() * d), n_eff }
}

/// Two-proportion z statistic (absolute value) for counts `k1/n1` vs
/// `k2/n2` under the pooled null.
pub fn two_proportion_z(k1: usize, n1: usize, k2: usize, n2: usize) -> f64 {
    assert!(n1 > 0 && n2 > 0);
    let p1 = k1 as f64 / n1 as f64;
    let p2 = k2 as f64 / n2 as f64;
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    ((p1 - p2) / se).abs()
}

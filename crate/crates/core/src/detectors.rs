//! Test statistics computed on periodogram-like vectors: the maximum,
//! Fisher's ratio, the `N_C`-th largest ordinate, Higher Criticism, and
//! Berk-Jones, together with the p-value pathways feeding the last two
//! and Monte-Carlo threshold calibration for statistics without closed
//! forms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun;
use crate::spectral::PeriodogramVec;

/// Which statistic a [`TestStatistic`] value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    /// Maximum ordinate.
    TM,
    /// Fisher's ratio: maximum over sum.
    TF,
    /// `N_C`-th largest ordinate.
    TC,
    /// Higher Criticism over ordered p-values.
    HC,
    /// Berk-Jones over ordered p-values.
    BJ,
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TestKind::TM => "TM",
            TestKind::TF => "TF",
            TestKind::TC => "TC",
            TestKind::HC => "HC",
            TestKind::BJ => "BJ",
        };
        f.write_str(s)
    }
}

/// Provenance attached to a computed statistic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TestParams {
    pub n_c: Option<usize>,
    pub alpha0: Option<f64>,
    pub l: Option<usize>,
    pub n: Option<usize>,
}

/// A computed test statistic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub kind: TestKind,
    pub value: f64,
    pub params: TestParams,
}

/// Which marginal null CDF produced a p-value vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NullMarginal {
    /// `F(2, 2L)` on the interior grid, `F(1, L)` at DC/Nyquist.
    Standardized { l: usize },
    /// `chi^2` marginals of a white-noise periodogram of known variance.
    WhiteChi2 { sigma2: f64 },
}

/// Observed p-values (unordered; ordering happens inside HC/BJ).
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVec {
    values: Vec<f64>,
    null_model: NullMarginal,
}

impl PValueVec {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn null_model(&self) -> NullMarginal {
        self.null_model
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn require_nonempty(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::domain("statistic requires a nonempty vector"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("statistic input must be finite"));
    }
    Ok(())
}

/// Maximum ordinate.
pub fn t_max(z: &[f64]) -> Result<TestStatistic> {
    require_nonempty(z)?;
    let value = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TestStatistic { kind: TestKind::TM, value, params: TestParams::default() })
}

/// Fisher's ratio `max / sum` of nonnegative ordinates.
pub fn t_fisher(z: &[f64]) -> Result<TestStatistic> {
    require_nonempty(z)?;
    if z.iter().any(|&v| v < 0.0) {
        return Err(Error::domain("Fisher's ratio requires nonnegative ordinates"));
    }
    let sum: f64 = z.iter().sum();
    if sum == 0.0 {
        return Err(Error::Degenerate("Fisher's ratio undefined on an all-zero vector".into()));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TestStatistic { kind: TestKind::TF, value: max / sum, params: TestParams::default() })
}

/// `N_C`-th largest ordinate.
pub fn t_c(z: &[f64], n_c: usize) -> Result<TestStatistic> {
    require_nonempty(z)?;
    if n_c < 1 || n_c > z.len() {
        return Err(Error::domain(format!(
            "order parameter {n_c} outside 1..={}",
            z.len()
        )));
    }
    let mut sorted = z.to_vec();
    // n_c-th largest sits at index len - n_c after an ascending sort.
    let idx = sorted.len() - n_c;
    let (_, value, _) = sorted.select_nth_unstable_by(idx, f64::total_cmp);
    let value = *value;
    Ok(TestStatistic {
        kind: TestKind::TC,
        value,
        params: TestParams { n_c: Some(n_c), ..TestParams::default() },
    })
}

/// P-values of a periodogram standardized by an `L`-averaged training
/// reference: `v_k = 1 - Phi_F(p_k, 2, 2L)` on the interior grid and
/// `1 - Phi_F(p_k, 1, L)` at DC/Nyquist when present.
pub fn pvalues_standardized(p_std: &PeriodogramVec, l: usize) -> Result<PValueVec> {
    if l < 1 {
        return Err(Error::domain("training size must be >= 1"));
    }
    let n = p_std.n();
    let mut values = Vec::with_capacity(p_std.ordinates().len());
    for (i, &v) in p_std.ordinates().iter().enumerate() {
        let k = p_std.fourier_index(i);
        let cdf = if k == 0 || k == n / 2 {
            specfun::f_cdf(v, specfun::DistParams::central(1, l as u64)?)?
        } else {
            specfun::f_cdf_2_2l(v, l as u64)?
        };
        values.push(1.0 - cdf);
    }
    Ok(PValueVec { values, null_model: NullMarginal::Standardized { l } })
}

/// P-values of a raw periodogram under a white-noise null of known
/// variance: `v_k = 1 - Phi_{chi^2_2}(2 P_k / sigma^2)` on the interior
/// grid and `1 - Phi_{chi^2_1}(P_k / sigma^2)` at DC/Nyquist.
pub fn pvalues_whitenoise(p: &PeriodogramVec, sigma2: f64) -> Result<PValueVec> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::domain("noise variance must be positive"));
    }
    let n = p.n();
    let mut values = Vec::with_capacity(p.ordinates().len());
    for (i, &v) in p.ordinates().iter().enumerate() {
        let k = p.fourier_index(i);
        let cdf = if k == 0 || k == n / 2 {
            specfun::chi2_cdf(v / sigma2, 1, 0.0)?
        } else {
            specfun::chi2_cdf(2.0 * v / sigma2, 2, 0.0)?
        };
        values.push(1.0 - cdf);
    }
    Ok(PValueVec { values, null_model: NullMarginal::WhiteChi2 { sigma2 } })
}

fn check_alpha0(alpha0: f64, n_v: usize) -> Result<usize> {
    if !(alpha0 > 0.0) || alpha0 > 1.0 {
        return Err(Error::domain("alpha0 must lie in (0, 1]"));
    }
    let k_max = (alpha0 * n_v as f64).floor() as usize;
    if k_max < 1 {
        return Err(Error::domain(format!(
            "alpha0 = {alpha0} leaves no order statistics out of {n_v}"
        )));
    }
    Ok(k_max.min(n_v))
}

/// Higher Criticism statistic over the smallest `floor(alpha0 * N_v)`
/// ordered p-values.
///
/// Denominators clamp `v` into `[1e-300, 1 - 1e-16]`; numerators use the
/// raw value, so `v = 1` contributes a nonpositive, finite term.
pub fn hc_star(v: &PValueVec, alpha0: f64) -> Result<TestStatistic> {
    let n_v = v.len();
    if n_v == 0 {
        return Err(Error::domain("HC requires p-values"));
    }
    let k_max = check_alpha0(alpha0, n_v)?;
    let mut sorted = v.values.clone();
    sorted.sort_by(f64::total_cmp);
    let nf = n_v as f64;
    let mut best = f64::NEG_INFINITY;
    for (i, &raw) in sorted.iter().take(k_max).enumerate() {
        let k = (i + 1) as f64;
        let clamped = raw.clamp(1e-300, 1.0 - 1e-16);
        let term = nf.sqrt() * (k / nf - raw) / (clamped * (1.0 - clamped)).sqrt();
        best = best.max(term);
    }
    Ok(TestStatistic {
        kind: TestKind::HC,
        value: best,
        params: TestParams { alpha0: Some(alpha0), ..TestParams::default() },
    })
}

/// Berk-Jones statistic: `max_k I_{1 - v_(k)}(N_v - k + 1, k)` over the
/// same search window as [`hc_star`].
pub fn bj(v: &PValueVec, alpha0: f64) -> Result<TestStatistic> {
    let n_v = v.len();
    if n_v == 0 {
        return Err(Error::domain("BJ requires p-values"));
    }
    let k_max = check_alpha0(alpha0, n_v)?;
    let mut sorted = v.values.clone();
    sorted.sort_by(f64::total_cmp);
    let mut best = f64::NEG_INFINITY;
    for (i, &vk) in sorted.iter().take(k_max).enumerate() {
        let k = i + 1;
        let x = (1.0 - vk).clamp(0.0, 1.0);
        let term = specfun::reg_inc_beta(x, (n_v - k + 1) as f64, k as f64)?;
        best = best.max(term);
    }
    Ok(TestStatistic {
        kind: TestKind::BJ,
        value: best,
        params: TestParams { alpha0: Some(alpha0), ..TestParams::default() },
    })
}

/// Outcome of thresholding a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

/// Threshold rule: decide H1 iff `value > threshold`; ties go to H0.
pub fn decide(stat: &TestStatistic, threshold: f64) -> Decision {
    if stat.value > threshold {
        Decision::H1
    } else {
        Decision::H0
    }
}

/// Full record of one detection run, serializable for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub test: TestKind,
    pub statistic: f64,
    pub threshold: f64,
    pub target_pfa: f64,
    pub decision: Decision,
    /// How the threshold was obtained ("analytic" or "monte-carlo").
    pub threshold_method: String,
    pub l: usize,
    pub n: usize,
    pub n_c: Option<usize>,
    pub alpha0: Option<f64>,
}

/// Tests whose thresholds are calibrated by Monte Carlo on the pivotal
/// null (i.i.d. uniform p-values for HC/BJ; i.i.d. `F(2, 2L)` ordinates
/// for Fisher's ratio after standardization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibratedTest {
    Hc { alpha0: f64 },
    Bj { alpha0: f64 },
    TfStandardized { l: usize },
}

/// Trials used by the calibration cache.
pub const CALIBRATION_TRIALS: usize = 100_000;

const CALIBRATION_SEED: u64 = 0x5eed_ca11;

type CacheKey = (u8, usize, u64, usize);

fn calibration_cache() -> &'static Mutex<HashMap<CacheKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cache_key(test: &CalibratedTest, n_v: usize, trials: usize) -> CacheKey {
    match test {
        CalibratedTest::Hc { alpha0 } => (0, n_v, alpha0.to_bits(), trials),
        CalibratedTest::Bj { alpha0 } => (1, n_v, alpha0.to_bits(), trials),
        CalibratedTest::TfStandardized { l } => (2, n_v, *l as u64, trials),
    }
}

fn simulate_null_statistic(test: &CalibratedTest, n_v: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    match test {
        CalibratedTest::Hc { alpha0 } | CalibratedTest::Bj { alpha0 } => {
            let values: Vec<f64> = (0..n_v).map(|_| 1.0 - rng.random::<f64>()).collect();
            let v = PValueVec {
                values,
                null_model: NullMarginal::WhiteChi2 { sigma2: 1.0 },
            };
            let stat = match test {
                CalibratedTest::Hc { .. } => hc_star(&v, *alpha0)?,
                _ => bj(&v, *alpha0)?,
            };
            Ok(stat.value)
        }
        CalibratedTest::TfStandardized { l } => {
            // Exact F(2, 2L) sampling through the closed-form inverse CDF.
            let lf = *l as f64;
            let z: Vec<f64> = (0..n_v)
                .map(|_| {
                    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
                    lf * (u.powf(-1.0 / lf) - 1.0)
                })
                .collect();
            Ok(t_fisher(&z)?.value)
        }
    }
}

/// Sorted null-statistic sample for a calibrated test, computed once per
/// `(test, n_v, trials)` and cached for the process lifetime.
pub fn calibration_null_sample(
    test: &CalibratedTest,
    n_v: usize,
    trials: usize,
) -> Result<Arc<Vec<f64>>> {
    if n_v == 0 || trials == 0 {
        return Err(Error::domain("calibration needs n_v >= 1 and trials >= 1"));
    }
    let key = cache_key(test, n_v, trials);
    if let Some(hit) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let mut values = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
            rng.set_stream(trial);
            simulate_null_statistic(test, n_v, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    values.sort_by(f64::total_cmp);
    let arc = Arc::new(values);
    calibration_cache()
        .lock()
        .unwrap()
        .insert(key, Arc::clone(&arc));
    Ok(arc)
}

/// Monte-Carlo threshold at a target false-alarm rate.
///
/// Valid because standardization makes the null pivotal: the threshold
/// depends only on `(n_v, alpha0)` (or `(n_v, L)` for Fisher), never on
/// the unknown noise PSD.
pub fn calibrated_threshold(
    test: &CalibratedTest,
    n_v: usize,
    pfa: f64,
    trials: usize,
) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain("target false-alarm rate must lie in (0, 1)"));
    }
    if pfa * (trials as f64) < 10.0 {
        return Err(Error::domain(format!(
            "pfa = {pfa} needs at least {} calibration trials, got {trials}",
            (10.0 / pfa).ceil()
        )));
    }
    let sample = calibration_null_sample(test, n_v, trials)?;
    let idx = ((1.0 - pfa) * trials as f64).ceil() as usize;
    Ok(sample[idx.min(trials - 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{IndexSet, PeriodogramVec};

    fn pvec(values: Vec<f64>) -> PValueVec {
        PValueVec { values, null_model: NullMarginal::WhiteChi2 { sigma2: 1.0 } }
    }

    #[test]
    fn t_max_basics() {
        assert_eq!(t_max(&[1.0, 3.0, 2.0]).unwrap().value, 3.0);
        let shuffled = t_max(&[2.0, 1.0, 3.0]).unwrap();
        assert_eq!(shuffled.value, 3.0);
        assert!(t_max(&[]).is_err());
    }

    #[test]
    fn t_fisher_basics() {
        assert_eq!(t_fisher(&[1.0, 1.0, 1.0, 1.0]).unwrap().value, 0.25);
        assert_eq!(t_fisher(&[0.0, 0.0, 3.0, 1.0]).unwrap().value, 0.75);
        // Scale invariance.
        let a = t_fisher(&[0.5, 2.0, 1.25]).unwrap().value;
        let b = t_fisher(&[5.0, 20.0, 12.5]).unwrap().value;
        assert!((a - b).abs() < 1e-15);
        assert!(t_fisher(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn t_c_basics() {
        assert_eq!(t_c(&[5.0, 1.0, 4.0, 2.0], 2).unwrap().value, 4.0);
        assert_eq!(t_c(&[5.0, 1.0, 4.0, 2.0], 4).unwrap().value, 1.0);
        assert!(t_c(&[1.0], 2).is_err());
        assert!(t_c(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn t_c_with_unit_order_is_t_max() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let z: Vec<f64> = (0..17).map(|_| rng.random::<f64>() * 10.0).collect();
            assert_eq!(t_c(&z, 1).unwrap().value, t_max(&z).unwrap().value);
        }
    }

    #[test]
    fn pvalues_standardized_reference_points() {
        // p = 0 -> v = 1; with L = 1 and p = 1 the F(2,2) median gives 0.5.
        let p = PeriodogramVec::from_ordinates(vec![0.0, 1.0, 2.0], 8, IndexSet::Omega).unwrap();
        let v = pvalues_standardized(&p, 1).unwrap();
        assert_eq!(v.values()[0], 1.0);
        assert!((v.values()[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn pvalues_whitenoise_reference_points() {
        let ln2 = std::f64::consts::LN_2;
        let p = PeriodogramVec::from_ordinates(vec![0.0, ln2, 1.0], 8, IndexSet::Omega).unwrap();
        let v = pvalues_whitenoise(&p, 1.0).unwrap();
        assert_eq!(v.values()[0], 1.0);
        // 2P/sigma^2 = 2 ln 2 -> survival e^{-ln 2} = 1/2.
        assert!((v.values()[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn hc_star_hand_computed() {
        let v = pvec(vec![0.01, 0.4, 0.6, 0.9]);
        let stat = hc_star(&v, 1.0).unwrap();
        let expected = 2.0 * (0.25 - 0.01) / (0.01f64 * 0.99).sqrt();
        assert!((stat.value - expected).abs() < 1e-12, "{}", stat.value);
        assert!((expected - 4.8242).abs() < 1e-3);
    }

    #[test]
    fn hc_star_window_and_uniform_spacing() {
        // alpha0 = 1/N_v keeps only the k = 1 term.
        let v = pvec(vec![0.2, 0.4, 0.6, 0.8]);
        let only_first = hc_star(&v, 0.25).unwrap().value;
        let expected = 2.0 * (0.25 - 0.2) / (0.2f64 * 0.8).sqrt();
        assert!((only_first - expected).abs() < 1e-12);

        // Ideal uniform spacing stays small and positive (default window).
        let n = 128;
        let ideal: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let stat = hc_star(&pvec(ideal), 0.5).unwrap().value;
        assert!(stat > 0.0 && stat < 1.0, "HC on ideal spacing: {stat}");
    }

    #[test]
    fn hc_star_survives_extreme_pvalues() {
        let stat = hc_star(&pvec(vec![0.0, 1.0, 1.0, 1.0]), 1.0).unwrap();
        assert!(stat.value.is_finite());
        assert!(stat.value > 0.0);
    }

    #[test]
    fn bj_reference_points() {
        // k = 1 term with v_(1) = 0.01 and N_v = 4: I_{0.99}(4, 1) = 0.99^4.
        let stat = bj(&pvec(vec![0.01, 0.4, 0.6, 0.9]), 0.25).unwrap();
        assert!((stat.value - 0.96059601).abs() < 1e-10);

        let all_ones = bj(&pvec(vec![1.0; 4]), 1.0).unwrap();
        assert_eq!(all_ones.value, 0.0);

        let tiny = bj(&pvec(vec![1e-320, 0.5, 0.7, 0.9]), 0.25).unwrap();
        assert!((tiny.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_statistics_are_permutation_invariant() {
        let v1 = pvec(vec![0.3, 0.1, 0.7, 0.5]);
        let v2 = pvec(vec![0.7, 0.5, 0.3, 0.1]);
        assert_eq!(hc_star(&v1, 0.5).unwrap().value, hc_star(&v2, 0.5).unwrap().value);
        assert_eq!(bj(&v1, 0.5).unwrap().value, bj(&v2, 0.5).unwrap().value);
    }

    #[test]
    fn decide_tie_is_null() {
        let stat = TestStatistic { kind: TestKind::TM, value: 3.0, params: TestParams::default() };
        assert_eq!(decide(&stat, 3.0), Decision::H0);
        let above = TestStatistic { value: 3.1, ..stat };
        assert_eq!(decide(&above, 3.0), Decision::H1);
    }

    #[test]
    fn calibration_is_deterministic_and_monotone() {
        let test = CalibratedTest::Hc { alpha0: 0.5 };
        let a = calibrated_threshold(&test, 63, 0.1, 2000).unwrap();
        let b = calibrated_threshold(&test, 63, 0.1, 2000).unwrap();
        assert_eq!(a, b);
        let tighter = calibrated_threshold(&test, 63, 0.01, 2000).unwrap();
        assert!(tighter > a);
    }

    #[test]
    fn calibrated_hc_threshold_hits_its_rate() {
        use rand::{Rng, SeedableRng};
        let n_v = 63;
        let trials = 20_000;
        let threshold =
            calibrated_threshold(&CalibratedTest::Hc { alpha0: 0.5 }, n_v, 0.05, trials).unwrap();
        // Fresh uniform nulls, different seed from the calibration stream.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(987);
        let mut hits = 0usize;
        let reps = 4000;
        for _ in 0..reps {
            let v = pvec((0..n_v).map(|_| 1.0 - rng.random::<f64>()).collect());
            if hc_star(&v, 0.5).unwrap().value > threshold {
                hits += 1;
            }
        }
        let rate = hits as f64 / reps as f64;
        let se = (0.05f64 * 0.95 / reps as f64).sqrt();
        assert!((rate - 0.05).abs() < 4.0 * se, "rate {rate}");
    }

    #[test]
    fn calibration_rejects_unresolvable_pfa() {
        let r = calibrated_threshold(&CalibratedTest::Bj { alpha0: 0.5 }, 31, 1e-4, 1000);
        assert!(r.is_err());
    }
}

//! Parametric noise-PSD estimation: Yule-Walker AR fitting via
//! Levinson-Durbin, FPE order selection, and the AR-standardized
//! periodogram.
//!
//! The autocovariance is the biased estimate pooled (averaged) across the
//! training series before the Toeplitz solve, which is the natural pooled
//! moment estimator for `L` independent realizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noisegen::ar_psd_eval;
use crate::spectral::{PeriodogramVec, TrainingSet};

/// A fitted AR noise model.
///
/// `coeffs` follow the `1 + sum_j c_j z^j` convention used by
/// [`crate::noisegen::NoiseModel::Ar`], so a fit can be dropped into the
/// same PSD formula. `criterion_trace` records `(order, FPE)` pairs when
/// order selection ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub innovation_var: f64,
    pub criterion_trace: Vec<(usize, f64)>,
}

impl ArFit {
    /// PSD of the fitted model at a frequency in cycles per sample.
    pub fn psd_at(&self, nu: f64) -> f64 {
        ar_psd_eval(&self.coeffs, self.innovation_var, nu)
    }
}

/// Biased autocovariance `r(k) = (1/N) sum_j x_j x_{j+k}` averaged over
/// the training series, for lags `0..=max_lag`.
pub fn pooled_autocovariance(training: &TrainingSet, max_lag: usize) -> Vec<f64> {
    let n = training.n();
    let mut acc = vec![0.0; max_lag + 1];
    for series in training.series() {
        let x = series.samples();
        for (lag, slot) in acc.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n - lag {
                s += x[j] * x[j + lag];
            }
            *slot += s / n as f64;
        }
    }
    for slot in &mut acc {
        *slot /= training.l() as f64;
    }
    acc
}

/// Levinson-Durbin recursion on an autocovariance sequence.
///
/// Returns, for every order `o = 0..=order`, the coefficients (in the
/// `1 + sum c_j z^j` convention) and the prediction error variance.
fn levinson_durbin(autocov: &[f64], order: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let r0 = autocov[0];
    if !(r0 > 0.0) {
        return Err(Error::Degenerate(
            "autocovariance at lag zero is not positive (constant input?)".into(),
        ));
    }
    let mut phi = vec![0.0; order]; // forward prediction coefficients
    let mut e = r0;
    let mut per_order = Vec::with_capacity(order + 1);
    per_order.push((Vec::new(), e));

    for k in 1..=order {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Degenerate(format!(
                "prediction error collapsed at order {k} (singular autocovariance)"
            )));
        }
        let mut acc = autocov[k];
        for j in 1..k {
            acc -= phi[j - 1] * autocov[k - j];
        }
        let reflection = acc / e;
        let prev = phi[..k - 1].to_vec();
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - reflection * prev[k - 1 - j];
        }
        phi[k - 1] = reflection;
        e *= 1.0 - reflection * reflection;

        let coeffs: Vec<f64> = phi[..k].iter().map(|&p| -p).collect();
        per_order.push((coeffs, e));
    }
    Ok(per_order)
}

/// Yule-Walker fit of a fixed order from pooled training data.
pub fn fit_ar_yw(training: &TrainingSet, order: usize) -> Result<ArFit> {
    if order >= training.n() {
        return Err(Error::domain(format!(
            "AR order {order} must be below the series length {}",
            training.n()
        )));
    }
    let autocov = pooled_autocovariance(training, order);
    let mut per_order = levinson_durbin(&autocov, order)?;
    let (coeffs, innovation_var) = per_order.pop().expect("order entry exists");
    Ok(ArFit { order, coeffs, innovation_var, criterion_trace: Vec::new() })
}

/// Akaike's Final Prediction Error for a fit of order `o` on `m` samples.
fn fpe(prediction_var: f64, m: usize, o: usize) -> f64 {
    prediction_var * (m + o + 1) as f64 / (m - o - 1) as f64
}

/// Fit all orders `0..=max_order` and keep the FPE minimizer.
///
/// The sample count entering FPE is the pooled total `L * N`.
pub fn select_order_fpe(training: &TrainingSet, max_order: usize) -> Result<ArFit> {
    if max_order >= training.n() / 2 {
        return Err(Error::domain(format!(
            "max order {max_order} must be below N/2 = {}",
            training.n() / 2
        )));
    }
    let m = training.l() * training.n();
    if m <= max_order + 1 {
        return Err(Error::domain("too few samples for the requested order sweep"));
    }
    let autocov = pooled_autocovariance(training, max_order);
    let per_order = levinson_durbin(&autocov, max_order)?;

    let mut trace = Vec::with_capacity(max_order + 1);
    let mut best: Option<(usize, f64)> = None;
    for (o, (_, var)) in per_order.iter().enumerate() {
        let value = fpe(*var, m, o);
        trace.push((o, value));
        if best.map_or(true, |(_, b)| value < b) {
            best = Some((o, value));
        }
    }
    let (order, _) = best.expect("at least order zero evaluated");
    let (coeffs, innovation_var) = per_order[order].clone();
    Ok(ArFit { order, coeffs, innovation_var, criterion_trace: trace })
}

/// Conventional cap on the order sweep: `min(30, N/10)`.
pub fn default_max_order(n: usize) -> usize {
    (n / 10).min(30)
}

/// Standardize a periodogram by the fitted parametric PSD.
pub fn ar_standardize(p: &PeriodogramVec, fit: &ArFit) -> PeriodogramVec {
    let ordinates: Vec<f64> = p
        .ordinates()
        .iter()
        .enumerate()
        .map(|(i, &v)| v / fit.psd_at(p.freq(i)))
        .collect();
    PeriodogramVec::from_ordinates(ordinates, p.n(), p.index_set())
        .expect("grid is unchanged by standardization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noisegen::{gen_training_set, NoiseModel, RngSeed};
    use crate::spectral::{periodogram, IndexSet, TimeSeries, TrainingSet};

    fn training_from(model: &NoiseModel, n: usize, l: usize, seed: u64) -> TrainingSet {
        gen_training_set(model, n, l, RngSeed::new(seed, 0)).unwrap()
    }

    #[test]
    fn order_zero_recovers_variance() {
        let m = NoiseModel::white(1.0).unwrap();
        let t = training_from(&m, 4096, 1, 1);
        let fit = fit_ar_yw(&t, 0).unwrap();
        assert!(fit.coeffs.is_empty());
        let sample_var: f64 = t.series()[0]
            .samples()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            / t.n() as f64;
        assert!((fit.innovation_var - sample_var).abs() < 1e-12);
    }

    #[test]
    fn ar1_coefficient_recovered() {
        let m = NoiseModel::ar(vec![-0.5], 1.0).unwrap();
        let t = training_from(&m, 10_000, 1, 2);
        let fit = fit_ar_yw(&t, 1).unwrap();
        assert!((fit.coeffs[0] + 0.5).abs() < 0.02, "c1 = {}", fit.coeffs[0]);
    }

    #[test]
    fn order_at_series_length_rejected() {
        let m = NoiseModel::white(1.0).unwrap();
        let t = training_from(&m, 64, 1, 3);
        assert!(fit_ar_yw(&t, 64).is_err());
    }

    #[test]
    fn constant_input_rejected() {
        let series = TimeSeries::new(vec![0.0; 32], 1.0).unwrap();
        let t = TrainingSet::new(vec![series]).unwrap();
        assert!(matches!(fit_ar_yw(&t, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn levinson_matches_direct_solve() {
        // Direct Yule-Walker solve as the independent reference.
        let m = crate::noisegen::reference_ar6();
        let t = training_from(&m, 4096, 2, 4);
        for order in [1usize, 3, 6, 12, 20] {
            let autocov = pooled_autocovariance(&t, order);
            let ld = levinson_durbin(&autocov, order).unwrap();
            let (coeffs, _) = &ld[order];

            let mut a = vec![vec![0.0; order]; order];
            let mut b = vec![0.0; order];
            for i in 0..order {
                b[i] = autocov[i + 1];
                for j in 0..order {
                    a[i][j] = autocov[(i as i64 - j as i64).unsigned_abs() as usize];
                }
            }
            let phi = crate::linalg::solve(a, b).unwrap();
            for j in 0..order {
                assert!(
                    (coeffs[j] + phi[j]).abs() < 1e-8,
                    "order {order}, coeff {j}: {} vs {}",
                    coeffs[j],
                    -phi[j]
                );
            }
        }
    }

    #[test]
    fn prediction_variance_nonincreasing() {
        let m = crate::noisegen::reference_ar6();
        let t = training_from(&m, 2048, 1, 5);
        let autocov = pooled_autocovariance(&t, 24);
        let ld = levinson_durbin(&autocov, 24).unwrap();
        for w in ld.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn fpe_prefers_order_zero_on_white_noise() {
        // FPE overfits any single competitor order with probability
        // Pr(chi^2_1 > 2) ~ 0.157, so order 0 wins ~84% of head-to-head
        // sweeps; wider sweeps erode that (selected order is often wrong).
        let m = NoiseModel::white(1.0).unwrap();
        let mut zeros = 0;
        let runs = 100;
        for run in 0..runs {
            let t = gen_training_set(&m, 4096, 1, RngSeed::new(100 + run, 0)).unwrap();
            let fit = select_order_fpe(&t, 1).unwrap();
            if fit.order == 0 {
                zeros += 1;
            }
        }
        assert!(zeros >= 80, "order 0 selected in {zeros}/{runs} runs");
    }

    #[test]
    fn fpe_recovers_ar6_innovation_variance() {
        let m = crate::noisegen::reference_ar6();
        let t = training_from(&m, 4096, 1, 6);
        let fit = select_order_fpe(&t, 30).unwrap();
        assert!(
            (fit.innovation_var - 1.0).abs() < 0.10,
            "innovation variance {} at order {}",
            fit.innovation_var,
            fit.order
        );
        assert_eq!(fit.criterion_trace.len(), 31);
    }

    #[test]
    fn max_order_zero_returns_variance_fit() {
        let m = NoiseModel::white(2.0).unwrap();
        let t = training_from(&m, 256, 1, 7);
        let fit = select_order_fpe(&t, 0).unwrap();
        assert_eq!(fit.order, 0);
        assert_eq!(fit.criterion_trace.len(), 1);
    }

    #[test]
    fn white_fit_divides_by_variance() {
        let m = NoiseModel::white(1.0).unwrap();
        let t = training_from(&m, 256, 1, 8);
        let fit = fit_ar_yw(&t, 0).unwrap();
        let p = periodogram(&t.series()[0], IndexSet::Omega);
        let std = ar_standardize(&p, &fit);
        for (a, b) in std.ordinates().iter().zip(p.ordinates()) {
            assert!((a - b / fit.innovation_var).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_model_standardization_is_approximately_exponential() {
        // Standardizing by the true AR PSD makes ordinates ~ chi^2_2 / 2.
        let m = crate::noisegen::reference_ar6();
        let (coeffs, var) = match &m {
            NoiseModel::Ar { coeffs, innovation_var } => (coeffs.clone(), *innovation_var),
            _ => unreachable!(),
        };
        let truth = ArFit { order: 6, coeffs, innovation_var: var, criterion_trace: vec![] };
        let mut pooled = Vec::new();
        for trial in 0..20u64 {
            let ts = crate::noisegen::gen_ar_noise(&m, 2048, RngSeed::new(31, trial)).unwrap();
            let p = periodogram(&ts, IndexSet::Omega);
            let std = ar_standardize(&p, &truth);
            pooled.extend(std.ordinates().iter().map(|&v| 2.0 * v));
        }
        let ks = crate::gof::ks_test_cdf(&pooled, |x| {
            crate::specfun::chi2_cdf(x, 2, 0.0).unwrap()
        });
        assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
    }

    #[test]
    fn default_max_order_caps() {
        assert_eq!(default_max_order(4096), 30);
        assert_eq!(default_max_order(120), 12);
    }

    #[test]
    fn fit_serializes_to_json() {
        let fit = ArFit {
            order: 2,
            coeffs: vec![-0.5, 0.1],
            innovation_var: 1.0,
            criterion_trace: vec![(0, 2.0), (1, 1.5), (2, 1.4)],
        };
        let json = serde_json::to_string(&fit).unwrap();
        let back: ArFit = serde_json::from_str(&json).unwrap();
        assert_eq!(fit, back);
    }
}

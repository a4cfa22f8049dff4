//! Cross-module pipeline checks: the distributional claims that make the
//! standardized-periodogram detectors work, exercised end to end on
//! synthetic noise.

use stdpgram::analytic;
use stdpgram::detectors;
use stdpgram::gof;
use stdpgram::mcharness::{self, Experiment, SignalSource, Standardization, StatisticSpec};
use stdpgram::noisegen::{self, NoiseModel, RngSeed};
use stdpgram::specfun;
use stdpgram::spectral::{averaged_periodogram, periodogram, standardize, IndexSet};

/// AR(6)-shaped tabulated model (exact synthesis of a colored PSD).
fn ar6_table(n: usize) -> NoiseModel {
    noisegen::reference_ar6().resampled(n).unwrap()
}

fn white_table(n: usize) -> NoiseModel {
    NoiseModel::white(1.0).unwrap().resampled(n).unwrap()
}

/// Standardized ordinates drawn through the full pipeline.
fn standardized_ordinates(model: &NoiseModel, n: usize, l: usize, trials: u64, seed: u64) -> Vec<f64> {
    let mut pooled = Vec::new();
    for trial in 0..trials {
        let base = RngSeed::new(seed, trial * mcharness::STREAMS_PER_TRIAL);
        let obs = noisegen::gen_noise(model, n, base).unwrap();
        let training = noisegen::gen_training_set(model, n, l, base.offset(1)).unwrap();
        let reference = averaged_periodogram(&training, IndexSet::Omega);
        let p = periodogram(&obs, IndexSet::Omega);
        let std = standardize(&p, &reference).unwrap();
        pooled.extend_from_slice(std.ordinates());
    }
    pooled
}

#[test]
fn standardized_marginals_are_f_2_2l() {
    // Exact synthesis makes the F(2, 2L) marginal law exact at finite N.
    let n = 1024;
    let l = 20;
    let pooled = standardized_ordinates(&ar6_table(n), n, l, 20, 101);
    assert!(pooled.len() >= 10_000);
    let ks = gof::ks_test_cdf(&pooled, |x| {
        if x <= 0.0 {
            0.0
        } else {
            specfun::f_cdf_2_2l(x, l as u64).unwrap()
        }
    });
    assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn standardization_is_pivotal_across_psds() {
    // The joint null law on Omega does not depend on the generating PSD:
    // compare the maximum statistic under white vs AR(6)-shaped noise.
    let n = 256;
    let l = 10;
    let trials = 2_000;
    let max_of = |model: &NoiseModel, seed: u64| -> Vec<f64> {
        (0..trials)
            .map(|trial| {
                let base = RngSeed::new(seed, trial * mcharness::STREAMS_PER_TRIAL);
                let obs = noisegen::gen_noise(model, n, base).unwrap();
                let training = noisegen::gen_training_set(model, n, l, base.offset(1)).unwrap();
                let reference = averaged_periodogram(&training, IndexSet::Omega);
                let p = periodogram(&obs, IndexSet::Omega);
                let std = standardize(&p, &reference).unwrap();
                detectors::t_max(std.ordinates()).unwrap().value
            })
            .collect()
    };
    let white = max_of(&white_table(n), 7001);
    let colored = max_of(&ar6_table(n), 7002);
    let ks = gof::ks_test_two_sample(&white, &colored);
    assert!(ks.p_value > 0.01, "pivotality rejected: KS p = {}", ks.p_value);

    // Without standardization the raw maxima differ wildly.
    let raw_max = |model: &NoiseModel, seed: u64| -> Vec<f64> {
        (0..trials)
            .map(|trial| {
                let base = RngSeed::new(seed, trial * mcharness::STREAMS_PER_TRIAL);
                let obs = noisegen::gen_noise(model, n, base).unwrap();
                let p = periodogram(&obs, IndexSet::Omega);
                detectors::t_max(p.ordinates()).unwrap().value
            })
            .collect()
    };
    let white = raw_max(&white_table(n), 7003);
    let colored = raw_max(&ar6_table(n), 7004);
    let ks = gof::ks_test_two_sample(&white, &colored);
    assert!(ks.p_value < 1e-6, "raw maxima should differ: KS p = {}", ks.p_value);
}

#[test]
fn standardized_pvalues_are_uniform() {
    let n = 512;
    let l = 5;
    let mut pooled = Vec::new();
    for trial in 0..40u64 {
        let base = RngSeed::new(2024, trial * mcharness::STREAMS_PER_TRIAL);
        let model = ar6_table(n);
        let obs = noisegen::gen_noise(&model, n, base).unwrap();
        let training = noisegen::gen_training_set(&model, n, l, base.offset(1)).unwrap();
        let reference = averaged_periodogram(&training, IndexSet::Omega);
        let std = standardize(&periodogram(&obs, IndexSet::Omega), &reference).unwrap();
        let v = detectors::pvalues_standardized(&std, l).unwrap();
        pooled.extend_from_slice(v.values());
    }
    let ks = gof::ks_test_cdf(&pooled, |x| x.clamp(0.0, 1.0));
    assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
}

#[test]
fn analytic_threshold_hits_rate_end_to_end() {
    let n = 256;
    let l = 10;
    let trials = 10_000;
    let target = 0.05;
    let ex = Experiment {
        n,
        dt: 1.0,
        noise: ar6_table(n),
        signal: SignalSource::None,
        statistic: StatisticSpec::TM,
        trials,
        seed: RngSeed::new(90210, 0),
        standardization: Standardization::Averaged { l },
    };
    let gamma = analytic::gamma_tm(target, n, l).unwrap();
    let est = mcharness::estimate_rate(&ex, gamma).unwrap();
    let se = (target * (1.0 - target) / trials as f64).sqrt();
    assert!(
        (est.rate - target).abs() <= 3.0 * se,
        "rate {} vs target {target}",
        est.rate
    );
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let ex = Experiment {
        n: 128,
        dt: 1.0,
        noise: ar6_table(128),
        signal: SignalSource::None,
        statistic: StatisticSpec::TC { n_c: 2 },
        trials: 64,
        seed: RngSeed::new(5, 0),
        standardization: Standardization::Averaged { l: 3 },
    };
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| mcharness::run_statistics(&ex).unwrap());
    let quad = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| mcharness::run_statistics(&ex).unwrap());
    assert_eq!(single, quad);
}

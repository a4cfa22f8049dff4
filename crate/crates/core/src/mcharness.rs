//! Monte-Carlo engine: per-trial detection pipeline, empirical
//! false-alarm/detection rates, empirical ROC curves, the
//! parametric-standardization dispersion experiment, and analytic
//! detectability studies.
//!
//! Trials are embarrassingly parallel. Every trial derives its random
//! substreams as `seed.stream_index + trial * STREAMS_PER_TRIAL + role`,
//! so results are a pure function of `(Experiment, seed)` independent of
//! worker count and scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::arfit;
use crate::detectors;
use crate::error::{Error, Result};
use crate::noisegen::{gen_noise, gen_training_set, NoiseModel, RngSeed};
use crate::sigmodel::{
    multi_planet_rv, sinusoid_signal, KeplerianModel, MultiPlanetModel, SinusoidModel,
};
use crate::spectral::{
    averaged_periodogram, periodogram, standardize, IndexSet, PeriodogramVec, TimeSeries,
};

/// Stream stride reserved per trial; roles index into the block.
pub const STREAMS_PER_TRIAL: u64 = 1 << 20;
/// Role of the observation-noise stream inside a trial block.
const ROLE_OBSERVATION: u64 = 0;
/// First training-series role; series `l` uses `ROLE_TRAINING + l`.
const ROLE_TRAINING: u64 = 1;
/// First inner-trial role inside a dispersion-study fit block.
const ROLE_DISPERSION_INNER: u64 = 4096;

/// Deterministic signal added under the alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SignalSource {
    None,
    Sinusoids(SinusoidModel),
    Planets(MultiPlanetModel),
}

/// How the periodogram is standardized before the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Standardization {
    /// Raw periodogram, no standardization.
    None,
    /// Divide by the true noise PSD (reference mode).
    TruePsd,
    /// Divide by the averaged periodogram of a fresh `L`-series training
    /// set drawn each trial.
    Averaged { l: usize },
    /// Divide by an AR PSD fitted (with FPE order selection up to
    /// `max_order`) on a fresh `L`-series training set each trial.
    ArFitted { l: usize, max_order: usize },
}

/// Which statistic the experiment computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StatisticSpec {
    TM,
    TF,
    TC { n_c: usize },
    HC { alpha0: f64 },
    BJ { alpha0: f64 },
}

impl StatisticSpec {
    pub fn kind(&self) -> detectors::TestKind {
        match self {
            StatisticSpec::TM => detectors::TestKind::TM,
            StatisticSpec::TF => detectors::TestKind::TF,
            StatisticSpec::TC { .. } => detectors::TestKind::TC,
            StatisticSpec::HC { .. } => detectors::TestKind::HC,
            StatisticSpec::BJ { .. } => detectors::TestKind::BJ,
        }
    }
}

/// One full Monte-Carlo experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Experiment {
    pub n: usize,
    pub dt: f64,
    pub noise: NoiseModel,
    pub signal: SignalSource,
    pub statistic: StatisticSpec,
    pub trials: usize,
    pub seed: RngSeed,
    pub standardization: Standardization,
}

/// Binomial rate estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl RateEstimate {
    pub fn from_counts(hits: usize, trials: usize) -> Self {
        let rate = hits as f64 / trials as f64;
        RateEstimate {
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// One point of a result curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub y: f64,
    pub stderr: Option<f64>,
    pub analytic: bool,
}

/// A named curve with strictly increasing abscissa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveResult {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub points: Vec<CurvePoint>,
}

impl CurveResult {
    fn check(self) -> Result<Self> {
        for w in self.x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::domain("curve abscissa must be strictly increasing"));
            }
        }
        if self.x.len() != self.points.len() {
            return Err(Error::domain("curve abscissa/ordinate length mismatch"));
        }
        Ok(self)
    }
}

/// Experiment state that is invariant across trials, computed once.
struct Prepared {
    gen_model: NoiseModel,
    signal_samples: Option<Vec<f64>>,
    true_psd_reference: Option<PeriodogramVec>,
    whitenoise_sigma2: Option<f64>,
}

fn validate(ex: &Experiment) -> Result<()> {
    if ex.n < 4 || ex.n % 2 != 0 {
        return Err(Error::domain("experiment length must be even and >= 4"));
    }
    if !(ex.dt > 0.0) {
        return Err(Error::domain("sampling step must be positive"));
    }
    if ex.trials < 1 {
        return Err(Error::domain("experiment needs at least one trial"));
    }
    let eta = ex.n / 2 - 1;
    match ex.statistic {
        StatisticSpec::TC { n_c } => {
            if n_c < 1 || n_c > eta {
                return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
            }
        }
        StatisticSpec::HC { alpha0 } | StatisticSpec::BJ { alpha0 } => {
            if !(alpha0 > 0.0) || alpha0 > 1.0 || alpha0 * (eta as f64) < 1.0 {
                return Err(Error::domain("alpha0 must keep at least one order statistic"));
            }
        }
        _ => {}
    }
    match ex.standardization {
        Standardization::Averaged { l } => {
            if l < 1 {
                return Err(Error::domain("training size must be >= 1"));
            }
        }
        Standardization::ArFitted { l, max_order } => {
            if l < 1 {
                return Err(Error::domain("training size must be >= 1"));
            }
            if max_order >= ex.n / 2 {
                return Err(Error::domain("max AR order must be below N/2"));
            }
        }
        _ => {}
    }
    Ok(())
}

fn prepare(ex: &Experiment) -> Result<Prepared> {
    validate(ex)?;
    let gen_model = match &ex.noise {
        NoiseModel::Ar { .. } => ex.noise.clone(),
        NoiseModel::Tabulated { .. } => ex.noise.resampled(ex.n)?,
    };
    let signal_samples = match &ex.signal {
        SignalSource::None => None,
        SignalSource::Sinusoids(model) => {
            Some(sinusoid_signal(model, ex.n, ex.dt)?.samples().to_vec())
        }
        SignalSource::Planets(model) => {
            let times = crate::sigmodel::sample_times(ex.n, ex.dt);
            Some(multi_planet_rv(model, &times)?)
        }
    };
    let true_psd_reference = match ex.standardization {
        Standardization::TruePsd => {
            let grid = ex.noise.psd_on_grid(ex.n)?;
            Some(PeriodogramVec::from_ordinates(
                grid[1..ex.n / 2].to_vec(),
                ex.n,
                IndexSet::Omega,
            )?)
        }
        _ => None,
    };
    // HC/BJ without standardization assume white noise of known variance.
    let whitenoise_sigma2 = match (ex.standardization, ex.statistic) {
        (Standardization::None, StatisticSpec::HC { .. })
        | (Standardization::None, StatisticSpec::BJ { .. }) => {
            Some(ex.noise.process_variance()?)
        }
        _ => None,
    };
    Ok(Prepared { gen_model, signal_samples, true_psd_reference, whitenoise_sigma2 })
}

fn statistic_value(
    ex: &Experiment,
    prep: &Prepared,
    standardized: &PeriodogramVec,
) -> Result<f64> {
    let stat = match ex.statistic {
        StatisticSpec::TM => detectors::t_max(standardized.ordinates())?,
        StatisticSpec::TF => detectors::t_fisher(standardized.ordinates())?,
        StatisticSpec::TC { n_c } => detectors::t_c(standardized.ordinates(), n_c)?,
        StatisticSpec::HC { alpha0 } | StatisticSpec::BJ { alpha0 } => {
            let pvalues = match ex.standardization {
                Standardization::Averaged { l } => {
                    detectors::pvalues_standardized(standardized, l)?
                }
                Standardization::TruePsd | Standardization::ArFitted { .. } => {
                    // Standardized ordinates are treated as chi^2_2 / 2.
                    detectors::pvalues_whitenoise(standardized, 1.0)?
                }
                Standardization::None => detectors::pvalues_whitenoise(
                    standardized,
                    prep.whitenoise_sigma2.expect("prepared for HC/BJ"),
                )?,
            };
            match ex.statistic {
                StatisticSpec::HC { .. } => detectors::hc_star(&pvalues, alpha0)?,
                _ => detectors::bj(&pvalues, alpha0)?,
            }
        }
    };
    Ok(stat.value)
}

fn run_trial_prepared(ex: &Experiment, prep: &Prepared, trial_index: u64) -> Result<f64> {
    let base = ex.seed.offset(trial_index * STREAMS_PER_TRIAL);
    let noise = gen_noise(&prep.gen_model, ex.n, base.offset(ROLE_OBSERVATION))?;

    let observation = match &prep.signal_samples {
        None => noise,
        Some(signal) => {
            let samples: Vec<f64> = noise
                .samples()
                .iter()
                .zip(signal)
                .map(|(n, s)| n + s)
                .collect();
            TimeSeries::new(samples, 1.0)?
        }
    };
    let p = periodogram(&observation, IndexSet::Omega);

    let standardized = match ex.standardization {
        Standardization::None => p,
        Standardization::TruePsd => {
            standardize(&p, prep.true_psd_reference.as_ref().expect("prepared"))?
        }
        Standardization::Averaged { l } => {
            let training =
                gen_training_set(&prep.gen_model, ex.n, l, base.offset(ROLE_TRAINING))?;
            let reference = averaged_periodogram(&training, IndexSet::Omega);
            standardize(&p, &reference)?
        }
        Standardization::ArFitted { l, max_order } => {
            let training =
                gen_training_set(&prep.gen_model, ex.n, l, base.offset(ROLE_TRAINING))?;
            let fit = arfit::select_order_fpe(&training, max_order)?;
            arfit::ar_standardize(&p, &fit)
        }
    };
    statistic_value(ex, prep, &standardized)
}

/// One full pipeline pass; deterministic given `(ex.seed, trial_index)`.
pub fn run_trial(ex: &Experiment, trial_index: u64) -> Result<f64> {
    let prep = prepare(ex)?;
    run_trial_prepared(ex, &prep, trial_index)
}

/// Statistic values of all trials, in trial order.
pub fn run_statistics(ex: &Experiment) -> Result<Vec<f64>> {
    let prep = prepare(ex)?;
    (0..ex.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial_prepared(ex, &prep, trial))
        .collect()
}

/// Fraction of trials whose statistic exceeds the threshold.
pub fn estimate_rate(ex: &Experiment, threshold: f64) -> Result<RateEstimate> {
    Ok(estimate_rates(ex, &[threshold])?.remove(0))
}

/// Rates at several thresholds sharing one set of trials.
pub fn estimate_rates(ex: &Experiment, thresholds: &[f64]) -> Result<Vec<RateEstimate>> {
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::domain("thresholds must not be NaN"));
    }
    let values = run_statistics(ex)?;
    Ok(rates_from_values(&values, thresholds))
}

/// Exceedance rates of precomputed statistic values.
pub fn rates_from_values(values: &[f64], thresholds: &[f64]) -> Vec<RateEstimate> {
    thresholds
        .iter()
        .map(|&t| {
            let hits = values.iter().filter(|&&v| v > t).count();
            RateEstimate::from_counts(hits, values.len())
        })
        .collect()
}

/// Upper empirical quantile used as a threshold for a target rate.
fn empirical_threshold(sorted: &[f64], pfa: f64) -> f64 {
    let t = sorted.len();
    let idx = ((1.0 - pfa) * t as f64).ceil() as usize;
    sorted[idx.clamp(1, t) - 1]
}

/// Empirical ROC: thresholds from the null experiment's quantiles at each
/// target false-alarm rate, detection rates from the alternative trials.
pub fn roc_empirical(
    ex_null: &Experiment,
    ex_alt: &Experiment,
    pfa_grid: &[f64],
) -> Result<CurveResult> {
    analytic::validate_pfa_grid(pfa_grid)?;
    if ex_null.n != ex_alt.n
        || ex_null.statistic != ex_alt.statistic
        || ex_null.standardization != ex_alt.standardization
    {
        return Err(Error::GridMismatch(
            "null and alternative experiments must share grid, statistic, and standardization"
                .into(),
        ));
    }
    let smallest = pfa_grid[0];
    let needed = (10.0 / smallest).ceil() as usize;
    if ex_null.trials < needed {
        return Err(Error::domain(format!(
            "resolving pfa = {smallest} needs at least {needed} null trials, got {}",
            ex_null.trials
        )));
    }

    let mut null_values = run_statistics(ex_null)?;
    null_values.sort_by(f64::total_cmp);
    let alt_values = run_statistics(ex_alt)?;

    let points = pfa_grid
        .iter()
        .map(|&pfa| {
            let threshold = empirical_threshold(&null_values, pfa);
            let hits = alt_values.iter().filter(|&&v| v > threshold).count();
            let est = RateEstimate::from_counts(hits, alt_values.len());
            CurvePoint { y: est.rate, stderr: Some(est.stderr), analytic: false }
        })
        .collect();

    CurveResult {
        name: format!("{} empirical ROC", ex_alt.statistic.kind()),
        x_label: "pfa".into(),
        y_label: "pdet".into(),
        x: pfa_grid.to_vec(),
        points,
    }
    .check()
}

/// Dispersion of the true false-alarm rate across independent parametric
/// fits, for one training size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionBand {
    pub l: usize,
    pub thresholds: Vec<f64>,
    /// Mean true rate across fits, per threshold.
    pub mean_pfa: Vec<f64>,
    /// Across-fit standard deviation, per threshold.
    pub sd_pfa: Vec<f64>,
    pub min_pfa: Vec<f64>,
    pub max_pfa: Vec<f64>,
    /// The fit-equals-truth approximation, per threshold.
    pub approx_pfa: Vec<f64>,
    pub outer: usize,
    pub inner: usize,
}

/// For each training size: draw `outer` independent AR fits, estimate each
/// fit's true false-alarm rate of the `N_C`-th-largest test with `inner`
/// noise trials, and summarize the spread against the fit-equals-truth
/// approximation.
#[allow(clippy::too_many_arguments)]
pub fn ar_dispersion_study(
    noise: &NoiseModel,
    n: usize,
    n_c: usize,
    l_list: &[usize],
    thresholds: &[f64],
    outer: usize,
    inner: usize,
    seed: RngSeed,
) -> Result<Vec<DispersionBand>> {
    if !matches!(noise, NoiseModel::Ar { .. }) {
        return Err(Error::domain("dispersion study requires an AR noise model"));
    }
    if n < 4 || n % 2 != 0 {
        return Err(Error::domain("grid length must be even and >= 4"));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain("thresholds must be finite and >= 0"));
    }
    if outer < 2 || inner < 1 {
        return Err(Error::domain("need outer >= 2 fits and inner >= 1 trials"));
    }
    if inner as u64 + ROLE_DISPERSION_INNER > STREAMS_PER_TRIAL {
        return Err(Error::domain("inner trial count exceeds the stream block"));
    }
    let max_order = arfit::default_max_order(n);

    let mut bands = Vec::with_capacity(l_list.len());
    for (l_idx, &l) in l_list.iter().enumerate() {
        if l as u64 + ROLE_TRAINING > ROLE_DISPERSION_INNER {
            return Err(Error::domain("training size exceeds the stream block"));
        }
        // rate_matrix[fit][threshold]
        let rate_matrix: Vec<Vec<f64>> = (0..outer as u64)
            .into_par_iter()
            .map(|fit| {
                let block = (l_idx * outer) as u64 + fit;
                let base = seed.offset(block * STREAMS_PER_TRIAL);
                let training = gen_training_set(noise, n, l, base.offset(ROLE_TRAINING))?;
                let ar_fit = arfit::select_order_fpe(&training, max_order)?;

                let mut hits = vec![0usize; thresholds.len()];
                for t in 0..inner as u64 {
                    let noise_ts =
                        gen_noise(noise, n, base.offset(ROLE_DISPERSION_INNER + t))?;
                    let p = periodogram(&noise_ts, IndexSet::Omega);
                    let standardized = arfit::ar_standardize(&p, &ar_fit);
                    let value = detectors::t_c(standardized.ordinates(), n_c)?.value;
                    for (slot, &gamma) in hits.iter_mut().zip(thresholds) {
                        if value > gamma {
                            *slot += 1;
                        }
                    }
                }
                Ok(hits.into_iter().map(|h| h as f64 / inner as f64).collect())
            })
            .collect::<Result<_>>()?;

        let mut mean_pfa = Vec::with_capacity(thresholds.len());
        let mut sd_pfa = Vec::with_capacity(thresholds.len());
        let mut min_pfa = Vec::with_capacity(thresholds.len());
        let mut max_pfa = Vec::with_capacity(thresholds.len());
        let mut approx_pfa = Vec::with_capacity(thresholds.len());
        for (t_idx, &gamma) in thresholds.iter().enumerate() {
            let rates: Vec<f64> = rate_matrix.iter().map(|row| row[t_idx]).collect();
            let mean = rates.iter().sum::<f64>() / outer as f64;
            let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                / (outer - 1) as f64;
            mean_pfa.push(mean);
            sd_pfa.push(var.sqrt());
            min_pfa.push(rates.iter().cloned().fold(f64::INFINITY, f64::min));
            max_pfa.push(rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            approx_pfa.push(analytic::pfa_ar_approx(gamma, n, n_c)?);
        }
        bands.push(DispersionBand {
            l,
            thresholds: thresholds.to_vec(),
            mean_pfa,
            sd_pfa,
            min_pfa,
            max_pfa,
            approx_pfa,
            outer,
            inner,
        });
    }
    Ok(bands)
}

/// Training-set size, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingSize {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for TrainingSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainingSize::Finite(l) => write!(f, "{l}"),
            TrainingSize::Infinite => f.write_str("inf"),
        }
    }
}

/// Analytic detectability of a circular-orbit planet with the maximum
/// test, as a function of the sample count.
///
/// For each grid length `N` the sampling step is nudged so the orbital
/// frequency lands exactly on the Fourier grid (the spectrum is then
/// 1-sparse and the maximum test is the right tool); detection
/// probabilities come from the closed-form threshold and noncentral-F
/// product, with the chi-squared limit handling unbounded training sets.
pub fn detectability_study(
    planet: &KeplerianModel,
    noise: &NoiseModel,
    dt0: f64,
    pfa_list: &[f64],
    l_list: &[TrainingSize],
    n_grid: &[usize],
) -> Result<Vec<CurveResult>> {
    planet.validate()?;
    if planet.eccentricity != 0.0 {
        return Err(Error::Unsupported(
            "detectability study assumes a circular orbit (eccentricity 0)".into(),
        ));
    }
    if !(dt0 > 0.0) {
        return Err(Error::domain("sampling step must be positive"));
    }
    if n_grid.is_empty() || pfa_list.is_empty() || l_list.is_empty() {
        return Err(Error::domain("detectability grids must be nonempty"));
    }
    for w in n_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::domain("sample-count grid must be strictly increasing"));
        }
    }
    for &pfa in pfa_list {
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::domain("target rates must lie strictly in (0, 1)"));
        }
    }

    let mut curves = Vec::new();
    for &l in l_list {
        for &pfa in pfa_list {
            let mut points = Vec::with_capacity(n_grid.len());
            for &n in n_grid {
                if n < 4 || n % 2 != 0 {
                    return Err(Error::domain("grid lengths must be even and >= 4"));
                }
                // Snap the sampling step so that the orbital frequency sits
                // on Fourier index k0.
                let k0 = ((n as f64 * dt0 / planet.period).round() as usize).max(1);
                if k0 >= n / 2 {
                    return Err(Error::domain(format!(
                        "period {} is unresolved at N = {n} with dt ~ {dt0}",
                        planet.period
                    )));
                }
                let signal = if planet.k > 0.0 {
                    SinusoidModel::new(vec![crate::sigmodel::SinusoidComponent {
                        amplitude: planet.k,
                        frequency: k0 as f64 / n as f64,
                        phase: std::f64::consts::FRAC_PI_2,
                    }])?
                } else {
                    SinusoidModel::empty()
                };
                let scenario_l = match l {
                    TrainingSize::Finite(v) => v,
                    TrainingSize::Infinite => 1, // unused by the limit path
                };
                let sc = analytic::Scenario::from_noise_model(n, scenario_l, noise, signal)?;
                let pdet = match l {
                    TrainingSize::Finite(v) => {
                        let gamma = analytic::gamma_tm(pfa, n, v)?;
                        analytic::pdet_tm(gamma, &sc)?
                    }
                    TrainingSize::Infinite => {
                        let gamma = analytic::gamma_tm_inf(pfa, n)?;
                        analytic::pdet_tm_inf(gamma, &sc)?
                    }
                };
                points.push(CurvePoint { y: pdet, stderr: None, analytic: true });
            }
            curves.push(
                CurveResult {
                    name: format!("TM detectability L={l} pfa={pfa}"),
                    x_label: "n".into(),
                    y_label: "pdet".into(),
                    x: n_grid.iter().map(|&n| n as f64).collect(),
                    points,
                }
                .check()?,
            );
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::SinusoidComponent;

    fn white_null(n: usize, trials: usize, statistic: StatisticSpec) -> Experiment {
        Experiment {
            n,
            dt: 1.0,
            noise: NoiseModel::white(1.0).unwrap(),
            signal: SignalSource::None,
            statistic,
            trials,
            seed: RngSeed::new(424242, 0),
            standardization: Standardization::None,
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let ex = white_null(64, 4, StatisticSpec::TM);
        let a = run_trial(&ex, 3).unwrap();
        let b = run_trial(&ex, 3).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&ex, 4).unwrap();
        assert_ne!(a, c);
        let values = run_statistics(&ex).unwrap();
        assert_eq!(values[3], a);
    }

    #[test]
    fn raw_maximum_matches_exponential_max_law() {
        // White sigma^2 = 1 noise: raw ordinates are i.i.d. Exp(1), so the
        // maximum has CDF (1 - e^{-x})^eta.
        let n = 128;
        let eta = (n / 2 - 1) as f64;
        let ex = white_null(n, 4000, StatisticSpec::TM);
        let values = run_statistics(&ex).unwrap();
        let ks = crate::gof::ks_test_cdf(&values, |x| {
            if x <= 0.0 {
                0.0
            } else {
                (eta * (-(-x).exp()).ln_1p()).exp()
            }
        });
        assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
    }

    #[test]
    fn averaged_null_matches_f_max_law() {
        let n = 64;
        let l = 4;
        let eta = (n / 2 - 1) as f64;
        let ex = Experiment {
            standardization: Standardization::Averaged { l },
            noise: NoiseModel::white(1.0).unwrap().resampled(n).unwrap(),
            ..white_null(n, 3000, StatisticSpec::TM)
        };
        let values = run_statistics(&ex).unwrap();
        let ks = crate::gof::ks_test_cdf(&values, |x| {
            if x <= 0.0 {
                0.0
            } else {
                crate::specfun::f_cdf_2_2l(x, l as u64).unwrap().powf(eta)
            }
        });
        assert!(ks.p_value > 0.01, "KS p = {}", ks.p_value);
    }

    #[test]
    fn estimate_rate_extremes() {
        let ex = white_null(64, 50, StatisticSpec::TM);
        assert_eq!(estimate_rate(&ex, f64::NEG_INFINITY).unwrap().rate, 1.0);
        assert_eq!(estimate_rate(&ex, f64::INFINITY).unwrap().rate, 0.0);
        assert!(estimate_rate(&ex, f64::NAN).is_err());
    }

    #[test]
    fn empirical_rate_tracks_analytic() {
        let n = 128;
        let l = 5;
        let trials = 4000;
        let ex = Experiment {
            standardization: Standardization::Averaged { l },
            noise: NoiseModel::white(1.0).unwrap().resampled(n).unwrap(),
            ..white_null(n, trials, StatisticSpec::TM)
        };
        let gamma = analytic::gamma_tm(0.1, n, l).unwrap();
        let est = estimate_rate(&ex, gamma).unwrap();
        assert!(
            (est.rate - 0.1).abs() <= 3.0 * (0.1f64 * 0.9 / trials as f64).sqrt(),
            "rate {}",
            est.rate
        );
    }

    #[test]
    fn roc_identity_when_null_equals_alternative() {
        let n = 64;
        let ex_null = white_null(n, 2000, StatisticSpec::TM);
        let ex_alt = Experiment { seed: RngSeed::new(99, 0), ..ex_null.clone() };
        let grid = [0.05, 0.1, 0.2, 0.5];
        let curve = roc_empirical(&ex_null, &ex_alt, &grid).unwrap();
        for (i, &pfa) in grid.iter().enumerate() {
            let p = curve.points[i];
            assert!(
                (p.y - pfa).abs() <= 5.0 * p.stderr.unwrap().max(0.005),
                "pfa {pfa}: pdet {}",
                p.y
            );
        }
    }

    #[test]
    fn roc_requires_enough_null_trials() {
        let ex_null = white_null(64, 100, StatisticSpec::TM);
        let ex_alt = ex_null.clone();
        let err = roc_empirical(&ex_null, &ex_alt, &[0.01, 0.1]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1000"), "hint missing from: {msg}");
    }

    #[test]
    fn roc_detects_a_strong_signal() {
        let n = 64;
        let noise = NoiseModel::white(1.0).unwrap().resampled(n).unwrap();
        let ex_null = Experiment {
            standardization: Standardization::Averaged { l: 10 },
            noise: noise.clone(),
            ..white_null(n, 1000, StatisticSpec::TM)
        };
        let signal = SinusoidModel::new(vec![SinusoidComponent {
            amplitude: 1.5,
            frequency: 10.0 / n as f64,
            phase: 0.0,
        }])
        .unwrap();
        let ex_alt = Experiment {
            signal: SignalSource::Sinusoids(signal),
            seed: RngSeed::new(777, 0),
            ..ex_null.clone()
        };
        let curve = roc_empirical(&ex_null, &ex_alt, &[0.05, 0.1, 0.2]).unwrap();
        for p in &curve.points {
            assert!(p.y > 0.9, "pdet {}", p.y);
        }
    }

    #[test]
    fn dispersion_study_smoke() {
        let noise = crate::noisegen::reference_ar6();
        let bands = ar_dispersion_study(
            &noise,
            128,
            2,
            &[1, 8],
            &[2.0, 4.0],
            4,
            50,
            RngSeed::new(5150, 0),
        )
        .unwrap();
        assert_eq!(bands.len(), 2);
        for band in &bands {
            assert_eq!(band.mean_pfa.len(), 2);
            for (i, &m) in band.mean_pfa.iter().enumerate() {
                assert!((0.0..=1.0).contains(&m));
                assert!(band.min_pfa[i] <= m && m <= band.max_pfa[i]);
            }
        }
        // Tabulated noise rejected.
        assert!(ar_dispersion_study(
            &crate::noisegen::solar_proxy_psd(),
            128,
            2,
            &[1],
            &[2.0],
            4,
            10,
            RngSeed::new(0, 0),
        )
        .is_err());
    }

    #[test]
    fn exact_whitening_matches_approximation() {
        // Standardizing by the true PSD makes the approximate rate hold
        // up to Monte-Carlo error once N is large enough for leakage bias
        // to be negligible.
        let n = 1024;
        let noise = crate::noisegen::reference_ar6();
        let ex = Experiment {
            n,
            dt: 1.0,
            noise: noise.clone(),
            signal: SignalSource::None,
            statistic: StatisticSpec::TC { n_c: 3 },
            trials: 2000,
            seed: RngSeed::new(31337, 0),
            standardization: Standardization::TruePsd,
        };
        let gamma = 4.0;
        let est = estimate_rate(&ex, gamma).unwrap();
        let approx = analytic::pfa_ar_approx(gamma, n, 3).unwrap();
        assert!(
            (est.rate - approx).abs() <= 4.0 * est.stderr.max(1e-3),
            "rate {} vs approx {approx}",
            est.rate
        );
    }

    #[test]
    fn detectability_study_shapes_and_monotonicity() {
        let planet = KeplerianModel {
            k: 0.54,
            period: 19.38, // in units of dt0
            eccentricity: 0.0,
            omega: 0.0,
            t_periastron: 0.0,
            gamma0: 0.0,
        };
        let noise = NoiseModel::white(2.0).unwrap();
        let curves = detectability_study(
            &planet,
            &noise,
            1.0,
            &[0.1],
            &[TrainingSize::Finite(5), TrainingSize::Infinite],
            &[128, 256, 512],
        )
        .unwrap();
        assert_eq!(curves.len(), 2);
        for curve in &curves {
            for w in curve.points.windows(2) {
                assert!(w[1].y >= w[0].y - 1e-12, "{}", curve.name);
            }
        }
        // Eccentric planets unsupported here.
        let ecc = KeplerianModel { eccentricity: 0.5, ..planet };
        assert!(matches!(
            detectability_study(&ecc, &noise, 1.0, &[0.1], &[TrainingSize::Infinite], &[128]),
            Err(Error::Unsupported(_))
        ));
    }
}

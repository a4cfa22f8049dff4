//! Closed-form false-alarm and detection rates for the maximum test and
//! the order-statistic test on standardized periodograms, the spectral
//! leakage kernels and noncentrality parameters behind them, and the
//! reference rates of detectors that ignore noise color.
//!
//! All rates assume ordinates restricted to the interior grid `Omega`
//! with `eta := N/2 - 1` of them; DC/Nyquist variants exist for the
//! noncentrality parameters but are not folded into the product formulas.

use num_complex::Complex64;

use crate::detectors::TestKind;
use crate::error::{Error, Result};
use crate::noisegen::NoiseModel;
use crate::sigmodel::SinusoidModel;
use crate::specfun::{self, DistParams};
use crate::spectral::IndexSet;

use std::f64::consts::PI;

/// Noncentralities below this floor are pooled into the central-F bulk.
const LAMBDA_FLOOR: f64 = 1e-12;

/// Everything the closed-form rate formulas need: grid size, training
/// size, noise PSD on the grid, and the deterministic signal.
#[derive(Debug, Clone)]
pub struct Scenario {
    n: usize,
    l: usize,
    noise_psd: Vec<f64>,
    signal: SinusoidModel,
}

impl Scenario {
    /// `noise_psd` holds `S(k/N)` for `k = 0..=N/2`.
    pub fn new(n: usize, l: usize, noise_psd: Vec<f64>, signal: SinusoidModel) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::domain("scenario length must be even and >= 4"));
        }
        if l < 1 {
            return Err(Error::domain("training size must be >= 1"));
        }
        if noise_psd.len() != n / 2 + 1 {
            return Err(Error::GridMismatch(format!(
                "noise PSD needs {} grid values, got {}",
                n / 2 + 1,
                noise_psd.len()
            )));
        }
        if noise_psd.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::domain("noise PSD must be positive everywhere"));
        }
        Ok(Scenario { n, l, noise_psd, signal })
    }

    /// Sample the PSD of a noise model onto the grid.
    pub fn from_noise_model(
        n: usize,
        l: usize,
        noise: &NoiseModel,
        signal: SinusoidModel,
    ) -> Result<Self> {
        Scenario::new(n, l, noise.psd_on_grid(n)?, signal)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of interior Fourier ordinates, `N/2 - 1`.
    pub fn eta(&self) -> usize {
        self.n / 2 - 1
    }

    pub fn noise_psd(&self) -> &[f64] {
        &self.noise_psd
    }

    pub fn signal(&self) -> &SinusoidModel {
        &self.signal
    }
}

/// Noncentrality parameters on (a subset of) the Fourier grid.
#[derive(Debug, Clone)]
pub struct NoncentralityVec {
    lambdas: Vec<f64>,
    n: usize,
    index_set: IndexSet,
}

impl NoncentralityVec {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index_set(&self) -> IndexSet {
        self.index_set
    }
}

/// `sin(N pi u) / (N sin(pi u))` with its continuous limit on integers.
fn dirichlet_ratio(u: f64, n: usize) -> f64 {
    let nearest = u.round();
    let frac = u - nearest;
    if frac.abs() < 1e-13 {
        // Limit value (-1)^{(N+1) m} at integer m.
        let m = nearest as i64;
        if ((n as i64 + 1) * m) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    } else {
        (n as f64 * PI * u).sin() / (n as f64 * (PI * u).sin())
    }
}

/// Dirichlet kernel `D_N(nu) = (1/N) sum_{j=1}^{N} e^{i 2 pi nu j}`
/// in closed form; equals 1 whenever `nu` is an integer.
pub fn dirichlet_kernel(nu: f64, n: usize) -> Complex64 {
    let ratio = dirichlet_ratio(nu, n);
    let phase = (n as f64 + 1.0) * PI * nu;
    ratio * Complex64::new(phase.cos(), phase.sin())
}

/// Fejer kernel `K_N(nu) = |D_N(nu)|^2`.
pub fn fejer_kernel(nu: f64, n: usize) -> f64 {
    let r = dirichlet_ratio(nu, n);
    r * r
}

/// Leakage amplitude and phase of sinusoid `q` seen at frequency `nu`.
///
/// This is the kernel expansion of the signal's DFT: the positive- and
/// negative-frequency Dirichlet lobes combine into one complex number
/// per (sinusoid, bin) pair.
fn leakage_term(frequency: f64, phase: f64, nu: f64, n: usize) -> (f64, f64) {
    let x_plus = dirichlet_ratio(frequency - nu, n);
    let x_minus = dirichlet_ratio(frequency + nu, n);
    let theta_plus = (n as f64 + 1.0) * PI * (frequency - nu) + phase - PI / 2.0;
    let theta_minus = -((n as f64 + 1.0) * PI * (frequency + nu) + phase + PI / 2.0);

    let modulus = (x_plus * x_plus + x_minus * x_minus
        - 2.0 * x_plus * x_minus * (theta_plus - theta_minus).cos())
    .max(0.0)
    .sqrt();
    let re = x_plus * theta_plus.cos() - x_minus * theta_minus.cos();
    let im = x_plus * theta_plus.sin() - x_minus * theta_minus.sin();
    (modulus, f64::atan2(im, re))
}

fn lambda_at(sc: &Scenario, k: usize) -> f64 {
    let n = sc.n;
    let nu = k as f64 / n as f64;
    let comps = sc.signal.components();
    if comps.is_empty() {
        return 0.0;
    }
    let terms: Vec<(f64, f64, f64)> = comps
        .iter()
        .map(|c| {
            let (kappa, theta) = leakage_term(c.frequency, c.phase, nu, n);
            (c.amplitude, kappa, theta)
        })
        .collect();

    let mut acc = 0.0;
    for (q, &(aq, kq, tq)) in terms.iter().enumerate() {
        acc += aq * aq * kq * kq;
        let mut cross = 0.0;
        for &(al, kl, tl) in &terms[q + 1..] {
            cross += al * kl * (tq - tl).cos();
        }
        acc += 2.0 * aq * kq * cross;
    }
    let s = sc.noise_psd[k];
    let full = n as f64 / (2.0 * s) * acc;
    // Halved at the DC and Nyquist ordinates.
    let value = if k == 0 || k == n / 2 { full / 2.0 } else { full };
    value.max(0.0)
}

/// Noncentrality parameters over the interior grid `Omega`.
pub fn noncentrality(sc: &Scenario) -> NoncentralityVec {
    let lambdas = (1..sc.n / 2).map(|k| lambda_at(sc, k)).collect();
    NoncentralityVec { lambdas, n: sc.n, index_set: IndexSet::Omega }
}

/// Noncentrality parameters including the DC and Nyquist ordinates, where
/// the value is halved.
pub fn noncentrality_full(sc: &Scenario) -> NoncentralityVec {
    let lambdas = (0..=sc.n / 2).map(|k| lambda_at(sc, k)).collect();
    NoncentralityVec { lambdas, n: sc.n, index_set: IndexSet::Full }
}

fn check_grid(n: usize, l: usize) -> Result<usize> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::domain("grid length must be even and >= 4"));
    }
    if l < 1 {
        return Err(Error::domain("training size must be >= 1"));
    }
    Ok(n / 2 - 1)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::domain("threshold must be >= 0"));
    }
    Ok(())
}

/// False-alarm rate of the maximum test on a standardized periodogram:
/// `1 - (1 - (L/(gamma+L))^L)^eta`.
pub fn pfa_tm(gamma: f64, n: usize, l: usize) -> Result<f64> {
    let eta = check_grid(n, l)?;
    check_gamma(gamma)?;
    let u = specfun::f_sf_2_2l(gamma, l as u64)?;
    Ok(-((eta as f64) * (-u).ln_1p()).exp_m1())
}

/// Threshold achieving a target false-alarm rate for the maximum test:
/// `L [ (1 - (1 - pfa)^{1/eta})^{-1/L} - 1 ]`.
pub fn gamma_tm(pfa: f64, n: usize, l: usize) -> Result<f64> {
    let eta = check_grid(n, l)?;
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain("target false-alarm rate must lie strictly in (0, 1)"));
    }
    let inner = -((-pfa).ln_1p() / eta as f64).exp_m1();
    let lf = l as f64;
    Ok(lf * (inner.powf(-1.0 / lf) - 1.0))
}

/// Detection probability of the maximum test at threshold `gamma`:
/// `1 - prod_k Phi_{F_{lambda_k}}(gamma, 2, 2L)`.
pub fn pdet_tm(gamma: f64, sc: &Scenario) -> Result<f64> {
    check_gamma(gamma)?;
    let lambdas = noncentrality(sc);
    let central = specfun::f_cdf_2_2l(gamma, sc.l as u64)?;
    let mut log_prod = 0.0f64;
    let mut central_count = 0usize;
    for &lambda in lambdas.lambdas() {
        if lambda <= LAMBDA_FLOOR {
            central_count += 1;
        } else {
            let phi = specfun::f_cdf(gamma, DistParams::new(2, 2 * sc.l as u64, lambda)?)?;
            if phi == 0.0 {
                return Ok(1.0);
            }
            log_prod += phi.ln();
        }
    }
    if central == 0.0 && central_count > 0 {
        return Ok(1.0);
    }
    if central_count > 0 {
        log_prod += central_count as f64 * central.ln();
    }
    Ok((-log_prod.exp_m1()).clamp(0.0, 1.0))
}

/// Analytic ROC of the maximum test over a strictly increasing grid of
/// target false-alarm rates in `(0, 1]`.
pub fn roc_tm(pfa_grid: &[f64], sc: &Scenario) -> Result<Vec<(f64, f64)>> {
    validate_pfa_grid(pfa_grid)?;
    pfa_grid
        .iter()
        .map(|&pfa| {
            let gamma = if pfa == 1.0 { 0.0 } else { gamma_tm(pfa, sc.n, sc.l)? };
            Ok((pfa, pdet_tm(gamma, sc)?))
        })
        .collect()
}

pub(crate) fn validate_pfa_grid(pfa_grid: &[f64]) -> Result<()> {
    if pfa_grid.is_empty() {
        return Err(Error::domain("false-alarm grid is empty"));
    }
    for w in pfa_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::domain("false-alarm grid must be strictly increasing"));
        }
    }
    if pfa_grid[0] <= 0.0 || pfa_grid[pfa_grid.len() - 1] > 1.0 {
        return Err(Error::domain("false-alarm grid must lie in (0, 1]"));
    }
    Ok(())
}

/// False-alarm rate of the `N_C`-th-largest test:
/// `I_u(N_C, N/2 - N_C)` with `u = (L/(gamma+L))^L`.
pub fn pfa_tc(gamma: f64, n: usize, l: usize, n_c: usize) -> Result<f64> {
    let eta = check_grid(n, l)?;
    check_gamma(gamma)?;
    if n_c < 1 || n_c > eta {
        return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
    }
    let u = specfun::f_sf_2_2l(gamma, l as u64)?;
    specfun::reg_inc_beta(u, n_c as f64, (n / 2 - n_c) as f64)
}

/// Threshold achieving a target false-alarm rate for the
/// `N_C`-th-largest test (numeric inversion of [`pfa_tc`]).
pub fn gamma_tc(pfa: f64, n: usize, l: usize, n_c: usize) -> Result<f64> {
    let eta = check_grid(n, l)?;
    if n_c < 1 || n_c > eta {
        return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
    }
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain("target false-alarm rate must lie strictly in (0, 1)"));
    }
    // I_u(N_C, N/2 - N_C) is increasing in u; bisect on u and map back.
    let (a, b) = (n_c as f64, (n / 2 - n_c) as f64);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if specfun::reg_inc_beta(mid, a, b)? < pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let lf = l as f64;
    Ok(lf * (u.powf(-1.0 / lf) - 1.0))
}

/// Per-ordinate exceedance probabilities split into the noncentral few
/// and the central bulk.
fn exceedance_split(gamma: f64, sc: &Scenario) -> Result<(Vec<f64>, usize, f64)> {
    let u = specfun::f_sf_2_2l(gamma, sc.l as u64)?;
    let lambdas = noncentrality(sc);
    let mut active = Vec::new();
    let mut bulk = 0usize;
    for &lambda in lambdas.lambdas() {
        if lambda <= LAMBDA_FLOOR {
            bulk += 1;
        } else {
            let phi = specfun::f_cdf(gamma, DistParams::new(2, 2 * sc.l as u64, lambda)?)?;
            active.push(1.0 - phi);
        }
    }
    Ok((active, bulk, u))
}

fn ln_choose(n: usize, k: usize) -> f64 {
    specfun::ln_gamma(n as f64 + 1.0)
        - specfun::ln_gamma(k as f64 + 1.0)
        - specfun::ln_gamma((n - k) as f64 + 1.0)
}

/// `Pr(Bin(m, q) <= t)` for the handful of small `t` needed here.
fn binomial_cdf_table(m: usize, q: f64, t_max: usize) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(t_max + 1);
    if m == 0 || q == 0.0 {
        return vec![1.0; t_max + 1];
    }
    if q == 1.0 {
        return (0..=t_max).map(|t| if t >= m { 1.0 } else { 0.0 }).collect();
    }
    let mut acc = 0.0;
    for b in 0..=t_max {
        if b <= m {
            let ln_pmf =
                ln_choose(m, b) + b as f64 * q.ln() + (m - b) as f64 * (-q).ln_1p();
            acc += ln_pmf.exp();
        }
        cdf.push(acc.min(1.0));
    }
    cdf
}

/// Detection probability of the `N_C`-th-largest test.
///
/// The exceedance count is a sum of independent non-identical Bernoulli
/// variables; its lower tail is evaluated exactly by a Poisson-binomial
/// recursion over the noncentral ordinates convolved with a binomial
/// block for the central bulk.
pub fn pdet_tc(gamma: f64, sc: &Scenario, n_c: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let eta = sc.eta();
    if n_c < 1 || n_c > eta {
        return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
    }
    let (active, bulk, u) = exceedance_split(gamma, sc)?;
    let cap = n_c - 1;

    // Poisson-binomial pmf of the active count, truncated above `cap`
    // (mass migrating past the cap is never needed for the lower tail).
    let mut pmf = vec![0.0f64; cap + 1];
    pmf[0] = 1.0;
    for &q in &active {
        for j in (0..=cap).rev() {
            let stay = pmf[j] * (1.0 - q);
            let step = if j > 0 { pmf[j - 1] * q } else { 0.0 };
            pmf[j] = stay + step;
        }
    }

    let bulk_cdf = binomial_cdf_table(bulk, u, cap);
    let mut tail = 0.0;
    for (a, &pa) in pmf.iter().enumerate() {
        tail += pa * bulk_cdf[cap - a];
    }
    Ok((1.0 - tail).clamp(0.0, 1.0))
}

/// Literal subset-sum evaluation of the `N_C`-th-largest test's detection
/// probability. Exponential cost; reference oracle for small grids only.
pub fn pdet_tc_bruteforce(gamma: f64, sc: &Scenario, n_c: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let eta = sc.eta();
    if eta > 20 {
        return Err(Error::domain(format!(
            "bruteforce enumeration limited to eta <= 20, got {eta}"
        )));
    }
    if n_c < 1 || n_c > eta {
        return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
    }
    let central = specfun::f_cdf_2_2l(gamma, sc.l as u64)?;
    let lambdas = noncentrality(sc);
    let phis: Vec<f64> = lambdas
        .lambdas()
        .iter()
        .map(|&lambda| {
            if lambda <= LAMBDA_FLOOR {
                Ok(central)
            } else {
                specfun::f_cdf(gamma, DistParams::new(2, 2 * sc.l as u64, lambda)?)
            }
        })
        .collect::<Result<_>>()?;

    // Sum Pr(exactly the ordinates in S exceed gamma) over all |S| < N_C.
    fn walk(phis: &[f64], k: usize, exceeding: usize, prod: f64, n_c: usize, total: &mut f64) {
        if k == phis.len() {
            *total += prod;
            return;
        }
        walk(phis, k + 1, exceeding, prod * phis[k], n_c, total);
        if exceeding + 1 < n_c {
            walk(phis, k + 1, exceeding + 1, prod * (1.0 - phis[k]), n_c, total);
        }
    }
    let mut below = 0.0;
    walk(&phis, 0, 0, 1.0, n_c, &mut below);
    Ok((1.0 - below).clamp(0.0, 1.0))
}

/// False-alarm rates a detector *assumes* when it treats the noise as
/// white with known variance and thresholds `2 P / sigma^2` at `gamma`.
pub fn pfa_white_assumed(gamma: f64, n: usize, test: TestKind, n_c: usize) -> Result<f64> {
    let eta = check_grid(n, 1)?;
    check_gamma(gamma)?;
    let survival = (-gamma / 2.0).exp(); // Pr(chi^2_2 > gamma)
    match test {
        TestKind::TM => Ok(-((eta as f64) * (-survival).ln_1p()).exp_m1()),
        TestKind::TC => {
            if n_c < 1 || n_c > eta {
                return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
            }
            specfun::reg_inc_beta(survival, n_c as f64, (n / 2 - n_c) as f64)
        }
        other => Err(Error::Unsupported(format!(
            "white-noise-assumed rate defined for TM and TC only, not {other}"
        ))),
    }
}

/// Threshold on `2 P / sigma^2` that the white-noise-assuming detector
/// believes achieves the target false-alarm rate.
pub fn gamma_white_assumed(pfa: f64, n: usize, test: TestKind, n_c: usize) -> Result<f64> {
    let eta = check_grid(n, 1)?;
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain("target false-alarm rate must lie strictly in (0, 1)"));
    }
    match test {
        TestKind::TM => {
            let inner = -((-pfa).ln_1p() / eta as f64).exp_m1();
            Ok(-2.0 * inner.ln())
        }
        TestKind::TC => {
            if n_c < 1 || n_c > eta {
                return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
            }
            let (a, b) = (n_c as f64, (n / 2 - n_c) as f64);
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if specfun::reg_inc_beta(mid, a, b)? < pfa {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(-2.0 * (0.5 * (lo + hi)).ln())
        }
        other => Err(Error::Unsupported(format!(
            "white-noise-assumed threshold defined for TM and TC only, not {other}"
        ))),
    }
}

/// Approximate false-alarm rate of the `N_C`-th-largest test standardized
/// by a fitted parametric PSD, pretending the fit equals the truth:
/// `I_u(N_C, N/2 - N_C)` with `u = e^{-gamma}`.
pub fn pfa_ar_approx(gamma: f64, n: usize, n_c: usize) -> Result<f64> {
    let eta = check_grid(n, 1)?;
    check_gamma(gamma)?;
    if n_c < 1 || n_c > eta {
        return Err(Error::domain(format!("order parameter {n_c} outside 1..={eta}")));
    }
    specfun::reg_inc_beta((-gamma).exp(), n_c as f64, (n / 2 - n_c) as f64)
}

/// Infinite-training limit of [`pfa_tm`]: standardized ordinates become
/// `chi^2_2 / 2` variables.
pub fn pfa_tm_inf(gamma: f64, n: usize) -> Result<f64> {
    let eta = check_grid(n, 1)?;
    check_gamma(gamma)?;
    let survival = (-gamma).exp(); // Pr(chi^2_2 / 2 > gamma)
    Ok(-((eta as f64) * (-survival).ln_1p()).exp_m1())
}

/// Infinite-training limit of [`gamma_tm`].
pub fn gamma_tm_inf(pfa: f64, n: usize) -> Result<f64> {
    let eta = check_grid(n, 1)?;
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain("target false-alarm rate must lie strictly in (0, 1)"));
    }
    let inner = -((-pfa).ln_1p() / eta as f64).exp_m1();
    Ok(-inner.ln())
}

/// Infinite-training limit of [`pdet_tm`].
pub fn pdet_tm_inf(gamma: f64, sc: &Scenario) -> Result<f64> {
    check_gamma(gamma)?;
    let lambdas = noncentrality(sc);
    let central = specfun::chi2_cdf(2.0 * gamma, 2, 0.0)?;
    let mut log_prod = 0.0f64;
    let mut central_count = 0usize;
    for &lambda in lambdas.lambdas() {
        if lambda <= LAMBDA_FLOOR {
            central_count += 1;
        } else {
            let phi = specfun::chi2_cdf(2.0 * gamma, 2, lambda)?;
            if phi == 0.0 {
                return Ok(1.0);
            }
            log_prod += phi.ln();
        }
    }
    if central == 0.0 && central_count > 0 {
        return Ok(1.0);
    }
    if central_count > 0 {
        log_prod += central_count as f64 * central.ln();
    }
    Ok((-log_prod.exp_m1()).clamp(0.0, 1.0))
}

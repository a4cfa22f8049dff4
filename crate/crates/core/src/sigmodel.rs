//! Deterministic signal generators: multi-sinusoid models and Keplerian
//! radial-velocity signatures.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;

/// One sinusoid: amplitude, frequency in cycles per sample, phase in
/// `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidComponent {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// Sum of sinusoids; the component list may be empty (pure-noise case).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SinusoidModel {
    components: Vec<SinusoidComponent>,
}

impl SinusoidModel {
    /// Validates amplitudes (`> 0`), frequencies (`0 < f < 1/2`, below
    /// Nyquist) and normalizes phases into `[0, 2 pi)`.
    pub fn new(components: Vec<SinusoidComponent>) -> Result<Self> {
        let mut out = Vec::with_capacity(components.len());
        for c in components {
            if !(c.amplitude > 0.0) || !c.amplitude.is_finite() {
                return Err(Error::domain("sinusoid amplitude must be positive"));
            }
            if !(c.frequency > 0.0) || c.frequency >= 0.5 {
                return Err(Error::domain(format!(
                    "sinusoid frequency {} must lie in (0, 1/2) cycles/sample",
                    c.frequency
                )));
            }
            if !c.phase.is_finite() {
                return Err(Error::domain("sinusoid phase must be finite"));
            }
            out.push(SinusoidComponent {
                phase: c.phase.rem_euclid(2.0 * PI),
                ..c
            });
        }
        Ok(SinusoidModel { components: out })
    }

    pub fn empty() -> Self {
        SinusoidModel::default()
    }

    /// Build from physical `(amplitude, period, phase)` triples and a
    /// sampling step in the same time units; frequencies become
    /// `dt / period` cycles per sample.
    pub fn from_physical(items: &[(f64, f64, f64)], dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::domain("sampling step must be positive"));
        }
        let components = items
            .iter()
            .map(|&(amplitude, period, phase)| SinusoidComponent {
                amplitude,
                frequency: dt / period,
                phase,
            })
            .collect();
        SinusoidModel::new(components)
    }

    pub fn components(&self) -> &[SinusoidComponent] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Samples `sum_q alpha_q sin(2 pi f_q j + phi_q)` at `j = 1..=N`.
pub fn sinusoid_signal(m: &SinusoidModel, n: usize, dt: f64) -> Result<TimeSeries> {
    let mut samples = vec![0.0; n];
    for c in &m.components {
        for (idx, s) in samples.iter_mut().enumerate() {
            let j = (idx + 1) as f64;
            *s += c.amplitude * (2.0 * PI * c.frequency * j + c.phase).sin();
        }
    }
    TimeSeries::new(samples, dt)
}

/// Keplerian orbit parameters of one planet's radial-velocity signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianModel {
    /// RV semi-amplitude (velocity units).
    pub k: f64,
    /// Orbital period (time units).
    pub period: f64,
    /// Eccentricity in `[0, 1)`.
    pub eccentricity: f64,
    /// Argument of periastron (rad).
    pub omega: f64,
    /// Periastron epoch (time units).
    pub t_periastron: f64,
    /// Systemic velocity (velocity units).
    pub gamma0: f64,
}

impl KeplerianModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::domain("RV semi-amplitude must be >= 0"));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::domain("orbital period must be positive"));
        }
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(Error::domain("eccentricity must lie in [0, 1)"));
        }
        if !self.omega.is_finite() || !self.t_periastron.is_finite() || !self.gamma0.is_finite() {
            return Err(Error::domain("orbit angles and epochs must be finite"));
        }
        Ok(())
    }
}

/// A planetary system: one or more Keplerian signatures sharing the star's
/// systemic velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPlanetModel {
    planets: Vec<KeplerianModel>,
}

impl MultiPlanetModel {
    pub fn new(planets: Vec<KeplerianModel>) -> Result<Self> {
        if planets.is_empty() {
            return Err(Error::domain("planetary system needs at least one planet"));
        }
        for p in &planets {
            p.validate()?;
        }
        Ok(MultiPlanetModel { planets })
    }

    pub fn planets(&self) -> &[KeplerianModel] {
        &self.planets
    }
}

/// Solve Kepler's equation `E - e sin E = M` for the eccentric anomaly.
///
/// Newton iteration safeguarded by bisection on a bracket that always
/// contains the root; the residual is driven below `1e-12` rad.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::domain("eccentricity must lie in [0, 1)"));
    }
    if !mean_anomaly.is_finite() {
        return Err(Error::domain("mean anomaly must be finite"));
    }
    // Reduce to [0, 2 pi); sin is periodic so the offset adds back exactly.
    let two_pi = 2.0 * PI;
    let cycles = (mean_anomaly / two_pi).floor();
    let m = mean_anomaly - cycles * two_pi;

    let f = |x: f64| x - e * x.sin() - m;
    let mut lo = 0.0;
    let mut hi = two_pi;
    let mut x = if e < 0.8 { m } else { PI };
    for _ in 0..100 {
        let fx = f(x);
        if fx.abs() <= 1e-13 {
            return Ok(x + cycles * two_pi);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let deriv = 1.0 - e * x.cos();
        let newton = x - fx / deriv;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // The equation is monotone with derivative >= 1 - e > 0; reaching this
    // point means something is numerically off.
    let fx = f(x);
    if fx.abs() <= 1e-12 {
        Ok(x + cycles * two_pi)
    } else {
        Err(Error::Convergence(format!(
            "Kepler solve stalled at M={mean_anomaly}, e={e} (residual {fx:.3e})"
        )))
    }
}

/// True anomaly from the eccentric anomaly.
fn true_anomaly(ecc_anomaly: f64, e: f64) -> f64 {
    2.0 * f64::atan2(
        (1.0 + e).sqrt() * (ecc_anomaly / 2.0).sin(),
        (1.0 - e).sqrt() * (ecc_anomaly / 2.0).cos(),
    )
}

/// Radial velocity `v(t) = gamma0 + K [cos(omega + nu(t)) + e cos omega]`
/// sampled at the given times.
pub fn keplerian_rv(m: &KeplerianModel, times: &[f64]) -> Result<Vec<f64>> {
    m.validate()?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mean = 2.0 * PI * (t - m.t_periastron) / m.period;
        let ecc = solve_kepler(mean, m.eccentricity)?;
        let nu = true_anomaly(ecc, m.eccentricity);
        out.push(m.gamma0 + m.k * ((m.omega + nu).cos() + m.eccentricity * m.omega.cos()));
    }
    Ok(out)
}

/// Sum of the planets' signatures with the systemic velocity applied once
/// (it belongs to the star, not to each planet).
pub fn multi_planet_rv(m: &MultiPlanetModel, times: &[f64]) -> Result<Vec<f64>> {
    let gamma0 = m.planets[0].gamma0;
    let mut total = vec![gamma0; times.len()];
    for p in m.planets() {
        let v = keplerian_rv(p, times)?;
        for (acc, vi) in total.iter_mut().zip(v) {
            *acc += vi - p.gamma0;
        }
    }
    Ok(total)
}

/// Sampling instants `t_j = j dt`, `j = 1..=N`.
pub fn sample_times(n: usize, dt: f64) -> Vec<f64> {
    (1..=n).map(|j| j as f64 * dt).collect()
}

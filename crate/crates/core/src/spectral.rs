//! Periodogram, averaged periodogram over a training set, and the
//! frequency-wise standardized periodogram on the Fourier grid.
//!
//! Frequencies are expressed in cycles per sample throughout; the
//! periodogram uses the `1/N` scaling of a unit sampling step, so any
//! physical-unit conversion is a presentation concern of the caller and
//! cancels in standardized ratios anyway.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Which Fourier indices a periodogram covers.
///
/// `Omega` is the default working set `k = 1 .. N/2 - 1`, excluding the DC
/// and Nyquist ordinates whose null marginals differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexSet {
    /// `k = 0 ..= N/2`.
    Full,
    /// `k = 1 ..= N/2 - 1`.
    Omega,
}

impl IndexSet {
    /// First Fourier index covered.
    pub fn first(self) -> usize {
        match self {
            IndexSet::Full => 0,
            IndexSet::Omega => 1,
        }
    }

    /// Number of ordinates for an even series length `n`.
    pub fn len(self, n: usize) -> usize {
        match self {
            IndexSet::Full => n / 2 + 1,
            IndexSet::Omega => n / 2 - 1,
        }
    }
}

/// Evenly sampled real-valued series with sampling step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    dt: f64,
}

impl TimeSeries {
    /// `samples` must be finite, of even length `>= 4`; `dt > 0`.
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.len() < 4 || samples.len() % 2 != 0 {
            return Err(Error::domain(format!(
                "time series length must be even and >= 4, got {}",
                samples.len()
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("time series contains non-finite samples"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain("sampling step must be positive and finite"));
        }
        Ok(TimeSeries { samples, dt })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Same samples relabelled with a different sampling step.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain("sampling step must be positive and finite"));
        }
        self.dt = dt;
        Ok(self)
    }
}

/// `L` independent noise series sharing one sampling grid.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    series: Vec<TimeSeries>,
}

impl TrainingSet {
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::domain("training set must hold at least one series"))?;
        let (n, dt) = (first.n(), first.dt());
        for s in &series {
            if s.n() != n || s.dt() != dt {
                return Err(Error::GridMismatch(
                    "training series must share length and sampling step".into(),
                ));
            }
        }
        Ok(TrainingSet { series })
    }

    pub fn l(&self) -> usize {
        self.series.len()
    }

    pub fn n(&self) -> usize {
        self.series[0].n()
    }

    pub fn dt(&self) -> f64 {
        self.series[0].dt()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }
}

/// Periodogram ordinates on (a subset of) the Fourier grid of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramVec {
    ordinates: Vec<f64>,
    n: usize,
    index_set: IndexSet,
}

impl PeriodogramVec {
    /// Wrap precomputed ordinates; lengths must match the index set.
    pub fn from_ordinates(ordinates: Vec<f64>, n: usize, index_set: IndexSet) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::domain("periodogram grid length must be even and >= 4"));
        }
        if ordinates.len() != index_set.len(n) {
            return Err(Error::GridMismatch(format!(
                "expected {} ordinates for this index set, got {}",
                index_set.len(n),
                ordinates.len()
            )));
        }
        if ordinates.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::domain("periodogram ordinates must be finite and >= 0"));
        }
        Ok(PeriodogramVec { ordinates, n, index_set })
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index_set(&self) -> IndexSet {
        self.index_set
    }

    /// Fourier index of the `i`-th stored ordinate.
    pub fn fourier_index(&self, i: usize) -> usize {
        self.index_set.first() + i
    }

    /// Frequency (cycles per sample) of the `i`-th stored ordinate.
    pub fn freq(&self, i: usize) -> f64 {
        self.fourier_index(i) as f64 / self.n as f64
    }

    /// All frequencies in cycles per sample.
    pub fn freqs(&self) -> Vec<f64> {
        (0..self.ordinates.len()).map(|i| self.freq(i)).collect()
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.n == other.n && self.index_set == other.index_set
    }
}

/// Classical periodogram `P(nu_k) = |sum_j x_j e^{-i 2 pi nu_k j}|^2 / N`
/// restricted to the requested index set.
pub fn periodogram(x: &TimeSeries, index_set: IndexSet) -> PeriodogramVec {
    let full = periodogram_full_grid(x);
    restrict(full, x.n(), index_set)
}

/// Two-sided periodogram over `k = 0 .. N-1`; mainly useful for energy
/// accounting (Parseval) checks.
pub fn periodogram_full_grid(x: &TimeSeries) -> Vec<f64> {
    let n = x.n() as f64;
    fft::forward_real(x.samples())
        .into_iter()
        .map(|c| c.norm_sqr() / n)
        .collect()
}

/// Reference evaluation of [`periodogram`] by the defining O(N^2) sum.
/// Slow path kept to validate the transform backend.
pub fn periodogram_direct(x: &TimeSeries, index_set: IndexSet) -> PeriodogramVec {
    let n = x.n() as f64;
    let full: Vec<f64> = fft::forward_real_direct(x.samples())
        .into_iter()
        .map(|c| c.norm_sqr() / n)
        .collect();
    restrict(full, x.n(), index_set)
}

fn restrict(full: Vec<f64>, n: usize, index_set: IndexSet) -> PeriodogramVec {
    let first = index_set.first();
    let len = index_set.len(n);
    let ordinates = full[first..first + len].to_vec();
    PeriodogramVec { ordinates, n, index_set }
}

/// Pointwise mean of the periodograms of the `L` training series.
pub fn averaged_periodogram(ts: &TrainingSet, index_set: IndexSet) -> PeriodogramVec {
    let l = ts.l() as f64;
    let mut acc = vec![0.0; index_set.len(ts.n())];
    for s in ts.series() {
        let p = periodogram(s, index_set);
        for (a, &v) in acc.iter_mut().zip(p.ordinates()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= l;
    }
    PeriodogramVec { ordinates: acc, n: ts.n(), index_set }
}

/// Frequency-wise standardized periodogram: the elementwise ratio of a
/// data periodogram to a noise-PSD estimate on the same grid.
pub fn standardize(p: &PeriodogramVec, reference: &PeriodogramVec) -> Result<PeriodogramVec> {
    if !p.same_grid(reference) {
        return Err(Error::GridMismatch(
            "data and reference periodograms use different grids".into(),
        ));
    }
    let mut out = Vec::with_capacity(p.ordinates.len());
    for (i, (&num, &den)) in p.ordinates.iter().zip(&reference.ordinates).enumerate() {
        if den <= 0.0 {
            return Err(Error::Degenerate(format!(
                "reference ordinate at Fourier index {} is not positive",
                reference.fourier_index(i)
            )));
        }
        out.push(num / den);
    }
    Ok(PeriodogramVec { ordinates: out, n: p.n, index_set: p.index_set })
}

//! Thin wrapper around `rustfft` with per-thread planner caching, plus the
//! direct defining sums kept as slow references for validation.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT of a real sequence:
/// `X_k = sum_j x_j exp(-i 2 pi k j / N)`.
pub(crate) fn forward_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

/// Unnormalized inverse DFT, returning real parts:
/// `x_j = Re sum_k X_k exp(+i 2 pi k j / N)`.
pub(crate) fn inverse_to_real(spectrum: &[Complex64]) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(&mut buf));
    buf.into_iter().map(|c| c.re).collect()
}

/// Direct O(N^2) evaluation of the forward DFT. Reference path only.
pub(crate) fn forward_real_direct(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in x.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / n as f64;
            acc += v * Complex64::new(phase.cos(), phase.sin());
        }
        out.push(acc);
    }
    out
}

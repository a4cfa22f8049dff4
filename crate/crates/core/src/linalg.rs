//! Small dense solvers used internally: Gaussian elimination for the
//! Yule-Walker moment systems and Durand-Kerner polynomial root finding
//! for AR stationarity checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major, square, and consumed.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Degenerate("singular linear system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);

        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Roots of `c[0] + c[1] z + ... + c[p] z^p` by Durand-Kerner iteration.
///
/// Adequate for the low-order polynomials arising from AR models; the
/// caller only consumes root moduli, so the usual caveats about clustered
/// roots are unimportant here.
pub(crate) fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let p = coeffs.len() - 1;
    if p == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[p];
    if lead.abs() < 1e-300 {
        return Err(Error::Degenerate("zero leading polynomial coefficient".into()));
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    let eval = |z: Complex64| -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            v = v * z + c;
        }
        v
    };

    // Initial guesses spread on a circle avoiding symmetry traps.
    let radius = 1.0
        + monic[..p]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<Complex64> = (0..p)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / p as f64;
            Complex64::from_polar(radius * 0.7, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..p {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..p {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-13 {
            return Ok(roots);
        }
    }
    Err(Error::Convergence("polynomial root iteration did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_identity() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = solve(a, vec![3.0, -2.0]).unwrap();
        assert_eq!(x, vec![3.0, -2.0]);
    }

    #[test]
    fn solve_general() {
        // [2 1; 1 3] x = [5; 10] -> x = [1; 3]
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(a, vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_singular_rejected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(a, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn roots_quadratic() {
        // (z - 2)(z + 3) = z^2 + z - 6
        let roots = polynomial_roots(&[-6.0, 1.0, 1.0]).unwrap();
        let mut moduli: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        assert!((moduli[0] - 2.0).abs() < 1e-10);
        assert!((moduli[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn roots_complex_pair() {
        // z^2 + 1 -> +-i
        let roots = polynomial_roots(&[1.0, 0.0, 1.0]).unwrap();
        for r in roots {
            assert!((r.norm() - 1.0).abs() < 1e-10);
            assert!(r.re.abs() < 1e-10);
        }
    }
}

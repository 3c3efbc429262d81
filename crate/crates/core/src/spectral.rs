//! Periodic spectral calculus on uniformly spaced samples.
//!
//! Coefficients follow the FFT layout `c[k]`, `k = 0..n`, normalised so that
//! `z_j = sum_k c_k exp(i k theta_j)` with `theta_j = 2 pi j / n`. Index `k >= n/2`
//! holds wavenumber `k - n`; the Nyquist index `n/2` is interpolated as a cosine so
//! that real data stays real between nodes.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed wavenumber stored at FFT index `k` (Nyquist reported as `+n/2`).
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Normalised forward transform of uniformly spaced samples.
pub fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`forward`].
pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}

pub fn forward_real(values: &[f64]) -> Vec<Complex64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&z)
}

pub fn inverse_real(coeffs: &[Complex64]) -> Vec<f64> {
    inverse(coeffs).into_iter().map(|c| c.re).collect()
}

/// `order`-th derivative with respect to the parameter, evaluated at the nodes.
pub fn derivative(values: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = values.len();
    let mut c = forward(values);
    for (k, ck) in c.iter_mut().enumerate() {
        if order % 2 == 1 && n % 2 == 0 && k == n / 2 {
            *ck = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, wavenumber(k, n) as f64);
        *ck *= ik.powu(order);
    }
    inverse(&c)
}

pub fn derivative_real(values: &[f64], order: u32) -> Vec<f64> {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    derivative(&z, order).into_iter().map(|c| c.re).collect()
}

/// Evaluate the trigonometric interpolant with coefficients `coeffs` at `theta`.
pub fn evaluate(coeffs: &[Complex64], theta: f64) -> Complex64 {
    evaluate_derivative(coeffs, theta, 0)
}

/// Evaluate the `order`-th parameter derivative of the interpolant at `theta`.
pub fn evaluate_derivative(coeffs: &[Complex64], theta: f64, order: u32) -> Complex64 {
    let n = coeffs.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, ck) in coeffs.iter().enumerate() {
        let m = wavenumber(k, n) as f64;
        if n % 2 == 0 && k == n / 2 {
            // cos(m theta) and its derivatives
            let phase = m * theta + order as f64 * PI / 2.0;
            acc += ck * phase.cos() * m.powi(order as i32);
            continue;
        }
        let factor = Complex64::new(0.0, m).powu(order);
        acc += ck * factor * Complex64::from_polar(1.0, m * theta);
    }
    acc
}

/// Zero every coefficient with `|wavenumber| > kmax`.
pub fn truncate(coeffs: &mut [Complex64], kmax: usize) {
    let n = coeffs.len();
    for (k, ck) in coeffs.iter_mut().enumerate() {
        if wavenumber(k, n).unsigned_abs() as usize > kmax {
            *ck = Complex64::new(0.0, 0.0);
        }
    }
}

/// Dense first-derivative matrix for `n` periodic nodes (`n` even).
pub fn differentiation_matrix(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * d * h).tan()
        }
    })
}

/// Trigonometric interpolation from `n` to `m >= n` uniform nodes, as a value
/// vector. The Nyquist coefficient is split between `+-n/2` (cosine convention).
pub fn refine(values: &[Complex64], m: usize) -> Vec<Complex64> {
    refine_with(values, m, 0.5)
}

fn refine_with(values: &[Complex64], m: usize, nyquist_share: f64) -> Vec<Complex64> {
    let n = values.len();
    let c = forward(values);
    let mut fine = vec![Complex64::new(0.0, 0.0); m];
    for (k, ck) in c.iter().enumerate() {
        if n % 2 == 0 && k == n / 2 && m > n {
            fine[k] += ck * nyquist_share;
            fine[m - k] += ck * nyquist_share;
            continue;
        }
        let w = wavenumber(k, n);
        let idx = if w >= 0 {
            w as usize
        } else {
            (m as i64 + w) as usize
        };
        fine[idx] += ck;
    }
    inverse(&fine)
}

/// Dense `m x n` prolongation on real data. Identical to [`refine`] except on the
/// Nyquist mode, which is scaled so that the map is an isometry of the uniform
/// discrete `l2` norms (up to the factor `m / n`).
pub fn prolongation_matrix(n: usize, m: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, n);
    let mut unit = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        unit.iter_mut().for_each(|u| *u = Complex64::new(0.0, 0.0));
        unit[j] = Complex64::new(1.0, 0.0);
        for (i, v) in refine_with(&unit, m, std::f64::consts::FRAC_1_SQRT_2)
            .iter()
            .enumerate()
        {
            out[(i, j)] = v.re;
        }
    }
    out
}

/// Dense matrix of the Fourier multiplier `symbol(|m|)` acting on `n` real samples.
pub fn multiplier_matrix(n: usize, symbol: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit.iter_mut().for_each(|u| *u = 0.0);
        unit[j] = 1.0;
        let mut c = forward_real(&unit);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= symbol(wavenumber(k, n).unsigned_abs() as usize);
        }
        let col = inverse_real(&c);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let v = samples(32, |t| (3.0 * t).sin() + 0.5 * (5.0 * t).cos());
        let d = derivative_real(&v, 1);
        let expect = samples(32, |t| 3.0 * (3.0 * t).cos() - 2.5 * (5.0 * t).sin());
        for (a, b) in d.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let d2 = derivative_real(&v, 2);
        let expect2 = samples(32, |t| -9.0 * (3.0 * t).sin() - 12.5 * (5.0 * t).cos());
        for (a, b) in d2.iter().zip(&expect2) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn matrix_matches_fft_derivative() {
        let n = 24;
        let v = samples(n, |t| (t.cos()).exp());
        let d = differentiation_matrix(n) * nalgebra::DVector::from_vec(v.clone());
        let f = derivative_real(&v, 1);
        for i in 0..n {
            assert!((d[i] - f[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_matches_interpolant() {
        let n = 16;
        let v: Vec<Complex64> = samples(n, |t| (t.sin()).exp() + (8.0 * t).cos())
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        let c = forward(&v);
        let fine = refine(&v, 48);
        for (i, f) in fine.iter().enumerate() {
            let t = 2.0 * PI * i as f64 / 48.0;
            assert!((evaluate(&c, t) - f).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_nodes_and_off_node_values() {
        let n = 16;
        let v: Vec<Complex64> = samples(n, |t| (2.0 * t).cos())
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        let c = forward(&v);
        for (j, vj) in v.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / n as f64;
            assert!((evaluate(&c, t) - vj).norm() < 1e-13);
        }
        assert!((evaluate(&c, 0.3).re - (0.6f64).cos()).abs() < 1e-13);
        assert!((evaluate_derivative(&c, 0.3, 1).re + 2.0 * (0.6f64).sin()).abs() < 1e-12);
    }
}

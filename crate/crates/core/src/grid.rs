//! Periodic grid and the spectral calculus built on it.
//!
//! Coefficients use the unnormalized forward FFT convention: `f̂_j = Σ f_m e^{-2πi jm/n}`.
//! Index `j` carries wavenumber `2π m_j / L` with `m_j = j` for `j < n/2` and
//! `m_j = j - n` otherwise; index `n/2` is the Nyquist mode.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, L)` with FFT plans for `n` and `3n/2` points.
#[derive(Clone)]
pub struct Grid {
    length: f64,
    n: usize,
    wavenumbers: Arc<[f64]>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pad_fwd: Arc<dyn Fft<f64>>,
    pad_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.n == other.n
    }
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let padded = 3 * n / 2;
        let base = 2.0 * PI / length;
        let wavenumbers: Vec<f64> = (0..n).map(|j| base * signed_index(j, n) as f64).collect();
        Ok(Self {
            length,
            n,
            wavenumbers: wavenumbers.into(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            pad_fwd: planner.plan_fft_forward(padded),
            pad_inv: planner.plan_fft_inverse(padded),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Sample positions `x_j = j·Δx`.
    pub fn x(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|j| j as f64 * dx).collect()
    }

    /// Wavenumbers in FFT order; the Nyquist entry is `-π n / L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest wavenumber magnitude that odd-order operators act on.
    pub fn k_max(&self) -> f64 {
        2.0 * PI / self.length * (self.n / 2 - 1) as f64
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::SampleCount { expected: self.n, actual: f.len() });
        }
        Ok(())
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform of a spectrum, keeping the real part.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(spec.len(), self.n);
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Multiply a spectrum in place by `(ik)^order`, zeroing Nyquist for odd orders.
    pub fn apply_deriv(&self, spec: &mut [Complex64], order: u32) {
        let odd = order % 2 == 1;
        for (j, (c, &k)) in spec.iter_mut().zip(self.wavenumbers.iter()).enumerate() {
            if odd && j == self.n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, k).powu(order);
            }
        }
    }

    pub fn deriv(&self, f: &[f64], order: u32) -> Result<Vec<f64>> {
        self.check_len(f)?;
        if !(1..=4).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let mut spec = self.forward(f);
        self.apply_deriv(&mut spec, order);
        Ok(self.inverse(&spec))
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    /// Zero-mean periodic antiderivative. Rejects inputs whose mean exceeds
    /// `1e-12·max(1, ‖f‖∞)`.
    pub fn antideriv(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mean = self.mean(f);
        let sup = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-12 * sup.max(1.0) {
            return Err(Error::NonIntegrable { mean });
        }
        let mut spec = self.forward(f);
        for (j, (c, &k)) in spec.iter_mut().zip(self.wavenumbers.iter()).enumerate() {
            if j == 0 || j == self.n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, k);
            }
        }
        Ok(self.inverse(&spec))
    }

    /// Rectangle-rule quadrature `Δx·Σ f`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.dx() * f.iter().sum::<f64>())
    }

    /// Half-sample cumulative integral anchored at the left box edge:
    /// `F_j = Δx (Σ_{m<j} f_m + ½ f_j)`.
    pub fn cumulative(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let dx = self.dx();
        let mut acc = 0.0;
        Ok(f.iter()
            .map(|&v| {
                let out = dx * (acc + 0.5 * v);
                acc += v;
                out
            })
            .collect())
    }

    /// Shift a sampled field by `shift` in x: returns samples of `f(x - shift)`.
    pub fn translate(&self, f: &[f64], shift: f64) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mut spec = self.forward(f);
        for (j, (c, &k)) in spec.iter_mut().zip(self.wavenumbers.iter()).enumerate() {
            if j == self.n / 2 {
                *c *= (k * shift).cos();
            } else {
                *c *= Complex64::from_polar(1.0, -k * shift);
            }
        }
        Ok(self.inverse(&spec))
    }

    /// Samples on the 3/2-padded grid of the field whose spectrum is `spec`.
    /// The Nyquist coefficient is split evenly between `±n/2`.
    pub fn to_padded_physical(&self, spec: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let m = 3 * n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[..n / 2].copy_from_slice(&spec[..n / 2]);
        buf[n / 2 + 1 + m - n..].copy_from_slice(&spec[n / 2 + 1..]);
        let half_nyq = spec[n / 2] * 0.5;
        buf[n / 2] = half_nyq;
        buf[m - n / 2] = half_nyq;
        self.pad_inv.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Spectrum on the base grid of padded samples, truncated to `|m| < n/2`;
    /// the Nyquist coefficient is dropped.
    pub fn from_padded_physical(&self, vals: &[f64]) -> Vec<Complex64> {
        let n = self.n;
        let m = 3 * n / 2;
        debug_assert_eq!(vals.len(), m);
        let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.pad_fwd.process(&mut buf);
        let scale = n as f64 / m as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n / 2 {
            out[j] = buf[j] * scale;
        }
        for j in n / 2 + 1..n {
            out[j] = buf[j + m - n] * scale;
        }
        out
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

//! The λ-family coupled KdV system
//!
//! ```text
//! u_t   = -u''' - ½(u²)' - ¼λ(Σ φ_i²)'
//! φ_i,t = -φ_i''' - ½λ(u φ_i)'
//! ```
//!
//! and fixed-step integrators for it. Time stepping runs on Fourier
//! coefficients; the `-∂³` part is either treated explicitly (`rk4`) or
//! propagated exactly by an integrating factor (`ifrk4`).

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charges::{self, ChargeReport};
use crate::error::{Error, Result};
use crate::fields::FieldState;
use crate::grid::Grid;

/// Any field magnitude above this aborts the integration.
pub const BLOW_UP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    #[default]
    Ifrk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_dealias")]
    pub dealias: bool,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

fn default_dealias() -> bool {
    true
}

fn default_sample_every() -> usize {
    1
}

impl SolverConfig {
    pub fn new(lambda: f64, dt: f64, t_end: f64) -> Self {
        Self {
            lambda,
            dt,
            t_end,
            integrator: Integrator::Ifrk4,
            dealias: true,
            sample_every: 1,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    /// Largest stable explicit step for the dispersive term on `grid`.
    pub fn rk4_dt_limit(grid: &Grid) -> f64 {
        2.5 / grid.k_max().powi(3)
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidConfig("sample_every must be at least 1".into()));
        }
        if self.integrator == Integrator::Rk4 && self.dt > Self::rk4_dt_limit(grid) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds the rk4 stability limit {:.3e} for this grid",
                self.dt,
                Self::rk4_dt_limit(grid)
            )));
        }
        Ok(())
    }

    /// Number of fixed steps to reach `t_end`; the step is stretched to
    /// `t_end / steps` so the final time is hit exactly.
    pub fn step_count(&self) -> usize {
        if self.t_end == 0.0 {
            0
        } else {
            ((self.t_end / self.dt).round() as usize).max(1)
        }
    }
}

/// Time derivatives of every field, same layout as [`FieldState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub u: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
}

impl Rates {
    pub fn fields(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.u).chain(self.phi.iter())
    }

    pub fn max_abs_diff(&self, other: &Rates) -> f64 {
        self.fields()
            .zip(other.fields())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Right-hand side with pointwise (aliased) products.
pub fn rhs(state: &FieldState, lambda: f64) -> Result<Rates> {
    rhs_with(state, lambda, false)
}

/// Right-hand side; quadratic products use the 3/2 rule when `dealias` is set.
pub fn rhs_with(state: &FieldState, lambda: f64, dealias: bool) -> Result<Rates> {
    let grid = state.grid();
    let model = Model { grid, lambda, dealias };
    let spec: Vec<Vec<Complex64>> = state.fields().map(|f| grid.forward(f)).collect();
    let mut total = model.nonlinear(&spec, state.t)?;
    for (out, field) in total.iter_mut().zip(&spec) {
        let mut lin = field.clone();
        grid.apply_deriv(&mut lin, 3);
        for (o, l) in out.iter_mut().zip(&lin) {
            *o -= l;
        }
    }
    let mut fields = total.iter().map(|s| grid.inverse(s));
    let u = fields.next().expect("u is always present");
    Ok(Rates { u, phi: fields.collect() })
}

type Spectra = Vec<Vec<Complex64>>;

struct Model<'a> {
    grid: &'a Grid,
    lambda: f64,
    dealias: bool,
}

impl Model<'_> {
    /// Spectra of `-(½u² + ¼λΣφ²)'` and `-(½λ u φ_i)'`.
    fn nonlinear(&self, spec: &[Vec<Complex64>], t: f64) -> Result<Spectra> {
        let grid = self.grid;
        let physical: Vec<Vec<f64>> = spec
            .iter()
            .map(|s| {
                if self.dealias {
                    grid.to_padded_physical(s)
                } else {
                    grid.inverse(s)
                }
            })
            .collect();
        for (field, vals) in physical.iter().enumerate() {
            if vals.iter().any(|v| v.is_nan() || v.abs() > BLOW_UP_LIMIT) {
                return Err(Error::BlowUp { t, field });
            }
        }
        let u = &physical[0];
        let m = u.len();
        let mut flux_u: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        for p in &physical[1..] {
            for j in 0..m {
                flux_u[j] += 0.25 * self.lambda * p[j] * p[j];
            }
        }
        let mut fluxes = vec![flux_u];
        for p in &physical[1..] {
            fluxes.push((0..m).map(|j| 0.5 * self.lambda * u[j] * p[j]).collect());
        }
        Ok(fluxes
            .iter()
            .map(|f| {
                let mut s = if self.dealias {
                    grid.from_padded_physical(f)
                } else {
                    grid.forward(f)
                };
                grid.apply_deriv(&mut s, 1);
                s.iter_mut().for_each(|c| *c = -*c);
                s
            })
            .collect())
    }
}

/// Fixed-step integrator acting on Fourier coefficients of all fields.
pub struct SpectralStepper<'a> {
    model: Model<'a>,
    integrator: Integrator,
    dt: f64,
    /// Symbol of `-∂³`, i.e. `i k³` (zero at Nyquist).
    linear: Vec<Complex64>,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
}

impl<'a> SpectralStepper<'a> {
    pub fn new(grid: &'a Grid, lambda: f64, dealias: bool, integrator: Integrator, dt: f64) -> Self {
        let nyq = grid.nyquist_index();
        let linear: Vec<Complex64> = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| if j == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k * k * k) })
            .collect();
        let full = linear.iter().map(|l| (l * dt).exp()).collect();
        let half = linear.iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        Self { model: Model { grid, lambda, dealias }, integrator, dt, linear, full, half }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn full_rhs(&self, spec: &[Vec<Complex64>], t: f64) -> Result<Spectra> {
        let mut out = self.model.nonlinear(spec, t)?;
        for (o, s) in out.iter_mut().zip(spec) {
            for ((o, s), l) in o.iter_mut().zip(s).zip(&self.linear) {
                *o += l * s;
            }
        }
        Ok(out)
    }

    /// Advances `spec` from time `t` by one step.
    pub fn step(&self, spec: &mut Spectra, t: f64) -> Result<()> {
        match self.integrator {
            Integrator::Rk4 => self.step_rk4(spec, t)?,
            Integrator::Ifrk4 => self.step_ifrk4(spec, t)?,
        }
        for (field, s) in spec.iter().enumerate() {
            if s.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::BlowUp { t: t + self.dt, field });
            }
        }
        Ok(())
    }

    fn step_rk4(&self, spec: &mut Spectra, t: f64) -> Result<()> {
        let dt = self.dt;
        let k1 = self.full_rhs(spec, t)?;
        let k2 = self.full_rhs(&axpy(spec, 0.5 * dt, &k1), t + 0.5 * dt)?;
        let k3 = self.full_rhs(&axpy(spec, 0.5 * dt, &k2), t + 0.5 * dt)?;
        let k4 = self.full_rhs(&axpy(spec, dt, &k3), t + dt)?;
        for (f, s) in spec.iter_mut().enumerate() {
            for (j, c) in s.iter_mut().enumerate() {
                *c += dt / 6.0 * (k1[f][j] + 2.0 * k2[f][j] + 2.0 * k3[f][j] + k4[f][j]);
            }
        }
        Ok(())
    }

    fn step_ifrk4(&self, spec: &mut Spectra, t: f64) -> Result<()> {
        let dt = self.dt;
        let (e, e2) = (&self.full, &self.half);
        let scale = |s: &Spectra, by: &[Complex64]| -> Spectra {
            s.iter().map(|f| f.iter().zip(by).map(|(c, m)| c * m).collect()).collect()
        };
        let a = self.model.nonlinear(spec, t)?;
        let prop_half = scale(spec, e2);
        let b = self.model.nonlinear(&scale(&axpy(spec, 0.5 * dt, &a), e2), t + 0.5 * dt)?;
        let c = self.model.nonlinear(&axpy(&prop_half, 0.5 * dt, &b), t + 0.5 * dt)?;
        let d_in = axpy(&scale(spec, e), dt, &scale(&c, e2));
        let d = self.model.nonlinear(&d_in, t + dt)?;
        for (f, s) in spec.iter_mut().enumerate() {
            for (j, v) in s.iter_mut().enumerate() {
                *v = e[j] * *v
                    + dt / 6.0 * (e[j] * a[f][j] + 2.0 * e2[j] * (b[f][j] + c[f][j]) + d[f][j]);
            }
        }
        Ok(())
    }
}

fn axpy(x: &[Vec<Complex64>], a: f64, y: &[Vec<Complex64>]) -> Spectra {
    x.iter()
        .zip(y)
        .map(|(xf, yf)| xf.iter().zip(yf).map(|(p, q)| p + q * a).collect())
        .collect()
}

fn to_spectra(state: &FieldState) -> Spectra {
    state.fields().map(|f| state.grid().forward(f)).collect()
}

fn from_spectra(grid: &Grid, spec: &[Vec<Complex64>], t: f64) -> Result<FieldState> {
    let mut fields = spec.iter().map(|s| grid.inverse(s));
    let u = fields.next().expect("u is always present");
    FieldState::new(grid.clone(), u, fields.collect(), t)
}

/// One step of size `cfg.dt`.
pub fn step(state: &FieldState, cfg: &SolverConfig) -> Result<FieldState> {
    let grid = state.grid();
    cfg.validate(grid)?;
    let stepper = SpectralStepper::new(grid, cfg.lambda, cfg.dealias, cfg.integrator, cfg.dt);
    let mut spec = to_spectra(state);
    stepper.step(&mut spec, state.t)?;
    from_spectra(grid, &spec, state.t + cfg.dt)
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: FieldState,
    pub reports: Vec<ChargeReport>,
}

#[derive(Debug, Clone, Error)]
#[error("evolution failed after t = {last_good_time}: {source}")]
pub struct EvolveError {
    pub source: Error,
    pub last_good_time: f64,
}

/// Integrates to `cfg.t_end`, reporting charges at the initial state, every
/// `cfg.sample_every` steps and at the final state.
pub fn evolve<F>(
    state: &FieldState,
    cfg: &SolverConfig,
    mut observer: F,
) -> std::result::Result<Evolution, EvolveError>
where
    F: FnMut(&FieldState, &ChargeReport),
{
    let t0 = state.t;
    let fail = |source: Error, last_good_time: f64| EvolveError { source, last_good_time };
    let grid = state.grid();
    cfg.validate(grid).map_err(|e| fail(e, t0))?;
    let steps = cfg.step_count();
    let dt = if steps == 0 { cfg.dt } else { cfg.t_end / steps as f64 };
    let stepper = SpectralStepper::new(grid, cfg.lambda, cfg.dealias, cfg.integrator, dt);

    let mut reports = Vec::new();
    let mut record = |s: &FieldState, reports: &mut Vec<ChargeReport>| -> Result<()> {
        let r = charges::report(s, cfg.lambda)?;
        observer(s, &r);
        reports.push(r);
        Ok(())
    };
    record(state, &mut reports).map_err(|e| fail(e, t0))?;

    let mut spec = to_spectra(state);
    let mut current = state.clone();
    for i in 1..=steps {
        let t_prev = t0 + (i - 1) as f64 * dt;
        stepper.step(&mut spec, t_prev).map_err(|e| fail(e, t_prev))?;
        if i % cfg.sample_every == 0 || i == steps {
            let t = t0 + i as f64 * dt;
            current = from_spectra(grid, &spec, t).map_err(|e| fail(e, t_prev))?;
            record(&current, &mut reports).map_err(|e| fail(e, t_prev))?;
        }
    }
    Ok(Evolution { state: current, reports })
}

/// Field part of the Galilean boost `u → u + c`, `φ_i → φ_i`.
/// The accompanying `x → x + ct` is applied separately with [`translate_state`].
pub fn galileo_boost(state: &FieldState, c: f64) -> FieldState {
    let mut out = state.clone();
    out.u.iter_mut().for_each(|v| *v += c);
    out
}

/// Every field resampled as `f(x - shift)`.
pub fn translate_state(state: &FieldState, shift: f64) -> FieldState {
    let grid = state.grid();
    state.map_fields(|f| grid.translate(f, shift)).expect("validated state")
}

/// `v± = u ± φ_1`, the characteristic fields that decouple at λ = 2.
pub fn decouple_lambda2(state: &FieldState) -> Result<(Vec<f64>, Vec<f64>)> {
    if state.components() != 1 {
        return Err(Error::UnsupportedShape(format!(
            "decoupling needs exactly one component, state has {}",
            state.components()
        )));
    }
    let phi = &state.phi[0];
    let plus = state.u.iter().zip(phi).map(|(u, p)| u + p).collect();
    let minus = state.u.iter().zip(phi).map(|(u, p)| u - p).collect();
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(80.0, 512).unwrap()
    }

    fn smooth_state(g: &Grid, k: usize) -> FieldState {
        let x = g.x();
        let u = x.iter().map(|x| 0.4 * (2.0 * PI * x / 80.0).sin() + 0.2 * (6.0 * PI * x / 80.0).cos()).collect();
        let phi = (0..k)
            .map(|i| x.iter().map(|x| 0.3 * (2.0 * PI * (i + 2) as f64 * x / 80.0 + i as f64).sin()).collect())
            .collect();
        FieldState::new(g.clone(), u, phi, 0.0).unwrap()
    }

    #[test]
    fn zero_and_constant_states_are_stationary() {
        let g = grid();
        let r = rhs(&FieldState::zeros(g.clone(), 2), 1.0).unwrap();
        assert!(r.fields().flatten().all(|&v| v == 0.0));
        let s = FieldState::new(g, vec![1.7; 512], vec![vec![0.0; 512]], 0.0).unwrap();
        let r = rhs(&s, 1.0).unwrap();
        assert!(r.fields().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pure_component_mode() {
        let g = grid();
        let k = 2.0 * PI / 80.0;
        let x = g.x();
        let phi: Vec<f64> = x.iter().map(|x| (k * x).sin()).collect();
        let s = FieldState::new(g, vec![0.0; 512], vec![phi], 0.0).unwrap();
        for lambda in [1.0, 2.5] {
            let r = rhs(&s, lambda).unwrap();
            for (j, x) in x.iter().enumerate() {
                let e = (r.phi[0][j] - k.powi(3) * (k * x).cos()).abs();
                assert!(e < 1e-11, "phi err {e:e}");
                // (sin²)' = k sin(2kx)
                let expected_u = -0.25 * lambda * k * (2.0 * k * x).sin();
                assert!((r.u[j] - expected_u).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn dealiasing_does_not_change_band_limited_rhs() {
        let g = grid();
        let s = smooth_state(&g, 2);
        let a = rhs_with(&s, 1.3, false).unwrap();
        let b = rhs_with(&s, 1.3, true).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn rates_integrate_to_zero() {
        let g = grid();
        let s = smooth_state(&g, 2);
        let r = rhs(&s, 0.7).unwrap();
        for f in r.fields() {
            assert!(g.integrate(f).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn rhs_commutes_with_component_rotation() {
        let g = grid();
        let s = smooth_state(&g, 2);
        let (c, sn) = (0.8_f64, 0.6_f64);
        let rot = [c, -sn, sn, c];
        let lhs = rhs(&s.mix_components(&rot), 1.7).unwrap();
        let r = rhs(&s, 1.7).unwrap();
        let rotated = FieldState::new(g, r.u.clone(), r.phi.clone(), 0.0).unwrap().mix_components(&rot);
        let expect = Rates { u: rotated.u, phi: rotated.phi };
        let e = lhs.max_abs_diff(&expect);
        assert!(e < 1e-11, "err {e:e}");
    }

    #[test]
    fn blow_up_is_detected() {
        let g = grid();
        let mut s = FieldState::zeros(g, 1);
        s.phi[0][3] = 2e12;
        s.t = 0.25;
        assert_eq!(rhs(&s, 1.0), Err(Error::BlowUp { t: 0.25, field: 1 }));
    }

    #[test]
    fn zero_state_step_advances_time() {
        let g = grid();
        let s = FieldState::zeros(g, 1);
        for integrator in [Integrator::Rk4, Integrator::Ifrk4] {
            let cfg = SolverConfig::new(1.0, 1e-4, 1.0).with_integrator(integrator);
            let next = step(&s, &cfg).unwrap();
            assert!(next.fields().flatten().all(|&v| v == 0.0));
            assert!((next.t - 1e-4).abs() < 1e-18);
        }
    }

    #[test]
    fn rk4_guard_rejects_large_steps() {
        let g = grid();
        let cfg = SolverConfig::new(1.0, 1e-3, 1.0).with_integrator(Integrator::Rk4);
        assert!(matches!(cfg.validate(&g), Err(Error::InvalidConfig(_))));
        assert!(SolverConfig::new(1.0, 1e-3, 1.0).validate(&g).is_ok());
    }

    #[test]
    fn ifrk4_is_the_exact_linear_propagator() {
        let g = grid();
        let x = g.x();
        let eps = 1e-14;
        let u: Vec<f64> = x.iter().map(|x| eps * (6.0 * PI * x / 80.0).sin().exp()).collect();
        let s = FieldState::new(g.clone(), u, vec![], 0.0).unwrap();
        let dt = 1e-2;
        let next = step(&s, &SolverConfig::new(1.0, dt, 1.0)).unwrap();
        let mut spec = g.forward(&s.u);
        for (j, (c, &k)) in spec.iter_mut().zip(g.wavenumbers()).enumerate() {
            if j != g.nyquist_index() {
                *c *= Complex64::from_polar(1.0, k * k * k * dt);
            }
        }
        let expect = g.inverse(&spec);
        let err = next.u.iter().zip(&expect).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-14 * eps * 10.0, "err = {err:e}");
    }

    #[test]
    fn decouple_shapes() {
        let g = grid();
        assert!(matches!(
            decouple_lambda2(&FieldState::zeros(g.clone(), 2)),
            Err(Error::UnsupportedShape(_))
        ));
        let s = smooth_state(&g, 1);
        let no_phi = FieldState::new(g.clone(), s.u.clone(), vec![vec![0.0; 512]], 0.0).unwrap();
        let (p, m) = decouple_lambda2(&no_phi).unwrap();
        assert_eq!(p, s.u);
        assert_eq!(m, s.u);
        let only_phi = FieldState::new(g, vec![0.0; 512], s.phi.clone(), 0.0).unwrap();
        let (p, m) = decouple_lambda2(&only_phi).unwrap();
        assert_eq!(p, s.phi[0]);
        assert!(m.iter().zip(&s.phi[0]).all(|(a, b)| *a == -b));
    }

    #[test]
    fn galileo_boost_basics() {
        let g = grid();
        let s = smooth_state(&g, 1);
        assert_eq!(galileo_boost(&s, 0.0), s);
        let b = galileo_boost(&FieldState::zeros(g, 1), 1.0);
        assert!(b.u.iter().all(|&v| v == 1.0));
        assert!(b.phi[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn evolve_with_zero_duration_returns_input() {
        let g = grid();
        let s = smooth_state(&g, 1);
        let mut seen = 0;
        let out = evolve(&s, &SolverConfig::new(1.0, 1e-3, 0.0), |_, _| seen += 1).unwrap();
        assert_eq!(out.state, s);
        assert_eq!(out.reports.len(), 1);
        assert_eq!(seen, 1);
    }

    #[test]
    fn evolve_reports_last_good_time_on_blow_up() {
        let g = Grid::new(20.0, 64).unwrap();
        let u: Vec<f64> = g.x().iter().map(|x| 1e11 * (2.0 * PI * x / 20.0).sin()).collect();
        let s = FieldState::new(g, u, vec![], 0.0).unwrap();
        let err = evolve(&s, &SolverConfig::new(1.0, 1e-3, 1.0), |_, _| {}).unwrap_err();
        assert!(matches!(err.source, Error::BlowUp { .. }));
        assert!(err.last_good_time < 1.0);
    }
}

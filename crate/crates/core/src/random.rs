//! Seeded random band-limited states for property checks.

use std::f64::consts::PI;

use rand::Rng;

use crate::fields::{self, FieldState};
use crate::grid::Grid;

/// Sum of Fourier modes `m = 1..=max_mode` with uniform amplitudes in
/// `[-1, 1]` and uniform phases; zero mean.
pub fn band_limited_field<R: Rng>(grid: &Grid, max_mode: usize, rng: &mut R) -> Vec<f64> {
    let base = 2.0 * PI / grid.length();
    let modes: Vec<(f64, f64, f64)> = (1..=max_mode)
        .map(|m| (base * m as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    grid.x()
        .iter()
        .map(|&x| modes.iter().map(|&(k, a, ph)| a * (k * x + ph).sin()).sum())
        .collect()
}

/// Random zero-mean state with `k` components, each field band-limited to `max_mode`.
pub fn band_limited_state<R: Rng>(grid: &Grid, k: usize, max_mode: usize, rng: &mut R) -> FieldState {
    let u = band_limited_field(grid, max_mode, rng);
    let phi = (0..k).map(|_| band_limited_field(grid, max_mode, rng)).collect();
    FieldState::new(grid.clone(), u, phi, 0.0).expect("finite samples")
}

/// Rescales every field so that `‖(u, ξ)‖_{L²} = norm`.
pub fn normalized(state: &FieldState, norm: f64) -> FieldState {
    let current = fields::l2_norm_sq(state).sqrt();
    let scale = if current > 0.0 { norm / current } else { 0.0 };
    state
        .map_fields(|f| Ok(f.iter().map(|v| v * scale).collect()))
        .expect("scaling preserves shape")
}

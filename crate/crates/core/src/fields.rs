//! Real field `u` plus the truncated component expansion of the Clifford-valued field.
//!
//! The odd field is stored as `K` real component arrays `φ_i`; every coefficient
//! of a generator product is just another entry in that list. Only the body of
//! `ξξ̄`, which is `Σ φ_i²`, is ever needed.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: Grid,
    pub u: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: Grid, u: Vec<f64>, phi: Vec<Vec<f64>>, t: f64) -> Result<Self> {
        let state = Self { grid, u, phi, t };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(grid: Grid, k: usize) -> Self {
        let n = grid.n_points();
        Self { grid, u: vec![0.0; n], phi: vec![vec![0.0; n]; k], t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of real components `K` kept for the odd field.
    pub fn components(&self) -> usize {
        self.phi.len()
    }

    /// Checks sample counts and finiteness of every field.
    pub fn validate(&self) -> Result<()> {
        self.grid.check_len(&self.u)?;
        for p in &self.phi {
            self.grid.check_len(p)?;
        }
        if !self.t.is_finite() {
            return Err(Error::NonFinite { field: "t".into(), index: 0 });
        }
        check_finite("u", &self.u)?;
        for (i, p) in self.phi.iter().enumerate() {
            check_finite(&format!("phi_{}", i + 1), p)?;
        }
        Ok(())
    }

    /// Iterator over all fields, `u` first.
    pub fn fields(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.u).chain(self.phi.iter())
    }

    pub fn sup_norm(&self) -> f64 {
        self.fields().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Applies `map` to every field (including `u`), keeping grid and time.
    pub fn map_fields<F>(&self, mut map: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let u = map(&self.u)?;
        let phi = self.phi.iter().map(|p| map(p)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: self.grid.clone(), u, phi, t: self.t })
    }

    /// Replaces the component fields by `R φ` for a `K×K` matrix `R` given row-major.
    pub fn mix_components(&self, r: &[f64]) -> Self {
        let k = self.components();
        assert_eq!(r.len(), k * k, "mixing matrix must be K×K");
        let n = self.u.len();
        let phi = (0..k)
            .map(|a| {
                (0..n)
                    .map(|j| (0..k).map(|b| r[a * k + b] * self.phi[b][j]).sum())
                    .collect()
            })
            .collect();
        Self { grid: self.grid.clone(), u: self.u.clone(), phi, t: self.t }
    }
}

fn check_finite(name: &str, f: &[f64]) -> Result<()> {
    match f.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { field: name.to_string(), index }),
        None => Ok(()),
    }
}

/// Pointwise `Σ_i a_i b_i` over component lists.
pub(crate) fn component_dot(a: &[Vec<f64>], b: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (pa, pb) in a.iter().zip(b) {
        for ((o, x), y) in out.iter_mut().zip(pa).zip(pb) {
            *o += x * y;
        }
    }
    out
}

/// Body of `ξξ̄`: pointwise `Σ_i φ_i²`.
pub fn body_p(state: &FieldState) -> Vec<f64> {
    component_dot(&state.phi, &state.phi, state.u.len())
}

/// `‖(u, ξ)‖²_{L²} = ∫ (u² + P(ξξ̄)) dx`.
pub fn l2_norm_sq(state: &FieldState) -> f64 {
    let p = body_p(state);
    let density: Vec<f64> = state.u.iter().zip(&p).map(|(u, p)| u * u + p).collect();
    state.grid().integrate(&density).expect("validated state")
}

/// `‖(u, ξ)‖²_{H¹}`: the L² part plus the L² norm of every first derivative.
pub fn sobolev_h1_norm_sq(state: &FieldState) -> f64 {
    let grid = state.grid();
    let d = state.map_fields(|f| grid.deriv(f, 1)).expect("validated state");
    l2_norm_sq(state) + l2_norm_sq(&d)
}

//! Conserved charges of the λ-family and the lower bound on the Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{self, component_dot, FieldState};

/// All charges evaluated on one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeReport {
    pub t: f64,
    pub h_half: Vec<f64>,
    pub h1: f64,
    pub h3: f64,
    pub h5: f64,
    pub nonlocal: f64,
    /// Squared L² norm; identical to `h3`.
    pub l2: f64,
    /// Squared H¹ norm.
    pub sobolev_h1: f64,
}

fn integrate(state: &FieldState, f: &[f64]) -> f64 {
    state.grid().integrate(f).expect("validated state")
}

/// `∫ φ_i dx` for every component.
pub fn charge_h_half(state: &FieldState) -> Vec<f64> {
    state.phi.iter().map(|p| integrate(state, p)).collect()
}

/// `∫ u dx`.
pub fn charge_h1(state: &FieldState) -> f64 {
    integrate(state, &state.u)
}

/// `∫ (u² + Σφ_i²) dx`, cross-checked against the L² norm path.
pub fn charge_h3(state: &FieldState) -> f64 {
    let density: Vec<f64> = (0..state.u.len())
        .map(|j| state.u[j] * state.u[j] + state.phi.iter().map(|p| p[j] * p[j]).sum::<f64>())
        .collect();
    let h3 = integrate(state, &density);
    debug_assert!((h3 - fields::l2_norm_sq(state)).abs() <= 1e-12 * (1.0 + h3.abs()));
    h3
}

/// Pointwise density of H̃₅: `-⅓u³ - ½λ u P(ξξ̄) + (u')² + Σ(φ_i')²`.
pub fn h5_density(state: &FieldState, lambda: f64) -> Vec<f64> {
    let grid = state.grid();
    let n = state.u.len();
    let p = fields::body_p(state);
    let du = grid.deriv(&state.u, 1).expect("validated state");
    let dphi: Vec<Vec<f64>> =
        state.phi.iter().map(|f| grid.deriv(f, 1).expect("validated state")).collect();
    let dp = component_dot(&dphi, &dphi, n);
    (0..n)
        .map(|j| {
            let u = state.u[j];
            -u * u * u / 3.0 - 0.5 * lambda * u * p[j] + du[j] * du[j] + dp[j]
        })
        .collect()
}

pub fn charge_h5(state: &FieldState, lambda: f64) -> f64 {
    integrate(state, &h5_density(state, lambda))
}

/// The two evaluations of `Σ_i ∫ φ_i ∫^x φ_i`: the direct quadrature with a
/// left-anchored cumulative integral, and the closed form `½ Σ_i (∫φ_i)²`.
pub fn nonlocal_paths(state: &FieldState) -> (f64, f64) {
    let grid = state.grid();
    let mut direct = 0.0;
    let mut closed = 0.0;
    for p in &state.phi {
        let cum = grid.cumulative(p).expect("validated state");
        let prod: Vec<f64> = p.iter().zip(&cum).map(|(a, b)| a * b).collect();
        direct += integrate(state, &prod);
        let total = integrate(state, p);
        closed += 0.5 * total * total;
    }
    (direct, closed)
}

pub fn charge_nonlocal(state: &FieldState) -> Result<f64> {
    let (direct, closed) = nonlocal_paths(state);
    let dx = state.grid().dx();
    // Both paths are bounded by ½(Δx Σ|φ|)²; roundoff is measured against that.
    let scale: f64 = state
        .phi
        .iter()
        .map(|p| {
            let s = dx * p.iter().map(|v| v.abs()).sum::<f64>();
            0.5 * s * s
        })
        .sum();
    let tol = 1e-8 * direct.abs().max(closed.abs()) + 1e-13 * scale;
    if (direct - closed).abs() > tol {
        return Err(Error::Inconsistent(format!(
            "non-local charge paths disagree: direct {direct:e}, closed form {closed:e}"
        )));
    }
    Ok(direct)
}

/// `∫ u ∫^x φ_1`, a non-local quantity that the flow does not conserve.
pub fn u_phi_cross_charge(state: &FieldState) -> Result<f64> {
    let phi = state
        .phi
        .first()
        .ok_or_else(|| Error::UnsupportedShape("need at least one component".into()))?;
    let cum = state.grid().cumulative(phi)?;
    let prod: Vec<f64> = state.u.iter().zip(&cum).map(|(a, b)| a * b).collect();
    Ok(integrate(state, &prod))
}

pub fn report(state: &FieldState, lambda: f64) -> Result<ChargeReport> {
    let h3 = charge_h3(state);
    Ok(ChargeReport {
        t: state.t,
        h_half: charge_h_half(state),
        h1: charge_h1(state),
        h3,
        h5: charge_h5(state, lambda),
        nonlocal: charge_nonlocal(state)?,
        l2: fields::l2_norm_sq(state),
        sobolev_h1: fields::sobolev_h1_norm_sq(state),
    })
}

/// `1 + (m / 4√2)²` with `m = max(1, |λ|)`, written as `1 + m²/32`.
pub fn bound_constant(lambda: f64) -> f64 {
    let m = lambda.abs().max(1.0);
    1.0 + m * m / 32.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// `H̃₅ ≥ -(1 + (m/4√2)²) H̃₃`.
pub fn bound_check(state: &FieldState, lambda: f64) -> BoundCheck {
    let lhs = charge_h5(state, lambda);
    let rhs = -bound_constant(lambda) * charge_h3(state);
    BoundCheck { lhs, rhs, margin: lhs - rhs, holds: lhs >= rhs - 1e-10 * (1.0 + rhs.abs()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupBoundCheck {
    pub sup_u: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `sup|u| ≤ ‖u‖_{H¹} / √2`.
pub fn sobolev_sup_bound_check(state: &FieldState) -> SupBoundCheck {
    let sup_u = state.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let u_only = FieldState::new(state.grid().clone(), state.u.clone(), vec![], state.t)
        .expect("validated state");
    let bound = (fields::sobolev_h1_norm_sq(&u_only) / 2.0).sqrt();
    SupBoundCheck { sup_u, bound, holds: sup_u <= bound * (1.0 + 1e-12) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(80.0, 512).unwrap()
    }

    fn sech2(x: f64) -> f64 {
        let s = 1.0 / x.cosh();
        s * s
    }

    fn soliton_c1(g: &Grid) -> FieldState {
        let u = g.x().iter().map(|x| 3.0 * sech2(0.5 * (x - 40.0))).collect();
        FieldState::new(g.clone(), u, vec![], 0.0).unwrap()
    }

    #[test]
    fn zero_state_charges() {
        let s = FieldState::zeros(grid(), 2);
        let r = report(&s, 1.0).unwrap();
        assert_eq!(r.h_half, vec![0.0, 0.0]);
        assert_eq!((r.h1, r.h3, r.h5, r.nonlocal, r.l2, r.sobolev_h1), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn soliton_charges_match_closed_forms() {
        let g = grid();
        let s = soliton_c1(&g);
        assert!((charge_h1(&s) - 12.0).abs() < 1e-9);
        assert!((charge_h3(&s) - 24.0).abs() < 1e-9);
        for lambda in [-1.0, 0.0, 1.0, 3.0] {
            assert!((charge_h5(&s, lambda) + 14.4).abs() < 1e-8);
        }
    }

    #[test]
    fn component_charges() {
        let g = grid();
        let phi: Vec<f64> = g.x().iter().map(|x| sech2(0.5 * (x - 40.0))).collect();
        let s = FieldState::new(g, vec![0.0; 512], vec![phi], 0.0).unwrap();
        assert!((charge_h_half(&s)[0] - 4.0).abs() < 1e-10);
        assert!((charge_nonlocal(&s).unwrap() - 8.0).abs() < 1e-8);
    }

    #[test]
    fn h5_single_component_mode() {
        let g = grid();
        let k = 2.0 * PI / 80.0;
        let phi: Vec<f64> = g.x().iter().map(|x| (k * x).sin()).collect();
        let s = FieldState::new(g, vec![0.0; 512], vec![phi], 0.0).unwrap();
        assert!((charge_h5(&s, 1.0) - 40.0 * k * k).abs() < 1e-13);
    }

    #[test]
    fn h3_invariant_under_component_rotation() {
        let g = grid();
        let a: Vec<f64> = g.x().iter().map(|x| sech2(x - 30.0)).collect();
        let b: Vec<f64> = g.x().iter().map(|x| (2.0 * PI * x / 80.0).cos()).collect();
        let s = FieldState::new(g, vec![0.0; 512], vec![a, b], 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = s.mix_components(&[r, r, -r, r]);
        assert!((charge_h3(&s) - charge_h3(&mixed)).abs() < 1e-12);
    }

    #[test]
    fn bound_constant_for_unit_coupling_is_exact() {
        assert_eq!(bound_constant(1.0), 1.03125);
        assert_eq!(bound_constant(0.5), 1.03125);
        assert_eq!(bound_constant(-2.0), 1.125);
    }

    #[test]
    fn bound_on_zero_state() {
        let b = bound_check(&FieldState::zeros(grid(), 1), 1.0);
        assert_eq!((b.lhs, b.rhs), (0.0, 0.0));
        assert!(b.holds);
        let s = sobolev_sup_bound_check(&FieldState::zeros(grid(), 1));
        assert_eq!((s.sup_u, s.bound), (0.0, 0.0));
        assert!(s.holds);
    }

    #[test]
    fn sup_bound_for_unit_mode() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let u = g.x().iter().map(|x| x.sin()).collect();
        let s = FieldState::new(g, u, vec![], 0.0).unwrap();
        let c = sobolev_sup_bound_check(&s);
        assert!((c.sup_u - 1.0).abs() < 1e-12);
        assert!((c.bound - PI.sqrt()).abs() < 1e-12);
        assert!(c.holds);
    }

    #[test]
    fn cross_charge_needs_a_component() {
        assert!(u_phi_cross_charge(&FieldState::zeros(grid(), 0)).is_err());
    }
}

//! Lagrangian and constrained Hamiltonian description of the λ-family.
//!
//! Potentials `w`, `η_i` with `u = w'`, `φ_i = η_i'` carry the first-order
//! Lagrangian; its momenta `p = ½w'`, `σ_i = ½η_i'` are primary, second-class
//! constraints. After the Dirac reduction the flow is generated by
//! `H = ½H̃₅` through `{u(x), u(y)} = ∂ₓδ(x - y)`, i.e. `∂ₜu = ∂ₓ(δH/δu)`.

use crate::charges;
use crate::dynamics::{self, Rates};
use crate::error::{Error, Result};
use crate::fields::{component_dot, FieldState};
use crate::grid::Grid;

/// Phase-space point: potentials and their conjugate momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPair {
    pub w: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

impl ConstraintPair {
    pub fn components(&self) -> usize {
        self.eta.len()
    }

    /// Largest pointwise value of `|p - ½w'|` and `|σ_i - ½η_i'|`.
    pub fn constraint_residual(&self, grid: &Grid) -> Result<f64> {
        let mut worst = 0.0_f64;
        let pairs = std::iter::once((&self.p, &self.w)).chain(self.sigma.iter().zip(&self.eta));
        for (mom, pot) in pairs {
            let d = grid.deriv(pot, 1)?;
            for (m, d) in mom.iter().zip(&d) {
                worst = worst.max((m - 0.5 * d).abs());
            }
        }
        Ok(worst)
    }

    /// Fails with `InvalidPhasePoint` unless the primary constraints hold.
    pub fn check_constraints(&self, grid: &Grid) -> Result<()> {
        let residual = self.constraint_residual(grid)?;
        let scale = self.p.iter().chain(self.sigma.iter().flatten()).fold(1.0_f64, |m, v| m.max(v.abs()));
        let limit = 1e-12 * scale;
        if residual > limit {
            return Err(Error::InvalidPhasePoint { residual, limit });
        }
        Ok(())
    }

    /// Field state `u = w'`, `φ_i = η_i'` at time `t`.
    pub fn fields(&self, grid: &Grid, t: f64) -> Result<FieldState> {
        let u = grid.deriv(&self.w, 1)?;
        let phi = self.eta.iter().map(|e| grid.deriv(e, 1)).collect::<Result<Vec<_>>>()?;
        FieldState::new(grid.clone(), u, phi, t)
    }
}

/// Zero-mean potentials of a state together with the constrained momenta.
pub fn lift_to_potentials(state: &FieldState) -> Result<ConstraintPair> {
    let grid = state.grid();
    let w = grid.antideriv(&state.u)?;
    let eta = state.phi.iter().map(|f| grid.antideriv(f)).collect::<Result<Vec<_>>>()?;
    let p = state.u.iter().map(|v| 0.5 * v).collect();
    let sigma = state.phi.iter().map(|f| f.iter().map(|v| 0.5 * v).collect()).collect();
    Ok(ConstraintPair { w, eta, p, sigma })
}

/// Lagrangian density
/// `½w'w_t + ⅙w'³ - ½w''² + ¼λ w' Σ(η_i')² + Σ(½η_i'η_{i,t} - ½η_i''²)`
/// with `w_t = ∂ₓ⁻¹u_t`, `η_{i,t} = ∂ₓ⁻¹φ_{i,t}`.
pub fn lagrangian_density(
    grid: &Grid,
    cp: &ConstraintPair,
    u_t: &[f64],
    phi_t: &[Vec<f64>],
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = grid.n_points();
    let w_t = grid.antideriv(u_t)?;
    let eta_t = phi_t.iter().map(|f| grid.antideriv(f)).collect::<Result<Vec<_>>>()?;
    let w1 = grid.deriv(&cp.w, 1)?;
    let w2 = grid.deriv(&cp.w, 2)?;
    let eta1 = cp.eta.iter().map(|e| grid.deriv(e, 1)).collect::<Result<Vec<_>>>()?;
    let eta2 = cp.eta.iter().map(|e| grid.deriv(e, 2)).collect::<Result<Vec<_>>>()?;
    let eta1_sq = component_dot(&eta1, &eta1, n);
    let eta2_sq = component_dot(&eta2, &eta2, n);
    let kinetic_eta = component_dot(&eta1, &eta_t, n);
    Ok((0..n)
        .map(|j| {
            0.5 * w1[j] * w_t[j] + w1[j].powi(3) / 6.0 - 0.5 * w2[j] * w2[j]
                + 0.25 * lambda * w1[j] * eta1_sq[j]
                + 0.5 * kinetic_eta[j]
                - 0.5 * eta2_sq[j]
        })
        .collect())
}

/// `⟨p w_t + σ_i η_{i,t} - L⟩ₓ` with on-shell velocities.
pub fn legendre_hamiltonian(grid: &Grid, cp: &ConstraintPair, lambda: f64) -> Result<f64> {
    cp.check_constraints(grid)?;
    let n = grid.n_points();
    let state = cp.fields(grid, 0.0)?;
    let Rates { u: u_t, phi: phi_t } = dynamics::rhs(&state, lambda)?;
    let w_t = grid.antideriv(&u_t)?;
    let eta_t = phi_t.iter().map(|f| grid.antideriv(f)).collect::<Result<Vec<_>>>()?;
    let lag = lagrangian_density(grid, cp, &u_t, &phi_t, lambda)?;
    let sigma_eta = component_dot(&cp.sigma, &eta_t, n);
    let density: Vec<f64> = (0..n).map(|j| cp.p[j] * w_t[j] + sigma_eta[j] - lag[j]).collect();
    grid.integrate(&density)
}

/// `δH̃₅/δu = -u² - ½λ P(ξξ̄) - 2u''`.
pub fn functional_derivative_u(state: &FieldState, lambda: f64) -> Vec<f64> {
    let grid = state.grid();
    let n = state.u.len();
    let p = component_dot(&state.phi, &state.phi, n);
    let u2 = grid.deriv(&state.u, 2).expect("validated state");
    (0..n).map(|j| -state.u[j] * state.u[j] - 0.5 * lambda * p[j] - 2.0 * u2[j]).collect()
}

/// `δH̃₅/δφ_i = -λ u φ_i - 2φ_i''`.
pub fn functional_derivative_phi(state: &FieldState, lambda: f64, i: usize) -> Result<Vec<f64>> {
    let phi = state.phi.get(i).ok_or_else(|| {
        Error::UnsupportedShape(format!("component {i} out of range (K = {})", state.components()))
    })?;
    let grid = state.grid();
    let d2 = grid.deriv(phi, 2)?;
    Ok((0..phi.len()).map(|j| -lambda * state.u[j] * phi[j] - 2.0 * d2[j]).collect())
}

/// Flow generated by `H = ½H̃₅` through the reduced bracket: `∂ₜf = ∂ₓ(½ δH̃₅/δf)`.
pub fn dirac_rhs(state: &FieldState, lambda: f64) -> Result<Rates> {
    let grid = state.grid();
    let flow = |grad: Vec<f64>| -> Result<Vec<f64>> {
        let half: Vec<f64> = grad.iter().map(|g| 0.5 * g).collect();
        grid.deriv(&half, 1)
    };
    let u = flow(functional_derivative_u(state, lambda))?;
    let phi = (0..state.components())
        .map(|i| flow(functional_derivative_phi(state, lambda, i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Rates { u, phi })
}

/// Central-difference gradient of the discrete `H̃₅` with respect to every
/// sample of field `field` (0 = `u`, `i` = `φ_i`), divided by `Δx` so that it
/// approximates the functional derivative.
pub fn finite_difference_gradient(state: &FieldState, lambda: f64, field: usize) -> Vec<f64> {
    let eps = 1e-5 * (1.0 + state.sup_norm());
    let dx = state.grid().dx();
    let n = state.u.len();
    let mut probe = state.clone();
    (0..n)
        .map(|j| {
            let orig = field_mut(&mut probe, field)[j];
            field_mut(&mut probe, field)[j] = orig + eps;
            let plus = charges::charge_h5(&probe, lambda);
            field_mut(&mut probe, field)[j] = orig - eps;
            let minus = charges::charge_h5(&probe, lambda);
            field_mut(&mut probe, field)[j] = orig;
            (plus - minus) / (2.0 * eps * dx)
        })
        .collect()
}

fn field_mut(state: &mut FieldState, field: usize) -> &mut Vec<f64> {
    if field == 0 {
        &mut state.u
    } else {
        &mut state.phi[field - 1]
    }
}

/// Smeared constraint `V_I[f] = ⟨f (mom_I - ½ pot_I')⟩ₓ` (`I = 0` is `(w, p)`,
/// `I = i + 1` is `(η_i, σ_i)`).
fn smeared_constraint(grid: &Grid, f: &[f64], pot: &[f64], mom: &[f64]) -> f64 {
    let d = grid.deriv(pot, 1).expect("sample counts checked");
    let density: Vec<f64> = (0..f.len()).map(|j| f[j] * (mom[j] - 0.5 * d[j])).collect();
    grid.integrate(&density).expect("sample counts checked")
}

/// Gradients `(∂V/∂pot_j, ∂V/∂mom_j)` of a linear smeared constraint, obtained
/// by evaluating it on unit vectors.
fn constraint_gradient(grid: &Grid, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_points();
    let zero = vec![0.0; n];
    let mut unit = vec![0.0; n];
    let mut d_pot = Vec::with_capacity(n);
    let mut d_mom = Vec::with_capacity(n);
    for j in 0..n {
        unit[j] = 1.0;
        d_pot.push(smeared_constraint(grid, f, &unit, &zero));
        d_mom.push(smeared_constraint(grid, f, &zero, &unit));
        unit[j] = 0.0;
    }
    (d_pot, d_mom)
}

/// Canonical bracket `{V_I[f], V_J[g]}` on the discrete phase space, where
/// `{pot_I(x_j), mom_J(x_k)} = δ_IJ δ_jk / Δx`.
pub fn smeared_constraint_bracket(grid: &Grid, i: usize, f: &[f64], j: usize, g: &[f64]) -> f64 {
    if i != j {
        // the constraints depend on disjoint canonical pairs
        return 0.0;
    }
    let (fq, fp) = constraint_gradient(grid, f);
    let (gq, gp) = constraint_gradient(grid, g);
    let dx = grid.dx();
    (0..grid.n_points()).map(|m| (fq[m] * gp[m] - fp[m] * gq[m]) / dx).sum()
}

/// Checks `{V_I[f], V_J[g]} = -δ_IJ ⟨f g'⟩ₓ` for all low-mode test functions
/// `f, g ∈ {1, cos(2πmx/L), sin(2πmx/L) : m = 1..3}` and all `I, J`.
pub fn constraint_bracket_matrix_check(grid: &Grid, cp: &ConstraintPair) -> Result<bool> {
    cp.check_constraints(grid)?;
    let x = grid.x();
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let mut tests = vec![vec![1.0; x.len()]];
    for m in 1..=3 {
        let k = base * m as f64;
        tests.push(x.iter().map(|x| (k * x).cos()).collect());
        tests.push(x.iter().map(|x| (k * x).sin()).collect());
    }
    let slots = cp.components() + 1;
    let mut ok = true;
    for f in &tests {
        for g in &tests {
            let dg = grid.deriv(g, 1)?;
            let fdg: Vec<f64> = f.iter().zip(&dg).map(|(a, b)| a * b).collect();
            let expected = -grid.integrate(&fdg)?;
            for i in 0..slots {
                for j in 0..slots {
                    let got = smeared_constraint_bracket(grid, i, f, j, g);
                    let want = if i == j { expected } else { 0.0 };
                    ok &= (got - want).abs() <= 1e-10;
                }
            }
        }
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(40.0, 64).unwrap()
    }

    fn mode(g: &Grid, m: f64, phase: f64) -> Vec<f64> {
        g.x().iter().map(|x| (2.0 * PI * m * x / g.length() + phase).sin()).collect()
    }

    #[test]
    fn zero_state_everything_vanishes() {
        let g = grid();
        let s = FieldState::zeros(g.clone(), 2);
        let cp = lift_to_potentials(&s).unwrap();
        assert!(cp.w.iter().chain(cp.p.iter()).chain(cp.eta.iter().flatten()).all(|&v| v == 0.0));
        assert_eq!(legendre_hamiltonian(&g, &cp, 1.0).unwrap(), 0.0);
        assert!(functional_derivative_u(&s, 1.0).iter().all(|&v| v == 0.0));
        assert!(functional_derivative_phi(&s, 1.0, 1).unwrap().iter().all(|&v| v == 0.0));
        assert!(dirac_rhs(&s, 2.0).unwrap().fields().flatten().all(|&v| v == 0.0));
        let zeros = vec![0.0; 64];
        assert_eq!(lagrangian_density(&g, &cp, &zeros, &[zeros.clone(), zeros.clone()], 1.0).unwrap(), zeros);
    }

    #[test]
    fn lift_cosine_mode() {
        let g = grid();
        let k = 2.0 * PI / 40.0;
        let u: Vec<f64> = g.x().iter().map(|x| (k * x).cos()).collect();
        let s = FieldState::new(g.clone(), u.clone(), vec![], 0.0).unwrap();
        let cp = lift_to_potentials(&s).unwrap();
        for (j, x) in g.x().iter().enumerate() {
            assert!((cp.w[j] - (k * x).sin() / k).abs() < 1e-13);
            assert!((cp.p[j] - 0.5 * u[j]).abs() < 1e-16);
        }
        assert!(cp.constraint_residual(&g).unwrap() < 1e-13);
    }

    #[test]
    fn lift_rejects_solitons() {
        let g = Grid::new(80.0, 256).unwrap();
        let u = g.x().iter().map(|x| 3.0 / (0.5 * (x - 40.0)).cosh().powi(2)).collect();
        let s = FieldState::new(g, u, vec![], 0.0).unwrap();
        assert!(matches!(lift_to_potentials(&s), Err(Error::NonIntegrable { .. })));
    }

    #[test]
    fn static_lagrangian_density() {
        let g = grid();
        let k = 2.0 * PI / 40.0;
        let u: Vec<f64> = g.x().iter().map(|x| (k * x).cos()).collect();
        let s = FieldState::new(g.clone(), u.clone(), vec![vec![0.0; 64]], 0.0).unwrap();
        let cp = lift_to_potentials(&s).unwrap();
        let zeros = vec![0.0; 64];
        let lag = lagrangian_density(&g, &cp, &zeros, std::slice::from_ref(&zeros), 1.0).unwrap();
        for (j, x) in g.x().iter().enumerate() {
            let du = -k * (k * x).sin();
            let want = u[j].powi(3) / 6.0 - 0.5 * du * du;
            assert!((lag[j] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn violated_constraints_are_rejected() {
        let g = grid();
        let s = FieldState::new(g.clone(), mode(&g, 1.0, 0.0), vec![], 0.0).unwrap();
        let mut cp = lift_to_potentials(&s).unwrap();
        cp.p[5] += 1e-6;
        assert!(matches!(legendre_hamiltonian(&g, &cp, 1.0), Err(Error::InvalidPhasePoint { .. })));
    }

    #[test]
    fn functional_derivative_examples() {
        let g = grid();
        let k = 2.0 * PI / 40.0;
        let s = FieldState::new(g.clone(), mode(&g, 1.0, 0.0), vec![vec![0.0; 64]], 0.0).unwrap();
        let du = functional_derivative_u(&s, 1.0);
        for (j, u) in s.u.iter().enumerate() {
            assert!((du[j] - (-u * u + 2.0 * k * k * u)).abs() < 1e-14);
        }
        let c: Vec<f64> = g.x().iter().map(|x| (k * x).cos()).collect();
        let s = FieldState::new(g, vec![0.0; 64], vec![c.clone()], 0.0).unwrap();
        let dp = functional_derivative_phi(&s, 1.0, 0).unwrap();
        for (a, c) in dp.iter().zip(&c) {
            assert!((a - 2.0 * k * k * c).abs() < 1e-14);
        }
        assert!(functional_derivative_phi(&s, 1.0, 1).is_err());
    }

    #[test]
    fn constant_u_has_no_flow() {
        let g = grid();
        let s = FieldState::new(g, vec![0.8; 64], vec![vec![0.0; 64]], 0.0).unwrap();
        let d = dirac_rhs(&s, 1.0).unwrap();
        let r = dynamics::rhs(&s, 1.0).unwrap();
        assert!(d.fields().flatten().all(|v| v.abs() < 1e-13));
        assert!(r.fields().flatten().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn bracket_single_entries() {
        let g = grid();
        let k = 2.0 * PI / 40.0;
        let one = vec![1.0; 64];
        assert!(smeared_constraint_bracket(&g, 0, &one, 0, &one).abs() < 1e-13);
        let s = mode(&g, 1.0, 0.0);
        let c = mode(&g, 1.0, PI / 2.0);
        let got = smeared_constraint_bracket(&g, 0, &s, 0, &c);
        assert!((got - 20.0 * k).abs() < 1e-12, "got {got}");
        assert_eq!(smeared_constraint_bracket(&g, 0, &s, 1, &c), 0.0);
    }

    #[test]
    fn bracket_matrix_check_passes() {
        let g = grid();
        let s = FieldState::new(g.clone(), mode(&g, 2.0, 0.3), vec![mode(&g, 1.0, 1.0)], 0.0).unwrap();
        let cp = lift_to_potentials(&s).unwrap();
        assert!(constraint_bracket_matrix_check(&g, &cp).unwrap());
    }
}

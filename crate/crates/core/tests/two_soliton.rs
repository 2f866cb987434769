use clifford_kdv::dynamics::{self, SolverConfig};
use clifford_kdv::solitons::{self, TwoSoliton};
use clifford_kdv::verify::max_abs_diff;
use clifford_kdv::Grid;

/// `3C sech²((√C x̃ - C^{3/2} t + δ)/2)` centred at `L/2`.
fn single(grid: &Grid, c: f64, t: f64, delta: f64) -> Vec<f64> {
    let k = c.sqrt();
    grid.x()
        .iter()
        .map(|&x| {
            let th = k * (x - 0.5 * grid.length()) - k.powi(3) * t + delta;
            3.0 * c / (0.5 * th).cosh().powi(2)
        })
        .collect()
}

#[test]
fn well_separated_pulses_carry_the_phase_shift() {
    let grid = Grid::new(160.0, 1024).unwrap();
    let (c1, c2) = (4.0, 1.0);
    let shift = TwoSoliton::new(c1, c2).unwrap().log_interaction();
    assert!(shift < 0.0);
    for &t in &[-8.0, 8.0] {
        let (u, _) = TwoSoliton::new(c1, c2).unwrap().sample(&grid, t);
        // After the collision the fast pulse carries ln A, before it the slow one does.
        let (d1, d2) = if t > 0.0 { (shift, 0.0) } else { (0.0, shift) };
        let sum: Vec<f64> = single(&grid, c1, t, d1).iter().zip(single(&grid, c2, t, d2)).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&u, &sum) < 1e-6, "t = {t}: {}", max_abs_diff(&u, &sum));
        let wrong: Vec<f64> = single(&grid, c1, t, d2).iter().zip(single(&grid, c2, t, d1)).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&u, &wrong) > 1e-1);
    }
}

#[test]
fn evolved_collision_matches_exact_solution() {
    let grid = Grid::new(80.0, 512).unwrap();
    let (c1, c2, t0) = (4.0, 1.0, -2.0);
    let start = solitons::kdv_two_soliton(c1, c2, &grid, t0, 0).unwrap();
    let cfg = SolverConfig::new(1.0, 5e-4, 4.0).with_sample_every(usize::MAX);
    let evo = dynamics::evolve(&start, &cfg, |_, _| {}).unwrap();
    assert!((evo.state.t - 2.0).abs() < 1e-12);
    let exact = solitons::kdv_two_soliton(c1, c2, &grid, 2.0, 0).unwrap();
    let err = max_abs_diff(&evo.state.u, &exact.u);
    assert!(err < 1e-6, "{err}");
    assert!(solitons::two_soliton_residual(c1, c2, &grid, 0.3, 1.0).unwrap() < 1e-8);
}

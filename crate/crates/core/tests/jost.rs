//! Jost matrix construction at a fixed time and its co-evolution with a
//! numerically evolved field.

use dnls_core::backlund::{bt_up, coefficients_from_weights};
use dnls_core::evolve::{Evolver, EvolverConfig};
use dnls_core::grid::{l2_norm, Grid};
use dnls_core::harness::{Perturbation, PerturbationShape};
use dnls_core::jost::{jost_evolve, jost_initial};
use dnls_core::soliton::Soliton;
use dnls_core::C64;

const Z0: C64 = C64::new(1.0, 0.5);

fn small_field(grid: &Grid, eps: f64, shape: PerturbationShape) -> Vec<C64> {
    Perturbation {
        shape,
        eps,
        seed: 11,
    }
    .build(grid)
    .unwrap()
}

fn zero_series(grid: &Grid, len: usize) -> Vec<Vec<C64>> {
    vec![vec![C64::new(0.0, 0.0); grid.n()]; len]
}

fn time_phases(t: f64, z: C64) -> (C64, C64) {
    let z2 = z * z;
    let z4 = z2 * z2;
    let i = C64::new(0.0, 1.0);
    ((-2.0 * i * z4 * t).exp(), (2.0 * i * z4 * t).exp())
}

#[test]
fn deviation_from_identity_scales_with_the_field() {
    let grid = Grid::new(1024, 60.0).unwrap();
    let shape = PerturbationShape::SechModulated {
        kappa: 1.0,
        center: 0.0,
    };
    let mut devs = Vec::new();
    for eps in [1e-2, 5e-3] {
        let q = small_field(&grid, eps, shape);
        let sol = jost_initial(&q, &grid, Z0, 1e-12).unwrap();
        let sup11 = sol
            .mu
            .m11
            .iter()
            .map(|v| (v - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        devs.push(sup11 + l2_norm(&sol.mu.m21, &grid));
        assert!(sol.boundary_error < 1e-8);
        assert!(sol.contraction_norm < 1.0);
    }
    let ratio = devs[0] / devs[1];
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio:.3}");
}

/// Deviation of the determinant from one and its variation across the grid.
fn det_behavior(n: usize, eps: f64) -> (f64, f64) {
    let grid = Grid::new(n, 60.0).unwrap();
    let noise = small_field(&grid, eps, PerturbationShape::RandomBandlimited { max_mode: 12 });
    // Windowed so the field genuinely decays at the normalization points.
    let q: Vec<C64> = noise
        .iter()
        .enumerate()
        .map(|(j, v)| v / (0.7 * grid.x(j)).cosh())
        .collect();
    let sol = jost_initial(&q, &grid, Z0, 1e-12).unwrap();
    let det = sol.mu.determinant();
    let from_one = det
        .iter()
        .map(|d| (d - C64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let spread = det
        .iter()
        .map(|d| (d - det[0]).norm())
        .fold(0.0, f64::max);
    (from_one, spread)
}

#[test]
fn determinant_is_constant_and_near_one_for_small_data() {
    // The coefficient matrix is trace-free, so the determinant cannot vary
    // with x. Its value is the transmission coefficient of the field: the
    // columns are normalized at opposite ends, which leaves a quadratic
    // departure from one that no grid refinement removes.
    let (quad, spread_coarse) = det_behavior(1024, 1e-2);
    let (linear, _) = det_behavior(1024, 1e-3);
    let (small, _) = det_behavior(2048, 1e-4);
    assert!(small < 1e-8);
    let ratio = quad / linear;
    assert!((80.0..=120.0).contains(&ratio), "eps ratio {ratio:.1}");
    assert!(spread_coarse < 1e-8, "spread {spread_coarse:.3e}");
}

#[test]
fn rest_state_evolution_is_a_pair_of_phases() {
    let grid = Grid::new(512, 40.0).unwrap();
    let dt = 1e-3;
    let series = zero_series(&grid, 501);
    let mu0 = jost_initial(&series[0], &grid, Z0, 1e-10).unwrap();
    assert_eq!(mu0.iterations, 0);
    let sols = jost_evolve(&series, &mu0.mu, &grid, Z0, 0.0, dt, 1e-8, 50).unwrap();
    assert_eq!(sols.len(), 5);
    for s in &sols {
        let (down, up) = time_phases(s.t, Z0);
        for j in 0..grid.n() {
            assert!((s.mu.m11[j] - down).norm() < 1e-10);
            assert!((s.mu.m22[j] - up).norm() < 1e-10);
            assert!(s.mu.m12[j].norm() < 1e-15);
            assert!(s.mu.m21[j].norm() < 1e-15);
        }
        assert!(s.boundary_error < 1e-10);
    }
}

#[test]
fn evolved_rest_state_feeds_the_dressing() {
    let grid = Grid::new(1024, 60.0).unwrap();
    let s = Soliton::new(Z0).unwrap();
    let dt = 1e-3;
    let series = zero_series(&grid, 501);
    let mu0 = jost_initial(&series[0], &grid, Z0, 1e-10).unwrap();
    let sols = jost_evolve(&series, &mu0.mu, &grid, Z0, 0.0, dt, 1e-8, 250).unwrap();
    let last = sols.last().unwrap();
    assert!((last.t - 0.5).abs() < 1e-12);
    let coeffs = coefficients_from_weights(C64::new(1.0, 0.0), C64::new(1.0, 0.0), 0.0).unwrap();
    let zero = vec![C64::new(0.0, 0.0); grid.n()];
    let out = bt_up(&zero, &last.mu, &coeffs, &grid, Z0).unwrap();
    let diff: Vec<C64> = out
        .field
        .iter()
        .zip(&s.profile(&grid, last.t))
        .map(|(a, b)| a - b)
        .collect();
    assert!(
        l2_norm(&diff, &grid) < 1e-8,
        "deviation {:.3e}",
        l2_norm(&diff, &grid)
    );
}

#[test]
fn fresh_and_evolved_solutions_agree_up_to_the_time_phase() {
    let grid = Grid::new(1024, 60.0).unwrap();
    let dt = 2e-4;
    let t_end = 0.2;
    let q0 = small_field(
        &grid,
        1e-3,
        PerturbationShape::SechModulated {
            kappa: 1.0,
            center: 0.0,
        },
    );
    let cfg = EvolverConfig {
        dt,
        t_end,
        dealias: true,
        store_every: 1,
    };
    let mut ev = Evolver::new(&q0, &grid, 0.0, &cfg).unwrap();
    let snaps = ev.run(&cfg).unwrap();
    let series: Vec<Vec<C64>> = snaps.into_iter().map(|(_, f)| f).collect();
    assert_eq!(series.len() % 2, 1);

    let mu0 = jost_initial(&q0, &grid, Z0, 1e-10).unwrap();
    let sols = jost_evolve(&series, &mu0.mu, &grid, Z0, 0.0, dt, 1e-6, 100).unwrap();

    let det0 = mu0.mu.determinant();
    for s in &sols {
        let det = s.mu.determinant();
        let drift = det
            .iter()
            .zip(&det0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(drift < 1e-6, "determinant drift {drift:.3e} at t = {}", s.t);
    }

    let last = sols.last().unwrap();
    let fresh = jost_initial(series.last().unwrap(), &grid, Z0, 1e-10).unwrap();
    let (down, up) = time_phases(last.t, Z0);
    let mut sup = 0.0f64;
    for j in 0..grid.n() {
        sup = sup
            .max((last.mu.m11[j] - down * fresh.mu.m11[j]).norm())
            .max((last.mu.m21[j] - down * fresh.mu.m21[j]).norm())
            .max((last.mu.m12[j] - up * fresh.mu.m12[j]).norm())
            .max((last.mu.m22[j] - up * fresh.mu.m22[j]).norm());
    }
    assert!(sup < 1e-5, "column mismatch {sup:.3e}");
}

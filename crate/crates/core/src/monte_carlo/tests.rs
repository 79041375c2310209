use super::*;
use crate::tilt::TiltPoint;
use crate::solver::{absorption_by_horizon, exit_expectation, Payoff, Restriction};

fn drifted() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
}

fn with_long_jump() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.4), (0, 1, 0.3), (-1, 0, 0.1), (0, -1, 0.1), (-2, 0, 0.1)]).unwrap()
}

fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint::new(x, y)
}

fn opts(samples: usize, horizon: usize, seed: u64) -> McOptions {
    McOptions { samples, horizon, rng: RngSpec::new(seed, 7), ..McOptions::default() }
}

#[test]
fn start_outside_exits_immediately() {
    let law = drifted();
    let rec = sample_exit(&law.tilt(Vec2::ZERO).unwrap(), &ConeGeometry::quadrant(), pt(0, 4), 10, &RngSpec::new(1, 0)).unwrap();
    assert_eq!(rec, ExitRecord { exit_point: Some(pt(0, 4)), steps: 0, which: ExitKind::Tau1First });
    let both = sample_exit(&law.tilt(Vec2::ZERO).unwrap(), &ConeGeometry::quadrant(), pt(0, 0), 10, &RngSpec::new(1, 0)).unwrap();
    assert_eq!(both.which, ExitKind::BothSimultaneous);
}

#[test]
fn zero_horizon_rejected() {
    let law = drifted();
    let r = sample_exit(&law.tilt(Vec2::ZERO).unwrap(), &ConeGeometry::quadrant(), pt(2, 2), 0, &RngSpec::new(1, 0));
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn replay_is_identical() {
    let law = drifted();
    let tilted = law.tilt(Vec2::new(-0.1, 0.02)).unwrap();
    let cone = ConeGeometry::quadrant();
    let spec = RngSpec::new(42, 3);
    let a = sample_exit(&tilted, &cone, pt(3, 3), 1000, &spec).unwrap();
    let b = sample_exit(&tilted, &cone, pt(3, 3), 1000, &spec).unwrap();
    assert_eq!(a, b);
    assert_ne!(spec.path_rng(0).get_seed(), RngSpec::new(43, 3).path_rng(0).get_seed());
}

#[test]
fn parallel_and_sequential_estimates_are_bitwise_equal() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = Vec2::new(-0.1, 0.02);
    let par = McOptions { execution: Execution::Parallel, ..opts(3000, 200, 5) };
    let seq = McOptions { execution: Execution::Sequential, ..par };
    let x = absorption_curve(&law, &cone, a, pt(2, 3), &[10, 200], &par).unwrap();
    let y = absorption_curve(&law, &cone, a, pt(2, 3), &[10, 200], &seq).unwrap();
    assert_eq!(x, y);
}

#[test]
fn frequencies_match_exact_finite_horizon_absorption() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = Vec2::new(-0.2, 0.05);
    let z0 = pt(2, 3);
    let horizons = [5, 15, 30];
    let curve = absorption_curve(&law, &cone, a, z0, &horizons, &opts(40_000, 30, 11)).unwrap();
    for (h, est) in horizons.iter().zip(&curve.estimates) {
        let exact = absorption_by_horizon(&law, &cone, a, z0, *h).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "H = {h}: {} vs {exact} (se {})", est.mean, est.stderr);
    }
    assert!(curve.estimates.windows(2).all(|w| w[0].mean <= w[1].mean));
}

#[test]
fn outward_drift_exits_almost_surely() {
    // Past the arc the tilted walk drifts out of the quadrant.
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = crate::tilt::a_of(&law, Vec2::new(-1.0, 0.2)).unwrap();
    let curve = absorption_curve(&law, &cone, a.a, pt(3, 3), &[10, 100, 1000], &opts(4000, 1000, 2)).unwrap();
    let means: Vec<f64> = curve.estimates.iter().map(|e| e.mean).collect();
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
    assert!(means[2] > 0.99, "{means:?}");
}

#[test]
fn crosscheck_agrees_inside_d() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = TiltPoint::evaluate(&law, Vec2::new(-0.15, 0.05)).unwrap();
    let domain = Arc::new(TruncatedDomain::build(&cone, &law, 60).unwrap());
    let u = exit_expectation(&law, &domain, &a, Payoff::Exp, Restriction::AllExits).unwrap();
    for z0 in [pt(1, 1), pt(4, 7)] {
        let rep = exit_probability_crosscheck(&law, &u, z0, &opts(20_000, DEFAULT_HORIZON, 9)).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert!(rep.mc.truncated_fraction < 1e-3);
    }
}

#[test]
fn endpoint_tilt_absorbs_with_high_frequency() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = crate::tilt::a_of(&law, cone.c1()).unwrap();
    let curve = absorption_curve(&law, &cone, a.a, pt(1, 5), &[1_000, 100_000], &opts(2000, 100_000, 4)).unwrap();
    assert!(curve.estimates[0].mean <= curve.estimates[1].mean);
    assert!(curve.estimates[1].mean >= 0.9, "{:?}", curve.estimates);
}

#[test]
fn nearest_neighbour_projection_has_no_overshoot() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    for wall in Wall::both() {
        let est = overshoot_moment(&law, &cone, wall, pt(3, 3), &opts(2000, 100_000, 1)).unwrap();
        assert_eq!(est.mean, 0.0);
        assert!(est.truncated_fraction < 0.05);
    }
}

#[test]
fn long_jump_gives_fractional_overshoot() {
    let law = with_long_jump();
    let cone = ConeGeometry::quadrant();
    let est = overshoot_moment(&law, &cone, Wall::First, pt(3, 3), &opts(4000, 100_000, 1)).unwrap();
    assert!(est.mean > 0.0 && est.mean < 1.0, "{est:?}");
    assert!(est.stderr > 0.0);
    let twice = overshoot_moment(&law, &cone, Wall::First, pt(3, 3), &opts(8000, 100_000, 2)).unwrap();
    let se = (est.stderr.powi(2) + twice.stderr.powi(2)).sqrt();
    assert!((est.mean - twice.mean).abs() <= 3.0 * se);
}

#[test]
fn nearest_point_lies_in_the_cone() {
    let cone = ConeGeometry::from_dirs(pt(1, 0), pt(1, 1)).unwrap();
    let q = Vec2::new(1.0, 0.5).normalized();
    for r in [1.0, 5.0, 20.0] {
        let z = nearest_interior_point(&cone, q, r).unwrap();
        assert_eq!(cone.which_boundary(z), BoundaryStatus::None);
    }
    assert_eq!(nearest_interior_point(&ConeGeometry::quadrant(), Vec2::new(1.0, 1.0), 2.0_f64.sqrt() * 7.0), Some(pt(7, 7)));
}

#[test]
fn martin_table_is_well_formed() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let z_ref = pt(2, 2);
    let probes = [pt(2, 2), pt(3, 1), pt(1, 4)];
    let table =
        martin_ratio_experiment(&law, &cone, Vec2::new(1.0, 1.0), &[5, 10, 15], &probes, z_ref, 30, &SolveOptions::default()).unwrap();
    assert_eq!(table.rows.len(), 9);
    for row in &table.rows {
        assert!(!row.degenerate);
        if row.probe == z_ref {
            assert_eq!(row.m, 1.0);
            assert_eq!(row.h_ratio, 1.0);
        } else {
            assert!(row.m > 0.0 && row.h_ratio > 0.0);
        }
    }
    let mut buf = Vec::new();
    table.write_csv(&mut buf, &[]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("r,z_n_x,z_n_y,probe_x,probe_y,M,h_ratio,degenerate"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn nearest_neighbour_law_needs_radius_one() {
    let scan = strong_local_irreducibility_scan(&drifted(), &ConeGeometry::quadrant(), 6, 20, Execution::default());
    assert!(scan.passes());
    assert_eq!(scan.max_radius, Some(1));
    assert_eq!(scan.states, 400);
}

#[test]
fn diagonal_law_reaches_neighbours_through_the_unit_ball() {
    // z → z+(1,0) → z+(0,1) → z+(−1,0) uses the steps (1,0), (−1,1), (−1,−1),
    // and z+(0,−1) is reached from z+(1,0) by (−1,−1); all points lie on the unit circle.
    let law = StepLaw::from_triples(&[(1, 1, 0.2), (1, -1, 0.2), (-1, 1, 0.2), (-1, -1, 0.2), (1, 0, 0.2)]).unwrap();
    let scan = strong_local_irreducibility_scan(&law, &ConeGeometry::quadrant(), 8, 15, Execution::default());
    assert!(scan.passes());
    assert_eq!(scan.max_radius, Some(1));
}

#[test]
fn double_step_law_needs_radius_two_at_the_wall() {
    // Away from the wall (1,0) is (−1,0) then (2,0); on the column x = 1 the
    // detour leaves the cone and the path must pass through z + (2,0).
    let law = StepLaw::from_triples(&[(2, 0, 0.4), (0, 1, 0.3), (-1, 0, 0.2), (0, -1, 0.1)]).unwrap();
    let scan = strong_local_irreducibility_scan(&law, &ConeGeometry::quadrant(), 8, 15, Execution::Sequential);
    assert!(scan.passes());
    assert_eq!(scan.max_radius, Some(2));
    for &(z, r) in &scan.per_state {
        assert_eq!(r, if z.x == 1 { 2 } else { 1 }, "{z}");
    }
}

#[test]
fn parity_obstruction_is_reported() {
    let law = StepLaw::from_triples(&[(1, 1, 0.25), (1, -1, 0.25), (-1, 1, 0.25), (-1, -1, 0.25)]).unwrap();
    let scan = strong_local_irreducibility_scan(&law, &ConeGeometry::quadrant(), 10, 10, Execution::default());
    assert_eq!(scan.failure, Some((pt(1, 1), pt(1, 0))));
    assert_eq!(scan.max_radius, None);
}

#[test]
fn integer_square_root_rounds_up() {
    for n in 0..2000i64 {
        let r = integer_sqrt_ceil(n);
        assert!(r * r >= n && (r == 0 || (r - 1) * (r - 1) < n));
    }
}

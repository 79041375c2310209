use super::*;
use crate::tilt::a_of;
use proptest::prelude::*;

fn drifted() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
}

fn symmetric() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.35), (-1, 0, 0.15), (0, 1, 0.35), (0, -1, 0.15)]).unwrap()
}

fn domain(cone: &ConeGeometry, law: &StepLaw, r: i64) -> Arc<TruncatedDomain> {
    Arc::new(TruncatedDomain::build(cone, law, r).unwrap())
}

fn tilt(law: &StepLaw, a: Vec2) -> TiltPoint {
    TiltPoint::evaluate(law, a).unwrap()
}

fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint::new(x, y)
}

#[test]
fn single_state_domain_by_hand() {
    let law = drifted();
    let cone = ConeGeometry::from_dirs(pt(1, 0), pt(1, 1)).unwrap();
    let d = domain(&cone, &law, 2);
    assert_eq!(d.states(), &[pt(2, 1)]);
    let a = tilt(&law, Vec2::new(-0.2, 0.1));
    assert!(a.phi < 1.0);
    let u = exit_expectation(&law, &d, &a, Payoff::Exp, Restriction::AllExits).unwrap();
    let e = |z: LatticePoint| a.a.dot(z.to_vec2()).exp();
    // (1,1) and (2,2) sit on the upper ray, (2,0) on the lower one; (3,1) is beyond the box.
    let exits = 0.1 * e(pt(1, 1)) + 0.4 * e(pt(2, 2)) + 0.1 * e(pt(2, 0));
    let v = u.value(0);
    assert!((v.lo - exits).abs() < 1e-14);
    assert!(v.hi > v.lo && v.hi <= exits + 0.4 * e(pt(3, 1)) + 1e-14);
}

#[test]
fn zero_tilt_gives_exit_probability_below_one_and_nests() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = tilt(&law, Vec2::ZERO);
    let small = exit_expectation(&law, &domain(&cone, &law, 20), &a, Payoff::Exp, Restriction::AllExits).unwrap();
    let large = exit_expectation(&law, &domain(&cone, &law, 40), &a, Payoff::Exp, Restriction::AllExits).unwrap();
    for (i, z) in small.domain().states().iter().enumerate() {
        let b = large.value_at(*z).unwrap();
        assert!(b.within(&small.value(i), 1e-12), "{z}: {b} not within {}", small.value(i));
    }
    let deep = large.value_at(pt(15, 15)).unwrap();
    assert!(deep.hi < 1.0 - 1e-3);
}

#[test]
fn survival_complements_exit_mass() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 25);
    for a in [Vec2::new(-0.1, -0.05), Vec2::new(0.0, -0.3), Vec2::ZERO] {
        let a = tilt(&law, a);
        let solver = LatticeSolver::new(&law, &d, &a, &SolveOptions::default()).unwrap();
        let u = solver.exit_expectation(Payoff::Exp, Restriction::AllExits).unwrap();
        let s = solver.survival().unwrap();
        for i in 0..d.len() {
            let (ub, sb) = (u.scaled(i), s.scaled(i));
            assert!((sb.lo + ub.hi - 1.0).abs() < 1e-10 && (sb.hi + ub.lo - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn restriction_buckets_add_up() {
    let law = drifted();
    let cone = ConeGeometry::from_dirs(pt(1, 0), pt(1, 2)).unwrap();
    let d = domain(&cone, &law, 18);
    let a = a_of(&law, Vec2::new(1.0, 0.4)).unwrap();
    let solver = LatticeSolver::new(&law, &d, &a, &SolveOptions::default()).unwrap();
    let f = solver
        .exit_expectations(&[
            (Payoff::Exp, Restriction::AllExits),
            (Payoff::Exp, Restriction::OnlyTau1First),
            (Payoff::Exp, Restriction::OnlyTau2First),
        ])
        .unwrap();
    for i in 0..d.len() {
        let sum = f[1].scaled(i) + f[2].scaled(i);
        let all = f[0].scaled(i);
        assert!((all.lo - sum.lo).abs() < 1e-12);
        assert!(all.hi <= sum.hi + 1e-12);
        assert!(f[2].scaled(i).hi <= 1.0 + 1e-12);
    }
}

#[test]
fn direct_and_iterative_solves_agree() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 15);
    let a = a_of(&law, Vec2::new(1.0, 2.0)).unwrap();
    let direct = SolveOptions { method: LinearMethod::Direct, ..SolveOptions::default() };
    let iter = SolveOptions { method: LinearMethod::GaussSeidel, ..SolveOptions::default() };
    let u = LatticeSolver::new(&law, &d, &a, &direct).unwrap().exit_expectation(Payoff::Exp, Restriction::AllExits).unwrap();
    let v = LatticeSolver::new(&law, &d, &a, &iter).unwrap().exit_expectation(Payoff::Exp, Restriction::AllExits).unwrap();
    for i in 0..d.len() {
        assert!((u.scaled(i).lo - v.scaled(i).lo).abs() < 1e-10);
        assert!((u.scaled(i).hi - v.scaled(i).hi).abs() < 1e-10);
    }
}

#[test]
fn endpoint_survival_upper_bracket_shrinks() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = a_of(&law, cone.c1()).unwrap();
    let z = pt(3, 8);
    let his: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&r| survival_probability(&law, &domain(&cone, &law, r), &a).unwrap().value_at(z).unwrap().hi)
        .collect();
    assert!(his[0] > his[1] && his[1] > his[2], "{his:?}");
}

#[test]
fn linear_payoff_stays_below_its_free_value() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 30);
    for wall in Wall::both() {
        let a = a_of(&law, cone.c(wall)).unwrap();
        let u = exit_expectation(&law, &d, &a, Payoff::LinearExp(wall), Restriction::AllExits).unwrap();
        for (i, z) in d.states().iter().enumerate() {
            assert!(u.scaled(i).hi <= cone.f_dot(wall, *z) + 1e-10);
        }
    }
}

#[test]
fn linear_payoff_needs_endpoint_tilt() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 10);
    let a = a_of(&law, Vec2::new(1.0, 1.0)).unwrap();
    let r = exit_expectation(&law, &d, &a, Payoff::LinearExp(Wall::First), Restriction::AllExits);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn tilt_outside_d_rejected() {
    let law = drifted();
    let d = domain(&ConeGeometry::quadrant(), &law, 10);
    let r = survival_probability(&law, &d, &tilt(&law, Vec2::new(1.0, 1.0)));
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn green_column_basics() {
    let law = symmetric();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 16);
    let g = green_column(&law, &d, pt(4, 6), &SolveOptions::default()).unwrap();
    assert!(!g.is_certified());
    assert!(g.value_at(pt(4, 6)).unwrap().lo >= 1.0);
    let h = green_column(&law, &d, pt(6, 4), &SolveOptions::default()).unwrap();
    for z in d.states() {
        let mirrored = pt(z.y, z.x);
        let (a, b) = (g.value_at(*z).unwrap(), h.value_at(mirrored).unwrap());
        assert!((a.lo - b.lo).abs() < 1e-12 * (1.0 + a.lo));
    }
}

#[test]
fn unreachable_target_has_zero_green_function() {
    // Steps never decrease either coordinate, so (3, 3) cannot reach (1, 1).
    let law = StepLaw::from_triples(&[(1, 0, 0.4), (0, 1, 0.4), (1, 1, 0.2)]).unwrap();
    let d = domain(&ConeGeometry::quadrant(), &law, 8);
    let g = green_column(&law, &d, pt(1, 1), &SolveOptions::default()).unwrap();
    assert_eq!(g.value_at(pt(3, 3)).unwrap().lo, 0.0);
    assert!(g.value_at(pt(1, 1)).unwrap().lo >= 1.0);
}

#[test]
fn constant_field_is_not_harmonic() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let d = domain(&cone, &law, 8);
    let ones = HarmonicField::from_scaled(
        Arc::clone(&d),
        FieldKind::HarmonicInterior,
        Vec2::ZERO,
        Vec2::ZERO,
        vec![Bracket::point(1.0); d.len()],
    );
    let rep = harmonicity_residual(&ones, &law);
    // The residual is the one-step exit probability: 0.1 along a wall, 0.2 at the corner.
    assert!((rep.max_residual - 0.2).abs() < 1e-15);
    assert!(!rep.passes);
}

#[test]
fn horizon_absorption_increases_towards_exit_mass() {
    let law = drifted();
    let cone = ConeGeometry::quadrant();
    let a = tilt(&law, Vec2::new(-0.2, 0.05));
    let z0 = pt(2, 3);
    let short = absorption_by_horizon(&law, &cone, a.a, z0, 10).unwrap();
    let long = absorption_by_horizon(&law, &cone, a.a, z0, 40).unwrap();
    let u = exit_expectation(&law, &domain(&cone, &law, 60), &a, Payoff::Exp, Restriction::AllExits).unwrap();
    let total = u.scaled_at(z0).unwrap();
    assert!(short < long && long <= total.hi + 1e-12);
}

#[test]
fn csv_has_schema_columns() {
    let law = drifted();
    let d = domain(&ConeGeometry::quadrant(), &law, 4);
    let u = survival_probability(&law, &d, &tilt(&law, Vec2::ZERO)).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&mut buf, &["test".into()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# test"));
    assert_eq!(lines.next(), Some("x,y,lo,hi,kind,a1,a2"));
    assert_eq!(lines.count(), d.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn brackets_nest_as_radius_grows(theta in 0.05f64..1.52, r in 8i64..16) {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let a = a_of(&law, Vec2::from_angle(theta)).unwrap();
        let f_small = survival_probability(&law, &domain(&cone, &law, r), &a).unwrap();
        let f_large = survival_probability(&law, &domain(&cone, &law, r + 7), &a).unwrap();
        for (i, z) in f_small.domain().states().iter().enumerate() {
            let big = f_large.value_at(*z).unwrap();
            prop_assert!(big.within(&f_small.value(i), 1e-12));
        }
    }
}

use proptest::prelude::*;
use revmix::orbits::*;
use revmix::*;

const B: f64 = 0.3;

fn quadratic_roots(m: f64, b: f64) -> [f64; 2] {
    // x = y = x*, x* = M - b x* - x*²
    let d = ((1.0 + b) * (1.0 + b) + 4.0 * m).sqrt();
    [(-(1.0 + b) + d) / 2.0, (-(1.0 + b) - d) / 2.0]
}

/// Minimal period (≤ 16) of the orbit reached from next to the fixed point, or 0.
fn settled_period(m: f64) -> usize {
    let map = HenonMap64::new(m, B).unwrap();
    let r = quadratic_roots(m, B)[0];
    let mut x = [r + 0.01, r];
    for _ in 0..40_000 {
        x = map.step(x).unwrap();
        if !x[0].is_finite() || x[0].abs() > 1e3 {
            return 0;
        }
    }
    let mut y = x;
    for p in 1..=16 {
        y = map.step(y).unwrap();
        if (y[0] - x[0]).hypot(y[1] - x[1]) < 1e-7 {
            return p;
        }
    }
    0
}

/// First parameter in `[lo, hi]` where the settled period exceeds `p`.
fn oracle_doubling(mut lo: f64, mut hi: f64, p: usize) -> f64 {
    assert!(settled_period(lo) == p && settled_period(hi) != p);
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if settled_period(mid) == p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn henon_fixed_points_match_quadratic() {
    let map = HenonMap64::new(1.0, B).unwrap();
    let tol = OrbitTolerances::default();
    for x in quadratic_roots(1.0, B) {
        let fp = find_periodic_point(&map, [x + 0.05, x - 0.05], 1, 1.0, &tol).unwrap();
        assert!((fp.point[0] - x).abs() < 1e-10 && (fp.point[1] - x).abs() < 1e-10);
        assert!((fp.det - B).abs() < 1e-12);
    }
}

#[test]
fn henon_cascade_against_orbit_diagram() {
    let fam = HenonFamily { b: B };
    let set = ContinuationSettings::default();
    let m0 = 1.0;
    let x = quadratic_roots(m0, B)[0];
    let fp = find_periodic_point(&fam.at(m0).unwrap(), [x, x], 1, m0, &set.tol).unwrap();
    let c = detect_cascade(&fam, &fp, (m0, 2.0), 0.002, 8, &set).unwrap();
    assert!(c.eps.len() >= 3, "{c:?}");
    assert_eq!(&c.periods[..3], &[1, 2, 4]);
    assert!((c.eps[0] - 0.75 * (1.0 + B) * (1.0 + B)).abs() < 1e-5);
    let o1 = oracle_doubling(1.2, 1.4, 1);
    let o2 = oracle_doubling(1.7, 1.9, 2);
    assert!((c.eps[0] - o1).abs() < 2e-3, "{} vs {o1}", c.eps[0]);
    assert!((c.eps[1] - o2).abs() < 2e-3, "{} vs {o2}", c.eps[1]);
    assert!(c.eps.windows(2).all(|w| w[1] > w[0]));
    let last = *c.ratios.last().unwrap();
    assert!(last > 3.0 && last < 6.5, "{:?}", c.ratios);
}

#[test]
fn continuation_of_stable_henon_point() {
    let fam = HenonFamily { b: B };
    let set = ContinuationSettings::default();
    let x = quadratic_roots(1.0, B)[0];
    let fp = find_periodic_point(&fam.at(1.0).unwrap(), [x, x], 1, 1.0, &set.tol).unwrap();
    let c = continue_branch(&fam, &fp, (1.0, 1.4), 0.01, &set).unwrap();
    assert!(c.lost.is_none());
    assert_eq!(c.events.len(), 1);
    assert_eq!(c.events[0].kind, BifurcationKind::PeriodDoubling);
    let ms: Vec<f64> = c.branch.iter().map(|r| r.param).collect();
    assert!(ms.windows(2).all(|w| w[1] > w[0]));
    for r in &c.branch {
        let want = quadratic_roots(r.param, B)[0];
        assert!((r.point[0] - want).abs() < 1e-9);
    }
}

#[test]
fn singular_newton_reported() {
    // identity-like linear part: DG = 0 at every point
    struct Id;
    impl PlanarMap<f64> for Id {
        fn step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
            Ok(x)
        }
        fn inverse_step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
            Ok(x)
        }
        fn jacobian(&self, _x: [f64; 2]) -> Result<Mat2<f64>> {
            Ok(Mat2::identity())
        }
    }
    let r = find_periodic_point(&Id, [0.3, 0.1], 1, 0.0, &OrbitTolerances::default());
    assert!(r.is_ok() || matches!(r, Err(Error::SingularJacobian { .. })));
    struct Shift;
    impl PlanarMap<f64> for Shift {
        fn step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
            Ok([x[0] + 1.0, x[1]])
        }
        fn inverse_step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
            Ok([x[0] - 1.0, x[1]])
        }
        fn jacobian(&self, _x: [f64; 2]) -> Result<Mat2<f64>> {
            Ok(Mat2::identity())
        }
    }
    assert!(matches!(
        find_periodic_point(&Shift, [0.0, 0.0], 1, 0.0, &OrbitTolerances::default()),
        Err(Error::SingularJacobian { .. })
    ));
}

#[test]
fn vortex_e2_pitchfork_offspring_are_mirror_images() {
    let fam = VortexFamily::new(VortexParams64::with_eps(0.01).unwrap(), IntegratorConfig64::default());
    let set = ContinuationSettings::default();
    let fp = find_periodic_point(&fam.at(0.01).unwrap(), [11.4634, 0.0], 1, 0.01, &set.tol).unwrap();
    assert!(fp.symmetric && fp.kind == OrbitKind::Elliptic);
    let c = continue_branch(&fam, &fp, (0.01, 0.015), 0.0005, &set).unwrap();
    let ev: Vec<_> = c.events.iter().filter(|e| e.kind == BifurcationKind::Pitchfork).collect();
    assert_eq!(ev.len(), 1);
    let ev = ev[0];
    assert!(ev.eps_star > 0.01 && ev.eps_star < 0.015);
    assert_eq!(c.branch.last().unwrap().kind, OrbitKind::Saddle);
    assert_eq!(ev.offspring.len(), 2);
    let (a, b) = (&ev.offspring[0], &ev.offspring[1]);
    let map = fam.at(a.param).unwrap();
    let ha = map.involution(a.point).unwrap();
    assert!(map.distance(ha, b.point) < 1e-6);
    let kinds = [a.kind, b.kind];
    assert!(kinds.contains(&OrbitKind::Sink) && kinds.contains(&OrbitKind::Source));
    assert!((a.det * b.det - 1.0).abs() < 1e-2);
}

#[test]
fn vortex_sink_period_doubles() {
    let fam = VortexFamily::new(VortexParams64::with_eps(0.1).unwrap(), IntegratorConfig64::default());
    let set = ContinuationSettings::default();
    let fp = find_periodic_point(&fam.at(0.1).unwrap(), [8.048, 2.252], 1, 0.1, &set.tol).unwrap();
    assert_eq!(fp.kind, OrbitKind::Sink);
    let c = continue_branch(&fam, &fp, (0.1, 0.12), 0.001, &set).unwrap();
    let pd = c
        .events
        .iter()
        .find(|e| e.kind == BifurcationKind::PeriodDoubling)
        .expect("period doubling");
    assert!(pd.eps_star > 0.11 && pd.eps_star < 0.12);
    let two = doubled_orbit(&fam, pd, &set).unwrap();
    assert_eq!(two.period, 2);
    assert_eq!(two.kind, OrbitKind::Sink);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_respects_bands(re in -3.0f64..3.0, im in 0.0f64..2.0) {
        use num_complex::Complex;
        let m = [Complex::new(re, im), Complex::new(re, -im)];
        let k = classify_multipliers(&m, 1e-4);
        let modulus = re.hypot(im);
        if im > 1e-12 && (modulus - 1.0).abs() > 1e-4 {
            prop_assert!(k == OrbitKind::Sink || k == OrbitKind::Source);
        }
        if im > 1e-12 && (modulus - 1.0).abs() < 1e-6 {
            prop_assert!(k == OrbitKind::Elliptic || k == OrbitKind::Unresolved);
        }
    }

    #[test]
    fn henon_nonsymmetric_pairs_have_reciprocal_dets(m in 0.5f64..1.2) {
        // Hénon has no involution here: every record is non-symmetric
        let map = HenonMap64::new(m, B).unwrap();
        let x = quadratic_roots(m, B)[0];
        let fp = find_periodic_point(&map, [x + 0.01, x], 1, m, &OrbitTolerances::default()).unwrap();
        prop_assert!(!fp.symmetric);
        prop_assert!((fp.det - B).abs() < 1e-12);
    }
}

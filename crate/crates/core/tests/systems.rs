use proptest::prelude::*;
use revmix::scalar::wrap_delta;
use revmix::*;
use std::f64::consts::TAU;

fn params(eps: f64) -> VortexParams64 {
    VortexParams64::with_eps(eps).unwrap()
}

proptest! {
    #[test]
    fn flow_involutions_square_to_identity(r in 0.5f64..15.0, s in 0.0f64..TAU, phi in -10.0f64..10.0) {
        for inv in [Involution::FlowH1, Involution::FlowH2] {
            let x = FlowState64::new(r, s, phi);
            let y = inv.apply(inv.apply(x));
            prop_assert_eq!(y.r, r);
            prop_assert!(wrap_delta(y.s - s).abs() < 1e-12);
            prop_assert!((y.phi - phi).abs() < 1e-12);
        }
    }

    #[test]
    fn field_is_reversible(r in 0.5f64..15.0, s in 0.0f64..TAU, phi in 0.0f64..TAU, eps in 0.0f64..0.3) {
        let p = params(eps);
        let x = FlowState64::new(r, s, phi);
        let f = eval_field(&x, &p).unwrap();
        for inv in [Involution::FlowH1, Involution::FlowH2] {
            let g = eval_field(&inv.apply(x), &p).unwrap();
            let l = inv.linear_part();
            for k in 0..3 {
                prop_assert!((g[k] + l[k] * f[k]).abs() < 1e-10, "component {k}: {} vs {}", g[k], f[k]);
            }
        }
    }

    #[test]
    fn field_jacobian_matches_differences(r in 0.8f64..12.0, s in 0.0f64..TAU, phi in 0.0f64..TAU, eps in 0.0f64..0.3) {
        let p = params(eps);
        let x = [r, s, phi];
        let j = eval_field_jacobian(&FlowState64::new(r, s, phi), &p).unwrap();
        let h = 1e-6;
        for c in 0..3 {
            let mut a = x;
            let mut b = x;
            a[c] += h;
            b[c] -= h;
            let fa = eval_field(&FlowState64::from_array(a), &p).unwrap();
            let fb = eval_field(&FlowState64::from_array(b), &p).unwrap();
            for row in 0..3 {
                let fd = (fa[row] - fb[row]) / (2.0 * h);
                prop_assert!((fd - j[row][c]).abs() < 1e-6 * (1.0 + fd.abs()), "({row},{c}) fd {fd} exact {}", j[row][c]);
            }
        }
    }

    #[test]
    fn henon_inverse_round_trip(x in -2.0f64..2.0, y in -2.0f64..2.0, m in 0.5f64..2.0) {
        let map = HenonMap64::new(m, 0.3).unwrap();
        let z = map.inverse_step(map.step([x, y]).unwrap()).unwrap();
        prop_assert!((z[0] - x).abs() < 1e-12 && (z[1] - y).abs() < 1e-12);
    }
}

#[test]
fn field_rejects_small_radius() {
    let p = params(0.1);
    assert!(matches!(
        eval_field(&FlowState64::new(1e-4, 0.0, 0.0), &p),
        Err(Error::SingularityGuard { .. })
    ));
}

#[test]
fn parameter_validation() {
    assert!(VortexParams64::new(0.1, 4.65, -0.1).is_err());
    assert!(VortexParams64::new(f64::NAN, 4.65, 0.1).is_err());
    assert!(VortexParams64::with_eps(0.1463).is_ok());
}

#[test]
fn flow_keeps_first_integral_unperturbed() {
    let p = params(0.0);
    let x0 = FlowState64::new(2.0, 1.0, 0.3);
    let traj = integrate(x0, (0.0, 50.0), &p, &IntegratorConfig64::with_tol(1e-12)).unwrap();
    let c0 = revmix::systems::unperturbed_integral(&x0, &p);
    for k in 0..=50 {
        let x = traj.eval(k as f64).unwrap();
        let d = (revmix::systems::unperturbed_integral(&x, &p) - c0).abs();
        assert!(d < 1e-8, "t={k} drift {d}");
    }
}

use proptest::prelude::*;
use sphere_euler::euler::{Regime, State, VelocityField};
use sphere_euler::expr::Expr;
use sphere_euler::hodograph::{self, HodographProblem};
use sphere_euler::invariants::full_integrals;
use sphere_euler::transforms::{self, FrameMap, MapDirection};
use sphere_euler::verify::sinusoidal_momentum_field;
use std::f64::consts::PI;

proptest! {
    #[test]
    fn momentum_components_fit_energy_and_axis(
        t in 0.0..10.0f64, theta in 0.05..PI - 0.05, phi in -10.0..10.0f64,
        u in -3.0..3.0f64, v in -3.0..3.0f64, omega in -2.0..2.0f64,
    ) {
        let s = State::new(t, theta, phi, u, v);
        let set = full_integrals(&s, omega, 1.0, None).unwrap();
        let [l1, l2, l3, h] = ["L1", "L2", "L3", "H"].map(|n| set.get(n).unwrap());
        prop_assert!((l1 * l1 + l2 * l2 + l3 * l3 - 2.0 * h).abs() <= 1e-12 * (2.0 * h).max(1.0));
        let lon = phi + omega * t;
        let axis = lon.cos() * l1 + lon.sin() * l2 + theta.cos() / theta.sin() * l3;
        prop_assert!(axis.abs() <= 1e-12 * (l1.abs() + l2.abs() + l3.abs() / theta.tan().abs()).max(1.0));
    }

    #[test]
    fn physical_state_round_trip(theta in 0.05..PI - 0.05, u in -3.0..3.0f64, v in -3.0..3.0f64) {
        let s = State::new(0.5, theta, 1.0, u, v);
        let there = transforms::physical_state(&s, true).unwrap();
        let back = transforms::physical_state(&there, false).unwrap();
        prop_assert!((back.v - v).abs() <= 4.0 * f64::EPSILON * v.abs().max(1.0));
        prop_assert_eq!(back.u, u);
    }

    #[test]
    fn frame_maps_invert(t in 0.0..3.0f64, theta in 0.1..1.4f64, phi in 0.0..6.0f64) {
        let field = sinusoidal_momentum_field();
        let to_nr = FrameMap { direction: MapDirection::ToNonrotating, omega: 1.0 };
        let to_r = FrameMap { direction: MapDirection::ToRotating, omega: 1.0 };
        let back = transforms::map_field(to_r, &transforms::map_field(to_nr, &field).unwrap()).unwrap();
        let a = field.velocity(t, theta, phi).unwrap();
        let b = back.velocity(t, theta, phi).unwrap();
        prop_assert!((a.0 - b.0).abs() <= 1e-15 && (a.1 - b.1).abs() <= 1e-15 * a.1.abs().max(1.0));
    }

    #[test]
    fn constant_family_solves_its_hodograph(t in 0.3..3.0f64, theta in 0.2..PI - 0.2, sigma in prop::sample::select(vec![1.0, -1.0])) {
        let omega = 0.7;
        if let Ok((u, v)) = hodograph::family_const(0.2, 0.1, sigma, t, theta, omega) {
            let p = HodographProblem::TimeIntegral { phi1: Expr::c(0.2), phi2: Expr::c(0.1), omega, sigma };
            let r = hodograph::residual(&p, t, theta, 0.4, u, v).unwrap();
            prop_assert!(r[0].abs().max(r[1].abs()) < 1e-10, "residual {r:?}");
        }
    }
}

#[test]
fn sinusoidal_momentum_field_is_stationary_when_viewed_without_rotation() {
    let field = sinusoidal_momentum_field();
    let nr = transforms::map_field(FrameMap { direction: MapDirection::ToNonrotating, omega: 1.0 }, &field).unwrap();
    assert_eq!(nr.regime, Regime::Full);
    for t in [0.0, 0.7, 2.5] {
        let (u, v) = nr.velocity(t, 0.6, 1.1).unwrap();
        assert!((u - 1.1f64.sin()).abs() < 1e-15);
        assert!((v - 2.0 * 1.1f64.cos() / 1.2f64.sin()).abs() < 1e-14);
    }
}

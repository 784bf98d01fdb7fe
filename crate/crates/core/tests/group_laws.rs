use groupsample::experiment::{cell, ExperimentConfig};
use groupsample::{GroupModel, GroupPoint};
use proptest::prelude::*;

fn close(a: &GroupPoint, b: &GroupPoint, tol: f64) -> bool {
    a.coords.iter().zip(&b.coords).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn h1_point() -> impl Strategy<Value = GroupPoint> {
    prop::array::uniform3(-5.0f64..5.0).prop_map(|c| GroupPoint::new(&c))
}

fn affine_point() -> impl Strategy<Value = GroupPoint> {
    (-3.0f64..3.0, -5.0f64..5.0).prop_map(|(u, b)| GroupPoint::new(&[u.exp(), b]))
}

proptest! {
    #[test]
    fn heisenberg_is_a_group(g in h1_point(), h in h1_point(), k in h1_point()) {
        let m = GroupModel::heisenberg();
        prop_assert!(close(&m.mul(&m.mul(&g, &h), &k), &m.mul(&g, &m.mul(&h, &k)), 1e-12));
        prop_assert!(close(&m.mul(&g, &m.inv(&g)), &m.identity(), 1e-12));
        prop_assert!(close(&m.mul(&m.identity(), &g), &g, 0.0));
    }

    #[test]
    fn affine_is_a_group(g in affine_point(), h in affine_point(), k in affine_point()) {
        let m = GroupModel::affine();
        prop_assert!(close(&m.mul(&m.mul(&g, &h), &k), &m.mul(&g, &m.mul(&h, &k)), 1e-12));
        prop_assert!(close(&m.mul(&m.inv(&g), &g), &m.identity(), 1e-12));
    }

    #[test]
    fn dilations_are_automorphisms(g in h1_point(), h in h1_point(), t in 0.1f64..10.0) {
        let m = GroupModel::heisenberg();
        let lhs = m.dilate(t, &m.mul(&g, &h)).unwrap();
        let rhs = m.mul(&m.dilate(t, &g).unwrap(), &m.dilate(t, &h).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn homogeneous_norm_is_homogeneous_and_symmetric(g in h1_point(), t in 0.1f64..10.0) {
        let m = GroupModel::heisenberg();
        let n = m.homogeneous_norm(&g).unwrap();
        let nt = m.homogeneous_norm(&m.dilate(t, &g).unwrap()).unwrap();
        prop_assert!((nt - t * n).abs() <= 1e-12 * (1.0 + t * n));
        prop_assert!((m.homogeneous_norm(&m.inv(&g)).unwrap() - n).abs() <= 1e-15 * (1.0 + n));
    }

    #[test]
    fn cells_round_trip(x in prop::num::f64::NORMAL) {
        prop_assert_eq!(cell(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn nonpositive_radius_is_rejected(r in -10.0f64..=0.0) {
        let text = format!("experiment = shannon\nr = {r}\n");
        prop_assert!(ExperimentConfig::parse(&text, &[]).is_err());
    }
}

use omega_square::enumerate::PointEnumeration;
use omega_square::geometry::{euclidean_distance, PlanarPoint};
use omega_square::interval::{f01, f01_inv, orbit_coordinate, pl_iterate, PLHomeo1D};
use omega_square::steering::make_bump;
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = PlanarPoint> {
    (-0.999f64..0.999, -0.999f64..0.999).prop_map(|(r, s)| PlanarPoint::new(r, s))
}

proptest! {
    #[test]
    fn f01_round_trip(s in -1.0f64..=1.0) {
        prop_assert!((f01_inv(f01(s)) - s).abs() <= 4.0 * f64::EPSILON);
        prop_assert!(f01(s) >= s);
    }

    #[test]
    fn orbit_coordinate_shifts_by_one(s in -0.999f64..0.999) {
        let du = orbit_coordinate(f01(s)) - orbit_coordinate(s);
        prop_assert!((du - 1.0).abs() < 1e-9, "du = {du}");
    }

    #[test]
    fn pl_iterate_inverts(s in -1.0f64..=1.0, k in 0i64..30) {
        let h = PLHomeo1D::f01();
        let t = pl_iterate(&h, s, k).unwrap();
        let back = pl_iterate(&h, t, -k).unwrap();
        // expansion near -1 can amplify rounding by 2^k
        prop_assert!((back - s).abs() <= 1e-15 * 2f64.powi(k as i32 + 1));
    }

    #[test]
    fn bump_round_trip(z in interior(), dir in 0.0f64..std::f64::consts::TAU, frac in 0.0f64..0.9, x in interior()) {
        let tau = 0.2;
        let y = PlanarPoint::new(z.r + frac * tau * dir.cos(), z.s + frac * tau * dir.sin());
        let b = make_bump(z, y, tau).unwrap();
        prop_assert_eq!(b.forward(z), y);
        let w = b.forward(x);
        prop_assert!(euclidean_distance(w, x) <= b.displacement() + 1e-15);
        prop_assert!(euclidean_distance(b.inverse(w), x) < 1e-12);
        if euclidean_distance(x, z) >= tau {
            prop_assert_eq!(w, x);
        }
    }

    #[test]
    fn enumeration_labels_are_exclusive(seed in 0u64..1000, k in 0u64..100_000) {
        let e = PointEnumeration::new(seed, 3);
        let p = e.point(k);
        prop_assert!(p.in_open_square());
        let n = e.family_of(k);
        prop_assert!(e.contains(n, p));
        prop_assert!(!e.contains((n + 1) % 3, p));
    }

    #[test]
    fn enumeration_reaches_any_point(seed in 0u64..1000, z in interior(), n in 0usize..3) {
        let e = PointEnumeration::new(seed, 3);
        let hit = e.near(n, z).find(|p| euclidean_distance(*p, z) < 1e-5);
        prop_assert!(hit.is_some());
    }
}

//! Property-based checks of the algebraic layer and the pointwise
//! connection identities.

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;

use holonomy_core::connection::{connection_at, horizontal_projection};
use holonomy_core::lie::{exp_so3, log_so3, AlgebraVector, LieStructure};
use holonomy_core::systems::{self, DiscSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn so3_exp_log_roundtrip(
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        z in -1.0f64..1.0,
    ) {
        let w = Vector3::new(x, y, z);
        prop_assume!(w.norm() < std::f64::consts::PI - 0.1);
        let r = exp_so3(&w);
        let back = log_so3(&r).unwrap();
        prop_assert!((back - w).norm() < 1e-12 * (1.0 + w.norm()));
    }

    #[test]
    fn group_inverse_cancels(
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        z in -1.0f64..1.0,
    ) {
        let lie = LieStructure::so3();
        let g = lie.exp(&AlgebraVector(DVector::from_row_slice(&[x, y, z]))).unwrap();
        let product = g.compose(&g.inverse()).unwrap();
        prop_assert!(product.constraint_defect() < 1e-12);
        let a = lie.log(&product).unwrap();
        prop_assert!(a.norm() < 1e-12);
    }

    #[test]
    fn connection_reproduces_any_algebra_vector(
        inertia in 0.5f64..3.0,
        mass in 0.5f64..3.0,
        r in 0.5f64..2.0,
        a in -2.0f64..2.0,
    ) {
        let m = systems::build_disc(&DiscSpec::free(inertia, mass)).unwrap();
        let x = DVector::from_row_slice(&[r, 0.3, -0.2]);
        let conn = connection_at(&m, &x).unwrap();
        let vertical = m.generators_at(&x) * DVector::from_element(1, a);
        let paired = conn.pair(&vertical);
        prop_assert!((paired.0[0] - a).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn horizontal_projection_is_idempotent(
        r in 0.5f64..2.0,
        v0 in -2.0f64..2.0,
        v1 in -2.0f64..2.0,
        v2 in -2.0f64..2.0,
    ) {
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let x = DVector::from_row_slice(&[r, 0.0, 0.0]);
        let v = DVector::from_row_slice(&[v0, v1, v2]);
        let once = horizontal_projection(&m, &x, &v).unwrap();
        let twice = horizontal_projection(&m, &x, &once).unwrap();
        prop_assert!((twice - &once).norm() < 1e-10 * (1.0 + v.norm()));
    }
}

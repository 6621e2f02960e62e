//! Field-level invariants of the normal form and the body gradients.

use pebble_dynamics::body::{normalize, tangent_frame, BodySpec, Shape};
use pebble_dynamics::normal_form::{
    alpha_star, eval_field, relevant_fixed_points, saddle_node_curve, NormalFormParams,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// The field is a gradient: its Jacobian is symmetric, so the mixed
    /// partials agree everywhere (curl identity).
    #[test]
    fn curl_identity(
        mu1 in -0.3f64..0.3,
        mu2 in -0.3f64..0.3,
        da in 0.0f64..0.5,
        x in -1.2f64..1.2,
        y in -1.5f64..0.8,
    ) {
        let p = NormalFormParams::new(mu1, mu2, alpha_star() + da);
        let h = 1e-6;
        let dfx_dy = (eval_field(&p, x, y + h).0 - eval_field(&p, x, y - h).0) / (2.0 * h);
        let dfy_dx = (eval_field(&p, x + h, y).1 - eval_field(&p, x - h, y).1) / (2.0 * h);
        prop_assert!((dfx_dy - dfy_dx).abs() < 1e-8);
        // exact polynomial identity as well
        let a = p.alpha;
        prop_assert!(((2.0 * a * x + mu2) - (2.0 * a * x + mu2)).abs() < 1e-14);
    }

    /// Support-point distance of an interior reference stays positive and
    /// bounded for ellipsoids, with the analytic gradient matching finite
    /// differences at random directions.
    #[test]
    fn ellipsoid_gradient_spot_checks(
        ux in -1.0f64..1.0,
        uy in -1.0f64..1.0,
        uz in -1.0f64..1.0,
        rx in -0.2f64..0.2,
    ) {
        prop_assume!(ux * ux + uy * uy + uz * uz > 1e-2);
        let u = normalize([ux, uy, uz]);
        let reference = [rx, 0.05, -0.03];
        let spec = BodySpec::fixed(
            Shape::Ellipsoid { semi_axes: [1.0, 0.8, 0.6] },
            reference,
        );
        let r = spec.radius_from(reference, u);
        prop_assert!(r > 0.3 && r < 2.0);
        let g = spec.grad_r(reference, u);
        let (e1, e2) = tangent_frame(u);
        let h = 1e-6;
        for e in [e1, e2] {
            let rp = spec.radius_from(reference, normalize([u[0] + h * e[0], u[1] + h * e[1], u[2] + h * e[2]]));
            let rm = spec.radius_from(reference, normalize([u[0] - h * e[0], u[1] - h * e[1], u[2] - h * e[2]]));
            let fd = (rp - rm) / (2.0 * h);
            let an = g[0] * e[0] + g[1] * e[1] + g[2] * e[2];
            prop_assert!((fd - an).abs() / (1.0 + an.abs()) < 1e-6);
        }
    }
}

#[test]
fn bifurcation_curves_meet_tangentially_at_the_origin() {
    // both curves have vanishing slope in mu2 at the codimension-2 point
    let a = alpha_star();
    let h = 1e-3;
    let f1_slope = (saddle_node_curve(h, a).unwrap() - saddle_node_curve(-h, a).unwrap()) / (2.0 * h);
    assert!(f1_slope.abs() < 1e-6, "saddle-node slope {f1_slope:e}");
    let f2 = |m: f64| m * m / (4.0 * a * a);
    let f2_slope = (f2(h) - f2(0.0)) / h;
    assert!(f2_slope.abs() < 1e-3, "heteroclinic slope {f2_slope:e}");
}

#[test]
fn far_saddle_leaves_compact_sets_toward_alpha_star() {
    // the irrelevant saddle's distance from the origin grows without bound
    let mut last = 0.0;
    for da in [0.3, 0.1, 0.03, 0.01] {
        let a = alpha_star() + da;
        let far_x = 2.0 * a / (4.0 * a * a * a - 1.0);
        let far_y = 1.0 / (4.0 * a * a * a - 1.0);
        let r = far_x.hypot(far_y);
        assert!(r > last);
        last = r;
        // and the relevant inventory never contains it
        let p = NormalFormParams::new(0.05, 0.1, a);
        for f in relevant_fixed_points(&p) {
            assert!((f.x - far_x).hypot(f.y - far_y) > 0.5);
        }
    }
    assert!(last > 20.0);
}

use std::f64::consts::TAU;

use proptest::prelude::*;

use curved_nbody::dynamics::{angular_momentum, force_function, grad_force_function, total_energy};
use curved_nbody::geometry::{
    constraint_residual, renormalize, sdot, tangency_residual, CurvatureSpace, EmbeddedVector,
    Rotation,
};
use curved_nbody::integrator::{step, IntegratorConfig, IntegratorError};
use curved_nbody::projection::{lagrange_gap, lift, orth_project, projected_gradient, ProjectedState};
use curved_nbody::singularity::min_pair_metric;
use curved_nbody::SystemState;

fn space(kappa: f64) -> CurvatureSpace {
    CurvatureSpace::new(kappa, 3).unwrap()
}

/// Point of S² (κ > 0) or the upper sheet of H² (κ < 0) from two parameters.
fn point(kappa: f64, a: f64, b: f64) -> EmbeddedVector {
    if kappa > 0.0 {
        EmbeddedVector::new3(a.sin() * b.cos(), a.sin() * b.sin(), a.cos())
    } else {
        EmbeddedVector::new3(a.sinh() * b.cos(), a.sinh() * b.sin(), a.cosh())
    }
}

fn tangent(sp: &CurvatureSpace, q: &EmbeddedVector, v: [f64; 3]) -> EmbeddedVector {
    let v = EmbeddedVector::new3(v[0], v[1], v[2]);
    v.sub(&q.scale(sp.kappa() * sdot(q, &v, sp.signature())))
}

prop_compose! {
    fn body(kappa: f64)(a in 0.1..1.4f64, b in 0.0..TAU, v in prop::array::uniform3(-1.0..1.0f64))
        -> (EmbeddedVector, [f64; 3]) {
        (point(kappa, a, b), v)
    }
}

prop_compose! {
    fn state(kappa: f64)(bodies in prop::collection::vec(body(kappa), 2..5),
                         masses in prop::collection::vec(0.2..3.0f64, 4))
        -> SystemState {
        let sp = space(kappa);
        let n = bodies.len();
        let qs: Vec<_> = bodies.iter().map(|b| b.0).collect();
        let ps = bodies.iter().map(|(q, v)| tangent(&sp, q, *v)).collect();
        SystemState::new(0.0, sp, masses[..n].to_vec(), qs, ps).unwrap()
    }
}

fn curvature() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(-1.0), Just(4.0), Just(-0.25)]
}

fn rescaled(st: &SystemState, kappa: f64) -> SystemState {
    // Points built on the unit surfaces; scale onto radius 1/√|κ|.
    let r = 1.0 / kappa.abs().sqrt();
    let qs = st.positions().iter().map(|q| q.scale(r)).collect();
    SystemState::new(0.0, space(kappa), st.masses().to_vec(), qs, st.momenta().to_vec()).unwrap()
}

fn well_separated(st: &SystemState) -> bool {
    min_pair_metric(st).is_some_and(|d| d > 1e-3)
}

/// Σ_j |∇_i U_ij| from two-body projected states: the magnitude before the
/// pair contributions cancel.
fn pair_force_sum(ps: &ProjectedState, i: usize) -> f64 {
    let d = ps.dim();
    (0..ps.n())
        .filter(|&j| j != i)
        .map(|j| {
            let pair = ProjectedState::new(
                0.0,
                ps.kappa(),
                vec![ps.masses()[i], ps.masses()[j]],
                &[ps.position(i).to_vec(), ps.position(j).to_vec()],
                &[vec![0.0; d], vec![0.0; d]],
            )
            .unwrap();
            let g = projected_gradient(&pair).unwrap();
            g[..d].iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn renormalize_lands_on_manifold(kappa in curvature(), a in 0.0..1.4f64, b in 0.0..TAU,
                                     scale in 0.5..2.0f64, v in prop::array::uniform3(-2.0..2.0f64)) {
        let sp = space(kappa);
        let q = point(kappa.signum(), a, b).scale(scale);
        let p = EmbeddedVector::new3(v[0], v[1], v[2]);
        let (q2, p2) = renormalize(&q, &p, &sp).unwrap();
        prop_assert!(constraint_residual(&q2, &sp) < 1e-14);
        prop_assert!(tangency_residual(&q2, &p2, &sp) < 1e-13 * (1.0 + p.euclidean_norm()));
        let (q3, p3) = renormalize(&q2, &p2, &sp).unwrap();
        for k in 0..3 {
            prop_assert!((q3.as_slice()[k] - q2.as_slice()[k]).abs() < 1e-15 * (1.0 + q2.euclidean_norm()));
            prop_assert!((p3.as_slice()[k] - p2.as_slice()[k]).abs() < 1e-14 * (1.0 + p2.euclidean_norm()));
        }
    }

    #[test]
    fn sdot_is_symmetric(kappa in curvature(), a in prop::array::uniform3(-3.0..3.0f64), b in prop::array::uniform3(-3.0..3.0f64)) {
        let s = space(kappa).signature();
        let (u, v) = (EmbeddedVector::new3(a[0], a[1], a[2]), EmbeddedVector::new3(b[0], b[1], b[2]));
        prop_assert_eq!(sdot(&u, &v, s), sdot(&v, &u, s));
    }

    #[test]
    fn gradient_is_tangent(st in curvature().prop_flat_map(|k| state(k.signum()).prop_map(move |s| rescaled(&s, k)))) {
        prop_assume!(well_separated(&st));
        let sp = *st.space();
        let g = grad_force_function(&st).unwrap();
        for (q, gi) in st.positions().iter().zip(&g) {
            let r = sdot(q, gi, sp.signature()).abs();
            prop_assert!(r <= 1e-10 * gi.euclidean_norm() * q.euclidean_norm() + 1e-300, "q⊙∇U = {r:e}");
        }
    }

    #[test]
    fn potential_is_rotation_invariant(st in state(1.0), angle in 0.0..TAU, tilt in prop::array::uniform3(-1.0..1.0f64)) {
        prop_assume!(well_separated(&st));
        let axis = EmbeddedVector::new3(tilt[0], tilt[1], tilt[2] + 2.0);
        let r = Rotation::to_pole(&axis);
        let rotate_z = |v: &EmbeddedVector| {
            let s = v.as_slice();
            EmbeddedVector::new3(angle.cos() * s[0] - angle.sin() * s[1], angle.sin() * s[0] + angle.cos() * s[1], s[2])
        };
        let qs = st.positions().iter().map(|q| rotate_z(&r.apply(q))).collect();
        let ps = st.momenta().iter().map(|p| rotate_z(&r.apply(p))).collect();
        let moved = SystemState::new(0.0, *st.space(), st.masses().to_vec(), qs, ps).unwrap();
        let (u0, u1) = (force_function(&st).unwrap(), force_function(&moved).unwrap());
        prop_assert!((u0 - u1).abs() <= 1e-10 * (1.0 + u0.abs()));
        let (h0, h1) = (total_energy(&st).unwrap(), total_energy(&moved).unwrap());
        prop_assert!((h0 - h1).abs() <= 1e-10 * (1.0 + h0.abs()));
    }

    #[test]
    fn hyperbolic_potential_is_invariant_under_pole_rotation(st in state(-1.0), angle in 0.0..TAU) {
        prop_assume!(well_separated(&st));
        let rotate_z = |v: &EmbeddedVector| {
            let s = v.as_slice();
            EmbeddedVector::new3(angle.cos() * s[0] - angle.sin() * s[1], angle.sin() * s[0] + angle.cos() * s[1], s[2])
        };
        let qs = st.positions().iter().map(rotate_z).collect();
        let ps = st.momenta().iter().map(rotate_z).collect();
        let moved = SystemState::new(0.0, *st.space(), st.masses().to_vec(), qs, ps).unwrap();
        let (u0, u1) = (force_function(&st).unwrap(), force_function(&moved).unwrap());
        prop_assert!((u0 - u1).abs() <= 1e-10 * (1.0 + u0.abs()));
        let (c0, c1) = (angular_momentum(&st).unwrap(), angular_momentum(&moved).unwrap());
        prop_assert!((c0[2] - c1[2]).abs() <= 1e-12 * (1.0 + c0[2].abs()));
    }

    #[test]
    fn step_preserves_feasibility(st in curvature().prop_flat_map(|k| state(k.signum()).prop_map(move |s| rescaled(&s, k))),
                                  dt in 1e-4..1e-2f64) {
        prop_assume!(well_separated(&st));
        // Large steps through a close encounter may leave the manifold; the
        // driver retries those with a smaller step.
        let (next, err) = match step(&st, dt, &IntegratorConfig::default()) {
            Ok(r) => r,
            Err(IntegratorError::StepFailed { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("unexpected {e}"))),
        };
        prop_assert!(err.is_finite());
        let (c, t) = next.max_residuals();
        let p_max = next.momenta().iter().map(|p| p.euclidean_norm()).fold(0.0, f64::max);
        prop_assert!(c < 1e-13, "constraint residual {c:e}");
        // Rejected steps can carry enormous momenta; tangency then holds to round-off of |p|.
        prop_assert!(t < 1e-12 * (1.0 + p_max), "tangency residual {t:e} with |p| {p_max:e}");
        if err <= 1.0 {
            prop_assert!(t < 1e-12, "accepted step with tangency residual {t:e}");
        }
    }

    #[test]
    fn projection_round_trips_on_upper_hemisphere(st in state(1.0)) {
        let ps = orth_project(&st).unwrap();
        let back = lift(&ps).unwrap();
        for (a, b) in st.positions().iter().chain(st.momenta()).zip(back.positions().iter().chain(back.momenta())) {
            for k in 0..3 {
                prop_assert!((a.as_slice()[k] - b.as_slice()[k]).abs() < 1e-12 * (1.0 + a.euclidean_norm()));
            }
        }
    }

    #[test]
    fn projected_gradient_satisfies_euler(st in state(1.0)) {
        let ps = orth_project(&st).unwrap();
        let Ok(g) = projected_gradient(&ps) else { return Ok(()); };
        for i in 0..ps.n() {
            let q = ps.position(i);
            let gi = &g[i * 2..i * 2 + 2];
            let dot = q[0] * gi[0] + q[1] * gi[1];
            let scale = q[0].hypot(q[1]) * pair_force_sum(&ps, i);
            prop_assert!(dot.abs() <= 1e-10 * scale + 1e-300, "ratio {:e}", dot.abs() / scale);
        }
    }

    #[test]
    fn lagrange_chain_holds(dim in 2usize..=3, n in 1usize..6,
                            raw in prop::collection::vec(-0.55..0.55f64, 36),
                            masses in prop::collection::vec(0.1..5.0f64, 6)) {
        let qs: Vec<Vec<f64>> = (0..n).map(|i| raw[i * dim..(i + 1) * dim].to_vec()).collect();
        let ps: Vec<Vec<f64>> = (0..n).map(|i| raw[18 + i * dim..18 + (i + 1) * dim].to_vec()).collect();
        let st = ProjectedState::new(0.0, 1.0, masses[..n].to_vec(), &qs, &ps).unwrap();
        let g = lagrange_gap(&st);
        prop_assert!(g.lhs + 1e-12 * g.lhs.abs() >= g.rhs, "{g:?}");
        prop_assert!(g.rhs + 1e-12 * g.rhs.abs() >= g.bound, "{g:?}");
    }
}

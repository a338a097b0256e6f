//! Built-in experiment library.

use std::f64::consts::PI;

use super::{Analysis, Body, Scenario};
use crate::integrator::{EventConfig, IntegratorConfig};

fn body(mass: f64, position: Vec<f64>, momentum: Vec<f64>) -> Body {
    Body {
        mass,
        position,
        momentum: Some(momentum),
    }
}

fn at_rest(mass: f64, position: Vec<f64>) -> Body {
    let d = position.len();
    body(mass, position, vec![0.0; d])
}

fn scenario(name: &str, description: &str, kappa: f64, dim: usize, t_end: f64, bodies: Vec<Body>) -> Scenario {
    Scenario {
        name: name.into(),
        kappa,
        dim,
        description: description.into(),
        auto_renormalize: false,
        rotate_to_pole: None,
        analyses: Vec::new(),
        output_dir: None,
        integrator: IntegratorConfig {
            t_end,
            ..Default::default()
        },
        events: EventConfig::default(),
        bodies,
    }
}

/// Equal-mass pair at polar angle ±a rotating rigidly about the pole axis.
fn bound_pair(name: &str, kappa: f64, a: f64, m: f64) -> Scenario {
    let (s, c, s2) = if kappa > 0.0 {
        (a.sin(), a.cos(), (2.0 * a).sin())
    } else {
        (a.sinh(), a.cosh(), (2.0 * a).sinh())
    };
    let omega = (m / (s2 * s2 * s * c)).sqrt();
    let p = m * omega * s;
    let desc = if kappa > 0.0 {
        "two equal masses on a circular relative equilibrium of the unit sphere"
    } else {
        "two equal masses on a circular relative equilibrium of the unit hyperbolic plane"
    };
    scenario(
        name,
        desc,
        kappa,
        2,
        100.0,
        vec![
            body(m, vec![s, 0.0, c], vec![0.0, p, 0.0]),
            body(m, vec![-s, 0.0, c], vec![0.0, -p, 0.0]),
        ],
    )
}

/// Equilateral triangle of unit masses at polar angle `phi` about the north
/// pole of S², spinning at `omega` and falling toward the pole at speed `v_in`.
fn triangle(name: &str, desc: &str, phi: f64, omega: f64, v_in: f64, t_end: f64) -> Scenario {
    let bodies = (0..3)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 3.0;
            let (x, y, z) = (phi.sin() * th.cos(), phi.sin() * th.sin(), phi.cos());
            let inward = [-phi.cos() * th.cos(), -phi.cos() * th.sin(), phi.sin()];
            let p = vec![
                -omega * y + v_in * inward[0],
                omega * x + v_in * inward[1],
                v_in * inward[2],
            ];
            body(1.0, vec![x, y, z], p)
        })
        .collect();
    let mut s = scenario(name, desc, 1.0, 2, t_end, bodies);
    s.analyses = vec![Analysis::Painleve, Analysis::CollisionDiagnostics];
    s
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    let a30 = PI / 6.0;
    let mut out = Vec::new();

    out.push(scenario(
        "s2_geodesic",
        "one body on a great circle of the unit sphere",
        1.0,
        2,
        100.0,
        vec![body(1.0, vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0])],
    ));

    let mut s = scenario(
        "s2_two_body_collapse",
        "equal masses released from rest at ±30° from the north pole",
        1.0,
        2,
        10.0,
        vec![
            at_rest(1.0, vec![a30.sin(), 0.0, a30.cos()]),
            at_rest(1.0, vec![-a30.sin(), 0.0, a30.cos()]),
        ],
    );
    s.analyses = vec![Analysis::Painleve];
    out.push(s);

    let mut s = scenario(
        "s2_remark1_isosceles",
        "masses 4:4:1 on one great circle; the heavy pair collides at the north pole \
         while the light body rests at the south pole",
        1.0,
        2,
        10.0,
        vec![
            at_rest(4.0, vec![a30.sin(), 0.0, a30.cos()]),
            at_rest(4.0, vec![-a30.sin(), 0.0, a30.cos()]),
            at_rest(1.0, vec![0.0, 0.0, -1.0]),
        ],
    );
    s.analyses = vec![Analysis::Painleve];
    out.push(s);

    // Equilateral triangle of projected radius r in the plane spanned by
    // (1,1,1)/√3 and (1,−1,0)/√2 of the uxy hyperplane, centred at the pole.
    let r: f64 = 0.5;
    let a = [1.0 / 3f64.sqrt(); 3];
    let b = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let z = (1.0 - r * r).sqrt();
    let bodies = (0..3)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 3.0;
            let mut q: Vec<f64> = (0..3).map(|i| r * (th.cos() * a[i] + th.sin() * b[i])).collect();
            q.push(z);
            at_rest(1.0, q)
        })
        .collect();
    let mut s = scenario(
        "s3_symmetric_triple_collapse",
        "three equal masses at rest on a tilted equilateral triangle about the pole of S³",
        1.0,
        3,
        10.0,
        bodies,
    );
    s.analyses = vec![
        Analysis::Painleve,
        Analysis::CollisionDiagnostics,
        Analysis::Planarity,
    ];
    out.push(s);

    out.push(bound_pair("h2_bound_pair", -1.0, 0.5, 1.0));
    out.push(bound_pair("s2_bound_pair", 1.0, 0.5, 1.0));

    out.push(triangle(
        "s2_rotating_triangle",
        "equilateral triangle at 0.3 rad from the pole, spinning below the equilibrium rate and falling inward",
        0.3,
        4.0,
        1.0,
        2.0,
    ));

    let mut s = triangle(
        "s2_symmetric_triple_collapse",
        "equilateral triangle at 0.3 rad from the pole, released from rest",
        0.3,
        0.0,
        0.0,
        10.0,
    );
    s.events.singularity_tol = 1e-10;
    s.events.companion_tol = 1e-8;
    out.push(s);

    out.push(scenario(
        "h2_geodesic",
        "one slow body on a geodesic of the unit hyperbolic plane",
        -1.0,
        2,
        100.0,
        vec![body(1.0, vec![0.0, 0.0, 1.0], vec![0.04, 0.0, 0.0])],
    ));

    let mut s = scenario(
        "s2_pole_geodesic",
        "two bodies on one great circle through the pole (excluded by the chart comparison)",
        1.0,
        2,
        1.0,
        vec![
            at_rest(1.0, vec![0.3f64.sin(), 0.0, 0.3f64.cos()]),
            at_rest(1.0, vec![-(0.5f64.sin()), 0.0, 0.5f64.cos()]),
        ],
    );
    s.analyses = vec![Analysis::Equivalence];
    out.push(s);

    out
}

pub fn builtin_names() -> Vec<String> {
    builtin_scenarios().into_iter().map(|s| s.name).collect()
}

pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

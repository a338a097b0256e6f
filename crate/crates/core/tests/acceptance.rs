//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curved_nbody::dynamics::{angular_momentum, force_function, grad_force_function};
use curved_nbody::geometry::{sdot, CurvatureSpace, EmbeddedVector};
use curved_nbody::harness::{builtin, run, timeseries_csv};
use curved_nbody::integrator::{drift_report, integrate, IntegratorConfig, TerminationReason, Trajectory};
use curved_nbody::projection::{
    equivalence_check, inertia_accel, integrate_projected, lagrange_gap, moment_of_inertia,
    orth_project, planarity_diagnose, projected_angular_momentum, projected_gradient,
    sundman_scan, total_collision_diagnose, CollisionDiagnostics, EquivalenceOptions,
    EquivalenceStatus, PlanarityOptions, ProjectedField, ProjectedState, TotalCollisionOptions,
    TotalCollisionVerdict,
};
use curved_nbody::singularity::{pair_metrics, painleve_monitor, PainleveOptions, PainleveVerdict};
use curved_nbody::SystemState;

// Pinned tolerances.
const GRADIENT_REL: f64 = 1e-6;
const GRADIENT_SECONDS: f64 = 1.0;
const DRIFT_TOL: f64 = 1e-8;
const DRIFT_SECONDS: f64 = 5.0;
const RESIDUAL_TOL: f64 = 1e-12;
const PAINLEVE_METRIC: f64 = 1e-6;
const EULER_REL: f64 = 1e-10;
const INERTIA_ACCEL_REL: f64 = 1e-5;
const LAGRANGE_SLACK: f64 = 1e-12;
const COLLAPSE_INERTIA: f64 = 1e-8;
const S3_MOMENTUM_TOL: f64 = 1e-10;
const YDOT_TOL: f64 = 1e-8;
const MASS_MOMENT_TOL: f64 = 1e-10;
const EQUIVALENCE_TOL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_builtin(name: &str) -> Trajectory {
    let s = builtin(name).unwrap_or_else(|| panic!("no builtin {name}"));
    let (_, state) = s.resolve().expect("builtin resolves");
    integrate(&state, &s.integrator, &s.events).expect("integration starts")
}

fn random_point(rng: &mut ChaCha8Rng, space: &CurvatureSpace) -> EmbeddedVector {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    if space.kappa() > 0.0 {
        let phi = rng.gen_range(0.05..3.09f64);
        EmbeddedVector::new3(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
    } else {
        let r = rng.gen_range(0.0..1.5f64);
        EmbeddedVector::new3(r.sinh() * theta.cos(), r.sinh() * theta.sin(), r.cosh())
    }
}

fn random_tangent(rng: &mut ChaCha8Rng, space: &CurvatureSpace, q: &EmbeddedVector) -> EmbeddedVector {
    let v = EmbeddedVector::new3(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let k = space.kappa() * sdot(q, &v, space.signature());
    v.sub(&q.scale(k))
}

fn random_state(rng: &mut ChaCha8Rng, kappa: f64, n: usize) -> SystemState {
    let space = CurvatureSpace::new(kappa, 3).unwrap();
    loop {
        let qs: Vec<_> = (0..n).map(|_| random_point(rng, &space)).collect();
        let ps: Vec<_> = qs.iter().map(|q| random_tangent(rng, &space, q)).collect();
        let masses = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let st = SystemState::new(0.0, space, masses, qs, ps).unwrap();
        if pair_metrics(&st).min_d().map_or(true, |d| d > 0.05) {
            return st;
        }
    }
}

/// 1. Gradient against central differences along tangent directions.
fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let kappa = if k % 2 == 0 { 1.0 } else { -1.0 };
        let n = 2 + k % 3 / 2;
        let st = random_state(&mut rng, kappa, n);
        let space = *st.space();
        let grad = grad_force_function(&st).unwrap();
        for i in 0..n {
            let e = random_tangent(&mut rng, &space, &st.positions()[i]);
            let analytic = sdot(&grad[i], &e, space.signature());
            let eps = 1e-5;
            let shifted = |s: f64| {
                let mut qs = st.positions().to_vec();
                qs[i] = qs[i].add(&e.scale(s));
                let moved =
                    SystemState::new(0.0, space, st.masses().to_vec(), qs, st.momenta().to_vec())
                        .unwrap();
                force_function(&moved).unwrap()
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            let scale = grad[i].euclidean_norm() * e.euclidean_norm();
            worst = worst.max((fd - analytic).abs() / scale.max(1e-300));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= GRADIENT_REL && secs < GRADIENT_SECONDS,
        format!("max rel err {worst:.2e} (tol {GRADIENT_REL:e}), {secs:.3}s (limit {GRADIENT_SECONDS}s)"),
    )
}

const DRIFT_RUNS: [&str; 4] = ["s2_geodesic", "s2_bound_pair", "h2_geodesic", "h2_bound_pair"];

/// 2. and 3. share the same runs.
fn drift_runs() -> (Vec<(String, Trajectory)>, f64) {
    let start = Instant::now();
    let runs = DRIFT_RUNS
        .iter()
        .map(|n| (n.to_string(), run_builtin(n)))
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn first_integral_drift(runs: &[(String, Trajectory)], secs: f64) -> Outcome {
    let mut ok = secs < DRIFT_SECONDS;
    let mut parts = Vec::new();
    for (name, traj) in runs {
        let rep = drift_report(traj);
        let dh = rep.energy.relative();
        let dc = rep.max_angular_drift();
        let reached = traj.termination().reason == TerminationReason::TimeLimit
            && traj.termination().final_time == 100.0;
        ok &= reached && dh < DRIFT_TOL && dc < DRIFT_TOL;
        parts.push(format!("{name}: dh {dh:.1e} dc {dc:.1e}"));
    }
    check(
        ok,
        format!("{}; tol {DRIFT_TOL:e}; {secs:.2}s (limit {DRIFT_SECONDS}s)", parts.join(", ")),
    )
}

fn constraint_preservation(runs: &[(String, Trajectory)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, traj) in runs {
        let rep = drift_report(traj);
        worst = worst.max(rep.max_constraint_residual).max(rep.max_tangency_residual);
    }
    check(
        worst <= RESIDUAL_TOL,
        format!("max residual {worst:.2e} over every accepted step (tol {RESIDUAL_TOL:e})"),
    )
}

/// 4. Symmetric two-body collapse.
fn painleve_signature() -> Outcome {
    let traj = run_builtin("s2_two_body_collapse");
    let rep = painleve_monitor(&traj, &PainleveOptions::default());
    let term = traj.termination();
    let d = term.final_min_pair_metric.unwrap_or(f64::NAN);
    check(
        term.reason == TerminationReason::Collision
            && d <= PAINLEVE_METRIC
            && rep.metric_monotone_in_window
            && rep.verdict == PainleveVerdict::SignatureConfirmed,
        format!(
            "reason {:?}, min pair metric {d:.2e} (tol {PAINLEVE_METRIC:e}), monotone {}, verdict {:?}",
            term.reason, rep.metric_monotone_in_window, rep.verdict
        ),
    )
}

/// 5. 4:4:1 great-circle configuration.
fn collision_antipodal() -> Outcome {
    let traj = run_builtin("s2_remark1_isosceles");
    let rep = painleve_monitor(&traj, &PainleveOptions::default());
    let last = traj.last_state();
    let pm = pair_metrics(&last);
    let s = |i, j| pm.get(i, j).unwrap().s;
    let (s01, s02, s12) = (s(0, 1), s(0, 2), s(1, 2));
    let shaped = (s01 - 1.0).abs() < 1e-4 && (s02 + 1.0).abs() < 1e-4 && (s12 + 1.0).abs() < 1e-4;
    check(
        shaped
            && rep.verdict == PainleveVerdict::CollisionAntipodalException
            && traj.termination().reason == TerminationReason::CollisionAntipodal,
        format!(
            "s01 {s01:.8} s02 {s02:.8} s12 {s12:.8}, reason {:?}, verdict {:?}",
            traj.termination().reason,
            rep.verdict
        ),
    )
}

fn random_projected(rng: &mut ChaCha8Rng, dim: usize, n: usize, radius: f64) -> ProjectedState {
    random_projected_with(rng, dim, n, radius, 0.1, 2.0)
}

fn random_projected_with(
    rng: &mut ChaCha8Rng,
    dim: usize,
    n: usize,
    radius: f64,
    min_mass: f64,
    max_momentum: f64,
) -> ProjectedState {
    let mut qs = Vec::new();
    let mut ps = Vec::new();
    let masses = (0..n).map(|_| rng.gen_range(min_mass..3.0)).collect();
    for _ in 0..n {
        loop {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..radius)).collect();
            if q.iter().map(|x| x * x).sum::<f64>() < radius * radius {
                qs.push(q);
                break;
            }
        }
        ps.push((0..dim).map(|_| rng.gen_range(-max_momentum..max_momentum)).collect());
    }
    ProjectedState::new(0.0, 1.0, masses, &qs, &ps).unwrap()
}

/// Σ_j |∇_i U_ij| from two-body states, the scale of the force before the
/// pair contributions cancel.
fn pair_force_sum(ps: &ProjectedState, i: usize) -> f64 {
    let d = ps.dim();
    (0..ps.n())
        .filter(|&j| j != i)
        .filter_map(|j| {
            let pair = ProjectedState::new(
                0.0,
                ps.kappa(),
                vec![ps.masses()[i], ps.masses()[j]],
                &[ps.position(i).to_vec(), ps.position(j).to_vec()],
                &[vec![0.0; d], vec![0.0; d]],
            )
            .ok()?;
            let g = projected_gradient(&pair).ok()?;
            Some(g[..d].iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .sum()
}

/// 6. Euler identity on the literal force function, relative to the
/// magnitude of the individual pair forces.
fn euler_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut evaluated = 0;
    for k in 0..10_000 {
        let dim = 2 + k % 2;
        let n = rng.gen_range(2..=5);
        let ps = random_projected(&mut rng, dim, n, 0.99);
        let Ok(g) = projected_gradient(&ps) else {
            continue;
        };
        evaluated += 1;
        for i in 0..n {
            let q = ps.position(i);
            let gi = &g[i * dim..(i + 1) * dim];
            let dot: f64 = q.iter().zip(gi).map(|(a, b)| a * b).sum();
            let scale = q.iter().map(|x| x * x).sum::<f64>().sqrt() * pair_force_sum(&ps, i);
            if scale > 0.0 {
                worst = worst.max(dot.abs() / scale);
            }
        }
    }
    check(
        worst <= EULER_REL && evaluated >= 9_900,
        format!("{evaluated} configurations, max rel |q̄·∇U| {worst:.2e} (tol {EULER_REL:e})"),
    )
}

/// Smallest sine of the angle between two projected position vectors. The
/// literal force function is singular when two bodies align with the origin.
fn min_alignment_sine(ps: &ProjectedState) -> f64 {
    let mut out = f64::INFINITY;
    for i in 0..ps.n() {
        for j in i + 1..ps.n() {
            let (a, b) = (ps.position(i), ps.position(j));
            let aa: f64 = a.iter().map(|x| x * x).sum();
            let bb: f64 = b.iter().map(|x| x * x).sum();
            let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            out = out.min(((aa * bb - ab * ab).max(0.0) / (aa * bb)).sqrt());
        }
    }
    out
}

/// 7. Second difference of I along a literal trajectory, Richardson
/// extrapolated once. States are kept moderate and away from alignment so
/// the remaining truncation stays below tolerance.
fn inertia_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = |t_end| IntegratorConfig {
        t_end,
        rtol: 1e-13,
        atol: 1e-14,
        ..Default::default()
    };
    let second_difference = |st: &ProjectedState, h: f64| -> Option<f64> {
        let a = integrate_projected(st, ProjectedField::Literal, &cfg(-h));
        let c = integrate_projected(st, ProjectedField::Literal, &cfg(h));
        if a.failure.is_some() || c.failure.is_some() {
            return None;
        }
        let (ia, ic) = (
            moment_of_inertia(a.states.last().unwrap()),
            moment_of_inertia(c.states.last().unwrap()),
        );
        Some((ia - 2.0 * moment_of_inertia(st) + ic) / (h * h))
    };
    let h = 4e-3;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut trials = 0;
    while points < 20 && trials < 2000 {
        trials += 1;
        let st = random_projected_with(&mut rng, 2 + trials % 2, 3, 0.6, 0.5, 0.3);
        let near_origin =
            (0..st.n()).any(|i| st.position(i).iter().map(|x| x * x).sum::<f64>() < 0.0625);
        if near_origin || min_alignment_sine(&st) < 0.5 {
            continue;
        }
        let (Some(coarse), Some(fine)) = (second_difference(&st, h), second_difference(&st, h / 2.0))
        else {
            continue;
        };
        let fd = (4.0 * fine - coarse) / 3.0;
        let exact = inertia_accel(&st);
        worst = worst.max((fd - exact).abs() / exact.abs());
        points += 1;
    }
    check(
        worst <= INERTIA_ACCEL_REL && points == 20,
        format!("{points} points, max rel err {worst:.2e} (tol {INERTIA_ACCEL_REL:e})"),
    )
}

/// 8. Third component of c against the projected angular momentum.
fn planar_momentum(runs: &[(String, Trajectory)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (_, traj) in runs.iter().filter(|(_, t)| t.space().kappa() > 0.0) {
        for (k, s) in traj.samples().iter().enumerate() {
            let c = s.readings.c.unwrap();
            let pc = s.readings.projected_c.unwrap();
            let scale = c[2].abs().max(1.0);
            worst = worst.max((c[2] - pc[2]).abs() / scale);
            let st = traj.state(k);
            if let Ok(ps) = orth_project(&st) {
                let full = angular_momentum(&st).unwrap();
                let proj = projected_angular_momentum(&ps);
                worst = worst.max((full[2] - proj[2]).abs() / scale);
                worst = worst.max(proj[0].abs().max(proj[1].abs()));
            }
            count += 1;
        }
    }
    check(
        worst <= 4.0 * f64::EPSILON,
        format!("{count} samples, max |γ − γ̄| {worst:.2e} (round-off, tol {:.1e})", 4.0 * f64::EPSILON),
    )
}

/// 9. lhs ≥ rhs ≥ bound.
fn lagrange_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let n = rng.gen_range(1..=5);
        let ps = random_projected(&mut rng, 2 + k % 2, n, 1.0);
        let g = lagrange_gap(&ps);
        let v = g.violation() / g.lhs.max(f64::MIN_POSITIVE);
        worst = worst.max(v);
        if v > LAGRANGE_SLACK {
            violations += 1;
        }
    }
    check(
        violations == 0,
        format!("10000 states, {violations} violations, worst relative {worst:.2e} (slack {LAGRANGE_SLACK:e})"),
    )
}

/// 10. Lower bound with γ ≠ 0, and a γ = 0 collapse.
fn sundman_bound() -> Outcome {
    let spin = run_builtin("s2_rotating_triangle");
    let init = orth_project(&spin.state(0)).unwrap();
    let cfg = IntegratorConfig {
        t_end: spin.termination().final_time,
        ..builtin("s2_rotating_triangle").unwrap().integrator
    };
    let literal = integrate_projected(&init, ProjectedField::Literal, &cfg);
    let diag = CollisionDiagnostics::from_states(&literal.states, ProjectedField::Literal).unwrap();
    let scan = sundman_scan(&diag);
    let i0 = diag.inertia[0];
    let i_min = diag.inertia.iter().copied().fold(f64::INFINITY, f64::min);
    let spin_rep = total_collision_diagnose(&spin, &TotalCollisionOptions::default());

    let collapse = run_builtin("s2_symmetric_triple_collapse");
    let col_rep = total_collision_diagnose(&collapse, &TotalCollisionOptions::default());

    check(
        !scan.vacuous
            && scan.windows > 0
            && scan.violations == 0
            && literal.failure.is_none()
            && i_min > 1e-2 * i0
            && spin.termination().reason == TerminationReason::TimeLimit
            && spin_rep.verdict == TotalCollisionVerdict::NoTotalCollisionObserved
            && col_rep.inertia_final <= COLLAPSE_INERTIA
            && col_rep.verdict == TotalCollisionVerdict::ConsistentZeroMomentum,
        format!(
            "γ≠0: {} windows, {} samples, {} violations, min I/bound {:.4}, I_min/I_0 {:.3}, full run {:?}; \
             γ=0: I_final {:.2e} (tol {COLLAPSE_INERTIA:e}), verdict {:?}",
            scan.windows,
            scan.samples_checked,
            scan.violations,
            scan.min_ratio,
            i_min / i0,
            spin_rep.verdict,
            col_rep.inertia_final,
            col_rep.verdict
        ),
    )
}

/// 11. and 12. on the S³ symmetric collapse.
fn s3_momentum(traj: &Trajectory) -> Outcome {
    let worst = traj
        .samples()
        .iter()
        .map(|s| s.readings.projected_c.unwrap())
        .flat_map(|c| c.into_iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    check(
        worst <= S3_MOMENTUM_TOL && traj.samples().len() > 10,
        format!(
            "{} samples to t = {:.4}, max |(ᾱ,β̄,γ̄)| {worst:.2e} (tol {S3_MOMENTUM_TOL:e})",
            traj.samples().len(),
            traj.termination().final_time
        ),
    )
}

fn s3_planarity(traj: &Trajectory) -> Outcome {
    let rep = planarity_diagnose(traj, &PlanarityOptions::default()).unwrap();
    check(
        rep.max_abs_ydot <= YDOT_TOL && rep.max_mass_moment_residual <= MASS_MOMENT_TOL,
        format!(
            "max |ẏ| {:.2e} (tol {YDOT_TOL:e}), max mass-moment residual {:.2e} (tol {MASS_MOMENT_TOL:e}), \
             min |det| {:.3}",
            rep.max_abs_ydot, rep.max_mass_moment_residual, rep.min_abs_determinant
        ),
    )
}

/// 13. Projected full trajectory against the pushforward integration.
fn equivalence() -> Outcome {
    let traj = run_builtin("s2_rotating_triangle");
    let opts = EquivalenceOptions {
        integrator: builtin("s2_rotating_triangle").unwrap().integrator,
        ..Default::default()
    };
    let rep = equivalence_check(&traj, &opts).unwrap();
    let excluded = run_builtin("s2_pole_geodesic");
    let abort = equivalence_check(&excluded, &opts).unwrap();
    let aborted = matches!(abort.status, EquivalenceStatus::Aborted { t, .. } if t == 0.0);
    check(
        rep.status == EquivalenceStatus::Completed
            && rep.max_pushforward_deviation <= EQUIVALENCE_TOL
            && rep.max_field_defect.is_finite()
            && rep.field_defect_samples == rep.samples_compared
            && aborted,
        format!(
            "{} samples, pushforward deviation {:.2e} (tol {EQUIVALENCE_TOL:e}); measured field defect \
             {:.3e} abs / {:.3e} rel; literal deviation {:.3e}; pole-geodesic run aborted at t=0: {aborted}",
            rep.samples_compared,
            rep.max_pushforward_deviation,
            rep.max_field_defect,
            rep.max_relative_field_defect,
            rep.max_literal_deviation
        ),
    )
}

/// 14. Two runs of every builtin give identical CSV bytes.
fn determinism() -> Outcome {
    let names = curved_nbody::harness::builtin_names();
    let mut differing = Vec::new();
    for name in &names {
        let s = builtin(name).unwrap();
        let a = timeseries_csv(&run(&s).unwrap().trajectory).unwrap();
        let b = timeseries_csv(&run(&s).unwrap().trajectory).unwrap();
        if a != b {
            differing.push(name.clone());
        }
    }
    check(
        differing.is_empty(),
        format!("{} builtins, differing: {differing:?}", names.len()),
    )
}

fn main() -> ExitCode {
    let (runs, drift_secs) = drift_runs();
    let s3 = run_builtin("s3_symmetric_triple_collapse");
    let results: Vec<(&str, Outcome)> = vec![
        ("1 gradient oracle", gradient_oracle()),
        ("2 first-integral drift", first_integral_drift(&runs, drift_secs)),
        ("3 constraint preservation", constraint_preservation(&runs)),
        ("4 painleve signature", painleve_signature()),
        ("5 collision-antipodal exception", collision_antipodal()),
        ("6 euler identity", euler_identity()),
        ("7 inertia second derivative", inertia_identity()),
        ("8 planar angular momentum", planar_momentum(&runs)),
        ("9 lagrange chain", lagrange_chain()),
        ("10 inertia lower bound", sundman_bound()),
        ("11 S3 angular momentum", s3_momentum(&s3)),
        ("12 S3 planarity", s3_planarity(&s3)),
        ("13 equivalence", equivalence()),
        ("14 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS  criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

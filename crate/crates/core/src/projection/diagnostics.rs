//! Moment-of-inertia series, the Sundman-type lower bound, and the
//! total-collision and planarity diagnostics over recorded trajectories.
//!
//! These are consistency checks over a finite run. They never certify the
//! behaviour at a singular time.

use serde::{Deserialize, Serialize};

use super::{
    dot, kinetic_sum, moment_of_inertia, norm2, orth_project, orth_rhs, projected_angular_momentum,
    pushforward_rhs, rho, inertia_rate, ProjectedState, ProjectionError,
};
use crate::dynamics::Metric;
use crate::geometry::cross3;
use crate::singularity::pair_s;
use crate::integrator::{TerminationReason, Trajectory};

/// Which projected field supplies Ï.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectedField {
    Literal,
    Pushforward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionDiagnostics {
    pub n: usize,
    /// Components per projected vector.
    pub dim: usize,
    pub times: Vec<f64>,
    pub inertia: Vec<f64>,
    pub inertia_rate: Vec<f64>,
    /// Ï along the chosen field: 2Σ(m_i|v̄_i|² + q̄_i·dp̄_i/dt). NaN where
    /// the field cannot be evaluated.
    pub inertia_accel: Vec<f64>,
    /// Σ m_i |v̄_i|²
    pub kinetic: Vec<f64>,
    /// Projected angular momentum per sample.
    pub momentum: Vec<[f64; 3]>,
    /// ρ from the initial projected angular momentum.
    pub rho: f64,
}

impl CollisionDiagnostics {
    pub fn from_states(
        states: &[ProjectedState],
        field: ProjectedField,
    ) -> Result<Self, ProjectionError> {
        let first = states
            .first()
            .ok_or_else(|| ProjectionError::Unsupported("empty trajectory".into()))?;
        let n = first.n();
        let mut d = Self {
            n,
            dim: first.dim(),
            times: Vec::with_capacity(states.len()),
            inertia: Vec::with_capacity(states.len()),
            inertia_rate: Vec::with_capacity(states.len()),
            inertia_accel: Vec::with_capacity(states.len()),
            kinetic: Vec::with_capacity(states.len()),
            momentum: Vec::with_capacity(states.len()),
            rho: rho(&projected_angular_momentum(first), n),
        };
        for st in states {
            let kin = kinetic_sum(st);
            let deriv = match field {
                ProjectedField::Literal => orth_rhs(st),
                ProjectedField::Pushforward => pushforward_rhs(st),
            };
            let accel = match deriv {
                Ok(der) => {
                    let work: f64 = (0..n)
                        .map(|i| dot(st.position(i), &der.dp[i * st.dim()..(i + 1) * st.dim()]))
                        .sum();
                    2.0 * (kin + work)
                }
                Err(_) => f64::NAN,
            };
            d.times.push(st.t);
            d.inertia.push(moment_of_inertia(st));
            d.inertia_rate.push(inertia_rate(st));
            d.inertia_accel.push(accel);
            d.kinetic.push(kin);
            d.momentum.push(projected_angular_momentum(st));
        }
        Ok(d)
    }

    /// Projects every sample of a full trajectory; Ï from the pushforward field.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self, ProjectionError> {
        let states = project_all(traj)?;
        Self::from_states(&states, ProjectedField::Pushforward)
    }

    /// Whether the measured hypotheses of the lower bound hold at sample `k`:
    /// İ < 0, Ï ≥ Σ m|v̄|², and Ï ≥ 2ρ/I.
    pub fn hypotheses_at(&self, k: usize) -> bool {
        let a = self.inertia_accel[k];
        self.inertia_rate[k] < 0.0
            && a >= self.kinetic[k]
            && a >= 2.0 * self.rho / self.inertia[k]
    }
}

pub(crate) fn project_all(traj: &Trajectory) -> Result<Vec<ProjectedState>, ProjectionError> {
    traj.states().map(|s| orth_project(&s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SundmanReport {
    pub tau_index: usize,
    /// ρ = 0: the bound says nothing.
    pub vacuous: bool,
    pub hypotheses_met: bool,
    /// Samples `tau_index..window_end` form the hypothesis window.
    pub window_end: usize,
    /// I(τ) exp(−İ(τ)²/4ρ)
    pub bound: f64,
    pub violations: usize,
    /// min I(t) / bound over the window
    pub min_ratio: f64,
}

/// Checks I(t) ≥ I(τ) exp(−İ(τ)²/4ρ) over the maximal window starting at
/// `tau_index` on which the hypotheses hold at every sample.
pub fn sundman_bound_check(diag: &CollisionDiagnostics, tau_index: usize) -> SundmanReport {
    let mut rep = SundmanReport {
        tau_index,
        vacuous: !(diag.rho > 0.0),
        hypotheses_met: false,
        window_end: tau_index,
        bound: f64::NAN,
        violations: 0,
        min_ratio: f64::INFINITY,
    };
    if rep.vacuous || tau_index >= diag.times.len() || !diag.hypotheses_at(tau_index) {
        return rep;
    }
    rep.hypotheses_met = true;
    let r = diag.inertia_rate[tau_index];
    rep.bound = diag.inertia[tau_index] * (-r * r / (4.0 * diag.rho)).exp();
    let mut k = tau_index;
    while k < diag.times.len() && diag.hypotheses_at(k) {
        let ratio = diag.inertia[k] / rep.bound;
        rep.min_ratio = rep.min_ratio.min(ratio);
        if ratio < 1.0 - 1e-12 {
            rep.violations += 1;
        }
        k += 1;
    }
    rep.window_end = k;
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SundmanScan {
    pub vacuous: bool,
    /// Number of τ at which the hypotheses hold.
    pub windows: usize,
    pub samples_checked: usize,
    pub violations: usize,
    pub min_ratio: f64,
}

/// [`sundman_bound_check`] from every sample.
pub fn sundman_scan(diag: &CollisionDiagnostics) -> SundmanScan {
    let mut scan = SundmanScan {
        vacuous: !(diag.rho > 0.0),
        windows: 0,
        samples_checked: 0,
        violations: 0,
        min_ratio: f64::INFINITY,
    };
    if scan.vacuous {
        return scan;
    }
    for tau in 0..diag.times.len() {
        let r = sundman_bound_check(diag, tau);
        if r.hypotheses_met {
            scan.windows += 1;
            scan.samples_checked += r.window_end - r.tau_index;
            scan.violations += r.violations;
            scan.min_ratio = scan.min_ratio.min(r.min_ratio);
        }
    }
    scan
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TotalCollisionOptions {
    /// Largest |c̄| counted as zero angular momentum.
    pub momentum_tol: f64,
    /// Final I below this fraction of the initial I counts as collapse.
    pub inertia_ratio: f64,
}

impl Default for TotalCollisionOptions {
    fn default() -> Self {
        Self {
            momentum_tol: 1e-10,
            inertia_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalCollisionVerdict {
    NotApplicable,
    /// Collapse toward the pole with vanishing projected angular momentum.
    ConsistentZeroMomentum,
    /// Collapse observed with angular momentum above tolerance.
    InconsistentNonzeroMomentum,
    NoTotalCollisionObserved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalCollisionReport {
    pub verdict: TotalCollisionVerdict,
    pub termination: TerminationReason,
    pub momentum: [f64; 3],
    /// max over samples of |c̄(t)|
    pub max_momentum: f64,
    pub max_momentum_drift: f64,
    pub inertia_initial: f64,
    pub inertia_min: f64,
    pub inertia_final: f64,
    pub rho: f64,
}

pub fn total_collision_diagnose(
    traj: &Trajectory,
    opts: &TotalCollisionOptions,
) -> TotalCollisionReport {
    let reason = traj.termination().reason;
    let mut rep = TotalCollisionReport {
        verdict: TotalCollisionVerdict::NotApplicable,
        termination: reason,
        momentum: [0.0; 3],
        max_momentum: f64::NAN,
        max_momentum_drift: f64::NAN,
        inertia_initial: f64::NAN,
        inertia_min: f64::NAN,
        inertia_final: f64::NAN,
        rho: f64::NAN,
    };
    if traj.space().kappa() <= 0.0 || traj.n() < 2 {
        return rep;
    }
    let Ok(states) = project_all(traj) else {
        return rep;
    };
    let c: Vec<[f64; 3]> = states.iter().map(projected_angular_momentum).collect();
    let inertia: Vec<f64> = states.iter().map(moment_of_inertia).collect();
    let mag = |v: &[f64; 3]| norm2(v).sqrt();
    rep.momentum = c[0];
    rep.max_momentum = c.iter().map(mag).fold(0.0, f64::max);
    rep.max_momentum_drift = c
        .iter()
        .map(|v| mag(&[v[0] - c[0][0], v[1] - c[0][1], v[2] - c[0][2]]))
        .fold(0.0, f64::max);
    rep.inertia_initial = inertia[0];
    rep.inertia_min = inertia.iter().copied().fold(f64::INFINITY, f64::min);
    rep.inertia_final = *inertia.last().unwrap();
    rep.rho = rho(&c[0], traj.n());

    let last = traj.samples().last().unwrap();
    let m = Metric::of_space(traj.space());
    let q = &last.y[..traj.n() * m.dim];
    let all_collide =
        (0..traj.n()).all(|i| (i + 1..traj.n()).all(|j| pair_s(&m, q, i, j) > 0.0));
    let candidate = reason.is_singular()
        && all_collide
        && rep.inertia_final <= opts.inertia_ratio * rep.inertia_initial;
    let zero = rep.max_momentum <= opts.momentum_tol;
    rep.verdict = match (candidate, zero) {
        (true, true) => TotalCollisionVerdict::ConsistentZeroMomentum,
        (true, false) => TotalCollisionVerdict::InconsistentNonzeroMomentum,
        (false, false) => TotalCollisionVerdict::NoTotalCollisionObserved,
        (false, true) => TotalCollisionVerdict::NotApplicable,
    };
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanarityOptions {
    pub ydot_tol: f64,
    pub residual_tol: f64,
    /// Smallest normalized determinant counted as non-collinear.
    pub determinant_floor: f64,
}

impl Default for PlanarityOptions {
    fn default() -> Self {
        Self {
            ydot_tol: 1e-8,
            residual_tol: 1e-10,
            determinant_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarityReport {
    /// Rows e_u, e_x, e_y of the aligned frame.
    pub frame: [[f64; 3]; 3],
    pub times: Vec<f64>,
    /// max_k |Σ m_i q̄_i,k| per sample
    pub mass_moment_residual: Vec<f64>,
    /// det[u; x; 1] / Σ|q̄_i|² per sample
    pub determinant: Vec<f64>,
    /// max_i |ẏ_i| per sample
    pub max_ydot: Vec<f64>,
    pub max_mass_moment_residual: f64,
    pub min_abs_determinant: f64,
    pub max_abs_ydot: f64,
    pub max_abs_y: f64,
    pub consistent: bool,
}

/// Aligns the frame so the three bodies lie in y = 0 at the first sample,
/// then tracks the mass-moment residuals, the collinearity determinant and
/// the out-of-plane velocities.
pub fn planarity_diagnose(
    traj: &Trajectory,
    opts: &PlanarityOptions,
) -> Result<PlanarityReport, ProjectionError> {
    if traj.n() != 3 {
        return Err(ProjectionError::Unsupported(format!(
            "planarity needs 3 bodies, got {}",
            traj.n()
        )));
    }
    if traj.space().dim() != 4 {
        return Err(ProjectionError::Unsupported(
            "planarity needs a 3-component projection".into(),
        ));
    }
    let states = project_all(traj)?;
    let first = &states[0];
    let as3 = |v: &[f64]| [v[0], v[1], v[2]];
    let unit = |v: [f64; 3]| -> Option<[f64; 3]> {
        let l = norm2(&v).sqrt();
        (l > 0.0).then(|| [v[0] / l, v[1] / l, v[2] / l])
    };
    let degenerate = || ProjectionError::Unsupported("degenerate initial triangle".into());
    let eu = unit(as3(first.position(0))).ok_or_else(degenerate)?;
    let ey = unit(cross3(&as3(first.position(0)), &as3(first.position(1)))).ok_or_else(degenerate)?;
    let ex = cross3(&ey, &eu);

    let mut rep = PlanarityReport {
        frame: [eu, ex, ey],
        times: Vec::with_capacity(states.len()),
        mass_moment_residual: Vec::with_capacity(states.len()),
        determinant: Vec::with_capacity(states.len()),
        max_ydot: Vec::with_capacity(states.len()),
        max_mass_moment_residual: 0.0,
        min_abs_determinant: f64::INFINITY,
        max_abs_ydot: 0.0,
        max_abs_y: 0.0,
        consistent: false,
    };
    let m = traj.masses();
    for st in &states {
        let mut moment = [0.0; 3];
        let mut u = [0.0; 3];
        let mut x = [0.0; 3];
        let mut scale = 0.0;
        let mut ydot: f64 = 0.0;
        for i in 0..3 {
            let q = st.position(i);
            let c = [dot(q, &eu), dot(q, &ex), dot(q, &ey)];
            for k in 0..3 {
                moment[k] += m[i] * c[k];
            }
            u[i] = c[0];
            x[i] = c[1];
            scale += norm2(q);
            rep.max_abs_y = rep.max_abs_y.max(c[2].abs());
            ydot = ydot.max((dot(st.momentum(i), &ey) / m[i]).abs());
        }
        let det = u[0] * (x[1] - x[2]) - u[1] * (x[0] - x[2]) + u[2] * (x[0] - x[1]);
        let det = if scale > 0.0 { det / scale } else { 0.0 };
        let res = moment.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        rep.times.push(st.t);
        rep.mass_moment_residual.push(res);
        rep.determinant.push(det);
        rep.max_ydot.push(ydot);
        rep.max_mass_moment_residual = rep.max_mass_moment_residual.max(res);
        rep.min_abs_determinant = rep.min_abs_determinant.min(det.abs());
        rep.max_abs_ydot = rep.max_abs_ydot.max(ydot);
    }
    rep.consistent = rep.max_mass_moment_residual <= opts.residual_tol
        && rep.min_abs_determinant > opts.determinant_floor
        && rep.max_abs_ydot <= opts.ydot_tol;
    Ok(rep)
}

//! The orthographic system: dropping the last ambient coordinate maps the
//! open northern hemisphere of S² (S³) onto the disk (ball) of radius κ^{-1/2}.
//!
//! Two vector fields live on the projected phase space:
//! * the *literal* field, which reuses the cotangent kernel with the
//!   Euclidean product on the projected vectors;
//! * the *pushforward* of the full field, obtained by recovering the dropped
//!   coordinate and its momentum from the constraints.
//!
//! They are not the same field. [`equivalence`] measures the difference.

mod diagnostics;
mod equivalence;

pub use diagnostics::{
    planarity_diagnose, sundman_bound_check, sundman_scan, total_collision_diagnose,
    CollisionDiagnostics, PlanarityOptions, PlanarityReport, ProjectedField, SundmanReport,
    SundmanScan, TotalCollisionOptions, TotalCollisionReport, TotalCollisionVerdict,
};
pub use equivalence::{equivalence_check, EquivalenceOptions, EquivalenceReport, EquivalenceStatus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{hamiltonian_rhs, DynamicsError, Metric, SystemState};
use crate::geometry::{cross3, CurvatureSpace, EmbeddedVector};
use crate::integrator::{Driver, IntegratorConfig, OdeSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("the orthographic chart needs positive curvature")]
    NonPositiveCurvature,
    #[error("body {body} has last coordinate {z:e} ≤ 0, outside the chart")]
    OutsideHemisphere { body: usize, z: f64 },
    #[error("body {body} lies outside the open disk/ball")]
    OutsideDisk { body: usize },
    #[error("diameter singularity: projected pair(s) {pairs:?} collinear with the origin")]
    DiameterSingularity { pairs: Vec<(usize, usize)> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Positions q̄_i and momenta p̄_i = m_i dq̄_i/dt in the projection chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedState {
    pub t: f64,
    kappa: f64,
    dim: usize,
    masses: Vec<f64>,
    /// `[q̄_1..q̄_n, p̄_1..p̄_n]`
    y: Vec<f64>,
}

impl ProjectedState {
    pub fn new(
        t: f64,
        kappa: f64,
        masses: Vec<f64>,
        positions: &[Vec<f64>],
        momenta: &[Vec<f64>],
    ) -> Result<Self, ProjectionError> {
        if !(kappa > 0.0) {
            return Err(ProjectionError::NonPositiveCurvature);
        }
        let n = masses.len();
        if n == 0 {
            return Err(DynamicsError::Empty.into());
        }
        if positions.len() != n || momenta.len() != n {
            return Err(DynamicsError::CountMismatch {
                masses: n,
                positions: positions.len(),
                momenta: momenta.len(),
            }
            .into());
        }
        let dim = positions[0].len();
        if !(dim == 2 || dim == 3) {
            return Err(ProjectionError::Unsupported(format!(
                "{dim}-component projected vectors"
            )));
        }
        for (i, v) in positions.iter().chain(momenta).enumerate() {
            if v.len() != dim {
                return Err(DynamicsError::DimensionMismatch {
                    body: i % n,
                    expected: dim,
                    got: v.len(),
                }
                .into());
            }
        }
        for (i, &m) in masses.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(DynamicsError::BadMass(i).into());
            }
        }
        let y: Vec<f64> = positions.iter().chain(momenta).flatten().copied().collect();
        let st = Self {
            t,
            kappa,
            dim,
            masses,
            y,
        };
        st.check_disk()?;
        Ok(st)
    }

    pub(crate) fn from_flat(t: f64, kappa: f64, dim: usize, masses: &[f64], y: Vec<f64>) -> Self {
        Self {
            t,
            kappa,
            dim,
            masses: masses.to_vec(),
            y,
        }
    }

    fn check_disk(&self) -> Result<(), ProjectionError> {
        for i in 0..self.n() {
            if self.kappa * norm2(self.position(i)) > 1.0 {
                return Err(ProjectionError::OutsideDisk { body: i });
            }
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Components per projected vector (2 or 3).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn momentum(&self, i: usize) -> &[f64] {
        let o = self.n() * self.dim;
        &self.y[o + i * self.dim..o + (i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> Vec<f64> {
        self.momentum(i).iter().map(|p| p / self.masses[i]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.y
    }
}

/// Time derivative of a projected state, same layout as the state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedDerivative {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Drops the last coordinate of every position and momentum.
pub fn orth_project(state: &SystemState) -> Result<ProjectedState, ProjectionError> {
    let kappa = state.space().kappa();
    if !(kappa > 0.0) {
        return Err(ProjectionError::NonPositiveCurvature);
    }
    for (i, q) in state.positions().iter().enumerate() {
        if !(q.last() > 0.0) {
            return Err(ProjectionError::OutsideHemisphere { body: i, z: q.last() });
        }
    }
    let y = state
        .positions()
        .iter()
        .chain(state.momenta())
        .flat_map(|v| v.head().iter().copied())
        .collect();
    Ok(ProjectedState::from_flat(
        state.t,
        kappa,
        state.space().dim() - 1,
        state.masses(),
        y,
    ))
}

/// Recovers z = +(κ^{-1} − |q̄|²)^{1/2} and p_z = −q̄·p̄ / z for one body.
fn lift_body(kappa: f64, q: &[f64], p: &[f64]) -> Option<(f64, f64)> {
    let z2 = kappa.recip() - norm2(q);
    if !(z2 > 0.0) {
        return None;
    }
    let z = z2.sqrt();
    Some((z, -dot(q, p) / z))
}

/// Inverse of [`orth_project`] on the open hemisphere.
pub fn lift(pstate: &ProjectedState) -> Result<SystemState, ProjectionError> {
    let d = pstate.dim;
    let space = CurvatureSpace::new(pstate.kappa, d + 1).map_err(DynamicsError::from)?;
    let mut qs = Vec::with_capacity(pstate.n());
    let mut ps = Vec::with_capacity(pstate.n());
    for i in 0..pstate.n() {
        let (q, p) = (pstate.position(i), pstate.momentum(i));
        let (z, pz) = lift_body(pstate.kappa, q, p).ok_or(ProjectionError::OutsideDisk { body: i })?;
        let mut qv = q.to_vec();
        qv.push(z);
        let mut pv = p.to_vec();
        pv.push(pz);
        qs.push(EmbeddedVector::from_slice(&qv).map_err(DynamicsError::from)?);
        ps.push(EmbeddedVector::from_slice(&pv).map_err(DynamicsError::from)?);
    }
    Ok(SystemState::new(pstate.t, space, pstate.masses.clone(), qs, ps)?)
}

/// The literal orthographic system as an [`OdeSystem`].
pub(crate) struct LiteralSystem<'a> {
    metric: Metric,
    masses: &'a [f64],
}

impl<'a> LiteralSystem<'a> {
    pub fn new(kappa: f64, dim: usize, masses: &'a [f64]) -> Self {
        Self {
            metric: Metric::projected(kappa, dim),
            masses,
        }
    }
}

impl OdeSystem for LiteralSystem<'_> {
    fn len(&self) -> usize {
        2 * self.masses.len() * self.metric.dim
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        hamiltonian_rhs(&self.metric, self.masses, y, dy)
    }
}

/// Pushforward of the full field through the chart, as an [`OdeSystem`].
pub(crate) struct PushforwardSystem<'a> {
    full: Metric,
    masses: &'a [f64],
    buf: std::cell::RefCell<(Vec<f64>, Vec<f64>)>,
}

impl<'a> PushforwardSystem<'a> {
    pub fn new(kappa: f64, dim: usize, masses: &'a [f64]) -> Self {
        let len = 2 * masses.len() * (dim + 1);
        Self {
            full: Metric {
                kappa,
                sigma: 1.0,
                dim: dim + 1,
            },
            masses,
            buf: std::cell::RefCell::new((vec![0.0; len], vec![0.0; len])),
        }
    }
}

impl OdeSystem for PushforwardSystem<'_> {
    fn len(&self) -> usize {
        2 * self.masses.len() * (self.full.dim - 1)
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        let n = self.masses.len();
        let (d, dp) = (self.full.dim, self.full.dim - 1);
        let mut guard = self.buf.borrow_mut();
        let (full_y, full_dy) = &mut *guard;
        for i in 0..n {
            let q = &y[i * dp..(i + 1) * dp];
            let p = &y[(n + i) * dp..(n + i + 1) * dp];
            let (z, pz) =
                lift_body(self.full.kappa, q, p).ok_or(DynamicsError::OutsideChart { body: i })?;
            full_y[i * d..i * d + dp].copy_from_slice(q);
            full_y[i * d + dp] = z;
            full_y[(n + i) * d..(n + i) * d + dp].copy_from_slice(p);
            full_y[(n + i) * d + dp] = pz;
        }
        hamiltonian_rhs(&self.full, self.masses, full_y, full_dy)?;
        for k in 0..2 * n {
            dy[k * dp..(k + 1) * dp].copy_from_slice(&full_dy[k * d..k * d + dp]);
        }
        Ok(())
    }
}

fn diameter_error(e: DynamicsError) -> ProjectionError {
    match e {
        DynamicsError::SingularConfiguration { pairs } => {
            ProjectionError::DiameterSingularity { pairs }
        }
        other => ProjectionError::Dynamics(other),
    }
}

fn evaluate<S: OdeSystem>(
    sys: &S,
    pstate: &ProjectedState,
) -> Result<ProjectedDerivative, ProjectionError> {
    let mut dy = vec![0.0; pstate.y.len()];
    sys.eval(&pstate.y, &mut dy).map_err(diameter_error)?;
    let dp = dy.split_off(pstate.n() * pstate.dim);
    Ok(ProjectedDerivative { dq: dy, dp })
}

/// Literal field: dq̄/dt = p̄/m, dp̄/dt = ∇_{q̄}U(q̄) − m⁻¹κ|p̄|² q̄ with U the
/// cotangent force function on the projected vectors.
pub fn orth_rhs(pstate: &ProjectedState) -> Result<ProjectedDerivative, ProjectionError> {
    evaluate(
        &LiteralSystem::new(pstate.kappa, pstate.dim, &pstate.masses),
        pstate,
    )
}

/// Exact pushforward of the full field.
pub fn pushforward_rhs(pstate: &ProjectedState) -> Result<ProjectedDerivative, ProjectionError> {
    evaluate(
        &PushforwardSystem::new(pstate.kappa, pstate.dim, &pstate.masses),
        pstate,
    )
}

/// Gradient of the literal force function with respect to each q̄_i.
pub fn projected_gradient(pstate: &ProjectedState) -> Result<Vec<f64>, ProjectionError> {
    let m = Metric::projected(pstate.kappa, pstate.dim);
    let nd = pstate.n() * pstate.dim;
    let mut out = vec![0.0; nd];
    crate::dynamics::gradient(&m, &pstate.masses, &pstate.y[..nd], &mut out)
        .map_err(diameter_error)?;
    Ok(out)
}

/// Σ q̄_i × p̄_i over a flat full-state phase vector with `d` ambient components.
pub(crate) fn flat_projected_angular_momentum(d: usize, n: usize, y: &[f64]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for i in 0..n {
        let q = &y[i * d..i * d + d - 1];
        let p = &y[(n + i) * d..(n + i) * d + d - 1];
        accumulate_moment(q, p, 1.0, &mut c);
    }
    c
}

fn accumulate_moment(q: &[f64], p: &[f64], w: f64, c: &mut [f64; 3]) {
    if q.len() == 2 {
        c[2] += w * (q[0] * p[1] - q[1] * p[0]);
    } else {
        let l = cross3(&[q[0], q[1], q[2]], &[p[0], p[1], p[2]]);
        for k in 0..3 {
            c[k] += w * l[k];
        }
    }
}

/// (0, 0, γ) for 2-component projections, (ᾱ, β̄, γ̄) = Σ q̄_i × p̄_i for 3.
pub fn projected_angular_momentum(pstate: &ProjectedState) -> [f64; 3] {
    let mut c = [0.0; 3];
    for i in 0..pstate.n() {
        accumulate_moment(pstate.position(i), pstate.momentum(i), 1.0, &mut c);
    }
    c
}

/// I = Σ m_i |q̄_i|².
pub fn moment_of_inertia(pstate: &ProjectedState) -> f64 {
    (0..pstate.n())
        .map(|i| pstate.masses[i] * norm2(pstate.position(i)))
        .sum()
}

/// İ = 2 Σ m_i q̄_i · v̄_i.
pub fn inertia_rate(pstate: &ProjectedState) -> f64 {
    2.0 * (0..pstate.n())
        .map(|i| dot(pstate.position(i), pstate.momentum(i)))
        .sum::<f64>()
}

/// 2 Σ m_i |v̄_i|² (1 − κ|q̄_i|²), the second derivative of I along the
/// literal field.
pub fn inertia_accel(pstate: &ProjectedState) -> f64 {
    2.0 * (0..pstate.n())
        .map(|i| {
            let m = pstate.masses[i];
            let v2 = norm2(pstate.momentum(i)) / (m * m);
            m * v2 * (1.0 - pstate.kappa * norm2(pstate.position(i)))
        })
        .sum::<f64>()
}

/// Σ m_i |v̄_i|².
pub fn kinetic_sum(pstate: &ProjectedState) -> f64 {
    (0..pstate.n())
        .map(|i| norm2(pstate.momentum(i)) / pstate.masses[i])
        .sum()
}

/// |c̄|² / n: γ²/n for planar projections, (ᾱ²+β̄²+γ̄²)/n for spatial ones.
pub fn rho(c: &[f64; 3], n: usize) -> f64 {
    assert!(n >= 1, "rho needs at least one body");
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeGap {
    /// I · Σ m_i |v̄_i|²
    pub lhs: f64,
    /// Σ m_i² |q̄_i × v̄_i|²
    pub rhs: f64,
    /// |Σ m_i q̄_i × v̄_i|² / n
    pub bound: f64,
}

impl LagrangeGap {
    /// Largest violation of lhs ≥ rhs ≥ bound, zero when the chain holds.
    pub fn violation(&self) -> f64 {
        (self.rhs - self.lhs).max(self.bound - self.rhs).max(0.0)
    }
}

pub fn lagrange_gap(pstate: &ProjectedState) -> LagrangeGap {
    let n = pstate.n();
    let mut rhs = 0.0;
    let mut total = [0.0; 3];
    for i in 0..n {
        let v = pstate.velocity(i);
        let mut l = [0.0; 3];
        accumulate_moment(pstate.position(i), &v, 1.0, &mut l);
        let m = pstate.masses[i];
        rhs += m * m * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
        for k in 0..3 {
            total[k] += m * l[k];
        }
    }
    LagrangeGap {
        lhs: moment_of_inertia(pstate) * kinetic_sum(pstate),
        rhs,
        bound: rho(&total, n),
    }
}

/// Accepted steps of an integration of one of the projected fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedTrajectory {
    pub states: Vec<ProjectedState>,
    /// Why the integration stopped before `t_end`, if it did.
    pub failure: Option<String>,
}

/// Integrates a projected field from `initial` to `config.t_end`, recording
/// every accepted step.
pub fn integrate_projected(
    initial: &ProjectedState,
    field: ProjectedField,
    config: &IntegratorConfig,
) -> ProjectedTrajectory {
    let (kappa, d, masses) = (initial.kappa, initial.dim, initial.masses.as_slice());
    let mut states = vec![initial.clone()];
    let mut t = initial.t;
    let mut y = initial.y.clone();
    let mut driver = Driver::new(y.len(), config);
    let record = |t: f64, y: &[f64]| {
        states.push(ProjectedState::from_flat(t, kappa, d, masses, y.to_vec()))
    };
    let res = match field {
        ProjectedField::Literal => {
            let sys = LiteralSystem::new(kappa, d, masses);
            driver.advance_recording(&sys, &mut t, &mut y, config.t_end, record)
        }
        ProjectedField::Pushforward => {
            let sys = PushforwardSystem::new(kappa, d, masses);
            driver.advance_recording(&sys, &mut t, &mut y, config.t_end, record)
        }
    };
    ProjectedTrajectory {
        states,
        failure: res.err().map(|e| e.to_string()),
    }
}

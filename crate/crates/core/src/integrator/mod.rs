//! Adaptive integration of the constrained equations of motion with
//! re-projection onto the manifold after every step, event-driven
//! termination near the singular set, and invariant monitoring.

mod dopri;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dopri::{OdeSystem, ORDER};
pub(crate) use dopri::{Dopri5, PiController, StepFailure};

use crate::dynamics::{self, hamiltonian_rhs, DynamicsError, Metric, SystemState};
use crate::geometry::{renormalize_slice, CurvatureSpace, GeometryError};
use crate::projection::flat_projected_angular_momentum;
use crate::singularity::{self, classify, GlobalLabel, PairLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("initial state infeasible: {0}")]
    Infeasible(DynamicsError),
    #[error("initial state is on the singular set (min pair metric {0:e})")]
    InitiallySingular(f64),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step failed at t = {t}: {reason}")]
    StepFailed { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Tolerance on constraint/tangency residuals of the initial state.
    pub feasibility_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            rtol: 1e-12,
            atol: 1e-12,
            initial_step: 1e-3,
            min_step: 1e-14,
            max_step: 0.1,
            max_steps: 2_000_000,
            feasibility_tol: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |m: &str| Err(IntegratorError::Config(m.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.min_step > 0.0) {
            return bad("min_step must be positive");
        }
        if !(self.max_step >= self.min_step) {
            return bad("max_step must be at least min_step");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite");
        }
        if !(self.feasibility_tol > 0.0) {
            return bad("feasibility_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    /// Terminate once the minimum pair metric drops below this.
    pub singularity_tol: f64,
    /// Pairs with d_ij below this at termination are reported alongside the
    /// triggering pair (simultaneous approaches proceed at different rates).
    pub companion_tol: f64,
    /// Terminate on pole-geodesic configurations (κ > 0) when set, radians.
    pub pole_geodesic_angle: Option<f64>,
    /// Width of the final bisection bracket, relative to max(1, |t|).
    pub localization_tol: f64,
    /// Step cap as a fraction of the extrapolated time for the pair metric to reach zero.
    pub step_cap_fraction: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            singularity_tol: 1e-6,
            companion_tol: 1e-4,
            pole_geodesic_angle: None,
            localization_tol: 1e-13,
            step_cap_fraction: 0.5,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |m: &str| Err(IntegratorError::Config(m.to_string()));
        if !(self.singularity_tol > dynamics::DENOMINATOR_TOL) {
            return bad("singularity_tol must exceed the force denominator tolerance");
        }
        if !(self.companion_tol >= self.singularity_tol) {
            return bad("companion_tol must be at least singularity_tol");
        }
        if let Some(a) = self.pole_geodesic_angle {
            if !(a > 0.0) {
                return bad("pole_geodesic_angle must be positive");
            }
        }
        if !(self.localization_tol > 0.0) {
            return bad("localization_tol must be positive");
        }
        if !(self.step_cap_fraction > 0.0 && self.step_cap_fraction <= 1.0) {
            return bad("step_cap_fraction must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TimeLimit,
    Collision,
    Antipodal,
    CollisionAntipodal,
    /// Singular pairs of both kinds sharing no body.
    Hybrid,
    DiameterOrPoleGeodesic,
    StepUnderflow,
    NonRenormalizable,
    StepLimit,
}

impl TerminationReason {
    pub fn is_singular(self) -> bool {
        matches!(
            self,
            Self::Collision | Self::Antipodal | Self::CollisionAntipodal | Self::Hybrid
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationReport {
    pub reason: TerminationReason,
    pub pairs: Vec<(usize, usize)>,
    pub final_time: f64,
    pub final_min_pair_metric: Option<f64>,
    pub message: Option<String>,
}

/// Invariant readings recorded with each accepted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readings {
    /// Energy constant; NaN when the force cannot be evaluated.
    pub h: f64,
    /// Σ q_i ⊗ p_i, 3-component ambient spaces only.
    pub c: Option<[f64; 3]>,
    /// Σ q̄_i × p̄_i of the pole projection, κ > 0 only.
    pub projected_c: Option<[f64; 3]>,
    /// Moment of inertia of the pole projection, κ > 0 only.
    pub inertia: Option<f64>,
    pub min_pair_metric: Option<f64>,
    pub max_constraint_residual: f64,
    pub max_tangency_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Flat phase vector `[q_1..q_n, p_1..p_n]`.
    pub y: Vec<f64>,
    pub readings: Readings,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub failed: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    space: CurvatureSpace,
    masses: Vec<f64>,
    samples: Vec<Sample>,
    termination: TerminationReport,
    pub stats: IntegrationStats,
}

impl Trajectory {
    /// Assembles a trajectory from stored samples (readings are recomputed).
    pub fn from_states(
        states: &[SystemState],
        termination: TerminationReport,
    ) -> Result<Self, IntegratorError> {
        let first = states
            .first()
            .ok_or_else(|| IntegratorError::Config("empty trajectory".into()))?;
        let space = *first.space();
        let masses = first.masses().to_vec();
        let samples = states
            .iter()
            .map(|s| {
                let y = s.to_flat();
                Sample {
                    t: s.t,
                    readings: readings(&space, &masses, &y),
                    y,
                }
            })
            .collect();
        Ok(Self {
            space,
            masses,
            samples,
            termination,
            stats: IntegrationStats::default(),
        })
    }

    pub fn space(&self) -> &CurvatureSpace {
        &self.space
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn termination(&self) -> &TerminationReport {
        &self.termination
    }

    pub fn state(&self, k: usize) -> SystemState {
        let s = &self.samples[k];
        SystemState::from_flat(s.t, self.space, &self.masses, &s.y)
    }

    pub fn last_state(&self) -> SystemState {
        self.state(self.samples.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = SystemState> + '_ {
        (0..self.samples.len()).map(|k| self.state(k))
    }
}

/// The full constrained system as an [`OdeSystem`], re-projected after each step.
pub(crate) struct FullSystem<'a> {
    pub metric: Metric,
    pub masses: &'a [f64],
}

impl<'a> FullSystem<'a> {
    pub fn new(space: &CurvatureSpace, masses: &'a [f64]) -> Self {
        Self {
            metric: Metric::of_space(space),
            masses,
        }
    }
}

impl OdeSystem for FullSystem<'_> {
    fn len(&self) -> usize {
        2 * self.masses.len() * self.metric.dim
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError> {
        hamiltonian_rhs(&self.metric, self.masses, y, dy)
    }

    fn restore(&self, y: &mut [f64]) -> Result<(), GeometryError> {
        let d = self.metric.dim;
        let n = self.masses.len();
        let (q, p) = y.split_at_mut(n * d);
        for i in 0..n {
            renormalize_slice(
                &mut q[i * d..(i + 1) * d],
                &mut p[i * d..(i + 1) * d],
                self.metric.kappa,
                self.metric.sigma,
            )?;
        }
        Ok(())
    }
}

pub(crate) fn readings(space: &CurvatureSpace, masses: &[f64], y: &[f64]) -> Readings {
    let state = SystemState::from_flat(0.0, *space, masses, y);
    let m = Metric::of_space(space);
    let n = masses.len();
    let d = space.dim();
    let (max_constraint_residual, max_tangency_residual) = state.max_residuals();
    let (projected_c, inertia) = if space.kappa() > 0.0 {
        let pc = flat_projected_angular_momentum(d, n, y);
        let inertia = (0..n)
            .map(|i| masses[i] * y[i * d..i * d + d - 1].iter().map(|v| v * v).sum::<f64>())
            .sum();
        (Some(pc), Some(inertia))
    } else {
        (None, None)
    };
    Readings {
        h: dynamics::total_energy(&state).unwrap_or(f64::NAN),
        c: dynamics::angular_momentum(&state).ok(),
        projected_c,
        inertia,
        min_pair_metric: singularity::min_pair_metric_flat(&m, n, &y[..n * d]),
        max_constraint_residual,
        max_tangency_residual,
    }
}

/// One embedded-pair step followed by re-projection of every body.
/// Returns the new state and the scaled error estimate (≤ 1 means within tolerance).
pub fn step(
    state: &SystemState,
    dt: f64,
    config: &IntegratorConfig,
) -> Result<(SystemState, f64), IntegratorError> {
    let sys = FullSystem::new(state.space(), state.masses());
    let y = state.to_flat();
    let mut out = vec![0.0; y.len()];
    let mut w = Dopri5::new(y.len());
    let err = w
        .step(&sys, &y, dt, config.rtol, config.atol, &mut out)
        .map_err(|f| IntegratorError::StepFailed {
            t: state.t,
            reason: format!("{f:?}"),
        })?;
    Ok((
        SystemState::from_flat(state.t + dt, *state.space(), state.masses(), &out),
        err,
    ))
}

/// Adaptive stepping of an arbitrary [`OdeSystem`] between output times.
pub(crate) struct Driver {
    stepper: Dopri5,
    ctrl: PiController,
    dt: f64,
    cfg: IntegratorConfig,
    pub stats: IntegrationStats,
}

impl Driver {
    pub fn new(len: usize, cfg: &IntegratorConfig) -> Self {
        Self {
            stepper: Dopri5::new(len),
            ctrl: PiController::default(),
            dt: cfg.initial_step.clamp(cfg.min_step, cfg.max_step),
            cfg: *cfg,
            stats: IntegrationStats::default(),
        }
    }

    /// Advances `(t, y)` to exactly `target` (which may lie before `t`).
    pub fn advance_to<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut Vec<f64>,
        target: f64,
    ) -> Result<(), IntegratorError> {
        self.advance_recording(sys, t, y, target, |_, _| {})
    }

    /// As [`Driver::advance_to`], calling `record` after every accepted step.
    pub fn advance_recording<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut Vec<f64>,
        target: f64,
        mut record: impl FnMut(f64, &[f64]),
    ) -> Result<(), IntegratorError> {
        let dir = if target >= *t { 1.0 } else { -1.0 };
        let mut out = vec![0.0; y.len()];
        while (target - *t) * dir > 0.0 {
            let remaining = (target - *t).abs();
            let h = self.dt.min(remaining);
            self.stats.evaluations += 7;
            match self
                .stepper
                .step(sys, y, dir * h, self.cfg.rtol, self.cfg.atol, &mut out)
            {
                Ok(err) if err <= 1.0 => {
                    self.stats.accepted += 1;
                    std::mem::swap(y, &mut out);
                    *t = if h == remaining { target } else { *t + dir * h };
                    record(*t, y);
                    if h < remaining {
                        self.dt = self.ctrl.accept(h, err).min(self.cfg.max_step);
                    }
                }
                Ok(err) => {
                    self.stats.rejected += 1;
                    if h <= self.cfg.min_step {
                        return Err(IntegratorError::StepUnderflow { t: *t });
                    }
                    self.dt = self.ctrl.reject(h, err).max(self.cfg.min_step);
                }
                Err(f) => {
                    self.stats.failed += 1;
                    if h <= self.cfg.min_step {
                        return Err(IntegratorError::StepFailed {
                            t: *t,
                            reason: format!("{f:?}"),
                        });
                    }
                    self.dt = (h * 0.25).max(self.cfg.min_step);
                }
            }
        }
        Ok(())
    }
}

/// Which event fired on a candidate state.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Trigger {
    Singularity,
    PoleGeodesic,
}

struct Detector<'a> {
    metric: Metric,
    n: usize,
    events: &'a EventConfig,
    /// Signs of the projected cross products at the bracket start (2-D projections).
    baseline: Vec<f64>,
}

impl<'a> Detector<'a> {
    fn new(space: &CurvatureSpace, n: usize, events: &'a EventConfig) -> Self {
        Self {
            metric: Metric::of_space(space),
            n,
            events,
            baseline: Vec::new(),
        }
    }

    fn pole_enabled(&self) -> Option<f64> {
        self.events
            .pole_geodesic_angle
            .filter(|_| self.metric.kappa > 0.0 && self.n >= 2)
    }

    fn signed_crosses(&self, y: &[f64]) -> Vec<f64> {
        let d = self.metric.dim;
        if d != 3 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(y[i * d] * y[j * d + 1] - y[i * d + 1] * y[j * d]);
            }
        }
        out
    }

    fn set_baseline(&mut self, y: &[f64]) {
        if self.pole_enabled().is_some() {
            self.baseline = self.signed_crosses(y);
        }
    }

    fn metric_value(&self, y: &[f64]) -> Option<f64> {
        singularity::min_pair_metric_flat(&self.metric, self.n, &y[..self.n * self.metric.dim])
    }

    fn check(&self, y: &[f64]) -> Option<Trigger> {
        if let Some(v) = self.metric_value(y) {
            if v < self.events.singularity_tol {
                return Some(Trigger::Singularity);
            }
        }
        if let Some(angle) = self.pole_enabled() {
            let d = self.metric.dim;
            let rep = singularity::pole_geodesic_flat(d, self.n, &y[..self.n * d], angle);
            if !rep.is_clear() {
                return Some(Trigger::PoleGeodesic);
            }
            let now = self.signed_crosses(y);
            if now
                .iter()
                .zip(&self.baseline)
                .any(|(a, b)| a.signum() != b.signum() && *b != 0.0)
            {
                return Some(Trigger::PoleGeodesic);
            }
        }
        None
    }
}

/// Integrates the equations of motion from `state` until `config.t_end` or an event.
pub fn integrate(
    state: &SystemState,
    config: &IntegratorConfig,
    events: &EventConfig,
) -> Result<Trajectory, IntegratorError> {
    config.validate()?;
    events.validate()?;
    state
        .check_feasible(config.feasibility_tol)
        .map_err(IntegratorError::Infeasible)?;

    let space = *state.space();
    let masses = state.masses().to_vec();
    let n = masses.len();
    let d = space.dim();
    let sys = FullSystem::new(&space, &masses);
    let mut detector = Detector::new(&space, n, events);

    let mut t = state.t;
    let mut y = state.to_flat();
    if let Some(v) = detector.metric_value(&y) {
        if v < events.singularity_tol {
            return Err(IntegratorError::InitiallySingular(v));
        }
    }
    detector.set_baseline(&y);

    let mut samples = vec![Sample {
        t,
        readings: readings(&space, &masses, &y),
        y: y.clone(),
    }];
    let mut stats = IntegrationStats::default();
    let mut stepper = Dopri5::new(y.len());
    let mut ctrl = PiController::default();
    let mut dt = config.initial_step.clamp(config.min_step, config.max_step);
    let mut out = vec![0.0; y.len()];
    let mut prev_metric = detector.metric_value(&y);
    let mut cap = f64::INFINITY;

    let finish = |reason: TerminationReason,
                  t: f64,
                  y: &[f64],
                  message: Option<String>|
     -> TerminationReport {
        let st = SystemState::from_flat(t, space, &masses, y);
        let pairs = match reason {
            TerminationReason::TimeLimit | TerminationReason::StepLimit => Vec::new(),
            TerminationReason::DiameterOrPoleGeodesic => {
                singularity::pole_geodesic_flat(
                    d,
                    n,
                    &y[..n * d],
                    events.pole_geodesic_angle.unwrap_or(singularity::DEFAULT_EPS_ANGLE),
                )
                .pairs
            }
            _ => classify(&st, events.companion_tol)
                .pairs
                .into_iter()
                .filter(|(_, l)| *l != PairLabel::Clear)
                .map(|(p, _)| p)
                .collect(),
        };
        TerminationReport {
            reason,
            pairs,
            final_time: t,
            final_min_pair_metric: singularity::min_pair_metric(&st),
            message,
        }
    };

    if detector.check(&y) == Some(Trigger::PoleGeodesic) {
        let termination = finish(TerminationReason::DiameterOrPoleGeodesic, t, &y, None);
        return Ok(Trajectory {
            space,
            masses,
            samples,
            termination,
            stats,
        });
    }

    let termination = loop {
        if t >= config.t_end {
            break finish(TerminationReason::TimeLimit, t, &y, None);
        }
        if stats.accepted >= config.max_steps {
            break finish(TerminationReason::StepLimit, t, &y, None);
        }
        let remaining = config.t_end - t;
        let h = dt.min(cap).max(config.min_step).min(remaining);
        stats.evaluations += 7;
        match stepper.step(&sys, &y, h, config.rtol, config.atol, &mut out) {
            Err(f) => {
                stats.failed += 1;
                if h <= config.min_step {
                    let reason = match f {
                        StepFailure::Geometry(GeometryError::NonRenormalizable(_)) => {
                            TerminationReason::NonRenormalizable
                        }
                        _ => TerminationReason::StepUnderflow,
                    };
                    break finish(reason, t, &y, Some(format!("{f:?}")));
                }
                dt = (h * 0.25).max(config.min_step);
            }
            Ok(err) if err > 1.0 => {
                stats.rejected += 1;
                if h <= config.min_step {
                    break finish(
                        TerminationReason::StepUnderflow,
                        t,
                        &y,
                        Some(format!("error estimate {err:e} at minimum step")),
                    );
                }
                dt = ctrl.reject(h, err).max(config.min_step);
            }
            Ok(err) => {
                stats.accepted += 1;
                if let Some(trigger) = detector.check(&out) {
                    let (h_hit, y_hit) =
                        localize(&mut stepper, &sys, &detector, &y, h, t, config, events, &mut stats);
                    t += h_hit;
                    y = y_hit;
                    samples.push(Sample {
                        t,
                        readings: readings(&space, &masses, &y),
                        y: y.clone(),
                    });
                    let reason = match trigger {
                        Trigger::PoleGeodesic => TerminationReason::DiameterOrPoleGeodesic,
                        Trigger::Singularity => {
                            let st = SystemState::from_flat(t, space, &masses, &y);
                            match classify(&st, events.companion_tol).global {
                                GlobalLabel::Antipodal => TerminationReason::Antipodal,
                                GlobalLabel::CollisionAntipodal => {
                                    TerminationReason::CollisionAntipodal
                                }
                                GlobalLabel::Hybrid => TerminationReason::Hybrid,
                                // companion_tol ≥ singularity_tol, so Clear cannot happen here
                                GlobalLabel::Collision | GlobalLabel::Clear => {
                                    TerminationReason::Collision
                                }
                            }
                        }
                    };
                    break finish(reason, t, &y, None);
                }
                t = if h == remaining { config.t_end } else { t + h };
                std::mem::swap(&mut y, &mut out);
                samples.push(Sample {
                    t,
                    readings: readings(&space, &masses, &y),
                    y: y.clone(),
                });
                detector.set_baseline(&y);

                let metric = detector.metric_value(&y);
                cap = match (prev_metric, metric) {
                    (Some(a), Some(b)) if b < a => events.step_cap_fraction * b * h / (a - b),
                    _ => f64::INFINITY,
                };
                prev_metric = metric;
                dt = ctrl.accept(h, err).min(config.max_step);
            }
        }
    };

    Ok(Trajectory {
        space,
        masses,
        samples,
        termination,
        stats,
    })
}

/// Bisects the step size on [0, h] for the earliest state at which an event fires.
#[allow(clippy::too_many_arguments)]
fn localize(
    stepper: &mut Dopri5,
    sys: &FullSystem,
    detector: &Detector,
    y0: &[f64],
    h: f64,
    t0: f64,
    config: &IntegratorConfig,
    events: &EventConfig,
    stats: &mut IntegrationStats,
) -> (f64, Vec<f64>) {
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_hi = vec![0.0; y0.len()];
    stepper
        .step(sys, y0, h, config.rtol, config.atol, &mut y_hi)
        .expect("step was just accepted");
    let mut trial = vec![0.0; y0.len()];
    let width = events.localization_tol * t0.abs().max(1.0);
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        stats.evaluations += 7;
        let fired = match stepper.step(sys, y0, mid, config.rtol, config.atol, &mut trial) {
            Ok(_) => detector.check(&trial).is_some(),
            Err(_) => true,
        };
        if fired {
            hi = mid;
            if detector.check(&trial).is_some() {
                std::mem::swap(&mut y_hi, &mut trial);
            }
        } else {
            lo = mid;
        }
    }
    (hi, y_hi)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub initial: f64,
    pub max_abs: f64,
    pub rms: f64,
}

impl Drift {
    fn of(series: impl Iterator<Item = f64> + Clone) -> Self {
        let mut it = series.clone();
        let initial = it.next().unwrap_or(0.0);
        let (mut max_abs, mut sum2, mut count) = (0.0f64, 0.0, 0usize);
        for v in series {
            let dev = v - initial;
            max_abs = max_abs.max(dev.abs());
            sum2 += dev * dev;
            count += 1;
        }
        Self {
            initial,
            max_abs,
            rms: if count > 0 {
                (sum2 / count as f64).sqrt()
            } else {
                0.0
            },
        }
    }

    /// |Δ| / (|initial| + 1).
    pub fn relative(&self) -> f64 {
        self.max_abs / (self.initial.abs() + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub samples: usize,
    pub energy: Drift,
    /// Drift of c (3-D ambient) or of the projected angular momentum (4-D).
    pub angular_momentum: Option<[Drift; 3]>,
    pub max_constraint_residual: f64,
    pub max_tangency_residual: f64,
}

impl DriftReport {
    pub fn max_angular_drift(&self) -> f64 {
        self.angular_momentum
            .map(|a| a.iter().map(|d| d.max_abs).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

pub fn drift_report(traj: &Trajectory) -> DriftReport {
    let s = traj.samples();
    let energy = Drift::of(s.iter().map(|x| x.readings.h));
    let angular = |pick: fn(&Readings) -> Option<[f64; 3]>| -> Option<[Drift; 3]> {
        pick(&s[0].readings)?;
        Some(std::array::from_fn(|k| {
            Drift::of(s.iter().map(move |x| pick(&x.readings).map_or(f64::NAN, |c| c[k])))
        }))
    };
    let angular_momentum = angular(|r| r.c).or_else(|| angular(|r| r.projected_c));
    DriftReport {
        samples: s.len(),
        energy,
        angular_momentum,
        max_constraint_residual: s
            .iter()
            .map(|x| x.readings.max_constraint_residual)
            .fold(0.0, f64::max),
        max_tangency_residual: s
            .iter()
            .map(|x| x.readings.max_tangency_residual)
            .fold(0.0, f64::max),
    }
}

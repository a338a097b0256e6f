//! Collision / antipodal taxonomy of the singular set, the Painlevé-type
//! monitor over finished trajectories, and pole-geodesic detection.
//!
//! For a pair (i, j) the signed product s_ij = κ q_i⊙q_j equals +1 on a
//! collision and −1 on an antipodal configuration (spheres only). The pair
//! metric d_ij = |s_ij² − 1| vanishes on either.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Metric, SystemState};
use crate::integrator::{TerminationReason, Trajectory};

/// Default classification tolerance on d_ij.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Default angular tolerance for pole-geodesic detection, radians.
pub const DEFAULT_EPS_ANGLE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingularityError {
    #[error("pole-geodesic configurations are only defined for positive curvature")]
    NegativeCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetric {
    pub i: usize,
    pub j: usize,
    /// κ q_i⊙q_j
    pub s: f64,
    /// |s² − 1|
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetricTable {
    n: usize,
    entries: Vec<PairMetric>,
}

impl PairMetricTable {
    pub fn entries(&self) -> &[PairMetric] {
        &self.entries
    }

    /// Symmetric lookup.
    pub fn get(&self, i: usize, j: usize) -> Option<&PairMetric> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b || b >= self.n {
            return None;
        }
        // row-major upper triangle without diagonal
        let idx = a * (2 * self.n - a - 1) / 2 + (b - a - 1);
        self.entries.get(idx)
    }

    pub fn min_d(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.d).reduce(f64::min)
    }
}

#[inline]
pub(crate) fn pair_s(m: &Metric, q: &[f64], i: usize, j: usize) -> f64 {
    let d = m.dim;
    m.kappa * m.dot(&q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d])
}

#[inline]
pub(crate) fn metric_of(s: f64) -> f64 {
    (s - 1.0).abs() * (s + 1.0).abs()
}

/// min over pairs of d_ij on flat positions; `None` for fewer than two bodies.
pub(crate) fn min_pair_metric_flat(m: &Metric, n: usize, q: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = metric_of(pair_s(m, q, i, j));
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

pub fn pair_metrics(state: &SystemState) -> PairMetricTable {
    let m = Metric::of_space(state.space());
    let q = state.flat_positions();
    let n = state.n();
    let mut entries = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s = pair_s(&m, &q, i, j);
            entries.push(PairMetric { i, j, s, d: metric_of(s) });
        }
    }
    PairMetricTable { n, entries }
}

pub fn min_pair_metric(state: &SystemState) -> Option<f64> {
    pair_metrics(state).min_d()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    Clear,
    NearCollision,
    NearAntipodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalLabel {
    Clear,
    Collision,
    Antipodal,
    CollisionAntipodal,
    /// Singular pairs of both kinds that share no body.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityClass {
    pub pairs: Vec<((usize, usize), PairLabel)>,
    pub global: GlobalLabel,
    /// Antipodal pairs without any collision on a sphere; such a state is
    /// not reachable by an actual solution.
    pub antipodal_alone_unreachable: bool,
}

impl ProximityClass {
    pub fn labelled(&self, label: PairLabel) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs
            .iter()
            .filter(move |(_, l)| *l == label)
            .map(|(p, _)| *p)
    }
}

pub fn classify(state: &SystemState, eps: f64) -> ProximityClass {
    assert!(eps > 0.0, "classification tolerance must be positive");
    let spherical = state.space().kappa() > 0.0;
    let pairs: Vec<_> = pair_metrics(state)
        .entries
        .iter()
        .map(|e| {
            let label = if e.d >= eps {
                PairLabel::Clear
            } else if e.s > 0.0 || !spherical {
                PairLabel::NearCollision
            } else {
                PairLabel::NearAntipodal
            };
            ((e.i, e.j), label)
        })
        .collect();

    let collisions: Vec<_> = pairs
        .iter()
        .filter(|(_, l)| *l == PairLabel::NearCollision)
        .map(|(p, _)| *p)
        .collect();
    let antipodes: Vec<_> = pairs
        .iter()
        .filter(|(_, l)| *l == PairLabel::NearAntipodal)
        .map(|(p, _)| *p)
        .collect();

    let shares_body = |a: (usize, usize), b: (usize, usize)| {
        a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1
    };
    let global = match (collisions.is_empty(), antipodes.is_empty()) {
        (true, true) => GlobalLabel::Clear,
        (false, true) => GlobalLabel::Collision,
        (true, false) => GlobalLabel::Antipodal,
        (false, false) => {
            let pattern = collisions
                .iter()
                .any(|c| antipodes.iter().any(|a| shares_body(*c, *a)));
            if pattern {
                GlobalLabel::CollisionAntipodal
            } else {
                GlobalLabel::Hybrid
            }
        }
    };
    ProximityClass {
        pairs,
        antipodal_alone_unreachable: spherical && global == GlobalLabel::Antipodal,
        global,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleGeodesicReport {
    /// Pairs lying on one geodesic through the pole.
    pub pairs: Vec<(usize, usize)>,
    /// Bodies sitting on the pole itself; collinear with everything.
    pub degenerate: Vec<usize>,
}

impl PoleGeodesicReport {
    pub fn is_clear(&self) -> bool {
        self.pairs.is_empty() && self.degenerate.is_empty()
    }
}

/// Sine of the angle between the pole-orthogonal projections of bodies i, j.
/// `None` when either projection is (numerically) at the origin.
#[inline]
pub(crate) fn projected_sine(dim: usize, q: &[f64], i: usize, j: usize) -> Option<f64> {
    let h = dim - 1;
    let a = &q[i * dim..i * dim + h];
    let b = &q[j * dim..j * dim + h];
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = q[i * dim + h].abs().max(q[j * dim + h].abs()).max(1.0);
    if na <= f64::EPSILON * scale || nb <= f64::EPSILON * scale {
        return None;
    }
    let mut w2 = 0.0;
    for k in 0..h {
        for l in k + 1..h {
            let w = a[k] * b[l] - a[l] * b[k];
            w2 += w * w;
        }
    }
    Some(w2.sqrt() / (na * nb))
}

pub(crate) fn pole_geodesic_flat(dim: usize, n: usize, q: &[f64], eps_angle: f64) -> PoleGeodesicReport {
    let threshold = eps_angle.sin();
    let mut pairs = Vec::new();
    let mut degenerate = Vec::new();
    for i in 0..n {
        let h = &q[i * dim..i * dim + dim - 1];
        let scale = q[i * dim + dim - 1].abs().max(1.0);
        if h.iter().map(|v| v * v).sum::<f64>().sqrt() <= f64::EPSILON * scale {
            degenerate.push(i);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if let Some(sine) = projected_sine(dim, q, i, j) {
                if sine <= threshold {
                    pairs.push((i, j));
                }
            }
        }
    }
    PoleGeodesicReport { pairs, degenerate }
}

/// Pairs whose projections onto the plane (hyperplane) orthogonal to the pole
/// axis are collinear with the origin within `eps_angle`.
pub fn pole_geodesic_detect(
    state: &SystemState,
    eps_angle: f64,
) -> Result<PoleGeodesicReport, SingularityError> {
    if state.space().kappa() <= 0.0 {
        return Err(SingularityError::NegativeCurvature);
    }
    Ok(pole_geodesic_flat(
        state.space().dim(),
        state.n(),
        &state.flat_positions(),
        eps_angle,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PainleveOptions {
    /// Fraction of accepted samples forming the trailing window.
    pub window_fraction: f64,
    /// A gap |s − 1| or |s + 1| at or below this at the final sample counts
    /// as an approach to collision or antipodal position.
    pub approach_tol: f64,
}

impl Default for PainleveOptions {
    fn default() -> Self {
        Self {
            window_fraction: 0.1,
            approach_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainleveVerdict {
    NotSingularityCandidate,
    /// Pair metric tends to zero through collisions only.
    SignatureConfirmed,
    /// A pair approaches s = −1 while another collides: the hypothesis of
    /// the sufficiency direction does not apply.
    CollisionAntipodalException,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainleveReport {
    pub verdict: PainleveVerdict,
    pub times: Vec<f64>,
    /// min over pairs of |s_ij − 1|
    pub collision_gap: Vec<f64>,
    /// min over pairs of |s_ij + 1|
    pub antipodal_gap: Vec<f64>,
    /// min over pairs of |s_ij² − 1|
    pub min_metric: Vec<f64>,
    pub window_start: usize,
    pub liminf_metric: f64,
    pub liminf_collision_gap: f64,
    pub liminf_antipodal_gap: f64,
    pub metric_monotone_in_window: bool,
    pub collision_approach: bool,
    pub antipodal_approach: bool,
}

pub fn painleve_monitor(traj: &Trajectory, opts: &PainleveOptions) -> PainleveReport {
    let n = traj.n();
    let m = Metric::of_space(traj.space());
    let spherical = traj.space().kappa() > 0.0;
    let len = traj.samples().len();
    let mut times = Vec::with_capacity(len);
    let mut collision_gap = Vec::with_capacity(len);
    let mut antipodal_gap = Vec::with_capacity(len);
    let mut min_metric = Vec::with_capacity(len);
    for sample in traj.samples() {
        let q = &sample.y[..n * m.dim];
        let (mut cg, mut ag, mut mm) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for i in 0..n {
            for j in i + 1..n {
                let s = pair_s(&m, q, i, j);
                cg = cg.min((s - 1.0).abs());
                ag = ag.min((s + 1.0).abs());
                mm = mm.min(metric_of(s));
            }
        }
        times.push(sample.t);
        collision_gap.push(cg);
        antipodal_gap.push(ag);
        min_metric.push(mm);
    }

    let window = ((len as f64 * opts.window_fraction).ceil() as usize).clamp(1.min(len), len);
    let window_start = len - window;
    let min_of = |v: &[f64]| v[window_start..].iter().copied().fold(f64::INFINITY, f64::min);
    let liminf_metric = min_of(&min_metric);
    let liminf_collision_gap = min_of(&collision_gap);
    let liminf_antipodal_gap = min_of(&antipodal_gap);
    let metric_monotone_in_window = min_metric[window_start..]
        .windows(2)
        .all(|w| w[1] <= w[0]);

    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::INFINITY);
    let collision_approach = n >= 2 && last(&collision_gap) <= opts.approach_tol;
    let antipodal_approach = n >= 2 && spherical && last(&antipodal_gap) <= opts.approach_tol;

    let singular_end = matches!(
        traj.termination().reason,
        TerminationReason::Collision
            | TerminationReason::Antipodal
            | TerminationReason::CollisionAntipodal
            | TerminationReason::Hybrid
            | TerminationReason::StepUnderflow
    );
    let verdict = if n < 2 || !singular_end {
        PainleveVerdict::NotSingularityCandidate
    } else if collision_approach && antipodal_approach {
        PainleveVerdict::CollisionAntipodalException
    } else if collision_approach && metric_monotone_in_window {
        PainleveVerdict::SignatureConfirmed
    } else {
        PainleveVerdict::Inconclusive
    };

    PainleveReport {
        verdict,
        times,
        collision_gap,
        antipodal_gap,
        min_metric,
        window_start,
        liminf_metric,
        liminf_collision_gap,
        liminf_antipodal_gap,
        metric_monotone_in_window,
        collision_approach,
        antipodal_approach,
    }
}

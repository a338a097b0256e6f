//! Side-by-side comparison of a full trajectory with integrations of the
//! projected fields started from its projected initial condition.

use serde::{Deserialize, Serialize};

use super::{orth_project, orth_rhs, pushforward_rhs, LiteralSystem, ProjectionError, PushforwardSystem};
use crate::integrator::{Driver, IntegratorConfig, Trajectory};
use crate::singularity::pole_geodesic_flat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivalenceOptions {
    /// Angular tolerance, radians, below which a pair counts as pole-geodesic.
    pub pole_geodesic_angle: f64,
    pub integrator: IntegratorConfig,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self {
            pole_geodesic_angle: 1e-3,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EquivalenceStatus {
    Completed,
    /// The full trajectory left the admissible region; only the prefix
    /// before `t` was compared.
    Aborted {
        t: f64,
        reason: String,
        pairs: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub status: EquivalenceStatus,
    pub samples_compared: usize,
    /// max |projected full − pushforward integration| over samples and components
    pub max_pushforward_deviation: f64,
    /// Same against the literal integration, up to its failure time if any.
    pub max_literal_deviation: f64,
    pub literal_failure: Option<String>,
    /// max |orth_rhs − pushforward_rhs| over the compared samples
    pub max_field_defect: f64,
    /// max |orth_rhs − pushforward_rhs| / |pushforward_rhs|
    pub max_relative_field_defect: f64,
    pub field_defect_samples: usize,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn equivalence_check(
    full: &Trajectory,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport, ProjectionError> {
    let kappa = full.space().kappa();
    if !(kappa > 0.0) {
        return Err(ProjectionError::NonPositiveCurvature);
    }
    opts.integrator
        .validate()
        .map_err(|e| ProjectionError::Unsupported(e.to_string()))?;
    let d = full.space().dim();
    let n = full.n();

    // Admissible prefix: open hemisphere, no pole-geodesic pair.
    let mut status = EquivalenceStatus::Completed;
    let mut projected = Vec::new();
    for (k, sample) in full.samples().iter().enumerate() {
        let st = full.state(k);
        let pg = pole_geodesic_flat(d, n, &sample.y[..n * d], opts.pole_geodesic_angle);
        if !pg.is_clear() {
            status = EquivalenceStatus::Aborted {
                t: sample.t,
                reason: "pole-geodesic configuration".into(),
                pairs: pg.pairs,
            };
            break;
        }
        match orth_project(&st) {
            Ok(p) => projected.push(p),
            Err(e) => {
                status = EquivalenceStatus::Aborted {
                    t: sample.t,
                    reason: e.to_string(),
                    pairs: Vec::new(),
                };
                break;
            }
        }
    }

    let mut rep = EquivalenceReport {
        status,
        samples_compared: projected.len(),
        max_pushforward_deviation: 0.0,
        max_literal_deviation: 0.0,
        literal_failure: None,
        max_field_defect: 0.0,
        max_relative_field_defect: 0.0,
        field_defect_samples: 0,
    };
    let Some(first) = projected.first() else {
        return Ok(rep);
    };
    let pd = first.dim();
    let masses = full.masses();

    let push = PushforwardSystem::new(kappa, pd, masses);
    let literal = LiteralSystem::new(kappa, pd, masses);
    let mut push_driver = Driver::new(first.as_flat().len(), &opts.integrator);
    let mut lit_driver = Driver::new(first.as_flat().len(), &opts.integrator);
    let (mut tp, mut yp) = (first.t, first.as_flat().to_vec());
    let (mut tl, mut yl) = (first.t, first.as_flat().to_vec());
    let mut literal_alive = true;

    for target in &projected {
        match push_driver.advance_to(&push, &mut tp, &mut yp, target.t) {
            Ok(()) => {
                rep.max_pushforward_deviation = rep
                    .max_pushforward_deviation
                    .max(max_abs_diff(&yp, target.as_flat()));
            }
            Err(e) => {
                rep.max_pushforward_deviation = f64::INFINITY;
                rep.status = EquivalenceStatus::Aborted {
                    t: tp,
                    reason: format!("pushforward integration: {e}"),
                    pairs: Vec::new(),
                };
                break;
            }
        }
        if literal_alive {
            match lit_driver.advance_to(&literal, &mut tl, &mut yl, target.t) {
                Ok(()) => {
                    rep.max_literal_deviation = rep
                        .max_literal_deviation
                        .max(max_abs_diff(&yl, target.as_flat()));
                }
                Err(e) => {
                    rep.literal_failure = Some(e.to_string());
                    literal_alive = false;
                }
            }
        }
        if let (Ok(a), Ok(b)) = (orth_rhs(target), pushforward_rhs(target)) {
            let defect = max_abs_diff(&a.dp, &b.dp);
            let scale = b.dp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            rep.max_field_defect = rep.max_field_defect.max(defect);
            if scale > 0.0 {
                rep.max_relative_field_defect = rep.max_relative_field_defect.max(defect / scale);
            }
            rep.field_defect_samples += 1;
        }
    }
    Ok(rep)
}

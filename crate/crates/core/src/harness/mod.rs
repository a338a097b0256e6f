//! Scenario files, runs, comparisons, re-diagnosis of stored runs, and
//! batch execution.

mod builtins;
mod output;

pub use builtins::{builtin, builtin_names, builtin_scenarios};
pub use output::{read_timeseries, timeseries_csv, RunArtifacts, Summary};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, SystemState};
use crate::geometry::{CurvatureSpace, EmbeddedVector, GeometryError, Rotation};
use crate::integrator::{
    integrate, EventConfig, IntegratorConfig, IntegratorError, TerminationReport,
    Trajectory,
};
use crate::projection::{
    equivalence_check, integrate_projected, orth_project, ProjectedField, ProjectionError, planarity_diagnose, sundman_scan, total_collision_diagnose,
    CollisionDiagnostics, EquivalenceOptions, EquivalenceReport, PlanarityOptions, PlanarityReport,
    SundmanScan, TotalCollisionOptions, TotalCollisionReport,
};
use crate::singularity::{painleve_monitor, PainleveOptions, PainleveVerdict};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("initial state: {0}")]
    State(#[from] DynamicsError),
    #[error("curvature space: {0}")]
    Geometry(#[from] GeometryError),
    #[error("integration setup: {0}")]
    Integrator(#[from] IntegratorError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Painleve,
    Equivalence,
    CollisionDiagnostics,
    Planarity,
}

impl Analysis {
    fn needs_projection(self) -> bool {
        !matches!(self, Analysis::Painleve)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Body {
    pub mass: f64,
    pub position: Vec<f64>,
    #[serde(default)]
    pub momentum: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kappa: f64,
    /// Manifold dimension: 2 (ambient R³ / Minkowski) or 3 (ambient R⁴).
    pub dim: usize,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub auto_renormalize: bool,
    /// Ambient point rotated onto the projection pole before integration (κ > 0).
    #[serde(default)]
    pub rotate_to_pole: Option<Vec<f64>>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub events: EventConfig,
    pub bodies: Vec<Body>,
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn space(&self) -> Result<CurvatureSpace, HarnessError> {
        if self.kappa == 0.0 {
            return Err(HarnessError::Config(
                "kappa = 0 (flat space) is not supported; use a nonzero curvature".into(),
            ));
        }
        if !(self.dim == 2 || self.dim == 3) {
            return Err(HarnessError::Config(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        Ok(CurvatureSpace::new(self.kappa, self.dim + 1)?)
    }

    /// Validates the scenario and builds its initial state. With
    /// auto-renormalization the returned scenario echoes the corrected bodies.
    pub fn resolve(&self) -> Result<(Scenario, SystemState), HarnessError> {
        let space = self.space()?;
        if self.kappa < 0.0 {
            if let Some(a) = self.analyses.iter().find(|a| a.needs_projection()) {
                return Err(HarnessError::Config(format!(
                    "analysis {a:?} needs positive curvature"
                )));
            }
        }
        if self.bodies.is_empty() {
            return Err(HarnessError::Config("no bodies".into()));
        }
        self.integrator.validate()?;
        self.events.validate()?;
        let amb = self.dim + 1;
        let vec = |v: &[f64], what: &str, i: usize| -> Result<EmbeddedVector, HarnessError> {
            if v.len() != amb {
                return Err(HarnessError::Config(format!(
                    "body {i}: {what} has {} components, expected {amb}",
                    v.len()
                )));
            }
            Ok(EmbeddedVector::from_slice(v)?)
        };
        let mut qs = Vec::new();
        let mut ps = Vec::new();
        for (i, b) in self.bodies.iter().enumerate() {
            qs.push(vec(&b.position, "position", i)?);
            ps.push(match &b.momentum {
                Some(p) => vec(p, "momentum", i)?,
                None => EmbeddedVector::zero(amb),
            });
        }
        if let Some(target) = &self.rotate_to_pole {
            if self.kappa < 0.0 {
                return Err(HarnessError::Config(
                    "rotate_to_pole needs positive curvature".into(),
                ));
            }
            let r = Rotation::to_pole(&vec(target, "rotate_to_pole", 0)?);
            qs.iter_mut().for_each(|q| *q = r.apply(q));
            ps.iter_mut().for_each(|p| *p = r.apply(p));
        }
        let masses = self.bodies.iter().map(|b| b.mass).collect();
        let mut state = SystemState::new(0.0, space, masses, qs, ps)?;
        if self.auto_renormalize {
            state = state.renormalized()?;
        }
        state.check_feasible(self.integrator.feasibility_tol)?;

        let mut echo = self.clone();
        if self.auto_renormalize || self.rotate_to_pole.is_some() {
            echo.rotate_to_pole = None;
            echo.auto_renormalize = false;
            for (b, (q, p)) in echo
                .bodies
                .iter_mut()
                .zip(state.positions().iter().zip(state.momenta()))
            {
                b.position = q.as_slice().to_vec();
                b.momentum = Some(p.as_slice().to_vec());
            }
        }
        for b in &mut echo.bodies {
            b.momentum.get_or_insert_with(|| vec![0.0; amb]);
        }
        Ok((echo, state))
    }
}

/// Overrides applied from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub auto_renormalize: bool,
}

impl Overrides {
    pub fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(t) = self.t_end {
            s.integrator.t_end = t;
        }
        if let Some(tol) = self.tol {
            s.integrator.rtol = tol;
            s.integrator.atol = tol;
        }
        s.auto_renormalize |= self.auto_renormalize;
        s
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let s = Scenario::from_toml_str(&text, path)?;
    let (echo, _) = s.resolve()?;
    Ok(echo)
}

/// A path to a scenario file, or the name of a builtin.
pub fn scenario_from_arg(arg: &str) -> Result<Scenario, HarnessError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(s) = builtin(arg) {
            return Ok(s);
        }
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Scenario::from_toml_str(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Report(T),
    Error(String),
}

impl<T> Outcome<T> {
    fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Outcome::Report(v),
            Err(e) => Outcome::Error(e.to_string()),
        }
    }

    pub fn report(&self) -> Option<&T> {
        match self {
            Outcome::Report(v) => Some(v),
            Outcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainleveSummary {
    pub verdict: PainleveVerdict,
    pub liminf_metric: f64,
    pub liminf_collision_gap: f64,
    pub liminf_antipodal_gap: f64,
    pub metric_monotone_in_window: bool,
    pub collision_approach: bool,
    pub antipodal_approach: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSummary {
    pub total_collision: TotalCollisionReport,
    /// Lower-bound scan along the projected full trajectory.
    pub sundman: SundmanScan,
    /// The literal projected system integrated from the projected initial condition.
    pub literal: LiteralRunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralRunSummary {
    pub samples: usize,
    pub final_time: f64,
    pub failure: Option<String>,
    pub inertia_min: f64,
    pub sundman: SundmanScan,
}

fn literal_run(traj: &Trajectory, integrator: &IntegratorConfig) -> Result<LiteralRunSummary, ProjectionError> {
    let init = orth_project(&traj.state(0))?;
    let cfg = IntegratorConfig {
        t_end: traj.termination().final_time,
        ..*integrator
    };
    let run = integrate_projected(&init, ProjectedField::Literal, &cfg);
    let diag = CollisionDiagnostics::from_states(&run.states, ProjectedField::Literal)?;
    Ok(LiteralRunSummary {
        samples: run.states.len(),
        final_time: run.states.last().map_or(init.t, |s| s.t),
        failure: run.failure,
        inertia_min: diag.inertia.iter().copied().fold(f64::INFINITY, f64::min),
        sundman: sundman_scan(&diag),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub painleve: Option<PainleveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<Outcome<EquivalenceReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision_diagnostics: Option<Outcome<CollisionSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planarity: Option<Outcome<PlanarityReport>>,
}

pub fn analyze(traj: &Trajectory, analyses: &[Analysis], integrator: &IntegratorConfig) -> AnalysisResults {
    let mut out = AnalysisResults::default();
    for a in analyses {
        match a {
            Analysis::Painleve => {
                let r = painleve_monitor(traj, &PainleveOptions::default());
                out.painleve = Some(PainleveSummary {
                    verdict: r.verdict,
                    liminf_metric: r.liminf_metric,
                    liminf_collision_gap: r.liminf_collision_gap,
                    liminf_antipodal_gap: r.liminf_antipodal_gap,
                    metric_monotone_in_window: r.metric_monotone_in_window,
                    collision_approach: r.collision_approach,
                    antipodal_approach: r.antipodal_approach,
                });
            }
            Analysis::Equivalence => {
                let opts = EquivalenceOptions {
                    integrator: *integrator,
                    ..Default::default()
                };
                out.equivalence = Some(Outcome::from_result(equivalence_check(traj, &opts)));
            }
            Analysis::CollisionDiagnostics => {
                let r = CollisionDiagnostics::from_trajectory(traj).and_then(|d| {
                    Ok(CollisionSummary {
                        total_collision: total_collision_diagnose(
                            traj,
                            &TotalCollisionOptions::default(),
                        ),
                        sundman: sundman_scan(&d),
                        literal: literal_run(traj, integrator)?,
                    })
                });
                out.collision_diagnostics = Some(Outcome::from_result(r));
            }
            Analysis::Planarity => {
                out.planarity = Some(Outcome::from_result(planarity_diagnose(
                    traj,
                    &PlanarityOptions::default(),
                )));
            }
        }
    }
    out
}

/// Integrates the scenario and runs its analyses. Singular terminations are
/// part of the result, not errors.
pub fn run(scenario: &Scenario) -> Result<RunArtifacts, HarnessError> {
    let (echo, state) = scenario.resolve()?;
    let traj = integrate(&state, &echo.integrator, &echo.events)?;
    let analyses = analyze(&traj, &echo.analyses, &echo.integrator);
    Ok(RunArtifacts::new(echo, traj, analyses))
}

/// Runs the full system and the projected systems side by side.
pub fn compare(scenario: &Scenario) -> Result<RunArtifacts, HarnessError> {
    if !(scenario.kappa > 0.0) {
        return Err(HarnessError::Config(
            "compare needs positive curvature".into(),
        ));
    }
    let mut s = scenario.clone();
    if !s.analyses.contains(&Analysis::Equivalence) {
        s.analyses.push(Analysis::Equivalence);
    }
    run(&s)
}

/// Re-runs every applicable analysis on a stored run directory.
pub fn diagnose(run_dir: &Path) -> Result<AnalysisResults, HarnessError> {
    let scen_path = run_dir.join(output::SCENARIO_FILE);
    let text = fs::read_to_string(&scen_path).map_err(io_err(&scen_path))?;
    let scenario = Scenario::from_toml_str(&text, &scen_path)?;
    let (_, init) = scenario.resolve()?;
    let sum_path = run_dir.join(output::SUMMARY_FILE);
    let sum_text = fs::read_to_string(&sum_path).map_err(io_err(&sum_path))?;
    // Only the termination record is read back: non-finite diagnostics are
    // stored as null and do not round-trip.
    let summary: serde_json::Value = serde_json::from_str(&sum_text)?;
    let termination: TerminationReport = serde_json::from_value(summary["termination"].clone())?;
    let csv_path = run_dir.join(output::TIMESERIES_FILE);
    let states = read_timeseries(&csv_path, &init)?;
    let traj = Trajectory::from_states(&states, termination)?;
    let mut analyses = vec![Analysis::Painleve];
    if scenario.kappa > 0.0 {
        analyses.push(Analysis::CollisionDiagnostics);
        analyses.push(Analysis::Equivalence);
        if scenario.dim == 3 && scenario.bodies.len() == 3 {
            analyses.push(Analysis::Planarity);
        }
    }
    Ok(analyze(&traj, &analyses, &scenario.integrator))
}

#[derive(Debug)]
pub struct BatchEntry {
    pub source: PathBuf,
    pub out_dir: PathBuf,
    pub result: Result<TerminationReport, HarnessError>,
}

/// Runs every `*.toml` scenario in `dir`, each into `out/<name>`.
pub fn batch(
    dir: &Path,
    out: &Path,
    jobs: Option<usize>,
    overrides: &Overrides,
) -> Result<Vec<BatchEntry>, HarnessError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let entries = pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let stem = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let out_dir = out.join(&stem);
                let result = (|| {
                    let s = overrides.apply(scenario_from_arg(&f.to_string_lossy())?);
                    let art = run(&s)?;
                    art.write(&out_dir)?;
                    Ok(art.summary.termination.clone())
                })();
                BatchEntry {
                    source: f.clone(),
                    out_dir,
                    result,
                }
            })
            .collect()
    });
    Ok(entries)
}

/// Where a run is written: `--out`, else the scenario's `output_dir`, else `runs/<name>`.
pub fn output_dir_for(scenario: &Scenario, out: Option<&Path>) -> PathBuf {
    match (out, &scenario.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => d.clone(),
        (None, None) => Path::new("runs").join(&scenario.name),
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, AnalysisResults, HarnessError, Scenario};
use crate::dynamics::SystemState;
use crate::geometry::EmbeddedVector;
use crate::integrator::{drift_report, DriftReport, IntegrationStats, TerminationReport, Trajectory};

pub(crate) const TIMESERIES_FILE: &str = "timeseries.csv";
pub(crate) const SUMMARY_FILE: &str = "summary.json";
pub(crate) const SCENARIO_FILE: &str = "scenario.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub termination: TerminationReport,
    pub samples: usize,
    pub stats: IntegrationStats,
    pub drift: DriftReport,
    pub analyses: AnalysisResults,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    /// Fully resolved scenario; re-running it reproduces the run.
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub summary: Summary,
}

impl RunArtifacts {
    pub(crate) fn new(scenario: Scenario, trajectory: Trajectory, analyses: AnalysisResults) -> Self {
        let summary = Summary {
            name: scenario.name.clone(),
            termination: trajectory.termination().clone(),
            samples: trajectory.samples().len(),
            stats: trajectory.stats,
            drift: drift_report(&trajectory),
            analyses,
        };
        Self {
            scenario,
            trajectory,
            summary,
        }
    }

    pub fn timeseries(&self) -> Result<String, HarnessError> {
        timeseries_csv(&self.trajectory)
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let put = |name: &str, body: String| -> Result<(), HarnessError> {
            let p = dir.join(name);
            fs::write(&p, body).map_err(io_err(&p))
        };
        put(TIMESERIES_FILE, self.timeseries()?)?;
        put(
            SUMMARY_FILE,
            serde_json::to_string_pretty(&self.summary)? + "\n",
        )?;
        put(SCENARIO_FILE, self.scenario.to_toml())?;
        Ok(())
    }
}

// `{:e}` prints the shortest digits that round-trip, so the CSV is exact.
fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Columns: t, positions, momenta, h, angular momentum (c, or the projected
/// one in 4-component spaces), I, min pair metric, residuals.
pub fn timeseries_csv(traj: &Trajectory) -> Result<String, HarnessError> {
    let n = traj.n();
    let d = traj.space().dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for kind in ["q", "p"] {
        for i in 0..n {
            for k in 0..d {
                header.push(format!("{kind}{i}_{k}"));
            }
        }
    }
    header.extend(
        [
            "h",
            "c_1",
            "c_2",
            "c_3",
            "inertia",
            "min_pair_metric",
            "max_constraint_residual",
            "max_tangency_residual",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for s in traj.samples() {
        let r = &s.readings;
        let mut row = Vec::with_capacity(header.len());
        row.push(num(s.t));
        row.extend(s.y.iter().map(|v| num(*v)));
        row.push(num(r.h));
        let c = r.c.or(r.projected_c);
        for k in 0..3 {
            row.push(opt(c.map(|c| c[k])));
        }
        row.push(opt(r.inertia));
        row.push(opt(r.min_pair_metric));
        row.push(num(r.max_constraint_residual));
        row.push(num(r.max_tangency_residual));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads the phase columns of a stored time series back into states.
pub fn read_timeseries(path: &Path, template: &SystemState) -> Result<Vec<SystemState>, HarnessError> {
    let n = template.n();
    let d = template.space().dim();
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64, HarnessError> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| HarnessError::Parse {
                    path: path.to_path_buf(),
                    message: format!("bad value in column {k}"),
                })
        };
        let t = field(0)?;
        let mut vecs = Vec::with_capacity(2 * n);
        for b in 0..2 * n {
            let comps = (0..d)
                .map(|k| field(1 + b * d + k))
                .collect::<Result<Vec<_>, _>>()?;
            vecs.push(EmbeddedVector::from_slice(&comps)?);
        }
        let momenta = vecs.split_off(n);
        out.push(SystemState::new(
            t,
            *template.space(),
            template.masses().to_vec(),
            vecs,
            momenta,
        )?);
    }
    Ok(out)
}

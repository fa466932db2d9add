use std::fmt::Write as _;
use std::time::Instant;

use super::{apply_update, OptimizerState, ParticleCloud, UpdateField};
use crate::error::{Error, Result};

/// Named metric values recorded at one iteration.
pub type MetricRow = Vec<(String, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub iterations: usize,
    /// Metrics are recorded at iteration 0, every `cadence` iterations, and at the last iteration.
    pub cadence: usize,
    /// Record elapsed wall-clock time; when off, `wall_ms` is written as 0 so
    /// reports are byte-reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub iteration: usize,
    pub wall_ms: f64,
    pub values: Vec<f64>,
}

/// Per-iteration metrics with a key/value header describing the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value_at(&self, iteration: usize, column: &str) -> Option<f64> {
        let idx = self.column_index(column)?;
        self.rows
            .iter()
            .find(|r| r.iteration == iteration)
            .map(|r| r.values[idx])
    }

    pub fn last_value(&self, column: &str) -> Option<f64> {
        let idx = self.column_index(column)?;
        self.rows.last().map(|r| r.values[idx])
    }

    /// `# key=value` header lines, a column header row, then one row per record.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("iteration,wall_ms");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.iteration, row.wall_ms);
            for v in &row.values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Synchronous particle loop.
///
/// Each iteration computes the field from the current cloud and applies it
/// to all particles at once. `metrics` is called on the cloud at every
/// recorded iteration; the engine appends `mean_step_norm` and, on sphere
/// manifolds, the running `clipped_steps` count.
pub fn run<F, M>(
    initial: ParticleCloud,
    opt: &mut OptimizerState,
    options: RunOptions,
    mut field: F,
    mut metrics: M,
) -> Result<(ParticleCloud, RunReport)>
where
    F: FnMut(usize, &ParticleCloud) -> Result<UpdateField>,
    M: FnMut(&ParticleCloud) -> Result<MetricRow>,
{
    if options.cadence == 0 {
        return Err(Error::InvalidArgument("metric cadence must be >= 1".into()));
    }
    let spherical = !initial.manifold().is_euclidean();
    let start = Instant::now();
    let mut report = RunReport::default();
    let mut cloud = initial;

    let mut record =
        |iteration: usize, cloud: &ParticleCloud, opt: &OptimizerState, report: &mut RunReport| -> Result<()> {
            let mut row = metrics(cloud).map_err(|e| e.at_iteration(iteration))?;
            row.push((
                "mean_step_norm".into(),
                if iteration == 0 { 0.0 } else { opt.last_mean_step() },
            ));
            if spherical {
                row.push(("clipped_steps".into(), opt.clipped_steps() as f64));
            }
            if report.columns.is_empty() {
                report.columns = row.iter().map(|(k, _)| k.clone()).collect();
            } else if report.columns.len() != row.len() || report.columns.iter().zip(&row).any(|(c, (k, _))| c != k) {
                return Err(Error::InvalidArgument(format!(
                    "metric columns changed at iteration {iteration}"
                )));
            }
            let wall_ms = if options.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            report.rows.push(ReportRow {
                iteration,
                wall_ms,
                values: row.into_iter().map(|(_, v)| v).collect(),
            });
            Ok(())
        };

    record(0, &cloud, opt, &mut report)?;
    for iteration in 1..=options.iterations {
        let update = field(iteration, &cloud).map_err(|e| e.at_iteration(iteration))?;
        cloud = apply_update(&cloud, &update, opt).map_err(|e| e.at_iteration(iteration))?;
        if iteration % options.cadence == 0 || iteration == options.iterations {
            record(iteration, &cloud, opt, &mut report)?;
        }
    }
    Ok((cloud, report))
}

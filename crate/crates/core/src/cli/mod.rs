//! Experiment subcommands behind the `qdc` binary.
//!
//! Every command builds and validates all of its inputs first, computes everything in
//! memory, and only then touches the output directory. A config error therefore never
//! leaves files behind.

mod args;
pub mod config;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{classify, steady_sy, steady_sz, Label};
use crate::collision::{evolve_to_steady, linear_grid, magnetization_sweep};
use crate::trainer::{cost_at, gd_train, TrainEvent, TrainOutcome, TrainStatus, TrainableParam};
use crate::QdcError;

pub use args::{run, Cli};
use config::{mode_name, phase_name};
pub use config::{AxisRange, ExperimentConfig, ReservoirEntry, SurfaceGrid};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<QdcError> for CliError {
    fn from(e: QdcError) -> Self {
        match e {
            QdcError::Config(m) | QdcError::Dimension(m) => CliError::Config(m),
            QdcError::Contract(m) | QdcError::Undefined(m) => CliError::Numerical(m),
        }
    }
}

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub param: Option<TrainableParam>,
    pub etas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub require_converged: bool,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Fixed-width scientific notation, 16 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.15e}")
}

/// Label read off a simulated `⟨σz⟩`. Values within `resolution` of the boundary are
/// indistinguishable from it and fall on the `≥ 0` side.
pub fn readout_label(sz: f64, resolution: f64) -> Label {
    if sz.abs() <= resolution {
        Label::Zero
    } else {
        classify(sz)
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn write_outputs(out_dir: &Path, files: &[(String, Vec<u8>)]) -> CliResult<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    for (name, bytes) in files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

/// Angles are reported in degrees, couplings as they are.
fn display_param(param: TrainableParam, x: f64) -> f64 {
    match param {
        TrainableParam::CouplingG => x,
        TrainableParam::Theta | TrainableParam::Phi => x.to_degrees(),
    }
}

fn internal_param(param: TrainableParam, x: f64) -> f64 {
    match param {
        TrainableParam::CouplingG => x,
        TrainableParam::Theta | TrainableParam::Phi => x.to_radians(),
    }
}

/// Steady `⟨σz⟩` against the coupling offset `Δg/g`: `fig1.csv`.
pub fn cmd_fig1(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<()> {
    let base = cfg.sweep_classifier()?;
    let settings = cfg.collision_settings(opts.seed)?;
    let points = cfg.fig1_points();
    if points < 2 {
        return Err(CliError::Config(format!("fig1.points must be at least 2, got {points}")));
    }
    let g = cfg.fig1_total_coupling();
    let grid = linear_grid(-0.5, 0.5, points);

    let sweep = magnetization_sweep(g, &grid, &base, &settings)?;
    let mut rows = Vec::with_capacity(sweep.len());
    for p in &sweep {
        let d = p.delta_g_fraction;
        let couplings = [(0.5 * g - d * g).max(0.0), (0.5 * g + d * g).max(0.0)];
        let analytic = steady_sz(base.with_couplings(&couplings)?.reservoirs())?;
        rows.push(vec![
            fmt_num(d),
            fmt_num(p.steady_sz),
            fmt_num(analytic),
            p.collisions_used.to_string(),
            p.converged.to_string(),
        ]);
    }
    let csv = csv_bytes(
        &["delta_g_fraction", "steady_sz_simulated", "steady_sz_analytic", "collisions_used", "converged"],
        rows,
    )?;
    write_outputs(out_dir, &[("fig1.csv".into(), csv)])?;

    let stalled = sweep.iter().filter(|p| !p.converged).count();
    if opts.require_converged && stalled > 0 {
        return Err(CliError::Numerical(format!(
            "{stalled} of {} sweep points did not reach steady_tol within {} collisions",
            sweep.len(),
            settings.max_collisions
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainRunSummary<'a> {
    eta: f64,
    csv: String,
    status: &'static str,
    final_cost: f64,
    final_actual: f64,
    episodes: usize,
    collisions_used: Option<usize>,
    cost_increases: usize,
    overshoot: bool,
    monotone: bool,
    events: &'a [TrainEvent],
}

impl<'a> TrainRunSummary<'a> {
    fn new(outcome: &'a TrainOutcome, eta: f64, csv: String) -> Self {
        let last = outcome.last();
        Self {
            eta,
            csv,
            status: outcome.status.as_str(),
            final_cost: last.cost,
            final_actual: last.actual,
            episodes: last.episode,
            collisions_used: None,
            cost_increases: outcome.cost_increases,
            overshoot: outcome.overshoot(),
            monotone: outcome.is_monotone(),
            events: &outcome.events,
        }
    }
}

#[derive(Debug, Serialize)]
struct TrainSummary<'a> {
    param: &'static str,
    desired: f64,
    runs: Vec<TrainRunSummary<'a>>,
}

fn trace_rows(outcome: &TrainOutcome) -> Vec<Vec<String>> {
    outcome
        .records
        .iter()
        .map(|rec| {
            let mut row = vec![rec.episode.to_string()];
            row.extend(rec.params.iter().map(|&p| fmt_num(display_param(outcome.param, p))));
            row.push(fmt_num(rec.actual));
            row.push(fmt_num(rec.cost));
            row
        })
        .collect()
}

/// Gradient descent on one parameter family, one run per learning rate.
pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<()> {
    let classifier = cfg.classifier()?;
    let param = cfg.train_param(opts.param)?;
    let etas = cfg.etas(opts.etas.as_deref())?;
    let settings = etas
        .iter()
        .map(|&eta| cfg.train_settings(eta))
        .collect::<crate::Result<Vec<_>>>()?;

    let outcomes = settings
        .par_iter()
        .map(|s| gd_train(&classifier, param, s))
        .collect::<crate::Result<Vec<_>>>()?;

    let n = classifier.reservoirs().len();
    let header: Vec<String> = std::iter::once("episode".to_string())
        .chain((1..=n).map(|i| format!("param_{i}")))
        .chain(["actual".to_string(), "cost".to_string()])
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut files = Vec::with_capacity(outcomes.len() + 1);
    let mut runs = Vec::with_capacity(outcomes.len());
    for (k, (outcome, s)) in outcomes.iter().zip(&settings).enumerate() {
        let name = format!("train_{}_eta{}.csv", param.name(), k + 1);
        files.push((name.clone(), csv_bytes(&header, trace_rows(outcome))?));
        runs.push(TrainRunSummary::new(outcome, s.eta, name));
    }
    let summary = TrainSummary {
        param: param.name(),
        desired: settings[0].desired,
        runs,
    };
    files.push((format!("train_{}_summary.json", param.name()), json_bytes(&summary)?));
    write_outputs(out_dir, &files)?;

    let unconverged: Vec<String> = outcomes
        .iter()
        .zip(&settings)
        .filter(|(o, _)| o.status != TrainStatus::Converged)
        .map(|(o, s)| format!("eta={} {}", s.eta, o.status.as_str()))
        .collect();
    if opts.require_converged && !unconverged.is_empty() {
        return Err(CliError::Numerical(format!("runs did not converge: {}", unconverged.join(", "))));
    }
    Ok(())
}

/// Cost over a two-parameter grid plus the descent path of the first configured run.
pub fn cmd_surface(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<()> {
    let classifier = cfg.classifier()?;
    if classifier.reservoirs().len() != 2 {
        return Err(CliError::Config(format!(
            "surface needs exactly 2 reservoirs, got {}",
            classifier.reservoirs().len()
        )));
    }
    let grid = cfg.surface_grid(opts.param)?;
    let eta = cfg.etas(opts.etas.as_deref())?[0];
    let settings = cfg.train_settings(eta)?;
    let param = grid.param;

    let xs = grid.axis1.values();
    let ys = grid.axis2.values();
    let rows: Vec<Vec<Vec<String>>> = xs
        .par_iter()
        .map(|&a| {
            ys.iter()
                .map(|&b| {
                    let values = [internal_param(param, a), internal_param(param, b)];
                    // undefined points (both couplings zero) are written as NaN
                    let c = cost_at(&classifier, param, settings.desired, &values).unwrap_or(f64::NAN);
                    vec![fmt_num(a), fmt_num(b), fmt_num(c)]
                })
                .collect()
        })
        .collect();
    let surface = csv_bytes(&["axis1", "axis2", "cost"], rows.into_iter().flatten())?;

    let outcome = gd_train(&classifier, param, &settings)?;
    let path_rows = outcome.records.iter().map(|rec| {
        vec![
            rec.episode.to_string(),
            fmt_num(display_param(param, rec.params[0])),
            fmt_num(display_param(param, rec.params[1])),
            fmt_num(rec.cost),
        ]
    });
    let trajectory = csv_bytes(&["episode", "axis1", "axis2", "cost"], path_rows)?;
    let path_name = format!("surface_{}_trajectory.csv", param.name());
    let summary = TrainSummary {
        param: param.name(),
        desired: settings.desired,
        runs: vec![TrainRunSummary::new(&outcome, eta, path_name.clone())],
    };
    write_outputs(
        out_dir,
        &[
            (format!("surface_{}.csv", param.name()), surface),
            (path_name, trajectory),
            (format!("surface_{}_summary.json", param.name()), json_bytes(&summary)?),
        ],
    )?;
    if opts.require_converged && outcome.status != TrainStatus::Converged {
        return Err(CliError::Numerical(format!(
            "descent path ended {}",
            outcome.status.as_str()
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    status: &'static str,
    final_cost: Option<f64>,
    final_actual: f64,
    episodes: Option<usize>,
    collisions_used: usize,
    converged: bool,
    sz: f64,
    sy: f64,
    decision: u8,
    readout_resolution: f64,
    analytic_sz: Option<f64>,
    analytic_sy: Option<f64>,
    mode: &'static str,
    phase: &'static str,
    seed: u64,
}

/// Repeated collisions from the configured target state to the steady state.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> CliResult<()> {
    let classifier = cfg.classifier()?;
    let settings = cfg.collision_settings(opts.seed)?;
    let run = evolve_to_steady(&classifier, &settings)?;

    let rows = run.trajectory.samples.iter().map(|s| {
        vec![
            s.collision.to_string(),
            fmt_num(s.sz),
            fmt_num(s.sy),
            fmt_num(s.trace_distance_step),
        ]
    });
    let trajectory = csv_bytes(&["collision", "sz", "sy", "trace_distance_step"], rows)?;

    // the stop rule bounds the trace distance to the fixed point, so ⟨σz⟩ is known to 2·tol
    let resolution = 2.0 * settings.steady_tol;
    let sz = run.sz();
    let summary = SimulateSummary {
        status: if run.converged { "converged" } else { "max_collisions" },
        final_cost: None,
        final_actual: sz,
        episodes: None,
        collisions_used: run.collisions_used,
        converged: run.converged,
        sz,
        sy: run.sy(),
        decision: readout_label(sz, resolution).as_u8(),
        readout_resolution: resolution,
        analytic_sz: steady_sz(classifier.reservoirs()).ok(),
        analytic_sy: steady_sy(&classifier).ok(),
        mode: mode_name(settings.mode),
        phase: phase_name(settings.phase),
        seed: settings.seed,
    };
    write_outputs(
        out_dir,
        &[
            ("simulate_trajectory.csv".into(), trajectory),
            ("simulate_summary.json".into(), json_bytes(&summary)?),
        ],
    )?;
    if opts.require_converged && !run.converged {
        return Err(CliError::Numerical(format!(
            "no steady state within {} collisions",
            settings.max_collisions
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_sixteen_digits() {
        assert_eq!(fmt_num(0.4), "4.000000000000000e-1");
        assert_eq!(fmt_num(-0.149694529297417), "-1.496945292974170e-1");
        assert_eq!(fmt_num(0.0), "0.000000000000000e0");
    }

    #[test]
    fn readout_snaps_to_boundary() {
        assert_eq!(readout_label(-1e-14, 2e-9), Label::Zero);
        assert_eq!(readout_label(-1e-3, 2e-9), Label::One);
        assert_eq!(readout_label(0.5, 2e-9), Label::Zero);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(QdcError::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(QdcError::Dimension("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(QdcError::Undefined("x".into())).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 4);
    }
}

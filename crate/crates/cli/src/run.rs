//! Experiment execution and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qthermo_core::correlations::{maximize_classical_correlations, SearchSettings};
use qthermo_core::engine::{reversibility_profile, run_isothermal_extraction, run_joint_stroke, TrajectoryReport};
use qthermo_core::feedback::{
    decorrelation_target, discord_stroke_work, discord_work_deficit, joint_extractable_work, net_measurement_gain,
    optimal_feedback_gain, total_feedback_budget, FeedbackScenario, WorkLedger,
};
use qthermo_core::thermo::{ergotropy_vs_isothermal, isothermal_extractable_work};
use qthermo_core::{Density, Hermitian, ThermalContext};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig, Setup};
use crate::emit::{emit_csv, emit_svg, Cell, EmitError, Table};

pub const ALGEBRAIC_TOL: f64 = 1e-9;
pub const ERGOTROPY_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub point: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub library_version: String,
    pub wall_time_seconds: f64,
    pub identities: Vec<IdentityCheck>,
    pub errors: Vec<String>,
    pub all_passed: bool,
    pub files: Vec<String>,
}

pub struct Plot {
    pub points: Vec<(f64, f64)>,
    pub x_label: String,
    pub y_label: String,
}

pub struct RunOutput {
    pub manifest: RunManifest,
    pub table: Table,
    pub plot: Option<Plot>,
}

#[derive(Default)]
struct PointResult {
    rows: Vec<Vec<Cell>>,
    checks: Vec<IdentityCheck>,
    error: Option<String>,
}

#[derive(Clone, Copy)]
struct Point {
    index: usize,
    beta: f64,
    n: usize,
}

impl Point {
    fn label(&self, with_n: bool) -> String {
        if with_n {
            format!("beta={},N={}", self.beta, self.n)
        } else {
            format!("beta={}", self.beta)
        }
    }
}

/// Per-point optimizer seed.
fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

struct Checks<'a> {
    point: &'a str,
    out: Vec<IdentityCheck>,
}

impl<'a> Checks<'a> {
    fn new(point: &'a str) -> Self {
        Checks { point, out: Vec::new() }
    }

    fn add(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.out.push(IdentityCheck {
            name: name.to_string(),
            point: self.point.to_string(),
            residual,
            tolerance,
            passed: residual.abs() <= tolerance,
        });
    }

    fn ledger(&mut self, group: &str, ledger: &WorkLedger) {
        for r in &ledger.residuals {
            self.add(&format!("{group}: {}", r.name), r.value, r.tolerance);
        }
    }
}

fn value(ledger: &WorkLedger, label: &str) -> f64 {
    ledger.value(label).unwrap_or(f64::NAN)
}

/// Regularized kernels shift energies by `O(alpha ln 1/alpha)` per kernel
/// dimension; one-sided dissipation checks allow for that.
fn dissipation_slack(dim: usize, alpha: f64) -> f64 {
    ALGEBRAIC_TOL + dim as f64 * alpha * alpha.ln().abs()
}

/// The single-system experiments act on `rho_S` (the whole state when
/// `d_A = 1`) with `H_S`.
fn single_system(setup: &Setup) -> (Density, Hermitian) {
    (setup.rho.marginal_s(), setup.h_s.clone())
}

type PointOutcome = Result<(Vec<Vec<Cell>>, Vec<IdentityCheck>), qthermo_core::Error>;

fn identities_point(cfg: &ExperimentConfig, setup: &Setup, p: Point, ctx: &ThermalContext) -> PointOutcome {
    let label = p.label(false);
    let mut checks = Checks::new(&label);
    let settings = SearchSettings::with_seed(point_seed(cfg.seed, p.index));
    let (rho, h_s, h_a) = (&setup.rho, &setup.h_s, &setup.h_a);
    let h_sa = Hermitian::local_sum(h_s, h_a);

    for (name, state, h) in [
        ("isothermal dual form (S)", rho.marginal_s(), h_s),
        ("isothermal dual form (A)", rho.marginal_a(), h_a),
        ("isothermal dual form (SA)", rho.state().clone(), &h_sa),
    ] {
        checks.add(
            name,
            isothermal_extractable_work(&state, h, ctx)?.residual(),
            ALGEBRAIC_TOL,
        );
    }
    let (gain, _) = optimal_feedback_gain(rho, h_s, h_a, ctx, &settings)?;
    checks.ledger("feedback gain", &gain);
    checks.ledger("joint work", &joint_extractable_work(rho, h_s, h_a, ctx)?);
    let (scenario, report) = FeedbackScenario::optimal(rho.clone(), h_s.clone(), h_a.clone(), *ctx, &settings)?;
    checks.ledger("discord deficit", &discord_work_deficit(&scenario, &report)?);
    checks.ledger("net measurement gain", &net_measurement_gain(&scenario, &report)?);
    checks.ledger("discord stroke", &discord_stroke_work(rho, h_s, h_a, ctx, &report)?);
    checks.ledger("total budget", &total_feedback_budget(rho, h_s, h_a, ctx, &settings)?);

    let rows = checks
        .out
        .iter()
        .map(|c| {
            vec![
                Cell::Real(p.beta),
                Cell::Text(c.name.clone()),
                Cell::Real(c.residual),
                Cell::Real(c.tolerance),
                Cell::Bool(c.passed),
            ]
        })
        .collect();
    Ok((rows, checks.out))
}

fn budget_point(cfg: &ExperimentConfig, setup: &Setup, p: Point, ctx: &ThermalContext) -> PointOutcome {
    let label = p.label(false);
    let mut checks = Checks::new(&label);
    let settings = SearchSettings::with_seed(point_seed(cfg.seed, p.index));
    let budget = total_feedback_budget(&setup.rho, &setup.h_s, &setup.h_a, ctx, &settings)?;
    let joint = joint_extractable_work(&setup.rho, &setup.h_s, &setup.h_a, ctx)?;
    checks.ledger("total budget", &budget);
    let row = vec![
        Cell::Real(p.beta),
        Cell::Real(value(&joint, "W_S")),
        Cell::Real(value(&joint, "W_A")),
        Cell::Real(value(&joint, "kT*I")),
        Cell::Real(value(&budget, "kT*S_A")),
        Cell::Real(value(&budget, "kT*D")),
        Cell::Real(value(&budget, "W_SA(rho')")),
        Cell::Real(value(&budget, "net(rho')")),
        Cell::Real(value(&budget, "assembled")),
        Cell::Real(value(&budget, "closed_form")),
        Cell::Real(value(&budget, "stepwise")),
    ];
    Ok((vec![row], checks.out))
}

fn stroke_point(cfg: &ExperimentConfig, setup: &Setup, p: Point, ctx: &ThermalContext) -> PointOutcome {
    let label = p.label(true);
    let mut checks = Checks::new(&label);
    let settings = SearchSettings::with_seed(point_seed(cfg.seed, p.index));
    let report = maximize_classical_correlations(&setup.rho, &settings)?;
    let ledger = discord_stroke_work(&setup.rho, &setup.h_s, &setup.h_a, ctx, &report)?;
    checks.ledger("discord stroke", &ledger);
    let target = decorrelation_target(&setup.rho, &report.optimal_measurement)?;
    let traj = run_joint_stroke(&setup.rho, &target, &setup.h_s, &setup.h_a, p.n, ctx, setup.reg)?;
    check_trajectory(&mut checks, &traj, setup.rho.state().dim(), setup.reg.alpha());
    let row = vec![
        Cell::Real(p.beta),
        Cell::Int(p.n as i64),
        Cell::Real(value(&ledger, "kT*D")),
        Cell::Real(value(&ledger, "stroke")),
        Cell::Real(traj.total_work_extracted),
        Cell::Real(traj.dissipation),
        Cell::Real(traj.dissipation * p.n as f64),
    ];
    Ok((vec![row], checks.out))
}

fn check_trajectory(checks: &mut Checks, traj: &TrajectoryReport, dim: usize, alpha: f64) {
    let sum: f64 = traj.records.iter().map(|r| r.quench_work).sum();
    checks.add("trajectory totals", traj.total_work_extracted + sum, ALGEBRAIC_TOL);
    checks.add(
        "dissipation >= 0",
        traj.dissipation.min(0.0),
        dissipation_slack(dim, alpha),
    );
}

fn sweep_point(_cfg: &ExperimentConfig, setup: &Setup, p: Point, ctx: &ThermalContext) -> PointOutcome {
    let label = p.label(true);
    let mut checks = Checks::new(&label);
    let (rho, h) = single_system(setup);
    checks.add(
        "isothermal dual form",
        isothermal_extractable_work(&rho, &h, ctx)?.residual(),
        ALGEBRAIC_TOL,
    );
    let traj = run_isothermal_extraction(&rho, &h, p.n, setup.map, ctx, setup.reg)?;
    check_trajectory(&mut checks, &traj, rho.dim(), setup.reg.alpha());
    let (max_res, sum_res) = reversibility_profile(&traj);
    let row = vec![
        Cell::Real(p.beta),
        Cell::Int(p.n as i64),
        Cell::Real(traj.total_work_extracted),
        Cell::Real(traj.ideal_work),
        Cell::Real(traj.dissipation),
        Cell::Real(traj.dissipation * p.n as f64),
        Cell::Real(max_res),
        Cell::Real(sum_res),
    ];
    Ok((vec![row], checks.out))
}

fn ergotropy_point(_cfg: &ExperimentConfig, setup: &Setup, p: Point, ctx: &ThermalContext) -> PointOutcome {
    let label = p.label(false);
    let mut checks = Checks::new(&label);
    let (rho, h) = single_system(setup);
    let cmp = ergotropy_vs_isothermal(&rho, &h, ctx)?;
    checks.add("gap - kT*D(matched||Gibbs)", cmp.residual(), ERGOTROPY_GAP_TOL);
    checks.add("gap >= 0", cmp.gap.min(0.0), ALGEBRAIC_TOL);
    let row = vec![
        Cell::Real(p.beta),
        Cell::Real(cmp.beta_star),
        Cell::Real(cmp.w_beta.value),
        Cell::Real(cmp.w_max.value),
        Cell::Real(cmp.gap),
        Cell::Real(cmp.gap_relative_entropy),
    ];
    Ok((vec![row], checks.out))
}

struct Layout {
    header: &'static [&'static str],
    uses_n: bool,
    eval: fn(&ExperimentConfig, &Setup, Point, &ThermalContext) -> PointOutcome,
}

fn layout(e: Experiment) -> Layout {
    match e {
        Experiment::Identities => Layout {
            header: &["beta", "identity", "residual", "tolerance", "passed"],
            uses_n: false,
            eval: identities_point,
        },
        Experiment::FeedbackBudget => Layout {
            header: &[
                "beta",
                "W_S",
                "W_A",
                "kT_I",
                "kT_S_A",
                "kT_D",
                "W_SA_target",
                "net_target",
                "assembled",
                "closed_form",
                "stepwise",
            ],
            uses_n: false,
            eval: budget_point,
        },
        Experiment::DiscordStroke => Layout {
            header: &[
                "beta",
                "N",
                "kT_D",
                "stroke_ideal",
                "extracted",
                "dissipation",
                "dissipation_times_N",
            ],
            uses_n: true,
            eval: stroke_point,
        },
        Experiment::IsothermalSweep => Layout {
            header: &[
                "beta",
                "N",
                "extracted",
                "ideal",
                "dissipation",
                "dissipation_times_N",
                "max_residual",
                "sum_residual",
            ],
            uses_n: true,
            eval: sweep_point,
        },
        Experiment::ErgotropyCompare => Layout {
            header: &["beta", "beta_star", "w_beta", "w_max", "gap", "gap_relative_entropy"],
            uses_n: false,
            eval: ergotropy_point,
        },
    }
}

fn plot_for(e: Experiment, table: &Table, cfg: &ExperimentConfig) -> Option<Plot> {
    let (x, y) = match e {
        Experiment::Identities => return None,
        Experiment::FeedbackBudget => ("beta", "closed_form"),
        Experiment::DiscordStroke | Experiment::IsothermalSweep if cfg.n.len() > 1 => ("N", "dissipation"),
        Experiment::DiscordStroke | Experiment::IsothermalSweep => ("beta", "dissipation"),
        Experiment::ErgotropyCompare => ("beta", "gap"),
    };
    let xs = table.column(x)?;
    let ys = table.column(y)?;
    if xs.len() < 2 {
        return None;
    }
    Some(Plot {
        points: xs.into_iter().zip(ys).collect(),
        x_label: x.to_string(),
        y_label: y.to_string(),
    })
}

/// Evaluates every sweep point. Points run concurrently; output order
/// follows the sweep order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let setup = cfg.setup()?;
    let lay = layout(cfg.experiment);
    let ns: &[usize] = if lay.uses_n { &cfg.n } else { &cfg.n[..1] };
    let points: Vec<Point> = cfg
        .beta
        .iter()
        .flat_map(|&beta| ns.iter().map(move |&n| (beta, n)))
        .enumerate()
        .map(|(index, (beta, n))| Point { index, beta, n })
        .collect();

    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&p| {
            let outcome = cfg
                .context(p.beta)
                .map_err(|e| e.to_string())
                .and_then(|ctx| (lay.eval)(cfg, &setup, p, &ctx).map_err(|e| e.to_string()));
            match outcome {
                Ok((rows, checks)) => PointResult {
                    rows,
                    checks,
                    error: None,
                },
                Err(e) => PointResult {
                    error: Some(format!("{}: {e}", p.label(lay.uses_n))),
                    ..PointResult::default()
                },
            }
        })
        .collect();

    let mut table = Table::new(lay.header);
    let mut identities = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        table.rows.extend(r.rows);
        identities.extend(r.checks);
        errors.extend(r.error);
    }
    let all_passed = errors.is_empty() && identities.iter().all(|c| c.passed);
    let plot = plot_for(cfg.experiment, &table, cfg);
    let manifest = RunManifest {
        config: cfg.clone(),
        library_version: qthermo_core::VERSION.to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        identities,
        errors,
        all_passed,
        files: Vec::new(),
    };
    Ok(RunOutput { manifest, table, plot })
}

/// Writes `results.csv`, `plot.svg` (sweeps only) and `manifest.json`.
pub fn write_outputs(out: &mut RunOutput, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if !out.table.rows.is_empty() {
        let path = dir.join("results.csv");
        emit_csv(&path, &out.table)?;
        written.push(path);
    }
    if let Some(plot) = &out.plot {
        let path = dir.join("plot.svg");
        emit_svg(&path, &plot.points, &plot.x_label, &plot.y_label)?;
        written.push(path);
    }
    let manifest_path = dir.join("manifest.json");
    written.push(manifest_path.clone());
    out.manifest.files = written
        .iter()
        .map(|p| p.file_name().expect("file path").to_string_lossy().into_owned())
        .collect();
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&out.manifest)? + "\n")?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn run(text: &str) -> RunOutput {
        run_experiment(&load_config(text).unwrap()).unwrap()
    }

    #[test]
    fn bell_identities_all_pass() {
        let out = run(r#"{"experiment":"identities","state":{"name":"bell"},"beta":1.0}"#);
        assert!(out.manifest.errors.is_empty());
        for c in &out.manifest.identities {
            assert!(c.passed, "{} residual {}", c.name, c.residual);
        }
        assert!(out.manifest.all_passed);
        let mut names: Vec<&str> = out.manifest.identities.iter().map(|c| c.name.as_str()).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        assert_eq!(out.table.rows.len(), total);
    }

    #[test]
    fn isothermal_sweep_rows() {
        let out = run(
            r#"{"experiment":"isothermal_sweep","state":{"name":"explicit","diag":[0.3,0.7]},
                "beta":1.0,"N":[250,500,1000,2000],"h_s":{"diag":[0,1]}}"#,
        );
        assert!(out.manifest.all_passed);
        let scaled = out.table.column("dissipation_times_N").unwrap();
        assert_eq!(scaled.len(), 4);
        for w in scaled.windows(2) {
            assert!((0.7..=1.3).contains(&(w[1] / w[0])));
        }
        assert_eq!(out.plot.unwrap().points.len(), 4);
    }

    #[test]
    fn ergotropy_sweep_gap_is_smallest_at_beta_star() {
        let b_star = (7.0f64 / 3.0).ln();
        let out = run(&format!(
            r#"{{"experiment":"ergotropy_compare","state":{{"name":"explicit","diag":[0.3,0.7]}},
                "beta":[0.3,0.6,{b_star},1.2,2.0]}}"#
        ));
        assert!(out.manifest.all_passed);
        let gaps = out.table.column("gap").unwrap();
        let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, gaps[2]);
        assert!(gaps[2].abs() < 1e-8);
    }

    #[test]
    fn module_errors_are_recorded() {
        // a pure state has no finite beta*
        let out = run(r#"{"experiment":"ergotropy_compare","state":{"name":"explicit","diag":[1,0]},"beta":1.0}"#);
        assert_eq!(out.manifest.errors.len(), 1);
        assert!(!out.manifest.all_passed);
        assert!(out.table.rows.is_empty());
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = run(
            r#"{"experiment":"discord_stroke","state":{"name":"bell"},"beta":1.0,"N":[100,200],
                "h_s":{"diag":[0,0]},"h_a":{"diag":[0,0]}}"#,
        );
        assert!(out.manifest.all_passed, "{:?}", out.manifest.identities);
        let files = write_outputs(&mut out, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["all_passed"], true);
        assert_eq!(manifest["config"]["experiment"], "discord_stroke");
        assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
    }
}

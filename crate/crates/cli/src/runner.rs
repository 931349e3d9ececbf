use std::path::{Path, PathBuf};

use ckdv_core::analytic::{hs_exact_state, sample_ic, SolitonParams};
use ckdv_core::diagnostics::{
    check_h_list, estimate_orders, measure_error, percent_error, ConvergenceRow, ConvergenceScenario,
    DiagnosticSample, PeakOptions,
};
use ckdv_core::model::SystemRepr;
use ckdv_core::scheme::{integrate_observed, Divergence, Observer, RunSpec, RunStatus};
use ckdv_core::stability::{stability_report, suggest_timestep, StabilityReport, Verdict};
use ckdv_core::{effective_dispersion, hs_integrable_system, CoupledSystem, Grid, WaveState};
use rayon::prelude::*;
use serde::Serialize;
use toml::Value;

use crate::config::{self, RunConfig, TauSpec};
use crate::error::{CliError, Result};
use crate::output::{self, DiagnosticLog};
use crate::plot::{LinePlot, Series};

/// Samples recorded when no diagnostics cadence is configured.
const DEFAULT_SAMPLES: u64 = 100;

/// Everything resolved from a config before stepping.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub system: CoupledSystem,
    pub grid: Grid,
    pub initial: WaveState,
    /// Closed-form reference, when the run has one.
    pub oracle: Option<SolitonParams>,
    /// Mode-1 peak of the initial data.
    pub amplitude: f64,
}

fn same_coefficients(a: &CoupledSystem, b: &CoupledSystem) -> bool {
    let (a, b) = (SystemRepr::from(a.clone()), SystemRepr::from(b.clone()));
    a.c == b.c && a.d == b.d && a.couplings == b.couplings
}

/// The closed form is exact only for the integrable two-mode system.
pub fn oracle_for(cfg: &RunConfig, system: &CoupledSystem) -> Option<SolitonParams> {
    cfg.ic
        .exact_params()
        .filter(|_| same_coefficients(system, &hs_integrable_system()))
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let system = cfg.system.resolve()?;
    let g = cfg.grid;
    let probe = Grid::from_extent(g.x0, g.x1, g.h, 1.0, g.boundary).map_err(|e| CliError::Config(e.to_string()))?;
    let initial = sample_ic(&cfg.ic, &probe, system.n_modes()).map_err(|e| CliError::Config(e.to_string()))?;
    let amplitude = initial.mode(0).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let abs_max = initial.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tau = match cfg.time.tau {
        TauSpec::Fixed(tau) => tau,
        TauSpec::Auto if cfg.time.t0 == 0.0 => 1.0,
        TauSpec::Auto => {
            let coeffs = effective_dispersion(&system, g.h)?;
            let tau = suggest_timestep(&system, &coeffs, cfg.time.t0, cfg.time.alpha, abs_max)?;
            if tau.is_finite() {
                tau
            } else {
                cfg.time.t0
            }
        }
    };
    let grid = probe.with_tau(tau).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Prepared {
        oracle: oracle_for(cfg, &system),
        system,
        grid,
        initial,
        amplitude,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub steps: u64,
    pub t_final: f64,
    pub tau: f64,
    pub status: RunStatus,
    pub report: Option<StabilityReport>,
    pub initial_sample: DiagnosticSample,
    pub final_sample: DiagnosticSample,
    /// Largest per-mode %Error over the recorded samples.
    pub max_percent_error: Option<Vec<f64>>,
    pub snapshots: Vec<(u64, f64, String)>,
}

impl RunSummary {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

struct Recorder<'a> {
    dir: &'a Path,
    grid: Grid,
    snapshot_every: Option<u64>,
    diagnostics_every: u64,
    peaks: PeakOptions,
    oracle: Option<SolitonParams>,
    amplitude: f64,
    log: Option<DiagnosticLog>,
    error_rows: Vec<(f64, Vec<f64>)>,
    samples: Vec<(u64, DiagnosticSample)>,
    snapshots: Vec<(u64, f64, String)>,
    failure: Option<CliError>,
}

impl Recorder<'_> {
    fn snapshot(&mut self, step: u64, state: &WaveState) -> Result<()> {
        let name = output::snapshot_name(step);
        output::write_snapshot(&self.dir.join(&name), state, &self.grid)?;
        self.snapshots.push((step, state.t(), name));
        Ok(())
    }

    fn diagnose(&mut self, step: u64, state: &WaveState) -> Result<()> {
        let sample = DiagnosticSample::capture(state, &self.grid, &self.peaks);
        if let Some(log) = self.log.as_mut() {
            log.append(step, &sample)?;
        }
        if let Some(p) = self.oracle {
            let exact = hs_exact_state(&p, &self.grid, state.t(), state.n_modes())?;
            self.error_rows.push((state.t(), percent_error(state, &exact, self.amplitude)?));
        }
        self.samples.push((step, sample));
        Ok(())
    }

    fn record(&mut self, step: u64, state: &WaveState, last: bool) -> Result<()> {
        let snap_due = step == 0 || last || self.snapshot_every.is_some_and(|n| step % n == 0);
        if snap_due && self.snapshots.last().map(|s| s.0) != Some(step) {
            self.snapshot(step, state)?;
        }
        let diag_due = step == 0 || last || step % self.diagnostics_every == 0;
        if diag_due && self.samples.last().map(|s| s.0) != Some(step) {
            self.diagnose(step, state)?;
        }
        Ok(())
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, step: u64, state: &WaveState, _grid: &Grid) {
        if self.failure.is_none() {
            if let Err(e) = self.record(step, state, false) {
                self.failure = Some(e);
            }
        }
    }
}

fn describe(cause: &Divergence) -> String {
    match cause {
        Divergence::NonFinite { mode, index } => {
            format!("non-finite value in mode {} at node {index}", mode + 1)
        }
        Divergence::NormGrowth { ratio } => format!("vector norm grew by {ratio:.3e}"),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    created: String,
    version: &'static str,
    scenario: Option<&'a str>,
    config: &'a RunConfig,
    system: SystemRepr,
    grid: GridInfo,
    soliton: Option<SolitonInfo>,
    status: &'a RunStatus,
    steps: u64,
    t_final: f64,
    forced: bool,
}

#[derive(Serialize)]
struct GridInfo {
    x0: f64,
    x1: f64,
    h: f64,
    n_points: usize,
    tau: f64,
    boundary: ckdv_core::Boundary,
}

#[derive(Serialize)]
struct SolitonInfo {
    m: f64,
    d: f64,
    origin_amplitude: f64,
    exact_reference: bool,
}

/// Executes one configured run and writes its outputs.
///
/// Outputs written before a divergence are kept; the divergence is then
/// returned as an error.
pub fn run(cfg: &RunConfig, force_unstable: bool) -> Result<RunSummary> {
    let prep = prepare(cfg)?;
    let dir = cfg.output.directory.clone();
    output::create_dir(&dir)?;
    let grid = prep.grid;
    let t0 = cfg.time.t0;

    let report = if t0 > 0.0 {
        let coeffs = effective_dispersion(&prep.system, grid.h())?;
        let report = stability_report(&prep.system, &coeffs, &prep.initial, &grid, t0, cfg.time.alpha)?;
        output::write_json(&dir.join(output::STABILITY_REPORT), &report)?;
        match report.verdict {
            Verdict::Fail if !force_unstable => {
                return Err(CliError::Stability {
                    tau: grid.tau(),
                    suggested: report.tau_suggested,
                })
            }
            Verdict::Pass => {}
            v => eprintln!(
                "warning: stability verdict {v:?} (tau {:.3e}, suggested {:.3e})",
                grid.tau(),
                report.tau_suggested
            ),
        }
        Some(report)
    } else {
        None
    };

    let total_steps = if t0 > 0.0 {
        ((t0 / grid.tau() - 1e-9).ceil() as u64).max(1)
    } else {
        0
    };
    let mut recorder = Recorder {
        dir: &dir,
        grid,
        snapshot_every: cfg.output.snapshot_every.map(|c| c.steps(grid.tau())),
        diagnostics_every: cfg
            .output
            .diagnostics_every
            .map(|c| c.steps(grid.tau()))
            .unwrap_or((total_steps / DEFAULT_SAMPLES).max(1)),
        peaks: PeakOptions::default(),
        oracle: prep.oracle,
        amplitude: prep.amplitude,
        log: Some(DiagnosticLog::create(dir.join(output::DIAGNOSTICS_LOG))?),
        error_rows: Vec::new(),
        samples: Vec::new(),
        snapshots: Vec::new(),
        failure: None,
    };

    let mut spec = RunSpec::from_state(prep.system.clone(), grid, prep.initial.clone(), t0);
    spec.alpha = cfg.time.alpha;
    spec.force_unstable = true;
    let outcome = integrate_observed(&spec, 1, &mut recorder)?;
    if let Some(e) = recorder.failure.take() {
        return Err(e);
    }
    recorder.record(outcome.steps, &outcome.final_state, true)?;
    if let Some(log) = recorder.log.take() {
        log.finish()?;
    }

    write_snapshot_index(&dir, &recorder.snapshots)?;
    if prep.oracle.is_some() {
        write_error_series(&dir, &recorder.error_rows)?;
    }
    if cfg.output.plot {
        write_plots(&dir, &prep, &recorder, &outcome.final_state)?;
    }

    let sys_repr = SystemRepr::from(prep.system.clone());
    let soliton = cfg.ic.exact_params().map(|p| SolitonInfo {
        m: p.m,
        d: p.d,
        origin_amplitude: p.origin_amplitude(),
        exact_reference: prep.oracle.is_some(),
    });
    output::write_json(
        &dir.join(output::MANIFEST),
        &Manifest {
            created: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION"),
            scenario: cfg.scenario.as_deref(),
            config: cfg,
            system: sys_repr,
            grid: GridInfo {
                x0: grid.x0(),
                x1: cfg.grid.x1,
                h: grid.h(),
                n_points: grid.n_points(),
                tau: grid.tau(),
                boundary: grid.boundary(),
            },
            soliton,
            status: &outcome.status,
            steps: outcome.steps,
            t_final: outcome.final_state.t(),
            forced: force_unstable,
        },
    )?;

    let max_percent_error = prep.oracle.map(|_| {
        recorder.error_rows.iter().fold(vec![0.0f64; prep.system.n_modes()], |acc, (_, e)| {
            acc.iter().zip(e).map(|(a, b)| a.max(*b)).collect()
        })
    });
    let summary = RunSummary {
        directory: dir.clone(),
        steps: outcome.steps,
        t_final: outcome.final_state.t(),
        tau: grid.tau(),
        status: outcome.status,
        report,
        initial_sample: recorder.samples.first().expect("initial sample").1.clone(),
        final_sample: recorder.samples.last().expect("final sample").1.clone(),
        max_percent_error,
        snapshots: recorder.snapshots,
    };
    if let RunStatus::Diverged { step, cause } = summary.status {
        return Err(CliError::Diverged {
            step,
            cause: describe(&cause),
        });
    }
    Ok(summary)
}

fn write_snapshot_index(dir: &Path, snapshots: &[(u64, f64, String)]) -> Result<()> {
    let mut text = String::from("step,t,file\n");
    for (step, t, name) in snapshots {
        text.push_str(&format!("{step},{t:.16e},{name}\n"));
    }
    output::write_string(&dir.join(output::SNAPSHOT_INDEX), &text)
}

fn write_error_series(dir: &Path, rows: &[(f64, Vec<f64>)]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.1.len());
    let mut text = String::from("t");
    for k in 1..=n {
        text.push_str(&format!(",percent_error{k}"));
    }
    text.push('\n');
    for (t, e) in rows {
        text.push_str(&format!("{t:.16e}"));
        for v in e {
            text.push_str(&format!(",{v:.16e}"));
        }
        text.push('\n');
    }
    output::write_string(&dir.join(output::ERROR_SERIES), &text)
}

fn write_plots(dir: &Path, prep: &Prepared, rec: &Recorder<'_>, final_state: &WaveState) -> Result<()> {
    let grid = prep.grid;
    let xs: Vec<f64> = grid.nodes().collect();
    for (step, t, name) in &rec.snapshots {
        let snap = output::read_snapshot(&dir.join(name))?;
        let series = snap
            .modes
            .iter()
            .enumerate()
            .map(|(n, v)| Series {
                name: format!("theta{}", n + 1),
                points: xs.iter().copied().zip(v.iter().copied()).collect(),
            })
            .collect();
        let plot = LinePlot {
            title: format!("profile at t = {t:.6}"),
            x_label: "x".into(),
            y_label: "theta".into(),
            series,
        };
        output::write_string(&dir.join(format!("profile_{step:06}.svg")), &plot.render())?;
    }
    if let Some(p) = prep.oracle {
        let exact = hs_exact_state(&p, &grid, final_state.t(), final_state.n_modes())?;
        let series = (0..final_state.n_modes())
            .map(|n| Series {
                name: format!("mode {}", n + 1),
                points: xs
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let gap = (exact.mode(n)[i] - final_state.mode(n)[i]).abs();
                        (x, 100.0 * gap / prep.amplitude)
                    })
                    .collect(),
            })
            .collect();
        let plot = LinePlot {
            title: format!("%Error at t = {:.6}", final_state.t()),
            x_label: "x".into(),
            y_label: "%Error".into(),
            series,
        };
        output::write_string(&dir.join("error.svg"), &plot.render())?;
    }
    let conserved: Vec<(f64, f64)> = rec
        .samples
        .iter()
        .filter_map(|(_, s)| s.conserved_hs.map(|c| (s.t, c)))
        .collect();
    if !conserved.is_empty() {
        let plot = LinePlot {
            title: "conserved quantity".into(),
            x_label: "t".into(),
            y_label: "sum (theta1^2/2 - theta2^2) h".into(),
            series: vec![Series {
                name: "integral".into(),
                points: conserved,
            }],
        };
        output::write_string(&dir.join("conserved.svg"), &plot.render())?;
    }
    Ok(())
}

/// One `--vary key=v1,v2,...` axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--vary expects key=v1,v2,... (got {s:?})")))?;
        let values: Vec<String> = list.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(CliError::Config(format!("--vary expects key=v1,v2,... (got {s:?})")));
        }
        Ok(Axis {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Every combination of the axes, as `(key, value)` lists.
pub fn combinations(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((axis.key.clone(), v.clone()));
                    next
                })
            })
            .collect()
    })
}

fn run_label(combo: &[(String, String)]) -> String {
    combo
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("_")
        .replace(['/', '\\', ' '], "-")
}

pub struct SweepRun {
    pub label: String,
    pub result: Result<RunSummary>,
}

/// Runs every combination concurrently, each in its own subdirectory of the
/// configured output directory.
pub fn sweep(doc: &Value, axes: &[Axis], force_unstable: bool) -> Result<Vec<SweepRun>> {
    let base = config::from_document(doc.clone())?;
    let root = base.output.directory.clone();
    output::create_dir(&root)?;
    let configs = combinations(axes)
        .into_iter()
        .map(|combo| {
            let label = run_label(&combo);
            let mut doc = doc.clone();
            for (k, v) in &combo {
                config::set_path(&mut doc, k, config::parse_scalar(v))?;
            }
            let dir = root.join(&label);
            config::set_path(&mut doc, "output.directory", Value::String(dir.display().to_string()))?;
            Ok((label, config::from_document(doc)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<SweepRun> = configs
        .into_par_iter()
        .map(|(label, cfg)| SweepRun {
            label,
            result: run(&cfg, force_unstable),
        })
        .collect();

    let mut text = String::from("run,status,steps,t_final,max_percent_error\n");
    for r in &runs {
        match &r.result {
            Ok(s) => {
                let err = s
                    .max_percent_error
                    .as_ref()
                    .map(|e| format!("{:.6e}", e.iter().copied().fold(0.0, f64::max)))
                    .unwrap_or_default();
                text.push_str(&format!("{},completed,{},{:.16e},{err}\n", r.label, s.steps, s.t_final));
            }
            Err(e) => text.push_str(&format!("{},exit {},,,\n", r.label, e.exit_code())),
        }
    }
    output::write_string(&root.join("sweep.csv"), &text)?;
    Ok(runs)
}

/// Mesh-refinement study of a closed-form scenario; the meshes run
/// concurrently.
pub fn converge(cfg: &RunConfig, h_list: &[f64]) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    check_h_list(h_list).map_err(|e| CliError::Config(e.to_string()))?;
    let system = cfg.system.resolve()?;
    let soliton = oracle_for(cfg, &system).ok_or_else(|| {
        CliError::Config("convergence needs an hs-soliton initial condition on the integrable system".into())
    })?;
    let mut scenario = ConvergenceScenario::new(system, soliton, cfg.grid.x0, cfg.grid.x1, cfg.time.t0);
    scenario.boundary = cfg.grid.boundary;
    scenario.alpha = cfg.time.alpha;
    if let TauSpec::Fixed(tau) = cfg.time.tau {
        scenario.tau = Some(tau);
    }
    let mut rows = h_list
        .par_iter()
        .map(|&h| measure_error(&scenario, h).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;
    estimate_orders(&mut rows);

    let dir = &cfg.output.directory;
    output::create_dir(dir)?;
    output::write_string(&dir.join("convergence.csv"), &convergence_table(&rows))?;
    Ok(rows)
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> String {
    let mut text = String::from("h,tau,error,order,diverged\n");
    for r in rows {
        let order = r.order_estimate.map(|o| format!("{o:.6}")).unwrap_or_default();
        text.push_str(&format!("{},{:.6e},{:.6e},{order},{}\n", r.h, r.tau, r.error, r.diverged));
    }
    text
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub max_abs_diff: Vec<f64>,
    pub l2_diff: Vec<f64>,
}

/// Per-mode differences between two snapshots on the same nodes.
pub fn compare(a: &Path, b: &Path) -> Result<Comparison> {
    let (sa, sb) = (output::read_snapshot(a)?, output::read_snapshot(b)?);
    if sa.modes.len() != sb.modes.len() || sa.x.len() != sb.x.len() {
        return Err(CliError::Config("snapshots have different shapes".into()));
    }
    let scale = sa.x.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if sa.x.iter().zip(&sb.x).any(|(p, q)| (p - q).abs() > 1e-12 * scale) {
        return Err(CliError::Config("snapshots are on different nodes".into()));
    }
    let h = if sa.x.len() > 1 { sa.x[1] - sa.x[0] } else { 1.0 };
    let mut out = Comparison {
        max_abs_diff: Vec::new(),
        l2_diff: Vec::new(),
    };
    for (u, v) in sa.modes.iter().zip(&sb.modes) {
        let diffs = u.iter().zip(v).map(|(p, q)| (p - q).abs());
        out.max_abs_diff.push(diffs.clone().fold(0.0, f64::max));
        out.l2_diff.push((diffs.map(|d| d * d).sum::<f64>() * h).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a: Axis = "ic.m=0.8, 0.9".parse().unwrap();
        assert_eq!(a.key, "ic.m");
        assert_eq!(a.values, vec!["0.8", "0.9"]);
        assert!("ic.m".parse::<Axis>().is_err());
        assert!("=1".parse::<Axis>().is_err());
    }

    #[test]
    fn cartesian_product() {
        let axes = vec![
            Axis { key: "a".into(), values: vec!["1".into(), "2".into()] },
            Axis { key: "b".into(), values: vec!["x".into(), "y".into(), "z".into()] },
        ];
        let all = combinations(&axes);
        assert_eq!(all.len(), 6);
        assert_eq!(run_label(&all[4]), "a=2_b=y");
        assert_eq!(combinations(&[]), vec![Vec::new()]);
    }

    #[test]
    fn oracle_only_for_integrable_soliton() {
        let a2 = crate::presets::scenario("hs-soliton-A2").unwrap();
        assert!(prepare(&a2).unwrap().oracle.is_some());
        let non = crate::presets::scenario("hs-nonintegrable").unwrap();
        assert!(prepare(&non).unwrap().oracle.is_none());
        let boxed = crate::presets::scenario("hs-nonsmooth-box").unwrap();
        assert!(prepare(&boxed).unwrap().oracle.is_none());
    }

    #[test]
    fn auto_tau_matches_rule() {
        let a2 = crate::presets::scenario("hs-soliton-A2").unwrap();
        let prep = prepare(&a2).unwrap();
        let expected = 1e-6 / (9.0 * 0.25);
        assert!((prep.grid.tau() - expected).abs() < 1e-18);
        assert!((prep.amplitude - 2.0).abs() < 1e-12);
    }
}

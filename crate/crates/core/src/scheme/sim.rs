use alloc::vec;
use alloc::vec::Vec;

use crate::analytic::{sample_ic, InitialCondition};
use crate::diagnostics::{DiagnosticSample, PeakOptions};
use crate::error::{Error, Result};
use crate::model::{effective_dispersion, CoupledSystem, Grid, SchemeCoefficients, WaveState};
use crate::stability::{stability_report, DivergenceMonitor, Health, StabilityReport, Verdict, DEFAULT_ALPHA};

use super::{stage, FluxEvaluator};

/// Callback invoked on the stepping thread as a run progresses.
pub trait Observer {
    fn observe(&mut self, step: u64, state: &WaveState, grid: &Grid);
}

impl<F: FnMut(u64, &WaveState, &Grid)> Observer for F {
    fn observe(&mut self, step: u64, state: &WaveState, grid: &Grid) {
        self(step, state, grid)
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Divergence {
    NonFinite { mode: usize, index: usize },
    NormGrowth { ratio: f64 },
}

struct Registered<'a> {
    every: u64,
    last: Option<u64>,
    observer: &'a mut dyn Observer,
}

/// Single-owner stepping context for one run.
pub struct Simulation<'a> {
    system: CoupledSystem,
    coeffs: SchemeCoefficients,
    grid: Grid,
    state: WaveState,
    flux: FluxEvaluator,
    flux_buf: Vec<f64>,
    half_buf: Vec<f64>,
    next_buf: Vec<f64>,
    step: u64,
    t_start: f64,
    monitor: DivergenceMonitor,
    divergence: Option<(u64, Divergence)>,
    observers: Vec<Registered<'a>>,
}

impl<'a> Simulation<'a> {
    pub fn new(system: CoupledSystem, grid: Grid, initial: WaveState) -> Result<Self> {
        initial.check_shape(system.n_modes(), grid.n_points())?;
        if let Some((mode, index)) = initial.first_non_finite() {
            return Err(Error::Diverged { mode, index });
        }
        let coeffs = effective_dispersion(&system, grid.h())?;
        let flux = FluxEvaluator::new(&system, &coeffs, &grid)?;
        let len = initial.as_slice().len();
        let monitor = DivergenceMonitor::new(&initial, grid.h());
        Ok(Simulation {
            system,
            coeffs,
            grid,
            t_start: initial.t(),
            state: initial,
            flux,
            flux_buf: vec![0.0; len],
            half_buf: vec![0.0; len],
            next_buf: vec![0.0; len],
            step: 0,
            monitor,
            divergence: None,
            observers: Vec::new(),
        })
    }

    /// Calls `observer` after every `every`-th step (`every = 0` means only
    /// on explicit [`Simulation::notify`]).
    pub fn register(&mut self, every: u64, observer: &'a mut dyn Observer) {
        self.observers.push(Registered {
            every,
            last: None,
            observer,
        });
    }

    /// Calls every observer that has not yet seen the current step.
    pub fn notify(&mut self) {
        let Simulation {
            observers,
            state,
            grid,
            step,
            ..
        } = self;
        for reg in observers.iter_mut().filter(|r| r.last != Some(*step)) {
            reg.observer.observe(*step, state, grid);
            reg.last = Some(*step);
        }
    }

    /// One full step of length τ: half step, then full step.
    pub fn advance(&mut self) -> Result<&WaveState> {
        let tau = self.grid.tau();
        self.step_with(tau, None)?;
        Ok(&self.state)
    }

    /// One step of arbitrary length `tau` landing exactly on `t_target`.
    pub fn advance_to(&mut self, t_target: f64) -> Result<&WaveState> {
        let tau = t_target - self.state.t();
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "target time {t_target} is not ahead of {}",
                self.state.t()
            )));
        }
        self.step_with(tau, Some(t_target))?;
        Ok(&self.state)
    }

    fn step_with(&mut self, tau: f64, t_target: Option<f64>) -> Result<()> {
        if self.divergence.is_some() {
            return Err(Error::AlreadyDiverged);
        }
        let outcome = self
            .flux
            .eval(self.state.as_slice(), &mut self.flux_buf)
            .and_then(|()| {
                stage(self.state.as_slice(), &self.flux_buf, 0.5 * tau, &mut self.half_buf);
                self.flux.eval(&self.half_buf, &mut self.flux_buf)
            });
        if let Err(err) = outcome {
            if let Error::Diverged { mode, index } = err {
                self.divergence = Some((self.step + 1, Divergence::NonFinite { mode, index }));
            }
            return Err(err);
        }
        stage(self.state.as_slice(), &self.flux_buf, tau, &mut self.next_buf);

        let step = self.step + 1;
        let (health, ratio) = self.monitor.check_slice(&self.next_buf, self.grid.h());
        if let Some(p) = self.next_buf.iter().position(|v| !v.is_finite()) {
            let np = self.grid.n_points();
            let (mode, index) = (p / np, p % np);
            self.divergence = Some((step, Divergence::NonFinite { mode, index }));
            return Err(Error::Diverged { mode, index });
        }
        core::mem::swap(self.state.data_mut(), &mut self.next_buf);
        self.step = step;
        let t = t_target.unwrap_or(self.t_start + step as f64 * self.grid.tau());
        self.state.set_t(t);
        if health == Health::Diverged {
            self.divergence = Some((step, Divergence::NormGrowth { ratio }));
            return Err(Error::Blowup { ratio });
        }

        let Simulation {
            observers,
            state,
            grid,
            ..
        } = self;
        for reg in observers.iter_mut() {
            if reg.every > 0 && step % reg.every == 0 {
                reg.observer.observe(step, state, grid);
                reg.last = Some(step);
            }
        }
        Ok(())
    }

    pub fn state(&self) -> &WaveState {
        &self.state
    }

    pub fn into_state(self) -> WaveState {
        self.state
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn system(&self) -> &CoupledSystem {
        &self.system
    }

    pub fn coeffs(&self) -> &SchemeCoefficients {
        &self.coeffs
    }

    /// Step index and cause of the divergence, if any.
    pub fn divergence(&self) -> Option<(u64, Divergence)> {
        self.divergence
    }
}

/// Everything [`integrate`] needs for one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub system: CoupledSystem,
    pub grid: Grid,
    pub initial: WaveState,
    pub t0: f64,
    pub alpha: f64,
    /// Run even when the stability verdict is `Fail`.
    pub force_unstable: bool,
    /// Diagnostic sample cadence in steps; 0 records only the first and last
    /// state.
    pub record_every: u64,
    pub peaks: PeakOptions,
}

impl RunSpec {
    pub fn new(system: CoupledSystem, grid: Grid, ic: &InitialCondition, t0: f64) -> Result<Self> {
        let initial = sample_ic(ic, &grid, system.n_modes())?;
        Ok(Self::from_state(system, grid, initial, t0))
    }

    /// Continues from an existing state (its `t` is kept).
    pub fn from_state(system: CoupledSystem, grid: Grid, initial: WaveState, t0: f64) -> Self {
        RunSpec {
            system,
            grid,
            initial,
            t0,
            alpha: DEFAULT_ALPHA,
            force_unstable: false,
            record_every: 0,
            peaks: PeakOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RunStatus {
    Completed,
    Diverged { step: u64, cause: Divergence },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Final state, or the last finite one after a divergence.
    pub final_state: WaveState,
    pub steps: u64,
    pub status: RunStatus,
    /// Absent for zero-length runs.
    pub report: Option<StabilityReport>,
    pub samples: Vec<DiagnosticSample>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Runs `spec` without an external observer.
pub fn integrate(spec: &RunSpec) -> Result<RunOutcome> {
    integrate_observed(spec, 0, &mut |_: u64, _: &WaveState, _: &Grid| {})
}

/// Integrates from `spec.initial` over a duration `spec.t0`.
///
/// Takes `⌈t0/τ⌉` steps; the last one is shortened to land exactly on the
/// end time. `observer` sees the initial state, every `every`-th step and
/// the final state. A `Fail` stability verdict refuses to start unless
/// `force_unstable` is set. Divergence ends the run early with
/// [`RunStatus::Diverged`] and the last finite state.
pub fn integrate_observed(spec: &RunSpec, every: u64, observer: &mut dyn Observer) -> Result<RunOutcome> {
    if !(spec.t0 >= 0.0) || !spec.t0.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("t0 = {} must be non-negative", spec.t0)));
    }
    let grid = spec.grid;
    let mut samples = Vec::new();
    let mut recorder = |_: u64, state: &WaveState, grid: &Grid| {
        samples.push(DiagnosticSample::capture(state, grid, &spec.peaks));
    };

    let report = if spec.t0 > 0.0 {
        let coeffs = effective_dispersion(&spec.system, grid.h())?;
        let report = stability_report(&spec.system, &coeffs, &spec.initial, &grid, spec.t0, spec.alpha)?;
        if report.verdict == Verdict::Fail && !spec.force_unstable {
            return Err(Error::StabilityGate {
                tau: grid.tau(),
                suggested: report.tau_suggested,
            });
        }
        Some(report)
    } else {
        None
    };

    let mut sim = Simulation::new(spec.system.clone(), grid, spec.initial.clone())?;
    sim.register(spec.record_every, &mut recorder);
    sim.register(every, observer);
    sim.notify();

    let tau = grid.tau();
    let t_end = spec.initial.t() + spec.t0;
    let n_steps = if spec.t0 == 0.0 {
        0
    } else {
        (libm::ceil(spec.t0 / tau - 1e-9) as u64).max(1)
    };

    let mut status = RunStatus::Completed;
    for k in 1..=n_steps {
        let result = if k < n_steps {
            sim.advance().map(|_| ())
        } else {
            let last = spec.t0 - (n_steps - 1) as f64 * tau;
            if libm::fabs(last - tau) <= 1e-9 * tau {
                sim.advance().map(|_| ())
            } else {
                sim.advance_to(t_end).map(|_| ())
            }
        };
        match result {
            Ok(()) => {}
            Err(Error::Diverged { .. }) | Err(Error::Blowup { .. }) => {
                let (step, cause) = sim.divergence().expect("divergence recorded");
                status = RunStatus::Diverged { step, cause };
                break;
            }
            Err(other) => return Err(other),
        }
    }
    if status == RunStatus::Completed && n_steps > 0 {
        sim.state.set_t(t_end);
    }
    sim.notify();
    let steps = sim.step();
    let final_state = sim.into_state();
    Ok(RunOutcome {
        final_state,
        steps,
        status,
        report,
        samples,
    })
}

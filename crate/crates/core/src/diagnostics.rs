//! Norms, error metrics, the HS conserved quantity, peak counting and
//! mesh-refinement studies.
//!
//! All integrals are rectangle sums `Σ(·)h`, consistent with the discrete
//! vector norm used by the stability analysis.

use alloc::format;
use alloc::vec::Vec;

use libm::{ceil, fabs, log, sqrt};

use crate::analytic::{hs_exact_state, InitialCondition, SolitonParams};
use crate::error::{Error, Result};
use crate::model::{Boundary, CoupledSystem, Grid, WaveState};
use crate::scheme::{integrate_observed, RunSpec, RunStatus};
use crate::stability::suggest_timestep;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Norms {
    pub per_mode: Vec<f64>,
    pub vector: f64,
}

/// Per-mode `(Σ_i θ²h)^{1/2}` and the combined `(Σ_n Σ_i θ²h)^{1/2}`.
pub fn l2_norms(state: &WaveState, h: f64) -> Norms {
    let squares: Vec<f64> = state
        .modes()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>() * h)
        .collect();
    Norms {
        vector: sqrt(squares.iter().sum()),
        per_mode: squares.into_iter().map(sqrt).collect(),
    }
}

/// `100 · max_i |exact − numeric| / amplitude` for each mode.
pub fn percent_error(numeric: &WaveState, exact: &WaveState, amplitude: f64) -> Result<Vec<f64>> {
    if !(amplitude > 0.0) {
        return Err(Error::NonPositiveAmplitude(amplitude));
    }
    exact.check_shape(numeric.n_modes(), numeric.n_points())?;
    Ok(numeric
        .modes()
        .zip(exact.modes())
        .map(|(a, b)| {
            let gap = a.iter().zip(b).fold(0.0, |acc, (x, y)| f64::max(acc, fabs(x - y)));
            100.0 * gap / amplitude
        })
        .collect())
}

/// `Σ_i (θ₁² / 2 − θ₂²) h`; constant in time for decaying HS solutions.
pub fn hs_conserved(state: &WaveState, h: f64) -> Result<f64> {
    if state.n_modes() != 2 {
        return Err(Error::ModeCount {
            expected: 2,
            found: state.n_modes(),
        });
    }
    let (a, b) = (state.mode(0), state.mode(1));
    Ok(a.iter().zip(b).map(|(p, q)| 0.5 * p * p - q * q).sum::<f64>() * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakOptions {
    /// Peaks below this fraction of the global maximum are ignored.
    pub min_height_fraction: f64,
    /// Minimum index distance between two reported peaks.
    pub min_separation: usize,
    /// Treat the ends as neighbours.
    pub periodic: bool,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            min_height_fraction: 0.1,
            min_separation: 5,
            periodic: false,
        }
    }
}

/// Indices of local maxima above `min_height_fraction × max`, kept greedily
/// from the tallest down so that no two are closer than `min_separation`.
/// Returned in ascending index order.
///
/// A plateau counts once, at its first index. A state with no positive
/// values has no peaks.
pub fn find_peaks(values: &[f64], opts: &PeakOptions) -> Vec<usize> {
    let n = values.len();
    let global = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || !(global > 0.0) {
        return Vec::new();
    }
    let floor = opts.min_height_fraction * global;
    let at = |i: isize| -> Option<f64> {
        if opts.periodic {
            Some(values[i.rem_euclid(n as isize) as usize])
        } else if i < 0 || i >= n as isize {
            None
        } else {
            Some(values[i as usize])
        }
    };

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = values[i];
            if v < floor || v <= 0.0 {
                return false;
            }
            let ii = i as isize;
            // Strictly above the left neighbour; the first differing value to
            // the right (skipping a plateau) must be lower.
            if matches!(at(ii - 1), Some(l) if l >= v) {
                return false;
            }
            for k in 1..n as isize {
                match at(ii + k) {
                    None => return true,
                    Some(r) if r < v => return true,
                    Some(r) if r > v => return false,
                    Some(_) => {}
                }
            }
            false
        })
        .collect();

    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let distance = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        if opts.periodic {
            d.min(n - d)
        } else {
            d
        }
    };
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| distance(k, c) >= opts.min_separation) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Number of peaks of `mode` per [`find_peaks`].
pub fn count_solitons(state: &WaveState, mode: usize, opts: &PeakOptions) -> usize {
    find_peaks(state.mode(mode), opts).len()
}

/// One row of the diagnostic log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticSample {
    pub t: f64,
    pub l2_per_mode: Vec<f64>,
    pub vector_norm: f64,
    /// Only for two-mode states.
    pub conserved_hs: Option<f64>,
    pub max_amp_per_mode: Vec<f64>,
    pub peak_count_mode1: usize,
}

impl DiagnosticSample {
    pub fn capture(state: &WaveState, grid: &Grid, peaks: &PeakOptions) -> Self {
        let h = grid.h();
        let norms = l2_norms(state, h);
        let opts = PeakOptions {
            periodic: peaks.periodic || grid.boundary() == Boundary::Periodic,
            ..*peaks
        };
        DiagnosticSample {
            t: state.t(),
            l2_per_mode: norms.per_mode,
            vector_norm: norms.vector,
            conserved_hs: hs_conserved(state, h).ok(),
            max_amp_per_mode: state
                .modes()
                .map(|v| v.iter().fold(0.0, |acc, x| f64::max(acc, fabs(*x))))
                .collect(),
            peak_count_mode1: count_solitons(state, 0, &opts),
        }
    }
}

/// `ln(e1/e2) / ln(h1/h2)`; `log₂` of the error ratio when `h` halves.
pub fn observed_order(h1: f64, e1: f64, h2: f64, e2: f64) -> f64 {
    log(e1 / e2) / log(h1 / h2)
}

/// An HS soliton run with a closed-form reference, parametrised by `h`.
#[derive(Debug, Clone)]
pub struct ConvergenceScenario {
    pub system: CoupledSystem,
    pub soliton: SolitonParams,
    pub x0: f64,
    pub x1: f64,
    pub boundary: Boundary,
    pub t0: f64,
    pub alpha: f64,
    /// Fixed time step for every mesh; `None` uses the suggested step.
    pub tau: Option<f64>,
    /// Number of evenly spaced times (besides `t = 0`) at which the error is
    /// evaluated.
    pub checkpoints: u32,
}

impl ConvergenceScenario {
    pub fn new(system: CoupledSystem, soliton: SolitonParams, x0: f64, x1: f64, t0: f64) -> Self {
        ConvergenceScenario {
            system,
            soliton,
            x0,
            x1,
            boundary: Boundary::Periodic,
            t0,
            alpha: crate::stability::DEFAULT_ALPHA,
            tau: None,
            checkpoints: 20,
        }
    }

    /// Grid and time step for mesh `h`.
    pub fn grid(&self, h: f64) -> Result<Grid> {
        let probe = Grid::from_extent(self.x0, self.x1, h, 1.0, self.boundary)?;
        let tau = match self.tau {
            Some(tau) => tau,
            None if self.t0 == 0.0 => 1.0,
            None => {
                let coeffs = crate::model::effective_dispersion(&self.system, h)?;
                let amp = self.soliton.origin_amplitude().abs();
                suggest_timestep(&self.system, &coeffs, self.t0, self.alpha, amp)?
            }
        };
        probe.with_tau(tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub h: f64,
    pub tau: f64,
    /// Largest %Error over all modes and checkpoints in `[0, t0]`.
    pub error: f64,
    pub order_estimate: Option<f64>,
    pub diverged: bool,
}

/// Runs `scenario` at mesh `h` and returns its row (without an order
/// estimate). The amplitude is the mode-1 peak of the sampled IC.
pub fn measure_error(scenario: &ConvergenceScenario, h: f64) -> Result<ConvergenceRow> {
    let grid = scenario.grid(h)?;
    let n_modes = scenario.system.n_modes();
    let ic = InitialCondition::HsSoliton(scenario.soliton);
    let mut spec = RunSpec::new(scenario.system.clone(), grid, &ic, scenario.t0)?;
    spec.alpha = scenario.alpha;
    let amplitude = spec.initial.mode(0).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(amplitude > 0.0) {
        return Err(Error::NonPositiveAmplitude(amplitude));
    }

    let total_steps = if scenario.t0 == 0.0 {
        0
    } else {
        (ceil(scenario.t0 / grid.tau() - 1e-9) as u64).max(1)
    };
    let every = (total_steps / u64::from(scenario.checkpoints.max(1))).max(1);
    let mut worst = 0.0f64;
    let mut failure: Option<Error> = None;
    let mut observer = |_: u64, state: &WaveState, grid: &Grid| {
        if failure.is_some() {
            return;
        }
        let err = hs_exact_state(&scenario.soliton, grid, state.t(), n_modes)
            .and_then(|exact| percent_error(state, &exact, amplitude));
        match err {
            Ok(e) => worst = e.into_iter().fold(worst, f64::max),
            Err(e) => failure = Some(e),
        }
    };
    let outcome = integrate_observed(&spec, every, &mut observer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ConvergenceRow {
        h,
        tau: grid.tau(),
        error: worst,
        order_estimate: None,
        diverged: !matches!(outcome.status, RunStatus::Completed),
    })
}

/// Fills `order_estimate` from the previous non-diverged row.
pub fn estimate_orders(rows: &mut [ConvergenceRow]) {
    let mut prev: Option<(f64, f64)> = None;
    for row in rows.iter_mut() {
        row.order_estimate = None;
        if row.diverged {
            continue;
        }
        if let Some((h, e)) = prev {
            if e > 0.0 && row.error > 0.0 {
                row.order_estimate = Some(observed_order(h, e, row.h, row.error));
            }
        }
        prev = Some((row.h, row.error));
    }
}

/// Rows for every `h` in `h_list` (strictly decreasing), with observed
/// orders.
pub fn convergence_study(scenario: &ConvergenceScenario, h_list: &[f64]) -> Result<Vec<ConvergenceRow>> {
    check_h_list(h_list)?;
    let mut rows = h_list
        .iter()
        .map(|&h| measure_error(scenario, h))
        .collect::<Result<Vec<_>>>()?;
    estimate_orders(&mut rows);
    Ok(rows)
}

pub fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.is_empty() {
        return Err(Error::InvalidArgument("empty h list".into()));
    }
    if let Some(w) = h_list.windows(2).find(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(format!(
            "h list must be strictly decreasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(h) = h_list.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hs_integrable_system;
    use alloc::vec;

    #[test]
    fn norm_examples() {
        let z = WaveState::zeros(2, 5, 0.0);
        let n = l2_norms(&z, 0.1);
        assert_eq!(n.vector, 0.0);
        let s = WaveState::from_modes(0.0, vec![vec![1.0; 4]]).unwrap();
        assert!((l2_norms(&s, 0.5).vector - 2f64.sqrt()).abs() < 1e-15);
        let s = WaveState::from_modes(0.0, vec![vec![1.0; 2], vec![1.0; 2]]).unwrap();
        assert_eq!(l2_norms(&s, 1.0).vector, 2.0);
    }

    #[test]
    fn percent_error_examples() {
        let a = WaveState::from_modes(0.0, vec![vec![0.0, 1.0, 0.5]]).unwrap();
        assert_eq!(percent_error(&a, &a, 2.0).unwrap(), vec![0.0]);
        let mut b = a.clone();
        b.mode_mut(0)[1] += 0.02;
        let e = percent_error(&a, &b, 2.0).unwrap()[0];
        assert!((e - 1.0).abs() < 1e-12);
        assert!(matches!(percent_error(&a, &b, 0.0), Err(Error::NonPositiveAmplitude(_))));
    }

    #[test]
    fn conserved_examples() {
        assert_eq!(hs_conserved(&WaveState::zeros(2, 6, 0.0), 0.1).unwrap(), 0.0);
        let q: Vec<f64> = (0..6).map(|i| i as f64 * 0.3).collect();
        let p: Vec<f64> = q.iter().map(|v| v * 2f64.sqrt()).collect();
        let s = WaveState::from_modes(0.0, vec![p, q]).unwrap();
        assert!(hs_conserved(&s, 0.1).unwrap().abs() < 1e-15);
        let one = WaveState::zeros(1, 6, 0.0);
        assert!(matches!(hs_conserved(&one, 0.1), Err(Error::ModeCount { .. })));
    }

    #[test]
    fn peaks_basic() {
        let opts = PeakOptions::default();
        assert!(find_peaks(&[0.0; 10], &opts).is_empty());
        let bump: Vec<f64> = (0..41).map(|i| libm::exp(-((i as f64 - 20.0) / 4.0).powi(2))).collect();
        assert_eq!(find_peaks(&bump, &opts), vec![20]);
        let mut two = vec![0.0; 30];
        two[5] = 1.0;
        two[8] = 0.8;
        two[20] = 0.5;
        two[25] = 0.05;
        assert_eq!(find_peaks(&two, &opts), vec![5, 20]);
        let plateau = [0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(find_peaks(&plateau, &opts), vec![1]);
        let edge = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3];
        assert_eq!(find_peaks(&edge, &opts), vec![0, 7]);
        let wrap = PeakOptions { periodic: true, ..opts };
        assert_eq!(find_peaks(&edge, &wrap), vec![0]);
    }

    #[test]
    fn order_formula() {
        assert!((observed_order(0.2, 4.0, 0.1, 1.0) - 2.0).abs() < 1e-14);
        let mut rows = vec![
            ConvergenceRow { h: 0.4, tau: 1.0, error: 16.0, order_estimate: None, diverged: false },
            ConvergenceRow { h: 0.2, tau: 1.0, error: 1.0, order_estimate: None, diverged: true },
            ConvergenceRow { h: 0.1, tau: 1.0, error: 1.0, order_estimate: None, diverged: false },
        ];
        estimate_orders(&mut rows);
        assert_eq!(rows[0].order_estimate, None);
        assert_eq!(rows[1].order_estimate, None);
        assert!((rows[2].order_estimate.unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_length_study_has_zero_error() {
        let p = SolitonParams::new(1.0, 0.0).unwrap();
        let sc = ConvergenceScenario::new(hs_integrable_system(), p, -20.0, 20.0, 0.0);
        let rows = convergence_study(&sc, &[0.4, 0.2, 0.1]).unwrap();
        assert!(rows.iter().all(|r| r.error == 0.0 && !r.diverged));
    }

    #[test]
    fn h_list_validation() {
        assert!(check_h_list(&[0.2, 0.2]).is_err());
        assert!(check_h_list(&[]).is_err());
        assert!(check_h_list(&[0.2, -0.1]).is_err());
        assert!(check_h_list(&[0.4, 0.2, 0.1]).is_ok());
    }
}

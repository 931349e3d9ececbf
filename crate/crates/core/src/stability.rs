//! Time-step selection from the conditional stability relation `τ ≲ h⁶`,
//! and runtime divergence monitoring.
//!
//! Two practical rules bound the step for a run of duration `t0`:
//!
//! ```text
//! single mode:  τ (3 e_max / h³)² t0        ≤ α
//! coupled:      e_max · 81 τ³ / (4 h¹²) t0  ≤ α
//! ```
//!
//! The suggested step is the smaller of the two caps. The coupled product is
//! kept exactly as stated even though it scales differently from the single
//! rule; both products are reported.

use alloc::format;
use alloc::vec::Vec;

use libm::{cbrt, fabs, sqrt};

use crate::error::{Error, Result};
use crate::model::{CoupledSystem, Grid, SchemeCoefficients, WaveState};
use crate::scheme::central_d1;

/// The `O(1)` constant of the practical rule.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Steps up to this multiple of the suggestion are `Marginal`, beyond `Fail`.
pub const MARGINAL_BAND: f64 = 2.0;
/// Norm growth factor treated as divergence.
pub const DIVERGENCE_RATIO: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Pass,
    Marginal,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub tau_suggested: f64,
    pub tau_requested: f64,
    /// Simplified growth exponent `a` (1/time).
    pub growth_exponent_a: f64,
    /// Unsimplified growth exponent, for reference.
    pub growth_exponent_full: f64,
    /// `τ (3 e_max/h³)² t0`.
    pub rule_single: f64,
    /// `e_max · 81 τ³/(4h¹²) · t0`.
    pub rule_coupled: f64,
    pub verdict: Verdict,
}

/// Per-mode `(G_n, max slope, max |θ|)` over the modes entering equation `n`
/// nonlinearly.
fn nonlinear_bounds(sys: &CoupledSystem, state: &WaveState, grid: &Grid) -> Vec<(f64, f64, f64)> {
    let nm = sys.n_modes();
    let slope_max: Vec<f64> = state
        .modes()
        .map(|v| {
            (0..v.len()).fold(0.0, |acc, i| {
                f64::max(acc, fabs(central_d1(v, i, grid.h(), grid.boundary())))
            })
        })
        .collect();
    let amp_max: Vec<f64> = state
        .modes()
        .map(|v| v.iter().fold(0.0, |acc, x| f64::max(acc, fabs(*x))))
        .collect();
    (0..nm)
        .map(|n| {
            let mut slope = 0.0f64;
            let mut amp = 0.0f64;
            for cp in sys.couplings().filter(|cp| cp.n == n) {
                slope = slope.max(slope_max[cp.m]).max(slope_max[cp.k]);
                amp = amp.max(amp_max[cp.m]).max(amp_max[cp.k]);
            }
            (sys.max_coupling_into(n), slope, amp)
        })
        .collect()
}

/// Simplified growth exponent `max_n [2 G_n max|θ̄_x| + τ (3|e_n|/h³)²]`.
///
/// `G_n = max_{m,k} |g[m][k][n]|` and the slope maximum runs over every mode
/// that appears in a nonlinear term of equation `n`.
pub fn growth_exponent(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    state: &WaveState,
    grid: &Grid,
    tau: f64,
) -> Result<f64> {
    coeffs.ensure_matches(grid)?;
    state.check_shape(sys.n_modes(), grid.n_points())?;
    let h3 = grid.h() * grid.h() * grid.h();
    let bounds = nonlinear_bounds(sys, state, grid);
    Ok(coeffs
        .e()
        .iter()
        .zip(&bounds)
        .map(|(e, (g, slope, _))| {
            let disp = 3.0 * fabs(*e) / h3;
            2.0 * g * slope + tau * disp * disp
        })
        .fold(0.0, f64::max))
}

/// Growth exponent before dropping the lower-order terms:
/// `2G S + τ (2G S + G M/h + |c|/h + 3|e|/h³)²`.
pub fn growth_exponent_full(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    state: &WaveState,
    grid: &Grid,
    tau: f64,
) -> Result<f64> {
    coeffs.ensure_matches(grid)?;
    state.check_shape(sys.n_modes(), grid.n_points())?;
    let h = grid.h();
    let bounds = nonlinear_bounds(sys, state, grid);
    Ok((0..sys.n_modes())
        .map(|n| {
            let (g, slope, amp) = bounds[n];
            let inner = 2.0 * g * slope
                + g * amp / h
                + fabs(sys.c()[n]) / h
                + 3.0 * fabs(coeffs.e()[n]) / (h * h * h);
            2.0 * g * slope + tau * inner * inner
        })
        .fold(0.0, f64::max))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
    }
    Ok(())
}

/// Largest τ with `τ (3 e_max/h³)² t0 ≤ α`, i.e. `α h⁶ / (9 e_max² t0)`.
pub fn single_rule_cap(e_max: f64, h: f64, t0: f64, alpha: f64) -> f64 {
    let h3 = h * h * h;
    alpha * h3 * h3 / (9.0 * e_max * e_max * t0)
}

/// Largest τ with `e_max · 81 τ³/(4h¹²) · t0 ≤ α`.
pub fn coupled_rule_cap(e_max: f64, h: f64, t0: f64, alpha: f64) -> f64 {
    let h6 = h * h * h * h * h * h;
    cbrt(4.0 * alpha * h6 * h6 / (81.0 * e_max * t0))
}

pub fn single_rule_product(tau: f64, e_max: f64, h: f64, t0: f64) -> f64 {
    let r = 3.0 * e_max / (h * h * h);
    tau * r * r * t0
}

pub fn coupled_rule_product(tau: f64, e_max: f64, h: f64, t0: f64) -> f64 {
    let h6 = h * h * h * h * h * h;
    e_max * 81.0 * tau * tau * tau / (4.0 * h6 * h6) * t0
}

/// Suggested time step for a run of length `t0` on the mesh `coeffs` was
/// built for.
///
/// With no dispersion at all the dispersive rules are vacuous and an
/// advection bound `α h / max_n(|c_n| + G_n A)` is used instead, `A` being
/// the initial amplitude. A system without dispersion, advection or coupling
/// imposes no limit and yields `f64::INFINITY`.
pub fn suggest_timestep(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    t0: f64,
    alpha: f64,
    amplitude: f64,
) -> Result<f64> {
    let h = coeffs.h();
    check_positive("t0", t0)?;
    check_positive("alpha", alpha)?;
    let e_max = coeffs.max_abs_e();
    if e_max > 0.0 {
        return Ok(f64::min(
            single_rule_cap(e_max, h, t0, alpha),
            coupled_rule_cap(e_max, h, t0, alpha),
        ));
    }
    let speed = (0..sys.n_modes())
        .map(|n| fabs(sys.c()[n]) + sys.max_coupling_into(n) * fabs(amplitude))
        .fold(0.0, f64::max);
    if speed > 0.0 {
        Ok(alpha * h / speed)
    } else {
        Ok(f64::INFINITY)
    }
}

/// `Pass` up to the suggestion, `Marginal` up to twice it, `Fail` beyond.
pub fn check_relation(tau: f64, suggested: f64) -> Verdict {
    if tau <= suggested {
        Verdict::Pass
    } else if tau <= MARGINAL_BAND * suggested {
        Verdict::Marginal
    } else {
        Verdict::Fail
    }
}

/// Full report for starting `state` on `grid` (with its τ) for duration `t0`.
pub fn stability_report(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    state: &WaveState,
    grid: &Grid,
    t0: f64,
    alpha: f64,
) -> Result<StabilityReport> {
    coeffs.ensure_matches(grid)?;
    let amplitude = state.as_slice().iter().fold(0.0, |acc, v| f64::max(acc, fabs(*v)));
    let tau = grid.tau();
    let tau_suggested = suggest_timestep(sys, coeffs, t0, alpha, amplitude)?;
    let e_max = coeffs.max_abs_e();
    Ok(StabilityReport {
        tau_suggested,
        tau_requested: tau,
        growth_exponent_a: growth_exponent(sys, coeffs, state, grid, tau)?,
        growth_exponent_full: growth_exponent_full(sys, coeffs, state, grid, tau)?,
        rule_single: single_rule_product(tau, e_max, grid.h(), t0),
        rule_coupled: coupled_rule_product(tau, e_max, grid.h(), t0),
        verdict: check_relation(tau, tau_suggested),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Health {
    Ok,
    Diverged,
}

/// `‖U‖ = (Σ_n Σ_i θ_{n,i}² h)^{1/2}` over a flat array.
pub(crate) fn vector_norm_of(values: &[f64], h: f64) -> f64 {
    sqrt(values.iter().map(|v| v * v).sum::<f64>() * h)
}

/// `Diverged` if any value is non-finite or `‖U‖` exceeds
/// [`DIVERGENCE_RATIO`] times `initial_norm` (an absolute 10⁶ when the
/// initial norm is zero).
pub fn monitor(state: &WaveState, h: f64, initial_norm: f64) -> Health {
    DivergenceMonitor { initial_norm }
        .check_slice(state.as_slice(), h)
        .0
}

/// Divergence threshold for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceMonitor {
    initial_norm: f64,
}

impl DivergenceMonitor {
    pub fn new(initial: &WaveState, h: f64) -> Self {
        DivergenceMonitor {
            initial_norm: vector_norm_of(initial.as_slice(), h),
        }
    }

    pub fn initial_norm(&self) -> f64 {
        self.initial_norm
    }

    /// Health and norm ratio (absolute norm when the reference is zero).
    pub fn check_slice(&self, values: &[f64], h: f64) -> (Health, f64) {
        let norm = vector_norm_of(values, h);
        let ratio = if self.initial_norm > 0.0 {
            norm / self.initial_norm
        } else {
            norm
        };
        if !norm.is_finite() || !(ratio <= DIVERGENCE_RATIO) {
            (Health::Diverged, ratio)
        } else {
            (Health::Ok, ratio)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{effective_dispersion, hs_integrable_system, Boundary};
    use alloc::vec;

    fn one_mode(c: f64, d: f64, g: f64) -> CoupledSystem {
        let cp = crate::model::Coupling { m: 0, k: 0, n: 0, value: g };
        let list = if g != 0.0 { vec![cp] } else { vec![] };
        CoupledSystem::new("test", vec![c], vec![d], &list).unwrap()
    }

    #[test]
    fn single_rule_cap_value() {
        let cap = single_rule_cap(0.25, 0.2, 10.0, 1.0);
        let expected = 6.4e-5 / 5.625;
        assert!((cap - expected).abs() < 1e-18, "{cap} vs {expected}");
        assert!((cap - 1.1378e-5).abs() < 1e-9);
        assert_eq!(single_rule_cap(0.25, 0.2, 10.0, 2.0), 2.0 * cap);
        let sys = one_mode(0.0, 0.25, 0.0);
        let coeffs = effective_dispersion(&sys, 0.2).unwrap();
        // Coupled cap is far looser here; the single rule binds.
        assert_eq!(suggest_timestep(&sys, &coeffs, 10.0, 1.0, 1.0).unwrap(), cap);
    }

    #[test]
    fn rule_products_hit_alpha_at_their_caps() {
        let (e, h, t0) = (0.5, 0.1, 1.0);
        let s = single_rule_cap(e, h, t0, 1.0);
        assert!((single_rule_product(s, e, h, t0) - 1.0).abs() < 1e-12);
        let c = coupled_rule_cap(e, h, t0, 1.0);
        assert!((coupled_rule_product(c, e, h, t0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn advection_fallback() {
        // d = c h²/6 cancels the effective dispersion.
        let d = 1.0 * 0.1 * 0.1 / 6.0;
        let sys = one_mode(1.0, d, 0.0);
        let coeffs = effective_dispersion(&sys, 0.1).unwrap();
        assert_eq!(suggest_timestep(&sys, &coeffs, 5.0, 1.0, 123.0).unwrap(), 0.1);
        let sys = one_mode(1.0, d, 2.0);
        let coeffs = effective_dispersion(&sys, 0.1).unwrap();
        assert!((suggest_timestep(&sys, &coeffs, 5.0, 1.0, 0.5).unwrap() - 0.05).abs() < 1e-15);
        let inert = one_mode(0.0, 0.0, 0.0);
        let coeffs = effective_dispersion(&inert, 0.1).unwrap();
        assert_eq!(suggest_timestep(&inert, &coeffs, 5.0, 1.0, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn suggest_rejects_bad_inputs() {
        let sys = hs_integrable_system();
        let coeffs = effective_dispersion(&sys, 0.1).unwrap();
        assert!(suggest_timestep(&sys, &coeffs, 0.0, 1.0, 1.0).is_err());
        assert!(suggest_timestep(&sys, &coeffs, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(check_relation(1.0, 1.0), Verdict::Pass);
        assert_eq!(check_relation(1.5, 1.0), Verdict::Marginal);
        assert_eq!(check_relation(2.0, 1.0), Verdict::Marginal);
        assert_eq!(check_relation(100.0, 1.0), Verdict::Fail);
        assert_eq!(check_relation(1.0, f64::INFINITY), Verdict::Pass);
    }

    #[test]
    fn exponent_on_zero_state() {
        let sys = hs_integrable_system();
        let h = 0.1;
        let grid = Grid::new(0.0, h, 20, 1e-5, Boundary::Periodic).unwrap();
        let coeffs = effective_dispersion(&sys, h).unwrap();
        let zero = WaveState::zeros(2, 20, 0.0);
        let a = growth_exponent(&sys, &coeffs, &zero, &grid, 1e-5).unwrap();
        let r = 3.0 * 0.5 / (h * h * h);
        assert_eq!(a, 1e-5 * r * r);
        let flat = one_mode(0.0, 0.0, 0.0);
        let coeffs = effective_dispersion(&flat, h).unwrap();
        let s = WaveState::from_modes(0.0, vec![(0..20).map(|i| i as f64).collect()]).unwrap();
        assert_eq!(growth_exponent(&flat, &coeffs, &s, &grid, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn monitor_thresholds() {
        let s = WaveState::from_modes(0.0, vec![vec![1.0; 4]]).unwrap();
        let n0 = vector_norm_of(s.as_slice(), 0.5);
        assert_eq!(monitor(&s, 0.5, n0), Health::Ok);
        assert_eq!(monitor(&s.scaled(2e6), 0.5, n0), Health::Diverged);
        let mut bad = s.clone();
        bad.mode_mut(0)[2] = f64::NAN;
        assert_eq!(monitor(&bad, 0.5, n0), Health::Diverged);
        let z = WaveState::zeros(1, 4, 0.0);
        assert_eq!(monitor(&z, 0.5, 0.0), Health::Ok);
        assert_eq!(monitor(&s.scaled(1e7), 0.5, 0.0), Health::Diverged);
    }
}

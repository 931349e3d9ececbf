//! Five-point difference operators and the two-stage update.
//!
//! With the spatial flux
//!
//! ```text
//! F_n,i = c_n D1(θ_n)_i + Σ_{m,k} g[m][k][n] θ_k,i D1(θ_m)_i + e_n D3(θ_n)_i
//! D1(v)_i = (v_{i+1} − v_{i−1}) / 2h
//! D3(v)_i = (v_{i+2} − 2v_{i+1} + 2v_{i−1} − v_{i−2}) / 2h³
//! ```
//!
//! one step of length τ is
//!
//! ```text
//! θ^{j+1/2} = θ^j − (τ/2) F(θ^j)
//! θ^{j+1}   = θ^j − τ F(θ^{j+1/2})
//! ```

mod sim;

pub use sim::{integrate, integrate_observed, Divergence, Observer, RunOutcome, RunSpec, RunStatus, Simulation};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Boundary, CoupledSystem, Coupling, Grid, SchemeCoefficients, WaveState};

#[inline]
fn at(values: &[f64], i: isize, boundary: Boundary) -> f64 {
    let n = values.len() as isize;
    match boundary {
        Boundary::Periodic => values[i.rem_euclid(n) as usize],
        Boundary::ZeroPadded => {
            if (0..n).contains(&i) {
                values[i as usize]
            } else {
                0.0
            }
        }
    }
}

/// `(v_{i+1} − v_{i−1}) / 2h` under `boundary`.
pub fn central_d1(values: &[f64], i: usize, h: f64, boundary: Boundary) -> f64 {
    let i = i as isize;
    (at(values, i + 1, boundary) - at(values, i - 1, boundary)) / (2.0 * h)
}

/// `(v_{i+2} − 2v_{i+1} + 2v_{i−1} − v_{i−2}) / 2h³` under `boundary`.
pub fn central_d3(values: &[f64], i: usize, h: f64, boundary: Boundary) -> f64 {
    let i = i as isize;
    (at(values, i + 2, boundary) - 2.0 * at(values, i + 1, boundary)
        + 2.0 * at(values, i - 1, boundary)
        - at(values, i - 2, boundary))
        / (2.0 * h * h * h)
}

fn d1_into(values: &[f64], h: f64, boundary: Boundary, out: &mut [f64]) {
    let n = values.len();
    let den = 2.0 * h;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / den;
    }
    for i in [0, n - 1] {
        out[i] = central_d1(values, i, h, boundary);
    }
}

/// Writes `scale · D3(values)` into `out`.
fn d3_scaled_into(values: &[f64], h: f64, scale: f64, boundary: Boundary, out: &mut [f64]) {
    let n = values.len();
    let den = 2.0 * h * h * h;
    for i in 2..n - 2 {
        out[i] = scale
            * ((values[i + 2] - 2.0 * values[i + 1] + 2.0 * values[i - 1] - values[i - 2]) / den);
    }
    for i in [0, 1, n - 2, n - 1] {
        out[i] = scale * central_d3(values, i, h, boundary);
    }
}

/// Reusable evaluator for the flux `F` of one system on one grid.
#[derive(Debug, Clone)]
pub struct FluxEvaluator {
    n_modes: usize,
    n_points: usize,
    h: f64,
    boundary: Boundary,
    c: Vec<f64>,
    e: Vec<f64>,
    couplings: Vec<Coupling>,
    slopes: Vec<f64>,
    dispersion: Vec<f64>,
}

impl FluxEvaluator {
    pub fn new(sys: &CoupledSystem, coeffs: &SchemeCoefficients, grid: &Grid) -> Result<Self> {
        coeffs.ensure_matches(grid)?;
        if coeffs.e().len() != sys.n_modes() {
            return Err(Error::ModeCount {
                expected: sys.n_modes(),
                found: coeffs.e().len(),
            });
        }
        let n_points = grid.n_points();
        Ok(FluxEvaluator {
            n_modes: sys.n_modes(),
            n_points,
            h: grid.h(),
            boundary: grid.boundary(),
            c: sys.c().to_vec(),
            e: coeffs.e().to_vec(),
            couplings: sys.couplings().collect(),
            slopes: vec![0.0; sys.n_modes() * n_points],
            dispersion: vec![0.0; n_points],
        })
    }

    /// Evaluates `F(theta)` into `out`; both are flat mode-major arrays.
    pub fn eval(&mut self, theta: &[f64], out: &mut [f64]) -> Result<()> {
        let np = self.n_points;
        debug_assert_eq!(theta.len(), self.n_modes * np);
        debug_assert_eq!(out.len(), self.n_modes * np);
        for (mode, slope) in theta.chunks_exact(np).zip(self.slopes.chunks_exact_mut(np)) {
            d1_into(mode, self.h, self.boundary, slope);
        }
        for n in 0..self.n_modes {
            let flux = &mut out[n * np..(n + 1) * np];
            let slope_n = &self.slopes[n * np..(n + 1) * np];
            let c = self.c[n];
            for (f, s) in flux.iter_mut().zip(slope_n) {
                *f = c * s;
            }
            for cp in self.couplings.iter().filter(|cp| cp.n == n) {
                let factor = &theta[cp.k * np..(cp.k + 1) * np];
                let slope = &self.slopes[cp.m * np..(cp.m + 1) * np];
                for ((f, a), s) in flux.iter_mut().zip(factor).zip(slope) {
                    *f += cp.value * a * s;
                }
            }
            d3_scaled_into(&theta[n * np..(n + 1) * np], self.h, self.e[n], self.boundary, &mut self.dispersion);
            for (f, d) in flux.iter_mut().zip(&self.dispersion) {
                *f += d;
            }
        }
        if let Some(p) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                mode: p / np,
                index: p % np,
            });
        }
        Ok(())
    }
}

/// `out = theta − dt · flux`.
fn stage(theta: &[f64], flux: &[f64], dt: f64, out: &mut [f64]) {
    for ((o, v), f) in out.iter_mut().zip(theta).zip(flux) {
        *o = v - dt * f;
    }
}

fn check_inputs(sys: &CoupledSystem, coeffs: &SchemeCoefficients, state: &WaveState, grid: &Grid) -> Result<()> {
    coeffs.ensure_matches(grid)?;
    state.check_shape(sys.n_modes(), grid.n_points())
}

/// The flux `F_{n,i}` for every mode and node, mode-major.
pub fn rhs(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    state: &WaveState,
    grid: &Grid,
) -> Result<Vec<f64>> {
    check_inputs(sys, coeffs, state, grid)?;
    let mut out = vec![0.0; state.as_slice().len()];
    FluxEvaluator::new(sys, coeffs, grid)?.eval(state.as_slice(), &mut out)?;
    Ok(out)
}

/// `θ^{j+1/2} = θ^j − (τ/2) F(θ^j)` at time `t + τ/2`.
pub fn half_step(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    state: &WaveState,
    grid: &Grid,
) -> Result<WaveState> {
    let flux = rhs(sys, coeffs, state, grid)?;
    let tau = grid.tau();
    let mut out = WaveState::zeros(state.n_modes(), state.n_points(), state.t() + 0.5 * tau);
    stage(state.as_slice(), &flux, 0.5 * tau, out.as_mut_slice());
    Ok(out)
}

/// `θ^{j+1} = θ^j − τ F(θ^{j+1/2})` at time `t + τ`.
pub fn full_step(
    sys: &CoupledSystem,
    coeffs: &SchemeCoefficients,
    base: &WaveState,
    half: &WaveState,
    grid: &Grid,
) -> Result<WaveState> {
    check_inputs(sys, coeffs, base, grid)?;
    let tau = grid.tau();
    let expected = base.t() + 0.5 * tau;
    if (half.t() - expected).abs() > 1e-9 * tau + 4.0 * f64::EPSILON * expected.abs() {
        return Err(Error::Sequencing {
            expected,
            found: half.t(),
        });
    }
    let flux = rhs(sys, coeffs, half, grid)?;
    let mut out = WaveState::zeros(base.n_modes(), base.n_points(), base.t() + tau);
    stage(base.as_slice(), &flux, tau, out.as_mut_slice());
    Ok(out)
}

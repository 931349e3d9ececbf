//! Coefficient sets, grids and wave states.
//!
//! A coupled system with `N` modes evolves
//!
//! ```text
//! (θ_n)_t + c_n (θ_n)_x + Σ_{m,k} g[m][k][n] θ_k (θ_m)_x + d_n (θ_n)_xxx = 0
//! ```
//!
//! `g[m][k][n]` multiplies the undifferentiated factor `θ_k` and the
//! differentiated factor `(θ_m)_x` in the equation for mode `n`. All mode
//! indices in this crate are zero based.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One nonzero entry `g[m][k][n]` of the coupling tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coupling {
    /// Differentiated factor `(θ_m)_x`.
    pub m: usize,
    /// Undifferentiated factor `θ_k`.
    pub k: usize,
    /// Equation (mode) the term contributes to.
    pub n: usize,
    pub value: f64,
}

/// Constant coefficients of an `N`-mode coupled KdV system.
///
/// Immutable after construction. The coupling tensor is stored densely; `N`
/// is small in practice.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(into = "SystemRepr", try_from = "SystemRepr")
)]
pub struct CoupledSystem {
    label: String,
    c: Vec<f64>,
    d: Vec<f64>,
    g: Vec<f64>,
}

/// Sparse interchange form of [`CoupledSystem`].
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRepr {
    pub label: String,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub couplings: Vec<Coupling>,
}

impl From<CoupledSystem> for SystemRepr {
    fn from(sys: CoupledSystem) -> Self {
        let couplings = sys.couplings().collect();
        SystemRepr {
            label: sys.label,
            c: sys.c,
            d: sys.d,
            couplings,
        }
    }
}

impl TryFrom<SystemRepr> for CoupledSystem {
    type Error = Error;

    fn try_from(repr: SystemRepr) -> Result<Self> {
        CoupledSystem::new(repr.label, repr.c, repr.d, &repr.couplings)
    }
}

impl CoupledSystem {
    /// Builds a system from per-mode velocities `c`, dispersion constants `d`
    /// and a list of nonzero couplings. Repeated couplings are summed.
    pub fn new(
        label: impl Into<String>,
        c: Vec<f64>,
        d: Vec<f64>,
        couplings: &[Coupling],
    ) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::InvalidSystem("at least one mode is required".to_string()));
        }
        if d.len() != n {
            return Err(Error::InvalidSystem(format!(
                "c has {n} entries but d has {}",
                d.len()
            )));
        }
        if let Some(bad) = c.iter().chain(d.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem(format!("non-finite coefficient {bad}")));
        }
        let mut g = vec![0.0; n * n * n];
        for cp in couplings {
            if cp.m >= n || cp.k >= n || cp.n >= n {
                return Err(Error::InvalidSystem(format!(
                    "coupling ({}, {}, {}) out of range for {n} modes",
                    cp.m, cp.k, cp.n
                )));
            }
            if !cp.value.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "non-finite coupling value {}",
                    cp.value
                )));
            }
            g[(cp.m * n + cp.k) * n + cp.n] += cp.value;
        }
        Ok(CoupledSystem {
            label: label.into(),
            c,
            d,
            g,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_modes(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `g[m][k][n]`.
    pub fn g(&self, m: usize, k: usize, n: usize) -> f64 {
        let nm = self.n_modes();
        self.g[(m * nm + k) * nm + n]
    }

    /// Nonzero coupling entries in `(m, k, n)` lexicographic order.
    pub fn couplings(&self) -> impl Iterator<Item = Coupling> + '_ {
        let nm = self.n_modes();
        self.g.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(idx, &value)| {
            Coupling {
                m: idx / (nm * nm),
                k: (idx / nm) % nm,
                n: idx % nm,
                value,
            }
        })
    }

    /// `max_{m,k} |g[m][k][n]|`.
    pub fn max_coupling_into(&self, n: usize) -> f64 {
        self.couplings()
            .filter(|cp| cp.n == n)
            .fold(0.0, |acc, cp| f64::max(acc, libm::fabs(cp.value)))
    }

    /// Returns a copy with one dispersion constant replaced.
    pub fn with_dispersion(&self, mode: usize, d: f64) -> Result<Self> {
        if mode >= self.n_modes() || !d.is_finite() {
            return Err(Error::InvalidSystem(format!(
                "cannot set d[{mode}] = {d}"
            )));
        }
        let mut out = self.clone();
        out.d[mode] = d;
        Ok(out)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// The integrable Hirota–Satsuma system
///
/// ```text
/// (θ₁)_t − 0.25 (θ₁)_xxx − 1.5 θ₁ (θ₁)_x + 3 θ₂ (θ₂)_x = 0
/// (θ₂)_t + 0.5  (θ₂)_xxx + 1.5 θ₁ (θ₂)_x             = 0
/// ```
pub fn hs_integrable_system() -> CoupledSystem {
    CoupledSystem::new(
        "hs-integrable",
        vec![0.0, 0.0],
        vec![-0.25, 0.5],
        &[
            Coupling { m: 0, k: 0, n: 0, value: -1.5 },
            Coupling { m: 1, k: 1, n: 0, value: 3.0 },
            Coupling { m: 1, k: 0, n: 1, value: 1.5 },
        ],
    )
    .expect("preset is valid")
}

/// Hirota–Satsuma with the first dispersion constant moved to −0.2, which
/// breaks integrability.
pub fn hs_nonintegrable_system() -> CoupledSystem {
    hs_integrable_system()
        .with_dispersion(0, -0.2)
        .expect("preset is valid")
        .with_label("hs-nonintegrable")
}

/// The first Hirota–Satsuma equation on its own (θ₂ ≡ 0).
pub fn kdv_single_system() -> CoupledSystem {
    CoupledSystem::new(
        "kdv-single",
        vec![0.0],
        vec![-0.25],
        &[Coupling { m: 0, k: 0, n: 0, value: -1.5 }],
    )
    .expect("preset is valid")
}

/// Boundary treatment for the five-point stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Boundary {
    /// Indices wrap modulo the number of points.
    #[default]
    Periodic,
    /// Values outside the mesh are exactly zero.
    ZeroPadded,
}

/// Uniform spatial mesh together with the time step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    x0: f64,
    h: f64,
    n_points: usize,
    tau: f64,
    boundary: Boundary,
}

/// Smallest mesh the `i ± 2` stencil can live on.
pub const MIN_POINTS: usize = 5;

impl Grid {
    pub fn new(x0: f64, h: f64, n_points: usize, tau: f64, boundary: Boundary) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("x0 = {x0} is not finite")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("h = {h} must be positive")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidGrid(format!("tau = {tau} must be positive")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{n_points} points; the stencil needs at least {MIN_POINTS}"
            )));
        }
        Ok(Grid {
            x0,
            h,
            n_points,
            tau,
            boundary,
        })
    }

    /// Mesh covering `[x0, x1]` with step `h`.
    ///
    /// `(x1 − x0)/h` must be an integer to within `1e-9` relative. A periodic
    /// mesh omits `x1` (it coincides with `x0`); a zero-padded mesh keeps it.
    pub fn from_extent(x0: f64, x1: f64, h: f64, tau: f64, boundary: Boundary) -> Result<Self> {
        if !(x1 > x0) {
            return Err(Error::InvalidGrid(format!("empty interval [{x0}, {x1}]")));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("h = {h} must be positive")));
        }
        let cells = cell_count(x0, x1, h)?;
        let n_points = match boundary {
            Boundary::Periodic => cells,
            Boundary::ZeroPadded => cells + 1,
        };
        Grid::new(x0, h, n_points, tau, boundary)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Coordinate of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Right end of the represented interval (`x1` of [`Grid::from_extent`]).
    pub fn x1(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.x(self.n_points),
            Boundary::ZeroPadded => self.x(self.n_points - 1),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Grid::new(self.x0, self.h, self.n_points, tau, self.boundary)
    }
}

/// Number of cells of width `h` in `[x0, x1]`, rejecting non-integral ratios.
pub fn cell_count(x0: f64, x1: f64, h: f64) -> Result<usize> {
    let ratio = (x1 - x0) / h;
    let rounded = libm::round(ratio);
    if !ratio.is_finite() || rounded < 1.0 || libm::fabs(ratio - rounded) > 1e-9 * ratio {
        return Err(Error::InvalidGrid(format!(
            "(x1 - x0)/h = {ratio} is not an integer"
        )));
    }
    Ok(rounded as usize)
}

/// All mode amplitudes at one time level, stored mode-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaveState {
    t: f64,
    n_modes: usize,
    n_points: usize,
    theta: Vec<f64>,
}

impl WaveState {
    pub fn zeros(n_modes: usize, n_points: usize, t: f64) -> Self {
        WaveState {
            t,
            n_modes,
            n_points,
            theta: vec![0.0; n_modes * n_points],
        }
    }

    /// Builds a state from one array per mode; all arrays must have the same
    /// length.
    pub fn from_modes(t: f64, modes: Vec<Vec<f64>>) -> Result<Self> {
        let n_modes = modes.len();
        let n_points = modes.first().map_or(0, Vec::len);
        if n_modes == 0 || modes.iter().any(|m| m.len() != n_points) {
            return Err(Error::InvalidArgument(
                "mode arrays must be non-empty and of equal length".to_string(),
            ));
        }
        Ok(WaveState {
            t,
            n_modes,
            n_points,
            theta: modes.concat(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        &self.theta[n * self.n_points..(n + 1) * self.n_points]
    }

    pub fn mode_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.theta[n * self.n_points..(n + 1) * self.n_points]
    }

    pub fn modes(&self) -> impl Iterator<Item = &[f64]> {
        self.theta.chunks_exact(self.n_points)
    }

    /// Flat mode-major view.
    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.theta
    }

    /// First `(mode, index)` holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.theta
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.n_points, p % self.n_points))
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    pub fn check_shape(&self, n_modes: usize, n_points: usize) -> Result<()> {
        if self.n_modes != n_modes || self.n_points != n_points {
            return Err(Error::ShapeMismatch {
                expected_modes: n_modes,
                expected_points: n_points,
                found_modes: self.n_modes,
                found_points: self.n_points,
            });
        }
        Ok(())
    }

    /// Scales every amplitude by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.theta.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Effective dispersion `e_n = d_n − c_n h²/6` for one spatial step.
///
/// Tied to the `h` it was computed for; the scheme rejects it on any other
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCoefficients {
    e: Vec<f64>,
    h: f64,
}

impl SchemeCoefficients {
    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn max_abs_e(&self) -> f64 {
        self.e.iter().fold(0.0, |acc, e| f64::max(acc, libm::fabs(*e)))
    }

    pub fn ensure_matches(&self, grid: &Grid) -> Result<()> {
        if self.h != grid.h() {
            return Err(Error::StaleCoefficients {
                coeff_h: self.h,
                grid_h: grid.h(),
            });
        }
        Ok(())
    }
}

pub fn effective_dispersion(sys: &CoupledSystem, h: f64) -> Result<SchemeCoefficients> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("h = {h} must be positive")));
    }
    let e = sys
        .c()
        .iter()
        .zip(sys.d())
        .map(|(&c, &d)| d - c * h * h / 6.0)
        .collect();
    Ok(SchemeCoefficients { e, h })
}

//! Closed-form Hirota–Satsuma one-soliton and initial-condition generators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, cosh, fabs, sin, sinh, sqrt};

use crate::error::{Error, Result};
use crate::model::{Grid, WaveState};

/// Denominators smaller than this are treated as poles.
pub const SINGULARITY_FLOOR: f64 = 1e-12;

/// Beyond this |λ₂| both modes are below the smallest normal double.
const FAR_FIELD: f64 = 700.0;

/// Full width at half maximum of `2 sech²(x)`, i.e. `2 acosh(√2)`.
pub const UNIT_SOLITON_FWHM: f64 = 1.762_747_174_039_086;

/// `(m, d)` of the two-parameter soliton. `|d| < 1` keeps it pole free;
/// larger `|d|` needs `allow_singular`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolitonParams {
    pub m: f64,
    pub d: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub allow_singular: bool,
}

impl SolitonParams {
    pub fn new(m: f64, d: f64) -> Result<Self> {
        let p = SolitonParams {
            m,
            d,
            allow_singular: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `|d| ≥ 1` allowed; evaluation may still hit a pole.
    pub fn singular(m: f64, d: f64) -> Self {
        SolitonParams {
            m,
            d,
            allow_singular: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_finite() || !self.d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "soliton parameters must be finite (m = {}, d = {})",
                self.m, self.d
            )));
        }
        if fabs(self.d) >= 1.0 && !self.allow_singular {
            return Err(Error::InvalidArgument(format!(
                "|d| = {} >= 1 produces poles; set allow_singular to permit it",
                fabs(self.d)
            )));
        }
        Ok(())
    }

    /// Mode-1 value at the origin at `t = 0`: `2m²(1−d)/(1+d)`.
    ///
    /// For `d = 0` this is also the maximum of the profile.
    pub fn origin_amplitude(&self) -> f64 {
        2.0 * self.m * self.m * (1.0 - self.d) / (1.0 + self.d)
    }

    /// Mode-2 value at the origin at `t = 0`.
    pub fn origin_amplitude_mode2(&self) -> f64 {
        sqrt(2.0 + 2.0 * self.d * self.d) * self.m * self.m / (1.0 + self.d)
    }

    /// The positive `m` whose origin amplitude is `amplitude` at this `d`.
    pub fn m_for_amplitude(amplitude: f64, d: f64) -> Result<f64> {
        if !(amplitude > 0.0) || !(fabs(d) < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "no soliton with amplitude {amplitude} at d = {d}"
            )));
        }
        Ok(sqrt(amplitude * (1.0 + d) / (2.0 * (1.0 - d))))
    }
}

/// Exact one-soliton of the integrable Hirota–Satsuma system at `(x, t)`.
///
/// ```text
/// λ₁ = m³t/2 + mx,  λ₂ = m³t/2 − mx,  D = d cos λ₁ + cosh λ₂
/// θ₁ = −2m² (d² − 1 + 2d sin λ₁ sinh λ₂) / D²
/// θ₂ = √(2 + 2d²) m² / D
/// ```
pub fn hs_one_soliton(x: f64, t: f64, p: &SolitonParams) -> Result<(f64, f64)> {
    hs_one_soliton_with_floor(x, t, p, SINGULARITY_FLOOR)
}

pub fn hs_one_soliton_with_floor(
    x: f64,
    t: f64,
    p: &SolitonParams,
    floor: f64,
) -> Result<(f64, f64)> {
    p.validate()?;
    let SolitonParams { m, d, .. } = *p;
    let m2 = m * m;
    let l1 = 0.5 * m2 * m * t + m * x;
    let l2 = 0.5 * m2 * m * t - m * x;
    if fabs(l2) > FAR_FIELD {
        return Ok((0.0, 0.0));
    }
    let den = d * cos(l1) + cosh(l2);
    if !(fabs(den) >= floor) {
        return Err(Error::Singular { x, t, d });
    }
    let theta1 = -2.0 * m2 * (-1.0 + d * d + 2.0 * d * sin(l1) * sinh(l2)) / (den * den);
    let theta2 = sqrt(2.0 + 2.0 * d * d) * m2 / den;
    Ok((theta1, theta2))
}

/// Compact pulse placed on mode 1 (and optionally mode 2).
///
/// `width` is the full support. Unset width and height default to the
/// `m = 1, d = 0` soliton: peak 2, and the same half-maximum width.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pulse {
    #[cfg_attr(feature = "serde", serde(default))]
    pub center: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub width: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub height: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mode2_height: f64,
}

/// Initial data for a run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "kebab-case")
)]
pub enum InitialCondition {
    /// The closed-form soliton at `t = 0`.
    HsSoliton(SolitonParams),
    /// `amplitude_scale · θ(x / width_scale, 0)` on both modes.
    HsSolitonScaled {
        #[cfg_attr(feature = "serde", serde(flatten))]
        params: SolitonParams,
        #[cfg_attr(feature = "serde", serde(default = "default_width_scale"))]
        width_scale: f64,
        #[cfg_attr(feature = "serde", serde(default = "default_amplitude_scale"))]
        amplitude_scale: f64,
    },
    /// Discontinuous top-hat.
    Box(Pulse),
    /// Continuous tent with a kink at the apex.
    Triangle(Pulse),
    /// Pre-sampled values, one array per mode.
    Custom { modes: Vec<Vec<f64>> },
}

pub const DEFAULT_WIDTH_SCALE: f64 = 10.0;
pub const DEFAULT_AMPLITUDE_SCALE: f64 = 2.0;

#[cfg(feature = "serde")]
fn default_width_scale() -> f64 {
    DEFAULT_WIDTH_SCALE
}

#[cfg(feature = "serde")]
fn default_amplitude_scale() -> f64 {
    DEFAULT_AMPLITUDE_SCALE
}

impl InitialCondition {
    pub fn scaled(params: SolitonParams) -> Self {
        InitialCondition::HsSolitonScaled {
            params,
            width_scale: DEFAULT_WIDTH_SCALE,
            amplitude_scale: DEFAULT_AMPLITUDE_SCALE,
        }
    }

    /// Soliton parameters when the closed form describes the whole run.
    pub fn exact_params(&self) -> Option<SolitonParams> {
        match self {
            InitialCondition::HsSoliton(p) => Some(*p),
            _ => None,
        }
    }
}

/// Closed-form state at time `t` on every node of `grid`.
///
/// Mode 1 gets θ₁, mode 2 gets θ₂; any further modes are zero. A one-mode
/// state keeps θ₁ only.
pub fn hs_exact_state(p: &SolitonParams, grid: &Grid, t: f64, n_modes: usize) -> Result<WaveState> {
    sample_soliton(p, grid, t, n_modes, 1.0, 1.0)
}

fn sample_soliton(
    p: &SolitonParams,
    grid: &Grid,
    t: f64,
    n_modes: usize,
    width_scale: f64,
    amplitude_scale: f64,
) -> Result<WaveState> {
    if n_modes == 0 {
        return Err(Error::ModeCount {
            expected: 1,
            found: 0,
        });
    }
    let mut state = WaveState::zeros(n_modes, grid.n_points(), t);
    for i in 0..grid.n_points() {
        let (a, b) = hs_one_soliton(grid.x(i) / width_scale, t, p)?;
        state.mode_mut(0)[i] = amplitude_scale * a;
        if n_modes > 1 {
            state.mode_mut(1)[i] = amplitude_scale * b;
        }
    }
    Ok(state)
}

/// Samples `ic` on `grid` at `t = 0`.
pub fn sample_ic(ic: &InitialCondition, grid: &Grid, n_modes: usize) -> Result<WaveState> {
    let state = match ic {
        InitialCondition::HsSoliton(p) => sample_soliton(p, grid, 0.0, n_modes, 1.0, 1.0)?,
        InitialCondition::HsSolitonScaled {
            params,
            width_scale,
            amplitude_scale,
        } => {
            if !(*width_scale > 0.0) || !amplitude_scale.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "scale factors must be finite with positive width (got {width_scale}, {amplitude_scale})"
                )));
            }
            sample_soliton(params, grid, 0.0, n_modes, *width_scale, *amplitude_scale)?
        }
        InitialCondition::Box(pulse) => {
            let width = pulse.width.unwrap_or(UNIT_SOLITON_FWHM);
            sample_pulse(pulse, width, grid, n_modes, |u| if u <= 1.0 { 1.0 } else { 0.0 })?
        }
        InitialCondition::Triangle(pulse) => {
            let width = pulse.width.unwrap_or(2.0 * UNIT_SOLITON_FWHM);
            sample_pulse(pulse, width, grid, n_modes, |u| f64::max(0.0, 1.0 - u))?
        }
        InitialCondition::Custom { modes } => {
            let state = WaveState::from_modes(0.0, modes.clone())?;
            state.check_shape(n_modes, grid.n_points())?;
            state
        }
    };
    if let Some((mode, index)) = state.first_non_finite() {
        return Err(Error::InvalidConfig(format!(
            "initial condition is not finite in mode {mode} at index {index}"
        )));
    }
    Ok(state)
}

fn sample_pulse(
    pulse: &Pulse,
    width: f64,
    grid: &Grid,
    n_modes: usize,
    profile: impl Fn(f64) -> f64,
) -> Result<WaveState> {
    let height = pulse.height.unwrap_or(2.0);
    if !(width > 0.0) || !height.is_finite() || !pulse.center.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "pulse needs positive width and finite height (width {width}, height {height})"
        )));
    }
    let half = 0.5 * width;
    let last = grid.x(grid.n_points() - 1);
    if pulse.center - half < grid.x0() || pulse.center + half > last {
        return Err(Error::InvalidConfig(format!(
            "pulse support [{}, {}] exceeds the domain [{}, {last}]",
            pulse.center - half,
            pulse.center + half,
            grid.x0()
        )));
    }
    if pulse.mode2_height != 0.0 && n_modes < 2 {
        return Err(Error::ModeCount {
            expected: 2,
            found: n_modes,
        });
    }
    let mut state = WaveState::zeros(n_modes, grid.n_points(), 0.0);
    for i in 0..grid.n_points() {
        let shape = profile(fabs(grid.x(i) - pulse.center) / half);
        state.mode_mut(0)[i] = height * shape;
        if n_modes > 1 {
            state.mode_mut(1)[i] = pulse.mode2_height * shape;
        }
    }
    Ok(state)
}

/// `Σ_i (1 + |x_i|) |θ_{n,i}| h` per mode.
///
/// A finite value with little mass near the edges indicates data that decays
/// fast enough for the unbounded-domain problem.
pub fn decay_integral(state: &WaveState, grid: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; state.n_modes()];
    for (acc, mode) in out.iter_mut().zip(state.modes()) {
        *acc = mode
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 + fabs(grid.x(i))) * fabs(*v))
            .sum::<f64>()
            * grid.h();
    }
    out
}

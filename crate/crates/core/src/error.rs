use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while building or stepping a system.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidSystem(String),
    InvalidGrid(String),
    InvalidArgument(String),
    InvalidConfig(String),
    /// Scheme coefficients were derived for a different spatial step.
    StaleCoefficients { coeff_h: f64, grid_h: f64 },
    ShapeMismatch {
        expected_modes: usize,
        expected_points: usize,
        found_modes: usize,
        found_points: usize,
    },
    ModeCount { expected: usize, found: usize },
    /// The closed-form soliton hit (or came within the floor of) a pole.
    Singular { x: f64, t: f64, d: f64 },
    /// A flux or state value became non-finite at (mode, grid index).
    Diverged { mode: usize, index: usize },
    /// The vector norm grew past the divergence threshold.
    Blowup { ratio: f64 },
    /// The simulation already diverged and refuses further steps.
    AlreadyDiverged,
    /// `full_step` was handed a half state at the wrong time level.
    Sequencing { expected: f64, found: f64 },
    /// The time step fails the stability relation and no override was given.
    StabilityGate { tau: f64, suggested: f64 },
    NonPositiveAmplitude(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSystem(msg) => write!(f, "invalid coupled system: {msg}"),
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::StaleCoefficients { coeff_h, grid_h } => write!(
                f,
                "scheme coefficients computed for h = {coeff_h} but grid uses h = {grid_h}"
            ),
            Error::ShapeMismatch {
                expected_modes,
                expected_points,
                found_modes,
                found_points,
            } => write!(
                f,
                "state shape {found_modes}x{found_points} does not match {expected_modes}x{expected_points}"
            ),
            Error::ModeCount { expected, found } => {
                write!(f, "expected {expected} modes, found {found}")
            }
            Error::Singular { x, t, d } => {
                write!(f, "soliton denominator vanishes at x = {x}, t = {t} (d = {d})")
            }
            Error::Diverged { mode, index } => {
                write!(f, "non-finite value in mode {mode} at grid index {index}")
            }
            Error::Blowup { ratio } => {
                write!(f, "vector norm grew by a factor {ratio:e}")
            }
            Error::AlreadyDiverged => f.write_str("simulation has diverged; no further steps"),
            Error::Sequencing { expected, found } => write!(
                f,
                "half-step state is at t = {found}, expected t = {expected}"
            ),
            Error::StabilityGate { tau, suggested } => write!(
                f,
                "time step {tau:e} fails the stability relation (suggested {suggested:e})"
            ),
            Error::NonPositiveAmplitude(a) => {
                write!(f, "initial amplitude must be positive, got {a}")
            }
        }
    }
}

impl core::error::Error for Error {}

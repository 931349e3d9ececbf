//! Named scenarios. A config's `scenario` key starts from one of these.

use ckdv_core::analytic::{InitialCondition, Pulse, SolitonParams};
use ckdv_core::Boundary;

use crate::config::{GridSpec, OutputSpec, RunConfig, SystemSpec, TauSpec, TimeSpec};

pub const SCENARIOS: [&str; 8] = [
    "hs-soliton",
    "hs-soliton-A2",
    "hs-soliton-A34",
    "kdv-single-wide",
    "hs-multisoliton",
    "hs-nonintegrable",
    "hs-nonsmooth-box",
    "hs-nonsmooth-triangle",
];

/// Mode-1 amplitude of the A-labelled presets.
pub const A2_AMPLITUDE: f64 = 2.0;
pub const A34_AMPLITUDE: f64 = 3.4;

/// `d` of the A-labelled presets; the closed form is a travelling wave only
/// at `d = 0`.
pub const A_PRESET_D: f64 = 0.0;

/// Duration of the wide-pulse scenarios. The leading mode-1 soliton of
/// hs-multisoliton clears the initial hump near t = 7; the coupled run
/// blows up near t = 11.5 at the rule step.
pub const WIDE_T0: f64 = 8.0;

fn soliton(m: f64, d: f64) -> InitialCondition {
    InitialCondition::HsSoliton(SolitonParams::new(m, d).expect("preset parameters are valid"))
}

fn a_labelled(amplitude: f64) -> InitialCondition {
    let m = SolitonParams::m_for_amplitude(amplitude, A_PRESET_D).expect("positive amplitude");
    soliton(m, A_PRESET_D)
}

fn config(name: &str, system: &str, grid: GridSpec, t0: f64, ic: InitialCondition) -> RunConfig {
    RunConfig {
        scenario: Some(name.to_string()),
        system: SystemSpec::preset(system),
        grid,
        time: TimeSpec {
            t0,
            tau: TauSpec::Auto,
            alpha: ckdv_core::stability::DEFAULT_ALPHA,
        },
        ic,
        output: OutputSpec::default(),
    }
}

fn narrow() -> GridSpec {
    GridSpec {
        x0: -20.0,
        x1: 20.0,
        h: 0.1,
        boundary: Boundary::Periodic,
    }
}

fn wide() -> GridSpec {
    GridSpec {
        x0: -100.0,
        x1: 100.0,
        h: 0.2,
        boundary: Boundary::Periodic,
    }
}

pub fn scenario(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "hs-soliton" => config(name, "hs-integrable", narrow(), 1.0, soliton(1.0, 0.3)),
        "hs-soliton-A2" => config(name, "hs-integrable", narrow(), 1.0, a_labelled(A2_AMPLITUDE)),
        "hs-soliton-A34" => config(name, "hs-integrable", narrow(), 1.0, a_labelled(A34_AMPLITUDE)),
        "kdv-single-wide" => config(
            name,
            "kdv-single",
            wide(),
            WIDE_T0,
            InitialCondition::scaled(SolitonParams::new(1.0, 0.3).unwrap()),
        ),
        "hs-multisoliton" => config(
            name,
            "hs-integrable",
            wide(),
            WIDE_T0,
            InitialCondition::scaled(SolitonParams::new(1.0, 0.3).unwrap()),
        ),
        "hs-nonintegrable" => config(name, "hs-nonintegrable", narrow(), 1.0, soliton(1.0, 0.0)),
        "hs-nonsmooth-box" => config(name, "hs-integrable", narrow(), 1.0, InitialCondition::Box(Pulse::default())),
        "hs-nonsmooth-triangle" => config(
            name,
            "hs-integrable",
            narrow(),
            1.0,
            InitialCondition::Triangle(Pulse::default()),
        ),
        _ => return None,
    };
    Some(cfg)
}

pub fn scenario_presets() -> Vec<RunConfig> {
    SCENARIOS.iter().filter_map(|n| scenario(n)).collect()
}

//! Flux and the two stages on a seeded seven-node HS state, against a
//! scalar evaluation written out term by term.

use ckdv_core::scheme::{full_step, half_step, rhs};
use ckdv_core::{effective_dispersion, hs_integrable_system, Boundary, Grid, WaveState};

const THETA1: [f64; 7] = [0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0];
const THETA2: [f64; 7] = [0.5, 0.0, -1.0, 0.0, 0.25, 0.0, 0.0];
const H: f64 = 1.0;
const TAU: f64 = 0.01;

// Frozen from the scalar oracle below.
const FLUX1: [f64; 7] = [-0.125, 0.0, -1.125, 0.0, 1.125, 0.0, 0.125];
const FLUX2: [f64; 7] = [-0.25, 0.75, -0.0625, 1.25, 0.25, 0.25, -0.3125];
const HALF1: [f64; 7] = [0.000625, 0.0, 1.005625, 2.0, 0.994375, 0.0, -0.000625];
const HALF2: [f64; 7] = [0.50125, -0.00375, -0.9996875, -0.00625, 0.24875, -0.00125, 0.0015625];
const FULL1: [f64; 7] = [
    0.0012954150390625003,
    -9.614648437499999e-05,
    1.01128907421875,
    1.999976416015625,
    0.98880790625,
    -1.635351562499989e-05,
    -0.0012563115234375,
];
const FULL2: [f64; 7] = [
    0.5024695561523438,
    -0.00748515625,
    -0.99936239453125,
    -0.012490625,
    0.2474845859375,
    -0.0025046875000000004,
    0.0031461054687499995,
];

fn wrap(i: isize) -> usize {
    i.rem_euclid(7) as usize
}

fn slope(v: &[f64], i: usize) -> f64 {
    let i = i as isize;
    (v[wrap(i + 1)] - v[wrap(i - 1)]) / (2.0 * H)
}

fn third(v: &[f64], i: usize) -> f64 {
    let i = i as isize;
    (v[wrap(i + 2)] - 2.0 * v[wrap(i + 1)] + 2.0 * v[wrap(i - 1)] - v[wrap(i - 2)]) / (2.0 * H * H * H)
}

/// HS flux with c = 0: e = d, couplings spelled out.
fn scalar_flux(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f1 = (0..7)
        .map(|i| -0.25 * third(a, i) - 1.5 * a[i] * slope(a, i) + 3.0 * b[i] * slope(b, i))
        .collect();
    let f2 = (0..7)
        .map(|i| 0.5 * third(b, i) + 1.5 * a[i] * slope(b, i))
        .collect();
    (f1, f2)
}

fn axpy(base: &[f64], flux: &[f64], dt: f64) -> Vec<f64> {
    base.iter().zip(flux).map(|(u, f)| u - dt * f).collect()
}

fn assert_close(found: &[f64], expected: &[f64], what: &str) {
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, (f, e)) in found.iter().zip(expected).enumerate() {
        assert!(
            (f - e).abs() <= 1e-14 * scale,
            "{what}[{i}]: {f:e} vs {e:e}"
        );
    }
}

fn setup() -> (WaveState, Grid) {
    let state = WaveState::from_modes(0.0, vec![THETA1.to_vec(), THETA2.to_vec()]).unwrap();
    (state, Grid::new(0.0, H, 7, TAU, Boundary::Periodic).unwrap())
}

#[test]
fn scalar_oracle_reproduces_frozen_values() {
    let (f1, f2) = scalar_flux(&THETA1, &THETA2);
    assert_close(&f1, &FLUX1, "oracle flux1");
    assert_close(&f2, &FLUX2, "oracle flux2");
    let (h1, h2) = (axpy(&THETA1, &f1, TAU / 2.0), axpy(&THETA2, &f2, TAU / 2.0));
    assert_close(&h1, &HALF1, "oracle half1");
    assert_close(&h2, &HALF2, "oracle half2");
    let (g1, g2) = scalar_flux(&h1, &h2);
    assert_close(&axpy(&THETA1, &g1, TAU), &FULL1, "oracle full1");
    assert_close(&axpy(&THETA2, &g2, TAU), &FULL2, "oracle full2");
}

#[test]
fn operators_match_oracle() {
    let (state, grid) = setup();
    let sys = hs_integrable_system();
    let coeffs = effective_dispersion(&sys, H).unwrap();

    let flux = rhs(&sys, &coeffs, &state, &grid).unwrap();
    assert_close(&flux[..7], &FLUX1, "flux1");
    assert_close(&flux[7..], &FLUX2, "flux2");

    let half = half_step(&sys, &coeffs, &state, &grid).unwrap();
    assert_eq!(half.t(), TAU / 2.0);
    assert_close(half.mode(0), &HALF1, "half1");
    assert_close(half.mode(1), &HALF2, "half2");

    let full = full_step(&sys, &coeffs, &state, &half, &grid).unwrap();
    assert_eq!(full.t(), TAU);
    assert_close(full.mode(0), &FULL1, "full1");
    assert_close(full.mode(1), &FULL2, "full2");
}

#[test]
fn simulation_step_equals_the_two_stages() {
    let (state, grid) = setup();
    let mut sim = ckdv_core::Simulation::new(hs_integrable_system(), grid, state).unwrap();
    let next = sim.advance().unwrap();
    assert_close(next.mode(0), &FULL1, "advance1");
    assert_close(next.mode(1), &FULL2, "advance2");
}

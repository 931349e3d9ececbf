use ckdv_core::analytic::{decay_integral, hs_exact_state, hs_one_soliton, sample_ic, InitialCondition, SolitonParams};
use ckdv_core::diagnostics::hs_conserved;
use ckdv_core::{Boundary, Grid};
use proptest::prelude::*;

/// The two-parameter soliton written out directly.
fn closed_form(x: f64, t: f64, m: f64, d: f64) -> (f64, f64) {
    let l1 = 0.5 * m.powi(3) * t + m * x;
    let l2 = 0.5 * m.powi(3) * t - m * x;
    let den = d * l1.cos() + l2.cosh();
    let a = -2.0 * m * m * (d * d - 1.0 + 2.0 * d * l1.sin() * l2.sinh()) / (den * den);
    let b = (2.0 + 2.0 * d * d).sqrt() * m * m / den;
    (a, b)
}

fn grid(h: f64) -> Grid {
    Grid::from_extent(-20.0, 20.0, h, 1e-3, Boundary::Periodic).unwrap()
}

proptest! {
    #[test]
    fn matches_direct_formula(x in -15.0..15.0f64, t in 0.0..2.0f64, m in 0.3..1.5f64, d in 0.0..0.9f64) {
        let p = SolitonParams::new(m, d).unwrap();
        let (a, b) = hs_one_soliton(x, t, &p).unwrap();
        let (ra, rb) = closed_form(x, t, m, d);
        prop_assert!((a - ra).abs() <= 1e-12 * (1.0 + ra.abs()));
        prop_assert!((b - rb).abs() <= 1e-12 * (1.0 + rb.abs()));
    }

    #[test]
    fn travels_right_at_half_m_squared(x in -10.0..10.0f64, t in 0.0..3.0f64, m in 0.3..1.5f64) {
        let p = SolitonParams::new(m, 0.0).unwrap();
        let shifted = hs_one_soliton(x, t, &p).unwrap();
        let origin = hs_one_soliton(x - 0.5 * m * m * t, 0.0, &p).unwrap();
        prop_assert!((shifted.0 - origin.0).abs() < 1e-12);
        prop_assert!((shifted.1 - origin.1).abs() < 1e-12);
    }

    #[test]
    fn amplitude_doubles_with_m_squared(m in 0.2..1.2f64) {
        let one = hs_one_soliton(0.0, 0.0, &SolitonParams::new(m, 0.0).unwrap()).unwrap().0;
        let two = hs_one_soliton(0.0, 0.0, &SolitonParams::new(m * 2f64.sqrt(), 0.0).unwrap()).unwrap().0;
        prop_assert!((one - 2.0 * m * m).abs() < 1e-12);
        prop_assert!((two - 2.0 * one).abs() < 1e-11);
    }

    #[test]
    fn second_mode_peak_falls_with_d(m in 0.3..1.5f64, d in 0.0..0.95f64, dd in 0.001..0.04f64) {
        let lo = SolitonParams::new(m, d).unwrap();
        let hi = SolitonParams::new(m, d + dd).unwrap();
        prop_assert!(hs_one_soliton(0.0, 0.0, &hi).unwrap().1 < hs_one_soliton(0.0, 0.0, &lo).unwrap().1);
    }
}

#[test]
fn width_halves_when_m_doubles() {
    // Half-maximum point of θ₁ = 2m² sech²(m x) at d = 0.
    let half_width = |m: f64| {
        let p = SolitonParams::new(m, 0.0).unwrap();
        let peak = 2.0 * m * m;
        let (mut lo, mut hi) = (0.0, 20.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hs_one_soliton(mid, 0.0, &p).unwrap().0 > 0.5 * peak {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    assert!((half_width(0.5) - 2.0 * half_width(1.0)).abs() < 1e-10);
    assert!((2.0 * half_width(1.0) - ckdv_core::analytic::UNIT_SOLITON_FWHM).abs() < 1e-12);
}

#[test]
fn conserved_value_matches_quadrature() {
    // High-precision quadrature of ∫(θ₁²/2 − θ₂²)dx at m = 1, d = 0.3, t = 0
    // over [−20, 20]: −1.3333333333333333067.
    let g = grid(0.1);
    let p = SolitonParams::new(1.0, 0.3).unwrap();
    let state = sample_ic(&InitialCondition::HsSoliton(p), &g, 2).unwrap();
    let value = hs_conserved(&state, g.h()).unwrap();
    assert!((value - (-1.333_333_333_333_333_3)).abs() < 1e-10, "{value}");
}

#[test]
fn conserved_value_is_time_independent_for_the_closed_form() {
    let g = grid(0.05);
    let p = SolitonParams::new(1.0, 0.3).unwrap();
    let c0 = hs_conserved(&hs_exact_state(&p, &g, 0.0, 2).unwrap(), g.h()).unwrap();
    for t in [0.3, 0.7, 1.5] {
        let c = hs_conserved(&hs_exact_state(&p, &g, t, 2).unwrap(), g.h()).unwrap();
        assert!((c - c0).abs() < 1e-9, "t = {t}: {c} vs {c0}");
    }
}

#[test]
fn decay_integral_is_boundary_localised() {
    let g = grid(0.1);
    let p = SolitonParams::new(1.0, 0.0).unwrap();
    let state = hs_exact_state(&p, &g, 0.0, 2).unwrap();
    let full = decay_integral(&state, &g);
    // ∫(1+|x|)·2sech²x dx = 4 + 4 ln 2 and ∫(1+|x|)·√2 sech x dx = √2(π + 4G).
    // The kink of |x| limits the rectangle sum to O(h²): about h²/6·θ(0).
    let catalan = 0.915_965_594_177_219;
    assert!((full[0] - (4.0 + 4.0 * 2f64.ln())).abs() < 5e-3, "{}", full[0]);
    assert!((full[1] - 2f64.sqrt() * (std::f64::consts::PI + 4.0 * catalan)).abs() < 5e-3, "{}", full[1]);
    let tail: f64 = (0..g.n_points())
        .filter(|&i| g.x(i).abs() > 15.0)
        .map(|i| state.mode(0)[i].abs())
        .sum();
    assert!(tail < 1e-10);
}

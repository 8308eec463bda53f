//! Minimum-uncertainty Gaussian initial states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::setup::PhysicalSetup;

/// Coherent state centred at `(q, p)` in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub q: f64,
    pub p: f64,
    pub setup: PhysicalSetup,
}

impl CoherentState {
    pub fn new(q: f64, p: f64, setup: PhysicalSetup) -> Result<Self> {
        if !q.is_finite() {
            return Err(invalid("q", "must be finite"));
        }
        if !p.is_finite() {
            return Err(invalid("p", "must be finite"));
        }
        Ok(Self { q, p, setup })
    }

    /// Recovers `(q, p)` from a complex label.
    pub fn from_label(z: Complex64, setup: PhysicalSetup) -> Result<Self> {
        let s = std::f64::consts::SQRT_2;
        Self::new(z.re * s * setup.b(), z.im * s * setup.c(), setup)
    }

    pub fn label(&self) -> Complex64 {
        z_label(self)
    }

    pub fn amplitude(&self, x: f64) -> Complex64 {
        coherent_amplitude(x, self)
    }
}

/// `z = (q/b + i p/c) / sqrt(2)`.
pub fn z_label(state: &CoherentState) -> Complex64 {
    let s = state.setup;
    Complex64::new(state.q / s.b(), state.p / s.c()) / std::f64::consts::SQRT_2
}

/// Position representation `<x|z>` with phase `exp[i p (x - q/2) / hbar]`.
pub fn coherent_amplitude(x: f64, state: &CoherentState) -> Complex64 {
    let s = state.setup;
    let b = s.b();
    let norm = PI.powf(-0.25) / b.sqrt();
    let dx = x - state.q;
    let exponent = Complex64::new(-dx * dx / (2.0 * b * b), state.p * (x - 0.5 * state.q) / s.hbar());
    norm * exponent.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn state(q: f64, p: f64, b: f64, c: f64) -> CoherentState {
        CoherentState::new(q, p, PhysicalSetup::new(0.5, 50.0, b, c).unwrap()).unwrap()
    }

    // Composite Simpson rule, independent of anything in the crate.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn peak_modulus() {
        let st = state(-60.0, 1.0, 0.7, 1.3);
        let expected = PI.powf(-0.25) / 0.7f64.sqrt();
        assert_relative_eq!(st.amplitude(-60.0).norm(), expected, max_relative = 1e-15);
    }

    #[test]
    fn one_sigma_point() {
        let st = state(3.0, 0.0, 0.5, 0.5);
        let peak = st.amplitude(3.0).norm_sqr();
        for x in [2.5, 3.5] {
            assert_relative_eq!(st.amplitude(x).norm_sqr(), (-1.0f64).exp() * peak, max_relative = 1e-14);
        }
    }

    #[test]
    fn unit_norm_by_quadrature() {
        for &b in &[0.1, 0.5, 1.0] {
            for &(q, p) in &[(-60.0, 1.0), (0.0, 0.0), (12.0, -3.0)] {
                let st = state(q, p, b, b);
                let norm = simpson(|x| st.amplitude(x).norm_sqr(), q - 12.0 * b, q + 12.0 * b, 4000);
                assert!((norm - 1.0).abs() < 1e-10, "b={b} q={q} p={p} norm={norm}");
            }
        }
        let st = state(-5.0, 2.0, 0.4, 2.5);
        let norm = simpson(|x| st.amplitude(x).norm_sqr(), -5.0 - 4.8, -5.0 + 4.8, 4000);
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn labels() {
        assert_eq!(state(0.0, 0.0, 1.0, 1.0).label(), Complex64::new(0.0, 0.0));
        let z = state(0.8, 0.0, 0.8, 1.0).label();
        assert_relative_eq!(z.re, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(z.im, 0.0);
        let z = state(-60.0, 1.0, 1.0, 1.0).label();
        assert_relative_eq!(z.re, -60.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(z.im, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn label_inverts(q in -100.0..100.0f64, p in -5.0..5.0f64, b in 0.1..3.0f64, c in 0.1..3.0f64) {
            let st = state(q, p, b, c);
            let back = CoherentState::from_label(st.label(), st.setup).unwrap();
            prop_assert!((back.q - q).abs() <= 1e-13 * (1.0 + q.abs()));
            prop_assert!((back.p - p).abs() <= 1e-13 * (1.0 + p.abs()));
        }

        #[test]
        fn density_symmetric_about_center(q in -80.0..80.0f64, p in -4.0..4.0f64, d in 0.0..3.0f64) {
            let st = state(q, p, 0.6, 0.9);
            let l = st.amplitude(q - d).norm_sqr();
            let r = st.amplitude(q + d).norm_sqr();
            prop_assert!((l - r).abs() <= 1e-11 * l.max(1e-300));
        }
    }
}

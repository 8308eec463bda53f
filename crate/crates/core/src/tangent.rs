//! Tangent-matrix elements from second derivatives of the action.
//!
//! With `S = S(x_f, T; x_i, 0)`, the upper row of the tangent matrix is
//! `m_qq = -S_ii / S_if` and `m_qp = -(c/b) / S_if`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setup::PhysicalSetup;

/// Upper row of the tangent matrix in `(x/b, p/c)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentElements {
    pub m_qq: f64,
    pub m_qp: f64,
}

impl TangentElements {
    /// From `S_ii` and `S_if`; fails near focal points where `S_if` vanishes.
    pub fn from_second_derivatives(s_ii: f64, s_if: f64, setup: &PhysicalSetup) -> Result<Self> {
        let ratio = setup.c() / setup.b();
        if !(s_if.abs() >= 1e-8 * ratio) || !s_ii.is_finite() {
            return Err(Error::FocalPoint { s_if });
        }
        Ok(Self { m_qq: -s_ii / s_if, m_qp: -ratio / s_if })
    }

    /// Free motion for a time `t`: `m_qq = 1`, `m_qp = t / lambda`.
    pub fn free(t: f64, setup: &PhysicalSetup) -> Self {
        Self { m_qq: 1.0, m_qp: t / setup.lambda() }
    }

    /// `m_qq + i m_qp`.
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.m_qq, self.m_qp)
    }

    pub fn negated(&self) -> Self {
        Self { m_qq: -self.m_qq, m_qp: -self.m_qp }
    }

    /// `m_qq^2 + m_qp^2`.
    pub fn modulus_sqr(&self) -> f64 {
        self.m_qq * self.m_qq + self.m_qp * self.m_qp
    }
}

/// Finite-difference stencil for the action derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    /// Symmetric 3x3 stencil, second-order accurate.
    Central,
    /// One-sided differences `[S(x + dx) - S(x)] / dx`, first-order accurate.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifference {
    pub stencil: Stencil,
    /// Step is `rel_step * max(1, |x|)` in each coordinate.
    pub rel_step: f64,
}

impl FiniteDifference {
    pub const DEFAULT_REL_STEP: f64 = 3e-4;

    pub fn central() -> Self {
        Self { stencil: Stencil::Central, rel_step: Self::DEFAULT_REL_STEP }
    }

    pub fn forward() -> Self {
        Self { stencil: Stencil::Forward, rel_step: Self::DEFAULT_REL_STEP }
    }

    fn step(&self, x: f64) -> f64 {
        let h = self.rel_step * x.abs().max(1.0);
        // representable step
        (x + h) - x
    }
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self::central()
    }
}

/// Tangent elements from numerical second derivatives of `action(x_i, x_f)`
/// around `(q, x_f)`.
pub fn tangent_from_action<F>(
    action: F,
    q: f64,
    x_f: f64,
    setup: &PhysicalSetup,
    fd: FiniteDifference,
) -> Result<TangentElements>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let h = fd.step(q);
    let k = fd.step(x_f);
    let (s_ii, s_if) = match fd.stencil {
        Stencil::Central => {
            let s0 = action(q, x_f)?;
            let sp = action(q + h, x_f)?;
            let sm = action(q - h, x_f)?;
            let s_ii = (sp - 2.0 * s0 + sm) / (h * h);
            let spp = action(q + h, x_f + k)?;
            let spm = action(q + h, x_f - k)?;
            let smp = action(q - h, x_f + k)?;
            let smm = action(q - h, x_f - k)?;
            (s_ii, (spp - spm - smp + smm) / (4.0 * h * k))
        }
        Stencil::Forward => {
            let s0 = action(q, x_f)?;
            let s1 = action(q + h, x_f)?;
            let s2 = action(q + 2.0 * h, x_f)?;
            let s_ii = (s2 - 2.0 * s1 + s0) / (h * h);
            let s10 = action(q + h, x_f + k)?;
            let s01 = action(q, x_f + k)?;
            (s_ii, (s10 - s1 - s01 + s0) / (h * k))
        }
    };
    TangentElements::from_second_derivatives(s_ii, s_if, setup)
}

//! Physical parameters of the square-barrier problem.
//!
//! The particle has unit mass. A coherent-state basis is fixed by a
//! position scale `b` and a momentum scale `c`; their product is the
//! reduced Planck constant and their ratio is `lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Barrier geometry plus coherent-state scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetupRepr", into = "SetupRepr")]
pub struct PhysicalSetup {
    v0: f64,
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct SetupRepr {
    v0: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl TryFrom<SetupRepr> for PhysicalSetup {
    type Error = crate::Error;
    fn try_from(r: SetupRepr) -> Result<Self> {
        PhysicalSetup::new(r.v0, r.a, r.b, r.c)
    }
}

impl From<PhysicalSetup> for SetupRepr {
    fn from(s: PhysicalSetup) -> Self {
        SetupRepr { v0: s.v0, a: s.a, b: s.b, c: s.c }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl PhysicalSetup {
    /// Barrier of height `v0` on `[-a, a]`, coherent scales `b` (position) and `c` (momentum).
    pub fn new(v0: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        positive("v0", v0)?;
        positive("a", a)?;
        positive("b", b)?;
        positive("c", c)?;
        Ok(Self { v0, a, b, c })
    }

    /// Symmetric scales `b = c = sqrt(hbar)`, i.e. `lambda = 1`.
    pub fn symmetric(v0: f64, a: f64, hbar: f64) -> Result<Self> {
        positive("hbar", hbar)?;
        let s = hbar.sqrt();
        Self::new(v0, a, s, s)
    }

    /// Builds from an explicit `(b, c, hbar)` triple, rejecting `hbar != b c`.
    pub fn with_hbar(v0: f64, a: f64, b: f64, c: f64, hbar: f64) -> Result<Self> {
        let setup = Self::new(v0, a, b, c)?;
        positive("hbar", hbar)?;
        if (setup.hbar() - hbar).abs() > 1e-12 * hbar {
            return Err(invalid("hbar", format!("{hbar} is inconsistent with b*c = {}", b * c)));
        }
        Ok(setup)
    }

    /// Barrier height 0.5, half-width 50, `hbar = 1`, `lambda = 1`.
    pub fn reference() -> Self {
        Self { v0: 0.5, a: 50.0, b: 1.0, c: 1.0 }
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn hbar(&self) -> f64 {
        self.b * self.c
    }

    pub fn lambda(&self) -> f64 {
        self.b / self.c
    }

    pub fn mass(&self) -> f64 {
        1.0
    }

    /// Momentum whose kinetic energy equals the barrier height, `sqrt(2 V0)`.
    pub fn critical_momentum(&self) -> f64 {
        (2.0 * self.v0).sqrt()
    }

    /// Same scales with a different barrier height.
    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        Self::new(v0, self.a, self.b, self.c)
    }

    /// Potential energy at `x`.
    pub fn potential(&self, x: f64) -> f64 {
        if x.abs() <= self.a {
            self.v0
        } else {
            0.0
        }
    }
}

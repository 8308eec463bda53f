//! Split-operator spectral propagation of the coherent state through the
//! square barrier, used as the reference solution.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::coherent::{coherent_amplitude, CoherentState};
use crate::error::{invalid, Error, Result};
use crate::numeric::pairwise_sum;
use crate::setup::PhysicalSetup;

/// Norm drift above which propagation is aborted.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Wavefunction sampled on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl GridState {
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn norm(&self) -> f64 {
        let d: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&d) * self.dx
    }

    pub fn densities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Largest `|psi|` within `width` of either end of the grid.
    pub fn boundary_amplitude(&self, width: f64) -> f64 {
        let k = ((width / self.dx) as usize).min(self.n / 2);
        self.values[..k].iter().chain(&self.values[self.n - k..]).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Linear interpolation of `|psi|^2`.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        let u = (x - self.x0) / self.dx;
        if !(u >= 0.0 && u <= (self.n - 1) as f64) {
            return Err(Error::OutOfRegion { x, region: "grid" });
        }
        let j = (u.floor() as usize).min(self.n - 2);
        let f = u - j as f64;
        Ok((1.0 - f) * self.values[j].norm_sqr() + f * self.values[j + 1].norm_sqr())
    }

    /// `int |psi|^2` over `x > x_min`, trapezoid rule on the nodes.
    pub fn mass_beyond(&self, x_min: f64) -> f64 {
        let d: Vec<f64> = (0..self.n).filter(|&j| self.x(j) > x_min).map(|j| self.values[j].norm_sqr()).collect();
        pairwise_sum(&d) * self.dx
    }
}

/// Discretisation controls. Unset values take the defaults `dx <= b/16`
/// (snapped so that both walls are nodes) and `dt <= 0.01 hbar / V0`; each
/// refinement level halves both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub refinement: u32,
    /// Half-widths of the spread packet kept between the packets and the grid ends.
    pub padding_sigmas: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { dx: None, dt: None, refinement: 0, padding_sigmas: 12.0 }
    }
}

impl GridParams {
    pub fn refined(self, levels: u32) -> Self {
        Self { refinement: self.refinement + levels, ..self }
    }

    fn spacing(&self, setup: &PhysicalSetup) -> f64 {
        let width = 2.0 * setup.a();
        let target = self.dx.unwrap_or(setup.b() / 16.0);
        let dx = width / (width / target).ceil();
        dx / f64::powi(2.0, self.refinement as i32)
    }

    fn step(&self, setup: &PhysicalSetup, t: f64) -> f64 {
        let dt = self.dt.unwrap_or(0.01 * setup.hbar() / setup.v0()).min(t.max(f64::MIN_POSITIVE));
        dt / f64::powi(2.0, self.refinement as i32)
    }
}

/// Stateful Strang-split propagator. Potential half steps of consecutive
/// steps are merged.
pub struct SplitStep {
    grid: GridState,
    setup: PhysicalSetup,
    params: GridParams,
    potential: Vec<f64>,
    k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    initial_norm: f64,
    // phase factors cached for the last step size
    cached_dt: f64,
    kinetic_phase: Vec<Complex64>,
    half_potential_phase: Vec<Complex64>,
}

impl std::fmt::Debug for SplitStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitStep").field("grid_n", &self.grid.n).field("t", &self.grid.t).finish()
    }
}

impl SplitStep {
    /// Grid sized to hold the packet and its reflection up to `t_max`.
    pub fn new(state: &CoherentState, t_max: f64, params: GridParams) -> Result<Self> {
        let setup = state.setup;
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(invalid("t_max", "must be finite and non-negative"));
        }
        if !(params.padding_sigmas > 0.0) {
            return Err(invalid("padding_sigmas", "must be positive"));
        }
        let (a, b, lam) = (setup.a(), setup.b(), setup.lambda());
        let (q, p) = (state.q, state.p);
        let sigma = b * (1.0 + (t_max / lam).powi(2)).sqrt();
        let pad = params.padding_sigmas * sigma;
        let reach = p.abs() * t_max;
        let lo = q.min(-2.0 * a - q - reach).min(q - reach) - pad;
        let hi = (q + reach + 2.0 * a).max(q).max(a) + pad;
        let dx = params.spacing(&setup);
        // put -a (and hence +a) on a node
        let k_left = ((-a - lo) / dx).ceil();
        let x0 = -a - k_left * dx;
        let n = (((hi - x0) / dx).ceil() as usize + 1).next_power_of_two();
        let values: Vec<Complex64> = (0..n).map(|j| coherent_amplitude(x0 + j as f64 * dx, state)).collect();
        let grid = GridState { x0, dx, n, values, t: 0.0 };

        let potential = (0..n)
            .map(|j| {
                let x = grid.x(j);
                let edge = 1e-9 * dx;
                if ((x.abs()) - a).abs() < edge {
                    0.5 * setup.v0()
                } else if x.abs() < a {
                    setup.v0()
                } else {
                    0.0
                }
            })
            .collect();
        let dk = 2.0 * PI / (n as f64 * dx);
        let k2 = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                (m * dk).powi(2)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch =
            vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        let initial_norm = grid.norm();
        Ok(Self {
            grid,
            setup,
            params,
            potential,
            k2,
            forward,
            inverse,
            scratch,
            initial_norm,
            cached_dt: f64::NAN,
            kinetic_phase: Vec::new(),
            half_potential_phase: Vec::new(),
        })
    }

    pub fn grid(&self) -> &GridState {
        &self.grid
    }

    pub fn into_grid(self) -> GridState {
        self.grid
    }

    pub fn initial_norm(&self) -> f64 {
        self.initial_norm
    }

    fn prepare(&mut self, dt: f64) {
        if self.cached_dt == dt {
            return;
        }
        let hbar = self.setup.hbar();
        let n = self.grid.n as f64;
        self.kinetic_phase = self.k2.iter().map(|&k2| Complex64::from_polar(1.0 / n, -0.5 * hbar * k2 * dt)).collect();
        self.half_potential_phase =
            self.potential.iter().map(|&v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar)).collect();
        self.cached_dt = dt;
    }

    /// Potential factor for `halves` half steps.
    fn apply_potential(&mut self, halves: u32) {
        for (v, f) in self.grid.values.iter_mut().zip(&self.half_potential_phase) {
            *v *= if halves == 2 { f * f } else { *f };
        }
    }

    fn apply_kinetic(&mut self) {
        self.forward.process_with_scratch(&mut self.grid.values, &mut self.scratch);
        for (v, f) in self.grid.values.iter_mut().zip(&self.kinetic_phase) {
            *v *= f;
        }
        self.inverse.process_with_scratch(&mut self.grid.values, &mut self.scratch);
    }

    fn check_norm(&self) -> Result<()> {
        let drift = (self.grid.norm() - self.initial_norm).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift });
        }
        Ok(())
    }

    /// Advance to absolute time `t`, with equal steps no longer than the
    /// configured `dt`.
    pub fn advance_to(&mut self, t: f64) -> Result<&GridState> {
        let span = t - self.grid.t;
        if span < 0.0 || !span.is_finite() {
            return Err(invalid("t", "must not precede the current grid time"));
        }
        if span == 0.0 {
            return Ok(&self.grid);
        }
        let dt_max = self.params.step(&self.setup, span);
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        self.prepare(dt);
        self.apply_potential(1);
        for i in 0..steps {
            self.apply_kinetic();
            let last = i + 1 == steps;
            self.apply_potential(if last { 1 } else { 2 });
            if i % 1000 == 999 {
                self.check_norm()?;
            }
        }
        self.grid.t = t;
        self.check_norm()?;
        Ok(&self.grid)
    }
}

/// Propagate the coherent state to time `t`.
pub fn propagate_split_step(state: &CoherentState, t: f64, params: GridParams) -> Result<GridState> {
    let mut prop = SplitStep::new(state, t, params)?;
    prop.advance_to(t)?;
    Ok(prop.into_grid())
}

/// `|psi|^2` of the grid state at `x`, linearly interpolated.
pub fn density_at(grid: &GridState, x: f64) -> Result<f64> {
    grid.density_at(x)
}

/// Plane-wave transmission probability through the square barrier at
/// wavenumber `k`.
pub fn transmission_probability(k: f64, setup: &PhysicalSetup) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid("k", "must be positive and finite"));
    }
    let hbar = setup.hbar();
    let (v0, a) = (setup.v0(), setup.a());
    let e = 0.5 * (hbar * k).powi(2);
    let y = 2.0 * a * (2.0 * (v0 - e).abs()).sqrt() / hbar;
    let shape = if e < v0 { sinhc(y) } else { sinc(y) };
    let r = 2.0 * (v0 * a * shape).powi(2) / (e * hbar * hbar);
    Ok(if r.is_finite() { 1.0 / (1.0 + r) } else { 0.0 })
}

fn sinhc(y: f64) -> f64 {
    if y < 1e-4 {
        1.0 + y * y / 6.0
    } else {
        y.sinh() / y
    }
}

fn sinc(y: f64) -> f64 {
    if y < 1e-4 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

//! Semiclassical wavefunction assembled from real trajectories.
//!
//! Each trajectory contributes
//!
//! ```text
//! psi = b^(-1/2) pi^(-1/4) (m_qq + i m_qp)^(-1/2)
//!       exp[ i S / hbar + i p q / (2 hbar) - (1/2) i m_qp / (m_qq + i m_qp) ((p - p_i) / c)^2 ]
//! ```
//!
//! Reflected and ghost contributions are normalised with the prefactor of the
//! mirrored tangent row `-(m_qq + i m_qp)`, so that at the reflecting wall they
//! coincide with the direct contribution; the edge phases `theta` (left wall)
//! and `theta'` (right wall) are then fixed by continuity of the modulus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coherent::CoherentState;
use crate::error::{Error, Result};
use crate::setup::PhysicalSetup;
use crate::trajectory::{
    after_trajectory, critical_time, direct_before, ghost_trajectory, inside_trajectory, reflected_before, Kind,
    Region, TangentMethod, Trajectory,
};

/// Complex amplitude carried by one trajectory at the observation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub kind: Kind,
    pub amplitude: Complex64,
}

/// Phase corrections fixed by continuity at the barrier walls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgePhases {
    /// Extra phase of the reflected contribution before the barrier; absent for `T < T_c`.
    pub theta: Option<f64>,
    /// Phase shift applied inside the barrier.
    pub xi: f64,
    /// Extra phase of the ghost contribution; absent when the ghost is disabled.
    pub theta_ghost: Option<f64>,
    /// Phase shift applied after the barrier.
    pub xi_after: f64,
    /// `W(-a) / D(-a)`.
    pub left_ratio: Option<f64>,
    /// `W(a) / D(a)`.
    pub right_ratio: Option<f64>,
    /// Set when `cos(theta)` fell outside `[-1, 1]` and the fallback was used.
    pub theta_fallback: bool,
    pub ghost_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalField {
    pub x: f64,
    pub region: Region,
    pub amplitude: Complex64,
    pub density: f64,
    pub contributions: Vec<Contribution>,
    pub phases: EdgePhases,
}

/// Which root of `cos(theta') = c` is taken for the ghost phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PhaseBranch {
    /// `theta' in [0, pi]`.
    #[default]
    Upper,
    /// `theta' in [-pi, 0]`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalOptions {
    pub tangent: TangentMethod,
    /// Add the attenuated ghost trajectory reflecting at `+a`.
    pub with_ghost: bool,
    pub ghost_branch: PhaseBranch,
}

impl Default for SemiclassicalOptions {
    fn default() -> Self {
        Self { tangent: TangentMethod::Analytic, with_ghost: true, ghost_branch: PhaseBranch::default() }
    }
}

impl SemiclassicalOptions {
    pub fn without_ghost() -> Self {
        Self { with_ghost: false, ..Self::default() }
    }
}

fn amplitude_with_prefactor(traj: &Trajectory, state: &CoherentState, m: Complex64) -> Complex64 {
    let s = state.setup;
    let hbar = s.hbar();
    let norm = PI.powf(-0.25) / s.b().sqrt();
    let u = (state.p - traj.p_i) / s.c();
    let gauss = Complex64::new(0.0, traj.tangent.m_qp) / traj.tangent.complex() * (0.5 * u * u);
    let phase = Complex64::new(0.0, traj.action / hbar + 0.5 * state.p * state.q / hbar);
    norm / m.sqrt() * (phase - gauss).exp()
}

/// Contribution of a single trajectory, principal branch of the square root.
pub fn psi_from_trajectory(traj: &Trajectory, state: &CoherentState) -> Result<Complex64> {
    let m = traj.tangent.complex();
    if m.norm() == 0.0 || !m.re.is_finite() || !m.im.is_finite() {
        return Err(Error::FocalPoint { s_if: f64::INFINITY });
    }
    Ok(amplitude_with_prefactor(traj, state, m))
}

/// Contribution with the prefactor of the mirrored tangent row, used for
/// reflected and ghost paths.
pub fn psi_mirrored(traj: &Trajectory, state: &CoherentState) -> Result<Complex64> {
    let m = -traj.tangent.complex();
    if m.norm() == 0.0 || !m.re.is_finite() || !m.im.is_finite() {
        return Err(Error::FocalPoint { s_if: f64::INFINITY });
    }
    Ok(amplitude_with_prefactor(traj, state, m))
}

/// Solution of `|1 + e^{i theta}| = A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPhase {
    /// `theta in [0, pi]`; zero when `A > 2`.
    pub theta: f64,
    /// `phi + xi = arg(1 + e^{i theta})`, satisfying `cos(phi + xi) = A / 2`.
    pub combined_phase: f64,
    pub fallback: bool,
}

pub fn theta_phase(ratio: f64) -> ThetaPhase {
    let cos_theta = 0.5 * ratio * ratio - 1.0;
    if cos_theta > 1.0 || !cos_theta.is_finite() {
        return ThetaPhase { theta: 0.0, combined_phase: 0.0, fallback: true };
    }
    let theta = cos_theta.max(-1.0).acos();
    ThetaPhase { theta, combined_phase: 0.5 * theta, fallback: false }
}

/// Solution of `|1 + rho e^{i theta'}| = A`, clamped to the nearest admissible
/// value when no real solution exists.
pub fn ghost_theta_phase(ratio: f64, rho: f64, branch: PhaseBranch) -> (f64, bool) {
    let c = (ratio * ratio - 1.0 - rho * rho) / (2.0 * rho);
    let fallback = !(-1.0..=1.0).contains(&c);
    let theta = c.clamp(-1.0, 1.0).acos();
    let theta = if c.is_nan() { 0.0 } else { theta };
    match branch {
        PhaseBranch::Upper => (theta, fallback),
        PhaseBranch::Lower => (-theta, fallback),
    }
}

/// Plane-wave amplitude ratio `|G/F|` at the right wall for momentum `p1`.
pub fn rho_reflection(p1: f64, setup: &PhysicalSetup) -> Result<f64> {
    let p_crit = setup.critical_momentum();
    if !(p1 > p_crit) {
        return Err(Error::SubcriticalMomentum { p: p1, p_crit });
    }
    let r = p_crit / p1;
    let k = (1.0 - r * r).sqrt();
    Ok((1.0 - k) / (1.0 + k))
}

/// Closed-form density before the barrier: single Gaussian when no reflected
/// path exists, three-term interference otherwise.
pub fn before_density_closed_form(x: f64, t: f64, state: &CoherentState, theta: Option<f64>) -> f64 {
    let s = state.setup;
    let (a, b, lam, hbar) = (s.a(), s.b(), s.lambda(), s.hbar());
    let (q, p) = (state.q, state.p);
    let l2 = lam * lam;
    let w = l2 / (l2 + t * t);
    let pre = 1.0 / (b * PI.sqrt() * (1.0 + t * t / l2).sqrt());
    let direct = (-w * ((x - q - p * t) / b).powi(2)).exp();
    let Some(theta) = theta else {
        return pre * direct;
    };
    let reflected = (-w * ((x + q + p * t + 2.0 * a) / b).powi(2)).exp();
    let arg = 2.0 * (x + a) / (hbar * (l2 + t * t)) * (l2 * p - (q + a) * t) - theta;
    let cross = 2.0 * arg.cos() * (-w * ((p * t + q + a).powi(2) + (x + a).powi(2)) / (b * b)).exp();
    pre * (direct + reflected + cross)
}

/// Closed-form density of a single trajectory contribution.
pub fn single_trajectory_density(traj: &Trajectory, state: &CoherentState) -> f64 {
    let s = state.setup;
    let m2 = traj.tangent.modulus_sqr();
    let u = (state.p - traj.p_i) / s.c();
    (-(traj.tangent.m_qp.powi(2) / m2) * u * u).exp() / (s.b() * PI.sqrt() * m2.sqrt())
}

/// Closed-form direct plus ghost interference density, using the explicit
/// phase difference between the two contributions.
pub fn ghost_interference_density(
    direct: &Trajectory,
    ghost: &Trajectory,
    rho: f64,
    theta_ghost: f64,
    state: &CoherentState,
) -> f64 {
    let s = state.setup;
    let (b, c, hbar) = (s.b(), s.c(), s.hbar());
    let md = direct.tangent;
    let mg = ghost.tangent;
    let (nd, ng) = (md.modulus_sqr(), mg.modulus_sqr());
    let ud = (state.p - direct.p_i) / c;
    let ug = (state.p - ghost.p_i) / c;
    let ed = md.m_qp * md.m_qp / nd * ud * ud;
    let eg = mg.m_qp * mg.m_qp / ng * ug * ug;
    let dphi = (ghost.action - direct.action) / hbar + 0.5 * (md.m_qp / md.m_qq).atan()
        - 0.5 * (mg.m_qp / mg.m_qq).atan()
        + 0.5 * md.m_qq * md.m_qp / nd * ud * ud
        - 0.5 * mg.m_qq * mg.m_qp / ng * ug * ug;
    let pre = 1.0 / (b * PI.sqrt());
    pre * ((-ed).exp() / nd.sqrt()
        + rho * rho * (-eg).exp() / ng.sqrt()
        + 2.0 * rho * (dphi + theta_ghost).cos() * (-0.5 * ed - 0.5 * eg).exp() / (nd * ng).powf(0.25))
}

/// Semiclassical propagator for one initial state and one time, with the
/// wall phases computed once and shared by every observation point.
#[derive(Debug, Clone)]
pub struct SemiclassicalPropagator {
    state: CoherentState,
    t: f64,
    options: SemiclassicalOptions,
    phases: EdgePhases,
}

impl SemiclassicalPropagator {
    pub fn new(state: CoherentState, t: f64, options: SemiclassicalOptions) -> Result<Self> {
        let mut prop = Self { state, t, options, phases: EdgePhases::default() };
        prop.phases = prop.compute_phases()?;
        Ok(prop)
    }

    pub fn state(&self) -> &CoherentState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn options(&self) -> &SemiclassicalOptions {
        &self.options
    }

    pub fn phases(&self) -> &EdgePhases {
        &self.phases
    }

    fn setup(&self) -> &PhysicalSetup {
        &self.state.setup
    }

    /// Direct contribution inside the barrier without the `xi` shift; zero
    /// where the path stalls at the left wall.
    fn bare_inside(&self, x: f64) -> Result<(Option<Trajectory>, Complex64)> {
        match inside_trajectory(self.state.q, x, self.t, self.setup(), self.options.tangent) {
            Ok(tr) => {
                let psi = psi_from_trajectory(&tr, &self.state)?;
                Ok((Some(tr), psi))
            }
            Err(Error::Stalled { .. }) => Ok((None, Complex64::new(0.0, 0.0))),
            Err(e) => Err(e),
        }
    }

    fn bare_ghost(&self, x: f64) -> Result<(Trajectory, f64, Complex64)> {
        let tr = ghost_trajectory(self.state.q, x, self.t, self.setup(), self.options.tangent)?;
        let rho = rho_reflection(tr.p_i, self.setup())?;
        let psi = psi_mirrored(&tr, &self.state)?;
        Ok((tr, rho, psi))
    }

    fn compute_phases(&self) -> Result<EdgePhases> {
        let s = *self.setup();
        let (q, t, a) = (self.state.q, self.t, s.a());
        let mut ph = EdgePhases::default();

        // left wall
        let d = psi_from_trajectory(&direct_before(q, -a, t, &s)?, &self.state)?;
        let (_, w) = self.bare_inside(-a)?;
        if t >= critical_time(q, &s) {
            let ratio = if d.norm() > 0.0 { w.norm() / d.norm() } else { f64::INFINITY };
            let th = theta_phase(ratio);
            ph.theta = Some(th.theta);
            ph.theta_fallback = th.fallback;
            ph.left_ratio = Some(ratio);
            let joined = d * (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, th.theta));
            ph.xi = if w.norm() > 0.0 { joined.arg() - w.arg() } else { 0.0 };
        } else {
            ph.xi = if w.norm() > 0.0 { d.arg() - w.arg() } else { 0.0 };
        }

        // right wall
        let (_, dr) = self.bare_inside(a)?;
        let after = psi_from_trajectory(&after_trajectory(q, a, t, &s, self.options.tangent)?, &self.state)?;
        let mut inside_total = dr;
        if dr.norm() > 0.0 {
            ph.right_ratio = Some(after.norm() / dr.norm());
        }
        if self.options.with_ghost {
            let (_, rho, g) = self.bare_ghost(a)?;
            let ratio = ph.right_ratio.unwrap_or(f64::INFINITY);
            let (theta_g, fallback) = ghost_theta_phase(ratio, rho, self.options.ghost_branch);
            ph.theta_ghost = Some(theta_g);
            ph.ghost_fallback = fallback;
            inside_total += rho * g * Complex64::from_polar(1.0, theta_g);
        }
        inside_total *= Complex64::from_polar(1.0, ph.xi);
        ph.xi_after =
            if after.norm() > 0.0 && inside_total.norm() > 0.0 { inside_total.arg() - after.arg() } else { 0.0 };
        Ok(ph)
    }

    fn finish(&self, x: f64, region: Region, contributions: Vec<Contribution>) -> SemiclassicalField {
        let amplitude: Complex64 = contributions.iter().map(|c| c.amplitude).sum();
        SemiclassicalField { x, region, amplitude, density: amplitude.norm_sqr(), contributions, phases: self.phases }
    }

    /// Field at `x <= -a`: direct path plus, when it exists, the reflected one.
    pub fn field_before(&self, x: f64) -> Result<SemiclassicalField> {
        let s = self.setup();
        let (q, t) = (self.state.q, self.t);
        let direct = direct_before(q, x, t, s)?;
        let mut contributions =
            vec![Contribution { kind: Kind::Direct, amplitude: psi_from_trajectory(&direct, &self.state)? }];
        if let (Some(refl), Some(theta)) = (reflected_before(q, x, t, s)?, self.phases.theta) {
            let psi = psi_mirrored(&refl, &self.state)? * Complex64::from_polar(1.0, theta);
            contributions.push(Contribution { kind: Kind::Reflected, amplitude: psi });
        }
        Ok(self.finish(x, Region::Before, contributions))
    }

    /// Field at `-a <= x <= a`, with the ghost when enabled in the options.
    pub fn field_inside(&self, x: f64) -> Result<SemiclassicalField> {
        self.field_inside_with(x, self.options.with_ghost)
    }

    /// Field inside the barrier with the ghost explicitly on or off. The ghost
    /// phase is only available when the propagator was built with the ghost.
    pub fn field_inside_with(&self, x: f64, with_ghost: bool) -> Result<SemiclassicalField> {
        let shift = Complex64::from_polar(1.0, self.phases.xi);
        let (_, d) = self.bare_inside(x)?;
        let mut contributions = vec![Contribution { kind: Kind::Direct, amplitude: d * shift }];
        if with_ghost {
            let theta_g = self.phases.theta_ghost.ok_or(Error::InvalidParameter {
                name: "with_ghost",
                reason: "propagator was built without the ghost trajectory".into(),
            })?;
            let (_, rho, g) = self.bare_ghost(x)?;
            contributions.push(Contribution {
                kind: Kind::Ghost,
                amplitude: rho * g * Complex64::from_polar(1.0, theta_g) * shift,
            });
        }
        Ok(self.finish(x, Region::Inside, contributions))
    }

    /// Field at `x >= a`: the single transmitted path.
    pub fn field_after(&self, x: f64) -> Result<SemiclassicalField> {
        let tr = after_trajectory(self.state.q, x, self.t, self.setup(), self.options.tangent)?;
        let psi = psi_from_trajectory(&tr, &self.state)? * Complex64::from_polar(1.0, self.phases.xi_after);
        Ok(self.finish(x, Region::After, vec![Contribution { kind: Kind::Direct, amplitude: psi }]))
    }

    /// Field at any `x`, dispatched on the region.
    pub fn field(&self, x: f64) -> Result<SemiclassicalField> {
        match Region::of(x, self.setup()) {
            Region::Before => self.field_before(x),
            Region::Inside => self.field_inside(x),
            Region::After => self.field_after(x),
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.field(x)?.density)
    }
}

/// Density before the barrier at `x_f <= -a`.
pub fn density_before(x_f: f64, t: f64, state: &CoherentState) -> Result<SemiclassicalField> {
    SemiclassicalPropagator::new(*state, t, SemiclassicalOptions::without_ghost())?.field_before(x_f)
}

/// Density inside the barrier, optionally with the ghost trajectory.
pub fn density_inside(x_f: f64, t: f64, state: &CoherentState, with_ghost: bool) -> Result<SemiclassicalField> {
    let options = SemiclassicalOptions { with_ghost, ..SemiclassicalOptions::default() };
    SemiclassicalPropagator::new(*state, t, options)?.field_inside(x_f)
}

/// Density after the barrier at `x >= a`.
pub fn density_after(x: f64, t: f64, state: &CoherentState) -> Result<SemiclassicalField> {
    SemiclassicalPropagator::new(*state, t, SemiclassicalOptions::default())?.field_after(x)
}

//! Mean barrier-crossing time of the transmitted wavepacket, estimated as a
//! density-weighted average of trajectory crossing times over arrival time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::CoherentState;
use crate::error::{invalid, Error, Result};
use crate::exact::{GridParams, SplitStep};
use crate::numeric::pairwise_sum;
use crate::semiclassical::{before_density_closed_form, single_trajectory_density};
use crate::setup::PhysicalSetup;
use crate::trajectory::{after_trajectory, solve_p1_after, TangentMethod};

/// Source of the arrival-time weight `|<x_f|K(T)|z>|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightSource {
    #[default]
    Semiclassical,
    /// Split-step density; the cutoff time is still located on the
    /// semiclassical density.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    /// Number of arrival times `T_n = n T_max / N`, `n = 1..=N`.
    pub n_steps: usize,
    /// Density below which the arrival distribution is considered finished.
    pub threshold: f64,
    /// The density must stay below `threshold` over this trailing span.
    pub trailing_window: f64,
    /// Spacing of the cutoff scan.
    pub scan_step: f64,
    /// Give up when no cutoff is found before this time.
    pub scan_limit: f64,
    pub weight: WeightSource,
    pub grid: GridParams,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            n_steps: 2000,
            threshold: 1e-4,
            trailing_window: 50.0,
            scan_step: 0.25,
            scan_limit: 1e5,
            weight: WeightSource::Semiclassical,
            grid: GridParams::default(),
        }
    }
}

impl QuadratureParams {
    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        for (name, v) in [
            ("threshold", self.threshold),
            ("trailing_window", self.trailing_window),
            ("scan_step", self.scan_step),
            ("scan_limit", self.scan_limit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelingTimeResult {
    pub p: f64,
    pub tau_barrier: f64,
    pub tau_free: f64,
    pub tau_class: Option<f64>,
    pub x_f: f64,
    pub t_max: f64,
    pub n_steps: usize,
}

/// Barrier-crossing time of the trajectory reaching `x_f > a` at time `t`.
pub fn tau_of_t(t: f64, q: f64, x_f: f64, setup: &PhysicalSetup) -> Result<f64> {
    if !(x_f > setup.a()) {
        return Err(Error::OutOfRegion { x: x_f, region: "after" });
    }
    let p1 = solve_p1_after(q, x_f, t, setup)?;
    Ok(2.0 * setup.a() / (p1 * p1 - 2.0 * setup.v0()).sqrt())
}

/// Classical crossing time, absent below the barrier top.
pub fn tau_classical(p: f64, setup: &PhysicalSetup) -> Option<f64> {
    let k = p * p - 2.0 * setup.v0();
    (p > 0.0 && k > 0.0).then(|| 2.0 * setup.a() / k.sqrt())
}

/// Last scanned time with density above threshold, once the density has
/// stayed below it for the trailing window.
fn find_cutoff<F>(density: F, params: &QuadratureParams, x_f: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut last_above: Option<f64> = None;
    let mut i = 1u64;
    loop {
        let t = i as f64 * params.scan_step;
        if t > params.scan_limit {
            return match last_above {
                Some(t) => Ok(t),
                None => Err(Error::NegligibleTransmission {
                    x: x_f,
                    threshold: params.threshold,
                    t_limit: params.scan_limit,
                }),
            };
        }
        if density(t)? >= params.threshold {
            last_above = Some(t);
        } else if let Some(t_last) = last_above {
            if t - t_last >= params.trailing_window {
                return Ok(t_last);
            }
        }
        i += 1;
    }
}

/// `sum tau_n w_n / sum w_n` over the uniform grid `T_n = n t_max / N`.
fn weighted_mean<F>(tau_weight: F, t_max: f64, n_steps: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    let dt = t_max / n_steps as f64;
    let rows: Vec<(f64, f64)> =
        (1..=n_steps).into_par_iter().map(|n| tau_weight(n as f64 * dt)).collect::<Result<_>>()?;
    mean_from_rows(&rows)
}

fn mean_from_rows(rows: &[(f64, f64)]) -> Result<f64> {
    let num: Vec<f64> = rows.iter().map(|(tau, w)| tau * w).collect();
    let den: Vec<f64> = rows.iter().map(|(_, w)| *w).collect();
    let norm = pairwise_sum(&den);
    if !(norm > 0.0) {
        return Err(invalid("weights", "arrival density vanishes on the quadrature grid"));
    }
    Ok(pairwise_sum(&num) / norm)
}

fn after_density(state: &CoherentState, x_f: f64, t: f64) -> Result<f64> {
    let tr = after_trajectory(state.q, x_f, t, &state.setup, TangentMethod::Analytic)?;
    Ok(single_trajectory_density(&tr, state))
}

fn check_inputs(state: &CoherentState, x_f: f64) -> Result<()> {
    if !(x_f > state.setup.a()) || !x_f.is_finite() {
        return Err(Error::OutOfRegion { x: x_f, region: "after" });
    }
    if !(state.p > 0.0) {
        return Err(invalid("p", "must be positive"));
    }
    Ok(())
}

/// Mean crossing time of the barrier, plus the free and classical
/// comparison times.
pub fn mean_tunneling_time(state: &CoherentState, x_f: f64, params: &QuadratureParams) -> Result<TunnelingTimeResult> {
    check_inputs(state, x_f)?;
    params.validate()?;
    let setup = state.setup;
    let t_max = find_cutoff(|t| after_density(state, x_f, t), params, x_f)?;
    let tau_barrier = match params.weight {
        WeightSource::Semiclassical => weighted_mean(
            |t| Ok((tau_of_t(t, state.q, x_f, &setup)?, after_density(state, x_f, t)?)),
            t_max,
            params.n_steps,
        )?,
        WeightSource::Exact => {
            let dt = t_max / params.n_steps as f64;
            let mut prop = SplitStep::new(state, t_max, params.grid)?;
            let mut rows = Vec::with_capacity(params.n_steps);
            for n in 1..=params.n_steps {
                let t = n as f64 * dt;
                let w = prop.advance_to(t)?.density_at(x_f)?;
                rows.push((tau_of_t(t, state.q, x_f, &setup)?, w));
            }
            mean_from_rows(&rows)?
        }
    };
    let tau_free = tau_free_mean(state, x_f, params)?;
    Ok(TunnelingTimeResult {
        p: state.p,
        tau_barrier,
        tau_free,
        tau_class: tau_classical(state.p, &setup),
        x_f,
        t_max,
        n_steps: params.n_steps,
    })
}

/// Mean time for the free packet to cover `2a`, weighted by the free arrival
/// density at `x_f`.
pub fn tau_free_mean(state: &CoherentState, x_f: f64, params: &QuadratureParams) -> Result<f64> {
    check_inputs(state, x_f)?;
    params.validate()?;
    let two_a = 2.0 * state.setup.a();
    let d = x_f - state.q;
    let free = |t: f64| before_density_closed_form(x_f, t, state, None);
    let t_max = find_cutoff(|t| Ok(free(t)), params, x_f)?;
    weighted_mean(|t| Ok((two_a * t / d, free(t))), t_max, params.n_steps)
}

/// Tunneling times over a set of momenta; failures are returned per entry.
pub fn sweep(
    q: f64,
    momenta: &[f64],
    x_f: f64,
    setup: &PhysicalSetup,
    params: &QuadratureParams,
) -> Vec<Result<TunnelingTimeResult>> {
    momenta
        .par_iter()
        .map(|&p| {
            let state = CoherentState::new(q, p, *setup)?;
            mean_tunneling_time(&state, x_f, params)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference() -> PhysicalSetup {
        PhysicalSetup::reference()
    }

    #[test]
    fn tau_examples() {
        let s = reference();
        // choose x_f, t so that p1 = sqrt(2) p_crit: p1 = sqrt 2, crossing at
        // free speed over D and barrier speed 1 over 2a
        let q = -60.0;
        let x_f = 60.0;
        let p1 = 2f64.sqrt();
        let t = (x_f - q - 100.0) / p1 + 100.0;
        assert!((tau_of_t(t, q, x_f, &s).unwrap() - 100.0).abs() < 1e-9);
        assert!(tau_of_t(1e-3, q, x_f, &s).unwrap() < 1e-2);
        let f = s.with_v0(1e-12).unwrap();
        let t = 40.0;
        assert!((tau_of_t(t, q, x_f, &f).unwrap() - 100.0 * t / 120.0).abs() < 1e-9);
        assert!(tau_of_t(t, q, 40.0, &s).is_err());
    }

    #[test]
    fn classical_examples() {
        let s = reference();
        assert!((tau_classical(2.0, &s).unwrap() - 100.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(tau_classical(0.5, &s).is_none());
        assert!(tau_classical(1.0, &s).is_none());
        assert!(tau_classical(1.0 + 1e-12, &s).unwrap() > 1e7);
    }

    #[test]
    fn cutoff_scan_policy() {
        let params = QuadratureParams::default();
        // bump above threshold on [10, 20], then silence
        let t = find_cutoff(|t| Ok(if (10.0..=20.0).contains(&t) { 1.0 } else { 0.0 }), &params, 60.0).unwrap();
        assert_eq!(t, 20.0);
        // a second bump within the trailing window extends the cutoff
        let t = find_cutoff(
            |t| Ok(if (10.0..=20.0).contains(&t) || (60.0..=61.0).contains(&t) { 1.0 } else { 0.0 }),
            &params,
            60.0,
        )
        .unwrap();
        assert_eq!(t, 61.0);
        let small = QuadratureParams { scan_limit: 100.0, ..params };
        assert!(matches!(find_cutoff(|_| Ok(0.0), &small, 60.0), Err(Error::NegligibleTransmission { .. })));
    }

    #[test]
    fn free_time_matches_direct_quadrature() {
        // independent oracle: locate the last time the exact free arrival
        // density exceeds the threshold on a fine mesh, then Simpson
        let s = reference();
        let st = CoherentState::new(-60.0, 2.0, s).unwrap();
        let x_f = 60.0;
        let d = x_f - st.q;
        let rho = |t: f64| {
            let w2 = 1.0 + t * t;
            (-(x_f - st.q - st.p * t).powi(2) / w2).exp() / (PI * w2).sqrt()
        };
        let t_max = (1..=400_000).map(|i| i as f64 * 0.01).filter(|&t| rho(t) >= 1e-4).fold(0.0, f64::max);
        let m = 200_000;
        let h = t_max / m as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..=m {
            let t = i as f64 * h;
            let w = if i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            num += w * rho(t) * 100.0 * t / d;
            den += w * rho(t);
        }
        let oracle = num / den;
        let got = tau_free_mean(&st, x_f, &QuadratureParams::default()).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-3, "{got} vs {oracle}");
    }

    #[test]
    fn free_time_classical_limit() {
        let s = PhysicalSetup::symmetric(0.5, 50.0, 1e-3).unwrap();
        let st = CoherentState::new(-60.0, 2.0, s).unwrap();
        let params = QuadratureParams { scan_step: 0.01, ..QuadratureParams::default() };
        let got = tau_free_mean(&st, 60.0, &params).unwrap();
        assert!((got - 50.0).abs() < 0.05, "{got}");
    }

    #[test]
    fn orderings_and_observer_independence() {
        let s = reference();
        let params = QuadratureParams::default();
        let slow = mean_tunneling_time(&CoherentState::new(-60.0, 0.5, s).unwrap(), 60.0, &params).unwrap();
        assert!(slow.tau_barrier.is_finite() && slow.tau_barrier > 0.0);
        assert!(slow.tau_barrier < slow.tau_free, "{slow:?}");
        assert!(slow.tau_class.is_none());
        let fast = mean_tunneling_time(&CoherentState::new(-60.0, 2.0, s).unwrap(), 60.0, &params).unwrap();
        assert!(fast.tau_barrier > fast.tau_free, "{fast:?}");
        let far = mean_tunneling_time(&CoherentState::new(-60.0, 2.0, s).unwrap(), 80.0, &params).unwrap();
        assert!(((far.tau_barrier - fast.tau_barrier) / fast.tau_barrier).abs() < 0.02, "{far:?} {fast:?}");
    }

    #[test]
    fn stable_under_doubling_n() {
        let s = reference();
        let st = CoherentState::new(-60.0, 1.5, s).unwrap();
        let a = mean_tunneling_time(&st, 60.0, &QuadratureParams::default()).unwrap();
        let b =
            mean_tunneling_time(&st, 60.0, &QuadratureParams { n_steps: 4000, ..QuadratureParams::default() }).unwrap();
        assert!(((a.tau_barrier - b.tau_barrier) / a.tau_barrier).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = reference();
        let st = CoherentState::new(-60.0, 1.0, s).unwrap();
        assert!(mean_tunneling_time(&st, 40.0, &QuadratureParams::default()).is_err());
        assert!(
            mean_tunneling_time(&st, 60.0, &QuadratureParams { n_steps: 0, ..QuadratureParams::default() }).is_err()
        );
        let back = CoherentState::new(-60.0, -1.0, s).unwrap();
        assert!(mean_tunneling_time(&back, 60.0, &QuadratureParams::default()).is_err());
    }
}

//! Real classical trajectories from `q` to `x_f` in time `T` for the square barrier.
//!
//! Every path is a sequence of free flights and barrier flights. Energy
//! conservation fixes the barrier momentum `p2 = sqrt(p1^2 - 2 V0)`, so a path
//! is characterised by the length travelled outside the barrier (`free`) and
//! the length travelled inside it (`barrier`). The transit condition
//!
//! ```text
//! T = free / p1 + barrier / p2
//! ```
//!
//! squared becomes the quartic `(p1^2 - 2V0)(p1 T - free)^2 = barrier^2 p1^2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quartic::Quartic;
use crate::setup::PhysicalSetup;
use crate::tangent::{tangent_from_action, FiniteDifference, TangentElements};

/// Shortest propagation time accepted by the solvers.
pub const MIN_TIME: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Before,
    Inside,
    After,
}

impl Region {
    pub fn of(x: f64, setup: &PhysicalSetup) -> Self {
        if x < -setup.a() {
            Region::Before
        } else if x <= setup.a() {
            Region::Inside
        } else {
            Region::After
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Before => "before-barrier",
            Region::Inside => "inside-barrier",
            Region::After => "after-barrier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Direct,
    Reflected,
    Ghost,
}

/// One leg of constant momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub momentum: f64,
}

/// How the tangent-matrix elements of a trajectory are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum TangentMethod {
    /// Implicit differentiation of the transit condition.
    #[default]
    Analytic,
    /// Numerical second derivatives of the action.
    FiniteDifference(FiniteDifference),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub region: Region,
    pub kind: Kind,
    /// Initial momentum `p_i`.
    pub p_i: f64,
    /// Momentum inside the barrier, when the path enters it.
    pub p_barrier: Option<f64>,
    pub p_final: f64,
    pub action: f64,
    pub tangent: TangentElements,
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Time spent in `[-a, a]`.
    pub fn barrier_time(&self) -> f64 {
        match self.p_barrier {
            Some(p2) => self.segments.iter().filter(|s| s.momentum.abs() == p2).map(|s| s.duration).sum(),
            None => 0.0,
        }
    }
}

/// Time for a particle of critical momentum to go from `q` to the barrier.
pub fn critical_time(q: f64, setup: &PhysicalSetup) -> f64 {
    -(setup.a() + q) / setup.critical_momentum()
}

/// Largest `|x_f|` reached by a reflected trajectory at time `T`.
pub fn reflection_cutoff(q: f64, t: f64, setup: &PhysicalSetup) -> f64 {
    q + 2.0 * setup.a() + setup.critical_momentum() * t
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < MIN_TIME {
        Err(Error::DegenerateTime(t))
    } else {
        Ok(())
    }
}

fn check_start(q: f64, setup: &PhysicalSetup) -> Result<()> {
    if !(q < -setup.a()) {
        return Err(invalid("q", format!("packet centre {q} must lie left of the barrier at {}", -setup.a())));
    }
    Ok(())
}

fn check_region(x: f64, ok: bool, region: Region) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRegion { x, region: region.name() })
    }
}

// ---------------------------------------------------------------------------
// Before the barrier: closed forms.

/// Straight flight from `q` to `x_f`.
pub fn direct_before(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup) -> Result<Trajectory> {
    check_time(t)?;
    check_region(x_f, x_f <= -setup.a(), Region::Before)?;
    let d = x_f - q;
    let p = d / t;
    Ok(Trajectory {
        region: Region::Before,
        kind: Kind::Direct,
        p_i: p,
        p_barrier: None,
        p_final: p,
        action: d * d / (2.0 * t),
        tangent: TangentElements::free(t, setup),
        segments: vec![Segment { duration: t, momentum: p }],
    })
}

/// Flight that bounces off the barrier at `-a` and returns to `x_f`.
///
/// Exists only for `T >= T_c` and `|x_f| <= x_c`, i.e. when the required
/// momentum does not exceed the critical momentum.
pub fn reflected_before(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup) -> Result<Option<Trajectory>> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x_f, x_f <= -setup.a(), Region::Before)?;
    if t < critical_time(q, setup) || -x_f > reflection_cutoff(q, t, setup) {
        return Ok(None);
    }
    let a = setup.a();
    let d = x_f + q + 2.0 * a;
    let p = -d / t;
    Ok(Some(Trajectory {
        region: Region::Before,
        kind: Kind::Reflected,
        p_i: p,
        p_barrier: None,
        p_final: -p,
        action: d * d / (2.0 * t),
        tangent: TangentElements::free(t, setup).negated(),
        segments: vec![
            Segment { duration: (-a - q) / p, momentum: p },
            Segment { duration: (-a - x_f) / p, momentum: -p },
        ],
    }))
}

// ---------------------------------------------------------------------------
// Barrier-crossing paths.

/// Geometry of a path that crosses into the barrier, with the sensitivities of
/// its lengths to the end points.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    free: f64,
    barrier: f64,
    dfree_dxf: f64,
    dbarrier_dxf: f64,
}

impl Crossing {
    fn inside(q: f64, x_f: f64, a: f64) -> Self {
        Self { free: -a - q, barrier: x_f + a, dfree_dxf: 0.0, dbarrier_dxf: 1.0 }
    }

    fn ghost(q: f64, x_f: f64, a: f64) -> Self {
        Self { free: -a - q, barrier: 3.0 * a - x_f, dfree_dxf: 0.0, dbarrier_dxf: -1.0 }
    }

    fn after(q: f64, x: f64, a: f64) -> Self {
        Self { free: x - q - 2.0 * a, barrier: 2.0 * a, dfree_dxf: 1.0, dbarrier_dxf: 0.0 }
    }

    fn quartic(&self, t: f64, p_crit_sq: f64) -> Option<Quartic> {
        let (d, l) = (self.free, self.barrier);
        Quartic::new([
            -p_crit_sq * d * d,
            2.0 * p_crit_sq * t * d,
            d * d - p_crit_sq * t * t - l * l,
            -2.0 * t * d,
            t * t,
        ])
    }
}

/// Momenta `(p1, p2)` of a crossing path.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CrossingMomenta {
    outside: f64,
    inside: f64,
}

/// Relative residual of `(p^2 - P)(pT - D)^2 = L^2 p^2`.
pub fn crossing_residual(p: f64, free: f64, barrier: f64, t: f64, p_crit_sq: f64) -> f64 {
    let lhs = (p * p - p_crit_sq) * (p * t - free).powi(2);
    let rhs = barrier * barrier * p * p;
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// Relative residual of the same quartic at a root given as the pair
/// `(p1, p2)`, with `p1^2 - P` taken as `p2^2`. Near a stall `p1 - p_crit`
/// is below the resolution of `p1` itself and only the pair carries the root
/// to full precision.
pub fn crossing_residual_pair(p1: f64, p2: f64, free: f64, barrier: f64, t: f64) -> f64 {
    let lhs = p2 * p2 * (p1 * t - free).powi(2);
    let rhs = barrier * barrier * p1 * p1;
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// Solves the transit condition for the branch with `p1 > p_crit`.
///
/// Candidates come from the companion-matrix roots of the quartic; the one
/// satisfying the unsquared condition is polished by safeguarded Newton
/// iteration on `G(p2) = free / sqrt(p2^2 + P) + barrier / p2 - T`, which is
/// strictly decreasing in the barrier momentum `p2`. If no candidate survives
/// the same iteration runs from a bisection start.
fn solve_crossing(path: Crossing, t: f64, q: f64, x: f64, setup: &PhysicalSetup) -> Result<CrossingMomenta> {
    let p_sq = 2.0 * setup.v0();
    let p_crit = p_sq.sqrt();
    let (d, l) = (path.free, path.barrier);
    if !(d > 0.0) || l < 0.0 {
        return Err(Error::NoTrajectory { q, x, t });
    }
    let g = |p2: f64| d / (p2 * p2 + p_sq).sqrt() + l / p2 - t;

    if l == 0.0 {
        // path ends exactly at the left wall
        let p1 = d / t;
        if p1 > p_crit {
            return Ok(CrossingMomenta { outside: p1, inside: (p1 * p1 - p_sq).sqrt() });
        }
        return Ok(CrossingMomenta { outside: p_crit, inside: 0.0 });
    }

    let mut hi = (d + l) / t + p_crit + 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoTrajectory { q, x, t });
        }
    }
    let mut lo = 0.0;

    let start = path
        .quartic(t, p_sq)
        .map(|poly| poly.real_roots())
        .unwrap_or_default()
        .into_iter()
        .filter(|&p1| p1 > p_crit && p1 * t > d)
        .map(|p1| (p1 * p1 - p_sq).sqrt())
        .filter(|&p2| p2 > 0.0 && p2 < hi)
        .min_by(|u, v| g(*u).abs().total_cmp(&g(*v).abs()));

    let mut p2 = start.unwrap_or(0.5 * hi);
    for _ in 0..200 {
        let gv = g(p2);
        if gv == 0.0 {
            break;
        }
        if gv > 0.0 {
            lo = p2;
        } else {
            hi = p2;
        }
        let p1 = (p2 * p2 + p_sq).sqrt();
        let dg = -d * p2 / (p1 * p1 * p1) - l / (p2 * p2);
        let mut next = p2 - gv / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - p2).abs() <= 4.0 * f64::EPSILON * p2 {
            p2 = next;
            break;
        }
        p2 = next;
    }
    if !(p2 > 0.0) || !p2.is_finite() {
        return Err(Error::NoTrajectory { q, x, t });
    }
    Ok(CrossingMomenta { outside: (p2 * p2 + p_sq).sqrt(), inside: p2 })
}

/// Action `(p1/2) free + barrier (p2/2 - V0/p2)`.
fn crossing_action(path: Crossing, m: CrossingMomenta, v0: f64) -> f64 {
    0.5 * path.free * m.outside + path.barrier * (0.5 * m.inside - v0 / m.inside)
}

/// `(S_ii, S_if)` by implicit differentiation of the transit condition.
fn crossing_second_derivatives(path: Crossing, m: CrossingMomenta) -> (f64, f64) {
    let (p1, p2) = (m.outside, m.inside);
    let df = -path.free / (p1 * p1) - path.barrier * p1 / (p2 * p2 * p2);
    // d(free)/dx_i = -1 for every crossing path
    let dp1_dxi = (1.0 / p1) / df;
    let dp1_dxf = -(path.dfree_dxf / p1 + path.dbarrier_dxf / p2) / df;
    (-dp1_dxi, -dp1_dxf)
}

fn stalled(x: f64) -> Error {
    Error::Stalled { x }
}

fn analytic_tangent(path: Crossing, m: CrossingMomenta, x: f64, setup: &PhysicalSetup) -> Result<TangentElements> {
    if m.inside == 0.0 {
        return Err(stalled(x));
    }
    let (s_ii, s_if) = crossing_second_derivatives(path, m);
    let ratio = setup.c() / setup.b();
    let tangent = TangentElements { m_qq: -s_ii / s_if, m_qp: -ratio / s_if };
    if !(tangent.m_qq.is_finite() && tangent.m_qp.is_finite()) {
        return Err(stalled(x));
    }
    Ok(tangent)
}

fn crossing_tangent(
    make: fn(f64, f64, f64) -> Crossing,
    q: f64,
    x: f64,
    t: f64,
    m: CrossingMomenta,
    setup: &PhysicalSetup,
    method: TangentMethod,
) -> Result<TangentElements> {
    let a = setup.a();
    match method {
        TangentMethod::Analytic => analytic_tangent(make(q, x, a), m, x, setup),
        TangentMethod::FiniteDifference(fd) => {
            let action = |xi: f64, xf: f64| {
                let path = make(xi, xf, a);
                let mm = solve_crossing(path, t, xi, xf, setup)?;
                if mm.inside == 0.0 {
                    return Err(stalled(xf));
                }
                Ok(crossing_action(path, mm, setup.v0()))
            };
            tangent_from_action(action, q, x, setup, fd)
        }
    }
}

// ---------------------------------------------------------------------------
// Inside the barrier.

/// Initial momentum of the direct path ending at `x_f` inside the barrier.
///
/// At `x_f = -a` with `T >= T_c` the path degenerates: the particle reaches
/// the wall with exactly the critical momentum and stays there, and the
/// critical momentum is returned.
pub fn solve_p1_inside(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup) -> Result<f64> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x_f, x_f.abs() <= setup.a(), Region::Inside)?;
    Ok(solve_crossing(Crossing::inside(q, x_f, setup.a()), t, q, x_f, setup)?.outside)
}

fn barrier_momentum(p1: f64, setup: &PhysicalSetup) -> Result<f64> {
    let p_crit = setup.critical_momentum();
    if !(p1 > p_crit) {
        return Err(Error::SubcriticalMomentum { p: p1, p_crit });
    }
    Ok((p1 * p1 - 2.0 * setup.v0()).sqrt())
}

/// Action of the direct path inside the barrier as a function of `p1`.
pub fn action_inside(p1: f64, q: f64, x_f: f64, setup: &PhysicalSetup) -> Result<f64> {
    let p2 = barrier_momentum(p1, setup)?;
    let a = setup.a();
    let v0 = setup.v0();
    Ok(-0.5 * (a + q) * p1 + 0.5 * (x_f + a) * p2 - v0 * (x_f + a) / p2)
}

/// Initial momentum of the ghost path that reflects at `+a` and returns to `x_f`.
pub fn ghost_p1_inside(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup) -> Result<f64> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x_f, x_f.abs() <= setup.a(), Region::Inside)?;
    Ok(solve_crossing(Crossing::ghost(q, x_f, setup.a()), t, q, x_f, setup)?.outside)
}

/// Action of the ghost path as a function of `p1`.
pub fn ghost_action(p1: f64, q: f64, x_f: f64, setup: &PhysicalSetup) -> Result<f64> {
    let p2 = barrier_momentum(p1, setup)?;
    let a = setup.a();
    let v0 = setup.v0();
    Ok(-0.5 * (a + q) * p1 + (0.5 * p1 * p1 - 2.0 * v0) * (3.0 * a - x_f) / p2)
}

// ---------------------------------------------------------------------------
// After the barrier.

/// Initial momentum of the transmitted path ending at `x >= a`.
pub fn solve_p1_after(q: f64, x: f64, t: f64, setup: &PhysicalSetup) -> Result<f64> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x, x >= setup.a(), Region::After)?;
    Ok(solve_crossing(Crossing::after(q, x, setup.a()), t, q, x, setup)?.outside)
}

/// Action of the transmitted path as a function of `p1`.
pub fn action_after(p1: f64, q: f64, x: f64, setup: &PhysicalSetup) -> Result<f64> {
    let p2 = barrier_momentum(p1, setup)?;
    let a = setup.a();
    let v0 = setup.v0();
    Ok(0.5 * (x - q - 2.0 * a) * p1 + a * p2 - 2.0 * a * v0 / p2)
}

// ---------------------------------------------------------------------------
// Full trajectories.

/// Direct path ending inside the barrier.
pub fn inside_trajectory(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup, method: TangentMethod) -> Result<Trajectory> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x_f, x_f.abs() <= setup.a(), Region::Inside)?;
    let a = setup.a();
    let path = Crossing::inside(q, x_f, a);
    let m = solve_crossing(path, t, q, x_f, setup)?;
    if m.inside == 0.0 {
        return Err(stalled(x_f));
    }
    let tangent = crossing_tangent(Crossing::inside, q, x_f, t, m, setup, method)?;
    Ok(Trajectory {
        region: Region::Inside,
        kind: Kind::Direct,
        p_i: m.outside,
        p_barrier: Some(m.inside),
        p_final: m.inside,
        action: crossing_action(path, m, setup.v0()),
        tangent,
        segments: vec![
            Segment { duration: path.free / m.outside, momentum: m.outside },
            Segment { duration: path.barrier / m.inside, momentum: m.inside },
        ],
    })
}

/// Ghost path: crosses the barrier, reflects at `+a` and comes back to `x_f`.
pub fn ghost_trajectory(q: f64, x_f: f64, t: f64, setup: &PhysicalSetup, method: TangentMethod) -> Result<Trajectory> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x_f, x_f.abs() <= setup.a(), Region::Inside)?;
    let a = setup.a();
    let path = Crossing::ghost(q, x_f, a);
    let m = solve_crossing(path, t, q, x_f, setup)?;
    let tangent = crossing_tangent(Crossing::ghost, q, x_f, t, m, setup, method)?;
    Ok(Trajectory {
        region: Region::Inside,
        kind: Kind::Ghost,
        p_i: m.outside,
        p_barrier: Some(m.inside),
        p_final: -m.inside,
        action: crossing_action(path, m, setup.v0()),
        tangent,
        segments: vec![
            Segment { duration: path.free / m.outside, momentum: m.outside },
            Segment { duration: 2.0 * a / m.inside, momentum: m.inside },
            Segment { duration: (a - x_f) / m.inside, momentum: -m.inside },
        ],
    })
}

/// Transmitted path ending at `x >= a`.
pub fn after_trajectory(q: f64, x: f64, t: f64, setup: &PhysicalSetup, method: TangentMethod) -> Result<Trajectory> {
    check_time(t)?;
    check_start(q, setup)?;
    check_region(x, x >= setup.a(), Region::After)?;
    let a = setup.a();
    let path = Crossing::after(q, x, a);
    let m = solve_crossing(path, t, q, x, setup)?;
    let tangent = crossing_tangent(Crossing::after, q, x, t, m, setup, method)?;
    Ok(Trajectory {
        region: Region::After,
        kind: Kind::Direct,
        p_i: m.outside,
        p_barrier: Some(m.inside),
        p_final: m.outside,
        action: crossing_action(path, m, setup.v0()),
        tangent,
        segments: vec![
            Segment { duration: (-a - q) / m.outside, momentum: m.outside },
            Segment { duration: 2.0 * a / m.inside, momentum: m.inside },
            Segment { duration: (x - a) / m.outside, momentum: m.outside },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper() -> PhysicalSetup {
        PhysicalSetup::reference()
    }

    fn free_limit() -> PhysicalSetup {
        paper().with_v0(1e-12).unwrap()
    }

    // Bisection on the sign change of the squared transit residual, used as an
    // oracle independent of the quartic and Newton machinery.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        assert!(flo * f(hi) < 0.0, "no sign change");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn direct_before_examples() {
        let s = paper();
        let t = direct_before(-60.0, -10.0, 50.0, &s);
        // x_f = -10 is not before the barrier; the formula is still exercised below
        assert!(t.is_err());
        let tr = direct_before(-60.0, -60.0, 50.0, &s).unwrap();
        assert_eq!((tr.p_i, tr.action), (0.0, 0.0));
        let tr = direct_before(-60.0, -55.0, 10.0, &s).unwrap();
        assert_relative_eq!(tr.p_i, 0.5);
        assert_relative_eq!(tr.action, 1.25);
        assert_eq!(tr.tangent, TangentElements { m_qq: 1.0, m_qp: 10.0 });
        assert!(direct_before(-60.0, -55.0, 0.0, &s).is_err());
        assert!(direct_before(-60.0, -55.0, 1e-10, &s).is_err());
    }

    #[test]
    fn direct_formula_at_wide_barrier() {
        // q=-60, x_f=-10 with a barrier narrow enough that -10 is "before"
        let s = PhysicalSetup::new(0.5, 5.0, 1.0, 1.0).unwrap();
        let tr = direct_before(-60.0, -10.0, 50.0, &s).unwrap();
        assert_relative_eq!(tr.p_i, 1.0);
        assert_relative_eq!(tr.action, 25.0);
    }

    #[test]
    fn reflected_before_examples() {
        let s = paper();
        assert_relative_eq!(critical_time(-60.0, &s), 10.0);
        let tr = reflected_before(-60.0, -70.0, 50.0, &s).unwrap().unwrap();
        assert_relative_eq!(tr.p_i, 0.6, max_relative = 1e-15);
        assert_relative_eq!(tr.action, 9.0, max_relative = 1e-15);
        assert_eq!(tr.tangent, TangentElements { m_qq: -1.0, m_qp: -50.0 });
        assert_relative_eq!(tr.duration(), 50.0, max_relative = 1e-12);
        assert_relative_eq!(reflection_cutoff(-60.0, 50.0, &s), 90.0);
        assert!(reflected_before(-60.0, -95.0, 50.0, &s).unwrap().is_none());
        assert!(reflected_before(-60.0, -90.0, 50.0, &s).unwrap().is_some());
        assert!(reflected_before(-60.0, -51.0, 9.9, &s).unwrap().is_none());
    }

    #[test]
    fn inside_free_limit() {
        let p1 = solve_p1_inside(-60.0, 0.0, 50.0, &free_limit()).unwrap();
        assert!((p1 - 1.2).abs() < 1e-6, "{p1}");
    }

    #[test]
    fn inside_paper_point_matches_bisection() {
        let s = paper();
        let (q, x_f, t) = (-60.0, 0.0, 50.0);
        let p1 = solve_p1_inside(q, x_f, t, &s).unwrap();
        let f = |p: f64| (p * p - 1.0) * (p * t + 50.0 + q).powi(2) - (x_f + 50.0f64).powi(2) * p * p;
        let oracle = bisect(f, 1.0 + 1e-9, 10.0);
        assert!((p1 - oracle).abs() < 1e-10, "{p1} vs {oracle}");
        assert!((p1 - 1.525).abs() < 1e-3);
        assert!(crossing_residual(p1, 10.0, 50.0, t, 1.0) < 1e-10);
    }

    #[test]
    fn inside_at_left_wall() {
        let s = paper();
        // T < T_c: arrival at the wall with the direct free momentum
        let p1 = solve_p1_inside(-60.0, -50.0, 5.0, &s).unwrap();
        assert_relative_eq!(p1, 2.0, max_relative = 1e-15);
        // T > T_c: degenerate, critical momentum
        let p1 = solve_p1_inside(-60.0, -50.0, 50.0, &s).unwrap();
        assert_eq!(p1, 1.0);
        assert!(matches!(
            inside_trajectory(-60.0, -50.0, 50.0, &s, TangentMethod::Analytic),
            Err(Error::Stalled { .. })
        ));
    }

    #[test]
    fn action_inside_limits() {
        let s = paper();
        let p1 = 1.7;
        assert_relative_eq!(action_inside(p1, -60.0, -50.0, &s).unwrap(), -0.5 * (-10.0) * p1);
        let f = free_limit();
        let t = 50.0;
        let p1 = solve_p1_inside(-60.0, 10.0, t, &f).unwrap();
        let s_free = 70.0f64.powi(2) / (2.0 * t);
        assert!((action_inside(p1, -60.0, 10.0, &f).unwrap() - s_free).abs() < 1e-9);
        assert!(action_inside(1.0, -60.0, 0.0, &s).is_err());
        assert!(action_inside(0.5, -60.0, 0.0, &s).is_err());
    }

    /// Event-driven time integration of the square-barrier motion from `q`
    /// with initial momentum `p`, accumulating `p^2/2 - V` over each leg.
    /// Returns `(x(T), action)`.
    fn integrate_motion(q: f64, p: f64, t: f64, setup: &PhysicalSetup) -> (f64, f64) {
        let (a, v0) = (setup.a(), setup.v0());
        let n = 10_000;
        let dt = t / n as f64;
        let (mut x, mut mom, mut action) = (q, p, 0.0);
        let inside = |x: f64| x.abs() < a;
        for _ in 0..n {
            let mut left = dt;
            while left > 0.0 {
                let v = if inside(x) { v0 } else { 0.0 };
                // distance to the next wall in the direction of motion
                let walls = [-a, a];
                let hit = walls.iter().map(|w| (w - x) / mom).filter(|&tw| tw > 1e-13).fold(f64::INFINITY, f64::min);
                let step = left.min(hit);
                action += (0.5 * mom * mom - v) * step;
                x += mom * step;
                left -= step;
                if step == hit {
                    // crossing a wall: change potential or bounce
                    let entering = !inside(x - 1e-9 * mom.signum()) && v == 0.0;
                    if entering {
                        let k = mom * mom - 2.0 * v0;
                        if k > 0.0 {
                            mom = mom.signum() * k.sqrt();
                            x += 1e-12 * mom.signum();
                        } else {
                            mom = -mom;
                        }
                    } else {
                        mom = mom.signum() * (mom * mom + 2.0 * v0).sqrt();
                        x += 1e-12 * mom.signum();
                    }
                }
            }
        }
        (x, action)
    }

    #[test]
    fn actions_match_lagrangian_integration() {
        let s = paper();
        let (q, t) = (-60.0, 50.0);
        let x_f = 0.0;
        let p1 = solve_p1_inside(q, x_f, t, &s).unwrap();
        let (x_end, action) = integrate_motion(q, p1, t, &s);
        let formula = action_inside(p1, q, x_f, &s).unwrap();
        assert!((x_end - x_f).abs() < 1e-8, "{x_end}");
        assert!(((action - formula) / formula).abs() < 1e-9, "{action} vs {formula}");

        let x = 75.0;
        let p1 = solve_p1_after(q, x, t, &s).unwrap();
        let (x_end, action) = integrate_motion(q, p1, t, &s);
        let formula = action_after(p1, q, x, &s).unwrap();
        assert!((x_end - x).abs() < 1e-8, "{x_end}");
        assert!(((action - formula) / formula).abs() < 1e-9, "{action} vs {formula}");

        let x_f = -70.0;
        let tr = reflected_before(q, x_f, t, &s).unwrap().unwrap();
        let (x_end, action) = integrate_motion(q, tr.p_i, t, &s);
        assert!((x_end - x_f).abs() < 1e-8, "{x_end}");
        assert!(((action - tr.action) / tr.action).abs() < 1e-9);
    }

    #[test]
    fn ghost_matches_direct_at_right_wall() {
        let s = paper();
        for &t in &[30.0, 50.0, 100.0] {
            let d = solve_p1_inside(-60.0, 50.0, t, &s).unwrap();
            let g = ghost_p1_inside(-60.0, 50.0, t, &s).unwrap();
            assert!((d - g).abs() < 1e-10);
            let sd = action_inside(d, -60.0, 50.0, &s).unwrap();
            let sg = ghost_action(g, -60.0, 50.0, &s).unwrap();
            assert!((sd - sg).abs() < 1e-10 * sd.abs());
        }
    }

    #[test]
    fn ghost_free_limit() {
        let f = free_limit();
        let p1 = ghost_p1_inside(-60.0, 50.0, 50.0, &f).unwrap();
        // path length (3a - x_f) - (a + q) = 110 over T = 50
        assert!((p1 - 2.2).abs() < 1e-6, "{p1}");
    }

    #[test]
    fn ghost_momentum_monotone() {
        let s = paper();
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let x = -50.0 + 100.0 * k as f64 / 1000.0;
            let p = ghost_p1_inside(-60.0, x, 50.0, &s).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn after_examples() {
        let p1 = solve_p1_after(-60.0, 40.0, 50.0, &PhysicalSetup::new(1e-12, 5.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((p1 - 2.0).abs() < 1e-6);
        let s = paper();
        for &t in &[20.0, 50.0, 100.0] {
            let a = solve_p1_after(-60.0, 50.0, t, &s).unwrap();
            let i = solve_p1_inside(-60.0, 50.0, t, &s).unwrap();
            assert!((a - i).abs() < 1e-10);
        }
        let p1 = solve_p1_after(-60.0, 60.0, 100.0, &s).unwrap();
        let f = |p: f64| (p * p - 1.0) * (p * 100.0 + 100.0 - 60.0 - 60.0).powi(2) - 1e4 * p * p;
        let oracle = bisect(f, 1.0 + 1e-12, 10.0);
        assert!((p1 - oracle).abs() < 1e-10);
        assert!(crossing_residual(p1, 60.0 + 60.0 - 100.0, 100.0, 100.0, 1.0) < 1e-10);
    }

    #[test]
    fn after_free_action() {
        let f = free_limit();
        let (q, x, t) = (-60.0, 80.0, 50.0);
        let p1 = solve_p1_after(q, x, t, &f).unwrap();
        assert!((action_after(p1, q, x, &f).unwrap() - (x - q).powi(2) / (2.0 * t)).abs() < 1e-8);
    }

    #[test]
    fn segment_durations_sum_to_t() {
        let s = paper();
        for &t in &[15.0, 50.0, 120.0] {
            for x in [-30.0, 0.0, 49.0] {
                let tr = inside_trajectory(-60.0, x, t, &s, TangentMethod::Analytic).unwrap();
                assert!((tr.duration() - t).abs() < 1e-12 * t);
                let tr = ghost_trajectory(-60.0, x, t, &s, TangentMethod::Analytic).unwrap();
                assert!((tr.duration() - t).abs() < 1e-12 * t);
            }
            let tr = after_trajectory(-60.0, 75.0, t, &s, TangentMethod::Analytic).unwrap();
            assert!((tr.duration() - t).abs() < 1e-12 * t);
            assert_relative_eq!(tr.barrier_time(), 100.0 / tr.p_barrier.unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn analytic_tangent_matches_finite_differences() {
        let s = paper();
        let fd = TangentMethod::FiniteDifference(FiniteDifference::central());
        for &(x, t) in &[(-20.0, 50.0), (0.0, 50.0), (40.0, 100.0), (-40.0, 20.0)] {
            let a = inside_trajectory(-60.0, x, t, &s, TangentMethod::Analytic).unwrap().tangent;
            let n = inside_trajectory(-60.0, x, t, &s, fd).unwrap().tangent;
            assert!((a.m_qq - n.m_qq).abs() < 1e-6 * a.m_qq.abs().max(1.0), "{a:?} {n:?}");
            assert!((a.m_qp - n.m_qp).abs() < 1e-6 * a.m_qp.abs(), "{a:?} {n:?}");
            let a = ghost_trajectory(-60.0, x, t, &s, TangentMethod::Analytic).unwrap().tangent;
            let n = ghost_trajectory(-60.0, x, t, &s, fd).unwrap().tangent;
            assert!((a.m_qq - n.m_qq).abs() < 1e-6 * a.m_qq.abs().max(1.0), "{a:?} {n:?}");
            assert!((a.m_qp - n.m_qp).abs() < 1e-6 * a.m_qp.abs(), "{a:?} {n:?}");
        }
        let a = after_trajectory(-60.0, 90.0, 60.0, &s, TangentMethod::Analytic).unwrap().tangent;
        let n = after_trajectory(-60.0, 90.0, 60.0, &s, fd).unwrap().tangent;
        assert!((a.m_qq - n.m_qq).abs() < 1e-6 * a.m_qq.abs().max(1.0), "{a:?} {n:?}");
        assert!((a.m_qp - n.m_qp).abs() < 1e-6 * a.m_qp.abs(), "{a:?} {n:?}");
    }

    #[test]
    fn crossing_tangent_free_limit() {
        let f = free_limit();
        let t = 50.0;
        let tr = inside_trajectory(-60.0, 0.0, t, &f, TangentMethod::Analytic).unwrap();
        assert!((tr.tangent.m_qq - 1.0).abs() < 1e-5);
        assert!((tr.tangent.m_qp - t).abs() < 1e-5 * t);
        let fd = TangentMethod::FiniteDifference(FiniteDifference::central());
        let tr = inside_trajectory(-60.0, 0.0, t, &f, fd).unwrap();
        assert!((tr.tangent.m_qq - 1.0).abs() < 1e-5);
        assert!((tr.tangent.m_qp - t).abs() < 1e-5 * t);
    }

    #[test]
    fn ghost_tangent_is_negated_direct_at_right_wall() {
        let s = paper();
        let d = inside_trajectory(-60.0, 50.0, 50.0, &s, TangentMethod::Analytic).unwrap();
        let g = ghost_trajectory(-60.0, 50.0, 50.0, &s, TangentMethod::Analytic).unwrap();
        assert_relative_eq!(g.tangent.m_qq, -d.tangent.m_qq, max_relative = 1e-12);
        assert_relative_eq!(g.tangent.m_qp, -d.tangent.m_qp, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_geometry() {
        let s = paper();
        assert!(solve_p1_inside(-40.0, 0.0, 50.0, &s).is_err());
        assert!(solve_p1_inside(-60.0, 60.0, 50.0, &s).is_err());
        assert!(solve_p1_after(-60.0, 0.0, 50.0, &s).is_err());
        assert!(solve_p1_after(-60.0, 70.0, 0.0, &s).is_err());
    }
}

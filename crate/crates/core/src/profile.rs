//! Single-axis trajectory planning in step units.
//!
//! A [`MotionProfile`] is a chain of cubic polynomial segments giving
//! position (steps) against time (s). Planned moves start at position 0.
//! [`profile_to_steps`] turns a profile into step commands by emitting one
//! pulse whenever the position crosses a half-integer.

use crate::drive::{StepPulse, StepSchedule};
use crate::error::{Error, Result};

/// Kinematic limits for one move, in steps, steps/s, steps/s², steps/s³.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MoveConstraints {
    pub v_max: f64,
    pub a_max: f64,
    pub d_max: f64,
    pub j_max: f64,
}

impl MoveConstraints {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("d_max", self.d_max),
            ("j_max", self.j_max),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Constraint(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    /// Position polynomial in local time: `c[0] + c[1]τ + c[2]τ² + c[3]τ³`.
    pub coeffs: [f64; 4],
}

impl Segment {
    pub fn eval(&self, tau: f64) -> ProfileSample {
        let [c0, c1, c2, c3] = self.coeffs;
        ProfileSample {
            position: c0 + tau * (c1 + tau * (c2 + tau * c3)),
            velocity: c1 + tau * (2.0 * c2 + tau * 3.0 * c3),
            acceleration: 2.0 * c2 + 6.0 * c3 * tau,
            jerk: 6.0 * c3,
        }
    }

    /// Segment starting from a kinematic state with constant jerk.
    pub fn from_state(duration: f64, p: f64, v: f64, a: f64, j: f64) -> Self {
        Self { duration, coeffs: [p, v, a / 2.0, j / 6.0] }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProfileSample {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotionProfile {
    pub segments: Vec<Segment>,
    /// Signed number of steps the profile commands.
    pub total_steps: i64,
}

/// Step index held at a fractional position; increments as the position
/// passes above `k + 0.5`.
fn step_index(position: f64) -> i64 {
    (position - 0.5).ceil() as i64
}

impl MotionProfile {
    /// Joins segments, dropping empty ones. `total_steps` counts the
    /// half-integer crossings between the start and end positions.
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let segments: Vec<Segment> = segments.into_iter().filter(|s| s.duration > 0.0).collect();
        let total_steps = match (segments.first(), segments.last()) {
            (Some(first), Some(last)) => {
                step_index(last.eval(last.duration).position) - step_index(first.coeffs[0])
            }
            _ => 0,
        };
        Self { segments, total_steps }
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Start time of every segment.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }

    /// Kinematic state at `t`, clamped to the profile's time span. After
    /// the end the profile holds its final position at rest.
    pub fn sample(&self, t: f64) -> ProfileSample {
        let Some(last) = self.segments.last() else {
            return ProfileSample::default();
        };
        let mut start = 0.0;
        for seg in &self.segments {
            if t < start + seg.duration {
                return seg.eval((t - start).max(0.0));
            }
            start += seg.duration;
        }
        ProfileSample { position: last.eval(last.duration).position, ..Default::default() }
    }

    pub fn start_position(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.coeffs[0])
    }

    pub fn end_position(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.eval(s.duration).position)
    }

    /// Constant deceleration from `(position, velocity)` to rest.
    pub fn stopping_ramp(position: f64, velocity: f64, decel: f64) -> Self {
        if velocity == 0.0 || !(decel > 0.0) {
            return Self::default();
        }
        let a = -velocity.signum() * decel;
        Self::from_segments(vec![Segment::from_state(velocity.abs() / decel, position, velocity, a, 0.0)])
    }

    /// Largest sampled |velocity| and |acceleration| over `n` samples.
    pub fn peak_kinematics(&self, n: usize) -> (f64, f64) {
        let total = self.total_time();
        let mut peak = (0.0f64, 0.0f64);
        for k in 0..=n {
            let s = self.sample(total * k as f64 / n as f64);
            peak.0 = peak.0.max(s.velocity.abs());
            peak.1 = peak.1.max(s.acceleration.abs());
        }
        peak
    }

    /// Rejects a profile whose sampled velocity or acceleration exceeds the
    /// constraints.
    pub fn check_constraints(&self, c: &MoveConstraints) -> Result<()> {
        let (v, a) = self.peak_kinematics(10_000);
        let tol = 1.0 + 1e-9;
        if v > c.v_max * tol {
            return Err(Error::Constraint(format!(
                "profile velocity {v:.6} exceeds v_max {}",
                c.v_max
            )));
        }
        if a > c.a_max.max(c.d_max) * tol {
            return Err(Error::Constraint(format!(
                "profile acceleration {a:.6} exceeds limit {}",
                c.a_max.max(c.d_max)
            )));
        }
        Ok(())
    }
}

/// Accelerate, cruise, decelerate. Falls back to a triangular profile when
/// the distance is too short to reach `v_max`.
pub fn plan_trapezoid(distance: i64, c: &MoveConstraints) -> Result<MotionProfile> {
    validate_planar(c)?;
    if distance == 0 {
        return Ok(MotionProfile::default());
    }
    let sign = distance.signum() as f64;
    let d = distance.unsigned_abs() as f64;
    let (a, dec) = (c.a_max, c.d_max);
    let full_ramp = c.v_max * c.v_max / (2.0 * a) + c.v_max * c.v_max / (2.0 * dec);
    let (v_peak, cruise) = if d >= full_ramp {
        (c.v_max, (d - full_ramp) / c.v_max)
    } else {
        ((2.0 * d * a * dec / (a + dec)).sqrt(), 0.0)
    };
    let t_acc = v_peak / a;
    let t_dec = v_peak / dec;
    let p1 = 0.5 * a * t_acc * t_acc;
    let p2 = p1 + v_peak * cruise;
    let segments = vec![
        Segment::from_state(t_acc, 0.0, 0.0, sign * a, 0.0),
        Segment::from_state(cruise, sign * p1, sign * v_peak, 0.0, 0.0),
        Segment::from_state(t_dec, sign * p2, sign * v_peak, -sign * dec, 0.0),
    ];
    let mut profile = MotionProfile::from_segments(segments);
    profile.total_steps = distance;
    Ok(profile)
}

fn validate_planar(c: &MoveConstraints) -> Result<()> {
    for (name, value) in [("v_max", c.v_max), ("a_max", c.a_max), ("d_max", c.d_max)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Constraint(format!("{name} must be positive, got {value}")));
        }
    }
    Ok(())
}

/// Timing of a jerk-limited ramp from rest to `v` (or back).
#[derive(Debug, Clone, Copy)]
struct JerkRamp {
    /// Duration of each constant-jerk piece.
    t_jerk: f64,
    /// Duration of the constant-acceleration piece.
    t_const: f64,
    peak_accel: f64,
}

impl JerkRamp {
    fn new(v: f64, a_max: f64, j_max: f64) -> Self {
        if v * j_max >= a_max * a_max {
            let t_jerk = a_max / j_max;
            Self { t_jerk, t_const: v / a_max - t_jerk, peak_accel: a_max }
        } else {
            let t_jerk = (v / j_max).sqrt();
            Self { t_jerk, t_const: 0.0, peak_accel: j_max * t_jerk }
        }
    }

    fn duration(&self) -> f64 {
        2.0 * self.t_jerk + self.t_const
    }
}

/// Distance covered by accelerating from rest to `v` and back to rest.
fn ramp_distance(v: f64, c: &MoveConstraints) -> f64 {
    let up = JerkRamp::new(v, c.a_max, c.j_max);
    let down = JerkRamp::new(v, c.d_max, c.j_max);
    // Each ramp's velocity curve is point-symmetric about its midpoint.
    0.5 * v * (up.duration() + down.duration())
}

/// Seven-phase jerk-limited profile: jerk takes only the values
/// `+j_max`, `0` and `-j_max`.
pub fn plan_scurve(distance: i64, c: &MoveConstraints) -> Result<MotionProfile> {
    c.validate()?;
    if distance == 0 {
        return Ok(MotionProfile::default());
    }
    let sign = distance.signum() as f64;
    let d = distance.unsigned_abs() as f64;

    let (v_peak, cruise) = if ramp_distance(c.v_max, c) <= d {
        (c.v_max, (d - ramp_distance(c.v_max, c)) / c.v_max)
    } else {
        // ramp_distance is increasing in v; bisect for the reachable peak.
        let (mut lo, mut hi) = (0.0, c.v_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ramp_distance(mid, c) <= d {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        (lo, 0.0)
    };

    let up = JerkRamp::new(v_peak, c.a_max, c.j_max);
    let down = JerkRamp::new(v_peak, c.d_max, c.j_max);
    let j = c.j_max;
    let phases = [
        (up.t_jerk, j),
        (up.t_const, 0.0),
        (up.t_jerk, -j),
        (cruise, 0.0),
        (down.t_jerk, -j),
        (down.t_const, 0.0),
        (down.t_jerk, j),
    ];
    let mut segments = Vec::with_capacity(phases.len());
    let (mut p, mut v, mut a) = (0.0, 0.0, 0.0);
    for (k, &(duration, jerk)) in phases.iter().enumerate() {
        let seg = Segment::from_state(duration, sign * p, sign * v, sign * a, sign * jerk);
        segments.push(seg);
        let end = Segment::from_state(duration, p, v, a, jerk).eval(duration);
        p = end.position;
        // Pin the exact plateau values to stop rounding from accumulating.
        (v, a) = match k {
            0 => (end.velocity, up.peak_accel),
            1 => (end.velocity, up.peak_accel),
            2 | 3 => (v_peak, 0.0),
            4 | 5 => (end.velocity, -down.peak_accel),
            _ => (0.0, 0.0),
        };
    }
    let mut profile = MotionProfile::from_segments(segments);
    profile.total_steps = distance;
    Ok(profile)
}

/// Boundary condition for contour splines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplineEnds {
    /// Zero velocity at both ends.
    #[default]
    Clamped,
    /// Zero curvature at both ends.
    Natural,
}

/// Cubic spline through `(t, position)` waypoints. The profile's time
/// origin is the first waypoint's time; its start position is the first
/// waypoint's position.
pub fn plan_contour(waypoints: &[(f64, f64)], ends: SplineEnds) -> Result<MotionProfile> {
    if waypoints.len() < 2 {
        return Err(Error::Constraint("a contour needs at least two waypoints".into()));
    }
    if waypoints.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
        return Err(Error::Constraint("contour waypoints must be finite".into()));
    }
    if let Some(w) = waypoints.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::Constraint(format!(
            "waypoint times must increase strictly ({} then {})",
            w[0].0, w[1].0
        )));
    }

    let n = waypoints.len() - 1;
    let h: Vec<f64> = waypoints.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let slope: Vec<f64> = waypoints
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1].1 - w[0].1) / h)
        .collect();

    // Tridiagonal system for the knot second derivatives m[0..=n].
    let mut sub = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut sup = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    match ends {
        SplineEnds::Natural => {
            diag[0] = 1.0;
            diag[n] = 1.0;
        }
        SplineEnds::Clamped => {
            diag[0] = 2.0 * h[0];
            sup[0] = h[0];
            rhs[0] = 6.0 * slope[0];
            sub[n] = h[n - 1];
            diag[n] = 2.0 * h[n - 1];
            rhs[n] = -6.0 * slope[n - 1];
        }
    }
    for i in 1..n {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
    }
    let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);

    let segments = (0..n)
        .map(|i| {
            let hi = h[i];
            Segment {
                duration: hi,
                coeffs: [
                    waypoints[i].1,
                    slope[i] - hi * (2.0 * m[i] + m[i + 1]) / 6.0,
                    m[i] / 2.0,
                    (m[i + 1] - m[i]) / (6.0 * hi),
                ],
            }
        })
        .collect();
    Ok(MotionProfile::from_segments(segments))
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Width of a lone pulse with no neighbour to take half a period from.
const LONE_PULSE_WIDTH: f64 = 1e-3;

/// Emits one step pulse at each half-integer crossing of the profile's
/// position. With `direction_aware`, REV follows the sign of motion at each
/// crossing; without it the profile must be monotone and REV is the sign of
/// the whole move.
pub fn profile_to_steps(profile: &MotionProfile, direction_aware: bool) -> Result<StepSchedule> {
    let mut edges: Vec<(f64, bool)> = Vec::new();
    let mut start = 0.0;
    for seg in &profile.segments {
        segment_crossings(seg, start, &mut edges);
        start += seg.duration;
    }
    if !direction_aware {
        let reverse = profile.total_steps < 0;
        if edges.iter().any(|&(_, r)| r != reverse) {
            return Err(Error::Constraint(
                "profile reverses direction; direction-aware conversion required".into(),
            ));
        }
    }
    let pulses = (0..edges.len())
        .map(|k| {
            let (t, reverse) = edges[k];
            let width = match (k.checked_sub(1).map(|i| edges[i].0), edges.get(k + 1)) {
                (_, Some(&(next, _))) => (next - t) / 2.0,
                (Some(prev), None) => (t - prev) / 2.0,
                (None, None) => LONE_PULSE_WIDTH,
            };
            StepPulse { t, width, reverse }
        })
        .collect();
    Ok(StepSchedule { pulses })
}

fn segment_crossings(seg: &Segment, t0: f64, out: &mut Vec<(f64, bool)>) {
    // Split at velocity roots so each piece is monotone.
    let [_, c1, c2, c3] = seg.coeffs;
    let mut cuts = vec![0.0];
    let mut roots = quadratic_roots(3.0 * c3, 2.0 * c2, c1);
    roots.sort_by(f64::total_cmp);
    cuts.extend(roots.into_iter().filter(|&r| r > 0.0 && r < seg.duration));
    cuts.push(seg.duration);

    let pos = |tau: f64| seg.eval(tau).position;
    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let (pa, pb) = (pos(ta), pos(tb));
        let (ka, kb) = (step_index(pa), step_index(pb));
        if kb > ka {
            // Rising: step k+1 fires when position passes above k + 0.5.
            for k in ka..kb {
                let level = k as f64 + 0.5;
                out.push((t0 + bisect(&pos, ta, tb, level, true), false));
            }
        } else if kb < ka {
            for k in (kb..ka).rev() {
                let level = k as f64 + 0.5;
                out.push((t0 + bisect(&pos, ta, tb, level, false), true));
            }
        }
    }
}

/// First time in `[lo, hi]` where a monotone `f` passes `level`.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, level: f64, rising: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let passed = if rising { f(mid) > level } else { f(mid) <= level };
        if passed {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b.abs() > 1e-14 * scale { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(v: f64, a: f64, d: f64) -> MoveConstraints {
        MoveConstraints { v_max: v, a_max: a, d_max: d, j_max: 1000.0 }
    }

    #[test]
    fn trapezoid_phases() {
        let p = plan_trapezoid(100, &limits(10.0, 10.0, 10.0)).unwrap();
        let durations: Vec<f64> = p.segments.iter().map(|s| s.duration).collect();
        assert_eq!(durations, vec![1.0, 9.0, 1.0]);
        assert_eq!(p.sample(1.0).position, 5.0);
        assert_eq!(p.sample(10.0).position, 95.0);
        assert!((p.end_position() - 100.0).abs() < 1e-12);
        assert_eq!(p.total_steps, 100);
    }

    #[test]
    fn triangular_fallback() {
        let p = plan_trapezoid(4, &limits(10.0, 4.0, 4.0)).unwrap();
        assert_eq!(p.segments.len(), 2);
        assert!((p.total_time() - 2.0).abs() < 1e-12);
        assert!((p.sample(1.0).velocity - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_negative_distance() {
        assert!(plan_trapezoid(0, &limits(1.0, 1.0, 1.0)).unwrap().is_empty());
        assert!(plan_scurve(0, &limits(1.0, 1.0, 1.0)).unwrap().is_empty());
        let fwd = plan_trapezoid(100, &limits(10.0, 10.0, 10.0)).unwrap();
        let rev = plan_trapezoid(-100, &limits(10.0, 10.0, 10.0)).unwrap();
        for k in 0..=110 {
            let t = k as f64 * 0.1;
            assert_eq!(fwd.sample(t).velocity, -rev.sample(t).velocity);
            assert_eq!(fwd.sample(t).position, -rev.sample(t).position);
        }
    }

    #[test]
    fn bad_constraints_rejected() {
        assert!(plan_trapezoid(10, &limits(0.0, 1.0, 1.0)).is_err());
        assert!(plan_trapezoid(10, &limits(1.0, -1.0, 1.0)).is_err());
        let c = MoveConstraints { j_max: 0.0, ..limits(1.0, 1.0, 1.0) };
        assert!(plan_scurve(10, &c).is_err());
    }

    #[test]
    fn asymmetric_trapezoid() {
        let c = limits(10.0, 5.0, 20.0);
        let p = plan_trapezoid(50, &c).unwrap();
        assert!((p.segments[0].duration - 2.0).abs() < 1e-12);
        assert!((p.segments[2].duration - 0.5).abs() < 1e-12);
        assert!((p.end_position() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn scurve_reaches_target_with_continuous_accel() {
        let c = MoveConstraints { v_max: 50.0, a_max: 100.0, d_max: 80.0, j_max: 1000.0 };
        for distance in [1, 3, 17, 250, -40] {
            let p = plan_scurve(distance, &c).unwrap();
            assert!((p.end_position() - distance as f64).abs() < 1e-9, "{distance}");
            let starts = p.segment_starts();
            for (k, &t) in starts.iter().enumerate().skip(1) {
                let left = p.segments[k - 1].eval(p.segments[k - 1].duration);
                let right = p.segments[k].eval(0.0);
                assert!((left.position - right.position).abs() < 1e-9, "t={t}");
                assert!((left.velocity - right.velocity).abs() < 1e-9);
                assert!((left.acceleration - right.acceleration).abs() < 1e-9);
            }
            let end = p.sample(p.total_time() - 1e-12);
            assert!(end.velocity.abs() < 1e-6 && end.acceleration.abs() < 1e-6);
        }
    }

    #[test]
    fn contour_clamped_and_natural() {
        let pts = [(0.0, 0.0), (1.0, 10.0), (2.0, 20.0)];
        let natural = plan_contour(&pts, SplineEnds::Natural).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.1;
            assert!((natural.sample(t).velocity - 10.0).abs() < 1e-9);
        }
        let clamped = plan_contour(&pts, SplineEnds::Clamped).unwrap();
        assert_eq!(clamped.sample(0.0).velocity, 0.0);
        assert!(clamped.sample(2.0 - 1e-12).velocity.abs() < 1e-9);
        for (t, p) in pts {
            assert!((clamped.sample(t).position - p).abs() < 1e-9);
        }
        assert_eq!(clamped.total_steps, 20);
    }

    #[test]
    fn contour_rejects_bad_waypoints() {
        assert!(plan_contour(&[(0.0, 1.0)], SplineEnds::Clamped).is_err());
        assert!(plan_contour(&[(0.0, 1.0), (0.0, 2.0)], SplineEnds::Clamped).is_err());
        assert!(plan_contour(&[(1.0, 1.0), (0.5, 2.0)], SplineEnds::Natural).is_err());
    }

    #[test]
    fn constant_velocity_edges() {
        let seg = Segment { duration: 1.0, coeffs: [0.0, 10.0, 0.0, 0.0] };
        let p = MotionProfile::from_segments(vec![seg]);
        let s = profile_to_steps(&p, true).unwrap();
        assert_eq!(s.len(), 10);
        for w in s.pulses.windows(2) {
            assert!((w[1].t - w[0].t - 0.1).abs() < 1e-12);
        }
        assert!((s.pulses[0].t - 0.05).abs() < 1e-12);
    }

    #[test]
    fn reversing_profile_needs_direction_awareness() {
        let p = plan_contour(&[(0.0, 0.0), (1.0, 5.0), (2.0, 0.0)], SplineEnds::Clamped).unwrap();
        assert_eq!(p.total_steps, 0);
        let s = profile_to_steps(&p, true).unwrap();
        assert_eq!(s.net_steps(), 0);
        assert_eq!(s.pulses.iter().filter(|p| !p.reverse).count(), 5);
        assert!(profile_to_steps(&p, false).is_err());
    }

    #[test]
    fn stopping_ramp_comes_to_rest() {
        let ramp = MotionProfile::stopping_ramp(10.2, 8.0, 4.0);
        assert!((ramp.total_time() - 2.0).abs() < 1e-12);
        assert!((ramp.end_position() - 18.2).abs() < 1e-12);
        assert_eq!(profile_to_steps(&ramp, true).unwrap().len(), 8);
        assert!(MotionProfile::stopping_ramp(3.0, 0.0, 4.0).is_empty());
    }
}

//! Fixed-step integration of the plant and trace capture.

use crate::drive::{DriveStage, StepSchedule};
use crate::error::{Error, Result};
use crate::motor::{electrical_torque, state_derivative, MotorParams, MotorState, PhaseVoltages};

/// Default integrator step in seconds.
pub const DEFAULT_DT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Every `record_stride`-th integrator sample is recorded.
    pub record_stride: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, duration: 1.0, record_stride: 10 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of integrator steps covering `duration`.
    pub fn steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

/// One recorded sample of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFrame {
    pub t: f64,
    pub state: MotorState,
    /// Winding voltages applied from `t` to the next sample.
    pub volts: PhaseVoltages,
    pub torque: f64,
    /// ENA input level in V.
    pub ena: f64,
    /// REV input level in V.
    pub rev: f64,
    pub home_active: bool,
    pub fwd_limit_active: bool,
    pub rev_limit_active: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub frames: Vec<TraceFrame>,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceFrame> {
        self.frames.last()
    }

    /// Largest rotor angle recorded within `[t0, t1]`.
    pub fn max_theta_between(&self, t0: f64, t1: f64) -> Option<f64> {
        self.frames
            .iter()
            .filter(|f| f.t >= t0 && f.t <= t1)
            .map(|f| f.state.theta)
            .reduce(f64::max)
    }
}

/// Classical fourth-order Runge–Kutta step with the winding voltages held
/// over the step.
pub fn rk4_step(p: &MotorParams, s: &MotorState, v: &PhaseVoltages, dt: f64) -> Result<MotorState> {
    let k1 = state_derivative(p, s, v);
    let k2 = state_derivative(p, &s.advanced(&k1, dt / 2.0), v);
    let k3 = state_derivative(p, &s.advanced(&k2, dt / 2.0), v);
    let k4 = state_derivative(p, &s.advanced(&k3, dt), v);
    let next = MotorState {
        theta: s.theta + dt / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
        omega: s.omega + dt / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega),
        i_a: s.i_a + dt / 6.0 * (k1.i_a + 2.0 * k2.i_a + 2.0 * k3.i_a + k4.i_a),
        i_b: s.i_b + dt / 6.0 * (k1.i_b + 2.0 * k2.i_b + 2.0 * k3.i_b + k4.i_b),
    };
    match next.non_finite_field() {
        Some(field) => Err(Error::IntegrationBlowup { field, t: f64::NAN }),
        None => Ok(next),
    }
}

/// Explicit Euler reference integrator, sampling the drive at the start of
/// every step. `observe` sees every state including the initial one.
pub fn euler_oracle_observed(
    p: &MotorParams,
    s: MotorState,
    mut drive_fn: impl FnMut(f64) -> PhaseVoltages,
    duration: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &MotorState),
) -> Result<MotorState> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let n = (duration / dt).round() as u64;
    let mut state = s;
    observe(0.0, &state);
    for k in 0..n {
        let t = k as f64 * dt;
        let v = drive_fn(t);
        // Written out longhand so it shares nothing with `rk4_step`.
        let nr = f64::from(p.rotor_teeth);
        let angle = nr * state.theta;
        let e_a = -p.km * state.omega * angle.sin();
        let e_b = p.km * state.omega * angle.cos();
        let torque = -p.km * state.i_a * angle.sin() + p.km * state.i_b * angle.cos()
            - p.detent_torque * (4.0 * angle).sin();
        state = MotorState {
            theta: state.theta + dt * state.omega,
            omega: state.omega + dt * (torque - p.damping * state.omega - p.load_torque) / p.inertia,
            i_a: state.i_a + dt * (v.v_a - p.resistance * state.i_a - e_a) / p.inductance,
            i_b: state.i_b + dt * (v.v_b - p.resistance * state.i_b - e_b) / p.inductance,
        };
        if let Some(field) = state.non_finite_field() {
            return Err(Error::IntegrationBlowup { field, t: (k + 1) as f64 * dt });
        }
        observe((k + 1) as f64 * dt, &state);
    }
    Ok(state)
}

pub fn euler_oracle(
    p: &MotorParams,
    s: MotorState,
    drive_fn: impl FnMut(f64) -> PhaseVoltages,
    duration: f64,
    dt: f64,
) -> Result<MotorState> {
    euler_oracle_observed(p, s, drive_fn, duration, dt, |_, _| {})
}

/// The settled state for the drive's present phase: rotor on the stable
/// equilibrium and winding currents at their DC values.
pub fn aligned_state(p: &MotorParams, drive: &DriveStage) -> MotorState {
    let v = drive.voltages();
    MotorState {
        theta: p.phase_equilibrium(drive.state.phase_index),
        omega: 0.0,
        i_a: v.v_a / p.resistance,
        i_b: v.v_b / p.resistance,
    }
}

/// Integrates the plant under a step schedule.
///
/// ENA and REV are sampled at every integrator step, so edges are snapped
/// forward onto the `dt` grid. Frames are recorded before each step; the
/// final sample at `duration` is included when it falls on the stride.
pub fn simulate(
    p: &MotorParams,
    mut drive: DriveStage,
    schedule: &StepSchedule,
    initial: MotorState,
    cfg: &SimConfig,
) -> Result<Trace> {
    cfg.validate()?;
    p.validate()?;
    drive.config.validate()?;
    if let Some(bad) = schedule
        .pulses
        .iter()
        .find(|pulse| !(pulse.t >= 0.0 && pulse.t <= cfg.duration))
    {
        return Err(Error::Schedule(format!(
            "step at t = {} s lies outside [0, {}] s",
            bad.t, cfg.duration
        )));
    }

    let n_steps = cfg.steps();
    let mut sampled = schedule.sampled(cfg.dt);
    let mut state = initial;
    let mut trace = Trace {
        frames: Vec::with_capacity((n_steps / u64::from(cfg.record_stride) + 1) as usize),
    };
    for n in 0..=n_steps {
        let t = n as f64 * cfg.dt;
        let (ena, rev) = sampled.levels(n);
        let (ena_v, rev_v) = (drive.config.level(ena), drive.config.level(rev));
        drive.sample(ena_v, rev_v);
        let volts = drive.voltages();
        if n % u64::from(cfg.record_stride) == 0 {
            trace.frames.push(TraceFrame {
                t,
                state,
                volts,
                torque: electrical_torque(p, &state),
                ena: ena_v,
                rev: rev_v,
                home_active: false,
                fwd_limit_active: false,
                rev_limit_active: false,
            });
        }
        if n < n_steps {
            state = rk4_step(p, &state, &volts, cfg.dt).map_err(|e| match e {
                Error::IntegrationBlowup { field, .. } => Error::IntegrationBlowup { field, t },
                other => other,
            })?;
        }
    }
    Ok(trace)
}

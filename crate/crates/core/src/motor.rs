//! Continuous-time model of a two-phase hybrid stepper motor.
//!
//! The plant state is `(θ, ω, i_A, i_B)`. Winding currents obey an RL
//! circuit driven by the phase voltage minus the back-EMF, and the rotor is a
//! damped inertia driven by the electrical torque (including the detent
//! harmonic). The magnetizing resistance is taken as infinite, so the
//! back-EMF does not leak into the torque expression.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default rotational damping in N·m·s/rad.
pub const DEFAULT_DAMPING: f64 = 1e-3;

/// Datasheet record of a stepper motor.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorSpec {
    pub step_angle_deg: f64,
    pub steps_per_rev: u32,
    /// Holding torque in N·m.
    pub holding_torque: f64,
    /// Rated current per phase in A.
    pub rated_current: f64,
    /// Phase resistance in Ω.
    pub phase_resistance: f64,
    /// Phase inductance in H.
    pub phase_inductance: f64,
    /// Detent torque in N·m.
    pub detent_torque: f64,
    /// Rotor inertia in kg·m².
    pub rotor_inertia: f64,
    pub max_rpm: f64,
    pub angular_accuracy_pct: f64,
}

impl MotorSpec {
    /// The NI N33HRLG-LEK-M2-00 motor used by the rehabilitation rig.
    pub fn n33hrlg() -> Self {
        Self {
            step_angle_deg: 1.8,
            steps_per_rev: 200,
            holding_torque: 12.08,
            rated_current: 1.24,
            phase_resistance: 13.0,
            phase_inductance: 0.144,
            detent_torque: 0.381,
            rotor_inertia: 0.4e-3,
            max_rpm: 1800.0,
            angular_accuracy_pct: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_angle_deg", self.step_angle_deg),
            ("holding_torque", self.holding_torque),
            ("rated_current", self.rated_current),
            ("phase_resistance", self.phase_resistance),
            ("phase_inductance", self.phase_inductance),
            ("detent_torque", self.detent_torque),
            ("rotor_inertia", self.rotor_inertia),
            ("max_rpm", self.max_rpm),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.steps_per_rev == 0 {
            return Err(Error::Config("steps_per_rev must be positive".into()));
        }
        if !(self.angular_accuracy_pct.is_finite() && self.angular_accuracy_pct >= 0.0) {
            return Err(Error::Config("angular_accuracy_pct must be non-negative".into()));
        }
        let span = self.step_angle_deg * f64::from(self.steps_per_rev);
        if (span - 360.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "step_angle_deg × steps_per_rev must be 360, got {span}"
            )));
        }
        rotor_teeth(self.step_angle_deg)?;
        Ok(())
    }

    /// Highest step rate the motor is rated for, in steps/s.
    pub fn max_step_rate(&self) -> f64 {
        self.max_rpm * f64::from(self.steps_per_rev) / 60.0
    }
}

/// Number of teeth per rotor pole for a full-step angle in degrees.
pub fn rotor_teeth(step_angle_deg: f64) -> Result<u32> {
    let teeth = 90.0 / step_angle_deg;
    let rounded = teeth.round();
    if rounded < 1.0 || (teeth - rounded).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "step angle {step_angle_deg}° does not give an integer rotor tooth count"
        )));
    }
    Ok(rounded as u32)
}

/// Coefficients of the electromechanical equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Torque constant K_m in N·m/A.
    pub km: f64,
    /// Teeth per rotor pole, N_r.
    pub rotor_teeth: u32,
    pub resistance: f64,
    pub inductance: f64,
    /// Viscous damping B in N·m·s/rad.
    pub damping: f64,
    /// Rotor plus lumped load inertia in kg·m².
    pub inertia: f64,
    /// Detent torque amplitude T_d in N·m.
    pub detent_torque: f64,
    /// Constant external torque opposing positive rotation, in N·m.
    pub load_torque: f64,
}

impl MotorParams {
    /// Derives plant coefficients from a datasheet record with the default
    /// damping, no added inertia and no load.
    pub fn from_spec(spec: &MotorSpec) -> Result<Self> {
        spec.validate()?;
        let params = Self {
            km: torque_constant(spec.holding_torque, spec.rated_current)?,
            rotor_teeth: rotor_teeth(spec.step_angle_deg)?,
            resistance: spec.phase_resistance,
            inductance: spec.phase_inductance,
            damping: DEFAULT_DAMPING,
            inertia: spec.rotor_inertia,
            detent_torque: spec.detent_torque,
            load_torque: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("inertia", self.inertia),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [
            ("km", self.km),
            ("damping", self.damping),
            ("detent_torque", self.detent_torque),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {value}")));
            }
        }
        if !self.load_torque.is_finite() {
            return Err(Error::Config("load_torque must be finite".into()));
        }
        if self.rotor_teeth == 0 {
            return Err(Error::Config("rotor_teeth must be at least 1".into()));
        }
        Ok(())
    }

    fn nr(&self) -> f64 {
        f64::from(self.rotor_teeth)
    }

    /// Rotor angle of the stable equilibrium for full-step phase state `k`
    /// with both windings carrying equal current magnitude.
    pub fn phase_equilibrium(&self, k: i64) -> f64 {
        (FRAC_PI_4 + k as f64 * FRAC_PI_2) / self.nr()
    }
}

/// Plant state vector.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotorState {
    /// Rotor angle θ in rad.
    pub theta: f64,
    /// Rotor speed ω in rad/s.
    pub omega: f64,
    pub i_a: f64,
    pub i_b: f64,
}

impl MotorState {
    /// Returns the name of the first non-finite component, if any.
    pub fn non_finite_field(&self) -> Option<&'static str> {
        [
            ("theta", self.theta),
            ("omega", self.omega),
            ("i_a", self.i_a),
            ("i_b", self.i_b),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }

    /// `self + h · d`.
    pub fn advanced(&self, d: &MotorStateDerivative, h: f64) -> Self {
        Self {
            theta: self.theta + h * d.theta,
            omega: self.omega + h * d.omega,
            i_a: self.i_a + h * d.i_a,
            i_b: self.i_b + h * d.i_b,
        }
    }
}

/// Time derivative of [`MotorState`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotorStateDerivative {
    pub theta: f64,
    pub omega: f64,
    pub i_a: f64,
    pub i_b: f64,
}

/// Winding voltages applied by the drive.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseVoltages {
    pub v_a: f64,
    pub v_b: f64,
}

/// `K_H / I_s`.
pub fn torque_constant(holding_torque: f64, stator_current: f64) -> Result<f64> {
    if !(stator_current > 0.0) {
        return Err(Error::Domain(format!(
            "stator current must be positive, got {stator_current}"
        )));
    }
    Ok(holding_torque / stator_current)
}

/// Back-EMF `(e_A, e_B)` induced in the windings.
pub fn back_emf(p: &MotorParams, theta: f64, omega: f64) -> (f64, f64) {
    let (s, c) = (p.nr() * theta).sin_cos();
    (-p.km * omega * s, p.km * omega * c)
}

/// Electrical torque including the detent harmonic.
pub fn electrical_torque(p: &MotorParams, s: &MotorState) -> f64 {
    let nr = p.nr();
    let (sin, cos) = (nr * s.theta).sin_cos();
    -p.km * s.i_a * sin + p.km * s.i_b * cos - p.detent_torque * (4.0 * nr * s.theta).sin()
}

pub fn state_derivative(p: &MotorParams, s: &MotorState, v: &PhaseVoltages) -> MotorStateDerivative {
    let (e_a, e_b) = back_emf(p, s.theta, s.omega);
    let torque = electrical_torque(p, s);
    MotorStateDerivative {
        theta: s.omega,
        omega: (torque - p.damping * s.omega - p.load_torque) / p.inertia,
        i_a: (v.v_a - p.resistance * s.i_a - e_a) / p.inductance,
        i_b: (v.v_b - p.resistance * s.i_b - e_b) / p.inductance,
    }
}

/// Mechanical angle of one full step, `(π/2)/N_r`.
pub fn step_size(p: &MotorParams) -> f64 {
    FRAC_PI_2 / p.nr()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotorFile {
    step_angle_deg: f64,
    steps_per_rev: u32,
    holding_torque: f64,
    rated_current: f64,
    phase_resistance: f64,
    phase_inductance: f64,
    detent_torque: f64,
    rotor_inertia: f64,
    max_rpm: f64,
    angular_accuracy_pct: f64,
    torque_constant: Option<f64>,
    damping: Option<f64>,
    load_inertia: Option<f64>,
    load_torque: Option<f64>,
}

/// A motor definition loaded from a `.params` file.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorDefinition {
    pub spec: MotorSpec,
    pub params: MotorParams,
}

impl MotorDefinition {
    pub fn n33hrlg() -> Self {
        let spec = MotorSpec::n33hrlg();
        let params = MotorParams::from_spec(&spec).expect("datasheet constants are valid");
        Self { spec, params }
    }

    /// Parses `name = value` lines. Datasheet keys are mandatory; the
    /// optional keys `torque_constant`, `damping`, `load_inertia` (added to
    /// the rotor inertia) and `load_torque` override derived defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let file: MotorFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let spec = MotorSpec {
            step_angle_deg: file.step_angle_deg,
            steps_per_rev: file.steps_per_rev,
            holding_torque: file.holding_torque,
            rated_current: file.rated_current,
            phase_resistance: file.phase_resistance,
            phase_inductance: file.phase_inductance,
            detent_torque: file.detent_torque,
            rotor_inertia: file.rotor_inertia,
            max_rpm: file.max_rpm,
            angular_accuracy_pct: file.angular_accuracy_pct,
        };
        let mut params = MotorParams::from_spec(&spec)?;
        if let Some(km) = file.torque_constant {
            params.km = km;
        }
        if let Some(b) = file.damping {
            params.damping = b;
        }
        if let Some(j) = file.load_inertia {
            params.inertia += j;
        }
        if let Some(t) = file.load_torque {
            params.load_torque = t;
        }
        params.validate()?;
        Ok(Self { spec, params })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

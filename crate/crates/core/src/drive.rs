//! Step/direction drive stage.
//!
//! The drive watches two logic inputs. Every rising crossing of the ENA
//! input over the enable threshold advances the full-step phase counter by
//! one, in the direction selected by the REV input at that instant. The
//! phase counter selects the winding voltages from a four-state two-phase-on
//! sequence, which is the quadrature pair of square waves with A leading B
//! for forward motion.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::motor::{MotorSpec, PhaseVoltages};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Reverse => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }

    pub fn from_sign(x: f64) -> Self {
        if x < 0.0 {
            Direction::Reverse
        } else {
            Direction::Forward
        }
    }
}

/// Electrical levels of the drive inputs and output stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub enable_threshold: f64,
    pub reverse_threshold: f64,
    pub logic_high: f64,
    pub logic_low: f64,
    /// Winding supply voltage in V.
    pub supply_voltage: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self::for_motor(&MotorSpec::n33hrlg())
    }
}

impl DriveConfig {
    /// TTL inputs with a supply that drives rated current through a winding
    /// at standstill.
    pub fn for_motor(spec: &MotorSpec) -> Self {
        Self {
            enable_threshold: 2.5,
            reverse_threshold: 2.5,
            logic_high: 5.0,
            logic_low: 0.0,
            supply_voltage: spec.rated_current * spec.phase_resistance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, threshold) in [
            ("enable_threshold", self.enable_threshold),
            ("reverse_threshold", self.reverse_threshold),
        ] {
            if !(self.logic_low < threshold && threshold < self.logic_high) {
                return Err(Error::Config(format!(
                    "{name} {threshold} V must lie strictly between logic levels {} V and {} V",
                    self.logic_low, self.logic_high
                )));
            }
        }
        if !(self.supply_voltage > 0.0 && self.supply_voltage.is_finite()) {
            return Err(Error::Config("supply_voltage must be positive".into()));
        }
        Ok(())
    }

    pub fn level(&self, high: bool) -> f64 {
        if high {
            self.logic_high
        } else {
            self.logic_low
        }
    }
}

/// Mutable part of the drive: the phase counter and the last ENA sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState {
    pub phase_index: i64,
    pub ena_prev: f64,
    /// Whether the output stage powers the windings.
    pub energized: bool,
}

impl Default for DriveState {
    fn default() -> Self {
        Self { phase_index: 0, ena_prev: 0.0, energized: true }
    }
}

impl DriveState {
    /// Feeds one ENA sample; a rising crossing of the enable threshold moves
    /// the phase counter one step in `direction`.
    #[must_use]
    pub fn on_ena_sample(self, ena_v: f64, direction: Direction, cfg: &DriveConfig) -> Self {
        let rising = self.ena_prev <= cfg.enable_threshold && ena_v > cfg.enable_threshold;
        Self {
            phase_index: if rising {
                self.phase_index + direction.sign()
            } else {
                self.phase_index
            },
            ena_prev: ena_v,
            energized: self.energized,
        }
    }

    pub fn phase_voltages(&self, cfg: &DriveConfig) -> PhaseVoltages {
        if !self.energized {
            return PhaseVoltages::default();
        }
        let v = cfg.supply_voltage;
        let (a, b) = match self.phase_index.rem_euclid(4) {
            0 => (v, v),
            1 => (-v, v),
            2 => (-v, -v),
            _ => (v, -v),
        };
        PhaseVoltages { v_a: a, v_b: b }
    }
}

/// REV at or below the threshold keeps A leading B.
pub fn decode_direction(rev_v: f64, cfg: &DriveConfig) -> Direction {
    if rev_v <= cfg.reverse_threshold {
        Direction::Forward
    } else {
        Direction::Reverse
    }
}

/// Drive configuration together with its live state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DriveStage {
    pub config: DriveConfig,
    pub state: DriveState,
}

impl DriveStage {
    pub fn new(config: DriveConfig) -> Self {
        Self { config, state: DriveState::default() }
    }

    /// Applies one sample of both logic inputs. REV is only consulted when
    /// ENA produces a step, so direction is latched per step.
    pub fn sample(&mut self, ena_v: f64, rev_v: f64) {
        let direction = decode_direction(rev_v, &self.config);
        self.state = self.state.on_ena_sample(ena_v, direction, &self.config);
    }

    pub fn voltages(&self) -> PhaseVoltages {
        self.state.phase_voltages(&self.config)
    }
}

/// One step command: ENA is high on `[t, t + width)` and REV holds
/// `reverse` around the rising edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPulse {
    pub t: f64,
    pub width: f64,
    pub reverse: bool,
}

impl StepPulse {
    pub fn direction(&self) -> Direction {
        if self.reverse {
            Direction::Reverse
        } else {
            Direction::Forward
        }
    }
}

/// Time-ordered list of step commands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepSchedule {
    pub pulses: Vec<StepPulse>,
}

impl StepSchedule {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Signed number of steps commanded.
    pub fn net_steps(&self) -> i64 {
        self.pulses.iter().map(|p| p.direction().sign()).sum()
    }

    pub fn end_time(&self) -> f64 {
        self.pulses.last().map_or(0.0, |p| p.t + p.width)
    }

    /// Returns the schedule delayed by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            pulses: self
                .pulses
                .iter()
                .map(|p| StepPulse { t: p.t + offset, ..*p })
                .collect(),
        }
    }

    pub fn append(&mut self, other: &StepSchedule) {
        self.pulses.extend_from_slice(&other.pulses);
    }

    /// ENA/REV transitions as `t,ena,rev` rows with logic levels 0/1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,ena,rev\n");
        for p in &self.pulses {
            let rev = u8::from(p.reverse);
            let _ = writeln!(out, "{},1,{rev}", crate::export::fmt_sig9(p.t));
            let _ = writeln!(out, "{},0,{rev}", crate::export::fmt_sig9(p.t + p.width));
        }
        out
    }

    /// Converts pulse times to integrator sample indices for step `dt`.
    pub fn sampled(&self, dt: f64) -> SampledSchedule {
        let index = |t: f64| (t / dt - 1e-9).ceil().max(0.0) as u64;
        let mut pulses: Vec<SampledPulse> = Vec::with_capacity(self.pulses.len());
        for p in &self.pulses {
            let mut rise = index(p.t);
            if let Some(prev) = pulses.last() {
                // Keep at least one low sample between consecutive pulses.
                rise = rise.max(prev.fall + 1);
            }
            let fall = index(p.t + p.width).max(rise + 1);
            pulses.push(SampledPulse { rise, fall, reverse: p.reverse });
        }
        SampledSchedule { pulses, cursor: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPulse {
    pub rise: u64,
    pub fall: u64,
    pub reverse: bool,
}

/// A schedule on the integrator grid, read with nondecreasing sample indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSchedule {
    pulses: Vec<SampledPulse>,
    cursor: usize,
}

impl SampledSchedule {
    /// Logic levels `(ena, rev)` at sample `n`.
    pub fn levels(&mut self, n: u64) -> (bool, bool) {
        while self.cursor < self.pulses.len() && self.pulses[self.cursor].fall <= n {
            self.cursor += 1;
        }
        match self.pulses.get(self.cursor) {
            Some(p) if p.rise <= n => (true, p.reverse),
            Some(p) if self.cursor == 0 => (false, p.reverse),
            _ => {
                let rev = self
                    .cursor
                    .checked_sub(1)
                    .and_then(|i| self.pulses.get(i))
                    .is_some_and(|p| p.reverse);
                (false, rev)
            }
        }
    }

    /// Whether any pulse starts at or after sample `n`.
    pub fn has_pending(&self, n: u64) -> bool {
        self.pulses.last().is_some_and(|p| p.fall > n)
    }

    pub fn pulses(&self) -> &[SampledPulse] {
        &self.pulses
    }
}

/// `n_steps` evenly spaced step commands at `rate` steps/s starting at
/// `start`, with a 50 % duty cycle.
pub fn step_clock(
    rate: f64,
    n_steps: u64,
    start: f64,
    direction: Direction,
    max_step_rate: f64,
) -> Result<StepSchedule> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Constraint(format!("step rate must be positive, got {rate}")));
    }
    if rate > max_step_rate {
        return Err(Error::Constraint(format!(
            "step rate {rate} steps/s exceeds the motor ceiling of {max_step_rate} steps/s"
        )));
    }
    let period = 1.0 / rate;
    let pulses = (0..n_steps)
        .map(|k| StepPulse {
            t: start + k as f64 / rate,
            width: period / 2.0,
            reverse: direction == Direction::Reverse,
        })
        .collect();
    Ok(StepSchedule { pulses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_decoding() {
        let cfg = DriveConfig::default();
        assert_eq!(decode_direction(0.0, &cfg), Direction::Forward);
        assert_eq!(decode_direction(2.5, &cfg), Direction::Forward);
        assert_eq!(decode_direction(5.0, &cfg), Direction::Reverse);
    }

    #[test]
    fn supply_defaults_to_rated_drop() {
        let cfg = DriveConfig::default();
        assert!((cfg.supply_voltage - 16.12).abs() < 1e-12);
        cfg.validate().unwrap();
        let bad = DriveConfig { enable_threshold: 5.0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_rising_edge() {
        let cfg = DriveConfig::default();
        let s = DriveState::default()
            .on_ena_sample(0.0, Direction::Forward, &cfg)
            .on_ena_sample(5.0, Direction::Forward, &cfg);
        assert_eq!(s.phase_index, 1);
    }

    #[test]
    fn level_held_high_counts_once() {
        let cfg = DriveConfig::default();
        let mut s = DriveState::default();
        for _ in 0..100 {
            s = s.on_ena_sample(5.0, Direction::Forward, &cfg);
        }
        assert_eq!(s.phase_index, 1);
    }

    #[test]
    fn ten_reverse_edges() {
        let cfg = DriveConfig::default();
        let samples: Vec<f64> = (0..10).flat_map(|_| [0.0, 5.0]).collect();
        // Edge-count oracle: the drive starts from a low ENA sample.
        let rising = std::iter::once(&0.0)
            .chain(&samples)
            .zip(&samples)
            .filter(|(a, b)| **a <= 2.5 && **b > 2.5)
            .count() as i64;
        let expected = -rising;
        let mut s = DriveState::default();
        for v in samples {
            s = s.on_ena_sample(v, Direction::Reverse, &cfg);
        }
        assert_eq!(s.phase_index, -10);
        assert_eq!(s.phase_index, expected);
    }

    #[test]
    fn slow_analog_edge_counts_once_at_any_rate() {
        // A 1 ms linear ramp with 5 % ripple, resampled at three rates.
        let cfg = DriveConfig::default();
        let ena = |t: f64| {
            let ramp = (t / 1e-3).clamp(0.0, 1.0) * 5.0;
            ramp + 0.05 * (t * 2e4).sin()
        };
        for samples in [100usize, 1_000, 10_000] {
            let mut s = DriveState::default();
            for n in 0..=samples {
                s = s.on_ena_sample(ena(n as f64 * 2e-3 / samples as f64), Direction::Forward, &cfg);
            }
            assert_eq!(s.phase_index, 1, "{samples} samples");
        }
    }

    #[test]
    fn phase_sequence() {
        let cfg = DriveConfig::default();
        let v = |k| DriveState { phase_index: k, ..Default::default() }.phase_voltages(&cfg);
        assert_eq!(v(0), PhaseVoltages { v_a: 16.12, v_b: 16.12 });
        assert_eq!(v(4), v(0));
        assert_eq!(v(1), PhaseVoltages { v_a: -16.12, v_b: 16.12 });
        let forward: Vec<_> = (0..4).map(v).collect();
        let mut backward: Vec<_> = [0, -1, -2, -3].into_iter().map(v).collect();
        backward[1..].reverse();
        assert_eq!(forward, backward);
        let off = DriveState { energized: false, ..Default::default() };
        assert_eq!(off.phase_voltages(&cfg), PhaseVoltages::default());
    }

    #[test]
    fn clock_edges() {
        let s = step_clock(100.0, 20, 0.0, Direction::Forward, 6000.0).unwrap();
        assert_eq!(s.len(), 20);
        for (k, p) in s.pulses.iter().enumerate() {
            assert!((p.t - k as f64 / 100.0).abs() < 1e-15);
            assert!((p.width - 0.005).abs() < 1e-15);
        }
        assert!(step_clock(100.0, 0, 0.0, Direction::Forward, 6000.0).unwrap().is_empty());
        assert!(matches!(
            step_clock(6001.0, 1, 0.0, Direction::Forward, 6000.0),
            Err(Error::Constraint(_))
        ));
        assert!(step_clock(6000.0, 1, 0.0, Direction::Forward, 6000.0).is_ok());
    }

    #[test]
    fn schedule_csv() {
        let s = step_clock(10.0, 2, 0.0, Direction::Reverse, 6000.0).unwrap();
        assert_eq!(s.to_csv(), "t,ena,rev\n0,1,1\n0.05,0,1\n0.1,1,1\n0.15,0,1\n");
    }

    #[test]
    fn sampled_levels_follow_pulses() {
        let s = step_clock(1000.0, 3, 0.0, Direction::Forward, 6000.0).unwrap();
        let mut sampled = s.sampled(1e-4);
        let highs: Vec<bool> = (0..30).map(|n| sampled.levels(n).0).collect();
        let rising = highs.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(highs[0]);
        assert_eq!(rising, 3);
        assert_eq!(highs.iter().filter(|&&h| h).count(), 15);
    }
}

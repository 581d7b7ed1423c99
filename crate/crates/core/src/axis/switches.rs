use super::config::{AxisConfig, SwitchConfig};

/// State of one switch input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwitchSignal {
    /// The switch is physically tripped.
    pub asserted: bool,
    /// Electrical level on the input after polarity.
    pub level: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwitchReadings {
    pub home: SwitchSignal,
    pub fwd_limit: SwitchSignal,
    pub rev_limit: SwitchSignal,
}

fn signal(cfg: &SwitchConfig, tripped: bool) -> SwitchSignal {
    let asserted = cfg.enabled && tripped;
    SwitchSignal { asserted, level: cfg.active_state.apply(asserted) }
}

/// Reads the home and limit switches at shaft angle `theta` (rad, relative
/// to the axis zero). The home window is closed; limits trip at and beyond
/// their positions. Disabled switches never assert.
pub fn poll_switches(axis: &AxisConfig, theta: f64) -> SwitchReadings {
    let home = &axis.home;
    SwitchReadings {
        home: signal(home, (theta - home.position).abs() <= home.width / 2.0),
        fwd_limit: signal(&axis.fwd_limit, theta >= axis.fwd_limit.position),
        rev_limit: signal(&axis.rev_limit, theta <= axis.rev_limit.position),
    }
}
